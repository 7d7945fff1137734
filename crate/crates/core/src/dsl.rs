//! Text format for models.
//!
//! ```text
//! model SMIS;
//! deadline 3;
//! param t_DS, t_FS;
//! var b: bool;
//! svc User;
//! svc DS uses t_DS;
//! svc FS uses t_FS;
//! init t_DS <= 10;
//! process {
//!   sinv(DS);
//!   if b { reply(User) } else { ainv(FS); pick { onmsg FS => reply(User) onalarm 1 => reply(User) bad } }
//! }
//! ```
//!
//! Blocks are `;`-separated sequences, `flow { A | B }` runs branches in
//! parallel, `if` without `else` defaults to `stop`. Comments start with `//`
//! or `#`.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::constraints::{fmt_rat, parse_constraint, parse_rat, Constraint, Rat};
use crate::process_model::{Activity, Atomic, AtomicKind, Domain, Model, Pick, Service, ServiceRef, Value, VarDecl};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct DslError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    /// Unlexed constraint text following `init`, up to the next `;`.
    Raw(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Num(s) | Tok::Raw(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const SYMBOLS: &[&str] = &["=>", "..", ";", ",", ":", "=", "{", "}", "(", ")", "|", "@", "[", "]", "-"];

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>, DslError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        'outer: while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' || src[i..].starts_with("//") {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                lx.toks.push((Tok::Ident(src[start..i].to_string()), start));
                if &src[start..i] == "init" {
                    let from = i;
                    while i < bytes.len() && bytes[i] != b';' {
                        i += 1;
                    }
                    lx.toks.push((Tok::Raw(src[from..i].to_string()), from));
                }
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                // a lone `.` followed by a digit is a decimal point, `..` is a range
                if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i + 1 < bytes.len() && bytes[i] == b'/' && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                lx.toks.push((Tok::Num(src[start..i].to_string()), start));
                continue;
            }
            for s in SYMBOLS {
                if src[i..].starts_with(s) {
                    lx.toks.push((Tok::Sym(s), i));
                    i += s.len();
                    continue 'outer;
                }
            }
            return Err(lx.error_at(i, format!("unexpected character `{c}`")));
        }
        lx.toks.push((Tok::Eof, src.len()));
        Ok(lx.toks)
    }

    fn error_at(&self, offset: usize, message: String) -> DslError {
        error_at(self.src, offset, message)
    }
}

fn error_at(src: &str, offset: usize, message: String) -> DslError {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    DslError { line, col, message }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    model: Model,
    next_cond: u32,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, DslError> {
        Err(error_at(self.src, self.offset(), message.into()))
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, DslError> {
        self.err(format!("expected {wanted}, found {}", self.peek()))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), DslError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn ident(&mut self) -> Result<String, DslError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn number(&mut self) -> Result<Rat, DslError> {
        match self.peek().clone() {
            Tok::Num(s) => match parse_rat(&s) {
                Some(r) => {
                    self.bump();
                    Ok(r)
                }
                None => self.err(format!("malformed number `{s}`")),
            },
            _ => self.unexpected("a number"),
        }
    }

    fn integer(&mut self) -> Result<i64, DslError> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Num(s) => match s.parse::<i64>() {
                Ok(v) => {
                    self.bump();
                    Ok(if neg { -v } else { v })
                }
                Err(_) => self.err(format!("expected an integer, found `{s}`")),
            },
            _ => self.unexpected("an integer"),
        }
    }

    fn header(&mut self) -> Result<(), DslError> {
        let mut have_process = false;
        let mut have_deadline = false;
        while *self.peek() != Tok::Eof {
            let kw = self.ident()?;
            match kw.as_str() {
                "model" => {
                    self.model.name = self.ident()?;
                    self.expect_sym(";")?;
                }
                "deadline" => {
                    self.model.deadline = self.number()?;
                    have_deadline = true;
                    self.expect_sym(";")?;
                }
                "param" => {
                    loop {
                        let at = self.offset();
                        let p = self.ident()?;
                        if self.model.params.contains(&p) {
                            return Err(error_at(self.src, at, format!("duplicate parameter `{p}`")));
                        }
                        self.model.params.push(p);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(";")?;
                }
                "var" => {
                    let name = self.ident()?;
                    self.expect_sym(":")?;
                    let domain = match self.ident()?.as_str() {
                        "bool" => Domain::Bool,
                        "int" => {
                            self.expect_sym("[")?;
                            let lo = self.integer()?;
                            self.expect_sym("..")?;
                            let hi = self.integer()?;
                            self.expect_sym("]")?;
                            Domain::Int { lo, hi }
                        }
                        other => return self.err(format!("unknown domain `{other}`")),
                    };
                    let init = if self.eat_sym("=") { Some(self.value()?) } else { None };
                    self.expect_sym(";")?;
                    self.model.vars.push(VarDecl { name, domain, init });
                }
                "svc" => {
                    let at = self.offset();
                    let name = self.ident()?;
                    if self.model.service(&name).is_some() {
                        return Err(error_at(self.src, at, format!("duplicate service `{name}`")));
                    }
                    let param = if self.is_kw("uses") {
                        self.bump();
                        let at = self.offset();
                        let p = self.ident()?;
                        if !self.model.params.contains(&p) {
                            return Err(error_at(self.src, at, format!("undeclared parameter `{p}`")));
                        }
                        Some(p)
                    } else {
                        None
                    };
                    self.expect_sym(";")?;
                    self.model.services.push(Service { name, param });
                }
                "init" => {
                    let start = self.offset();
                    let text = match self.bump() {
                        Tok::Raw(t) => t,
                        _ => return self.unexpected("a constraint"),
                    };
                    self.expect_sym(";")?;
                    let c = parse_constraint(&text)
                        .map_err(|e| error_at(self.src, start + e.offset, e.message.clone()))?;
                    self.model.init = self.model.init.and(&c);
                }
                "process" => {
                    self.expect_sym("{")?;
                    self.model.process = self.sequence()?;
                    self.expect_sym("}")?;
                    have_process = true;
                }
                other => return self.err_prev(format!("unknown declaration `{other}`")),
            }
        }
        if !have_deadline {
            return self.err("missing `deadline`");
        }
        if !have_process {
            return self.err("missing `process`");
        }
        Ok(())
    }

    fn err_prev<T>(&self, message: String) -> Result<T, DslError> {
        let at = self.toks[self.pos.saturating_sub(1)].1;
        Err(error_at(self.src, at, message))
    }

    fn value(&mut self) -> Result<Value, DslError> {
        if self.is_kw("true") {
            self.bump();
            return Ok(Value::Bool(true));
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(Value::Bool(false));
        }
        Ok(Value::Int(self.integer()?))
    }

    /// `;`-separated items up to a closing `}` or `|`.
    fn sequence(&mut self) -> Result<Activity, DslError> {
        let mut items = Vec::new();
        while !self.is_sym("}") && !self.is_sym("|") {
            items.push(self.activity()?);
            if !self.eat_sym(";") {
                break;
            }
        }
        Ok(Activity::seq_all(items))
    }

    fn body(&mut self) -> Result<Activity, DslError> {
        if self.eat_sym("{") {
            let a = self.sequence()?;
            self.expect_sym("}")?;
            Ok(a)
        } else {
            self.activity()
        }
    }

    fn service(&mut self) -> Result<ServiceRef, DslError> {
        let at = self.offset();
        let name = self.ident()?;
        self.model
            .service_ref(&name)
            .ok_or_else(|| error_at(self.src, at, format!("undeclared service `{name}`")))
    }

    fn clock(&mut self) -> Result<Option<u32>, DslError> {
        if !self.eat_sym("@") {
            return Ok(None);
        }
        let at = self.offset();
        let name = self.ident()?;
        match name.strip_prefix('x').and_then(|n| n.parse().ok()) {
            Some(id) => Ok(Some(id)),
            None => Err(error_at(self.src, at, format!("`{name}` is not a clock"))),
        }
    }

    fn activity(&mut self) -> Result<Activity, DslError> {
        if self.is_sym("{") {
            return self.body();
        }
        let at = self.offset();
        let kw = self.ident()?;
        let kind = match kw.as_str() {
            "receive" => Some(AtomicKind::Receive),
            "reply" => Some(AtomicKind::Reply),
            "sinv" => Some(AtomicKind::SyncInvoke),
            "ainv" => Some(AtomicKind::AsyncInvoke),
            _ => None,
        };
        if let Some(kind) = kind {
            self.expect_sym("(")?;
            let service = self.service()?;
            self.expect_sym(")")?;
            let clock = self.clock()?;
            let bad = if self.is_kw("bad") {
                self.bump();
                true
            } else {
                false
            };
            return Ok(Activity::Atomic(Atomic { kind, service, bad, clock }));
        }
        match kw.as_str() {
            "stop" => Ok(Activity::Stop),
            "assign" => {
                let at = self.offset();
                let var = self.ident()?;
                if self.model.var(&var).is_none() {
                    return Err(error_at(self.src, at, format!("undeclared variable `{var}`")));
                }
                self.expect_sym("=")?;
                let value = self.value()?;
                Ok(Activity::Assign { var, value })
            }
            "if" => {
                let id = self.next_cond;
                self.next_cond += 1;
                let at = self.offset();
                let guard = self.ident()?;
                if self.model.var(&guard).is_none() {
                    return Err(error_at(self.src, at, format!("undeclared variable `{guard}`")));
                }
                self.expect_sym("{")?;
                let then_branch = self.sequence()?;
                self.expect_sym("}")?;
                let else_branch = if self.is_kw("else") {
                    self.bump();
                    if self.is_kw("if") {
                        self.activity()?
                    } else {
                        self.expect_sym("{")?;
                        let e = self.sequence()?;
                        self.expect_sym("}")?;
                        e
                    }
                } else {
                    Activity::Stop
                };
                Ok(Activity::cond(id, then_branch, &guard, else_branch))
            }
            "flow" => {
                self.expect_sym("{")?;
                let mut branches = vec![self.sequence()?];
                while self.eat_sym("|") {
                    branches.push(self.sequence()?);
                }
                self.expect_sym("}")?;
                Ok(Activity::flow_all(branches))
            }
            "pick" => {
                let clock = self.clock()?;
                self.expect_sym("{")?;
                let mut on_message = Vec::new();
                let mut on_alarm = Vec::new();
                loop {
                    if self.is_kw("onmsg") {
                        self.bump();
                        let s = self.service()?;
                        self.expect_sym("=>")?;
                        on_message.push((s, self.body()?));
                    } else if self.is_kw("onalarm") {
                        self.bump();
                        let d = self.number()?;
                        self.expect_sym("=>")?;
                        on_alarm.push((d, self.body()?));
                    } else {
                        break;
                    }
                }
                if on_message.is_empty() && on_alarm.is_empty() {
                    return self.err("pick needs at least one `onmsg` or `onalarm` branch");
                }
                self.expect_sym("}")?;
                Ok(Activity::Pick(Pick { on_message, on_alarm, clock }))
            }
            other => Err(error_at(self.src, at, format!("unknown activity `{other}`"))),
        }
    }
}

/// Parse and validate a model.
pub fn parse_model(src: &str) -> Result<Model, DslError> {
    let toks = Lexer::run(src)?;
    let mut p = Parser {
        src,
        toks,
        pos: 0,
        model: Model {
            name: "model".into(),
            deadline: Rat::from_integer(0.into()),
            params: vec![],
            vars: vec![],
            services: vec![],
            init: Constraint::top(),
            process: Activity::Stop,
        },
        next_cond: 0,
    };
    p.header()?;
    p.model.validate().map_err(|e| DslError { line: 0, col: 0, message: e.to_string() })?;
    Ok(p.model)
}

/// Parse a bare process term against the declarations of `decls`.
/// Clock annotations (`@x0`) are accepted.
pub fn parse_activity(decls: &Model, src: &str) -> Result<Activity, DslError> {
    let toks = Lexer::run(src)?;
    let mut p = Parser { src, toks, pos: 0, model: decls.clone(), next_cond: 0 };
    let a = p.sequence()?;
    if *p.peek() != Tok::Eof {
        return p.unexpected("end of input");
    }
    Ok(a)
}

fn write_value(out: &mut String, v: &Value) {
    let _ = write!(out, "{v}");
}

/// Single-line rendering. With `clocks`, clock annotations are included.
pub fn print_activity(a: &Activity, clocks: bool) -> String {
    let mut out = String::new();
    emit(&mut out, a, clocks, None);
    out
}

fn clock_suffix(out: &mut String, clock: Option<u32>, show: bool) {
    if let (true, Some(c)) = (show, clock) {
        let _ = write!(out, "@x{c}");
    }
}

fn newline(out: &mut String, indent: Option<usize>) {
    if let Some(n) = indent {
        out.push('\n');
        out.push_str(&"  ".repeat(n));
    } else {
        out.push(' ');
    }
}

fn emit_block(out: &mut String, a: &Activity, clocks: bool, indent: Option<usize>) {
    out.push('{');
    emit_seq(out, a, clocks, indent.map(|n| n + 1));
    newline(out, indent);
    out.push('}');
}

fn emit_seq(out: &mut String, a: &Activity, clocks: bool, indent: Option<usize>) {
    let mut cur = a;
    loop {
        newline(out, indent);
        match cur {
            Activity::Seq(x, rest) => {
                emit(out, x, clocks, indent);
                out.push(';');
                cur = rest;
            }
            other => {
                emit(out, other, clocks, indent);
                break;
            }
        }
    }
}

fn emit(out: &mut String, a: &Activity, clocks: bool, indent: Option<usize>) {
    match a {
        Activity::Atomic(at) => {
            let _ = write!(out, "{}({})", at.kind.keyword(), at.service.name);
            clock_suffix(out, at.clock, clocks);
            if at.bad {
                out.push_str(" bad");
            }
        }
        Activity::Stop => out.push_str("stop"),
        Activity::Assign { var, value } => {
            let _ = write!(out, "assign {var} = ");
            write_value(out, value);
        }
        Activity::Seq(..) => emit_block(out, a, clocks, indent),
        Activity::Flow(..) => {
            out.push_str("flow {");
            let inner = indent.map(|n| n + 1);
            let mut cur = a;
            let mut first = true;
            loop {
                let (branch, rest) = match cur {
                    Activity::Flow(x, rest) => (x.as_ref(), Some(rest.as_ref())),
                    other => (other, None),
                };
                if !first {
                    newline(out, indent);
                    out.push('|');
                }
                first = false;
                // a nested flow as a direct branch would be flattened on re-parse
                if matches!(branch, Activity::Flow(..)) {
                    newline(out, inner);
                    emit_block(out, branch, clocks, inner);
                } else {
                    emit_seq(out, branch, clocks, inner);
                }
                match rest {
                    Some(r) => cur = r,
                    None => break,
                }
            }
            newline(out, indent);
            out.push('}');
        }
        Activity::Cond(c) => {
            let _ = write!(out, "if {} ", c.guard);
            emit_block(out, &c.then_branch, clocks, indent);
            if !c.else_branch.is_stop() {
                out.push_str(" else ");
                emit_block(out, &c.else_branch, clocks, indent);
            }
        }
        Activity::Pick(p) => {
            out.push_str("pick");
            clock_suffix(out, p.clock, clocks);
            out.push_str(" {");
            let inner = indent.map(|n| n + 1);
            for (s, body) in &p.on_message {
                newline(out, inner);
                let _ = write!(out, "onmsg {} => ", s.name);
                emit_block(out, body, clocks, inner);
            }
            for (d, body) in &p.on_alarm {
                newline(out, inner);
                let _ = write!(out, "onalarm {} => ", fmt_rat(d));
                emit_block(out, body, clocks, inner);
            }
            newline(out, indent);
            out.push('}');
        }
    }
}

/// Multi-line rendering that [`parse_model`] reads back to an equal model.
/// Conditional ids are renumbered in source order on re-parse.
pub fn print_model(m: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {};", m.name);
    let _ = writeln!(out, "deadline {};", fmt_rat(&m.deadline));
    if !m.params.is_empty() {
        let _ = writeln!(out, "param {};", m.params.join(", "));
    }
    for v in &m.vars {
        let _ = write!(out, "var {}: ", v.name);
        match v.domain {
            Domain::Bool => out.push_str("bool"),
            Domain::Int { lo, hi } => {
                let _ = write!(out, "int[{lo}..{hi}]");
            }
        }
        if let Some(init) = &v.init {
            out.push_str(" = ");
            write_value(&mut out, init);
        }
        out.push_str(";\n");
    }
    for s in &m.services {
        match &s.param {
            Some(p) => {
                let _ = writeln!(out, "svc {} uses {};", s.name, p);
            }
            None => {
                let _ = writeln!(out, "svc {};", s.name);
            }
        }
    }
    if !m.init.is_top() {
        let _ = writeln!(out, "init {};", m.init);
    }
    out.push_str("process {");
    emit_seq(&mut out, &m.process, false, Some(1));
    out.push_str("\n}\n");
    out
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_activity(self, true))
    }
}
