//! Example models shipped with the crate.

use crate::dsl::{parse_model, DslError};
use crate::process_model::Model;

pub const SMIS: &str = include_str!("../models/smis.svc");
pub const CPS: &str = include_str!("../models/cps.svc");
pub const RS: &str = include_str!("../models/rs.svc");
pub const TBS: &str = include_str!("../models/tbs.svc");
pub const PICK: &str = include_str!("../models/pick.svc");

/// Source text by lowercase name.
pub fn source(name: &str) -> Option<&'static str> {
    match name.to_ascii_lowercase().trim_end_matches(".svc") {
        "smis" => Some(SMIS),
        "cps" => Some(CPS),
        "rs" => Some(RS),
        "tbs" => Some(TBS),
        "pick" => Some(PICK),
        _ => None,
    }
}

pub fn names() -> &'static [&'static str] {
    &["smis", "cps", "rs", "tbs", "pick"]
}

/// Parse a bundled model. Panics only if a shipped file is malformed.
pub fn load(name: &str) -> Option<Model> {
    source(name).map(|s| parse(s).expect("bundled model parses"))
}

fn parse(src: &str) -> Result<Model, DslError> {
    parse_model(src)
}
