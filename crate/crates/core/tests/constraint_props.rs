use std::collections::{BTreeMap, BTreeSet};

use ltc_core::constraints::{
    dnf_implies, implies_dnf, is_weaker, simplify_dnf, Constraint, Inequality, LinearTerm, Nncc, Rat, Rel, Var,
};
use proptest::prelude::*;

const NAMES: [&str; 3] = ["a", "b", "c"];

fn var(i: usize) -> Var {
    Var::param(NAMES[i])
}

fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

fn rel() -> impl Strategy<Value = Rel> {
    prop_oneof![Just(Rel::Lt), Just(Rel::Le), Just(Rel::Eq), Just(Rel::Ge), Just(Rel::Gt)]
}

fn term() -> impl Strategy<Value = LinearTerm> {
    (prop::collection::vec(-3i64..=3, 3), -6i64..=6).prop_map(|(cs, k)| {
        LinearTerm::from_parts(cs.into_iter().enumerate().map(|(i, c)| (var(i), Rat::from_integer(c.into()))), rat(k, 1))
    })
}

fn inequality() -> impl Strategy<Value = Inequality> {
    (term(), rel()).prop_map(|(t, r)| Inequality::new(t, r))
}

fn nncc() -> impl Strategy<Value = Nncc> {
    prop::collection::vec(prop::collection::vec(inequality(), 1..=3), 1..=3).prop_map(Nncc::from_clauses)
}

/// Points on a half-unit grid in [0, 4]^3.
fn point() -> impl Strategy<Value = Vec<Rat>> {
    prop::collection::vec((0i64..=8).prop_map(|k| rat(k, 2)), 3)
}

fn env(p: &[Rat]) -> impl Fn(&Var) -> Option<Rat> + '_ {
    move |v| NAMES.iter().position(|n| Var::param(n) == *v).map(|i| p[i].clone())
}

fn eval_at(t: &LinearTerm, p: &[Rat]) -> Rat {
    t.eval(&env(p)).expect("bound")
}

/// A constraint satisfied by `p`: each conjunct's constant is shifted so that
/// its relation holds at the point.
fn satisfied_at(p: &[Rat], terms: &[(LinearTerm, Rel, i64)]) -> Constraint {
    Constraint::from_conjuncts(terms.iter().map(|(t, r, slack)| {
        let v = eval_at(t, p);
        let shift = match r {
            Rel::Eq => -v,
            Rel::Lt | Rel::Le => -v - rat(*slack, 2) - if *r == Rel::Lt { rat(1, 4) } else { rat(0, 1) },
            Rel::Ge | Rel::Gt => -v + rat(*slack, 2) + if *r == Rel::Gt { rat(1, 4) } else { rat(0, 1) },
        };
        let mut t = t.clone();
        t.add_constant(&shift);
        Inequality::new(t, *r)
    }))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn elimination_keeps_satisfying_points(
        p in point(),
        spec in prop::collection::vec((term(), rel(), 0i64..3), 1..=4),
        drop in 0usize..3,
    ) {
        let c = satisfied_at(&p, &spec);
        prop_assert_eq!(c.eval(&env(&p)), Some(true));
        let projected = c.eliminate(&BTreeSet::from([var(drop)]));
        prop_assert!(!projected.vars().contains(&var(drop)));
        prop_assert_eq!(projected.eval(&env(&p)), Some(true), "{} projected to {}", c, projected);
    }

    #[test]
    fn elimination_points_extend(
        c in prop::collection::vec(inequality(), 1..=4).prop_map(Constraint::from_conjuncts),
        p in point(),
    ) {
        // a point of the projection onto {b, c} has a nonnegative witness for a
        let projected = c.eliminate(&BTreeSet::from([var(0)]));
        if projected.eval(&env(&p)) == Some(true) {
            let fixed = BTreeMap::from([
                (var(1), LinearTerm::constant(p[1].clone())),
                (var(2), LinearTerm::constant(p[2].clone())),
            ]);
            let rest = Nncc::from_constraint(&c).substitute(&fixed);
            prop_assert!(rest.is_satisfiable(), "{} has no witness at {:?}", c, p);
        }
    }

    #[test]
    fn negation_is_complement(n in nncc(), p in point()) {
        let neg = n.negate();
        prop_assert_ne!(n.eval(&env(&p)), neg.eval(&env(&p)));
        prop_assert_eq!(neg.negate().eval(&env(&p)), n.eval(&env(&p)));
    }

    #[test]
    fn simplified_dnf_is_equivalent(n in nncc(), pts in prop::collection::vec(point(), 5)) {
        let d = simplify_dnf(&n);
        for p in &pts {
            prop_assert_eq!(d.eval(&env(p)), n.eval(&env(p)));
        }
        prop_assert!(implies_dnf(&n, &d));
        prop_assert!(dnf_implies(&d, &n));
    }

    #[test]
    fn weaker_is_a_sound_preorder(x in nncc(), y in nncc(), z in nncc(), pts in prop::collection::vec(point(), 5)) {
        prop_assert!(is_weaker(&x, &x));
        let xy = is_weaker(&x, &y);
        if xy && is_weaker(&y, &z) {
            prop_assert!(is_weaker(&x, &z));
        }
        if xy {
            for p in &pts {
                if x.eval(&env(p)) == Some(true) {
                    prop_assert_eq!(y.eval(&env(p)), Some(true));
                }
            }
        }
        // conjunction strengthens
        prop_assert!(is_weaker(&x.and(&y), &x));
    }
}
