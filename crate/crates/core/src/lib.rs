//! Parametric timing analysis for timed service compositions.
//!
//! A composition is a small process term (invocations, replies, sequencing,
//! parallel flows, conditionals and timed picks) whose component services
//! have unknown response times. This crate builds the symbolic state space
//! of such a term over exact rationals, derives a parameter constraint that
//! guarantees a global deadline, refines it per state for use at run time,
//! and drives a seeded simulation of a monitor that swaps in backup services
//! when the refined constraint can no longer be guaranteed.

pub mod bundled;
pub mod constraints;
pub mod dsl;
pub mod process_model;
pub mod runtime;
pub mod semantics;
pub mod synthesis;
