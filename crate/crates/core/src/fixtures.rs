//! Instances shipped with the crate.

use crate::instance::{shift_nonneg, MslpInstance, Support};
use crate::io::parse_str;

pub const DESK3_TEXT: &str = include_str!("../fixtures/desk3.mslp");

/// The `desk3` file as written (stage-0 costs may be negative).
pub fn desk3_raw() -> MslpInstance {
    parse_str("desk3.mslp", DESK3_TEXT).expect("bundled fixture parses")
}

/// `desk3` with stage costs shifted nonnegative.
pub fn desk3() -> MslpInstance {
    shift_nonneg(&desk3_raw()).expect("bundled fixture is bounded").0
}

/// `desk3` with each support collapsed to its observation `pick[t-1]`.
pub fn desk3_deterministic(pick: &[usize]) -> MslpInstance {
    let mut inst = desk3();
    for t in 1..inst.support.len() {
        let o = inst.support[t].observations[pick[t - 1]].clone();
        inst.support[t] = Support {
            observations: vec![o],
            probabilities: vec![1.0],
        };
    }
    inst.name = "desk3-deterministic".into();
    inst
}
