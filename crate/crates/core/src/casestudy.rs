//! The bundled seven-task, three-processor example system and the
//! chronogram scripts that go with it.

use crate::ingest::parse_native_str;
use crate::model::RtModel;

pub const MODEL_JSON: &str = include_str!("../data/casestudy.json");

/// Opening of a run with T1 preempting T5 at 5.
pub const FIG_CHRONOGRAM: &str = include_str!("../data/chronogram.json");
/// Same opening with T5's deadline at 11: T5 is still running past it.
pub const MISS_DEADLINE_11: &str = include_str!("../data/miss-deadline11.json");
/// T1 takes 15 units with period and deadline 20: T5 cannot finish by 20.
pub const MISS_LONG_T1: &str = include_str!("../data/miss-long-t1.json");

pub fn model() -> RtModel {
    parse_native_str(MODEL_JSON, "casestudy.json").expect("bundled case study parses")
}
