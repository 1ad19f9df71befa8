//! Compile real-time task models into networks of parametric stopwatch
//! timed automata, emit them for IMITATOR, and check schedulability on a
//! digitized state space.
//!
//! Pipeline: [`ingest`] → [`model::validate`] → [`translate`] →
//! [`emit`] / [`engine`] / [`sweep`] → [`report`].

use std::collections::BTreeMap;

pub mod casestudy;
pub mod emit;
pub mod engine;
pub mod ingest;
pub mod model;
pub mod pta;
pub mod rational;
pub mod report;
pub mod sweep;
pub mod translate;

pub use rational::{parse_rational, Rational};

/// Parameter name → value.
pub type Valuation = BTreeMap<String, Rational>;
