//! Benchmarks live in `benches/`; this crate only hosts shared fixtures.

use std::path::Path;

use maxload_core::formats::recurrence_from_json;
use maxload_core::{a_sequence, ProblemSpec, RationalSequence, RecurrenceOperator};

pub fn exact_prefix(n: u32, r: u32, terms: u64) -> RationalSequence {
    let spec = ProblemSpec::new(n, r).expect("valid spec");
    a_sequence(spec, terms).expect("within ceiling")
}

/// A stored recurrence from the core crate's test fixtures.
pub fn fixture(n: u32, r: u32) -> RecurrenceOperator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../core/tests/fixtures/rec_{n}_{r}.json"));
    let text = std::fs::read_to_string(path).expect("fixture present");
    recurrence_from_json(&text).expect("fixture parses")
}
