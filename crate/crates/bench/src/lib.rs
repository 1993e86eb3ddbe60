//! Fixtures shared by the engine benchmarks.

use tubqi_core::{parse_graph, TubularGroup};

pub const W2: &str = include_str!("../../../corpus/w2.tub");
pub const W3: &str = include_str!("../../../corpus/w3.tub");
pub const ONE_TORUS: &str = include_str!("../../../corpus/one_torus_3_1.tub");
pub const TWO_TORUS: &str = include_str!("../../../corpus/two_torus_3_1.tub");
pub const RAAG_A: &str = include_str!("../../../corpus/raag_a.tub");
pub const RAAG_B: &str = include_str!("../../../corpus/raag_b.tub");

/// Parses and analyzes a corpus document.
pub fn load(text: &str) -> TubularGroup {
    let g = parse_graph(text).expect("corpus file parses");
    TubularGroup::analyze(&g).expect("corpus file is valid")
}
