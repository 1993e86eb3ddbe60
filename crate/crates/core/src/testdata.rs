//! Corpus presentations shared by unit tests.

pub const WISE: &str = include_str!("../../../corpus/wise.tub");
pub const W2: &str = include_str!("../../../corpus/w2.tub");
pub const W3: &str = include_str!("../../../corpus/w3.tub");
pub const U: &str = include_str!("../../../corpus/u.tub");
pub const FLAT: &str = include_str!("../../../corpus/flat.tub");
pub const RAAG_A: &str = include_str!("../../../corpus/raag_a.tub");
pub const RAAG_B: &str = include_str!("../../../corpus/raag_b.tub");
pub const RAAG_UNBOUNDED: &str = include_str!("../../../corpus/raag_unbounded.tub");
pub const ONE_TORUS: &str = include_str!("../../../corpus/one_torus_3_1.tub");
pub const TWO_TORUS: &str = include_str!("../../../corpus/two_torus_3_1.tub");

pub fn analyze(text: &str) -> crate::psets::TubularGroup {
    crate::psets::TubularGroup::analyze(&crate::model::parse_graph(text).unwrap()).unwrap()
}
