//! The three reference diagrams.
//!
//! 1. A chain with weights 1, 2, 4, ... (one vertex per level).
//! 2. A binary tree with all weights 1.
//! 3. Two vertices per level, all weights 2, every vertex joined to both
//!    vertices of the next level.

use crate::bratteli::WeightedBratteli;

pub const EXAMPLE1_JSON: &str = include_str!("../data/example1.json");
pub const EXAMPLE2_JSON: &str = include_str!("../data/example2.json");
pub const EXAMPLE3_JSON: &str = include_str!("../data/example3.json");

pub fn example1() -> WeightedBratteli {
    WeightedBratteli::from_json(EXAMPLE1_JSON).expect("bundled example parses")
}

pub fn example2() -> WeightedBratteli {
    WeightedBratteli::from_json(EXAMPLE2_JSON).expect("bundled example parses")
}

pub fn example3() -> WeightedBratteli {
    WeightedBratteli::from_json(EXAMPLE3_JSON).expect("bundled example parses")
}

/// All three, with short names.
pub fn all() -> [(&'static str, WeightedBratteli); 3] {
    [("example1", example1()), ("example2", example2()), ("example3", example3())]
}
