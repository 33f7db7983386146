pub mod arith;
pub mod bratteli;
pub mod cohomology;
pub mod error;
pub mod examples;
pub mod kgraph;
pub mod ktheory;
pub mod traces;

pub use error::{Error, Result};
