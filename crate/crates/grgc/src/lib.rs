pub mod cycles;
pub mod graph;
pub mod harness;
pub mod poisson;
pub mod rng;
pub mod stats;
pub mod steinchen;
pub mod weights;
