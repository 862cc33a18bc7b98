pub mod agents;
pub mod attribution;
pub mod env;
pub mod rng;
pub mod harness;
pub mod logio;
