pub mod error;
pub mod expr;
pub mod query;
pub mod rng;
pub mod sampling;
pub mod regression;
pub mod discovery;
pub mod verification;
pub mod bench;
