//! Network sampling designs over random graphs with binary node responses:
//! simulation, Bayesian inference from partially observed networks, and
//! design ranking under decision-theoretic and information criteria.

pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod design;
pub mod graph;
pub mod mrf;
pub mod order;
pub mod posterior;
pub mod rng;
pub mod sequential;

pub use error::{Error, Result};
