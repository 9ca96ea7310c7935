//! Semantic-role-labeler transfer from verbal to nominal predicates with a
//! semi-supervised variational autoencoder over shared selectional preferences.

pub mod baselines;
pub mod corpus;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod nn;
pub mod objective;
pub mod trainer;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
