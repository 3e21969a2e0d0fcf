//! Population-dynamics toolkit for recursive distributional equations.

pub mod analysis;
pub mod catalog;
pub mod distance;
pub mod engine;
pub mod error;
pub mod law;
pub mod noise;
pub mod numeric;
pub mod pool;
pub mod rde;
pub mod rng;
pub mod tree;
pub mod value;

pub use catalog::{registry, CatalogEntry, Registry};
pub use engine::{
    apply_t, apply_t2, endogeny_iterate, iterate, EndogenyConfig, IterConfig, StopReason, Verdict,
};
pub use error::{Error, Result};
pub use pool::{SamplePool, Sampler};
pub use rde::Rde;
pub use value::{StateSpace, Value};
