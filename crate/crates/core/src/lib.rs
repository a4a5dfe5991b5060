#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod autoenc;
pub mod baselines;
pub mod bench;
pub mod config;
pub mod error;
pub mod latentopt;
pub mod matrep;
pub mod netcore;
pub mod optim;
pub mod rng;

pub use error::{Error, Result};
