//! Exact and Monte Carlo verification of discrete and continuous
//! β-corners processes and their multi-level loop equations.

mod error;

pub mod analytic;
pub mod continuous;
pub mod cumulants;
pub mod jack;
pub mod mcmc;
pub mod measure;
pub mod nekrasov;
pub mod numerics;
pub mod ratios;
pub mod state_space;
pub mod weights;

pub(crate) use error::contract;
pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use analytic::AnalyticFn;
pub use measure::{EnumeratedMeasure, LogWeight, MeasureSpec};
pub use numerics::{ContourSpec, QuadratureResult};
pub use state_space::{CornersPattern, Shape, Signature};
pub use weights::WeightFn;
