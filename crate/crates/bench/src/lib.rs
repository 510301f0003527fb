//! Fixtures shared by the criterion benches.

use corners_core::{MeasureSpec, WeightFn};

/// Krawtchouk top weight, unit weights below: the family every exact check uses.
pub fn krawtchouk(theta: f64, n: usize, k: usize, m: u32) -> MeasureSpec {
    MeasureSpec::top_weighted(theta, n, k, m, WeightFn::krawtchouk(0.6, theta, n, m)).expect("valid spec")
}
