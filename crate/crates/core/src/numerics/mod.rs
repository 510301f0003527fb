//! Shared numeric primitives.

mod contour;
mod diff;
mod gamma;
mod poly;

pub use contour::{contour_integral, try_contour_integral, ContourSpec, QuadratureResult, DEFAULT_TOL, NODE_CAP};
pub use diff::{mixed_partial, DEFAULT_STEP};
pub(crate) use gamma::lg;
pub use gamma::{log_gamma, log_gamma_ratio};
pub use poly::Poly;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The crate-wide generator. Streams split one seed into independent
/// sequences, one per chain.
pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64, stream: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
