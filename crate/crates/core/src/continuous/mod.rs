//! Continuous β-corners processes: densities, the Dixon–Anderson
//! integral, sampling and the continuous loop equations.

mod diffuse;
mod io;
mod loop_eq;
mod sampler;

use std::fmt;
use std::sync::Arc;

use gauss_quad::jacobi::GaussJacobi;
use num_complex::Complex64;

use crate::numerics::{lg, Poly};
use crate::{contract, Error, Result};

pub use diffuse::{diffuse_limit_experiment, discrete_to_continuous, DiffuseRow, DiffuseTable};
pub use io::{read_batch, write_batch, MAGIC};
pub use loop_eq::{default_contour, loop_transforms, verify_continuous_loop_equation, ContinuousLoopReport};
pub use sampler::{
    dixon_anderson_sample, estimate_cumulant, sample, Diagnostics, Estimate, SampleBatch, BATCHES, CHAINS,
};

type C = Complex64;

pub type ComplexFn = Arc<dyn Fn(C) -> C + Send + Sync>;

/// The potential V and its derivative, holomorphic near [a−, a+].
#[derive(Clone)]
pub enum Potential {
    Polynomial(Poly),
    /// `margin` is how far past [a−, a+] V is known to be holomorphic.
    Custom {
        v: ComplexFn,
        dv: ComplexFn,
        margin: f64,
    },
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Polynomial(p) => write!(f, "Polynomial({:?})", p.coeffs),
            Potential::Custom { margin, .. } => write!(f, "Custom(margin {margin})"),
        }
    }
}

impl Potential {
    pub fn quadratic() -> Self {
        Potential::Polynomial(Poly::quadratic_half())
    }

    pub fn eval(&self, z: C) -> C {
        match self {
            Potential::Polynomial(p) => p.eval_c(z),
            Potential::Custom { v, .. } => v(z),
        }
    }

    pub fn eval_re(&self, x: f64) -> f64 {
        match self {
            Potential::Polynomial(p) => p.eval(x),
            Potential::Custom { v, .. } => v(C::new(x, 0.0)).re,
        }
    }

    pub fn deriv(&self, z: C) -> C {
        match self {
            Potential::Polynomial(p) => p.derivative().eval_c(z),
            Potential::Custom { dv, .. } => dv(z),
        }
    }

    /// None when V is entire.
    pub fn margin(&self) -> Option<f64> {
        match self {
            Potential::Polynomial(_) => None,
            Potential::Custom { margin, .. } => Some(*margin),
        }
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        match self {
            Potential::Polynomial(p) => Some(p),
            Potential::Custom { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ContinuousSpec {
    pub theta: f64,
    pub n: usize,
    pub k: usize,
    pub a_minus: f64,
    pub a_plus: f64,
    pub potential: Potential,
}

impl ContinuousSpec {
    pub fn new(theta: f64, n: usize, k: usize, a_minus: f64, a_plus: f64, potential: Potential) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return contract(format!("θ must be positive, got {theta}"));
        }
        if !(1 <= k && k <= n) {
            return contract(format!("need 1 ≤ k ≤ N, got k={k}, N={n}"));
        }
        if !(a_minus < a_plus) || !a_minus.is_finite() || !a_plus.is_finite() {
            return contract("need finite a− < a+");
        }
        for m in 0..=16 {
            let x = a_minus + (a_plus - a_minus) * m as f64 / 16.0;
            let v = potential.eval(C::new(x, 0.0));
            if !v.re.is_finite() || v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
                return contract(format!("V must be real on [a−, a+]; V({x}) = {v}"));
            }
        }
        Ok(ContinuousSpec { theta, n, k, a_minus, a_plus, potential })
    }

    /// Particles per sample, Σ_{j=k}^N j.
    pub fn stack_len(&self) -> usize {
        stack_len(self.n, self.k)
    }

    pub fn levels(&self) -> usize {
        self.n + 1 - self.k
    }

    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::new(self.theta, self.n, k, self.a_minus, self.a_plus, self.potential.clone())
    }
}

pub(crate) fn stack_len(n: usize, k: usize) -> usize {
    (k..=n).sum()
}

/// Offset of level j in a flat stack listed N, N−1, …, k.
pub(crate) fn level_offset(n: usize, j: usize) -> usize {
    (j + 1..=n).sum()
}

fn vandermonde_log(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for b in 1..x.len() {
        for a in 0..b {
            s += (x[b] - x[a]).ln();
        }
    }
    s
}

fn increasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] < w[1])
}

/// ln g_{N,k} for a stack yᴺ, …, yᵏ; −∞ off the interlacing set or outside
/// (a−, a+).
pub fn log_density(spec: &ContinuousSpec, y: &[Vec<f64>]) -> Result<f64> {
    let (t, n, k) = (spec.theta, spec.n, spec.k);
    if y.len() != spec.levels() || y.iter().enumerate().any(|(r, l)| l.len() != n - r) {
        return contract("level stack must hold yᴺ, …, yᵏ with j particles on level j");
    }
    let top = &y[0];
    if !increasing(top) || top[0] <= spec.a_minus || top[n - 1] >= spec.a_plus {
        return Ok(f64::NEG_INFINITY);
    }
    for r in 1..y.len() {
        let (up, lo) = (&y[r - 1], &y[r]);
        if (0..lo.len()).any(|i| !(up[i] < lo[i] && lo[i] < up[i + 1])) {
            return Ok(f64::NEG_INFINITY);
        }
    }
    let mut s: f64 = (1..=k).map(|j| j as f64 * lg(t) - lg(j as f64 * t)).sum();
    s += vandermonde_log(top);
    s += (2.0 * t - 1.0) * vandermonde_log(&y[n - k]);
    for j in k..n {
        let (lo, up) = (&y[n - j], &y[n - j - 1]);
        s += (2.0 - 2.0 * t) * vandermonde_log(lo);
        for &a in lo {
            for &b in up {
                s += (t - 1.0) * (a - b).abs().ln();
            }
        }
    }
    s -= n as f64 * t * top.iter().map(|&x| spec.potential.eval_re(x)).sum::<f64>();
    Ok(s)
}

/// Gauss–Jacobi degree per panel in the Dixon–Anderson check.
pub const DA_DEGREE: usize = 48;

/// Relative residual of the Dixon–Anderson identity at nodes x, by tensor
/// Gauss–Jacobi quadrature (exponent θ−1 at both ends of every panel).
pub fn verify_dixon_anderson(x: &[f64], theta: f64) -> Result<f64> {
    let n = x.len();
    if n < 2 || !increasing(x) {
        return contract("need at least two strictly increasing nodes");
    }
    if n > 5 {
        return Err(Error::Unsupported("tensor quadrature is limited to N ≤ 5".into()));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return contract("θ must be positive");
    }
    let lhs = dixon_anderson_lhs(x, theta, DA_DEGREE)?;
    let rhs_log = n as f64 * lg(theta) - lg(n as f64 * theta) + (2.0 * theta - 1.0) * vandermonde_log(x);
    Ok((lhs / rhs_log.exp() - 1.0).abs())
}

pub(crate) fn dixon_anderson_lhs(x: &[f64], theta: f64, degree: usize) -> Result<f64> {
    let n = x.len();
    let rule = GaussJacobi::new(degree, theta - 1.0, theta - 1.0)
        .map_err(|e| Error::Contract(format!("Gauss–Jacobi rule: {e}")))?;
    let pairs = rule.as_node_weight_pairs();
    // Node i on panel (x_i, x_{i+1}): point and weight including the
    // Jacobi scale ((b − a)/2)^{2θ−1}.
    let panels: Vec<Vec<(f64, f64)>> = (0..n - 1)
        .map(|i| {
            let (a, b) = (x[i], x[i + 1]);
            let h = 0.5 * (b - a);
            pairs.iter().map(|&(t, w)| (a + h * (t + 1.0), w * h.powf(2.0 * theta - 1.0))).collect()
        })
        .collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; n - 1];
    let mut y = vec![0.0; n - 1];
    'outer: loop {
        let mut w = 1.0;
        for i in 0..n - 1 {
            let (yi, wi) = panels[i][idx[i]];
            y[i] = yi;
            w *= wi;
        }
        let mut f = vandermonde_log(&y);
        for i in 0..n - 1 {
            for (j, &xj) in x.iter().enumerate() {
                if j != i && j != i + 1 {
                    f += (theta - 1.0) * (y[i] - xj).abs().ln();
                }
            }
        }
        total += w * f.exp();
        for i in 0..n - 1 {
            idx[i] += 1;
            if idx[i] < degree {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    Ok(total)
}
