//! The discrete multi-level measure: weights, partition function, exact
//! expectations and projections.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::log_gamma;
use crate::state_space::{is_valid_stack, CornersPattern, RawPatterns, Shape};
use crate::weights::WeightFn;
use crate::{contract, Error, Result};

/// Refuse to normalize when |Z| < this · Σ|w|.
pub const CANCELLATION_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct MeasureSpec {
    pub theta: f64,
    pub n: usize,
    pub k: usize,
    pub m: u32,
    /// w_k, …, w_N.
    pub weights: Vec<WeightFn>,
}

impl MeasureSpec {
    pub fn new(theta: f64, n: usize, k: usize, m: u32, weights: Vec<WeightFn>) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return contract(format!("θ must be positive, got {theta}"));
        }
        Shape::new(n, k)?;
        if weights.len() != n - k + 1 {
            return contract(format!("need {} weight functions (levels k..N), got {}", n - k + 1, weights.len()));
        }
        Ok(MeasureSpec { theta, n, k, m, weights })
    }

    /// Only the top level is weighted; w_j ≡ 1 below.
    pub fn top_weighted(theta: f64, n: usize, k: usize, m: u32, top: WeightFn) -> Result<Self> {
        let mut w = vec![WeightFn::Unit; n - k];
        w.push(top);
        Self::new(theta, n, k, m, w)
    }

    pub fn shape(&self) -> Shape {
        Shape { n: self.n, k: self.k }
    }

    pub fn weight(&self, j: usize) -> &WeightFn {
        &self.weights[j - self.k]
    }

    /// ln w_j at the lattice site (λ, i).
    #[inline]
    pub fn log_w(&self, j: usize, lam: u32, i: usize) -> Result<Complex64> {
        self.weight(j).log_at(lam, i, self.theta)
    }

    /// Same spec restricted to levels ≥ k'.
    pub fn with_bottom(&self, k: usize) -> Result<Self> {
        if k < self.k || k > self.n {
            return contract("new bottom level must lie in [k, N]");
        }
        Self::new(self.theta, self.n, k, self.m, self.weights[k - self.k..].to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogWeight {
    pub log_modulus: f64,
    pub phase: Complex64,
}

impl LogWeight {
    pub fn from_log(l: Complex64) -> Self {
        LogWeight { log_modulus: l.re, phase: Complex64::from_polar(1.0, l.im) }
    }

    pub fn value(&self) -> Complex64 {
        self.phase * self.log_modulus.exp()
    }
}

/// Unnormalized log-weight as a complex logarithm.
pub fn log_weight_parts(spec: &MeasureSpec, parts: &[u32]) -> Result<Complex64> {
    let shape = spec.shape();
    let th = spec.theta;
    let lam = |j: usize, i: usize| parts[shape.offset(j) + i - 1] as f64;
    // ℓᵢᵃ − ℓⱼᵇ computed from integers to keep the θ multiples exact.
    let d = |ja: usize, pa: usize, jb: usize, pb: usize| lam(ja, pa) - lam(jb, pb) + (pb as f64 - pa as f64) * th;
    let mut s = 0.0;
    let n = spec.n;
    for p in 1..=n {
        for q in p + 1..=n {
            let x = d(n, p, n, q);
            s += log_gamma(x + 1.0)? - log_gamma(x + 1.0 - th)?;
        }
    }
    let k = spec.k;
    for p in 1..=k {
        for q in p + 1..=k {
            let x = d(k, p, k, q);
            s += log_gamma(x + th)? - log_gamma(x)?;
        }
    }
    for j in k..n {
        let u = j + 1;
        for p in 1..=u {
            for q in p + 1..=u {
                let x = d(u, p, u, q);
                s += log_gamma(x + 1.0 - th)? - log_gamma(x)?;
            }
        }
        for p in 1..=j {
            for q in p + 1..=j {
                let x = d(j, p, j, q);
                s += log_gamma(x + 1.0)? - log_gamma(x + th)?;
            }
        }
        for p in 1..=j {
            for q in p + 1..=u {
                let x = d(j, p, u, q);
                s += log_gamma(x)? - log_gamma(x + 1.0 - th)?;
            }
            for q in p..=j {
                let x = d(u, p, j, q);
                s += log_gamma(x + th)? - log_gamma(x + 1.0)?;
            }
        }
    }
    let mut out = Complex64::new(s, 0.0);
    for j in k..=n {
        let o = shape.offset(j);
        for i in 1..=j {
            out += spec.log_w(j, parts[o + i - 1], i)?;
        }
    }
    Ok(out)
}

pub fn log_weight(spec: &MeasureSpec, p: &CornersPattern) -> Result<LogWeight> {
    if p.shape != spec.shape() || p.m != spec.m {
        return contract("pattern dimensions do not match the measure");
    }
    Ok(LogWeight::from_log(log_weight_parts(spec, &p.parts)?))
}

/// The whole state space with normalized probabilities, in enumeration order.
#[derive(Clone, Debug)]
pub struct EnumeratedMeasure {
    pub spec: MeasureSpec,
    stride: usize,
    parts: Vec<u32>,
    prob: Vec<Complex64>,
    /// ln Z (complex log).
    pub log_z: Complex64,
    /// Σ|w| / |Z|; 1 for positive measures.
    pub condition: f64,
}

impl EnumeratedMeasure {
    pub fn new(spec: &MeasureSpec) -> Result<Self> {
        let shape = spec.shape();
        let stride = shape.len();
        let mut raw = RawPatterns::new(shape, spec.m);
        let mut parts = Vec::new();
        while let Some(p) = raw.next_raw() {
            parts.extend_from_slice(p);
        }
        let logs: Vec<Complex64> =
            parts.par_chunks(stride).map(|p| log_weight_parts(spec, p)).collect::<Result<_>>()?;
        let shift = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        let mut z = Complex64::new(0.0, 0.0);
        let mut mass = 0.0;
        let w: Vec<Complex64> = logs
            .iter()
            .map(|l| {
                let v = (l - shift).exp();
                z += v;
                mass += v.norm();
                v
            })
            .collect();
        if z.norm() < CANCELLATION_THRESHOLD * mass {
            return Err(Error::NearZeroPartition { modulus: z.norm(), scale: mass });
        }
        let prob = w.into_iter().map(|v| v / z).collect();
        Ok(EnumeratedMeasure {
            spec: spec.clone(),
            stride,
            parts,
            prob,
            log_z: z.ln() + shift,
            condition: mass / z.norm(),
        })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn shape(&self) -> Shape {
        self.spec.shape()
    }

    pub fn parts(&self, idx: usize) -> &[u32] {
        &self.parts[idx * self.stride..(idx + 1) * self.stride]
    }

    pub fn prob(&self, idx: usize) -> Complex64 {
        self.prob[idx]
    }

    pub fn probabilities(&self) -> &[Complex64] {
        &self.prob
    }

    pub fn pattern(&self, idx: usize) -> CornersPattern {
        CornersPattern::from_parts(self.spec.theta, self.shape(), self.spec.m, self.parts(idx).to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], Complex64)> + '_ {
        self.parts.chunks(self.stride).zip(self.prob.iter().copied())
    }

    /// Index of a pattern, by binary search on the lexicographic order.
    pub fn index_of(&self, parts: &[u32]) -> Option<usize> {
        if parts.len() != self.stride || !is_valid_stack(self.shape(), self.spec.m, parts) {
            return None;
        }
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.parts(mid).cmp(parts) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn prob_of(&self, parts: &[u32]) -> Complex64 {
        self.index_of(parts).map_or(Complex64::new(0.0, 0.0), |i| self.prob[i])
    }

    /// Σ P(p)·f(p) over raw parts, summed in enumeration order.
    pub fn expect_raw<F>(&self, f: F) -> Complex64
    where
        F: Fn(&[u32]) -> Complex64 + Sync,
    {
        let terms: Vec<Complex64> =
            self.parts.par_chunks(self.stride).zip(self.prob.par_iter()).map(|(p, &w)| w * f(p)).collect();
        terms.into_iter().sum()
    }

    pub fn expectation<F>(&self, f: F) -> Complex64
    where
        F: Fn(&CornersPattern) -> Complex64 + Sync,
    {
        let (theta, shape, m) = (self.spec.theta, self.shape(), self.spec.m);
        self.expect_raw(|p| f(&CornersPattern::from_parts(theta, shape, m, p.to_vec())))
    }

    /// Law of the levels N..m, keyed by their concatenation.
    pub fn marginal(&self, m: usize) -> Result<BTreeMap<Vec<u32>, Complex64>> {
        let shape = self.shape();
        if m < shape.k || m > shape.n {
            return contract("marginal level must lie in [k, N]");
        }
        let cut = shape.offset(m) + m;
        let mut out = BTreeMap::new();
        // Lexicographic order keeps equal prefixes contiguous.
        let mut cur: Option<(&[u32], Complex64)> = None;
        for (p, w) in self.iter() {
            let key = &p[..cut];
            match cur {
                Some((k, ref mut acc)) if k == key => *acc += w,
                _ => {
                    if let Some((k, acc)) = cur {
                        out.insert(k.to_vec(), acc);
                    }
                    cur = Some((key, w));
                }
            }
        }
        if let Some((k, acc)) = cur {
            out.insert(k.to_vec(), acc);
        }
        Ok(out)
    }
}

pub fn partition_function(spec: &MeasureSpec) -> Result<Complex64> {
    Ok(EnumeratedMeasure::new(spec)?.log_z.exp())
}

pub fn expectation<F>(spec: &MeasureSpec, observable: F) -> Result<Complex64>
where
    F: Fn(&CornersPattern) -> Complex64 + Sync,
{
    Ok(EnumeratedMeasure::new(spec)?.expectation(observable))
}

/// Distribution of (ℓᴺ, …, ℓᵐ) obtained by summing out the levels below m.
/// It matches the measure on levels N..m alone only when w_j ≡ 1 for j < m.
/// The table is exact either way.
pub fn marginal_measure(spec: &MeasureSpec, m: usize) -> Result<BTreeMap<Vec<u32>, Complex64>> {
    EnumeratedMeasure::new(spec)?.marginal(m)
}

pub fn total_variation(a: &BTreeMap<Vec<u32>, Complex64>, b: &BTreeMap<Vec<u32>, Complex64>) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    let mut s = 0.0;
    for (k, v) in a {
        s += (v - b.get(k).copied().unwrap_or(zero)).norm();
    }
    for (k, v) in b {
        if !a.contains_key(k) {
            s += v.norm();
        }
    }
    0.5 * s
}
