//! Discrete measures with M = ⌊(a+ − a−)L⌋ and w_N = exp(−NθV(a− + x/L))
//! against the continuous top level, as L grows.

use num_complex::Complex64;
use serde::Serialize;

use super::sampler::{batch_stderr, BATCHES};
use super::{estimate_cumulant, sample, ContinuousSpec};
use crate::mcmc::mcmc_sample;
use crate::measure::{EnumeratedMeasure, MeasureSpec};
use crate::weights::WeightFn;
use crate::{contract, Error, Result};

type C = Complex64;

/// Above this many top-level states the discrete side switches to MCMC.
pub const ENUMERATION_CAP: f64 = 2e6;
const MCMC_STATES: usize = 200_000;

/// X_i^j = a− + ℓ^j_{j−i+1}/L for levels listed N, …, k.
pub fn discrete_to_continuous(levels: &[Vec<u32>], theta: f64, a_minus: f64, l: f64) -> Vec<Vec<f64>> {
    levels
        .iter()
        .map(|lam| {
            let j = lam.len();
            (1..=j)
                .map(|i| {
                    let p = j - i + 1;
                    a_minus + (lam[p - 1] as f64 - p as f64 * theta) / l
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffuseRow {
    pub l: u32,
    pub m: u32,
    /// E of (1/N)ΣXᵢ and (1/N)ΣXᵢ² on the top level.
    pub discrete: [f64; 2],
    pub discrete_stderr: [f64; 2],
    pub error: [f64; 2],
    /// √(discrete² + continuous²) standard errors.
    pub combined: [f64; 2],
    pub enumerated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffuseTable {
    pub theta: f64,
    pub n: usize,
    pub k: usize,
    pub continuous: [f64; 2],
    pub continuous_stderr: [f64; 2],
    pub samples: usize,
    pub rows: Vec<DiffuseRow>,
    pub decreasing: bool,
    pub final_within_3sigma: bool,
}

impl DiffuseTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("L,M,discrete_m1,continuous_m1,error_m1,combined_m1,discrete_m2,continuous_m2,error_m2,combined_m2,enumerated\n");
        for r in &self.rows {
            s += &format!(
                "{},{},{:.12e},{:.12e},{:.6e},{:.6e},{:.12e},{:.12e},{:.6e},{:.6e},{}\n",
                r.l,
                r.m,
                r.discrete[0],
                self.continuous[0],
                r.error[0],
                r.combined[0],
                r.discrete[1],
                self.continuous[1],
                r.error[1],
                r.combined[1],
                r.enumerated
            );
        }
        s
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

fn top_moments(x: &[f64]) -> [f64; 2] {
    let n = x.len() as f64;
    [x.iter().sum::<f64>() / n, x.iter().map(|v| v * v).sum::<f64>() / n]
}

/// Top-level moments of the discrete measure at scale L. By projection the
/// top marginal is the k = N measure, so lower levels are never built.
fn discrete_moments(spec: &ContinuousSpec, l: u32, seed: u64) -> Result<([f64; 2], [f64; 2], u32, bool)> {
    let (t, n) = (spec.theta, spec.n);
    let lf = l as f64;
    let m = ((spec.a_plus - spec.a_minus) * lf).floor() as u32;
    let v = spec.potential.as_poly().ok_or_else(|| Error::Unsupported("diffuse limit needs a polynomial V".into()))?;
    let w = WeightFn::ExpPolynomial(v.compose_affine(spec.a_minus, 1.0 / lf).scale(-(n as f64) * t));
    let ds = MeasureSpec::top_weighted(t, n, n, m, w)?;
    let map = |lam: &[u32]| discrete_to_continuous(&[lam.to_vec()], t, spec.a_minus, lf).remove(0);
    if binomial(m + n as u32, n as u32) <= ENUMERATION_CAP {
        let em = EnumeratedMeasure::new(&ds)?;
        let m1 = em.expect_raw(|p| C::new(top_moments(&map(p))[0], 0.0)).re;
        let m2 = em.expect_raw(|p| C::new(top_moments(&map(p))[1], 0.0)).re;
        return Ok(([m1, m2], [0.0, 0.0], m, true));
    }
    let thin = (m as usize).max(1) * n;
    let chain = mcmc_sample(&ds, MCMC_STATES * thin, 50 * thin * m as usize, seed)?;
    let vals: Vec<[f64; 2]> = chain.step_by(thin).map(|p| top_moments(&map(&p.parts[..n]))).collect();
    let mut out = [[0.0; 2]; 2];
    for q in 0..2 {
        let col: Vec<C> = vals.iter().map(|v| C::new(v[q], 0.0)).collect();
        let blocks: Vec<C> =
            col.chunks(col.len().div_ceil(BATCHES)).map(|b| b.iter().sum::<C>() / b.len() as f64).collect();
        out[0][q] = (col.iter().sum::<C>() / col.len() as f64).re;
        out[1][q] = batch_stderr(&blocks);
    }
    Ok((out[0], out[1], m, false))
}

/// The convergence table for L in `l_values` (increasing), with `samples`
/// continuous draws.
pub fn diffuse_limit_experiment(
    spec: &ContinuousSpec,
    l_values: &[u32],
    samples: usize,
    seed: u64,
) -> Result<DiffuseTable> {
    if l_values.is_empty() || l_values.windows(2).any(|w| w[0] >= w[1]) || l_values[0] == 0 {
        return contract("L values must be positive and strictly increasing");
    }
    let top = spec.with_k(spec.n)?;
    let b = sample(&top, samples, 2000, seed);
    let mut cont = [0.0; 2];
    let mut cont_se = [0.0; 2];
    for q in 0..2 {
        let col: Vec<C> = (0..b.len()).map(|s| C::new(top_moments(b.level(s, spec.n))[q], 0.0)).collect();
        let e = estimate_cumulant(&[col])?;
        cont[q] = e.value.re;
        cont_se[q] = e.stderr;
    }
    let mut rows = Vec::new();
    for (i, &l) in l_values.iter().enumerate() {
        let (d, dse, m, enumerated) = discrete_moments(spec, l, seed.wrapping_add(1 + i as u64))?;
        let error = [(d[0] - cont[0]).abs(), (d[1] - cont[1]).abs()];
        let combined = [dse[0].hypot(cont_se[0]), dse[1].hypot(cont_se[1])];
        rows.push(DiffuseRow { l, m, discrete: d, discrete_stderr: dse, error, combined, enumerated });
    }
    let decreasing = (0..2).all(|q| rows.windows(2).all(|w| w[1].error[q] < w[0].error[q]));
    let last = rows.last().unwrap();
    let final_within_3sigma = (0..2).all(|q| last.error[q] < 3.0 * last.combined[q]);
    Ok(DiffuseTable {
        theta: spec.theta,
        n: spec.n,
        k: spec.k,
        continuous: cont,
        continuous_stderr: cont_se,
        samples,
        rows,
        decreasing,
        final_within_3sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuous::Potential;
    use crate::numerics::Poly;

    #[test]
    fn index_reversal() {
        // ℓ₁ is the largest coordinate; it becomes X_N.
        let x = discrete_to_continuous(&[vec![7, 3, 0], vec![5, 1]], 0.5, -2.0, 2.0);
        assert_eq!(x[0], vec![-2.0 + (0.0 - 1.5) / 2.0, -2.0 + (3.0 - 1.0) / 2.0, -2.0 + (7.0 - 0.5) / 2.0]);
        assert!(x[0].windows(2).all(|w| w[0] < w[1]));
        assert_eq!(x[1].len(), 2);
    }

    #[test]
    fn uniform_riemann_sum() {
        // θ = 1, N = 1, V ≡ 0: discrete uniform on {0..M}/L shifted by −θ/L.
        let spec = ContinuousSpec::new(1.0, 1, 1, 0.0, 1.0, Potential::Polynomial(Poly::new(vec![0.0]))).unwrap();
        let mut prev = f64::INFINITY;
        for l in [4, 8, 16, 32] {
            let (d, _, m, en) = discrete_moments(&spec, l, 0).unwrap();
            assert!(en);
            assert_eq!(m, l);
            let err = (d[0] - 0.5).abs() + (d[1] - 1.0 / 3.0).abs();
            assert!(err < prev && err < 2.0 / l as f64);
            prev = err;
        }
    }

    #[test]
    fn csv_shape() {
        let spec = ContinuousSpec::new(0.7, 2, 1, -2.0, 2.0, Potential::quadratic()).unwrap();
        let t = diffuse_limit_experiment(&spec, &[2, 4], 4000, 1).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("2,8,"));
    }
}
