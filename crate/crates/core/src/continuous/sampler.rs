//! Metropolis for the top level, exact Dixon–Anderson draws below.

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{level_offset, stack_len, ContinuousSpec};
use crate::cumulants::{cumulant_from_moment_table, subset_moments, MAX_VARS};
use crate::numerics::{rng, Rng};
use crate::{contract, Result};

type C = Complex64;

/// Independent chains per batch, one RNG stream each.
pub const CHAINS: usize = 8;
/// Batch-means blocks for standard errors.
pub const BATCHES: usize = 32;

const TARGET_ACCEPT: f64 = 0.35;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub chains: usize,
    pub acceptance_rate: f64,
    /// Final random-walk step after burn-in tuning.
    pub step: f64,
    /// Lag-1 autocorrelation of the top-level mean, averaged over chains.
    pub lag1_autocorrelation: f64,
    /// 1 + 2Σρ with initial-positive-sequence truncation.
    pub integrated_autocorrelation: f64,
}

/// Samples stored stack by stack, each stack listed yᴺ, …, yᵏ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleBatch {
    pub theta: f64,
    pub n: usize,
    pub k: usize,
    pub a_minus: f64,
    pub a_plus: f64,
    pub seed: u64,
    pub count: usize,
    #[serde(skip)]
    pub data: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl SampleBatch {
    pub fn stack_len(&self) -> usize {
        stack_len(self.n, self.k)
    }

    pub fn stack(&self, s: usize) -> &[f64] {
        let w = self.stack_len();
        &self.data[s * w..(s + 1) * w]
    }

    pub fn level(&self, s: usize, j: usize) -> &[f64] {
        let off = level_offset(self.n, j);
        &self.stack(s)[off..off + j]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// 𝒢ʲ(z) for sample s.
    pub fn stieltjes(&self, s: usize, j: usize, z: C) -> C {
        self.level(s, j).iter().map(|&y| (z - y).inv()).sum()
    }

    /// Every stack interlaces strictly inside (a−, a+).
    pub fn check(&self) -> Result<()> {
        for s in 0..self.count {
            let top = self.level(s, self.n);
            if !(top[0] > self.a_minus && top[self.n - 1] < self.a_plus && top.windows(2).all(|w| w[0] < w[1])) {
                return contract(format!("sample {s}: top level not ordered inside (a−, a+)"));
            }
            for j in self.k..self.n {
                let (up, lo) = (self.level(s, j + 1), self.level(s, j));
                if (0..j).any(|i| !(up[i] < lo[i] && lo[i] < up[i + 1])) {
                    return contract(format!("sample {s}: level {j} does not interlace"));
                }
            }
        }
        Ok(())
    }
}

/// Roots of Σ wᵢ/(y − xᵢ) with w ~ Dirichlet(θ, …, θ). They have density
/// ∝ Π(y_b − y_a) Π|yᵢ − x_j|^{θ−1}, the conditional law of the next level.
pub fn dixon_anderson_sample(x: &[f64], theta: f64, r: &mut Rng) -> Vec<f64> {
    let g = Gamma::new(theta, 1.0).expect("θ > 0");
    let w: Vec<f64> = x.iter().map(|_| g.sample(r)).collect();
    (0..x.len() - 1).map(|i| interlaced_root(x, &w, i)).collect()
}

fn interlaced_root(x: &[f64], w: &[f64], i: usize) -> f64 {
    // f decreases from +∞ to −∞ across (xᵢ, xᵢ₊₁).
    let f = |y: f64| -> f64 { x.iter().zip(w).map(|(&xj, &wj)| wj / (y - xj)).sum() };
    let (mut lo, mut hi) = (x[i], x[i + 1]);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Keep strict interlacing when the root is within an ulp of a node.
    let y = 0.5 * (lo + hi);
    y.clamp(x[i].next_up(), x[i + 1].next_down())
}

struct TopChain<'a> {
    spec: &'a ContinuousSpec,
    y: Vec<f64>,
    step: f64,
    proposed: u64,
    accepted: u64,
}

impl<'a> TopChain<'a> {
    fn new(spec: &'a ContinuousSpec) -> Self {
        let n = spec.n;
        let w = spec.a_plus - spec.a_minus;
        let y = (0..n).map(|i| spec.a_minus + w * (i as f64 + 0.5) / n as f64).collect();
        TopChain { spec, y, step: 0.5 * w / n as f64, proposed: 0, accepted: 0 }
    }

    fn site_log(&self, i: usize, x: f64) -> f64 {
        let (t, n) = (self.spec.theta, self.spec.n);
        let mut s = -(n as f64) * t * self.spec.potential.eval_re(x);
        for (j, &yj) in self.y.iter().enumerate() {
            if j != i {
                s += 2.0 * t * (x - yj).abs().ln();
            }
        }
        s
    }

    fn sweep(&mut self, r: &mut Rng) {
        let n = self.spec.n;
        for i in 0..n {
            let z: f64 = r.sample(StandardNormal);
            let prop = self.y[i] + self.step * z;
            let lo = if i == 0 { self.spec.a_minus } else { self.y[i - 1] };
            let hi = if i + 1 == n { self.spec.a_plus } else { self.y[i + 1] };
            self.proposed += 1;
            if !(prop > lo && prop < hi) {
                continue;
            }
            let d = self.site_log(i, prop) - self.site_log(i, self.y[i]);
            if d >= 0.0 || r.gen::<f64>() < d.exp() {
                self.y[i] = prop;
                self.accepted += 1;
            }
        }
    }

    fn burn(&mut self, sweeps: usize, r: &mut Rng) {
        let block = 100;
        for b in 0..sweeps.div_ceil(block) {
            let (p0, a0) = (self.proposed, self.accepted);
            for _ in 0..block.min(sweeps - b * block) {
                self.sweep(r);
            }
            let rate = (self.accepted - a0) as f64 / (self.proposed - p0).max(1) as f64;
            self.step *= (rate / TARGET_ACCEPT).clamp(0.5, 2.0).sqrt();
            self.step = self.step.min(self.spec.a_plus - self.spec.a_minus);
        }
        self.proposed = 0;
        self.accepted = 0;
    }
}

struct ChainOut {
    data: Vec<f64>,
    proposed: u64,
    accepted: u64,
    step: f64,
    means: Vec<f64>,
}

fn run_chain(spec: &ContinuousSpec, count: usize, burn_in: usize, seed: u64, stream: u64) -> ChainOut {
    let mut r = rng(seed, stream);
    let mut chain = TopChain::new(spec);
    chain.burn(burn_in, &mut r);
    let w = spec.stack_len();
    let mut data = Vec::with_capacity(count * w);
    let mut means = Vec::with_capacity(count);
    for _ in 0..count {
        chain.sweep(&mut r);
        let mut level = chain.y.clone();
        means.push(level.iter().sum::<f64>() / level.len() as f64);
        data.extend_from_slice(&level);
        for _ in spec.k..spec.n {
            level = dixon_anderson_sample(&level, spec.theta, &mut r);
            data.extend_from_slice(&level);
        }
    }
    ChainOut { data, proposed: chain.proposed, accepted: chain.accepted, step: chain.step, means }
}

fn autocorrelations(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n < 4 {
        return (0.0, 1.0);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return (0.0, 1.0);
    }
    let rho = |lag: usize| (0..n - lag).map(|i| (x[i] - mean) * (x[i + lag] - mean)).sum::<f64>() / (n as f64 * var);
    let mut tau = 1.0;
    let max_lag = (n / 4).min(2000);
    let mut lag = 1;
    // Geyer's initial positive sequence on pair sums.
    while lag < max_lag {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    (rho(1), tau)
}

/// `n_samples` stacks after `burn_in` sweeps per chain, split over
/// [`CHAINS`] independent streams of `seed`.
pub fn sample(spec: &ContinuousSpec, n_samples: usize, burn_in: usize, seed: u64) -> SampleBatch {
    let per: Vec<usize> = (0..CHAINS).map(|c| n_samples / CHAINS + usize::from(c < n_samples % CHAINS)).collect();
    let outs: Vec<ChainOut> =
        per.par_iter().enumerate().map(|(c, &cnt)| run_chain(spec, cnt, burn_in, seed, c as u64)).collect();
    let proposed: u64 = outs.iter().map(|o| o.proposed).sum();
    let accepted: u64 = outs.iter().map(|o| o.accepted).sum();
    let live: Vec<&ChainOut> = outs.iter().filter(|o| o.means.len() >= 4).collect();
    let (mut rho, mut tau) = (0.0, 1.0);
    if !live.is_empty() {
        let ac: Vec<(f64, f64)> = live.iter().map(|o| autocorrelations(&o.means)).collect();
        rho = ac.iter().map(|a| a.0).sum::<f64>() / ac.len() as f64;
        tau = ac.iter().map(|a| a.1).sum::<f64>() / ac.len() as f64;
    }
    let diagnostics = Diagnostics {
        chains: CHAINS,
        acceptance_rate: accepted as f64 / proposed.max(1) as f64,
        step: outs.iter().map(|o| o.step).sum::<f64>() / CHAINS as f64,
        lag1_autocorrelation: rho,
        integrated_autocorrelation: tau,
    };
    let data = outs.into_iter().flat_map(|o| o.data).collect();
    SampleBatch {
        theta: spec.theta,
        n: spec.n,
        k: spec.k,
        a_minus: spec.a_minus,
        a_plus: spec.a_plus,
        seed,
        count: n_samples,
        data,
        diagnostics,
    }
}

/// A Monte Carlo value with its batch-means standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Estimate {
    pub value: C,
    pub stderr: f64,
}

pub(crate) fn empirical_cumulant(vars: &[&[C]]) -> Result<C> {
    let n = vars[0].len();
    let probs = vec![C::new(1.0 / n as f64, 0.0); n];
    let mom = subset_moments(&probs, vars)?;
    Ok(cumulant_from_moment_table(&mom, (1u32 << vars.len()) - 1))
}

/// Joint cumulant of per-sample values; `vars[0]` is ξ. The standard error
/// comes from [`BATCHES`] contiguous blocks.
pub fn estimate_cumulant(vars: &[Vec<C>]) -> Result<Estimate> {
    if vars.is_empty() || vars.len() > MAX_VARS {
        return contract(format!("need 1..={MAX_VARS} variables"));
    }
    let n = vars[0].len();
    if vars.iter().any(|v| v.len() != n) {
        return contract("all variables need one value per sample");
    }
    if n < 2 * BATCHES {
        return contract(format!("need at least {} samples for batch means", 2 * BATCHES));
    }
    let all: Vec<&[C]> = vars.iter().map(Vec::as_slice).collect();
    let value = empirical_cumulant(&all)?;
    let blocks: Vec<C> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let (lo, hi) = (b * n / BATCHES, (b + 1) * n / BATCHES);
            let part: Vec<&[C]> = vars.iter().map(|v| &v[lo..hi]).collect();
            empirical_cumulant(&part)
        })
        .collect::<Result<_>>()?;
    Ok(Estimate { value, stderr: batch_stderr(&blocks) })
}

pub(crate) fn batch_stderr(blocks: &[C]) -> f64 {
    let b = blocks.len() as f64;
    let mean: C = blocks.iter().sum::<C>() / b;
    let ss: f64 = blocks.iter().map(|x| (x - mean).norm_sqr()).sum();
    (ss / (b * (b - 1.0))).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuous::{ContinuousSpec, Potential};
    use gauss_quad::legendre::GaussLegendre;

    fn spec(theta: f64, n: usize, k: usize) -> ContinuousSpec {
        ContinuousSpec::new(theta, n, k, -2.0, 2.0, Potential::quadratic()).unwrap()
    }

    fn ks_uniform(u: &mut [f64]) -> f64 {
        u.sort_by(f64::total_cmp);
        let n = u.len() as f64;
        u.iter()
            .enumerate()
            .map(|(i, &x)| ((i + 1) as f64 / n - x).abs().max((x - i as f64 / n).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn deterministic_and_valid() {
        let s = spec(0.7, 3, 1);
        let a = sample(&s, 2000, 200, 11);
        let b = sample(&s, 2000, 200, 11);
        assert_eq!(a.data, b.data);
        a.check().unwrap();
        assert_ne!(sample(&s, 2000, 200, 12).data, a.data);
        assert!(a.diagnostics.acceptance_rate > 0.1 && a.diagnostics.acceptance_rate < 0.9);
    }

    #[test]
    fn theta_one_conditional_uniform() {
        let s = spec(1.0, 2, 1);
        let b = sample(&s, 20000, 200, 3);
        let mut u: Vec<f64> = (0..b.len())
            .map(|i| {
                let top = b.level(i, 2);
                (b.level(i, 1)[0] - top[0]) / (top[1] - top[0])
            })
            .collect();
        let d = ks_uniform(&mut u);
        // 3σ on the KS statistic is about 1.63/√n.
        assert!(d < 1.63 / (u.len() as f64).sqrt(), "KS {d}");
    }

    #[test]
    fn beta_conditional_for_half() {
        // Two nodes: the root is Beta(θ, θ) on (x₁, x₂). θ = 1/2 is arcsine.
        let mut r = rng(1, 0);
        let mut u: Vec<f64> = (0..20000)
            .map(|_| {
                let y = dixon_anderson_sample(&[-1.0, 3.0], 0.5, &mut r)[0];
                let t = (y + 1.0) / 4.0;
                2.0 / std::f64::consts::PI * t.sqrt().asin()
            })
            .collect();
        assert!(ks_uniform(&mut u) < 1.63 / (u.len() as f64).sqrt());
    }

    #[test]
    fn single_particle_stieltjes() {
        // N = 1: density ∝ e^{−θV} on (−2, 2).
        let theta = 0.8;
        let s = spec(theta, 1, 1);
        let b = sample(&s, 400_000, 500, 21);
        let z = C::new(4.0, 0.0);
        let vals: Vec<C> = (0..b.len()).map(|i| b.stieltjes(i, 1, z)).collect();
        let est = estimate_cumulant(&[vals]).unwrap();
        let q = GaussLegendre::new(80).unwrap();
        let w = |y: f64| (-theta * 0.5 * y * y).exp();
        let want = q.integrate(-2.0, 2.0, |y| w(y) / (4.0 - y)) / q.integrate(-2.0, 2.0, w);
        assert!((est.value.re - want).abs() < 3.0 * est.stderr.max(1e-12), "{} vs {want} ± {}", est.value, est.stderr);
    }

    #[test]
    fn cumulant_estimates() {
        let s = spec(1.3, 2, 1);
        let b = sample(&s, 20000, 200, 4);
        let x: Vec<C> = (0..b.len()).map(|i| C::new(b.level(i, 2)[1], 0.0)).collect();
        let one = vec![C::new(2.5, 0.0); b.len()];
        let mean = x.iter().sum::<C>() / x.len() as f64;
        assert!((estimate_cumulant(&[x.clone()]).unwrap().value - mean).norm() < 1e-12);
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<C>() / x.len() as f64;
        assert!((estimate_cumulant(&[x.clone(), x.clone()]).unwrap().value - var).norm() < 1e-12 * var.norm());
        let k = estimate_cumulant(&[one, x]).unwrap();
        assert!(k.value.norm() < 1e-12 + k.stderr);
    }

    #[test]
    fn conjugate_symmetry() {
        let b = sample(&spec(0.7, 3, 2), 100, 50, 8);
        let z = C::new(0.3, 1.7);
        for i in 0..b.len() {
            for j in 2..=3 {
                assert_eq!(b.stieltjes(i, j, z.conj()), b.stieltjes(i, j, z).conj());
            }
        }
    }

    #[test]
    fn stationarity_two_seeds() {
        let s = spec(0.7, 2, 1);
        let (a, b) = (sample(&s, 100_000, 500, 31), sample(&s, 100_000, 500, 32));
        let funcs: Vec<Box<dyn Fn(&SampleBatch, usize) -> f64>> = (0..20)
            .map(|m| -> Box<dyn Fn(&SampleBatch, usize) -> f64> {
                let f = m as f64;
                match m % 4 {
                    0 => Box::new(move |b: &SampleBatch, i| {
                        b.level(i, 2).iter().map(|y| (y * (1.0 + f / 10.0)).sin()).sum()
                    }),
                    1 => Box::new(move |b: &SampleBatch, i| b.level(i, 1)[0].powi(1 + (m / 4) as i32)),
                    2 => Box::new(move |b: &SampleBatch, i| (b.level(i, 2)[1] - b.level(i, 1)[0]) * (1.0 + f)),
                    _ => Box::new(move |b: &SampleBatch, i| (-(b.level(i, 2)[0] + f / 20.0).powi(2)).exp()),
                }
            })
            .collect();
        for f in &funcs {
            let ea = estimate_cumulant(&[(0..a.len()).map(|i| C::new(f(&a, i), 0.0)).collect()]).unwrap();
            let eb = estimate_cumulant(&[(0..b.len()).map(|i| C::new(f(&b, i), 0.0)).collect()]).unwrap();
            let comb = (ea.stderr.powi(2) + eb.stderr.powi(2)).sqrt();
            assert!((ea.value - eb.value).norm() < 4.0 * comb, "{} vs {} ± {comb}", ea.value, eb.value);
        }
    }
}
