//! Single-site Metropolis chain on the discrete state space.

use rand::Rng as _;

use crate::measure::MeasureSpec;
use crate::numerics::{rng, Rng};
use crate::ratios::single_site_ratio;
use crate::state_space::CornersPattern;
use crate::{contract, Error, Result};

pub struct McmcChain {
    spec: MeasureSpec,
    state: CornersPattern,
    sites: Vec<(usize, usize)>,
    rng: Rng,
    remaining: usize,
    pub proposed: u64,
    pub accepted: u64,
}

impl McmcChain {
    pub fn new(spec: &MeasureSpec, burn_in: usize, seed: u64) -> Result<Self> {
        let shape = spec.shape();
        let state = CornersPattern::from_parts(spec.theta, shape, spec.m, vec![0; shape.len()]);
        let mut chain = McmcChain {
            spec: spec.clone(),
            state,
            sites: shape.sites(),
            rng: rng(seed, 0),
            remaining: usize::MAX,
            proposed: 0,
            accepted: 0,
        };
        for _ in 0..burn_in {
            chain.step()?;
        }
        chain.proposed = 0;
        chain.accepted = 0;
        Ok(chain)
    }

    pub fn state(&self) -> &CornersPattern {
        &self.state
    }

    pub fn step(&mut self) -> Result<()> {
        let (j, i) = self.sites[self.rng.gen_range(0..self.sites.len())];
        let dir: i8 = if self.rng.gen::<bool>() { 1 } else { -1 };
        let u: f64 = self.rng.gen();
        self.proposed += 1;
        let r = match single_site_ratio(&self.spec, &self.state, j, i, dir) {
            Ok(r) => r,
            Err(Error::RejectedMove) => return Ok(()),
            Err(e) => return Err(e),
        };
        if r.im.abs() > 1e-12 * r.norm() || r.re < 0.0 {
            return contract("MCMC needs a positive measure");
        }
        if u < r.re {
            let idx = self.state.shape.offset(j) + i - 1;
            self.state.parts[idx] = (self.state.parts[idx] as i64 + dir as i64) as u32;
            self.accepted += 1;
        }
        Ok(())
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposed.max(1) as f64
    }
}

impl Iterator for McmcChain {
    type Item = CornersPattern;

    fn next(&mut self) -> Option<CornersPattern> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        self.step().ok()?;
        Some(self.state.clone())
    }
}

/// A chain of `chain_length` states after `burn_in` discarded steps.
pub fn mcmc_sample(spec: &MeasureSpec, chain_length: usize, burn_in: usize, seed: u64) -> Result<McmcChain> {
    let mut c = McmcChain::new(spec, burn_in, seed)?;
    c.remaining = chain_length;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::EnumeratedMeasure;
    use crate::ratios::apply_move;
    use crate::ratios::Move;
    use crate::weights::WeightFn;

    #[test]
    fn uniform_single_particle() {
        let m = 5u32;
        let spec = MeasureSpec::top_weighted(0.7, 1, 1, m, WeightFn::Unit).unwrap();
        let steps = 100_000;
        let mut counts = vec![0usize; m as usize + 1];
        for p in mcmc_sample(&spec, steps, 1000, 7).unwrap() {
            counts[p.lam(1, 1) as usize] += 1;
        }
        let pr = 1.0 / (m + 1) as f64;
        // Positive autocorrelation inflates the variance; use a generous σ.
        let sigma = (steps as f64 * pr * (1.0 - pr)).sqrt() * 6.0;
        for c in counts {
            assert!((c as f64 - steps as f64 * pr).abs() < 3.0 * sigma, "{c}");
        }
    }

    #[test]
    fn frequencies_match_enumeration() {
        let th = 0.7;
        let spec = MeasureSpec::top_weighted(th, 2, 1, 4, WeightFn::krawtchouk(0.6, th, 2, 4)).unwrap();
        let em = EnumeratedMeasure::new(&spec).unwrap();
        let steps = 400_000;
        let mut counts = vec![0usize; em.len()];
        for p in mcmc_sample(&spec, steps, 2000, 11).unwrap() {
            counts[em.index_of(&p.parts).unwrap()] += 1;
        }
        // Effective sample size is reduced by autocorrelation; thin ratio ~10.
        let ess = steps as f64 / 10.0;
        for (idx, c) in counts.iter().enumerate() {
            let p = em.prob(idx).re;
            let sd = (p * (1.0 - p) / ess).sqrt();
            assert!((*c as f64 / steps as f64 - p).abs() < 4.0 * sd + 1e-4, "state {idx}");
        }
    }

    #[test]
    fn determinism() {
        let spec = MeasureSpec::top_weighted(1.3, 3, 1, 4, WeightFn::Geometric { q: 0.8 }).unwrap();
        let a: Vec<_> = mcmc_sample(&spec, 500, 10, 3).unwrap().map(|p| p.parts).collect();
        let b: Vec<_> = mcmc_sample(&spec, 500, 10, 3).unwrap().map(|p| p.parts).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn detailed_balance_exact() {
        let th = 1.3;
        let spec = MeasureSpec::top_weighted(th, 3, 1, 3, WeightFn::krawtchouk(0.5, th, 3, 3)).unwrap();
        let em = EnumeratedMeasure::new(&spec).unwrap();
        for idx in 0..em.len() {
            let p = em.pattern(idx);
            for (j, i) in p.shape.sites() {
                let Ok(r) = single_site_ratio(&spec, &p, j, i, 1) else { continue };
                let q = apply_move(&p, Move::Horizontal { i, j1: j, j2: j }, 1).unwrap();
                let back = single_site_ratio(&spec, &q, j, i, -1).unwrap();
                let lhs = em.prob(idx).re * r.re.min(1.0);
                let rhs = em.prob_of(&q.parts).re * back.re.min(1.0);
                assert!((lhs - rhs).abs() < 1e-12 * lhs.max(rhs));
            }
        }
    }
}
