//! Principal specializations of Jack polynomials and the identities built on
//! them: branching, projection and the Cauchy sum.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::numerics::log_gamma;
use crate::state_space::{enumerate_signatures, interlaces};
use crate::{contract, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    pub parts: Vec<u32>,
}

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return contract(format!("partition {parts:?} not weakly decreasing"));
        }
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Ok(Partition { parts })
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn size(&self) -> u32 {
        self.parts.iter().sum()
    }

    pub fn conjugate(&self) -> Partition {
        let w = self.parts.first().copied().unwrap_or(0);
        Partition { parts: (1..=w).map(|c| self.parts.iter().filter(|&&p| p >= c).count() as u32).collect() }
    }

    /// Arm of box (i, j), 1-based.
    pub fn arm(&self, i: usize, j: usize) -> i64 {
        self.parts[i - 1] as i64 - j as i64
    }

    pub fn leg(&self, i: usize, j: usize) -> i64 {
        self.conjugate().parts[j - 1] as i64 - i as i64
    }

    /// Parts padded with zeros to length n; None if longer.
    fn padded(&self, n: usize) -> Option<Vec<u32>> {
        if self.len() > n {
            return None;
        }
        let mut v = self.parts.clone();
        v.resize(n, 0);
        Some(v)
    }
}

fn ells(lam: &[u32], theta: f64) -> Vec<f64> {
    lam.iter().enumerate().map(|(i, &l)| l as f64 - (i + 1) as f64 * theta).collect()
}

pub fn log_jack_principal(lambda: &Partition, n: usize, theta: f64) -> Result<Option<f64>> {
    let Some(lam) = lambda.padded(n) else { return Ok(None) };
    let l = ells(&lam, theta);
    let mut s = 0.0;
    for i in 1..=n {
        s += log_gamma(theta)? - log_gamma(i as f64 * theta)?;
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = l[i] - l[j];
            s += log_gamma(d + theta)? - log_gamma(d)?;
        }
    }
    Ok(Some(s))
}

/// J_λ(1ᴺ); zero when λ has more than N parts.
pub fn jack_principal(lambda: &Partition, n: usize, theta: f64) -> Result<f64> {
    Ok(log_jack_principal(lambda, n, theta)?.map_or(0.0, f64::exp))
}

/// J_{λ/μ}(1) with λ of length ≤ n and μ of length ≤ n − 1.
///
/// The bare four-fold Gamma product carries a stray Γ(θ)^{n−1}; it is
/// divided out so that J_{(1)/∅}(1) = 1 and the branching rule closes.
pub fn skew_jack_one(lambda: &Partition, mu: &Partition, n: usize, theta: f64) -> Result<f64> {
    if n == 0 {
        return contract("skew Jack needs n ≥ 1");
    }
    let (Some(lam), Some(m)) = (lambda.padded(n), mu.padded(n - 1)) else { return Ok(0.0) };
    if !interlaces(&lam, &m)? {
        return Ok(0.0);
    }
    let l = ells(&lam, theta);
    let mm = ells(&m, theta);
    let mut s = -((n - 1) as f64) * log_gamma(theta)?;
    for i in 0..n {
        for j in i + 1..n {
            let d = l[i] - l[j];
            s += log_gamma(d + 1.0 - theta)? - log_gamma(d)?;
            let e = mm[i] - l[j];
            s += log_gamma(e)? - log_gamma(e + 1.0 - theta)?;
        }
    }
    for i in 0..n - 1 {
        for j in i + 1..n - 1 {
            let d = mm[i] - mm[j];
            s += log_gamma(d + 1.0)? - log_gamma(d + theta)?;
        }
        for j in i..n - 1 {
            let e = l[i] - mm[j];
            s += log_gamma(e + theta)? - log_gamma(e + 1.0)?;
        }
    }
    Ok(s.exp())
}

/// J̃_λ(1ᴺ) via the closed Gamma form.
pub fn log_dual_jack_principal(lambda: &Partition, n: usize, theta: f64) -> Result<Option<f64>> {
    let Some(lam) = lambda.padded(n) else { return Ok(None) };
    let l = ells(&lam, theta);
    let nt = n as f64 * theta;
    let mut s = 0.0;
    for i in 0..n {
        s -= log_gamma((i + 1) as f64 * theta)?;
        s += log_gamma(l[i] + nt + theta)? - log_gamma(l[i] + nt + 1.0)?;
        for j in i + 1..n {
            let d = l[i] - l[j];
            s += log_gamma(d + 1.0)? - log_gamma(d + 1.0 - theta)?;
        }
    }
    Ok(Some(s))
}

pub fn dual_jack_principal(lambda: &Partition, n: usize, theta: f64) -> Result<f64> {
    Ok(log_dual_jack_principal(lambda, n, theta)?.map_or(0.0, f64::exp))
}

/// J̃_λ/J_λ as the arm–leg box product.
pub fn dual_box_factor(lambda: &Partition, theta: f64) -> f64 {
    let conj = lambda.conjugate();
    let mut f = 1.0;
    for (i, &row) in lambda.parts.iter().enumerate() {
        for j in 1..=row as usize {
            let a = row as f64 - j as f64;
            let leg = conj.parts[j - 1] as f64 - (i + 1) as f64;
            f *= (a + theta * leg + theta) / (a + theta * leg + 1.0);
        }
    }
    f
}

/// Σ over interlacing chains λ¹ ⪯ … ⪯ λ of the skew factors, by recursion
/// on the level count with memoization.
fn chain_sum(lambda: &[u32], theta: f64, memo: &mut HashMap<Vec<u32>, f64>) -> Result<f64> {
    let n = lambda.len();
    if n == 1 {
        return Ok(1.0);
    }
    if let Some(&v) = memo.get(lambda) {
        return Ok(v);
    }
    let lam = Partition { parts: lambda.to_vec() };
    let mut total = 0.0;
    let mut mu = vec![0u32; n - 1];
    // Odometer over μ with λ_{i+1} ≤ μ_i ≤ λ_i.
    for (i, m) in mu.iter_mut().enumerate() {
        *m = lambda[i + 1];
    }
    loop {
        let skew = skew_jack_one(&lam, &Partition { parts: mu.clone() }, n, theta)?;
        total += skew * chain_sum(&mu, theta, memo)?;
        let mut pos = n - 1;
        loop {
            if pos == 0 {
                memo.insert(lambda.to_vec(), total);
                return Ok(total);
            }
            pos -= 1;
            if mu[pos] < lambda[pos] {
                mu[pos] += 1;
                mu[pos + 1..n - 1].copy_from_slice(&lambda[pos + 2..n]);
                break;
            }
        }
    }
}

/// Relative residual of the branching rule for J_λ(1ᴺ).
pub fn verify_branching(lambda: &Partition, n: usize, theta: f64) -> Result<f64> {
    let Some(lam) = lambda.padded(n) else { return contract("λ has more than N parts") };
    if lambda.is_empty() {
        return Ok(0.0);
    }
    let direct = jack_principal(lambda, n, theta)?;
    let chains = chain_sum(&lam, theta, &mut HashMap::new())?;
    Ok((direct - chains).abs() / direct)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CauchyReport {
    pub partial_sum: f64,
    pub target: f64,
    pub residual: f64,
    pub tail_bound: f64,
    pub ok: bool,
}

/// Truncated Cauchy sum over λ with λ₁ ≤ T against (1 − q)^{−θN²}.
///
/// Shell t collects λ with λ₁ = t. The tail beyond T is bounded by the
/// geometric series with ratio ρ = max(S_T/S_{T−1}, q), valid once the shell
/// ratios decrease towards q; a floating-point allowance of 64·ε·Σ|terms| is
/// added since the true tail is far below roundoff for the tested cases.
pub fn verify_cauchy(n: usize, theta: f64, q: f64, t: u32) -> Result<CauchyReport> {
    if !(0.0..1.0).contains(&q) {
        return contract("q must lie in [0, 1)");
    }
    let target = (1.0 - q).powf(-theta * (n * n) as f64);
    if q == 0.0 {
        return Ok(CauchyReport { partial_sum: 1.0, target, residual: 0.0, tail_bound: 0.0, ok: true });
    }
    let mut shells = vec![0.0; t as usize + 1];
    for sig in enumerate_signatures(n, t)? {
        let p = Partition::new(sig.parts.clone())?;
        let lj = log_jack_principal(&p, n, theta)?.unwrap();
        let ld = log_dual_jack_principal(&p, n, theta)?.unwrap();
        let term = (p.size() as f64 * q.ln() + lj + ld).exp();
        shells[sig.parts[0] as usize] += term;
    }
    let partial: f64 = shells.iter().sum();
    let st = shells[t as usize];
    let rho = if t >= 1 && shells[t as usize - 1] > 0.0 { (st / shells[t as usize - 1]).max(q) } else { q };
    let tail = if rho < 1.0 { st * rho / (1.0 - rho) } else { f64::INFINITY };
    let tail_bound = tail + 64.0 * f64::EPSILON * partial;
    let residual = (partial - target).abs();
    Ok(CauchyReport { partial_sum: partial, target, residual, tail_bound, ok: residual <= tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(v: &[u32]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn monomial_cases() {
        for &th in &[0.3, 1.0, 2.5] {
            assert!((jack_principal(&part(&[]), 3, th).unwrap() - 1.0).abs() < 1e-13);
            assert!((jack_principal(&part(&[1]), 2, th).unwrap() - 2.0).abs() < 1e-13);
            assert!((jack_principal(&part(&[2, 1]), 2, th).unwrap() - 2.0).abs() < 1e-13);
        }
        assert_eq!(jack_principal(&part(&[1, 1, 1]), 2, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn weyl_dimension_at_theta_one() {
        for sig in enumerate_signatures(4, 4).unwrap() {
            let lam = &sig.parts;
            let mut weyl = 1.0;
            for i in 0..4 {
                for j in i + 1..4 {
                    weyl *= (lam[i] as f64 - lam[j] as f64 + (j - i) as f64) / (j - i) as f64;
                }
            }
            let p = Partition::new(lam.clone()).unwrap();
            let got = jack_principal(&p, 4, 1.0).unwrap();
            assert!((got - weyl).abs() < 1e-11 * weyl, "{lam:?}");
            assert!((dual_jack_principal(&p, 4, 1.0).unwrap() - got).abs() < 1e-11 * weyl);
        }
    }

    #[test]
    fn dual_closed_form_matches_box_product() {
        for &th in &[0.5, 1.3, 2.0] {
            for sig in enumerate_signatures(3, 3).unwrap() {
                let p = Partition::new(sig.parts).unwrap();
                let closed = dual_jack_principal(&p, 3, th).unwrap();
                let boxed = jack_principal(&p, 3, th).unwrap() * dual_box_factor(&p, th);
                assert!((closed - boxed).abs() < 1e-12 * boxed);
            }
        }
        for m in 0..6u32 {
            let th: f64 = 0.7;
            let want =
                (log_gamma(m as f64 + th).unwrap() - log_gamma(th).unwrap() - log_gamma(m as f64 + 1.0).unwrap()).exp();
            assert!((dual_jack_principal(&part(&[m]), 1, th).unwrap() - want).abs() < 1e-13 * want);
        }
        assert!((dual_jack_principal(&part(&[]), 3, 0.8).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn skew_indicator_and_schur_case() {
        assert_eq!(skew_jack_one(&part(&[2, 0]), &part(&[3]), 2, 0.5).unwrap(), 0.0);
        for mu in 0..=1 {
            let v = skew_jack_one(&part(&[1]), &part(&[mu]), 2, 0.8).unwrap();
            assert!((v - 1.0).abs() < 1e-14);
        }
        for m in 0..5 {
            assert!((skew_jack_one(&part(&[m]), &part(&[]), 1, 1.0).unwrap() - 1.0).abs() < 1e-14);
        }
        // θ = 1: skew Schur in one variable is 1 on interlacing pairs.
        assert!((skew_jack_one(&part(&[3, 1]), &part(&[2]), 2, 1.0).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn branching_small() {
        assert!(verify_branching(&part(&[1, 0]), 2, 0.8).unwrap() < 1e-12);
        for &th in &[0.5, 1.0, 2.0] {
            assert!(verify_branching(&part(&[2, 1]), 2, th).unwrap() < 1e-10);
        }
        assert_eq!(verify_branching(&part(&[]), 3, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn cauchy_binomial_series() {
        let r = verify_cauchy(1, 0.7, 0.1, 60).unwrap();
        assert!(r.ok && r.tail_bound < 1e-10, "{r:?}");
        let z = verify_cauchy(2, 0.7, 0.0, 10).unwrap();
        assert_eq!(z.partial_sum, z.target);
        let r2 = verify_cauchy(2, 0.7, 0.2, 40).unwrap();
        assert!(r2.ok, "{r2:?}");
    }

    #[test]
    fn conjugation() {
        let p = part(&[4, 2, 2, 1]);
        assert_eq!(p.conjugate().parts, vec![4, 3, 1, 1]);
        assert_eq!(p.conjugate().conjugate(), p);
        assert_eq!(p.arm(1, 2), 2);
        assert_eq!(p.leg(1, 2), 2);
    }
}
