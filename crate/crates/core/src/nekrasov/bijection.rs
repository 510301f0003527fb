//! The maps 𝔟₁, 𝔟₂ pairing the residue contributions of R₁, R₂ at a
//! non-boundary candidate pole, checked by exhaustive scan.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{cluster_candidates, AnalyticFamily, PoleCandidate};
use crate::measure::EnumeratedMeasure;
use crate::{contract, Result};

const MATCH_EPS: f64 = 1e-9;
pub const IDENTITY_TOL: f64 = 1e-10;
/// Counterexamples kept per report.
const MAX_COUNTEREXAMPLES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variant {
    B1,
    B2,
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub parts: Vec<u32>,
    pub level: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BijectionReport {
    pub variant: Variant,
    pub candidate: PoleCandidate,
    pub s: f64,
    pub i: usize,
    pub plus_count: usize,
    pub minus_count: usize,
    pub containment: bool,
    pub injective: bool,
    pub onto: bool,
    pub max_identity_residual: f64,
    pub counterexamples: Vec<Counterexample>,
    pub passed: bool,
}

/// Pattern index in the enumeration, and level.
type Elem = (usize, usize);

struct Scan<'a> {
    em: &'a EnumeratedMeasure,
    fam: &'a AnalyticFamily,
    theta: f64,
    n: usize,
    k: usize,
    s: f64,
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() < MATCH_EPS
}

/// Π (s − ℓ + a)/(s − ℓ + b) over 1-based p ≠ skip.
fn prod(s: f64, ell: &[f64], a: f64, b: f64, skip: usize) -> f64 {
    ell.iter().enumerate().filter(|(q, _)| q + 1 != skip).map(|(_, &l)| (s - l + a) / (s - l + b)).product()
}

impl Scan<'_> {
    fn level<'p>(&self, parts: &'p [u32], j: usize) -> &'p [u32] {
        let off = self.em.shape().offset(j);
        &parts[off..off + j]
    }

    fn ell(&self, parts: &[u32], j: usize) -> Vec<f64> {
        self.level(parts, j).iter().enumerate().map(|(q, &l)| l as f64 - (q + 1) as f64 * self.theta).collect()
    }

    /// #zeros of Π(z − den) minus #zeros of Π(z − num) at z = s.
    fn order(&self, den: impl Iterator<Item = f64>, num: impl Iterator<Item = f64>) -> i32 {
        den.filter(|&r| near(r, self.s)).count() as i32 - num.filter(|&r| near(r, self.s)).count() as i32
    }

    /// Membership of (ℓ, j) in the plus set of the variant.
    fn in_plus(&self, v: Variant, parts: &[u32], j: usize, i: usize) -> bool {
        if i > j {
            return false;
        }
        let (t, n, k, s) = (self.theta, self.n, self.k, self.s);
        let e = self.ell(parts, j);
        match v {
            Variant::B1 => {
                if !near(e[i - 1], s) {
                    return false;
                }
                if j == n {
                    self.order(e.iter().copied(), e.iter().map(|l| l + t)) == 1
                } else {
                    let up = self.ell(parts, j + 1);
                    self.order(e.iter().copied(), up.iter().map(|l| l + t)) == 1
                }
            }
            Variant::B2 => {
                let sh = (n - j) as f64 * t;
                if !near(e[j - i], s + sh) {
                    return false;
                }
                if j == k {
                    self.order(e.iter().map(|l| l - sh), e.iter().map(|l| l - sh + t)) == 1
                } else {
                    let lo = self.ell(parts, j - 1);
                    self.order(e.iter().map(|l| l - sh), lo.iter().map(|l| l - sh)) == 1
                }
            }
        }
    }

    fn in_minus(&self, v: Variant, parts: &[u32], j: usize, i: usize) -> bool {
        if i > j {
            return false;
        }
        let (t, n, k, s) = (self.theta, self.n, self.k, self.s);
        let e = self.ell(parts, j);
        match v {
            Variant::B1 => {
                if !near(e[i - 1], s - 1.0) {
                    return false;
                }
                if j == k {
                    self.order(e.iter().map(|l| l + 1.0), e.iter().map(|l| l - t + 1.0)) == 1
                } else {
                    let lo = self.ell(parts, j - 1);
                    self.order(e.iter().map(|l| l + 1.0), lo.iter().map(|l| l - t + 1.0)) == 1
                }
            }
            Variant::B2 => {
                let sh = (n - j) as f64 * t;
                if !near(e[j - i], s + sh - 1.0) {
                    return false;
                }
                if j == n {
                    self.order(e.iter().map(|l| l + 1.0), e.iter().map(|l| l - t + 1.0)) == 1
                } else {
                    let up = self.ell(parts, j + 1);
                    self.order(e.iter().map(|l| l - sh + 1.0), up.iter().map(|l| l - sh + 1.0)) == 1
                }
            }
        }
    }

    /// Image of a plus element: shifted parts and target level.
    fn map(&self, v: Variant, parts: &[u32], n_lvl: usize, i: usize) -> (Vec<u32>, usize) {
        let sh = self.em.shape();
        let (n, k) = (self.n, self.k);
        let mut out = parts.to_vec();
        // λ = 0 wraps to u32::MAX, which index_of rejects.
        let dec = |j: usize, q: usize, out: &mut Vec<u32>| {
            let idx = sh.offset(j) + q - 1;
            out[idx] = out[idx].wrapping_sub(1);
        };
        match v {
            Variant::B1 => {
                let lam = |m: usize| -> Option<u32> { (i <= m).then(|| self.level(parts, m)[i - 1]) };
                let top = lam(n_lvl).unwrap();
                let lo = i.max(k + 1);
                let tilde = (lo..=n_lvl).rev().find(|&m| lam(m - 1).is_none_or(|x| top > x)).unwrap_or(k);
                for m in tilde..=n_lvl {
                    dec(m, i, &mut out);
                }
                (out, tilde)
            }
            Variant::B2 => {
                let diag = |m: usize| self.level(parts, m)[m - i];
                let base = diag(n_lvl);
                let tilde = (n_lvl..=n).rev().find(|&m| diag(m) == base).unwrap();
                for m in n_lvl..=tilde {
                    dec(m, m - i + 1, &mut out);
                }
                (out, tilde)
            }
        }
    }

    /// Weighted residue contribution of a plus element.
    fn plus_term(&self, v: Variant, idx: usize, j: usize, i: usize) -> Complex64 {
        let (t, n, k, s) = (self.theta, self.n, self.k, self.s);
        let parts = self.em.parts(idx);
        let p = self.em.prob(idx);
        let cs = Complex64::new(s, 0.0);
        let e = self.ell(parts, j);
        match v {
            Variant::B1 => {
                if j == n {
                    self.fam.phi1(n + 1).eval(cs) * p * prod(s, &e, -t, 0.0, i)
                } else {
                    let up = self.ell(parts, j + 1);
                    self.fam.phi1(j + 1).eval(cs) * p * prod(s, &up, -t, -1.0, 0) * prod(s, &e, t - 1.0, 0.0, i)
                }
            }
            Variant::B2 => {
                let shf = (n - j) as f64;
                if j == k {
                    self.fam.phi2(k).eval(cs) * p * prod(s, &e, (shf - 1.0) * t, shf * t, k - i + 1)
                } else {
                    let lo = self.ell(parts, j - 1);
                    self.fam.phi2(j).eval(cs)
                        * p
                        * prod(s, &e, (shf + 1.0) * t - 1.0, shf * t, j - i + 1)
                        * prod(s, &lo, shf * t, (shf + 1.0) * t - 1.0, 0)
                }
            }
        }
    }

    fn minus_term(&self, v: Variant, idx: usize, j: usize, i: usize) -> Complex64 {
        let (t, n, k, s) = (self.theta, self.n, self.k, self.s);
        let parts = self.em.parts(idx);
        let p = self.em.prob(idx);
        let cs = Complex64::new(s, 0.0);
        let e = self.ell(parts, j);
        match v {
            Variant::B1 => {
                if j == k {
                    self.fam.phi1(k).eval(cs) * p * prod(s, &e, t - 1.0, -1.0, i)
                } else {
                    let lo = self.ell(parts, j - 1);
                    self.fam.phi1(j).eval(cs) * p * prod(s, &e, -t, -1.0, i) * prod(s, &lo, t - 1.0, 0.0, 0)
                }
            }
            Variant::B2 => {
                if j == n {
                    self.fam.phi2(n + 1).eval(cs) * p * prod(s, &e, t - 1.0, -1.0, n - i + 1)
                } else {
                    let shf = (n - j) as f64;
                    let up = self.ell(parts, j + 1);
                    self.fam.phi2(j + 1).eval(cs)
                        * p
                        * prod(s, &up, shf * t - 1.0, (shf - 1.0) * t, 0)
                        * prod(s, &e, (shf - 1.0) * t, shf * t - 1.0, j - i + 1)
                }
            }
        }
    }
}

/// Runs 𝔟 at one (s, i) over the whole state space.
pub fn check_bijection(
    em: &EnumeratedMeasure,
    family: &AnalyticFamily,
    variant: Variant,
    candidate: PoleCandidate,
    i: usize,
) -> Result<BijectionReport> {
    let spec = &em.spec;
    let (theta, n, k) = (spec.theta, spec.n, spec.k);
    if theta == 1.0 {
        return contract("bijection check needs θ ≠ 1");
    }
    if i == 0 || i > n {
        return contract(format!("particle index {i} outside [1, {n}]"));
    }
    let s = candidate.location(theta);
    if near(s, -(n as f64) * theta) || near(s, spec.m as f64 + 1.0 - theta) {
        return contract("s must avoid the boundary points −Nθ and s_M");
    }
    let sc = Scan { em, fam: family, theta, n, k, s };

    let mut plus = BTreeSet::new();
    let mut minus = BTreeSet::new();
    for idx in 0..em.len() {
        let parts = em.parts(idx);
        for j in k..=n {
            if sc.in_plus(variant, parts, j, i) {
                plus.insert((idx, j));
            }
            if sc.in_minus(variant, parts, j, i) {
                minus.insert((idx, j));
            }
        }
    }

    let mut bad = Vec::new();
    let mut push = |parts: &[u32], level: usize, reason: String| {
        if bad.len() < MAX_COUNTEREXAMPLES {
            bad.push(Counterexample { parts: parts.to_vec(), level, reason });
        }
    };
    let mut image: BTreeSet<Elem> = BTreeSet::new();
    let (mut containment, mut injective) = (true, true);
    let mut worst: f64 = 0.0;
    for &(idx, j) in &plus {
        let parts = em.parts(idx);
        let (mapped, tilde) = sc.map(variant, parts, j, i);
        let ordered = match variant {
            Variant::B1 => tilde <= j,
            Variant::B2 => tilde >= j,
        };
        if !ordered {
            containment = false;
            push(parts, j, format!("image level {tilde} violates the level ordering"));
        }
        let Some(t_idx) = em.index_of(&mapped) else {
            containment = false;
            push(parts, j, "image leaves the state space".into());
            continue;
        };
        if !minus.contains(&(t_idx, tilde)) {
            containment = false;
            push(parts, j, format!("image at level {tilde} is not in the minus set"));
        }
        if !image.insert((t_idx, tilde)) {
            injective = false;
            push(parts, j, "image already hit".into());
        }
        let f = sc.plus_term(variant, idx, j, i);
        let g = sc.minus_term(variant, t_idx, tilde, i);
        let scale = f.norm().max(g.norm());
        let r = if scale == 0.0 { 0.0 } else { (f - g).norm() / scale };
        let r = if r.is_finite() { r } else { f64::INFINITY };
        worst = worst.max(r);
        if !(r < IDENTITY_TOL) {
            push(parts, j, format!("cancellation identity residual {r:e}"));
        }
    }
    let onto = image == minus;
    if !onto {
        for &(idx, j) in minus.difference(&image) {
            push(em.parts(idx), j, "minus element not hit".into());
        }
    }
    let passed = containment && injective && onto && plus.len() == minus.len() && worst < IDENTITY_TOL;
    Ok(BijectionReport {
        variant,
        candidate,
        s,
        i,
        plus_count: plus.len(),
        minus_count: minus.len(),
        containment,
        injective,
        onto,
        max_identity_residual: worst,
        counterexamples: bad,
        passed,
    })
}

/// Every non-boundary candidate and particle index, in parallel.
pub fn check_all_bijections(
    em: &EnumeratedMeasure,
    family: &AnalyticFamily,
    variant: Variant,
) -> Result<Vec<BijectionReport>> {
    let spec = &em.spec;
    let (theta, n) = (spec.theta, spec.n);
    let (lo, hi) = (-(n as f64) * theta, spec.m as f64 + 1.0 - theta);
    let jobs: Vec<(PoleCandidate, usize)> = cluster_candidates(theta, n, spec.m)
        .into_iter()
        .map(|g| g[0])
        .filter(|c| !near(c.location(theta), lo) && !near(c.location(theta), hi))
        .flat_map(|c| (1..=n).map(move |i| (c, i)))
        .collect();
    jobs.into_par_iter().map(|(c, i)| check_bijection(em, family, variant, c, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn krawtchouk_bijections() {
        let (spec, fam) = AnalyticFamily::krawtchouk_family(0.6, 0.7, 3, 1, 3).unwrap();
        let em = EnumeratedMeasure::new(&spec).unwrap();
        for v in [Variant::B1, Variant::B2] {
            let reports = check_all_bijections(&em, &fam, v).unwrap();
            let nonempty = reports.iter().filter(|r| r.plus_count > 0).count();
            assert!(nonempty > 0);
            for r in &reports {
                assert!(r.passed, "{r:?}");
            }
        }
    }

    #[test]
    fn geometric_bottom_two() {
        let (spec, fam) = AnalyticFamily::geometric(&[0.5, 0.9], 1.3, 3, 2, 3).unwrap();
        let em = EnumeratedMeasure::new(&spec).unwrap();
        for v in [Variant::B1, Variant::B2] {
            for r in check_all_bijections(&em, &fam, v).unwrap() {
                assert!(r.passed, "{r:?}");
            }
        }
    }

    #[test]
    fn corrupted_identity_fails() {
        let (spec, fam) = AnalyticFamily::krawtchouk_family(0.6, 0.7, 2, 1, 3).unwrap();
        let em = EnumeratedMeasure::new(&spec).unwrap();
        let bad = fam.corrupted(1.01);
        let reports = check_all_bijections(&em, &bad, Variant::B1).unwrap();
        assert!(reports.iter().any(|r| !r.passed && r.max_identity_residual > 1e-3));
    }

    #[test]
    fn unrealizable_pole_is_vacuous() {
        // s = M+1 − 2θ with M = 0 cannot be hit by any particle.
        let (spec, fam) = AnalyticFamily::krawtchouk_family(0.6, 0.7, 2, 1, 0).unwrap();
        let em = EnumeratedMeasure::new(&spec).unwrap();
        let r = check_bijection(&em, &fam, Variant::B1, PoleCandidate { a: 1, b: 2 }, 1).unwrap();
        assert_eq!((r.plus_count, r.minus_count), (0, 0));
        assert!(r.passed);
    }

    #[test]
    fn rejects_theta_one() {
        let (spec, fam) = AnalyticFamily::krawtchouk_family(0.6, 1.0, 2, 1, 2).unwrap();
        let em = EnumeratedMeasure::new(&spec).unwrap();
        assert!(check_bijection(&em, &fam, Variant::B1, PoleCandidate { a: 1, b: 1 }, 1).is_err());
    }
}
