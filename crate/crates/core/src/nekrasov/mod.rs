//! The multi-level Nekrasov functions R₁, R₂, their numerical analyticity
//! certificate, and the residue-cancelling bijections behind it.

mod bijection;

pub use bijection::{check_all_bijections, check_bijection, BijectionReport, Counterexample, Variant};

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::AnalyticFn;
use crate::measure::{EnumeratedMeasure, MeasureSpec};
use crate::numerics::{try_contour_integral, ContourSpec};
use crate::weights::WeightFn;
use crate::{contract, Error, Result};

/// Relative tolerance on the φ recursions at lattice points.
pub const FAMILY_TOL: f64 = 1e-10;
/// Default residue tolerance, relative to max|R| on the outer contour.
pub const DEFAULT_TOL: f64 = 1e-8;
const POLE_GUARD: f64 = 1e-12;
const CLUSTER_EPS: f64 = 1e-6;

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Which {
    R1,
    R2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    General,
    /// θ = 1, where the middle terms become sums of simple fractions.
    One,
}

impl Branch {
    pub fn for_theta(theta: f64) -> Self {
        if theta == 1.0 {
            Branch::One
        } else {
            Branch::General
        }
    }
}

/// Which product to use in the bottom-level term of Res₂ at −Nθ.
/// `Printed` keeps (ℓ + (k−1)θ)/(ℓ + kθ) as stated in the source; the
/// residue computation gives (ℓ + (k+1)θ)/(ℓ + kθ).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ResidueForm {
    Corrected,
    Printed,
}

/// Possible pole s = a − bθ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct PoleCandidate {
    pub a: u32,
    pub b: usize,
}

impl PoleCandidate {
    pub fn location(&self, theta: f64) -> f64 {
        self.a as f64 - self.b as f64 * theta
    }
}

/// All a − bθ with a ∈ [0, M+1], b ∈ [1, N], sorted by location.
pub fn pole_candidates(theta: f64, n: usize, m: u32) -> Vec<PoleCandidate> {
    let mut v: Vec<PoleCandidate> = (0..=m + 1).flat_map(|a| (1..=n).map(move |b| PoleCandidate { a, b })).collect();
    v.sort_by(|x, y| x.location(theta).total_cmp(&y.location(theta)));
    v
}

/// Candidates grouped when closer than 1e−6 (rational θ).
pub fn cluster_candidates(theta: f64, n: usize, m: u32) -> Vec<Vec<PoleCandidate>> {
    let mut out: Vec<Vec<PoleCandidate>> = Vec::new();
    for p in pole_candidates(theta, n, m) {
        match out.last_mut() {
            Some(g) if (g[0].location(theta) - p.location(theta)).abs() < CLUSTER_EPS => g.push(p),
            _ => out.push(vec![p]),
        }
    }
    out
}

/// φ₁ʲ and φ₂ʲ for j = k..N+1.
#[derive(Clone, Debug)]
pub struct AnalyticFamily {
    pub theta: f64,
    pub n: usize,
    pub k: usize,
    pub m: u32,
    pub phi1: Vec<AnalyticFn>,
    pub phi2: Vec<AnalyticFn>,
}

impl AnalyticFamily {
    /// From per-level pairs (Φ⁺_j, Φ⁻_j), j = k..N, with
    /// w_j(x)/w_j(x−1) = Φ⁺_j(x)/Φ⁻_j(x).
    pub fn from_pairs(theta: f64, n: usize, k: usize, m: u32, pairs: Vec<(AnalyticFn, AnalyticFn)>) -> Result<Self> {
        if pairs.len() != n + 1 - k {
            return contract(format!("need {} Φ pairs, got {}", n + 1 - k, pairs.len()));
        }
        let pair = |lvl: usize| &pairs[lvl - k];
        let mut phi1 = Vec::new();
        let mut phi2 = Vec::new();
        for j in k..=n + 1 {
            let mut f1 = AnalyticFn::one();
            let mut f2 = AnalyticFn::one();
            for lvl in k..=n {
                let shift = (n - lvl) as f64 * theta;
                let (plus, minus) = pair(lvl);
                if lvl < j {
                    f1 = f1.times(minus.clone());
                    f2 = f2.times(plus.clone().shifted(shift));
                } else {
                    f1 = f1.times(plus.clone());
                    f2 = f2.times(minus.clone().shifted(shift));
                }
            }
            phi1.push(f1);
            phi2.push(f2);
        }
        Ok(AnalyticFamily { theta, n, k, m, phi1, phi2 })
    }

    /// Derived from the closed-form weights of a spec.
    pub fn from_spec(spec: &MeasureSpec) -> Result<Self> {
        let pairs = spec
            .weights
            .iter()
            .map(|w| {
                w.phi_pair().ok_or_else(|| {
                    Error::Unsupported(format!(
                        "weight {w:?} has no closed-form continuation; Nekrasov checks disabled"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_pairs(spec.theta, spec.n, spec.k, spec.m, pairs)
    }

    /// Krawtchouk-type top weight, w_j ≡ 1 below. Both Res terms vanish.
    pub fn krawtchouk_family(q: f64, theta: f64, n: usize, k: usize, m: u32) -> Result<(MeasureSpec, Self)> {
        let spec = MeasureSpec::top_weighted(theta, n, k, m, WeightFn::krawtchouk(q, theta, n, m))?;
        let fam = Self::from_spec(&spec)?;
        Ok((spec, fam))
    }

    /// w_j(x) = q_jˣ, qs listed for j = k..N.
    pub fn geometric(qs: &[f64], theta: f64, n: usize, k: usize, m: u32) -> Result<(MeasureSpec, Self)> {
        let w = qs.iter().map(|&q| WeightFn::Geometric { q }).collect();
        let spec = MeasureSpec::new(theta, n, k, m, w)?;
        let fam = Self::from_spec(&spec)?;
        Ok((spec, fam))
    }

    pub fn phi1(&self, j: usize) -> &AnalyticFn {
        &self.phi1[j - self.k]
    }

    pub fn phi2(&self, j: usize) -> &AnalyticFn {
        &self.phi2[j - self.k]
    }

    /// Multiplies φ₁ᵏ and φ₂ᵏ by `factor`; breaks the recursions.
    pub fn corrupted(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.phi1[0] = out.phi1[0].clone().scaled(factor);
        out.phi2[0] = out.phi2[0].clone().scaled(factor);
        out
    }

    /// Worst relative mismatch of both recursions over the lattice points
    /// λ − iθ, λ ∈ [1, M], i ∈ [1, j].
    pub fn validate(&self, spec: &MeasureSpec) -> Result<f64> {
        if spec.n != self.n || spec.k != self.k || spec.m != self.m || spec.theta != self.theta {
            return contract("family and spec disagree on (θ, N, k, M)");
        }
        let rel = |a: C, b: C| {
            let s = a.norm().max(b.norm());
            if s == 0.0 {
                0.0
            } else {
                (a - b).norm() / s
            }
        };
        let mut worst: f64 = 0.0;
        for j in self.k..=self.n {
            let shift = (self.n - j) as f64 * self.theta;
            for i in 1..=j {
                for lam in 1..=self.m {
                    let y = lam as f64 - i as f64 * self.theta;
                    // w_j(y−1)/w_j(y).
                    let down = (spec.log_w(j, lam - 1, i)? - spec.log_w(j, lam, i)?).exp();
                    worst = worst.max(rel(self.phi1(j + 1).eval_re(y), self.phi1(j).eval_re(y) * down));
                    let z = y - shift;
                    worst = worst.max(rel(self.phi2(j).eval_re(z), self.phi2(j + 1).eval_re(z) * down));
                }
            }
        }
        Ok(worst)
    }

    /// Table weights recovered from φ₁ by downward recursion on each
    /// site column, anchored at ln w(M, i) = 0.
    pub fn weights_from_family(&self) -> Result<Vec<WeightFn>> {
        let mut out = Vec::new();
        for j in self.k..=self.n {
            let mut t = BTreeMap::new();
            for i in 1..=j {
                let mut lw = c(0.0);
                t.insert((self.m, i), lw);
                for lam in (1..=self.m).rev() {
                    let x = lam as f64 - i as f64 * self.theta;
                    let (num, den) = (self.phi1(j + 1).eval_re(x), self.phi1(j).eval_re(x));
                    if den.norm() == 0.0 || num.norm() == 0.0 {
                        return contract(format!("φ₁ vanishes at lattice point {x} of level {j}"));
                    }
                    lw += (num / den).ln();
                    t.insert((lam - 1, i), lw);
                }
            }
            out.push(WeightFn::Table(t));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
struct Row {
    lam: Vec<u32>,
    ell: Vec<f64>,
    p: C,
}

#[derive(Clone, Debug)]
struct PairRow {
    up_lam: Vec<u32>,
    up: Vec<f64>,
    lo: Vec<f64>,
    p: C,
}

fn ells(lam: &[u32], theta: f64) -> Vec<f64> {
    lam.iter().enumerate().map(|(q, &l)| l as f64 - (q + 1) as f64 * theta).collect()
}

fn aggregate(em: &EnumeratedMeasure, from: usize, len: usize) -> Vec<(Vec<u32>, C)> {
    let mut acc: BTreeMap<Vec<u32>, C> = BTreeMap::new();
    for (p, w) in em.iter() {
        *acc.entry(p[from..from + len].to_vec()).or_insert(c(0.0)) += w;
    }
    acc.into_iter().collect()
}

/// Π (z − ℓ + a)/(z − ℓ + b) over `ell`, skipping 1-based index `skip`.
fn ratio(z: C, ell: &[f64], a: f64, b: f64, skip: usize) -> Result<C> {
    let mut acc = c(1.0);
    for (q, &l) in ell.iter().enumerate() {
        if q + 1 == skip {
            continue;
        }
        let den = z - l + b;
        if den.norm() < POLE_GUARD {
            return Err(Error::OnPole(z));
        }
        acc *= (z - l + a) / den;
    }
    Ok(acc)
}

/// Σ 1/(z − ℓ + b).
fn fraction_sum(z: C, ell: &[f64], b: f64) -> Result<C> {
    let mut acc = c(0.0);
    for &l in ell {
        let den = z - l + b;
        if den.norm() < POLE_GUARD {
            return Err(Error::OnPole(z));
        }
        acc += den.inv();
    }
    Ok(acc)
}

/// R₁, R₂ for one measure and family, with the marginals they need
/// tabulated once.
#[derive(Clone, Debug)]
pub struct NekrasovSystem {
    pub theta: f64,
    pub n: usize,
    pub k: usize,
    pub m: u32,
    pub branch: Branch,
    pub family: AnalyticFamily,
    form: ResidueForm,
    top: Vec<Row>,
    bottom: Vec<Row>,
    /// (j, j−1) joint laws for j = k+1..N.
    pairs: Vec<Vec<PairRow>>,
    /// Res coefficients at (−Nθ, s_M).
    res1: (C, C),
    res2: (C, C),
    res2_printed_minus: C,
}

impl NekrasovSystem {
    pub fn new(em: &EnumeratedMeasure, family: &AnalyticFamily, branch: Branch) -> Result<Self> {
        let spec = &em.spec;
        let (theta, n, k, m) = (spec.theta, spec.n, spec.k, spec.m);
        if family.n != n || family.k != k || family.m != m || family.theta != theta {
            return contract("family and measure disagree on (θ, N, k, M)");
        }
        match branch {
            Branch::One if theta != 1.0 => return contract("θ = 1 branch needs θ = 1"),
            Branch::General if theta == 1.0 => return contract("general branch needs θ ≠ 1"),
            _ => {}
        }
        let shape = em.shape();
        let row = |(lam, p): (Vec<u32>, C)| Row { ell: ells(&lam, theta), lam, p };
        let top: Vec<Row> = aggregate(em, shape.offset(n), n).into_iter().map(row).collect();
        let bottom: Vec<Row> = aggregate(em, shape.offset(k), k).into_iter().map(row).collect();
        let pairs = (k + 1..=n)
            .map(|j| {
                aggregate(em, shape.offset(j), 2 * j - 1)
                    .into_iter()
                    .map(|(v, p)| PairRow {
                        up: ells(&v[..j], theta),
                        lo: ells(&v[j..], theta),
                        up_lam: v[..j].to_vec(),
                        p,
                    })
                    .collect()
            })
            .collect();
        let mut sys = NekrasovSystem {
            theta,
            n,
            k,
            m,
            branch,
            family: family.clone(),
            form: ResidueForm::Corrected,
            top,
            bottom,
            pairs,
            res1: (c(0.0), c(0.0)),
            res2: (c(0.0), c(0.0)),
            res2_printed_minus: c(0.0),
        };
        sys.residue_coefficients()?;
        Ok(sys)
    }

    pub fn from_spec(spec: &MeasureSpec, family: &AnalyticFamily) -> Result<Self> {
        let em = EnumeratedMeasure::new(spec)?;
        Self::new(&em, family, Branch::for_theta(spec.theta))
    }

    pub fn with_residue_form(mut self, form: ResidueForm) -> Self {
        self.form = form;
        self
    }

    pub fn s_minus(&self) -> f64 {
        -(self.n as f64) * self.theta
    }

    pub fn s_plus(&self) -> f64 {
        self.m as f64 + 1.0 - self.theta
    }

    fn pair_rows(&self, j: usize) -> &[PairRow] {
        &self.pairs[j - self.k - 1]
    }

    // The same expressions serve θ = 1: every product that degenerates
    // there degenerates to 1.
    fn residue_coefficients(&mut self) -> Result<()> {
        let (t, n, k, m) = (self.theta, self.n, self.k, self.m);
        let (sm, sp) = (c(self.s_minus()), c(self.s_plus()));
        let fam = &self.family;
        let mut r1m = c(0.0);
        let mut r1p = c(0.0);
        let mut r2m = c(0.0);
        let mut r2m_printed = c(0.0);
        let mut r2p = c(0.0);
        for r in &self.top {
            if r.lam[n - 1] == 0 {
                // Π_{p<N} (ℓ + (N+1)θ)/(ℓ + Nθ) as a ratio at z = 0 with signs flipped.
                r1m += r.p * ratio(c(0.0), &r.ell, -(n as f64 + 1.0) * t, -(n as f64) * t, n)?;
            }
            if r.lam[0] == m {
                r2p += r.p * ratio(sp, &r.ell, t - 1.0, -1.0, 1)?;
            }
        }
        for r in &self.bottom {
            if r.lam[0] == m {
                r1p += r.p * ratio(sp, &r.ell, t - 1.0, -1.0, 1)?;
            }
            if r.lam[k - 1] == 0 {
                r2m += r.p * ratio(c(0.0), &r.ell, -(k as f64 + 1.0) * t, -(k as f64) * t, k)?;
                r2m_printed += r.p * ratio(c(0.0), &r.ell, -(k as f64 - 1.0) * t, -(k as f64) * t, k)?;
            }
        }
        r1m *= -t * fam.phi1(n + 1).eval(sm);
        r1p *= t * fam.phi1(k).eval(sp);
        r2p *= t * fam.phi2(n + 1).eval(sp);
        r2m *= -t * fam.phi2(k).eval(sm);
        r2m_printed *= -t * fam.phi2(k).eval(sm);
        for j in k + 1..=n {
            let jf = j as f64;
            let mut e1 = c(0.0);
            let mut e2 = c(0.0);
            for r in self.pair_rows(j) {
                if r.up_lam[0] == m {
                    e1 += r.p * ratio(sp, &r.up, -t, -1.0, 1)? * ratio(sp, &r.lo, t - 1.0, 0.0, 0)?;
                }
                if r.up_lam[j - 1] == 0 {
                    let a = ratio(c(0.0), &r.up, -(jf - 1.0) * t - 1.0, -jf * t, j)?;
                    let b = ratio(c(0.0), &r.lo, -jf * t, -(jf - 1.0) * t - 1.0, 0)?;
                    e2 += r.p * a * b;
                }
            }
            r1p += t * fam.phi1(j).eval(sp) * e1;
            let d = -t * fam.phi2(j).eval(sm) * e2;
            r2m += d;
            r2m_printed += d;
        }
        self.res1 = (r1m, r1p);
        self.res2 = (r2m, r2p);
        self.res2_printed_minus = r2m_printed;
        Ok(())
    }

    /// Residue coefficients (at −Nθ, at s_M) subtracted from R.
    pub fn residue_terms(&self, which: Which) -> (C, C) {
        match (which, self.form) {
            (Which::R1, _) => self.res1,
            (Which::R2, ResidueForm::Corrected) => self.res2,
            (Which::R2, ResidueForm::Printed) => (self.res2_printed_minus, self.res2.1),
        }
    }

    fn res(&self, z: C, which: Which) -> Result<C> {
        let (cm, cp) = self.residue_terms(which);
        let (dm, dp) = (z - self.s_minus(), z - self.s_plus());
        if dm.norm() < POLE_GUARD || dp.norm() < POLE_GUARD {
            return Err(Error::OnPole(z));
        }
        Ok(cm / dm + cp / dp)
    }

    pub fn eval(&self, z: C, which: Which) -> Result<C> {
        match which {
            Which::R1 => self.eval_r1(z),
            Which::R2 => self.eval_r2(z),
        }
    }

    /// Middle-sum expectations only, without φ or the θ/(1−θ) factor.
    fn middle(&self, z: C, which: Which, j: usize) -> Result<C> {
        let t = self.theta;
        let sh = (self.n - j) as f64;
        let mut acc = c(0.0);
        for r in self.pair_rows(j) {
            let v = match (which, self.branch) {
                (Which::R1, Branch::General) => ratio(z, &r.up, -t, -1.0, 0)? * ratio(z, &r.lo, t - 1.0, 0.0, 0)?,
                (Which::R1, Branch::One) => fraction_sum(z, &r.up, -1.0)? - fraction_sum(z, &r.lo, 0.0)?,
                (Which::R2, Branch::General) => {
                    ratio(z, &r.up, (sh + 1.0) * t - 1.0, sh * t, 0)?
                        * ratio(z, &r.lo, sh * t, (sh + 1.0) * t - 1.0, 0)?
                }
                (Which::R2, Branch::One) => fraction_sum(z, &r.lo, sh)? - fraction_sum(z, &r.up, sh)?,
            };
            acc += r.p * v;
        }
        Ok(acc)
    }

    fn middle_prefactor(&self) -> f64 {
        match self.branch {
            Branch::General => self.theta / (1.0 - self.theta),
            Branch::One => 1.0,
        }
    }

    pub fn eval_r1(&self, z: C) -> Result<C> {
        let (t, n, k) = (self.theta, self.n, self.k);
        let fam = &self.family;
        let mut top = c(0.0);
        for r in &self.top {
            top += r.p * ratio(z, &r.ell, -t, 0.0, 0)?;
        }
        let mut bot = c(0.0);
        for r in &self.bottom {
            bot += r.p * ratio(z, &r.ell, t - 1.0, -1.0, 0)?;
        }
        let mut mid = c(0.0);
        for j in k + 1..=n {
            mid += fam.phi1(j).eval(z) * self.middle(z, Which::R1, j)?;
        }
        Ok(fam.phi1(n + 1).eval(z) * top + fam.phi1(k).eval(z) * bot + self.middle_prefactor() * mid
            - self.res(z, Which::R1)?)
    }

    pub fn eval_r2(&self, z: C) -> Result<C> {
        let (t, n, k) = (self.theta, self.n, self.k);
        let fam = &self.family;
        let sh = (n - k) as f64;
        let mut top = c(0.0);
        for r in &self.top {
            top += r.p * ratio(z, &r.ell, t - 1.0, -1.0, 0)?;
        }
        let mut bot = c(0.0);
        for r in &self.bottom {
            bot += r.p * ratio(z, &r.ell, (sh - 1.0) * t, sh * t, 0)?;
        }
        let mut mid = c(0.0);
        for j in k + 1..=n {
            mid += fam.phi2(j).eval(z) * self.middle(z, Which::R2, j)?;
        }
        Ok(fam.phi2(n + 1).eval(z) * top + fam.phi2(k).eval(z) * bot + self.middle_prefactor() * mid
            - self.res(z, Which::R2)?)
    }

    /// θ/(1−θ)·Σ_{j>k} φʲ(z): the part of R that diverges as θ → 1.
    pub fn divergent_part(&self, z: C, which: Which) -> C {
        if self.branch == Branch::One {
            return c(0.0);
        }
        let s: C = (self.k + 1..=self.n)
            .map(|j| match which {
                Which::R1 => self.family.phi1(j).eval(z),
                Which::R2 => self.family.phi2(j).eval(z),
            })
            .sum();
        self.middle_prefactor() * s
    }

    /// Ellipse around [−Nθ, s_M] used for normalization and moments.
    pub fn outer_contour(&self) -> ContourSpec {
        ContourSpec::around_segment(self.s_minus(), self.s_plus(), 1.0, 1.0, 64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PoleResidue {
    pub candidates: Vec<PoleCandidate>,
    pub location: f64,
    pub radius: f64,
    /// |(1/2πi)∮R| / max|R| on the outer contour.
    pub residue: f64,
    /// −Nθ or s_M, where Res cancels the pole.
    pub boundary: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyticityReport {
    pub which: Which,
    pub branch: Branch,
    pub theta: f64,
    pub n: usize,
    pub k: usize,
    pub m: u32,
    pub tol: f64,
    pub normalization: f64,
    pub poles: Vec<PoleResidue>,
    pub max_residue: f64,
    /// Normalized |∮R(z)(z−c)ᵐ| on the outer contour, m = 0..#candidates.
    pub moments: Vec<f64>,
    pub max_moment: f64,
    /// |Σ residues| / normalization.
    pub residue_sum: f64,
    pub passed: bool,
}

/// Per-pole and moment tests of analyticity on [−Nθ, s_M].
pub fn certify_analyticity(sys: &NekrasovSystem, which: Which, tol: f64) -> Result<AnalyticityReport> {
    let theta = sys.theta;
    let clusters = cluster_candidates(theta, sys.n, sys.m);
    let centers: Vec<f64> = clusters.iter().map(|g| g[0].location(theta)).collect();
    let gap = centers.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let radius = 0.1f64.min(0.5 * gap);

    let outer = sys.outer_contour();
    let samples = outer.sample_points(512);
    let f = |z: C| sys.eval(z, which);
    let normalization =
        samples.iter().map(|&z| f(z).map(|v| v.norm())).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    if !(normalization > 0.0) {
        return contract("R vanishes on the outer contour; nothing to normalize by");
    }
    let qtol = 1e-3 * tol * normalization;

    let mut poles = Vec::new();
    let mut total = c(0.0);
    for (g, &s) in clusters.iter().zip(&centers) {
        let circle = ContourSpec::circle(c(s), radius, 32);
        let v = try_contour_integral(f, &circle, qtol)?.value;
        total += v;
        let residue = v.norm() / normalization;
        let boundary = (s - sys.s_minus()).abs() < CLUSTER_EPS || (s - sys.s_plus()).abs() < CLUSTER_EPS;
        poles.push(PoleResidue {
            candidates: g.clone(),
            location: s,
            radius,
            residue,
            boundary,
            passed: residue < tol,
        });
    }

    let center = outer.center;
    let moment_pts: Vec<C> = outer.sample_points(512);
    let mut moments = Vec::new();
    for mm in 0..=pole_candidates(theta, sys.n, sys.m).len() as i32 {
        let g = |z: C| f(z).map(|v| v * (z - center).powi(mm));
        let scale = moment_pts
            .iter()
            .map(|&z| g(z).map(|v| v.norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let v = try_contour_integral(g, &outer, 1e-3 * tol * scale)?.value;
        moments.push(v.norm() / scale);
    }

    let max_residue = poles.iter().map(|p| p.residue).fold(0.0, f64::max);
    let max_moment = moments.iter().copied().fold(0.0, f64::max);
    let residue_sum = total.norm() / normalization;
    Ok(AnalyticityReport {
        which,
        branch: sys.branch,
        theta,
        n: sys.n,
        k: sys.k,
        m: sys.m,
        tol,
        normalization,
        poles,
        max_residue,
        moments,
        max_moment,
        residue_sum,
        passed: max_residue < tol && max_moment < tol && residue_sum < tol,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContinuityReport {
    pub z: C,
    /// Richardson limit of R^θ − G^θ as θ → 1.
    pub limit: C,
    pub at_one: C,
    pub error: f64,
}

/// θ → 1 limit of R^θ − G^θ for a Krawtchouk top weight with θ = 1 built
/// in, compared with the θ = 1 evaluation at z.
pub fn theta_continuity(q: f64, n: usize, k: usize, m: u32, z: C, which: Which) -> Result<ContinuityReport> {
    let top = WeightFn::krawtchouk(q, 1.0, n, m);
    let eval_at = |theta: f64| -> Result<C> {
        let spec = MeasureSpec::top_weighted(theta, n, k, m, top.clone())?;
        let fam = AnalyticFamily::from_spec(&spec)?;
        let sys = NekrasovSystem::from_spec(&spec, &fam)?;
        Ok(sys.eval(z, which)? - sys.divergent_part(z, which))
    };
    let sym = |h: f64| -> Result<C> { Ok(0.5 * (eval_at(1.0 + h)? + eval_at(1.0 - h)?)) };
    let (h1, h2) = (1e-3, 1e-4);
    let (f1, f2) = (sym(h1)?, sym(h2)?);
    let limit = (f2 * h1 * h1 - f1 * h2 * h2) / (h1 * h1 - h2 * h2);
    let at_one = eval_at(1.0)?;
    Ok(ContinuityReport { z, limit, at_one, error: (limit - at_one).norm() })
}
