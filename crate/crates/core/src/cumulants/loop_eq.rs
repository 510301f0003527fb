//! Deformed measures and the discrete loop equations built from R₁.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{cumulant_kernel, stieltjes_parts, RandomVariable};
use crate::measure::{EnumeratedMeasure, CANCELLATION_THRESHOLD};
use crate::nekrasov::Branch;
use crate::numerics::{contour_integral, mixed_partial, ContourSpec};
use crate::{contract, Error, Result};

type C = Complex64;

/// Σm_r cap: the subset-tuple sum has 2^{Σm_r} terms.
pub const MAX_POINTS: usize = 3;

/// Scale L and observation points v_f^r, listed per level r = k..N.
#[derive(Clone, Debug, Serialize)]
pub struct ObservableSet {
    pub l: f64,
    pub points: Vec<Vec<C>>,
}

impl ObservableSet {
    pub fn empty(l: f64, levels: usize) -> Self {
        ObservableSet { l, points: vec![Vec::new(); levels] }
    }

    pub fn len(&self) -> usize {
        self.points.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (level, f, v) in level order, f 1-based.
    fn flat(&self, k: usize) -> Vec<(usize, usize, C)> {
        self.points
            .iter()
            .enumerate()
            .flat_map(|(r, vs)| vs.iter().enumerate().map(move |(f, &v)| (r + k, f + 1, v)))
            .collect()
    }

    fn check(&self, em: &EnumeratedMeasure) -> Result<()> {
        let spec = &em.spec;
        if self.points.len() != spec.n + 1 - spec.k {
            return contract("observable set needs one point list per level k..N");
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return contract("L must be positive");
        }
        Ok(())
    }
}

/// G_L^r(v_f^r) for every point, as random variables on the enumeration.
fn stieltjes_variables(em: &EnumeratedMeasure, obs: &ObservableSet) -> Vec<RandomVariable> {
    let shape = em.shape();
    let theta = em.spec.theta;
    obs.flat(em.spec.k)
        .into_iter()
        .map(|(r, _, v)| {
            let off = shape.offset(r);
            (0..em.len()).map(|s| stieltjes_parts(&em.parts(s)[off..off + r], theta, obs.l, v)).collect()
        })
        .collect()
}

/// E under the measure reweighted by Π(1 + t/(v − ℓ/L)); `t` mirrors the
/// shape of `obs.points`.
pub fn deformed_expectation<F>(em: &EnumeratedMeasure, obs: &ObservableSet, t: &[Vec<C>], xi: F) -> Result<C>
where
    F: Fn(&[u32]) -> C + Sync,
{
    obs.check(em)?;
    if t.len() != obs.points.len() || t.iter().zip(&obs.points).any(|(a, b)| a.len() != b.len()) {
        return contract("t must have the same shape as the observation points");
    }
    let (k, theta, l) = (em.spec.k, em.spec.theta, obs.l);
    let shape = em.shape();
    let deform = |parts: &[u32]| -> C {
        let mut d = C::new(1.0, 0.0);
        for (r, (ts, vs)) in t.iter().zip(&obs.points).enumerate() {
            let lvl = r + k;
            let lam = &parts[shape.offset(lvl)..shape.offset(lvl) + lvl];
            for (&tf, &vf) in ts.iter().zip(vs) {
                for (q, &x) in lam.iter().enumerate() {
                    d *= 1.0 + tf / (vf - (x as f64 - (q + 1) as f64 * theta) / l);
                }
            }
        }
        d
    };
    let z = em.expect_raw(deform);
    let mass = em.expect_raw(|p| C::new(deform(p).norm(), 0.0)).re;
    if z.norm() < CANCELLATION_THRESHOLD * mass {
        return Err(Error::NearZeroPartition { modulus: z.norm(), scale: mass });
    }
    Ok(em.expect_raw(|p| xi(p) * deform(p)) / z)
}

/// ∂/∂t₁⋯∂tₙ at t = 0 of the deformed expectation, by finite differences.
pub fn derivative_cumulant<F>(em: &EnumeratedMeasure, obs: &ObservableSet, xi: F, step: f64) -> Result<C>
where
    F: Fn(&[u32]) -> C + Sync,
{
    let n = obs.len();
    let err = std::cell::RefCell::new(None);
    let f = |flat: &[f64]| -> C {
        let mut it = flat.iter();
        let t: Vec<Vec<C>> =
            obs.points.iter().map(|vs| vs.iter().map(|_| C::new(*it.next().unwrap(), 0.0)).collect()).collect();
        deformed_expectation(em, obs, &t, &xi).unwrap_or_else(|e| {
            err.borrow_mut().get_or_insert(e.to_string());
            C::new(f64::NAN, 0.0)
        })
    };
    let d = mixed_partial(f, &vec![1; n], step)?;
    match err.into_inner() {
        Some(e) => contract(format!("deformed measure failed during differencing: {e}")),
        None => Ok(d),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopTerm {
    /// 1: top level, 2: bottom level, 3: the (j, j−1) pair.
    pub line: u8,
    pub level: Option<usize>,
    /// F_r per level r = k..N, 1-based indices.
    pub subsets: Vec<Vec<usize>>,
    pub value: C,
    pub nodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopReport {
    pub branch: Branch,
    pub total: C,
    pub residual: f64,
    pub max_term: f64,
    pub terms: Vec<LoopTerm>,
}

fn aggregate(em: &EnumeratedMeasure, w: &[C], from: usize, len: usize, split: usize) -> Vec<(Vec<f64>, Vec<f64>, C)> {
    let theta = em.spec.theta;
    let mut acc: BTreeMap<&[u32], C> = BTreeMap::new();
    for s in 0..em.len() {
        *acc.entry(&em.parts(s)[from..from + len]).or_insert(C::new(0.0, 0.0)) += w[s];
    }
    let ell =
        |lam: &[u32]| -> Vec<f64> { lam.iter().enumerate().map(|(q, &x)| x as f64 - (q + 1) as f64 * theta).collect() };
    acc.into_iter().map(|(key, w)| (ell(&key[..split]), ell(&key[split..]), w)).collect()
}

fn ratio(z: C, ell: &[f64], a: f64, b: f64) -> C {
    ell.iter().map(|&l| (z - l + a) / (z - l + b)).product()
}

fn fractions(z: C, ell: &[f64], b: f64) -> C {
    ell.iter().map(|&l| (z - l + b).inv()).sum()
}

/// Residual of the loop equation obtained by differentiating the R₁
/// contour identity in the deformation parameters, for every subset tuple.
/// Needs w_j ≡ 1 below the top level and closed-form Φ± for w_N.
pub fn verify_discrete_loop_equation(
    em: &EnumeratedMeasure,
    obs: &ObservableSet,
    v: C,
    contour: &ContourSpec,
    adaptive_tol: f64,
) -> Result<LoopReport> {
    obs.check(em)?;
    let spec = &em.spec;
    let (theta, n, k, m, l) = (spec.theta, spec.n, spec.k, spec.m, obs.l);
    let branch = Branch::for_theta(theta);
    if spec.weights[..n - k].iter().any(|w| !w.is_unit()) {
        return Err(Error::Unsupported("loop equation needs w_j ≡ 1 below the top level".into()));
    }
    let (phi_p, phi_m) =
        spec.weight(n).phi_pair().ok_or_else(|| Error::Unsupported("top weight has no closed-form Φ±".into()))?;
    let flat = obs.flat(k);
    if flat.len() > MAX_POINTS {
        return contract(format!("at most {MAX_POINTS} observation points, got {}", flat.len()));
    }
    contour.validate()?;
    let (lo, hi) = (-(n as f64) * theta / l, (m as f64 - theta) / l);
    if !contour.contains(C::new(lo, 0.0)) || !contour.contains(C::new(hi, 0.0)) {
        return contract("contour must enclose [−Nθ/L, (M−θ)/L]");
    }
    if contour.contains(v) {
        return contract("v must lie outside the contour");
    }
    for &(_, _, vf) in &flat {
        if contour.contains(vf) || contour.contains(vf + 1.0 / l) {
            return contract("observation points and their 1/L shifts must lie outside the contour");
        }
    }

    let vars = stieltjes_variables(em, obs);
    let probs = em.probabilities();
    let shape = em.shape();
    let (nf, sm) = (n as f64 * theta, m as f64 + 1.0 - theta);
    // Φ(Lz)/S_v(Lz) with S_v(Lz) = L(z − v)/((Lz + Nθ)(Lz − s_M)).
    let over_s = move |z: C| (l * z + nf) * (l * z - sm) / (l * (z - v));
    let comp =
        |z: C, missing: &[C]| -> C { missing.iter().map(|&vf| (l * (vf - z) * (vf - z + 1.0 / l)).inv()).product() };
    let mid_pref = match branch {
        Branch::General => theta / (1.0 - theta),
        Branch::One => 1.0,
    };

    let tuples: Vec<u32> = (0..1u32 << flat.len()).collect();
    let per_tuple: Vec<Vec<LoopTerm>> = tuples
        .par_iter()
        .map(|&mask| -> Result<Vec<LoopTerm>> {
            let inside: Vec<&[C]> =
                (0..flat.len()).filter(|&a| mask >> a & 1 == 1).map(|a| vars[a].as_slice()).collect();
            let kern = cumulant_kernel(probs, &inside)?;
            let w: Vec<C> = probs.iter().zip(&kern).map(|(p, q)| p * q).collect();
            let subsets: Vec<Vec<usize>> = (k..=n)
                .map(|r| {
                    flat.iter()
                        .enumerate()
                        .filter(|(a, &(lv, _, _))| lv == r && mask >> a & 1 == 1)
                        .map(|(_, &(_, f, _))| f)
                        .collect()
                })
                .collect();
            let missing_from = |j: usize| -> Vec<C> {
                flat.iter()
                    .enumerate()
                    .filter(|(a, &(lv, _, _))| lv >= j && mask >> a & 1 == 0)
                    .map(|(_, &(_, _, vf))| vf)
                    .collect()
            };
            let full_below = |j: usize| flat.iter().enumerate().all(|(a, &(lv, _, _))| lv >= j || mask >> a & 1 == 1);
            let mut terms = Vec::new();
            let mut push = |line: u8, level: Option<usize>, f: &(dyn Fn(C) -> C + Sync)| -> Result<()> {
                let q = contour_integral(f, contour, adaptive_tol)?;
                terms.push(LoopTerm {
                    line,
                    level,
                    subsets: subsets.clone(),
                    value: q.value,
                    nodes: q.node_count_used,
                });
                Ok(())
            };

            if mask == (1u32 << flat.len()) - 1 {
                let top = aggregate(em, &w, shape.offset(n), n, n);
                let a = if branch == Branch::One { -1.0 } else { -theta };
                push(1, None, &|z| {
                    let e: C = top.iter().map(|(ell, _, w)| w * ratio(l * z, ell, a, 0.0)).sum();
                    phi_m.eval(l * z) * over_s(z) * e
                })?;
            }
            {
                let bottom = aggregate(em, &w, shape.offset(k), k, k);
                let miss = missing_from(k);
                push(2, None, &|z| {
                    let e: C = bottom.iter().map(|(ell, _, w)| w * ratio(l * z, ell, theta - 1.0, -1.0)).sum();
                    phi_p.eval(l * z) * over_s(z) * comp(z, &miss) * e
                })?;
            }
            for j in k + 1..=n {
                if !full_below(j) {
                    continue;
                }
                let pairs = aggregate(em, &w, shape.offset(j), 2 * j - 1, j);
                let miss = missing_from(j);
                push(3, Some(j), &|z| {
                    let lz = l * z;
                    let e: C = pairs
                        .iter()
                        .map(|(up, lo, w)| {
                            let x = match branch {
                                Branch::General => ratio(lz, up, -theta, -1.0) * ratio(lz, lo, theta - 1.0, 0.0),
                                Branch::One => fractions(lz, up, -1.0) - fractions(lz, lo, 0.0),
                            };
                            w * x
                        })
                        .sum();
                    mid_pref * phi_p.eval(lz) * over_s(z) * comp(z, &miss) * e
                })?;
            }
            Ok(terms)
        })
        .collect::<Result<_>>()?;
    let terms: Vec<LoopTerm> = per_tuple.into_iter().flatten().collect();
    let total: C = terms.iter().map(|t| t.value).sum();
    let max_term = terms.iter().map(|t| t.value.norm()).fold(0.0, f64::max);
    Ok(LoopReport { branch, total, residual: total.norm(), max_term, terms })
}

/// The default loop-equation contour: margin 0.25 past [−Nθ/L, (M−θ)/L],
/// semi-minor axis 0.5.
pub fn default_contour(theta: f64, n: usize, m: u32, l: f64) -> ContourSpec {
    ContourSpec::around_segment(-(n as f64) * theta / l, (m as f64 - theta) / l, 0.25, 0.5, 64)
}
