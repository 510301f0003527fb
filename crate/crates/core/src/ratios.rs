//! Closed-form ratios P(ℓ̃)/P(ℓ) for unit shifts of one or several particles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::measure::MeasureSpec;
use rayon::prelude::*;

use crate::measure::log_weight;
use crate::state_space::{enumerate_patterns, is_valid_stack, CornersPattern};
use crate::{contract, Error, Result};

/// A string of particles at levels j₂..=j₁ moved together by one unit.
/// Horizontal: index i on every level, all at the same position s.
/// Diagonal: index i + (j − j₂) on level j, at s − (j − j₂)θ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Move {
    Horizontal { i: usize, j1: usize, j2: usize },
    Diagonal { i: usize, j1: usize, j2: usize },
}

impl Move {
    fn sites(&self) -> impl Iterator<Item = (usize, usize)> {
        let (i, j1, j2, diag) = match *self {
            Move::Horizontal { i, j1, j2 } => (i, j1, j2, false),
            Move::Diagonal { i, j1, j2 } => (i, j1, j2, true),
        };
        (j2..=j1).map(move |j| (j, if diag { i + j - j2 } else { i }))
    }

    fn bounds(&self) -> (usize, usize, usize) {
        match *self {
            Move::Horizontal { i, j1, j2 } | Move::Diagonal { i, j1, j2 } => (i, j1, j2),
        }
    }
}

fn check_move(p: &CornersPattern, mv: Move) -> Result<()> {
    let (i, j1, j2) = mv.bounds();
    let (n, k) = (p.shape.n, p.shape.k);
    if !(j1 <= n && j2 <= j1 && j2 >= k.max(i) && i >= 1) {
        return contract(format!("move {mv:?} out of range for N={n}, k={k}"));
    }
    // Both string conditions reduce to equal λ along the string.
    let lam0 = p.lam(j2, i);
    if mv.sites().any(|(j, q)| p.lam(j, q) != lam0) {
        return contract(format!("move {mv:?}: particles do not form the required string"));
    }
    Ok(())
}

/// ℓ̃ obtained by moving the string by `dir` (±1).
pub fn apply_move(p: &CornersPattern, mv: Move, dir: i8) -> Result<CornersPattern> {
    check_move(p, mv)?;
    let mut parts = p.parts.clone();
    for (j, q) in mv.sites() {
        let idx = p.shape.offset(j) + q - 1;
        let v = parts[idx] as i64 + dir as i64;
        if v < 0 {
            return Err(Error::RejectedMove);
        }
        parts[idx] = v as u32;
    }
    if !is_valid_stack(p.shape, p.m, &parts) {
        return Err(Error::RejectedMove);
    }
    Ok(CornersPattern::from_parts(p.theta, p.shape, p.m, parts))
}

struct Ctx<'a> {
    spec: &'a MeasureSpec,
    p: &'a CornersPattern,
}

impl Ctx<'_> {
    fn l(&self, j: usize, q: usize) -> f64 {
        self.p.ell(j, q)
    }

    /// Π_{p ∈ 1..=len, p ≠ skip} (s − ℓᵖ + a)/(s − ℓᵖ + b) on level j.
    fn prod(&self, j: usize, skip: Option<usize>, s: f64, a: f64, b: f64) -> f64 {
        (1..=j).filter(|&q| Some(q) != skip).map(|q| (s - self.l(j, q) + a) / (s - self.l(j, q) + b)).product()
    }

    fn wrat(&self, j: usize, q: usize) -> Result<Complex64> {
        let lam = self.p.lam(j, q);
        Ok((self.spec.log_w(j, lam - 1, q)? - self.spec.log_w(j, lam, q)?).exp())
    }
}

fn down_ratio(spec: &MeasureSpec, p: &CornersPattern, mv: Move) -> Result<Complex64> {
    let c = Ctx { spec, p };
    let th = spec.theta;
    let (n, k) = (spec.n, spec.k);
    let (i, j1, j2) = mv.bounds();
    let mut w = Complex64::new(1.0, 0.0);
    for (j, q) in mv.sites() {
        w *= c.wrat(j, q)?;
    }
    let r = match mv {
        Move::Horizontal { .. } => {
            let s = c.l(j2, i);
            match (j1 == n, j2 == k) {
                (false, false) => {
                    c.prod(j1, Some(i), s, th - 1.0, 0.0)
                        * c.prod(j2, Some(i), s, -1.0, -th)
                        * c.prod(j2 - 1, None, s, 0.0, th - 1.0)
                        * c.prod(j1 + 1, None, s, -th, -1.0)
                }
                (true, false) => {
                    c.prod(n, Some(i), s, -th, 0.0)
                        * c.prod(j2, Some(i), s, -1.0, -th)
                        * c.prod(j2 - 1, None, s, 0.0, th - 1.0)
                }
                (false, true) => {
                    c.prod(j1, Some(i), s, th - 1.0, 0.0)
                        * c.prod(j1 + 1, None, s, -th, -1.0)
                        * c.prod(k, Some(i), s, -1.0, th - 1.0)
                }
                (true, true) => c.prod(n, Some(i), s, -th, 0.0) * c.prod(k, Some(i), s, -1.0, th - 1.0),
            }
        }
        Move::Diagonal { .. } => {
            let s = c.l(j2, i);
            let d = (j1 - j2) as f64 * th;
            let top = i + j1 - j2;
            match (j1 == n, j2 == k) {
                (false, false) => {
                    c.prod(j1, Some(top), s, -d - 1.0, -d - th)
                        * c.prod(j2, Some(i), s, th - 1.0, 0.0)
                        * c.prod(j2 - 1, None, s, 0.0, th - 1.0)
                        * c.prod(j1 + 1, None, s, -d - th, -d - 1.0)
                }
                (true, false) => {
                    c.prod(j2, Some(i), s, th - 1.0, 0.0)
                        * c.prod(n, Some(top), s, -d - 1.0, -d + th - 1.0)
                        * c.prod(j2 - 1, None, s, 0.0, th - 1.0)
                }
                (false, true) => {
                    c.prod(j1 + 1, None, s, -d - th, -d - 1.0)
                        * c.prod(j1, Some(top), s, -d - 1.0, -d - th)
                        * c.prod(k, Some(i), s, -th, 0.0)
                }
                (true, true) => c.prod(n, Some(top), s, -d - 1.0, -d + th - 1.0) * c.prod(k, Some(i), s, -th, 0.0),
            }
        }
    };
    Ok(w * r)
}

/// P(ℓ̃)/P(ℓ) for a string move, dir = −1 or +1.
pub fn shift_ratio(spec: &MeasureSpec, p: &CornersPattern, mv: Move, dir: i8) -> Result<Complex64> {
    check_dims(spec, p)?;
    let moved = apply_move(p, mv, dir)?;
    match dir {
        -1 => down_ratio(spec, p, mv),
        1 => Ok(down_ratio(spec, &moved, mv)?.inv()),
        _ => contract("direction must be ±1"),
    }
}

fn check_dims(spec: &MeasureSpec, p: &CornersPattern) -> Result<()> {
    if p.shape != spec.shape() || p.m != spec.m {
        return contract("pattern dimensions do not match the measure");
    }
    Ok(())
}

fn single_down(spec: &MeasureSpec, p: &CornersPattern, j: usize, i: usize) -> Result<Complex64> {
    let c = Ctx { spec, p };
    let th = spec.theta;
    let (n, k) = (spec.n, spec.k);
    let s = c.l(j, i);
    let mut r = Complex64::new(1.0, 0.0);
    let lower = |len: usize, skip: usize, a: f64, b: f64, a2: f64, b2: f64| -> f64 {
        (1..=len)
            .filter(|&q| q != skip)
            .map(|q| {
                let x = s - c.l(j, q);
                if q < skip {
                    (x + a) / (x + b)
                } else {
                    (x + a2) / (x + b2)
                }
            })
            .product()
    };
    if j == n {
        r *= lower(n, i, -1.0, th - 1.0, -th, 0.0) * c.wrat(n, i)?;
    }
    if j == k {
        r *= lower(k, i, -th, 0.0, -1.0, th - 1.0);
    }
    if j < n {
        r *= lower(j, i, -1.0, -th, th - 1.0, 0.0) * c.prod(j + 1, None, s, -th, -1.0) * c.wrat(j, i)?;
    }
    if j > k {
        r *= lower(j, i, th - 1.0, 0.0, -1.0, -th) * c.prod(j - 1, None, s, 0.0, th - 1.0);
    }
    Ok(r)
}

/// P(ℓ̃)/P(ℓ) for ℓᵢʲ → ℓᵢʲ + dir.
pub fn single_site_ratio(spec: &MeasureSpec, p: &CornersPattern, j: usize, i: usize, dir: i8) -> Result<Complex64> {
    check_dims(spec, p)?;
    if j < spec.k || j > spec.n || i == 0 || i > j {
        return contract(format!("site ({j},{i}) outside the pattern"));
    }
    let mv = Move::Horizontal { i, j1: j, j2: j };
    let moved = apply_move(p, mv, dir)?;
    match dir {
        -1 => single_down(spec, p, j, i),
        1 => Ok(single_down(spec, &moved, j, i)?.inv()),
        _ => contract("direction must be ±1"),
    }
}

/// Every string move (both kinds, both directions) that is admissible at p.
pub fn admissible_moves(p: &CornersPattern) -> Vec<(Move, i8)> {
    let (n, k) = (p.shape.n, p.shape.k);
    let mut out = Vec::new();
    for j2 in k..=n {
        for j1 in j2..=n {
            for i in 1..=j2 {
                for mv in [Move::Horizontal { i, j1, j2 }, Move::Diagonal { i, j1, j2 }] {
                    if j1 == j2 && matches!(mv, Move::Diagonal { .. }) {
                        continue;
                    }
                    for dir in [-1i8, 1] {
                        if apply_move(p, mv, dir).is_ok() {
                            out.push((mv, dir));
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    pub string_moves: usize,
    pub single_site_moves: usize,
    /// max |closed form − quotient| / |quotient|.
    pub max_rel_err: f64,
    pub worst: Option<(Vec<u32>, String)>,
}

/// Every admissible string move and single-site move of every pattern,
/// closed form against the direct weight quotient.
pub fn verify_ratios(spec: &MeasureSpec) -> Result<RatioReport> {
    let pats: Vec<CornersPattern> = enumerate_patterns(spec.theta, spec.n, spec.k, spec.m)?.collect();
    let res: Vec<(usize, usize, f64, Option<(Vec<u32>, String)>)> = pats
        .par_iter()
        .map(|p| -> Result<_> {
            let lw = log_weight(spec, p)?.value().ln();
            let quotient =
                |q: &CornersPattern| -> Result<Complex64> { Ok((log_weight(spec, q)?.value().ln() - lw).exp()) };
            let (mut strings, mut singles, mut worst, mut at) = (0, 0, 0.0f64, None);
            let mut record = |r: Complex64, d: Complex64, what: String| {
                let e = (r - d).norm() / d.norm();
                if e > worst || e.is_nan() {
                    worst = if e.is_nan() { f64::INFINITY } else { e };
                    at = Some((p.parts.clone(), what));
                }
            };
            for (mv, dir) in admissible_moves(p) {
                let r = shift_ratio(spec, p, mv, dir)?;
                record(r, quotient(&apply_move(p, mv, dir)?)?, format!("{mv:?} dir {dir}"));
                strings += 1;
            }
            for (j, i) in p.shape.sites() {
                for dir in [-1i8, 1] {
                    match single_site_ratio(spec, p, j, i, dir) {
                        Ok(r) => {
                            let q = apply_move(p, Move::Horizontal { i, j1: j, j2: j }, dir)?;
                            record(r, quotient(&q)?, format!("site ({j},{i}) dir {dir}"));
                            singles += 1;
                        }
                        Err(Error::RejectedMove) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok((strings, singles, worst, at))
        })
        .collect::<Result<_>>()?;
    let mut rep = RatioReport { string_moves: 0, single_site_moves: 0, max_rel_err: 0.0, worst: None };
    for (a, b, e, at) in res {
        rep.string_moves += a;
        rep.single_site_moves += b;
        if e > rep.max_rel_err {
            rep.max_rel_err = e;
            rep.worst = at;
        }
    }
    Ok(rep)
}
