//! Statistical check of the continuous multi-level loop equation.
//!
//! The cumulants are linear in their first slot and the other slots do not
//! depend on z, so the contour integral moves inside: every sample gets its
//! own integrals, and the cumulants are taken of those.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::sampler::{batch_stderr, empirical_cumulant, BATCHES};
use super::{ContinuousSpec, SampleBatch};
use crate::numerics::{ContourSpec, NODE_CAP};
use crate::{contract, Error, Result};

type C = Complex64;

/// Cap on Σm_r.
pub const MAX_POINTS: usize = 2;
/// Cap on N, so per-node Stieltjes sums stay on the stack.
pub const MAX_LEVELS: usize = 15;

/// Ellipse with margin 1 past [a−, a+] and semi-minor axis 1.5.
pub fn default_contour(a_minus: f64, a_plus: f64) -> ContourSpec {
    ContourSpec::around_segment(a_minus, a_plus, 1.0, 1.5, 32)
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuousLoopReport {
    pub total: C,
    pub residual: f64,
    pub stderr: f64,
    pub samples: usize,
    pub nodes: usize,
    pub passed: bool,
}

struct Integrand<'a> {
    spec: &'a ContinuousSpec,
    points: Vec<(usize, C)>,
    v: C,
}

impl Integrand<'_> {
    /// Trapezoid sums of 𝔖(z)/2 and 𝒢ʳ(z)/(z − v_f)², each times
    /// (z−a−)(z−a+)/(z−v), for sample s.
    fn integrate(&self, b: &SampleBatch, s: usize, nodes: &Nodes) -> Vec<C> {
        let (t, n, k) = (self.spec.theta, self.spec.n, self.spec.k);
        let mut acc = vec![C::new(0.0, 0.0); self.points.len() + 1];
        for node in &nodes.points {
            let z = node.z;
            let mut g = [C::new(0.0, 0.0); MAX_LEVELS + 1];
            let mut dg = [C::new(0.0, 0.0); MAX_LEVELS + 1];
            for j in k..=n {
                for &y in b.level(s, j) {
                    let r = (z - y).inv();
                    g[j] += r;
                    dg[j] -= r * r;
                }
            }
            let mut sf = -2.0 * n as f64 * t * node.dv * g[n]
                + t * dg[n]
                + t * g[n] * g[n]
                + (t - 2.0) * dg[k]
                + t * g[k] * g[k];
            for j in k + 1..=n {
                let d = g[j] - g[j - 1];
                sf += -(t + 1.0) * dg[j] + (1.0 - t) * d * d + (1.0 - t) * dg[j - 1];
            }
            acc[0] += node.w * sf * 0.5;
            for (q, &(r, _)) in self.points.iter().enumerate() {
                acc[q + 1] += node.w * g[r] * node.inv_sq[q];
            }
        }
        acc.into_iter().map(|a| a * nodes.scale).collect()
    }
}

struct Node {
    z: C,
    /// h(z)·dz/dt.
    w: C,
    dv: C,
    /// 1/(z − v_f)² per point.
    inv_sq: Vec<C>,
}

/// Equally spaced nodes and the factor turning Σ into ∮/(2πi).
struct Nodes {
    points: Vec<Node>,
    scale: C,
}

impl Nodes {
    fn new(f: &Integrand, c: &ContourSpec, n: usize) -> Self {
        let points = (0..n)
            .map(|m| {
                let (z, dz) = c.point(2.0 * PI * m as f64 / n as f64);
                let h = (z - f.spec.a_minus) * (z - f.spec.a_plus) / (z - f.v);
                let inv_sq = f.points.iter().map(|&(_, vf)| ((z - vf) * (z - vf)).inv()).collect();
                Node { z, w: h * dz, dv: f.spec.potential.deriv(z), inv_sq }
            })
            .collect();
        let sign = if c.clockwise { -1.0 } else { 1.0 };
        Nodes { points, scale: sign / (C::i() * n as f64) }
    }
}

/// Per-sample contour integrals [Q₀, Q_(r,f)…] and the node count that
/// resolved them to `tol` on a probe subset.
pub fn loop_transforms(
    spec: &ContinuousSpec,
    batch: &SampleBatch,
    points: &[Vec<C>],
    v: C,
    contour: &ContourSpec,
    tol: f64,
) -> Result<(Vec<Vec<C>>, usize)> {
    let f = integrand(spec, batch, points, v, contour)?;
    let probe: Vec<usize> = (0..batch.len()).step_by((batch.len() / 256).max(1)).collect();
    let mut nodes = contour.nodes;
    let mut prev: Vec<Vec<C>> = probe.iter().map(|&s| f.integrate(batch, s, &Nodes::new(&f, contour, nodes))).collect();
    loop {
        if 2 * nodes > NODE_CAP {
            return Err(Error::NonConvergence { nodes, delta: f64::NAN });
        }
        nodes *= 2;
        let grid = Nodes::new(&f, contour, nodes);
        let next: Vec<Vec<C>> = probe.iter().map(|&s| f.integrate(batch, s, &grid)).collect();
        let delta = prev
            .iter()
            .zip(&next)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm() / (1.0 + y.norm())))
            .fold(0.0, f64::max);
        prev = next;
        if delta < tol {
            break;
        }
    }
    let grid = Nodes::new(&f, contour, nodes);
    let per: Vec<Vec<C>> = (0..batch.len()).into_par_iter().map(|s| f.integrate(batch, s, &grid)).collect();
    // Transpose to one column per quantity.
    let cols = (0..f.points.len() + 1).map(|q| per.iter().map(|r| r[q]).collect()).collect();
    Ok((cols, nodes))
}

fn integrand<'a>(
    spec: &'a ContinuousSpec,
    batch: &SampleBatch,
    points: &[Vec<C>],
    v: C,
    contour: &ContourSpec,
) -> Result<Integrand<'a>> {
    let (n, k) = (spec.n, spec.k);
    if batch.n != n || batch.k != k || batch.theta != spec.theta {
        return contract("batch was drawn from a different spec");
    }
    if n > MAX_LEVELS {
        return Err(Error::Unsupported(format!("at most {MAX_LEVELS} levels")));
    }
    if points.len() != n + 1 - k {
        return contract("need one point list per level k..N");
    }
    let flat: Vec<(usize, C)> =
        points.iter().enumerate().flat_map(|(r, vs)| vs.iter().map(move |&vf| (r + k, vf))).collect();
    if flat.len() > MAX_POINTS {
        return contract(format!("at most {MAX_POINTS} observation points"));
    }
    contour.validate()?;
    if !contour.contains(C::new(spec.a_minus, 0.0)) || !contour.contains(C::new(spec.a_plus, 0.0)) {
        return contract("contour must enclose [a−, a+]");
    }
    if contour.contains(v) || flat.iter().any(|&(_, vf)| contour.contains(vf)) {
        return contract("v and every observation point must lie outside the contour");
    }
    if let Some(margin) = spec.potential.margin() {
        let far = contour.sample_points(256).into_iter().any(|z| {
            let x = z.re.clamp(spec.a_minus, spec.a_plus);
            (z - x).norm() > margin
        });
        if far {
            return contract("contour leaves the region where V is known to be holomorphic");
        }
    }
    Ok(Integrand { spec, points: flat, v })
}

/// The loop-equation residual |∮…| from the batch alone, with its
/// batch-means standard error.
pub fn verify_continuous_loop_equation(
    spec: &ContinuousSpec,
    points: &[Vec<C>],
    v: C,
    contour: &ContourSpec,
    batch: &SampleBatch,
    quad_tol: f64,
) -> Result<ContinuousLoopReport> {
    let (cols, nodes) = loop_transforms(spec, batch, points, v, contour, quad_tol)?;
    let flat: Vec<(usize, C)> =
        points.iter().enumerate().flat_map(|(r, vs)| vs.iter().map(move |&vf| (r + spec.k, vf))).collect();
    let xs: Vec<Vec<C>> =
        flat.iter().map(|&(r, vf)| (0..batch.len()).map(|s| batch.stieltjes(s, r, vf)).collect()).collect();
    let total_on = |lo: usize, hi: usize| -> Result<C> {
        let x: Vec<&[C]> = xs.iter().map(|x| &x[lo..hi]).collect();
        let mut vars = vec![&cols[0][lo..hi]];
        vars.extend(&x);
        let mut t = empirical_cumulant(&vars)?;
        for q in 0..flat.len() {
            let mut vars = vec![&cols[q + 1][lo..hi]];
            vars.extend(x.iter().enumerate().filter(|&(p, _)| p != q).map(|(_, v)| v));
            t += empirical_cumulant(&vars)?;
        }
        Ok(t)
    };
    let n = batch.len();
    if n < 2 * BATCHES {
        return contract(format!("need at least {} samples", 2 * BATCHES));
    }
    let total = total_on(0, n)?;
    let blocks: Vec<C> = (0..BATCHES)
        .into_par_iter()
        .map(|b| total_on(b * n / BATCHES, (b + 1) * n / BATCHES))
        .collect::<Result<_>>()?;
    let stderr = batch_stderr(&blocks);
    let residual = total.norm();
    Ok(ContinuousLoopReport { total, residual, stderr, samples: n, nodes, passed: residual < 4.0 * stderr })
}
