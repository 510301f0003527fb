use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{contract, Error, Result};

pub const NODE_CAP: usize = 1 << 16;
pub const DEFAULT_TOL: f64 = 1e-10;

/// Closed curve z(t) = center + a·cos t + i·b·sin t, t ∈ [0, 2π).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub center: Complex64,
    pub semi_axis_x: f64,
    pub semi_axis_y: f64,
    /// Starting node count; doubled until converged.
    pub nodes: usize,
    #[serde(default)]
    pub clockwise: bool,
}

impl ContourSpec {
    pub fn circle(center: Complex64, radius: f64, nodes: usize) -> Self {
        Self::ellipse(center, radius, radius, nodes)
    }

    pub fn ellipse(center: Complex64, a: f64, b: f64, nodes: usize) -> Self {
        ContourSpec { center, semi_axis_x: a, semi_axis_y: b, nodes, clockwise: false }
    }

    /// Ellipse around the real segment [lo, hi] with horizontal margin and
    /// the given semi-minor axis.
    pub fn around_segment(lo: f64, hi: f64, margin: f64, semi_minor: f64, nodes: usize) -> Self {
        let c = Complex64::new(0.5 * (lo + hi), 0.0);
        Self::ellipse(c, 0.5 * (hi - lo) + margin, semi_minor, nodes)
    }

    pub fn reversed(mut self) -> Self {
        self.clockwise = !self.clockwise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.semi_axis_x > 0.0 && self.semi_axis_y > 0.0) {
            return contract("contour semi-axes must be positive");
        }
        if self.nodes < 8 || !self.nodes.is_multiple_of(2) {
            return contract("contour node count must be even and at least 8");
        }
        Ok(())
    }

    /// Point and dz/dt at parameter t.
    pub fn point(&self, t: f64) -> (Complex64, Complex64) {
        let (s, c) = t.sin_cos();
        let z = self.center + Complex64::new(self.semi_axis_x * c, self.semi_axis_y * s);
        let dz = Complex64::new(-self.semi_axis_x * s, self.semi_axis_y * c);
        (z, dz)
    }

    /// True if w lies strictly inside the curve.
    pub fn contains(&self, w: Complex64) -> bool {
        let d = w - self.center;
        (d.re / self.semi_axis_x).powi(2) + (d.im / self.semi_axis_y).powi(2) < 1.0
    }

    /// Sample points on the curve, for max-modulus normalizations.
    pub fn sample_points(&self, n: usize) -> Vec<Complex64> {
        (0..n).map(|m| self.point(2.0 * PI * m as f64 / n as f64).0).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub node_count_used: usize,
    pub last_refinement_delta: f64,
}

/// (1/2πi)∮ f(z) dz by the periodic trapezoid rule with node doubling.
pub fn contour_integral<F>(f: F, c: &ContourSpec, adaptive_tol: f64) -> Result<QuadratureResult>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    try_contour_integral(|z| Ok(f(z)), c, adaptive_tol)
}

/// As [`contour_integral`] for integrands that can fail at a node.
pub fn try_contour_integral<F>(f: F, c: &ContourSpec, adaptive_tol: f64) -> Result<QuadratureResult>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    c.validate()?;
    let eval = |t: f64| -> Result<Complex64> {
        let (z, dz) = c.point(t);
        Ok(f(z)? * dz)
    };
    let sweep = |n: usize, start: usize, step: usize| -> Result<Complex64> {
        let vals: Vec<Complex64> = (start..n)
            .step_by(step)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|m| eval(2.0 * PI * m as f64 / n as f64))
            .collect::<Result<_>>()?;
        // Summed in node order so results do not depend on thread count.
        Ok(vals.into_iter().sum())
    };
    let finish = |sum: Complex64, n: usize| {
        let v = sum / (Complex64::i() * n as f64);
        if c.clockwise {
            -v
        } else {
            v
        }
    };

    let mut n = c.nodes;
    let mut sum = sweep(n, 0, 1)?;
    let mut value = finish(sum, n);
    let mut delta = f64::INFINITY;
    loop {
        if 2 * n > NODE_CAP {
            return Err(Error::NonConvergence { nodes: n, delta });
        }
        // The new nodes interleave the old ones.
        sum += sweep(2 * n, 1, 2)?;
        n *= 2;
        let next = finish(sum, n);
        delta = (next - value).norm();
        value = next;
        if delta < adaptive_tol {
            return Ok(QuadratureResult { value, node_count_used: n, last_refinement_delta: delta });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn simple_pole() {
        let r = contour_integral(|z| 1.0 / z, &ContourSpec::circle(c(0.0, 0.0), 1.0, 8), 1e-12).unwrap();
        assert!((r.value - 1.0).norm() < 1e-14);
    }

    #[test]
    fn entire_integrand() {
        let spec = ContourSpec::ellipse(c(0.3, -0.2), 2.0, 0.7, 16);
        let r = contour_integral(|z| z * z, &spec, 1e-12).unwrap();
        assert!(r.value.norm() < 1e-14);
    }

    #[test]
    fn sum_of_residues() {
        let spec = ContourSpec::circle(c(0.0, 0.0), 2.0, 8);
        let r = contour_integral(|z| 1.0 / (z - 0.3) + 2.0 / (z - 0.7), &spec, 1e-12).unwrap();
        assert!((r.value - 3.0).norm() < 1e-12);
    }

    #[test]
    fn orientation() {
        let spec = ContourSpec::circle(c(0.0, 0.0), 2.0, 8);
        let f = |z: Complex64| (z - 0.5).inv() * z.exp();
        let a = contour_integral(f, &spec, 1e-12).unwrap().value;
        let b = contour_integral(f, &spec.reversed(), 1e-12).unwrap().value;
        assert!((a + b).norm() < 1e-13);
        assert!((a - 0.5f64.exp()).norm() < 1e-12);
    }

    #[test]
    fn geometric_convergence() {
        // Pole at 1.5 outside a unit circle: error decays like (1/1.5)^n.
        let f = |z: Complex64| (z - 1.5).inv();
        let base = ContourSpec::circle(c(0.0, 0.0), 1.0, 8);
        let err = |n: usize| {
            let spec = ContourSpec { nodes: n, ..base };
            let (mut s, pts) = (Complex64::new(0.0, 0.0), n);
            for m in 0..pts {
                let (z, dz) = spec.point(2.0 * PI * m as f64 / pts as f64);
                s += f(z) * dz;
            }
            (s / (Complex64::i() * pts as f64)).norm()
        };
        for n in [8, 16, 32] {
            assert!(err(2 * n) * 10.0 <= err(n), "n={n}");
        }
    }

    #[test]
    fn cap_reports_delta() {
        // A pole on the contour never converges.
        let spec = ContourSpec::circle(c(0.0, 0.0), 1.0, 8);
        let e = contour_integral(|z| (z - Complex64::new(1.0 + 1e-9, 0.0)).inv(), &spec, 1e-14);
        assert!(matches!(e, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn rejects_bad_spec() {
        let spec = ContourSpec::circle(c(0.0, 0.0), 1.0, 6);
        assert!(contour_integral(|z| z, &spec, 1e-10).is_err());
    }
}
