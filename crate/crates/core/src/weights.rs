//! Per-level weight functions w_j and the analytic pairs Φ± they induce.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::analytic::AnalyticFn;
use crate::numerics::{log_gamma, Poly};
use crate::{Error, Result};

/// Γ(σ·x + shift)^power with σ = −1 when `reflect`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaFactor {
    pub reflect: bool,
    pub shift: f64,
    pub power: i32,
}

pub type LogFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A weight function on one level's lattice {λ − iθ}.
#[derive(Clone)]
pub enum WeightFn {
    Unit,
    /// qˣ.
    Geometric {
        q: f64,
    },
    /// exp(p(x)).
    ExpPolynomial(Poly),
    /// qˣ · Π Γ(±x + c)^e.
    GammaRatio {
        q: f64,
        factors: Vec<GammaFactor>,
    },
    /// Log-values keyed by lattice site (λ, i); x = λ − iθ.
    Table(BTreeMap<(u32, usize), Complex64>),
    /// Opaque log-weight. Accepted, but nothing analytic can be derived.
    Custom(LogFn),
}

impl fmt::Debug for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFn::Unit => write!(f, "Unit"),
            WeightFn::Geometric { q } => write!(f, "Geometric({q})"),
            WeightFn::ExpPolynomial(p) => write!(f, "ExpPolynomial({:?})", p.coeffs),
            WeightFn::GammaRatio { q, factors } => write!(f, "GammaRatio({q}, {factors:?})"),
            WeightFn::Table(t) => write!(f, "Table({} sites)", t.len()),
            WeightFn::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl WeightFn {
    /// qˣ / (Γ(x + Nθ + 1) · Γ(M + 1 − θ − x)); the top-level weight whose
    /// Φ± vanish at −Nθ and M + 1 − θ.
    pub fn krawtchouk(q: f64, theta: f64, n: usize, m: u32) -> Self {
        WeightFn::GammaRatio {
            q,
            factors: vec![
                GammaFactor { reflect: false, shift: n as f64 * theta + 1.0, power: -1 },
                GammaFactor { reflect: true, shift: m as f64 + 1.0 - theta, power: -1 },
            ],
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, WeightFn::Unit)
    }

    /// ln w at the lattice site (λ, i) of a level, as a complex log.
    pub fn log_at(&self, lam: u32, i: usize, theta: f64) -> Result<Complex64> {
        let x = lam as f64 - i as f64 * theta;
        let re = |v: f64| Complex64::new(v, 0.0);
        Ok(match self {
            WeightFn::Unit => re(0.0),
            WeightFn::Geometric { q } => re(x * q.ln()),
            WeightFn::ExpPolynomial(p) => re(p.eval(x)),
            WeightFn::GammaRatio { q, factors } => {
                let mut s = x * q.ln();
                for f in factors {
                    let arg = if f.reflect { f.shift - x } else { x + f.shift };
                    s += f.power as f64 * log_gamma(arg)?;
                }
                re(s)
            }
            WeightFn::Table(t) => *t
                .get(&(lam, i))
                .ok_or_else(|| Error::Contract(format!("weight table has no entry for site ({lam}, {i})")))?,
            WeightFn::Custom(f) => f(x),
        })
    }

    /// (Φ⁺, Φ⁻) with w(x)/w(x−1) = Φ⁺(x)/Φ⁻(x), both entire. None for
    /// tables and opaque callables.
    pub fn phi_pair(&self) -> Option<(AnalyticFn, AnalyticFn)> {
        let one = AnalyticFn::one();
        match self {
            WeightFn::Unit => Some((one.clone(), one)),
            WeightFn::Geometric { q } => Some((AnalyticFn::constant(*q), one)),
            WeightFn::ExpPolynomial(p) => {
                let d = p.backward_difference();
                let exponent = d.coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
                Some((AnalyticFn::ExpPolynomial { scale: Complex64::new(1.0, 0.0), exponent }, one))
            }
            WeightFn::GammaRatio { q, factors } => {
                // Γ(x+c)/Γ(x−1+c) = x + c − 1 and Γ(c−x)/Γ(c−x+1) = 1/(c − x).
                let (mut num, mut den) = (Vec::new(), Vec::new());
                let mut scale_num = *q;
                let mut scale_den = 1.0;
                for f in factors {
                    let (root, sign, exp) =
                        if f.reflect { (f.shift, -1.0, -f.power) } else { (1.0 - f.shift, 1.0, f.power) };
                    for _ in 0..exp.unsigned_abs() {
                        if exp > 0 {
                            num.push(Complex64::new(root, 0.0));
                            scale_num *= sign;
                        } else {
                            den.push(Complex64::new(root, 0.0));
                            scale_den *= sign;
                        }
                    }
                }
                Some((
                    AnalyticFn::LinearProduct { scale: Complex64::new(scale_num, 0.0), roots: num },
                    AnalyticFn::LinearProduct { scale: Complex64::new(scale_den, 0.0), roots: den },
                ))
            }
            WeightFn::Table(_) | WeightFn::Custom(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn krawtchouk_phi() {
        let (theta, n, m) = (0.7, 3usize, 5u32);
        let w = WeightFn::krawtchouk(0.6, theta, n, m);
        let (pp, pm) = w.phi_pair().unwrap();
        for lam in 1..=m {
            for i in 1..=n {
                let x = lam as f64 - i as f64 * theta;
                let ratio = (w.log_at(lam, i, theta).unwrap() - w.log_at(lam - 1, i, theta).unwrap()).exp();
                let want = pp.eval_re(x) / pm.eval_re(x);
                assert!((ratio - want).norm() < 1e-12 * want.norm());
            }
        }
        let x_plus = m as f64 + 1.0 - theta;
        assert!(pp.eval_re(x_plus).norm() < 1e-15);
        assert!((pp.eval_re(0.0).re - 0.6 * x_plus).abs() < 1e-14);
        assert!(pm.eval_re(-(n as f64) * theta).norm() < 1e-15);
    }

    #[test]
    fn exp_poly_phi() {
        let w = WeightFn::ExpPolynomial(Poly::new(vec![0.1, -0.3, 0.2]));
        let (pp, pm) = w.phi_pair().unwrap();
        let theta = 1.3;
        for lam in 1..4u32 {
            let x = lam as f64 - theta;
            let r = (w.log_at(lam, 1, theta).unwrap() - w.log_at(lam - 1, 1, theta).unwrap()).exp();
            assert!((r - pp.eval_re(x) / pm.eval_re(x)).norm() < 1e-13);
        }
    }

    #[test]
    fn table_lookup() {
        let mut t = BTreeMap::new();
        t.insert((2, 1), Complex64::new(0.5, 0.1));
        let w = WeightFn::Table(t);
        assert_eq!(w.log_at(2, 1, 0.5).unwrap(), Complex64::new(0.5, 0.1));
        assert!(w.log_at(1, 1, 0.5).is_err());
        assert!(w.phi_pair().is_none());
    }
}
