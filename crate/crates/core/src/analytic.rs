//! Closed-form entire functions used as φ's and Φ±.

use std::sync::Arc;

use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub enum AnalyticFn {
    Constant(Complex64),
    /// Σ cₙ zⁿ.
    Polynomial(Vec<Complex64>),
    /// scale · exp(Σ cₙ zⁿ).
    ExpPolynomial {
        scale: Complex64,
        exponent: Vec<Complex64>,
    },
    /// scale · Π (z − rᵢ).
    LinearProduct {
        scale: Complex64,
        roots: Vec<Complex64>,
    },
    Product(Vec<AnalyticFn>),
    /// z ↦ f(z + shift).
    Shifted(Arc<AnalyticFn>, Complex64),
}

fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

impl AnalyticFn {
    pub fn one() -> Self {
        AnalyticFn::Constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: f64) -> Self {
        AnalyticFn::Constant(Complex64::new(c, 0.0))
    }

    /// scale · (z − root).
    pub fn linear(scale: f64, root: f64) -> Self {
        AnalyticFn::LinearProduct { scale: Complex64::new(scale, 0.0), roots: vec![Complex64::new(root, 0.0)] }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            AnalyticFn::Constant(c) => *c,
            AnalyticFn::Polynomial(c) => horner(c, z),
            AnalyticFn::ExpPolynomial { scale, exponent } => scale * horner(exponent, z).exp(),
            AnalyticFn::LinearProduct { scale, roots } => roots.iter().fold(*scale, |acc, r| acc * (z - r)),
            AnalyticFn::Product(fs) => fs.iter().fold(Complex64::new(1.0, 0.0), |acc, f| acc * f.eval(z)),
            AnalyticFn::Shifted(f, s) => f.eval(z + s),
        }
    }

    pub fn eval_re(&self, x: f64) -> Complex64 {
        self.eval(Complex64::new(x, 0.0))
    }

    pub fn shifted(self, s: f64) -> Self {
        if s == 0.0 {
            self
        } else {
            AnalyticFn::Shifted(Arc::new(self), Complex64::new(s, 0.0))
        }
    }

    pub fn times(self, other: AnalyticFn) -> Self {
        match (self, other) {
            (AnalyticFn::Constant(a), AnalyticFn::Constant(b)) => AnalyticFn::Constant(a * b),
            (AnalyticFn::Constant(a), f) | (f, AnalyticFn::Constant(a)) if a == Complex64::new(1.0, 0.0) => f,
            (AnalyticFn::Product(mut v), f) => {
                v.push(f);
                AnalyticFn::Product(v)
            }
            (a, b) => AnalyticFn::Product(vec![a, b]),
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        AnalyticFn::constant(c).times(self)
    }
}
