use serde::{Deserialize, Serialize};

/// Real polynomial Σ cₙ xⁿ, lowest degree first.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly { coeffs }
    }

    /// y²/2.
    pub fn quadratic_half() -> Self {
        Poly::new(vec![0.0, 0.0, 0.5])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_c(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        self.coeffs.iter().rev().fold(num_complex::Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(self.coeffs.iter().enumerate().skip(1).map(|(n, &c)| n as f64 * c).collect())
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// x ↦ p(a + b·x).
    pub fn compose_affine(&self, a: f64, b: f64) -> Poly {
        let mut out = vec![0.0; self.coeffs.len().max(1)];
        // Horner in polynomial arithmetic.
        let mut acc: Vec<f64> = vec![0.0];
        for &c in self.coeffs.iter().rev() {
            let mut next = vec![0.0; acc.len() + 1];
            for (n, &v) in acc.iter().enumerate() {
                next[n] += v * a;
                next[n + 1] += v * b;
            }
            next[0] += c;
            acc = next;
        }
        acc.truncate(out.len());
        out[..acc.len()].copy_from_slice(&acc);
        Poly::new(out)
    }

    /// x ↦ p(x) − p(x−1).
    pub fn backward_difference(&self) -> Poly {
        let shifted = self.compose_affine(-1.0, 1.0);
        let n = self.coeffs.len();
        Poly::new((0..n).map(|i| self.coeffs[i] - shifted.coeffs.get(i).copied().unwrap_or(0.0)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_composition() {
        let p = Poly::new(vec![1.0, -2.0, 3.0]);
        let q = p.compose_affine(0.5, -2.0);
        for x in [-1.3, 0.0, 0.7, 4.0] {
            assert!((q.eval(x) - p.eval(0.5 - 2.0 * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn difference() {
        let p = Poly::new(vec![0.3, 1.0, -0.5, 0.25]);
        let d = p.backward_difference();
        for x in [-2.0, 0.1, 3.3] {
            assert!((d.eval(x) - (p.eval(x) - p.eval(x - 1.0))).abs() < 1e-12);
        }
        assert_eq!(Poly::new(vec![0.0, 0.0, 0.5]).derivative().coeffs, vec![0.0, 1.0]);
    }
}
