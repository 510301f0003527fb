use num_complex::Complex64;

use crate::{contract, Result};

pub const DEFAULT_STEP: f64 = 1e-3;

/// ∂ᵐf/∂t_{a₁}…∂t_{aₘ} at t = 0, where the a's are the axes with order 1.
///
/// Tensor product of central differences, then one Richardson step between
/// h and h/2.
pub fn mixed_partial<F>(f: F, order_per_axis: &[u8], step: f64) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64,
{
    if order_per_axis.iter().any(|&o| o > 1) {
        return contract("mixed_partial supports order 0 or 1 per axis");
    }
    let axes: Vec<usize> = (0..order_per_axis.len()).filter(|&a| order_per_axis[a] == 1).collect();
    if axes.len() > 4 {
        return contract("mixed_partial total order is capped at 4");
    }
    if !(step > 0.0) {
        return contract("step must be positive");
    }
    let dim = order_per_axis.len();
    let central = |h: f64| {
        let m = axes.len();
        let mut t = vec![0.0; dim];
        let mut acc = Complex64::new(0.0, 0.0);
        for mask in 0..(1usize << m) {
            let mut sign = 1.0;
            for (b, &a) in axes.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    t[a] = -h;
                    sign = -sign;
                } else {
                    t[a] = h;
                }
            }
            acc += f(&t) * sign;
        }
        acc / (2.0 * h).powi(m as i32)
    };
    if axes.is_empty() {
        return Ok(f(&vec![0.0; dim]));
    }
    let coarse = central(step);
    let fine = central(step / 2.0);
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear() {
        let d = mixed_partial(|t| Complex64::new(t[0] * t[1], 0.0), &[1, 1], DEFAULT_STEP).unwrap();
        assert!((d - 1.0).norm() < 1e-12);
    }

    #[test]
    fn exponential() {
        let d = mixed_partial(|t| Complex64::new((2.0 * t[0]).exp(), 0.0), &[1], 1e-3).unwrap();
        assert!((d - 2.0).norm() < 1e-8);
    }

    #[test]
    fn sin_cos() {
        let d = mixed_partial(|t| Complex64::new(t[0].sin() * t[1].cos(), 0.0), &[1, 1], 1e-3).unwrap();
        assert!(d.norm() < 1e-8);
    }

    #[test]
    fn skipped_axis() {
        let f = |t: &[f64]| Complex64::new((t[0] + 3.0 * t[1] + t[2]).exp(), 0.0);
        let d = mixed_partial(f, &[0, 1, 1], 1e-3).unwrap();
        assert!((d - 3.0).norm() < 1e-8);
    }

    #[test]
    fn order_limits() {
        let f = |_: &[f64]| Complex64::new(1.0, 0.0);
        assert!(mixed_partial(f, &[2], 1e-3).is_err());
        assert!(mixed_partial(f, &[1, 1, 1, 1, 1], 1e-3).is_err());
    }
}
