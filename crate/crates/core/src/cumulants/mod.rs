//! Joint cumulants over finite (possibly complex) measures, Stieltjes
//! observables, and the discrete multi-level loop equations.

mod loop_eq;

pub use loop_eq::{
    default_contour, deformed_expectation, derivative_cumulant, verify_discrete_loop_equation, LoopReport, LoopTerm,
    ObservableSet,
};

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::state_space::CornersPattern;
use crate::{contract, Result};

type C = Complex64;

/// Largest argument count for partition sums.
pub const MAX_VARS: usize = 6;

/// A random variable on an enumerated measure: one value per state.
pub type RandomVariable = Vec<C>;

/// Set partitions of {0..n−1}, from restricted-growth strings. Blocks are
/// bitmasks.
pub fn set_partitions(n: usize) -> &'static [Vec<u32>] {
    static CACHE: OnceLock<Vec<Vec<Vec<u32>>>> = OnceLock::new();
    let all = CACHE.get_or_init(|| (0..=MAX_VARS + 1).map(rgs_partitions).collect());
    &all[n]
}

fn rgs_partitions(n: usize) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut a = vec![0usize; n];
    loop {
        let blocks = a.iter().copied().max().unwrap() + 1;
        let mut masks = vec![0u32; blocks];
        for (i, &b) in a.iter().enumerate() {
            masks[b] |= 1 << i;
        }
        out.push(masks);
        // Next restricted-growth string: a[i] ≤ 1 + max(a[..i]).
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            let m = a[..i].iter().copied().max().unwrap();
            if a[i] <= m {
                a[i] += 1;
                for x in &mut a[i + 1..] {
                    *x = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// (−1)^{r−1}(r−1)!
fn mobius(r: usize) -> f64 {
    let f: f64 = (1..r).map(|x| x as f64).product();
    if r % 2 == 1 {
        f
    } else {
        -f
    }
}

fn check_arity(n: usize) -> Result<()> {
    if n > MAX_VARS {
        return contract(format!("at most {MAX_VARS} variables in a joint cumulant, got {n}"));
    }
    Ok(())
}

/// E[Π_{a∈mask} X_a].
fn mask_moment(probs: &[C], vars: &[&[C]], mask: u32) -> C {
    probs
        .iter()
        .enumerate()
        .map(|(s, &p)| {
            let mut v = p;
            for (a, x) in vars.iter().enumerate() {
                if mask >> a & 1 == 1 {
                    v *= x[s];
                }
            }
            v
        })
        .sum()
}

/// Moments of every subset, indexed by bitmask.
pub fn subset_moments(probs: &[C], vars: &[&[C]]) -> Result<Vec<C>> {
    check_arity(vars.len())?;
    Ok((0..1u32 << vars.len()).map(|m| mask_moment(probs, vars, m)).collect())
}

/// Cumulant of the subset `mask` from a table of subset moments.
pub fn cumulant_from_moment_table(moments: &[C], mask: u32) -> C {
    let idx: Vec<usize> = (0..32).filter(|&a| mask >> a & 1 == 1).collect();
    let mut acc = C::new(0.0, 0.0);
    for part in set_partitions(idx.len()) {
        let mut term = C::new(mobius(part.len()), 0.0);
        for &b in part {
            term *= moments[lift(b, &idx) as usize];
        }
        acc += term;
    }
    acc
}

/// Moment of the subset `mask` from a table of subset cumulants.
pub fn moment_from_cumulant_table(cumulants: &[C], mask: u32) -> C {
    let idx: Vec<usize> = (0..32).filter(|&a| mask >> a & 1 == 1).collect();
    set_partitions(idx.len())
        .iter()
        .map(|part| part.iter().map(|&b| cumulants[lift(b, &idx) as usize]).product::<C>())
        .sum()
}

/// Local block mask over positions of `idx` → global mask.
fn lift(b: u32, idx: &[usize]) -> u32 {
    idx.iter().enumerate().filter(|(p, _)| b >> p & 1 == 1).fold(0, |m, (_, &a)| m | 1 << a)
}

/// M(X₁, …, Xₙ) by the partition sum over moments.
pub fn cumulant_from_moments(probs: &[C], vars: &[&[C]]) -> Result<C> {
    let mom = subset_moments(probs, vars)?;
    Ok(cumulant_from_moment_table(&mom, (1u32 << vars.len()) - 1))
}

/// E[X₁⋯Xₙ] rebuilt from the cumulants of all sub-families.
pub fn moment_from_cumulants(probs: &[C], vars: &[&[C]]) -> Result<C> {
    let mom = subset_moments(probs, vars)?;
    let cum: Vec<C> = (0..mom.len() as u32).map(|m| cumulant_from_moment_table(&mom, m)).collect();
    Ok(moment_from_cumulant_table(&cum, (1u32 << vars.len()) - 1))
}

/// |M(XY, X₁..Xₙ) − M(X, Y, X₁..Xₙ) − Σ_I M(X; X_I)·M(Y; X_{Iᶜ})|.
pub fn verify_product_formula(probs: &[C], x: &[C], y: &[C], others: &[&[C]]) -> Result<f64> {
    check_arity(others.len() + 2)?;
    let xy: Vec<C> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let with = |first: &[&[C]], sub: &[&[C]]| {
        let mut v: Vec<&[C]> = first.to_vec();
        v.extend_from_slice(sub);
        cumulant_from_moments(probs, &v)
    };
    let lhs = with(&[&xy], others)?;
    let mut rhs = with(&[x, y], others)?;
    let n = others.len();
    for mask in 0..1u32 << n {
        let pick = |inside: bool| -> Vec<&[C]> {
            (0..n).filter(|&a| (mask >> a & 1 == 1) == inside).map(|a| others[a]).collect()
        };
        rhs += with(&[x], &pick(true))? * with(&[y], &pick(false))?;
    }
    Ok((lhs - rhs).norm())
}

/// K with M(ξ; X₁..Xₙ) = E[ξ·K] for every ξ: the cumulant is linear in
/// its first slot, so one kernel serves all observables ξ.
pub fn cumulant_kernel(probs: &[C], vars: &[&[C]]) -> Result<RandomVariable> {
    let n = vars.len();
    check_arity(n + 1)?;
    let mom = subset_moments(probs, vars)?;
    // Slot n is ξ. Group partitions by the companions of ξ in its block.
    let full = 1u32 << n;
    let mut coef = vec![C::new(0.0, 0.0); full as usize];
    for part in set_partitions(n + 1) {
        let mut c = C::new(mobius(part.len()), 0.0);
        let mut own = 0;
        for &b in part {
            if b & full != 0 {
                own = b & !full;
            } else {
                c *= mom[b as usize];
            }
        }
        coef[own as usize] += c;
    }
    Ok((0..probs.len())
        .map(|s| {
            coef.iter()
                .enumerate()
                .filter(|(_, c)| c.norm() != 0.0)
                .map(|(mask, &c)| {
                    let mut v = c;
                    for (a, x) in vars.iter().enumerate() {
                        if mask >> a & 1 == 1 {
                            v *= x[s];
                        }
                    }
                    v
                })
                .sum()
        })
        .collect())
}

/// G(z) = Σᵢ 1/(z − ℓᵢⁿ/L) on level n.
pub fn stieltjes(p: &CornersPattern, level: usize, l: f64, z: C) -> C {
    (1..=level).map(|i| (z - p.ell(level, i) / l).inv()).sum()
}

/// Same, from raw level parts.
pub fn stieltjes_parts(lam: &[u32], theta: f64, l: f64, z: C) -> C {
    lam.iter().enumerate().map(|(q, &x)| (z - (x as f64 - (q + 1) as f64 * theta) / l).inv()).sum()
}
