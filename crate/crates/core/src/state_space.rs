//! Interlaced θ-shifted signatures and their lexicographic enumeration.

use serde::{Deserialize, Serialize};

use crate::{contract, Result};

/// Weakly decreasing parts in [0, cap].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    pub parts: Vec<u32>,
    pub cap: u32,
}

impl Signature {
    pub fn new(parts: Vec<u32>, cap: u32) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return contract(format!("signature {parts:?} is not weakly decreasing"));
        }
        if parts.iter().any(|&p| p > cap) {
            return contract(format!("signature {parts:?} exceeds cap {cap}"));
        }
        Ok(Signature { parts, cap })
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// ℓᵢ = λᵢ − iθ, 1-indexed.
    pub fn shifted(&self, theta: f64) -> ShiftedLevel {
        ShiftedLevel { theta, signature: self.clone() }
    }
}

/// A signature viewed through the θ-shift; positions are strictly decreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedLevel {
    pub theta: f64,
    pub signature: Signature,
}

impl ShiftedLevel {
    pub fn positions(&self) -> Vec<f64> {
        self.signature.parts.iter().enumerate().map(|(i, &l)| l as f64 - (i + 1) as f64 * self.theta).collect()
    }
}

/// λ ⪰ μ: λ₁ ≥ μ₁ ≥ λ₂ ≥ … ≥ μ_{n−1} ≥ λ_n.
pub fn interlaces(upper: &[u32], lower: &[u32]) -> Result<bool> {
    if upper.len() != lower.len() + 1 {
        return contract(format!("interlacing needs |upper| = |lower| + 1, got {} and {}", upper.len(), lower.len()));
    }
    Ok(lower.iter().enumerate().all(|(i, &m)| upper[i] >= m && m >= upper[i + 1]))
}

/// Levels k..=n of a pattern; level j has j parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub n: usize,
    pub k: usize,
}

impl Shape {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k < 1 || k > n {
            return contract(format!("need 1 ≤ k ≤ N, got N={n}, k={k}"));
        }
        Ok(Shape { n, k })
    }

    /// Flat offset of level j; levels are stored top (N) first.
    #[inline]
    pub fn offset(&self, j: usize) -> usize {
        debug_assert!(self.k <= j && j <= self.n);
        // Σ_{m=j+1}^{n} m
        (self.n * (self.n + 1) - j * (j + 1)) / 2
    }

    /// Total number of parts across levels.
    pub fn len(&self) -> usize {
        self.offset(self.k) + self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Levels from top to bottom.
    pub fn levels(&self) -> impl Iterator<Item = usize> {
        (self.k..=self.n).rev()
    }

    /// Positions (level, index) in storage order, 1-indexed.
    pub fn sites(&self) -> Vec<(usize, usize)> {
        self.levels().flat_map(|j| (1..=j).map(move |i| (j, i))).collect()
    }
}

/// One element of the state space: an interlaced stack λᴺ ⪰ … ⪰ λᵏ.
#[derive(Clone, Debug, PartialEq)]
pub struct CornersPattern {
    pub theta: f64,
    pub shape: Shape,
    pub m: u32,
    /// Concatenation λᴺ, λᴺ⁻¹, …, λᵏ.
    pub parts: Vec<u32>,
}

impl CornersPattern {
    pub fn from_levels(theta: f64, m: u32, levels: Vec<Vec<u32>>) -> Result<Self> {
        let n = levels.first().map_or(0, |l| l.len());
        let k = n + 1 - levels.len();
        let shape = Shape::new(n, k)?;
        for (d, l) in levels.iter().enumerate() {
            if l.len() != n - d {
                return contract("level j must have j parts, listed from the top");
            }
        }
        let p = CornersPattern { theta, shape, m, parts: levels.concat() };
        if !p.is_valid() {
            return contract(format!("{:?} is not an interlaced stack bounded by {m}", p.parts));
        }
        Ok(p)
    }

    pub fn from_parts(theta: f64, shape: Shape, m: u32, parts: Vec<u32>) -> Self {
        debug_assert_eq!(parts.len(), shape.len());
        CornersPattern { theta, shape, m, parts }
    }

    #[inline]
    pub fn level(&self, j: usize) -> &[u32] {
        let o = self.shape.offset(j);
        &self.parts[o..o + j]
    }

    /// λᵢʲ, 1-indexed.
    #[inline]
    pub fn lam(&self, j: usize, i: usize) -> u32 {
        self.parts[self.shape.offset(j) + i - 1]
    }

    /// ℓᵢʲ = λᵢʲ − iθ.
    #[inline]
    pub fn ell(&self, j: usize, i: usize) -> f64 {
        self.lam(j, i) as f64 - i as f64 * self.theta
    }

    pub fn signature(&self, j: usize) -> Signature {
        Signature { parts: self.level(j).to_vec(), cap: self.m }
    }

    pub fn is_valid(&self) -> bool {
        is_valid_stack(self.shape, self.m, &self.parts)
    }

    /// Copy with λᵢʲ replaced; None if the result leaves the state space.
    pub fn with_site(&self, j: usize, i: usize, value: i64) -> Option<Self> {
        if value < 0 || value > self.m as i64 {
            return None;
        }
        let mut q = self.clone();
        q.parts[self.shape.offset(j) + i - 1] = value as u32;
        q.is_valid().then_some(q)
    }
}

pub fn is_valid_stack(shape: Shape, m: u32, parts: &[u32]) -> bool {
    if parts.len() != shape.len() {
        return false;
    }
    let top = &parts[..shape.n];
    if top.iter().any(|&p| p > m) || top.windows(2).any(|w| w[0] < w[1]) {
        return false;
    }
    (shape.k..shape.n).all(|j| {
        let up = &parts[shape.offset(j + 1)..shape.offset(j + 1) + j + 1];
        let lo = &parts[shape.offset(j)..shape.offset(j) + j];
        lo.iter().enumerate().all(|(i, &mu)| up[i] >= mu && mu >= up[i + 1])
    })
}

/// Odometer over the flat storage. Every coordinate's range depends only on
/// coordinates to its left, so "increment the rightmost coordinate that can
/// move, reset everything after it" walks the concatenation in lex order.
#[derive(Clone, Debug)]
pub struct RawPatterns {
    m: u32,
    // For each flat position: (left neighbour on the top row or upper-left
    // parent, upper-right parent), both as flat indices.
    deps: Vec<Dep>,
    cur: Vec<u32>,
    started: bool,
    done: bool,
}

#[derive(Clone, Copy, Debug)]
enum Dep {
    /// First part of the top row.
    TopFirst,
    /// Top-row part bounded by its left neighbour.
    Top(usize),
    /// Lower-level part bounded by λᵢʲ⁺¹ above and λᵢ₊₁ʲ⁺¹ below.
    Lower(usize, usize),
}

impl RawPatterns {
    pub fn new(shape: Shape, m: u32) -> Self {
        let mut deps = Vec::with_capacity(shape.len());
        for j in shape.levels() {
            for i in 1..=j {
                deps.push(if j == shape.n {
                    if i == 1 {
                        Dep::TopFirst
                    } else {
                        Dep::Top(i - 2)
                    }
                } else {
                    let up = shape.offset(j + 1) + i - 1;
                    Dep::Lower(up, up + 1)
                });
            }
        }
        let cur = vec![0; shape.len()];
        RawPatterns { m, deps, cur, started: false, done: false }
    }

    #[inline]
    fn bounds(&self, pos: usize) -> (u32, u32) {
        match self.deps[pos] {
            Dep::TopFirst => (0, self.m),
            Dep::Top(l) => (0, self.cur[l]),
            Dep::Lower(a, b) => (self.cur[b], self.cur[a]),
        }
    }

    fn reset_from(&mut self, start: usize) {
        for pos in start..self.cur.len() {
            self.cur[pos] = self.bounds(pos).0;
        }
    }

    /// Advance and borrow the next pattern's parts.
    pub fn next_raw(&mut self) -> Option<&[u32]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.reset_from(0);
            return Some(&self.cur);
        }
        for pos in (0..self.cur.len()).rev() {
            let (_, hi) = self.bounds(pos);
            if self.cur[pos] < hi {
                self.cur[pos] += 1;
                self.reset_from(pos + 1);
                return Some(&self.cur);
            }
        }
        self.done = true;
        None
    }
}

/// Streaming enumeration of the state space in lexicographic order of
/// (λᴺ, λᴺ⁻¹, …, λᵏ).
pub struct PatternIter {
    raw: RawPatterns,
    theta: f64,
    shape: Shape,
    m: u32,
}

impl Iterator for PatternIter {
    type Item = CornersPattern;

    fn next(&mut self) -> Option<CornersPattern> {
        let parts = self.raw.next_raw()?.to_vec();
        Some(CornersPattern { theta: self.theta, shape: self.shape, m: self.m, parts })
    }
}

pub fn enumerate_patterns(theta: f64, n: usize, k: usize, m: u32) -> Result<PatternIter> {
    let shape = Shape::new(n, k)?;
    Ok(PatternIter { raw: RawPatterns::new(shape, m), theta, shape, m })
}

/// Λᴹₙ in lexicographic order.
pub fn enumerate_signatures(n: usize, m: u32) -> Result<impl Iterator<Item = Signature>> {
    let shape = Shape::new(n, n)?;
    let mut raw = RawPatterns::new(shape, m);
    Ok(std::iter::from_fn(move || raw.next_raw().map(|p| Signature { parts: p.to_vec(), cap: m })))
}

pub fn count_patterns(n: usize, k: usize, m: u32) -> Result<u64> {
    let mut raw = RawPatterns::new(Shape::new(n, k)?, m);
    let mut c = 0;
    while raw.next_raw().is_some() {
        c += 1;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    // Nested loops over each level's Λ, keeping interlacing stacks.
    fn oracle_count(n: usize, k: usize, m: u32) -> u64 {
        fn rec(upper: &[u32], j: usize, k: usize, m: u32) -> u64 {
            if j < k {
                return 1;
            }
            enumerate_signatures(j, m)
                .unwrap()
                .filter(|s| interlaces(upper, &s.parts).unwrap())
                .map(|s| rec(&s.parts, j - 1, k, m))
                .sum()
        }
        enumerate_signatures(n, m).unwrap().map(|top| rec(&top.parts, n - 1, k, m)).sum()
    }

    #[test]
    fn signature_counts() {
        let all: Vec<_> = enumerate_signatures(1, 1).unwrap().map(|s| s.parts).collect();
        assert_eq!(all, vec![vec![0], vec![1]]);
        assert_eq!(enumerate_signatures(2, 2).unwrap().count(), 6);
        assert_eq!(enumerate_signatures(4, 6).unwrap().count(), 210);
        for n in 1..=4 {
            for m in 0..=5 {
                let c = enumerate_signatures(n, m).unwrap().count() as u64;
                assert_eq!(c, binom(m as u64 + n as u64, n as u64));
            }
        }
    }

    #[test]
    fn lexicographic_and_unique() {
        let v: Vec<Vec<u32>> = enumerate_patterns(0.5, 3, 1, 3).unwrap().map(|p| p.parts).collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pattern_counts_match_oracle() {
        assert_eq!(count_patterns(2, 1, 2).unwrap(), 10);
        for n in 1..=3 {
            for k in 1..=n {
                for m in 0..=4 {
                    assert_eq!(count_patterns(n, k, m).unwrap(), oracle_count(n, k, m), "N={n} k={k} M={m}");
                }
            }
        }
    }

    #[test]
    fn top_only_equals_signatures() {
        let a: Vec<_> = enumerate_patterns(0.7, 3, 3, 3).unwrap().map(|p| p.parts).collect();
        let b: Vec<_> = enumerate_signatures(3, 3).unwrap().map(|s| s.parts).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn interlacing_examples() {
        assert!(interlaces(&[2, 0], &[1]).unwrap());
        assert!(!interlaces(&[2, 0], &[3]).unwrap());
        assert!(interlaces(&[1, 1], &[1]).unwrap());
        assert!(interlaces(&[1, 1], &[1, 1]).is_err());
    }

    #[test]
    fn shifted_positions_strict() {
        for p in enumerate_patterns(0.3, 3, 1, 3).unwrap() {
            assert!(p.is_valid());
            for j in 1..=3 {
                let pos = p.signature(j).shifted(0.3).positions();
                assert!(pos.windows(2).all(|w| w[0] > w[1]));
            }
        }
    }

    #[test]
    fn with_site_rejects_breaks() {
        let p = CornersPattern::from_levels(0.5, 2, vec![vec![2, 0], vec![1]]).unwrap();
        assert!(p.with_site(1, 1, 3).is_none());
        assert!(p.with_site(2, 2, 2).is_none());
        assert!(p.with_site(1, 1, 0).is_some());
    }
}
