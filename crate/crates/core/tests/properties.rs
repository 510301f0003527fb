use proptest::prelude::*;

use corners_core::continuous::{sample, ContinuousSpec, Potential};
use corners_core::cumulants::{
    cumulant_from_moment_table, cumulant_from_moments, moment_from_cumulant_table, subset_moments,
};
use corners_core::jack::{jack_principal, skew_jack_one, Partition};
use corners_core::measure::{marginal_measure, total_variation};
use corners_core::numerics::{contour_integral, log_gamma};
use corners_core::ratios::single_site_ratio;
use corners_core::state_space::{count_patterns, enumerate_patterns, enumerate_signatures, interlaces};
use corners_core::{Complex64, ContourSpec, EnumeratedMeasure, MeasureSpec, WeightFn};

type C = Complex64;

fn small_dims() -> impl Strategy<Value = (usize, usize, u32)> {
    (1usize..=3).prop_flat_map(|n| (Just(n), 1..=n, 1u32..=4))
}

fn weakly_decreasing(max_len: usize, max_part: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..=max_part, 0..=max_len).prop_map(|mut v| {
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_gamma_recurrence(x in 0.05f64..150.0) {
        let lhs = log_gamma(x + 1.0).unwrap();
        let rhs = x.ln() + log_gamma(x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs().max(1.0));
    }

    #[test]
    fn orientation_negates(re in -1.0f64..1.0, im in -1.0f64..1.0, r in 1.5f64..3.0) {
        let a = C::new(re, im);
        let f = move |z: C| z.exp() / (z - a);
        let c = ContourSpec::circle(C::new(0.0, 0.0), r, 16);
        let fwd = contour_integral(f, &c, 1e-12).unwrap().value;
        let back = contour_integral(f, &c.reversed(), 1e-12).unwrap().value;
        prop_assert!((fwd + back).norm() < 1e-12);
        prop_assert!((fwd - a.exp()).norm() < 1e-10);
    }

    #[test]
    fn trapezoid_converges_geometrically(re in -0.5f64..0.5, im in -0.5f64..0.5) {
        // exp(z)/(z − a) on |z| = 2 with |a| < 1: analytic in an annulus.
        let a = C::new(re, im);
        let err = |n: usize| -> f64 {
            let s: C = (0..n)
                .map(|m| {
                    let z = C::from_polar(2.0, 2.0 * std::f64::consts::PI * m as f64 / n as f64);
                    z.exp() / (z - a) * z
                })
                .sum::<C>() / n as f64;
            (s - a.exp()).norm()
        };
        for n in [4, 8, 16] {
            let (e1, e2) = (err(n), err(2 * n));
            prop_assert!(e2 * 10.0 <= e1 || e2 < 1e-14, "n={n}: {e1} → {e2}");
        }
    }

    #[test]
    fn enumerated_patterns_interlace((n, k, m) in small_dims(), theta in 0.2f64..2.5) {
        let mut count = 0u64;
        for p in enumerate_patterns(theta, n, k, m).unwrap() {
            for j in k..n {
                prop_assert!(interlaces(p.level(j + 1), p.level(j)).unwrap());
            }
            for j in k..=n {
                let pos = p.signature(j).shifted(theta).positions();
                prop_assert!(pos.windows(2).all(|w| w[0] > w[1]));
            }
            count += 1;
        }
        prop_assert_eq!(count, count_patterns(n, k, m).unwrap());
        // Same total when grouped by top signature.
        let by_top: u64 = enumerate_signatures(n, m)
            .unwrap()
            .map(|s| enumerate_patterns(theta, n, k, m).unwrap().filter(|p| p.level(n) == s.parts.as_slice()).count() as u64)
            .sum();
        prop_assert_eq!(by_top, count);
    }

    #[test]
    fn projection_for_any_theta(n in 2usize..=3, m in 1u32..=4, theta in 0.3f64..2.0, q in 0.2f64..0.9) {
        let spec = MeasureSpec::top_weighted(theta, n, 1, m, WeightFn::Geometric { q }).unwrap();
        for lvl in 2..=n {
            let direct = EnumeratedMeasure::new(&spec.with_bottom(lvl).unwrap()).unwrap().marginal(lvl).unwrap();
            prop_assert!(total_variation(&marginal_measure(&spec, lvl).unwrap(), &direct) < 1e-12);
        }
    }

    #[test]
    fn detailed_balance((n, k, m) in small_dims(), theta in 0.3f64..2.0, seed in 0usize..1000) {
        let w = (k..=n).map(|j| WeightFn::Geometric { q: 0.3 + 0.2 * j as f64 }).collect();
        let spec = MeasureSpec::new(theta, n, k, m, w).unwrap();
        let em = EnumeratedMeasure::new(&spec).unwrap();
        let p = em.pattern(seed % em.len());
        for j in k..=n {
            for i in 1..=j {
                for dir in [-1i8, 1] {
                    let Some(q) = p.with_site(j, i, p.lam(j, i) as i64 + dir as i64).filter(|q| q.is_valid()) else {
                        continue;
                    };
                    let r = single_site_ratio(&spec, &p, j, i, dir).unwrap().re;
                    let (pp, pq) = (em.prob_of(&p.parts).re, em.prob_of(&q.parts).re);
                    let flow = pp * r.min(1.0);
                    let back = pq * (1.0 / r).min(1.0);
                    prop_assert!((flow - back).abs() <= 1e-12 * pp.max(pq));
                }
            }
        }
    }

    #[test]
    fn weyl_dimension_at_theta_one(parts in weakly_decreasing(4, 4)) {
        let n = 4;
        let lam = Partition::new(parts.clone()).unwrap();
        let mut full = parts.clone();
        full.resize(n, 0);
        let mut weyl = 1.0;
        for i in 0..n {
            for j in i + 1..n {
                weyl *= (full[i] as f64 - full[j] as f64 + (j - i) as f64) / (j - i) as f64;
            }
        }
        let j = jack_principal(&lam, n, 1.0).unwrap();
        prop_assert!((j - weyl).abs() <= 1e-12 * weyl);
    }

    #[test]
    fn skew_vanishes_off_interlacing(lam in weakly_decreasing(3, 4), mu in weakly_decreasing(3, 4), theta in 0.3f64..2.0) {
        let mut l = lam.clone();
        l.resize(3, 0);
        let mut u = mu.clone();
        u.resize(2, 0);
        let fits = mu.iter().filter(|&&x| x > 0).count() <= 2 && interlaces(&l, &u).unwrap();
        let v = skew_jack_one(&Partition::new(lam).unwrap(), &Partition::new(mu).unwrap(), 3, theta).unwrap();
        if fits {
            prop_assert!(v > 0.0);
        } else {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn cumulants_permutation_invariant(
        states in 3usize..12,
        raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 48),
        perm in Just((0..4).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let probs = vec![C::new(1.0 / states as f64, 0.0); states];
        let vars: Vec<Vec<C>> = (0..4).map(|v| (0..states).map(|s| C::new(raw[v * 12 + s].0, raw[v * 12 + s].1)).collect()).collect();
        let a: Vec<&[C]> = vars.iter().map(Vec::as_slice).collect();
        let b: Vec<&[C]> = perm.iter().map(|&i| vars[i].as_slice()).collect();
        let (ka, kb) = (cumulant_from_moments(&probs, &a).unwrap(), cumulant_from_moments(&probs, &b).unwrap());
        prop_assert!((ka - kb).norm() < 1e-14);
    }

    #[test]
    fn moment_cumulant_maps_are_inverse(table in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 16)) {
        // Any table indexed by subsets of 4 variables with value 1 at ∅.
        let mut t: Vec<C> = table.iter().map(|&(a, b)| C::new(a, b)).collect();
        t[0] = C::new(1.0, 0.0);
        let k: Vec<C> = (0..16).map(|mask| cumulant_from_moment_table(&t, mask)).collect();
        let mut k0 = t.clone();
        k0[0] = C::new(0.0, 0.0);
        let m: Vec<C> = (0..16).map(|mask| moment_from_cumulant_table(&k0, mask)).collect();
        for mask in 1..16u32 {
            prop_assert!((moment_from_cumulant_table(&k, mask) - t[mask as usize]).norm() < 1e-12);
            let mut m1 = m.clone();
            m1[0] = C::new(1.0, 0.0);
            prop_assert!((cumulant_from_moment_table(&m1, mask) - t[mask as usize]).norm() < 1e-12);
        }
    }

    #[test]
    fn subset_moments_match_direct(states in 2usize..8, xs in prop::collection::vec(-1.0f64..1.0, 24)) {
        let probs = vec![C::new(1.0 / states as f64, 0.0); states];
        let vars: Vec<Vec<C>> = (0..3).map(|v| (0..states).map(|s| C::new(xs[v * 8 + s], 0.0)).collect()).collect();
        let refs: Vec<&[C]> = vars.iter().map(Vec::as_slice).collect();
        let mom = subset_moments(&probs, &refs).unwrap();
        for mask in 0..8usize {
            let direct: C = (0..states)
                .map(|s| probs[s] * (0..3).filter(|v| mask >> v & 1 == 1).map(|v| vars[v][s]).product::<C>())
                .sum();
            prop_assert!((mom[mask] - direct).norm() < 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn stieltjes_conjugate_symmetry(theta in 0.4f64..2.0, seed in 0u64..1000, re in -4.0f64..4.0, im in 0.05f64..3.0) {
        let spec = ContinuousSpec::new(theta, 3, 1, -2.0, 2.0, Potential::quadratic()).unwrap();
        let b = sample(&spec, 64, 20, seed);
        let z = C::new(re, im);
        for s in 0..b.len() {
            for j in 1..=3 {
                prop_assert_eq!(b.stieltjes(s, j, z.conj()), b.stieltjes(s, j, z).conj());
            }
        }
    }
}
