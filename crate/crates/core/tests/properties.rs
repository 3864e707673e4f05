use ermlab_core::class::{star_hull, Class, FunctionClass};
use ermlab_core::complexity::{epsilon_brackets, fixed_point, xi_curve, ComplexityCurve, CurveKind, XiOptions};
use ermlab_core::empirical::{draw_sample, minimize_empirical, MinimizeMode, Sample, SampleRecord};
use ermlab_core::measure::DiscreteMeasure;
use ermlab_core::numeric::{moments_of, tree_merge, Moments};
use ermlab_core::selection::{hypotheses_check, make_nested, oracle_check, select, IMPLICATION_TOL};
use ermlab_core::theorems::ratio_check;
use ermlab_core::{rng, JointAtom, JointDistribution, LossSpec};
use proptest::prelude::*;

fn weights(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, m)
}

fn rows(count: usize, m: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(lo..hi, m), 1..=count)
}

fn curve(values: Vec<f64>) -> ComplexityCurve {
    let k = values.len();
    let grid: Vec<f64> = (1..=k).map(|j| j as f64 / k as f64).collect();
    ComplexityCurve {
        grid,
        stderr: vec![0.0; k],
        empty_levels: vec![false; k],
        values,
        replicates: 2,
        n: 10,
        kind: CurveKind::TrueMeasure,
        sup_bound: 1.0,
    }
}

/// Random binary-label problem on `x` atoms with nested threshold-like classes.
fn nested_problem(px: &[f64], eta: &[f64], eps: Vec<f64>) -> ermlab_core::selection::NestedProblem {
    let xs = px.len();
    let total: f64 = px.iter().sum();
    let mut pairs = Vec::new();
    for x in 0..xs {
        let q = px[x] / total;
        pairs.push(JointAtom { x, y: 1.0, p: q * eta[x] });
        pairs.push(JointAtom {
            x,
            y: 0.0,
            p: q * (1.0 - eta[x]),
        });
    }
    let s: f64 = pairs.iter().map(|a| a.p).sum();
    pairs.iter_mut().for_each(|a| a.p /= s);
    let joint = JointDistribution::new(xs, pairs).unwrap();
    let all: Vec<Vec<f64>> = (0..1usize << xs)
        .map(|b| (0..xs).map(|x| (b >> x & 1) as f64).collect())
        .collect();
    let level = |max_ones: usize| {
        let r: Vec<Vec<f64>> = all
            .iter()
            .filter(|v| v.iter().filter(|&&a| a == 1.0).count() <= max_ones || v.iter().all(|&a| a == 1.0))
            .cloned()
            .collect();
        FunctionClass::from_rows("k", r).unwrap()
    };
    make_nested(vec![level(0), level(1), level(xs)], LossSpec::discrete(&[0.0, 1.0]), joint, eps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalized_measures_sum_to_one(w in weights(7)) {
        let p = DiscreteMeasure::from_weights(&w).unwrap();
        let total: f64 = p.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(p.probs().iter().all(|&q| q >= 0.0));
    }

    #[test]
    fn moments_merge_matches_sequential(v in prop::collection::vec(-5.0f64..5.0, 2..60), cut in 1usize..50) {
        let cut = cut.min(v.len() - 1);
        let whole = moments_of(&v);
        let parts = [moments_of(&v[..cut]), moments_of(&v[cut..])];
        let merged = tree_merge(&parts);
        prop_assert_eq!(merged.count, whole.count);
        prop_assert!((merged.mean - whole.mean).abs() < 1e-12);
        prop_assert!((merged.variance() - whole.variance()).abs() < 1e-9);
        let mut seq = Moments::default();
        v.iter().for_each(|&x| seq.push(x));
        prop_assert!((seq.mean - whole.mean).abs() < 1e-12);
    }

    #[test]
    fn sample_record_round_trip(idx in prop::collection::vec(0usize..6, 1..30), seed in any::<u64>()) {
        let s = Sample::from_indices(6, idx, seed).unwrap();
        let json = serde_json::to_string(&s.to_record()).unwrap();
        let rec: SampleRecord = serde_json::from_str(&json).unwrap();
        let back = Sample::from_record(6, &rec).unwrap();
        prop_assert_eq!(back.indices(), s.indices());
        prop_assert_eq!(back.seed(), seed);
    }

    #[test]
    fn hull_xi_over_r_nonincreasing(w in weights(5), base in rows(4, 5, -0.3, 1.0), seed in 0u64..1000) {
        let p = DiscreteMeasure::from_weights(&w).unwrap();
        let hull: Class = star_hull(FunctionClass::from_rows("h", base).unwrap()).into();
        let b = hull.sup_bound();
        let grid: Vec<f64> = (1..=16).map(|j| b * j as f64 / 16.0).collect();
        let c = xi_curve(&hull, &p, 6, &grid, 8, seed, &XiOptions::default()).unwrap();
        for j in 1..grid.len() {
            if !c.empty_levels[j] {
                prop_assert!(c.values[j] / grid[j] <= c.values[j - 1] / grid[j - 1] + 1e-12);
            }
        }
    }

    #[test]
    fn empty_levels_are_exactly_zero(w in weights(4), base in rows(3, 4, 0.0, 1.0), seed in 0u64..1000) {
        let p = DiscreteMeasure::from_weights(&w).unwrap();
        let top = base.iter().map(|f| f.iter().zip(p.probs()).map(|(a, b)| a * b).sum::<f64>()).fold(0.0, f64::max);
        let hull: Class = star_hull(FunctionClass::from_rows("h", base).unwrap()).into();
        let b = hull.sup_bound();
        prop_assume!(top < b * 0.99 && top > 0.0);
        let grid = [top * 0.5, (top + b) / 2.0, b];
        let c = xi_curve(&hull, &p, 5, &grid, 4, seed, &XiOptions::default()).unwrap();
        prop_assert_eq!(c.values[1], 0.0);
        prop_assert_eq!(c.values[2], 0.0);
    }

    #[test]
    fn fixed_point_monotone_in_factor(v in prop::collection::vec(0.0f64..0.5, 4..30), f1 in 0.05f64..1.0, f2 in 0.05f64..1.0) {
        let c = curve(v);
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let a = fixed_point(&c, lo, 0.0).unwrap();
        let b = fixed_point(&c, hi, 0.0).unwrap();
        prop_assert!(b.r_star <= a.r_star);
    }

    #[test]
    fn brackets_nest(v in prop::collection::vec(0.0f64..1.0, 3..30), e1 in 0.001f64..0.5, e2 in 0.001f64..0.5) {
        let c = curve(v);
        let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = epsilon_brackets(&c, small, 1.0).unwrap();
        let b = epsilon_brackets(&c, large, 1.0).unwrap();
        prop_assert!(b.r_minus <= a.r_minus && a.r_plus <= b.r_plus);
        prop_assert!(0.0 <= a.r_minus && a.r_minus <= a.r_plus && a.r_plus <= 1.0);
    }

    #[test]
    fn approximate_minimizers_are_rho_close(w in weights(5), base in rows(6, 5, -1.0, 1.0), rho in 0.0f64..0.12, seed in 0u64..500) {
        let p = DiscreteMeasure::from_weights(&w).unwrap();
        let n = 9;
        let pn_of = |s: &Sample, f: &[f64]| s.indices().iter().map(|&i| f[i]).sum::<f64>() / n as f64;
        let mut stream = rng::stream(seed, "prop-rho", 0);
        let s = draw_sample(&p, n, seed, &mut stream).unwrap();
        let inf = base.iter().map(|f| pn_of(&s, f)).fold(f64::INFINITY, f64::min);
        let explicit: Class = FunctionClass::from_rows("e", base.clone()).unwrap().into();
        let hull: Class = star_hull(FunctionClass::from_rows("e", base).unwrap()).into();
        for mode in [MinimizeMode::Exact, MinimizeMode::AdversarialLow, MinimizeMode::AdversarialHigh] {
            let r = minimize_empirical(&explicit, &p, &s, rho, mode).unwrap();
            prop_assert!(r.empirical_value <= inf + rho / n as f64 + 1e-12);
            let h = minimize_empirical(&hull, &p, &s, rho, mode).unwrap();
            prop_assert!(h.empirical_value <= inf.min(0.0) + rho / n as f64 + 1e-12);
        }
        let low = minimize_empirical(&hull, &p, &s, rho, MinimizeMode::AdversarialLow).unwrap();
        let high = minimize_empirical(&hull, &p, &s, rho, MinimizeMode::AdversarialHigh).unwrap();
        prop_assert!(low.true_value <= high.true_value + 1e-12);
    }

    #[test]
    fn ratio_check_silent_when_sample_matches_measure(base in rows(5, 4, -1.0, 1.0), eps in 0.01f64..0.9) {
        let p = DiscreteMeasure::uniform(4).unwrap();
        let s = Sample::from_indices(4, vec![0, 1, 2, 3], 0).unwrap();
        let class: Class = FunctionClass::from_rows("r", base).unwrap().into();
        let rep = ratio_check(&class, &p, &s, eps, 0.0, None).unwrap();
        prop_assert!(rep.violations.iter().all(|v| v.pf < 0.0));
    }

    #[test]
    fn oracle_inequality_implication(
        px in weights(3),
        eta in prop::collection::vec(0.05f64..0.95, 3),
        e0 in 0.0f64..0.2, d1 in 0.0f64..0.2, d2 in 0.0f64..0.2,
        seed in 0u64..10_000,
        n in 5usize..80,
    ) {
        let problem = nested_problem(&px, &eta, vec![e0, e0 + d1, e0 + d1 + d2]);
        let mut stream = rng::stream(seed, "prop-implication", 0);
        let s = draw_sample(problem.measure(), n, seed, &mut stream).unwrap();
        let h = hypotheses_check(&problem, &s).unwrap();
        let sel = select(&problem, &s).unwrap();
        if h.both() {
            prop_assert!(oracle_check(&problem, &sel) <= IMPLICATION_TOL);
        }
        for pair in sel.per_class.windows(2) {
            prop_assert!(pair[1].empirical_risk <= pair[0].empirical_risk + 1e-12);
        }
    }

    #[test]
    fn penalized_values_monotone_in_eps(
        px in weights(3),
        eta in prop::collection::vec(0.05f64..0.95, 3),
        e0 in 0.0f64..0.2, bump in 0.0f64..0.3,
        seed in 0u64..10_000,
    ) {
        let base = nested_problem(&px, &eta, vec![e0; 3]);
        let raised = base.clone().with_eps(vec![e0, e0 + bump, e0 + bump]).unwrap();
        let mut stream = rng::stream(seed, "prop-penalty", 0);
        let s = draw_sample(base.measure(), 30, seed, &mut stream).unwrap();
        let a = select(&base, &s).unwrap();
        let b = select(&raised, &s).unwrap();
        for (x, y) in a.per_class.iter().zip(&b.per_class) {
            prop_assert!(x.penalized <= y.penalized + 1e-15);
        }
    }

    #[test]
    fn selection_ignores_duplicate_members(
        px in weights(3),
        eta in prop::collection::vec(0.05f64..0.95, 3),
        seed in 0u64..10_000,
        which in 0usize..3,
    ) {
        let problem = nested_problem(&px, &eta, vec![0.01, 0.02, 0.05]);
        let mut classes = problem.classes().to_vec();
        for k in which..3 {
            let mut rows: Vec<Vec<f64>> = classes[k].members().iter().map(|f| f.values().to_vec()).collect();
            rows.push(rows[rows.len() / 2].clone());
            classes[k] = FunctionClass::from_rows("dup", rows).unwrap();
        }
        let dup = make_nested(classes, problem.loss().clone(), problem.joint().clone(), problem.eps().to_vec()).unwrap();
        let mut stream = rng::stream(seed, "prop-dup", 0);
        let s = draw_sample(problem.measure(), 25, seed, &mut stream).unwrap();
        let a = select(&problem, &s).unwrap();
        let b = select(&dup, &s).unwrap();
        prop_assert_eq!(a.chosen_k, b.chosen_k);
        prop_assert_eq!(a.chosen_risk, b.chosen_risk);
    }
}
