//! Results checked against independent brute-force computations.

use ermlab_core::class::{star_hull, Class, FunctionClass, SubClass};
use ermlab_core::complexity::{empirical_xi_curve, epsilon_threshold, fixed_point, xi_curve, XiOptions};
use ermlab_core::empirical::{
    draw_sample, minimize_empirical, rademacher_average, sup_deviation, MinimizeMode, RademacherMode, Sample,
};
use ermlab_core::measure::DiscreteMeasure;
use ermlab_core::numeric::GridSpec;
use ermlab_core::scenarios::build_gap_class;
use ermlab_core::selection::{hypotheses_check, make_nested, select};
use ermlab_core::theorems::concentration_profile;
use ermlab_core::{bernstein_certificate, rng, JointAtom, JointDistribution, LossSpec};
use rand::Rng;

fn dot(f: &[f64], p: &[f64]) -> f64 {
    f.iter().zip(p).map(|(a, b)| a * b).sum()
}

fn sample_mean(f: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| f[i]).sum::<f64>() / idx.len() as f64
}

/// Every index sequence of length `n` over `m` atoms with its probability.
fn all_samples(p: &[f64], n: usize) -> Vec<(Vec<usize>, f64)> {
    let m = p.len();
    (0..m.pow(n as u32))
        .map(|code| {
            let mut c = code;
            let idx: Vec<usize> = (0..n)
                .map(|_| {
                    let i = c % m;
                    c /= m;
                    i
                })
                .collect();
            let w = idx.iter().map(|&i| p[i]).product();
            (idx, w)
        })
        .collect()
}

fn random_rows(stream: &mut impl Rng, count: usize, m: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..m).map(|_| stream.random_range(lo..hi)).collect())
        .collect()
}

#[test]
fn xi_explicit_two_member_full_enumeration() {
    let probs = [0.25, 0.25, 0.3, 0.2];
    let rows = vec![vec![0.0, 1.0, 0.2, 0.6], vec![0.5, 0.0, 0.5, 0.5]];
    let pf: Vec<f64> = rows.iter().map(|f| dot(f, &probs)).collect();
    let grid = [0.2, pf[0].min(pf[1]), pf[0].max(pf[1]), 0.9];
    let mut exact = [0.0; 4];
    for (idx, w) in all_samples(&probs, 3) {
        for (j, &r) in grid.iter().enumerate() {
            let best = rows
                .iter()
                .zip(&pf)
                .filter(|(_, &m)| (m - r).abs() <= 0.05 * r + 1e-12)
                .map(|(f, &m)| m - sample_mean(f, &idx))
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
            exact[j] += w * best.unwrap_or(0.0);
        }
    }
    let p = DiscreteMeasure::from_probs(probs.to_vec()).unwrap();
    let class: Class = FunctionClass::from_rows("two", rows).unwrap().into();
    let curve = xi_curve(&class, &p, 3, &grid, 20_000, 7, &XiOptions::default()).unwrap();
    for j in 0..4 {
        let tol = (3.0 * curve.stderr[j]).max(0.01);
        assert!((curve.values[j] - exact[j]).abs() <= tol, "level {j}: {} vs {}", curve.values[j], exact[j]);
    }
    assert_eq!(curve.values[3], 0.0);
    assert!(curve.empty_levels[3]);
}

#[test]
fn hull_xi_matches_materialized_scalings() {
    let mut stream = rng::stream(3, "oracle-hull", 0);
    let probs = [0.5, 0.3, 0.2];
    let rows = random_rows(&mut stream, 4, 3, -0.2, 1.0);
    let pf: Vec<f64> = rows.iter().map(|f| dot(f, &probs)).collect();
    let b = rows.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
    let grid = GridSpec::log(0.02, b, 12).levels().unwrap();
    let mut exact = vec![0.0; grid.len()];
    for (idx, w) in all_samples(&probs, 2) {
        for (j, &r) in grid.iter().enumerate() {
            let mut best: Option<f64> = None;
            for (f, &m) in rows.iter().zip(&pf) {
                if m >= r {
                    let g: Vec<f64> = f.iter().map(|v| v * r / m).collect();
                    let v = dot(&g, &probs) - sample_mean(&g, &idx);
                    best = Some(best.map_or(v, |a| a.max(v)));
                }
            }
            exact[j] += w * best.unwrap_or(0.0);
        }
    }
    let p = DiscreteMeasure::from_probs(probs.to_vec()).unwrap();
    let hull: Class = star_hull(FunctionClass::from_rows("h", rows).unwrap()).into();
    let curve = xi_curve(&hull, &p, 2, &grid, 20_000, 11, &XiOptions::default()).unwrap();
    for j in 0..grid.len() {
        let tol = (3.0 * curve.stderr[j]).max(0.005);
        assert!((curve.values[j] - exact[j]).abs() <= tol, "level {j}: {} vs {}", curve.values[j], exact[j]);
    }
}

#[test]
fn gap_oracle_matches_enumerated_hull() {
    let spec = build_gap_class(2, Some(16), Some(1)).unwrap();
    let oracle_class = spec.class();
    let base = spec.enumerate_base().unwrap();
    assert_eq!(base.len(), 1821);
    let explicit: Class = star_hull(base).into();
    let p = spec.measure();

    let grid = GridSpec::log(1.0 / 8.0 / 16.0, 1.0, 40).levels().unwrap();
    let a = xi_curve(&oracle_class, p, 2, &grid, 300, 5, &XiOptions::default()).unwrap();
    let b = xi_curve(&explicit, p, 2, &grid, 300, 5, &XiOptions::default()).unwrap();
    for j in 0..grid.len() {
        assert!((a.values[j] - b.values[j]).abs() < 1e-12, "level {}", grid[j]);
    }
    assert_eq!(a.empty_levels, b.empty_levels);

    for i in 0..16 {
        for k in 0..16 {
            let s = Sample::from_indices(16, vec![i, k], 0).unwrap();
            for mode in [MinimizeMode::Exact, MinimizeMode::AdversarialLow, MinimizeMode::AdversarialHigh] {
                let x = minimize_empirical(&oracle_class, p, &s, 0.1, mode).unwrap();
                let y = minimize_empirical(&explicit, p, &s, 0.1, mode).unwrap();
                assert!((x.true_value - y.true_value).abs() < 1e-12, "{i},{k} {mode:?}");
                assert!((x.empirical_value - y.empirical_value).abs() < 1e-12);
            }
            let x = sup_deviation(&oracle_class, p, &s).unwrap();
            let y = sup_deviation(&explicit, p, &s).unwrap();
            assert!((x.signed - y.signed).abs() < 1e-12 && (x.absolute - y.absolute).abs() < 1e-12);
        }
    }
    let ca = bernstein_certificate(&oracle_class, p, 1.0).unwrap();
    let cb = bernstein_certificate(&explicit, p, 1.0).unwrap();
    assert_eq!(ca.constant, cb.constant);
    assert_eq!(ca.constant, 2.0);
}

#[test]
fn explicit_minimizers_match_brute_force() {
    let mut stream = rng::stream(9, "oracle-min", 0);
    for trial in 0..40 {
        let m = 5;
        let rows = random_rows(&mut stream, 6, m, -1.0, 1.0);
        let weights: Vec<f64> = (0..m).map(|_| stream.random_range(0.1..1.0)).collect();
        let p = DiscreteMeasure::from_weights(&weights).unwrap();
        let n = 8;
        let mut rs = rng::stream(9, "oracle-min-sample", trial);
        let s = draw_sample(&p, n, trial, &mut rs).unwrap();
        let pn: Vec<f64> = rows.iter().map(|f| sample_mean(f, s.indices())).collect();
        let pf: Vec<f64> = rows.iter().map(|f| dot(f, p.probs())).collect();
        let inf = pn.iter().copied().fold(f64::INFINITY, f64::min);
        let rho = 0.5;
        let near: Vec<usize> = (0..rows.len()).filter(|&i| pn[i] <= inf + rho / n as f64 + 1e-12).collect();
        let low = near.iter().map(|&i| pf[i]).fold(f64::INFINITY, f64::min);
        let high = near.iter().map(|&i| pf[i]).fold(f64::NEG_INFINITY, f64::max);
        let exact_idx = (0..rows.len()).find(|&i| pn[i] <= inf + 1e-12).unwrap();

        let class: Class = FunctionClass::from_rows("r", rows).unwrap().into();
        let e = minimize_empirical(&class, &p, &s, rho, MinimizeMode::Exact).unwrap();
        assert!((e.true_value - pf[exact_idx]).abs() < 1e-12);
        let l = minimize_empirical(&class, &p, &s, rho, MinimizeMode::AdversarialLow).unwrap();
        let h = minimize_empirical(&class, &p, &s, rho, MinimizeMode::AdversarialHigh).unwrap();
        assert!((l.true_value - low).abs() < 1e-12);
        assert!((h.true_value - high).abs() < 1e-12);
    }
}

#[test]
fn exact_rademacher_matches_direct_enumeration() {
    let mut stream = rng::stream(4, "oracle-rad", 0);
    for _ in 0..10 {
        let m = 4;
        let rows = random_rows(&mut stream, 3, m, -1.0, 1.0);
        let n = 7;
        let idx: Vec<usize> = (0..n).map(|_| stream.random_range(0..m)).collect();
        let mut direct = 0.0;
        for signs in 0..1u32 << n {
            let best = rows
                .iter()
                .map(|f| {
                    (0..n)
                        .map(|i| if signs >> i & 1 == 1 { f[idx[i]] } else { -f[idx[i]] })
                        .sum::<f64>()
                        / n as f64
                })
                .fold(f64::NEG_INFINITY, f64::max);
            direct += best / (1u32 << n) as f64;
        }
        let base = FunctionClass::from_rows("r", rows).unwrap();
        let s = Sample::from_indices(m, idx, 0).unwrap();
        let r = rademacher_average(&SubClass::all(&base), &base, &s, RademacherMode::Exact).unwrap();
        assert!((r.value - direct).abs() < 1e-12);
        assert_eq!(r.stderr, 0.0);
    }
}

#[test]
fn empirical_curve_exact_vs_monte_carlo() {
    let mut stream = rng::stream(6, "oracle-emp", 0);
    let rows = random_rows(&mut stream, 4, 5, 0.0, 1.0);
    let base = FunctionClass::from_rows("four", rows).unwrap();
    let idx: Vec<usize> = (0..10).map(|_| stream.random_range(0..5)).collect();
    let s = Sample::from_indices(5, idx, 0).unwrap();
    let class: Class = base.into();
    let grid = [0.1, 0.2, 0.3, 0.45, 0.6];
    let exact = empirical_xi_curve(&class, &s, 0.5, 2.0, &grid, RademacherMode::Exact).unwrap();
    let mc = empirical_xi_curve(&class, &s, 0.5, 2.0, &grid, RademacherMode::MonteCarlo { draws: 50_000, seed: 1 })
        .unwrap();
    for j in 0..grid.len() {
        assert!((exact.values[j] - mc.values[j]).abs() <= 3.0 * mc.stderr[j] + 1e-12, "level {j}");
    }
}

#[test]
fn bernstein_constant_is_max_ratio() {
    let mut stream = rng::stream(8, "oracle-bern", 0);
    for _ in 0..30 {
        let m = 6;
        let rows = random_rows(&mut stream, 5, m, 0.0, 2.0);
        let weights: Vec<f64> = (0..m).map(|_| stream.random_range(0.1..1.0)).collect();
        let p = DiscreteMeasure::from_weights(&weights).unwrap();
        let expected = rows
            .iter()
            .map(|f| {
                let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
                dot(&sq, p.probs()) / dot(f, p.probs())
            })
            .fold(0.0, f64::max);
        let class: Class = FunctionClass::from_rows("b", rows).unwrap().into();
        let cert = bernstein_certificate(&class, &p, 1.0).unwrap();
        assert!((cert.constant - expected).abs() < 1e-12);
    }
}

/// 6 x-atoms, labels in {0, 1}, fixed joint law.
fn six_atom_joint() -> JointDistribution {
    let eta = [0.9, 0.2, 0.7, 0.35, 0.55, 0.1];
    let px = [0.1, 0.2, 0.15, 0.25, 0.2, 0.1];
    let pairs = (0..6)
        .flat_map(|x| {
            [
                JointAtom { x, y: 1.0, p: px[x] * eta[x] },
                JointAtom {
                    x,
                    y: 0.0,
                    p: px[x] * (1.0 - eta[x]),
                },
            ]
        })
        .collect::<Vec<_>>();
    let total: f64 = pairs.iter().map(|a| a.p).sum();
    JointDistribution::new(6, pairs.into_iter().map(|a| JointAtom { p: a.p / total, ..a }).collect()).unwrap()
}

fn indicator_classes() -> Vec<FunctionClass> {
    // predictors 1[x >= t] for thresholds, widening with k
    let thresholds = [vec![0, 6], vec![0, 2, 4, 6], vec![0, 1, 2, 3, 4, 5, 6]];
    thresholds
        .iter()
        .map(|ts| {
            let rows = ts
                .iter()
                .map(|&t| (0..6).map(|x| if x >= t { 1.0 } else { 0.0 }).collect())
                .collect();
            FunctionClass::from_rows("thresholds", rows).unwrap()
        })
        .collect()
}

fn brute_risks(class: &FunctionClass, joint: &JointDistribution, weights: &[f64]) -> Vec<f64> {
    class
        .members()
        .iter()
        .map(|g| {
            joint
                .pairs
                .iter()
                .zip(weights)
                .map(|(a, w)| if g.values()[a.x] != a.y { *w } else { 0.0 })
                .sum()
        })
        .collect()
}

fn first_argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] < v[best] - 1e-12 {
            best = i;
        }
    }
    best
}

#[test]
fn nested_best_members_match_brute_force() {
    let joint = six_atom_joint();
    let classes = indicator_classes();
    let probs: Vec<f64> = joint.pairs.iter().map(|a| a.p).collect();
    let problem = make_nested(classes.clone(), LossSpec::discrete(&[0.0, 1.0]), joint.clone(), vec![0.0; 3]).unwrap();
    for (k, class) in classes.iter().enumerate() {
        let risks = brute_risks(class, &joint, &probs);
        assert_eq!(problem.best_per_class()[k], first_argmin(&risks));
    }
}

#[test]
fn selection_and_hypotheses_match_recomputation() {
    let joint = six_atom_joint();
    let classes = indicator_classes();
    let probs: Vec<f64> = joint.pairs.iter().map(|a| a.p).collect();
    let eps = vec![0.01, 0.03, 0.06];
    let problem = make_nested(classes.clone(), LossSpec::discrete(&[0.0, 1.0]), joint.clone(), eps.clone()).unwrap();
    let p = joint.measure();
    for r in 0..50 {
        let mut stream = rng::stream(12, "oracle-select", r);
        let s = draw_sample(&p, 50, r, &mut stream).unwrap();
        let emp_w: Vec<f64> = s.counts().iter().map(|&c| c as f64 / 50.0).collect();
        let mut penalized = Vec::new();
        let mut m1 = f64::NEG_INFINITY;
        let mut m2 = f64::NEG_INFINITY;
        for (k, class) in classes.iter().enumerate() {
            let risk = brute_risks(class, &joint, &probs);
            let emp = brute_risks(class, &joint, &emp_w);
            let fhat = first_argmin(&emp);
            penalized.push(emp[fhat] + 3.5 * eps[k]);
            let star = first_argmin(&risk);
            for f in 0..class.len() {
                m1 = m1.max(risk[f] - risk[star] - 2.0 * (emp[f] - emp[star]) - eps[k]);
                m2 = m2.max(emp[f] - emp[star] - 2.0 * (risk[f] - risk[star]) - eps[k]);
            }
        }
        let sel = select(&problem, &s).unwrap();
        assert_eq!(sel.chosen_k, first_argmin(&penalized) + 1);
        let h = hypotheses_check(&problem, &s).unwrap();
        assert!((h.margin1 - m1).abs() < 1e-12 && (h.margin2 - m2).abs() < 1e-12);
    }
}

#[test]
fn gap_curve_fixed_point_and_threshold() {
    let spec = build_gap_class(512, Some(4096), Some(256)).unwrap();
    let grid = GridSpec::log(1.0 / 2048.0, 1.0, 512).levels().unwrap();
    let curve = xi_curve(&spec.class(), spec.measure(), 512, &grid, 100, 1, &XiOptions::default()).unwrap();
    for (r, v) in grid.iter().zip(&curve.values) {
        if *r > 0.25 + 1e-12 {
            assert_eq!(*v, 0.0);
        }
    }
    let fp = fixed_point(&curve, 0.25, 0.0).unwrap();
    let (lo, hi) = (fp.bracket.0.unwrap(), fp.bracket.1.unwrap());
    assert!(lo <= 0.25 && 0.25 <= hi && hi - lo <= 0.01);
    // with ε dominated by r' = 1/4: √(0.25 · 3 · (3 + ln 512)/512)
    let t = epsilon_threshold(&curve, 2.0, 1.0, 3.0, 512.0, 1.0).unwrap();
    let frozen = 0.117_1;
    assert!((t.epsilon_min - frozen).abs() < 5e-4, "{}", t.epsilon_min);
    let closed = (hi * 3.0 * (3.0 + 512f64.ln()) / 512.0).sqrt();
    assert!((t.epsilon_min - closed).abs() < 1e-12);
}

#[test]
fn concentration_mean_matches_enumeration() {
    let probs = [0.2, 0.5, 0.3];
    let rows = vec![vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 1.0], vec![0.3, 0.3, 0.9]];
    let pf: Vec<f64> = rows.iter().map(|f| dot(f, &probs)).collect();
    let n = 4;
    let exact: f64 = all_samples(&probs, n)
        .iter()
        .map(|(idx, w)| {
            w * rows
                .iter()
                .zip(&pf)
                .map(|(f, m)| (m - sample_mean(f, idx)).abs())
                .fold(0.0, f64::max)
        })
        .sum();
    let p = DiscreteMeasure::from_probs(probs.to_vec()).unwrap();
    let class: Class = FunctionClass::from_rows("c", rows).unwrap().into();
    let prof = concentration_profile(&class, &p, n, 20_000, 2).unwrap();
    assert!((prof.mean.value - exact).abs() <= 3.0 * prof.mean.stderr);
}

#[test]
fn sample_frequencies_match_probabilities() {
    let p = DiscreteMeasure::from_weights(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    let mut stream = rng::stream(1, "oracle-draw", 0);
    let n = 200_000;
    let s = draw_sample(&p, n, 1, &mut stream).unwrap();
    for (c, q) in s.counts().iter().zip(p.probs()) {
        let sd = (n as f64 * q * (1.0 - q)).sqrt();
        assert!((*c as f64 - n as f64 * q).abs() <= 5.0 * sd);
    }
}
