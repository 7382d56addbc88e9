use proptest::prelude::*;

use compact_mrf::graphcut::solve_graphcut;
use compact_mrf::model::round_superlevel;
use compact_mrf::mplp::{lower_envelope, min_filter, mplp_solve};
use compact_mrf::oracle::{
    brute_force_map, naive_envelope, naive_min_filter, random_convex_instance, random_dyadic_pwl,
    random_feasible_labeling, random_l1_min, random_pwl, random_pwl_instance,
};
use compact_mrf::pdsolver::{apply_adjoint, apply_forward};
use compact_mrf::relaxations::{build_compact, build_convex_lp, build_full_lp, lift_labeling, CompactStyle};
use compact_mrf::rng::SplitMix64;
use compact_mrf::{GraphTopology, MrfInstance, PiecewiseLinearPotential};

fn eighths(lo: i64, hi: i64) -> impl Strategy<Value = f64> {
    (lo * 8..=hi * 8).prop_map(|k| k as f64 / 8.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn min_filter_matches_scan(values in prop::collection::vec(eighths(-20, 20), 1..80), a in -90i64..90, b in -90i64..90) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert_eq!(min_filter(&values, lo, hi).unwrap(), naive_min_filter(&values, lo, hi));
    }

    #[test]
    fn envelope_matches_quadratic_scan(seed: u64, labels in 2usize..40, pieces in 1usize..6, w in eighths(0, 3)) {
        let mut rng = SplitMix64::new(seed);
        let p = random_dyadic_pwl(&mut rng, labels, pieces);
        let theta: Vec<f64> = (0..labels).map(|_| compact_mrf::oracle::dyadic(&mut rng, -4.0, 4.0)).collect();
        prop_assert_eq!(lower_envelope(&theta, &p, w), naive_envelope(&theta, &p, w));
    }

    #[test]
    fn min_of_is_pointwise_min(seed: u64, labels in 2usize..20, terms in 1usize..4) {
        let mut rng = SplitMix64::new(seed);
        let parts: Vec<_> = (0..terms).map(|_| random_pwl(&mut rng, labels, 2)).collect();
        let m = PiecewiseLinearPotential::min_of(&parts).unwrap();
        let top = labels as i64 - 1;
        for h in -top..=top {
            let want = parts.iter().map(|p| p.evaluate(h)).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(m.evaluate(h), want);
        }
    }

    #[test]
    fn from_samples_reproduces_samples(values in prop::collection::vec(eighths(-4, 4), 3..30)) {
        let mut v = values;
        if v.len() % 2 == 0 {
            v.pop();
        }
        let p = PiecewiseLinearPotential::from_samples(&v).unwrap();
        let m = (v.len() / 2) as i64;
        for h in -m..=m {
            prop_assert_eq!(p.evaluate(h), v[(h + m) as usize]);
        }
    }

    #[test]
    fn round_superlevel_picks_half_crossing(labels in 1usize..30, i in 0usize..30, j in 0usize..30) {
        let (i, j) = (i % labels, j % labels);
        let mut onehot = vec![0.0; labels];
        onehot[i] = 1.0;
        prop_assert_eq!(round_superlevel(&onehot), i);
        let mut split = vec![0.0; labels];
        split[i] += 0.5;
        split[j] += 0.5;
        prop_assert_eq!(round_superlevel(&split), i.max(j));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn adjoint_identity(seed: u64, labels in 2usize..6, pieces in 1usize..4, full: bool) {
        let inst = random_pwl_instance(3, 2, labels, pieces, seed).unwrap();
        let prog = if full { build_full_lp(&inst) } else { build_compact(&inst, CompactStyle::General).unwrap() };
        let mut rng = SplitMix64::new(seed ^ 0x9e37);
        let x: Vec<f64> = (0..prog.dim()).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let p: Vec<f64> = (0..prog.row_count()).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let lhs = dot(&apply_forward(&prog, &x).unwrap(), &p);
        let rhs = dot(&x, &apply_adjoint(&prog, &p).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn lift_objective_is_energy(seed: u64, labels in 2usize..6) {
        let inst = random_pwl_instance(3, 2, labels, 3, seed).unwrap();
        let mut rng = SplitMix64::new(seed);
        let a = random_feasible_labeling(&mut rng, &inst, 500);
        let e = inst.energy_of_labeling(&a).unwrap();
        for prog in [build_full_lp(&inst), build_compact(&inst, CompactStyle::General).unwrap()] {
            let x = lift_labeling(&inst, &a, &prog).unwrap();
            prop_assert!((prog.objective_value(&x, 1e-9).unwrap() - e).abs() <= 1e-9);
            prop_assert_eq!(&prog.round(&x), &a);
        }
    }

    #[test]
    fn l1_min_lift_objective_is_energy(seed: u64, labels in 2usize..7) {
        let mut rng = SplitMix64::new(seed);
        let topo = GraphTopology::make_grid(3, 3).unwrap();
        let unary = (0..9 * labels).map(|_| rng.uniform(0.0, 2.0)).collect();
        let inst = MrfInstance::homogeneous(topo, labels, unary, random_l1_min(&mut rng, labels, 3).into()).unwrap();
        let a = random_feasible_labeling(&mut rng, &inst, 10);
        let prog = build_compact(&inst, CompactStyle::L1Min).unwrap();
        let x = lift_labeling(&inst, &a, &prog).unwrap();
        prop_assert!((prog.objective_value(&x, 1e-9).unwrap() - inst.energy_of_labeling(&a).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn mplp_dual_is_monotone_lower_bound(seed: u64, labels in 2usize..5) {
        let inst = random_pwl_instance(3, 2, labels, 2, seed).unwrap();
        let r = mplp_solve(&inst, 200).unwrap();
        let (_, opt) = brute_force_map(&inst).unwrap();
        prop_assert!(r.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!(r.dual_value <= opt + 1e-9);
        prop_assert!(inst.energy_of_labeling(&r.labeling).unwrap() >= opt - 1e-9);
    }

    #[test]
    fn graphcut_is_exact_on_convex_priors(seed: u64, labels in 2usize..5) {
        let inst = random_convex_instance(3, 2, labels, seed).unwrap();
        let (_, opt) = brute_force_map(&inst).unwrap();
        let cut = solve_graphcut(&inst).unwrap();
        prop_assert!((cut.energy - opt).abs() <= 1e-9, "{} vs {}", cut.energy, opt);
        prop_assert!(build_convex_lp(&inst).is_ok());
    }

    #[test]
    fn instance_json_roundtrip(seed: u64) {
        let inst = random_pwl_instance(2, 2, 4, 2, seed).unwrap();
        prop_assert_eq!(MrfInstance::from_json(&inst.to_json().unwrap()).unwrap(), inst);
    }
}
