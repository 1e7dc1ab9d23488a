use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use fraclab::caputo::*;
use fraclab::heatflow::{regional_heat_solve, regional_mass};
use fraclab::pointops::{fraclap, FracLapMethod};
use fraclab::spectral::{semigroup_compose, spectral_heat_evolve, torus_power};
use fraclab::special::beta;
use fraclab::walkers::*;
use fraclab::*;

fn order() -> impl Strategy<Value = FracOrder> {
    (0.05f64..0.95).prop_map(|s| FracOrder::new(s).unwrap())
}

/// Random trigonometric polynomial on the 2π torus with at most 8 modes.
fn trig_poly() -> impl Strategy<Value = GridFunction> {
    prop::collection::vec((1u32..12, -1.0f64..1.0, -1.0f64..1.0), 1..8).prop_map(|modes| {
        GridFunction::from_fn(Domain::torus(2.0 * PI).unwrap(), 64, move |x| {
            modes
                .iter()
                .map(|&(k, a, b)| a * (k as f64 * x).sin() + b * (k as f64 * x).cos())
                .sum()
        })
        .unwrap()
    })
}

fn max_rel(a: &GridFunction, b: &GridFunction) -> f64 {
    let scale = b.max_abs().max(1e-300);
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_accepts_only_open_interval(s in -2.0f64..3.0) {
        prop_assert_eq!(FracOrder::new(s).is_ok(), s > 0.0 && s < 1.0);
    }

    #[test]
    fn order_rejects_endpoints_and_nan(s in prop::sample::select(vec![0.0, 1.0, f64::NAN, f64::INFINITY, -0.0])) {
        prop_assert!(FracOrder::new(s).is_err());
    }

    #[test]
    fn semigroup_composes(u in trig_poly(), s1 in order(), s2 in order()) {
        if s1.get() + s2.get() > 1.0 {
            prop_assert!(semigroup_compose(&u, s1, s2).is_err());
            return Ok(());
        }
        let c = semigroup_compose(&u, s1, s2).unwrap();
        let d = torus_power(&u, s1.get() + s2.get()).unwrap();
        prop_assert!(max_rel(&c, &d) < 1e-11);
    }

    #[test]
    fn heat_flow_is_a_semigroup(u in trig_poly(), s in order(), t1 in 0.0f64..0.5, t2 in 0.0f64..0.5) {
        let a = spectral_heat_evolve(&spectral_heat_evolve(&u, s, t1).unwrap(), s, t2).unwrap();
        let b = spectral_heat_evolve(&u, s, t1 + t2).unwrap();
        // measured against the initial amplitude: the flow only damps
        prop_assert!(max_rel(&a, &b) * b.max_abs() < 1e-12 * u.max_abs());
    }

    #[test]
    fn l1_weights_positive_decreasing(s in order(), n in 2usize..400) {
        let b = l1_weights(s, n);
        prop_assert_eq!(b.len(), n);
        prop_assert!((b[0] - 1.0).abs() < 1e-15);
        prop_assert!(b.iter().all(|&w| w > 0.0));
        prop_assert!(b.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn memory_weights_sum_telescopes(s in order(), n in 1usize..300) {
        // Σ_{j<n} c_j = n^{1−s}/(1−s)
        let w = MemoryWeights::new(s, n);
        let sum: f64 = w.c[..n].iter().sum();
        let p = 1.0 - s.get();
        prop_assert!((sum - (n as f64).powf(p) / p).abs() < 1e-10 * sum);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn caputo_power_rule(r in 1.0f64..3.0, s in order(), t in 0.2f64..2.0) {
        let u = TimeSeries::uniform_from_handle(
            t / 64.0,
            64,
            FunctionHandle::new(Smoothness::C2Local, move |x: f64| x.powf(r)),
        ).unwrap();
        let d = caputo_derivative(&u, t, s, CaputoScheme::DirectQuadrature).unwrap();
        // r t^{r−s} B(r, 1−s); u̇ comes from finite differences, which lose
        // accuracy where t^r is not smooth
        let want = r * t.powf(r - s.get()) * beta(r, 1.0 - s.get());
        prop_assert!((d - want).abs() < 1e-5 * want.abs(), "{} vs {}", d, want);
    }

    #[test]
    fn fraclap_translation_invariant(s in order(), x in -2.0f64..2.0, c in -3.0f64..3.0) {
        let q = QuadratureSpec::with_tol(1e-8);
        let u = FunctionHandle::gaussian();
        let a = fraclap(&u, x, s, &q, FracLapMethod::SecondDifference).unwrap().value;
        let b = fraclap(&u.shifted(c), x + c, s, &q, FracLapMethod::SecondDifference).unwrap().value;
        prop_assert!((a - b).abs() < 1e-7);
    }

    #[test]
    fn censored_rows_stochastic_and_symmetric(s in order(), sites in 65usize..96) {
        let h = 2.0 / sites as f64;
        let m = CensoredWalkModel::new(h, s, Domain::interval(-1.0, 1.0).unwrap()).unwrap();
        let p = m.transition_matrix();
        for (i, row) in p.iter().enumerate() {
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for j in 0..i {
                prop_assert_eq!(p[i][j], p[j][i]);
            }
        }
    }

    #[test]
    fn regional_flow_conserves_mass(s in order(), t in 0.0f64..0.05, c in -0.5f64..0.5) {
        let g = GridFunction::from_fn(Domain::interval(-1.0, 1.0).unwrap(), 65, |x| (-10.0 * (x - c).powi(2)).exp()).unwrap();
        let m0 = regional_mass(&g);
        let sol = regional_heat_solve(&g, s, t).unwrap();
        assert_relative_eq!(regional_mass(&sol.u), m0, max_relative = 1e-12);
    }

    #[test]
    fn walkers_are_deterministic(seed in any::<u64>(), n in 1usize..600) {
        let cfg = WalkConfig::classical(0.05, 0.2, n, seed).unwrap();
        let a = run_classical_walk(&cfg).unwrap();
        let b = run_classical_walk(&cfg).unwrap();
        prop_assert_eq!(&a.positions, &b.positions);
        let lj = WalkConfig::long_jump(0.05, FracOrder::HALF, 0.2, n, seed).unwrap();
        let a = run_free_longjump_walk(&lj, JumpLaw::ContinuumPareto).unwrap();
        let b = run_free_longjump_walk(&lj, JumpLaw::ContinuumPareto).unwrap();
        prop_assert_eq!(&a.positions, &b.positions);
    }

    #[test]
    fn walker_ensemble_prefix_stable(seed in any::<u64>(), n in 2usize..600) {
        // walker i depends only on (seed, i): a smaller ensemble is a prefix
        let big = run_classical_walk(&WalkConfig::classical(0.05, 0.2, n, seed).unwrap()).unwrap();
        let small = run_classical_walk(&WalkConfig::classical(0.05, 0.2, n / 2, seed).unwrap()).unwrap();
        prop_assert_eq!(&big.positions[..n / 2], &small.positions[..]);
    }

    #[test]
    fn histogram_has_unit_mass(seed in any::<u64>(), nbins in 2usize..80) {
        let res = run_classical_walk(&WalkConfig::classical(0.05, 0.2, 500, seed).unwrap()).unwrap();
        let lo = res.positions.iter().cloned().fold(f64::INFINITY, f64::min) - 0.01;
        let hi = res.positions.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 0.01;
        let d = empirical_density(&res, Bins::new(lo, hi, nbins).unwrap()).unwrap();
        prop_assert!((histogram_mass(&d) - 1.0).abs() < 1e-12);
    }
}
