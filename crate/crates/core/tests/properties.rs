use chemflow_core::calculus::leray_project_spectrum;
use chemflow_core::energies::GronwallParams;
use chemflow_core::solver::initial::{random_smooth_scalar, random_smooth_velocity};
use chemflow_core::*;
use proptest::prelude::*;

fn grid2() -> GridSpec {
    GridSpec::new(2, 16, 5).unwrap()
}

fn sym(dim: usize, v: &[f64]) -> SymTensor {
    let m = if dim == 3 {
        [[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], v[5]]]
    } else {
        [[v[0], v[1], 0.0], [v[1], v[2], 0.0], [0.0; 3]]
    };
    SymTensor::from_matrix(dim, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn leray_is_an_idempotent_contraction(seed in 0u64..1000, amp in 0.1f64..10.0) {
        let g = grid2();
        let v = VectorField::from_fn(g, |x| {
            let s = seed as f64;
            [amp * (6.28 * (x[0] + s)).sin() * (12.56 * x[1]).cos(), amp * (6.28 * x[0] * 2.0 + s).cos(), 0.0]
        });
        let mut once = v.to_spectrum();
        leray_project_spectrum(&mut once);
        let mut twice = once.clone();
        leray_project_spectrum(&mut twice);
        prop_assert!(twice.sub(&once).norm_sq() <= 1e-26 * (1.0 + once.norm_sq()));
        prop_assert!(once.norm_sq() <= v.to_spectrum().norm_sq() * (1.0 + 1e-12));
    }

    #[test]
    fn monotonicity_and_coercivity_are_positive(
        c in -1.0f64..1.0,
        a in proptest::collection::vec(-10.0f64..10.0, 6),
        b in proptest::collection::vec(-10.0f64..10.0, 6),
    ) {
        let m = StressModel::new(0.5, ExponentFn::logistic(1.4, 2.0, 0.0, 6.0).unwrap()).unwrap();
        let (d1, d2) = (sym(3, &a), sym(3, &b));
        let gap = m.monotonicity_gap(c, &d1, &d2);
        prop_assert!(gap.lhs >= 0.0);
        if let Ok(r) = gap.ratio() {
            prop_assert!(r > 0.0);
        }
        if let Ok(r) = m.coercivity_gap(c, &d1, &d2).ratio() {
            let p_minus = m.exponent().p_minus();
            prop_assert!(r >= 2.0 * 0.5 * (p_minus - 1.0) * (1.0 - 1e-9));
            prop_assert!(r <= 2.0 * 0.5 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gronwall_bound_dominates_phi(
        zeta0 in 0.0f64..5.0,
        alpha in 0.1f64..3.0,
        c0 in 0.01f64..2.0,
        t in 0.0f64..0.5,
        phi in 0.0f64..3.0,
    ) {
        let g = GronwallParams::new(zeta0, alpha, c0, vec![(0.0, phi), (1.0, phi)]).unwrap();
        match gronwall_bound(&g, t) {
            Ok(b) => prop_assert!(b >= g.big_phi(t) * (1.0 - 1e-12)),
            Err(Error::BlowUpBeforeT { bracket, .. }) => prop_assert!(bracket <= 0.0),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn lp_norms_increase_with_exponent(seed in 0u64..500) {
        let g = grid2();
        let f = random_smooth_scalar(g, 0.3, 1.0, 2.0, seed).unwrap();
        let mut last = 0.0;
        for r in [1.0, 1.5, 2.0, 3.0, 6.0, f64::INFINITY] {
            let n = lp_norm(&f, r).unwrap();
            prop_assert!(n >= last * (1.0 - 1e-12));
            last = n;
        }
    }

    #[test]
    fn single_steps_preserve_invariants(seed in 0u64..200, p_lo in 1.2f64..2.0) {
        let g = grid2();
        let m = StressModel::new(0.05, ExponentFn::logistic(p_lo, 2.0, 0.0, 4.0).unwrap()).unwrap();
        let mut cfg = SolverConfig::new(g, m, 1e-3, 1.0).unwrap();
        cfg.scheme = Scheme::ImexRK2;
        let v0 = random_smooth_velocity(g, 1.0, 2.0, seed).unwrap();
        let c0 = random_smooth_scalar(g, 1.0, 0.5, 2.0, seed + 1).unwrap();
        let s0 = init_state(&v0, &c0, &cfg).unwrap();
        let s1 = step(&s0, &cfg).unwrap();
        prop_assert_eq!(s1.mass(), s0.mass());
        prop_assert!(s1.v_hat().components().iter().all(|c| c[0].norm() == 0.0));
        let st = solver::Stepper::new(&cfg).unwrap();
        prop_assert!(st.relative_divergence(s1.v_hat()) < 1e-10);
        prop_assert!(s1.t() > 0.0 && s1.steps() == 1);
    }
}

#[test]
fn twin_delta_scales_quadratically_in_2d() {
    let g = grid2();
    let m = StressModel::new(0.05, ExponentFn::logistic(1.5, 2.0, 0.0, 4.0).unwrap()).unwrap();
    let cfg = SolverConfig::new(g, m, 2e-3, 0.04).unwrap();
    let v0 = random_smooth_velocity(g, 1.0, 2.0, 1).unwrap();
    let w = random_smooth_velocity(g, 1.0, 2.0, 2).unwrap();
    let c0 = random_smooth_scalar(g, 0.0, 0.5, 2.0, 3).unwrap();
    let scaled: Vec<f64> = [1e-4, 1e-5]
        .iter()
        .map(|&eps| twin_run(&cfg, &v0, &c0, eps, &w, &RunOptions::every(5)).unwrap().final_delta() / (eps * eps))
        .collect();
    assert!((scaled[0] / scaled[1] - 1.0).abs() < 0.01, "{scaled:?}");
}
