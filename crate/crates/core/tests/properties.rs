use std::f64::consts::TAU;

use bpc_core::bpc::{grid_lp_min_tv, min_tv_lower_bound, uniqueness_precheck, GridLpConfig};
use bpc_core::generate::{random_nonnegative, random_signed};
use bpc_core::grid_spline::{solve_grid_with, GridSolverConfig};
use bpc_core::toeplitz::{cfp_decompose_deficient, cfp_decompose_deficient_with, NullVector};
use bpc_core::{
    build_grid, build_toeplitz, classify_regime, solve_bpc, toy_solve, verify_certificate,
    GridProblem, ObservationVector, Regime, SolutionKind, SparseMeasure, TrigPoly,
};
use num_complex::Complex;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn measure(max_atoms: usize, min_abs: f64) -> impl Strategy<Value = SparseMeasure<f64>> {
    prop::collection::vec((0.0..TAU, min_abs..2.0, any::<bool>()), 1..=max_atoms).prop_map(|v| {
        SparseMeasure::from_pairs(
            v.into_iter()
                .map(|(x, a, neg)| (x, if neg { -a } else { a })),
        )
    })
}

fn nonnegative(max_atoms: usize) -> impl Strategy<Value = SparseMeasure<f64>> {
    prop::collection::vec((0.0..TAU, 0.0..2.0), 1..=max_atoms).prop_map(SparseMeasure::from_pairs)
}

fn data(max_kc: usize) -> impl Strategy<Value = ObservationVector<f64>> {
    (1..=max_kc)
        .prop_flat_map(|kc| {
            (
                -2.0..2.0f64,
                prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), kc),
            )
        })
        .prop_map(|(y0, rest)| {
            let rest: Vec<Complex<f64>> =
                rest.into_iter().map(|(a, b)| Complex::new(a, b)).collect();
            ObservationVector::from_parts(y0, &rest)
        })
}

fn trig_poly(max_kc: usize) -> impl Strategy<Value = TrigPoly<f64>> {
    (1..=max_kc)
        .prop_flat_map(|kc| {
            (
                -1.0..1.0f64,
                prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), kc),
            )
        })
        .prop_map(|(c0, rest)| {
            let mut c = vec![Complex::new(c0, 0.0)];
            c.extend(rest.into_iter().map(|(a, b)| Complex::new(a, b)));
            TrigPoly::new(c).unwrap()
        })
}

fn tv(w: &SparseMeasure<f64>) -> f64 {
    w.weights().iter().map(|a| a.abs()).sum()
}

fn regime(y: &ObservationVector<f64>) -> Regime {
    classify_regime(&build_toeplitz(y), None).unwrap().regime
}

fn same_atoms(a: &SparseMeasure<f64>, b: &SparseMeasure<f64>, tol: f64) -> bool {
    matches!(a.max_atom_error(b), Some((dx, da)) if dx <= tol && da <= tol)
}

proptest! {
    #[test]
    fn coefficients_are_bounded_by_total_variation(w in measure(8, 0.0), kc in 0usize..12) {
        let bound = tv(&w) * (1.0 + 1e-12) + 1e-15;
        for c in w.forward(kc).coeffs() {
            prop_assert!(c.norm() <= bound);
        }
        prop_assert!(w.coeff_bound_check(kc));
    }

    #[test]
    fn mass_equals_variation_exactly_for_nonnegative(w in measure(8, 0.1), kc in 0usize..6) {
        let y0 = w.forward(kc).y0();
        let nonneg = w.weights().iter().all(|&a| a >= 0.0);
        prop_assert_eq!((y0 - w.tv_norm()).abs() <= 1e-12 * (1.0 + w.tv_norm()), nonneg);
    }

    #[test]
    fn observation_map_is_linear(a in measure(5, 0.0), b in measure(5, 0.0), s in -3.0..3.0f64, kc in 0usize..8) {
        let sum = a.plus(&b).forward(kc);
        let (ya, yb) = (a.forward(kc), b.forward(kc));
        for k in 0..=kc {
            let expected = ya.coeffs()[k] + yb.coeffs()[k];
            prop_assert!((sum.coeffs()[k] - expected).norm() <= 1e-12 * (1.0 + tv(&a) + tv(&b)));
            let scaled = a.scaled(s).forward(kc).coeffs()[k];
            prop_assert!((scaled - ya.coeffs()[k] * s).norm() <= 1e-12 * (1.0 + tv(&a)) * (1.0 + s.abs()));
        }
    }

    #[test]
    fn jordan_split_round_trips(w in measure(8, 0.01)) {
        let (pos, neg) = w.jordan_split();
        prop_assert!(pos.weights().iter().chain(neg.weights().iter()).all(|&a| a > 0.0));
        prop_assert!((pos.tv_norm() + neg.tv_norm() - w.tv_norm()).abs() <= 1e-12 * (1.0 + w.tv_norm()));
        prop_assert!(same_atoms(&pos.plus(&neg.scaled(-1.0)), &w, 0.0));
    }

    #[test]
    fn nonnegative_data_gives_positive_semidefinite_matrix(w in nonnegative(20), kc in 0usize..16) {
        let s = build_toeplitz(&w.forward(kc)).spectrum().unwrap();
        prop_assert!(s.min_eig() >= -1e-10 * s.spectral_radius());
    }

    #[test]
    fn regime_is_invariant_under_positive_scaling(y in data(6), s in 0.01..100.0f64) {
        let base = classify_regime(&build_toeplitz(&y), None).unwrap();
        let scaled = classify_regime(&build_toeplitz(&y.scaled(s)), None).unwrap();
        prop_assert_eq!(base.regime, scaled.regime);
        prop_assert_eq!(base.rank, scaled.rank);
        prop_assert_eq!(regime(&y.neg()), base.regime.mirrored());
    }

    #[test]
    fn precheck_implies_indefinite(y in data(8)) {
        if uniqueness_precheck(&y) {
            prop_assert_eq!(regime(&y), Regime::Indefinite);
        }
    }

    #[test]
    fn pairing_depends_only_on_data(p in trig_poly(6), w in measure(6, 0.0)) {
        let y = w.forward(p.kc());
        let c = p.coeffs();
        let from_data = c[0].re * y.y0() + 2.0 * (1..=p.kc()).map(|k| (c[k] * y.coeffs()[k]).re).sum::<f64>();
        prop_assert!((p.pairing(&w) - from_data).abs() <= 1e-10 * (1.0 + tv(&w)));
    }

    #[test]
    fn derivative_has_at_most_twice_the_degree_in_zeros(p in trig_poly(8)) {
        prop_assert!(p.derivative_sign_changes(4096) <= 2 * p.kc());
    }

    #[test]
    fn derivative_matches_finite_differences(p in trig_poly(6), t in 0.0..TAU) {
        let d = p.derivative();
        prop_assert_eq!(d.kc(), p.kc());
        prop_assert_eq!(d.coeffs()[0], Complex::new(0.0, 0.0));
        let h = 1e-5;
        let fd = (p.eval(t + h) - p.eval(t - h)) / (2.0 * h);
        prop_assert!((d.eval(t) - fd).abs() <= 1e-6);
        prop_assert!((p.eval_derivative(t) - d.eval(t)).abs() <= 1e-10);
    }

    #[test]
    fn toy_branches_are_consistent(y0 in 0.0..3.0f64, r in 0.0..3.0f64, phase in -3.1..3.1f64) {
        prop_assume!(y0 + r > 1e-3);
        let y1 = Complex::from_polar(r, phase);
        let rep = toy_solve(y0, y1).unwrap();
        let y = ObservationVector::new(vec![Complex::new(y0, 0.0), y1]).unwrap();
        let expected_tv = y0.max(r);
        prop_assert!((rep.min_tv - expected_tv).abs() <= 1e-9 * (1.0 + expected_tv));
        for w in rep.solution.iter().chain(&rep.samples) {
            prop_assert!(w.forward(1).max_abs_diff(&y) <= 1e-12 * (1.0 + expected_tv));
            prop_assert!((w.tv_norm() - rep.min_tv).abs() <= 1e-12 * (1.0 + expected_tv));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn deficient_decomposition_is_unique(seed in any::<u64>(), kc in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1 + (seed as usize) % kc;
        let w: SparseMeasure<f64> = random_nonnegative(&mut rng, k, kc).unwrap();
        let t = build_toeplitz(&w.forward(kc));
        let s = t.spectrum().unwrap();
        let a = cfp_decompose_deficient(&t, &s).unwrap();
        let b = cfp_decompose_deficient_with(&t, &s, NullVector::Sum).unwrap();
        let scale = t.frobenius_norm().max(1.0);
        prop_assert!(a.residual(&t) <= 1e-9 * scale);
        prop_assert!(same_atoms(&a.to_measure(), &b.to_measure(), 1e-8));
        prop_assert!(same_atoms(&a.to_measure(), &w, 1e-7));
    }

    #[test]
    fn grid_value_is_bracketed(seed in any::<u64>(), kc in 1usize..4, signed in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: SparseMeasure<f64> = if signed {
            random_signed(&mut rng, 2 + (seed as usize) % kc, kc).unwrap()
        } else {
            random_nonnegative(&mut rng, 1 + (seed as usize) % (kc + 1), kc).unwrap()
        };
        let y = w.forward(kc);
        let cfg = GridLpConfig::for_kc(kc);
        let value = grid_lp_min_tv(&y, &cfg).unwrap();
        prop_assert!(value >= min_tv_lower_bound(&y) - 1e-6);
        let psd = matches!(regime(&y), Regime::PsdRankDeficient | Regime::PositiveDefinite);
        let tol = 1e-3f64.max(10.0 * y.y0() / cfg.n_grid as f64);
        prop_assert_eq!((value - y.y0()).abs() <= tol, psd);
    }

    #[test]
    fn solution_set_mirrors_under_negation(seed in any::<u64>(), kc in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: SparseMeasure<f64> = random_signed(&mut rng, 2 + (seed as usize) % kc, kc).unwrap();
        let y = w.forward(kc);
        let plus = solve_bpc(&y).unwrap().mirrored();
        let minus = solve_bpc(&y.neg()).unwrap();
        prop_assert_eq!(plus.kind, minus.kind);
        prop_assert!((plus.min_tv - minus.min_tv).abs() <= 1e-8 * (1.0 + plus.min_tv));
        if let (Some(a), Some(b)) = (&plus.solution, &minus.solution) {
            prop_assert!(same_atoms(a, b, 1e-8));
        }
    }

    #[test]
    fn unique_signed_solutions_carry_a_verified_certificate(seed in any::<u64>(), kc in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: SparseMeasure<f64> = random_signed(&mut rng, 2 + (seed as usize) % kc, kc).unwrap();
        let y = w.forward(kc);
        let rep = solve_bpc(&y).unwrap();
        if rep.kind == SolutionKind::UniqueSigned {
            let sol = rep.solution.as_ref().unwrap();
            let cert = rep.certificate.as_ref().unwrap();
            let check = verify_certificate(cert, sol, &y);
            prop_assert!(check.certifies_uniqueness(), "{:?}", check);
            prop_assert!((cert.pairing(sol) - rep.min_tv).abs() <= 1e-6 * (1.0 + rep.min_tv));
            prop_assert!(rep.min_tv <= w.tv_norm() + 1e-8);
        }
    }

    #[test]
    fn toy_agrees_with_general_solver(y0 in 0.0..3.0f64, r in 0.1..3.0f64, phase in -3.1..3.1f64) {
        let y1 = Complex::from_polar(r, phase);
        let y = ObservationVector::new(vec![Complex::new(y0, 0.0), y1]).unwrap();
        let closed = toy_solve(y0, y1).unwrap();
        let general = solve_bpc(&y).unwrap();
        prop_assert_eq!(closed.kind, general.kind);
        prop_assert!((closed.min_tv - general.min_tv).abs() <= 1e-8 * (1.0 + closed.min_tv));
        if let (Some(a), Some(b)) = (&closed.solution, &general.solution) {
            prop_assert!(same_atoms(a, b, 1e-6));
        }
    }
}

fn grid_problem(y: &ObservationVector<f64>, p: usize, m: usize, lambda: f64) -> GridProblem<f64> {
    GridProblem::new(y.clone(), lambda, build_grid(p, m, y.kc()).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grid_solutions_pin_the_mean_and_balance_the_innovation(
        y in data(3),
        m in 1usize..4,
        p in prop::sample::select(vec![16usize, 32]),
        lambda in 1e-3..1e-1f64,
    ) {
        let prob = grid_problem(&y, p, m, lambda);
        let cfg = GridSolverConfig { record_trace: true, ..GridSolverConfig::default() };
        let sol = solve_grid_with(&prob, &cfg).unwrap();
        let mean = prob.h_matrix.mul_vec(&sol.c)[0];
        prop_assert!((mean - y.y0()).abs() <= 1e-9 * (1.0 + y.y0().abs()));
        let scale = 1.0 + sol.innovation.iter().map(|a| a.abs()).sum::<f64>();
        prop_assert!(sol.innovation.iter().sum::<f64>().abs() <= 1e-9 * scale);
        for pair in sol.trace.windows(2) {
            prop_assert!(pair[1].objective <= pair[0].objective);
        }
        if let Some(last) = sol.trace.last() {
            prop_assert!(sol.objective <= last.objective + 1e-9 * (1.0 + last.objective));
        }
    }

    #[test]
    fn refining_the_grid_never_raises_the_optimum(
        y in data(3),
        m in 1usize..4,
        p in prop::sample::select(vec![8usize, 16, 32]),
        lambda in 1e-3..1e-1f64,
    ) {
        prop_assume!(p > 2 * y.kc());
        let coarse = solve_grid_with(&grid_problem(&y, p, m, lambda), &GridSolverConfig::default()).unwrap();
        let fine = solve_grid_with(&grid_problem(&y, 2 * p, m, lambda), &GridSolverConfig::default()).unwrap();
        prop_assert!(fine.objective <= coarse.objective + 1e-9, "{} > {}", fine.objective, coarse.objective);
    }
}
