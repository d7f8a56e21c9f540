use num_complex::Complex64;
use proptest::prelude::*;
use spinrs::constraint::{constraint_residual, reconstruct_spin, solve_bplus};
use spinrs::dynamics::{rhs, rmatrix_rhs};
use spinrs::heisenberg::{decompose_left, decompose_right, quasi_adjoint, DoublePoint};
use spinrs::matrix::{
    diag_complex, expm, fro, identity, udu_factor, unitarity_residual, unitary_diag, BorelElement, CMatrix,
    UpperUnipotent,
};
use spinrs::phasespace::{
    build_b_r, gauge_invariant_observables, h_red, lax, mixed_trace, recover_state, spectral_lax, Letter,
};
use spinrs::poisson::{BracketTable, Poly};
use spinrs::sample::{
    random_borel, random_complex_matrix, random_hermitian, random_special_unitary, random_state, random_strict_upper,
    Rng64, StateCaps,
};
use spinrs::sutherland::{h_suth, h_suth_tilde, lax_suth, SutherlandState};

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

fn power_trace(m: &CMatrix, k: usize) -> Complex64 {
    let mut p = identity(m.nrows());
    for _ in 0..k {
        p *= m;
    }
    p.trace()
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn exponentials_invert(seed in any::<u64>(), n in 2usize..=6, scale in 0.0f64..5.0) {
        let mut rng = Rng64::seeded(seed);
        let a = random_complex_matrix(&mut rng, n, 1.0);
        let a = &a * Complex64::new(scale / fro(&a).max(1e-300), 0.0);
        let prod = expm(&a) * expm(&-a);
        prop_assert!(fro(&(prod - identity(n))) < 1e-11);
    }

    #[test]
    fn unitary_diagonalization_reassembles(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = Rng64::seeded(seed);
        let w = random_special_unitary(&mut rng, n).into_matrix();
        let (q, eta) = unitary_diag(&w, None, 1e-9).unwrap();
        prop_assert!(unitarity_residual(eta.as_matrix()) < 1e-11);
        let d = diag_complex(&q.torus_entries());
        let back = eta.as_matrix() * d * eta.as_matrix().adjoint();
        prop_assert!(fro(&(back - w)) < 1e-10 * n as f64);
    }

    #[test]
    fn udu_factor_is_unique(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = Rng64::seeded(seed);
        let b = random_borel(&mut rng, n, 1.0, 1.0);
        let p: Vec<f64> = b.diagonal().iter().map(|x| x.ln()).collect();
        let unipotent = CMatrix::from_fn(n, n, |i, j| b.as_matrix()[(i, j)] / b.diagonal()[j]);
        let (nm, p2) = udu_factor(&b.gram()).unwrap();
        prop_assert!((nm.as_matrix() - &unipotent).iter().all(|z| z.norm() < 1e-10));
        prop_assert!(p.iter().zip(&p2).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn iwasawa_round_trips(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = Rng64::seeded(seed);
        let u = random_special_unitary(&mut rng, n);
        let b = random_borel(&mut rng, n, 1.0, 1.0);
        let k = u.as_matrix() * b.as_matrix();
        let right = decompose_right(&k).unwrap();
        let left = decompose_left(&k).unwrap();
        prop_assert!(fro(&(right.reassemble() - &k)) < 1e-10);
        prop_assert!(fro(&(left.reassemble() - &k)) < 1e-10);
        prop_assert!(unitarity_residual(right.g.as_matrix()) < 1e-11);
        prop_assert!(unitarity_residual(left.g.as_matrix()) < 1e-11);
    }

    #[test]
    fn gram_traces_survive_quasi_adjoint_action(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = Rng64::seeded(seed);
        let k = random_special_unitary(&mut rng, n).into_matrix() * random_borel(&mut rng, n, 0.5, 0.8).as_matrix();
        let point = DoublePoint::new(k, random_borel(&mut rng, n, 0.5, 0.8)).unwrap();
        let eta = random_special_unitary(&mut rng, n);
        let moved = quasi_adjoint(&eta, &point).unwrap();
        let gram = |p: &DoublePoint| decompose_right(p.k()).unwrap().b.gram();
        for power in 1..=3 {
            let a = power_trace(&gram(&point), power);
            let b = power_trace(&gram(&moved), power);
            prop_assert!((a - b).norm() < 1e-9 * a.norm().max(1.0));
        }
    }

    #[test]
    fn constraint_round_trip(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = Rng64::seeded(seed);
        let state = random_state(&mut rng, n, StateCaps { min_gap: 0.3, ..Default::default() });
        let sol = solve_bplus(state.q(), &state.s_plus()).unwrap();
        prop_assert!(constraint_residual(state.q(), sol.b_plus.as_matrix(), state.s_plus().as_matrix()) < 1e-11);
        let spin = reconstruct_spin(state.q(), &build_b_r(&state).unwrap()).unwrap();
        prop_assert!((spin.as_matrix() - state.s_plus().as_matrix()).iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn hamiltonian_is_bounded_below_by_n(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = Rng64::seeded(seed);
        let state = random_state(&mut rng, n, StateCaps::default());
        prop_assert!(h_red(&state).unwrap() >= n as f64 - 1e-12);
    }

    #[test]
    fn observables_are_torus_invariant(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = Rng64::seeded(seed);
        let state = random_state(&mut rng, n, StateCaps::default());
        let theta: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let a = gauge_invariant_observables(&state).unwrap();
        let b = gauge_invariant_observables(&state.torus_conjugate(&theta)).unwrap();
        prop_assert_eq!(&a.labels, &b.labels);
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn recovery_round_trips(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = Rng64::seeded(seed);
        let state = random_state(&mut rng, n, StateCaps { min_gap: 0.3, ..Default::default() });
        let l = lax(&state).unwrap().into_matrix();
        let back = recover_state(state.q(), &l).unwrap();
        let l2 = lax(&back).unwrap().into_matrix();
        prop_assert!(fro(&(&l2 - &l)) < 1e-9 * fro(&l).max(1.0));
        let a = gauge_invariant_observables(&state).unwrap().values;
        let b = gauge_invariant_observables(&back).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn rmatrix_form_agrees(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = Rng64::seeded(seed);
        let state = random_state(&mut rng, n, StateCaps::default());
        let l = random_hermitian(&mut rng, n, 1.0);
        let (_, ldot) = rhs(state.q(), &l).unwrap();
        prop_assert!(fro(&(ldot - rmatrix_rhs(state.q(), &l).unwrap())) < 1e-12);
    }

    #[test]
    fn spectral_traces_expand_into_words(seed in any::<u64>(), n in 2usize..=5, k in 1usize..=4) {
        let mut rng = Rng64::seeded(seed);
        let state = random_state(&mut rng, n, StateCaps { min_gap: 0.3, ..Default::default() });
        let l = lax(&state).unwrap().into_matrix();
        let lambda = Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        let direct = power_trace(&spectral_lax(&state, lambda).unwrap(), k);
        let mut expanded = Complex64::new(0.0, 0.0);
        for mask in 0..(1u32 << k) {
            let word: Vec<Letter> = (0..k).map(|i| if mask >> i & 1 == 1 { Letter::B } else { Letter::A }).collect();
            expanded += lambda.powu(mask.count_ones()) * mixed_trace(state.q(), &l, &word).unwrap();
        }
        prop_assert!((direct - expanded).norm() < 1e-9 * direct.norm().max(1.0));
    }

    #[test]
    fn sutherland_forms_agree(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = Rng64::seeded(seed);
        let state = random_state(&mut rng, n, StateCaps::default());
        let s = SutherlandState::from_reduced(&state);
        let h = h_suth(&s).unwrap();
        let l = lax_suth(&s).unwrap();
        prop_assert!((0.5 * power_trace(&l, 2).re - h).abs() < 1e-12 * h.max(1.0));
        let tilde = h_suth_tilde(&s.q, &s.p, &s.xi_tilde()).unwrap();
        prop_assert!((tilde - h).abs() < 1e-12 * h.max(1.0));
    }

    #[test]
    fn coordinate_bracket_is_antisymmetric(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = Rng64::seeded(seed);
        let table = BracketTable::new(n).unwrap();
        let b: BorelElement = random_borel(&mut rng, n, 0.5, 1.0);
        let x = table.coordinates(b.as_matrix());
        let p = table.real_tensor(&x);
        for (a, row) in p.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                prop_assert!((v + p[c][a]).abs() < 1e-12);
            }
        }
        let f = Poly::var(table.vars(), rng.below(table.vars()));
        prop_assert!(table.bracket_gradients(&x, &f.gradient(&x), &f.gradient(&x)).abs() < 1e-14);
    }

    #[test]
    fn unipotent_spin_is_valid(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = Rng64::seeded(seed);
        let s = UpperUnipotent::new(identity(n) + random_strict_upper(&mut rng, n, 1.0)).unwrap();
        prop_assert!(s.as_matrix().diagonal().iter().all(|z| (z - 1.0).norm() == 0.0));
    }
}
