mod common;

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqbtc::liouvillian::{apply_rhs, apply_rhs_matrix, build_liouvillian, perfect_squeezing, ModelParams};
use sqbtc::spectral::{full_spectrum, steady_state};
use sqbtc::spin::{CMatrix, DensityMatrix};

use common::{frobenius, random_density, random_hermitian, vacuum_rhs};

fn params_strategy() -> impl Strategy<Value = ModelParams> {
    (1usize..=8, 0.0f64..3.0, 0.05f64..2.0, 0.0f64..2.0, 0.0f64..1.0, 0.0f64..2.0 * PI, 0.0f64..2.0 * PI).prop_map(
        |(n, rabi, gamma, n_bar, frac, psi, phi)| {
            ModelParams::new(n, rabi, gamma, n_bar)
                .with_m_abs(frac * perfect_squeezing(n_bar))
                .with_drive_phase(psi)
                .with_squeeze_phase(phi)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vacuum_limit_matches_reference_master_equation(
        n in 1usize..=10, omega in 0.0f64..3.0, gamma in 0.05f64..2.0, seed in any::<u64>()
    ) {
        let params = ModelParams::new(n, omega, gamma, 0.0).with_m_abs(0.0).with_drive_phase(PI);
        let l = build_liouvillian(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(n + 1, &mut rng);
        let want = vacuum_rhs(n, omega, gamma, &rho);
        let scale = frobenius(&want).max(1.0);
        prop_assert!(frobenius(&(l.apply(&rho).unwrap() - &want)) / scale < 1e-12);
        prop_assert!(frobenius(&(apply_rhs_matrix(&params, &rho).unwrap() - &want)) / scale < 1e-12);
    }

    #[test]
    fn generator_preserves_trace_and_hermiticity(params in params_strategy(), seed in any::<u64>()) {
        let l = build_liouvillian(&params).unwrap();
        let norm = l.matrix().norm_inf();
        let row = l.trace_row();
        prop_assert!(row.iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-13 * norm.max(1.0));

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(params.n_atoms + 1, &mut rng);
        let out = l.apply(&h).unwrap();
        prop_assert!(out.trace().norm() <= 1e-12 * norm.max(1.0));
        prop_assert!(frobenius(&(&out - out.adjoint())) <= 1e-12 * norm.max(1.0));
    }

    #[test]
    fn matrix_free_rhs_agrees_with_assembled_generator(params in params_strategy(), seed in any::<u64>()) {
        let l = build_liouvillian(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_hermitian(params.n_atoms + 1, &mut rng);
        let a = l.apply(&rho).unwrap();
        let b = apply_rhs_matrix(&params, &rho).unwrap();
        prop_assert!(frobenius(&(&a - &b)) <= 1e-12 * frobenius(&a).max(1e-300));
    }

    #[test]
    fn generator_is_linear(params in params_strategy(), seed in any::<u64>(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let l = build_liouvillian(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = params.n_atoms + 1;
        let (x, y) = (random_hermitian(d, &mut rng), random_hermitian(d, &mut rng));
        let (a, b) = (C64::new(alpha, 0.3), C64::new(beta, -0.7));
        let lhs = l.apply(&(&x * a + &y * b)).unwrap();
        let rhs = l.apply(&x).unwrap() * a + l.apply(&y).unwrap() * b;
        prop_assert!(frobenius(&(&lhs - &rhs)) <= 1e-12 * frobenius(&lhs).max(1.0));
    }
}

#[test]
fn matrix_free_rhs_on_random_states_at_four_atoms() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = ModelParams::reduced(4, 1.3, 0.6).with_squeeze_phase(0.4);
    let l = build_liouvillian(&params).unwrap();
    for _ in 0..20 {
        let rho = DensityMatrix::new(random_density(5, &mut rng)).unwrap();
        let a = l.apply(rho.matrix()).unwrap();
        let b = apply_rhs(&params, &rho).unwrap();
        assert!(frobenius(&(&a - &b)) <= 1e-12 * frobenius(&a));
    }
}

#[test]
fn dark_state_and_steady_state_are_fixed_points() {
    let params = ModelParams::new(6, 0.0, 0.4, 0.0).with_m_abs(0.0);
    let down = DensityMatrix::all_down(6).unwrap();
    assert!(frobenius(&apply_rhs(&params, &down).unwrap()) < 1e-14);

    let params = ModelParams::reduced(8, 1.8, 0.3);
    let l = build_liouvillian(&params).unwrap();
    let rho = steady_state(&l).unwrap();
    let r = apply_rhs(&params, &rho).unwrap();
    assert!(r.iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-9 * l.matrix().norm_inf());
}

#[test]
fn single_atom_squeezed_bath_rates() {
    for (n_bar, phi) in [(0.0, 0.0), (0.3, 0.0), (1.0, 1.1), (2.5, 0.0)] {
        let gamma = 0.8;
        let m = perfect_squeezing(n_bar);
        let params = ModelParams::new(1, 0.0, gamma, n_bar).with_m_abs(m).with_squeeze_phase(phi);
        let spec = full_spectrum(&build_liouvillian(&params).unwrap()).unwrap();
        let unit = params.rate_unit();
        let mut got: Vec<f64> = spec.eigenvalues.iter().map(|z| z.re * unit).collect();
        got.sort_by(|a, b| b.total_cmp(a));
        let want = common::single_atom_eigenvalues(gamma, n_bar, m);
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-10, "n̄={n_bar}: {got:?} vs {want:?}");
        }
        assert!(spec.eigenvalues.iter().all(|z| z.im.abs() < 1e-10));
    }
}

#[test]
fn rejects_invalid_parameters() {
    assert!(build_liouvillian(&ModelParams::new(3, 1.0, -1.0, 0.0)).is_err());
    assert!(build_liouvillian(&ModelParams::new(3, 1.0, 1.0, -0.1)).is_err());
    let unphysical = ModelParams::new(3, 1.0, 1.0, 0.5).with_m_abs(2.0 * perfect_squeezing(0.5));
    assert!(build_liouvillian(&unphysical).is_err());
    let params = ModelParams::reduced(3, 1.0, 0.0);
    assert!(apply_rhs_matrix(&params, &CMatrix::zeros(3, 3)).is_err());
}
