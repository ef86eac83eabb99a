mod common;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use sqbtc::clebsch::clebsch_gordan;
use sqbtc::spin::{build_spin_operators, expectation, variance, CMatrix, DensityMatrix};

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn casimir_at_one_hundred_atoms() {
    let ops = build_spin_operators(100).unwrap();
    let s2 = &ops.s_x * &ops.s_x + &ops.s_y * &ops.s_y + &ops.s_z * &ops.s_z;
    let target = CMatrix::identity(101, 101) * C64::new(2550.0, 0.0);
    assert!(max_abs(&(s2 - target)) / 2550.0 < 1e-10);
}

#[test]
fn lowering_operator_matches_reference_ladder() {
    for n in [1, 2, 7, 40] {
        let ops = build_spin_operators(n).unwrap();
        let oracle = common::lowering(n);
        assert!(max_abs(&(&ops.s_minus - &oracle)) < 1e-13, "N={n}");
    }
}

#[test]
fn algebra_identities_for_every_size_up_to_64() {
    let i = C64::new(0.0, 1.0);
    for n in 1..=64 {
        let ops = build_spin_operators(n).unwrap();
        let j = n as f64 / 2.0;
        let scale = j * (j + 1.0);
        let xy = &ops.s_x * &ops.s_y - &ops.s_y * &ops.s_x;
        assert!(max_abs(&(xy - &ops.s_z * i)) / scale < 1e-10, "[Sx,Sy] at N={n}");
        let pm = &ops.s_plus * &ops.s_minus - &ops.s_minus * &ops.s_plus;
        assert!(max_abs(&(pm - &ops.s_z * C64::new(2.0, 0.0))) / scale < 1e-10, "[S+,S-] at N={n}");
        assert!(max_abs(&(ops.s_plus.adjoint() - &ops.s_minus)) < 1e-14);
        let s2 = &ops.s_x * &ops.s_x + &ops.s_y * &ops.s_y + &ops.s_z * &ops.s_z;
        let dev = s2 - CMatrix::identity(n + 1, n + 1) * C64::new(scale, 0.0);
        assert!(max_abs(&dev) / scale < 1e-10, "Casimir at N={n}");
    }
}

#[test]
fn construction_is_bitwise_deterministic() {
    let a = build_spin_operators(33).unwrap();
    let b = build_spin_operators(33).unwrap();
    for (x, y) in [(&a.s_x, &b.s_x), (&a.s_y, &b.s_y), (&a.s_z, &b.s_z), (&a.s_plus, &b.s_plus)] {
        assert!(x.iter().zip(y.iter()).all(|(p, q)| p.re.to_bits() == q.re.to_bits() && p.im.to_bits() == q.im.to_bits()));
    }
}

#[test]
fn expectation_and_variance_on_simple_states() {
    let ops = build_spin_operators(100).unwrap();
    let down = DensityMatrix::all_down(100).unwrap();
    assert!((expectation(&ops.s_z, &down).unwrap().re + 50.0).abs() < 1e-12);
    assert!(variance(&ops.s_z, &down).unwrap().abs() < 1e-12);

    let ops2 = build_spin_operators(2).unwrap();
    let down2 = DensityMatrix::all_down(2).unwrap();
    assert!((variance(&ops2.s_x, &down2).unwrap() - 0.5).abs() < 1e-12);
    let mixed3 = DensityMatrix::maximally_mixed(3);
    assert!((variance(&ops2.s_y, &mixed3).unwrap() - 2.0 / 3.0).abs() < 1e-12);

    let ops4 = build_spin_operators(4).unwrap();
    let mixed5 = DensityMatrix::maximally_mixed(5);
    assert!(expectation(&ops4.s_x, &mixed5).unwrap().norm() < 1e-14);
    assert!((expectation(&CMatrix::identity(5, 5), &mixed5).unwrap().re - 1.0).abs() < 1e-14);
}

#[test]
fn mismatched_and_non_hermitian_inputs_are_rejected() {
    let ops = build_spin_operators(3).unwrap();
    let rho = DensityMatrix::maximally_mixed(5);
    assert!(expectation(&ops.s_z, &rho).is_err());
    let rho4 = DensityMatrix::maximally_mixed(4);
    assert!(variance(&ops.s_plus, &rho4).is_err());
    assert!(build_spin_operators(0).is_err());
    assert!(build_spin_operators(513).is_err());
}

#[test]
fn clebsch_gordan_exact_values() {
    let h = 0.5;
    let cases = [
        (h, h, h, -h, 1.0, 0.0, 0.5f64.sqrt()),
        (h, h, h, -h, 0.0, 0.0, 0.5f64.sqrt()),
        (h, -h, h, h, 0.0, 0.0, -(0.5f64.sqrt())),
        (1.0, 1.0, 1.0, -1.0, 0.0, 0.0, 1.0 / 3f64.sqrt()),
        (1.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0 / 3f64.sqrt()),
        (1.0, 1.0, 1.0, -1.0, 2.0, 0.0, 1.0 / 6f64.sqrt()),
        (1.0, 0.0, 1.0, 0.0, 2.0, 0.0, (2.0f64 / 3.0).sqrt()),
        (1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0),
        (1.0, -1.0, 1.0, 1.0, 1.0, 0.0, -(0.5f64.sqrt())),
        (1.5, 1.5, h, -h, 1.0, 1.0, 3f64.sqrt() / 2.0),
        (1.5, h, h, h, 1.0, 1.0, -0.5),
        (2.0, 2.0, 2.0, -2.0, 0.0, 0.0, 1.0 / 5f64.sqrt()),
        (2.0, 1.0, 2.0, -1.0, 0.0, 0.0, -1.0 / 5f64.sqrt()),
    ];
    for (j1, m1, j2, m2, j, m, want) in cases {
        let got = clebsch_gordan(j1, m1, j2, m2, j, m);
        assert!((got - want).abs() < 1e-14, "<{j1} {m1}; {j2} {m2} | {j} {m}> = {got}, want {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn clebsch_gordan_columns_are_orthonormal(two_j1 in 0i64..12, two_j2 in 0i64..12) {
        let (j1, j2) = (two_j1 as f64 / 2.0, two_j2 as f64 / 2.0);
        let jmin = (j1 - j2).abs();
        let mut js = Vec::new();
        let mut j = jmin;
        while j <= j1 + j2 + 1e-9 {
            js.push(j);
            j += 1.0;
        }
        let m = jmin;
        for &ja in &js {
            for &jb in &js {
                let mut dot = 0.0;
                let mut m1 = -j1;
                while m1 <= j1 + 1e-9 {
                    let m2 = m - m1;
                    if m2.abs() <= j2 + 1e-9 {
                        dot += clebsch_gordan(j1, m1, j2, m2, ja, m) * clebsch_gordan(j1, m1, j2, m2, jb, m);
                    }
                    m1 += 1.0;
                }
                let want = if ja == jb { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-12);
            }
        }
    }
}
