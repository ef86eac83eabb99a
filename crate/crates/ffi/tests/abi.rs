use std::ffi::CStr;
use std::ptr;

use sqbtc_ffi::*;

fn last_error() -> String {
    let p = sqbtc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(sqbtc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn single_atom_dense_spectrum() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(sqbtc_model_new(1, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0, &mut model), SqbtcStatus::Ok);
        let mut spec = ptr::null_mut();
        assert_eq!(sqbtc_spectrum_dense(model, &mut spec), SqbtcStatus::Ok);
        assert_eq!(sqbtc_spectrum_len(spec), 4);
        // Γ = 1 and NΓ/2 = 1/2, so {0, -Γ, -Γ, -2Γ} reads {0, -2, -2, -4}
        let mut re = Vec::new();
        for i in 0..4 {
            let (mut a, mut b) = (0.0, 0.0);
            assert_eq!(sqbtc_spectrum_get(spec, i, &mut a, &mut b), SqbtcStatus::Ok);
            assert!(b.abs() < 1e-12);
            re.push(a);
        }
        for (got, want) in re.iter().zip([0.0, -2.0, -2.0, -4.0]) {
            assert!((got - want).abs() < 1e-10, "{re:?}");
        }
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(sqbtc_spectrum_get(spec, 4, &mut a, &mut b), SqbtcStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));

        let mut gaps = SqbtcGaps { delta_1: 0.0, delta_2: 0.0, delta_omega: 0.0 };
        assert_eq!(sqbtc_spectrum_gaps(spec, &mut gaps), SqbtcStatus::Ok);
        assert!(gaps.delta_1.is_nan() && gaps.delta_omega.is_nan());
        assert!((gaps.delta_2 - 2.0).abs() < 1e-10);
        sqbtc_spectrum_free(spec);
        sqbtc_model_free(model);
    }
}

#[test]
fn dark_state_observables_and_occupations() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(sqbtc_model_new_reduced(4, 0.0, 0.0, &mut model), SqbtcStatus::Ok);
        let mut state = ptr::null_mut();
        assert_eq!(sqbtc_steady_state(model, &mut state), SqbtcStatus::Ok);
        assert_eq!(sqbtc_state_dim(state), 5);
        let mut obs = SqbtcObservables {
            sz_over_n: 0.0,
            sx_over_n: 0.0,
            sy_over_n: 0.0,
            var_sx: 0.0,
            var_sy: 0.0,
            participation_ratio: 0.0,
        };
        assert_eq!(sqbtc_state_observables(state, &mut obs), SqbtcStatus::Ok);
        assert!((obs.sz_over_n + 0.5).abs() < 1e-10);
        assert!((obs.var_sx - 1.0).abs() < 1e-10);
        let mut p = [0.0; 5];
        assert_eq!(sqbtc_state_occupations(state, p.as_mut_ptr(), 3), SqbtcStatus::BufferTooSmall);
        assert_eq!(sqbtc_state_occupations(state, p.as_mut_ptr(), 5), SqbtcStatus::Ok);
        assert!((p[4] - 1.0).abs() < 1e-10);
        sqbtc_state_free(state);
        sqbtc_model_free(model);
    }
}

#[test]
fn evolution_trace_and_wigner() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(sqbtc_model_new_reduced(6, 1.8, 0.0, &mut model), SqbtcStatus::Ok);
        let mut rho0 = ptr::null_mut();
        assert_eq!(sqbtc_state_all_down(6, &mut rho0), SqbtcStatus::Ok);
        let mut trace = ptr::null_mut();
        assert_eq!(sqbtc_evolve(model, rho0, 20.0, 0.01, 1e-8, 1e-10, &mut trace), SqbtcStatus::Ok);
        let n = sqbtc_trace_len(trace);
        assert_eq!(n, 2001);
        let mut t = vec![0.0; n];
        let mut sz = vec![0.0; n];
        assert_eq!(
            sqbtc_trace_copy(trace, t.as_mut_ptr(), sz.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), n),
            SqbtcStatus::Ok
        );
        assert_eq!(sz[0], -0.5);
        assert!((t[n - 1] - 20.0).abs() < 1e-12);
        let mut f = 0.0;
        assert_eq!(sqbtc_trace_dominant_frequency(trace, 0.0, &mut f), SqbtcStatus::Ok);
        assert!(f > 1.0 && f < 5.0, "{f}");
        assert_eq!(sqbtc_trace_dominant_frequency(trace, 19.0, &mut f), SqbtcStatus::Numerical);
        sqbtc_trace_free(trace);

        let mut w = ptr::null_mut();
        assert_eq!(sqbtc_wigner(rho0, 32, 32, &mut w), SqbtcStatus::Ok);
        assert!((sqbtc_wigner_integral(w) - 1.0).abs() < 1e-10);
        let mut vals = vec![0.0; 32 * 32];
        assert_eq!(sqbtc_wigner_values(w, vals.as_mut_ptr(), vals.len()), SqbtcStatus::Ok);
        sqbtc_wigner_free(w);
        sqbtc_state_free(rho0);
        sqbtc_model_free(model);
    }
}

#[test]
fn errors_are_reported_not_panicked() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(sqbtc_model_new(0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, &mut model), SqbtcStatus::InvalidArgument);
        assert_eq!(sqbtc_model_new(10_000, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, &mut model), SqbtcStatus::ResourceCap);
        assert!(model.is_null());
        assert_eq!(sqbtc_model_new(2, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, &mut model), SqbtcStatus::InvalidArgument);
        assert!(last_error().contains("gamma"));
        assert_eq!(sqbtc_model_new_reduced(2, 1.0, 0.0, ptr::null_mut()), SqbtcStatus::NullPointer);
        let mut spec = ptr::null_mut();
        assert_eq!(sqbtc_spectrum_dense(ptr::null(), &mut spec), SqbtcStatus::NullPointer);
        assert!(last_error().contains("model"));
        assert_eq!(sqbtc_spectrum_len(ptr::null()), 0);
        sqbtc_model_free(ptr::null_mut());
        sqbtc_spectrum_free(ptr::null_mut());

        assert_eq!(sqbtc_model_new_reduced(2, 1.0, 0.0, &mut model), SqbtcStatus::Ok);
        assert!(sqbtc_last_error().is_null());
        sqbtc_model_free(model);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sqbtc.h")).unwrap();
    for name in [
        "sqbtc_model_new",
        "sqbtc_spectrum_low_lying",
        "sqbtc_steady_state",
        "sqbtc_evolve",
        "sqbtc_wigner_values",
        "sqbtc_last_error",
        "SQBTC_STATUS_RESOURCE_CAP",
        "typedef struct SqbtcModel SqbtcModel",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
