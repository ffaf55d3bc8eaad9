use std::ffi::{c_char, CStr};
use std::process::Command;
use std::ptr;

use groundstate_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe { gs_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn minimizer_round_trip_matches_the_gausson() {
    unsafe {
        let mut nl = ptr::null_mut();
        assert_eq!(gs_nonlinearity_logarithmic(&mut nl), GsStatus::Ok);
        let mut grid = ptr::null_mut();
        assert_eq!(gs_grid_radial(3, 12.0, 1024, GsGrading::Uniform, &mut grid), GsStatus::Ok);
        assert_eq!(gs_grid_len(grid), 1024);

        let opts = gs_solve_options_default();
        let mut sol = ptr::null_mut();
        assert_eq!(gs_minimize(grid, nl, 0.0, &opts, &mut sol), GsStatus::Ok);
        let mut level = 0.0;
        assert_eq!(gs_solution_level(sol, &mut level), GsStatus::Ok);
        // Gausson u = e^{(N−1)/2 − r²/2} has level e^{N−1}π^{N/2}/2
        let expected = 0.5 * std::f64::consts::E.powi(2) * std::f64::consts::PI.powf(1.5);
        assert!((level / expected - 1.0).abs() < 1e-2, "{level} vs {expected}");
        let mut converged = 0;
        assert_eq!(gs_solution_converged(sol, &mut converged), GsStatus::Ok);
        assert_eq!(converged, 1);

        let mut field = ptr::null_mut();
        assert_eq!(gs_solution_field(sol, &mut field), GsStatus::Ok);
        let mut values = vec![0.0; gs_field_len(field)];
        assert_eq!(gs_field_values(field, values.as_mut_ptr(), values.len()), GsStatus::Ok);

        let mut copy = ptr::null_mut();
        assert_eq!(gs_field_from_values(grid, values.as_ptr(), values.len(), &mut copy), GsStatus::Ok);
        let mut again = 0.0;
        assert_eq!(gs_reduced_level(copy, nl, 0.0, &mut again), GsStatus::Ok);
        assert!((again / level - 1.0).abs() < 1e-12);
        let mut report = GsEnergyReport::default();
        assert_eq!(gs_energy(copy, nl, 0.0, &mut report), GsStatus::Ok);
        assert!(report.pohozaev_residual.abs() < 1e-3 * report.dirichlet);

        gs_field_free(copy);
        gs_field_free(field);
        gs_solution_free(sol);
        gs_grid_free(grid);
        gs_nonlinearity_free(nl);
    }
}

#[test]
fn continuation_reaches_eps_zero() {
    unsafe {
        let mut nl = ptr::null_mut();
        assert_eq!(gs_nonlinearity_cubic_quintic(3, 4.0, 0.1, &mut nl), GsStatus::Ok);
        let mut grid = ptr::null_mut();
        assert_eq!(gs_grid_radial(3, 24.0, 1024, GsGrading::Uniform, &mut grid), GsStatus::Ok);
        let eps = [0.25, 0.0];
        let mut sol = ptr::null_mut();
        assert_eq!(gs_continuation(grid, nl, eps.as_ptr(), eps.len(), ptr::null(), &mut sol), GsStatus::Ok);
        let mut report = GsEnergyReport::default();
        assert_eq!(gs_solution_report(sol, &mut report), GsStatus::Ok);
        assert_eq!(report.eps, 0.0);
        assert!(report.dirichlet > 0.0);
        gs_solution_free(sol);
        gs_grid_free(grid);
        gs_nonlinearity_free(nl);
    }
}

#[test]
fn library_errors_map_to_status_codes() {
    unsafe {
        let mut nl = ptr::null_mut();
        assert_eq!(gs_nonlinearity_zero_mass(2, &mut nl), GsStatus::Domain);
        assert!(nl.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(gs_nonlinearity_cubic_quintic(3, 4.0, 0.2, &mut nl), GsStatus::Ok);
        let mut grid = ptr::null_mut();
        assert_eq!(gs_grid_radial(3, 24.0, 512, GsGrading::Uniform, &mut grid), GsStatus::Ok);
        let mut sol = ptr::null_mut();
        assert_eq!(gs_minimize(grid, nl, 0.0, ptr::null(), &mut sol), GsStatus::EmptyAdmissibleSet);
        assert!(sol.is_null());
        assert!(last_error().contains("empty admissible set"));

        let short = [1.0; 3];
        let mut field = ptr::null_mut();
        assert_eq!(gs_field_from_values(grid, short.as_ptr(), short.len(), &mut field), GsStatus::Domain);
        let mut x = 0.0;
        assert_eq!(gs_reduced_level(ptr::null(), nl, 0.0, &mut x), GsStatus::NullPointer);

        gs_grid_free(grid);
        gs_nonlinearity_free(nl);
        gs_nonlinearity_free(ptr::null_mut());
    }
}

#[test]
fn scalar_helpers() {
    unsafe {
        let mut m0 = 0.0;
        assert_eq!(gs_m0_threshold(3, 4.0, &mut m0), GsStatus::Ok);
        // sup_s 2(s⁴/4 − s⁶/6)/s² is attained at s² = 3/4
        assert!((m0 - 3.0 / 16.0).abs() < 1e-9, "{m0}");
        let mut c = 0.0;
        assert_eq!(gs_sharp_constant(3, 20.0, &mut c), GsStatus::Ok);
        assert!(c > 0.0);
        assert!(!CStr::from_ptr(gs_version()).to_bytes().is_empty());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/groundstate.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["gs_minimize", "gs_continuation", "gs_last_error_message", "GS_STATUS_PANIC"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header]).output() else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
