use std::f64::consts::PI;

use num_complex::Complex64;
use scatter_core::scattering::ScanOptions;
use scatter_core::verify::{self, Status};
use scatter_core::{make_grid, scan, Family, LambdaGrid, Potential, SolverOptions, SpectralPoint};

fn small_gaussian() -> Potential {
    let grid = make_grid(6.0, 48).unwrap();
    Potential::analytic(grid, Family::gaussian(0.5, 1.0), Complex64::new(0.0, 0.0)).unwrap()
}

#[test]
fn scan_based_checks_pass_on_a_coarse_grid() {
    let v = small_gaussian();
    let lambdas = LambdaGrid::from_annuli(&[0.05, 0.5, 0.8, 1.25, 2.0, 20.0], 4, 6).unwrap();
    let data = scan(&v, &lambdas, &ScanOptions::default()).unwrap();
    let mut records = vec![verify::check_ab_on_t(&data)];
    records.extend(verify::check_delta_properties(&data));
    records.extend(verify::check_b_symmetries(&data));
    for r in &records {
        assert_eq!(r.status, Status::Pass, "{r:?}");
    }
    let on_t = records.iter().find(|r| r.id == "delta/constant-on-T").unwrap();
    assert_eq!(on_t.details["samples"], 6.0);
    let continuity = records.iter().find(|r| r.id == "delta/continuity").unwrap();
    assert_eq!(continuity.details["path_sides"], 8.0);
}

#[test]
fn continuity_proxy_flags_a_step_at_t() {
    let v = small_gaussian();
    let lambdas = LambdaGrid::from_annuli(&[0.5, 0.8, 1.25, 2.0], 2, 4).unwrap();
    let mut data = scan(&v, &lambdas, &ScanOptions::default()).unwrap();
    let smooth = verify::check_delta_properties(&data);
    assert_eq!(smooth[0].status, Status::Pass, "{:?}", smooth[0]);
    for (p, d) in data.lambda.iter().zip(data.delta.iter_mut()) {
        if p.on_t() {
            d.as_mut().unwrap().value += 0.05;
        }
    }
    let stepped = verify::check_delta_properties(&data);
    assert_eq!(stepped[0].id, "delta/continuity");
    assert_eq!(stepped[0].status, Status::Fail);
}

#[test]
fn determinant_on_t_vanishing_makes_ab_check_inapplicable() {
    let v = small_gaussian();
    let lambdas = LambdaGrid::from_annuli(&[], 0, 4).unwrap();
    let mut data = scan(&v, &lambdas, &ScanOptions::default()).unwrap();
    data.delta[0].as_mut().unwrap().exceptional = true;
    let r = verify::check_ab_on_t(&data);
    assert_eq!(r.status, Status::Inapplicable);
    assert!(r.note.contains("Δ vanishes on T"));
}

#[test]
fn ln_delta_relation_on_a_coarse_grid() {
    let v = small_gaussian();
    let records = verify::check_dbar_lndelta(&v, Complex64::from_polar(0.5, PI / 4.0), 1e-3, &SolverOptions::default())
        .unwrap();
    assert!(records.iter().all(|r| r.status == Status::Pass), "{records:?}");
}

#[test]
fn stencils_near_the_circle_are_inapplicable() {
    let v = small_gaussian();
    let opts = SolverOptions::default();
    for r in verify::check_dbar_a(&v, Complex64::new(0.98, 0.0), 1e-3, &opts).unwrap() {
        assert_eq!(r.status, Status::Inapplicable);
        assert!(r.note.contains("stencil crosses T or E"));
    }
}

#[test]
fn shift_lemma_on_a_coarse_grid() {
    let v = small_gaussian();
    let lambdas: Vec<SpectralPoint> =
        [0.3, 2.0].iter().map(|&r| SpectralPoint::polar(r, 0.7).unwrap()).collect();
    let records =
        verify::check_shift_lemma(&v, Complex64::new(1.0, 1.0), &lambdas, &SolverOptions::default()).unwrap();
    assert!(records.iter().all(|r| r.status == Status::Pass), "{records:?}");
}

#[test]
fn transparency_demo_reports_nonzero_b() {
    let v = small_gaussian();
    let lambdas = LambdaGrid::from_annuli(&[0.5, 2.0], 4, 0).unwrap();
    let data = scan(&v, &lambdas, &ScanOptions::default()).unwrap();
    let r = verify::transparency_chain_demo(&v, &data).unwrap();
    assert_eq!(r.status, Status::Pass, "{r:?}");
    assert!(r.details["max_b"] >= 0.5 * r.details["max_born_b"]);

    let zero = Potential::zero(*v.grid());
    let data = scan(&zero, &lambdas, &ScanOptions::default()).unwrap();
    assert_eq!(verify::transparency_chain_demo(&zero, &data).unwrap().status, Status::Inapplicable);
}
