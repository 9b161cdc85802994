use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use scatter_core::scattering::{b_phase, evaluate_point, r_coefficient, Flag, ScanOptions};
use scatter_core::spectral::Region;
use scatter_core::verify::{self, anchor, CheckRecord, ReportMetadata, Status};
use scatter_core::{assemble_report, make_grid, LambdaGrid, Potential, SolverOptions, SpectralPoint};

fn off_circle() -> impl Strategy<Value = SpectralPoint> {
    (prop_oneof![0.01f64..0.95, 1.05f64..100.0], 0.0..2.0 * PI)
        .prop_map(|(r, t)| SpectralPoint::polar(r, t).unwrap())
}

proptest! {
    #[test]
    fn inversion_is_an_involution_swapping_regions(p in off_circle()) {
        let q = p.inverse_conjugate();
        prop_assert!((q.inverse_conjugate().lambda() - p.lambda()).norm() <= 1e-12 * p.modulus().max(1.0));
        prop_assert_eq!(q.sign(), -p.sign());
        prop_assert!((q.mismatch() + p.mismatch()).norm() <= 1e-9 * (1.0 + p.mismatch().norm()));
        let a = p.antipodal_inverse();
        prop_assert!((a.mismatch() - p.mismatch()).norm() <= 1e-9 * (1.0 + p.mismatch().norm()));
    }

    #[test]
    fn circle_points_have_no_mismatch(t in 0.0..2.0 * PI) {
        let p = SpectralPoint::on_circle(t);
        prop_assert_eq!(p.region(), Region::Circle);
        prop_assert!(p.mismatch().norm() < 1e-12);
        prop_assert_eq!(p.sign(), 0.0);
    }

    #[test]
    fn b_phase_is_unimodular(p in off_circle(), x in -8.0f64..8.0, y in -8.0f64..8.0) {
        prop_assert!((b_phase(p, Complex64::new(x, y)).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reflection_coefficient_conjugation(p in off_circle(), re in -1.0f64..1.0, im in -1.0f64..1.0) {
        // With b(1/λ̄) = conj b(λ), r(1/λ̄) = -λ² conj r(λ).
        let b = Complex64::new(re, im);
        let q = p.inverse_conjugate();
        let r = r_coefficient(p, b);
        let rq = r_coefficient(q, b.conj());
        let l = p.lambda();
        prop_assert!((rq + l * l * r.conj()).norm() <= 1e-12 * (1.0 + rq.norm()));
    }

    #[test]
    fn obstruction_mismatch_is_imaginary_and_affine_in_c(
        p in off_circle(),
        c1 in (-5.0f64..5.0, -5.0f64..5.0),
        c2 in (-5.0f64..5.0, -5.0f64..5.0),
    ) {
        let l = p.lambda();
        let c1 = Complex64::new(c1.0, c1.1);
        let c2 = Complex64::new(c2.0, c2.1);
        let m1 = verify::exponent_mismatch(l, c1);
        let m2 = verify::exponent_mismatch(l, c2);
        let m0 = verify::exponent_mismatch(l, Complex64::new(0.0, 0.0));
        let scale = 1.0 + m0.norm() + m1.norm();
        prop_assert!(m1.re.abs() <= 1e-9 * scale);
        // m(c1) + m(c2) - m(0) = m(c1 + c2)
        let sum = verify::exponent_mismatch(l, c1 + c2);
        prop_assert!((m1 + m2 - m0 - sum).norm() <= 1e-9 * (scale + m2.norm()));
    }

    #[test]
    fn obstruction_sampling_is_seeded(seed in any::<u64>()) {
        let a = verify::obstruction_samples(seed, 16);
        prop_assert_eq!(&a, &verify::obstruction_samples(seed, 16));
        for (k, l) in a.iter().enumerate() {
            let m = l.norm();
            if k % 2 == 0 {
                prop_assert!((0.01..0.1).contains(&m));
            } else {
                prop_assert!((10.0..100.0).contains(&m));
            }
        }
    }

    #[test]
    fn report_order_and_verdict(statuses in proptest::collection::vec(0u8..3, 0..12)) {
        let records: Vec<CheckRecord> = statuses
            .iter()
            .enumerate()
            .rev()
            .map(|(i, s)| {
                let mut r = CheckRecord::measured(&format!("check-{i:02}"), anchor::PLUMBING, 0.0, 1.0, "");
                r.status = match s { 0 => Status::Pass, 1 => Status::Fail, _ => Status::Inapplicable };
                r
            })
            .collect();
        let meta = ReportMetadata { grid: None, lambda_grid: None, solver: SolverOptions::default(), notes: vec![] };
        let report = assemble_report(records, meta).unwrap();
        prop_assert!(report.records.windows(2).all(|w| w[0].id < w[1].id));
        prop_assert_eq!(report.passed, !statuses.contains(&1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn vacuum_is_exact_everywhere(p in off_circle()) {
        let v = Potential::zero(make_grid(4.0, 32).unwrap());
        let r = evaluate_point(&v, None, p, &ScanOptions::default());
        let mu = r.mu.unwrap();
        prop_assert!(mu.samples.iter().all(|x| *x == Complex64::new(1.0, 0.0)));
        prop_assert_eq!(r.a.unwrap().norm(), 0.0);
        // b is withheld where its oscillation is unresolved.
        match r.b {
            Some(b) => prop_assert_eq!(b.norm(), 0.0),
            None => prop_assert!(r.flags.contains(&Flag::Aliasing)),
        }
        prop_assert_eq!(r.delta.unwrap().value, Complex64::new(1.0, 0.0));
    }
}

#[test]
fn default_grid_arithmetic() {
    let grid = LambdaGrid::default_scan();
    assert_eq!(grid.len(), 224);
    assert_eq!(grid.circle_points().count(), 32);
    // Every off-circle sample has its inverse and antipodal partners in the grid.
    for p in grid.points().iter().filter(|p| !p.on_t()) {
        for q in [p.inverse_conjugate(), p.antipodal_inverse()] {
            assert!(grid.points().iter().any(|x| (x.lambda() - q.lambda()).norm() < 1e-9 * (1.0 + q.modulus())));
        }
    }
}
