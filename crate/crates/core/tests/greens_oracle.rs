//! Cross-checks of the tabulated Green's function against a direct midpoint
//! quadrature of its Fourier integral.

use std::f64::consts::PI;

use scatter_core::greens::{faddeev_g, reference_g_on_circle, symbol_denominator};
use scatter_core::special::bessel_k0;
use scatter_core::Complex64;

/// `-(1/2π)² ∬ e^{i(ζ₁x₁+ζ₂x₂)} / S(ζ) dζ` on `[-K, K]²` with cell size `d`.
///
/// The slowly decaying part `1/(|ζ|²+1)` is subtracted and added back in
/// closed form (`K₀(|x|)/2π`). Cell edges sit on multiples of `d`, so roots of
/// the symbol on that lattice are vertices and never sampled.
fn brute_force(z: Complex64, lambda: Complex64, d: f64, k: f64) -> Complex64 {
    let n = (k / d).round() as i64;
    let nodes: Vec<f64> = (-n..n).map(|j| (j as f64 + 0.5) * d).collect();
    let ex: Vec<Complex64> = nodes.iter().map(|&t| Complex64::cis(t * z.re)).collect();
    let ey: Vec<Complex64> = nodes.iter().map(|&t| Complex64::cis(t * z.im)).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for (b, eb) in nodes.iter().zip(&ey) {
        let mut row = Complex64::new(0.0, 0.0);
        for (a, ea) in nodes.iter().zip(&ex) {
            let zeta = Complex64::new(*a, *b);
            let s = symbol_denominator(zeta, lambda);
            let remainder = 1.0 / s - 1.0 / (zeta.norm_sqr() + 1.0);
            row += ea * remainder;
        }
        total += row * eb;
    }
    -total * d * d / (4.0 * PI * PI) - bessel_k0(z.norm()) / (2.0 * PI)
}

/// On the unit circle the two roots merge and `1/S` behaves like
/// `1/(2iζ₁ + ζ₂²)` near the origin, so the midpoint error decays like `√d`;
/// one Richardson step removes the leading term.
fn brute_force_on_circle(z: Complex64, lambda: Complex64) -> Complex64 {
    let coarse = brute_force(z, lambda, 0.01, 40.0);
    let fine = brute_force(z, lambda, 0.005, 40.0);
    let w = 2f64.sqrt();
    (w * fine - coarse) / (w - 1.0)
}

#[test]
fn normalization_at_lambda_one() {
    // The constant relating G on the unit circle to K₀ is fixed by quadrature
    // of the defining integral, not by a Hankel-function convention.
    let lambda = Complex64::new(1.0, 0.0);
    let z = Complex64::new(1.0, 0.0);
    let direct = brute_force_on_circle(z, lambda);
    let big_g = (-0.5 * (lambda * z.conj() + z / lambda)).exp() * direct;
    let reference = reference_g_on_circle(1.0).unwrap();
    let ratio = big_g / reference;
    assert!((ratio - 1.0).norm() < 1e-3, "G(1,1)/reference = {ratio}");
    assert!(reference.re < 0.0);
}

#[test]
fn line_integral_form_matches_fourier_integral() {
    let lambdas = [
        Complex64::new(0.5, 0.0),
        Complex64::new(2.0, 0.0),
        Complex64::new(0.0, 0.5),
    ];
    let points = [
        Complex64::new(1.0, 0.5),
        Complex64::new(-1.0, 0.7),
        Complex64::new(2.0, 0.0),
    ];
    for lambda in lambdas {
        for z in points {
            let direct = brute_force(z, lambda, 0.01, 40.0);
            let fast = faddeev_g(z, lambda).unwrap();
            assert!(
                (direct - fast).norm() < 1e-4,
                "λ={lambda} z={z}: quadrature {direct} vs line integral {fast}"
            );
        }
    }
}
