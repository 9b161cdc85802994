//! Constants and the modified Bessel function `K₀`.

use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `Γ(1/4)`.
pub const GAMMA_QUARTER: f64 = 3.625_609_908_221_908;

/// Constant `c` in `h² Σ' ln|x_j| f(x_j) = ∫ ln|x| f − h² f(0)(ln h + c) + o(h²)`
/// for the punctured trapezoid rule on the square lattice `hℤ²`.
pub fn lattice_log_constant() -> f64 {
    (2.0 * PI.sqrt()).ln() - 2.0 * GAMMA_QUARTER.ln()
}

/// Modified Bessel function of the second kind, order zero, for `x > 0`.
///
/// Power series below `x = 2`, Steed's continued fraction above.
pub fn bessel_k0(x: f64) -> f64 {
    assert!(x > 0.0, "K0 needs a positive argument, got {x}");
    if x <= 2.0 {
        k0_series(x)
    } else {
        k0_continued_fraction(x)
    }
}

fn k0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut tail = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
        if term * harmonic.max(1.0) < 1e-18 * tail.abs().max(1e-300) {
            break;
        }
    }
    -log_term * i0 + tail
}

fn k0_continued_fraction(x: f64) -> f64 {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() * (-x).exp() / s
}
