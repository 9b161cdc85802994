//! Measured residuals for the identities satisfied by `g`, `μ`, `a`, `b`
//! and `Δ`, collected into a [`VerificationReport`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{big_g_prefactor, build_greens_table, reference_g_on_circle};
use crate::grid::Grid;
use crate::lippmann::{build_kernel_with, modified_fredholm_det, solve_mu_with, SolverOptions};
use crate::potential::{Potential, DEFAULT_EPSILON};
use crate::scattering::{born_b, compute_a, compute_b, ScatteringData};
use crate::spectral::SpectralPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Preconditions not met; excluded from the overall verdict.
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    /// The identity being measured, or "plumbing".
    pub anchor: String,
    pub residual: f64,
    pub tol: f64,
    pub status: Status,
    /// Fingerprint of the potential(s) involved.
    pub inputs: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl CheckRecord {
    /// Record with status decided by `residual ≤ tol`. Non-finite residuals fail.
    pub fn measured(id: &str, anchor: &str, residual: f64, tol: f64, inputs: &str) -> Self {
        let (residual, status) = if residual.is_finite() {
            (residual.abs(), if residual.abs() <= tol { Status::Pass } else { Status::Fail })
        } else {
            (f64::MAX, Status::Fail)
        };
        Self {
            id: id.to_string(),
            anchor: anchor.to_string(),
            residual,
            tol,
            status,
            inputs: inputs.to_string(),
            details: BTreeMap::new(),
            note: String::new(),
        }
    }

    pub fn inapplicable(id: &str, anchor: &str, tol: f64, inputs: &str, note: &str) -> Self {
        Self {
            status: Status::Inapplicable,
            note: note.to_string(),
            ..Self::measured(id, anchor, 0.0, tol, inputs)
        }
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Anchors: the identity each check measures.
pub mod anchor {
    pub const AB_ON_T: &str = "a(λ) = b(λ) for |λ| = 1 when Δ ≠ 0 on |λ| = 1";
    pub const DELTA_CONTINUITY: &str = "Δ is continuous in λ";
    pub const DELTA_LIMITS: &str = "Δ(λ) → 1 as λ → 0 and λ → ∞";
    pub const DELTA_CONST_T: &str = "Δ is constant on |λ| = 1";
    pub const DELTA_REAL: &str = "Δ is real-valued";
    pub const DELTA_INVERSION: &str = "Δ(λ) = Δ(1/λ̄)";
    pub const B_CONJ: &str = "b(1/λ̄) = conj b(λ)";
    pub const B_ANTIPODAL: &str = "b(-1/λ̄) = b(λ)";
    pub const G_CONJ: &str = "conj G(z, λ) = G(z, 1/λ̄)";
    pub const G_ROTATION: &str = "g(e^{iφ}z, e^{iφ}λ) = g(z, λ)";
    pub const G_ON_T: &str = "G(z, λ) = (-i/4) H₀⁽¹⁾(i|z|) for |λ| = 1";
    pub const DBAR_A: &str = "∂a/∂λ̄ = π sgn(1 - |λ|²) |b(λ)|² / λ̄";
    pub const DBAR_MU: &str = "∂μ/∂λ̄ = r(z, λ) conj μ(z, λ)";
    pub const DBAR_LN_DELTA: &str = "∂ ln Δ/∂λ̄ = -π sgn(|λ|² - 1) (a(1/λ̄) - v̂(0)) / λ̄";
    pub const SHIFT_A: &str = "a_ζ(λ) = a(λ) for v_ζ(z) = v(z - ζ)";
    pub const SHIFT_B: &str =
        "b_ζ(λ) = exp(-½((λ - 1/λ̄)ζ̄ - (λ̄ - 1/λ)ζ)) b(λ) for v_ζ(z) = v(z - ζ)";
    pub const SOLITON: &str =
        "translation phase and cubic flow phase of b are independent near 0 and ∞, so a soliton has b ≡ 0";
    pub const TRANSPARENCY: &str = "b ≡ 0 forces v ≡ 0";
    pub const A_LIMIT: &str = "a(λ) → v̂(0) as λ → ∞";
    pub const BORN: &str = "b - v̂(i(λ - 1/λ̄)) = O(v²)";
    pub const PLUMBING: &str = "plumbing";
}

pub const TOL_AB_ON_T: f64 = 1e-3;
pub const TOL_DELTA_REAL: f64 = 1e-6;
pub const TOL_DELTA_CONST_T: f64 = 1e-3;
pub const TOL_DELTA_LIMIT: f64 = 0.01;
pub const TOL_SYMMETRY: f64 = 1e-4;
/// Largest ratio of the step from the samples nearest T onto T to the step
/// predicted by extrapolation along the radial path.
pub const TOL_CONTINUITY_RATIO: f64 = 10.0;
pub const TOL_DBAR: f64 = 0.05;
pub const DEFAULT_DBAR_STEP: f64 = 1e-3;
/// `|D(h) - D(h/2)| ≤ STEP_HALVING_TOL·|D(h/2)|` for the finite differences.
pub const STEP_HALVING_TOL: f64 = 0.01;
pub const TOL_SHIFT: f64 = 1e-3;
pub const TOL_A_LIMIT: f64 = 0.01;
pub const MISMATCH_FLOOR: f64 = 1e-8;
pub const SOLITON_FRACTION: f64 = 0.95;
/// `d-bar` checks stay this far from the unit circle.
pub const CIRCLE_EXCLUSION: f64 = 0.05;
const AB_GUARD: f64 = 1e-14;

fn relative(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(1e-300)
    }
}

/// `max_T |a - b| / (|a| + |b| + δ)`.
pub fn check_ab_on_t(data: &ScatteringData) -> CheckRecord {
    let id = "ab/on-T";
    let fp = &data.metadata.fingerprint;
    let on_t: Vec<usize> = (0..data.len()).filter(|&i| data.lambda[i].on_t()).collect();
    if on_t.is_empty() {
        return CheckRecord::inapplicable(id, anchor::AB_ON_T, TOL_AB_ON_T, fp, "no samples on T");
    }
    if on_t.iter().any(|&i| data.delta[i].as_ref().is_some_and(|d| d.exceptional)) {
        return CheckRecord::inapplicable(
            id,
            anchor::AB_ON_T,
            TOL_AB_ON_T,
            fp,
            "inapplicable: Δ vanishes on T",
        );
    }
    let mut worst = 0.0f64;
    let mut used = 0;
    for &i in &on_t {
        if let (Some(a), Some(b)) = (data.a[i], data.b[i]) {
            worst = worst.max((a - b).norm() / (a.norm() + b.norm() + AB_GUARD));
            used += 1;
        }
    }
    if used == 0 {
        return CheckRecord::inapplicable(id, anchor::AB_ON_T, TOL_AB_ON_T, fp, "no solved samples on T");
    }
    CheckRecord::measured(id, anchor::AB_ON_T, worst, TOL_AB_ON_T, fp).with_detail("samples", used as f64)
}

fn find(data: &ScatteringData, target: Complex64) -> Option<usize> {
    data.lambda
        .iter()
        .position(|p| (p.lambda() - target).norm() <= 1e-12 * (1.0 + target.norm()))
}

/// The five determinant properties, measured over the samples of `data`
/// that carry `Δ`.
pub fn check_delta_properties(data: &ScatteringData) -> Vec<CheckRecord> {
    let fp = &data.metadata.fingerprint;
    let have: Vec<usize> = (0..data.len()).filter(|&i| data.delta[i].is_some()).collect();
    let value = |i: usize| data.delta[i].as_ref().expect("filtered").value;
    if have.is_empty() {
        let note = "determinant unavailable at this resolution";
        return vec![
            CheckRecord::inapplicable("delta/continuity", anchor::DELTA_CONTINUITY, TOL_CONTINUITY_RATIO, fp, note),
            CheckRecord::inapplicable("delta/limits", anchor::DELTA_LIMITS, TOL_DELTA_LIMIT, fp, note),
            CheckRecord::inapplicable("delta/constant-on-T", anchor::DELTA_CONST_T, TOL_DELTA_CONST_T, fp, note),
            CheckRecord::inapplicable("delta/real", anchor::DELTA_REAL, TOL_DELTA_REAL, fp, note),
            CheckRecord::inapplicable("delta/inversion", anchor::DELTA_INVERSION, TOL_SYMMETRY, fp, note),
        ];
    }
    let mut out = Vec::with_capacity(5);

    // Continuity across T, the only place Δ can fail to be analytic: on each
    // radial path the step from the two samples nearest T to the T-value may
    // exceed the step predicted by extrapolation in ln|λ| by at most 10×.
    let circle: Vec<Complex64> = have.iter().filter(|&&i| data.lambda[i].on_t()).map(|&i| value(i)).collect();
    let mut paths: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for &i in have.iter().filter(|&&i| !data.lambda[i].on_t()) {
        let key = (data.lambda[i].phase() * 1e9).round() as i64;
        paths.entry(key).or_default().push(i);
    }
    let mut ratio = 0.0f64;
    let mut sides = 0;
    if !circle.is_empty() {
        let delta_t = circle.iter().sum::<Complex64>() / circle.len() as f64;
        let floor = 1e-12 * (1.0 + delta_t.norm());
        for path in paths.values_mut() {
            path.sort_by(|&x, &y| data.lambda[x].modulus().total_cmp(&data.lambda[y].modulus()));
            let inner: Vec<usize> = path.iter().copied().filter(|&i| data.lambda[i].modulus() < 1.0).collect();
            let outer: Vec<usize> = path.iter().copied().filter(|&i| data.lambda[i].modulus() > 1.0).collect();
            let candidates = [
                (inner.len() >= 2).then(|| (inner[inner.len() - 2], inner[inner.len() - 1])),
                (outer.len() >= 2).then(|| (outer[1], outer[0])),
            ];
            for (far, near) in candidates.into_iter().flatten() {
                let (rf, rn) = (data.lambda[far].modulus().ln(), data.lambda[near].modulus().ln());
                let predicted = (value(near) - value(far)).norm() * (rn.abs() / (rf - rn).abs());
                let actual = (delta_t - value(near)).norm();
                ratio = ratio.max(if actual <= floor { 0.0 } else { actual / predicted.max(floor) });
                sides += 1;
            }
        }
    }
    out.push(if sides == 0 {
        CheckRecord::inapplicable(
            "delta/continuity",
            anchor::DELTA_CONTINUITY,
            TOL_CONTINUITY_RATIO,
            fp,
            "needs samples on T and two samples on one side of T along a radial path",
        )
    } else {
        CheckRecord::measured("delta/continuity", anchor::DELTA_CONTINUITY, ratio, TOL_CONTINUITY_RATIO, fp)
            .with_detail("path_sides", sides as f64)
    });

    // Limits at the extreme moduli.
    let extreme: Vec<usize> = have
        .iter()
        .copied()
        .filter(|&i| {
            let m = data.lambda[i].modulus();
            m <= 0.05 || m >= 20.0
        })
        .collect();
    out.push(if extreme.is_empty() {
        CheckRecord::inapplicable(
            "delta/limits",
            anchor::DELTA_LIMITS,
            TOL_DELTA_LIMIT,
            fp,
            "no samples with |λ| ≤ 0.05 or |λ| ≥ 20",
        )
    } else {
        let worst = extreme.iter().fold(0.0f64, |m, &i| m.max((value(i) - 1.0).norm()));
        CheckRecord::measured("delta/limits", anchor::DELTA_LIMITS, worst, TOL_DELTA_LIMIT, fp)
            .with_detail("samples", extreme.len() as f64)
    });

    // Constant on T.
    let on_t: Vec<Complex64> = have.iter().filter(|&&i| data.lambda[i].on_t()).map(|&i| value(i)).collect();
    out.push(if on_t.len() < 2 {
        CheckRecord::inapplicable(
            "delta/constant-on-T",
            anchor::DELTA_CONST_T,
            TOL_DELTA_CONST_T,
            fp,
            "fewer than two samples on T",
        )
    } else {
        let mean = on_t.iter().sum::<Complex64>() / on_t.len() as f64;
        let spread = on_t.iter().fold(0.0f64, |m, d| m.max((d - mean).norm()));
        CheckRecord::measured(
            "delta/constant-on-T",
            anchor::DELTA_CONST_T,
            relative(2.0 * spread, mean.norm()),
            TOL_DELTA_CONST_T,
            fp,
        )
        .with_detail("samples", on_t.len() as f64)
        .with_detail("mean", mean.re)
    });

    let realness = have
        .iter()
        .fold(0.0f64, |m, &i| m.max(value(i).im.abs() / (1.0 + value(i).norm())));
    out.push(CheckRecord::measured("delta/real", anchor::DELTA_REAL, realness, TOL_DELTA_REAL, fp));

    let mut worst = 0.0f64;
    let mut pairs = 0;
    for &i in &have {
        if let Some(j) = find(data, data.lambda[i].inverse_conjugate().lambda()) {
            if let Some(dj) = &data.delta[j] {
                worst = worst.max((value(i) - dj.value).norm() / (1.0 + value(i).norm()));
                pairs += 1;
            }
        }
    }
    out.push(if pairs == 0 {
        CheckRecord::inapplicable(
            "delta/inversion",
            anchor::DELTA_INVERSION,
            TOL_SYMMETRY,
            fp,
            "no (λ, 1/λ̄) pairs",
        )
    } else {
        CheckRecord::measured("delta/inversion", anchor::DELTA_INVERSION, worst, TOL_SYMMETRY, fp)
            .with_detail("pairs", pairs as f64)
    });
    out
}

/// Both symmetries of `b`, relative to `max |b|`.
pub fn check_b_symmetries(data: &ScatteringData) -> Vec<CheckRecord> {
    let fp = &data.metadata.fingerprint;
    let scale = data.b.iter().flatten().fold(0.0f64, |m, b| m.max(b.norm()));
    let mut conj = (0.0f64, 0);
    let mut anti = (0.0f64, 0);
    for i in 0..data.len() {
        let Some(b) = data.b[i] else { continue };
        let p = data.lambda[i];
        if let Some(j) = find(data, p.inverse_conjugate().lambda()) {
            if let Some(bj) = data.b[j] {
                conj = (conj.0.max((bj - b.conj()).norm()), conj.1 + 1);
            }
        }
        if let Some(j) = find(data, p.antipodal_inverse().lambda()) {
            if let Some(bj) = data.b[j] {
                anti = (anti.0.max((bj - b).norm()), anti.1 + 1);
            }
        }
    }
    let record = |id: &str, anc: &str, (worst, count): (f64, usize)| {
        if count == 0 {
            CheckRecord::inapplicable(id, anc, TOL_SYMMETRY, fp, "no sample pairs")
        } else {
            CheckRecord::measured(id, anc, relative(worst, scale), TOL_SYMMETRY, fp)
                .with_detail("pairs", count as f64)
        }
    };
    vec![
        record("b/conjugation", anchor::B_CONJ, conj),
        record("b/antipodal", anchor::B_ANTIPODAL, anti),
    ]
}

/// `|a - v̂(0)|/|v̂(0)|` over samples with `|λ| ≥ 50` or `|λ| ≤ 0.02`.
pub fn check_a_limit(data: &ScatteringData) -> CheckRecord {
    let fp = &data.metadata.fingerprint;
    let vhat0 = data.metadata.vhat0;
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in 0..data.len() {
        let m = data.lambda[i].modulus();
        if m >= 50.0 - 1e-9 || m <= 0.02 + 1e-12 {
            if let Some(a) = data.a[i] {
                worst = worst.max(relative((a - vhat0).norm(), vhat0.norm()));
                count += 1;
            }
        }
    }
    if count == 0 {
        return CheckRecord::inapplicable("a/limit", anchor::A_LIMIT, TOL_A_LIMIT, fp, "no samples at |λ| = 50");
    }
    CheckRecord::measured("a/limit", anchor::A_LIMIT, worst, TOL_A_LIMIT, fp).with_detail("samples", count as f64)
}

/// Conjugation–inversion and rotation residuals of independently built
/// tables, relative to `max|g|`.
pub fn check_green_symmetries(grid: &Grid, lambdas: &[SpectralPoint]) -> Result<Vec<CheckRecord>> {
    let results = lambdas
        .par_iter()
        .map(|&p| -> Result<(f64, f64)> {
            let table = build_greens_table(grid, p)?;
            let partner = build_greens_table(grid, p.inverse_conjugate())?;
            let scale = table.samples().iter().fold(0.0f64, |m, c| m.max(c.norm()));
            let conj = table
                .samples()
                .iter()
                .zip(partner.samples())
                .fold(0.0f64, |m, (a, b)| m.max((b - a.conj()).norm()));
            // A quarter turn maps lattice offsets (m, n) to (-n, m).
            let turned = build_greens_table(grid, SpectralPoint::new(Complex64::i() * p.lambda())?)?;
            let n = grid.points() as i64;
            let mut rot = 0.0f64;
            for q in -(n - 1)..n {
                for m in -(n - 1)..n {
                    rot = rot.max((turned.at_offset(-q, m) - table.at_offset(m, q)).norm());
                }
            }
            Ok((relative(conj, scale), relative(rot, scale)))
        })
        .collect::<Result<Vec<_>>>()?;
    let conj = results.iter().fold(0.0f64, |m, r| m.max(r.0));
    let rot = results.iter().fold(0.0f64, |m, r| m.max(r.1));
    let inputs = format!("grid R={} N={}", grid.radius(), grid.points());
    Ok(vec![
        CheckRecord::measured("green/conjugation", anchor::G_CONJ, conj, TOL_SYMMETRY, &inputs)
            .with_detail("lambdas", lambdas.len() as f64),
        CheckRecord::measured("green/rotation", anchor::G_ROTATION, rot, TOL_SYMMETRY, &inputs)
            .with_detail("lambdas", lambdas.len() as f64),
    ])
}

/// Spread of `G(z, λ)/reference(|z|)` over `0.5 ≤ |z| ≤ 4` and the given
/// unit-circle samples. The proportionality constant is reported.
pub fn check_green_on_circle(grid: &Grid, phases: &[f64], tol: f64) -> Result<CheckRecord> {
    let mut ratios = Vec::new();
    for &phase in phases {
        let p = SpectralPoint::on_circle(phase);
        let table = build_greens_table(grid, p)?;
        let n = grid.points() as i64;
        let h = grid.spacing();
        for q in -(n - 1)..n {
            for m in -(n - 1)..n {
                let z = Complex64::new(m as f64 * h, q as f64 * h);
                let r = z.norm();
                if (0.5..=4.0).contains(&r) {
                    let big_g = big_g_prefactor(z, p.lambda()) * table.at_offset(m, q);
                    ratios.push(big_g / reference_g_on_circle(r)?);
                }
            }
        }
    }
    let mean = ratios.iter().sum::<Complex64>() / ratios.len().max(1) as f64;
    let spread = ratios.iter().fold(0.0f64, |m, r| m.max((r - mean).norm()));
    let inputs = format!("grid R={} N={}", grid.radius(), grid.points());
    Ok(CheckRecord::measured("green/circle-reference", anchor::G_ON_T, relative(spread, mean.norm()), tol, &inputs)
        .with_detail("constant_re", mean.re)
        .with_detail("constant_im", mean.im)
        .with_detail("samples", ratios.len() as f64))
}

/// Solves for one `λ` and keeps what the finite-difference checks need.
struct Probe {
    a: Complex64,
    b: Option<Complex64>,
    mu: Vec<Complex64>,
}

fn probe(v: &Potential, lambda: Complex64, opts: &SolverOptions) -> Result<Probe> {
    let p = SpectralPoint::new(lambda)?;
    let table = build_greens_table(v.grid(), p)?;
    let mu = solve_mu_with(v, &table, opts)?;
    Ok(Probe {
        a: compute_a(v, &mu)?,
        b: compute_b(v, &mu).ok(),
        mu: mu.samples,
    })
}

fn ln_delta(v: &Potential, lambda: Complex64, opts: &SolverOptions) -> Result<Complex64> {
    let p = SpectralPoint::new(lambda)?;
    let table = build_greens_table(v.grid(), p)?;
    let kernel = build_kernel_with(v, &table, DEFAULT_EPSILON, opts)?;
    let d = modified_fredholm_det(&kernel)?;
    Ok(d.value.ln())
}

/// `½(∂_{λ₁} + i∂_{λ₂})` by central differences of `f` at step `h`.
fn dbar<F>(lambda: Complex64, h: f64, f: &F) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Vec<Complex64>> + Sync,
{
    let offsets = [
        Complex64::new(h, 0.0),
        Complex64::new(-h, 0.0),
        Complex64::new(0.0, h),
        Complex64::new(0.0, -h),
    ];
    let values = offsets
        .par_iter()
        .map(|&d| f(lambda + d))
        .collect::<Result<Vec<_>>>()?;
    let i = Complex64::i();
    Ok((0..values[0].len())
        .map(|k| 0.5 * ((values[0][k] - values[1][k]) / (2.0 * h) + i * (values[2][k] - values[3][k]) / (2.0 * h)))
        .collect())
}

fn stencil_problem(lambda: Complex64, h: f64) -> Option<String> {
    if lambda.norm() <= 2.0 * h {
        return Some("stencil crosses T or E: too close to λ = 0".into());
    }
    if ((lambda.norm() - 1.0).abs() - h) < CIRCLE_EXCLUSION {
        return Some("stencil crosses T or E: within the excluded band around |λ| = 1".into());
    }
    None
}

/// Residual of `lhs` against `rhs` relative to their larger magnitude.
fn paired_residual(lhs: &[Complex64], rhs: &[Complex64]) -> f64 {
    let scale = lhs.iter().chain(rhs).fold(0.0f64, |m, c| m.max(c.norm()));
    let diff = lhs.iter().zip(rhs).fold(0.0f64, |m, (l, r)| m.max((l - r).norm()));
    relative(diff, scale)
}

fn halving_record(id: &str, anc: &str, coarse: &[Complex64], fine: &[Complex64], inputs: &str) -> CheckRecord {
    let scale = fine.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let diff = coarse.iter().zip(fine).fold(0.0f64, |m, (c, f)| m.max((c - f).norm()));
    // Below this the two differences are equal up to solver noise.
    let floor = 1e-9;
    let residual = if diff <= floor { 0.0 } else { relative(diff, scale) };
    CheckRecord::measured(&format!("{id}/step-halving"), anc, residual, STEP_HALVING_TOL, inputs)
        .with_detail("absolute_change", diff)
}

fn dbar_options(opts: &SolverOptions) -> SolverOptions {
    SolverOptions {
        tol: opts.tol.min(1e-12),
        ..*opts
    }
}

/// Finite-difference `∂a/∂λ̄` against `π sgn(1 - |λ|²)|b|²/λ̄`, plus the
/// step-halving consistency record.
pub fn check_dbar_a(v: &Potential, lambda: Complex64, h: f64, opts: &SolverOptions) -> Result<Vec<CheckRecord>> {
    let id = "dbar/a";
    let fp = v.fingerprint();
    if let Some(why) = stencil_problem(lambda, h) {
        return Ok(vec![CheckRecord::inapplicable(id, anchor::DBAR_A, TOL_DBAR, &fp, &why)]);
    }
    let opts = dbar_options(opts);
    let point = SpectralPoint::new(lambda)?;
    let center = probe(v, lambda, &opts)?;
    let Some(b) = center.b else {
        return Ok(vec![CheckRecord::inapplicable(id, anchor::DBAR_A, TOL_DBAR, &fp, "b aliased at this resolution")]);
    };
    let f = |l: Complex64| probe(v, l, &opts).map(|p| vec![p.a]);
    let coarse = dbar(lambda, h, &f)?;
    let fine = dbar(lambda, 0.5 * h, &f)?;
    let rhs = vec![PI * point.sign() * b.norm_sqr() / lambda.conj()];
    let flipped = vec![-rhs[0]];
    Ok(vec![
        CheckRecord::measured(id, anchor::DBAR_A, paired_residual(&coarse, &rhs), TOL_DBAR, &fp)
            .with_detail("lhs_re", coarse[0].re)
            .with_detail("lhs_im", coarse[0].im)
            .with_detail("rhs_re", rhs[0].re)
            .with_detail("rhs_im", rhs[0].im)
            .with_detail("residual_opposite_sign", paired_residual(&coarse, &flipped)),
        halving_record(id, anchor::DBAR_A, &coarse, &fine, &fp),
    ])
}

/// Finite-difference `∂μ/∂λ̄` at the grid nodes `zs` against
/// `r(λ) e^{½((λ - 1/λ̄)z̄ - (λ̄ - 1/λ)z)} conj μ`.
pub fn check_dbar_mu(
    v: &Potential,
    zs: &[Complex64],
    lambda: Complex64,
    h: f64,
    opts: &SolverOptions,
) -> Result<Vec<CheckRecord>> {
    let id = "dbar/mu";
    let fp = v.fingerprint();
    if let Some(why) = stencil_problem(lambda, h) {
        return Ok(vec![CheckRecord::inapplicable(id, anchor::DBAR_MU, TOL_DBAR, &fp, &why)]);
    }
    let nodes = zs
        .iter()
        .map(|&z| {
            v.grid()
                .locate(z)
                .ok_or_else(|| Error::InvalidArgument(format!("{z} is not a grid node")))
        })
        .collect::<Result<Vec<_>>>()?;
    let opts = dbar_options(opts);
    let point = SpectralPoint::new(lambda)?;
    let center = probe(v, lambda, &opts)?;
    let Some(b) = center.b else {
        return Ok(vec![CheckRecord::inapplicable(id, anchor::DBAR_MU, TOL_DBAR, &fp, "b aliased at this resolution")]);
    };
    let f = |l: Complex64| probe(v, l, &opts).map(|p| nodes.iter().map(|&k| p.mu[k]).collect());
    let coarse = dbar(lambda, h, &f)?;
    let fine = dbar(lambda, 0.5 * h, &f)?;
    let r = PI * point.sign() * b / lambda.conj();
    let w = point.mismatch();
    let rhs: Vec<Complex64> = zs
        .iter()
        .zip(&nodes)
        .map(|(&z, &k)| r * (0.5 * (w * z.conj() - w.conj() * z)).exp() * center.mu[k].conj())
        .collect();
    let flipped: Vec<Complex64> = rhs.iter().map(|c| -c).collect();
    Ok(vec![
        CheckRecord::measured(id, anchor::DBAR_MU, paired_residual(&coarse, &rhs), TOL_DBAR, &fp)
            .with_detail("points", zs.len() as f64)
            .with_detail("residual_opposite_sign", paired_residual(&coarse, &flipped)),
        halving_record(id, anchor::DBAR_MU, &coarse, &fine, &fp),
    ])
}

/// Finite-difference `∂ ln Δ/∂λ̄` against `-π sgn(|λ|² - 1)(a(1/λ̄) - v̂(0))/λ̄`.
pub fn check_dbar_lndelta(v: &Potential, lambda: Complex64, h: f64, opts: &SolverOptions) -> Result<Vec<CheckRecord>> {
    let id = "dbar/ln-delta";
    let fp = v.fingerprint();
    if let Some(why) = stencil_problem(lambda, h) {
        return Ok(vec![CheckRecord::inapplicable(id, anchor::DBAR_LN_DELTA, TOL_DBAR, &fp, &why)]);
    }
    let point = SpectralPoint::new(lambda)?;
    let f = |l: Complex64| ln_delta(v, l, opts).map(|x| vec![x]);
    let smallest = [1.0, -1.0]
        .iter()
        .flat_map(|&s| [Complex64::new(s * h, 0.0), Complex64::new(0.0, s * h)])
        .map(|d| ln_delta(v, lambda + d, opts).map(|x| x.re.exp()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if smallest < 1e-6 {
        return Ok(vec![CheckRecord::inapplicable(id, anchor::DBAR_LN_DELTA, TOL_DBAR, &fp, "Δ too small on stencil")]);
    }
    let coarse = dbar(lambda, h, &f)?;
    let fine = dbar(lambda, 0.5 * h, &f)?;
    let partner = probe(v, 1.0 / lambda.conj(), &dbar_options(opts))?;
    let vhat0 = v.fourier_hat(Complex64::new(0.0, 0.0))?;
    // sgn(|λ|² - 1) = -sgn(1 - |λ|²)
    let rhs = vec![-PI * (-point.sign()) * (partner.a - vhat0) / lambda.conj()];
    Ok(vec![
        CheckRecord::measured(id, anchor::DBAR_LN_DELTA, paired_residual(&coarse, &rhs), TOL_DBAR, &fp)
            .with_detail("lhs_re", coarse[0].re)
            .with_detail("lhs_im", coarse[0].im)
            .with_detail("rhs_re", rhs[0].re)
            .with_detail("rhs_im", rhs[0].im)
            .with_detail("min_abs_delta", smallest),
        halving_record(id, anchor::DBAR_LN_DELTA, &coarse, &fine, &fp),
    ])
}

/// Recomputes `a`, `b` for `v(z - ζ)` and compares with the shift formulas.
pub fn check_shift_lemma(
    v: &Potential,
    zeta: Complex64,
    lambdas: &[SpectralPoint],
    opts: &SolverOptions,
) -> Result<Vec<CheckRecord>> {
    let moved = v.translate(zeta)?;
    let inputs = format!("{} -> {}", v.fingerprint(), moved.fingerprint());
    let pairs = lambdas
        .par_iter()
        .map(|&p| -> Result<(Complex64, Complex64, Option<Complex64>, Option<Complex64>)> {
            let table = build_greens_table(v.grid(), p)?;
            let mu = solve_mu_with(v, &table, opts)?;
            let mu_moved = solve_mu_with(&moved, &table, opts)?;
            Ok((
                compute_a(v, &mu)?,
                compute_a(&moved, &mu_moved)?,
                compute_b(v, &mu).ok(),
                compute_b(&moved, &mu_moved).ok(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut a_worst = 0.0f64;
    let mut b_worst = 0.0f64;
    let mut b_count = 0;
    for (p, (a, a_moved, b, b_moved)) in lambdas.iter().zip(&pairs) {
        a_worst = a_worst.max(relative((a_moved - a).norm(), a.norm()));
        if let (Some(b), Some(b_moved)) = (b, b_moved) {
            let w = p.mismatch();
            let phase = (-0.5 * (w * zeta.conj() - w.conj() * zeta)).exp();
            b_worst = b_worst.max(relative((b_moved - phase * b).norm(), b.norm()));
            b_count += 1;
        }
    }
    let b_record = if b_count == 0 {
        CheckRecord::inapplicable("shift/b", anchor::SHIFT_B, TOL_SHIFT, &inputs, "b aliased at every sample")
    } else {
        CheckRecord::measured("shift/b", anchor::SHIFT_B, b_worst, TOL_SHIFT, &inputs).with_detail("samples", b_count as f64)
    };
    Ok(vec![
        CheckRecord::measured("shift/a", anchor::SHIFT_A, a_worst, TOL_SHIFT, &inputs)
            .with_detail("samples", lambdas.len() as f64),
        b_record,
    ])
}

/// `m(λ; c) = -½((λ - 1/λ̄)c̄ - (λ̄ - 1/λ)c) - (λ³ + 1/λ³ - λ̄³ - 1/λ̄³)`:
/// translation phase minus cubic flow phase, per unit time.
pub fn exponent_mismatch(lambda: Complex64, c: Complex64) -> Complex64 {
    let lb = lambda.conj();
    let translation = -0.5 * ((lambda - 1.0 / lb) * c.conj() - (lb - 1.0 / lambda) * c);
    let cubic = lambda.powi(3) + lambda.powi(-3) - lb.powi(3) - lb.powi(-3);
    translation - cubic
}

/// `count` points, half log-uniform in `0.01 < |λ| < 0.1` and half in
/// `10 < |λ| < 100`, with uniform phases.
pub fn obstruction_samples(seed: u64, count: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let (lo, hi): (f64, f64) = if k % 2 == 0 { (0.01, 0.1) } else { (10.0, 100.0) };
            let modulus = (rng.gen_range(lo.ln()..hi.ln())).exp();
            Complex64::from_polar(modulus, rng.gen_range(0.0..2.0 * PI))
        })
        .collect()
}

/// Whether the cubic phase of `λ` vanishes identically in `c`: `λ³` real and
/// `λ` real, where both exponents can cancel for special `c`.
fn non_generic(lambda: Complex64) -> bool {
    lambda.im.abs() <= 1e-12 * lambda.norm()
}

/// Fraction of generic samples with `|m(λ; c)| > MISMATCH_FLOOR`; passes at
/// 95%.
pub fn soliton_obstruction(c: Complex64, lambdas: &[Complex64]) -> CheckRecord {
    let id = format!("soliton/c={}{:+}i", c.re, c.im);
    let inputs = format!("c = {c}, {} samples", lambdas.len());
    let generic: Vec<Complex64> = lambdas.iter().copied().filter(|&l| l.norm() > 0.0 && !non_generic(l)).collect();
    if generic.is_empty() {
        return CheckRecord::inapplicable(&id, anchor::SOLITON, 1.0 - SOLITON_FRACTION, &inputs, "insufficient generic samples");
    }
    let hits = generic.iter().filter(|&&l| exponent_mismatch(l, c).norm() > MISMATCH_FLOOR).count();
    let fraction = hits as f64 / generic.len() as f64;
    let mut record = CheckRecord::measured(&id, anchor::SOLITON, 1.0 - fraction, 1.0 - SOLITON_FRACTION, &inputs)
        .with_detail("fraction_nonzero", fraction)
        .with_detail("generic_samples", generic.len() as f64)
        .with_detail("excluded_samples", (lambdas.len() - generic.len()) as f64);
    if generic.len() < lambdas.len() / 2 {
        record = record.with_note("insufficient generic samples: most λ are real");
    }
    record
}

/// Contrapositive of "b ≡ 0 ⇒ v ≡ 0" on a scan of a weak potential:
/// `max|b| ≥ ½ max|born_b| > 0`.
pub fn transparency_chain_demo(v: &Potential, data: &ScatteringData) -> Result<CheckRecord> {
    let id = "transparency/nonzero-b";
    let fp = v.fingerprint();
    if v.is_zero() {
        return Ok(CheckRecord::inapplicable(id, anchor::TRANSPARENCY, 0.5, &fp, "vacuous for v ≡ 0"));
    }
    let exceptional = data.flags.iter().flatten().any(|f| *f == crate::scattering::Flag::Exceptional);
    let min_delta = data.delta.iter().flatten().fold(f64::INFINITY, |m, d| m.min(d.value.norm()));
    if exceptional || min_delta <= 0.5 {
        return Ok(CheckRecord::inapplicable(id, anchor::TRANSPARENCY, 0.5, &fp, "inapplicable: exceptional points present"));
    }
    let max_b = data.b.iter().flatten().fold(0.0f64, |m, b| m.max(b.norm()));
    let mut max_born = 0.0f64;
    for (p, b) in data.lambda.iter().zip(&data.b) {
        if b.is_some() {
            max_born = max_born.max(born_b(v, *p)?.norm());
        }
    }
    // Residual is how far max|b| falls short of half the Born maximum.
    let shortfall = if max_born > 0.0 { (0.5 - max_b / max_born).max(0.0) } else { f64::INFINITY };
    let mut record = CheckRecord::measured(id, anchor::TRANSPARENCY, shortfall, 0.0, &fp)
        .with_detail("max_b", max_b)
        .with_detail("max_born_b", max_born);
    if max_b == 0.0 {
        record.status = Status::Fail;
    }
    Ok(record)
}

/// `‖b - born_b‖_∞` for each amplitude, and the ratios between successive
/// amplitudes, which should equal the squared amplitude ratio.
pub fn check_born_scaling<F>(
    make: F,
    amplitudes: &[f64],
    lambdas: &[SpectralPoint],
    opts: &SolverOptions,
    tol: f64,
) -> Result<CheckRecord>
where
    F: Fn(f64) -> Result<Potential> + Sync,
{
    let errors = amplitudes
        .iter()
        .map(|&amp| -> Result<f64> {
            let v = make(amp)?;
            let worst = lambdas
                .par_iter()
                .map(|&p| -> Result<f64> {
                    let table = build_greens_table(v.grid(), p)?;
                    let mu = solve_mu_with(&v, &table, opts)?;
                    Ok((compute_b(&v, &mu)? - born_b(&v, p)?).norm())
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(worst.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut record_residual = 0.0f64;
    let mut record = CheckRecord::measured("born/quadratic-error", anchor::BORN, 0.0, tol, "amplitude sweep");
    for (k, w) in errors.windows(2).enumerate() {
        let expected = (amplitudes[k + 1] / amplitudes[k]).powi(2);
        let ratio = w[1] / w[0];
        record_residual = record_residual.max((ratio / expected - 1.0).abs());
        record = record.with_detail(&format!("ratio_{k}"), ratio);
    }
    for (k, e) in errors.iter().enumerate() {
        record = record.with_detail(&format!("error_{k}"), *e);
    }
    let details = record.details.clone();
    let mut out = CheckRecord::measured("born/quadratic-error", anchor::BORN, record_residual, tol, "amplitude sweep");
    out.details = details;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub grid: Option<Grid>,
    pub lambda_grid: Option<String>,
    pub solver: SolverOptions,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub metadata: ReportMetadata,
    /// AND over applicable records.
    pub passed: bool,
    pub records: Vec<CheckRecord>,
}

/// Sorts by id and computes the overall verdict. Duplicate ids are an error.
pub fn assemble_report(mut records: Vec<CheckRecord>, metadata: ReportMetadata) -> Result<VerificationReport> {
    records.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = records.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::Report(format!("duplicate check id {}", w[0].id)));
    }
    for r in &records {
        if r.anchor.is_empty() {
            return Err(Error::Report(format!("check {} has no anchor", r.id)));
        }
        if !(r.residual.is_finite() && r.residual >= 0.0) {
            return Err(Error::Report(format!("check {} has residual {}", r.id, r.residual)));
        }
    }
    let passed = records.iter().all(CheckRecord::passed);
    Ok(VerificationReport {
        metadata,
        passed,
        records,
    })
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One line per record, then the verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let status = match r.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Inapplicable => "N/A ",
            };
            let _ = write!(out, "{status} {:<28} residual {:.3e} tol {:.1e}", r.id, r.residual, r.tol);
            if !r.note.is_empty() {
                let _ = write!(out, "  ({})", r.note);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "overall: {}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}
