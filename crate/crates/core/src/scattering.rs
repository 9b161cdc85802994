//! Scattering data `a(λ)`, `b(λ)` and scans over a [`LambdaGrid`].

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{build_greens_table, cached_table, GreensTable};
use crate::grid::Grid;
use crate::lippmann::{
    build_kernel_with, modified_fredholm_det, solve_mu_with, DeterminantSample, MuField,
    SolveMethod, SolverOptions,
};
use crate::potential::{Family, Potential, DEFAULT_EPSILON};
use crate::spectral::{LambdaGrid, SpectralPoint};

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

fn ensure_matching(v: &Potential, mu: &MuField) -> Result<()> {
    if v.grid() != &mu.grid {
        return Err(Error::GridMismatch("μ and v live on different grids".into()));
    }
    Ok(())
}

/// `a(λ) = (2π)^{-2} ∬ μ v`.
pub fn compute_a(v: &Potential, mu: &MuField) -> Result<Complex64> {
    ensure_matching(v, mu)?;
    let samples = v.samples();
    Ok(v.grid().integrate(|i| mu.samples[i] * samples[i]) / FOUR_PI_SQ)
}

/// Shortest oscillation wavelength, in lengths, that [`compute_b`] accepts.
pub fn min_wavelength(grid: &Grid) -> f64 {
    4.0 * grid.spacing()
}

/// Checks that `e^{-i Im(w z̄)}`, `w = λ - 1/λ̄`, spans at least four cells
/// per period.
pub fn aliasing_guard(grid: &Grid, lambda: SpectralPoint) -> Result<()> {
    let w = lambda.mismatch().norm();
    if w == 0.0 {
        return Ok(());
    }
    let wavelength = 2.0 * PI / w;
    let min = min_wavelength(grid);
    if wavelength < min {
        return Err(Error::Aliasing {
            lambda: lambda.lambda(),
            wavelength,
            min,
        });
    }
    Ok(())
}

/// `exp(-½((λ - 1/λ̄)z̄ - (λ̄ - 1/λ)z))`, which has modulus one.
pub fn b_phase(lambda: SpectralPoint, z: Complex64) -> Complex64 {
    let w = lambda.mismatch();
    let exponent = -0.5 * (w * z.conj() - w.conj() * z);
    debug_assert!(exponent.re.abs() <= 1e-12 * (1.0 + exponent.norm()));
    Complex64::cis(exponent.im)
}

/// `b(λ) = (2π)^{-2} ∬ exp(-½((λ - 1/λ̄)z̄ - (λ̄ - 1/λ)z)) μ v`.
pub fn compute_b(v: &Potential, mu: &MuField) -> Result<Complex64> {
    ensure_matching(v, mu)?;
    let grid = v.grid();
    aliasing_guard(grid, mu.lambda)?;
    let w = mu.lambda.mismatch();
    // The exponent is -½(w z̄ - w̄ z) = -i Im(w z̄): purely imaginary.
    let probe = Complex64::new(grid.radius(), -grid.radius());
    let exponent = -0.5 * (w * probe.conj() - w.conj() * probe);
    if exponent.re.abs() > 1e-12 * (1.0 + exponent.norm()) {
        return Err(Error::InvalidLambda(format!(
            "b exponent has real part {} at λ = {}",
            exponent.re,
            mu.lambda.lambda()
        )));
    }
    let samples = v.samples();
    Ok(grid.integrate(|i| b_phase(mu.lambda, grid.node_at(i)) * mu.samples[i] * samples[i]) / FOUR_PI_SQ)
}

/// `b` with `μ ≡ 1`: `v̂(i(λ - 1/λ̄))`.
pub fn born_b(v: &Potential, lambda: SpectralPoint) -> Result<Complex64> {
    v.fourier_hat(Complex64::i() * lambda.mismatch())
}

/// `r(λ) = π sgn(1 - |λ|²) b(λ) / λ̄`.
pub fn r_coefficient(lambda: SpectralPoint, b: Complex64) -> Complex64 {
    PI * lambda.sign() * b / lambda.lambda().conj()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    /// `b` skipped: oscillation below four cells per period.
    Aliasing,
    /// Table's second symbol root beyond the grid Nyquist frequency.
    TableAliased,
    /// `||λ| - 1| < 10⁻³`.
    NearCircle,
    NonConvergent,
    /// `μ` came from the dense fallback.
    DenseFallback,
    /// `|Δ|` vanishes numerically.
    Exceptional,
    DeterminantUnavailable,
    TableFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanOptions {
    pub solver: SolverOptions,
    /// Evaluate `Δ` where the dense cap allows.
    pub determinant: bool,
    pub eps: f64,
    /// Directory for cached Green's tables.
    pub cache_dir: Option<PathBuf>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            determinant: true,
            eps: DEFAULT_EPSILON,
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanMetadata {
    pub fingerprint: String,
    pub family: Family,
    pub center: Complex64,
    pub grid: Grid,
    pub q: f64,
    pub eps: f64,
    pub solver: SolverOptions,
    pub vhat0: Complex64,
}

/// Per-`λ` results in grid order. Complex numbers serialize as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringData {
    pub metadata: ScanMetadata,
    pub lambda: Vec<SpectralPoint>,
    pub a: Vec<Option<Complex64>>,
    pub b: Vec<Option<Complex64>>,
    pub delta: Vec<Option<DeterminantSample>>,
    pub mu_residual: Vec<Option<f64>>,
    pub flags: Vec<Vec<Flag>>,
}

impl ScatteringData {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Number of records carrying a failure flag.
    pub fn partial_failures(&self) -> usize {
        self.flags
            .iter()
            .filter(|f| {
                f.iter().any(|x| {
                    matches!(
                        x,
                        Flag::Aliasing | Flag::NonConvergent | Flag::Exceptional | Flag::TableFailed
                    )
                })
            })
            .count()
    }

    pub fn r(&self, index: usize) -> Option<Complex64> {
        self.b[index].map(|b| r_coefficient(self.lambda[index], b))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: Self = serde_json::from_str(text)?;
        let n = data.lambda.len();
        let lengths = [data.a.len(), data.b.len(), data.delta.len(), data.mu_residual.len(), data.flags.len()];
        if lengths.iter().any(|&l| l != n) {
            return Err(Error::Format("record arrays differ in length".into()));
        }
        Ok(data)
    }

    /// One row per `λ`; empty cells where a quantity was not computed.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "re_lambda,im_lambda,abs_lambda,arg_lambda,re_a,im_a,re_b,im_b,re_delta,im_delta,mu_residual,flags"
        )?;
        for i in 0..self.len() {
            let l = self.lambda[i];
            let pair = |c: Option<Complex64>| {
                c.map_or(",".to_string(), |c| format!("{:e},{:e}", c.re, c.im))
            };
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{},{},{},{},{}",
                l.lambda().re,
                l.lambda().im,
                l.modulus(),
                l.phase(),
                pair(self.a[i]),
                pair(self.b[i]),
                pair(self.delta[i].as_ref().map(|d| d.value)),
                self.mu_residual[i].map_or(String::new(), |r| format!("{r:e}")),
                flag_names(&self.flags[i]),
            )?;
        }
        Ok(())
    }

    /// Determinant table: `re λ, im λ, |λ|, arg λ, Re Δ, Im Δ, method, hs_norm, flag`.
    pub fn write_determinant_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "re_lambda,im_lambda,abs_lambda,arg_lambda,re_delta,im_delta,method,hs_norm,flag")?;
        for i in 0..self.len() {
            let l = self.lambda[i];
            let (re, im, method, hs) = match &self.delta[i] {
                Some(d) => (
                    format!("{:e}", d.value.re),
                    format!("{:e}", d.value.im),
                    serde_json::to_value(d.method)?.as_str().unwrap_or_default().to_string(),
                    format!("{:e}", d.hs_norm),
                ),
                None => Default::default(),
            };
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{re},{im},{method},{hs},{}",
                l.lambda().re,
                l.lambda().im,
                l.modulus(),
                l.phase(),
                flag_names(&self.flags[i]),
            )?;
        }
        Ok(())
    }
}

fn flag_names(flags: &[Flag]) -> String {
    flags
        .iter()
        .map(|f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
        .collect::<Vec<_>>()
        .join(";")
}

/// Everything computed at one `λ`.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub mu: Option<MuField>,
    pub a: Option<Complex64>,
    pub b: Option<Complex64>,
    pub delta: Option<DeterminantSample>,
    pub flags: Vec<Flag>,
}

/// Solves for `μ` and evaluates `a`, `b` and optionally `Δ` at one `λ`,
/// recording failures as flags.
pub fn evaluate_point(
    v: &Potential,
    table: Option<&GreensTable>,
    lambda: SpectralPoint,
    opts: &ScanOptions,
) -> PointResult {
    let mut flags = Vec::new();
    let grid = *v.grid();
    if (lambda.modulus() - 1.0).abs() < crate::greens::NEAR_CIRCLE_BAND {
        flags.push(Flag::NearCircle);
    }
    let mu = if v.is_zero() {
        Some(MuField {
            lambda,
            grid,
            samples: vec![Complex64::new(1.0, 0.0); grid.len()],
            residual: 0.0,
            iterations: 0,
            method: SolveMethod::Trivial,
        })
    } else {
        match table {
            None => {
                flags.push(Flag::TableFailed);
                None
            }
            Some(t) => {
                if t.record().aliased {
                    flags.push(Flag::TableAliased);
                }
                match solve_mu_with(v, t, &opts.solver) {
                    Ok(mu) => {
                        if mu.method == SolveMethod::Dense {
                            flags.push(Flag::DenseFallback);
                        }
                        Some(mu)
                    }
                    Err(e) => {
                        log::warn!("λ = {}: {e}", lambda.lambda());
                        flags.push(Flag::NonConvergent);
                        None
                    }
                }
            }
        }
    };
    let a = mu.as_ref().and_then(|m| compute_a(v, m).ok());
    let b = match &mu {
        Some(m) => match compute_b(v, m) {
            Ok(b) => Some(b),
            Err(_) => {
                flags.push(Flag::Aliasing);
                None
            }
        },
        None => None,
    };
    let delta = if !opts.determinant {
        None
    } else if grid.points() > opts.solver.dense_cap {
        flags.push(Flag::DeterminantUnavailable);
        None
    } else if v.active_nodes(opts.solver.active_tol).is_empty() {
        Some(crate::lippmann::determinant_at(v, lambda, &opts.solver).expect("empty kernel"))
    } else {
        match table.map(|t| build_kernel_with(v, t, opts.eps, &opts.solver)) {
            Some(Ok(k)) => match modified_fredholm_det(&k) {
                Ok(d) => {
                    if d.exceptional {
                        flags.push(Flag::Exceptional);
                    }
                    Some(d)
                }
                Err(_) => {
                    flags.push(Flag::DeterminantUnavailable);
                    None
                }
            },
            _ => {
                flags.push(Flag::DeterminantUnavailable);
                None
            }
        }
    };
    PointResult {
        mu,
        a,
        b,
        delta,
        flags,
    }
}

/// Builds (or loads) the table for `λ`.
pub fn table_for(grid: &Grid, lambda: SpectralPoint, opts: &ScanOptions) -> Result<GreensTable> {
    match &opts.cache_dir {
        Some(dir) => cached_table(dir, grid, lambda),
        None => build_greens_table(grid, lambda),
    }
}

/// `a`, `b`, `Δ` over every point of `lambdas`. Per-point failures become
/// flags; only invalid options are fatal.
pub fn scan(v: &Potential, lambdas: &LambdaGrid, opts: &ScanOptions) -> Result<ScatteringData> {
    opts.solver.validate()?;
    if !(opts.eps.is_finite() && opts.eps > 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {}", opts.eps)));
    }
    let grid = *v.grid();
    let points = lambdas.points();

    // A table for 1/λ̄ is the conjugate of the one for λ; pair them up.
    let mut partner: Vec<Option<usize>> = vec![None; points.len()];
    for (i, p) in points.iter().enumerate() {
        if p.modulus() > 1.0 {
            let target = p.inverse_conjugate().lambda();
            partner[i] = points.iter().position(|q| {
                q.modulus() < 1.0 && (q.lambda() - target).norm() <= 1e-12 * (1.0 + target.norm())
            });
        }
    }
    let primaries: Vec<usize> = (0..points.len()).filter(|&i| partner[i].is_none()).collect();
    let need_tables = !v.is_zero();

    let primary_results: Vec<(usize, PointResult, Option<GreensTable>)> = primaries
        .par_iter()
        .map(|&i| {
            let table = if need_tables {
                table_for(&grid, points[i], opts)
                    .map_err(|e| log::warn!("table at λ = {}: {e}", points[i].lambda()))
                    .ok()
            } else {
                None
            };
            let result = evaluate_point(v, table.as_ref(), points[i], opts);
            (i, result, table)
        })
        .collect();

    let mut results: Vec<Option<PointResult>> = vec![None; points.len()];
    let mut tables: Vec<Option<GreensTable>> = vec![None; points.len()];
    for (i, r, t) in primary_results {
        results[i] = Some(r);
        tables[i] = t;
    }
    let secondaries: Vec<(usize, PointResult)> = (0..points.len())
        .filter_map(|i| partner[i].map(|p| (i, p)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, p)| {
            let table = tables[p].as_ref().map(|t| t.conjugate_partner());
            (i, evaluate_point(v, table.as_ref(), points[i], opts))
        })
        .collect();
    for (i, r) in secondaries {
        results[i] = Some(r);
    }

    let mut data = ScatteringData {
        metadata: ScanMetadata {
            fingerprint: v.fingerprint(),
            family: v.family().clone(),
            center: v.center(),
            grid,
            q: v.certificate().q,
            eps: opts.eps,
            solver: opts.solver,
            vhat0: v.fourier_hat(Complex64::new(0.0, 0.0))?,
        },
        lambda: points.to_vec(),
        a: Vec::with_capacity(points.len()),
        b: Vec::with_capacity(points.len()),
        delta: Vec::with_capacity(points.len()),
        mu_residual: Vec::with_capacity(points.len()),
        flags: Vec::with_capacity(points.len()),
    };
    for r in results.into_iter().map(|r| r.expect("every point evaluated")) {
        data.a.push(r.a);
        data.b.push(r.b);
        data.delta.push(r.delta);
        data.mu_residual.push(r.mu.as_ref().map(|m| m.residual));
        data.flags.push(r.flags);
    }
    Ok(data)
}
