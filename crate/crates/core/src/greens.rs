//! The Green's function `g(z, λ)` of the operator `-4∂∂̄ + 2λ∂ + (2/λ)∂̄`
//! and its tabulation on the difference lattice of a [`Grid`].
//!
//! `g` is defined by a Fourier integral whose symbol
//! `S(ζ) = |ζ|² + i(λζ̄ + ζ/λ)` vanishes at `ζ = 0` and, off the unit circle,
//! at a second point. Writing `λ = s e^{iφ}`, `L = |ln s|`, `B = s - 1/s` and
//! `x = e^{-iφ} z`, the symbol factors as
//! `(ζ₁ + i cosh L)² + (ζ₂ + B/2)² + 1` in rotated coordinates, and the
//! `ζ₁` integral can be done by residues. What remains is
//!
//! ```text
//! g(z, λ) = -(1/4π) e^{-iB x₂/2} I(x₁, |x₂|; L)
//! ```
//!
//! with `I` real and given by one of two short one-dimensional integrals,
//! depending on the sign of `x₁`. Every exponent in them is non-positive, so
//! they are evaluated by plain composite Gauss–Legendre quadrature without
//! cancellation. On `|λ| = 1` the formula collapses to
//! `-(1/2π) e^{Re(λ̄z)} K₀(|z|)`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quad;
use crate::special::{bessel_k0, lattice_log_constant, EULER_GAMMA};
use crate::spectral::SpectralPoint;

/// Identifier of the singularity treatment stored in tables and cache keys.
pub const RULE_ID: &str = "residue-line-integral/lattice-log-diagonal/v1";

/// Tables whose refinement estimate exceeds this are rejected.
pub const QUADRATURE_THRESHOLD: f64 = 1e-8;

/// Band around `|λ| = 1` in which the two symbol roots are closer than `2e-3`.
pub const NEAR_CIRCLE_BAND: f64 = 1e-3;

// Integrands below e^{-CUTOFF} are dropped.
const CUTOFF: f64 = 40.0;
// Phase advance allowed per 16-point panel.
const PANEL_PHASE: f64 = 4.0;
const TRAPEZOID_STEP: f64 = 0.25;

/// `ζζ̄ + i(λζ̄ + ζ/λ)`.
pub fn symbol_denominator(zeta: Complex64, lambda: Complex64) -> Complex64 {
    let i = Complex64::i();
    Complex64::from(zeta.norm_sqr()) + i * (lambda * zeta.conj() + zeta / lambda)
}

/// Zeros of [`symbol_denominator`]: always `0`, plus `e^{iφ}·i(1/s - s)` off
/// the unit circle.
pub fn singular_points(lambda: Complex64) -> Vec<Complex64> {
    let s = lambda.norm();
    let origin = Complex64::new(0.0, 0.0);
    if s == 1.0 {
        return vec![origin];
    }
    let unit = lambda / s;
    let second = unit * Complex64::new(0.0, 1.0 / s - s);
    if second.norm() == 0.0 {
        vec![origin]
    } else {
        vec![origin, second]
    }
}

/// Scalar data of `g` for one `λ`.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    /// `e^{-iφ}`
    unrotate: Complex64,
    log_modulus: f64,
    cosh_l: f64,
    sinh_l: f64,
    b: f64,
}

impl Kernel {
    fn new(lambda: Complex64) -> Self {
        let s = lambda.norm();
        let log_modulus = s.ln().abs();
        Self {
            unrotate: (lambda / s).conj(),
            log_modulus,
            cosh_l: log_modulus.cosh(),
            sinh_l: log_modulus.sinh(),
            b: s - 1.0 / s,
        }
    }

    fn eval(&self, z: Complex64, resolution: usize) -> Complex64 {
        let x = self.unrotate * z;
        let integral = self.line_integral(x.re, x.im.abs(), resolution);
        Complex64::cis(-0.5 * self.b * x.im) * (-integral / (4.0 * PI))
    }

    fn line_integral(&self, x1: f64, x2: f64, resolution: usize) -> f64 {
        let r = x1.hypot(x2);
        let res = resolution.max(1);
        if x1 < 0.0 {
            self.left_half(-x1, x2, r, res)
        } else {
            self.right_half(x1, x2, r, res)
        }
    }

    // x₁ = -a < 0:
    // I = 2∫₀^∞ e^{-a cosh L - r cosh u} du - 2∫₀^L cos(x₂ sinh t) e^{-a(cosh L - cosh t)} dt
    fn left_half(&self, a: f64, x2: f64, r: f64, res: usize) -> f64 {
        let (c, sl) = (self.cosh_l, self.sinh_l);
        let head = 2.0 * (-a * c).exp() * cosh_exponential(r, res);
        if self.log_modulus == 0.0 {
            return head;
        }
        // t = asinh η
        let floor = c - CUTOFF / a;
        let eta_lo = if floor > 1.0 { (floor * floor - 1.0).sqrt() } else { 0.0 };
        if eta_lo >= sl {
            return head;
        }
        // Panels shrink with the oscillation period and with the distance to
        // the branch points η = ±i of the Jacobian.
        let rate = x2 + a;
        let f = |eta: f64| {
            let q = (1.0 + eta * eta).sqrt();
            (x2 * eta).cos() * (-a * (c - q)).exp() / q
        };
        let mut tail = 0.0;
        let mut lo = eta_lo;
        while lo < sl {
            let width = (PANEL_PHASE / rate).min(0.5 * (1.0 + lo * lo).sqrt()) / res as f64;
            let hi = (lo + width).min(sl);
            tail += quad::panel(lo, hi, f);
            lo = hi;
        }
        head - 2.0 * tail
    }

    // x₁ ≥ 0, α = arg(x₁ + i|x₂|) ∈ [0, π/2]:
    // I = 2∫_L^∞ e^{-r(cosh u - cos α cosh L)} du
    //   - 2∫₀^α e^{-r cosh L (cos β - cos α)} sin(r sinh L sin β) dβ
    fn right_half(&self, x1: f64, x2: f64, r: f64, res: usize) -> f64 {
        let (c, sl, l) = (self.cosh_l, self.sinh_l, self.log_modulus);
        let alpha = x2.atan2(x1);
        let cos_a = if r > 0.0 { x1 / r } else { 1.0 };

        let mut head = 0.0;
        if r * c * (1.0 - cos_a) <= CUTOFF {
            let end = (cos_a * c + CUTOFF / r).acosh();
            let mut lo = l;
            let mut width = 0.5f64.min(1.0 / (1.0 + r * sl + r.sqrt())) / res as f64;
            let f = |u: f64| (-r * (u.cosh() - cos_a * c)).exp();
            while lo < end {
                let hi = (lo + width).min(end);
                head += quad::panel(lo, hi, f);
                lo = hi;
                width = (2.0 * width).min(1.0 / res as f64);
            }
        }

        let mut tail = 0.0;
        if l > 0.0 && alpha > 0.0 {
            let beta_lo = (cos_a + CUTOFF / (r * c)).min(1.0).acos();
            if beta_lo < alpha {
                let rate = r * (sl + c);
                let panels = res * (1 + ((alpha - beta_lo) * rate / PANEL_PHASE).ceil() as usize);
                tail = quad::composite(beta_lo, alpha, panels, |beta| {
                    (-r * c * (beta.cos() - cos_a)).exp() * (r * sl * beta.sin()).sin()
                });
            }
        }
        2.0 * head - 2.0 * tail
    }
}

// ∫₀^∞ e^{-r cosh u} du by the trapezoid rule, which converges
// geometrically for this entire, doubly-exponentially decaying integrand.
fn cosh_exponential(r: f64, res: usize) -> f64 {
    let step = TRAPEZOID_STEP / res as f64;
    let end = (1.0 + CUTOFF / r).acosh();
    let count = (end / step).ceil() as usize;
    let mut total = 0.5;
    for k in 1..=count {
        total += (-r * ((k as f64 * step).cosh() - 1.0)).exp();
    }
    (-r).exp() * total * step
}

/// `g(z, λ)` at a single point `z ≠ 0`.
pub fn faddeev_g(z: Complex64, lambda: Complex64) -> Result<Complex64> {
    check_lambda(lambda)?;
    if z.norm() == 0.0 || !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "g is logarithmically singular at z = 0; got z = {z}"
        )));
    }
    Ok(Kernel::new(lambda).eval(z, 1))
}

/// `g(z, λ) - (1/2π) ln|z|` as `z → 0`: `(γ - ln 2 + |ln|λ||)/2π`.
pub fn regular_part_at_origin(lambda: Complex64) -> f64 {
    (EULER_GAMMA - 2f64.ln() + lambda.norm().ln().abs()) / (2.0 * PI)
}

/// Self-interaction weight for the trapezoid rule: the value that, multiplied
/// by `h²`, replaces the cell around the logarithmic singularity.
pub fn diagonal_weight(lambda: Complex64, spacing: f64) -> f64 {
    regular_part_at_origin(lambda) + (spacing.ln() + lattice_log_constant()) / (2.0 * PI)
}

/// `(-i/4) H₀⁽¹⁾(i|z|) = -K₀(|z|)/2π`: the value of `G` on `|λ| = 1`.
pub fn reference_g_on_circle(modulus: f64) -> Result<Complex64> {
    if !(modulus.is_finite() && modulus > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reference G needs |z| > 0, got {modulus}"
        )));
    }
    Ok(Complex64::new(-bessel_k0(modulus) / (2.0 * PI), 0.0))
}

/// `e^{-(λz̄ + z/λ)/2}`, the factor relating `G` to `g`.
pub fn big_g_prefactor(z: Complex64, lambda: Complex64) -> Complex64 {
    (-0.5 * (lambda * z.conj() + z / lambda)).exp()
}

fn check_lambda(lambda: Complex64) -> Result<()> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) || lambda.norm() == 0.0 {
        return Err(Error::InvalidLambda(format!("λ = {lambda}")));
    }
    Ok(())
}

/// How the table treats the singular points of the symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizationRecord {
    pub singular_points: Vec<Complex64>,
    pub rule: String,
    /// Value stored at the zero difference vector.
    pub diagonal: f64,
    /// Sup-norm change under doubled quadrature resolution, relative to `max|g|`.
    pub quadrature_error: f64,
    /// `||λ| - 1| < NEAR_CIRCLE_BAND`.
    pub near_circle: bool,
    /// The second root lies beyond the grid's Nyquist frequency `π/h`, so the
    /// oscillation `e^{-iBx₂/2}` is not resolved by the lattice.
    pub aliased: bool,
}

/// `g(·, λ)` on all difference vectors `z - ζ` of a grid, stored in
/// wrap-around order on a `2N × 2N` array for zero-padded convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct GreensTable {
    lambda: SpectralPoint,
    grid: Grid,
    samples: Vec<Complex64>,
    record: RegularizationRecord,
}

impl GreensTable {
    pub fn lambda(&self) -> SpectralPoint {
        self.lambda
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn record(&self) -> &RegularizationRecord {
        &self.record
    }

    /// Side of the padded array, `2N`.
    pub fn side(&self) -> usize {
        2 * self.grid.points()
    }

    /// Raw padded samples, row `n` (second coordinate) major.
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// `g(mh + inh)` for `|m|, |n| < N`; the diagonal weight at `m = n = 0`.
    pub fn at_offset(&self, m: i64, n: i64) -> Complex64 {
        let side = self.side() as i64;
        let limit = self.grid.points() as i64;
        assert!(m.abs() < limit && n.abs() < limit, "offset ({m}, {n}) out of range");
        let j = m.rem_euclid(side) as usize;
        let k = n.rem_euclid(side) as usize;
        self.samples[k * self.side() + j]
    }

    /// Table for `1/λ̄`, which is the complex conjugate of this one.
    pub fn conjugate_partner(&self) -> Self {
        let mut record = self.record.clone();
        record.singular_points = singular_points(self.lambda.inverse_conjugate().lambda());
        Self {
            lambda: self.lambda.inverse_conjugate(),
            grid: self.grid,
            samples: self.samples.iter().map(|c| c.conj()).collect(),
            record,
        }
    }

    /// Writes the JSON header line then interleaved little-endian `(re, im)` pairs.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let header = TableHeader {
            lambda: [self.lambda.lambda().re, self.lambda.lambda().im],
            radius: self.grid.radius(),
            points: self.grid.points(),
            rule: self.record.rule.clone(),
            error_estimate: self.record.quadrature_error,
            record: self.record.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(self.samples.len() * 16);
        for c in &self.samples {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(mut input: R) -> Result<Self> {
        let mut line = Vec::new();
        input.read_until(b'\n', &mut line)?;
        if line.last() != Some(&b'\n') {
            return Err(Error::Format("missing table header line".into()));
        }
        let header: TableHeader = serde_json::from_slice(&line)?;
        let grid = Grid::new(header.radius, header.points)?;
        let lambda = SpectralPoint::new(Complex64::new(header.lambda[0], header.lambda[1]))?;
        let side = 2 * grid.points();
        let mut payload = Vec::new();
        input.read_to_end(&mut payload)?;
        if payload.len() != side * side * 16 {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                side * side * 16,
                payload.len()
            )));
        }
        let samples = payload
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Ok(Self {
            lambda,
            grid,
            samples,
            record: header.record,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableHeader {
    lambda: [f64; 2],
    #[serde(rename = "R")]
    radius: f64,
    #[serde(rename = "N")]
    points: usize,
    rule: String,
    error_estimate: f64,
    record: RegularizationRecord,
}

/// Tabulates `g(·, λ)` for linear convolution on `grid`.
pub fn build_greens_table(grid: &Grid, lambda: SpectralPoint) -> Result<GreensTable> {
    let kernel = Kernel::new(lambda.lambda());
    let n = grid.points();
    let side = 2 * n;
    let h = grid.spacing();
    let diagonal = diagonal_weight(lambda.lambda(), h);

    let rows: Vec<Vec<Complex64>> = (0..side)
        .into_par_iter()
        .map(|k| {
            let off_n = offset_of(k, n);
            (0..side)
                .map(|j| match (offset_of(j, n), off_n) {
                    (Some(0), Some(0)) => Complex64::new(diagonal, 0.0),
                    (Some(m), Some(q)) => {
                        kernel.eval(Complex64::new(m as f64 * h, q as f64 * h), 1)
                    }
                    _ => Complex64::new(0.0, 0.0),
                })
                .collect()
        })
        .collect();
    let samples: Vec<Complex64> = rows.into_iter().flatten().collect();

    let quadrature_error = refinement_estimate(&kernel, grid, &samples);
    if !(quadrature_error <= QUADRATURE_THRESHOLD) {
        return Err(Error::QuadratureTolerance {
            estimate: quadrature_error,
            threshold: QUADRATURE_THRESHOLD,
        });
    }

    let roots = singular_points(lambda.lambda());
    let aliased = roots.iter().any(|z| z.norm() >= PI / h);
    let record = RegularizationRecord {
        singular_points: roots,
        rule: RULE_ID.to_string(),
        diagonal,
        quadrature_error,
        near_circle: (lambda.modulus() - 1.0).abs() < NEAR_CIRCLE_BAND,
        aliased,
    };
    if aliased {
        log::warn!(
            "λ = {}: second symbol root beyond the grid Nyquist frequency",
            lambda.lambda()
        );
    }
    Ok(GreensTable {
        lambda,
        grid: *grid,
        samples,
        record,
    })
}

// Index in the padded axis to signed offset; the `-N` slot stays empty.
fn offset_of(index: usize, n: usize) -> Option<i64> {
    match index.cmp(&n) {
        std::cmp::Ordering::Less => Some(index as i64),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(index as i64 - 2 * n as i64),
    }
}

// Re-evaluates a deterministic subset of entries at doubled resolution.
fn refinement_estimate(kernel: &Kernel, grid: &Grid, samples: &[Complex64]) -> f64 {
    let n = grid.points() as i64;
    let side = 2 * grid.points();
    let h = grid.spacing();
    let scale = samples.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let probes: Vec<(i64, i64)> = {
        let step = (n / 8).max(1);
        let mut v = Vec::new();
        let mut m = -(n - 1);
        while m < n {
            let mut q = -(n - 1);
            while q < n {
                if (m, q) != (0, 0) {
                    v.push((m, q));
                }
                q += step;
            }
            m += step;
        }
        v.extend([(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, -1)]);
        v
    };
    let worst = probes
        .par_iter()
        .map(|&(m, q)| {
            let j = m.rem_euclid(2 * n) as usize;
            let k = q.rem_euclid(2 * n) as usize;
            let fine = kernel.eval(Complex64::new(m as f64 * h, q as f64 * h), 2);
            (fine - samples[k * side + j]).norm()
        })
        .reduce(|| 0.0, f64::max);
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Tabulated `g(z, λ)` at a difference vector `z` of the table's grid.
pub fn greens_g(table: &GreensTable, z: Complex64) -> Result<Complex64> {
    let (m, n) = lattice_offset(table.grid(), z)?;
    Ok(table.at_offset(m, n))
}

/// `G(z, λ) = e^{-(λz̄ + z/λ)/2} g(z, λ)` from the table. At `z = 0` this is
/// the regularized diagonal value.
pub fn greens_big_g(table: &GreensTable, z: Complex64) -> Result<Complex64> {
    Ok(big_g_prefactor(z, table.lambda().lambda()) * greens_g(table, z)?)
}

fn lattice_offset(grid: &Grid, z: Complex64) -> Result<(i64, i64)> {
    let h = grid.spacing();
    let limit = grid.points() as f64;
    let (m, n) = (z.re / h, z.im / h);
    let (mr, nr) = (m.round(), n.round());
    let on_lattice = (m - mr).abs() < 1e-9 && (n - nr).abs() < 1e-9;
    if !on_lattice || mr.abs() >= limit || nr.abs() >= limit {
        return Err(Error::InvalidArgument(format!(
            "{z} is not a difference vector of the grid"
        )));
    }
    Ok((mr as i64, nr as i64))
}

/// File name of the cached table for `(λ, R, N, rule)`.
pub fn cache_key(grid: &Grid, lambda: SpectralPoint) -> String {
    let mut hasher = Sha256::new();
    hasher.update(lambda.lambda().re.to_le_bytes());
    hasher.update(lambda.lambda().im.to_le_bytes());
    hasher.update(grid.radius().to_le_bytes());
    hasher.update((grid.points() as u64).to_le_bytes());
    hasher.update(RULE_ID.as_bytes());
    format!("g-{}.tbl", &hex::encode(hasher.finalize())[..32])
}

/// Loads a table from `dir` when present and consistent, otherwise builds
/// and stores it.
pub fn cached_table(dir: &Path, grid: &Grid, lambda: SpectralPoint) -> Result<GreensTable> {
    let path: PathBuf = dir.join(cache_key(grid, lambda));
    if let Ok(file) = std::fs::File::open(&path) {
        match GreensTable::read_from(std::io::BufReader::new(file)) {
            Ok(t) if t.grid == *grid && t.lambda == lambda && t.record.rule == RULE_ID => {
                return Ok(t)
            }
            Ok(_) => log::warn!("cache entry {} does not match; rebuilding", path.display()),
            Err(e) => log::warn!("unreadable cache entry {}: {e}; rebuilding", path.display()),
        }
    }
    let table = build_greens_table(grid, lambda)?;
    std::fs::create_dir_all(dir)?;
    let tmp = path.with_extension("tmp");
    table.write_to(std::io::BufWriter::new(std::fs::File::create(&tmp)?))?;
    std::fs::rename(tmp, &path)?;
    Ok(table)
}
