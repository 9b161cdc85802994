//! Real decaying potentials sampled on a [`Grid`], and their Fourier transform.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Exponent margin used for the algebraic decay certificate `q(1+|z|)^{-2-ε}`.
pub const DEFAULT_EPSILON: f64 = 1.0;

/// Closed-form potential families. `Custom` carries no analytic form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case")]
pub enum Family {
    /// `A·exp(-|z|²/σ²)`
    Gaussian { amplitude: f64, width: f64 },
    /// `A·exp(-α·sqrt(|z|²+1))`
    ExpBump { amplitude: f64, decay: f64 },
    /// `A·|z|²·exp(-|z|²/σ²)`
    Ring { amplitude: f64, width: f64 },
    Custom,
}

impl Family {
    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        Family::Gaussian { amplitude, width }
    }

    pub fn exp_bump(amplitude: f64, decay: f64) -> Self {
        Family::ExpBump { amplitude, decay }
    }

    pub fn ring(amplitude: f64, width: f64) -> Self {
        Family::Ring { amplitude, width }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::ExpBump { .. } => "exp-bump",
            Family::Ring { .. } => "ring",
            Family::Custom => "custom",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (amplitude, scale, what) = match *self {
            Family::Gaussian { amplitude, width } | Family::Ring { amplitude, width } => {
                (amplitude, width, "width σ")
            }
            Family::ExpBump { amplitude, decay } => (amplitude, decay, "decay rate α"),
            Family::Custom => return Ok(()),
        };
        if !amplitude.is_finite() {
            return Err(Error::InvalidPotential(format!(
                "amplitude must be finite, got {amplitude}"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidPotential(format!(
                "{what} must be positive, got {scale}"
            )));
        }
        Ok(())
    }

    /// Value at offset `w` from the family's centre.
    pub fn evaluate(&self, w: Complex64) -> Option<f64> {
        let r2 = w.norm_sqr();
        match *self {
            Family::Gaussian { amplitude, width } => {
                Some(amplitude * (-r2 / (width * width)).exp())
            }
            Family::ExpBump { amplitude, decay } => {
                Some(amplitude * (-decay * (r2 + 1.0).sqrt()).exp())
            }
            Family::Ring { amplitude, width } => {
                Some(amplitude * r2 * (-r2 / (width * width)).exp())
            }
            Family::Custom => None,
        }
    }

    /// Rate `α` used for the exponential decay certificate.
    fn exponential_rate(&self) -> Option<f64> {
        match *self {
            Family::ExpBump { decay, .. } => Some(decay),
            Family::Gaussian { .. } | Family::Ring { .. } => Some(1.0),
            Family::Custom => None,
        }
    }

    fn is_radial(&self) -> bool {
        !matches!(self, Family::Custom)
    }
}

/// Sup-norm constants certifying the decay of the samples at every node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    /// `q = max |v|(1+|z|)^{2+ε}`.
    pub q: f64,
    pub eps: f64,
    /// `(C, α)` with `|v(z)| ≤ C e^{-α|z|}`, for the exponential families.
    pub exponential: Option<(f64, f64)>,
}

impl DecayCertificate {
    fn compute(grid: &Grid, samples: &[f64], rate: Option<f64>) -> Self {
        let eps = DEFAULT_EPSILON;
        let mut q = 0.0f64;
        let mut c = 0.0f64;
        for (z, &v) in grid.nodes().zip(samples) {
            let r = z.norm();
            q = q.max(v.abs() * (1.0 + r).powf(2.0 + eps));
            if let Some(alpha) = rate {
                c = c.max(v.abs() * (alpha * r).exp());
            }
        }
        DecayCertificate {
            q,
            eps,
            exponential: rate.map(|alpha| (c, alpha)),
        }
    }

    /// True when every sample obeys both bounds (with a relative slack for rounding).
    pub fn holds(&self, grid: &Grid, samples: &[f64]) -> bool {
        let slack = 1.0 + 1e-12;
        grid.nodes().zip(samples).all(|(z, &v)| {
            let r = z.norm();
            let algebraic = v.abs() <= slack * self.q * (1.0 + r).powf(-2.0 - self.eps);
            let exponential = self
                .exponential
                .is_none_or(|(c, alpha)| v.abs() <= slack * c * (-alpha * r).exp());
            algebraic && exponential
        })
    }
}

/// Real potential sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    grid: Grid,
    samples: Vec<f64>,
    family: Family,
    center: Complex64,
    certificate: DecayCertificate,
}

impl Potential {
    /// Samples an analytic family centred at `center`.
    pub fn analytic(grid: Grid, family: Family, center: Complex64) -> Result<Self> {
        family.validate()?;
        if matches!(family, Family::Custom) {
            return Err(Error::InvalidPotential(
                "custom potentials must be built from samples".into(),
            ));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::InvalidPotential("centre must be finite".into()));
        }
        let samples: Vec<f64> = grid
            .nodes()
            .map(|z| family.evaluate(z - center).expect("analytic family"))
            .collect();
        let certificate = DecayCertificate::compute(&grid, &samples, family.exponential_rate());
        Ok(Self {
            grid,
            samples,
            family,
            center,
            certificate,
        })
    }

    /// Wraps externally sampled values. They must be finite.
    pub fn custom(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidPotential(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential(format!("non-finite sample {bad}")));
        }
        let certificate = DecayCertificate::compute(&grid, &samples, None);
        Ok(Self {
            grid,
            samples,
            family: Family::Custom,
            center: Complex64::new(0.0, 0.0),
            certificate,
        })
    }

    /// Identically zero potential.
    pub fn zero(grid: Grid) -> Self {
        Self::analytic(grid, Family::gaussian(0.0, 1.0), Complex64::new(0.0, 0.0))
            .expect("zero gaussian is valid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn certificate(&self) -> &DecayCertificate {
        &self.certificate
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Nodes where `|v| > tolerance · max|v|`.
    pub fn active_nodes(&self, tolerance: f64) -> Vec<usize> {
        let cut = tolerance * self.max_abs();
        (0..self.samples.len())
            .filter(|&i| self.samples[i] != 0.0 && self.samples[i].abs() > cut)
            .collect()
    }

    /// Analytic value at an arbitrary point, when the family has a closed form.
    pub fn value_at(&self, z: Complex64) -> Option<f64> {
        self.family.evaluate(z - self.center)
    }

    /// `v(z - shift)`, re-evaluated from the closed form.
    pub fn translate(&self, shift: Complex64) -> Result<Self> {
        if !(shift.re.is_finite() && shift.im.is_finite()) {
            return Err(Error::TranslationUnsupported("shift must be finite".into()));
        }
        if matches!(self.family, Family::Custom) {
            return Err(Error::TranslationUnsupported(
                "custom potential has no analytic form; translation would need interpolation"
                    .into(),
            ));
        }
        let limit = 0.5 * self.grid.radius();
        if shift.norm() > limit {
            return Err(Error::TranslationUnsupported(format!(
                "|ζ| = {} exceeds R/2 = {limit}",
                shift.norm()
            )));
        }
        Self::analytic(self.grid, self.family.clone(), self.center + shift)
    }

    /// `v̂(p) = (2π)^{-2} ∬ e^{(i/2)(p̄z + p z̄)} v(z) dz` by the trapezoid rule.
    pub fn fourier_hat(&self, p: Complex64) -> Result<Complex64> {
        if !(p.re.is_finite() && p.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite frequency {p}")));
        }
        let g = &self.grid;
        let n = g.points();
        // (i/2)(p̄z + p z̄) = i(p₁x₁ + p₂x₂)
        let ex: Vec<Complex64> = (0..n).map(|j| Complex64::cis(p.re * g.coordinate(j))).collect();
        let ey: Vec<Complex64> = (0..n).map(|k| Complex64::cis(p.im * g.coordinate(k))).collect();
        let mut total = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let row = &self.samples[k * n..(k + 1) * n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (e, &v) in ex.iter().zip(row) {
                acc += e * v;
            }
            total += acc * ey[k];
        }
        Ok(total * g.cell_area() / (4.0 * std::f64::consts::PI * std::f64::consts::PI))
    }

    /// Closed-form Gaussian transform, when this is an untranslated-shape Gaussian.
    pub fn gaussian_hat_exact(&self, p: Complex64) -> Option<Complex64> {
        match self.family {
            Family::Gaussian { amplitude, width } => {
                let base = amplitude * width * width / (4.0 * std::f64::consts::PI)
                    * (-width * width * p.norm_sqr() / 4.0).exp();
                // shift by c multiplies by e^{i Re(p̄ c)}
                Some(Complex64::cis((p.conj() * self.center).re) * base)
            }
            _ => None,
        }
    }

    pub fn is_radial_about_origin(&self) -> bool {
        self.family.is_radial() && self.center == Complex64::new(0.0, 0.0)
    }

    /// SHA-256 over the grid, family header and raw samples.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.grid.radius().to_le_bytes());
        hasher.update((self.grid.points() as u64).to_le_bytes());
        hasher.update(serde_json::to_vec(&self.family).unwrap_or_default());
        hasher.update(self.center.re.to_le_bytes());
        hasher.update(self.center.im.to_le_bytes());
        for v in &self.samples {
            hasher.update(v.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    /// Writes the JSON header line followed by `N²` little-endian `f64`s.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let header = PotentialHeader {
            family: self.family.clone(),
            center: [self.center.re, self.center.im],
            radius: self.grid.radius(),
            points: self.grid.points(),
            q: self.certificate.q,
            eps: self.certificate.eps,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(self.samples.len() * 8);
        for v in &self.samples {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(mut input: R) -> Result<Self> {
        let mut line = Vec::new();
        input.read_until(b'\n', &mut line)?;
        if line.last() != Some(&b'\n') {
            return Err(Error::Format("missing potential header line".into()));
        }
        let header: PotentialHeader = serde_json::from_slice(&line)?;
        let grid = Grid::new(header.radius, header.points)?;
        let mut payload = Vec::new();
        input.read_to_end(&mut payload)?;
        if payload.len() != grid.len() * 8 {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                grid.len() * 8,
                payload.len()
            )));
        }
        let samples: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let center = Complex64::new(header.center[0], header.center[1]);
        let mut potential = match header.family {
            Family::Custom => Potential::custom(grid, samples)?,
            family => {
                family.validate()?;
                let certificate =
                    DecayCertificate::compute(&grid, &samples, family.exponential_rate());
                Potential {
                    grid,
                    samples,
                    family,
                    center,
                    certificate,
                }
            }
        };
        potential.certificate.eps = header.eps;
        Ok(potential)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialHeader {
    #[serde(flatten)]
    family: Family,
    center: [f64; 2],
    #[serde(rename = "R")]
    radius: f64,
    #[serde(rename = "N")]
    points: usize,
    q: f64,
    eps: f64,
}

/// Samples `family` on `grid`, centred at the origin.
pub fn sample_potential(grid: Grid, family: Family) -> Result<Potential> {
    Potential::analytic(grid, family, Complex64::new(0.0, 0.0))
}

/// `v_ζ(z) = v(z - ζ)`.
pub fn translate_potential(v: &Potential, shift: Complex64) -> Result<Potential> {
    v.translate(shift)
}

pub fn fourier_hat_v(v: &Potential, p: Complex64) -> Result<Complex64> {
    v.fourier_hat(p)
}
