//! Points and sample sets in the spectral parameter `λ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the band `||λ| - 1| < TOL_T` treated as the unit circle.
pub const TOL_T: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// `0 < |λ| < 1`
    Inner,
    /// `|λ| > 1`
    Outer,
    /// `|λ| = 1`
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Complex64", into = "Complex64")]
pub struct SpectralPoint {
    lambda: Complex64,
    region: Region,
}

impl SpectralPoint {
    pub fn new(lambda: Complex64) -> Result<Self> {
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            return Err(Error::InvalidLambda(format!("non-finite λ = {lambda}")));
        }
        let modulus = lambda.norm();
        if modulus == 0.0 {
            return Err(Error::InvalidLambda("λ = 0 is excluded".into()));
        }
        let region = if (modulus - 1.0).abs() < TOL_T {
            Region::Circle
        } else if modulus < 1.0 {
            Region::Inner
        } else {
            Region::Outer
        };
        Ok(Self { lambda, region })
    }

    pub fn polar(modulus: f64, phase: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(modulus, phase))
    }

    /// `e^{iθ}`.
    pub fn on_circle(phase: f64) -> Self {
        Self::new(Complex64::cis(phase)).expect("unit modulus")
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn on_t(&self) -> bool {
        self.region == Region::Circle
    }

    pub fn modulus(&self) -> f64 {
        self.lambda.norm()
    }

    pub fn phase(&self) -> f64 {
        self.lambda.arg()
    }

    /// `1/λ̄`, same phase and reciprocal modulus.
    pub fn inverse_conjugate(&self) -> Self {
        Self::new(Complex64::from_polar(1.0 / self.modulus(), self.phase()))
            .expect("nonzero reciprocal")
    }

    /// `-1/λ̄`.
    pub fn antipodal_inverse(&self) -> Self {
        Self::new(-1.0 / self.lambda.conj()).expect("nonzero reciprocal")
    }

    /// `sgn(1 - |λ|²)`, zero on the circle band.
    pub fn sign(&self) -> f64 {
        match self.region {
            Region::Inner => 1.0,
            Region::Outer => -1.0,
            Region::Circle => 0.0,
        }
    }

    /// `w = λ - 1/λ̄`, the frequency of the oscillatory factor in `b`.
    pub fn mismatch(&self) -> Complex64 {
        self.lambda - 1.0 / self.lambda.conj()
    }
}

impl TryFrom<Complex64> for SpectralPoint {
    type Error = Error;

    fn try_from(value: Complex64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<SpectralPoint> for Complex64 {
    fn from(p: SpectralPoint) -> Self {
        p.lambda
    }
}

/// How a [`LambdaGrid`] was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridDescriptor {
    Annuli {
        radii: Vec<f64>,
        phases: usize,
        circle_samples: usize,
    },
    Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    points: Vec<SpectralPoint>,
    descriptor: GridDescriptor,
}

impl LambdaGrid {
    /// Annulus samples at phases `2π(k + ½)/phases`, then `circle_samples`
    /// points `e^{2πik/circle_samples}` on the unit circle.
    pub fn from_annuli(radii: &[f64], phases: usize, circle_samples: usize) -> Result<Self> {
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidLambda("annulus radii must be positive".into()));
        }
        if !radii.is_empty() && phases == 0 {
            return Err(Error::InvalidLambda("need at least one phase per annulus".into()));
        }
        let mut points = Vec::with_capacity(radii.len() * phases + circle_samples);
        for &r in radii {
            for k in 0..phases {
                let theta = 2.0 * PI * (k as f64 + 0.5) / phases as f64;
                points.push(SpectralPoint::polar(r, theta)?);
            }
        }
        for k in 0..circle_samples {
            points.push(SpectralPoint::on_circle(2.0 * PI * k as f64 / circle_samples as f64));
        }
        Ok(Self {
            points: dedup(points),
            descriptor: GridDescriptor::Annuli {
                radii: radii.to_vec(),
                phases,
                circle_samples,
            },
        })
    }

    /// Six log-spaced radii in `[0.05, 0.9]`, their reciprocals, 16 phases
    /// each, and 32 samples of the unit circle: 224 points.
    pub fn default_scan() -> Self {
        let inner = log_spaced(0.05, 0.9, 6);
        let mut radii = inner.clone();
        radii.extend(inner.iter().rev().map(|r| 1.0 / r));
        Self::from_annuli(&radii, 16, 32).expect("default grid is valid")
    }

    pub fn from_points(lambdas: &[Complex64]) -> Result<Self> {
        let points = lambdas
            .iter()
            .map(|&l| SpectralPoint::new(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            points: dedup(points),
            descriptor: GridDescriptor::Points,
        })
    }

    pub fn points(&self) -> &[SpectralPoint] {
        &self.points
    }

    pub fn descriptor(&self) -> &GridDescriptor {
        &self.descriptor
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn circle_points(&self) -> impl Iterator<Item = &SpectralPoint> {
        self.points.iter().filter(|p| p.on_t())
    }
}

/// `count` points geometrically spaced from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let ratio = (hi / lo).ln() / (count - 1) as f64;
            (0..count).map(|k| lo * (ratio * k as f64).exp()).collect()
        }
    }
}

fn dedup(points: Vec<SpectralPoint>) -> Vec<SpectralPoint> {
    let mut out: Vec<SpectralPoint> = Vec::with_capacity(points.len());
    for p in points {
        let seen = out
            .iter()
            .any(|q| (q.lambda - p.lambda).norm() <= 1e-13 * p.modulus().max(1.0));
        if !seen {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions() {
        assert_eq!(SpectralPoint::polar(0.5, 1.0).unwrap().region(), Region::Inner);
        assert_eq!(SpectralPoint::polar(2.0, 1.0).unwrap().region(), Region::Outer);
        assert!(SpectralPoint::on_circle(0.3).on_t());
        assert!(SpectralPoint::new(Complex64::new(0.0, 0.0)).is_err());
        assert!(SpectralPoint::new(Complex64::new(f64::NAN, 1.0)).is_err());
    }

    #[test]
    fn default_scan_counts() {
        let g = LambdaGrid::default_scan();
        assert_eq!(g.len(), 224);
        assert_eq!(g.circle_points().count(), 32);
        for p in g.circle_points() {
            assert!((p.modulus() - 1.0).abs() <= f64::EPSILON);
        }
        let moduli: Vec<f64> = g.points().iter().map(|p| p.modulus()).collect();
        let max = moduli.iter().cloned().fold(0.0, f64::max);
        let min = moduli.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((min - 0.05).abs() < 1e-12 && (max - 20.0).abs() < 1e-9);
    }

    #[test]
    fn dedups_and_serializes() {
        let g = LambdaGrid::from_points(&[
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(2.0, 0.0),
        ])
        .unwrap();
        assert_eq!(g.len(), 2);
        let text = serde_json::to_string(&g).unwrap();
        let back: LambdaGrid = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<SpectralPoint>("[0.0, 0.0]").is_err());
    }

    #[test]
    fn inversions() {
        let p = SpectralPoint::polar(0.5, 0.7).unwrap();
        let q = p.inverse_conjugate();
        assert!((q.lambda() - 1.0 / p.lambda().conj()).norm() < 1e-15);
        assert_eq!(q.region(), Region::Outer);
        assert!((p.antipodal_inverse().lambda() + q.lambda()).norm() < 1e-15);
        assert!(SpectralPoint::on_circle(1.0).mismatch().norm() < 1e-15);
    }
}
