use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use num_complex::Complex64;
use scatter_core::grid::GridSpec;
use scatter_core::potential::DEFAULT_EPSILON;
use scatter_core::{Family, Grid, LambdaGrid, Potential, SolverOptions};
use serde::{Deserialize, Serialize};

/// Environment variable naming the directory for cached tables and scans.
pub const CACHE_ENV: &str = "SCATTER_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Analytic {
        model: Family,
        #[serde(default)]
        center: [f64; 2],
    },
    Zero {},
    /// A potential file written by `Potential::write_to`.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LambdaSpec {
    Default {},
    Annuli {
        radii: Vec<f64>,
        phases: usize,
        circle_samples: usize,
    },
    Points { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    AbOnT,
    Delta,
    BSymmetry,
    ALimit,
    GreenSymmetry,
    GreenCircle,
    Born,
    DbarA,
    DbarMu,
    DbarLndelta,
    Shift,
    Soliton,
    Transparency,
}

impl CheckKind {
    pub const ALL: [CheckKind; 13] = [
        CheckKind::AbOnT,
        CheckKind::Delta,
        CheckKind::BSymmetry,
        CheckKind::ALimit,
        CheckKind::GreenSymmetry,
        CheckKind::GreenCircle,
        CheckKind::Born,
        CheckKind::DbarA,
        CheckKind::DbarMu,
        CheckKind::DbarLndelta,
        CheckKind::Shift,
        CheckKind::Soliton,
        CheckKind::Transparency,
    ];

    /// Checks that read a λ-scan of the configured potential.
    pub fn needs_scan(self) -> bool {
        matches!(
            self,
            CheckKind::AbOnT | CheckKind::Delta | CheckKind::BSymmetry | CheckKind::ALimit | CheckKind::Transparency
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    /// Empty means every check.
    pub select: Vec<CheckKind>,
    /// Tolerance overrides keyed by check id.
    pub tolerances: BTreeMap<String, f64>,
    pub dbar_step: f64,
    pub dbar_lambda: [f64; 2],
    pub dbar_points: Vec<[f64; 2]>,
    pub shift: [f64; 2],
    pub shift_radii: Vec<f64>,
    pub shift_phases: usize,
    pub soliton_c: Vec<[f64; 2]>,
    pub soliton_samples: usize,
    pub born_amplitudes: Vec<f64>,
    pub born_lambdas: Vec<[f64; 2]>,
    pub green_lambdas: Vec<[f64; 2]>,
    pub circle_samples: usize,
    pub circle_tol: f64,
    /// Moduli appended to the scan for the large- and small-λ limits.
    pub limit_moduli: Vec<f64>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        let quarter = std::f64::consts::FRAC_PI_4;
        let dbar = Complex64::from_polar(0.5, quarter);
        Self {
            select: Vec::new(),
            tolerances: BTreeMap::new(),
            dbar_step: scatter_core::verify::DEFAULT_DBAR_STEP,
            dbar_lambda: [dbar.re, dbar.im],
            dbar_points: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            shift: [1.0, 1.0],
            shift_radii: vec![0.3, 0.6, 1.6, 3.0],
            shift_phases: 6,
            soliton_c: vec![[0.0, 0.0], [1.0, 0.0], [4.0, 3.0]],
            soliton_samples: 64,
            born_amplitudes: vec![1e-3, 2e-3, 4e-3],
            born_lambdas: vec![[0.5, 0.0], [0.0, 0.4], [-0.3, 0.3], [2.0, 0.0], [-1.5, 1.5], [0.0, -3.0]],
            green_lambdas: vec![[0.5, 0.2], [-0.3, 1.4], [0.05, 0.0]],
            circle_samples: 8,
            circle_tol: 0.01,
            limit_moduli: vec![0.02, 50.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub grid: GridSpec,
    pub lambda_grid: LambdaSpec,
    pub solver: SolverOptions,
    /// Evaluate `Δ` during scans.
    pub determinant: bool,
    pub eps: f64,
    pub checks: CheckConfig,
    pub output: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: PotentialSpec::Analytic {
                model: Family::gaussian(0.5, 1.0),
                center: [0.0, 0.0],
            },
            grid: GridSpec {
                radius: 8.0,
                points: 256,
            },
            lambda_grid: LambdaSpec::Default {},
            solver: SolverOptions::default(),
            determinant: true,
            eps: DEFAULT_EPSILON,
            checks: CheckConfig::default(),
            output: PathBuf::from("out"),
            seed: 0,
            threads: None,
        }
    }
}

fn positive(value: f64, name: &str) -> anyhow::Result<()> {
    if !(value.is_finite() && value > 0.0) {
        bail!("{name} must be positive, got {value}");
    }
    Ok(())
}

impl RunConfig {
    /// Parses `text`, reporting schema errors with line and column.
    pub fn parse(text: &str, origin: &Path) -> anyhow::Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| {
            anyhow::anyhow!("{}:{}:{}: {}", origin.display(), e.line(), e.column(), e)
        })?;
        config.validate().with_context(|| format!("{}: invalid configuration", origin.display()))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, path)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.grid()?;
        self.solver.validate()?;
        positive(self.eps, "eps")?;
        let c = &self.checks;
        positive(c.dbar_step, "checks.dbar_step")?;
        positive(c.circle_tol, "checks.circle_tol")?;
        for (id, tol) in &c.tolerances {
            positive(*tol, &format!("checks.tolerances.{id}"))?;
        }
        for a in &c.born_amplitudes {
            positive(*a, "checks.born_amplitudes")?;
        }
        for m in &c.limit_moduli {
            positive(*m, "checks.limit_moduli")?;
        }
        if c.soliton_samples == 0 {
            bail!("checks.soliton_samples must be positive");
        }
        if self.threads == Some(0) {
            bail!("threads must be positive");
        }
        if let PotentialSpec::Analytic { model, .. } = &self.potential {
            model.validate()?;
        }
        self.lambda_grid()?;
        Ok(())
    }

    pub fn grid(&self) -> anyhow::Result<Grid> {
        Ok(Grid::try_from(self.grid)?)
    }

    pub fn lambda_grid(&self) -> anyhow::Result<LambdaGrid> {
        Ok(match &self.lambda_grid {
            LambdaSpec::Default {} => LambdaGrid::default_scan(),
            LambdaSpec::Annuli {
                radii,
                phases,
                circle_samples,
            } => LambdaGrid::from_annuli(radii, *phases, *circle_samples)?,
            LambdaSpec::Points { points } => LambdaGrid::from_points(&complexes(points))?,
        })
    }

    pub fn potential(&self) -> anyhow::Result<Potential> {
        let grid = self.grid()?;
        Ok(match &self.potential {
            PotentialSpec::Analytic { model, center } => {
                Potential::analytic(grid, model.clone(), Complex64::new(center[0], center[1]))?
            }
            PotentialSpec::Zero {} => Potential::zero(grid),
            PotentialSpec::File { path } => {
                let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
                let v = Potential::read_from(std::io::BufReader::new(file))?;
                if *v.grid() != grid {
                    bail!("potential file {} was sampled on a different grid", path.display());
                }
                v
            }
        })
    }

    pub fn selected(&self, kind: CheckKind) -> bool {
        self.checks.select.is_empty() || self.checks.select.contains(&kind)
    }

    pub fn cache_dir() -> Option<PathBuf> {
        std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
    }
}

pub fn complexes(points: &[[f64; 2]]) -> Vec<Complex64> {
    points.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}
