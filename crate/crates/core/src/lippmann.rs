//! The integral equation `μ = 1 + g ∗ (vμ)`, its weighted Hilbert–Schmidt
//! kernel, and the modified Fredholm determinant `Δ(λ)`.

use std::sync::Arc;

use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{big_g_prefactor, build_greens_table, GreensTable};
use crate::grid::Grid;
use crate::potential::{Potential, DEFAULT_EPSILON};
use crate::spectral::{LambdaGrid, SpectralPoint};

/// Eigenvalues closer than this to 1 mark `λ` as exceptional.
pub const EIGEN_EXCEPTIONAL_GAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Relative residual target for `μ`.
    pub tol: f64,
    pub max_iter: usize,
    /// Krylov subspace size between restarts.
    pub restart: usize,
    /// Try a dense solve on the support of `v` when the iteration stagnates.
    pub dense_fallback: bool,
    /// Nodes with `|v| ≤ active_tol·max|v|` are left out of dense matrices.
    pub active_tol: f64,
    /// Largest `N` for which dense matrices are formed.
    pub dense_cap: usize,
    /// Largest number of active nodes in a dense matrix.
    pub max_active: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 600,
            restart: 60,
            dense_fallback: true,
            active_tol: 1e-8,
            dense_cap: 128,
            max_active: 8000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.tol, self.active_tol].iter().all(|t| t.is_finite() && *t > 0.0);
        if !positive || self.max_iter == 0 || self.restart == 0 || self.max_active == 0 {
            return Err(Error::InvalidArgument(
                "solver tolerances and iteration limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Zero-padded FFT convolution with a [`GreensTable`], including the `h²`
/// quadrature weight.
pub struct Convolver {
    n: usize,
    side: usize,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Convolver {
    pub fn new(table: &GreensTable) -> Self {
        let n = table.grid().points();
        let side = table.side();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(side);
        let inverse = planner.plan_fft_inverse(side);
        let weight = table.grid().cell_area() / (side * side) as f64;
        let mut spectrum = table.samples().to_vec();
        fft2(&mut spectrum, side, forward.as_ref());
        spectrum.iter_mut().for_each(|c| *c *= weight);
        Self {
            n,
            side,
            spectrum,
            forward,
            inverse,
        }
    }

    /// `h² Σ_ζ g(z - ζ) f(ζ)` at every node `z`.
    pub fn apply(&self, field: &[Complex64]) -> Vec<Complex64> {
        let (n, side) = (self.n, self.side);
        assert_eq!(field.len(), n * n, "field size does not match grid");
        let mut buf = vec![Complex64::new(0.0, 0.0); side * side];
        for k in 0..n {
            buf[k * side..k * side + n].copy_from_slice(&field[k * n..(k + 1) * n]);
        }
        fft2(&mut buf, side, self.forward.as_ref());
        buf.iter_mut().zip(&self.spectrum).for_each(|(b, s)| *b *= s);
        fft2(&mut buf, side, self.inverse.as_ref());
        let mut out = Vec::with_capacity(n * n);
        for k in 0..n {
            out.extend_from_slice(&buf[k * side..k * side + n]);
        }
        out
    }
}

fn fft2(data: &mut [Complex64], side: usize, plan: &dyn Fft<f64>) {
    plan.process(data);
    transpose(data, side);
    plan.process(data);
    transpose(data, side);
}

fn transpose(data: &mut [Complex64], side: usize) {
    for i in 0..side {
        for j in i + 1..side {
            data.swap(i * side + j, j * side + i);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// `v ≡ 0`, so `μ ≡ 1` with no work.
    Trivial,
    Krylov,
    Dense,
}

/// `μ(·, λ)` on the grid, with solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuField {
    pub lambda: SpectralPoint,
    pub grid: Grid,
    pub samples: Vec<Complex64>,
    /// `‖μ - 1 - g∗(vμ)‖₂ / ‖1‖₂`.
    pub residual: f64,
    pub iterations: usize,
    pub method: SolveMethod,
}

impl MuField {
    /// `ψ = e^{-(λz̄ + z/λ)/2} μ` at node `index`.
    pub fn psi(&self, index: usize) -> Complex64 {
        let z = self.grid.node_at(index);
        big_g_prefactor(z, self.lambda.lambda()) * self.samples[index]
    }

    /// Mean of `μ` over the outermost interior ring of nodes.
    pub fn boundary_ring_mean(&self) -> Complex64 {
        let ring = self.grid.boundary_ring();
        let sum: Complex64 = ring.iter().map(|&i| self.samples[i]).sum();
        sum / ring.len() as f64
    }

    /// `max |μ - 1|`.
    pub fn max_deviation(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, c| m.max((c - 1.0).norm()))
    }
}

fn ensure_same_grid(v: &Potential, table: &GreensTable) -> Result<()> {
    if v.grid() != table.grid() {
        return Err(Error::GridMismatch(format!(
            "potential on {:?}, table on {:?}",
            v.grid(),
            table.grid()
        )));
    }
    Ok(())
}

/// `g ∗ (v·field)` with the trapezoid weights.
pub fn apply_operator(conv: &Convolver, v: &Potential, field: &[Complex64]) -> Vec<Complex64> {
    let product: Vec<Complex64> = field.iter().zip(v.samples()).map(|(f, &w)| f * w).collect();
    conv.apply(&product)
}

/// Solves the integral equation with default [`SolverOptions`].
pub fn solve_mu(v: &Potential, table: &GreensTable) -> Result<MuField> {
    solve_mu_with(v, table, &SolverOptions::default())
}

pub fn solve_mu_with(v: &Potential, table: &GreensTable, opts: &SolverOptions) -> Result<MuField> {
    ensure_same_grid(v, table)?;
    opts.validate()?;
    let grid = *v.grid();
    let lambda = table.lambda();
    let count = grid.len();
    let one = Complex64::new(1.0, 0.0);
    if v.is_zero() {
        return Ok(MuField {
            lambda,
            grid,
            samples: vec![one; count],
            residual: 0.0,
            iterations: 0,
            method: SolveMethod::Trivial,
        });
    }

    let conv = Convolver::new(table);
    let op = |x: &[Complex64]| -> Vec<Complex64> {
        let kx = apply_operator(&conv, v, x);
        x.iter().zip(kx).map(|(a, b)| a - b).collect()
    };
    let rhs = vec![one; count];
    let outcome = gmres(&op, &rhs, rhs.clone(), opts);
    let residual = true_residual(&op, &rhs, &outcome.solution);
    if residual <= opts.tol {
        return Ok(MuField {
            lambda,
            grid,
            samples: outcome.solution,
            residual,
            iterations: outcome.iterations,
            method: SolveMethod::Krylov,
        });
    }
    log::debug!(
        "λ = {}: Krylov stalled at residual {residual:.3e} after {} iterations",
        lambda.lambda(),
        outcome.iterations
    );
    if !opts.dense_fallback {
        return Err(Error::NonConvergent {
            lambda: lambda.lambda(),
            residual,
        });
    }

    let kernel = build_kernel_with(v, table, DEFAULT_EPSILON, opts)?;
    let on_support = kernel.solve_mu_on_support()?;
    let mut seed = vec![Complex64::new(0.0, 0.0); count];
    for (&node, &value) in kernel.active.iter().zip(&on_support) {
        seed[node] = value;
    }
    // One sweep of the equation extends μ from the support to every node.
    let kx = apply_operator(&conv, v, &seed);
    let samples: Vec<Complex64> = kx.iter().map(|k| one + k).collect();
    let residual = true_residual(&op, &rhs, &samples);
    if residual <= opts.tol.max(1e-8) {
        Ok(MuField {
            lambda,
            grid,
            samples,
            residual,
            iterations: outcome.iterations,
            method: SolveMethod::Dense,
        })
    } else {
        Err(Error::NonConvergent {
            lambda: lambda.lambda(),
            residual,
        })
    }
}

fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn true_residual<F>(op: &F, rhs: &[Complex64], x: &[Complex64]) -> f64
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let ax = op(x);
    let r: Vec<Complex64> = rhs.iter().zip(ax).map(|(b, a)| b - a).collect();
    norm2(&r) / norm2(rhs)
}

struct GmresOutcome {
    solution: Vec<Complex64>,
    iterations: usize,
}

// Restarted GMRES with modified Gram–Schmidt and Givens rotations.
fn gmres<F>(op: &F, rhs: &[Complex64], mut x: Vec<Complex64>, opts: &SolverOptions) -> GmresOutcome
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let zero = Complex64::new(0.0, 0.0);
    let b_norm = norm2(rhs);
    let m = opts.restart;
    let mut iterations = 0;
    let mut last_cycle_residual = f64::INFINITY;

    while iterations < opts.max_iter {
        let ax = op(&x);
        let r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm2(&r);
        let rel = beta / b_norm;
        // Stop on convergence, or when a whole cycle gained almost nothing.
        if rel <= 0.5 * opts.tol || rel > 0.999 * last_cycle_residual {
            break;
        }
        last_cycle_residual = rel;

        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|c| c / beta).collect()];
        let mut hess = vec![vec![zero; m]; m + 1];
        let mut cs = vec![zero; m];
        let mut sn = vec![zero; m];
        let mut g = vec![zero; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut used = 0;

        for j in 0..m {
            if iterations >= opts.max_iter {
                break;
            }
            iterations += 1;
            let mut w = op(&basis[j]);
            for (i, q) in basis.iter().enumerate() {
                let hij: Complex64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                hess[i][j] = hij;
                w.iter_mut().zip(q).for_each(|(wk, qk)| *wk -= hij * qk);
            }
            let wn = norm2(&w);
            hess[j + 1][j] = Complex64::new(wn, 0.0);
            for i in 0..j {
                let t = cs[i].conj() * hess[i][j] + sn[i].conj() * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let (a, bb) = (hess[j][j], hess[j + 1][j]);
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if denom == 0.0 {
                used = j;
                break;
            }
            cs[j] = a / denom;
            sn[j] = bb / denom;
            hess[j][j] = Complex64::new(denom, 0.0);
            hess[j + 1][j] = zero;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j].conj() * g[j];
            used = j + 1;
            if g[j + 1].norm() / b_norm <= 0.5 * opts.tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|c| c / wn).collect());
        }

        // Back substitution on the triangular part.
        let mut y = vec![zero; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= hess[i][k] * y[k];
            }
            y[i] = s / hess[i][i];
        }
        for (yi, q) in y.iter().zip(&basis) {
            x.iter_mut().zip(q).for_each(|(xk, qk)| *xk += yi * qk);
        }
    }
    GmresOutcome {
        solution: x,
        iterations,
    }
}

/// Dense weighted kernel `A(z, ζ) = w(z)⁻¹ h² g(z - ζ) v(ζ) w(ζ)` with
/// `w = (1 + |z|)^{(2+ε)/2}`, restricted to the support of `v`.
///
/// Columns where `v` vanishes (below `active_tol·max|v|`) are identically
/// zero, so dropping them and the matching rows leaves `det₂(I - A)`
/// unchanged.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub lambda: SpectralPoint,
    pub grid: Grid,
    pub eps: f64,
    /// Grid indices of the retained nodes.
    pub active: Vec<usize>,
    pub matrix: Mat<Complex64>,
    /// Frobenius norm of `matrix`.
    pub hs_norm: f64,
}

impl KernelMatrix {
    pub fn size(&self) -> usize {
        self.active.len()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.size()).map(|i| self.matrix[(i, i)]).sum()
    }

    fn weight(&self, index: usize) -> f64 {
        (1.0 + self.grid.node_at(index).norm()).powf(0.5 * (2.0 + self.eps))
    }

    /// Solves `(I - A)m = w⁻¹` and returns `μ = w·m` on the active nodes.
    pub fn solve_mu_on_support(&self) -> Result<Vec<Complex64>> {
        let size = self.size();
        if size == 0 {
            return Ok(Vec::new());
        }
        let system = Mat::<Complex64>::from_fn(size, size, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            Complex64::new(delta, 0.0) - self.matrix[(i, j)]
        });
        let rhs = Mat::<Complex64>::from_fn(size, 1, |i, _| {
            Complex64::new(1.0 / self.weight(self.active[i]), 0.0)
        });
        let m = system.partial_piv_lu().solve(&rhs);
        let out: Vec<Complex64> = (0..size).map(|i| m[(i, 0)] * self.weight(self.active[i])).collect();
        if out.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonConvergent {
                lambda: self.lambda.lambda(),
                residual: f64::INFINITY,
            });
        }
        Ok(out)
    }
}

pub fn build_kernel(v: &Potential, table: &GreensTable, eps: f64) -> Result<KernelMatrix> {
    build_kernel_with(v, table, eps, &SolverOptions::default())
}

pub fn build_kernel_with(
    v: &Potential,
    table: &GreensTable,
    eps: f64,
    opts: &SolverOptions,
) -> Result<KernelMatrix> {
    ensure_same_grid(v, table)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    let grid = *v.grid();
    if grid.points() > opts.dense_cap {
        return Err(Error::DenseUnavailable(format!(
            "N = {} exceeds the dense cap {}",
            grid.points(),
            opts.dense_cap
        )));
    }
    let active = v.active_nodes(opts.active_tol);
    if active.len() > opts.max_active {
        return Err(Error::DenseUnavailable(format!(
            "{} active nodes exceed the limit {}",
            active.len(),
            opts.max_active
        )));
    }
    let h2 = grid.cell_area();
    let coords: Vec<(i64, i64)> = active
        .iter()
        .map(|&i| {
            let (j, k) = grid.coords(i);
            (j as i64, k as i64)
        })
        .collect();
    let weights: Vec<f64> = active
        .iter()
        .map(|&i| (1.0 + grid.node_at(i).norm()).powf(0.5 * (2.0 + eps)))
        .collect();
    let scaled: Vec<f64> = active
        .iter()
        .zip(&weights)
        .map(|(&i, w)| h2 * v.samples()[i] * w)
        .collect();
    let size = active.len();
    let matrix = Mat::<Complex64>::from_fn(size, size, |i, j| {
        let (ji, ki) = coords[i];
        let (jj, kj) = coords[j];
        table.at_offset(ji - jj, ki - kj) * (scaled[j] / weights[i])
    });
    let hs_norm = matrix.norm_l2();
    Ok(KernelMatrix {
        lambda: table.lambda(),
        grid,
        eps,
        active,
        matrix,
        hs_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetMethod {
    /// `∏(1 - μᵢ)e^{μᵢ}` over the eigenvalues of `A`.
    Eigen,
    /// `det(I - A)` by partial-pivoting LU, times `e^{tr A}`.
    LuLogdet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminantSample {
    pub lambda: SpectralPoint,
    pub value: Complex64,
    /// `|Im Δ|`.
    pub im_residue: f64,
    /// Number of eigenvalues multiplied (zero for the LU backend).
    pub eigen_count: usize,
    pub method: DetMethod,
    pub hs_norm: f64,
    pub active_nodes: usize,
    /// For the eigen backend: relative gap between the product and the
    /// exponentiated sum of logarithms.
    pub order_discrepancy: Option<f64>,
    pub exceptional: bool,
}

impl DeterminantSample {
    /// `Δ = 1` for the empty kernel.
    fn unit(kernel: &KernelMatrix, method: DetMethod) -> Self {
        Self {
            lambda: kernel.lambda,
            value: Complex64::new(1.0, 0.0),
            im_residue: 0.0,
            eigen_count: 0,
            method,
            hs_norm: 0.0,
            active_nodes: 0,
            order_discrepancy: None,
            exceptional: false,
        }
    }
}

/// `Δ` by the LU backend.
pub fn modified_fredholm_det(kernel: &KernelMatrix) -> Result<DeterminantSample> {
    modified_fredholm_det_with(kernel, DetMethod::LuLogdet)
}

pub fn modified_fredholm_det_with(
    kernel: &KernelMatrix,
    method: DetMethod,
) -> Result<DeterminantSample> {
    let size = kernel.size();
    if size == 0 {
        return Ok(DeterminantSample::unit(kernel, method));
    }
    let mut sample = DeterminantSample::unit(kernel, method);
    sample.hs_norm = kernel.hs_norm;
    sample.active_nodes = size;
    match method {
        DetMethod::LuLogdet => {
            let system = Mat::<Complex64>::from_fn(size, size, |i, j| {
                let delta = if i == j { 1.0 } else { 0.0 };
                Complex64::new(delta, 0.0) - kernel.matrix[(i, j)]
            });
            let lu = system.partial_piv_lu();
            let u = lu.U();
            let mut log_sum = kernel.trace();
            let mut singular = false;
            for i in 0..size {
                let d = u[(i, i)];
                if d.norm() == 0.0 {
                    singular = true;
                    break;
                }
                log_sum += d.ln();
            }
            let sign = permutation_sign(lu.P().arrays().0);
            sample.value = if singular {
                Complex64::new(0.0, 0.0)
            } else {
                sign * log_sum.exp()
            };
            sample.exceptional = singular || sample.value.norm() < EIGEN_EXCEPTIONAL_GAP;
        }
        DetMethod::Eigen => {
            let eigen = kernel
                .matrix
                .eigenvalues()
                .map_err(|e| Error::DenseUnavailable(format!("eigenvalue solver failed: {e:?}")))?;
            let one = Complex64::new(1.0, 0.0);
            let mut product = one;
            let mut log_sum = Complex64::new(0.0, 0.0);
            for &mu in &eigen {
                if (one - mu).norm() < EIGEN_EXCEPTIONAL_GAP {
                    sample.exceptional = true;
                }
                product *= (one - mu) * mu.exp();
                log_sum += (one - mu).ln() + mu;
            }
            let summed = log_sum.exp();
            sample.eigen_count = eigen.len();
            sample.order_discrepancy =
                Some((product - summed).norm() / product.norm().max(summed.norm()).max(1e-300));
            sample.value = if sample.exceptional { Complex64::new(0.0, 0.0) } else { product };
        }
    }
    sample.im_residue = sample.value.im.abs();
    if sample.exceptional {
        log::warn!("λ = {} in (or near) exceptional set E", kernel.lambda.lambda());
    }
    Ok(sample)
}

fn permutation_sign(forward: &[usize]) -> f64 {
    let mut seen = vec![false; forward.len()];
    let mut sign = 1.0;
    for start in 0..forward.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = forward[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// Determinants over a spectral grid, with the points where `|Δ|` is small.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalScan {
    pub samples: Vec<DeterminantSample>,
    pub flagged: Vec<SpectralPoint>,
    /// `threshold_factor · max|Δ|`.
    pub threshold: f64,
    pub min_abs: f64,
    /// Mean of `Δ` over the unit-circle samples, if any.
    pub circle_value: Option<Complex64>,
}

/// Relative threshold used by [`detect_exceptional`].
pub const EXCEPTIONAL_FACTOR: f64 = 1e-6;

pub fn detect_exceptional(v: &Potential, lambdas: &LambdaGrid) -> Result<ExceptionalScan> {
    detect_exceptional_with(v, lambdas, &SolverOptions::default(), EXCEPTIONAL_FACTOR)
}

pub fn detect_exceptional_with(
    v: &Potential,
    lambdas: &LambdaGrid,
    opts: &SolverOptions,
    factor: f64,
) -> Result<ExceptionalScan> {
    let samples = lambdas
        .points()
        .iter()
        .map(|&p| determinant_at(v, p, opts))
        .collect::<Result<Vec<_>>>()?;
    let max_abs = samples.iter().fold(0.0f64, |m, s| m.max(s.value.norm()));
    let min_abs = samples.iter().fold(f64::INFINITY, |m, s| m.min(s.value.norm()));
    let threshold = factor * max_abs;
    let flagged = samples
        .iter()
        .filter(|s| s.exceptional || s.value.norm() < threshold)
        .map(|s| s.lambda)
        .collect();
    let circle: Vec<Complex64> =
        samples.iter().filter(|s| s.lambda.on_t()).map(|s| s.value).collect();
    let circle_value = if circle.is_empty() {
        None
    } else {
        Some(circle.iter().sum::<Complex64>() / circle.len() as f64)
    };
    Ok(ExceptionalScan {
        samples,
        flagged,
        threshold,
        min_abs,
        circle_value,
    })
}

/// Builds the table and kernel for one `λ` and returns `Δ(λ)`.
pub fn determinant_at(
    v: &Potential,
    lambda: SpectralPoint,
    opts: &SolverOptions,
) -> Result<DeterminantSample> {
    if v.grid().points() > opts.dense_cap {
        return Err(Error::DenseUnavailable(format!(
            "N = {} exceeds the dense cap {}",
            v.grid().points(),
            opts.dense_cap
        )));
    }
    if v.active_nodes(opts.active_tol).is_empty() {
        return Ok(DeterminantSample {
            lambda,
            value: Complex64::new(1.0, 0.0),
            im_residue: 0.0,
            eigen_count: 0,
            method: DetMethod::LuLogdet,
            hs_norm: 0.0,
            active_nodes: 0,
            order_discrepancy: None,
            exceptional: false,
        });
    }
    let table = build_greens_table(v.grid(), lambda)?;
    let kernel = build_kernel_with(v, &table, DEFAULT_EPSILON, opts)?;
    modified_fredholm_det(&kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::potential::{sample_potential, Family};

    fn small_setup(amplitude: f64) -> (Potential, GreensTable) {
        let grid = make_grid(4.0, 32).unwrap();
        let v = sample_potential(grid, Family::gaussian(amplitude, 1.0)).unwrap();
        let table = build_greens_table(&grid, SpectralPoint::polar(0.6, 0.4).unwrap()).unwrap();
        (v, table)
    }

    #[test]
    fn fft_convolution_matches_direct_sum() {
        let (v, table) = small_setup(1.0);
        let grid = *v.grid();
        let n = grid.points();
        let field: Vec<Complex64> = (0..grid.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let fast = Convolver::new(&table).apply(&field);
        for probe in [0, 17, n * n / 2 + 3, n * n - 1] {
            let (jp, kp) = grid.coords(probe);
            let mut direct = Complex64::new(0.0, 0.0);
            for (q, f) in field.iter().enumerate() {
                let (jq, kq) = grid.coords(q);
                direct += table.at_offset(jp as i64 - jq as i64, kp as i64 - kq as i64) * f;
            }
            direct *= grid.cell_area();
            assert!((fast[probe] - direct).norm() < 1e-12 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn zero_potential() {
        let (v, table) = small_setup(0.0);
        let mu = solve_mu(&v, &table).unwrap();
        assert!(mu.samples.iter().all(|&c| c == Complex64::new(1.0, 0.0)));
        assert_eq!(mu.method, SolveMethod::Trivial);
        let kernel = build_kernel(&v, &table, 1.0).unwrap();
        assert_eq!(kernel.size(), 0);
        let det = modified_fredholm_det(&kernel).unwrap();
        assert_eq!(det.value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn krylov_and_dense_agree() {
        let (v, table) = small_setup(0.5);
        let mu = solve_mu(&v, &table).unwrap();
        assert!(mu.residual <= 1e-10);
        assert_eq!(mu.method, SolveMethod::Krylov);
        let opts = SolverOptions {
            active_tol: 1e-300,
            ..SolverOptions::default()
        };
        let kernel = build_kernel_with(&v, &table, 1.0, &opts).unwrap();
        let dense = kernel.solve_mu_on_support().unwrap();
        let worst = kernel
            .active
            .iter()
            .zip(&dense)
            .fold(0.0f64, |m, (&i, d)| m.max((mu.samples[i] - d).norm()));
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn backends_agree() {
        let (v, table) = small_setup(0.8);
        let kernel = build_kernel(&v, &table, 1.0).unwrap();
        let lu = modified_fredholm_det(&kernel).unwrap();
        let eig = modified_fredholm_det_with(&kernel, DetMethod::Eigen).unwrap();
        assert!((lu.value - eig.value).norm() <= 1e-9 * lu.value.norm());
        assert!(eig.order_discrepancy.unwrap() <= 1e-10);
        assert!(kernel.hs_norm > 0.0 && kernel.hs_norm.is_finite());
    }

    #[test]
    fn weights_do_not_change_the_determinant() {
        let (v, table) = small_setup(0.8);
        let a = modified_fredholm_det(&build_kernel(&v, &table, 1.0).unwrap()).unwrap();
        let b = modified_fredholm_det(&build_kernel(&v, &table, 0.25).unwrap()).unwrap();
        assert!((a.value - b.value).norm() <= 1e-11);
    }

    #[test]
    fn permutation_parity() {
        assert_eq!(permutation_sign(&[0, 1, 2]), 1.0);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1.0);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1.0);
        assert_eq!(permutation_sign(&[3, 2, 1, 0]), 1.0);
    }

    #[test]
    fn dense_cap_and_mismatch() {
        let grid = make_grid(4.0, 32).unwrap();
        let v = sample_potential(grid, Family::gaussian(0.5, 1.0)).unwrap();
        let other = build_greens_table(&make_grid(4.0, 16).unwrap(), SpectralPoint::on_circle(0.0))
            .unwrap();
        assert!(matches!(solve_mu(&v, &other), Err(Error::GridMismatch(_))));
        let table = build_greens_table(&grid, SpectralPoint::on_circle(0.0)).unwrap();
        let opts = SolverOptions {
            dense_cap: 16,
            ..SolverOptions::default()
        };
        assert!(matches!(
            build_kernel_with(&v, &table, 1.0, &opts),
            Err(Error::DenseUnavailable(_))
        ));
    }

    #[test]
    fn stagnation_falls_back_to_dense_solve() {
        let (v, table) = small_setup(0.5);
        let opts = SolverOptions {
            max_iter: 2,
            ..SolverOptions::default()
        };
        let mu = solve_mu_with(&v, &table, &opts).unwrap();
        assert_eq!(mu.method, SolveMethod::Dense);
        let strict = SolverOptions {
            dense_fallback: false,
            ..opts
        };
        assert!(matches!(
            solve_mu_with(&v, &table, &strict),
            Err(Error::NonConvergent { .. })
        ));
    }
}
