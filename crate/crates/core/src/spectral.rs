//! Linearization about a ground state and its low spectrum.
//!
//! About `(αQ_ω, βQ_ω)` the linearized operator is
//! `ℒ = −∂² + ω − Q_ω^{2k}·Hess H(α,β)`. The Hessian has `(α,β)` as an
//! eigenvector with eigenvalue `2k+1`, so rotating to `e₁ = (x₀,y₀)`,
//! `e₂ = (−y₀,x₀)` splits ℒ into two scalar Schrödinger operators.

use std::sync::Arc;

use faer::{Mat, Side};
use serde::Serialize;

use crate::direction::{maximize_f, DirectionPoint};
use crate::error::{Error, Result};
use crate::groundstate::{build_ground_state, lambda_second_derivative, scalar_q, LambdaSecond, TAIL_THRESHOLD};
use crate::model::{Grid, ModelParams, Mu};

/// Eigenvalues reported per channel.
pub const REPORTED_EIGENVALUES: usize = 8;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `−∂² + ω − (2k+1)Q^{2k}`, the channel along the ground-state direction.
    L1,
    /// `−∂² + ω − Q^{2k}`.
    L2,
    /// `−∂² + ω − c₋Q^{2k}` with `c₋ = tr Hess H(α,β) − (2k+1)`.
    MinusChannel,
    /// The coupled 2×2 operator in `(u, v)` coordinates.
    FullBlock,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::L1 => "L1",
            OperatorKind::L2 => "L2",
            OperatorKind::MinusChannel => "minus_channel",
            OperatorKind::FullBlock => "full_block",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub omega: f64,
    pub params: ModelParams,
    pub direction: DirectionPoint,
}

impl OperatorSpec {
    /// `Hess H(α,β)` at the ground-state amplitudes.
    pub fn hessian(&self) -> [[f64; 2]; 2] {
        let f = self.params.big_f(self.direction.x0, self.direction.y0);
        let scale = f.powf(-1.0 / (2.0 * self.params.kf()));
        self.params.hessian(scale * self.direction.x0, scale * self.direction.y0)
    }

    /// Coefficient of `Q^{2k}` in the scalar channels.
    pub fn coefficient(&self) -> Option<f64> {
        let k = self.params.kf();
        match self.kind {
            OperatorKind::L1 => Some(2.0 * k + 1.0),
            OperatorKind::L2 => Some(1.0),
            OperatorKind::MinusChannel => {
                let h = self.hessian();
                Some(h[0][0] + h[1][1] - (2.0 * k + 1.0))
            }
            OperatorKind::FullBlock => None,
        }
    }
}

/// `Q_ω^{2k}` on the grid, after checking the tail.
fn potential(spec: &OperatorSpec, grid: &Grid) -> Result<Vec<f64>> {
    if !(spec.omega.is_finite() && spec.omega > 0.0) {
        return Err(Error::InvalidParams(format!("omega must be positive, got {}", spec.omega)));
    }
    let k = spec.params.k;
    let tail = scalar_q(spec.omega, k, 0.5 * grid.length()).powi(2 * k as i32);
    if tail >= TAIL_THRESHOLD {
        return Err(Error::DomainTruncation { tail, threshold: TAIL_THRESHOLD });
    }
    Ok(grid.x().iter().map(|&x| scalar_q(spec.omega, k, x).powi(2 * k as i32)).collect())
}

/// First column of the circulant matrix of `−∂²`.
fn neg_laplacian_column(grid: &Grid) -> Vec<f64> {
    let n = grid.n();
    let mut delta = vec![0.0; n];
    delta[0] = 1.0;
    grid.derivative(&delta, 2).into_iter().map(|c| -c).collect()
}

fn scalar_operator(grid: &Grid, omega: f64, diagonal: impl Fn(usize) -> f64) -> Mat<f64> {
    let n = grid.n();
    let col = neg_laplacian_column(grid);
    Mat::from_fn(n, n, |i, j| {
        let base = col[(i + n - j) % n];
        if i == j {
            base + omega + diagonal(i)
        } else {
            base
        }
    })
}

fn block_operator(grid: &Grid, omega: f64, pot: &[f64], h: [[f64; 2]; 2]) -> Mat<f64> {
    let n = grid.n();
    let col = neg_laplacian_column(grid);
    Mat::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, ii) = (i / n, i % n);
        let (bj, jj) = (j / n, j % n);
        let mut value = if bi == bj { col[(ii + n - jj) % n] } else { 0.0 };
        if ii == jj {
            if bi == bj {
                value += omega;
            }
            value -= h[bi][bj] * pot[ii];
        }
        value
    })
}

fn symmetrize(mut m: Mat<f64>) -> Result<Mat<f64>> {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..n {
        for i in 0..j {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            worst = worst.max((a - b).abs());
            scale = scale.max(a.abs());
            let mean = 0.5 * (a + b);
            m[(i, j)] = mean;
            m[(j, i)] = mean;
        }
        scale = scale.max(m[(j, j)].abs());
    }
    if worst > SYMMETRY_TOL * scale.max(1.0) {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(m)
}

/// Dense matrix of the operator on `grid`.
pub fn assemble(spec: &OperatorSpec, grid: &Grid) -> Result<Mat<f64>> {
    let pot = potential(spec, grid)?;
    let m = match spec.coefficient() {
        Some(c) => scalar_operator(grid, spec.omega, |i| -c * pot[i]),
        None => block_operator(grid, spec.omega, &pot, spec.hessian()),
    };
    symmetrize(m)
}

/// The full block conjugated by the rotation to `(e₁, e₂)` coordinates.
pub fn assemble_rotated(spec: &OperatorSpec, grid: &Grid) -> Result<Mat<f64>> {
    let pot = potential(spec, grid)?;
    let h = spec.hessian();
    let (x0, y0) = (spec.direction.x0, spec.direction.y0);
    let r = [[x0, -y0], [y0, x0]];
    let mut rot = [[0.0; 2]; 2];
    for (i, row) in rot.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            for p in 0..2 {
                for q in 0..2 {
                    *entry += r[p][i] * h[p][q] * r[q][j];
                }
            }
        }
    }
    symmetrize(block_operator(grid, spec.omega, &pot, rot))
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// Columns normalized so that `Σ w²·dx = 1`.
    pub vectors: Vec<Vec<f64>>,
}

fn check_symmetric(matrix: &Mat<f64>) -> Result<()> {
    if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
        return Err(Error::InvalidOptions("eigensolve needs a nonempty square matrix".into()));
    }
    let n = matrix.nrows();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((matrix[(i, j)] - matrix[(j, i)]).abs());
            scale = scale.max(matrix[(i, j)].abs());
        }
    }
    if worst > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(())
}

/// Lowest `count` eigenpairs, ascending, with first significant component positive.
pub fn lowest_eigs(matrix: &Mat<f64>, count: usize, dx: f64) -> Result<EigenPairs> {
    check_symmetric(matrix)?;
    let evd = matrix
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let n = matrix.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for &j in order.iter().take(count) {
        let lambda = s[j];
        if !lambda.is_finite() {
            return Err(Error::Eigensolver(format!("non-finite eigenvalue {lambda}")));
        }
        let mut w: Vec<f64> = (0..n).map(|i| u[(i, j)]).collect();
        let norm = (w.iter().map(|x| x * x).sum::<f64>() * dx).sqrt();
        let peak = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let sign = w.iter().find(|x| x.abs() > 1e-8 * peak).map_or(1.0, |x| x.signum());
        for x in &mut w {
            *x *= sign / norm;
        }
        values.push(lambda);
        vectors.push(w);
    }
    Ok(EigenPairs { values, vectors })
}

/// All eigenvalues, ascending.
pub fn all_eigenvalues(matrix: &Mat<f64>) -> Result<Vec<f64>> {
    check_symmetric(matrix)?;
    let mut values = matrix
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn mat_vec(matrix: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..matrix.nrows())
        .map(|i| (0..matrix.ncols()).map(|j| matrix[(i, j)] * x[j]).sum())
        .collect()
}

fn l2(x: &[f64], dx: f64) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() * dx).sqrt()
}

/// Counts relative to the gap floor: negative, near-zero, and discrete positive below `ω − floor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpectrumCounts {
    pub n_negative: usize,
    pub n_zero: usize,
    pub n_discrete_positive: usize,
}

fn count(values: &[f64], omega: f64, floor: f64) -> SpectrumCounts {
    SpectrumCounts {
        n_negative: values.iter().filter(|&&v| v < -floor).count(),
        n_zero: values.iter().filter(|&&v| v.abs() <= floor).count(),
        n_discrete_positive: values.iter().filter(|&&v| v > floor && v < omega - floor).count(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSpectrum {
    pub channel: OperatorKind,
    pub coefficient: f64,
    pub eigenvalues: Vec<f64>,
    #[serde(flatten)]
    pub counts: SpectrumCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelResiduals {
    /// `‖L₁Q′‖/‖Q′‖`.
    pub l1_translation: f64,
    /// `‖L₂Q‖/‖Q‖`.
    pub l2_profile: f64,
    /// `‖ℒ(αQ′, βQ′)‖/‖(αQ′, βQ′)‖` for the full block.
    pub full_translation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullBlockSpectrum {
    pub eigenvalues: Vec<f64>,
    #[serde(flatten)]
    pub counts: SpectrumCounts,
    /// Smallest eigenvalue above the gap floor.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub omega: f64,
    pub k: u32,
    pub n: usize,
    pub length: f64,
    pub gap_floor: f64,
    pub direction: DirectionPoint,
    pub channels: Vec<ChannelSpectrum>,
    pub full_block: FullBlockSpectrum,
    pub kernel_residuals: KernelResiduals,
    /// Largest mismatch between the sorted full-block spectrum and the union of the channel spectra.
    pub decoupling_error: f64,
    /// One negative eigenvalue, a one-dimensional kernel spanned by translation, and a gap.
    pub spectral_ok: bool,
}

impl SpectralReport {
    pub fn channel(&self, kind: OperatorKind) -> Option<&ChannelSpectrum> {
        self.channels.iter().find(|c| c.channel == kind)
    }
}

/// Spectra of all channels and of the full block about the ground state along `direction`.
pub fn spectral_report(
    params: &ModelParams,
    omega: f64,
    direction: &DirectionPoint,
    grid: &Arc<Grid>,
    gap_floor_rel: f64,
) -> Result<SpectralReport> {
    if params.mu != Mu::Focusing {
        return Err(Error::InvalidParams("linearization requires mu = +1".into()));
    }
    if !(gap_floor_rel > 0.0 && gap_floor_rel < 1.0) {
        return Err(Error::InvalidOptions(format!("gap floor must lie in (0, 1), got {gap_floor_rel}")));
    }
    let floor = gap_floor_rel * omega;
    let dx = grid.dx();
    let spec = |kind| OperatorSpec { kind, omega, params: *params, direction: *direction };
    let q: Vec<f64> = grid.x().iter().map(|&x| scalar_q(omega, params.k, x)).collect();
    let dq = grid.derivative(&q, 1);

    let mut channels = Vec::new();
    let mut union = Vec::new();
    let mut residuals = KernelResiduals { l1_translation: 0.0, l2_profile: 0.0, full_translation: 0.0 };
    for kind in [OperatorKind::L1, OperatorKind::L2, OperatorKind::MinusChannel] {
        let s = spec(kind);
        let m = assemble(&s, grid)?;
        match kind {
            OperatorKind::L1 => residuals.l1_translation = l2(&mat_vec(&m, &dq), dx) / l2(&dq, dx),
            OperatorKind::L2 => residuals.l2_profile = l2(&mat_vec(&m, &q), dx) / l2(&q, dx),
            _ => {}
        }
        let values = all_eigenvalues(&m)?;
        if kind != OperatorKind::L2 {
            union.extend_from_slice(&values);
        }
        channels.push(ChannelSpectrum {
            channel: kind,
            coefficient: s.coefficient().unwrap_or(f64::NAN),
            counts: count(&values, omega, floor),
            eigenvalues: values[..REPORTED_EIGENVALUES.min(values.len())].to_vec(),
        });
    }

    let block = assemble(&spec(OperatorKind::FullBlock), grid)?;
    let f = params.big_f(direction.x0, direction.y0);
    let scale = f.powf(-1.0 / (2.0 * params.kf()));
    let mut mode: Vec<f64> = dq.iter().map(|v| scale * direction.x0 * v).collect();
    mode.extend(dq.iter().map(|v| scale * direction.y0 * v));
    residuals.full_translation = l2(&mat_vec(&block, &mode), dx) / l2(&mode, dx);
    let full = all_eigenvalues(&block)?;
    union.sort_by(f64::total_cmp);
    let decoupling_error = full
        .iter()
        .zip(&union)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let counts = count(&full, omega, floor);
    let gap = full.iter().copied().find(|&v| v > floor).unwrap_or(f64::INFINITY);
    let spectral_ok = counts.n_negative == 1 && counts.n_zero == 1 && residuals.full_translation < 1e-6;
    Ok(SpectralReport {
        omega,
        k: params.k,
        n: grid.n(),
        length: grid.length(),
        gap_floor: floor,
        direction: *direction,
        channels,
        full_block: FullBlockSpectrum {
            eigenvalues: full[..(2 * REPORTED_EIGENVALUES).min(full.len())].to_vec(),
            counts,
            gap,
        },
        kernel_residuals: residuals,
        decoupling_error,
        spectral_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityVerdict {
    pub spectral_ok: bool,
    pub lambda_dd: f64,
    pub unstable: bool,
    pub lambda: LambdaSecond,
    pub spectrum: SpectralReport,
}

/// Default relative spectral-gap floor.
pub const GAP_FLOOR: f64 = 1e-3;

/// Spectral hypotheses plus the sign of `Λ''(ω)`.
pub fn instability_criterion(params: &ModelParams, omega: f64, grid: Arc<Grid>) -> Result<InstabilityVerdict> {
    instability_criterion_with_floor(params, omega, grid, GAP_FLOOR)
}

/// [`instability_criterion`] with an explicit relative gap floor.
pub fn instability_criterion_with_floor(
    params: &ModelParams,
    omega: f64,
    grid: Arc<Grid>,
    gap_floor_rel: f64,
) -> Result<InstabilityVerdict> {
    if params.mu != Mu::Focusing {
        return Err(Error::InvalidParams("solitary waves require mu = +1".into()));
    }
    if params.k < 2 {
        return Err(Error::InvalidParams("the criterion needs k >= 2".into()));
    }
    let set = maximize_f(params, 1024)?;
    let direction = set.points[0];
    let gs1 = build_ground_state(params, 1.0, grid.clone(), &direction)?;
    let lambda = lambda_second_derivative(params, omega, &gs1)?;
    if params.k == 2 {
        return Err(Error::Inconclusive { lambda_dd: lambda.closed_form });
    }
    let spectrum = spectral_report(params, omega, &direction, &grid, gap_floor_rel)?;
    let lambda_dd = lambda.closed_form;
    Ok(InstabilityVerdict {
        spectral_ok: spectrum.spectral_ok,
        lambda_dd,
        unstable: spectrum.spectral_ok && lambda_dd < 0.0,
        lambda,
        spectrum,
    })
}
