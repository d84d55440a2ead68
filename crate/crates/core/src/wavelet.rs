//! Periodized orthonormal discrete wavelet transforms, linear wavelet
//! shrinkage of curves and the wavelet-smoothed componentwise predictor.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::empirical::eigendecompose_symmetric;
use crate::error::{ArhError, Result};
use crate::grid::{Curve, Grid};
use crate::scenario::ScenarioOperators;
use crate::smoothing::value_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletFamily {
    Haar,
    /// Four-tap Daubechies filter (two vanishing moments).
    Daubechies4,
}

impl WaveletFamily {
    fn lowpass(self) -> Vec<f64> {
        match self {
            WaveletFamily::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            WaveletFamily::Daubechies4 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * std::f64::consts::SQRT_2;
                vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
            }
        }
    }

    fn filters(self) -> (Vec<f64>, Vec<f64>) {
        let h = self.lowpass();
        let len = h.len();
        let g = (0..len).map(|k| if k % 2 == 0 { h[len - 1 - k] } else { -h[len - 1 - k] }).collect();
        (h, g)
    }
}

fn dyadic_exponent(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(ArhError::NonDyadicLength(len));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Pyramid decomposition down to `2^j0` scaling coefficients.
///
/// Layout: `[scaling (2^j0) | detail level j0 | detail j0+1 | … | detail J−1]`,
/// where detail level `j` has `2^j` entries.
pub fn dwt_to_level(signal: &[f64], family: WaveletFamily, j0: usize) -> Result<Vec<f64>> {
    let levels = dyadic_exponent(signal.len())?;
    if j0 > levels {
        return Err(ArhError::InvalidParameter(format!("j0 = {j0} exceeds {levels} levels")));
    }
    let (h, g) = family.filters();
    let mut out = signal.to_vec();
    let mut len = signal.len();
    let mut scratch = vec![0.0; len];
    while len > 1 << j0 {
        let half = len / 2;
        for k in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for (m, (hm, gm)) in h.iter().zip(&g).enumerate() {
                let x = out[(2 * k + m) % len];
                a += hm * x;
                d += gm * x;
            }
            scratch[k] = a;
            scratch[half + k] = d;
        }
        out[..len].copy_from_slice(&scratch[..len]);
        len = half;
    }
    Ok(out)
}

/// Inverse of [`dwt_to_level`].
pub fn idwt_from_level(coeffs: &[f64], family: WaveletFamily, j0: usize) -> Result<Vec<f64>> {
    let levels = dyadic_exponent(coeffs.len())?;
    if j0 > levels {
        return Err(ArhError::InvalidParameter(format!("j0 = {j0} exceeds {levels} levels")));
    }
    let (h, g) = family.filters();
    let mut out = coeffs.to_vec();
    let mut len = 1 << j0;
    let mut scratch = vec![0.0; coeffs.len()];
    while len < coeffs.len() {
        let full = 2 * len;
        scratch[..full].fill(0.0);
        for k in 0..len {
            let (a, d) = (out[k], out[len + k]);
            for (m, (hm, gm)) in h.iter().zip(&g).enumerate() {
                scratch[(2 * k + m) % full] += hm * a + gm * d;
            }
        }
        out[..full].copy_from_slice(&scratch[..full]);
        len = full;
    }
    Ok(out)
}

pub fn dwt(signal: &[f64], family: WaveletFamily) -> Result<Vec<f64>> {
    dwt_to_level(signal, family, 0)
}

pub fn idwt(coeffs: &[f64], family: WaveletFamily) -> Result<Vec<f64>> {
    idwt_from_level(coeffs, family, 0)
}

pub const DEFAULT_J0: usize = 3;
pub const DEFAULT_LEVELS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletConfig {
    pub family: WaveletFamily,
    pub j0: usize,
    /// Finest level `J`; curves are resampled to `2^J` points.
    pub levels: usize,
    pub lambda: f64,
}

impl WaveletConfig {
    pub fn new(family: WaveletFamily, lambda: f64) -> Self {
        Self { family, j0: DEFAULT_J0, levels: DEFAULT_LEVELS, lambda }
    }

    pub fn check(&self) -> Result<()> {
        if self.j0 >= self.levels {
            return Err(ArhError::InvalidParameter(format!("need j0 < J, got j0 = {}, J = {}", self.j0, self.levels)));
        }
        if !(self.lambda >= 0.0) {
            return Err(ArhError::InvalidParameter(format!("lambda = {} must be nonnegative", self.lambda)));
        }
        Ok(())
    }

    pub fn dyadic_len(&self) -> usize {
        1 << self.levels
    }
}

/// `λ = (Σ σ_j²)(Σ C_j) / N`.
pub fn lambda_hat(noise_trace: f64, signal_trace: f64, n_points: usize) -> f64 {
    noise_trace * signal_trace / n_points as f64
}

pub fn lambda_from_scenario(ops: &ScenarioOperators, n_points: usize) -> f64 {
    lambda_hat(ops.noise_cov.diagonal().sum(), ops.c_eigs.sum(), n_points)
}

/// Plug-in version of [`lambda_from_scenario`] for data without a known
/// scenario: `Σ C_j ≈ mean ‖X_i‖²` and `Σ σ_j² ≈ mean ‖X_{i+1} − r X_i‖²`
/// with `r` the scalar lag-one regression coefficient.
pub fn lambda_from_curves(curves: &[Curve], n_points: usize) -> Result<f64> {
    if curves.len() < 2 {
        return Err(ArhError::InvalidN(curves.len()));
    }
    let grid = curves[0].grid().clone();
    if curves.iter().any(|c| !c.shares_grid(&curves[0])) {
        return Err(ArhError::GridMismatch);
    }
    let n = curves.len();
    let energy: f64 = curves.iter().map(|c| grid.quad_dot(c.values(), c.values())).sum();
    let cross: f64 = curves.windows(2).map(|w| grid.quad_dot(w[0].values(), w[1].values())).sum();
    let head_energy = energy - grid.quad_dot(curves[n - 1].values(), curves[n - 1].values());
    let r = if head_energy > 0.0 { cross / head_energy } else { 0.0 };
    let resid: f64 = curves
        .windows(2)
        .map(|w| {
            let e: Vec<f64> = w[1].values().iter().zip(w[0].values()).map(|(b, a)| b - r * a).collect();
            grid.quad_dot(&e, &e)
        })
        .sum();
    Ok(lambda_hat(resid / (n - 1) as f64, energy / n as f64, n_points))
}

fn resample(values: &[f64], from: &Grid, to: &Grid) -> Vec<f64> {
    to.points().iter().map(|&t| from.interpolate(values, t)).collect()
}

/// Shrink every detail coefficient by `1/(1+λ)` and keep the `2^j0` scaling
/// coefficients, on a signal of dyadic length.
pub fn shrink_signal(signal: &[f64], cfg: &WaveletConfig) -> Result<Vec<f64>> {
    let mut coeffs = dwt_to_level(signal, cfg.family, cfg.j0)?;
    let factor = 1.0 / (1.0 + cfg.lambda);
    for c in coeffs.iter_mut().skip(1 << cfg.j0) {
        *c *= factor;
    }
    idwt_from_level(&coeffs, cfg.family, cfg.j0)
}

/// Smooth a curve by linear wavelet shrinkage on `2^J` equispaced points.
///
/// The curve is resampled to the dyadic grid, shrunk, and only the change is
/// interpolated back, so `λ = 0` returns the input unchanged.
pub fn wavelet_smooth(curve: &Curve, cfg: &WaveletConfig) -> Result<Curve> {
    cfg.check()?;
    let grid = curve.grid();
    let dyadic = Grid::with_count(grid.a(), grid.b(), cfg.dyadic_len())?;
    let sampled = resample(curve.values(), grid, &dyadic);
    let shrunk = shrink_signal(&sampled, cfg)?;
    let change: Vec<f64> = shrunk.iter().zip(&sampled).map(|(s, x)| s - x).collect();
    let values = grid.points().iter().zip(curve.values()).map(|(&t, &x)| x + dyadic.interpolate(&change, t)).collect();
    Curve::new(grid.clone(), values)
}

/// Functional principal components of a set of curves under the quadrature
/// inner product: eigenvalues (descending) and `L²`-orthonormal eigenfunctions
/// as the rows of a `k × P` matrix.
pub(crate) fn functional_pca(values: &DMatrix<f64>, grid: &Grid, k: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = values.nrows();
    let sqrt_w = DVector::from_iterator(grid.len(), grid.weights().iter().map(|w| w.sqrt()));
    let mut scaled = values.clone();
    for mut row in scaled.row_iter_mut() {
        row.component_mul_assign(&sqrt_w.transpose());
    }
    let mut cov = scaled.tr_mul(&scaled) / n as f64;
    cov = 0.5 * (&cov + cov.transpose());
    let pair = eigendecompose_symmetric(&cov)?;
    let mut phi = DMatrix::zeros(k, grid.len());
    for j in 0..k {
        for p in 0..grid.len() {
            phi[(j, p)] = pair.eigenvectors[(p, j)] / sqrt_w[p];
        }
    }
    Ok((pair.eigenvalues.rows(0, k).into_owned(), phi))
}

/// Wavelet-smoothed componentwise predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPredictor {
    pub k_n: usize,
    pub grid: Arc<Grid>,
    pub eigenvalues: DVector<f64>,
    /// Rows are the eigenfunctions `φ̃_k` of the smoothed centered covariance.
    pub eigenfunctions: DMatrix<f64>,
    /// `coef_j = Σ_k operator[(j, k)] ⟨φ̃_k, x⟩`.
    pub operator: DMatrix<f64>,
}

pub fn as_predictor(curves: &[Curve], k_n: usize, cfg: &WaveletConfig) -> Result<WaveletPredictor> {
    let n = curves.len();
    if n < 3 {
        return Err(ArhError::InvalidN(n));
    }
    if k_n == 0 {
        return Err(ArhError::InvalidParameter("k_n must be at least 1".into()));
    }
    let grid = curves[0].grid().clone();
    let smoothed: Vec<Curve> = curves.iter().map(|c| wavelet_smooth(c, cfg)).collect::<Result<_>>()?;
    let mut y = value_matrix(&smoothed)?;
    let mean = y.row_mean();
    for mut row in y.row_iter_mut() {
        row -= &mean;
    }
    if k_n > grid.len() {
        return Err(ArhError::DimensionMismatch { expected: grid.len(), got: k_n });
    }
    let (eigenvalues, phi) = functional_pca(&y, &grid, k_n)?;
    let trace: f64 = {
        let w = grid.weights();
        y.row_iter().map(|r| r.iter().zip(w).map(|(v, w)| w * v * v).sum::<f64>()).sum::<f64>() / n as f64
    };
    if eigenvalues[k_n - 1] <= 1e-12 * trace {
        return Err(ArhError::RankDeficiency(format!(
            "smoothed covariance eigenvalue {} at k_n = {k_n}",
            eigenvalues[k_n - 1]
        )));
    }
    // scores[(i, k)] = ⟨Ỹ_i, φ̃_k⟩
    let weighted = DMatrix::from_fn(k_n, grid.len(), |k, p| phi[(k, p)] * grid.weights()[p]);
    let scores = &y * weighted.transpose();
    let mut operator = DMatrix::zeros(k_n, k_n);
    for j in 0..k_n {
        for k in 0..k_n {
            let mut s = 0.0;
            for i in 0..n - 1 {
                s += scores[(i, k)] * scores[(i + 1, j)];
            }
            operator[(j, k)] = s / ((n - 1) as f64 * eigenvalues[k]);
        }
    }
    Ok(WaveletPredictor { k_n, grid, eigenvalues, eigenfunctions: phi, operator })
}

impl WaveletPredictor {
    pub fn predict(&self, input: &Curve) -> Result<Curve> {
        if input.grid().as_ref() != self.grid.as_ref() {
            return Err(ArhError::GridMismatch);
        }
        let w = self.grid.weights();
        let proj = DVector::from_fn(self.k_n, |k, _| {
            self.eigenfunctions.row(k).iter().zip(input.values()).zip(w).map(|((f, x), w)| f * x * w).sum()
        });
        let coef = &self.operator * proj;
        let values = self.eigenfunctions.tr_mul(&coef);
        Curve::new(self.grid.clone(), values.as_slice().to_vec())
    }
}
