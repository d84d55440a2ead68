//! Second-difference penalized smoothing of curves, the penalized functional
//! PCA predictor and the Nadaraya–Watson kernel predictor.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::empirical::eigendecompose_symmetric;
use crate::error::{ArhError, Result};
use crate::grid::{Curve, Grid};

pub const DEFAULT_ELL: f64 = 1e-3;
pub const DEFAULT_Q: usize = 10;

/// Divided second differences at the interior points, `(P−2) × P`.
pub fn second_difference(grid: &Grid) -> DMatrix<f64> {
    let t = grid.points();
    let p = t.len();
    let mut d = DMatrix::zeros(p.saturating_sub(2), p);
    for i in 1..p.saturating_sub(1) {
        let hl = t[i] - t[i - 1];
        let hr = t[i + 1] - t[i];
        let s = 2.0 / (hl + hr);
        d[(i - 1, i - 1)] = s / hl;
        d[(i - 1, i)] = -s * (1.0 / hl + 1.0 / hr);
        d[(i - 1, i + 1)] = s / hr;
    }
    d
}

/// `K = D₂ᵀ W D₂` with `W` the interior quadrature weights.
pub fn penalty_matrix(grid: &Grid) -> DMatrix<f64> {
    let d = second_difference(grid);
    let mut wd = d.clone();
    for (r, mut row) in wd.row_iter_mut().enumerate() {
        row *= grid.weights()[r + 1];
    }
    let k = d.tr_mul(&wd);
    0.5 * (&k + k.transpose())
}

/// `x̂ᵀ K x̂`, the discrete roughness `∫ (x'')²`.
pub fn roughness(grid: &Grid, values: &[f64]) -> f64 {
    let d = second_difference(grid);
    let x = DVector::from_column_slice(values);
    let dx = d * x;
    dx.iter().enumerate().map(|(r, v)| grid.weights()[r + 1] * v * v).sum()
}

/// The hat operator `A(ℓ) = (I + ℓK)^{−1}` and its square root.
///
/// Built from an exact orthonormal basis of the affine null space of `K` and
/// the spectrum of `K` on its complement, so large `ℓ` stays well conditioned.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedSmoother {
    grid: Arc<Grid>,
    ell: f64,
    hat: DMatrix<f64>,
    hat_sqrt: DMatrix<f64>,
}

impl PenalizedSmoother {
    pub fn new(grid: &Arc<Grid>, ell: f64) -> Result<Self> {
        if !(ell >= 0.0 && ell.is_finite()) {
            return Err(ArhError::InvalidParameter(format!("penalty ell = {ell} must be finite and nonnegative")));
        }
        let p = grid.len();
        if p < 3 || ell == 0.0 {
            let id = DMatrix::identity(p, p);
            return Ok(Self { grid: grid.clone(), ell, hat: id.clone(), hat_sqrt: id });
        }
        let affine = DMatrix::from_fn(p, 2, |i, j| if j == 0 { 1.0 } else { grid.points()[i] - grid.a() });
        let qr = affine.qr();
        let mut q_full = DMatrix::identity(p, p);
        qr.q_tr_mul(&mut q_full);
        let q_full = q_full.transpose();
        let null = q_full.columns(0, 2).into_owned();
        let comp = q_full.columns(2, p - 2).into_owned();
        let k = penalty_matrix(grid);
        let k_comp = comp.tr_mul(&(&k * &comp));
        let k_comp = 0.5 * (&k_comp + k_comp.transpose());
        let pair = eigendecompose_symmetric(&k_comp)?;
        let u = &comp * &pair.eigenvectors;
        let build = |f: &dyn Fn(f64) -> f64| {
            let mut scaled = u.clone();
            for (j, mut col) in scaled.column_iter_mut().enumerate() {
                col *= f(pair.eigenvalues[j]);
            }
            let m = &null * null.transpose() + scaled * u.transpose();
            0.5 * (&m + m.transpose())
        };
        let hat = build(&|mu| 1.0 / (1.0 + ell * mu));
        let hat_sqrt = build(&|mu| (1.0 + ell * mu).powf(-0.5));
        Ok(Self { grid: grid.clone(), ell, hat, hat_sqrt })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn hat(&self) -> &DMatrix<f64> {
        &self.hat
    }

    pub fn hat_sqrt(&self) -> &DMatrix<f64> {
        &self.hat_sqrt
    }

    pub fn smooth(&self, curve: &Curve) -> Result<Curve> {
        if curve.grid().as_ref() != self.grid.as_ref() {
            return Err(ArhError::GridMismatch);
        }
        let x = DVector::from_column_slice(curve.values());
        Curve::new(curve.grid().clone(), (&self.hat * x).as_slice().to_vec())
    }

    /// Rows of `values` smoothed: `X A(ℓ)`.
    pub fn smooth_rows(&self, values: &DMatrix<f64>) -> DMatrix<f64> {
        values * &self.hat
    }
}

/// Smooth every curve with `A(ℓ)`; all curves must share one grid.
pub fn penalized_smoother(curves: &[Curve], ell: f64) -> Result<(Vec<Curve>, PenalizedSmoother)> {
    let first = curves.first().ok_or(ArhError::InvalidN(0))?;
    let smoother = PenalizedSmoother::new(first.grid(), ell)?;
    let out = curves.iter().map(|c| smoother.smooth(c)).collect::<Result<_>>()?;
    Ok((out, smoother))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmootherConfig {
    pub ell: f64,
    pub q: usize,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self { ell: DEFAULT_ELL, q: DEFAULT_Q }
    }
}

pub(crate) fn value_matrix(curves: &[Curve]) -> Result<DMatrix<f64>> {
    let first = curves.first().ok_or(ArhError::InvalidN(0))?;
    if curves.iter().any(|c| !c.shares_grid(first)) {
        return Err(ArhError::GridMismatch);
    }
    Ok(DMatrix::from_fn(curves.len(), first.values().len(), |i, j| curves[i].values()[j]))
}

/// Penalized-FPCA predictor on the `q`-dimensional space `H_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct BessePredictor {
    pub grid: Arc<Grid>,
    /// `L²`-orthonormal basis of `H_q`, one function per row.
    pub basis: DMatrix<f64>,
    /// `s_out = operator · s_in` on `H_q` scores.
    pub operator: DMatrix<f64>,
    pub smoother: PenalizedSmoother,
}

fn weighted_scores(values: &DMatrix<f64>, basis: &DMatrix<f64>, grid: &Grid) -> DMatrix<f64> {
    let wb = DMatrix::from_fn(basis.nrows(), basis.ncols(), |k, p| basis[(k, p)] * grid.weights()[p]);
    values * wb.transpose()
}

/// Orthonormalize the rows of `raw` under the quadrature inner product,
/// dropping directions whose Gram eigenvalue falls below `1e-12·trace`.
fn l2_orthonormalize(raw: &DMatrix<f64>, grid: &Grid) -> Result<DMatrix<f64>> {
    let gram = weighted_scores(raw, raw, grid);
    let gram = 0.5 * (&gram + gram.transpose());
    let pair = eigendecompose_symmetric(&gram)?;
    let cutoff = 1e-12 * gram.trace();
    let keep = pair.eigenvalues.iter().take_while(|&&e| e > cutoff).count();
    if keep == 0 {
        return Err(ArhError::RankDeficiency("penalized basis is empty".into()));
    }
    let mut out = DMatrix::zeros(keep, raw.ncols());
    for j in 0..keep {
        let coef = pair.eigenvectors.column(j) / pair.eigenvalues[j].sqrt();
        out.row_mut(j).copy_from(&(coef.transpose() * raw));
    }
    Ok(out)
}

/// Symmetric pseudo-inverse dropping eigenvalues below `1e-12·trace`.
fn pseudo_inverse(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let pair = eigendecompose_symmetric(c)?;
    let cutoff = 1e-12 * c.trace();
    if !(c.trace() > 0.0) {
        return Err(ArhError::RankDeficiency("projected covariance vanishes".into()));
    }
    let m = c.nrows();
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        let e = pair.eigenvalues[j];
        if e > cutoff {
            let v = pair.eigenvectors.column(j);
            out += (v * v.transpose()) / e;
        }
    }
    Ok(out)
}

pub fn besse_penalized_predictor(curves: &[Curve], cfg: &SmootherConfig) -> Result<BessePredictor> {
    let first = curves.first().ok_or(ArhError::InvalidN(0))?;
    let smoother = PenalizedSmoother::new(first.grid(), cfg.ell)?;
    besse_with_smoother(curves, cfg.q, smoother)
}

/// [`besse_penalized_predictor`] reusing a prebuilt smoother.
pub fn besse_with_smoother(curves: &[Curve], q: usize, smoother: PenalizedSmoother) -> Result<BessePredictor> {
    let n = curves.len();
    if n < 3 {
        return Err(ArhError::InvalidN(n));
    }
    if q == 0 || q > n {
        return Err(ArhError::InvalidParameter(format!("q = {q} outside 1..={n}")));
    }
    let x = value_matrix(curves)?;
    let grid = smoother.grid().clone();
    if curves[0].grid().as_ref() != grid.as_ref() {
        return Err(ArhError::GridMismatch);
    }
    if q > grid.len() {
        return Err(ArhError::InvalidParameter(format!("q = {q} exceeds {} grid points", grid.len())));
    }
    let xa = &x * smoother.hat_sqrt();
    let mut s = xa.tr_mul(&xa) / n as f64;
    s = 0.5 * (&s + s.transpose());
    let pair = eigendecompose_symmetric(&s)?;
    // Rows A v_j, j ≤ q.
    let raw = (smoother.hat() * pair.eigenvectors.columns(0, q)).transpose();
    let basis = l2_orthonormalize(&raw, &grid)?;

    let scores = weighted_scores(&smoother.smooth_rows(&x), &basis, &grid);
    let c = scores.tr_mul(&scores) / n as f64;
    let c = 0.5 * (&c + c.transpose());
    let d = scores.rows(0, n - 1).tr_mul(&scores.rows(1, n - 1)) / (n - 1) as f64;
    let operator = d.transpose() * pseudo_inverse(&c)?;
    Ok(BessePredictor { grid, basis, operator, smoother })
}

impl BessePredictor {
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Scores of the smoothed input on `H_q`.
    pub fn scores(&self, input: &Curve) -> Result<DVector<f64>> {
        let smoothed = self.smoother.smooth(input)?;
        let row = DMatrix::from_row_slice(1, smoothed.values().len(), smoothed.values());
        Ok(weighted_scores(&row, &self.basis, &self.grid).row(0).transpose())
    }

    pub fn predict(&self, input: &Curve) -> Result<Curve> {
        let out = &self.operator * self.scores(input)?;
        Curve::new(self.grid.clone(), self.basis.tr_mul(&out).as_slice().to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub h: f64,
    #[serde(default = "default_ell")]
    pub smooth_penalty: f64,
}

fn default_ell() -> f64 {
    DEFAULT_ELL
}

impl KernelConfig {
    pub fn new(h: f64) -> Self {
        Self { h, smooth_penalty: DEFAULT_ELL }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelPrediction {
    pub curve: Curve,
    /// The weights degenerated and the successor of the nearest curve was used.
    pub nearest_fallback: bool,
}

/// Nadaraya–Watson prediction from already smoothed curves:
/// `Σ X̂_{i+1} K(‖X̂_i − x‖²/h) / Σ K(‖X̂_i − x‖²/h)` with `K(u) = exp(−u²/2)`.
pub fn kernel_from_smoothed(smoothed: &[Curve], h: f64, query: &Curve) -> Result<KernelPrediction> {
    let n = smoothed.len();
    if n < 2 {
        return Err(ArhError::InvalidN(n));
    }
    if !(h > 0.0) {
        return Err(ArhError::InvalidParameter(format!("bandwidth h = {h} must be positive")));
    }
    let u: Vec<f64> = smoothed[..n - 1]
        .iter()
        .map(|c| c.distance(query).map(|d| d * d / h))
        .collect::<Result<_>>()?;
    let nearest = (0..n - 1).fold(0, |best, i| if u[i] < u[best] { i } else { best });
    // Shifting the exponent by the smallest u² leaves the ratio unchanged.
    let shift = u[nearest] * u[nearest];
    let weights: Vec<f64> = u.iter().map(|v| (-(v * v - shift) / 2.0).exp()).collect();
    let total: f64 = weights.iter().sum();
    let grid = smoothed[0].grid().clone();
    if !(total.is_finite() && total > 0.0) {
        return Ok(KernelPrediction { curve: smoothed[nearest + 1].clone(), nearest_fallback: true });
    }
    let mut values = vec![0.0; grid.len()];
    for (w, succ) in weights.iter().zip(&smoothed[1..]) {
        if *w == 0.0 {
            continue;
        }
        for (v, s) in values.iter_mut().zip(succ.values()) {
            *v += w * s;
        }
    }
    for v in &mut values {
        *v /= total;
    }
    Ok(KernelPrediction { curve: Curve::new(grid, values)?, nearest_fallback: false })
}

pub fn kernel_predictor(curves: &[Curve], cfg: &KernelConfig, query: &Curve) -> Result<KernelPrediction> {
    let (smoothed, _) = penalized_smoother(curves, cfg.smooth_penalty)?;
    kernel_from_smoothed(&smoothed, cfg.h, query)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(step: f64) -> Arc<Grid> {
        Arc::new(Grid::new(0.0, 4.0, step).unwrap())
    }

    #[test]
    fn zero_penalty_is_identity() {
        let g = grid(0.06);
        let c = Curve::from_fn(g.clone(), |t| t.sin());
        let (out, sm) = penalized_smoother(&[c.clone()], 0.0).unwrap();
        assert_eq!(out[0], c);
        assert_eq!(sm.hat(), &DMatrix::identity(g.len(), g.len()));
    }

    #[test]
    fn affine_limit() {
        let g = grid(0.06);
        let c = Curve::from_fn(g.clone(), |t| (2.0 * t).sin() + 0.5 * t * t);
        let (out, _) = penalized_smoother(&[c.clone()], 1e12).unwrap();
        // Least-squares line through the samples.
        let t = g.points();
        let p = t.len() as f64;
        let (st, sy) = (t.iter().sum::<f64>(), c.values().iter().sum::<f64>());
        let stt: f64 = t.iter().map(|v| v * v).sum();
        let sty: f64 = t.iter().zip(c.values()).map(|(a, b)| a * b).sum();
        let slope = (p * sty - st * sy) / (p * stt - st * st);
        let icpt = (sy - slope * st) / p;
        for (ti, v) in t.iter().zip(out[0].values()) {
            assert!((v - (icpt + slope * ti)).abs() < 1e-6);
        }
    }

    #[test]
    fn hat_spectrum_in_unit_interval() {
        let g = grid(0.06);
        let sm = PenalizedSmoother::new(&g, 0.1).unwrap();
        let pair = eigendecompose_symmetric(sm.hat()).unwrap();
        assert!(pair.eigenvalues.iter().all(|&e| e > 0.0 && e <= 1.0 + 1e-12));
        let sq = sm.hat_sqrt() * sm.hat_sqrt();
        assert!((sq - sm.hat()).abs().max() < 1e-12);
    }

    #[test]
    fn smoothing_reduces_roughness() {
        let g = grid(0.06);
        let c = Curve::from_fn(g.clone(), |t| (7.0 * t).sin() + (t * 13.0).cos());
        for ell in [1e-6, 1e-3, 1.0] {
            let out = PenalizedSmoother::new(&g, ell).unwrap().smooth(&c).unwrap();
            assert!(roughness(&g, out.values()) <= roughness(&g, c.values()));
        }
    }

    #[test]
    fn kernel_limits() {
        let g = grid(0.5);
        let curves: Vec<Curve> = (0..5).map(|i| Curve::from_fn(g.clone(), move |t| (i as f64 + 1.0) * t)).collect();
        let query = curves[2].clone();
        let flat = kernel_from_smoothed(&curves, 1e12, &query).unwrap();
        for (p, v) in flat.curve.values().iter().enumerate() {
            let mean = curves[1..].iter().map(|c| c.values()[p]).sum::<f64>() / 4.0;
            assert!((v - mean).abs() < 1e-8);
        }
        let sharp = kernel_from_smoothed(&curves, 1e-9, &query).unwrap();
        assert_eq!(sharp.curve, curves[3]);
        assert!(!sharp.nearest_fallback);
    }

    #[test]
    fn kernel_identical_curves() {
        let g = grid(0.5);
        let c = Curve::from_fn(g.clone(), |t| t * t);
        let mut curves = vec![c.clone(); 4];
        curves.push(Curve::from_fn(g.clone(), |t| -t));
        let q = Curve::from_fn(g, |t| 3.0 - t);
        let out = kernel_from_smoothed(&curves, 0.7, &q).unwrap();
        for (p, v) in out.curve.values().iter().enumerate() {
            let mean = (3.0 * c.values()[p] + curves[4].values()[p]) / 4.0;
            assert!((v - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn besse_constant_curves() {
        let g = grid(0.25);
        let v = Curve::from_fn(g.clone(), |t| (t * 0.7).sin() + 0.2);
        let curves = vec![v.clone(); 6];
        let model = besse_penalized_predictor(&curves, &SmootherConfig { ell: 0.0, q: 1 }).unwrap();
        let out = model.predict(&v).unwrap();
        for (a, b) in out.values().iter().zip(v.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
