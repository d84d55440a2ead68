//! Discretization of `(a, b)`, trapezoidal quadrature and the sine eigenbasis
//! of the scenario covariance operator.
//!
//! Estimation runs in coefficient space. Curves only appear when a metric or
//! a smoothing-based predictor needs function values, and then they live on
//! a quadrature [`Grid`] fine enough to resolve every basis function.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{ArhError, Result};

/// Default tolerance on the Gram defect of a [`BasisSystem`].
pub const DEFAULT_GRAM_TOLERANCE: f64 = 1e-3;

/// Default step of the quadrature grid used for curve-level numerics.
pub const DEFAULT_QUADRATURE_STEP: f64 = 0.01;

/// Step of the presentation grid used for figures.
pub const OUTPUT_GRID_STEP: f64 = 0.06;

/// Ordered points of `[a, b]` with trapezoidal weights.
///
/// Points advance by `step` from `a`; `b` is always the last point, so the
/// final subinterval may be shorter than `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    step: f64,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(a: f64, b: f64, step: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && step.is_finite()) || a >= b || step <= 0.0 || step >= b - a {
            return Err(ArhError::InvalidInterval { a, b, step });
        }
        let span = b - a;
        // Full steps that stay inside [a, b], robust to 4.0 / 0.01 style round-off.
        let full = ((span / step) + 1e-9).floor() as usize;
        let mut points: Vec<f64> = (0..=full).map(|k| a + k as f64 * step).collect();
        let last = *points.last().expect("at least one point");
        if b - last > 1e-9 * step {
            points.push(b);
        } else {
            *points.last_mut().unwrap() = b;
        }
        let weights = trapezoid_weights(&points);
        Ok(Self { a, b, step, points, weights })
    }

    /// `count` equispaced points including both endpoints.
    pub fn with_count(a: f64, b: f64, count: usize) -> Result<Self> {
        if count < 2 || !(a < b) {
            return Err(ArhError::InvalidInterval { a, b, step: f64::NAN });
        }
        let step = (b - a) / (count - 1) as f64;
        let mut points: Vec<f64> = (0..count).map(|k| a + k as f64 * step).collect();
        points[count - 1] = b;
        let weights = trapezoid_weights(&points);
        Ok(Self { a, b, step, points, weights })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn span(&self) -> f64 {
        self.b - self.a
    }

    /// Weighted sum `Σ w_p f_p g_p` without grid checks.
    pub fn quad_dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    /// Piecewise-linear interpolation of `values` (given on this grid) at `t`.
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        let pts = &self.points;
        if t <= pts[0] {
            return values[0];
        }
        let last = pts.len() - 1;
        if t >= pts[last] {
            return values[last];
        }
        let hi = pts.partition_point(|&p| p < t);
        let lo = hi - 1;
        let frac = (t - pts[lo]) / (pts[hi] - pts[lo]);
        values[lo] + frac * (values[hi] - values[lo])
    }
}

fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let mut weights = vec![0.0; points.len()];
    for (p, pair) in points.windows(2).enumerate() {
        let h = pair[1] - pair[0];
        weights[p] += 0.5 * h;
        weights[p + 1] += 0.5 * h;
    }
    weights
}

fn same_grid(x: &Arc<Grid>, y: &Arc<Grid>) -> bool {
    Arc::ptr_eq(x, y) || **x == **y
}

/// A function of `(a, b)` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(ArhError::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn shares_grid(&self, other: &Curve) -> bool {
        same_grid(&self.grid, &other.grid)
    }

    /// L² norm under the grid quadrature.
    pub fn norm(&self) -> f64 {
        self.grid.quad_dot(&self.values, &self.values).max(0.0).sqrt()
    }

    /// L² distance to `other` under the grid quadrature.
    pub fn distance(&self, other: &Curve) -> Result<f64> {
        if !self.shares_grid(other) {
            return Err(ArhError::GridMismatch);
        }
        let diff: Vec<f64> = self.values.iter().zip(&other.values).map(|(x, y)| x - y).collect();
        Ok(self.grid.quad_dot(&diff, &diff).max(0.0).sqrt())
    }
}

/// `⟨f, g⟩_H` realized by the trapezoidal rule.
pub fn inner_product(f: &Curve, g: &Curve) -> Result<f64> {
    if !f.shares_grid(g) {
        return Err(ArhError::GridMismatch);
    }
    Ok(f.grid.quad_dot(&f.values, &g.values))
}

/// `φ_1, …, φ_M` evaluated on a grid, plus the measured deviation of their
/// quadrature Gram matrix from the identity.
#[derive(Debug, Clone)]
pub struct BasisSystem {
    grid: Arc<Grid>,
    /// Row `j` holds `φ_{j+1}` on the grid.
    values: DMatrix<f64>,
    gram_defect: f64,
}

impl BasisSystem {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn gram_defect(&self) -> f64 {
        self.gram_defect
    }

    /// `φ_{j+1}` as a curve.
    pub fn function(&self, j: usize) -> Curve {
        let values = self.values.row(j).iter().copied().collect();
        Curve { grid: self.grid.clone(), values }
    }

    /// Curves of every row of an `n × m'` coefficient matrix, `m' ≤ M`,
    /// returned as an `n × P` value matrix.
    pub fn reconstruct_rows(&self, coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let m = coeffs.ncols();
        if m > self.m() {
            return Err(ArhError::DimensionMismatch { expected: self.m(), got: m });
        }
        Ok(coeffs * self.values.rows(0, m))
    }

    /// Coefficients of every row of an `n × P` value matrix.
    pub fn project_rows(&self, values: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if values.ncols() != self.grid.len() {
            return Err(ArhError::DimensionMismatch { expected: self.grid.len(), got: values.ncols() });
        }
        let weighted = DMatrix::from_fn(self.m(), self.grid.len(), |j, p| {
            self.values[(j, p)] * self.grid.weights()[p]
        });
        Ok(values * weighted.transpose())
    }
}

/// The sine basis `φ_j(t) = √(2/(b−a)) sin(π j (t − a)/(b−a))` with the
/// default Gram tolerance.
pub fn sine_basis(grid: &Arc<Grid>, m: usize) -> Result<BasisSystem> {
    sine_basis_with_tolerance(grid, m, DEFAULT_GRAM_TOLERANCE)
}

pub fn sine_basis_with_tolerance(grid: &Arc<Grid>, m: usize, tolerance: f64) -> Result<BasisSystem> {
    if m == 0 {
        return Err(ArhError::InvalidParameter("basis size must be at least 1".into()));
    }
    let span = grid.span();
    let scale = (2.0 / span).sqrt();
    let values = DMatrix::from_fn(m, grid.len(), |j, p| {
        let t = grid.points()[p] - grid.a();
        scale * (PI * (j + 1) as f64 * t / span).sin()
    });
    let mut gram_defect: f64 = 0.0;
    for j in 0..m {
        for k in j..m {
            let rj: Vec<f64> = values.row(j).iter().copied().collect();
            let rk: Vec<f64> = values.row(k).iter().copied().collect();
            let g = grid.quad_dot(&rj, &rk);
            let target = if j == k { 1.0 } else { 0.0 };
            gram_defect = gram_defect.max((g - target).abs());
        }
    }
    if gram_defect > tolerance {
        return Err(ArhError::Aliasing { m, defect: gram_defect, tolerance });
    }
    Ok(BasisSystem { grid: grid.clone(), values, gram_defect })
}

/// `c_j = ⟨curve, φ_j⟩_H` for `j = 1..M`.
pub fn project(curve: &Curve, basis: &BasisSystem) -> Result<DVector<f64>> {
    if !same_grid(&curve.grid, &basis.grid) {
        return Err(ArhError::GridMismatch);
    }
    let w = basis.grid.weights();
    Ok(DVector::from_fn(basis.m(), |j, _| {
        basis
            .values
            .row(j)
            .iter()
            .zip(w.iter().zip(&curve.values))
            .map(|(phi, (wp, x))| phi * wp * x)
            .sum()
    }))
}

/// `Σ_j c_j φ_j` on the basis grid.
pub fn reconstruct(coeffs: &[f64], basis: &BasisSystem) -> Result<Curve> {
    if coeffs.len() > basis.m() {
        return Err(ArhError::DimensionMismatch { expected: basis.m(), got: coeffs.len() });
    }
    let mut values = vec![0.0; basis.grid.len()];
    for (j, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (v, phi) in values.iter_mut().zip(basis.values.row(j).iter()) {
            *v += c * phi;
        }
    }
    Ok(Curve { grid: basis.grid.clone(), values })
}
