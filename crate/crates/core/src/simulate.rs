//! Gaussian ARH(1) sample paths in coefficient space.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ArhError, Result};
use crate::grid::{BasisSystem, Curve};
use crate::scenario::{Regime, ScenarioOperators};

/// Name of the generator recorded in run metadata.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9, seed_from_u64)";

/// `n × M` matrix of coefficients `X_{i,j} = ⟨X_i, φ_j⟩`, one row per time.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeries {
    data: DMatrix<f64>,
    seed: Option<u64>,
}

impl CoeffSeries {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ArhError::InvalidParameter("series contains non-finite values".into()));
        }
        Ok(Self { data, seed: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(ArhError::InvalidParameter("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), m, &flat))
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn m(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.data.row(i).transpose()
    }

    pub fn last(&self) -> DVector<f64> {
        self.row(self.n() - 1)
    }

    /// The first `len` observations.
    pub fn head(&self, len: usize) -> CoeffSeries {
        CoeffSeries { data: self.data.rows(0, len).into_owned(), seed: self.seed }
    }
}

/// Simulate `n` steps of `X_i = ρ X_{i−1} + ε_i`, `ε_i = L z_i`.
///
/// The diagonal regime starts from the exact stationary law `N(0, C_j)`;
/// the other regimes start from zero and discard `spec.burn_in` steps.
pub fn simulate(ops: &ScenarioOperators, n: usize, seed: u64) -> Result<CoeffSeries> {
    if n < 2 {
        return Err(ArhError::InvalidN(n));
    }
    let m = ops.m();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut draw = |buf: &mut DVector<f64>| {
        for v in buf.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
    };
    let mut z = DVector::zeros(m);
    let mut rows = Vec::with_capacity(n * m);

    match ops.spec.regime {
        Regime::Diagonal => {
            let rho = ops.rho_diag();
            let sd: Vec<f64> = (0..m).map(|j| ops.noise_chol[(j, j)]).collect();
            draw(&mut z);
            let mut x: Vec<f64> = (0..m).map(|j| ops.c_eigs[j].sqrt() * z[j]).collect();
            rows.extend_from_slice(&x);
            for _ in 1..n {
                draw(&mut z);
                for j in 0..m {
                    x[j] = rho[j] * x[j] + sd[j] * z[j];
                }
                rows.extend_from_slice(&x);
            }
        }
        Regime::PseudoDiagonal | Regime::NonDiagonal => {
            let mut x = DVector::zeros(m);
            let mut next = DVector::zeros(m);
            let mut step = |x: &mut DVector<f64>, next: &mut DVector<f64>, z: &mut DVector<f64>| {
                draw(z);
                next.gemv(1.0, &ops.rho, x, 0.0);
                next.gemv(1.0, &ops.noise_chol, z, 1.0);
                std::mem::swap(x, next);
            };
            for _ in 0..ops.spec.burn_in {
                step(&mut x, &mut next, &mut z);
            }
            rows.extend(x.iter());
            for _ in 1..n {
                step(&mut x, &mut next, &mut z);
                rows.extend(x.iter());
            }
        }
    }
    Ok(CoeffSeries { data: DMatrix::from_row_slice(n, m, &rows), seed: Some(seed) })
}

/// Curve `i` is `Σ_j X_{i,j} φ_j` on the basis grid.
pub fn curves_of(series: &CoeffSeries, basis: &BasisSystem) -> Result<Vec<Curve>> {
    if basis.m() < series.m() {
        return Err(ArhError::DimensionMismatch { expected: series.m(), got: basis.m() });
    }
    let values = basis.reconstruct_rows(series.data())?;
    let p = basis.grid().len();
    (0..series.n())
        .map(|i| Curve::new(basis.grid().clone(), (0..p).map(|c| values[(i, c)]).collect()))
        .collect()
}
