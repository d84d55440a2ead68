//! Componentwise estimators of the autocorrelation operator: the diagonal
//! estimator with known or empirical eigenvectors, Bosq's projection
//! estimator and Guillas' regularized variant.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::empirical::{eigendecompose, moments, project_onto, SpectralPair};
use crate::error::{ArhError, Result};
use crate::simulate::CoeffSeries;

pub const DEFAULT_E_PRIME: f64 = 1.7;
pub const DEFAULT_BETA_U: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationKind {
    /// `⌈ln n⌉`
    LogCeil,
    /// `⌈e' n^{1/(8δ1+2)}⌉`
    PowerRate,
    /// `⌈n^{1/α}⌉`
    RootAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationRule {
    pub kind: TruncationKind,
    #[serde(default = "default_e_prime")]
    pub e_prime: f64,
    #[serde(default)]
    pub alpha: f64,
    /// Added to the ceiling before clamping.
    #[serde(default)]
    pub offset: i64,
}

fn default_e_prime() -> f64 {
    DEFAULT_E_PRIME
}

impl TruncationRule {
    pub fn log_ceil() -> Self {
        Self { kind: TruncationKind::LogCeil, e_prime: DEFAULT_E_PRIME, alpha: 0.0, offset: 0 }
    }

    pub fn power_rate() -> Self {
        Self { kind: TruncationKind::PowerRate, ..Self::log_ceil() }
    }

    pub fn root_alpha(alpha: f64) -> Self {
        Self { kind: TruncationKind::RootAlpha, alpha, ..Self::log_ceil() }
    }

    pub fn with_offset(mut self, offset: i64) -> Self {
        self.offset = offset;
        self
    }

    pub fn label(&self) -> String {
        let base = match self.kind {
            TruncationKind::LogCeil => "ceil(ln n)".to_string(),
            TruncationKind::PowerRate => format!("ceil({} n^(1/(8 delta1 + 2)))", self.e_prime),
            TruncationKind::RootAlpha => format!("ceil(n^(1/{}))", self.alpha),
        };
        match self.offset {
            0 => base,
            o => format!("{base} {o:+}"),
        }
    }
}

/// Truncation level for sample size `n`, clamped to `[1, n − 1]`.
pub fn k_of(rule: &TruncationRule, n: usize, delta1: f64) -> usize {
    let nf = n as f64;
    let raw = match rule.kind {
        TruncationKind::LogCeil => nf.ln(),
        TruncationKind::PowerRate => rule.e_prime * nf.powf(1.0 / (8.0 * delta1 + 2.0)),
        TruncationKind::RootAlpha => nf.powf(1.0 / rule.alpha),
    };
    let k = raw.ceil() as i64 + rule.offset;
    k.clamp(1, (n as i64 - 1).max(1)) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagEstimate {
    pub k_n: usize,
    pub rho_hat: DVector<f64>,
    /// Empirical eigenvectors; `None` when the data are already in the true
    /// eigenbasis.
    pub eigvecs: Option<SpectralPair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEstimate {
    pub k_n: usize,
    /// `rho_matrix[(l, j)]` maps input component `j` to output component `l`.
    pub rho_matrix: DMatrix<f64>,
    pub eigvecs: SpectralPair,
}

fn check_k(k_n: usize, m: usize) -> Result<()> {
    if k_n == 0 || k_n > m {
        return Err(ArhError::InvalidParameter(format!("truncation k_n = {k_n} outside 1..={m}")));
    }
    Ok(())
}

/// `(1/(n−1)) Σ_{i<n−1} x_{i,a} x_{i+1,b}`.
fn lag_moment(x: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    let n = x.nrows();
    let ca = x.column(a);
    let cb = x.column(b);
    let mut s = 0.0;
    for i in 0..n - 1 {
        s += ca[i] * cb[i + 1];
    }
    s / (n - 1) as f64
}

/// `(1/n) Σ x_{i,j}²`.
fn energy(x: &DMatrix<f64>, j: usize) -> f64 {
    x.column(j).norm_squared() / x.nrows() as f64
}

fn ratios(x: &DMatrix<f64>, k_n: usize) -> Result<DVector<f64>> {
    let mut rho = DVector::zeros(k_n);
    for j in 0..k_n {
        let c = energy(x, j);
        if c <= 0.0 {
            return Err(ArhError::ZeroEnergy { component: j + 1 });
        }
        rho[j] = lag_moment(x, j, j) / c;
    }
    Ok(rho)
}

/// `ρ̂_{n,j} = D̂_{n,j} / Ĉ_{n,j}` on coefficients in the true eigenbasis, i.e.
/// `(n/(n−1)) Σ X_{i,j} X_{i+1,j} / Σ X_{i,j}²`.
pub fn diag_known(series: &CoeffSeries, k_n: usize) -> Result<DiagEstimate> {
    if series.n() < 2 {
        return Err(ArhError::InvalidN(series.n()));
    }
    check_k(k_n, series.m())?;
    Ok(DiagEstimate { k_n, rho_hat: ratios(series.data(), k_n)?, eigvecs: None })
}

fn empirical_basis(series: &CoeffSeries, k_n: usize) -> Result<(SpectralPair, CoeffSeries)> {
    if series.n() < 2 {
        return Err(ArhError::InvalidN(series.n()));
    }
    check_k(k_n, series.m())?;
    let pair = eigendecompose(&moments(series)?)?;
    let eigenvalue = pair.eigenvalues[k_n - 1];
    if eigenvalue <= 0.0 {
        return Err(ArhError::TruncationTooDeep { k_n, eigenvalue });
    }
    let rotated = project_onto(series, &pair)?;
    Ok((pair, rotated))
}

/// `ρ̃_{n,j} = D_{n,j} / C_{n,j}` on the empirical eigenvectors of `C_n`.
pub fn diag_unknown(series: &CoeffSeries, k_n: usize) -> Result<DiagEstimate> {
    let (pair, rotated) = empirical_basis(series, k_n)?;
    let rho_hat = match ratios(rotated.data(), k_n) {
        Err(ArhError::ZeroEnergy { component }) => {
            return Err(ArhError::TruncationTooDeep { k_n: component, eigenvalue: 0.0 })
        }
        other => other?,
    };
    Ok(DiagEstimate { k_n, rho_hat, eigvecs: Some(pair) })
}

fn projection_estimate(series: &CoeffSeries, k_n: usize, floor: impl Fn(&[f64]) -> f64) -> Result<MatrixEstimate> {
    let (pair, rotated) = empirical_basis(series, k_n)?;
    let x = rotated.data();
    let c: Vec<f64> = (0..k_n).map(|j| energy(x, j)).collect();
    if let Some(j) = c.iter().position(|&v| v <= 0.0) {
        return Err(ArhError::TruncationTooDeep { k_n: j + 1, eigenvalue: 0.0 });
    }
    let u = floor(&c);
    let mut rho = DMatrix::zeros(k_n, k_n);
    for j in 0..k_n {
        let denom = c[j].max(u);
        for l in 0..k_n {
            rho[(l, j)] = lag_moment(x, j, l) / denom;
        }
    }
    Ok(MatrixEstimate { k_n, rho_matrix: rho, eigvecs: pair })
}

/// `π^{k_n} D_n C_n^{−1} π^{k_n}` expressed on the first `k_n` empirical
/// eigenvectors.
pub fn bosq(series: &CoeffSeries, k_n: usize) -> Result<MatrixEstimate> {
    projection_estimate(series, k_n, |_| 0.0)
}

/// Where the regularization floor `u_n = β_u C_{k_n}` takes its eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuillasFloor {
    /// The true `C_{k_n}` of an attached scenario.
    True(f64),
    /// The empirical `C_{n,k_n}`.
    Empirical,
}

/// Bosq's estimator with `C_{n,j}^{−1}` replaced by `1/max(C_{n,j}, u_n)`.
pub fn guillas(series: &CoeffSeries, k_n: usize, beta_u: f64, floor: GuillasFloor) -> Result<MatrixEstimate> {
    if !(beta_u > 0.0 && beta_u < 1.0) {
        return Err(ArhError::InvalidParameter(format!("beta_u = {beta_u} outside (0, 1)")));
    }
    projection_estimate(series, k_n, |c| match floor {
        GuillasFloor::True(c_k) => beta_u * c_k,
        GuillasFloor::Empirical => beta_u * c[k_n - 1],
    })
}

impl DiagEstimate {
    /// Plug-in prediction `ρ̂(x)` in the coordinates of `x`.
    pub fn predict(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let k = self.k_n;
        match &self.eigvecs {
            None => {
                if x.len() < k {
                    return Err(ArhError::DimensionMismatch { expected: k, got: x.len() });
                }
                let mut out = DVector::zeros(x.len());
                for j in 0..k {
                    out[j] = self.rho_hat[j] * x[j];
                }
                Ok(out)
            }
            Some(pair) => {
                let phi = leading(pair, k, x.len())?;
                let scores = phi.tr_mul(x).component_mul(&self.rho_hat);
                Ok(phi * scores)
            }
        }
    }
}

impl MatrixEstimate {
    pub fn predict(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let phi = leading(&self.eigvecs, self.k_n, x.len())?;
        let scores = &self.rho_matrix * phi.tr_mul(x);
        Ok(phi * scores)
    }
}

fn leading(pair: &SpectralPair, k: usize, m: usize) -> Result<DMatrix<f64>> {
    let vecs = &pair.eigenvectors;
    if vecs.nrows() != m || vecs.ncols() < k {
        return Err(ArhError::DimensionMismatch { expected: vecs.nrows(), got: m });
    }
    Ok(vecs.columns(0, k).into_owned())
}

/// `max_{j≤k} |ρ̂_j − ρ_j| + sup_{j>k} |ρ_j|` for a diagonal estimate against
/// the true diagonal.
pub fn operator_norm_error(rho_hat: &DVector<f64>, true_rho: &DVector<f64>) -> f64 {
    let k = rho_hat.len().min(true_rho.len());
    let head = (0..k).fold(0.0f64, |acc, j| acc.max((rho_hat[j] - true_rho[j]).abs()));
    head + tail_sup(true_rho, k)
}

/// `sup_{j>k} |ρ_j|` with 1-based `j`.
pub fn tail_sup(true_rho: &DVector<f64>, k: usize) -> f64 {
    true_rho.iter().skip(k).fold(0.0f64, |acc, r| acc.max(r.abs()))
}

/// Finite-sample values of the asymptotic admissibility conditions on the
/// truncation level.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop2Report {
    /// `Λ_{k_n} = sup_{j≤k_n} (C_j − C_{j+1})^{−1}`
    pub lambda: f64,
    /// `Σ_{j≤k_n} a_j`
    pub a_sum: f64,
    /// `Λ_{k_n} (ln n)^{1/2−β} / n^{1/4}`
    pub lambda_stat: f64,
    /// `k_n C_{k_n}`
    pub k_c: f64,
    /// `(Σ a_j / C_{k_n}) (ln n)^β / n^{1/4}`
    pub a_stat: f64,
}

/// `a_1 = 2√2/(C_1 − C_2)` and
/// `a_j = 2√2 max((C_{j−1} − C_j)^{−1}, (C_j − C_{j+1})^{−1})`, for `j ≤ k`.
pub fn gap_sequence(c: &[f64], k: usize) -> Vec<f64> {
    let inv_gap = |j: usize| 1.0 / (c[j] - c[j + 1]);
    (0..k)
        .map(|j| {
            let right = inv_gap(j);
            let worst = if j == 0 { right } else { inv_gap(j - 1).max(right) };
            2.0 * std::f64::consts::SQRT_2 * worst
        })
        .collect()
}

pub fn check_prop2_conditions(c: &[f64], k_n: usize, n: usize, beta: f64) -> Result<Prop2Report> {
    if k_n == 0 || k_n >= c.len() {
        return Err(ArhError::InvalidParameter(format!("k_n = {k_n} needs 1 <= k_n < {}", c.len())));
    }
    if n < 2 {
        return Err(ArhError::InvalidN(n));
    }
    if let Some(index) = (0..k_n).find(|&j| c[j] <= c[j + 1]) {
        return Err(ArhError::Monotonicity { index: index + 1 });
    }
    let lambda = (0..k_n).map(|j| 1.0 / (c[j] - c[j + 1])).fold(0.0, f64::max);
    let a_sum: f64 = gap_sequence(c, k_n).iter().sum();
    let ln_n = (n as f64).ln();
    let quarter = (n as f64).powf(0.25);
    let c_k = c[k_n - 1];
    Ok(Prop2Report {
        lambda,
        a_sum,
        lambda_stat: lambda * ln_n.powf(0.5 - beta) / quarter,
        k_c: k_n as f64 * c_k,
        a_stat: a_sum / c_k * ln_n.powf(beta) / quarter,
    })
}
