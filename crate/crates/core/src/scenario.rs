//! Data-generating operators of the comparative study: eigenvalues of the
//! covariance operator `C`, the autocorrelation matrix `ρ` and the innovation
//! covariance `C_ε`, all expressed in the sine eigenbasis of `C`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ArhError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Diagonal,
    PseudoDiagonal,
    NonDiagonal,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Diagonal => "diagonal",
            Regime::PseudoDiagonal => "pseudo_diagonal",
            Regime::NonDiagonal => "non_diagonal",
        }
    }
}

/// How the off-diagonal innovation term `e^{−|j−h|²/W}` enters `C_ε`.
///
/// `Literal` uses it as the covariance entry itself. With `M = 50` and the
/// decaying diagonal `C_j (1 − ρ_jj²)` that matrix is indefinite, so the
/// default treats it as a correlation: `σ²_jh = e^{−|j−h|²/W} σ_jj σ_hh`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseCoupling {
    #[default]
    Correlation,
    Literal,
}

fn default_delta2() -> f64 {
    1.1
}
fn default_c1() -> f64 {
    1.0
}
fn default_c2() -> f64 {
    0.8
}
fn default_width() -> f64 {
    0.2
}
fn default_inv_k() -> f64 {
    0.275
}
fn default_m() -> usize {
    50
}
fn default_burn_in() -> usize {
    500
}

/// Full parameterization of one data-generating regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub regime: Regime,
    /// Decay of the eigenvalues of `C`.
    pub delta1: f64,
    /// Decay of the diagonal of `ρ`.
    #[serde(default = "default_delta2")]
    pub delta2: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    /// Off-diagonal width `W`.
    #[serde(default = "default_width")]
    pub width: f64,
    /// `1/K` of the non-diagonal `ρ`.
    #[serde(default = "default_inv_k")]
    pub inv_k: f64,
    /// Spectral truncation used for generation.
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub noise_coupling: NoiseCoupling,
}

impl ScenarioSpec {
    pub fn new(regime: Regime, delta1: f64) -> Self {
        Self {
            regime,
            delta1,
            delta2: default_delta2(),
            c1: default_c1(),
            c2: default_c2(),
            width: default_width(),
            inv_k: default_inv_k(),
            m: default_m(),
            burn_in: default_burn_in(),
            noise_coupling: NoiseCoupling::default(),
        }
    }

    /// Parameter-level checks that need no matrix algebra.
    pub fn check(&self) -> Result<()> {
        if !(self.delta1 > 1.0) {
            return Err(ArhError::InvalidSpec(format!("delta1 = {} must exceed 1", self.delta1)));
        }
        if !(self.c2 > 0.0 && self.c2 < 1.0) {
            return Err(ArhError::InvalidSpec(format!("c2 = {} must lie in (0, 1)", self.c2)));
        }
        if !(self.c1 > 0.0) {
            return Err(ArhError::InvalidSpec(format!("c1 = {} must be positive", self.c1)));
        }
        if !(self.width > 0.0) {
            return Err(ArhError::InvalidSpec(format!("width = {} must be positive", self.width)));
        }
        if !self.delta2.is_finite() || !self.inv_k.is_finite() {
            return Err(ArhError::InvalidSpec("non-finite parameter".into()));
        }
        if self.m == 0 {
            return Err(ArhError::InvalidSpec("m must be at least 1".into()));
        }
        Ok(())
    }
}

/// Validated generating operators in the sine eigenbasis.
#[derive(Debug, Clone)]
pub struct ScenarioOperators {
    pub spec: ScenarioSpec,
    pub c_eigs: DVector<f64>,
    /// `rho[(j, h)]` maps input component `h` to output component `j`.
    pub rho: DMatrix<f64>,
    pub noise_cov: DMatrix<f64>,
    pub noise_chol: DMatrix<f64>,
}

impl ScenarioOperators {
    pub fn m(&self) -> usize {
        self.c_eigs.len()
    }

    pub fn rho_diag(&self) -> DVector<f64> {
        self.rho.diagonal()
    }

    pub fn rho_norm(&self) -> f64 {
        operator_norm(&self.rho)
    }
}

/// `C_j = c1 j^{−δ1}`, `j = 1..M`.
pub fn c_eigenvalues(spec: &ScenarioSpec) -> DVector<f64> {
    DVector::from_fn(spec.m, |j, _| spec.c1 * ((j + 1) as f64).powf(-spec.delta1))
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().iter().fold(0.0, |acc: f64, &s| acc.max(s))
}

pub fn build_rho(spec: &ScenarioSpec) -> Result<DMatrix<f64>> {
    let m = spec.m;
    let rho = DMatrix::from_fn(m, m, |j, h| {
        if j == h {
            return spec.c2 * ((j + 1) as f64).powf(-spec.delta2);
        }
        let gap = j.abs_diff(h) as f64;
        match spec.regime {
            Regime::Diagonal => 0.0,
            Regime::PseudoDiagonal => (-gap / spec.width).exp(),
            Regime::NonDiagonal => spec.inv_k / (gap * gap + 1.0),
        }
    });
    let norm = operator_norm(&rho);
    if !(norm < 1.0) {
        return Err(ArhError::Instability { norm });
    }
    Ok(rho)
}

/// Innovation covariance and its lower Cholesky factor.
pub fn build_noise_cov(
    spec: &ScenarioSpec,
    c_eigs: &DVector<f64>,
    rho: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = spec.m;
    if c_eigs.len() != m || rho.nrows() != m || rho.ncols() != m {
        return Err(ArhError::DimensionMismatch { expected: m, got: c_eigs.len() });
    }
    let variance: Vec<f64> = (0..m).map(|j| c_eigs[j] * (1.0 - rho[(j, j)] * rho[(j, j)])).collect();
    let cov = DMatrix::from_fn(m, m, |j, h| {
        if j == h {
            return variance[j];
        }
        match spec.regime {
            Regime::Diagonal => 0.0,
            Regime::PseudoDiagonal | Regime::NonDiagonal => {
                let gap = j.abs_diff(h) as f64;
                let coupling = (-gap * gap / spec.width).exp();
                match spec.noise_coupling {
                    NoiseCoupling::Literal => coupling,
                    NoiseCoupling::Correlation => coupling * (variance[j] * variance[h]).sqrt(),
                }
            }
        }
    });
    let cov = 0.5 * (&cov + cov.transpose());
    let chol = cholesky_with_jitter(&cov)?;
    Ok((cov, chol))
}

/// One retry with `1e-12·trace/M` added to the diagonal, then give up.
fn cholesky_with_jitter(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(c) = cov.clone().cholesky() {
        return Ok(c.l());
    }
    let m = cov.nrows();
    let jitter = 1e-12 * cov.trace() / m as f64;
    let mut bumped = cov.clone();
    for j in 0..m {
        bumped[(j, j)] += jitter;
    }
    if let Some(c) = bumped.cholesky() {
        return Ok(c.l());
    }
    let min_eigenvalue = SymmetricEigen::new(cov.clone()).eigenvalues.min();
    Err(ArhError::NotPsd { min_eigenvalue })
}

/// Build and check every generating operator.
pub fn validate(spec: &ScenarioSpec) -> Result<ScenarioOperators> {
    spec.check()?;
    let c_eigs = c_eigenvalues(spec);
    for j in 1..c_eigs.len() {
        if !(c_eigs[j] < c_eigs[j - 1] && c_eigs[j] > 0.0) {
            return Err(ArhError::Monotonicity { index: j });
        }
    }
    let rho = build_rho(spec)?;
    let (noise_cov, noise_chol) = build_noise_cov(spec, &c_eigs, &rho)?;
    Ok(ScenarioOperators { spec: spec.clone(), c_eigs, rho, noise_cov, noise_chol })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario1() -> ScenarioSpec {
        ScenarioSpec::new(Regime::Diagonal, 1.5)
    }

    #[test]
    fn eigenvalues() {
        let c = c_eigenvalues(&scenario1());
        assert_eq!(c[0], 1.0);
        assert!((c[3] - 0.125).abs() < 1e-15);
        let c = c_eigenvalues(&ScenarioSpec::new(Regime::Diagonal, 2.4));
        assert!((c[1] - 0.18946457081379978).abs() < 1e-14);
    }

    #[test]
    fn rho_entries_per_regime() {
        let rho = build_rho(&scenario1()).unwrap();
        assert_eq!(rho[(0, 0)], 0.8);
        assert_eq!(rho[(0, 1)], 0.0);

        let rho = build_rho(&ScenarioSpec::new(Regime::PseudoDiagonal, 1.5)).unwrap();
        assert!((rho[(3, 4)] - 0.006737946999085467).abs() < 1e-15);
        assert_eq!(rho[(3, 4)], rho[(4, 3)]);

        let rho = build_rho(&ScenarioSpec::new(Regime::NonDiagonal, 1.5)).unwrap();
        assert!((rho[(2, 4)] - 0.055).abs() < 1e-15);
    }

    #[test]
    fn noise_covariance_entries() {
        let spec = scenario1();
        let ops = validate(&spec).unwrap();
        assert!((ops.noise_cov[(0, 0)] - 0.36).abs() < 1e-15);
        for j in 0..spec.m {
            for h in 0..spec.m {
                if j != h {
                    assert_eq!(ops.noise_cov[(j, h)], 0.0);
                    assert_eq!(ops.rho[(j, h)], 0.0);
                }
            }
        }

        let mut literal = ScenarioSpec::new(Regime::PseudoDiagonal, 1.5);
        literal.noise_coupling = NoiseCoupling::Literal;
        literal.m = 2;
        literal.c1 = 10.0;
        let ops = validate(&literal).unwrap();
        assert!((ops.noise_cov[(0, 1)] - 0.006737946999085467).abs() < 1e-15);
    }

    #[test]
    fn literal_coupling_is_indefinite_at_full_size() {
        let mut spec = ScenarioSpec::new(Regime::PseudoDiagonal, 1.5);
        spec.noise_coupling = NoiseCoupling::Literal;
        match validate(&spec) {
            Err(ArhError::NotPsd { min_eigenvalue }) => assert!(min_eigenvalue < -1e-3),
            other => panic!("expected not-psd, got {other:?}"),
        }
    }

    #[test]
    fn stationarity_identity_is_exact() {
        let ops = validate(&scenario1()).unwrap();
        for j in 0..ops.m() {
            let r = ops.rho[(j, j)];
            let stationary = ops.noise_cov[(j, j)] / (1.0 - r * r);
            assert!((stationary - ops.c_eigs[j]).abs() <= 1e-14);
        }
    }

    #[test]
    fn every_regime_validates_with_defaults() {
        for regime in [Regime::Diagonal, Regime::PseudoDiagonal, Regime::NonDiagonal] {
            for delta1 in [1.5, 2.4] {
                let ops = validate(&ScenarioSpec::new(regime, delta1)).unwrap();
                assert!(ops.rho_norm() < 1.0);
                assert!(ops.c_eigs.as_slice().windows(2).all(|w| w[1] < w[0]));
                let rebuilt = &ops.noise_chol * ops.noise_chol.transpose();
                assert!((rebuilt - &ops.noise_cov).abs().max() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut spec = scenario1();
        spec.c2 = 1.0;
        assert!(matches!(validate(&spec), Err(ArhError::InvalidSpec(_))));
        let mut spec = scenario1();
        spec.delta1 = 1.0;
        assert!(matches!(validate(&spec), Err(ArhError::InvalidSpec(_))));
        let mut spec = ScenarioSpec::new(Regime::NonDiagonal, 1.5);
        spec.inv_k = 5.0;
        assert!(matches!(validate(&spec), Err(ArhError::Instability { .. })));
    }
}
