//! Prediction error norms, threshold curves, exceedance counts and the
//! consistency bounds used to score the estimators.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::componentwise::{diag_unknown, tail_sup};
use crate::empirical::{eigendecompose, moments, sign_align, SpectralPair};
use crate::error::{ArhError, Result};
use crate::grid::{reconstruct, BasisSystem, Curve};
use crate::scenario::ScenarioOperators;
use crate::simulate::CoeffSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rate {
    Half,
    Third,
}

impl Rate {
    pub fn exponent(self) -> f64 {
        match self {
            Rate::Half => 0.5,
            Rate::Third => 1.0 / 3.0,
        }
    }
}

/// `ξ_{n,β} = (ln n)^β / n^r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdCurve {
    pub beta: f64,
    pub rate: Rate,
}

impl ThresholdCurve {
    pub fn new(beta: f64, rate: Rate) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(ArhError::InvalidParameter(format!("threshold beta = {beta} must be positive")));
        }
        Ok(Self { beta, rate })
    }

    pub fn xi(&self, n: f64) -> f64 {
        n.ln().powf(self.beta) / n.powf(self.rate.exponent())
    }
}

pub fn xi(curve: &ThresholdCurve, n: usize) -> f64 {
    curve.xi(n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub replication: usize,
    pub n: usize,
    pub k_n: usize,
    pub method: String,
    /// `+∞` marks a replication whose fit failed.
    pub error_norm: f64,
    pub exceeded: bool,
    #[serde(default)]
    pub aux: BTreeMap<String, f64>,
}

impl ErrorRecord {
    pub fn failed(&self) -> bool {
        !self.error_norm.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FCount {
    pub num: usize,
    pub den: usize,
}

impl FCount {
    pub fn value(&self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }
}

/// Fraction of records whose error exceeds `ξ(n)`. Failed replications count
/// as exceedances.
pub fn f_count(records: &[ErrorRecord], curve: &ThresholdCurve) -> Result<FCount> {
    let Some(first) = records.first() else {
        return Ok(FCount { num: 0, den: 0 });
    };
    if records.iter().any(|r| r.n != first.n) {
        return Err(ArhError::InvalidParameter("records mix sample sizes".into()));
    }
    let threshold = xi(curve, first.n);
    let num = records.iter().filter(|r| !(r.error_norm <= threshold)).count();
    Ok(FCount { num, den: records.len() })
}

fn truncated(coeffs: DVector<f64>, k: usize) -> DVector<f64> {
    let mut c = coeffs;
    for v in c.iter_mut().skip(k) {
        *v = 0.0;
    }
    c
}

/// `‖Σ_{j≤k_n} ρ_j X_{n−1,j} φ_j − prediction‖` with a diagonal truth.
pub fn diag_truncated_error(
    true_rho_diag: &DVector<f64>,
    last: &DVector<f64>,
    k_n: usize,
    prediction: &Curve,
    basis: &BasisSystem,
) -> Result<f64> {
    if true_rho_diag.len() != last.len() {
        return Err(ArhError::DimensionMismatch { expected: last.len(), got: true_rho_diag.len() });
    }
    let truth = truncated(true_rho_diag.component_mul(last), k_n);
    reconstruct(truth.as_slice(), basis)?.distance(prediction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelErrorMode {
    /// First term `∫ Σ_{j,k≤k_n} ρ_{j,k} φ_j(t) φ_k(s) ds`, as displayed.
    #[default]
    Literal,
    /// First term `Σ_{j,k≤k_n} ρ_{j,k} X_{n−1,k} φ_j(t)`.
    Applied,
}

/// Truncated error against a full matrix `ρ`.
pub fn kernel_truncated_error(
    true_rho: &DMatrix<f64>,
    last: &DVector<f64>,
    k_n: usize,
    prediction: &Curve,
    basis: &BasisSystem,
    mode: KernelErrorMode,
) -> Result<f64> {
    let m = true_rho.nrows();
    if !true_rho.is_square() || last.len() != m || k_n > m {
        return Err(ArhError::DimensionMismatch { expected: m, got: last.len() });
    }
    let weights = match mode {
        KernelErrorMode::Applied => last.clone(),
        KernelErrorMode::Literal => {
            let grid = basis.grid();
            DVector::from_fn(m, |k, _| grid.weights().iter().zip(basis.values().row(k).iter()).map(|(w, v)| w * v).sum())
        }
    };
    let inner = truncated(weights, k_n);
    let truth = truncated(true_rho * inner, k_n);
    reconstruct(truth.as_slice(), basis)?.distance(prediction)
}

/// `‖ρ(X_{n−1}) − prediction‖` with all components of `ρ`.
pub fn full_error(true_rho: &DMatrix<f64>, input: &DVector<f64>, prediction: &Curve, basis: &BasisSystem) -> Result<f64> {
    if true_rho.ncols() != input.len() {
        return Err(ArhError::DimensionMismatch { expected: true_rho.ncols(), got: input.len() });
    }
    let truth = true_rho * input;
    reconstruct(truth.as_slice(), basis)?.distance(prediction)
}

/// The four addends of the upper bound on `‖ρ̃_{k_n} − ρ‖` and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UbBound {
    /// `sup_{j≤k_n} |ρ̃_{n,j} − D_{n,j}/C_j|`
    pub estimate_gap: f64,
    /// `sup_{j≤k_n} |D_{n,j}/C_j − ρ_j|`
    pub moment_gap: f64,
    /// `2 Σ_{j≤k_n} (|D_{n,j}|/C_j) ‖φ_{n,j} − φ'_{n,j}‖`
    pub eigvec_term: f64,
    /// `sup_{j>k_n} |ρ_j|`
    pub tail: f64,
    pub total: f64,
    /// `‖ρ̃_{k_n} − ρ‖_{L(H)}` for the same fit.
    pub error: f64,
}

/// Bound on the error of the diagonal estimator with unknown eigenvectors,
/// for a diagonal scenario whose true eigenvectors are the coordinate axes.
pub fn ub_bound(series: &CoeffSeries, ops: &ScenarioOperators, k_n: usize) -> Result<UbBound> {
    let est = diag_unknown(series, k_n)?;
    let pair = est.eigvecs.as_ref().expect("empirical eigenvectors");
    let dn = moments(series)?.dn;
    ub_bound_from(&est.rho_hat, pair, &dn, &ops.c_eigs, &ops.rho_diag())
}

/// [`ub_bound`] from precomputed pieces; `dn` is the cross-covariance in the
/// generating basis.
pub fn ub_bound_from(
    rho_tilde: &DVector<f64>,
    pair: &SpectralPair,
    dn: &DMatrix<f64>,
    c_true: &DVector<f64>,
    rho_true: &DVector<f64>,
) -> Result<UbBound> {
    let k = rho_tilde.len();
    let m = pair.eigenvectors.nrows();
    if c_true.len() != m || rho_true.len() != m || k > m {
        return Err(ArhError::DimensionMismatch { expected: m, got: c_true.len() });
    }
    let reference = DMatrix::identity(m, m);
    let aligned = sign_align(pair, &reference)?;
    let mut estimate_gap = 0.0f64;
    let mut moment_gap = 0.0f64;
    let mut eigvec_term = 0.0;
    let mut error = 0.0f64;
    for j in 0..k {
        let phi = pair.eigenvectors.column(j);
        let d_nj = phi.dot(&(dn * phi));
        let ratio = d_nj / c_true[j];
        estimate_gap = estimate_gap.max((rho_tilde[j] - ratio).abs());
        moment_gap = moment_gap.max((ratio - rho_true[j]).abs());
        // φ'_{n,j} = sgn⟨φ_{n,j}, φ_j⟩ φ_j and ‖φ_{n,j} − φ'_{n,j}‖ is the same
        // after flipping φ_{n,j} to the aligned orientation.
        let diff = (aligned.eigenvectors.column(j) - reference.column(j)).norm();
        eigvec_term += 2.0 * d_nj.abs() / c_true[j] * diff;
        error = error.max((rho_tilde[j] - rho_true[j]).abs());
    }
    let tail = tail_sup(rho_true, k);
    Ok(UbBound {
        estimate_gap,
        moment_gap,
        eigvec_term,
        tail,
        total: estimate_gap + moment_gap + eigvec_term + tail,
        error: error + tail,
    })
}

/// `Σ_{j≠k≤k_n} [D_n(φ_{n,j})(φ_{n,k}) / C_{n,j}]²`.
pub fn hs_offdiag(dn: &DMatrix<f64>, pair: &SpectralPair, k_n: usize) -> Result<f64> {
    let m = pair.eigenvectors.nrows();
    if dn.nrows() != m || dn.ncols() != m || k_n > pair.m() {
        return Err(ArhError::DimensionMismatch { expected: m, got: dn.nrows() });
    }
    if let Some(j) = (0..k_n).find(|&j| pair.eigenvalues[j] <= 0.0) {
        return Err(ArhError::TruncationTooDeep { k_n: j + 1, eigenvalue: pair.eigenvalues[j] });
    }
    let phi = pair.eigenvectors.columns(0, k_n);
    let projected = phi.transpose() * dn * phi;
    let mut sum = 0.0;
    for j in 0..k_n {
        for k in 0..k_n {
            if j != k {
                sum += (projected[(j, k)] / pair.eigenvalues[j]).powi(2);
            }
        }
    }
    Ok(sum)
}

pub fn hs_offdiag_bound(series: &CoeffSeries, k_n: usize) -> Result<f64> {
    let mo = moments(series)?;
    let pair = eigendecompose(&mo)?;
    hs_offdiag(&mo.dn, &pair, k_n)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::{sine_basis, Grid};
    use crate::scenario::{validate, Regime, ScenarioSpec};
    use crate::simulate::simulate;

    fn basis(m: usize) -> BasisSystem {
        sine_basis(&Arc::new(Grid::new(0.0, 4.0, 0.01).unwrap()), m).unwrap()
    }

    #[test]
    fn thresholds() {
        let half = ThresholdCurve::new(0.65, Rate::Half).unwrap();
        assert!((half.xi(std::f64::consts::E.powi(2)) - 0.5772647189725137).abs() < 1e-12);
        let third = ThresholdCurve::new(1.25, Rate::Third).unwrap();
        let e = std::f64::consts::E;
        assert!((third.xi(e) - e.powf(-1.0 / 3.0)).abs() < 1e-15);
        assert!(ThresholdCurve::new(0.0, Rate::Half).is_err());
    }

    #[test]
    fn counts() {
        let curve = ThresholdCurve::new(0.65, Rate::Half).unwrap();
        let rec = |e: f64| ErrorRecord {
            replication: 0,
            n: 100,
            k_n: 4,
            method: "m".into(),
            error_norm: e,
            exceeded: false,
            aux: BTreeMap::new(),
        };
        let low: Vec<_> = (0..4).map(|_| rec(1e-6)).collect();
        assert_eq!(f_count(&low, &curve).unwrap(), FCount { num: 0, den: 4 });
        let high: Vec<_> = (0..4).map(|_| rec(10.0)).collect();
        assert_eq!(f_count(&high, &curve).unwrap().value(), 1.0);
        assert_eq!(f_count(&[rec(f64::INFINITY), rec(0.0)], &curve).unwrap().num, 1);
    }

    #[test]
    fn diag_error_examples() {
        let b = basis(4);
        let rho = DVector::from_vec(vec![0.8, 0.4, 0.2, 0.1]);
        let last = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let exact = reconstruct(truncated(rho.component_mul(&last), 3).as_slice(), &b).unwrap();
        assert_eq!(diag_truncated_error(&rho, &last, 3, &exact, &b).unwrap(), 0.0);
        let zero = Curve::zeros(b.grid().clone());
        let e = diag_truncated_error(&rho, &last, 3, &zero, &b).unwrap();
        let expected = (0.8f64.powi(2) + 0.8f64.powi(2) + 0.1f64.powi(2)).sqrt();
        assert!((e - expected).abs() < 1e-6);
    }

    #[test]
    fn kernel_error_modes() {
        let b = basis(3);
        let zero = Curve::zeros(b.grid().clone());
        let last = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        for mode in [KernelErrorMode::Literal, KernelErrorMode::Applied] {
            assert_eq!(kernel_truncated_error(&DMatrix::zeros(3, 3), &last, 2, &zero, &b, mode).unwrap(), 0.0);
        }
        let rho = DVector::from_vec(vec![0.8, 0.4, 0.2]);
        let pred = reconstruct(&[0.3, 0.1, 0.0], &b).unwrap();
        let a = kernel_truncated_error(&DMatrix::from_diagonal(&rho), &last, 2, &pred, &b, KernelErrorMode::Applied);
        assert_eq!(a.unwrap(), diag_truncated_error(&rho, &last, 2, &pred, &b).unwrap());
    }

    #[test]
    fn full_error_examples() {
        let b = basis(3);
        let rho = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.1, 0.4, 0.05, 0.0, 0.05, 0.3]);
        let x = DVector::from_vec(vec![1.0, -1.0, 2.0]);
        let truth = reconstruct((&rho * &x).as_slice(), &b).unwrap();
        assert_eq!(full_error(&rho, &x, &truth, &b).unwrap(), 0.0);
        let e = full_error(&rho, &x, &Curve::zeros(b.grid().clone()), &b).unwrap();
        assert!((e - (&rho * &x).norm()).abs() < 1e-6);
    }

    #[test]
    fn hs_toy() {
        let dn = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let pair = SpectralPair::identity(DVector::from_vec(vec![2.0, 1.0]));
        assert_eq!(hs_offdiag(&dn, &pair, 2).unwrap(), 0.25);
        assert_eq!(hs_offdiag(&DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, 0.2])), &pair, 2).unwrap(), 0.0);
    }

    #[test]
    fn ub_tail_and_perfect_fit() {
        let rho = DVector::from_fn(20, |j, _| 0.8 * ((j + 1) as f64).powf(-1.1));
        let c = DVector::from_fn(20, |j, _| ((j + 1) as f64).powf(-1.5));
        assert!((tail_sup(&rho, 12) - 0.04761593311145241).abs() < 1e-15);

        let k = 12;
        let dn = DMatrix::from_diagonal(&rho.component_mul(&c));
        let pair = SpectralPair::identity(c.clone());
        let rho_tilde = rho.rows(0, k).into_owned();
        let ub = ub_bound_from(&rho_tilde, &pair, &dn, &c, &rho).unwrap();
        assert!(ub.estimate_gap < 1e-15 && ub.moment_gap < 1e-15 && ub.eigvec_term == 0.0);
        assert!((ub.total - ub.tail).abs() < 1e-15);
    }

    #[test]
    fn ub_dominates_error() {
        let ops = validate(&ScenarioSpec::new(Regime::Diagonal, 1.5)).unwrap();
        for seed in 0..5 {
            let s = simulate(&ops, 400, seed).unwrap();
            let ub = ub_bound(&s, &ops, 6).unwrap();
            assert!(ub.error <= ub.total);
        }
    }
}
