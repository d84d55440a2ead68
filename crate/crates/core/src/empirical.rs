//! Empirical covariance and cross-covariance operators on coefficient space
//! and their eigendecomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{ArhError, Result};
use crate::simulate::CoeffSeries;

/// `C_n = (1/n) Σ X_i ⊗ X_i` and `D_n = (1/(n−1)) Σ X_i ⊗ X_{i+1}`.
///
/// `dn[(j, l)] = (1/(n−1)) Σ_i X_{i,j} X_{i+1,l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMoments {
    pub cn: DMatrix<f64>,
    pub dn: DMatrix<f64>,
    pub n: usize,
}

pub fn moments(series: &CoeffSeries) -> Result<EmpiricalMoments> {
    let n = series.n();
    if n < 2 {
        return Err(ArhError::InvalidN(n));
    }
    let x = series.data();
    let mut cn = x.tr_mul(x) / n as f64;
    // Exact symmetry regardless of the gemm kernel.
    cn = 0.5 * (&cn + cn.transpose());
    let head = x.rows(0, n - 1);
    let tail = x.rows(1, n - 1);
    let dn = head.tr_mul(&tail) / (n - 1) as f64;
    Ok(EmpiricalMoments { cn, dn, n })
}

/// Eigenvalues in descending order and orthonormal eigenvectors (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// Columns whose sign could not be decided by [`sign_align`].
    pub sign_ties: Vec<bool>,
}

impl SpectralPair {
    pub fn identity(eigenvalues: DVector<f64>) -> Self {
        let m = eigenvalues.len();
        Self { eigenvalues, eigenvectors: DMatrix::identity(m, m), sign_ties: vec![false; m] }
    }

    pub fn m(&self) -> usize {
        self.eigenvalues.len()
    }
}

pub fn eigendecompose(moments: &EmpiricalMoments) -> Result<SpectralPair> {
    eigendecompose_symmetric(&moments.cn)
}

/// Eigendecomposition of a symmetric positive semidefinite matrix.
///
/// Columns are ordered by decreasing eigenvalue and each is oriented so its
/// largest-magnitude coordinate is positive. Eigenvalues in
/// `[−1e-10·‖A‖₂, 0)` are clipped to zero; anything more negative is an error.
pub fn eigendecompose_symmetric(a: &DMatrix<f64>) -> Result<SpectralPair> {
    if !a.is_square() {
        return Err(ArhError::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(ArhError::DecompositionFailure("non-finite entries".into()));
    }
    let scale = a.abs().max().max(f64::MIN_POSITIVE);
    if (a - a.transpose()).abs().max() > 1e-12 * scale {
        return Err(ArhError::DecompositionFailure("matrix is not symmetric".into()));
    }
    let m = a.nrows();
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| ArhError::DecompositionFailure("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let spectral_norm = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let floor = -1e-10 * spectral_norm;
    let mut eigenvalues = DVector::zeros(m);
    let mut eigenvectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        let value = eig.eigenvalues[src];
        if value < floor {
            return Err(ArhError::DecompositionFailure(format!(
                "negative eigenvalue {value:.3e} in a covariance matrix"
            )));
        }
        eigenvalues[dst] = value.max(0.0);
        let mut col = eig.eigenvectors.column(src).into_owned();
        let lead = col.iter().enumerate().fold(0, |best, (i, v)| if v.abs() > col[best].abs() { i } else { best });
        if col[lead] < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(dst, &col);
    }
    Ok(SpectralPair { eigenvalues, eigenvectors, sign_ties: vec![false; m] })
}

/// Flip each empirical eigenvector so that `⟨φ_{n,j}, φ_j⟩ ≥ 0`, where `φ_j`
/// is column `j` of `reference`.
pub fn sign_align(empirical: &SpectralPair, reference: &DMatrix<f64>) -> Result<SpectralPair> {
    let m = empirical.m();
    if reference.nrows() != empirical.eigenvectors.nrows() || reference.ncols() < m {
        return Err(ArhError::DimensionMismatch { expected: m, got: reference.ncols() });
    }
    let mut out = empirical.clone();
    for j in 0..m {
        let ip = out.eigenvectors.column(j).dot(&reference.column(j));
        if ip < 0.0 {
            out.eigenvectors.column_mut(j).neg_mut();
        }
        out.sign_ties[j] = ip == 0.0;
    }
    Ok(out)
}

/// `X̃_{i,j} = ⟨X_i, φ_{n,j}⟩`, i.e. `X Φ_n`.
pub fn project_onto(series: &CoeffSeries, pair: &SpectralPair) -> Result<CoeffSeries> {
    if pair.eigenvectors.nrows() != series.m() {
        return Err(ArhError::DimensionMismatch { expected: series.m(), got: pair.eigenvectors.nrows() });
    }
    CoeffSeries::new(series.data() * &pair.eigenvectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(rows: &[&[f64]]) -> CoeffSeries {
        CoeffSeries::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn constant_series_moments() {
        let v = [1.0, -2.0, 0.5];
        let s = series(&[&v, &v, &v, &v]);
        let mo = moments(&s).unwrap();
        let vv = DVector::from_row_slice(&v) * DVector::from_row_slice(&v).transpose();
        assert!((&mo.cn - &vv).abs().max() < 1e-15);
        assert!((&mo.dn - &vv).abs().max() < 1e-15);
    }

    #[test]
    fn two_point_moments() {
        let s = series(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let mo = moments(&s).unwrap();
        assert_eq!(mo.cn, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        assert_eq!(mo.dn, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        assert!(moments(&series(&[&[1.0, 0.0]])).is_err());
    }

    #[test]
    fn diagonal_matrix_spectrum() {
        let pair = eigendecompose_symmetric(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 1.0]))).unwrap();
        assert_eq!(pair.eigenvalues.as_slice(), &[3.0, 2.0, 1.0]);
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((pair.eigenvectors - expected).abs().max() < 1e-15);
    }

    #[test]
    fn rank_one_spectrum() {
        let v = DVector::from_vec(vec![0.0, 2.0 * 0.6, 2.0 * 0.8]);
        let pair = eigendecompose_symmetric(&(&v * v.transpose())).unwrap();
        assert!((pair.eigenvalues[0] - 4.0).abs() < 1e-14);
        assert!(pair.eigenvalues.iter().skip(1).all(|&e| e.abs() < 1e-14 && e >= 0.0));
        assert!((pair.eigenvectors[(2, 0)] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(eigendecompose_symmetric(&indefinite).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(eigendecompose_symmetric(&asym).is_err());
    }

    #[test]
    fn sign_alignment() {
        let id = DMatrix::<f64>::identity(3, 3);
        let pair = SpectralPair::identity(DVector::from_vec(vec![3.0, 2.0, 1.0]));
        assert_eq!(sign_align(&pair, &id).unwrap(), pair);
        let mut neg = pair.clone();
        neg.eigenvectors = -neg.eigenvectors;
        assert_eq!(sign_align(&neg, &id).unwrap(), pair);

        let mut rotated = pair.clone();
        rotated.eigenvectors = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let aligned = sign_align(&rotated, &id).unwrap();
        assert_eq!(aligned.sign_ties, vec![true, true, false]);
    }

    #[test]
    fn projection_identities() {
        let s = series(&[&[1.0, 2.0], &[-0.5, 0.25], &[3.0, -1.0]]);
        let id = SpectralPair::identity(DVector::from_vec(vec![1.0, 1.0]));
        assert_eq!(project_onto(&s, &id).unwrap(), s);

        let pair = eigendecompose(&moments(&s).unwrap()).unwrap();
        let rotated = project_onto(&s, &pair).unwrap();
        for i in 0..3 {
            assert!((rotated.row(i).norm() - s.row(i).norm()).abs() < 1e-12);
        }
        let back = CoeffSeries::new(rotated.data() * pair.eigenvectors.transpose()).unwrap();
        assert!((back.data() - s.data()).abs().max() < 1e-12);
    }

    fn matrix_strategy(m: usize, rows: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-3.0f64..3.0, m * rows).prop_map(move |v| DMatrix::from_row_slice(rows, m, &v))
    }

    proptest! {
        #[test]
        fn reconstruction_and_orthonormality(x in matrix_strategy(5, 8)) {
            let s = CoeffSeries::new(x).unwrap();
            let mo = moments(&s).unwrap();
            prop_assert!((&mo.cn - mo.cn.transpose()).abs().max() <= 1e-12);
            let pair = eigendecompose(&mo).unwrap();
            let q = &pair.eigenvectors;
            let ortho = (q.transpose() * q - DMatrix::identity(5, 5)).abs().max();
            prop_assert!(ortho <= 1e-10);
            let rebuilt = q * DMatrix::from_diagonal(&pair.eigenvalues) * q.transpose();
            prop_assert!((rebuilt - &mo.cn).norm() <= 1e-10 * mo.cn.norm().max(1e-300));
            prop_assert!(pair.eigenvalues.as_slice().windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(pair.eigenvalues.iter().all(|&e| e >= 0.0));
        }

        #[test]
        fn alignment_makes_inner_products_nonnegative(x in matrix_strategy(4, 6), y in matrix_strategy(4, 6)) {
            let a = eigendecompose(&moments(&CoeffSeries::new(x).unwrap()).unwrap()).unwrap();
            let b = eigendecompose(&moments(&CoeffSeries::new(y).unwrap()).unwrap()).unwrap();
            let aligned = sign_align(&a, &b.eigenvectors).unwrap();
            for j in 0..4 {
                prop_assert!(aligned.eigenvectors.column(j).dot(&b.eigenvectors.column(j)) >= 0.0);
            }
            prop_assert_eq!(aligned.eigenvalues, a.eigenvalues);
        }
    }
}
