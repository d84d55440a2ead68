//! A fitted one-step-ahead predictor in any of its representations.

use nalgebra::DVector;

use crate::componentwise::{DiagEstimate, MatrixEstimate};
use crate::error::Result;
use crate::grid::{reconstruct, BasisSystem, Curve};
use crate::smoothing::{kernel_from_smoothed, BessePredictor};
use crate::wavelet::WaveletPredictor;

#[derive(Debug, Clone, PartialEq)]
pub enum PredictorModel {
    /// Diagonal coefficients, in the true or empirical eigenbasis.
    Diagonal(DiagEstimate),
    /// Full matrix on the empirical eigenvectors.
    Matrix(MatrixEstimate),
    Wavelet(WaveletPredictor),
    Penalized(BessePredictor),
    /// Smoothed training curves and bandwidth of a kernel predictor.
    Kernel { smoothed: Vec<Curve>, h: f64 },
}

impl PredictorModel {
    /// Predicted curve for input with generating-basis coefficients `coeffs`
    /// and curve `input` on the basis grid.
    pub fn predict_curve(&self, coeffs: &DVector<f64>, input: &Curve, basis: &BasisSystem) -> Result<Curve> {
        match self {
            PredictorModel::Diagonal(m) => reconstruct(m.predict(coeffs)?.as_slice(), basis),
            PredictorModel::Matrix(m) => reconstruct(m.predict(coeffs)?.as_slice(), basis),
            PredictorModel::Wavelet(m) => m.predict(input),
            PredictorModel::Penalized(m) => m.predict(input),
            PredictorModel::Kernel { smoothed, h } => Ok(kernel_from_smoothed(smoothed, *h, input)?.curve),
        }
    }

    /// Truncation level of the componentwise representations.
    pub fn k_n(&self) -> Option<usize> {
        match self {
            PredictorModel::Diagonal(m) => Some(m.k_n),
            PredictorModel::Matrix(m) => Some(m.k_n),
            PredictorModel::Wavelet(m) => Some(m.k_n),
            PredictorModel::Penalized(m) => Some(m.dim()),
            PredictorModel::Kernel { .. } => None,
        }
    }
}
