//! Accuracy measures: relative L2 error and absolute-error series.

use crate::error::{Error, Result};
use crate::util::CompensatedSum;

/// Per-component relative L2 errors over a shared evaluation set.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorVector {
    pub per_component: Vec<f64>,
    pub eval_points: usize,
}

/// `sqrt(sum (pred - ref)^2) / sqrt(sum ref^2)`.
///
/// The per-point normalizations of the RMS form cancel, so the cancelled
/// form is computed directly, with compensated accumulation (series run to
/// 2e5 points spanning many magnitudes).
pub fn relative_l2(pred: &[f64], reference: &[f64]) -> Result<f64> {
    if pred.len() != reference.len() || pred.is_empty() {
        return Err(Error::Dimension(format!(
            "series lengths {} vs {}",
            pred.len(),
            reference.len()
        )));
    }
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for (p, r) in pred.iter().zip(reference) {
        let d = p - r;
        num.add(d * d);
        den.add(r * r);
    }
    let den = den.value();
    if den == 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok((num.value() / den).sqrt())
}

/// Elementwise `|pred - ref|`.
pub fn abs_error_series(pred: &[f64], reference: &[f64]) -> Vec<f64> {
    pred.iter()
        .zip(reference)
        .map(|(p, r)| (p - r).abs())
        .collect()
}
