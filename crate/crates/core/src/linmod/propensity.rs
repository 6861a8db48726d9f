use nalgebra::DMatrix;

use super::irls::irls;
use super::{expit, Link, PropensityFit, PropensityKind, WeightDiagnostics};
use crate::error::{Error, Result};

/// Logistic maximum-likelihood propensity fit of `T` on `design`.
pub fn fit_logistic_propensity(design: &DMatrix<f64>, t: &[u8]) -> Result<PropensityFit> {
    if design.nrows() != t.len() {
        return Err(Error::InvalidArgument(format!(
            "design has {} rows for {} indicators",
            design.nrows(),
            t.len()
        )));
    }
    let response: Vec<f64> = t.iter().map(|&v| f64::from(v)).collect();
    let fit = irls(design, &response, &vec![1.0; t.len()], Link::Logit)?;
    let eta = design * &fit.beta;
    let pi_hat: Vec<f64> = eta.iter().map(|&e| expit(e)).collect();
    Ok(PropensityFit {
        kind: PropensityKind::LogisticMle,
        alpha: fit.beta.iter().copied().collect(),
        phi: None,
        diagnostics: WeightDiagnostics::compute(&pi_hat, t),
        linear_predictor: eta.iter().copied().collect(),
        pi_hat,
        converged: true,
        iterations: fit.iterations,
    })
}
