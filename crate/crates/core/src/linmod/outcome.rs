use nalgebra::{DMatrix, DVector};

use super::irls::irls;
use super::{Link, OutcomeFit, OutcomeKind};
use crate::data::AnalysisView;
use crate::error::{Error, Result};

fn respondent_weights(view: &AnalysisView) -> Vec<f64> {
    view.t.iter().map(|&t| f64::from(t)).collect()
}

fn inverse_weights(view: &AnalysisView, pi_hat: &[f64]) -> Result<Vec<f64>> {
    check_len(view, pi_hat)?;
    view.t
        .iter()
        .zip(pi_hat)
        .enumerate()
        .map(|(i, (&t, &p))| {
            if t == 0 {
                Ok(0.0)
            } else if p > 0.0 && p.is_finite() {
                Ok(1.0 / p)
            } else {
                Err(Error::InvalidWeight { unit: i, value: p })
            }
        })
        .collect()
}

fn check_len(view: &AnalysisView, pi_hat: &[f64]) -> Result<()> {
    if pi_hat.len() != view.n() {
        return Err(Error::InvalidArgument(format!(
            "{} fitted propensities for {} units",
            pi_hat.len(),
            view.n()
        )));
    }
    Ok(())
}

fn augment(design: &DMatrix<f64>, extra: &[f64]) -> DMatrix<f64> {
    let p = design.ncols();
    let mut out = design.clone().insert_column(p, 0.0);
    out.column_mut(p).copy_from_slice(extra);
    out
}

fn fit(
    kind: OutcomeKind,
    view: &AnalysisView,
    design: &DMatrix<f64>,
    weights: &[f64],
    link: Link,
) -> Result<OutcomeFit> {
    let p = design.ncols();
    let respondents = view.respondents();
    if respondents < p {
        return Err(Error::SingularDesign(format!(
            "{respondents} respondents cannot identify {p} outcome coefficients"
        )));
    }
    let y = view.y_filled();
    let result = irls(design, &y, weights, link)?;
    let eta = design * &result.beta;
    Ok(OutcomeFit {
        kind,
        beta: result.beta.iter().copied().collect(),
        link,
        m_hat: eta.iter().map(|&e| link.inverse(e)).collect(),
        converged: true,
        iterations: result.iterations,
    })
}

/// Unweighted fit among respondents: `P_n[T X {Y − Φ(Xᵀβ)}] = 0`. With the
/// identity link this is OLS on the respondents.
pub fn fit_outcome_reg(view: &AnalysisView, link: Link) -> Result<OutcomeFit> {
    let w = respondent_weights(view);
    fit(OutcomeKind::Reg, view, &view.design_m, &w, link)
}

/// Respondent fit weighted by `1/π̂`: `P_n[T/π̂ {Y − Φ(Xᵀβ)} X] = 0`.
pub fn fit_outcome_wls(view: &AnalysisView, pi_hat: &[f64], link: Link) -> Result<OutcomeFit> {
    let w = inverse_weights(view, pi_hat)?;
    fit(OutcomeKind::Wls, view, &view.design_m, &w, link)
}

/// Unweighted respondent fit of `Φ(Xᵀβ + φ/π̂)`. Fitted values for every
/// unit use that unit's own `1/π̂`.
pub fn fit_outcome_ext_reg(view: &AnalysisView, pi_hat: &[f64], link: Link) -> Result<OutcomeFit> {
    check_len(view, pi_hat)?;
    let mut inv = Vec::with_capacity(pi_hat.len());
    for (i, &p) in pi_hat.iter().enumerate() {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidWeight { unit: i, value: p });
        }
        inv.push(1.0 / p);
    }
    let design = augment(&view.design_m, &inv);
    let w = respondent_weights(view);
    fit(OutcomeKind::ExtReg, view, &design, &w, link)
}

/// `1/π̂`-weighted respondent fit of `Φ(Xᵀβ + φ π̂)`.
pub fn fit_outcome_ipw_nr(view: &AnalysisView, pi_hat: &[f64], link: Link) -> Result<OutcomeFit> {
    check_len(view, pi_hat)?;
    if let Some((i, &p)) = pi_hat.iter().enumerate().find(|(_, &p)| !(p > 0.0 && p < 1.0)) {
        return Err(Error::InvalidWeight { unit: i, value: p });
    }
    let design = augment(&view.design_m, pi_hat);
    let w = inverse_weights(view, pi_hat)?;
    fit(OutcomeKind::DrIpwNr, view, &design, &w, link)
}

/// The estimating function of an outcome fit, evaluated from its fitted
/// values: `P_n[w T (Y − m̂) x̃]` with the kind's weight `w` and (possibly
/// augmented) covariate `x̃`. Zero at a solution.
pub fn outcome_score(view: &AnalysisView, pi_hat: Option<&[f64]>, fit: &OutcomeFit) -> Result<DVector<f64>> {
    let need_pi = || pi_hat.ok_or_else(|| Error::InvalidArgument("fitted propensities required".into()));
    let (design, weights) = match fit.kind {
        OutcomeKind::Reg => (view.design_m.clone(), respondent_weights(view)),
        OutcomeKind::Wls => (view.design_m.clone(), inverse_weights(view, need_pi()?)?),
        OutcomeKind::ExtReg => {
            let inv: Vec<f64> = need_pi()?.iter().map(|p| 1.0 / p).collect();
            (augment(&view.design_m, &inv), respondent_weights(view))
        }
        OutcomeKind::DrIpwNr => {
            let pi = need_pi()?;
            (augment(&view.design_m, pi), inverse_weights(view, pi)?)
        }
    };
    let n = view.n();
    let mut s = DVector::zeros(design.ncols());
    for i in 0..n {
        if let Some(y) = view.y_observed[i] {
            let r = weights[i] * (y - fit.m_hat[i]);
            for j in 0..design.ncols() {
                s[j] += design[(i, j)] * r;
            }
        }
    }
    Ok(s / n as f64)
}
