//! Working-model fits: outcome regressions and propensity-score models.
//!
//! Every fit is a pure function of its inputs. Estimating equations are
//! written with the empirical mean `P_n` (sum over all `n` units divided by
//! `n`), and nonrespondents enter with weight zero.

mod extended;
mod inverse_linear;
mod irls;
mod outcome;
mod propensity;

use serde::{Deserialize, Serialize};

pub use extended::{extension_equation, fit_extended_propensity, PHI_BRACKET_MAX};
pub use inverse_linear::{fit_inverse_linear, InverseLinearMethod, CONSTRAINT_MARGIN};
pub use irls::{irls, irls_fit, score, IrlsFit, MAX_ITERATIONS, SCORE_TOL};
pub use outcome::{
    fit_outcome_ext_reg, fit_outcome_ipw_nr, fit_outcome_reg, fit_outcome_wls, outcome_score,
};
pub use propensity::fit_logistic_propensity;

/// How a propensity model is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropensityMethod {
    #[default]
    Logistic,
    InverseLinear(InverseLinearMethod),
}

/// Dispatch on [`PropensityMethod`].
pub fn fit_propensity(
    design: &nalgebra::DMatrix<f64>,
    t: &[u8],
    method: PropensityMethod,
) -> crate::Result<PropensityFit> {
    match method {
        PropensityMethod::Logistic => fit_logistic_propensity(design, t),
        PropensityMethod::InverseLinear(m) => fit_inverse_linear(design, t, m),
    }
}

/// Logistic function, evaluated without overflow for large `|u|`.
pub fn expit(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Canonical inverse link of an outcome model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    #[default]
    Identity,
    Logit,
}

impl Link {
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            Link::Identity => eta,
            Link::Logit => expit(eta),
        }
    }

    /// dμ/dη, which for canonical links is also the variance function.
    pub fn derivative(self, eta: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Logit => {
                let m = expit(eta);
                m * (1.0 - m)
            }
        }
    }
}

/// Which estimating equation produced an outcome fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OutcomeKind {
    /// Unweighted fit among respondents.
    Reg,
    /// Fit among respondents weighted by `1/π̂`.
    Wls,
    /// Unweighted fit with the extra covariate `1/π̂`.
    ExtReg,
    /// `1/π̂`-weighted fit with the extra covariate `π̂`.
    DrIpwNr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeFit {
    pub kind: OutcomeKind,
    /// Coefficients; for `ExtReg` and `DrIpwNr` the last entry is the
    /// coefficient of the appended propensity covariate.
    pub beta: Vec<f64>,
    pub link: Link,
    /// Fitted values for every unit, respondents and nonrespondents alike.
    pub m_hat: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl OutcomeFit {
    pub fn phi(&self) -> Option<f64> {
        match self.kind {
            OutcomeKind::ExtReg | OutcomeKind::DrIpwNr => self.beta.last().copied(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PropensityKind {
    LogisticMle,
    InvLinearMl,
    InvLinearMoment,
    InvLinearUnconstrained,
    LogisticExtended,
}

/// Spread of the fitted inverse weights. Extreme nonrespondent weights are
/// what make covariate-extended regressions extrapolate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightDiagnostics {
    pub max_inv_pi_respondents: f64,
    pub max_inv_pi_nonrespondents: f64,
    pub min_pi: f64,
    /// Sample variance (divisor n − 1) of `1/π̂` over all units.
    pub var_inv_pi: f64,
}

impl WeightDiagnostics {
    pub fn compute(pi_hat: &[f64], t: &[u8]) -> Self {
        let mut resp: f64 = 0.0;
        let mut nonresp: f64 = 0.0;
        let mut min_pi = f64::INFINITY;
        for (&p, &ti) in pi_hat.iter().zip(t) {
            let w = 1.0 / p;
            if ti == 1 {
                resp = resp.max(w);
            } else {
                nonresp = nonresp.max(w);
            }
            min_pi = min_pi.min(p);
        }
        let n = pi_hat.len() as f64;
        let mean = pi_hat.iter().map(|p| 1.0 / p).sum::<f64>() / n;
        let var_inv_pi = if pi_hat.len() > 1 {
            pi_hat.iter().map(|p| (1.0 / p - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            max_inv_pi_respondents: resp,
            max_inv_pi_nonrespondents: nonresp,
            min_pi,
            var_inv_pi,
        }
    }

    /// Ratio of the largest nonrespondent inverse weight to the largest
    /// respondent one. Values well above 1 signal extrapolation risk for
    /// the `1/π̂`-extended outcome regression.
    pub fn extrapolation_ratio(&self) -> f64 {
        self.max_inv_pi_nonrespondents / self.max_inv_pi_respondents
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropensityFit {
    pub kind: PropensityKind,
    pub alpha: Vec<f64>,
    /// Coefficient of the extension covariate `h` (extended logistic only).
    pub phi: Option<f64>,
    /// `αᵀx` (plus `φ·h` for the extended model) for every unit.
    pub linear_predictor: Vec<f64>,
    pub pi_hat: Vec<f64>,
    pub diagnostics: WeightDiagnostics,
    pub converged: bool,
    pub iterations: usize,
}
