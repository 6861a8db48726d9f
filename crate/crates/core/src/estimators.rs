//! Point estimators of the outcome mean.
//!
//! All functions take the full unit vectors; outcome entries of
//! nonrespondents (`t[i] == 0`) are never read, so they may hold any value.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::AnalysisView;
use crate::error::{Error, Result};
use crate::linmod::{
    fit_extended_propensity, fit_inverse_linear, fit_outcome_ext_reg, fit_outcome_ipw_nr,
    fit_outcome_reg, fit_outcome_wls, fit_propensity, InverseLinearMethod, Link, OutcomeFit,
    PropensityFit, PropensityMethod, WeightDiagnostics,
};
use crate::rng::Stream;

/// Names used in every CSV and JSON output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EstimatorName {
    #[serde(rename = "OLS")]
    Ols,
    #[serde(rename = "HT")]
    Ht,
    #[serde(rename = "IPW_POP")]
    IpwPop,
    #[serde(rename = "DR_REG")]
    DrReg,
    #[serde(rename = "DR_WLS")]
    DrWls,
    #[serde(rename = "DR_IPW_NR")]
    DrIpwNr,
    #[serde(rename = "DR_EXT_REG")]
    DrExtReg,
    #[serde(rename = "B_DR_REG")]
    BDrReg,
    #[serde(rename = "B_DR_EXT")]
    BDrExt,
    #[serde(rename = "FULL")]
    Full,
}

impl EstimatorName {
    pub const ALL: [EstimatorName; 10] = [
        EstimatorName::Ols,
        EstimatorName::Ht,
        EstimatorName::IpwPop,
        EstimatorName::DrReg,
        EstimatorName::DrWls,
        EstimatorName::DrIpwNr,
        EstimatorName::DrExtReg,
        EstimatorName::BDrReg,
        EstimatorName::BDrExt,
        EstimatorName::Full,
    ];

    /// The eight estimators tabulated for the benchmark experiments.
    pub const TABLE: [EstimatorName; 8] = [
        EstimatorName::Ols,
        EstimatorName::Ht,
        EstimatorName::IpwPop,
        EstimatorName::DrReg,
        EstimatorName::DrWls,
        EstimatorName::DrIpwNr,
        EstimatorName::BDrReg,
        EstimatorName::BDrExt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorName::Ols => "OLS",
            EstimatorName::Ht => "HT",
            EstimatorName::IpwPop => "IPW_POP",
            EstimatorName::DrReg => "DR_REG",
            EstimatorName::DrWls => "DR_WLS",
            EstimatorName::DrIpwNr => "DR_IPW_NR",
            EstimatorName::DrExtReg => "DR_EXT_REG",
            EstimatorName::BDrReg => "B_DR_REG",
            EstimatorName::BDrExt => "B_DR_EXT",
            EstimatorName::Full => "FULL",
        }
    }

    /// Doubly-robust in the usual (logistic propensity, linear outcome) sense.
    pub fn is_dr(self) -> bool {
        !matches!(
            self,
            EstimatorName::Ols | EstimatorName::Ht | EstimatorName::IpwPop | EstimatorName::Full
        )
    }
}

impl fmt::Display for EstimatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorName::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown estimator {s:?}")))
    }
}

fn check_inputs(pi_hat: &[f64], t: &[u8], y: &[f64]) -> Result<()> {
    if pi_hat.len() != t.len() || y.len() != t.len() {
        return Err(Error::InvalidArgument("estimator inputs differ in length".into()));
    }
    if t.is_empty() {
        return Err(Error::InvalidArgument("no units".into()));
    }
    for (i, (&p, &ti)) in pi_hat.iter().zip(t).enumerate() {
        if ti == 1 && !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidWeight { unit: i, value: p });
        }
    }
    Ok(())
}

/// `(P_n[T Y/π̂], P_n[T/π̂])`.
fn weighted_sums(pi_hat: &[f64], t: &[u8], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let (mut ty, mut tw) = (0.0, 0.0);
    for i in 0..t.len() {
        if t[i] == 1 {
            ty += y[i] / pi_hat[i];
            tw += 1.0 / pi_hat[i];
        }
    }
    (ty / n, tw / n)
}

/// Horvitz–Thompson: `P_n[T Y / π̂]`.
pub fn mu_ht(pi_hat: &[f64], t: &[u8], y: &[f64]) -> Result<f64> {
    check_inputs(pi_hat, t, y)?;
    Ok(weighted_sums(pi_hat, t, y).0)
}

/// Self-normalised IPW: `P_n[T Y/π̂] / P_n[T/π̂]`, a convex combination of
/// the observed outcomes.
pub fn mu_ipw_pop(pi_hat: &[f64], t: &[u8], y: &[f64]) -> Result<f64> {
    check_inputs(pi_hat, t, y)?;
    if !t.contains(&1) {
        return Err(Error::Undefined("no respondents".into()));
    }
    // Normalised weights keep the result inside the observed range even
    // when one weight dominates.
    let wsum: f64 = t.iter().zip(pi_hat).filter(|(&ti, _)| ti == 1).map(|(_, p)| 1.0 / p).sum();
    let mut total = 0.0;
    for i in 0..t.len() {
        if t[i] == 1 {
            total += (1.0 / pi_hat[i] / wsum) * y[i];
        }
    }
    Ok(total)
}

fn residual_parts(pi_hat: &[f64], m_hat: &[f64], t: &[u8], y: &[f64]) -> Result<(f64, f64, f64)> {
    check_inputs(pi_hat, t, y)?;
    if m_hat.len() != t.len() {
        return Err(Error::InvalidArgument("m_hat has the wrong length".into()));
    }
    let n = t.len() as f64;
    let mean_m = m_hat.iter().sum::<f64>() / n;
    let (mut corr, mut tw) = (0.0, 0.0);
    for i in 0..t.len() {
        if t[i] == 1 {
            corr += (y[i] - m_hat[i]) / pi_hat[i];
            tw += 1.0 / pi_hat[i];
        }
    }
    Ok((mean_m, corr / n, tw / n))
}

/// Augmented IPW: `P_n[m̂] + P_n[T (Y − m̂)/π̂]`.
pub fn mu_aipw(pi_hat: &[f64], m_hat: &[f64], t: &[u8], y: &[f64]) -> Result<f64> {
    let (mean_m, corr, _) = residual_parts(pi_hat, m_hat, t, y)?;
    Ok(mean_m + corr)
}

/// Bounded AIPW: the residual correction divided by `P_n[T/π̂]`.
pub fn mu_b_dr(pi_hat: &[f64], m_hat: &[f64], t: &[u8], y: &[f64]) -> Result<f64> {
    let (mean_m, corr, tw) = residual_parts(pi_hat, m_hat, t, y)?;
    if !(tw > 0.0) {
        return Err(Error::Undefined("no respondents carry weight".into()));
    }
    Ok(mean_m + corr / tw)
}

/// Regression form `P_n[m̂]`.
pub fn mu_from_regression(m_hat: &[f64]) -> f64 {
    m_hat.iter().sum::<f64>() / m_hat.len() as f64
}

/// Mean of the complete outcome vector (simulation only).
pub fn mu_full(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

/// Per-estimator status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateFlag {
    Ok,
    OutOfObservedRange,
    FitFailed,
}

/// Estimates for one dataset.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EstimateSet {
    pub values: BTreeMap<EstimatorName, f64>,
    pub flags: BTreeMap<EstimatorName, EstimateFlag>,
    /// Failure reason for every `FitFailed` entry.
    pub errors: BTreeMap<EstimatorName, String>,
    /// Weights of the base propensity fit, when it succeeded.
    pub diagnostics: Option<WeightDiagnostics>,
    /// Weights of the extended propensity fit, when it was needed and succeeded.
    pub extended_diagnostics: Option<WeightDiagnostics>,
}

impl EstimateSet {
    pub fn get(&self, name: EstimatorName) -> Option<f64> {
        self.values.get(&name).copied()
    }
}

/// Model choices for [`estimate_all`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimateOptions {
    pub propensity: PropensityMethod,
    pub link: Link,
}

/// Lazily fitted models shared by the estimators of one dataset.
struct Pipeline<'a> {
    view: &'a AnalysisView,
    opts: EstimateOptions,
    y: Vec<f64>,
    propensity: Option<Result<PropensityFit>>,
    reg: Option<Result<OutcomeFit>>,
    wls: Option<Result<OutcomeFit>>,
    ipw_nr: Option<Result<OutcomeFit>>,
    ext_reg: Option<Result<OutcomeFit>>,
    extended: Option<Result<PropensityFit>>,
}

impl<'a> Pipeline<'a> {
    fn new(view: &'a AnalysisView, opts: EstimateOptions) -> Self {
        Self {
            view,
            opts,
            y: view.y_filled(),
            propensity: None,
            reg: None,
            wls: None,
            ipw_nr: None,
            ext_reg: None,
            extended: None,
        }
    }

    fn propensity(&mut self) -> Result<&PropensityFit> {
        let (view, method) = (self.view, self.opts.propensity);
        self.propensity
            .get_or_insert_with(|| fit_propensity(&view.design_pi, &view.t, method))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn pi_hat(&mut self) -> Result<Vec<f64>> {
        Ok(self.propensity()?.pi_hat.clone())
    }

    fn reg(&mut self) -> Result<&OutcomeFit> {
        let (view, link) = (self.view, self.opts.link);
        self.reg
            .get_or_insert_with(|| fit_outcome_reg(view, link))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn outcome(&mut self, which: EstimatorName) -> Result<OutcomeFit> {
        let pi = self.pi_hat()?;
        let (view, link) = (self.view, self.opts.link);
        let slot = match which {
            EstimatorName::DrWls => &mut self.wls,
            EstimatorName::DrIpwNr => &mut self.ipw_nr,
            EstimatorName::DrExtReg => &mut self.ext_reg,
            _ => unreachable!("only weighted outcome fits are cached here"),
        };
        slot.get_or_insert_with(|| match which {
            EstimatorName::DrWls => fit_outcome_wls(view, &pi, link),
            EstimatorName::DrIpwNr => fit_outcome_ipw_nr(view, &pi, link),
            _ => fit_outcome_ext_reg(view, &pi, link),
        })
        .clone()
    }

    fn extended(&mut self) -> Result<PropensityFit> {
        if let Some(done) = &self.extended {
            return done.clone();
        }
        let result = (|| {
            let base = self.propensity()?.clone();
            let reg = self.reg()?.clone();
            let mu_ols = mu_from_regression(&reg.m_hat);
            fit_extended_propensity(&base, None, &reg, mu_ols, &self.view.t)
        })();
        self.extended = Some(result.clone());
        result
    }

    fn evaluate(&mut self, name: EstimatorName, full_y: Option<&[f64]>) -> Result<f64> {
        let t = &self.view.t;
        match name {
            EstimatorName::Ols => Ok(mu_from_regression(&self.reg()?.m_hat)),
            EstimatorName::Ht => mu_ht(&self.pi_hat()?, t, &self.y),
            EstimatorName::IpwPop => mu_ipw_pop(&self.pi_hat()?, t, &self.y),
            EstimatorName::DrReg => {
                let pi = self.pi_hat()?;
                let m = self.reg()?.m_hat.clone();
                mu_aipw(&pi, &m, &self.view.t, &self.y)
            }
            EstimatorName::DrWls | EstimatorName::DrIpwNr | EstimatorName::DrExtReg => {
                let pi = self.pi_hat()?;
                let fit = self.outcome(name)?;
                mu_aipw(&pi, &fit.m_hat, &self.view.t, &self.y)
            }
            EstimatorName::BDrReg => {
                let pi = self.pi_hat()?;
                let m = self.reg()?.m_hat.clone();
                mu_b_dr(&pi, &m, &self.view.t, &self.y)
            }
            EstimatorName::BDrExt => {
                let ext = self.extended()?;
                let m = self.reg()?.m_hat.clone();
                mu_b_dr(&ext.pi_hat, &m, &self.view.t, &self.y)
            }
            EstimatorName::Full => full_y
                .map(mu_full)
                .ok_or_else(|| Error::Undefined("complete outcomes unavailable".into())),
        }
    }
}

/// Fit the working models once and evaluate every requested estimator.
///
/// A failed fit flags only the estimators that depend on it. `full_y` is
/// the complete outcome vector, available in simulation only.
pub fn estimate_all(
    view: &AnalysisView,
    full_y: Option<&[f64]>,
    which: &[EstimatorName],
    opts: EstimateOptions,
) -> EstimateSet {
    let mut pipe = Pipeline::new(view, opts);
    let (lo, hi) = view
        .y_observed
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    let mut set = EstimateSet::default();
    for &name in which {
        match pipe.evaluate(name, full_y) {
            Ok(v) => {
                let in_range = v >= lo && v <= hi;
                let flag = if in_range || name == EstimatorName::Full {
                    EstimateFlag::Ok
                } else {
                    EstimateFlag::OutOfObservedRange
                };
                set.values.insert(name, v);
                set.flags.insert(name, flag);
            }
            Err(e) => {
                set.flags.insert(name, EstimateFlag::FitFailed);
                set.errors.insert(name, e.to_string());
            }
        }
    }
    if let Some(Ok(p)) = &pipe.propensity {
        set.diagnostics = Some(p.diagnostics);
    }
    if let Some(Ok(p)) = &pipe.extended {
        set.extended_diagnostics = Some(p.diagnostics);
    }
    set
}

/// Outcome of [`mu_ols_identities_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub mu_ols: f64,
    /// `P_n[T α̂ᵀX Y] / P_n[T α̂ᵀX]` with α̂ the unconstrained inverse-linear fit.
    pub bounded_ht: f64,
    pub alpha: Vec<f64>,
    /// `P_n[(αᵀX)(T)(Y − m̂_REG)]` for α = 0 and three random vectors.
    pub weighted_residuals: Vec<f64>,
    pub passed: bool,
}

pub const IDENTITY_TOL: f64 = 1e-8;

/// Check that the respondent OLS mean is simultaneously the AIPW estimator
/// under any inverse-linear propensity and the self-normalised IPW
/// estimator under the unconstrained inverse-linear moment fit. Both
/// propensity quantities live in the outcome design's span. An error means
/// the check was skipped.
pub fn mu_ols_identities_check(view: &AnalysisView, seed: u64) -> Result<IdentityReport> {
    let reg = fit_outcome_reg(view, Link::Identity)?;
    let mu_ols = mu_from_regression(&reg.m_hat);
    let design = &view.design_m;
    let inv = fit_inverse_linear(design, &view.t, InverseLinearMethod::UnconstrainedMoment)?;
    let n = view.n() as f64;

    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..view.n() {
        if let Some(y) = view.y_observed[i] {
            num += inv.linear_predictor[i] * y;
            den += inv.linear_predictor[i];
        }
    }
    let bounded_ht = num / den;

    let p = design.ncols();
    let mut stream = Stream::new(seed);
    let mut alphas = vec![vec![0.0; p]];
    for _ in 0..3 {
        alphas.push((0..p).map(|_| stream.standard_normal()).collect());
    }
    let weighted_residuals: Vec<f64> = alphas
        .iter()
        .map(|a| {
            let mut s = 0.0;
            for i in 0..view.n() {
                if let Some(y) = view.y_observed[i] {
                    let u: f64 = (0..p).map(|j| a[j] * design[(i, j)]).sum();
                    s += u * (y - reg.m_hat[i]);
                }
            }
            s / n
        })
        .collect();
    let passed = (mu_ols - bounded_ht).abs() <= IDENTITY_TOL
        && weighted_residuals.iter().all(|r| r.abs() <= IDENTITY_TOL);
    Ok(IdentityReport {
        mu_ols,
        bounded_ht,
        alpha: inv.alpha,
        weighted_residuals,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    const T: [u8; 4] = [1, 1, 1, 0];

    fn toy_view(y: [f64; 3]) -> AnalysisView {
        let d = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        AnalysisView::new(d.clone(), d, T.to_vec(), vec![Some(y[0]), Some(y[1]), Some(y[2]), None]).unwrap()
    }

    #[test]
    fn ht_toy() {
        let v = mu_ht(&[0.25, 0.5, 1.0, 0.5], &T, &[1.0, 2.0, 4.0, f64::NAN]).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
    }

    #[test]
    fn ht_without_missingness_is_sample_mean() {
        let y = [1.0, 2.0, 3.0, 10.0];
        assert_eq!(mu_ht(&[1.0; 4], &[1; 4], &y).unwrap(), 4.0);
    }

    #[test]
    fn ht_exceeds_seventeen_with_one_tiny_propensity() {
        let n = 1000;
        let mut pi = vec![0.5; n];
        let mut t = vec![0u8; n];
        let mut y = vec![0.0; n];
        pi[0] = 1.0 / 17_001.0;
        t[0] = 1;
        y[0] = 1.0;
        assert!(mu_ht(&pi, &t, &y).unwrap() > 17.0);
    }

    #[test]
    fn ht_rejects_nonpositive_respondent_propensity() {
        assert!(matches!(
            mu_ht(&[0.5, 0.0, 1.0, 0.5], &T, &[1.0, 2.0, 4.0, 0.0]),
            Err(Error::InvalidWeight { unit: 1, .. })
        ));
    }

    #[test]
    fn ipw_pop_toy() {
        let v = mu_ipw_pop(&[0.8, 0.5, 0.5, 0.4], &T, &[1.0, 2.0, 3.0, 0.0]).unwrap();
        assert!((v - 15.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn ipw_pop_constant_weights_is_respondent_mean() {
        let v = mu_ipw_pop(&[0.3, 0.3, 0.3, 0.9], &T, &[1.0, 2.0, 4.0, 100.0]).unwrap();
        assert!((v - 7.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn ipw_pop_stays_in_range_with_tiny_propensity() {
        let v = mu_ipw_pop(&[1e-6, 0.5, 0.5, 0.5], &T, &[1.0, 2.0, 3.0, 0.0]).unwrap();
        assert!((1.0..=3.0).contains(&v));
    }

    #[test]
    fn ipw_pop_needs_respondents() {
        assert!(matches!(
            mu_ipw_pop(&[0.5; 2], &[0, 0], &[0.0; 2]),
            Err(Error::Undefined(_))
        ));
    }

    const M_REG: [f64; 4] = [5.0 / 6.0, 7.0 / 3.0, 23.0 / 6.0, 16.0 / 3.0];
    const PI: [f64; 4] = [0.25, 0.5, 1.0, 0.5];
    const Y: [f64; 4] = [1.0, 2.0, 4.0, 0.0];

    #[test]
    fn aipw_toy() {
        let v = mu_aipw(&PI, &M_REG, &T, &Y).unwrap();
        assert!((v - 25.0 / 8.0).abs() < 1e-14);
    }

    #[test]
    fn aipw_with_zero_regression_is_ht() {
        let a = mu_aipw(&PI, &[0.0; 4], &T, &Y).unwrap();
        assert_eq!(a, mu_ht(&PI, &T, &Y).unwrap());
    }

    #[test]
    fn aipw_zero_residuals_is_regression_mean() {
        let m = [1.0, 2.0, 4.0, 7.0];
        assert_eq!(mu_aipw(&PI, &m, &T, &Y).unwrap(), mu_from_regression(&m));
        assert_eq!(mu_b_dr(&PI, &m, &T, &Y).unwrap(), mu_from_regression(&m));
    }

    #[test]
    fn b_dr_toy() {
        let v = mu_b_dr(&PI, &M_REG, &T, &Y).unwrap();
        assert!((v - 87.0 / 28.0).abs() < 1e-14);
    }

    #[test]
    fn b_dr_equals_aipw_when_weights_average_to_one() {
        // P_n[T/π̂] = (1 + 1 + 2)/4 = 1
        let pi = [1.0, 1.0, 0.5, 0.2];
        let a = mu_aipw(&pi, &M_REG, &T, &Y).unwrap();
        let b = mu_b_dr(&pi, &M_REG, &T, &Y).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn regression_means() {
        assert_eq!(mu_from_regression(&[1.0, 2.0, 3.0, 4.0]), 2.5);
        let m = [12.0 / 13.0, 30.0 / 13.0, 48.0 / 13.0, 66.0 / 13.0];
        assert!((mu_from_regression(&m) - 3.0).abs() < 1e-14);
        assert_eq!(mu_from_regression(&[7.5; 5]), 7.5);
        // WLS fit makes the AIPW correction vanish
        assert!((mu_aipw(&PI, &m, &T, &Y).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn full_mean_and_reduction() {
        assert_eq!(mu_full(&[1.0, 2.0, 3.0, 10.0]), 4.0);
        let y = [1.0, 2.0, 3.0, 10.0];
        let a = mu_aipw(&[1.0; 4], &[9.0, -2.0, 0.5, 3.0], &[1; 4], &y).unwrap();
        assert!((a - mu_full(&y)).abs() < 1e-14);
    }

    #[test]
    fn names_round_trip() {
        for e in EstimatorName::ALL {
            assert_eq!(e.as_str().parse::<EstimatorName>().unwrap(), e);
            assert_eq!(serde_json::to_string(&e).unwrap(), format!("\"{}\"", e.as_str()));
        }
        assert!("BOGUS".parse::<EstimatorName>().is_err());
    }

    #[test]
    fn identity_check_on_toy() {
        let r = mu_ols_identities_check(&toy_view([1.0, 2.0, 4.0]), 1).unwrap();
        assert!((r.alpha[0] - 1.0 / 3.0).abs() < 1e-12 && (r.alpha[1] - 1.0).abs() < 1e-12);
        assert!((r.mu_ols - 37.0 / 12.0).abs() < 1e-12);
        assert!((r.bounded_ht - 37.0 / 12.0).abs() < 1e-12);
        assert_eq!(r.weighted_residuals[0], 0.0);
        assert!(r.passed);
    }

    #[test]
    fn estimate_all_on_exact_fit_data() {
        // respondents lie on y = 1 + x, so every DR estimator equals OLS
        let x = [0.0, 1.0, 2.0, 3.0, 0.5, 2.5, 1.5, 4.0];
        let t = [1, 1, 0, 1, 0, 1, 1, 0];
        let d = DMatrix::from_fn(8, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        let y: Vec<Option<f64>> = (0..8).map(|i| (t[i] == 1).then(|| 1.0 + x[i])).collect();
        let view = AnalysisView::new(d.clone(), d, t.to_vec(), y).unwrap();
        let set = estimate_all(&view, None, &EstimatorName::ALL, EstimateOptions::default());
        let ols = set.get(EstimatorName::Ols).unwrap();
        assert!((ols - (1.0 + x.iter().sum::<f64>() / 8.0)).abs() < 1e-12);
        for e in [
            EstimatorName::DrReg,
            EstimatorName::DrWls,
            EstimatorName::DrIpwNr,
            EstimatorName::DrExtReg,
            EstimatorName::BDrReg,
            EstimatorName::BDrExt,
        ] {
            match set.get(e) {
                Some(v) => assert!((v - ols).abs() < 1e-9, "{e}: {v} vs {ols}"),
                None => panic!("{e} failed: {:?}", set.errors.get(&e)),
            }
        }
        assert_eq!(set.flags[&EstimatorName::Full], EstimateFlag::FitFailed);
        assert!(set.diagnostics.is_some());
    }

    #[test]
    fn failure_isolated_to_dependent_estimators() {
        // perfectly separated response: the logistic fit fails but OLS works
        let x = [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];
        let t = [0, 0, 0, 0, 1, 1, 1, 1];
        let d = DMatrix::from_fn(8, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        let y: Vec<Option<f64>> = (0..8).map(|i| (t[i] == 1).then(|| 2.0 * x[i] + 0.1 * i as f64)).collect();
        let view = AnalysisView::new(d.clone(), d, t.to_vec(), y).unwrap();
        let set = estimate_all(&view, None, &EstimatorName::TABLE, EstimateOptions::default());
        assert!(set.get(EstimatorName::Ols).is_some());
        for e in &EstimatorName::TABLE[1..] {
            assert_eq!(set.flags[e], EstimateFlag::FitFailed, "{e}");
            assert!(set.errors.contains_key(e));
        }
    }
}
