//! Extended logistic propensity `expit(α̂ᵀx + φ h(x))`, with φ chosen so
//! that the respondent-reweighted fitted regression values balance:
//! `P_n[{T/π̂_ext − 1}(m̂_REG − μ̂_OLS)] = 0`.

use super::{expit, OutcomeFit, PropensityFit, PropensityKind, WeightDiagnostics};
use crate::error::{Error, Result};

/// Largest half-width of the symmetric search bracket for φ.
pub const PHI_BRACKET_MAX: f64 = 50.0;
const G_TOL: f64 = 1e-10;
const WIDTH_TOL: f64 = 1e-12;

/// `g(φ) = P_n[{T / expit(η + φ h) − 1} (m̂ − μ̂)]` with `η` the base linear
/// predictor.
pub fn extension_equation(phi: f64, eta: &[f64], h: &[f64], m_reg: &[f64], mu: f64, t: &[u8]) -> f64 {
    let n = eta.len() as f64;
    let mut total = 0.0;
    for i in 0..eta.len() {
        let centred = m_reg[i] - mu;
        // T/expit(s) = T (1 + e^{-s})
        let ratio = if t[i] == 1 { 1.0 + (-(eta[i] + phi * h[i])).exp() } else { 0.0 };
        total += (ratio - 1.0) * centred;
    }
    total / n
}

/// Solve for φ̂ on top of a converged logistic fit. `h` defaults (when the
/// caller passes `None`) to `m̂_REG − μ̂_OLS`.
pub fn fit_extended_propensity(
    base: &PropensityFit,
    h: Option<&[f64]>,
    m_reg: &OutcomeFit,
    mu_ols: f64,
    t: &[u8],
) -> Result<PropensityFit> {
    if base.kind != PropensityKind::LogisticMle || !base.converged {
        return Err(Error::InvalidArgument(
            "extension requires a converged logistic maximum-likelihood fit".into(),
        ));
    }
    let n = base.linear_predictor.len();
    if m_reg.m_hat.len() != n || t.len() != n {
        return Err(Error::InvalidArgument("length mismatch in propensity extension".into()));
    }
    let default_h: Vec<f64>;
    let h = match h {
        Some(h) if h.len() == n => h,
        Some(_) => return Err(Error::InvalidArgument("h has the wrong length".into())),
        None => {
            default_h = m_reg.m_hat.iter().map(|m| m - mu_ols).collect();
            &default_h
        }
    };
    let eta = &base.linear_predictor;
    let g = |phi: f64| extension_equation(phi, eta, h, &m_reg.m_hat, mu_ols, t);

    let (phi, evaluations) = find_root(g)?;
    let linear_predictor: Vec<f64> = eta.iter().zip(h).map(|(e, hi)| e + phi * hi).collect();
    let pi_hat: Vec<f64> = linear_predictor.iter().map(|&s| expit(s)).collect();
    Ok(PropensityFit {
        kind: PropensityKind::LogisticExtended,
        alpha: base.alpha.clone(),
        phi: Some(phi),
        diagnostics: WeightDiagnostics::compute(&pi_hat, t),
        linear_predictor,
        pi_hat,
        converged: true,
        iterations: evaluations,
    })
}

/// Expanding symmetric bracket `[-a, a]`, `a = 1, 2, 4, …, 50`, then
/// bisection. Returns the root and the number of bisection steps.
fn find_root(g: impl Fn(f64) -> f64) -> Result<(f64, usize)> {
    let g0 = g(0.0);
    if g0 == 0.0 {
        return Ok((0.0, 0));
    }
    let mut half = 1.0;
    let (mut lo, mut hi, mut glo) = loop {
        let (gl, gh) = (g(-half), g(half));
        if gl.is_nan() || gh.is_nan() {
            return Err(Error::NoRoot { bracket: half });
        }
        // narrow to the half containing the sign change, using g(0)
        if gl.signum() != g0.signum() {
            break (-half, 0.0, gl);
        }
        if gh.signum() != g0.signum() {
            break (0.0, half, g0);
        }
        if half >= PHI_BRACKET_MAX {
            return Err(Error::NoRoot { bracket: PHI_BRACKET_MAX });
        }
        half = (half * 2.0).min(PHI_BRACKET_MAX);
    };
    let mut best = if glo.abs() < g0.abs() { (lo, glo) } else { (0.0, g0) };
    let mut steps = 0;
    while hi - lo > WIDTH_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        steps += 1;
        let gm = g(mid);
        if gm.abs() < best.1.abs() {
            best = (mid, gm);
        }
        if gm == 0.0 || gm.abs() <= G_TOL {
            return Ok((mid, steps));
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok((best.0, steps))
}
