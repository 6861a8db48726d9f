use nalgebra::{DMatrix, DVector};

use super::Link;
use crate::error::{Error, Result};
use crate::linalg::least_squares;

pub const MAX_ITERATIONS: usize = 100;
/// Convergence threshold on the max-norm of the `P_n`-scaled score.
pub const SCORE_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-12;
/// `|η|` beyond which a logistic fitted probability is treated as 0 or 1.
const SEPARATION_ETA: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct IrlsFit {
    pub beta: DVector<f64>,
    pub iterations: usize,
    /// Max-norm of the `P_n`-scaled score at `beta`.
    pub score_max: f64,
}

/// `P_n[w x (y − Φ(xᵀβ))]`.
pub fn score(
    design: &DMatrix<f64>,
    response: &[f64],
    weights: &[f64],
    link: Link,
    beta: &DVector<f64>,
) -> DVector<f64> {
    let n = design.nrows();
    let eta = design * beta;
    let mut s = DVector::zeros(design.ncols());
    for i in 0..n {
        if weights[i] == 0.0 {
            continue;
        }
        let r = weights[i] * (response[i] - link.inverse(eta[i]));
        for j in 0..design.ncols() {
            s[j] += design[(i, j)] * r;
        }
    }
    s / n as f64
}

fn objective(
    design: &DMatrix<f64>,
    response: &[f64],
    weights: &[f64],
    link: Link,
    beta: &DVector<f64>,
) -> f64 {
    let eta = design * beta;
    let mut total = 0.0;
    for i in 0..design.nrows() {
        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        total += match link {
            Link::Identity => w * (response[i] - eta[i]).powi(2),
            // negative log-likelihood: softplus(η) − yη
            Link::Logit => {
                let e = eta[i];
                let softplus = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
                w * (softplus - response[i] * e)
            }
        };
    }
    total
}

/// Iteratively reweighted least squares for a canonical-link GLM with
/// prior weights, started at β = 0. Returns the coefficient vector solving
/// `Σ wᵢ xᵢ (yᵢ − Φ(xᵢᵀβ)) = 0`.
pub fn irls_fit(
    design: &DMatrix<f64>,
    response: &[f64],
    unit_weights: &[f64],
    link: Link,
) -> Result<DVector<f64>> {
    irls(design, response, unit_weights, link).map(|f| f.beta)
}

/// [`irls_fit`] with iteration count and final score.
pub fn irls(
    design: &DMatrix<f64>,
    response: &[f64],
    unit_weights: &[f64],
    link: Link,
) -> Result<IrlsFit> {
    let (n, p) = design.shape();
    if response.len() != n || unit_weights.len() != n {
        return Err(Error::InvalidArgument(format!(
            "design has {n} rows, response {}, weights {}",
            response.len(),
            unit_weights.len()
        )));
    }
    for (i, (&w, &y)) in unit_weights.iter().zip(response).enumerate() {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidArgument(format!("unit {i}: weight {w} is not a finite nonnegative number")));
        }
        if w > 0.0 && !y.is_finite() {
            return Err(Error::InvalidArgument(format!("unit {i}: response is not finite")));
        }
    }
    let positive = unit_weights.iter().filter(|&&w| w > 0.0).count();
    if positive < p {
        return Err(Error::SingularDesign(format!(
            "{positive} positively weighted rows cannot identify {p} coefficients"
        )));
    }

    let mut beta = DVector::zeros(p);
    let mut current = objective(design, response, unit_weights, link, &beta);
    for iter in 0..=MAX_ITERATIONS {
        let eta = design * &beta;
        let s = score(design, response, unit_weights, link, &beta);
        let score_max = s.amax();
        if iter > 0 && score_max <= SCORE_TOL {
            check_separation(&eta, unit_weights, link, iter)?;
            return Ok(IrlsFit { beta, iterations: iter, score_max });
        }
        if iter == MAX_ITERATIONS {
            break;
        }

        // Newton step as a weighted least-squares problem in the increment.
        let mut a = DMatrix::zeros(n, p);
        let mut b = DVector::zeros(n);
        for i in 0..n {
            let w = unit_weights[i];
            if w == 0.0 {
                continue;
            }
            let v = link.derivative(eta[i]);
            if v < 1e-300 {
                continue;
            }
            let row_scale = (w * v).sqrt();
            for j in 0..p {
                a[(i, j)] = design[(i, j)] * row_scale;
            }
            b[i] = (w / v).sqrt() * (response[i] - link.inverse(eta[i]));
        }
        let delta = least_squares(&a, &b)?;
        let step_small = delta.amax() <= STEP_TOL * (1.0 + beta.amax());

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &beta + &delta * scale;
            let value = objective(design, response, unit_weights, link, &cand);
            if value.is_finite() && value <= current + 1e-13 * current.abs() {
                beta = cand;
                current = value;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if step_small || !accepted {
            let s = score(design, response, unit_weights, link, &beta);
            check_separation(&(design * &beta), unit_weights, link, iter + 1)?;
            return Ok(IrlsFit { beta, iterations: iter + 1, score_max: s.amax() });
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        reason: "score did not reach tolerance".into(),
    })
}

fn check_separation(eta: &DVector<f64>, weights: &[f64], link: Link, iterations: usize) -> Result<()> {
    if link == Link::Logit
        && eta
            .iter()
            .zip(weights)
            .any(|(e, &w)| w > 0.0 && e.abs() > SEPARATION_ETA)
    {
        return Err(Error::NonConvergence {
            iterations,
            reason: "fitted probabilities numerically 0 or 1 (separation)".into(),
        });
    }
    Ok(())
}
