//! Inverse-linear propensity model `π(x; α) = 1 / (αᵀx)`.
//!
//! Under this model the inverse weight `T/π = T αᵀx` is linear in α, which
//! is what makes the respondent OLS fit doubly robust.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{PropensityFit, PropensityKind, WeightDiagnostics};
use crate::error::{Error, Result};
use crate::linalg::{project_polyhedron, solve_square};

/// `δ` in the constraints `αᵀxᵢ ≥ 1 + δ` (likelihood) and `αᵀxᵢ ≥ δ` (moment).
pub const CONSTRAINT_MARGIN: f64 = 1e-6;
const MAX_PG_ITERATIONS: usize = 10_000;
const PG_STEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseLinearMethod {
    /// Bernoulli likelihood subject to `αᵀxᵢ ≥ 1 + δ`.
    Likelihood,
    /// `‖P_n[(T αᵀX − 1) X]‖²` subject to `αᵀxᵢ ≥ δ`.
    Moment,
    /// Exact solution of `P_n[T X Xᵀ] α = P_n[X]`, no sign constraint.
    UnconstrainedMoment,
}

pub fn fit_inverse_linear(
    design: &DMatrix<f64>,
    t: &[u8],
    method: InverseLinearMethod,
) -> Result<PropensityFit> {
    let (n, p) = design.shape();
    if n != t.len() || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "design has {n} rows for {} indicators",
            t.len()
        )));
    }
    let (moment_matrix, moment_target) = moments(design, t);
    let (alpha, kind, converged, iterations) = match method {
        InverseLinearMethod::UnconstrainedMoment => {
            let alpha = solve_square(&moment_matrix, &moment_target)?;
            (alpha, PropensityKind::InvLinearUnconstrained, true, 0)
        }
        InverseLinearMethod::Likelihood | InverseLinearMethod::Moment => {
            if !t.contains(&1) {
                return Err(Error::InvalidArgument("no respondents".into()));
            }
            let bound = match method {
                InverseLinearMethod::Likelihood => 1.0 + CONSTRAINT_MARGIN,
                _ => CONSTRAINT_MARGIN,
            };
            let problem = Problem::new(design, t, method, &moment_matrix, &moment_target);
            let (alpha, converged, iterations) = problem.solve(bound)?;
            let kind = match method {
                InverseLinearMethod::Likelihood => PropensityKind::InvLinearMl,
                _ => PropensityKind::InvLinearMoment,
            };
            (alpha, kind, converged, iterations)
        }
    };
    debug_assert_eq!(alpha.len(), p);
    let u = design * &alpha;
    let pi_hat: Vec<f64> = u.iter().map(|&v| 1.0 / v).collect();
    Ok(PropensityFit {
        kind,
        alpha: alpha.iter().copied().collect(),
        phi: None,
        diagnostics: WeightDiagnostics::compute(&pi_hat, t),
        linear_predictor: u.iter().copied().collect(),
        pi_hat,
        converged,
        iterations,
    })
}

/// `(P_n[T X Xᵀ], P_n[X])`.
fn moments(design: &DMatrix<f64>, t: &[u8]) -> (DMatrix<f64>, DVector<f64>) {
    let (n, p) = design.shape();
    let mut m = DMatrix::zeros(p, p);
    let mut c = DVector::zeros(p);
    for i in 0..n {
        let row = design.row(i);
        for a in 0..p {
            c[a] += row[a];
            if t[i] == 1 {
                for b in 0..p {
                    m[(a, b)] += row[a] * row[b];
                }
            }
        }
    }
    (m / n as f64, c / n as f64)
}

/// Constrained objective in column-equilibrated coordinates `γ = D α`.
struct Problem<'a> {
    scaled: DMatrix<f64>,
    scale: DVector<f64>,
    t: &'a [u8],
    method: InverseLinearMethod,
    moment_matrix: DMatrix<f64>,
    moment_target: DVector<f64>,
}

impl<'a> Problem<'a> {
    fn new(
        design: &DMatrix<f64>,
        t: &'a [u8],
        method: InverseLinearMethod,
        moment_matrix: &DMatrix<f64>,
        moment_target: &DVector<f64>,
    ) -> Self {
        let n = design.nrows() as f64;
        let scale = DVector::from_iterator(
            design.ncols(),
            design.column_iter().map(|c| {
                let rms = (c.norm_squared() / n).sqrt();
                if rms > 0.0 {
                    rms
                } else {
                    1.0
                }
            }),
        );
        let mut scaled = design.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col /= scale[j];
        }
        // α = D⁻¹γ, so M α − c = (M D⁻¹) γ − c.
        let mut mm = moment_matrix.clone();
        for (j, mut col) in mm.column_iter_mut().enumerate() {
            col /= scale[j];
        }
        Self {
            scaled,
            scale,
            t,
            method,
            moment_matrix: mm,
            moment_target: moment_target.clone(),
        }
    }

    fn value(&self, gamma: &DVector<f64>) -> f64 {
        match self.method {
            InverseLinearMethod::Likelihood => {
                let u = &self.scaled * gamma;
                let n = u.len() as f64;
                let mut f = 0.0;
                for (i, &ui) in u.iter().enumerate() {
                    if ui <= 0.0 || (self.t[i] == 0 && ui <= 1.0) {
                        return f64::INFINITY;
                    }
                    f += ui.ln();
                    if self.t[i] == 0 {
                        f -= (ui - 1.0).ln();
                    }
                }
                f / n
            }
            _ => (&self.moment_matrix * gamma - &self.moment_target).norm_squared(),
        }
    }

    fn gradient(&self, gamma: &DVector<f64>) -> DVector<f64> {
        match self.method {
            InverseLinearMethod::Likelihood => {
                let u = &self.scaled * gamma;
                let n = u.len() as f64;
                let coef = DVector::from_iterator(
                    u.len(),
                    u.iter().enumerate().map(|(i, &ui)| {
                        let mut c = 1.0 / ui;
                        if self.t[i] == 0 {
                            c -= 1.0 / (ui - 1.0);
                        }
                        c / n
                    }),
                );
                self.scaled.transpose() * coef
            }
            _ => {
                let r = &self.moment_matrix * gamma - &self.moment_target;
                self.moment_matrix.transpose() * r * 2.0
            }
        }
    }

    /// Projected gradient with backtracking. Returns `(α, converged, iterations)`.
    fn solve(&self, bound: f64) -> Result<(DVector<f64>, bool, usize)> {
        let n = self.scaled.nrows();
        let p = self.scaled.ncols();
        let b = DVector::from_element(n, bound);
        let project = |v: &DVector<f64>| project_polyhedron(&self.scaled, &b, v);

        // Start from the intercept-only fit 1/T̄ when an intercept is present,
        // then make it feasible.
        let tbar = self.t.iter().filter(|&&v| v == 1).count() as f64 / n as f64;
        let mut start = DVector::zeros(p);
        if self.scaled.column(0).iter().all(|&v| v == self.scaled[(0, 0)]) {
            let level = (1.0 / tbar).max(bound * 1.5 + 1e-3);
            start[0] = level / self.scaled[(0, 0)];
        }
        let mut gamma = project(&start)?;
        let mut f = self.value(&gamma);
        if !f.is_finite() {
            // constraint active at the margin; nudge inward along the start
            gamma = project(&(&gamma * 1.001))?;
            f = self.value(&gamma);
        }
        if !f.is_finite() {
            return Err(Error::Infeasible("no interior starting point".into()));
        }

        let mut step = 1.0;
        for it in 1..=MAX_PG_ITERATIONS {
            let g = self.gradient(&gamma);
            let mut accepted = None;
            for _ in 0..80 {
                let cand = project(&(&gamma - &g * step))?;
                let d = &cand - &gamma;
                let fc = self.value(&cand);
                if fc.is_finite() && fc <= f + g.dot(&d) + d.norm_squared() / (2.0 * step) {
                    accepted = Some((cand, fc, d));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, fc, d)) = accepted else {
                return Ok((self.unscale(&gamma), false, it));
            };
            gamma = cand;
            f = fc;
            if d.amax() <= PG_STEP_TOL * (1.0 + gamma.amax()) {
                return Ok((self.unscale(&gamma), true, it));
            }
            step *= 2.0;
        }
        Ok((self.unscale(&gamma), false, MAX_PG_ITERATIONS))
    }

    fn unscale(&self, gamma: &DVector<f64>) -> DVector<f64> {
        gamma.component_div(&self.scale)
    }
}
