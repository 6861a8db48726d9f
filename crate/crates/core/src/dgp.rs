//! Kang–Schafer benchmark data-generating process.
//!
//! Four latent standard normals `Z` drive both the outcome
//! `Y = intercept + slope * (w · Z) + eps` and the response propensity
//! `expit(a0 + a · Z)`. The analyst sees `Z` only in the "correct" view; the
//! "wrong" view replaces it by the nonlinear transform `X = f(Z)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{with_intercept, AnalysisView, Dataset};
use crate::error::{Error, Result};
use crate::linmod::expit;
use crate::rng::Stream;

/// Parameters of the benchmark distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpConfig {
    pub intercept: f64,
    pub slope: f64,
    pub z_star_weights: [f64; 4],
    /// Intercept followed by the four latent-covariate coefficients.
    pub propensity_coefficients: [f64; 5],
    pub noise_sd: f64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            intercept: 210.0,
            slope: 13.7,
            z_star_weights: [2.0, 1.0, 1.0, 1.0],
            propensity_coefficients: [0.0, -1.0, 0.5, -0.25, -0.1],
            noise_sd: 1.0,
        }
    }
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.intercept, self.slope, self.noise_sd]
            .iter()
            .chain(&self.z_star_weights)
            .chain(&self.propensity_coefficients)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("dgp parameters must be finite".into()));
        }
        if self.noise_sd <= 0.0 {
            return Err(Error::InvalidArgument("noise_sd must be positive".into()));
        }
        Ok(())
    }

    /// Var(Y) implied by the configuration.
    pub fn outcome_variance(&self) -> f64 {
        let w2: f64 = self.z_star_weights.iter().map(|w| w * w).sum();
        self.slope * self.slope * w2 + self.noise_sd * self.noise_sd
    }
}

/// One complete simulated draw. `y` is fully observed; masking happens in
/// [`FullSample::view`].
#[derive(Debug, Clone, PartialEq)]
pub struct FullSample {
    pub z: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub pi_true: Vec<f64>,
    pub t: Vec<u8>,
    pub y: Vec<f64>,
}

/// Misspecified covariates seen by the analyst in the "wrong" view.
pub fn observed_covariates(z: [f64; 4]) -> [f64; 4] {
    let [z1, z2, z3, z4] = z;
    [
        (z1 / 2.0).exp(),
        z2 / (1.0 + z1.exp()) + 10.0,
        (z1 * z3 / 25.0 + 0.6).powi(3),
        (z2 + z4 + 20.0).powi(2),
    ]
}

/// Draw `n` units. Each unit consumes, in order, four normals for `Z`, one
/// normal for the outcome noise and one uniform for the response indicator.
pub fn generate_sample(n: usize, seed: u64, cfg: &DgpConfig) -> Result<FullSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    cfg.validate()?;
    let mut stream = Stream::new(seed);
    let mut z = DMatrix::zeros(n, 4);
    let mut x = DMatrix::zeros(n, 4);
    let mut pi_true = Vec::with_capacity(n);
    let mut t = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let a = &cfg.propensity_coefficients;
    for i in 0..n {
        let zi = [
            stream.standard_normal(),
            stream.standard_normal(),
            stream.standard_normal(),
            stream.standard_normal(),
        ];
        let eps = stream.standard_normal();
        let u = stream.uniform();

        let z_star: f64 = cfg.z_star_weights.iter().zip(&zi).map(|(w, v)| w * v).sum();
        let eta = a[0] + a[1] * zi[0] + a[2] * zi[1] + a[3] * zi[2] + a[4] * zi[3];
        let p = expit(eta);
        let xi = observed_covariates(zi);
        for j in 0..4 {
            z[(i, j)] = zi[j];
            x[(i, j)] = xi[j];
        }
        pi_true.push(p);
        t.push(u8::from(u < p));
        y.push(cfg.intercept + cfg.slope * z_star + cfg.noise_sd * eps);
    }
    Ok(FullSample {
        z,
        x,
        pi_true,
        t,
        y,
    })
}

/// Swap respondents and nonrespondents: `T -> 1 - T`, `pi -> 1 - pi`.
pub fn reverse_roles(s: &FullSample) -> FullSample {
    FullSample {
        z: s.z.clone(),
        x: s.x.clone(),
        pi_true: s.pi_true.iter().map(|p| 1.0 - p).collect(),
        t: s.t.iter().map(|t| 1 - t).collect(),
        y: s.y.clone(),
    }
}

impl FullSample {
    pub fn n(&self) -> usize {
        self.t.len()
    }

    /// Analysis view for one model-specification scenario: correct models
    /// use `[1, Z]`, wrong ones `[1, X]`.
    pub fn view(&self, pi_model_correct: bool, m_model_correct: bool) -> AnalysisView {
        let all = [0, 1, 2, 3];
        let pick = |correct: bool| {
            let src = if correct { &self.z } else { &self.x };
            with_intercept(src, &all).expect("four covariate columns")
        };
        AnalysisView::new(pick(pi_model_correct), pick(m_model_correct), self.t.clone(), self.masked_y())
            .expect("generated samples are well formed")
    }

    pub fn masked_y(&self) -> Vec<Option<f64>> {
        self.t
            .iter()
            .zip(&self.y)
            .map(|(&t, &y)| (t == 1).then_some(y))
            .collect()
    }

    /// Observed-data dataset with covariates `z1..z4, x1..x4`.
    pub fn to_dataset(&self) -> Dataset {
        let n = self.n();
        let cov = DMatrix::from_fn(n, 8, |i, j| if j < 4 { self.z[(i, j)] } else { self.x[(i, j - 4)] });
        let names = ["z1", "z2", "z3", "z4", "x1", "x2", "x3", "x4"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        Dataset::new(self.t.clone(), self.masked_y(), cov, names).expect("consistent lengths")
    }
}

/// Convenience wrapper matching the free-function form of [`FullSample::view`].
pub fn make_view(s: &FullSample, pi_model_correct: bool, m_model_correct: bool) -> AnalysisView {
    s.view(pi_model_correct, m_model_correct)
}
