//! Monte Carlo harness: replicated estimation on simulated samples,
//! per-estimator summaries and kernel density series.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{generate_sample, reverse_roles, DgpConfig};
use crate::error::{Error, Result};
use crate::estimators::{estimate_all, EstimateOptions, EstimatorName};
use crate::rng::{derive_seed, PRNG_NAME, SEED_DERIVATION};

/// One cell of the simulation grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub reps: usize,
    pub pi_model_correct: bool,
    pub m_model_correct: bool,
    /// Analyse `1 - T` as the response indicator.
    pub reverse: bool,
    pub base_seed: u64,
    pub estimators: Vec<EstimatorName>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument("n must be at least 2".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidArgument("no estimators requested".into()));
        }
        Ok(())
    }

    /// `both_right`, `pi_right_m_wrong`, `pi_wrong_m_right` or `both_wrong`.
    pub fn label(&self) -> &'static str {
        scenario_label(self.pi_model_correct, self.m_model_correct)
    }
}

pub fn scenario_label(pi_correct: bool, m_correct: bool) -> &'static str {
    match (pi_correct, m_correct) {
        (true, true) => "both_right",
        (true, false) => "pi_right_m_wrong",
        (false, true) => "pi_wrong_m_right",
        (false, false) => "both_wrong",
    }
}

/// Quantile levels reported in every summary.
pub const QUANTILE_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99];

/// Summary of one estimator's sampling distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub estimator: EstimatorName,
    pub bias: f64,
    /// Divisor `R - 1`; NaN when fewer than two values succeeded.
    pub variance: f64,
    /// Divisor `R`.
    pub mse: f64,
    pub skewness: f64,
    /// At [`QUANTILE_LEVELS`].
    pub quantiles: [f64; 7],
    pub min: f64,
    pub max: f64,
    pub successes: usize,
    pub failures: usize,
}

impl SummaryRow {
    pub fn variance_defined(&self) -> bool {
        self.successes >= 2
    }

    fn all_failed(estimator: EstimatorName, failures: usize) -> Self {
        Self {
            estimator,
            bias: f64::NAN,
            variance: f64::NAN,
            mse: f64::NAN,
            skewness: f64::NAN,
            quantiles: [f64::NAN; 7],
            min: f64::NAN,
            max: f64::NAN,
            successes: 0,
            failures,
        }
    }
}

/// Type-7 quantile (linear interpolation between order statistics) of
/// sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Standardised third central moment `m3 / m2^{3/2}`; zero for constant data.
pub fn skewness(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 == 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

/// Bias, variance, MSE, skewness and quantiles of `values` around `mu_true`.
pub fn summarize(estimator: EstimatorName, values: &[f64], mu_true: f64) -> Result<SummaryRow> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no values to summarise".into()));
    }
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let variance = if values.len() >= 2 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0)
    } else {
        f64::NAN
    };
    let mse = values.iter().map(|v| (v - mu_true).powi(2)).sum::<f64>() / r;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantiles = QUANTILE_LEVELS.map(|p| quantile_sorted(&sorted, p));
    Ok(SummaryRow {
        estimator,
        bias: mean - mu_true,
        variance,
        mse,
        skewness: skewness(values),
        quantiles,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        successes: values.len(),
        failures: 0,
    })
}

/// Result of [`run_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub spec: ScenarioSpec,
    pub prng: String,
    pub seed_derivation: String,
    /// `E[Y]`, the outcome intercept of the data-generating process.
    pub mu_true: f64,
    /// In the order of `spec.estimators`.
    pub rows: Vec<SummaryRow>,
    /// Per-replication estimates in replication order; `None` marks a failure.
    pub draws: BTreeMap<EstimatorName, Vec<Option<f64>>>,
}

impl McSummary {
    pub fn row(&self, name: EstimatorName) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.estimator == name)
    }

    /// Successful estimates of one estimator.
    pub fn values(&self, name: EstimatorName) -> Vec<f64> {
        self.draws
            .get(&name)
            .map(|d| d.iter().flatten().copied().collect())
            .unwrap_or_default()
    }
}

fn replicate(spec: &ScenarioSpec, cfg: &DgpConfig, r: usize) -> Result<Vec<Option<f64>>> {
    let seed = derive_seed(spec.base_seed, r as u64);
    let mut sample = generate_sample(spec.n, seed, cfg)?;
    if spec.reverse {
        sample = reverse_roles(&sample);
    }
    let view = sample.view(spec.pi_model_correct, spec.m_model_correct);
    let set = estimate_all(&view, Some(&sample.y), &spec.estimators, EstimateOptions::default());
    Ok(spec.estimators.iter().map(|&e| set.get(e)).collect())
}

pub use rayon::ThreadPool;

/// A pool of `workers` threads (at least one).
pub fn thread_pool(workers: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

/// Run `spec.reps` replications on a pool of `workers` threads.
///
/// Replication `r` uses the seed `derive_seed(base_seed, r)`, and results
/// are reduced in replication order, so the output does not depend on
/// `workers`.
pub fn run_scenario(spec: &ScenarioSpec, cfg: &DgpConfig, workers: usize) -> Result<McSummary> {
    spec.validate()?;
    cfg.validate()?;
    let pool = thread_pool(workers)?;
    let per_rep: Vec<Vec<Option<f64>>> = pool.install(|| {
        (0..spec.reps)
            .into_par_iter()
            .map(|r| replicate(spec, cfg, r))
            .collect::<Result<_>>()
    })?;

    let mut draws = BTreeMap::new();
    let mut rows = Vec::with_capacity(spec.estimators.len());
    for (k, &name) in spec.estimators.iter().enumerate() {
        let column: Vec<Option<f64>> = per_rep.iter().map(|v| v[k]).collect();
        let ok: Vec<f64> = column.iter().flatten().copied().collect();
        let failures = spec.reps - ok.len();
        let row = if ok.is_empty() {
            SummaryRow::all_failed(name, failures)
        } else {
            SummaryRow {
                failures,
                ..summarize(name, &ok, cfg.intercept)?
            }
        };
        rows.push(row);
        draws.insert(name, column);
    }
    Ok(McSummary {
        spec: spec.clone(),
        prng: PRNG_NAME.to_string(),
        seed_derivation: SEED_DERIVATION.to_string(),
        mu_true: cfg.intercept,
        rows,
        draws,
    })
}

/// Number of grid points in a [`DensitySeries`].
pub const DENSITY_GRID: usize = 512;

/// Kernel bandwidth choice.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Silverman's rule of thumb.
    #[default]
    Auto,
    Fixed(f64),
}

/// Gaussian kernel density estimate on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySeries {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    /// Values dropped by the quantile clip.
    pub clipped: usize,
}

impl DensitySeries {
    /// Trapezoid-rule integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(g, d)| 0.5 * (g[1] - g[0]) * (d[0] + d[1]))
            .sum()
    }

    /// Grid point of the largest density value.
    pub fn mode(&self) -> f64 {
        let k = (0..self.density.len())
            .max_by(|&a, &b| self.density[a].total_cmp(&self.density[b]))
            .unwrap_or(0);
        self.grid[k]
    }
}

/// `0.9 min(sd, IQR/1.34) n^{-1/5}`, falling back to the sd when the IQR is 0.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Kernel density of `values`.
///
/// With `clip = Some(q)`, values below the `q` quantile or above the
/// `1 - q` quantile are dropped first.
pub fn density_points(values: &[f64], bandwidth: Bandwidth, clip: Option<f64>) -> Result<DensitySeries> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("values must be finite".into()));
    }
    let mut kept = values.to_vec();
    if let Some(q) = clip {
        if !(q > 0.0 && q < 0.5) {
            return Err(Error::InvalidArgument(format!("clip quantile {q} not in (0, 0.5)")));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (quantile_sorted(&sorted, q), quantile_sorted(&sorted, 1.0 - q));
        kept.retain(|v| *v >= lo && *v <= hi);
    }
    let clipped = values.len() - kept.len();
    let (min, max) = kept
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if kept.len() < 2 || !(max > min) {
        return Err(Error::Degenerate("need at least two distinct values".into()));
    }
    let h = match bandwidth {
        Bandwidth::Auto => silverman_bandwidth(&kept),
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => return Err(Error::InvalidArgument(format!("bandwidth {h} must be positive"))),
    };
    let (a, b) = (min - 3.0 * h, max + 3.0 * h);
    let step = (b - a) / (DENSITY_GRID - 1) as f64;
    let grid: Vec<f64> = (0..DENSITY_GRID).map(|k| a + step * k as f64).collect();
    let norm = 1.0 / (kept.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .par_iter()
        .map(|&g| {
            norm * kept
                .iter()
                .map(|&v| {
                    let u = (g - v) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(DensitySeries {
        grid,
        density,
        bandwidth: h,
        clipped,
    })
}
