//! Sensitivity analysis over a grid of working models.
//!
//! Entry `(i, j)` of the matrix is one DR estimator computed from the
//! `i`-th propensity model and the `j`-th outcome model. Each row and each
//! column is tested for homogeneity with a bootstrap-covariance Wald test,
//! and the row and column with the largest p-values are selected.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{estimate_all, EstimateOptions, EstimatorName};
use crate::linalg::pinv_quadratic;
use crate::linmod::{Link, PropensityMethod};
use crate::rng::{derive_seed, Stream};

/// Default number of bootstrap resamples.
pub const DEFAULT_BOOT_REPS: usize = 500;

/// Relative eigenvalue cutoff for the contrast covariance pseudo-inverse.
pub const PINV_TOL: f64 = 1e-10;

/// A working model: covariate columns of the dataset (the intercept is
/// always added) and a fitting method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Propensity {
        covariates: Vec<usize>,
        #[serde(default)]
        method: PropensityMethod,
    },
    Outcome {
        covariates: Vec<usize>,
        #[serde(default)]
        link: Link,
    },
}

impl ModelSpec {
    pub fn covariates(&self) -> &[usize] {
        match self {
            ModelSpec::Propensity { covariates, .. } | ModelSpec::Outcome { covariates, .. } => covariates,
        }
    }

    fn check(&self, propensity: bool, ncov: usize) -> Result<()> {
        let role_ok = matches!(
            (self, propensity),
            (ModelSpec::Propensity { .. }, true) | (ModelSpec::Outcome { .. }, false)
        );
        if !role_ok {
            return Err(Error::InvalidArgument("model listed under the wrong role".into()));
        }
        let cols = self.covariates();
        if cols.is_empty() {
            return Err(Error::InvalidArgument("empty covariate subset".into()));
        }
        if let Some(c) = cols.iter().find(|&&c| c >= ncov) {
            return Err(Error::InvalidArgument(format!("covariate index {c} out of range")));
        }
        Ok(())
    }
}

fn validate(data: &Dataset, p_specs: &[ModelSpec], o_specs: &[ModelSpec], estimator: EstimatorName) -> Result<()> {
    if p_specs.is_empty() || o_specs.is_empty() {
        return Err(Error::InvalidArgument("need at least one model of each role".into()));
    }
    if !estimator.is_dr() {
        return Err(Error::InvalidArgument(format!("{estimator} is not a doubly robust estimator")));
    }
    let ncov = data.covariates.ncols();
    p_specs.iter().try_for_each(|s| s.check(true, ncov))?;
    o_specs.iter().try_for_each(|s| s.check(false, ncov))
}

/// Estimates `μ̂_ij`; `None` where a fit failed.
pub type Estimates = Vec<Vec<Option<f64>>>;

fn matrix_unchecked(data: &Dataset, p_specs: &[ModelSpec], o_specs: &[ModelSpec], estimator: EstimatorName) -> Estimates {
    p_specs
        .iter()
        .map(|p| {
            o_specs
                .iter()
                .map(|o| {
                    let (ModelSpec::Propensity { method, .. }, ModelSpec::Outcome { link, .. }) = (p, o) else {
                        unreachable!("roles checked by validate")
                    };
                    let view = data.view(p.covariates(), o.covariates()).ok()?;
                    let opts = EstimateOptions {
                        propensity: *method,
                        link: *link,
                    };
                    estimate_all(&view, None, &[estimator], opts).get(estimator)
                })
                .collect()
        })
        .collect()
}

/// The `J_p × J_o` matrix of estimates.
pub fn build_matrix(
    data: &Dataset,
    p_specs: &[ModelSpec],
    o_specs: &[ModelSpec],
    estimator: EstimatorName,
) -> Result<Estimates> {
    validate(data, p_specs, o_specs, estimator)?;
    Ok(matrix_unchecked(data, p_specs, o_specs, estimator))
}

/// Matrices recomputed on `boot_reps` resamples of the units. Draw `b`
/// resamples with the seed `derive_seed(seed, b)`.
pub fn bootstrap_matrices(
    data: &Dataset,
    p_specs: &[ModelSpec],
    o_specs: &[ModelSpec],
    estimator: EstimatorName,
    boot_reps: usize,
    seed: u64,
) -> Result<Vec<Estimates>> {
    validate(data, p_specs, o_specs, estimator)?;
    let n = data.n();
    Ok((0..boot_reps)
        .into_par_iter()
        .map(|b| {
            let mut stream = Stream::new(derive_seed(seed, b as u64));
            let rows: Vec<usize> = (0..n).map(|_| stream.index(n)).collect();
            matrix_unchecked(&data.select_rows(&rows), p_specs, o_specs, estimator)
        })
        .collect())
}

/// Conditions noted by [`homogeneity_test`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFlag {
    /// Some entries of the line failed and were left out.
    MissingEntries,
    /// At most one entry was available, so there is nothing to test.
    SingleEntry,
    /// The contrast covariance was singular; a pseudo-inverse was used.
    ReducedRank,
    /// Fewer than two bootstrap draws had every entry available.
    TooFewDraws,
}

/// Wald test of equal means along one row or column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityTest {
    pub p_value: f64,
    pub statistic: f64,
    pub df: usize,
    /// Positions of the line entering the test.
    pub entries: Vec<usize>,
    /// Bootstrap draws in which all those entries were available.
    pub draws_used: usize,
    pub flags: Vec<TestFlag>,
}

/// Test equality of the means of the available entries of `line`.
///
/// `draws[b]` is the same line recomputed on bootstrap draw `b`. The
/// statistic is `dᵀ(C Σ̂ Cᵀ)⁺ d` where `d = C·line`, `C` holds first-vs-rest
/// differences and `Σ̂` is the bootstrap covariance; its reference
/// distribution is chi-square with the retained rank as degrees of freedom.
pub fn homogeneity_test(line: &[Option<f64>], draws: &[Vec<Option<f64>>]) -> HomogeneityTest {
    let entries: Vec<usize> = (0..line.len()).filter(|&k| line[k].is_some()).collect();
    let mut flags = Vec::new();
    if entries.len() < line.len() {
        flags.push(TestFlag::MissingEntries);
    }
    let trivial = |flags: Vec<TestFlag>, entries: Vec<usize>, draws_used: usize| HomogeneityTest {
        p_value: 1.0,
        statistic: 0.0,
        df: 0,
        entries,
        draws_used,
        flags,
    };
    if entries.len() <= 1 {
        flags.push(TestFlag::SingleEntry);
        return trivial(flags, entries, draws.len());
    }
    let m = entries.len();
    let contrasts = |v: &dyn Fn(usize) -> f64| DVector::from_fn(m - 1, |k, _| v(entries[k + 1]) - v(entries[0]));
    let d = contrasts(&|k| line[k].expect("available entry"));
    let usable: Vec<DVector<f64>> = draws
        .iter()
        .filter(|row| entries.iter().all(|&k| row[k].is_some()))
        .map(|row| contrasts(&|k| row[k].expect("checked")))
        .collect();
    if usable.len() < 2 {
        flags.push(TestFlag::TooFewDraws);
        return trivial(flags, entries, usable.len());
    }
    let b = usable.len() as f64;
    let mean = usable.iter().fold(DVector::zeros(m - 1), |acc, c| acc + c) / b;
    let mut cov = DMatrix::zeros(m - 1, m - 1);
    for c in &usable {
        let dev = c - &mean;
        cov += &dev * dev.transpose();
    }
    cov /= b - 1.0;
    let (statistic, df) = pinv_quadratic(&cov, &d, PINV_TOL);
    if df < m - 1 {
        flags.push(TestFlag::ReducedRank);
    }
    let p_value = if df == 0 {
        // contrasts never vary across draws
        if d.iter().all(|&x| x == 0.0) {
            1.0
        } else {
            0.0
        }
    } else if statistic == 0.0 {
        1.0
    } else {
        ChiSquared::new(df as f64)
            .map(|chi| chi.sf(statistic))
            .unwrap_or(f64::NAN)
            .clamp(0.0, 1.0)
    };
    HomogeneityTest {
        p_value,
        statistic,
        df,
        entries,
        draws_used: usable.len(),
        flags,
    }
}

/// Range of the available entries; NaN when none are available.
pub fn spread(line: &[Option<f64>]) -> f64 {
    let vals: Vec<f64> = line.iter().flatten().copied().collect();
    if vals.is_empty() {
        return f64::NAN;
    }
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// Index with the largest p-value; ties go to the smaller spread, then to
/// the lower index. NaN p-values never win against a number.
pub fn select_index(p_values: &[f64], spreads: &[f64]) -> usize {
    let key = |x: f64, worst: f64| if x.is_nan() { worst } else { x };
    let mut best = 0;
    for k in 1..p_values.len() {
        let (pk, pb) = (key(p_values[k], -1.0), key(p_values[best], -1.0));
        let (sk, sb) = (key(spreads[k], f64::INFINITY), key(spreads[best], f64::INFINITY));
        if pk > pb || (pk == pb && sk < sb) {
            best = k;
        }
    }
    best
}

/// Full sensitivity report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityMatrix {
    pub estimator: EstimatorName,
    /// `estimates[i][j]`, with `i` indexing propensity models.
    pub estimates: Estimates,
    pub row_tests: Vec<HomogeneityTest>,
    pub col_tests: Vec<HomogeneityTest>,
    pub row_p_values: Vec<f64>,
    pub col_p_values: Vec<f64>,
    pub row_spread: Vec<f64>,
    pub col_spread: Vec<f64>,
    /// Zero-based `(i*, j*)`.
    pub selection: (usize, usize),
    pub boot_reps: usize,
    pub seed: u64,
}

impl SensitivityMatrix {
    /// Column `j` of the estimates.
    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        self.estimates.iter().map(|row| row[j]).collect()
    }
}

/// `(i*, j*)`: the row and column with the largest homogeneity p-values.
pub fn select_models(matrix: &SensitivityMatrix) -> (usize, usize) {
    (
        select_index(&matrix.row_p_values, &matrix.row_spread),
        select_index(&matrix.col_p_values, &matrix.col_spread),
    )
}

/// Build the matrix, run every homogeneity test and select `(i*, j*)`.
pub fn analyze(
    data: &Dataset,
    p_specs: &[ModelSpec],
    o_specs: &[ModelSpec],
    estimator: EstimatorName,
    boot_reps: usize,
    seed: u64,
) -> Result<SensitivityMatrix> {
    let estimates = build_matrix(data, p_specs, o_specs, estimator)?;
    let boots = bootstrap_matrices(data, p_specs, o_specs, estimator, boot_reps, seed)?;
    let (jp, jo) = (p_specs.len(), o_specs.len());

    let row_tests: Vec<HomogeneityTest> = (0..jp)
        .map(|i| {
            let draws: Vec<Vec<Option<f64>>> = boots.iter().map(|m| m[i].clone()).collect();
            homogeneity_test(&estimates[i], &draws)
        })
        .collect();
    let column = |m: &Estimates, j: usize| -> Vec<Option<f64>> { m.iter().map(|row| row[j]).collect() };
    let col_tests: Vec<HomogeneityTest> = (0..jo)
        .map(|j| {
            let draws: Vec<Vec<Option<f64>>> = boots.iter().map(|m| column(m, j)).collect();
            homogeneity_test(&column(&estimates, j), &draws)
        })
        .collect();

    let mut out = SensitivityMatrix {
        estimator,
        row_p_values: row_tests.iter().map(|t| t.p_value).collect(),
        col_p_values: col_tests.iter().map(|t| t.p_value).collect(),
        row_spread: estimates.iter().map(|r| spread(r)).collect(),
        col_spread: (0..jo).map(|j| spread(&column(&estimates, j))).collect(),
        estimates,
        row_tests,
        col_tests,
        selection: (0, 0),
        boot_reps,
        seed,
    };
    out.selection = select_models(&out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{generate_sample, DgpConfig};

    fn p(cols: &[usize]) -> ModelSpec {
        ModelSpec::Propensity {
            covariates: cols.to_vec(),
            method: PropensityMethod::Logistic,
        }
    }

    fn o(cols: &[usize]) -> ModelSpec {
        ModelSpec::Outcome {
            covariates: cols.to_vec(),
            link: Link::Identity,
        }
    }

    fn data(n: usize, seed: u64) -> Dataset {
        generate_sample(n, seed, &DgpConfig::default()).unwrap().to_dataset()
    }

    #[test]
    fn single_entry_line_has_unit_p() {
        let t = homogeneity_test(&[Some(3.0)], &[vec![Some(1.0)], vec![Some(2.0)]]);
        assert_eq!(t.p_value, 1.0);
        assert!(t.flags.contains(&TestFlag::SingleEntry));
        let t = homogeneity_test(&[None, Some(3.0)], &[]);
        assert_eq!(t.p_value, 1.0);
        assert!(t.flags.contains(&TestFlag::MissingEntries));
    }

    #[test]
    fn identical_entries_give_unit_p() {
        let draws: Vec<Vec<Option<f64>>> = (0..20).map(|b| vec![Some(b as f64); 3]).collect();
        let t = homogeneity_test(&[Some(5.0); 3], &draws);
        assert_eq!((t.statistic, t.p_value, t.df), (0.0, 1.0, 0));
    }

    #[test]
    fn wald_statistic_matches_scalar_formula() {
        // one contrast: W = d^2 / var(contrast draws)
        let draws: Vec<Vec<Option<f64>>> = [0.0, 1.0, 2.0, 3.0]
            .iter()
            .map(|&c| vec![Some(10.0), Some(10.0 + c)])
            .collect();
        let t = homogeneity_test(&[Some(1.0), Some(3.0)], &draws);
        let var = 5.0 / 3.0;
        assert!((t.statistic - 4.0 / var).abs() < 1e-12);
        let chi = ChiSquared::new(1.0).unwrap();
        assert!((t.p_value - chi.sf(4.0 / var)).abs() < 1e-15);
        assert_eq!(t.df, 1);
    }

    #[test]
    fn reduced_rank_is_flagged() {
        // entries 2 and 3 always move together
        let draws: Vec<Vec<Option<f64>>> = (0..10)
            .map(|b| {
                let x = (b as f64).sin();
                vec![Some(0.0), Some(x), Some(x)]
            })
            .collect();
        let t = homogeneity_test(&[Some(0.0), Some(0.1), Some(0.1)], &draws);
        assert_eq!(t.df, 1);
        assert!(t.flags.contains(&TestFlag::ReducedRank));
        assert!((0.0..=1.0).contains(&t.p_value));
    }

    #[test]
    fn statistic_invariant_to_anchor() {
        let mut s = Stream::new(8);
        let draws: Vec<Vec<Option<f64>>> = (0..50)
            .map(|_| (0..3).map(|_| Some(s.standard_normal())).collect())
            .collect();
        let line = [Some(0.3), Some(-0.2), Some(0.5)];
        let a = homogeneity_test(&line, &draws);
        let swap = |v: &[Option<f64>]| vec![v[1], v[0], v[2]];
        let b = homogeneity_test(&swap(&line), &draws.iter().map(|d| swap(d)).collect::<Vec<_>>());
        assert!((a.statistic - b.statistic).abs() < 1e-9 * a.statistic.max(1.0));
    }

    #[test]
    fn selection_rules() {
        assert_eq!(select_index(&[0.1, 0.9], &[0.0, 0.0]), 1);
        assert_eq!(select_index(&[0.5, 0.5], &[5.0, 0.2]), 1);
        assert_eq!(select_index(&[0.5, 0.5], &[1.0, 1.0]), 0);
        assert_eq!(select_index(&[f64::NAN, 0.0], &[0.0, 0.0]), 1);
    }

    #[test]
    fn one_by_one_matches_estimate_all() {
        let d = data(300, 4);
        let m = build_matrix(&d, &[p(&[0, 1, 2, 3])], &[o(&[0, 1, 2, 3])], EstimatorName::DrWls).unwrap();
        let view = d.view(&[0, 1, 2, 3], &[0, 1, 2, 3]).unwrap();
        let direct = estimate_all(&view, None, &[EstimatorName::DrWls], EstimateOptions::default());
        assert_eq!(m[0][0], direct.get(EstimatorName::DrWls));
    }

    #[test]
    fn duplicate_outcome_specs_give_identical_columns() {
        let d = data(200, 5);
        let os = [o(&[4, 5]), o(&[0, 1, 2, 3]), o(&[4, 5])];
        let m = build_matrix(&d, &[p(&[0, 1]), p(&[4, 5, 6, 7])], &os, EstimatorName::BDrReg).unwrap();
        for row in &m {
            assert_eq!(row[0], row[2]);
        }
    }

    #[test]
    fn invalid_inputs() {
        let d = data(50, 1);
        assert!(build_matrix(&d, &[], &[o(&[0])], EstimatorName::DrReg).is_err());
        assert!(build_matrix(&d, &[p(&[0])], &[o(&[0])], EstimatorName::Ols).is_err());
        assert!(build_matrix(&d, &[p(&[])], &[o(&[0])], EstimatorName::DrReg).is_err());
        assert!(build_matrix(&d, &[p(&[9])], &[o(&[0])], EstimatorName::DrReg).is_err());
        assert!(build_matrix(&d, &[o(&[0])], &[o(&[0])], EstimatorName::DrReg).is_err());
    }

    #[test]
    fn analysis_is_reproducible() {
        let d = data(200, 6);
        let ps = [p(&[0, 1, 2, 3]), p(&[4, 5, 6, 7])];
        let os = [o(&[0, 1, 2, 3]), o(&[4, 5, 6, 7])];
        let a = analyze(&d, &ps, &os, EstimatorName::DrWls, 30, 11).unwrap();
        let b = analyze(&d, &ps, &os, EstimatorName::DrWls, 30, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.row_p_values.iter().chain(&a.col_p_values).all(|p| (0.0..=1.0).contains(p)));
        assert!(a.selection.0 < 2 && a.selection.1 < 2);
    }

    #[test]
    fn model_spec_json() {
        let s: ModelSpec = serde_json::from_str(r#"{"role":"outcome","covariates":[0,2]}"#).unwrap();
        assert_eq!(s, o(&[0, 2]));
        let s: ModelSpec =
            serde_json::from_str(r#"{"role":"propensity","covariates":[1],"method":{"inverse_linear":"moment"}}"#).unwrap();
        assert!(matches!(s, ModelSpec::Propensity { method: PropensityMethod::InverseLinear(_), .. }));
        assert!(serde_json::from_str::<ModelSpec>(r#"{"role":"outcome","covariates":[0],"bogus":1}"#).is_err());
    }
}
