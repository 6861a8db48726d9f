//! Observed-data containers shared by the fitting and estimation code.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Design matrices and observed outcomes for one analysis.
///
/// Both designs carry a leading intercept column of ones. `y_observed[i]` is
/// `None` exactly when `t[i] == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisView {
    pub design_pi: DMatrix<f64>,
    pub design_m: DMatrix<f64>,
    pub t: Vec<u8>,
    pub y_observed: Vec<Option<f64>>,
}

impl AnalysisView {
    pub fn new(
        design_pi: DMatrix<f64>,
        design_m: DMatrix<f64>,
        t: Vec<u8>,
        y_observed: Vec<Option<f64>>,
    ) -> Result<Self> {
        let n = t.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty analysis view".into()));
        }
        if design_pi.nrows() != n || design_m.nrows() != n || y_observed.len() != n {
            return Err(Error::InvalidArgument(format!(
                "row mismatch: t has {n}, design_pi {}, design_m {}, y {}",
                design_pi.nrows(),
                design_m.nrows(),
                y_observed.len()
            )));
        }
        for (name, d) in [("design_pi", &design_pi), ("design_m", &design_m)] {
            if d.ncols() == 0 || d.column(0).iter().any(|&v| v != 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name}: first column must be the constant 1"
                )));
            }
        }
        for (i, (&ti, yi)) in t.iter().zip(&y_observed).enumerate() {
            match (ti, yi) {
                (1, Some(v)) if v.is_finite() => {}
                (0, None) => {}
                (1, _) => {
                    return Err(Error::InvalidArgument(format!(
                        "unit {i}: respondent without a finite outcome"
                    )))
                }
                (0, Some(_)) => {
                    return Err(Error::InvalidArgument(format!(
                        "unit {i}: outcome present for a nonrespondent"
                    )))
                }
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "unit {i}: response indicator must be 0 or 1"
                    )))
                }
            }
        }
        Ok(Self {
            design_pi,
            design_m,
            t,
            y_observed,
        })
    }

    pub fn n(&self) -> usize {
        self.t.len()
    }

    pub fn respondents(&self) -> usize {
        self.t.iter().filter(|&&t| t == 1).count()
    }

    /// Outcomes with nonrespondent entries set to zero. Estimators never read
    /// those entries.
    pub fn y_filled(&self) -> Vec<f64> {
        self.y_observed.iter().map(|y| y.unwrap_or(0.0)).collect()
    }
}

/// A generic observed dataset: response indicator, partially observed
/// outcome and named covariates (no intercept column).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub t: Vec<u8>,
    pub y: Vec<Option<f64>>,
    pub covariates: DMatrix<f64>,
    pub names: Vec<String>,
}

impl Dataset {
    pub fn new(
        t: Vec<u8>,
        y: Vec<Option<f64>>,
        covariates: DMatrix<f64>,
        names: Vec<String>,
    ) -> Result<Self> {
        if t.len() != y.len() || t.len() != covariates.nrows() {
            return Err(Error::InvalidArgument("dataset columns differ in length".into()));
        }
        if names.len() != covariates.ncols() {
            return Err(Error::InvalidArgument("one name per covariate column".into()));
        }
        Ok(Self {
            t,
            y,
            covariates,
            names,
        })
    }

    pub fn n(&self) -> usize {
        self.t.len()
    }

    /// `[1, covariates[:, cols]]`.
    pub fn design(&self, cols: &[usize]) -> Result<DMatrix<f64>> {
        with_intercept(&self.covariates, cols)
    }

    pub fn view(&self, pi_cols: &[usize], m_cols: &[usize]) -> Result<AnalysisView> {
        AnalysisView::new(
            self.design(pi_cols)?,
            self.design(m_cols)?,
            self.t.clone(),
            self.y.clone(),
        )
    }

    /// Column index for a covariate name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Bootstrap resample: rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let covariates = DMatrix::from_fn(rows.len(), self.covariates.ncols(), |i, j| {
            self.covariates[(rows[i], j)]
        });
        Dataset {
            t: rows.iter().map(|&r| self.t[r]).collect(),
            y: rows.iter().map(|&r| self.y[r]).collect(),
            covariates,
            names: self.names.clone(),
        }
    }
}

/// Prepend a column of ones to the selected columns of `x`.
pub fn with_intercept(x: &DMatrix<f64>, cols: &[usize]) -> Result<DMatrix<f64>> {
    if let Some(&bad) = cols.iter().find(|&&c| c >= x.ncols()) {
        return Err(Error::InvalidArgument(format!(
            "covariate index {bad} out of range ({} columns)",
            x.ncols()
        )));
    }
    Ok(DMatrix::from_fn(x.nrows(), cols.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            x[(i, cols[j - 1])]
        }
    }))
}
