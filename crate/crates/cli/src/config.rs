//! JSON configuration files. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use drmean_core::linmod::{Link, PropensityMethod};
use drmean_core::{DgpConfig, EstimatorName};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

/// One model-specification cell of the simulation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioChoice {
    pub pi_correct: bool,
    pub m_correct: bool,
}

/// Configuration of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub base_seed: u64,
    pub reps: usize,
    pub sample_sizes: Vec<usize>,
    pub scenarios: Vec<ScenarioChoice>,
    pub reverse_roles: bool,
    pub estimators: Vec<EstimatorName>,
    pub dgp: DgpConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let scenarios = [(true, true), (true, false), (false, true), (false, false)]
            .map(|(pi_correct, m_correct)| ScenarioChoice { pi_correct, m_correct })
            .to_vec();
        Self {
            base_seed: 20_070_601,
            reps: 1000,
            sample_sizes: vec![200, 1000],
            scenarios,
            reverse_roles: false,
            estimators: EstimatorName::TABLE.to_vec(),
            dgp: DgpConfig::default(),
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.reps < 1 {
            return bad("reps must be at least 1");
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&n| n < 2) {
            return bad("sample_sizes must be nonempty with every n >= 2");
        }
        if self.scenarios.is_empty() {
            return bad("scenarios must be nonempty");
        }
        if self.estimators.is_empty() {
            return bad("estimators must be nonempty");
        }
        self.dgp.validate().map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Configuration of `estimate`. Covariates are named by CSV column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    /// All covariate columns when absent.
    pub propensity_covariates: Option<Vec<String>>,
    pub outcome_covariates: Option<Vec<String>>,
    pub propensity_method: PropensityMethod,
    pub link: Link,
    pub estimators: Vec<EstimatorName>,
    /// Also report the OLS identity check.
    pub check_identities: bool,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            propensity_covariates: None,
            outcome_covariates: None,
            propensity_method: PropensityMethod::Logistic,
            link: Link::Identity,
            estimators: EstimatorName::ALL
                .into_iter()
                .filter(|&e| e != EstimatorName::Full)
                .collect(),
            check_identities: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropensityModel {
    pub covariates: Vec<String>,
    #[serde(default)]
    pub method: PropensityMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeModel {
    pub covariates: Vec<String>,
    #[serde(default)]
    pub link: Link,
}

/// Configuration of `sensitivity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    pub estimator: EstimatorName,
    pub propensity_models: Vec<PropensityModel>,
    pub outcome_models: Vec<OutcomeModel>,
    #[serde(default = "default_boot_reps")]
    pub boot_reps: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_boot_reps() -> usize {
    drmean_core::sensitivity::DEFAULT_BOOT_REPS
}

/// Parse a JSON config; errors carry the line and column.
pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
    })
}

/// SHA-256 of the canonical JSON rendering of a config.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let bytes = serde_json::to_vec(cfg).expect("configs serialise");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
