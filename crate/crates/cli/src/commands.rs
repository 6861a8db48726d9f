//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use drmean_core::dgp::{generate_sample, reverse_roles};
use drmean_core::estimators::{estimate_all, mu_ols_identities_check, EstimateOptions};
use drmean_core::mc::{density_points, run_scenario, Bandwidth, QUANTILE_LEVELS};
use drmean_core::rng::{derive_seed, PRNG_NAME, SEED_DERIVATION};
use drmean_core::sensitivity::{analyze, ModelSpec};
use drmean_core::{Dataset, DgpConfig, ScenarioSpec};
use serde_json::json;

use crate::config::{self, EstimateConfig, RunConfig, SensitivityConfig};
use crate::io::{read_column, read_dataset, write_dataset};
use crate::{CliError, CliResult};

const RESULTS_HEADER: [&str; 18] = [
    "scenario", "n", "reps", "estimator", "bias", "var", "mse", "skewness", "q01", "q05", "q25", "q50", "q75",
    "q95", "q99", "min", "max", "failures",
];

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Other(anyhow::anyhow!("{}: {e}", p.display()))),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}

fn to_json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("json values serialise");
    b.push(b'\n');
    b
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Other(e.into())
}

/// `simulate`: one results row per (scenario, n, estimator).
pub fn simulate(config: Option<&Path>, out: Option<PathBuf>, workers: Option<usize>, reverse: bool) -> CliResult<()> {
    let mut cfg: RunConfig = match config {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    cfg.reverse_roles |= reverse;
    if out.is_some() {
        cfg.output_dir = out;
    }
    cfg.validate()?;
    let dir = cfg
        .output_dir
        .clone()
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output_dir".into()))?;
    fs::create_dir_all(&dir)?;
    let workers = workers.unwrap_or_else(default_workers);

    let mut results = csv::Writer::from_path(dir.join("results.csv")).map_err(csv_err)?;
    results.write_record(RESULTS_HEADER).map_err(csv_err)?;
    let mut draws = csv::Writer::from_path(dir.join("draws.csv")).map_err(csv_err)?;
    draws.write_record(["scenario", "n", "rep", "estimator", "value"]).map_err(csv_err)?;
    let mut failures = Vec::new();

    for sc in &cfg.scenarios {
        for &n in &cfg.sample_sizes {
            let spec = ScenarioSpec {
                n,
                reps: cfg.reps,
                pi_model_correct: sc.pi_correct,
                m_model_correct: sc.m_correct,
                reverse: cfg.reverse_roles,
                // scenarios share datasets at a given n
                base_seed: derive_seed(cfg.base_seed, n as u64),
                estimators: cfg.estimators.clone(),
            };
            let label = spec.label();
            eprintln!("drmean: {label}, n = {n}, {} replications", cfg.reps);
            let summary = run_scenario(&spec, &cfg.dgp, workers).map_err(|e| CliError::Config(e.to_string()))?;
            for row in &summary.rows {
                let mut rec = vec![
                    label.to_string(),
                    n.to_string(),
                    cfg.reps.to_string(),
                    row.estimator.to_string(),
                    row.bias.to_string(),
                    row.variance.to_string(),
                    row.mse.to_string(),
                    row.skewness.to_string(),
                ];
                rec.extend(row.quantiles.iter().map(f64::to_string));
                rec.extend([row.min.to_string(), row.max.to_string(), row.failures.to_string()]);
                results.write_record(&rec).map_err(csv_err)?;
                failures.push(json!({
                    "scenario": label, "n": n, "estimator": row.estimator, "failures": row.failures,
                }));
            }
            for &name in &cfg.estimators {
                for (r, v) in summary.draws[&name].iter().enumerate() {
                    let value = v.map(|x| x.to_string()).unwrap_or_default();
                    draws
                        .write_record([label, &n.to_string(), &r.to_string(), name.as_str(), &value])
                        .map_err(csv_err)?;
                }
            }
        }
    }
    results.flush()?;
    draws.flush()?;

    // the output location does not affect any result
    let echo = RunConfig {
        output_dir: None,
        ..cfg.clone()
    };
    let meta = json!({
        "tool": concat!("drmean ", env!("CARGO_PKG_VERSION")),
        "base_seed": cfg.base_seed,
        "prng": PRNG_NAME,
        "seed_derivation": SEED_DERIVATION,
        "scenario_seed": "derive_seed(base_seed, n); replication r then uses derive_seed(scenario_seed, r)",
        "quantile_levels": QUANTILE_LEVELS,
        "mu_true": cfg.dgp.intercept,
        "config": &echo,
        "config_sha256": config::config_hash(&echo),
        "failures": failures,
    });
    fs::write(dir.join("metadata.json"), to_json_bytes(&meta))?;
    Ok(())
}

fn resolve(data: &Dataset, names: Option<&[String]>) -> CliResult<Vec<usize>> {
    match names {
        None => Ok((0..data.names.len()).collect()),
        Some(names) => names
            .iter()
            .map(|s| {
                data.column(s)
                    .ok_or_else(|| CliError::Config(format!("unknown covariate column {s:?}")))
            })
            .collect(),
    }
}

/// `estimate`: every requested estimator on one dataset.
pub fn estimate(data_path: &Path, config: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    let cfg: EstimateConfig = match config {
        Some(p) => config::load(p)?,
        None => EstimateConfig::default(),
    };
    let (data, warnings) = read_dataset(data_path)?;
    for w in &warnings {
        eprintln!("drmean: warning: {w}");
    }
    let pi_cols = resolve(&data, cfg.propensity_covariates.as_deref())?;
    let m_cols = resolve(&data, cfg.outcome_covariates.as_deref())?;
    let view = data.view(&pi_cols, &m_cols).map_err(|e| CliError::Data(e.to_string()))?;
    let opts = EstimateOptions {
        propensity: cfg.propensity_method,
        link: cfg.link,
    };
    let set = estimate_all(&view, None, &cfg.estimators, opts);
    let identities = if cfg.check_identities {
        Some(match mu_ols_identities_check(&view, 0) {
            Ok(r) => serde_json::to_value(r).expect("report serialises"),
            Err(e) => json!({ "skipped": e.to_string() }),
        })
    } else {
        None
    };
    let doc = json!({
        "n": view.n(),
        "respondents": view.respondents(),
        "estimates": set,
        "identities": identities,
        "warnings": warnings,
        "config": &cfg,
        "config_sha256": config::config_hash(&cfg),
    });
    write_output(out, &to_json_bytes(&doc))
}

/// `sensitivity`: the estimate matrix with homogeneity tests.
pub fn sensitivity(data_path: &Path, config: &Path, out: Option<&Path>, workers: Option<usize>) -> CliResult<()> {
    let cfg: SensitivityConfig = config::load(config)?;
    let (data, warnings) = read_dataset(data_path)?;
    for w in &warnings {
        eprintln!("drmean: warning: {w}");
    }
    let p_specs = cfg
        .propensity_models
        .iter()
        .map(|m| {
            Ok(ModelSpec::Propensity {
                covariates: resolve(&data, Some(&m.covariates))?,
                method: m.method,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let o_specs = cfg
        .outcome_models
        .iter()
        .map(|m| {
            Ok(ModelSpec::Outcome {
                covariates: resolve(&data, Some(&m.covariates))?,
                link: m.link,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let pool = rayon_pool(workers.unwrap_or_else(default_workers))?;
    let matrix = pool
        .install(|| analyze(&data, &p_specs, &o_specs, cfg.estimator, cfg.boot_reps, cfg.seed))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let doc = json!({
        "matrix": matrix,
        "prng": PRNG_NAME,
        "seed_derivation": SEED_DERIVATION,
        "config": &cfg,
        "config_sha256": config::config_hash(&cfg),
    });
    write_output(out, &to_json_bytes(&doc))
}

fn rayon_pool(workers: usize) -> CliResult<drmean_core::mc::ThreadPool> {
    drmean_core::mc::thread_pool(workers).map_err(|e| CliError::Other(e.into()))
}

/// `density`: kernel density of one column as a `grid,density` CSV.
pub fn density(
    data_path: &Path,
    column: &str,
    filters: &[String],
    bandwidth: &str,
    clip: Option<f64>,
    out: Option<&Path>,
) -> CliResult<()> {
    let filters = filters
        .iter()
        .map(|f| {
            f.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| CliError::Config(format!("filter {f:?} is not COLUMN=VALUE")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let bw = match bandwidth {
        "auto" => Bandwidth::Auto,
        s => match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Bandwidth::Fixed(h),
            _ => return Err(CliError::Config(format!("bandwidth {s:?} is neither auto nor a positive number"))),
        },
    };
    if let Some(q) = clip {
        if !(q > 0.0 && q < 0.5) {
            return Err(CliError::Config(format!("clip quantile {q} not in (0, 0.5)")));
        }
    }
    let values = read_column(data_path, column, &filters)?;
    let d = density_points(&values, bw, clip).map_err(|e| CliError::Data(e.to_string()))?;
    let mut buf = Vec::new();
    writeln!(buf, "# bandwidth={} ({})", d.bandwidth, if bw == Bandwidth::Auto { "silverman" } else { "fixed" })?;
    match clip {
        Some(q) => writeln!(buf, "# clip_quantile={q} clipped={}", d.clipped)?,
        None => writeln!(buf, "# clip_quantile=none")?,
    }
    writeln!(buf, "# values={}", values.len())?;
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(["grid", "density"]).map_err(csv_err)?;
    for (g, p) in d.grid.iter().zip(&d.density) {
        w.write_record([g.to_string(), p.to_string()]).map_err(csv_err)?;
    }
    let buf = w.into_inner().map_err(|e| CliError::Other(anyhow::anyhow!("{e}")))?;
    write_output(out, &buf)
}

/// `generate`: one simulated dataset.
pub fn generate(n: usize, seed: u64, reverse: bool, config: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    let cfg: DgpConfig = match config {
        Some(p) => config::load(p)?,
        None => DgpConfig::default(),
    };
    let mut sample = generate_sample(n, seed, &cfg).map_err(|e| CliError::Config(e.to_string()))?;
    if reverse {
        sample = reverse_roles(&sample);
    }
    let mut buf = Vec::new();
    write_dataset(&mut buf, &sample.to_dataset())?;
    write_output(out, &buf)
}
