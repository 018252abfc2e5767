//! Experiment configuration: a flat TOML file, CLI-flag overrides, and the
//! preset dataset/model mappings. The fully resolved config is echoed into
//! the sweep summary so every run is reproducible from its outputs.

use crate::CliError;
use cvanneal_core::{
    build_problem, load_csv, load_csv_where, Dataset, ModelSpec, RegressionProblem,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "CVANNEAL_WORKERS";

/// Fock truncation choice: a fixed level count or automatic escalation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Truncation {
    Fixed(usize),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

/// Partial configuration: what a config file or the CLI flags provide.
/// Later sources win field by field.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub dataset: Option<String>,
    pub model: Option<String>,
    pub feature_columns: Option<Vec<String>>,
    pub target_column: Option<String>,
    pub filter_column: Option<String>,
    pub filter_value: Option<String>,
    pub standardize: Option<bool>,
    pub truncation: Option<Truncation>,
    pub truncation_max: Option<usize>,
    pub truncation_tol: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub chi_grid: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    pub checkpoints: Option<usize>,
    pub workers: Option<usize>,
    pub driver_frequency: Option<f64>,
    pub time_step: Option<f64>,
}

impl PartialConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Field-by-field overlay; `other` wins where it is set.
    pub fn merged_with(mut self, other: PartialConfig) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            dataset, model, feature_columns, target_column, filter_column, filter_value,
            standardize, truncation, truncation_max, truncation_tol, t_grid, chi_grid, seed,
            output_dir, data_dir, checkpoints, workers, driver_frequency, time_step
        );
        self
    }
}

/// The fully resolved experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub model: String,
    pub feature_columns: Vec<String>,
    pub target_column: String,
    pub filter_column: Option<String>,
    pub filter_value: Option<String>,
    pub standardize: bool,
    pub truncation: Truncation,
    pub truncation_start: usize,
    pub truncation_max: usize,
    pub truncation_tol: f64,
    pub t_grid: Vec<f64>,
    pub chi_grid: Vec<f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data_dir: PathBuf,
    pub checkpoints: usize,
    pub workers: usize,
    pub driver_frequency: f64,
    /// 0 means the schedule's default step rule.
    pub time_step: f64,
}

fn model_feature_count(model: &str) -> Result<usize, CliError> {
    match model {
        "m1" | "m2" => Ok(1),
        "m3" => Ok(2),
        other => Err(CliError::Config(format!(
            "unknown model {other:?}; expected one of m1, m2, m3"
        ))),
    }
}

fn looks_like_path(dataset: &str) -> bool {
    dataset.contains('/') || dataset.contains('.')
}

impl ExperimentConfig {
    /// Apply preset defaults and validate. `chi_default` lets subcommands
    /// pick their own default grid (sweeps run at chi = 0, catalyst sweeps
    /// span the default Kerr grid).
    pub fn resolve(partial: PartialConfig, chi_default: &[f64]) -> Result<Self, CliError> {
        let dataset = partial.dataset.unwrap_or_else(|| "iris".to_string());
        let model = partial.model.unwrap_or_else(|| "m1".to_string());
        let wanted_features = model_feature_count(&model)?;

        let (feature_columns, target_column, filter_column, filter_value) = match dataset.as_str()
        {
            "iris" => {
                if model == "m3" {
                    return Err(CliError::Config(
                        "the iris preset supports models m1 and m2".into(),
                    ));
                }
                (
                    vec!["sepal_width".to_string()],
                    "sepal_length".to_string(),
                    Some("species".to_string()),
                    Some("setosa".to_string()),
                )
            }
            "penguins" => {
                if model != "m3" {
                    return Err(CliError::Config("the penguins preset is the m3 model".into()));
                }
                (
                    vec!["body_mass_g".to_string(), "bill_depth_mm".to_string()],
                    "flipper_length_mm".to_string(),
                    None,
                    None,
                )
            }
            "synthetic" => (
                (0..wanted_features).map(|i| format!("x{}", i + 1)).collect(),
                "y".to_string(),
                None,
                None,
            ),
            other if looks_like_path(other) => {
                let features = partial.feature_columns.clone().ok_or_else(|| {
                    CliError::Config(
                        "a file dataset needs feature_columns in the config".into(),
                    )
                })?;
                if features.len() != wanted_features {
                    return Err(CliError::Config(format!(
                        "model {model} needs {wanted_features} feature column(s), got {}",
                        features.len()
                    )));
                }
                let target = partial.target_column.clone().ok_or_else(|| {
                    CliError::Config("a file dataset needs target_column in the config".into())
                })?;
                (features, target, partial.filter_column.clone(), partial.filter_value.clone())
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown dataset {other:?}; expected iris, penguins, synthetic, or a CSV path"
                )));
            }
        };
        if filter_column.is_some() != filter_value.is_some() {
            return Err(CliError::Config(
                "filter_column and filter_value must be given together".into(),
            ));
        }

        let default_levels = if model == "m3" { 10 } else { 12 };
        let truncation = match partial.truncation {
            None | Some(Truncation::Fixed(0)) => Truncation::Fixed(default_levels),
            Some(Truncation::Fixed(1)) => {
                return Err(CliError::Config(
                    "truncation must be at least 2 levels per mode".into(),
                ));
            }
            Some(choice) => choice,
        };

        let t_grid = partial
            .t_grid
            .unwrap_or_else(|| vec![1.0, 5.0, 10.0, 50.0, 100.0, 500.0, 1000.0]);
        if t_grid.is_empty() {
            return Err(CliError::Config("t_grid must be non-empty".into()));
        }
        for &t in &t_grid {
            if !t.is_finite() || t <= 0.0 {
                return Err(CliError::Config(format!("annealing times must be positive, got {t}")));
            }
        }
        let chi_grid = partial.chi_grid.unwrap_or_else(|| chi_default.to_vec());
        if chi_grid.is_empty() {
            return Err(CliError::Config("chi_grid must be non-empty".into()));
        }
        for &chi in &chi_grid {
            if !chi.is_finite() {
                return Err(CliError::Config(format!("Kerr strengths must be finite, got {chi}")));
            }
        }

        let driver_frequency = partial.driver_frequency.unwrap_or(1.0);
        if !driver_frequency.is_finite() || driver_frequency <= 0.0 {
            return Err(CliError::Config(format!(
                "driver_frequency must be positive, got {driver_frequency}"
            )));
        }
        let time_step = partial.time_step.unwrap_or(0.0);
        if time_step < 0.0 || !time_step.is_finite() {
            return Err(CliError::Config(format!("time_step must be nonnegative, got {time_step}")));
        }

        Ok(ExperimentConfig {
            dataset,
            model,
            feature_columns,
            target_column,
            filter_column,
            filter_value,
            standardize: partial.standardize.unwrap_or(true),
            truncation,
            truncation_start: 4,
            truncation_max: partial.truncation_max.unwrap_or(16),
            truncation_tol: partial.truncation_tol.unwrap_or(1e-3),
            t_grid,
            chi_grid,
            seed: partial.seed.unwrap_or(7),
            output_dir: partial.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            data_dir: partial.data_dir.unwrap_or_else(|| PathBuf::from("data")),
            checkpoints: partial.checkpoints.unwrap_or(50),
            workers: partial.workers.unwrap_or(0),
            driver_frequency,
            time_step,
        })
    }

    pub fn model_spec(&self) -> ModelSpec {
        match self.model.as_str() {
            "m1" => ModelSpec::single_slope(&self.feature_columns[0]),
            "m2" => ModelSpec::slope_intercept(&self.feature_columns[0]),
            "m3" => {
                ModelSpec::two_slopes_intercept(&self.feature_columns[0], &self.feature_columns[1])
            }
            other => unreachable!("model {other} was validated at resolution"),
        }
    }

    /// Worker count with the environment override applied; 0 means the
    /// rayon default.
    pub fn effective_workers(&self) -> Result<usize, CliError> {
        match std::env::var(WORKERS_ENV) {
            Ok(value) => value.trim().parse::<usize>().map_err(|_| {
                CliError::Config(format!("{WORKERS_ENV}={value:?} is not a worker count"))
            }),
            Err(_) => Ok(self.workers),
        }
    }
}

/// A loaded problem plus everything the reports need to label it.
pub struct ResolvedProblem {
    pub problem: RegressionProblem,
    pub model_spec: ModelSpec,
    pub dataset_name: String,
    pub rows_used: usize,
    pub rows_dropped: usize,
    /// Original-unit rows, feature columns then the target column.
    pub raw_rows: Vec<Vec<f64>>,
}

/// Load the dataset named by the config and assemble its regression problem.
pub fn load_problem(config: &ExperimentConfig) -> Result<ResolvedProblem, CliError> {
    let spec = config.model_spec();
    if config.dataset == "synthetic" {
        let problem = RegressionProblem::synthetic(spec.num_parameters(), config.seed);
        let raw_rows: Vec<Vec<f64>> = problem
            .design()
            .rows()
            .into_iter()
            .zip(problem.targets())
            .map(|(row, &y)| {
                let mut out: Vec<f64> = row.iter().copied().collect();
                out.push(y);
                out
            })
            .collect();
        return Ok(ResolvedProblem {
            rows_used: problem.num_rows(),
            rows_dropped: 0,
            dataset_name: format!("synthetic(seed={})", config.seed),
            raw_rows,
            model_spec: spec,
            problem,
        });
    }

    let path = match config.dataset.as_str() {
        "iris" => config.data_dir.join("iris.csv"),
        "penguins" => config.data_dir.join("penguins.csv"),
        other => PathBuf::from(other),
    };
    let mut columns: Vec<&str> = config.feature_columns.iter().map(|s| s.as_str()).collect();
    columns.push(config.target_column.as_str());

    let dataset: Dataset = match (&config.filter_column, &config.filter_value) {
        (Some(col), Some(value)) => load_csv_where(&path, &columns, col, value)?,
        _ => load_csv(&path, &columns)?,
    };
    let problem = build_problem(&dataset, &spec, config.standardize)?;
    Ok(ResolvedProblem {
        rows_used: dataset.num_rows(),
        rows_dropped: dataset.dropped_rows(),
        dataset_name: dataset.name().to_string(),
        raw_rows: dataset.rows().to_vec(),
        model_spec: spec,
        problem,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_to_iris_m1() {
        let config = ExperimentConfig::resolve(PartialConfig::default(), &[0.0]).unwrap();
        assert_eq!(config.dataset, "iris");
        assert_eq!(config.model, "m1");
        assert_eq!(config.truncation, Truncation::Fixed(12));
        assert_eq!(config.feature_columns, vec!["sepal_width"]);
        assert_eq!(config.filter_value.as_deref(), Some("setosa"));
        assert!(config.standardize);
    }

    #[test]
    fn toml_round_trip_and_merge() {
        let file: PartialConfig = toml::from_str(
            r#"
            dataset = "penguins"
            model = "m3"
            truncation = "auto"
            t_grid = [1.0, 10.0]
            chi_grid = [0.0, 0.5]
            seed = 3
            "#,
        )
        .unwrap();
        let cli = PartialConfig { seed: Some(9), ..Default::default() };
        let merged = file.merged_with(cli);
        let config = ExperimentConfig::resolve(merged, &[0.0]).unwrap();
        assert_eq!(config.dataset, "penguins");
        assert_eq!(config.truncation, Truncation::Auto(AutoTag::Auto));
        assert_eq!(config.seed, 9);
        assert_eq!(config.chi_grid, vec![0.0, 0.5]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let parsed: Result<PartialConfig, _> = toml::from_str("tgrid = [1.0]");
        assert!(parsed.is_err());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let empty_chi = PartialConfig { chi_grid: Some(vec![]), ..Default::default() };
        assert!(ExperimentConfig::resolve(empty_chi, &[0.0]).is_err());

        let bad_t = PartialConfig { t_grid: Some(vec![-1.0]), ..Default::default() };
        assert!(ExperimentConfig::resolve(bad_t, &[0.0]).is_err());

        let bad_model = PartialConfig { model: Some("m9".into()), ..Default::default() };
        assert!(ExperimentConfig::resolve(bad_model, &[0.0]).is_err());

        let mismatch = PartialConfig {
            dataset: Some("iris".into()),
            model: Some("m3".into()),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(mismatch, &[0.0]).is_err());

        let shallow = PartialConfig {
            truncation: Some(Truncation::Fixed(1)),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(shallow, &[0.0]).is_err());
    }

    #[test]
    fn synthetic_dataset_resolves_without_files() {
        let partial = PartialConfig {
            dataset: Some("synthetic".into()),
            model: Some("m2".into()),
            ..Default::default()
        };
        let config = ExperimentConfig::resolve(partial, &[0.0]).unwrap();
        let resolved = load_problem(&config).unwrap();
        assert_eq!(resolved.problem.num_parameters(), 2);
        assert_eq!(resolved.rows_dropped, 0);
    }
}
