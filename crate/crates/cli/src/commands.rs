//! The experiment subcommands. Each one loads the configured problem, runs
//! its grid, and writes CSV reports with a fixed, documented column order.
//! Grid points are dispatched to a worker pool, and outputs are sorted after
//! collection, so parallelism never changes bytes.

use crate::config::{load_problem, ExperimentConfig, ResolvedProblem, Truncation};
use crate::output::{format_float, join_values, write_json, Report};
use crate::CliError;
use cvanneal_core::{
    adiabatic_diagnostic, build_problem_hamiltonian, converge_truncation, evolve, exact_spectrum,
    expectation, initial_state, quadrature, AnnealResult, AnnealSchedule, Error as CoreError,
    HamiltonianSet, ModeSpace, PrecisionVector, RegressionProblem,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

fn schedule_for(config: &ExperimentConfig, total_time: f64, chi: f64) -> Result<AnnealSchedule, CliError> {
    let mut schedule = AnnealSchedule::new(total_time, chi)?;
    if config.driver_frequency != 1.0 {
        schedule = schedule.with_driver_frequency(config.driver_frequency)?;
    }
    if config.time_step > 0.0 {
        schedule = schedule.with_time_step(config.time_step)?;
    }
    Ok(schedule)
}

struct AnnealedPoint {
    levels: usize,
    result: AnnealResult,
}

/// One grid-point evolution, resolving the truncation choice.
fn anneal_point(
    problem: &RegressionProblem,
    config: &ExperimentConfig,
    total_time: f64,
    chi: f64,
) -> Result<AnnealedPoint, CoreError> {
    let schedule = match schedule_for(config, total_time, chi) {
        Ok(s) => s,
        Err(CliError::Core(e)) => return Err(e),
        Err(CliError::Config(msg)) => return Err(CoreError::InvalidSchedule(msg)),
    };
    match config.truncation {
        Truncation::Fixed(levels) => {
            let space = ModeSpace::new(problem.num_parameters(), levels)?;
            let set = HamiltonianSet::for_problem(problem, &space, &schedule)?;
            let result = evolve(&set, &schedule, &initial_state(space), config.checkpoints)?;
            Ok(AnnealedPoint { levels, result })
        }
        Truncation::Auto(_) => {
            let (levels, result) = converge_truncation(
                problem,
                &schedule,
                config.truncation_start,
                config.truncation_max,
                config.truncation_tol,
            )?;
            Ok(AnnealedPoint { levels, result })
        }
    }
}

/// Exact ground energy of the problem Hamiltonian at a given truncation,
/// memoized per truncation (it does not depend on T or chi).
struct GroundEnergyCache<'a> {
    problem: &'a RegressionProblem,
    cache: Mutex<BTreeMap<usize, f64>>,
}

impl<'a> GroundEnergyCache<'a> {
    fn new(problem: &'a RegressionProblem) -> Self {
        GroundEnergyCache { problem, cache: Mutex::new(BTreeMap::new()) }
    }

    fn get(&self, levels: usize) -> Result<f64, CoreError> {
        if let Some(&e0) = self.cache.lock().unwrap().get(&levels) {
            return Ok(e0);
        }
        let space = ModeSpace::new(self.problem.num_parameters(), levels)?;
        let hamiltonian = build_problem_hamiltonian(self.problem, &space)?;
        let e0 = exact_spectrum(&hamiltonian, 1)?.ground_energy();
        self.cache.lock().unwrap().insert(levels, e0);
        Ok(e0)
    }

    fn into_map(self) -> BTreeMap<usize, f64> {
        self.cache.into_inner().unwrap()
    }
}

fn run_in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// Sorted (chi, T) grid in the order the CSV rows are emitted.
fn sorted_grid(config: &ExperimentConfig) -> Vec<(f64, f64)> {
    let mut chis = config.chi_grid.clone();
    chis.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut times = config.t_grid.clone();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    chis.iter().flat_map(|&chi| times.iter().map(move |&t| (chi, t))).collect()
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub total_time: f64,
    pub kerr_strength: f64,
    pub truncation: Option<usize>,
    pub quadratures: Option<Vec<f64>>,
    pub problem_energy: Option<f64>,
    pub ground_energy_exact: Option<f64>,
    pub norm_drift: Option<f64>,
    pub status: String,
    pub wall_time: f64,
}

fn compute_sweep_rows(
    config: &ExperimentConfig,
    resolved: &ResolvedProblem,
    energies: &GroundEnergyCache,
) -> Result<Vec<SweepRow>, CliError> {
    use rayon::prelude::*;
    let grid = sorted_grid(config);
    let rows: Vec<Result<SweepRow, CoreError>> = run_in_pool(config.effective_workers()?, || {
        grid.par_iter()
            .map(|&(chi, total_time)| {
                let started = Instant::now();
                let outcome = anneal_point(&resolved.problem, config, total_time, chi);
                let wall_time = started.elapsed().as_secs_f64();
                let fixed_levels = match config.truncation {
                    Truncation::Fixed(levels) => Some(levels),
                    Truncation::Auto(_) => None,
                };
                match outcome {
                    Ok(point) => Ok(SweepRow {
                        total_time,
                        kerr_strength: chi,
                        truncation: Some(point.levels),
                        ground_energy_exact: Some(energies.get(point.levels)?),
                        quadratures: Some(point.result.quadratures.clone()),
                        problem_energy: Some(point.result.problem_energy),
                        norm_drift: Some(point.result.norm_drift),
                        status: "ok".to_string(),
                        wall_time,
                    }),
                    Err(CoreError::IntegrationUnstable { norm_drift }) => Ok(SweepRow {
                        total_time,
                        kerr_strength: chi,
                        truncation: fixed_levels,
                        ground_energy_exact: match fixed_levels {
                            Some(levels) => Some(energies.get(levels)?),
                            None => None,
                        },
                        quadratures: None,
                        problem_energy: None,
                        norm_drift: Some(norm_drift),
                        status: "unstable".to_string(),
                        wall_time,
                    }),
                    Err(CoreError::TruncationNotConverged { .. }) => Ok(SweepRow {
                        total_time,
                        kerr_strength: chi,
                        truncation: None,
                        ground_energy_exact: None,
                        quadratures: None,
                        problem_energy: None,
                        norm_drift: None,
                        status: "not-converged".to_string(),
                        wall_time,
                    }),
                    Err(other) => Err(other),
                }
            })
            .collect()
    })?;
    rows.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

fn optional(value: Option<f64>) -> String {
    value.map(format_float).unwrap_or_default()
}

#[derive(Serialize)]
struct TransformSummary {
    column: String,
    offset: f64,
    scale: f64,
}

#[derive(Serialize)]
struct DatasetSummary {
    name: String,
    rows_used: usize,
    rows_dropped: usize,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    config: &'a ExperimentConfig,
    dataset: DatasetSummary,
    parameter_names: Vec<String>,
    theta_star: Vec<f64>,
    standardization: Vec<TransformSummary>,
    target_transform: TransformSummary,
    ground_energy_by_truncation: BTreeMap<usize, f64>,
    rows: usize,
    row_wall_times_seconds: Vec<f64>,
    wall_time_seconds: f64,
    csv: String,
}

fn transform_summaries(resolved: &ResolvedProblem, config: &ExperimentConfig) -> (Vec<TransformSummary>, TransformSummary) {
    let columns = resolved
        .problem
        .column_transforms()
        .iter()
        .zip(resolved.problem.parameter_names())
        .map(|(t, name)| TransformSummary { column: name.clone(), offset: t.offset, scale: t.scale })
        .collect();
    let target = resolved.problem.target_transform();
    (
        columns,
        TransformSummary {
            column: config.target_column.clone(),
            offset: target.offset,
            scale: target.scale,
        },
    )
}

/// Fig.-1-style sweep: one row per (chi, T) grid point plus a summary JSON.
/// CSV columns: T,chi,d,quadratures,problem_energy,ground_energy_exact,
/// theta_star,norm_drift,status (vectors semicolon-joined). Per-row wall
/// times live in the summary, not the CSV, so reruns stay byte-identical.
pub fn run_sweep(config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let resolved = load_problem(config)?;
    let theta_star = resolved.problem.least_squares_solution()?;
    let energies = GroundEnergyCache::new(&resolved.problem);
    let rows = compute_sweep_rows(config, &resolved, &energies)?;

    let theta_text = join_values(theta_star.as_slice().unwrap());
    let mut report = Report::new();
    report.header(&[
        "T",
        "chi",
        "d",
        "quadratures",
        "problem_energy",
        "ground_energy_exact",
        "theta_star",
        "norm_drift",
        "status",
    ]);
    for row in &rows {
        report.row(&[
            format_float(row.total_time),
            format_float(row.kerr_strength),
            row.truncation.map(|d| d.to_string()).unwrap_or_default(),
            row.quadratures.as_deref().map(join_values).unwrap_or_default(),
            optional(row.problem_energy),
            optional(row.ground_energy_exact),
            theta_text.clone(),
            optional(row.norm_drift),
            row.status.clone(),
        ]);
    }
    let csv_path = config.output_dir.join("sweep.csv");
    report.write_to(&csv_path)?;

    let (standardization, target_transform) = transform_summaries(&resolved, config);
    let summary = SweepSummary {
        config,
        dataset: DatasetSummary {
            name: resolved.dataset_name.clone(),
            rows_used: resolved.rows_used,
            rows_dropped: resolved.rows_dropped,
        },
        parameter_names: resolved.problem.parameter_names().to_vec(),
        theta_star: theta_star.to_vec(),
        standardization,
        target_transform,
        ground_energy_by_truncation: energies.into_map(),
        rows: rows.len(),
        row_wall_times_seconds: rows.iter().map(|r| r.wall_time).collect(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        csv: csv_path.display().to_string(),
    };
    write_json(&config.output_dir.join("summary.json"), &summary)?;
    eprintln!(
        "sweep: {} rows on {} ({} used, {} dropped) -> {}",
        rows.len(),
        resolved.dataset_name,
        resolved.rows_used,
        resolved.rows_dropped,
        csv_path.display()
    );
    Ok(csv_path)
}

/// Fig.-2-style overlay at a single (T, chi) point: per-record dataset
/// columns plus predictions from the annealed parameters and from the
/// classical fit, all in original (de-standardized) units. Columns:
/// the feature columns, the target column, prediction_annealed,
/// prediction_classical.
pub fn run_overlay(config: &ExperimentConfig, total_time: f64, chi: f64) -> Result<PathBuf, CliError> {
    let resolved = load_problem(config)?;
    let theta_star = resolved.problem.least_squares_solution()?;
    let point = anneal_point(&resolved.problem, config, total_time, chi)?;
    let annealed = &point.result.quadratures;

    let mut report = Report::new();
    report.comment(&format!(
        "annealed parameters from T={}, chi={}, d={}",
        format_float(total_time),
        format_float(chi),
        point.levels
    ));
    let mut names: Vec<&str> = config.feature_columns.iter().map(|s| s.as_str()).collect();
    names.push(config.target_column.as_str());
    names.push("prediction_annealed");
    names.push("prediction_classical");
    report.header(&names);

    let num_features = config.feature_columns.len();
    for row in &resolved.raw_rows {
        let features = &row[..num_features];
        let annealed_prediction =
            resolved.problem.predict_original_units(&resolved.model_spec, annealed, features)?;
        let classical_prediction = resolved.problem.predict_original_units(
            &resolved.model_spec,
            theta_star.as_slice().unwrap(),
            features,
        )?;
        let mut cells: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
        cells.push(format_float(annealed_prediction));
        cells.push(format_float(classical_prediction));
        report.row(&cells);
    }
    let csv_path = config.output_dir.join("overlay.csv");
    report.write_to(&csv_path)?;
    eprintln!(
        "overlay: {} rows at T={total_time}, chi={chi} -> {}",
        resolved.raw_rows.len(),
        csv_path.display()
    );
    Ok(csv_path)
}

/// Fig.-3-style catalyst comparison: the excess problem energy
/// <H_p> - E_0 per (chi, T), with a per-row flag marking whether that
/// chi > 0 row strictly beats the chi = 0 row at the same T. Columns:
/// T,chi,d,problem_energy,ground_energy_exact,energy_gap,beats_zero_chi,
/// status. Requires a chi grid with at least two entries including 0.
pub fn run_catalyst(config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    if config.chi_grid.len() < 2 || !config.chi_grid.contains(&0.0) {
        return Err(CliError::Config(
            "catalyst comparison needs a chi_grid with at least two entries including 0".into(),
        ));
    }
    let resolved = load_problem(config)?;
    let energies = GroundEnergyCache::new(&resolved.problem);
    let rows = compute_sweep_rows(config, &resolved, &energies)?;

    let gap_of = |row: &SweepRow| -> Option<f64> {
        Some(row.problem_energy? - row.ground_energy_exact?)
    };
    let baseline: BTreeMap<u64, f64> = rows
        .iter()
        .filter(|row| row.kerr_strength == 0.0 && row.status == "ok")
        .filter_map(|row| Some((row.total_time.to_bits(), gap_of(row)?)))
        .collect();

    let mut report = Report::new();
    report.header(&[
        "T",
        "chi",
        "d",
        "problem_energy",
        "ground_energy_exact",
        "energy_gap",
        "beats_zero_chi",
        "status",
    ]);
    for row in &rows {
        let gap = gap_of(row);
        let beats = match (row.kerr_strength > 0.0, gap, baseline.get(&row.total_time.to_bits())) {
            (true, Some(gap), Some(&gap0)) => (gap < gap0).to_string(),
            (false, Some(_), _) => "false".to_string(),
            _ => String::new(),
        };
        report.row(&[
            format_float(row.total_time),
            format_float(row.kerr_strength),
            row.truncation.map(|d| d.to_string()).unwrap_or_default(),
            optional(row.problem_energy),
            optional(row.ground_energy_exact),
            optional(gap),
            beats,
            row.status.clone(),
        ]);
    }
    let csv_path = config.output_dir.join("catalyst.csv");
    report.write_to(&csv_path)?;
    eprintln!("catalyst: {} rows -> {}", rows.len(), csv_path.display());
    Ok(csv_path)
}

fn exact_diagonalization_levels(config: &ExperimentConfig) -> usize {
    match config.truncation {
        Truncation::Fixed(levels) => levels,
        Truncation::Auto(_) => config.truncation_max,
    }
}

/// Ground-state quadratures of the problem Hamiltonian by exact
/// diagonalization: the continuous method with the dynamics taken out.
fn continuous_parameters(
    problem: &RegressionProblem,
    levels: usize,
) -> Result<Vec<f64>, CoreError> {
    let space = ModeSpace::new(problem.num_parameters(), levels)?;
    let hamiltonian = build_problem_hamiltonian(problem, &space)?;
    let report = exact_spectrum(&hamiltonian, 1)?;
    (0..space.num_modes())
        .map(|m| expectation(&quadrature(&space, m)?, report.ground_state()))
        .collect()
}

/// Discretization-error table: one row per precision family (columns
/// k,theta,objective,gap_vs_continuous, theta semicolon-joined), with the
/// continuous method appended as a row with k = "continuous". The precision
/// families are recorded in `#` comment lines above the header.
pub fn run_qubo(
    config: &ExperimentConfig,
    k_max: usize,
    precision_override: Option<Vec<f64>>,
) -> Result<PathBuf, CliError> {
    let resolved = load_problem(config)?;
    let problem = &resolved.problem;
    let families: Vec<PrecisionVector> = match precision_override {
        Some(entries) => vec![PrecisionVector::new(entries)?],
        None => (1..=k_max)
            .map(PrecisionVector::descending_family)
            .collect::<Result<_, _>>()?,
    };
    let report_rows = cvanneal_core::discretization_report(problem, &families)?;

    let theta_star = problem.least_squares_solution()?;
    let optimum = problem.cost(theta_star.as_slice().unwrap())?;
    let levels = exact_diagonalization_levels(config);
    let continuous = continuous_parameters(problem, levels)?;
    let continuous_objective = problem.cost(&continuous)?;

    let mut report = Report::new();
    report.comment(&format!("dataset: {}", resolved.dataset_name));
    for family in &families {
        report.comment(&format!(
            "precision family k={}: [{}]",
            family.bits_per_parameter(),
            join_values(family.entries())
        ));
    }
    report.comment(&format!("continuous: exact diagonalization at d={levels}"));
    report.header(&["k", "theta", "objective", "gap_vs_continuous"]);
    for row in &report_rows {
        report.row(&[
            row.bits_per_parameter.to_string(),
            join_values(&row.parameters),
            format_float(row.objective),
            format_float(row.gap_vs_continuous),
        ]);
    }
    report.row(&[
        "continuous".to_string(),
        join_values(&continuous),
        format_float(continuous_objective),
        format_float(continuous_objective - optimum),
    ]);
    let csv_path = config.output_dir.join("qubo.csv");
    report.write_to(&csv_path)?;
    eprintln!(
        "qubo: {} discrete rows + continuous -> {}",
        report_rows.len(),
        csv_path.display()
    );
    Ok(csv_path)
}

/// Dump the exact-diagonalization oracle for the configured problem:
/// E_0, E_1, the gap, the closed-form ground energy, the ground-state
/// quadratures, and theta*. Columns: d,dim,ground_energy,
/// first_excited_energy,gap,ground_energy_closed_form,quadratures,
/// theta_star. Also reports the adiabatic-ratio maximum over the largest T
/// in the grid on stderr.
pub fn run_spectrum(config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let resolved = load_problem(config)?;
    let problem = &resolved.problem;
    let levels = exact_diagonalization_levels(config);
    let space = ModeSpace::new(problem.num_parameters(), levels)?;
    let hamiltonian = build_problem_hamiltonian(problem, &space)?;
    let spectrum = exact_spectrum(&hamiltonian, 2)?;
    let quadratures: Vec<f64> = (0..space.num_modes())
        .map(|m| expectation(&quadrature(&space, m)?, spectrum.ground_state()))
        .collect::<Result<_, _>>()?;
    let theta_star = problem.least_squares_solution()?;
    // E_0 closed form: -B'A^{-1}B/4 = -B.theta*/2 in per-sample units.
    let (_, moment) = problem.annealing_coefficients();
    let closed_form: f64 = -0.5 * moment.dot(&theta_star);

    let mut report = Report::new();
    report.header(&[
        "d",
        "dim",
        "ground_energy",
        "first_excited_energy",
        "gap",
        "ground_energy_closed_form",
        "quadratures",
        "theta_star",
    ]);
    report.row(&[
        levels.to_string(),
        space.dim().to_string(),
        format_float(spectrum.ground_energy()),
        optional(spectrum.first_excited_energy()),
        format_float(spectrum.gap()),
        format_float(closed_form),
        join_values(&quadratures),
        join_values(theta_star.as_slice().unwrap()),
    ]);
    let csv_path = config.output_dir.join("spectrum.csv");
    report.write_to(&csv_path)?;

    let largest_t = config.t_grid.iter().cloned().fold(f64::MIN, f64::max);
    let chi = config.chi_grid.first().copied().unwrap_or(0.0);
    let schedule = schedule_for(config, largest_t, chi)?;
    let set = HamiltonianSet::for_problem(problem, &space, &schedule)?;
    let diagnostic = adiabatic_diagnostic(&set, &schedule, 51)?;
    let max_ratio = diagnostic.iter().map(|p| p.adiabatic_ratio).fold(0.0, f64::max);
    eprintln!(
        "spectrum: d={levels} E0={} gap={} max adiabatic ratio over T={largest_t}: {max_ratio:.3e} -> {}",
        format_float(spectrum.ground_energy()),
        format_float(spectrum.gap()),
        csv_path.display()
    );
    Ok(csv_path)
}

/// Classical fit only: one row per parameter (columns parameter,theta_star).
pub fn run_lsq(config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let resolved = load_problem(config)?;
    let theta_star = resolved.problem.least_squares_solution()?;
    let mut report = Report::new();
    report.header(&["parameter", "theta_star"]);
    for (name, &value) in resolved.problem.parameter_names().iter().zip(theta_star.iter()) {
        report.row(&[name.clone(), format_float(value)]);
    }
    let csv_path = config.output_dir.join("lsq.csv");
    report.write_to(&csv_path)?;
    let (standardization, target) = transform_summaries(&resolved, config);
    for t in standardization.iter().chain(std::iter::once(&target)) {
        eprintln!(
            "lsq: transform {}: standardized = (raw - {}) / {}",
            t.column,
            format_float(t.offset),
            format_float(t.scale)
        );
    }
    eprintln!(
        "lsq: {} parameters on {} ({} rows, {} dropped) -> {}",
        theta_star.len(),
        resolved.dataset_name,
        resolved.rows_used,
        resolved.rows_dropped,
        csv_path.display()
    );
    Ok(csv_path)
}
