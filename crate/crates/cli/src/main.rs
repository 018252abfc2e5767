use clap::{Args, Parser, Subcommand};
use cvanneal_cli::config::{AutoTag, ExperimentConfig, PartialConfig, Truncation};
use cvanneal_cli::{commands, CliError};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "cvanneal",
    version,
    about = "Linear-regression training by continuous-variable quantum annealing on truncated Fock spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parameter-vs-T sweep over the (chi, T) grid; writes sweep.csv and summary.json.
    Sweep(CommonArgs),
    /// Model overlay at a single (T, chi) point; writes overlay.csv.
    Overlay {
        #[command(flatten)]
        common: CommonArgs,
        /// Annealing time of the overlay point.
        #[arg(long, default_value_t = 1000.0)]
        time: f64,
        /// Kerr strength of the overlay point.
        #[arg(long, default_value_t = 0.0)]
        chi: f64,
    },
    /// Kerr-catalyst comparison of <H_p> - E_0 over the grid; writes catalyst.csv.
    Catalyst(CommonArgs),
    /// Binary-encoding baseline vs the continuous method; writes qubo.csv.
    Qubo {
        #[command(flatten)]
        common: CommonArgs,
        /// Largest bits-per-parameter in the default precision-family sweep.
        #[arg(long, default_value_t = 6)]
        k_max: usize,
        /// Explicit precision vector (comma-separated signed powers of two).
        #[arg(long)]
        precision: Option<String>,
    },
    /// Exact-diagonalization oracle (E0, E1, theta); writes spectrum.csv.
    Spectrum(CommonArgs),
    /// Classical least-squares fit only; writes lsq.csv.
    Lsq(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// iris | penguins | synthetic | path to a CSV file.
    #[arg(long)]
    dataset: Option<String>,
    /// m1 | m2 | m3.
    #[arg(long)]
    model: Option<String>,
    /// Fock levels per mode, or "auto" for convergence escalation.
    #[arg(long)]
    truncation: Option<String>,
    /// Comma-separated annealing times.
    #[arg(long)]
    t_grid: Option<String>,
    /// Comma-separated Kerr strengths.
    #[arg(long)]
    chi_grid: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Directory holding the vendored datasets.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    standardize: Option<bool>,
    /// Worker-pool size (0 = all cores); CVANNEAL_WORKERS overrides.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    checkpoints: Option<usize>,
    /// Integrator step override (default: min(0.005, T/20000), capped).
    #[arg(long)]
    time_step: Option<f64>,
    #[arg(long)]
    driver_frequency: Option<f64>,
}

fn parse_grid(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("{what} entry {s:?} is not a number")))
        })
        .collect()
}

impl CommonArgs {
    fn to_partial(&self) -> Result<PartialConfig, CliError> {
        let truncation = match self.truncation.as_deref() {
            None => None,
            Some("auto") => Some(Truncation::Auto(AutoTag::Auto)),
            Some(text) => Some(Truncation::Fixed(text.parse::<usize>().map_err(|_| {
                CliError::Config(format!("truncation {text:?} is not a level count or \"auto\""))
            })?)),
        };
        Ok(PartialConfig {
            dataset: self.dataset.clone(),
            model: self.model.clone(),
            truncation,
            t_grid: self.t_grid.as_deref().map(|t| parse_grid(t, "t_grid")).transpose()?,
            chi_grid: self.chi_grid.as_deref().map(|t| parse_grid(t, "chi_grid")).transpose()?,
            seed: self.seed,
            output_dir: self.output_dir.clone(),
            data_dir: self.data_dir.clone(),
            standardize: self.standardize,
            workers: self.workers,
            checkpoints: self.checkpoints,
            time_step: self.time_step,
            driver_frequency: self.driver_frequency,
            ..Default::default()
        })
    }

    fn resolve(&self, chi_default: &[f64]) -> Result<ExperimentConfig, CliError> {
        let mut merged = PartialConfig::default();
        if let Some(path) = &self.config {
            merged = merged.merged_with(PartialConfig::from_toml_file(path)?);
        }
        merged = merged.merged_with(self.to_partial()?);
        ExperimentConfig::resolve(merged, chi_default)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(common) => {
            let config = common.resolve(&[0.0])?;
            commands::run_sweep(&config)?;
        }
        Command::Overlay { common, time, chi } => {
            let config = common.resolve(&[0.0])?;
            commands::run_overlay(&config, time, chi)?;
        }
        Command::Catalyst(common) => {
            let config = common.resolve(&[0.0, 0.1, 0.5, 1.0])?;
            commands::run_catalyst(&config)?;
        }
        Command::Qubo { common, k_max, precision } => {
            let config = common.resolve(&[0.0])?;
            let precision = precision
                .as_deref()
                .map(|text| parse_grid(text, "precision"))
                .transpose()?;
            commands::run_qubo(&config, k_max, precision)?;
        }
        Command::Spectrum(common) => {
            let config = common.resolve(&[0.0])?;
            commands::run_spectrum(&config)?;
        }
        Command::Lsq(common) => {
            let config = common.resolve(&[0.0])?;
            commands::run_lsq(&config)?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
