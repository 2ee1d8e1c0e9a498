//! `cucumber`: generate scenarios, run simulations and sweeps, render reports.
//!
//! Exit codes: 0 success, 1 at least one sweep cell failed, 2 configuration
//! error (bad flags, matrix or parameters), 3 data error (unreadable or
//! inconsistent input files, I/O failures).

mod matrix;
mod report;

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use cucumber_core::scenario::{save_scenario, synthesize_scenario, SyntheticSpec, WorkloadKind};
use cucumber_core::simulator::run_matrix;
use cucumber_core::{AdmissionPolicy, ForecastSource, PowerModel, RunMetrics, Scenario, SimulationConfig};

use matrix::Cell;
use report::{Row, RunReport};

/// A user-supplied setting is invalid (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Parser)]
#[command(name = "cucumber", version, about = "Renewable-aware admission control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a scenario directory.
    Generate(GenerateArgs),
    /// Simulate one policy on one scenario.
    Run(RunArgs),
    /// Simulate every cell of a matrix file.
    Sweep(SweepArgs),
    /// Print the summary table of an existing report.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Site preset: berlin-like, mexico-city-like or cape-town-like.
    #[arg(long, default_value = "cape-town-like")]
    site: String,
    /// Workload kind: relaxed (midnight deadlines) or tight (minutes of slack).
    #[arg(long, default_value = "relaxed")]
    kind: String,
    #[arg(long, default_value_t = 14)]
    days: u32,
    #[arg(long)]
    jobs_per_day: Option<f64>,
}

impl SynthArgs {
    fn spec(&self, seed: u64, step: i64, horizon: usize) -> anyhow::Result<SyntheticSpec> {
        Ok(SyntheticSpec {
            site: self.site.clone(),
            kind: WorkloadKind::parse(&self.kind)?,
            days: self.days,
            seed,
            step_seconds: step,
            horizon_steps: horizon,
            jobs_per_day: self.jobs_per_day,
            ..SyntheticSpec::default()
        })
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    synth: SynthArgs,
    #[arg(long, env = "CUCUMBER_SIM_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 600)]
    step_seconds: i64,
    #[arg(long, default_value_t = 144)]
    horizon_steps: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Simulation settings; unset flags keep matrix or built-in defaults.
#[derive(Args)]
struct SimArgs {
    /// realistic or perfect (the optimal baselines always use perfect).
    #[arg(long)]
    forecasts: Option<String>,
    #[arg(long)]
    sample_count: Option<usize>,
    #[arg(long, env = "CUCUMBER_SIM_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    p_static: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    step_seconds: Option<i64>,
    #[arg(long)]
    horizon_steps: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Directory for hourly_accepted.csv and power_trace.csv.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario directory; without it a scenario is synthesized from --site/--kind/--days.
    scenario: Option<PathBuf>,
    /// optimal-no-ree, optimal-ree-aware, naive, cucumber, or a preset
    /// (conservative, expected, optimistic).
    #[arg(long, default_value = "cucumber")]
    policy: String,
    /// Cucumber confidence level in (0, 1).
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    synth: SynthArgs,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON matrix file.
    matrix: PathBuf,
    /// Cells simulated in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// CSV or JSON report written by run or sweep.
    input: PathBuf,
}

fn build_config(policy: AdmissionPolicy, cell: Option<&Cell>, sim: &SimArgs) -> anyhow::Result<SimulationConfig> {
    let mut c = SimulationConfig::with_policy(policy);
    if let Some(cell) = cell {
        c.forecasts = cell.forecasts.unwrap_or(c.forecasts);
        c.seed = cell.seed.unwrap_or(c.seed);
        c.sample_count = cell.sample_count.unwrap_or(c.sample_count);
    }
    if let Some(f) = &sim.forecasts {
        c.forecasts = ForecastSource::parse(f)?;
    }
    c.seed = sim.seed.unwrap_or(c.seed);
    c.sample_count = sim.sample_count.unwrap_or(c.sample_count);
    c.step_duration = sim.step_seconds.unwrap_or(c.step_duration);
    c.forecast_refresh = c.step_duration;
    c.horizon_steps = sim.horizon_steps.unwrap_or(c.horizon_steps);
    c.power = PowerModel::new(
        sim.p_static.unwrap_or(c.power.p_static()),
        sim.p_max.unwrap_or(c.power.p_max()),
    )?;
    c.validate()?;
    Ok(c)
}

fn parse_policy(name: &str, alpha: Option<f64>) -> anyhow::Result<AdmissionPolicy> {
    let policy = AdmissionPolicy::from_name(name, alpha)?;
    if alpha.is_some() && policy.alpha() != alpha {
        log::warn!("--alpha only applies to the cucumber policy; ignored for {name}");
    }
    Ok(policy)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn emit_reports(
    output: &OutputArgs,
    runs: &[(Row, SimulationConfig, RunMetrics)],
) -> anyhow::Result<()> {
    let mut sink: Box<dyn Write> = match &output.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    match output.format {
        Format::Csv => {
            let rows: Vec<Row> = runs.iter().map(|(r, _, _)| r.clone()).collect();
            report::write_csv(&mut sink, &rows)?;
        }
        Format::Json => {
            let reports: Vec<RunReport<'_>> = runs
                .iter()
                .map(|(r, c, m)| RunReport { summary: r, config: c, jobs: &m.jobs })
                .collect();
            report::write_json(&mut sink, &reports)?;
        }
    }
    sink.flush()?;
    if let Some(dir) = &output.plot_data {
        let pairs: Vec<(&Row, &RunMetrics)> = runs.iter().map(|(r, _, m)| (r, m)).collect();
        let mut w = create(&dir.join("hourly_accepted.csv"))?;
        report::write_hourly(&mut w, &pairs)?;
        w.flush()?;
        let mut w = create(&dir.join("power_trace.csv"))?;
        report::write_power_trace(&mut w, &pairs)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> anyhow::Result<()> {
    let spec = args.synth.spec(args.seed, args.step_seconds, args.horizon_steps)?;
    let scenario = synthesize_scenario(&spec)?;
    save_scenario(&scenario, &args.out)?;
    eprintln!(
        "wrote {} ({} requests, {} forecasts) to {}",
        scenario.name(),
        scenario.workloads().len(),
        scenario.production_forecasts().len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<()> {
    let policy = parse_policy(&args.policy, args.alpha)?;
    let mut config = build_config(policy, None, &args.sim)?;
    config.record_trace = args.output.plot_data.is_some();
    let scenario: Scenario = match &args.scenario {
        Some(dir) => cucumber_core::scenario::load_scenario(dir)?,
        None => synthesize_scenario(&args.synth.spec(config.seed, config.step_duration, config.horizon_steps)?)?,
    };
    let metrics = cucumber_core::run(&scenario, &config)?;
    let row = Row::new(scenario.name(), &config, &metrics);
    emit_reports(&args.output, &[(row, config, metrics)])
}

/// Returns the number of failed cells.
fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<usize> {
    let cells = matrix::dedup(matrix::read_matrix(&args.matrix)?);
    let mut configs = Vec::with_capacity(cells.len());
    for (i, cell) in cells.iter().enumerate() {
        let policy = cell
            .admission_policy()
            .with_context(|| format!("matrix cell {}", i + 1))?;
        let mut c = build_config(policy, Some(cell), &args.sim).with_context(|| format!("matrix cell {}", i + 1))?;
        c.record_trace = args.output.plot_data.is_some();
        configs.push(c);
    }

    let scenarios = matrix::load_scenarios(&cells);
    let mut failed = 0;
    let mut runnable = Vec::new();
    for (cell, config) in cells.iter().zip(&configs) {
        match &scenarios[&matrix::scenario_key(cell)] {
            Ok(s) => runnable.push((s, config.clone())),
            Err(e) => {
                failed += 1;
                log::error!("cell {} / {}: {e}", cell.scenario.label(), cell.policy);
            }
        }
    }
    let results = run_matrix(&runnable, args.jobs);
    let mut runs = Vec::new();
    for ((scenario, config), result) in runnable.into_iter().zip(results) {
        match result {
            Ok(m) => runs.push((Row::new(scenario.name(), &config, &m), config, m)),
            Err(e) => {
                failed += 1;
                log::error!("cell {} / {}: {e}", scenario.name(), config.policy);
            }
        }
    }
    emit_reports(&args.output, &runs)?;
    let rows: Vec<Row> = runs.into_iter().map(|(r, _, _)| r).collect();
    let table = report::summary_table(&rows);
    if args.output.out.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    if failed > 0 {
        eprintln!("{failed} cell(s) failed");
    }
    Ok(failed)
}

fn cmd_report(args: &ReportArgs) -> anyhow::Result<()> {
    let rows = report::read_rows(&args.input).map_err(|e| {
        anyhow::Error::from(ConfigError(format!("{}: {e}", args.input.display())))
    })?;
    print!("{}", report::summary_table(&rows));
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<cucumber_core::Error>() {
            return if e.is_config() { 2 } else { 3 };
        }
    }
    3
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a).map(|_| 0),
        Command::Run(a) => cmd_run(a).map(|_| 0),
        Command::Sweep(a) => cmd_sweep(a).map(|failed| u8::from(failed > 0)),
        Command::Report(a) => cmd_report(a).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
