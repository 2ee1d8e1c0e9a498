//! Discrete-event simulation of one node.
//!
//! Events at equal timestamps are processed in the order forecast refresh,
//! mitigation evaluation, arrival, completion. Between events every rate is
//! constant, so job progress and energy are integrated exactly; completions
//! and arrivals may fall mid-step.

mod engine;
mod metrics;

use serde::{Deserialize, Serialize};

use crate::admission::AdmissionPolicy;
use crate::error::{Error, Result};
use crate::forecast::check_alpha;
use crate::forecast::fusion::DEFAULT_SAMPLE_COUNT;
use crate::power::PowerModel;
use crate::scenario::Scenario;

pub use engine::run;
pub use metrics::{energy_split, JobRecord, PowerSample, RunMetrics};

/// Where Cucumber and Naive get their forecasts from. The optimal baselines
/// always use perfect ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForecastSource {
    /// The scenario's issued forecasts.
    #[default]
    Realistic,
    /// Actuals re-wrapped as point forecasts.
    Perfect,
}

impl ForecastSource {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "realistic" => Ok(ForecastSource::Realistic),
            "perfect" => Ok(ForecastSource::Perfect),
            other => Err(Error::Config(format!(
                "unknown forecast source `{other}` (expected realistic or perfect)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ForecastSource::Realistic => "realistic",
            ForecastSource::Perfect => "perfect",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub policy: AdmissionPolicy,
    pub forecasts: ForecastSource,
    pub power: PowerModel,
    pub step_duration: i64,
    /// Steps per forecast.
    pub horizon_steps: usize,
    /// Seconds between forecast refreshes (and mitigation evaluations).
    pub forecast_refresh: i64,
    /// Pair samples per step for joint REE fusion.
    pub sample_count: usize,
    /// Quantile used to reduce a probabilistic load forecast to one trajectory.
    pub reduction_alpha: f64,
    pub seed: u64,
    /// Simulate only the first `n` steps of the scenario.
    pub run_steps: Option<usize>,
    /// Keep a per-step power trace in the metrics.
    pub record_trace: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            policy: AdmissionPolicy::EXPECTED,
            forecasts: ForecastSource::Realistic,
            power: PowerModel::default(),
            step_duration: 600,
            horizon_steps: 144,
            forecast_refresh: 600,
            sample_count: DEFAULT_SAMPLE_COUNT,
            reduction_alpha: 0.5,
            seed: 0,
            run_steps: None,
            record_trace: false,
        }
    }
}

impl SimulationConfig {
    pub fn with_policy(policy: AdmissionPolicy) -> Self {
        Self {
            policy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        PowerModel::new(self.power.p_static(), self.power.p_max())?;
        check_alpha(self.reduction_alpha)?;
        if self.step_duration <= 0 {
            return Err(Error::Config("step duration must be positive".into()));
        }
        if self.horizon_steps == 0 {
            return Err(Error::Config("horizon must be at least one step".into()));
        }
        if self.forecast_refresh <= 0 || self.forecast_refresh % self.step_duration != 0 {
            return Err(Error::Config(format!(
                "forecast refresh ({}s) must be a positive multiple of the step ({}s)",
                self.forecast_refresh, self.step_duration
            )));
        }
        if self.sample_count == 0 {
            return Err(Error::Config("sample count must be positive".into()));
        }
        if self.run_steps == Some(0) {
            return Err(Error::Config("run_steps must be positive".into()));
        }
        Ok(())
    }

    /// The forecast source actually used under this policy.
    pub fn effective_forecasts(&self) -> ForecastSource {
        match self.policy {
            AdmissionPolicy::OptimalNoRee | AdmissionPolicy::OptimalReeAware => ForecastSource::Perfect,
            _ => self.forecasts,
        }
    }
}

/// Runs every `(scenario, config)` cell on at most `jobs` threads.
///
/// Results come back in input order; a failing cell does not stop the others.
pub fn run_matrix(cells: &[(&Scenario, SimulationConfig)], jobs: usize) -> Vec<Result<RunMetrics>> {
    use rayon::prelude::*;
    let work = || cells.par_iter().map(|(s, c)| run(s, c)).collect();
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(work),
        Err(e) => {
            log::warn!("could not build a thread pool ({e}); running sequentially");
            cells.iter().map(|(s, c)| run(s, c)).collect()
        }
    }
}
