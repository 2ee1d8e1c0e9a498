//! Scenarios: a workload trace plus baseload and production actuals and the
//! forecasts issued at every refresh.

mod io;
mod synth;

use std::collections::BTreeMap;

use crate::admission::WorkloadRequest;
use crate::error::{Error, Result};
use crate::forecast::{PointSeries, ProbabilisticSeries, TimeGrid, Unit};

pub use io::{load_scenario, save_scenario, Manifest, MANIFEST_FILE};
pub use synth::{
    clear_sky, relaxed_deadline, synthesize_baseload, synthesize_scenario, synthesize_solar,
    synthesize_workloads, ForecastErrorModel, Period, SiteProfile, SolarSynthesis, SyntheticSpec,
    WorkloadKind, WorkloadSpec, DEFAULT_EDGE_JOB_SIZE, DEFAULT_START,
};

/// Forecasts keyed by the time they were issued.
pub type ForecastSet = BTreeMap<i64, ProbabilisticSeries>;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: String,
    workloads: Vec<WorkloadRequest>,
    baseload_actual: PointSeries,
    production_actual: PointSeries,
    baseload_forecasts: ForecastSet,
    production_forecasts: ForecastSet,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        workloads: Vec<WorkloadRequest>,
        baseload_actual: PointSeries,
        production_actual: PointSeries,
        baseload_forecasts: ForecastSet,
        production_forecasts: ForecastSet,
    ) -> Result<Self> {
        let s = Self {
            name: name.into(),
            workloads,
            baseload_actual,
            production_actual,
            baseload_forecasts,
            production_forecasts,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        self.baseload_actual.unit().ensure(Unit::Utilization)?;
        self.production_actual.unit().ensure(Unit::Watts)?;
        self.baseload_actual
            .grid()
            .ensure_same(self.production_actual.grid())?;
        let step = self.step_duration();
        for (role, set, unit) in [
            ("baseload", &self.baseload_forecasts, Unit::Utilization),
            ("production", &self.production_forecasts, Unit::Watts),
        ] {
            for (&issued, f) in set {
                f.unit().ensure(unit)?;
                if f.grid().start() != issued {
                    return Err(Error::GridMismatch(format!(
                        "{role} forecast issued at {issued} starts at {}",
                        f.grid().start()
                    )));
                }
                if f.grid().step() != step {
                    return Err(Error::GridMismatch(format!(
                        "{role} forecast issued at {issued} has step {}s, actuals use {step}s",
                        f.grid().step()
                    )));
                }
            }
        }
        let mut ids = std::collections::HashSet::new();
        for w in &self.workloads {
            w.validate()?;
            if !ids.insert(w.id.as_str()) {
                return Err(Error::InvalidSeries(format!("duplicate workload id `{}`", w.id)));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn workloads(&self) -> &[WorkloadRequest] {
        &self.workloads
    }

    pub fn baseload_actual(&self) -> &PointSeries {
        &self.baseload_actual
    }

    pub fn production_actual(&self) -> &PointSeries {
        &self.production_actual
    }

    pub fn baseload_forecasts(&self) -> &ForecastSet {
        &self.baseload_forecasts
    }

    pub fn production_forecasts(&self) -> &ForecastSet {
        &self.production_forecasts
    }

    /// Grid of the actuals; the simulated period.
    pub fn grid(&self) -> &TimeGrid {
        self.baseload_actual.grid()
    }

    pub fn step_duration(&self) -> i64 {
        self.grid().step()
    }

    /// Longest forecast horizon in steps (0 without forecasts).
    pub fn horizon_steps(&self) -> usize {
        self.baseload_forecasts
            .values()
            .chain(self.production_forecasts.values())
            .map(|f| f.grid().len())
            .max()
            .unwrap_or(0)
    }

    /// Latest baseload and production forecasts issued at or before `t`.
    pub fn forecasts_at(&self, t: f64) -> Option<(&ProbabilisticSeries, &ProbabilisticSeries)> {
        Some((latest(&self.baseload_forecasts, t)?, latest(&self.production_forecasts, t)?))
    }

    /// Copy with a different name.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

fn latest(set: &ForecastSet, t: f64) -> Option<&ProbabilisticSeries> {
    set.range(..=t.floor() as i64).next_back().map(|(_, f)| f)
}
