use std::collections::HashMap;

use super::metrics::{energy_split, JobRecord, PowerSample, RunMetrics};
use super::{ForecastSource, SimulationConfig};
use crate::admission::{admit, AdmissionPolicy, Decision, JobQueue, WorkloadRequest};
use crate::error::{Error, Result};
use crate::forecast::{fuse_ree, TimeGrid};
use crate::freep::{compute_freep, reduce_load_forecast, FreepForecast};
use crate::governor::{runtime_cap, CapMode, GovernorState};
use crate::power::PowerModel;
use crate::scenario::Scenario;
use crate::seed::{derive_indexed, derive_seed};
use crate::DEADLINE_TOLERANCE;

/// Leftover work below this many capacity·seconds counts as done.
const WORK_EPSILON: f64 = 1e-9;

struct Sim<'a> {
    scenario: &'a Scenario,
    config: &'a SimulationConfig,
    model: PowerModel,
    grid: TimeGrid,
    source: ForecastSource,
    fusion_seed: u64,
    queue: JobQueue,
    governor: GovernorState,
    freep: Option<FreepForecast>,
    records: Vec<JobRecord>,
    by_id: HashMap<String, usize>,
    step_energy: Vec<(f64, f64)>,
}

impl<'a> Sim<'a> {
    fn baseload(&self, idx: usize) -> f64 {
        self.scenario.baseload_actual().values()[idx]
    }

    fn production(&self, idx: usize) -> f64 {
        self.scenario.production_actual().values()[idx]
    }

    fn baseload_power(&self, idx: usize) -> f64 {
        self.model.p_static() + self.baseload(idx) * self.model.dynamic_range()
    }

    fn forecast_alpha(&self) -> f64 {
        self.config.policy.alpha().unwrap_or(0.5)
    }

    /// Freep forecast issued at `t`.
    fn forecast(&self, t: i64) -> Result<FreepForecast> {
        let h = self.config.horizon_steps;
        let alpha = self.forecast_alpha();
        let seed = derive_indexed(self.fusion_seed, t as u64);
        match self.source {
            ForecastSource::Perfect => {
                let u = self.scenario.baseload_actual().window(t, h)?;
                let p = self.scenario.production_actual().window(t, h)?;
                let cons = self.model.consumption_forecast(&u.clone().into(), None)?;
                let ree = fuse_ree(&p.into(), &cons, alpha, self.config.sample_count, seed)?;
                compute_freep(&u, &ree, &self.model)
            }
            ForecastSource::Realistic => {
                let (bf, pf) = self.scenario.forecasts_at(t as f64).ok_or_else(|| {
                    Error::InvalidSeries(format!(
                        "scenario `{}` has no forecast issued at or before {t}",
                        self.scenario.name()
                    ))
                })?;
                let bf = bf.window(t, h)?;
                let pf = pf.window(t, h)?;
                let n = bf.grid().len().min(pf.grid().len());
                let (bf, pf) = (bf.truncated(n), pf.truncated(n));
                let u = reduce_load_forecast(&bf, self.config.reduction_alpha)?;
                let cons = self.model.consumption_forecast(&bf, None)?;
                let ree = fuse_ree(&pf, &cons, alpha, self.config.sample_count, seed)?;
                compute_freep(&u, &ree, &self.model)
            }
        }
    }

    fn freep(&self) -> &FreepForecast {
        self.freep.as_ref().expect("forecast is refreshed before any event")
    }

    fn evaluate_running(&mut self, t: f64) {
        let Some(job) = self.queue.running() else {
            return;
        };
        if self.config.policy == AdmissionPolicy::OptimalNoRee {
            self.governor.uncap(job.id());
        } else {
            let freep = self.freep.as_ref().expect("forecast is refreshed before any event");
            self.governor.evaluate(job, freep, t);
        }
    }

    fn arrive(&mut self, req: &WorkloadRequest, t: f64, idx: usize) {
        let ree_available = self.production(idx) - self.baseload_power(idx) > 0.0;
        let decision = admit(&self.config.policy, req, &self.queue, self.freep(), ree_available, t);
        let mut rec = JobRecord::new(req);
        match decision {
            Decision::Accept => {
                rec.accepted = true;
                self.queue.push(req.clone());
            }
            Decision::Reject(reason) => {
                log::trace!("t={t}: reject {}: {reason}", req.id);
                rec.reject_reason = Some(reason);
            }
        }
        self.by_id.insert(req.id.clone(), self.records.len());
        self.records.push(rec);
    }

    fn record_mut(&mut self, id: &str) -> &mut JobRecord {
        let i = self.by_id[id];
        &mut self.records[i]
    }

    fn complete(&mut self, t: f64) {
        if let Some(job) = self.queue.finish_running(t) {
            let uncapped = self.governor.release(job.id()) == Some(CapMode::Uncapped);
            let rec = self.record_mut(job.id());
            rec.completed = Some(t);
            rec.lateness = Some(t - rec.deadline);
            rec.on_time = Some(t <= rec.deadline + DEADLINE_TOLERANCE);
            rec.uncapped = uncapped;
        }
    }

    fn dispatch(&mut self, t: f64) {
        if let Some(job) = self.queue.dispatch() {
            let id = job.id().to_string();
            self.record_mut(&id).started = Some(t);
            self.evaluate_running(t);
        }
    }

    /// Advances from `t` to at most `until`; returns the time reached.
    fn advance(&mut self, t: f64, until: f64, idx: usize) -> f64 {
        let b = self.baseload(idx);
        let p = self.production(idx);
        let base_power = self.baseload_power(idx);
        let range = self.model.dynamic_range();
        let Some(job) = self.queue.running() else {
            return until;
        };
        let (rate, power) = match self.governor.mode(job.id()) {
            CapMode::Capped => {
                let cap = runtime_cap(b, p, &self.model);
                (cap, (cap * range).min((p - base_power).max(0.0)))
            }
            CapMode::Uncapped => (1.0 - b, (1.0 - b) * range),
        };
        let mut next = until;
        let mut completes = false;
        if rate > 0.0 {
            let done = t + job.remaining() / rate;
            if done <= until {
                next = done;
                completes = true;
            }
        }
        let dt = next - t;
        let id = job.id().to_string();
        let job = self.queue.running_mut().expect("running job");
        if completes {
            job.consume(job.remaining());
        } else {
            job.consume(rate * dt);
            if job.remaining() <= WORK_EPSILON {
                job.consume(WORK_EPSILON);
            }
        }
        let (ree, grid) = energy_split(dt, p, base_power, power);
        let rec = self.record_mut(&id);
        rec.ree_energy += ree;
        rec.grid_energy += grid;
        if let Some(e) = self.step_energy.get_mut(idx) {
            e.0 += ree;
            e.1 += grid;
        }
        next
    }

    fn trace(&self) -> Vec<PowerSample> {
        let step = self.grid.step() as f64;
        self.step_energy
            .iter()
            .enumerate()
            .map(|(i, &(ree, grid))| PowerSample {
                time: self.grid.step_start(i),
                production: self.production(i),
                baseload_power: self.baseload_power(i),
                job_power: (ree + grid) / step,
                job_ree_power: ree / step,
                job_grid_power: grid / step,
                cap: runtime_cap(self.baseload(i), self.production(i), &self.model),
            })
            .collect()
    }
}

/// Simulates `scenario` under `config`. Deterministic for a fixed config.
pub fn run(scenario: &Scenario, config: &SimulationConfig) -> Result<RunMetrics> {
    config.validate()?;
    if scenario.step_duration() != config.step_duration {
        return Err(Error::Config(format!(
            "scenario `{}` uses {}s steps but the configuration says {}s",
            scenario.name(),
            scenario.step_duration(),
            config.step_duration
        )));
    }
    let grid = match config.run_steps {
        Some(n) => scenario.grid().truncated(n),
        None => *scenario.grid(),
    };
    let source = config.effective_forecasts();
    let horizon_secs = (config.horizon_steps as i64 * config.step_duration) as f64;
    if let Some(w) = scenario.workloads().iter().find(|w| w.slack() > horizon_secs) {
        log::warn!(
            "job {} has {}s of slack, more than the {}s forecast horizon",
            w.id,
            w.slack(),
            horizon_secs
        );
    }

    let start = grid.start() as f64;
    let end = grid.end() as f64;
    let mut arrivals: Vec<&WorkloadRequest> = scenario.workloads().iter().collect();
    arrivals.sort_by(|a, b| a.arrival.total_cmp(&b.arrival));
    let before = arrivals.len();
    arrivals.retain(|w| w.arrival >= start && w.arrival < end);
    if arrivals.len() < before {
        log::warn!(
            "{} requests arrive outside the simulated period and are ignored",
            before - arrivals.len()
        );
    }

    let mut sim = Sim {
        scenario,
        config,
        model: config.power,
        grid,
        source,
        fusion_seed: derive_seed(config.seed, "fusion"),
        queue: JobQueue::new(),
        governor: GovernorState::new(),
        freep: None,
        records: Vec::with_capacity(arrivals.len()),
        by_id: HashMap::with_capacity(arrivals.len()),
        step_energy: if config.record_trace {
            vec![(0.0, 0.0); grid.len()]
        } else {
            Vec::new()
        },
    };

    let refresh = config.forecast_refresh as f64;
    let mut next_refresh = start;
    let mut next_arrival = 0;
    let mut t = start;
    while t < end {
        if t >= next_refresh {
            sim.freep = Some(sim.forecast(next_refresh as i64)?);
            next_refresh += refresh;
            sim.evaluate_running(t);
        }
        let idx = grid.index_of(t).expect("t inside the grid");
        while let Some(req) = arrivals.get(next_arrival).filter(|r| r.arrival <= t) {
            sim.arrive(req, t, idx);
            next_arrival += 1;
        }
        if sim.queue.running().is_some_and(|j| j.remaining() <= 0.0) {
            sim.complete(t);
        }
        sim.dispatch(t);

        let mut until = (grid.step_end(idx) as f64).min(next_refresh).min(end);
        if let Some(req) = arrivals.get(next_arrival) {
            until = until.min(req.arrival);
        }
        t = sim.advance(t, until, idx);
    }
    // A job finishing exactly at the end of data still completes.
    if sim.queue.running().is_some_and(|j| j.remaining() <= 0.0) {
        sim.complete(end);
    }

    let mut misses = 0;
    let mut unfinished = 0;
    let pending: Vec<(String, f64)> = sim
        .queue
        .running()
        .into_iter()
        .chain(sim.queue.waiting())
        .map(|j| (j.id().to_string(), j.deadline()))
        .collect();
    for (id, deadline) in pending {
        let uncapped = sim.governor.mode(&id) == CapMode::Uncapped;
        let rec = sim.record_mut(&id);
        rec.uncapped = uncapped;
        if deadline <= end + DEADLINE_TOLERANCE {
            rec.on_time = Some(false);
            misses += 1;
        } else {
            unfinished += 1;
        }
    }
    misses += sim.records.iter().filter(|r| r.on_time == Some(false) && r.completed.is_some()).count();

    let power_trace = sim.trace();
    let mut metrics = RunMetrics {
        scenario: scenario.name().to_string(),
        policy: config.policy.name().to_string(),
        alpha: config.policy.alpha(),
        requests_total: 0,
        accepted: 0,
        acceptance_rate: None,
        ree_energy: 0.0,
        grid_energy: 0.0,
        ree_coverage: None,
        deadline_misses: misses,
        unfinished,
        uncapped_jobs: 0,
        jobs: sim.records,
        power_trace,
    };
    metrics.finalize();
    Ok(metrics)
}
