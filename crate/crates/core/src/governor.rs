//! Runtime power capping and deadline mitigation.
//!
//! While capped, a job may only use the capacity the measured REE surplus can
//! power. If the forecast says the running job will miss its deadline that
//! way, the cap is lifted and the job finishes on all free capacity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::admission::{feasible_schedule, CapacityProfile, QueuedJob};
use crate::freep::FreepForecast;
use crate::power::PowerModel;

/// Capacity the current REE surplus can power:
/// `min(1 − b, max(0, (P_prod − (P_static + b·(P_max − P_static))) / (P_max − P_static)))`.
pub fn runtime_cap(measured_baseload: f64, measured_production: f64, model: &PowerModel) -> f64 {
    let b = measured_baseload.clamp(0.0, 1.0);
    let range = model.dynamic_range();
    let surplus = measured_production - (model.p_static() + b * range);
    (1.0 - b).min((surplus / range).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mitigation {
    KeepCapped,
    Uncap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapMode {
    Capped,
    Uncapped,
}

/// Projected completion of a job with `remaining` work started at `now` on `capacity`.
pub fn projected_completion(remaining: f64, capacity: &CapacityProfile, now: f64) -> f64 {
    feasible_schedule([remaining], capacity, now)[0]
}

/// Uncap iff the running job, replayed on `u_freep` from `now`, finishes after its deadline.
pub fn evaluate_mitigation(job: &QueuedJob, freep: &FreepForecast, now: f64) -> Mitigation {
    let done = projected_completion(job.remaining(), freep.freep_capacity(), now);
    if done > job.deadline() + crate::DEADLINE_TOLERANCE {
        Mitigation::Uncap
    } else {
        Mitigation::KeepCapped
    }
}

/// Per-job cap modes. Jobs start capped; uncapped is absorbing.
#[derive(Debug, Clone, Default)]
pub struct GovernorState {
    modes: BTreeMap<String, CapMode>,
    last_evaluation_time: Option<f64>,
}

impl GovernorState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mode(&self, job_id: &str) -> CapMode {
        self.modes.get(job_id).copied().unwrap_or(CapMode::Capped)
    }

    pub fn last_evaluation_time(&self) -> Option<f64> {
        self.last_evaluation_time
    }

    pub fn uncap(&mut self, job_id: &str) {
        self.modes.insert(job_id.to_string(), CapMode::Uncapped);
    }

    /// Evaluates the running job and records the resulting mode.
    pub fn evaluate(&mut self, job: &QueuedJob, freep: &FreepForecast, now: f64) -> CapMode {
        self.last_evaluation_time = Some(now);
        if self.mode(job.id()) == CapMode::Capped
            && evaluate_mitigation(job, freep, now) == Mitigation::Uncap
        {
            log::debug!("t={now}: uncapping {} to protect its deadline", job.id());
            self.uncap(job.id());
        }
        self.mode(job.id())
    }

    /// Forgets a completed job.
    pub fn release(&mut self, job_id: &str) -> Option<CapMode> {
        self.modes.remove(job_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admission::{JobQueue, WorkloadRequest};
    use crate::forecast::TimeGrid;

    fn freep(u_freep: f64, u_free: f64) -> FreepForecast {
        FreepForecast::new(TimeGrid::new(0, 600, 12).unwrap(), vec![u_freep; 12], vec![u_free; 12])
            .unwrap()
    }

    fn running(size: f64, deadline: f64) -> JobQueue {
        let mut q = JobQueue::new();
        q.push(WorkloadRequest::new("j", 0.0, size, deadline).unwrap());
        q.dispatch();
        q
    }

    #[test]
    fn cap_examples() {
        let m = PowerModel::default();
        assert!((runtime_cap(0.2, 180.0, &m) - 0.8).abs() < 1e-12);
        assert_eq!(runtime_cap(0.2, 0.0, &m), 0.0);
        assert_eq!(runtime_cap(1.0, 500.0, &m), 0.0);
        // surplus-limited
        assert!((runtime_cap(0.0, 105.0, &m) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mitigation_examples() {
        let q = running(600.0, 600.0);
        let job = q.running().unwrap();
        assert_eq!(evaluate_mitigation(job, &freep(0.5, 1.0), 0.0), Mitigation::Uncap);
        assert_eq!(evaluate_mitigation(job, &freep(1.0, 1.0), 0.0), Mitigation::KeepCapped);

        let q = running(600.0, 601.0);
        let job = q.running().unwrap();
        let f = freep(0.0, 1.0);
        assert_eq!(evaluate_mitigation(job, &f, 0.0), Mitigation::Uncap);
        assert_eq!(projected_completion(job.remaining(), f.free_capacity(), 0.0), 600.0);
    }

    #[test]
    fn uncapped_is_absorbing() {
        let q = running(600.0, 600.0);
        let job = q.running().unwrap();
        let mut g = GovernorState::new();
        assert_eq!(g.mode("j"), CapMode::Capped);
        assert_eq!(g.evaluate(job, &freep(0.5, 1.0), 0.0), CapMode::Uncapped);
        assert_eq!(g.evaluate(job, &freep(1.0, 1.0), 0.0), CapMode::Uncapped);
        assert_eq!(g.last_evaluation_time(), Some(0.0));
        assert_eq!(g.release("j"), Some(CapMode::Uncapped));
        assert_eq!(g.mode("j"), CapMode::Capped);
    }
}
