use serde::Serialize;

use crate::admission::RejectReason;

/// Splits a job's energy over `dt` seconds into (REE, grid) joules.
///
/// Baseload has first claim on production; the job gets what is left.
pub fn energy_split(dt: f64, production: f64, baseload_power: f64, job_power: f64) -> (f64, f64) {
    let surplus = (production - baseload_power).max(0.0);
    let ree = job_power.min(surplus);
    (ree * dt, (job_power - ree) * dt)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobRecord {
    pub id: String,
    pub arrival: f64,
    pub size: f64,
    pub deadline: f64,
    pub accepted: bool,
    pub reject_reason: Option<RejectReason>,
    pub started: Option<f64>,
    pub completed: Option<f64>,
    /// `completed − deadline`; negative when early.
    pub lateness: Option<f64>,
    pub on_time: Option<bool>,
    pub uncapped: bool,
    pub ree_energy: f64,
    pub grid_energy: f64,
}

impl JobRecord {
    pub(crate) fn new(r: &crate::admission::WorkloadRequest) -> Self {
        Self {
            id: r.id.clone(),
            arrival: r.arrival,
            size: r.size,
            deadline: r.deadline,
            accepted: false,
            reject_reason: None,
            started: None,
            completed: None,
            lateness: None,
            on_time: None,
            uncapped: false,
            ree_energy: 0.0,
            grid_energy: 0.0,
        }
    }
}

/// Per-step averages over one step of the actuals grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSample {
    pub time: i64,
    pub production: f64,
    pub baseload_power: f64,
    pub job_power: f64,
    pub job_ree_power: f64,
    pub job_grid_power: f64,
    /// Runtime cap from the measurements of this step.
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub scenario: String,
    pub policy: String,
    pub alpha: Option<f64>,
    pub requests_total: usize,
    pub accepted: usize,
    /// `None` when there were no requests.
    pub acceptance_rate: Option<f64>,
    /// Joules of delay-tolerant work powered by REE.
    pub ree_energy: f64,
    pub grid_energy: f64,
    /// `None` when accepted work consumed no energy.
    pub ree_coverage: Option<f64>,
    pub deadline_misses: usize,
    /// Accepted jobs still queued at the end whose deadline lies beyond it.
    pub unfinished: usize,
    pub uncapped_jobs: usize,
    pub jobs: Vec<JobRecord>,
    pub power_trace: Vec<PowerSample>,
}

impl RunMetrics {
    pub(crate) fn finalize(&mut self) {
        self.requests_total = self.jobs.len();
        self.accepted = self.jobs.iter().filter(|j| j.accepted).count();
        self.uncapped_jobs = self.jobs.iter().filter(|j| j.uncapped).count();
        self.acceptance_rate =
            (self.requests_total > 0).then(|| self.accepted as f64 / self.requests_total as f64);
        self.ree_energy = self.jobs.iter().map(|j| j.ree_energy).sum();
        self.grid_energy = self.jobs.iter().map(|j| j.grid_energy).sum();
        let total = self.ree_energy + self.grid_energy;
        self.ree_coverage = (total > 0.0).then(|| self.ree_energy / total);
    }

    pub fn total_energy(&self) -> f64 {
        self.ree_energy + self.grid_energy
    }
}
