//! Admission control.
//!
//! For every request the queue is replayed, with the request inserted at its
//! EDF position, against a forecast of available capacity. The request is
//! rejected if any job would finish after its deadline.

mod groups;
mod queue;
mod schedule;
mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::check_alpha;
use crate::freep::FreepForecast;

pub use groups::{group_by_deadline, DeadlineGroup, DeadlineGroups, PreCheck};
pub use queue::{JobQueue, JobState, QueuedJob, ReplayJob, WorkloadRequest};
pub use schedule::{feasible_schedule, CapacityProfile};
pub use trace::{read_workload_csv, write_workload_csv};

/// Admission policy. Cucumber's `alpha` tunes how optimistic the REE forecast is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum AdmissionPolicy {
    /// Perfect load knowledge, ignores energy source entirely.
    OptimalNoRee,
    /// Perfect load and production knowledge, REE only.
    OptimalReeAware,
    /// Accepts only while REE is available and nothing else is in process.
    Naive,
    Cucumber { alpha: f64 },
}

impl AdmissionPolicy {
    pub const CONSERVATIVE: AdmissionPolicy = AdmissionPolicy::Cucumber { alpha: 0.1 };
    pub const EXPECTED: AdmissionPolicy = AdmissionPolicy::Cucumber { alpha: 0.5 };
    pub const OPTIMISTIC: AdmissionPolicy = AdmissionPolicy::Cucumber { alpha: 0.9 };

    /// The six policies of the evaluation matrix.
    pub fn evaluation_set() -> [AdmissionPolicy; 6] {
        [
            AdmissionPolicy::OptimalNoRee,
            AdmissionPolicy::OptimalReeAware,
            AdmissionPolicy::Naive,
            AdmissionPolicy::CONSERVATIVE,
            AdmissionPolicy::EXPECTED,
            AdmissionPolicy::OPTIMISTIC,
        ]
    }

    pub fn cucumber(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(AdmissionPolicy::Cucumber { alpha })
    }

    /// Parses a kebab-case name; `cucumber` needs `alpha`, presets
    /// (`conservative`, `expected`, `optimistic`) do not.
    pub fn from_name(name: &str, alpha: Option<f64>) -> Result<Self> {
        match name {
            "optimal-no-ree" => Ok(AdmissionPolicy::OptimalNoRee),
            "optimal-ree-aware" => Ok(AdmissionPolicy::OptimalReeAware),
            "naive" => Ok(AdmissionPolicy::Naive),
            "cucumber" => AdmissionPolicy::cucumber(alpha.unwrap_or(0.5)),
            "conservative" => Ok(AdmissionPolicy::CONSERVATIVE),
            "expected" => Ok(AdmissionPolicy::EXPECTED),
            "optimistic" => Ok(AdmissionPolicy::OPTIMISTIC),
            other => Err(Error::Config(format!(
                "unknown policy `{other}` (expected optimal-no-ree, optimal-ree-aware, naive, \
                 cucumber, conservative, expected or optimistic)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdmissionPolicy::OptimalNoRee => "optimal-no-ree",
            AdmissionPolicy::OptimalReeAware => "optimal-ree-aware",
            AdmissionPolicy::Naive => "naive",
            AdmissionPolicy::Cucumber { .. } => "cucumber",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            AdmissionPolicy::Cucumber { alpha } => Some(*alpha),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AdmissionPolicy::Cucumber { alpha } => check_alpha(*alpha),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for AdmissionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdmissionPolicy::Cucumber { alpha } => write!(f, "cucumber(alpha={alpha})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for AdmissionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AdmissionPolicy::from_name(s, None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    /// The replay found a job finishing after its deadline.
    DeadlineViolation { job_id: String, lateness: f64 },
    NoReeAvailable,
    NodeBusy,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::DeadlineViolation { job_id, lateness } => {
                write!(f, "job {job_id} would miss its deadline by {lateness:.1}s")
            }
            RejectReason::NoReeAvailable => f.write_str("no REE available"),
            RejectReason::NodeBusy => f.write_str("another job is in process"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Accept,
    Reject(RejectReason),
}

impl Decision {
    pub fn is_accept(&self) -> bool {
        matches!(self, Decision::Accept)
    }
}

/// How the deadline test is evaluated. Both give identical decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplayMode {
    /// Deadline-group pre-check, falling back to a full replay when inconclusive.
    #[default]
    Grouped,
    Full,
}

/// Accept/reject decision for `request` arriving at `now`.
///
/// Cucumber and Optimal REE-Aware replay the queue on `u_freep`; Optimal
/// w/o REE replays on `u_free`; Naive looks only at the current REE
/// surplus and queue occupancy.
pub fn admit(
    policy: &AdmissionPolicy,
    request: &WorkloadRequest,
    queue: &JobQueue,
    freep: &FreepForecast,
    current_ree_available: bool,
    now: f64,
) -> Decision {
    admit_with(
        policy,
        request,
        queue,
        freep,
        current_ree_available,
        now,
        ReplayMode::Grouped,
    )
}

pub fn admit_with(
    policy: &AdmissionPolicy,
    request: &WorkloadRequest,
    queue: &JobQueue,
    freep: &FreepForecast,
    current_ree_available: bool,
    now: f64,
    mode: ReplayMode,
) -> Decision {
    match policy {
        AdmissionPolicy::Naive => {
            if !current_ree_available {
                Decision::Reject(RejectReason::NoReeAvailable)
            } else if !queue.is_empty() {
                Decision::Reject(RejectReason::NodeBusy)
            } else {
                Decision::Accept
            }
        }
        AdmissionPolicy::OptimalNoRee => {
            check_deadlines(queue, request, freep.free_capacity(), now, mode)
        }
        AdmissionPolicy::OptimalReeAware | AdmissionPolicy::Cucumber { .. } => {
            check_deadlines(queue, request, freep.freep_capacity(), now, mode)
        }
    }
}

/// Replays `queue` plus `request` on `capacity` and accepts iff no deadline is violated.
pub fn check_deadlines(
    queue: &JobQueue,
    request: &WorkloadRequest,
    capacity: &CapacityProfile,
    now: f64,
    mode: ReplayMode,
) -> Decision {
    let jobs = queue.replay_order(Some(request));
    if mode == ReplayMode::Grouped
        && DeadlineGroups::from_replay(&jobs, capacity, now).precheck() == PreCheck::Feasible
    {
        return Decision::Accept;
    }
    let completions = feasible_schedule(jobs.iter().map(|j| j.remaining), capacity, now);
    jobs.iter()
        .zip(&completions)
        .find(|(j, &c)| c > j.deadline + crate::DEADLINE_TOLERANCE)
        .map_or(Decision::Accept, |(j, &c)| {
            Decision::Reject(RejectReason::DeadlineViolation {
                job_id: j.id.to_string(),
                lateness: c - j.deadline,
            })
        })
}
