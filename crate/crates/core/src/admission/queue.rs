use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A delay-tolerant job request.
///
/// `size` is capacity·seconds: a job that needs the whole node for 600 s has
/// size 600.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadRequest {
    pub id: String,
    pub arrival: f64,
    pub size: f64,
    pub deadline: f64,
}

impl WorkloadRequest {
    pub fn new(id: impl Into<String>, arrival: f64, size: f64, deadline: f64) -> Result<Self> {
        let r = Self {
            id: id.into(),
            arrival,
            size,
            deadline,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.size.is_finite() && self.size > 0.0) {
            return Err(Error::InvalidSeries(format!(
                "request {}: size must be positive, got {}",
                self.id, self.size
            )));
        }
        if !(self.arrival.is_finite() && self.deadline.is_finite() && self.deadline > self.arrival)
        {
            return Err(Error::InvalidSeries(format!(
                "request {}: deadline {} must be after arrival {}",
                self.id, self.deadline, self.arrival
            )));
        }
        Ok(())
    }

    pub fn slack(&self) -> f64 {
        self.deadline - self.arrival
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Waiting,
    Running,
    Completed,
    CompletedLate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueuedJob {
    request: WorkloadRequest,
    remaining: f64,
    state: JobState,
    seq: u64,
}

impl QueuedJob {
    fn new(request: WorkloadRequest, seq: u64) -> Self {
        Self {
            remaining: request.size,
            request,
            state: JobState::Waiting,
            seq,
        }
    }

    pub fn request(&self) -> &WorkloadRequest {
        &self.request
    }

    pub fn id(&self) -> &str {
        &self.request.id
    }

    pub fn deadline(&self) -> f64 {
        self.request.deadline
    }

    pub fn remaining(&self) -> f64 {
        self.remaining
    }

    pub fn state(&self) -> JobState {
        self.state
    }

    /// Applies `work` capacity·seconds of progress.
    pub fn consume(&mut self, work: f64) {
        self.remaining = (self.remaining - work.max(0.0)).max(0.0);
    }

    fn start(&mut self) {
        debug_assert_eq!(self.state, JobState::Waiting);
        self.state = JobState::Running;
    }

    fn finish(&mut self, on_time: bool) {
        debug_assert_eq!(self.state, JobState::Running);
        self.remaining = 0.0;
        self.state = if on_time {
            JobState::Completed
        } else {
            JobState::CompletedLate
        };
    }

    fn edf_key(&self) -> (f64, u64) {
        (self.request.deadline, self.seq)
    }
}

/// A job as seen by a queue replay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayJob<'a> {
    pub id: &'a str,
    pub remaining: f64,
    pub deadline: f64,
    pub running: bool,
}

/// Single-worker, non-preemptive EDF queue.
///
/// Waiting jobs are kept sorted by deadline with arrival order breaking ties.
/// The running job stays at the head until it completes.
#[derive(Debug, Clone, Default)]
pub struct JobQueue {
    running: Option<QueuedJob>,
    waiting: Vec<QueuedJob>,
    next_seq: u64,
}

impl JobQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn running(&self) -> Option<&QueuedJob> {
        self.running.as_ref()
    }

    pub fn running_mut(&mut self) -> Option<&mut QueuedJob> {
        self.running.as_mut()
    }

    pub fn waiting(&self) -> &[QueuedJob] {
        &self.waiting
    }

    pub fn len(&self) -> usize {
        self.waiting.len() + usize::from(self.running.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds an accepted request at its EDF position.
    pub fn push(&mut self, request: WorkloadRequest) {
        let job = QueuedJob::new(request, self.next_seq);
        self.next_seq += 1;
        let key = job.edf_key();
        let pos = self
            .waiting
            .partition_point(|j| j.edf_key().partial_cmp(&key).is_some_and(|o| o.is_le()));
        self.waiting.insert(pos, job);
    }

    /// Starts the EDF head if the worker is idle. Returns the newly started job.
    pub fn dispatch(&mut self) -> Option<&QueuedJob> {
        if self.running.is_some() || self.waiting.is_empty() {
            return None;
        }
        let mut job = self.waiting.remove(0);
        job.start();
        self.running = Some(job);
        self.running.as_ref()
    }

    /// Marks the running job finished at `time` and removes it.
    pub fn finish_running(&mut self, time: f64) -> Option<QueuedJob> {
        let mut job = self.running.take()?;
        job.finish(time <= job.deadline() + crate::DEADLINE_TOLERANCE);
        Some(job)
    }

    /// Replay order: the running job, then waiting jobs in EDF order with
    /// `candidate` (if any) inserted behind waiting jobs of equal deadline.
    pub fn replay_order<'a>(&'a self, candidate: Option<&'a WorkloadRequest>) -> Vec<ReplayJob<'a>> {
        let mut out = Vec::with_capacity(self.len() + 1);
        if let Some(r) = &self.running {
            out.push(ReplayJob {
                id: r.id(),
                remaining: r.remaining,
                deadline: r.deadline(),
                running: true,
            });
        }
        let mut pending = candidate;
        for j in &self.waiting {
            if let Some(c) = pending {
                if c.deadline < j.deadline() {
                    out.push(candidate_job(c));
                    pending = None;
                }
            }
            out.push(ReplayJob {
                id: j.id(),
                remaining: j.remaining,
                deadline: j.deadline(),
                running: false,
            });
        }
        if let Some(c) = pending {
            out.push(candidate_job(c));
        }
        out
    }
}

fn candidate_job(c: &WorkloadRequest) -> ReplayJob<'_> {
    ReplayJob {
        id: &c.id,
        remaining: c.size,
        deadline: c.deadline,
        running: false,
    }
}
