//! Deadline groups: a cheap pre-check in front of the full queue replay.
//!
//! Jobs run back to back from `now`, so the last job of a deadline group
//! finishes exactly when the capacity integral reaches the total work queued
//! up to and including that group. A group therefore meets its deadline iff
//! that prefix of work fits into the capacity available until the deadline.

use super::queue::{JobQueue, ReplayJob, WorkloadRequest};
use super::schedule::CapacityProfile;

#[derive(Debug, Clone, PartialEq)]
pub struct DeadlineGroup {
    pub deadline: f64,
    pub jobs: usize,
    /// Remaining work of the jobs in this group.
    pub remaining: f64,
    /// Remaining work of this group and everything scheduled before it.
    pub prefix_remaining: f64,
    /// Cached capacity·seconds available from `now` until `deadline`.
    pub capacity_to_deadline: f64,
    /// The group holding the running job, which is pinned at the head.
    pub running: bool,
}

impl DeadlineGroup {
    /// Capacity·seconds left over at the deadline (negative when violated).
    pub fn headroom(&self) -> f64 {
        self.capacity_to_deadline - self.prefix_remaining
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreCheck {
    /// Every group fits with margin; the full replay would accept.
    Feasible,
    /// Violations are possible; run the full replay.
    NeedsReplay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeadlineGroups {
    now: f64,
    groups: Vec<DeadlineGroup>,
}

impl DeadlineGroups {
    pub fn from_replay(jobs: &[ReplayJob<'_>], capacity: &CapacityProfile, now: f64) -> Self {
        let mut groups: Vec<DeadlineGroup> = Vec::new();
        let mut prefix = 0.0;
        for job in jobs {
            prefix += job.remaining;
            match groups.last_mut() {
                Some(g) if !g.running && !job.running && g.deadline == job.deadline => {
                    g.jobs += 1;
                    g.remaining += job.remaining;
                    g.prefix_remaining = prefix;
                }
                _ => groups.push(DeadlineGroup {
                    deadline: job.deadline,
                    jobs: 1,
                    remaining: job.remaining,
                    prefix_remaining: prefix,
                    capacity_to_deadline: capacity.integral(now, job.deadline),
                    running: job.running,
                }),
            }
        }
        Self { now, groups }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn groups(&self) -> &[DeadlineGroup] {
        &self.groups
    }

    pub fn precheck(&self) -> PreCheck {
        let clear = self.groups.iter().all(|g| {
            let margin = 1e-9 * g.prefix_remaining.max(1.0);
            g.headroom() >= margin
        });
        if clear {
            PreCheck::Feasible
        } else {
            PreCheck::NeedsReplay
        }
    }
}

/// Groups the queue (plus an optional candidate at its EDF position) by exact deadline.
pub fn group_by_deadline(
    queue: &JobQueue,
    candidate: Option<&WorkloadRequest>,
    capacity: &CapacityProfile,
    now: f64,
) -> DeadlineGroups {
    DeadlineGroups::from_replay(&queue.replay_order(candidate), capacity, now)
}
