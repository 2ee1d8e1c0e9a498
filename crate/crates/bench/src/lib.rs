//! Fixtures shared by the benchmarks.

use cucumber_core::admission::JobQueue;
use cucumber_core::scenario::{synthesize_scenario, SyntheticSpec, WorkloadKind};
use cucumber_core::{FreepForecast, Scenario, TimeGrid, WorkloadRequest};

/// A day of 10-minute steps with a half-sine freep curve.
pub fn freep_day() -> FreepForecast {
    let n = 144;
    let freep: Vec<f64> = (0..n)
        .map(|i| (std::f64::consts::PI * i as f64 / n as f64).sin() * 0.8)
        .collect();
    FreepForecast::new(TimeGrid::new(0, 600, n).unwrap(), freep, vec![1.0; n]).unwrap()
}

/// `jobs` queued jobs with spread deadlines, the first one running, plus a
/// candidate request. Job sizes are small enough that all fit.
pub fn loaded_queue(jobs: usize, shared_deadlines: bool) -> (JobQueue, WorkloadRequest) {
    let mut q = JobQueue::new();
    let size = 20_000.0 / jobs.max(1) as f64;
    for i in 0..jobs {
        let deadline = if shared_deadlines {
            86_400.0
        } else {
            43_200.0 + 43_200.0 * i as f64 / jobs as f64
        };
        q.push(WorkloadRequest::new(format!("j{i}"), 0.0, size, deadline).unwrap());
        if i == 0 {
            q.dispatch();
        }
    }
    let candidate = WorkloadRequest::new("candidate", 0.0, size, 80_000.0).unwrap();
    (q, candidate)
}

pub fn scenario(kind: WorkloadKind, days: u32) -> Scenario {
    synthesize_scenario(&SyntheticSpec {
        site: "cape-town-like".into(),
        kind,
        days,
        seed: 1,
        ..SyntheticSpec::default()
    })
    .unwrap()
}
