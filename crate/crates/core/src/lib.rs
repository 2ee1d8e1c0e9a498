//! Renewable-aware admission control for delay-tolerant workloads.
//!
//! A single compute node runs a time-critical baseload and is powered partly by
//! an on-site renewable source. Delay-tolerant jobs (a size in capacity·seconds
//! plus a deadline) are admitted only if, according to the forecast of free
//! capacity that renewable excess energy (REE) can power, every queued deadline
//! still holds. Accepted jobs are power-capped at runtime and uncapped only when
//! a deadline is at risk.
//!
//! The crate is organised bottom-up:
//!
//! * [`forecast`]: probabilistic series, quantiles and REE fusion
//! * [`power`]: the linear utilization/power model
//! * [`freep`]: the REE-powered free-capacity forecast
//! * [`admission`]: queue replay and the four admission policies
//! * [`governor`]: runtime power capping and deadline mitigation
//! * [`simulator`]: the discrete-event run loop, metrics and run matrices
//! * [`scenario`]: scenario directories and synthetic generators

pub mod admission;
pub mod error;
pub mod forecast;
pub mod freep;
pub mod governor;
pub mod power;
pub mod scenario;
pub mod seed;
pub mod simulator;
pub mod time;

pub use admission::{
    admit, AdmissionPolicy, Decision, JobQueue, JobState, QueuedJob, RejectReason, WorkloadRequest,
};
pub use error::{Error, Result};
pub use forecast::{PointSeries, ProbabilisticSeries, Representation, TimeGrid, Unit};
pub use freep::FreepForecast;
pub use power::PowerModel;
pub use scenario::Scenario;
pub use simulator::{run, ForecastSource, RunMetrics, SimulationConfig};

/// Completion times within this many seconds after a deadline still count as on time.
///
/// Absorbs floating-point drift between projected and executed completions.
pub const DEADLINE_TOLERANCE: f64 = 1e-3;
