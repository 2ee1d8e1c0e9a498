//! Synthetic solar sites, baseloads and workload traces.
//!
//! Solar production is a clear-sky half-sine over the daylight window (solar
//! noon at 12:00 UTC) attenuated by a two-state cloud chain whose stationary
//! sunny fraction is `sunshine / daylight`. Forecasts are issued every step
//! as p10/p50/p90 bands around the truth, with errors that grow with lead time.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ForecastSet, Scenario};
use crate::admission::WorkloadRequest;
use crate::error::{Error, Result};
use crate::forecast::{PointSeries, ProbabilisticSeries, TimeGrid, Unit};
use crate::seed::{derive_indexed, derive_seed};
use crate::time::{next_midnight, SECONDS_PER_DAY, SECONDS_PER_HOUR};

/// 2022-01-03T00:00:00Z, a Monday in January like the evaluated period.
pub const DEFAULT_START: i64 = 1_641_168_000;
/// Size of every edge-computing job, in capacity·seconds.
pub const DEFAULT_EDGE_JOB_SIZE: f64 = 300.0;

const QUANTILE_LEVELS: [f64; 3] = [0.1, 0.5, 0.9];
/// Standard-normal 0.9 quantile; half-width of a p10..p90 band in sigmas.
const Z90: f64 = 1.281_551_565_544_600_5;
const CLOUD_PERSISTENCE: f64 = 0.9;
const CLOUDY_FACTOR: (f64, f64) = (0.05, 0.25);
const BASELOAD_RANGE: (f64, f64) = (0.02, 0.7);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteProfile {
    pub name: String,
    pub daylight_hours: f64,
    pub sunshine_hours: f64,
    pub peak_watts: f64,
}

impl SiteProfile {
    pub fn new(name: impl Into<String>, daylight_hours: f64, sunshine_hours: f64, peak_watts: f64) -> Result<Self> {
        let p = Self {
            name: name.into(),
            daylight_hours,
            sunshine_hours,
            peak_watts,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=24.0).contains(&self.daylight_hours) {
            return Err(Error::InvalidProfile(format!(
                "daylight hours must be in [0, 24], got {}",
                self.daylight_hours
            )));
        }
        if !(0.0 <= self.sunshine_hours && self.sunshine_hours <= self.daylight_hours) {
            return Err(Error::InvalidProfile(format!(
                "sunshine hours must be in [0, daylight={}], got {}",
                self.daylight_hours, self.sunshine_hours
            )));
        }
        if !(self.peak_watts.is_finite() && self.peak_watts >= 0.0) {
            return Err(Error::InvalidProfile(format!("bad peak watts {}", self.peak_watts)));
        }
        Ok(())
    }

    /// January-like sites with a 400 W panel.
    pub fn presets() -> [SiteProfile; 3] {
        let site = |n: &str, d, s| SiteProfile {
            name: n.into(),
            daylight_hours: d,
            sunshine_hours: s,
            peak_watts: 400.0,
        };
        [
            site("berlin-like", 8.0, 2.0),
            site("mexico-city-like", 11.0, 7.0),
            site("cape-town-like", 14.0, 11.0),
        ]
    }

    pub fn preset(name: &str) -> Result<SiteProfile> {
        Self::presets()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| {
                Error::InvalidProfile(format!(
                    "unknown site `{name}` (expected berlin-like, mexico-city-like or cape-town-like)"
                ))
            })
    }

    /// Expected fraction of daylight steps that are sunny.
    pub fn sunny_fraction(&self) -> f64 {
        if self.daylight_hours > 0.0 {
            self.sunshine_hours / self.daylight_hours
        } else {
            0.0
        }
    }
}

/// Clear-sky production at `t`: a half-sine between sunrise and sunset.
pub fn clear_sky(t: f64, daylight_hours: f64, peak_watts: f64) -> f64 {
    if daylight_hours <= 0.0 {
        return 0.0;
    }
    let h = t.rem_euclid(SECONDS_PER_DAY as f64) / SECONDS_PER_HOUR as f64;
    let sunrise = 12.0 - daylight_hours / 2.0;
    let x = (h - sunrise) / daylight_hours;
    if (0.0..=1.0).contains(&x) {
        (peak_watts * (PI * x).sin()).max(0.0)
    } else {
        0.0
    }
}

/// Forecast error: median offset and p10..p90 band, both growing linearly with lead time.
///
/// For solar, values are fractions of the clear-sky curve; for baseload they
/// are absolute utilization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastErrorModel {
    pub bias: f64,
    pub base_error: f64,
    pub error_growth: f64,
    pub band_base: f64,
    pub band_growth: f64,
    /// Lag-one correlation of the error along the lead axis.
    pub correlation: f64,
}

impl Default for ForecastErrorModel {
    fn default() -> Self {
        Self::solar()
    }
}

impl ForecastErrorModel {
    pub fn solar() -> Self {
        Self {
            bias: 0.0,
            base_error: 0.05,
            error_growth: 0.2,
            band_base: 0.05,
            band_growth: 0.2,
            correlation: 0.9,
        }
    }

    pub fn baseload() -> Self {
        Self {
            bias: 0.0,
            base_error: 0.02,
            error_growth: 0.06,
            band_base: 0.03,
            band_growth: 0.07,
            correlation: 0.9,
        }
    }

    /// Forecasts equal the truth with collapsed bands.
    pub fn zero() -> Self {
        Self {
            bias: 0.0,
            base_error: 0.0,
            error_growth: 0.0,
            band_base: 0.0,
            band_growth: 0.0,
            correlation: 0.0,
        }
    }

    fn error_sd(&self, frac: f64) -> f64 {
        self.base_error + self.error_growth * frac
    }

    fn band(&self, frac: f64) -> f64 {
        Z90 * (self.band_base + self.band_growth * frac)
    }
}

/// AR(1) standard-normal path of length `n`.
fn ar1_path(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> Vec<f64> {
    let innov = (1.0 - rho * rho).max(0.0).sqrt();
    let mut z: f64 = rng.sample(StandardNormal);
    (0..n)
        .map(|_| {
            let cur = z;
            let e: f64 = rng.sample(StandardNormal);
            z = rho * z + innov * e;
            cur
        })
        .collect()
}

/// Quantile forecasts issued at every step `0..issues` of `truth`.
///
/// `scale[i]` converts the relative error model into value units at step `i`
/// and `upper[i]` caps the forecast.
fn quantile_forecasts(
    truth: &[f64],
    scale: &[f64],
    upper: &[f64],
    lower: f64,
    issues: usize,
    start: i64,
    step: i64,
    horizon: usize,
    unit: Unit,
    model: &ForecastErrorModel,
    seed: u64,
) -> Result<ForecastSet> {
    let mut out = BTreeMap::new();
    for r in 0..issues {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_indexed(seed, r as u64));
        let z = ar1_path(&mut rng, horizon, model.correlation);
        let mut p10 = Vec::with_capacity(horizon);
        let mut p50 = Vec::with_capacity(horizon);
        let mut p90 = Vec::with_capacity(horizon);
        for (k, zk) in z.iter().enumerate() {
            let i = r + k;
            let frac = k as f64 / horizon as f64;
            let (lo, hi) = (lower.min(upper[i]), upper[i]);
            let med = (truth[i] + scale[i] * (model.bias + model.error_sd(frac) * zk)).clamp(lo, hi);
            let band = scale[i] * model.band(frac);
            p10.push((med - band).clamp(0.0, med));
            p50.push(med);
            p90.push((med + band).clamp(med, hi));
        }
        let issued = start + step * r as i64;
        let grid = TimeGrid::new(issued, step, horizon)?;
        let f = ProbabilisticSeries::quantiles(grid, unit, QUANTILE_LEVELS.to_vec(), vec![p10, p50, p90])?;
        out.insert(issued, f);
    }
    Ok(out)
}

/// Time span and resolution of a synthetic scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Period {
    pub start: i64,
    pub step: i64,
    pub days: u32,
    pub horizon_steps: usize,
}

impl Period {
    fn validate(&self) -> Result<()> {
        if self.step <= 0 || SECONDS_PER_DAY % self.step != 0 {
            return Err(Error::Config(format!(
                "step must divide a day evenly, got {}s",
                self.step
            )));
        }
        if self.days == 0 || self.horizon_steps == 0 {
            return Err(Error::Config("days and horizon must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (SECONDS_PER_DAY / self.step) as usize * self.days as usize
    }

    pub fn end(&self) -> i64 {
        self.start + SECONDS_PER_DAY * i64::from(self.days)
    }

    fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.start, self.step, self.steps())
    }

    fn time(&self, i: usize) -> f64 {
        (self.start + self.step * i as i64) as f64
    }
}

pub struct SolarSynthesis {
    pub actuals: PointSeries,
    pub forecasts: ForecastSet,
}

/// Production actuals and p10/p50/p90 forecasts for `site`.
pub fn synthesize_solar(
    site: &SiteProfile,
    period: &Period,
    model: &ForecastErrorModel,
    seed: u64,
) -> Result<SolarSynthesis> {
    site.validate()?;
    period.validate()?;
    let n = period.steps();
    let total = n + period.horizon_steps;
    let clear: Vec<f64> = (0..total)
        .map(|i| clear_sky(period.time(i), site.daylight_hours, site.peak_watts))
        .collect();

    let s = site.sunny_fraction();
    let to_cloudy = (1.0 - CLOUD_PERSISTENCE) * (1.0 - s);
    let to_sunny = (1.0 - CLOUD_PERSISTENCE) * s;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "solar"));
    let mut sunny = rng.random::<f64>() < s;
    let mut factor = 1.0;
    if !sunny {
        factor = rng.random_range(CLOUDY_FACTOR.0..CLOUDY_FACTOR.1);
    }
    let mut truth = Vec::with_capacity(total);
    for c in &clear {
        truth.push(c * if sunny { 1.0 } else { factor });
        let u: f64 = rng.random();
        if sunny && u < to_cloudy {
            sunny = false;
            factor = rng.random_range(CLOUDY_FACTOR.0..CLOUDY_FACTOR.1);
        } else if !sunny && u < to_sunny {
            sunny = true;
        }
    }

    // Cloudier sites have less predictable production.
    let scaled = ForecastErrorModel {
        base_error: model.base_error * (0.5 + (1.0 - s)),
        error_growth: model.error_growth * (0.5 + (1.0 - s)),
        ..*model
    };
    let forecasts = quantile_forecasts(
        &truth,
        &clear,
        &clear,
        0.0,
        n,
        period.start,
        period.step,
        period.horizon_steps,
        Unit::Watts,
        &scaled,
        derive_seed(seed, "solar-forecast"),
    )?;
    truth.truncate(n);
    Ok(SolarSynthesis {
        actuals: PointSeries::new(period.grid()?, Unit::Watts, truth)?,
        forecasts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkloadKind {
    /// ML training: deadline at the next midnight.
    #[serde(alias = "ml-training")]
    Relaxed,
    /// Edge computing: fixed size, short log-normal slack.
    #[serde(alias = "edge-computing")]
    Tight,
}

impl WorkloadKind {
    pub fn name(self) -> &'static str {
        match self {
            WorkloadKind::Relaxed => "relaxed",
            WorkloadKind::Tight => "tight",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relaxed" | "ml-training" => Ok(WorkloadKind::Relaxed),
            "tight" | "edge-computing" => Ok(WorkloadKind::Tight),
            other => Err(Error::Config(format!(
                "unknown workload kind `{other}` (expected relaxed or tight)"
            ))),
        }
    }

    /// Default arrivals per day.
    pub fn default_jobs_per_day(self) -> f64 {
        match self {
            WorkloadKind::Relaxed => 24.0,
            WorkloadKind::Tight => 48.0,
        }
    }
}

impl fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Baseload utilization actuals and p10/p50/p90 forecasts.
///
/// Relaxed (ML) baseloads wander around 0.35; tight (edge) baseloads follow a
/// daily cycle peaking in the late afternoon.
pub fn synthesize_baseload(
    kind: WorkloadKind,
    period: &Period,
    model: &ForecastErrorModel,
    seed: u64,
) -> Result<(PointSeries, ForecastSet)> {
    period.validate()?;
    let n = period.steps();
    let total = n + period.horizon_steps;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "baseload"));
    let noise = ar1_path(&mut rng, total, 0.95);
    let (lo, hi) = BASELOAD_RANGE;
    let truth: Vec<f64> = (0..total)
        .map(|i| {
            let h = period.time(i).rem_euclid(SECONDS_PER_DAY as f64) / SECONDS_PER_HOUR as f64;
            let v = match kind {
                WorkloadKind::Relaxed => 0.35 + 0.12 * noise[i],
                WorkloadKind::Tight => {
                    0.1 + 0.45 * 0.5 * (1.0 - (2.0 * PI * (h - 5.0) / 24.0).cos()) + 0.03 * noise[i]
                }
            };
            v.clamp(lo, hi)
        })
        .collect();
    let ones = vec![1.0; total];
    let forecasts = quantile_forecasts(
        &truth,
        &ones,
        &ones,
        0.0,
        n,
        period.start,
        period.step,
        period.horizon_steps,
        Unit::Utilization,
        model,
        derive_seed(seed, "baseload-forecast"),
    )?;
    let actual = PointSeries::new(period.grid()?, Unit::Utilization, truth[..n].to_vec())?;
    Ok((actual, forecasts))
}

/// Deadline rule of the relaxed scenario: the next midnight.
pub fn relaxed_deadline(arrival: f64) -> f64 {
    next_midnight(arrival)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub count: usize,
    pub start: i64,
    pub days: u32,
    /// Median slack of tight jobs, seconds.
    pub median_slack: f64,
    pub slack_sigma: f64,
    pub edge_job_size: f64,
    pub relaxed_size_min: f64,
    pub relaxed_size_max: f64,
    /// Every job must fit its slack at this capacity, so it is feasible on its own.
    pub min_free_capacity: f64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            kind: WorkloadKind::Relaxed,
            count: 24,
            start: DEFAULT_START,
            days: 1,
            median_slack: 41.0 * 60.0,
            slack_sigma: 0.6,
            edge_job_size: DEFAULT_EDGE_JOB_SIZE,
            relaxed_size_min: 300.0,
            relaxed_size_max: 3600.0,
            min_free_capacity: 1.0 - BASELOAD_RANGE.1,
        }
    }
}

fn edge_rate(t: f64) -> f64 {
    let h = t.rem_euclid(SECONDS_PER_DAY as f64) / SECONDS_PER_HOUR as f64;
    0.25 + 0.75 * 0.5 * (1.0 - (2.0 * PI * (h - 4.0) / 24.0).cos())
}

/// Generates `spec.count` requests sorted by arrival.
pub fn synthesize_workloads(spec: &WorkloadSpec, seed: u64) -> Result<Vec<WorkloadRequest>> {
    if spec.count == 0 || spec.days == 0 {
        return Err(Error::Config("workload count and days must be positive".into()));
    }
    if !(spec.min_free_capacity > 0.0 && spec.min_free_capacity <= 1.0) {
        return Err(Error::Config("min_free_capacity must be in (0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "workloads"));
    let end = spec.start + SECONDS_PER_DAY * i64::from(spec.days);
    let mut arrivals: Vec<i64> = Vec::with_capacity(spec.count);
    while arrivals.len() < spec.count {
        let t = rng.random_range(spec.start..end);
        let keep = match spec.kind {
            WorkloadKind::Relaxed => true,
            WorkloadKind::Tight => rng.random::<f64>() < edge_rate(t as f64),
        };
        if keep {
            arrivals.push(t);
        }
    }
    arrivals.sort_unstable();

    let lognormal = LogNormal::new(spec.median_slack.ln(), spec.slack_sigma)
        .map_err(|e| Error::Config(format!("slack distribution: {e}")))?;
    let prefix = match spec.kind {
        WorkloadKind::Relaxed => "ml",
        WorkloadKind::Tight => "edge",
    };
    arrivals
        .into_iter()
        .enumerate()
        .map(|(k, a)| {
            let arrival = a as f64;
            let (size, deadline) = match spec.kind {
                WorkloadKind::Relaxed => {
                    let deadline = relaxed_deadline(arrival);
                    let size = rng
                        .random_range(spec.relaxed_size_min..=spec.relaxed_size_max)
                        .min((deadline - arrival) * spec.min_free_capacity);
                    (size, deadline)
                }
                WorkloadKind::Tight => {
                    let size = spec.edge_job_size;
                    let floor = (size / spec.min_free_capacity).ceil();
                    let slack = lognormal.sample(&mut rng).round().max(floor);
                    (size, arrival + slack)
                }
            };
            WorkloadRequest::new(format!("{prefix}-{k:05}"), arrival, size, deadline)
        })
        .collect()
}

/// Parameters of a fully synthetic scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub site: String,
    pub kind: WorkloadKind,
    pub days: u32,
    pub seed: u64,
    pub start: i64,
    pub step_seconds: i64,
    pub horizon_steps: usize,
    /// Defaults to the kind's [`WorkloadKind::default_jobs_per_day`].
    pub jobs_per_day: Option<f64>,
    pub edge_job_size: f64,
    pub median_slack: f64,
    /// Overrides for the site preset.
    pub daylight_hours: Option<f64>,
    pub sunshine_hours: Option<f64>,
    pub peak_watts: Option<f64>,
    pub solar_error: ForecastErrorModel,
    pub baseload_error: ForecastErrorModel,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            site: "cape-town-like".into(),
            kind: WorkloadKind::Relaxed,
            days: 14,
            seed: 0,
            start: DEFAULT_START,
            step_seconds: 600,
            horizon_steps: 144,
            jobs_per_day: None,
            edge_job_size: DEFAULT_EDGE_JOB_SIZE,
            median_slack: 41.0 * 60.0,
            daylight_hours: None,
            sunshine_hours: None,
            peak_watts: None,
            solar_error: ForecastErrorModel::solar(),
            baseload_error: ForecastErrorModel::baseload(),
        }
    }
}

impl SyntheticSpec {
    pub fn site_profile(&self) -> Result<SiteProfile> {
        let mut site = match SiteProfile::preset(&self.site) {
            Ok(p) => p,
            Err(e) if self.daylight_hours.is_none() => return Err(e),
            Err(_) => SiteProfile {
                name: self.site.clone(),
                daylight_hours: 0.0,
                sunshine_hours: 0.0,
                peak_watts: 400.0,
            },
        };
        if let Some(d) = self.daylight_hours {
            site.daylight_hours = d;
            site.sunshine_hours = site.sunshine_hours.min(d);
        }
        if let Some(s) = self.sunshine_hours {
            site.sunshine_hours = s;
        }
        if let Some(p) = self.peak_watts {
            site.peak_watts = p;
        }
        site.validate()?;
        Ok(site)
    }

    pub fn period(&self) -> Period {
        Period {
            start: self.start,
            step: self.step_seconds,
            days: self.days,
            horizon_steps: self.horizon_steps,
        }
    }

    pub fn job_count(&self) -> usize {
        let per_day = self.jobs_per_day.unwrap_or(self.kind.default_jobs_per_day());
        ((per_day * f64::from(self.days)).round() as usize).max(1)
    }

    pub fn name(&self) -> String {
        format!("{}-{}-{}d-seed{}", self.kind, self.site, self.days, self.seed)
    }
}

pub fn synthesize_scenario(spec: &SyntheticSpec) -> Result<Scenario> {
    let site = spec.site_profile()?;
    let period = spec.period();
    let solar = synthesize_solar(&site, &period, &spec.solar_error, spec.seed)?;
    let (baseload, baseload_fc) = synthesize_baseload(spec.kind, &period, &spec.baseload_error, spec.seed)?;
    let workloads = synthesize_workloads(
        &WorkloadSpec {
            kind: spec.kind,
            count: spec.job_count(),
            start: spec.start,
            days: spec.days,
            median_slack: spec.median_slack,
            edge_job_size: spec.edge_job_size,
            ..WorkloadSpec::default()
        },
        spec.seed,
    )?;
    Scenario::new(
        spec.name(),
        workloads,
        baseload,
        solar.actuals,
        baseload_fc,
        solar.forecasts,
    )
}
