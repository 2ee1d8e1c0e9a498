//! Probabilistic multistep forecasts on a uniform time grid.
//!
//! A [`ProbabilisticSeries`] holds either ensemble members, a fixed set of
//! quantile trajectories, or a single point trajectory. [`fusion`] combines
//! production and consumption forecasts into a single-valued REE series.

mod csv;
pub mod fusion;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::csv::{ingest_forecast_csv, read_forecast_csv, write_forecast_csv};
pub use fusion::{fuse_ree, fuse_ree_fallback, fuse_ree_joint, JointRee};

/// Two probability levels closer than this are the same stored quantile.
pub const LEVEL_TOLERANCE: f64 = 1e-9;

/// Uniform grid; point `i` covers `[start + i·step, start + (i+1)·step)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    start: i64,
    step: i64,
    num_steps: usize,
}

impl TimeGrid {
    pub fn new(start: i64, step: i64, num_steps: usize) -> Result<Self> {
        if step <= 0 {
            return Err(Error::InvalidSeries(format!(
                "step duration must be positive, got {step}"
            )));
        }
        if num_steps == 0 {
            return Err(Error::InvalidSeries("grid has no steps".into()));
        }
        Ok(Self {
            start,
            step,
            num_steps,
        })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.num_steps
    }

    pub fn is_empty(&self) -> bool {
        self.num_steps == 0
    }

    /// Exclusive end of the last step.
    pub fn end(&self) -> i64 {
        self.start + self.step * self.num_steps as i64
    }

    pub fn step_start(&self, i: usize) -> i64 {
        self.start + self.step * i as i64
    }

    pub fn step_end(&self, i: usize) -> i64 {
        self.step_start(i + 1)
    }

    /// Index of the step containing `t`, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if t < self.start as f64 || t >= self.end() as f64 {
            return None;
        }
        let i = ((t - self.start as f64) / self.step as f64).floor() as usize;
        Some(i.min(self.num_steps - 1))
    }

    /// The first `n` steps of this grid (`n` clamped to the grid length).
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            num_steps: n.clamp(1, self.num_steps),
            ..*self
        }
    }

    pub fn ensure_same(&self, other: &TimeGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self} vs {other}")))
        }
    }
}

impl fmt::Display for TimeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[start={}, step={}s, steps={}]",
            self.start, self.step, self.num_steps
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Watts,
    Utilization,
}

impl Unit {
    pub fn name(self) -> &'static str {
        match self {
            Unit::Watts => "watts",
            Unit::Utilization => "utilization",
        }
    }

    fn check_value(self, v: f64) -> std::result::Result<(), String> {
        if !v.is_finite() {
            return Err(format!("non-finite value {v}"));
        }
        if v < 0.0 {
            return Err(format!("negative {} value {v}", self.name()));
        }
        if self == Unit::Utilization && v > 1.0 {
            return Err(format!("utilization {v} exceeds 1"));
        }
        Ok(())
    }

    pub fn ensure(self, expected: Unit) -> Result<()> {
        if self == expected {
            Ok(())
        } else {
            Err(Error::UnitMismatch {
                expected: expected.name(),
                actual: self.name(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationKind {
    Ensemble,
    Quantiles,
    Point,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    /// Member trajectories, each `num_steps` long.
    Ensemble(Vec<Vec<f64>>),
    /// One trajectory per strictly increasing probability level.
    Quantiles {
        levels: Vec<f64>,
        trajectories: Vec<Vec<f64>>,
    },
    Point(Vec<f64>),
}

impl Representation {
    pub fn kind(&self) -> RepresentationKind {
        match self {
            Representation::Ensemble(_) => RepresentationKind::Ensemble,
            Representation::Quantiles { .. } => RepresentationKind::Quantiles,
            Representation::Point(_) => RepresentationKind::Point,
        }
    }

    fn trajectories(&self) -> Box<dyn Iterator<Item = &Vec<f64>> + '_> {
        match self {
            Representation::Ensemble(m) => Box::new(m.iter()),
            Representation::Quantiles { trajectories, .. } => Box::new(trajectories.iter()),
            Representation::Point(v) => Box::new(std::iter::once(v)),
        }
    }

    fn map(&self, f: impl Fn(usize, f64) -> f64) -> Representation {
        let apply = |t: &Vec<f64>| t.iter().enumerate().map(|(i, &v)| f(i, v)).collect();
        match self {
            Representation::Ensemble(m) => Representation::Ensemble(m.iter().map(apply).collect()),
            Representation::Quantiles {
                levels,
                trajectories,
            } => Representation::Quantiles {
                levels: levels.clone(),
                trajectories: trajectories.iter().map(apply).collect(),
            },
            Representation::Point(v) => Representation::Point(apply(v)),
        }
    }
}

/// A multistep forecast whose value at every step is a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilisticSeries {
    grid: TimeGrid,
    unit: Unit,
    repr: Representation,
}

impl ProbabilisticSeries {
    pub fn new(grid: TimeGrid, unit: Unit, repr: Representation) -> Result<Self> {
        let series = Self { grid, unit, repr };
        series.validate()?;
        Ok(series)
    }

    pub fn ensemble(grid: TimeGrid, unit: Unit, members: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(grid, unit, Representation::Ensemble(members))
    }

    pub fn quantiles(
        grid: TimeGrid,
        unit: Unit,
        levels: Vec<f64>,
        trajectories: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Self::new(
            grid,
            unit,
            Representation::Quantiles {
                levels,
                trajectories,
            },
        )
    }

    pub fn point(grid: TimeGrid, unit: Unit, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, unit, Representation::Point(values))
    }

    fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        match &self.repr {
            Representation::Ensemble(members) if members.is_empty() => {
                return Err(Error::InvalidSeries("ensemble has no members".into()))
            }
            Representation::Quantiles {
                levels,
                trajectories,
            } => {
                if levels.is_empty() {
                    return Err(Error::InvalidSeries("no quantile levels".into()));
                }
                if levels.len() != trajectories.len() {
                    return Err(Error::InvalidSeries(format!(
                        "{} levels but {} trajectories",
                        levels.len(),
                        trajectories.len()
                    )));
                }
                if let Some(&bad) = levels.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
                    return Err(Error::InvalidSeries(format!(
                        "quantile level {bad} is outside (0, 1)"
                    )));
                }
                if levels.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidSeries(
                        "quantile levels must be strictly increasing".into(),
                    ));
                }
            }
            _ => {}
        }
        for traj in self.repr.trajectories() {
            if traj.len() != n {
                return Err(Error::InvalidSeries(format!(
                    "trajectory has {} values, grid has {n} steps",
                    traj.len()
                )));
            }
            for (step, &v) in traj.iter().enumerate() {
                self.unit
                    .check_value(v)
                    .map_err(|message| Error::InvariantViolation {
                        step,
                        row: step + 2,
                        message,
                    })?;
            }
        }
        if let Representation::Quantiles { trajectories, .. } = &self.repr {
            for step in 0..n {
                if trajectories
                    .windows(2)
                    .any(|w| w[0][step] > w[1][step])
                {
                    return Err(Error::InvariantViolation {
                        step,
                        row: step + 2,
                        message: "quantile trajectories cross".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn kind(&self) -> RepresentationKind {
        self.repr.kind()
    }

    /// Stored quantile levels, if this is a quantile series.
    pub fn levels(&self) -> Option<&[f64]> {
        match &self.repr {
            Representation::Quantiles { levels, .. } => Some(levels),
            _ => None,
        }
    }

    /// Per-step quantile at `alpha`.
    ///
    /// Ensembles use the linear-interpolation empirical quantile; quantile
    /// series only answer for stored levels; point series ignore `alpha`.
    pub fn quantile(&self, alpha: f64) -> Result<PointSeries> {
        check_alpha(alpha)?;
        let values = match &self.repr {
            Representation::Point(v) => v.clone(),
            Representation::Quantiles {
                levels,
                trajectories,
            } => {
                let idx = levels
                    .iter()
                    .position(|&l| (l - alpha).abs() <= LEVEL_TOLERANCE)
                    .ok_or_else(|| Error::QuantileUnavailable {
                        alpha,
                        available: levels.clone(),
                    })?;
                trajectories[idx].clone()
            }
            Representation::Ensemble(members) => {
                let mut column = Vec::with_capacity(members.len());
                (0..self.grid.len())
                    .map(|step| {
                        column.clear();
                        column.extend(members.iter().map(|m| m[step]));
                        column.sort_by(f64::total_cmp);
                        empirical_quantile(&column, alpha)
                    })
                    .collect()
            }
        };
        Ok(PointSeries {
            grid: self.grid,
            unit: self.unit,
            values,
        })
    }

    /// Applies a non-decreasing per-step map to every trajectory.
    ///
    /// Monotonicity keeps quantile trajectories from crossing; the result is
    /// validated again regardless.
    pub fn map_monotone(&self, unit: Unit, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        Self::new(self.grid, unit, self.repr.map(f))
    }

    /// The first `n` steps of the forecast.
    pub fn truncated(&self, n: usize) -> Self {
        self.slice(0, n.max(1))
    }

    /// Up to `len` steps starting at the step beginning exactly at `start`.
    pub fn window(&self, start: i64, len: usize) -> Result<Self> {
        let offset = start - self.grid.start();
        if offset < 0 || offset % self.grid.step() != 0 || start >= self.grid.end() || len == 0 {
            return Err(Error::GridMismatch(format!(
                "window start {start} is not a step of {}",
                self.grid
            )));
        }
        Ok(self.slice((offset / self.grid.step()) as usize, len))
    }

    fn slice(&self, first: usize, len: usize) -> Self {
        let last = (first + len).min(self.grid.len());
        let cut = |t: &Vec<f64>| t[first..last].to_vec();
        let repr = match &self.repr {
            Representation::Ensemble(m) => Representation::Ensemble(m.iter().map(cut).collect()),
            Representation::Quantiles {
                levels,
                trajectories,
            } => Representation::Quantiles {
                levels: levels.clone(),
                trajectories: trajectories.iter().map(cut).collect(),
            },
            Representation::Point(v) => Representation::Point(cut(v)),
        };
        Self {
            grid: TimeGrid {
                start: self.grid.step_start(first),
                step: self.grid.step,
                num_steps: last - first,
            },
            unit: self.unit,
            repr,
        }
    }
}

impl From<PointSeries> for ProbabilisticSeries {
    fn from(p: PointSeries) -> Self {
        Self {
            grid: p.grid,
            unit: p.unit,
            repr: Representation::Point(p.values),
        }
    }
}

/// A single-valued series on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSeries {
    grid: TimeGrid,
    unit: Unit,
    values: Vec<f64>,
}

impl PointSeries {
    pub fn new(grid: TimeGrid, unit: Unit, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidSeries(format!(
                "{} values for a grid of {} steps",
                values.len(),
                grid.len()
            )));
        }
        for (step, &v) in values.iter().enumerate() {
            unit.check_value(v)
                .map_err(|message| Error::InvariantViolation {
                    step,
                    row: step + 2,
                    message,
                })?;
        }
        Ok(Self { grid, unit, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value of the step containing `t`.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.grid.index_of(t).map(|i| self.values[i])
    }

    /// Up to `len` steps starting at the step beginning exactly at `start`.
    pub fn window(&self, start: i64, len: usize) -> Result<PointSeries> {
        let offset = start - self.grid.start();
        if offset < 0 || offset % self.grid.step() != 0 || start >= self.grid.end() {
            return Err(Error::GridMismatch(format!(
                "window start {start} is not a step of {}",
                self.grid
            )));
        }
        let first = (offset / self.grid.step()) as usize;
        let last = (first + len).min(self.grid.len());
        Ok(PointSeries {
            grid: TimeGrid::new(start, self.grid.step(), last - first)?,
            unit: self.unit,
            values: self.values[first..last].to_vec(),
        })
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Empirical quantile of an ascending sample by linear interpolation between
/// order statistics (position `(n − 1)·alpha`).
///
/// Panics on an empty sample.
pub fn empirical_quantile(sorted: &[f64], alpha: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * alpha;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 || sorted[hi] == sorted[lo] {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(0, 600, n).unwrap()
    }

    /// Brute-force linear-interpolation quantile: walk the sorted sample and
    /// interpolate at rank (n-1)*alpha.
    fn oracle_quantile(sample: &[f64], alpha: f64) -> f64 {
        let mut s = sample.to_vec();
        s.sort_by(f64::total_cmp);
        let rank = alpha * (s.len() as f64 - 1.0);
        let mut below = s[0];
        for (k, &v) in s.iter().enumerate() {
            if k as f64 <= rank {
                below = v;
            } else {
                let w = rank - (k - 1) as f64;
                return below + w * (v - below);
            }
        }
        below
    }

    #[test]
    fn grid_indexing() {
        let g = TimeGrid::new(100, 10, 3).unwrap();
        assert_eq!(g.end(), 130);
        assert_eq!(g.index_of(99.9), None);
        assert_eq!(g.index_of(100.0), Some(0));
        assert_eq!(g.index_of(119.99), Some(1));
        assert_eq!(g.index_of(130.0), None);
        assert!(TimeGrid::new(0, 0, 3).is_err());
        assert!(TimeGrid::new(0, 10, 0).is_err());
    }

    #[test]
    fn ensemble_median_of_three() {
        let s = ProbabilisticSeries::ensemble(
            grid(2),
            Unit::Watts,
            vec![vec![10.0, 10.0], vec![30.0, 30.0], vec![20.0, 20.0]],
        )
        .unwrap();
        assert_eq!(s.quantile(0.5).unwrap().values(), &[20.0, 20.0]);
    }

    #[test]
    fn ensemble_median_of_two_matches_oracle() {
        let s = ProbabilisticSeries::ensemble(
            grid(1),
            Unit::Watts,
            vec![vec![0.0], vec![100.0]],
        )
        .unwrap();
        let expected = oracle_quantile(&[0.0, 100.0], 0.5);
        assert_eq!(expected, 50.0);
        assert_eq!(s.quantile(0.5).unwrap().values(), &[expected]);
    }

    #[test]
    fn stored_level_lookup() {
        let s = ProbabilisticSeries::quantiles(
            grid(2),
            Unit::Watts,
            vec![0.1, 0.5, 0.9],
            vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
        )
        .unwrap();
        assert_eq!(s.quantile(0.9).unwrap().values(), &[5.0, 6.0]);
        // 1 - 0.9 is not bit-identical to 0.1
        assert_eq!(s.quantile(1.0 - 0.9).unwrap().values(), &[1.0, 2.0]);
        assert!(matches!(
            s.quantile(0.25),
            Err(Error::QuantileUnavailable { .. })
        ));
    }

    #[test]
    fn point_ignores_alpha_but_checks_range() {
        let s = ProbabilisticSeries::point(grid(2), Unit::Watts, vec![7.0, 8.0]).unwrap();
        assert_eq!(s.quantile(0.01).unwrap().values(), &[7.0, 8.0]);
        assert!(matches!(s.quantile(0.0), Err(Error::InvalidAlpha(_))));
        assert!(matches!(s.quantile(1.0), Err(Error::InvalidAlpha(_))));
    }

    #[test]
    fn rejects_crossing_quantiles() {
        let err = ProbabilisticSeries::quantiles(
            grid(3),
            Unit::Watts,
            vec![0.1, 0.9],
            vec![vec![1.0, 5.0, 1.0], vec![2.0, 4.0, 2.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { step: 1, .. }));
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert!(PointSeries::new(grid(1), Unit::Utilization, vec![1.2]).is_err());
        assert!(PointSeries::new(grid(1), Unit::Watts, vec![-1.0]).is_err());
        assert!(PointSeries::new(grid(2), Unit::Watts, vec![1.0]).is_err());
    }

    #[test]
    fn window_and_truncate() {
        let p = PointSeries::new(grid(4), Unit::Watts, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = p.window(600, 10).unwrap();
        assert_eq!(w.values(), &[2.0, 3.0, 4.0]);
        assert_eq!(w.grid().start(), 600);
        assert!(p.window(300, 2).is_err());
        let t = ProbabilisticSeries::from(p).truncated(2);
        assert_eq!(t.grid().len(), 2);
    }

    proptest! {
        #[test]
        fn ensemble_quantile_matches_oracle(
            sample in proptest::collection::vec(0.0f64..500.0, 1..20),
            alpha in 0.001f64..0.999,
        ) {
            let members = sample.iter().map(|&v| vec![v]).collect();
            let s = ProbabilisticSeries::ensemble(grid(1), Unit::Watts, members).unwrap();
            let got = s.quantile(alpha).unwrap().values()[0];
            let want = oracle_quantile(&sample, alpha);
            prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
        }

        #[test]
        fn quantiles_are_monotone_in_alpha(
            members in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 4), 1..12),
            a in 0.01f64..0.99,
            b in 0.01f64..0.99,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s = ProbabilisticSeries::ensemble(grid(4), Unit::Utilization, members).unwrap();
            let ql = s.quantile(lo).unwrap();
            let qh = s.quantile(hi).unwrap();
            for (x, y) in ql.values().iter().zip(qh.values()) {
                prop_assert!(x <= y);
            }
        }
    }
}
