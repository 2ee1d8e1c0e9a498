use crate::error::{Error, Result};
use crate::forecast::TimeGrid;

/// Piecewise-constant capacity (utilization fraction) over a time grid.
///
/// Capacity outside the grid is zero. Prefix integrals are precomputed so the
/// capacity available over any interval is an O(1) lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityProfile {
    grid: TimeGrid,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl CapacityProfile {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidSeries(format!(
                "{} capacity values for a grid of {} steps",
                values.len(),
                grid.len()
            )));
        }
        if let Some(step) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvariantViolation {
                step,
                row: step + 2,
                message: format!("capacity {} outside [0, 1]", values[step]),
            });
        }
        Ok(Self::from_validated(grid, values))
    }

    pub(crate) fn from_validated(grid: TimeGrid, values: Vec<f64>) -> Self {
        let step = grid.step() as f64;
        let mut cumulative = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        cumulative.push(acc);
        for v in &values {
            acc += v * step;
            cumulative.push(acc);
        }
        Self {
            grid,
            values,
            cumulative,
        }
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Capacity at time `t` (zero outside the grid).
    pub fn value_at(&self, t: f64) -> f64 {
        self.grid.index_of(t).map_or(0.0, |i| self.values[i])
    }

    fn integral_to(&self, t: f64) -> f64 {
        let start = self.grid.start() as f64;
        if t <= start {
            return 0.0;
        }
        match self.grid.index_of(t) {
            Some(i) => {
                self.cumulative[i] + self.values[i] * (t - self.grid.step_start(i) as f64)
            }
            None => self.cumulative[self.values.len()],
        }
    }

    /// Capacity·seconds available over `[from, to]`.
    pub fn integral(&self, from: f64, to: f64) -> f64 {
        if to <= from {
            return 0.0;
        }
        (self.integral_to(to) - self.integral_to(from)).max(0.0)
    }
}

/// Sequential consumption of a capacity profile.
struct Cursor<'a> {
    capacity: &'a CapacityProfile,
    t: f64,
    idx: usize,
}

impl<'a> Cursor<'a> {
    fn new(capacity: &'a CapacityProfile, now: f64) -> Self {
        let grid = capacity.grid();
        let start = grid.start() as f64;
        let (t, idx) = if now < start {
            (start, 0)
        } else {
            (now, grid.index_of(now).unwrap_or(grid.len()))
        };
        Self { capacity, t, idx }
    }

    /// Consumes `need` capacity·seconds and returns the completion time.
    fn consume(&mut self, mut need: f64) -> f64 {
        if self.t.is_infinite() {
            return f64::INFINITY;
        }
        if need <= 0.0 {
            return self.t;
        }
        let grid = self.capacity.grid();
        while self.idx < grid.len() && self.t >= grid.step_end(self.idx) as f64 {
            self.idx += 1;
        }
        while self.idx < grid.len() {
            let end = grid.step_end(self.idx) as f64;
            let c = self.capacity.values[self.idx];
            let avail = c * (end - self.t);
            if c > 0.0 && avail >= need {
                self.t = (self.t + need / c).min(end);
                if self.t >= end {
                    self.idx += 1;
                }
                return self.t;
            }
            need -= avail;
            self.t = end;
            self.idx += 1;
        }
        self.t = f64::INFINITY;
        f64::INFINITY
    }
}

/// Completion times for jobs processed back to back from `now`.
///
/// `sizes` are remaining capacity·seconds in processing order. Each job starts
/// where the previous one finished and completes at the earliest time the
/// capacity integral covers its size; completions may fall mid-step. Jobs that
/// cannot finish inside the profile get `f64::INFINITY`.
pub fn feasible_schedule(
    sizes: impl IntoIterator<Item = f64>,
    capacity: &CapacityProfile,
    now: f64,
) -> Vec<f64> {
    let mut cursor = Cursor::new(capacity, now);
    sizes.into_iter().map(|s| cursor.consume(s)).collect()
}
