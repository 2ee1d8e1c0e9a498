//! Free, REE-powered ("freep") capacity forecast.
//!
//! `U_free = 1 − U_pred` is the capacity the baseload leaves over, `U_reep` the
//! fraction of capacity the forecast REE could power, and `U_freep` their
//! minimum: how much capacity is expected to be both free and REE-powered.

use crate::admission::CapacityProfile;
use crate::error::{Error, Result};
use crate::forecast::{PointSeries, ProbabilisticSeries, TimeGrid, Unit};
use crate::power::PowerModel;

#[derive(Debug, Clone, PartialEq)]
pub struct FreepForecast {
    freep: CapacityProfile,
    free: CapacityProfile,
}

impl FreepForecast {
    /// Builds a forecast from raw per-step values, checking
    /// `0 <= u_freep <= u_free <= 1`.
    pub fn new(grid: TimeGrid, u_freep: Vec<f64>, u_free: Vec<f64>) -> Result<Self> {
        if u_freep.len() != grid.len() || u_free.len() != grid.len() {
            return Err(Error::InvalidSeries(format!(
                "freep forecast needs {} values per series",
                grid.len()
            )));
        }
        for (step, (&fp, &f)) in u_freep.iter().zip(&u_free).enumerate() {
            if !(0.0 <= fp && fp <= f && f <= 1.0) {
                return Err(Error::InvariantViolation {
                    step,
                    row: step + 2,
                    message: format!("need 0 <= u_freep ({fp}) <= u_free ({f}) <= 1"),
                });
            }
        }
        Ok(Self {
            freep: CapacityProfile::from_validated(grid, u_freep),
            free: CapacityProfile::from_validated(grid, u_free),
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.freep.grid()
    }

    pub fn u_freep(&self) -> &[f64] {
        self.freep.values()
    }

    pub fn u_free(&self) -> &[f64] {
        self.free.values()
    }

    /// Step profile of REE-powered free capacity, for queue replay.
    pub fn freep_capacity(&self) -> &CapacityProfile {
        &self.freep
    }

    /// Step profile of all free capacity, ignoring energy source.
    pub fn free_capacity(&self) -> &CapacityProfile {
        &self.free
    }
}

/// Per step: `u_free = 1 − u_pred`,
/// `u_reep = clamp((p_ree − P_static) / (P_max − P_static), 0, 1)`,
/// `u_freep = min(u_free, u_reep)`.
pub fn compute_freep(
    u_pred: &PointSeries,
    p_ree_alpha: &PointSeries,
    model: &PowerModel,
) -> Result<FreepForecast> {
    u_pred.grid().ensure_same(p_ree_alpha.grid())?;
    u_pred.unit().ensure(Unit::Utilization)?;
    p_ree_alpha.unit().ensure(Unit::Watts)?;
    let (u_freep, u_free) = u_pred
        .values()
        .iter()
        .zip(p_ree_alpha.values())
        .map(|(&u, &p)| {
            let free = 1.0 - u;
            let reep = model.power_to_load(p);
            (free.min(reep), free)
        })
        .unzip();
    FreepForecast::new(*u_pred.grid(), u_freep, u_free)
}

/// Reduces a probabilistic load forecast to one trajectory (typically the median).
pub fn reduce_load_forecast(u_pred: &ProbabilisticSeries, reduction_alpha: f64) -> Result<PointSeries> {
    u_pred.unit().ensure(Unit::Utilization)?;
    u_pred.quantile(reduction_alpha)
}
