//! Node power model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{PointSeries, ProbabilisticSeries, Unit};

/// Idle power of the evaluated node, in watts.
pub const DEFAULT_STATIC_POWER: f64 = 30.0;
/// Full-load power of the evaluated node, in watts.
pub const DEFAULT_MAX_POWER: f64 = 180.0;

/// Mapping between node utilization and electrical power.
///
/// Only [`PowerModel`] implements it today; consumers that need nothing more
/// than the two directions of the mapping take this trait.
pub trait UtilizationPower {
    fn load_to_power(&self, utilization: f64) -> Result<f64>;
    fn power_to_load(&self, watts: f64) -> f64;
}

/// Linear power model: `P = P_static + U · (P_max − P_static)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    p_static: f64,
    p_max: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_static: DEFAULT_STATIC_POWER,
            p_max: DEFAULT_MAX_POWER,
        }
    }
}

impl PowerModel {
    pub fn new(p_static: f64, p_max: f64) -> Result<Self> {
        if !(p_static.is_finite() && p_max.is_finite()) || p_static < 0.0 || p_max <= p_static {
            return Err(Error::InvalidPowerModel(format!(
                "need p_max > p_static >= 0, got p_static={p_static}, p_max={p_max}"
            )));
        }
        Ok(Self { p_static, p_max })
    }

    pub fn p_static(&self) -> f64 {
        self.p_static
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// `P_max − P_static`: the power spent on a fully utilized node beyond idle.
    pub fn dynamic_range(&self) -> f64 {
        self.p_max - self.p_static
    }

    pub fn load_to_power(&self, utilization: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&utilization) {
            return Err(Error::InvalidUtilization(utilization));
        }
        Ok(self.p_static + utilization * self.dynamic_range())
    }

    /// Inverse of [`load_to_power`](Self::load_to_power), clamped to `[0, 1]`.
    pub fn power_to_load(&self, watts: f64) -> f64 {
        ((watts - self.p_static) / self.dynamic_range()).clamp(0.0, 1.0)
    }

    /// Consumption forecast in watts from a utilization forecast, plus an
    /// optional series of other co-located consumers (cooling, lighting).
    pub fn consumption_forecast(
        &self,
        u_pred: &ProbabilisticSeries,
        other_consumers: Option<&PointSeries>,
    ) -> Result<ProbabilisticSeries> {
        consumption_forecast(self, u_pred, other_consumers)
    }
}

impl UtilizationPower for PowerModel {
    fn load_to_power(&self, utilization: f64) -> Result<f64> {
        PowerModel::load_to_power(self, utilization)
    }

    fn power_to_load(&self, watts: f64) -> f64 {
        PowerModel::power_to_load(self, watts)
    }
}

/// Applies the power model member-wise (or quantile-wise) and adds other consumers.
pub fn consumption_forecast<M: UtilizationPower>(
    model: &M,
    u_pred: &ProbabilisticSeries,
    other_consumers: Option<&PointSeries>,
) -> Result<ProbabilisticSeries> {
    u_pred.unit().ensure(Unit::Utilization)?;
    if let Some(other) = other_consumers {
        u_pred.grid().ensure_same(other.grid())?;
        other.unit().ensure(Unit::Watts)?;
    }
    // Values were validated into [0, 1] when the series was built.
    u_pred.map_monotone(Unit::Watts, |step, u| {
        let p = model.load_to_power(u).unwrap_or(f64::NAN);
        p + other_consumers.map_or(0.0, |o| o.values()[step])
    })
}
