//! Fusing production and consumption forecasts into a single REE series.
//!
//! With full distributions (ensembles or points) the joint REE distribution is
//! built by pairing production and consumption members and taking differences;
//! the α-quantile of that difference sample, clamped at zero, is the REE
//! forecast. When either side only carries pre-computed quantiles, the
//! fall-back pairs the α production quantile with the 1−α consumption quantile.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    check_alpha, empirical_quantile, PointSeries, ProbabilisticSeries, Representation,
    RepresentationKind, TimeGrid, Unit,
};
use crate::error::{Error, Result};

/// Default number of sampled (production, consumption) pairs per step.
pub const DEFAULT_SAMPLE_COUNT: usize = 1000;

/// Per-step sorted samples of `production − consumption`.
///
/// Built once and queried for any number of α values, so fused REE is
/// element-wise non-decreasing in α for a given seed.
#[derive(Debug, Clone)]
pub struct JointRee {
    grid: TimeGrid,
    differences: Vec<Vec<f64>>,
    exact: bool,
}

fn members<'a>(series: &'a ProbabilisticSeries, side: &str) -> Result<Vec<&'a [f64]>> {
    match series.representation() {
        Representation::Ensemble(m) => Ok(m.iter().map(Vec::as_slice).collect()),
        Representation::Point(v) => Ok(vec![v.as_slice()]),
        Representation::Quantiles { .. } => Err(Error::RepresentationMismatch(format!(
            "{side} forecast only stores quantiles; use the quantile fall-back"
        ))),
    }
}

impl JointRee {
    /// Samples the joint difference distribution.
    ///
    /// Each step draws `sample_count` member pairs uniformly with replacement
    /// from a ChaCha stream seeded by `seed`. When the two ensembles have no
    /// more than `sample_count` pairs in total, every pair is enumerated
    /// instead, which is the exact distribution the sampler converges to.
    pub fn sample(
        prod: &ProbabilisticSeries,
        cons: &ProbabilisticSeries,
        sample_count: usize,
        seed: u64,
    ) -> Result<Self> {
        prod.unit().ensure(Unit::Watts)?;
        cons.unit().ensure(Unit::Watts)?;
        prod.grid().ensure_same(cons.grid())?;
        if sample_count == 0 {
            return Err(Error::Config("sample_count must be at least 1".into()));
        }
        let p = members(prod, "production")?;
        let c = members(cons, "consumption")?;
        let steps = prod.grid().len();
        let exact = p.len().saturating_mul(c.len()) <= sample_count;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let differences = (0..steps)
            .map(|step| {
                let mut d: Vec<f64> = if exact {
                    p.iter()
                        .flat_map(|pm| c.iter().map(move |cm| pm[step] - cm[step]))
                        .collect()
                } else {
                    (0..sample_count)
                        .map(|_| {
                            let i = rng.random_range(0..p.len());
                            let j = rng.random_range(0..c.len());
                            p[i][step] - c[j][step]
                        })
                        .collect()
                };
                d.sort_by(f64::total_cmp);
                d
            })
            .collect();
        Ok(Self {
            grid: *prod.grid(),
            differences,
            exact,
        })
    }

    /// Whether the sample is the full pairwise enumeration.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `max(0, Q(alpha, production − consumption))` per step.
    pub fn at(&self, alpha: f64) -> Result<PointSeries> {
        check_alpha(alpha)?;
        let values = self
            .differences
            .iter()
            .map(|d| empirical_quantile(d, alpha).max(0.0))
            .collect();
        PointSeries::new(self.grid, Unit::Watts, values)
    }
}

/// Joint-distribution REE forecast at confidence `alpha`.
pub fn fuse_ree_joint(
    prod: &ProbabilisticSeries,
    cons: &ProbabilisticSeries,
    alpha: f64,
    sample_count: usize,
    seed: u64,
) -> Result<PointSeries> {
    check_alpha(alpha)?;
    JointRee::sample(prod, cons, sample_count, seed)?.at(alpha)
}

/// Quantile fall-back: `max(0, Q(alpha, prod) − Q(1 − alpha, cons))` per step.
pub fn fuse_ree_fallback(
    prod: &ProbabilisticSeries,
    cons: &ProbabilisticSeries,
    alpha: f64,
) -> Result<PointSeries> {
    check_alpha(alpha)?;
    prod.unit().ensure(Unit::Watts)?;
    cons.unit().ensure(Unit::Watts)?;
    prod.grid().ensure_same(cons.grid())?;
    let qp = prod.quantile(alpha)?;
    let qc = cons.quantile(1.0 - alpha)?;
    let values = qp
        .values()
        .iter()
        .zip(qc.values())
        .map(|(p, c)| (p - c).max(0.0))
        .collect();
    PointSeries::new(*prod.grid(), Unit::Watts, values)
}

/// Picks the joint route when both sides carry full distributions and the
/// quantile fall-back otherwise.
pub fn fuse_ree(
    prod: &ProbabilisticSeries,
    cons: &ProbabilisticSeries,
    alpha: f64,
    sample_count: usize,
    seed: u64,
) -> Result<PointSeries> {
    if prod.kind() == RepresentationKind::Quantiles || cons.kind() == RepresentationKind::Quantiles
    {
        fuse_ree_fallback(prod, cons, alpha)
    } else {
        fuse_ree_joint(prod, cons, alpha, sample_count, seed)
    }
}
