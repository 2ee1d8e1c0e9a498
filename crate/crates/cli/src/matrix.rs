//! Sweep matrices: a JSON list of cells, each naming a scenario and a policy.
//!
//! ```json
//! [
//!   {"scenario": {"synthetic": {"site": "cape-town-like", "kind": "relaxed", "days": 14}},
//!    "policy": "cucumber", "alpha": 0.5},
//!   {"scenario": {"dir": "scenarios/berlin"}, "policy": "naive", "forecasts": "perfect"}
//! ]
//! ```
//!
//! Relative scenario directories resolve against the matrix file's directory.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use cucumber_core::scenario::{load_scenario, synthesize_scenario, SyntheticSpec};
use cucumber_core::{AdmissionPolicy, ForecastSource, Scenario};
use serde::{Deserialize, Serialize};

use crate::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioRef {
    Dir(PathBuf),
    Synthetic(SyntheticSpec),
}

impl ScenarioRef {
    pub fn label(&self) -> String {
        match self {
            ScenarioRef::Dir(p) => p.display().to_string(),
            ScenarioRef::Synthetic(s) => s.name(),
        }
    }

    pub fn load(&self) -> cucumber_core::Result<Scenario> {
        match self {
            ScenarioRef::Dir(p) => load_scenario(p),
            ScenarioRef::Synthetic(s) => synthesize_scenario(s),
        }
    }

    fn key(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub scenario: ScenarioRef,
    pub policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forecasts: Option<ForecastSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<usize>,
}

impl Cell {
    pub fn admission_policy(&self) -> cucumber_core::Result<AdmissionPolicy> {
        AdmissionPolicy::from_name(&self.policy, self.alpha)
    }

    fn key(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

pub fn read_matrix(path: &Path) -> anyhow::Result<Vec<Cell>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let mut cells: Vec<Cell> = serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    if cells.is_empty() {
        return Err(ConfigError(format!("{}: matrix has no cells", path.display())).into());
    }
    let base = path.parent().unwrap_or(Path::new(""));
    for c in &mut cells {
        if let ScenarioRef::Dir(p) = &mut c.scenario {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
    Ok(cells)
}

/// Drops repeated cells, keeping the first occurrence, and warns about each.
pub fn dedup(cells: Vec<Cell>) -> Vec<Cell> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(cells.len());
    for (i, c) in cells.into_iter().enumerate() {
        if seen.insert(c.key()) {
            out.push(c);
        } else {
            log::warn!(
                "matrix cell {} duplicates an earlier cell ({} / {}); skipped",
                i + 1,
                c.scenario.label(),
                c.policy
            );
        }
    }
    out
}

/// Loads every distinct scenario once.
pub fn load_scenarios(
    cells: &[Cell],
) -> BTreeMap<String, cucumber_core::Result<Scenario>> {
    let mut out = BTreeMap::new();
    for c in cells {
        out.entry(c.scenario.key()).or_insert_with(|| c.scenario.load());
    }
    out
}

pub fn scenario_key(cell: &Cell) -> String {
    cell.scenario.key()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_scenario_forms() {
        let json = r#"[
            {"scenario": {"synthetic": {"site": "berlin-like", "days": 2}}, "policy": "naive"},
            {"scenario": {"dir": "x"}, "policy": "cucumber", "alpha": 0.1, "forecasts": "perfect"}
        ]"#;
        let cells: Vec<Cell> = serde_json::from_str(json).unwrap();
        assert!(matches!(cells[0].scenario, ScenarioRef::Synthetic(ref s) if s.days == 2));
        assert_eq!(cells[1].forecasts, Some(ForecastSource::Perfect));
        assert_eq!(
            cells[1].admission_policy().unwrap(),
            AdmissionPolicy::Cucumber { alpha: 0.1 }
        );
    }

    #[test]
    fn unknown_fields_rejected() {
        let json = r#"[{"scenario": {"dir": "x"}, "policy": "naive", "colour": 1}]"#;
        assert!(serde_json::from_str::<Vec<Cell>>(json).is_err());
    }

    #[test]
    fn duplicates_dropped_in_order() {
        let c = |p: &str| Cell {
            scenario: ScenarioRef::Dir("d".into()),
            policy: p.into(),
            alpha: None,
            forecasts: None,
            seed: None,
            sample_count: None,
        };
        let out = dedup(vec![c("naive"), c("optimal-no-ree"), c("naive")]);
        let names: Vec<_> = out.iter().map(|c| c.policy.as_str()).collect();
        assert_eq!(names, ["naive", "optimal-no-ree"]);
    }
}
