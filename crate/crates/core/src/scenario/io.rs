//! Scenario directories.
//!
//! ```text
//! manifest.json
//! workloads.csv
//! baseload_actual.csv
//! production_actual.csv
//! baseload_forecast/<YYYYMMDDTHHMMSSZ>.csv
//! production_forecast/<YYYYMMDDTHHMMSSZ>.csv
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ForecastSet, Scenario};
use crate::admission::{read_workload_csv, write_workload_csv};
use crate::error::{Error, Result};
use crate::forecast::{
    ingest_forecast_csv, write_forecast_csv, PointSeries, ProbabilisticSeries, RepresentationKind,
    Unit,
};
use crate::time::{format_compact, parse_compact};

pub const MANIFEST_FILE: &str = "manifest.json";

const ROLES: [&str; 5] = [
    "workloads",
    "baseload_actual",
    "production_actual",
    "baseload_forecast",
    "production_forecast",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Units {
    pub baseload: Unit,
    pub production: Unit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub step_duration: i64,
    pub horizon_steps: usize,
    pub units: Units,
    /// Role → path relative to the scenario directory.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    fn for_scenario(s: &Scenario) -> Self {
        Self {
            name: s.name().to_string(),
            step_duration: s.step_duration(),
            horizon_steps: s.horizon_steps(),
            units: Units {
                baseload: Unit::Utilization,
                production: Unit::Watts,
            },
            files: ROLES
                .iter()
                .map(|&r| {
                    let path = if r.ends_with("_forecast") {
                        r.to_string()
                    } else {
                        format!("{r}.csv")
                    };
                    (r.to_string(), path)
                })
                .collect(),
        }
    }

    fn path(&self, dir: &Path, role: &str) -> Result<PathBuf> {
        let rel = self
            .files
            .get(role)
            .ok_or_else(|| Error::Manifest(format!("missing file role `{role}`")))?;
        let path = dir.join(rel);
        if !path.exists() {
            return Err(Error::Manifest(format!(
                "file role `{role}`: {} does not exist",
                path.display()
            )));
        }
        Ok(path)
    }
}

fn read_actual(path: &Path, unit: Unit, step: i64) -> Result<PointSeries> {
    let series = ingest_forecast_csv(path, unit, Some(RepresentationKind::Point))?;
    if series.grid().step() != step {
        return Err(Error::GridMismatch(format!(
            "{}: step {}s, manifest says {step}s",
            path.display(),
            series.grid().step()
        )));
    }
    series.quantile(0.5)
}

fn read_forecast_dir(dir: &Path, unit: Unit, step: i64) -> Result<ForecastSet> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            files.push(path);
        }
    }
    files.sort();
    let parsed: Vec<(i64, ProbabilisticSeries)> = files
        .par_iter()
        .map(|path| {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let issued = parse_compact(stem).ok_or_else(|| {
                Error::Manifest(format!(
                    "{}: forecast file names must be issue times like 20220118T001000Z",
                    path.display()
                ))
            })?;
            let f = ingest_forecast_csv(path, unit, None)?;
            if f.grid().step() != step {
                return Err(Error::GridMismatch(format!(
                    "{}: step {}s, manifest says {step}s",
                    path.display(),
                    f.grid().step()
                )));
            }
            if f.grid().start() != issued {
                return Err(Error::GridMismatch(format!(
                    "{}: first row is not the issue time",
                    path.display()
                )));
            }
            Ok((issued, f))
        })
        .collect::<Result<_>>()?;
    Ok(parsed.into_iter().collect())
}

pub fn load_scenario(dir: impl AsRef<Path>) -> Result<Scenario> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    let file = File::open(&manifest_path).map_err(|e| {
        Error::Manifest(format!("{}: {e}", manifest_path.display()))
    })?;
    let m: Manifest = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Manifest(format!("{}: {e}", manifest_path.display())))?;
    m.units.baseload.ensure(Unit::Utilization)?;
    m.units.production.ensure(Unit::Watts)?;
    let paths: Vec<PathBuf> = ROLES.iter().map(|r| m.path(dir, r)).collect::<Result<_>>()?;

    let workloads_file = File::open(&paths[0]).map_err(|e| Error::io(&paths[0], e))?;
    let workloads = read_workload_csv(BufReader::new(workloads_file), &paths[0].display().to_string())?;
    let baseload = read_actual(&paths[1], Unit::Utilization, m.step_duration)?;
    let production = read_actual(&paths[2], Unit::Watts, m.step_duration)?;
    let baseload_fc = read_forecast_dir(&paths[3], Unit::Utilization, m.step_duration)?;
    let production_fc = read_forecast_dir(&paths[4], Unit::Watts, m.step_duration)?;
    Scenario::new(m.name, workloads, baseload, production, baseload_fc, production_fc)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn save_scenario(scenario: &Scenario, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let m = Manifest::for_scenario(scenario);
    let path = dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(&m).map_err(|e| Error::Manifest(e.to_string()))?;
    json.push('\n');
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;

    let p = dir.join(&m.files["workloads"]);
    write_workload_csv(create(&p)?, scenario.workloads())?;
    for (role, series) in [
        ("baseload_actual", scenario.baseload_actual()),
        ("production_actual", scenario.production_actual()),
    ] {
        let p = dir.join(&m.files[role]);
        write_forecast_csv(create(&p)?, &ProbabilisticSeries::from(series.clone()))?;
    }
    for (role, set) in [
        ("baseload_forecast", scenario.baseload_forecasts()),
        ("production_forecast", scenario.production_forecasts()),
    ] {
        let sub = dir.join(&m.files[role]);
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        set.par_iter().try_for_each(|(&issued, f)| {
            let p = sub.join(format!("{}.csv", format_compact(issued)));
            write_forecast_csv(create(&p)?, f)
        })?;
    }
    Ok(())
}
