//! Forecast CSV files.
//!
//! Header `timestamp` followed by `p<percent>` columns (quantiles),
//! `m<k>` columns (ensemble members) or a single `value` column (point).
//! Rows are uniformly spaced; the spacing is the step duration.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{ProbabilisticSeries, Representation, RepresentationKind, TimeGrid, Unit};
use crate::error::{Error, Result};
use crate::time::{format_iso8601, parse_iso8601};

enum Layout {
    Quantiles(Vec<f64>),
    Ensemble,
    Point,
}

impl Layout {
    fn kind(&self) -> RepresentationKind {
        match self {
            Layout::Quantiles(_) => RepresentationKind::Quantiles,
            Layout::Ensemble => RepresentationKind::Ensemble,
            Layout::Point => RepresentationKind::Point,
        }
    }
}

fn parse_layout(source: &str, columns: &[&str]) -> Result<Layout> {
    let header_err = |col: usize, msg: String| Error::parse(format!("{source}:1:{col}"), msg);
    if columns.len() < 2 {
        return Err(header_err(1, "expected `timestamp` plus at least one value column".into()));
    }
    if columns[0] != "timestamp" {
        return Err(header_err(1, format!("first column must be `timestamp`, got `{}`", columns[0])));
    }
    let values = &columns[1..];
    if values == ["value"] {
        return Ok(Layout::Point);
    }
    if values.iter().all(|c| c.starts_with('m')) {
        for (k, c) in values.iter().enumerate() {
            c[1..]
                .parse::<usize>()
                .map_err(|_| header_err(k + 2, format!("bad ensemble member column `{c}`")))?;
        }
        return Ok(Layout::Ensemble);
    }
    if values.iter().all(|c| c.starts_with('p')) {
        let mut levels = Vec::with_capacity(values.len());
        for (k, c) in values.iter().enumerate() {
            let pct: f64 = c[1..]
                .parse()
                .map_err(|_| header_err(k + 2, format!("bad quantile column `{c}`")))?;
            if !(pct > 0.0 && pct < 100.0) {
                return Err(header_err(k + 2, format!("quantile level `{c}` outside (0, 100)")));
            }
            if levels.last().is_some_and(|&l| l >= pct / 100.0) {
                return Err(header_err(k + 2, "quantile columns must be strictly increasing".into()));
            }
            levels.push(pct / 100.0);
        }
        return Ok(Layout::Quantiles(levels));
    }
    Err(header_err(
        2,
        format!("cannot classify value columns {values:?}: use p<level>, m<k> or value"),
    ))
}

/// Reads a forecast from any reader. `source` names the input in error locations.
pub fn read_forecast_csv<R: Read>(
    reader: R,
    source: &str,
    unit: Unit,
    hint: Option<RepresentationKind>,
) -> Result<ProbabilisticSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(format!("{source}:1"), e.to_string()))?
        .clone();
    let columns: Vec<&str> = headers.iter().collect();
    if columns.iter().all(|c| c.is_empty()) {
        return Err(Error::parse(format!("{source}:1"), "empty file"));
    }
    let layout = parse_layout(source, &columns)?;
    if let Some(expected) = hint {
        if expected != layout.kind() {
            return Err(Error::RepresentationMismatch(format!(
                "{source}: expected {expected:?} columns, found {:?}",
                layout.kind()
            )));
        }
    }

    let width = columns.len() - 1;
    let mut times: Vec<i64> = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); width];
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::parse(format!("{source}:{row}"), e.to_string()))?;
        let ts = record.get(0).unwrap_or_default();
        let t = parse_iso8601(ts)
            .ok_or_else(|| Error::parse(format!("{source}:{row}:1"), format!("bad timestamp `{ts}`")))?;
        if t.fract() != 0.0 {
            return Err(Error::parse(
                format!("{source}:{row}:1"),
                "forecast timestamps must be whole seconds",
            ));
        }
        times.push(t as i64);
        for (k, col) in cols.iter_mut().enumerate() {
            let raw = record.get(k + 1).unwrap_or_default();
            let v: f64 = raw.parse().map_err(|_| {
                Error::parse(format!("{source}:{row}:{}", k + 2), format!("bad number `{raw}`"))
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvariantViolation {
                    step: i,
                    row,
                    message: format!("column `{}` has invalid value {v}", columns[k + 1]),
                });
            }
            col.push(v);
        }
    }
    if times.len() < 2 {
        return Err(Error::parse(
            format!("{source}:{}", times.len() + 2),
            "need at least two rows to determine the step duration",
        ));
    }
    let step = times[1] - times[0];
    if step <= 0 {
        return Err(Error::parse(format!("{source}:3:1"), "timestamps must increase"));
    }
    for (i, w) in times.windows(2).enumerate() {
        if w[1] - w[0] != step {
            return Err(Error::parse(
                format!("{source}:{}:1", i + 3),
                format!("irregular spacing: {}s, expected {step}s", w[1] - w[0]),
            ));
        }
    }
    let grid = TimeGrid::new(times[0], step, times.len())?;
    let repr = match layout {
        Layout::Point => Representation::Point(cols.pop().unwrap_or_default()),
        Layout::Ensemble => Representation::Ensemble(cols),
        Layout::Quantiles(levels) => Representation::Quantiles {
            levels,
            trajectories: cols,
        },
    };
    ProbabilisticSeries::new(grid, unit, repr)
}

/// Reads and validates a forecast CSV file.
pub fn ingest_forecast_csv(
    path: impl AsRef<Path>,
    unit: Unit,
    hint: Option<RepresentationKind>,
) -> Result<ProbabilisticSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_forecast_csv(file, &path.display().to_string(), unit, hint)
}

fn level_column(level: f64) -> String {
    let pct = level * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("p{}", pct.round() as i64)
    } else {
        format!("p{pct}")
    }
}

pub fn write_forecast_csv<W: Write>(writer: W, series: &ProbabilisticSeries) -> Result<()> {
    let to_err = |e: csv::Error| Error::parse("<output>", e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    let (header, trajectories): (Vec<String>, Vec<&Vec<f64>>) = match series.representation() {
        Representation::Point(v) => (vec!["value".into()], vec![v]),
        Representation::Ensemble(m) => (
            (0..m.len()).map(|k| format!("m{k}")).collect(),
            m.iter().collect(),
        ),
        Representation::Quantiles {
            levels,
            trajectories,
        } => (
            levels.iter().map(|&l| level_column(l)).collect(),
            trajectories.iter().collect(),
        ),
    };
    let mut row = Vec::with_capacity(header.len() + 1);
    row.push("timestamp".to_string());
    row.extend(header);
    w.write_record(&row).map_err(to_err)?;
    let grid = series.grid();
    for step in 0..grid.len() {
        row.clear();
        row.push(format_iso8601(grid.step_start(step)));
        row.extend(trajectories.iter().map(|t| t[step].to_string()));
        w.write_record(&row).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}
