//! Report rows, the summary table and plot data.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use cucumber_core::simulator::JobRecord;
use cucumber_core::time::format_iso8601;
use cucumber_core::{RunMetrics, SimulationConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One CSV row per run. Contains no wall-clock data, so reports are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub fingerprint: String,
    pub scenario: String,
    pub policy: String,
    pub alpha: Option<f64>,
    pub forecasts: String,
    pub seed: u64,
    pub sample_count: usize,
    pub p_static: f64,
    pub p_max: f64,
    pub step_seconds: i64,
    pub horizon_steps: usize,
    pub requests: usize,
    pub accepted: usize,
    pub acceptance_rate: Option<f64>,
    pub ree_energy_j: f64,
    pub grid_energy_j: f64,
    pub ree_coverage: Option<f64>,
    pub deadline_misses: usize,
    pub unfinished: usize,
    pub uncapped_jobs: usize,
}

/// Short hash identifying a (scenario, configuration) pair.
pub fn fingerprint(scenario: &str, config: &SimulationConfig) -> String {
    let mut h = Sha256::new();
    h.update(scenario.as_bytes());
    h.update([0u8]);
    let config = SimulationConfig {
        record_trace: false,
        ..config.clone()
    };
    h.update(serde_json::to_vec(&config).unwrap_or_default());
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

impl Row {
    pub fn new(scenario: &str, config: &SimulationConfig, m: &RunMetrics) -> Self {
        Self {
            fingerprint: fingerprint(scenario, config),
            scenario: scenario.to_string(),
            policy: config.policy.name().to_string(),
            alpha: config.policy.alpha(),
            forecasts: config.effective_forecasts().name().to_string(),
            seed: config.seed,
            sample_count: config.sample_count,
            p_static: config.power.p_static(),
            p_max: config.power.p_max(),
            step_seconds: config.step_duration,
            horizon_steps: config.horizon_steps,
            requests: m.requests_total,
            accepted: m.accepted,
            acceptance_rate: m.acceptance_rate,
            ree_energy_j: m.ree_energy,
            grid_energy_j: m.grid_energy,
            ree_coverage: m.ree_coverage,
            deadline_misses: m.deadline_misses,
            unfinished: m.unfinished,
            uncapped_jobs: m.uncapped_jobs,
        }
    }

    /// Display label; the α presets get their names.
    pub fn label(&self) -> String {
        match (self.policy.as_str(), self.alpha) {
            ("optimal-no-ree", _) => "Optimal w/o REE".into(),
            ("optimal-ree-aware", _) => "Optimal REE-aware".into(),
            ("naive", _) => "Naive".into(),
            (_, Some(a)) if a == 0.1 => "Conservative".into(),
            (_, Some(a)) if a == 0.5 => "Expected".into(),
            (_, Some(a)) if a == 0.9 => "Optimistic".into(),
            (p, Some(a)) => format!("{p} a={a}"),
            (p, None) => p.to_string(),
        }
    }
}

/// Nested JSON form of one run.
#[derive(Debug, Serialize)]
pub struct RunReport<'a> {
    pub summary: &'a Row,
    pub config: &'a SimulationConfig,
    pub jobs: &'a [JobRecord],
}

pub fn write_csv<W: Write>(w: W, rows: &[Row]) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(mut w: W, reports: &[RunReport<'_>]) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut w, reports)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_rows(path: &Path) -> anyhow::Result<Vec<Row>> {
    let is_json = path.extension().is_some_and(|e| e == "json");
    if is_json {
        #[derive(Deserialize)]
        struct Summary {
            summary: Row,
        }
        let text = std::fs::read_to_string(path)?;
        let runs: Vec<Summary> = serde_json::from_str(&text)?;
        Ok(runs.into_iter().map(|s| s.summary).collect())
    } else {
        let mut rdr = csv::Reader::from_path(path)?;
        Ok(rdr.deserialize().collect::<Result<_, _>>()?)
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{:.1}%", 100.0 * v))
}

/// Acceptance rate and REE coverage per cell, grouped by scenario.
pub fn summary_table(rows: &[Row]) -> String {
    let header = ["scenario", "policy", "forecasts", "accepted", "acceptance", "ree coverage", "misses"];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.scenario.clone(),
                r.label(),
                r.forecasts.clone(),
                format!("{}/{}", r.accepted, r.requests),
                pct(r.acceptance_rate),
                pct(r.ree_coverage),
                r.deadline_misses.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for line in &body {
        for (w, cell) in widths.iter_mut().zip(line) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut emit = |cells: &[&str]| {
        let line: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 3 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    };
    emit(&header);
    let mut last: Option<&str> = None;
    for (r, line) in rows.iter().zip(&body) {
        let scenario = if last == Some(r.scenario.as_str()) { "" } else { r.scenario.as_str() };
        last = Some(&r.scenario);
        let cells: Vec<&str> = std::iter::once(scenario).chain(line[1..].iter().map(String::as_str)).collect();
        emit(&cells);
    }
    out
}

/// Tidy per-hour request and acceptance counts.
pub fn write_hourly<W: Write>(w: W, runs: &[(&Row, &RunMetrics)]) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Hour<'a> {
        fingerprint: &'a str,
        scenario: &'a str,
        policy: String,
        hour: String,
        hour_of_day: i64,
        requested: usize,
        accepted: usize,
    }
    let mut out = csv::Writer::from_writer(w);
    for (row, m) in runs {
        let mut hours: std::collections::BTreeMap<i64, (usize, usize)> = Default::default();
        for j in &m.jobs {
            let h = (j.arrival / 3600.0).floor() as i64 * 3600;
            let e = hours.entry(h).or_default();
            e.0 += 1;
            e.1 += usize::from(j.accepted);
        }
        for (h, (requested, accepted)) in hours {
            out.serialize(Hour {
                fingerprint: &row.fingerprint,
                scenario: &row.scenario,
                policy: row.label(),
                hour: format_iso8601(h),
                hour_of_day: h.rem_euclid(86_400) / 3600,
                requested,
                accepted,
            })?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_power_trace<W: Write>(w: W, runs: &[(&Row, &RunMetrics)]) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Sample<'a> {
        fingerprint: &'a str,
        scenario: &'a str,
        policy: String,
        time: String,
        production_w: f64,
        baseload_power_w: f64,
        job_power_w: f64,
        job_ree_power_w: f64,
        job_grid_power_w: f64,
        cap: f64,
    }
    let mut out = csv::Writer::from_writer(w);
    for (row, m) in runs {
        for s in &m.power_trace {
            out.serialize(Sample {
                fingerprint: &row.fingerprint,
                scenario: &row.scenario,
                policy: row.label(),
                time: format_iso8601(s.time),
                production_w: s.production,
                baseload_power_w: s.baseload_power,
                job_power_w: s.job_power,
                job_ree_power_w: s.job_ree_power,
                job_grid_power_w: s.job_grid_power,
                cap: s.cap,
            })?;
        }
    }
    out.flush()?;
    Ok(())
}
