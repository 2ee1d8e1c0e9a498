//! Acceptance suite: eight criteria, one PASS/FAIL line each.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cucumber_core::admission::{admit, JobQueue};
use cucumber_core::forecast::{fuse_ree, fuse_ree_fallback};
use cucumber_core::freep::compute_freep;
use cucumber_core::governor::runtime_cap;
use cucumber_core::scenario::{synthesize_scenario, SyntheticSpec, WorkloadKind};
use cucumber_core::{
    AdmissionPolicy, ForecastSource, FreepForecast, PointSeries, PowerModel,
    ProbabilisticSeries, RunMetrics, Scenario, SimulationConfig, TimeGrid, Unit, WorkloadRequest,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT: f64 = 1e-9;
const ORACLE_INSTANCES: usize = 1500;
const ORACLE_TICK: f64 = 1.0;
const ALPHA_SEEDS: u64 = 20;
const SITES: [&str; 3] = ["berlin-like", "mexico-city-like", "cape-town-like"];
const KINDS: [WorkloadKind; 2] = [WorkloadKind::Relaxed, WorkloadKind::Tight];

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn close(a: f64, b: f64, what: &str) -> Result<(), String> {
    check((a - b).abs() <= EXACT, format!("{what}: got {a}, want {b}"))
}

fn grid(n: usize) -> TimeGrid {
    TimeGrid::new(0, 600, n).unwrap()
}

fn point(unit: Unit, v: f64) -> ProbabilisticSeries {
    ProbabilisticSeries::point(grid(1), unit, vec![v]).unwrap()
}

fn quantiles(unit: Unit, q: [f64; 3]) -> ProbabilisticSeries {
    ProbabilisticSeries::quantiles(grid(1), unit, vec![0.1, 0.5, 0.9], q.iter().map(|&v| vec![v]).collect()).unwrap()
}

fn one(s: &PointSeries) -> f64 {
    s.values()[0]
}

// ---------------------------------------------------------------- criterion 1

fn model_units() -> Outcome {
    let m = PowerModel::new(30.0, 180.0).map_err(|e| e.to_string())?;
    close(m.load_to_power(0.0).unwrap(), 30.0, "P(0)")?;
    close(m.load_to_power(1.0).unwrap(), 180.0, "P(1)")?;
    close(m.load_to_power(0.5).unwrap(), 105.0, "P(0.5)")?;
    close(m.power_to_load(180.0), 1.0, "U(180)")?;
    close(m.power_to_load(20.0), 0.0, "U(20)")?;
    close(m.power_to_load(105.0), 0.5, "U(105)")?;

    // Joint fusion with degenerate and two-member distributions.
    let f = |p: &ProbabilisticSeries, c: &ProbabilisticSeries, a: f64| fuse_ree(p, c, a, 10_000, 7).unwrap();
    for a in [0.1, 0.5, 0.9] {
        close(one(&f(&point(Unit::Watts, 200.0), &point(Unit::Watts, 120.0), a)), 80.0, "200-120")?;
        close(one(&f(&point(Unit::Watts, 50.0), &point(Unit::Watts, 120.0), a)), 0.0, "clamp")?;
        close(one(&f(&point(Unit::Watts, 75.0), &point(Unit::Watts, 75.0), a)), 0.0, "prod = cons")?;
    }
    let ens = |a: f64, b: f64| ProbabilisticSeries::ensemble(grid(1), Unit::Watts, vec![vec![a], vec![b]]).unwrap();
    // Differences {-50, 50, 150, 250}; median by linear interpolation is 100.
    close(one(&f(&ens(100.0, 300.0), &ens(50.0, 150.0), 0.5)), 100.0, "ensemble pair median")?;

    // Quantile fall-back.
    let prod = quantiles(Unit::Watts, [40.0, 100.0, 160.0]);
    let fb = |c: &ProbabilisticSeries, a| one(&fuse_ree_fallback(&prod, c, a).unwrap());
    close(fb(&point(Unit::Watts, 50.0), 0.9), 110.0, "fallback optimistic")?;
    close(fb(&quantiles(Unit::Watts, [30.0, 50.0, 80.0]), 0.1), 0.0, "fallback conservative")?;

    // freep triples (u_pred, p_ree) -> (u_free, u_freep).
    for (u, p, free, freep) in [(0.4, 180.0, 0.6, 0.6), (0.0, 30.0, 1.0, 0.0), (1.0, 500.0, 0.0, 0.0)] {
        let up = PointSeries::new(grid(1), Unit::Utilization, vec![u]).unwrap();
        let pr = PointSeries::new(grid(1), Unit::Watts, vec![p]).unwrap();
        let fc = compute_freep(&up, &pr, &m).unwrap();
        close(fc.u_free()[0], free, "u_free")?;
        close(fc.u_freep()[0], freep, "u_freep")?;
    }
    close(runtime_cap(0.2, 180.0, &m), 0.8, "runtime cap")?;
    close(runtime_cap(0.2, 0.0, &m), 0.0, "cap without production")?;
    close(runtime_cap(1.0, 400.0, &m), 0.0, "cap at full baseload")?;
    Ok("power model, fusion, fall-back, freep and cap examples exact to 1e-9".into())
}

// ---------------------------------------------------------------- criterion 2

struct Instance {
    now: f64,
    step: i64,
    caps: Vec<f64>,
    /// (remaining, deadline) of the running job.
    running: Option<(f64, f64)>,
    /// (size, deadline) of waiting jobs in arrival order.
    waiting: Vec<(f64, f64)>,
    candidate: (f64, f64),
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let step = [30, 60, 120][rng.random_range(0..3)];
    let n = rng.random_range(1..=12);
    let caps = (0..n).map(|_| f64::from(rng.random_range(0..=8u32)) / 8.0).collect();
    let now = f64::from(rng.random_range(0..2 * step as u32));
    let end = (step * n as i64) as f64;
    let job = |rng: &mut ChaCha8Rng| {
        let size = f64::from(rng.random_range(5..=(end as u32 / 3).max(6)));
        // Some deadlines share a value to exercise FIFO ties.
        let deadline = if rng.random_bool(0.3) {
            now + (end / 2.0).round()
        } else {
            now + f64::from(rng.random_range(10..=(end as u32 + step as u32)))
        };
        (size, deadline)
    };
    let jobs = rng.random_range(0..=5);
    let running = rng.random_bool(0.5).then(|| {
        let (size, d) = job(rng);
        (size * rng.random_range(0.1..=1.0), d)
    });
    let waiting = (0..jobs - usize::from(running.is_some()).min(jobs)).map(|_| job(rng)).collect();
    let candidate = job(rng);
    Instance { now, step, caps, running, waiting, candidate }
}

/// Tick-stepped completion times for jobs run back to back from `now`.
/// Completion is reported at the end of the tick in which the work runs out;
/// leftover capacity in that tick flows to the next job.
fn tick_oracle(inst: &Instance, order: &[(f64, f64)]) -> Vec<f64> {
    let end = (inst.step * inst.caps.len() as i64) as f64;
    let cap_at = |t: f64| {
        let i = (t / inst.step as f64).floor() as usize;
        inst.caps.get(i).copied().unwrap_or(0.0)
    };
    let mut done = vec![f64::INFINITY; order.len()];
    let mut left: Vec<f64> = order.iter().map(|j| j.0).collect();
    let mut k = 0;
    let mut t = inst.now;
    while k < order.len() && t < end {
        let mut budget = cap_at(t) * ORACLE_TICK;
        while k < order.len() && budget > 0.0 {
            let used = budget.min(left[k]);
            left[k] -= used;
            budget -= used;
            if left[k] <= 1e-12 {
                done[k] = t + ORACLE_TICK;
                k += 1;
            }
        }
        t += ORACLE_TICK;
    }
    done
}

fn admission_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut boundary = 0;
    let mut accepted = 0;
    for case in 0..ORACLE_INSTANCES {
        let inst = random_instance(&mut rng);
        let g = TimeGrid::new(0, inst.step, inst.caps.len()).unwrap();
        let freep = FreepForecast::new(g, inst.caps.clone(), vec![1.0; inst.caps.len()]).unwrap();

        let mut queue = JobQueue::new();
        if let Some((rem, d)) = inst.running {
            queue.push(WorkloadRequest::new("run", 0.0, rem, d).unwrap());
            queue.dispatch();
        }
        for (i, &(s, d)) in inst.waiting.iter().enumerate() {
            queue.push(WorkloadRequest::new(format!("w{i}"), 0.0, s, d).unwrap());
        }
        let cand = WorkloadRequest::new("cand", inst.now, inst.candidate.0, inst.candidate.1).unwrap();
        let decision = admit(&AdmissionPolicy::EXPECTED, &cand, &queue, &freep, true, inst.now);
        accepted += usize::from(decision.is_accept());

        // Oracle order: running job, then stable EDF over arrival order with
        // the candidate last.
        let mut rest: Vec<(f64, f64)> = inst.waiting.clone();
        rest.push(inst.candidate);
        rest.sort_by(|a, b| a.1.total_cmp(&b.1));
        let order: Vec<(f64, f64)> = inst.running.into_iter().chain(rest).collect();
        let done = tick_oracle(&inst, &order);

        let clearly_ok = order.iter().zip(&done).all(|(j, &c)| c <= j.1);
        let clearly_late = order
            .iter()
            .zip(&done)
            .any(|(j, &c)| c - ORACLE_TICK > j.1 + cucumber_core::DEADLINE_TOLERANCE);
        match (decision.is_accept(), clearly_ok, clearly_late) {
            (true, _, true) => return Err(format!("case {case}: accepted but the oracle misses a deadline")),
            (false, true, _) => return Err(format!("case {case}: rejected but the oracle meets every deadline")),
            (_, false, false) => boundary += 1,
            _ => {}
        }
    }
    Ok(format!(
        "{ORACLE_INSTANCES} instances ({accepted} accepted), 0 disagreements \
         ({boundary} within one tick of a deadline)"
    ))
}

// ---------------------------------------------------------- shared scenarios

fn spec(site: &str, kind: WorkloadKind, days: u32, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        site: site.into(),
        kind,
        days,
        seed,
        ..SyntheticSpec::default()
    }
}

fn suite_scenarios() -> Vec<Scenario> {
    let mut out = Vec::new();
    for kind in KINDS {
        for site in SITES {
            out.push(synthesize_scenario(&spec(site, kind, 14, 1)).unwrap());
        }
    }
    out
}

fn simulate(s: &Scenario, policy: AdmissionPolicy, forecasts: ForecastSource) -> RunMetrics {
    let config = SimulationConfig {
        forecasts,
        ..SimulationConfig::with_policy(policy)
    };
    cucumber_core::run(s, &config).unwrap()
}

// ---------------------------------------------------------------- criterion 3

fn zero_grid(scenarios: &[Scenario]) -> Outcome {
    let policies = [
        AdmissionPolicy::OptimalReeAware,
        AdmissionPolicy::CONSERVATIVE,
        AdmissionPolicy::EXPECTED,
        AdmissionPolicy::OPTIMISTIC,
    ];
    let mut runs = 0;
    for s in scenarios {
        for p in policies {
            let m = simulate(s, p, ForecastSource::Perfect);
            check(
                m.grid_energy == 0.0,
                format!("{} / {p}: grid energy {} J", s.name(), m.grid_energy),
            )?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs on {} scenarios, grid energy exactly 0", scenarios.len()))
}

// ---------------------------------------------------------------- criterion 4

fn no_miss(scenarios: &[Scenario]) -> Outcome {
    let mut accepted = 0;
    for s in scenarios {
        for p in AdmissionPolicy::evaluation_set() {
            let m = simulate(s, p, ForecastSource::Perfect);
            check(
                m.deadline_misses == 0,
                format!("{} / {p}: {} deadline misses", s.name(), m.deadline_misses),
            )?;
            accepted += m.accepted;
        }
    }
    Ok(format!("6 policies incl. naive on {} scenarios, {accepted} accepted jobs, 0 misses", scenarios.len()))
}

// ---------------------------------------------------------------- criterion 5

fn alpha_ordering() -> Outcome {
    // Tight-deadline workloads; relaxed ones saturate the available REE, which
    // makes counts insensitive to alpha (see README).
    let mut violations = Vec::new();
    let mut n = 0;
    for seed in 0..ALPHA_SEEDS {
        let site = SITES[seed as usize % SITES.len()];
        let sp = spec(site, WorkloadKind::Tight, 14, 100 + seed);
        let s = synthesize_scenario(&sp).unwrap();
        let counts: Vec<usize> = [0.1, 0.5, 0.9]
            .iter()
            .map(|&a| simulate(&s, AdmissionPolicy::Cucumber { alpha: a }, ForecastSource::Realistic).accepted)
            .collect();
        if !(counts[0] <= counts[1] && counts[1] <= counts[2]) {
            violations.push(format!("{} (seed {}): {counts:?}", sp.name(), sp.seed));
        }
        n += 1;
    }
    if violations.is_empty() {
        Ok(format!("{n} seeded scenarios, counts non-decreasing in alpha"))
    } else {
        Err(format!("violations: {}", violations.join("; ")))
    }
}

// ---------------------------------------------------------------- criterion 6

/// Accepted jobs that arrived on a day before that day's first production.
fn accepted_before_sunrise(s: &Scenario, m: &RunMetrics) -> usize {
    let prod = s.production_actual();
    let step = prod.grid().step() as f64;
    let start = prod.grid().start() as f64;
    let first_light = |day: i64| -> f64 {
        prod.values()
            .iter()
            .enumerate()
            .map(|(i, &v)| (start + i as f64 * step, v))
            .filter(|&(t, v)| (t / 86_400.0).floor() as i64 == day && v > 0.0)
            .map(|(t, _)| t)
            .next()
            .unwrap_or(f64::INFINITY)
    };
    m.jobs
        .iter()
        .filter(|j| j.accepted && j.arrival < first_light((j.arrival / 86_400.0).floor() as i64))
        .count()
}

fn sunrise_acceptance() -> Outcome {
    let s = synthesize_scenario(&spec("cape-town-like", WorkloadKind::Relaxed, 14, 1)).unwrap();
    let cucumber = simulate(&s, AdmissionPolicy::EXPECTED, ForecastSource::Realistic);
    let naive = simulate(&s, AdmissionPolicy::Naive, ForecastSource::Realistic);
    let c = accepted_before_sunrise(&s, &cucumber);
    let n = accepted_before_sunrise(&s, &naive);
    check(c >= 1, format!("cucumber accepted {c} jobs before first production"))?;
    check(n == 0, format!("naive accepted {n} jobs before first production"))?;
    let before_noon = cucumber
        .jobs
        .iter()
        .filter(|j| j.accepted && j.arrival.rem_euclid(86_400.0) < 12.0 * 3600.0)
        .count();
    Ok(format!(
        "cucumber: {c} accepted before first production ({before_noon}/{} before noon); naive: {n}",
        cucumber.accepted
    ))
}

// ------------------------------------------------------------- criteria 7, 8

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cucumber")
}

fn matrix_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../matrices/evaluation-36.json")
}

fn sweep(out: &Path, jobs: usize) -> Result<Duration, String> {
    let t = Instant::now();
    let o = Command::new(bin())
        .args(["sweep", "--jobs", &jobs.to_string(), "--seed", "11", "--out"])
        .arg(out)
        .arg(matrix_path())
        .output()
        .map_err(|e| e.to_string())?;
    check(
        o.status.success(),
        format!("sweep failed: {}", String::from_utf8_lossy(&o.stderr)),
    )?;
    Ok(t.elapsed())
}

fn determinism(dir: &Path) -> Outcome {
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    sweep(&a, 1)?;
    sweep(&b, 4)?;
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    check(x == y, "sweep reports differ")?;
    Ok(format!("two sweeps (1 and 4 threads) byte-identical, {} bytes", x.len()))
}

fn experiment_count(dir: &Path) -> Outcome {
    let out = dir.join("evaluation.csv");
    let elapsed = sweep(&out, 1)?;
    let mut rdr = csv::Reader::from_path(&out).map_err(|e| e.to_string())?;
    let mut cells = std::collections::BTreeSet::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        cells.insert((rec[1].to_string(), rec[2].to_string(), rec[3].to_string()));
        rows += 1;
    }
    check(rows == 36 && cells.len() == 36, format!("{rows} rows, {} distinct cells", cells.len()))?;
    let scenarios: std::collections::BTreeSet<_> = cells.iter().map(|c| c.0.clone()).collect();
    check(scenarios.len() == 6, format!("{} scenarios", scenarios.len()))?;
    check(scenarios.iter().all(|s| s.contains("-14d-")), "cells must span 14 days")?;
    check(elapsed < Duration::from_secs(600), format!("took {elapsed:?}"))?;
    Ok(format!("36 cells (6 policies x 2 kinds x 3 sites, 14 days) in {:.1} s", elapsed.as_secs_f64()))
}

#[test]
fn acceptance() {
    let tmp = tempfile::tempdir().unwrap();
    let mut results: Vec<(u32, &str, Outcome, Duration)> = Vec::new();
    let mut timed = |n, name, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let r = f();
        results.push((n, name, r, t.elapsed()));
    };
    timed(1, "model units", &model_units);
    timed(2, "admission oracle", &admission_oracle);
    let scenarios = suite_scenarios();
    timed(3, "zero grid", &|| zero_grid(&scenarios));
    timed(4, "no misses", &|| no_miss(&scenarios));
    timed(5, "alpha ordering", &alpha_ordering);
    timed(6, "sunrise acceptance", &sunrise_acceptance);
    timed(7, "determinism", &|| determinism(tmp.path()));
    timed(8, "experiment count", &|| experiment_count(tmp.path()));

    // Runtime budgets per criterion.
    let budget = |n: u32| match n {
        1 => Duration::from_secs(1),
        2 => Duration::from_secs(60),
        3 => Duration::from_secs(30 * 6),
        8 => Duration::from_secs(600),
        _ => Duration::MAX,
    };
    // Written to the raw handle so the lines show up without --nocapture.
    let mut err = std::io::stderr();
    let mut failed = 0;
    for (n, name, r, took) in &results {
        let r = match r {
            Ok(m) if *took > budget(*n) => Err(format!("{m}, but took {took:?}")),
            other => other.clone(),
        };
        match r {
            Ok(m) => {
                let _ = writeln!(err, "criterion {n} ({name}): PASS - {m} [{:.2} s]", took.as_secs_f64());
            }
            Err(m) => {
                failed += 1;
                let _ = writeln!(err, "criterion {n} ({name}): FAIL - {m} [{:.2} s]", took.as_secs_f64());
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
