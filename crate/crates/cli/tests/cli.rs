use std::path::Path;
use std::process::{Command, Output};

fn cucumber(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cucumber"))
        .args(args)
        .env_remove("CUCUMBER_SIM_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn generate(dir: &Path, site: &str) {
    let o = cucumber(&[
        "generate", "--site", site, "--kind", "relaxed", "--days", "3", "--seed", "7", "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn production_energy(dir: &Path) -> f64 {
    let mut rdr = csv::Reader::from_path(dir.join("production_actual.csv")).unwrap();
    rdr.records().map(|r| r.unwrap()[1].parse::<f64>().unwrap()).sum()
}

fn rows(csv_text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(csv_text.as_bytes())
        .records()
        .map(Result::unwrap)
        .collect()
}

#[test]
fn generate_writes_a_loadable_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cape = tmp.path().join("cape");
    let berlin = tmp.path().join("berlin");
    generate(&cape, "cape-town-like");
    generate(&berlin, "berlin-like");
    for f in ["manifest.json", "workloads.csv", "baseload_actual.csv", "production_actual.csv"] {
        assert!(cape.join(f).is_file(), "{f}");
    }
    assert_eq!(std::fs::read_dir(cape.join("production_forecast")).unwrap().count(), 3 * 144);
    assert!(production_energy(&berlin) < production_energy(&cape));
}

#[test]
fn run_reports_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    generate(&dir, "cape-town-like");
    let o = cucumber(&["run", "--policy", "cucumber", "--alpha", "0.5", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 1);
    assert_eq!(&r[0][2], "cucumber");

    let o = cucumber(&["run", "--policy", "optimal-ree-aware", dir.to_str().unwrap()]);
    assert!(o.status.success());
    let header = csv::Reader::from_reader(stdout(&o).as_bytes()).headers().unwrap().clone();
    let grid = header.iter().position(|h| h == "grid_energy_j").unwrap();
    assert_eq!(rows(&stdout(&o))[0][grid].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn invalid_alpha_is_a_config_error() {
    let o = cucumber(&["run", "--policy", "cucumber", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("(0, 1)"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn missing_scenario_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cucumber(&["run", tmp.path().join("nope").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("manifest"));
}

#[test]
fn unwritable_output_fails_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("file");
    std::fs::write(&file, "").unwrap();
    let out = file.join("sub");
    let o = cucumber(&["generate", "--days", "1", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!stderr(&o).is_empty());
}

#[test]
fn single_cell_sweep_matches_run_and_duplicates_are_dropped() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    generate(&dir, "mexico-city-like");
    let cell = r#"{"scenario": {"dir": "s"}, "policy": "naive"}"#;
    let matrix = tmp.path().join("m.json");
    std::fs::write(&matrix, format!("[{cell}, {cell}]")).unwrap();
    let report = tmp.path().join("r.csv");
    let o = cucumber(&["sweep", matrix.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("duplicates"));
    // Summary table on stdout when the report goes to a file.
    assert!(stdout(&o).contains("Naive"));

    let swept = std::fs::read_to_string(&report).unwrap();
    let single = stdout(&cucumber(&["run", "--policy", "naive", dir.to_str().unwrap()]));
    assert_eq!(swept, single);
}

#[test]
fn failed_cell_gives_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let matrix = tmp.path().join("m.json");
    std::fs::write(
        &matrix,
        r#"[{"scenario": {"dir": "missing"}, "policy": "naive"},
            {"scenario": {"synthetic": {"days": 1}}, "policy": "naive"}]"#,
    )
    .unwrap();
    let o = cucumber(&["sweep", matrix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(rows(&stdout(&o)).len(), 1);
}

#[test]
fn bad_matrix_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let matrix = tmp.path().join("m.json");
    std::fs::write(&matrix, r#"[{"scenario": {"dir": "x"}, "policy": "greedy"}]"#).unwrap();
    assert_eq!(cucumber(&["sweep", matrix.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn json_and_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("r.json");
    let plot = tmp.path().join("plot");
    let o = cucumber(&[
        "run", "--days", "1", "--policy", "expected", "--format", "json", "--out",
        report.to_str().unwrap(), "--plot-data", plot.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v[0]["summary"]["alpha"], 0.5);
    assert_eq!(v[0]["jobs"].as_array().unwrap().len(), 24);

    let hourly = std::fs::read_to_string(plot.join("hourly_accepted.csv")).unwrap();
    assert!(hourly.starts_with("fingerprint,scenario,policy,hour,hour_of_day,requested,accepted"));
    let trace = std::fs::read_to_string(plot.join("power_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 144);

    let o = cucumber(&["report", report.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("Expected"));
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_cucumber"));
        c.args(["run", "--days", "1"]);
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        match env {
            Some(e) => c.env("CUCUMBER_SIM_SEED", e),
            None => c.env_remove("CUCUMBER_SIM_SEED"),
        };
        let o = c.output().unwrap();
        rows(&stdout(&o))[0][5].to_string()
    };
    assert_eq!(run(None, None), "0");
    assert_eq!(run(Some("42"), None), "42");
    assert_eq!(run(Some("42"), Some("3")), "3");
}
