use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn aga(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aga"))
        .args(args)
        .current_dir(dir)
        .env_remove("AGA_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn toy_config(extra_method: &str, init: &str, runs: usize, plot: &str) -> String {
    format!(
        r#"{{
  "name": "toy",
  "game": {{"kind": "toy"}},
  "methods": [
    {{"method": "aga", "lambda": 0.1, "gamma": 0.05, "max_steps": 20}}{extra_method}
  ],
  "init": {init},
  "runs": {runs}{plot}
}}"#
    )
}

const BOX_INIT: &str = r#"{"kind": "uniform", "lo": [-1.0, -1.0], "hi": [0.0, 0.0]}"#;
const FIXED_INIT: &str = r#"{"kind": "fixed", "point": [-0.5, -0.5]}"#;
const FIG4_PLOT: &str = r#",
  "plot": {"x_range": [-1.0, 0.0], "y_range": [-1.0, 0.0], "resolution": 12, "surfaces": ["player:1", "collective"]}"#;

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn zero_steps_writes_the_golden_single_row() {
    let tmp = TempDir::new().unwrap();
    let body = r#"{
  "name": "zero",
  "game": {"kind": "toy"},
  "methods": [{"method": "aga", "lambda": 0.1, "gamma": 0.05, "max_steps": 0}],
  "init": {"kind": "fixed", "point": [-0.5, -0.5]}
}"#;
    let cfg = write_config(tmp.path(), "zero.json", body);
    let out = tmp.path().join("out");
    let o = aga(
        &["--out", out.to_str().unwrap(), "run", cfg.to_str().unwrap()],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("aga_run000.csv")).unwrap();
    assert_eq!(csv, include_str!("golden/toy_zero_steps.csv"));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "step,w_0,w_1,r_1,r_2,loss_c,dir_norm,lambda_signed");
    assert!(rows[1].starts_with("0,-0.5,-0.5,"));
}

#[test]
fn repeated_runs_are_byte_identical_for_any_job_count() {
    let tmp = TempDir::new().unwrap();
    let body = toy_config(
        r#", {"method": "sga", "lambda": 0.1, "gamma": 0.05, "max_steps": 20}"#,
        BOX_INIT,
        6,
        "",
    );
    let cfg = write_config(tmp.path(), "toy.json", &body);
    let mut outputs = Vec::new();
    for (k, jobs) in ["1", "1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("out{k}"));
        let o = aga(
            &[
                "--jobs",
                jobs,
                "--out",
                out.to_str().unwrap(),
                "run",
                cfg.to_str().unwrap(),
            ],
            tmp.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(files(&out));
    }
    assert_eq!(outputs[0].len(), 13);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "toy.json", &toy_config("", FIXED_INIT, 1, ""));
    let root = tmp.path().join("root");
    let o = Command::new(env!("CARGO_BIN_EXE_aga"))
        .args(["run", cfg.to_str().unwrap()])
        .current_dir(tmp.path())
        .env("AGA_OUTPUT_DIR", &root)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(root.join("toy").join("summary.json").exists());
}

#[test]
fn invalid_config_exits_2_with_position() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", &toy_config("", FIXED_INIT, 0, ""));
    let o = aga(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.json:8:3:"), "{err}");
    assert!(err.contains("runs"), "{err}");
}

#[test]
fn unknown_method_exits_2() {
    let tmp = TempDir::new().unwrap();
    let body = toy_config("", FIXED_INIT, 1, "").replace("\"aga\"", "\"adam\"");
    let cfg = write_config(tmp.path(), "bad.json", &body);
    let o = aga(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("bad.json:"));
}

#[test]
fn runtime_failure_exits_1_naming_run_and_step() {
    let tmp = TempDir::new().unwrap();
    let body = r#"{
  "name": "blowup",
  "game": {"kind": "toy"},
  "methods": [{"method": "simul_co", "gamma": 1e6, "max_steps": 50}],
  "init": {"kind": "fixed", "point": [-0.5, -0.5]}
}"#;
    let cfg = write_config(tmp.path(), "blowup.json", body);
    let o = aga(&["--out", "o", "run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("run 0") && err.contains("step "), "{err}");
}

fn table1(dir: &Path, cfg: &Path, seed: &str, out: &str) -> Value {
    let o = aga(&["--seed", seed, "--out", out, "table1", cfg.to_str().unwrap()], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("SW") && stdout.contains("r_2"), "{stdout}");
    serde_json::from_slice(&fs::read(dir.join(out).join("table1.json")).unwrap()).unwrap()
}

fn pg_config(init: &str, runs: usize, gamma: f64, steps: usize) -> String {
    let m = |method: &str| {
        format!(
            r#"{{"method": "{method}", "lambda": 1.0, "gamma": {gamma}, "max_steps": {steps}, "projection": {{"lo": [0.0, 0.0], "hi": [1.0, 1.0]}}}}"#
        )
    };
    format!(
        r#"{{"name": "pg", "game": {{"kind": "public_goods"}}, "methods": [{}, {}, {}], "init": {init}, "runs": {runs}}}"#,
        m("simul_ind"),
        m("simul_co"),
        m("aga")
    )
}

#[test]
fn table1_at_the_optimum_has_welfare_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "pg.json",
        &pg_config(r#"{"kind": "fixed", "point": [1.0, 1.0]}"#, 1, 0.01, 100),
    );
    let t = table1(tmp.path(), &cfg, "0", "o");
    let cols = t["columns"].as_array().unwrap();
    for c in &cols[1..] {
        assert_eq!(c["sw"].as_f64(), Some(3.0), "{c}");
        assert_eq!(c["equality"].as_f64(), Some(1.0), "{c}");
    }
    assert_eq!(cols[0]["label"], "Simul-Ind");
    assert!(cols[0]["sw"].as_f64().unwrap() < 3.0);
}

#[test]
fn table1_depends_on_the_seed_only() {
    let tmp = TempDir::new().unwrap();
    let init = r#"{"kind": "uniform", "lo": [0.0, 0.0], "hi": [1.0, 1.0]}"#;
    let cfg = write_config(tmp.path(), "pg.json", &pg_config(init, 8, 0.01, 10));
    let a = table1(tmp.path(), &cfg, "7", "a");
    let b = table1(tmp.path(), &cfg, "7", "b");
    let c = table1(tmp.path(), &cfg, "8", "c");
    assert_eq!(a, b);
    assert_ne!(a["columns"], c["columns"]);
}

#[test]
fn table1_rejects_other_games() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "toy.json", &toy_config("", FIXED_INIT, 1, ""));
    let o = aga(&["--out", "o", "table1", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("public goods"));
}

fn assert_self_contained_svg(text: &str) -> roxmltree::Document<'_> {
    let doc = roxmltree::Document::parse(text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    for node in doc.descendants().filter(|n| n.is_element()) {
        for attr in node.attributes() {
            assert!(
                !attr.name().contains("href"),
                "external reference in <{}>",
                node.tag_name().name()
            );
            if attr.value().contains("url(") {
                assert!(attr.value().starts_with("url(#"), "{}", attr.value());
            }
        }
    }
    doc
}

fn count(doc: &roxmltree::Document, tag: &str) -> usize {
    doc.descendants().filter(|n| n.has_tag_name(tag)).count()
}

#[test]
fn plot_draws_one_polyline_per_method_with_markers() {
    let tmp = TempDir::new().unwrap();
    let body = toy_config(
        r#", {"method": "aga_no_sign", "lambda": 0.1, "gamma": 0.05, "max_steps": 20}"#,
        FIXED_INIT,
        1,
        FIG4_PLOT,
    );
    let cfg = write_config(tmp.path(), "toy.json", &body);
    assert!(aga(&["--out", "o", "run", cfg.to_str().unwrap()], tmp.path())
        .status
        .success());
    let o = aga(&["--out", "o", "plot", cfg.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for surface in ["player1", "collective"] {
        let text = fs::read_to_string(tmp.path().join(format!("o/toy_{surface}.svg"))).unwrap();
        let doc = assert_self_contained_svg(&text);
        assert_eq!(count(&doc, "polyline"), 2);
        // steps 0, 10, 20 of two runs plus two legend markers
        assert_eq!(count(&doc, "circle"), 8);
        assert!(
            text.contains(">AgA<") && text.contains(">AgA-no-sign<"),
            "legend missing"
        );
        assert!(text.contains("#d62728"));
    }
}

#[test]
fn plot_without_trajectories_is_contour_only() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "toy.json", &toy_config("", FIXED_INIT, 1, FIG4_PLOT));
    let o = aga(&["--out", "o", "plot", cfg.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("o/toy_player1.svg")).unwrap();
    let doc = assert_self_contained_svg(&text);
    assert_eq!(count(&doc, "polyline"), 0);
    assert!(count(&doc, "rect") >= 144);
}

#[test]
fn zero_area_plot_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let plot = FIG4_PLOT.replace("\"y_range\": [-1.0, 0.0]", "\"y_range\": [-0.5, -0.5]");
    let cfg = write_config(tmp.path(), "toy.json", &toy_config("", FIXED_INIT, 1, &plot));
    let o = aga(&["--out", "o", "plot", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("non-zero area"), "{}", stderr(&o));
}

#[test]
fn malformed_csv_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "toy.json", &toy_config("", FIXED_INIT, 1, FIG4_PLOT));
    assert!(aga(&["--out", "o", "run", cfg.to_str().unwrap()], tmp.path())
        .status
        .success());
    let csv = tmp.path().join("o/aga_run000.csv");
    let text = fs::read_to_string(&csv).unwrap().replacen("-0.5", "oops", 1);
    fs::write(&csv, text).unwrap();
    let o = aga(&["--out", "o", "plot", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("malformed trajectory CSV"), "{}", stderr(&o));
}

#[test]
fn seed_override_is_recorded() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "toy.json", &toy_config("", BOX_INIT, 2, ""));
    assert!(aga(
        &["--seed", "99", "--out", "o", "run", cfg.to_str().unwrap()],
        tmp.path()
    )
    .status
    .success());
    let summary: Value = serde_json::from_slice(&fs::read(tmp.path().join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 99);
    assert_eq!(summary["runs"], 2);
    assert!(summary["methods"][0]["sw"]["std"].as_f64().unwrap() >= 0.0);
}
