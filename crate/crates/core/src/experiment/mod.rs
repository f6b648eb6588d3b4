//! Config-driven experiments.
//!
//! An [`ExperimentConfig`] names a game, a list of methods, an init rule and
//! a run count. [`run`] writes one trajectory CSV per method and run plus a
//! `summary.json`; [`plot`] renders reward contours with the recorded
//! trajectories; [`table1`] aggregates public goods runs into a comparison
//! table. Output bytes depend only on the config and seed, never on the
//! number of worker threads.

mod svg;

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adjust::{descend, Method, MethodConfig, Projection, StepRecord, StopReason, Trajectory};
use crate::analysis::{equality, social_welfare};
use crate::games::{GameDefinition, GameSpec};
use crate::scalar::EvalError;

pub use svg::{render as render_svg, Grid, Trace};

/// Environment variable holding the default output root.
pub const OUTPUT_DIR_ENV: &str = "AGA_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "aga-out";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}:{line}:{column}: {message}")]
    Config {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("{path}: malformed trajectory CSV: {message}")]
    Csv { path: String, message: String },
    #[error("{0}")]
    Unsupported(String),
    #[error("method {label}, run {run}, step {step}: {source}")]
    Runtime {
        label: String,
        run: usize,
        step: usize,
        source: EvalError,
    },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
}

impl ExperimentError {
    /// 2 for bad input (config, CSV, unsupported request), 1 for failures
    /// while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Runtime { .. } | ExperimentError::Write { .. } => 1,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "MethodEntryRepr", into = "MethodEntryRepr")]
pub struct MethodEntry {
    /// Display name and file prefix; defaults to the method's label.
    pub label: Option<String>,
    pub config: MethodConfig,
}

// Flat on-disk form. `#[serde(flatten)]` would silently accept unknown keys.
#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MethodEntryRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    method: Method,
    #[serde(default)]
    lambda: f64,
    gamma: f64,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    max_steps: usize,
    #[serde(default)]
    stop_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    projection: Option<Projection>,
}

fn default_epsilon() -> f64 {
    MethodConfig::new(Method::Aga, 0.0, 1.0, 0).epsilon
}

impl From<MethodEntryRepr> for MethodEntry {
    fn from(r: MethodEntryRepr) -> Self {
        Self {
            label: r.label,
            config: MethodConfig {
                method: r.method,
                lambda_mag: r.lambda,
                gamma: r.gamma,
                epsilon: r.epsilon,
                max_steps: r.max_steps,
                stop_tol: r.stop_tol,
                projection: r.projection,
            },
        }
    }
}

impl From<MethodEntry> for MethodEntryRepr {
    fn from(e: MethodEntry) -> Self {
        let c = e.config;
        Self {
            label: e.label,
            method: c.method,
            lambda: c.lambda_mag,
            gamma: c.gamma,
            epsilon: c.epsilon,
            max_steps: c.max_steps,
            stop_tol: c.stop_tol,
            projection: c.projection,
        }
    }
}

impl MethodEntry {
    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.config.method.label().to_string())
    }
}

impl From<MethodConfig> for MethodEntry {
    fn from(config: MethodConfig) -> Self {
        Self { label: None, config }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    Fixed {
        point: Vec<f64>,
    },
    /// Independent uniform draw per coordinate from `[lo_k, hi_k]`.
    Uniform {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl InitSpec {
    /// Initial point for `run`. Each run reads its own ChaCha stream of the
    /// experiment seed, so adding runs never changes earlier ones.
    pub fn sample(&self, seed: u64, run: usize) -> Vec<f64> {
        match self {
            InitSpec::Fixed { point } => point.clone(),
            InitSpec::Uniform { lo, hi } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(run as u64);
                lo.iter()
                    .zip(hi)
                    .map(|(&a, &b)| a + (b - a) * rng.random::<f64>())
                    .collect()
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            InitSpec::Fixed { point } => point.len(),
            InitSpec::Uniform { lo, .. } => lo.len(),
        }
    }
}

/// Reward surface drawn under the trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Surface {
    /// `-ℓ_c`
    Collective,
    /// Reward of player `k`, counted from 1.
    Player(usize),
}

impl Surface {
    fn slug(self) -> String {
        match self {
            Surface::Collective => "collective".into(),
            Surface::Player(k) => format!("player{k}"),
        }
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Surface::Collective => f.write_str("collective"),
            Surface::Player(k) => write!(f, "player:{k}"),
        }
    }
}

impl TryFrom<String> for Surface {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        if s == "collective" {
            return Ok(Surface::Collective);
        }
        s.strip_prefix("player:")
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1)
            .map(Surface::Player)
            .ok_or_else(|| format!("unknown surface '{s}', expected \"collective\" or \"player:<k>\""))
    }
}

impl From<Surface> for String {
    fn from(s: Surface) -> String {
        s.to_string()
    }
}

fn default_resolution() -> usize {
    80
}

fn default_surfaces() -> Vec<Surface> {
    vec![Surface::Player(1)]
}

fn default_marker_every() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSpec {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// Grid samples per axis.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_surfaces")]
    pub surfaces: Vec<Surface>,
    #[serde(default = "default_marker_every")]
    pub marker_every: usize,
    /// Which run's trajectory to draw for every method.
    #[serde(default)]
    pub run: usize,
}

fn one_run() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub game: GameSpec,
    pub methods: Vec<MethodEntry>,
    pub init: InitSpec,
    #[serde(default = "one_run")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotSpec>,
}

/// 1-based line and column of the `nth` occurrence of `"key"`.
fn locate(text: &str, key: &str, nth: usize) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    let Some((pos, _)) = text.match_indices(&needle).nth(nth) else {
        return (1, 1);
    };
    let before = &text[..pos];
    let line = before.matches('\n').count() + 1;
    let column = pos - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| ExperimentError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates; `origin` names the source in diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ExperimentError::Config {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.check().map_err(|(key, nth, message)| {
            let (line, column) = locate(text, key, nth);
            ExperimentError::Config {
                path: origin.to_string(),
                line,
                column,
                message,
            }
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(_, _, message)| ExperimentError::Config {
            path: "<config>".into(),
            line: 1,
            column: 1,
            message,
        })
    }

    /// On failure returns the offending key, which occurrence of it, and a
    /// message.
    fn check(&self) -> std::result::Result<(), (&'static str, usize, String)> {
        let name_ok = !self.name.is_empty()
            && self.name != "."
            && self.name != ".."
            && self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
        if !name_ok {
            return Err(("name", 0, format!("name '{}' must be a plain file name", self.name)));
        }
        let game = self.game.build().map_err(|e| ("game", 0, e.to_string()))?;
        let d = game.dim();
        if self.methods.is_empty() {
            return Err(("methods", 0, "at least one method is required".into()));
        }
        let mut labels: Vec<String> = Vec::new();
        for (k, m) in self.methods.iter().enumerate() {
            m.config.validate().map_err(|e| ("method", k, e.to_string()))?;
            if let Some(p) = &m.config.projection {
                if p.lo.len() != d {
                    return Err((
                        "method",
                        k,
                        format!("projection has {} bounds, game has {d} parameters", p.lo.len()),
                    ));
                }
            }
            let label = m.label();
            if label.is_empty() || labels.contains(&label) {
                return Err(("method", k, format!("method label '{label}' is empty or repeated")));
            }
            labels.push(label);
        }
        if self.init.dim() != d {
            return Err((
                "init",
                0,
                format!("init has {} coordinates, game has {d}", self.init.dim()),
            ));
        }
        match &self.init {
            InitSpec::Fixed { point } => {
                if point.iter().any(|v| !v.is_finite()) {
                    return Err(("init", 0, "init point must be finite".into()));
                }
            }
            InitSpec::Uniform { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(("init", 0, "init bounds have different lengths".into()));
                }
                let bad = lo
                    .iter()
                    .zip(hi)
                    .any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b));
                if bad {
                    return Err(("init", 0, "init bounds must be finite with lo <= hi".into()));
                }
            }
        }
        if self.runs == 0 {
            return Err(("runs", 0, "runs must be at least 1".into()));
        }
        if let Some(p) = &self.plot {
            let range_ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
            if !range_ok(p.x_range) || !range_ok(p.y_range) {
                return Err((
                    "plot",
                    0,
                    "plot ranges must be finite with lo < hi (non-zero area)".into(),
                ));
            }
            if p.resolution < 2 {
                return Err((
                    "resolution",
                    0,
                    format!("resolution must be >= 2, got {}", p.resolution),
                ));
            }
            if d != 2 {
                return Err(("plot", 0, format!("contour plots need a 2-parameter game, got {d}")));
            }
            for s in &p.surfaces {
                if let Surface::Player(k) = s {
                    if *k > game.n_players() {
                        return Err((
                            "surfaces",
                            0,
                            format!("surface {s} but the game has {} players", game.n_players()),
                        ));
                    }
                }
            }
            if p.run >= self.runs {
                return Err(("plot", 0, format!("plot run {} but only {} runs", p.run, self.runs)));
            }
        }
        Ok(())
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub seed: Option<u64>,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    /// Experiment directory; replaces `<output root>/<name>`.
    pub out: Option<PathBuf>,
}

/// Where an experiment's files go: `--out`, else `<root>/<name>` with the
/// root taken from the config, then the environment, then a fixed default.
pub fn experiment_dir(cfg: &ExperimentConfig, opts: &Options) -> PathBuf {
    if let Some(out) = &opts.out {
        return out.clone();
    }
    let root = cfg
        .output_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    root.join(&cfg.name)
}

fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

pub fn csv_file_name(label: &str, run: usize) -> String {
    format!("{}_run{run:03}.csv", slug(label))
}

/// All runs of one method, in run order.
#[derive(Clone, Debug)]
pub struct MethodRuns {
    pub label: String,
    pub method: Method,
    pub trajectories: Vec<Trajectory>,
}

fn effective_seed(cfg: &ExperimentConfig, opts: &Options) -> u64 {
    opts.seed.unwrap_or(cfg.seed)
}

/// Runs every method from every init. Run `r` of every method starts from
/// the same point.
pub fn execute(cfg: &ExperimentConfig, opts: &Options) -> Result<Vec<MethodRuns>> {
    let game = cfg
        .game
        .build()
        .map_err(|e| ExperimentError::Unsupported(e.to_string()))?;
    let seed = effective_seed(cfg, opts);
    let inits: Vec<Vec<f64>> = (0..cfg.runs).map(|r| cfg.init.sample(seed, r)).collect();
    let tasks: Vec<(usize, usize)> = (0..cfg.methods.len())
        .flat_map(|m| (0..cfg.runs).map(move |r| (m, r)))
        .collect();
    let work = |&(m, r): &(usize, usize)| descend(&game, &inits[r], &cfg.methods[m].config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| ExperimentError::Unsupported(format!("cannot start worker pool: {e}")))?;
    let results: Vec<_> = pool.install(|| tasks.par_iter().map(work).collect());

    let mut out: Vec<MethodRuns> = cfg
        .methods
        .iter()
        .map(|m| MethodRuns {
            label: m.label(),
            method: m.config.method,
            trajectories: Vec::with_capacity(cfg.runs),
        })
        .collect();
    for (&(m, r), res) in tasks.iter().zip(results) {
        match res {
            Ok(t) => out[m].trajectories.push(t),
            Err(e) => {
                return Err(ExperimentError::Runtime {
                    label: out[m].label.clone(),
                    run: r,
                    step: e.step,
                    source: e.source,
                })
            }
        }
    }
    Ok(out)
}

pub fn csv_header(game: &GameDefinition) -> Vec<String> {
    let mut h = vec!["step".to_string()];
    h.extend((0..game.dim()).map(|k| format!("w_{k}")));
    h.extend((1..=game.n_players()).map(|i| format!("r_{i}")));
    h.extend(["loss_c", "dir_norm", "lambda_signed"].map(String::from));
    h
}

// `{:?}` prints the shortest representation that round-trips.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn trajectory_csv(game: &GameDefinition, records: &[StepRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header(game)).expect("in-memory write");
    for r in records {
        let mut row = vec![r.step.to_string()];
        row.extend(r.w.iter().map(|&x| num(x)));
        row.extend(r.rewards.iter().map(|&x| num(x)));
        row.extend([num(r.loss_c), num(r.dir_norm), num(r.lambda)]);
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn read_trajectory_csv(game: &GameDefinition, path: &Path) -> Result<Vec<StepRecord>> {
    let bad = |message: String| ExperimentError::Csv {
        path: path.display().to_string(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let expected = csv_header(game);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    if header != expected {
        return Err(bad(format!("header {header:?}, expected {expected:?}")));
    }
    let (d, n) = (game.dim(), game.n_players());
    let mut records = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let line = k + 2;
        let field = |i: usize| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("line {line}: '{}' is not a number", &row[i])))
        };
        let step = row[0]
            .parse::<usize>()
            .map_err(|_| bad(format!("line {line}: bad step '{}'", &row[0])))?;
        records.push(StepRecord {
            step,
            w: (1..=d).map(field).collect::<Result<_>>()?,
            rewards: (d + 1..=d + n).map(field).collect::<Result<_>>()?,
            loss_c: field(d + n + 1)?,
            dir_norm: field(d + n + 2)?,
            lambda: field(d + n + 3)?,
        });
    }
    Ok(records)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub label: String,
    pub method: Method,
    pub runs: usize,
    /// Final reward of each player.
    pub rewards: Vec<Stat>,
    pub sw: Stat,
    /// Over the runs where equality is defined.
    pub equality: Option<Stat>,
    pub equality_runs: usize,
    pub steps: Stat,
    pub converged_runs: usize,
    pub final_w: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub game: String,
    pub seed: u64,
    pub runs: usize,
    pub methods: Vec<MethodSummary>,
}

pub fn summarize(cfg: &ExperimentConfig, opts: &Options, results: &[MethodRuns]) -> RunSummary {
    let methods = results
        .iter()
        .map(|m| {
            let finals: Vec<&StepRecord> = m.trajectories.iter().map(Trajectory::last).collect();
            let n_players = finals[0].rewards.len();
            let rewards = (0..n_players)
                .map(|i| Stat::of(&finals.iter().map(|r| r.rewards[i]).collect::<Vec<_>>()))
                .collect();
            let sw: Vec<f64> = finals.iter().map(|r| social_welfare(&r.rewards)).collect();
            let eq: Vec<f64> = finals
                .iter()
                .filter_map(|r| equality(&r.rewards).ok().map(|(_, e)| e))
                .collect();
            let steps: Vec<f64> = m.trajectories.iter().map(|t| t.steps() as f64).collect();
            MethodSummary {
                label: m.label.clone(),
                method: m.method,
                runs: m.trajectories.len(),
                rewards,
                sw: Stat::of(&sw),
                equality: (!eq.is_empty()).then(|| Stat::of(&eq)),
                equality_runs: eq.len(),
                steps: Stat::of(&steps),
                converged_runs: m
                    .trajectories
                    .iter()
                    .filter(|t| t.stop == StopReason::Converged)
                    .count(),
                final_w: finals.iter().map(|r| r.w.clone()).collect(),
            }
        })
        .collect();
    RunSummary {
        name: cfg.name.clone(),
        game: cfg.game.build().map(|g| g.name().to_string()).unwrap_or_default(),
        seed: effective_seed(cfg, opts),
        runs: cfg.runs,
        methods,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| ExperimentError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Write {
        path: dir.display().to_string(),
        source,
    })
}

fn pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("summary types serialize");
    s.push(b'\n');
    s
}

/// Runs the experiment and writes its CSVs and `summary.json`. Returns the
/// written paths in a fixed order.
pub fn run(cfg: &ExperimentConfig, opts: &Options) -> Result<Vec<PathBuf>> {
    let results = execute(cfg, opts)?;
    let game = cfg
        .game
        .build()
        .map_err(|e| ExperimentError::Unsupported(e.to_string()))?;
    let dir = experiment_dir(cfg, opts);
    create_dir(&dir)?;
    let mut written = Vec::new();
    for m in &results {
        for (r, t) in m.trajectories.iter().enumerate() {
            let path = dir.join(csv_file_name(&m.label, r));
            write_file(&path, &trajectory_csv(&game, &t.records))?;
            written.push(path);
        }
    }
    let path = dir.join("summary.json");
    write_file(&path, &pretty_json(&summarize(cfg, opts, &results)))?;
    written.push(path);
    Ok(written)
}

/// Samples `surface` on the plot grid.
pub fn surface_grid(game: &GameDefinition, spec: &PlotSpec, surface: Surface) -> Grid {
    let n = spec.resolution;
    let at = |r: [f64; 2], k: usize| r[0] + (k as f64 + 0.5) * (r[1] - r[0]) / n as f64;
    let values = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let w = [at(spec.x_range, i), at(spec.y_range, j)];
                    let v = match surface {
                        Surface::Collective => game.collective_loss_at(&w).map(|l| -l),
                        Surface::Player(k) => game.rewards_at(&w).map(|r| r[k - 1]),
                    };
                    v.unwrap_or(f64::NAN)
                })
                .collect()
        })
        .collect();
    Grid {
        x_range: spec.x_range,
        y_range: spec.y_range,
        values,
    }
}

/// Renders one SVG per requested surface from the CSVs that [`run`] left in
/// the experiment directory. Methods without a CSV are left out, so an
/// experiment that was never run yields contour-only plots.
pub fn plot(cfg: &ExperimentConfig, opts: &Options) -> Result<Vec<PathBuf>> {
    let spec = cfg
        .plot
        .as_ref()
        .ok_or_else(|| ExperimentError::Unsupported(format!("config '{}' has no plot section", cfg.name)))?;
    let game = cfg
        .game
        .build()
        .map_err(|e| ExperimentError::Unsupported(e.to_string()))?;
    let dir = experiment_dir(cfg, opts);
    let mut traces = Vec::new();
    for m in &cfg.methods {
        let label = m.label();
        let path = dir.join(csv_file_name(&label, spec.run));
        if !path.exists() {
            continue;
        }
        let records = read_trajectory_csv(&game, &path)?;
        traces.push(Trace {
            label,
            points: records.iter().map(|r| (r.step, r.w[0], r.w[1])).collect(),
        });
    }
    create_dir(&dir)?;
    let mut written = Vec::new();
    for &surface in &spec.surfaces {
        let grid = surface_grid(&game, spec, surface);
        let title = match surface {
            Surface::Collective => format!("{}: collective reward", cfg.name),
            Surface::Player(k) => format!("{}: reward of player {k}", cfg.name),
        };
        let svg = render_svg(&title, ["w_0", "w_1"], &grid, &traces, spec.marker_every);
        let path = dir.join(format!("{}_{}.svg", cfg.name, surface.slug()));
        write_file(&path, svg.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Column {
    pub label: String,
    /// Mean final reward per player.
    pub rewards: Vec<f64>,
    pub sw: f64,
    /// Mean of the per-run equality values.
    pub equality: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub name: String,
    pub seed: u64,
    pub runs: usize,
    pub columns: Vec<Table1Column>,
}

impl Table1 {
    pub fn from_summary(s: &RunSummary) -> Self {
        Self {
            name: s.name.clone(),
            seed: s.seed,
            runs: s.runs,
            columns: s
                .methods
                .iter()
                .map(|m| Table1Column {
                    label: m.label.clone(),
                    rewards: m.rewards.iter().map(|r| r.mean).collect(),
                    sw: m.sw.mean,
                    equality: m.equality.map(|e| e.mean),
                })
                .collect(),
        }
    }
}

impl fmt::Display for Table1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const W: usize = 12;
        write!(f, "{:<8}", "")?;
        for c in &self.columns {
            write!(f, "{:>W$}", c.label)?;
        }
        writeln!(f)?;
        let n = self.columns.first().map_or(0, |c| c.rewards.len());
        for i in 0..n {
            write!(f, "{:<8}", format!("r_{}", i + 1))?;
            for c in &self.columns {
                write!(f, "{:>W$.3}", c.rewards[i])?;
            }
            writeln!(f)?;
        }
        write!(f, "{:<8}", "SW")?;
        for c in &self.columns {
            write!(f, "{:>W$.3}", c.sw)?;
        }
        writeln!(f)?;
        write!(f, "{:<8}", "E")?;
        for c in &self.columns {
            match c.equality {
                Some(e) => write!(f, "{e:>W$.3}")?,
                None => write!(f, "{:>W$}", "-")?,
            }
        }
        writeln!(f)
    }
}

/// Public goods comparison: runs the experiment, writes `table1.json` and
/// returns the table. Trajectory CSVs are not written.
pub fn table1(cfg: &ExperimentConfig, opts: &Options) -> Result<(Table1, PathBuf)> {
    if !cfg.game.is_public_goods() {
        return Err(ExperimentError::Unsupported(format!(
            "table1 needs a public goods game, config '{}' uses {}",
            cfg.name,
            cfg.game.build().map(|g| g.name().to_string()).unwrap_or_default()
        )));
    }
    let results = execute(cfg, opts)?;
    let table = Table1::from_summary(&summarize(cfg, opts, &results));
    let dir = experiment_dir(cfg, opts);
    create_dir(&dir)?;
    let path = dir.join("table1.json");
    write_file(&path, &pretty_json(&table))?;
    Ok((table, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "name": "t",
  "game": {"kind": "toy"},
  "methods": [{"method": "aga", "lambda": 0.1, "gamma": 0.05, "max_steps": 3}],
  "init": {"kind": "fixed", "point": [-0.5, -0.5]}
}"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::parse(MINIMAL, "mem").unwrap();
        assert_eq!(cfg.runs, 1);
        assert_eq!(cfg.methods[0].label(), "AgA");
        assert_eq!(cfg.methods[0].config.lambda_mag, 0.1);
    }

    #[test]
    fn unknown_method_field_is_rejected() {
        let text = MINIMAL.replace("\"max_steps\": 3", "\"max_steps\": 3, \"lr\": 1");
        assert!(ExperimentConfig::parse(&text, "mem").is_err());
    }

    #[test]
    fn validation_points_at_key() {
        let text = MINIMAL.replace("\"name\": \"t\",", "\"name\": \"t\",\n  \"runs\": 0,");
        match ExperimentConfig::parse(&text, "cfg.json") {
            Err(ExperimentError::Config { line, column, .. }) => assert_eq!((line, column), (3, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let err = ExperimentConfig::parse("{\n  \"name\": }", "cfg.json").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().starts_with("cfg.json:2:"), "{err}");
    }

    #[test]
    fn surface_strings() {
        assert_eq!(Surface::try_from("player:2".to_string()), Ok(Surface::Player(2)));
        assert_eq!(Surface::try_from("collective".to_string()), Ok(Surface::Collective));
        assert!(Surface::try_from("player:0".to_string()).is_err());
        assert!(Surface::try_from("welfare".to_string()).is_err());
    }

    #[test]
    fn init_streams_are_stable() {
        let init = InitSpec::Uniform {
            lo: vec![0.0, -1.0],
            hi: vec![1.0, 0.0],
        };
        let a = init.sample(7, 3);
        assert_eq!(a, init.sample(7, 3));
        assert_ne!(a, init.sample(7, 2));
        assert_ne!(a, init.sample(8, 3));
        assert!((0.0..=1.0).contains(&a[0]) && (-1.0..=0.0).contains(&a[1]));
    }

    #[test]
    fn stat_of_constant() {
        let s = Stat::of(&[2.0, 2.0, 2.0]);
        assert_eq!((s.mean, s.std), (2.0, 0.0));
    }
}
