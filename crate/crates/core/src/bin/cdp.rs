use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use cdp_core::baselines::ActivitySource;
use cdp_core::dcsbm::{
    generate_sequence, ChangeType, Scenario, ScenarioSpec, ThetaMode, CHANGE_TIME, SEQUENCE_LENGTH,
};
use cdp_core::evaluation::{run_experiment, ExperimentConfig};
use cdp_core::io::{self, RunManifest};
use cdp_core::pipeline::{run_method, CdpConfig, Method};
use cdp_core::spectral::DEFAULT_EPSILON;
use cdp_core::CdpError;

/// Per-vertex change detection in dynamic networks.
#[derive(Parser)]
#[command(name = "cdp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every vertex of an edge-list sequence.
    Detect(DetectArgs),
    /// Draw a sequence from one of the reference scenarios.
    Simulate(SimulateArgs),
    /// Repeat simulations and compare methods.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    common: Common,
    /// Edge list with `t i j weight` lines.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Vertex count; defaults to one more than the largest index.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// `raw` or `scaled` adjacency for the activity baselines.
    #[arg(long)]
    activity_source: Option<String>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    scenario: Option<Scenario>,
    /// `point` or `interval`.
    #[arg(long)]
    change_type: Option<String>,
    /// Sequence length.
    #[arg(long = "T")]
    t_len: Option<usize>,
    /// First changed instant.
    #[arg(long)]
    change_time: Option<usize>,
    /// Last changed instant of an interval change; defaults to `T`.
    #[arg(long)]
    change_end: Option<usize>,
    /// Block-size multiplier, e.g. `1/3`.
    #[arg(long)]
    scale: Option<String>,
    /// `redraw` or `frozen` degree parameters.
    #[arg(long)]
    theta_mode: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    /// Comma-separated window sizes.
    #[arg(long, value_delimiter = ',')]
    window: Vec<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Resamples per exceedance-probability estimate.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    activity_source: Option<String>,
}

/// Failure of one stage, optionally tied to a time index.
struct Failure {
    stage: &'static str,
    error: CdpError,
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.error.time() {
            Some(t) => write!(f, "{} failed at t={t}: {}", self.stage, self.error.root()),
            None => write!(f, "{} failed: {}", self.stage, self.error),
        }
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<CdpError>> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            stage,
            error: e.into(),
        })
    }
}

fn invalid(msg: impl Into<String>) -> CdpError {
    CdpError::InvalidConfig(msg.into())
}

/// Config-file values overlaid with explicit flags.
struct Settings(BTreeMap<String, String>);

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self, CdpError> {
        Ok(Settings(match path {
            Some(p) => io::parse_config(&fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        }))
    }

    fn set(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.0.insert(key.to_string(), v.to_string());
        }
    }

    fn set_list<T: ToString>(&mut self, key: &str, values: &[T]) {
        if !values.is_empty() {
            let joined: Vec<String> = values.iter().map(ToString::to_string).collect();
            self.0.insert(key.to_string(), joined.join(","));
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CdpError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| invalid(format!("--{key} `{v}`: {e}")))
            })
            .transpose()
    }

    fn get_or<T: FromStr + ToString>(&mut self, key: &str, default: T) -> Result<T, CdpError>
    where
        T::Err: Display,
    {
        let v = self.get(key)?.unwrap_or(default);
        self.0.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CdpError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|e| invalid(format!("--{key} `{s}`: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, CdpError>
    where
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| invalid(format!("--{key} is required")))
    }
}

fn common_settings(common: &Common) -> Result<Settings, CdpError> {
    let mut s = Settings::load(common.config.as_deref())?;
    s.set("seed", common.seed);
    s.set("out", common.out.as_ref().map(|p| p.display()));
    Ok(s)
}

fn parse_scale(text: &str) -> Result<f64, CdpError> {
    let value = match text.split_once('/') {
        Some((a, b)) => {
            let num: f64 = a.trim().parse().map_err(|_| invalid(format!("bad scale `{text}`")))?;
            let den: f64 = b.trim().parse().map_err(|_| invalid(format!("bad scale `{text}`")))?;
            num / den
        }
        None => text.parse().map_err(|_| invalid(format!("bad scale `{text}`")))?,
    };
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(format!("scale must be positive, got `{text}`")))
    }
}

fn parse_activity_source(text: &str) -> Result<ActivitySource, CdpError> {
    match text {
        "raw" => Ok(ActivitySource::Raw),
        "scaled" => Ok(ActivitySource::Scaled),
        other => Err(invalid(format!("unknown activity source `{other}`"))),
    }
}

fn parse_theta_mode(text: &str) -> Result<ThetaMode, CdpError> {
    match text {
        "redraw" => Ok(ThetaMode::Redraw),
        "frozen" => Ok(ThetaMode::Frozen),
        other => Err(invalid(format!("unknown theta mode `{other}`"))),
    }
}

fn merge_scenario(s: &mut Settings, a: &ScenarioArgs) {
    s.set("scenario", a.scenario);
    s.set("change-type", a.change_type.as_ref());
    s.set("T", a.t_len);
    s.set("change-time", a.change_time);
    s.set("change-end", a.change_end);
    s.set("scale", a.scale.as_ref());
    s.set("theta-mode", a.theta_mode.as_ref());
}

fn scenario_spec(s: &mut Settings) -> Result<(ScenarioSpec, ThetaMode), CdpError> {
    let scenario: Scenario = s.require("scenario")?;
    let t_len = s.get_or("T", SEQUENCE_LENGTH)?;
    let start = s.get_or("change-time", CHANGE_TIME)?;
    let kind = s.get_or("change-type", "point".to_string())?;
    let change = match kind.as_str() {
        "point" => ChangeType::Point { t_star: start },
        "interval" => ChangeType::Interval {
            start,
            end: s.get_or("change-end", t_len)?,
        },
        other => return Err(invalid(format!("unknown change type `{other}`"))),
    };
    let scale = s.raw("scale").map(parse_scale).transpose()?;
    let mode = parse_theta_mode(&s.get_or("theta-mode", "redraw".to_string())?)?;
    Ok((ScenarioSpec::catalog(scenario, change, t_len, scale)?, mode))
}

fn out_dir(s: &Settings) -> Result<PathBuf, CdpError> {
    let dir: PathBuf = s.require("out")?;
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn finish(mut manifest: RunManifest, settings: Settings, dir: &Path) -> Result<(), Failure> {
    let path = dir.join("manifest.json");
    manifest.outputs.push(path.clone());
    manifest.config = settings.0;
    io::write_json(&path, &manifest).stage("write")
}

fn detect(args: DetectArgs) -> Result<(), Failure> {
    let mut s = common_settings(&args.common).stage("config")?;
    s.set("input", args.input.as_ref().map(|p| p.display()));
    s.set("n", args.n);
    s.set("method", args.method);
    s.set("window", args.window);
    s.set("epsilon", args.epsilon);
    s.set("threshold", args.threshold);
    s.set("activity-source", args.activity_source.as_ref());

    let (input, n, method, config) = (|| -> Result<_, CdpError> {
        let input: PathBuf = s.require("input")?;
        let n: Option<usize> = s.get("n")?;
        let method = s.get_or("method", Method::Cdp)?;
        let config = CdpConfig {
            window: s.get_or("window", 5)?,
            epsilon_rank: s.get_or("epsilon", DEFAULT_EPSILON)?,
            zscore_threshold: s.get_or("threshold", 5.0)?,
            seed: s.get_or("seed", 0)?,
            activity_source: parse_activity_source(&s.get_or("activity-source", "raw".to_string())?)?,
            ..CdpConfig::default()
        };
        config.validate()?;
        Ok((input, n, method, config))
    })()
    .stage("config")?;
    let dir = out_dir(&s).stage("config")?;

    let mut manifest = RunManifest::new("detect");
    manifest.seed = Some(config.seed);
    manifest.inputs.push(input.clone());

    let start = Instant::now();
    let snapshots = io::read_edge_list(&input, n).stage("ingest")?;
    manifest.timings.insert("ingest".into(), start.elapsed().as_secs_f64());

    let start = Instant::now();
    let series = run_method(method, &snapshots, &config).stage(match method {
        Method::Cdp => "cdp scoring",
        Method::Act => "act scoring",
        Method::Actm => "actm scoring",
    })?;
    manifest.timings.insert("detect".into(), start.elapsed().as_secs_f64());
    manifest
        .timings
        .insert("embed_mean".into(), series.timings.mean_embed());
    manifest
        .timings
        .insert("score_mean".into(), series.timings.mean_score());

    for (name, body) in [
        ("scores.csv", io::scores_csv(&series)),
        ("dims.csv", io::dims_csv(&series)),
        ("detections.csv", io::detection_csv(&series)),
    ] {
        manifest.outputs.push(io::write_file(&dir, name, &body).stage("write")?);
    }
    finish(manifest, s, &dir)
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let mut s = common_settings(&args.common).stage("config")?;
    merge_scenario(&mut s, &args.scenario);
    let (spec, mode) = scenario_spec(&mut s).stage("config")?;
    let seed = s.get_or("seed", 0u64).stage("config")?;
    let dir = out_dir(&s).stage("config")?;

    let mut manifest = RunManifest::new("simulate");
    manifest.seed = Some(seed);
    let start = Instant::now();
    let seq = generate_sequence(&spec, seed, mode).stage("simulate")?;
    manifest.timings.insert("simulate".into(), start.elapsed().as_secs_f64());

    let path = dir.join("sequence.txt");
    io::write_edge_list(&path, &seq.snapshots).stage("write")?;
    manifest.outputs.push(path);
    let path = dir.join("truth.json");
    io::write_json(&path, &seq.truth).stage("write")?;
    manifest.outputs.push(path);
    finish(manifest, s, &dir)
}

fn evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let mut s = common_settings(&args.common).stage("config")?;
    merge_scenario(&mut s, &args.scenario);
    s.set_list("method", &args.method);
    s.set_list("window", &args.window);
    s.set("runs", args.runs);
    s.set("epsilon", args.epsilon);
    s.set("samples", args.samples);
    s.set("activity-source", args.activity_source.as_ref());

    let (spec, cfg) = (|| -> Result<_, CdpError> {
        let (spec, theta_mode) = scenario_spec(&mut s)?;
        let defaults = ExperimentConfig::default();
        let methods = s.list("method")?.unwrap_or(defaults.methods.clone());
        let windows = s.list("window")?.unwrap_or(defaults.windows.clone());
        s.set_list("method", &methods);
        s.set_list("window", &windows);
        let cfg = ExperimentConfig {
            methods,
            windows,
            runs: s.get_or("runs", defaults.runs)?,
            seed: s.get_or("seed", defaults.seed)?,
            samples: s.get_or("samples", defaults.samples)?,
            epsilon: s.get_or("epsilon", defaults.epsilon)?,
            theta_mode,
            activity_source: parse_activity_source(&s.get_or("activity-source", "raw".to_string())?)?,
            ..defaults
        };
        Ok((spec, cfg))
    })()
    .stage("config")?;
    let dir = out_dir(&s).stage("config")?;

    let mut manifest = RunManifest::new("evaluate");
    manifest.seed = Some(cfg.seed);
    let start = Instant::now();
    let report = run_experiment(&spec, &cfg).stage("evaluate")?;
    manifest.timings.insert("evaluate".into(), start.elapsed().as_secs_f64());
    manifest
        .outputs
        .extend(io::write_experiment(&dir, &report).stage("write")?);
    finish(manifest, s, &dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(a) => detect(a),
        Command::Simulate(a) => simulate(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("cdp: {failure}");
            ExitCode::FAILURE
        }
    }
}
