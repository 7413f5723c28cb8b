use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use formctl_core::report::{analyze, design};
use formctl_core::scenario::{preset, ScenarioConfig, PRESET_NAMES};
use formctl_core::sim::plot::line_plot;
use formctl_core::sim::{integrate, metrics, MetricsReport, RateCenter, TrajectoryLog};
use formctl_core::FormationError;

#[derive(Parser)]
#[command(name = "formctl", version, about = "Distance-based formation control toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rigidity report and motion-space dimensions.
    Analyze(Common),
    /// Motion-parameter design with verification residuals.
    Design(Common),
    /// Run a scenario and write CSV, metrics JSON and SVG plots.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Run this many seeds (starting at --seed) in parallel.
        #[arg(long)]
        sweep: Option<u64>,
    },
    /// Extract metrics from a run (simulated now, or read from --log).
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV written by `simulate`.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Rate center: `centroid` or a 1-based agent index.
        #[arg(long)]
        center: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Built-in scenario name.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Scenario JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random initial conditions.
    #[arg(long)]
    seed: Option<u64>,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

enum CliError {
    Io(String),
    Core(FormationError),
}

impl From<FormationError> for CliError {
    fn from(e: FormationError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                FormationError::Infeasible { .. } | FormationError::Degenerate(_) => 3,
                FormationError::SimulationAborted { .. } | FormationError::Singularity { .. } => 4,
                FormationError::TooFewSamples { .. } => 1,
                _ => 2,
            },
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn load(c: &Common) -> CliResult<ScenarioConfig> {
    let cfg = match (&c.preset, &c.config) {
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            ScenarioConfig::from_json(&text)
                .map_err(|e| match e {
                    FormationError::Configuration(m) => {
                        FormationError::Configuration(format!("{}: {m}", path.display()))
                    }
                    other => other,
                })?
        }
        _ => {
            return Err(FormationError::Configuration(format!(
                "give --preset NAME or --config FILE (presets: {})",
                PRESET_NAMES.join(", ")
            ))
            .into())
        }
    };
    Ok(match c.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn emit(out: &Option<PathBuf>, file: &str, text: &str) -> CliResult<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(file), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn default_center(cfg: &ScenarioConfig) -> RateCenter {
    match &cfg.enclosing {
        Some(e) => RateCenter::Agent(e.target - 1),
        None => RateCenter::Centroid,
    }
}

fn parse_center(s: &str) -> CliResult<RateCenter> {
    if s == "centroid" {
        return Ok(RateCenter::Centroid);
    }
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(RateCenter::Agent(k - 1)),
        _ => Err(FormationError::Configuration(format!(
            "--center must be 'centroid' or a 1-based agent index, got '{s}'"
        ))
        .into()),
    }
}

fn write_plots(dir: &Path, log: &TrajectoryLog, rep: &MetricsReport) -> CliResult<()> {
    let s = &rep.series;
    let one = |y: &Vec<f64>| vec![(s.t.clone(), y.clone())];
    let plots = [
        ("speed.svg", line_plot("mean speed", "t [s]", "speed", &one(&s.speed))),
        ("heading.svg", line_plot("heading", "t [s]", "rad", &one(&s.heading))),
        ("error.svg", line_plot("distance error", "t [s]", "|e|", &one(&s.e_norm))),
        ("estimate_error.svg", line_plot("estimator error", "t [s]", "|e_v|", &one(&s.ev_norm))),
    ];
    for (name, svg) in plots {
        fs::write(dir.join(name), svg)?;
    }
    if !s.angular_rate.is_empty() {
        let series: Vec<(Vec<f64>, Vec<f64>)> =
            s.angular_rate.iter().map(|r| (s.t.clone(), r.clone())).collect();
        fs::write(dir.join("angular_rate.svg"), line_plot("angular rate", "t [s]", "rad/s", &series))?;
    }
    let paths: Vec<(Vec<f64>, Vec<f64>)> = (0..log.agents)
        .map(|i| {
            let xs = (0..log.samples.len()).map(|k| log.position(k, i)[0]).collect();
            let ys = (0..log.samples.len()).map(|k| log.position(k, i)[1]).collect();
            (xs, ys)
        })
        .collect();
    fs::write(dir.join("paths.svg"), line_plot("agent paths", "x", "y", &paths))?;
    Ok(())
}

fn run_one(cfg: &ScenarioConfig, dir: &Path) -> CliResult<MetricsReport> {
    let resolved = cfg.resolve()?;
    let log = integrate(&resolved.setup)?;
    let rep = metrics(&log, default_center(cfg))?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.json"), cfg.to_json() + "\n")?;
    let mut f = fs::File::create(dir.join("trajectory.csv"))?;
    log.write_csv(&mut f)?;
    fs::write(dir.join("metrics.json"), json(&rep))?;
    write_plots(dir, &log, &rep)?;
    Ok(rep)
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("FORMCTL_THREADS") {
        let n: usize = v.parse().map_err(|_| {
            FormationError::Configuration(format!("FORMCTL_THREADS must be a positive integer, got '{v}'"))
        })?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| CliError::Io(e.to_string()))
}

fn summary_line(label: &str, rep: &MetricsReport) -> String {
    let s = &rep.summary;
    format!(
        "{label}: t = {:.2}, speed = {:.4}, heading = {:.4}, |e| = {:.3e}, |e_v| = {:.3e}, events = {}\n",
        s.duration,
        s.final_speed,
        s.final_heading,
        s.final_e_norm,
        s.final_ev_norm,
        rep.events.len()
    )
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Command::Analyze(c) => {
            let rep = analyze(&load(&c)?)?;
            let text = if c.json { json(&rep) } else { rep.to_text() };
            emit(&c.out, "analysis.txt", &text)
        }
        Command::Design(c) => {
            let rep = design(&load(&c)?)?;
            let text = if c.json { json(&rep) } else { rep.to_text() };
            emit(&c.out, "design.txt", &text)
        }
        Command::Simulate { common: c, sweep } => {
            let cfg = load(&c)?;
            let out = c.out.clone().unwrap_or_else(|| PathBuf::from("formctl-out"));
            match sweep {
                None => {
                    let rep = run_one(&cfg, &out)?;
                    if c.json {
                        print!("{}", json(&rep.summary));
                    } else {
                        print!("{}", summary_line(&out.display().to_string(), &rep));
                    }
                }
                Some(count) => {
                    let base = cfg.agents.seed.unwrap_or(0);
                    let seeds: Vec<u64> = (base..base + count).collect();
                    let results: Vec<CliResult<MetricsReport>> = thread_pool()?.install(|| {
                        seeds
                            .par_iter()
                            .map(|&s| run_one(&cfg.clone().with_seed(s), &out.join(format!("seed-{s}"))))
                            .collect()
                    });
                    let mut first_err = None;
                    for (s, r) in seeds.iter().zip(results) {
                        match r {
                            Ok(rep) => print!("{}", summary_line(&format!("seed {s}"), &rep)),
                            Err(e) => {
                                eprintln!("seed {s}: {}", describe(&e));
                                first_err.get_or_insert(e);
                            }
                        }
                    }
                    if let Some(e) = first_err {
                        return Err(e);
                    }
                }
            }
            Ok(())
        }
        Command::Metrics { common: c, log, center } => {
            let (log, default) = match log {
                Some(path) => {
                    let f = fs::File::open(&path)
                        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    let log = TrajectoryLog::from_csv(f)?;
                    let default = if c.preset.is_some() || c.config.is_some() {
                        default_center(&load(&c)?)
                    } else {
                        RateCenter::Centroid
                    };
                    (log, default)
                }
                None => {
                    let cfg = load(&c)?;
                    (integrate(&cfg.resolve()?.setup)?, default_center(&cfg))
                }
            };
            let center = match center {
                Some(s) => parse_center(&s)?,
                None => default,
            };
            if let RateCenter::Agent(a) = center {
                if a >= log.agents {
                    return Err(FormationError::IndexOutOfRange { index: a + 1, max: log.agents }.into());
                }
            }
            let rep = metrics(&log, center)?;
            let text = if c.json { json(&rep) } else { summary_line("metrics", &rep) };
            emit(&c.out, "metrics.json", &text)
        }
    }
}

fn describe(e: &CliError) -> String {
    match e {
        CliError::Io(m) => format!("I/O error: {m}"),
        CliError::Core(e) => e.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("formctl: {}", describe(&e));
            ExitCode::from(e.code())
        }
    }
}
