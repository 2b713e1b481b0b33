use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lowrank_core::harness::Execution;
use lowrank_core::simulate::{mix_seed, read_csv};
use lowrank_sysid::config::{FieldError, ScenarioConfig};
use lowrank_sysid::presets::{preset, PRESET_NAMES};
use lowrank_sysid::scenario;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "lowrank-sysid",
    version,
    about = "Simulate and identify low-rank feedback models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Overrides master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of Monte-Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 picks the default.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Fix the leading numerator coefficient of H to one.
    #[arg(long)]
    pin_b0: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo batch described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        over: Overrides,
    },
    /// Run a built-in experiment, or print its config.
    Preset {
        name: String,
        #[arg(long)]
        emit_config: bool,
        #[command(flatten)]
        over: Overrides,
    },
    /// Write the data of run 0 to data.csv.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        over: Overrides,
    },
    /// Estimate from a CSV with columns y1, y2 (and u).
    Identify {
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        over: Overrides,
    },
}

#[derive(Serialize)]
struct ErrorReport {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    fields: Vec<FieldError>,
}

enum Failure {
    Config(String, Vec<FieldError>),
    Numeric(lowrank_core::Error),
    Invalid { failures: usize, runs: usize },
    Io(PathBuf, std::io::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Numeric(e) if matches!(e.code(), "config" | "invalid_input") => 2,
            Failure::Numeric(_) | Failure::Invalid { .. } => 1,
            Failure::Config(..) => 2,
            Failure::Io(..) => 3,
        }
    }

    fn report(self) -> ErrorReport {
        match self {
            Failure::Config(message, fields) => ErrorReport {
                error: "config_invalid",
                message,
                fields,
            },
            Failure::Numeric(e) => ErrorReport {
                error: e.code(),
                message: e.to_string(),
                fields: vec![],
            },
            Failure::Invalid { failures, runs } => ErrorReport {
                error: "batch_invalid",
                message: format!("{failures} of {runs} runs failed"),
                fields: vec![],
            },
            Failure::Io(path, e) => ErrorReport {
                error: "io",
                message: format!("{}: {e}", path.display()),
                fields: vec![],
            },
        }
    }
}

impl From<lowrank_core::Error> for Failure {
    fn from(e: lowrank_core::Error) -> Self {
        Failure::Numeric(e)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(path.to_path_buf(), e)
}

fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    ScenarioConfig::from_json(&text)
        .map_err(|f| Failure::Config(format!("{} is not a valid scenario", path.display()), f))
}

fn apply(mut cfg: ScenarioConfig, over: &Overrides) -> Result<(ScenarioConfig, PathBuf), Failure> {
    if let Some(s) = over.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = over.runs {
        cfg.runs = r;
    }
    if over.pin_b0 {
        cfg.estimation.pin_b0 = true;
    }
    if let Some(o) = &over.out {
        cfg.output_dir = Some(o.clone());
    }
    let dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.scenario_id));
    cfg.output_dir = Some(dir.clone());
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(Failure::Config("invalid overrides".into(), errs));
    }
    Ok((cfg, dir))
}

fn execution(threads: usize) -> Execution {
    if cfg!(feature = "parallel") {
        Execution::Parallel { threads }
    } else {
        Execution::Sequential
    }
}

fn run_batch(cfg: ScenarioConfig, over: &Overrides) -> Result<(), Failure> {
    let (cfg, dir) = apply(cfg, over)?;
    let out = scenario::run(&cfg, execution(over.threads))?;
    let written = scenario::write_outputs(&dir, &cfg, &out).map_err(io_err(&dir))?;
    for p in &written {
        println!("{}", p.display());
    }
    for b in &out.summary.bode {
        println!(
            "{} vs {}: max rel err {:.4}, mean {:.4}",
            b.file, b.target, b.max_rel_err, b.mean_rel_err
        );
    }
    if !out.summary.mc.valid {
        return Err(Failure::Invalid {
            failures: out.summary.mc.failures,
            runs: cfg.runs,
        });
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, over } => run_batch(load(&config)?, &over),
        Command::Preset {
            name,
            emit_config,
            over,
        } => {
            let cfg = preset(&name).ok_or_else(|| {
                Failure::Config(
                    format!(
                        "unknown preset `{name}`; expected one of {}",
                        PRESET_NAMES.join(", ")
                    ),
                    vec![],
                )
            })?;
            if emit_config {
                let (cfg, _) = apply(cfg, &over)?;
                print!("{}", cfg.to_json());
                Ok(())
            } else {
                run_batch(cfg, &over)
            }
        }
        Command::Simulate { config, over } => {
            let (cfg, dir) = apply(load(&config)?, &over)?;
            let data = scenario::simulate(&cfg, mix_seed(cfg.master_seed, 0))?;
            let path = scenario::write_data(&dir, &data).map_err(io_err(&dir))?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Identify { config, data, over } => {
            let (cfg, dir) = apply(load(&config)?, &over)?;
            let file = fs::File::open(&data).map_err(io_err(&data))?;
            let series = read_csv(BufReader::new(file))?;
            let series = scenario::select_series(&cfg, series)?;
            let est = scenario::estimate(&cfg, &series)?;
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            let echo = dir.join("config.echo.json");
            fs::write(&echo, cfg.to_json()).map_err(io_err(&echo))?;
            let path = scenario::write_report(&dir, &est.report).map_err(io_err(&dir))?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.exit_code();
            let report = f.report();
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            ExitCode::from(code)
        }
    }
}
