use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mmkey::config::CellularConfig;
use mmkey::report::{write_atomic, OutputPaths};
use mmkey::run::{pattern_csv, sweep_demo};
use mmkey::{emit_report, run, HarnessError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "mmkey", version, about = "Erasure-based key agreement over mmWave beam sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML, or JSON by extension). Defaults to the shipped scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Azimuth of the first sector, degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    orientation: f64,
    #[arg(long, value_parser = parse_xy, default_value = "0,50", allow_hyphen_values = true)]
    mobile: [f64; 2],
    #[arg(long, value_parser = parse_xy, default_value = "40,30", allow_hyphen_values = true)]
    eve: [f64; 2],
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Rates, thresholds and the DH baseline.
    RateCalc(RunArgs),
    /// Two stations on a circle.
    Exp1(RunArgs),
    /// N equiangular stations.
    Exp2(RunArgs),
    /// Fixed deployment, mobile inside a triangle.
    Exp3(RunArgs),
    /// Two-car platoon: volumes, key rate, OTP budget.
    Platoon(RunArgs),
    /// One sweep with its transcript and the sector patterns.
    SweepDemo(SweepArgs),
}

fn parse_xy(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or("expected X,Y")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"));
    Ok([p(x)?, p(y)?])
}

fn scenario(kind: &str, args: &RunArgs) -> Result<(ScenarioConfig, PathBuf), HarnessError> {
    let mut cfg = match &args.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default_for(kind)?,
    };
    if cfg.scenario.kind() != kind {
        return Err(HarnessError::Config(format!(
            "config describes `{}`, command is `{kind}`",
            cfg.scenario.kind()
        )));
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.override_trials(t);
    }
    cfg.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn run_scenario(kind: &str, args: &RunArgs) -> Result<PathBuf, HarnessError> {
    let (cfg, out) = scenario(kind, args)?;
    let start = Instant::now();
    let output = run(&cfg)?;
    emit_report(&output, &OutputPaths::in_dir(&out), Some(start.elapsed().as_secs_f64()))?;
    Ok(out)
}

fn run_sweep(args: &SweepArgs) -> Result<PathBuf, HarnessError> {
    let cellular = CellularConfig::default();
    let t = sweep_demo(&cellular, args.orientation, args.mobile, args.eve, args.seed)?;
    let mut json = serde_json::to_vec_pretty(&t).map_err(|e| HarnessError::Model(e.to_string()))?;
    json.push(b'\n');
    write_atomic(&args.out.join("sweep.json"), &json)?;
    let ant = cellular.station_antenna(args.orientation)?;
    write_atomic(&args.out.join("pattern.csv"), &pattern_csv(&ant, 1.0, 0.0)?)?;
    Ok(args.out.clone())
}

fn fail(e: &HarnessError) -> ExitCode {
    let line = serde_json::json!({ "error": e.category(), "message": e.to_string() });
    eprintln!("{line}");
    ExitCode::from(e.exit_code() as u8)
}

fn report_done(out: &Path) {
    println!("wrote {}", out.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RateCalc(a) => run_scenario("rate-calc", a),
        Command::Exp1(a) => run_scenario("exp1", a),
        Command::Exp2(a) => run_scenario("exp2", a),
        Command::Exp3(a) => run_scenario("exp3", a),
        Command::Platoon(a) => run_scenario("platoon", a),
        Command::SweepDemo(a) => run_sweep(a),
    };
    match result {
        Ok(out) => {
            report_done(&out);
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
