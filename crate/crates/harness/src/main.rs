use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing::Level;

use sacre_harness::{
    aggregate, read_report, run_scenario, write_report, HarnessError, Outcome, RunMetadata, RunOptions, RunReport,
};
use sacre_vehicle::{generate, ScenarioKind};

const SCENARIOS: [&str; 7] = ["us1", "us2", "us3", "us4a", "us4b", "us5", "all"];
const GEN_SCALE: f64 = 0.1;

#[derive(Parser)]
#[command(name = "sacre", version, about = "Run the smart-vehicle uncertainty scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios with replications and write a report.
    Run {
        #[arg(long, value_parser = SCENARIOS)]
        scenario: String,
        #[arg(long, default_value_t = 20)]
        replications: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        scale: f64,
        #[arg(long)]
        out: PathBuf,
        /// Pace iterations at the loop period instead of running flat out.
        #[arg(long)]
        realtime: bool,
    },
    /// Generate a scenario's trace files only.
    Gen {
        #[arg(long, value_parser = SCENARIOS[..6].to_vec())]
        scenario: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-aggregate a persisted report.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn init_logging() -> Result<(), String> {
    let level = match std::env::var("SACRE_LOG").as_deref() {
        Err(_) | Ok("error") => Level::ERROR,
        Ok("info") => Level::INFO,
        Ok("debug") => Level::DEBUG,
        Ok(other) => return Err(format!("SACRE_LOG must be error, info or debug, not `{other}`")),
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .init();
    Ok(())
}

fn kinds(scenario: &str) -> Vec<ScenarioKind> {
    if scenario == "all" {
        ScenarioKind::ALL.to_vec()
    } else {
        vec![scenario.parse().expect("validated by clap")]
    }
}

fn run(scenario: &str, replications: u32, options: RunOptions, out: &Path) -> Result<bool, HarnessError> {
    if !(options.scale > 0.0 && options.scale <= 1.0) {
        return Err(HarnessError::Config(format!("--scale {} is outside (0, 1]", options.scale)));
    }
    let mut results = Vec::new();
    for kind in kinds(scenario) {
        results.extend(run_scenario(kind, replications, options, out)?);
    }
    let metadata = RunMetadata {
        seed: options.seed,
        scale: options.scale,
        replications,
        realtime: options.realtime,
    };
    let metrics = aggregate(metadata, &results);
    for s in &metrics.scenarios {
        println!(
            "{}: {}/{} adapted, mean {} ms, sd {} ms",
            s.scenario_id,
            s.adapted,
            s.replications,
            fmt_opt(s.mean_response_ms),
            fmt_opt(s.stddev_response_ms)
        );
    }
    if let Some(r) = metrics.ppmcc {
        println!("ppmcc(dataset size, response time) = {r:.4}");
    }
    let ok = results.iter().all(|r| r.outcome == Outcome::Adapted);
    write_report(&RunReport { results, metrics }, out)?;
    Ok(ok)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

fn gen(scenario: &str, seed: u64, out: &Path) -> Result<(), HarnessError> {
    let kind: ScenarioKind = scenario.parse()?;
    let g = generate(kind, seed, GEN_SCALE)?;
    let files = g.write(out)?;
    println!("{}", files.sensors.display());
    println!("{}", files.actions.display());
    println!("{}", files.config.display());
    Ok(())
}

fn stats(input: &Path) -> Result<(), HarnessError> {
    let report = read_report(input)?;
    let metrics = aggregate(report.metrics.metadata.clone(), &report.results);
    if metrics != report.metrics {
        tracing::warn!("persisted metrics differ from the recomputed ones");
    }
    println!("{}", serde_json::to_string_pretty(&metrics)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_logging() {
        eprintln!("{e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Run {
            scenario,
            replications,
            seed,
            scale,
            out,
            realtime,
        } => run(&scenario, replications, RunOptions { seed, scale, realtime }, &out),
        Command::Gen { scenario, seed, out } => gen(&scenario, seed, &out).map(|()| true),
        Command::Stats { input } => stats(&input).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ HarnessError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
