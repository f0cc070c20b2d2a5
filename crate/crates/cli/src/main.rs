use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rttwatch::config::{parse_seed, RunConfig};
use rttwatch::eval::ReportFormat;
use rttwatch::models::ModelKind;
use rttwatch::pipeline::{self, Captures};
use rttwatch::stressor::{ScenarioId, StressorKind};
use rttwatch::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "rttwatch", version, about = "RTT-labelled KPI anomaly detection workbench")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (decimal or 0x-hex).
    #[arg(long, global = true, value_parser = parse_seed)]
    seed: Option<u64>,
    /// Root directory; data goes to <out>/data and reports to <out>/reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Stressor kinds to include, comma separated (e.g. cpu,udp,matrix).
    #[arg(long, global = true, value_delimiter = ',')]
    scenarios: Option<Vec<StressorKind>>,
    /// Models to train or evaluate, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    models: Option<Vec<ModelKind>>,
    /// Output format for printed results and report files.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate two unstressed runs and write the anomaly threshold.
    Baseline,
    /// Tune stressor inflations until every scenario reaches 97% purity.
    Calibrate,
    /// Simulate and label one dataset per scenario.
    Generate,
    /// Build a labelled dataset from real vmstat/iostat/netstat captures.
    Ingest {
        #[arg(long)]
        vmstat: PathBuf,
        #[arg(long)]
        iostat: PathBuf,
        #[arg(long)]
        netstat: PathBuf,
        /// Client-side `timestamp,rtt_ms` CSV.
        #[arg(long)]
        rtt: PathBuf,
        /// Scenario the capture belongs to, as kind/level.
        #[arg(long)]
        scenario: ScenarioId,
        /// Tool sampling interval for captures without timestamps, seconds.
        #[arg(long, default_value_t = 2.0)]
        interval: f64,
        /// Output dataset CSV.
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Train the selected models on the generated datasets.
    Train,
    /// Evaluate trained models and write the report.
    Evaluate,
    /// Re-emit tables from an existing report.
    Report,
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(out) = &cli.out {
        cfg.data_dir = out.join("data");
        cfg.report_dir = out.join("reports");
    }
    if let Some(kinds) = &cli.scenarios {
        if kinds.contains(&StressorKind::None) {
            return Err(Error::Config("`none` is always included; list stressor kinds only".into()));
        }
        cfg.scenarios.trained = kinds.iter().copied().filter(|k| k.is_trained()).collect();
        cfg.scenarios.untrained = kinds.iter().copied().filter(|k| k.is_untrained()).collect();
    }
    if let Some(m) = &cli.models {
        if m.is_empty() {
            return Err(Error::Protocol("no models selected".into()));
        }
        cfg.models = m.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    let json = cli.format == Format::Json;
    match &cli.command {
        Command::Baseline => {
            let r = pipeline::cmd_baseline(&cfg)?;
            if json {
                print_json(&r)?;
            } else {
                print!("{}", pipeline::format_baseline(&r));
                println!("threshold: {:.3} ms -> {}", r.threshold.cutoff, cfg.data_dir.join(pipeline::THRESHOLD_FILE).display());
            }
        }
        Command::Calibrate => {
            let entries = pipeline::cmd_calibrate(&cfg)?;
            if json {
                print_json(&entries)?;
            } else {
                for e in &entries {
                    println!(
                        "{:<14} inflation {:>7.4} -> {:>7.4}  purity {:.4}  {}",
                        e.scenario.to_string(),
                        e.initial_inflation,
                        e.inflation,
                        e.purity,
                        if e.passed { "ok" } else { "FAILED" }
                    );
                }
            }
            let failed: Vec<String> = entries.iter().filter(|e| !e.passed).map(|e| e.scenario.to_string()).collect();
            if !failed.is_empty() {
                return Err(Error::Domain(format!("purity target not reached for {}", failed.join(", "))));
            }
        }
        Command::Generate => {
            let made = pipeline::cmd_generate(&cfg)?;
            if json {
                print_json(&made)?;
            } else {
                for g in &made {
                    println!("{:<14} {:>5} rows  purity {:.4}  {}", g.scenario.to_string(), g.rows, g.purity, g.path.display());
                }
            }
        }
        Command::Ingest {
            vmstat,
            iostat,
            netstat,
            rtt,
            scenario,
            interval,
            dataset,
        } => {
            let caps = Captures {
                vmstat,
                iostat,
                netstat,
                rtt,
                interval: *interval,
            };
            let s = pipeline::cmd_ingest(&cfg, &caps, *scenario, dataset)?;
            if json {
                print_json(&s)?;
            } else {
                println!(
                    "{} rows -> {} ({} windows lacked a tool, {} frames lacked RTT samples)",
                    s.rows,
                    s.path.display(),
                    s.windows_without_tools,
                    s.frames_without_rtt
                );
            }
        }
        Command::Train => {
            for p in pipeline::cmd_train(&cfg)? {
                println!("{}", p.display());
            }
        }
        Command::Evaluate | Command::Report => {
            let formats: &[ReportFormat] = if json {
                &[ReportFormat::Json]
            } else {
                &[ReportFormat::Json, ReportFormat::Csv]
            };
            let (run, files) = if matches!(cli.command, Command::Evaluate) {
                pipeline::cmd_evaluate(&cfg, formats)?
            } else {
                pipeline::cmd_report(&cfg, formats)?
            };
            if json {
                println!("{}", run.to_json()?);
            } else {
                print!("{}", pipeline::format_summary(&run));
                for f in files {
                    println!("{}", f.display());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
