use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wrrcalc_cli::commands::{
    cmd_analyze, cmd_optimize, cmd_simulate, cmd_validate, CommandOutput, OptimizeArgs,
    SimulateArgs, EXIT_CONFIG,
};
use wrrcalc_cli::config::{parse_config, ConfigDocument};
use wrrcalc_cli::report::Format;
use wrrcalc_core::analysis::DepartureMode;
use wrrcalc_core::optimizer::OptimizeMode;
use wrrcalc_core::simulator::VisitGating;

/// Worst-case latency analysis for WRR-scheduled switched Ethernet ports.
#[derive(Parser)]
#[command(name = "wrrcalc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum DepartureArg {
    /// min(w1*L, sigma + rho*w2*tau_bar) + rho*t
    Eq12,
    /// w1*L + rho*t
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Pin w2, floor w1, then greedy repair toward the deadline.
    Paper,
    /// Search all weight vectors under the caps.
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum GatingArg {
    Open,
    Closed,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configuration invariants and list diagnostics.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: FormatArg,
    },
    /// Per-hop delay bounds, departure envelopes, and deadline verdicts.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "paper")]
        departure: DepartureArg,
        #[arg(long, value_enum, default_value = "table")]
        format: FormatArg,
        /// Warn when the burst cycle count differs under the conservative
        /// per-cycle balance.
        #[arg(long)]
        strict: bool,
    },
    /// Determine per-port weights meeting the deadline.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "paper")]
        mode: ModeArg,
        /// Comma-separated background weights, one per hop (e.g. "1,2").
        #[arg(long)]
        w2: Option<String>,
        /// Largest background weight tried in exhaustive mode.
        #[arg(long, default_value_t = 8)]
        w2_max: u32,
        /// Hard cap on any control weight.
        #[arg(long, default_value_t = 64)]
        w1_cap: u32,
        #[arg(long, value_enum, default_value = "paper")]
        departure: DepartureArg,
        #[arg(long, value_enum, default_value = "table")]
        format: FormatArg,
    },
    /// Simulate the network and compare observed delays to the bounds.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Simulated seconds per seed.
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        /// Number of seeds, starting from --seed.
        #[arg(long, default_value_t = 1)]
        seeds: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Abort with a saturation error once a queue holds this many frames.
        #[arg(long, default_value_t = 100_000)]
        queue_cap: usize,
        /// Whether frames arriving mid-visit may use the remaining quota.
        #[arg(long, value_enum, default_value = "open")]
        gating: GatingArg,
        /// Write the per-frame trace of the first seed to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "paper")]
        departure: DepartureArg,
        #[arg(long, value_enum, default_value = "table")]
        format: FormatArg,
    },
}

/// Diagnostic verbosity from WRRCALC_LOG: off, error, warn (default), info,
/// debug.
fn verbosity() -> u8 {
    match std::env::var("WRRCALC_LOG").ok().as_deref() {
        Some("off") => 0,
        Some("error") => 1,
        Some("info") => 3,
        Some("debug") | Some("trace") => 4,
        _ => 2,
    }
}

fn load(path: &PathBuf) -> Result<ConfigDocument, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let doc = parse_config(&text).map_err(|e| e.to_string())?;
    if verbosity() >= 4 {
        eprintln!(
            "wrrcalc: parsed {}: {} links, {} ports, {} flows",
            path.display(),
            doc.topology.links.len(),
            doc.topology.ports.len(),
            doc.flows.len()
        );
    }
    Ok(doc)
}

fn parse_w2_list(raw: &str) -> Result<Vec<u32>, String> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<u32>()
                .map_err(|_| format!("--w2 expects comma-separated integers, got {part}"))
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = run(cli.command);
    if verbosity() >= 2 {
        for w in &out.warnings {
            eprintln!("warning: {w}");
        }
    }
    print!("{}", out.stdout);
    ExitCode::from(out.exit_code)
}

fn run(command: Command) -> CommandOutput {
    match command {
        Command::Validate { config, format } => match load(&config) {
            Ok(doc) => cmd_validate(&doc, format.into()),
            Err(e) => config_failure(e),
        },
        Command::Analyze { config, departure, format, strict } => match load(&config) {
            Ok(doc) => cmd_analyze(&doc, departure.into(), strict, format.into()),
            Err(e) => config_failure(e),
        },
        Command::Optimize { config, mode, w2, w2_max, w1_cap, departure, format } => {
            let doc = match load(&config) {
                Ok(doc) => doc,
                Err(e) => return config_failure(e),
            };
            let w2_pinned = match w2.as_deref().map(parse_w2_list).transpose() {
                Ok(list) => list,
                Err(e) => return config_failure(e),
            };
            let args = OptimizeArgs {
                mode: mode.into(),
                departure: departure.into(),
                w2_pinned,
                w2_max,
                w1_cap,
            };
            cmd_optimize(&doc, &args, format.into())
        }
        Command::Simulate {
            config,
            duration,
            seeds,
            seed,
            queue_cap,
            gating,
            trace,
            departure,
            format,
        } => {
            let doc = match load(&config) {
                Ok(doc) => doc,
                Err(e) => return config_failure(e),
            };
            let args = SimulateArgs {
                duration_s: duration,
                seeds,
                base_seed: seed,
                queue_cap_frames: queue_cap,
                gating: gating.into(),
                departure: departure.into(),
                want_trace: trace.is_some(),
                ..Default::default()
            };
            let mut out = cmd_simulate(&doc, &args, format.into());
            if let (Some(path), Some(csv)) = (trace, out.trace_csv.take()) {
                if let Err(e) = fs::write(&path, csv) {
                    return config_failure(format!("cannot write {}: {e}", path.display()));
                }
                if verbosity() >= 3 {
                    eprintln!("wrrcalc: wrote trace to {}", path.display());
                }
            }
            out
        }
    }
}

fn config_failure(message: String) -> CommandOutput {
    CommandOutput {
        exit_code: EXIT_CONFIG,
        stdout: format!("{message}\n"),
        warnings: Vec::new(),
        trace_csv: None,
    }
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Table => Format::Table,
            FormatArg::Csv => Format::Csv,
        }
    }
}

impl From<DepartureArg> for DepartureMode {
    fn from(d: DepartureArg) -> Self {
        match d {
            DepartureArg::Eq12 => DepartureMode::EnvelopeMin,
            DepartureArg::Paper => DepartureMode::QuotaBurst,
        }
    }
}

impl From<ModeArg> for OptimizeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => OptimizeMode::Iterative,
            ModeArg::Exhaustive => OptimizeMode::Exhaustive,
        }
    }
}

impl From<GatingArg> for VisitGating {
    fn from(g: GatingArg) -> Self {
        match g {
            GatingArg::Open => VisitGating::Open,
            GatingArg::Closed => VisitGating::Closed,
        }
    }
}
