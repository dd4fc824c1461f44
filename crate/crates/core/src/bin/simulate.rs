//! Command-line driver: runs a sweep campaign and writes results.csv and
//! manifest.json into the output directory.
//!
//! Exit codes: 0 success, 2 invalid input, 3 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use rissim::harness::{
    optimization_trace, parse_schemes, run_campaign, AttackMode, CampaignSpec, SweepSpec,
    SweepVar, Weights,
};
use rissim::output::{emit_results, write_trace};
use rissim::scenario::CsiErrorMode;
use rissim::{load_scenario, Error, Execution, SystemConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CsiArg {
    Literal,
    Scaled,
}

#[derive(Debug, Parser)]
#[command(name = "simulate", version, about = "Monte Carlo sweeps of RIS jamming against massive MIMO")]
struct Args {
    /// Scenario file (TOML, or JSON with a .json extension). Defaults apply when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,

    /// Sweep as var=start:stop:step or var=v1,v2,... with var one of P_dBm, ris_x, tau, nu_target.
    #[arg(long)]
    sweep: Option<String>,

    /// Comma-separated schemes: safe, <attack> or <attack>+<unmit|fmit|hmit>.
    #[arg(long, default_value = "safe,disco+unmit,opt+unmit,opt+fmit,opt+hmit")]
    modes: String,

    #[arg(long)]
    trials: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, default_value_t = 0)]
    threads: usize,

    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Writes the optimizer objective per iteration for trial 0 of the first grid value.
    #[arg(long)]
    dump_trace: Option<PathBuf>,

    #[arg(long, value_enum)]
    csi_mode: Option<CsiArg>,
}

fn exit_code(err: &Error) -> ExitCode {
    match err {
        Error::Io { .. } => ExitCode::from(3),
        _ => ExitCode::from(2),
    }
}

fn run(args: Args) -> Result<(), Error> {
    let mut cfg = match &args.scenario {
        Some(path) => load_scenario(path)?,
        None => SystemConfig::default(),
    };
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = args.csi_mode {
        cfg.csi_error_mode = match mode {
            CsiArg::Literal => CsiErrorMode::Literal,
            CsiArg::Scaled => CsiErrorMode::Scaled,
        };
    }
    cfg.validate()?;

    let sweep = match &args.sweep {
        Some(s) => s.parse()?,
        None => SweepSpec::single(SweepVar::PowerDbm, cfg.power_dbm),
    };
    let schemes = parse_schemes(&args.modes)?;
    let spec = CampaignSpec {
        sweep,
        schemes,
        trials: cfg.trials,
        execution: Execution::with_threads(args.threads),
    };

    if let Some(path) = &args.dump_trace {
        let attack = spec
            .schemes
            .iter()
            .map(|s| s.attack)
            .find(|a| matches!(a, AttackMode::Optimized(_)))
            .unwrap_or(AttackMode::Optimized(Weights::Configured));
        let first = spec.sweep.var.apply(&cfg, spec.sweep.values[0])?;
        if let Some(trace) = optimization_trace(&first, attack, 0)? {
            write_trace(&trace, path)?;
        }
    }

    let result = run_campaign(&cfg, &spec)?;
    let (csv, manifest) = emit_results(&cfg, &spec, &result, &args.out)?;
    eprintln!("wrote {} and {}", csv.display(), manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
