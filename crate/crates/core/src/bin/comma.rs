use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use comma::experiments::{parse_config, run_sweep, write_outputs, Kind};

#[derive(Parser)]
#[command(name = "comma", version, about = "Coded orthogonal-modulation multiple access sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// A-channel bound: largest payload at fixed power (achannel-seff).
    BoundAchannel(RunArgs),
    /// AWGN front end: minimum Eb/N0 with the ALOHA baseline (achannel-ebn0).
    BoundAwgn(RunArgs),
    /// MMV-AMP miss rates (amp-missrate) or matched-filter detection (mf-scaling).
    SimAmp(RunArgs),
    /// COMMA spectral efficiency with known channels (comma-seff-perfect).
    SweepSe(RunArgs),
    /// COMMA spectral efficiency with estimated channels (comma-seff-estimated).
    SweepSeCsi(RunArgs),
    /// Gaussian-signaling finite-blocklength baseline (mimo-fbl).
    MimoFbl(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file; optional when `--preset` is given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    /// Also write per-point AMP traces next to the CSV.
    #[arg(long)]
    trace: bool,
}

impl Command {
    fn parts(&self) -> (&RunArgs, &'static [Kind]) {
        match self {
            Command::BoundAchannel(a) => (a, &[Kind::AchannelSeff]),
            Command::BoundAwgn(a) => (a, &[Kind::AchannelEbn0]),
            Command::SimAmp(a) => (a, &[Kind::AmpMissrate, Kind::MfScaling]),
            Command::SweepSe(a) => (a, &[Kind::CommaSeffPerfect]),
            Command::SweepSeCsi(a) => (a, &[Kind::CommaSeffEstimated]),
            Command::MimoFbl(a) => (a, &[Kind::MimoFbl]),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, kinds) = cli.command.parts();

    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("cannot read {}: {e}", path.display());
                return ExitCode::from(1);
            }
        },
        None if args.preset.is_some() => String::new(),
        None => {
            eprintln!("either --config or --preset is required");
            return ExitCode::from(1);
        }
    };
    let mut spec = match parse_config(&text, Some(kinds[0]), args.preset.as_deref()) {
        Ok(s) => s,
        Err(errors) => {
            for e in errors {
                eprintln!("config error: {e}");
            }
            return ExitCode::from(1);
        }
    };
    if !kinds.contains(&spec.kind) {
        eprintln!("config error: kind `{}` cannot run under this subcommand", spec.kind);
        return ExitCode::from(1);
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(out) = &args.out {
        spec.out = out.clone();
    }

    let output = match run_sweep(&spec, args.trace).and_then(|o| write_outputs(&spec, &o).map(|()| o)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let s = output.summary;
    eprintln!("{}: {} rows, {} feasible, {} errors -> {}", spec.kind, s.rows, s.feasible, s.errors, spec.out);
    if output.all_infeasible() {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}
