//! A small COMMA sweep against the Gaussian baseline, written as CSV to stdout.
//!
//! cargo run --release --example comma_sweep [preset]

use comma::experiments::{preset, run_sweep, write_csv};

fn main() -> comma::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "smoke".into());
    let Some(spec) = preset(&name) else {
        eprintln!("unknown preset `{name}`");
        std::process::exit(1);
    };
    let out = run_sweep(&spec, false)?;
    write_csv(std::io::stdout().lock(), &out.rows)?;
    eprintln!("{} rows, {} feasible", out.summary.rows, out.summary.feasible);
    Ok(())
}
