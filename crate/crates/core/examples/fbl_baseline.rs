//! Gaussian-signaling baseline: error bound against the normal approximation
//! for one user, then the required blocklength with interference and
//! estimated channels.
//!
//! cargo run --release --example fbl_baseline

use comma::mimo_fbl::{fbl_error_bound, min_blocklength_gaussian, normal_approx_gaussian_input, CsiMode, FblConfig};

fn main() -> comma::Result<()> {
    let (b, rho) = (100, 1.0);
    println!("{:>6} {:>10} {:>10}", "n", "bound", "normal");
    for n in [110, 120, 130, 140] {
        let cfg = FblConfig { fading: false, trials: 20_000, ..FblConfig::new(n, b, 1, 1, rho) };
        let bound = fbl_error_bound(&cfg)?;
        println!("{n:>6} {:>10.4} {:>10.4}", bound.eps, normal_approx_gaussian_input(n, rho, b));
    }

    let base = FblConfig { trials: 2_000, ..FblConfig::new(0, 40, 16, 8, 0.125) };
    for (name, csi, n_p) in [("perfect", CsiMode::Perfect, 0), ("estimated", CsiMode::Estimated { pool_size: 1024 }, 128)] {
        let cfg = FblConfig { csi, n_p, ..base.clone() };
        let found = min_blocklength_gaussian(&cfg, 0.05, 1..=4000)?;
        println!("K_a = 16, M = 8, {name} CSI: n = {:?}", found.map(|f| f.n));
    }
    Ok(())
}
