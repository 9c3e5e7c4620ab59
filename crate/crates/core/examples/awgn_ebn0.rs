//! Minimum Eb/N0 of threshold detection with a random outer code, against
//! slotted ALOHA, for a few user counts.
//!
//! cargo run --release --example awgn_ebn0

use comma::achannel::AChannelParams;
use comma::awgn_frontend::{aloha_ebn0, min_ebn0_threshold, PowerGrid};

fn main() -> comma::Result<()> {
    let (q, n, b, eps) = (256, 117, 200, 0.05);
    let grid = PowerGrid::default();
    println!("{:>4} {:>12} {:>10} {:>12}", "K_a", "threshold", "p_fa", "aloha");
    for k_a in [5, 10, 20, 40, 80] {
        let params = AChannelParams::new(k_a, q, n, b, 0.0)?;
        let thr = min_ebn0_threshold(&params, 0.01, eps, &grid, 2_000, 1)?;
        let aloha = aloha_ebn0(k_a, b, n * q, eps, &grid)?;
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2} dB"));
        println!(
            "{k_a:>4} {:>12} {:>10} {:>12}",
            fmt(thr.as_ref().map(|t| t.ebn0_db)),
            thr.map_or("-".to_string(), |t| format!("{:.1e}", t.bound.rates.p_fa)),
            fmt(aloha.map(|a| a.ebn0_db)),
        );
    }
    Ok(())
}
