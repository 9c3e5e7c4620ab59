//! A-channel bound against a brute-force decoder on a small codebook.
//!
//! cargo run --release --example achannel_bound

use comma::achannel::{brute_force_pupe, min_blocklength_for_rate, theorem1_bound, AChannelParams};
use comma::ortho_mod::Codebook;

fn main() -> comma::Result<()> {
    let (k_a, q, n, b) = (2, 8, 8, 6);
    println!("K_a={k_a} q={q} n={n} B={b}");
    println!("{:>6} {:>12} {:>12} {:>10}", "p_fa", "bound", "brute", "sigma");
    for p_fa in [0.0, 0.05, 0.1] {
        let params = AChannelParams::new(k_a, q, n, b, p_fa)?;
        let bound = theorem1_bound(&params, 10_000, 1)?;
        let codebook = Codebook::generate(b, n, q, 7)?;
        let brute = brute_force_pupe(&codebook, &params, 10_000, 2)?;
        println!("{p_fa:>6} {:>12.4e} {:>12.4e} {:>10.2e}", bound.value, brute.value, brute.std_err);
    }

    let params = AChannelParams::new(10, 256, 1, 100, 1e-3)?;
    let found = min_blocklength_for_rate(&params, 0.05, 1..=200, 10_000, 1)?;
    println!("K_a=10 q=256 B=100 p_fa=1e-3: shortest n meeting 0.05 is {:?}", found.n());
    Ok(())
}
