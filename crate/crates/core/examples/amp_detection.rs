//! One frame of MMV-AMP detection: per-slot symbol error rate and the
//! fraction of users whose true symbol is in the top 1 + N_fa list.
//!
//! cargo run --release --example amp_detection

use comma::mmv_amp::{amp_detect, symbol_rank, AmpConfig};
use comma::ortho_mod::{simulate_slots, SystemParams};
use comma::rng::stream_rng;
use rand::Rng;

fn main() -> comma::Result<()> {
    let params = SystemParams { k_a: 40, q: 64, n: 10, m: 16, p: 1.0, b: 60, eps: 0.05 };
    let mut rng = stream_rng(3, 0);
    let words: Vec<Vec<usize>> = (0..params.k_a)
        .map(|_| (0..params.n).map(|_| rng.random_range(0..params.q)).collect())
        .collect();
    let frame = simulate_slots(&params, &words, None, 4, false)?;
    let cfg = AmpConfig::default();

    let mut ranks = Vec::new();
    for (i, slot) in frame.slots.iter().enumerate() {
        let out = amp_detect(&slot.y, &frame.h, params.p, &cfg)?;
        let r: Vec<usize> = (0..params.k_a)
            .map(|k| {
                let row: Vec<f64> = out.state.x.row(k).iter().copied().collect();
                symbol_rank(&row, slot.symbols[k])
            })
            .collect();
        let errors = r.iter().filter(|&&x| x > 0).count();
        println!("slot {i}: {} iterations, converged {}, {errors} top-1 errors", out.iterations, out.converged);
        ranks.extend(r);
    }
    for n_fa in 0..=3 {
        let listed = ranks.iter().filter(|&&r| r <= n_fa).count();
        println!("N_fa = {n_fa}: {:.4} of (user, slot) pairs listed", listed as f64 / ranks.len() as f64);
    }
    Ok(())
}
