//! Matched-filter detection: analytic rates at a calibrated threshold, the
//! certified slot rate, and the antenna scaling law.
//!
//! cargo run --release --example matched_filter

use comma::mf_detector::{
    calibrate_threshold, expected_false_alarms, misdetection_prob, scaling_law_antennas, theorem3_bound,
    theorem3_slot_rate, NoiseModel,
};

fn main() -> comma::Result<()> {
    let (k_a, q, m, p) = (20, 64, 64, 1.0);
    let h_norm_sq = m as f64;
    let model = NoiseModel::Complex;
    let theta = calibrate_threshold(h_norm_sq, p, k_a, q, 1e-3, model)?;
    println!("theta for p_md = 1e-3 at ||h||^2 = {h_norm_sq}: {theta:.4}");
    println!("  p_md = {:.3e}", misdetection_prob(h_norm_sq, theta, p, k_a, q, model)?);
    println!("  E[false alarms] = {:.3e}", expected_false_alarms(h_norm_sq, theta, p, k_a, q, model)?);

    println!("{:>4} {:>12} {:>12}", "M", "slot rate", "pupe bound");
    for m in [32, 64, 128, 256] {
        println!(
            "{m:>4} {:>12.3e} {:>12.3e}",
            theorem3_slot_rate(k_a, q, m, p),
            theorem3_bound(k_a, q, m, p, 10, 0.01)?
        );
    }

    for k_a in [100, 500, 2000] {
        let law = scaling_law_antennas(k_a, 128, 0.7, 100, 0.05)?;
        println!("K_a = {k_a}: M ~ {:.1}, S = {:.2} bits/use", law.m, law.s);
    }
    Ok(())
}
