//! Named sweep presets.
//!
//! `*-desk` presets finish in seconds to minutes. `fig4` and `fig6` use the
//! full-size parameters and run for hours.

use super::config::{Kind, SweepSpec};

/// Preset names with a one-line description.
pub const PRESETS: [(&str, &str); 12] = [
    ("fig1", "largest payload vs K_a, q=256, n=117, P=15 dB, with and without false alarms"),
    ("fig2", "minimum Eb/N0 vs K_a, q=256, n=117, B=200, with slotted ALOHA"),
    ("fig3", "MMV-AMP miss probability vs K_a, q=128, P=0.7, M=25, n=23, N_fa 0..4"),
    ("fig4-desk", "COMMA vs Gaussian signaling with known channels, M=8, q=32, P=4, B=40"),
    ("fig6-desk", "COMMA vs Gaussian signaling with estimated channels, M=8, q=32, P=4, B=40, 4 pilot blocks"),
    ("mf-desk", "matched-filter bound, scaling law and simulation, q=32, M=32"),
    ("fbl-desk", "Gaussian-signaling blocklength vs K_a, M=8, B=40, per-symbol power 4/32"),
    ("fig4", "COMMA vs Gaussian signaling with known channels, M=50, q=64, P=0.3, B=100 (long-running)"),
    ("fig5", "COMMA vs Gaussian signaling with known channels, M=25, q=128, P=0.7, B=100 (long-running)"),
    ("fig6", "COMMA vs Gaussian signaling with estimated channels, M=50, q=128, P=0.6, 20 pilot blocks (long-running)"),
    ("fig7", "COMMA vs Gaussian signaling with estimated channels, M=25, q=256, P=1.4, 7 pilot blocks (long-running)"),
    ("smoke", "tiny COMMA sweep for quick checks"),
];

fn range(start: usize, stop: usize, step: usize) -> Vec<usize> {
    (start..=stop).step_by(step).collect()
}

/// Look up a preset by name.
pub fn preset(name: &str) -> Option<SweepSpec> {
    let spec = match name {
        "fig1" => {
            let mut s = SweepSpec::defaults(Kind::AchannelSeff);
            s.k_a = range(5, 120, 5);
            s.out = "fig1.csv".into();
            s
        }
        "fig2" => {
            let mut s = SweepSpec::defaults(Kind::AchannelEbn0);
            s.k_a = range(5, 120, 5);
            s.out = "fig2.csv".into();
            s
        }
        "fig3" => {
            let mut s = SweepSpec::defaults(Kind::AmpMissrate);
            s.k_a = range(10, 120, 10);
            s.frames = 1000;
            s.out = "fig3.csv".into();
            s
        }
        "fig4-desk" | "fig6-desk" => {
            let kind = if name == "fig4-desk" { Kind::CommaSeffPerfect } else { Kind::CommaSeffEstimated };
            let mut s = SweepSpec::defaults(kind);
            s.k_a = range(4, 64, 4);
            s.frames = 1000;
            if kind == Kind::CommaSeffEstimated {
                s.pilot_blocks = 4;
            }
            s.out = format!("{}.csv", name.trim_end_matches("-desk"));
            s
        }
        "mf-desk" => {
            let mut s = SweepSpec::defaults(Kind::MfScaling);
            s.k_a = range(2, 16, 2);
            s.frames = 1000;
            s.out = "mf.csv".into();
            s
        }
        "fbl-desk" => {
            let mut s = SweepSpec::defaults(Kind::MimoFbl);
            s.k_a = range(4, 64, 4);
            s.m = vec![8];
            s.b = vec![40];
            s.n = vec![4000];
            s.power = vec![0.125];
            s.out = "fbl.csv".into();
            s
        }
        "fig4" | "fig5" | "fig6" | "fig7" => {
            let (kind, k_max, q, m, p, blocks) = match name {
                "fig4" => (Kind::CommaSeffPerfect, 900, 64, 50, 0.3, 1),
                "fig5" => (Kind::CommaSeffPerfect, 450, 128, 25, 0.7, 1),
                "fig6" => (Kind::CommaSeffEstimated, 900, 128, 50, 0.6, 20),
                _ => (Kind::CommaSeffEstimated, 450, 256, 25, 1.4, 7),
            };
            let mut s = SweepSpec::defaults(kind);
            s.k_a = range(50, k_max, 50);
            s.q = vec![q];
            s.n = vec![40];
            s.m = vec![m];
            s.power = vec![p];
            s.b = vec![100];
            s.pilot_blocks = blocks;
            s.frames = 1000;
            s.out = format!("{name}.csv");
            s
        }
        "smoke" => {
            let mut s = SweepSpec::defaults(Kind::CommaSeffPerfect);
            s.k_a = vec![2, 4];
            s.q = vec![16];
            s.n = vec![30];
            s.m = vec![4];
            s.b = vec![20];
            s.frames = 50;
            s.mc_samples = 500;
            s.fbl_trials = 200;
            s.out = "smoke.csv".into();
            s
        }
        _ => return None,
    };
    Some(spec)
}
