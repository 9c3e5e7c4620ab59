//! Frame-level simulations shared by the sweep kinds.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::achannel::{mean_and_std_err, McEstimate};
use crate::error::{invalid, Result};
use crate::mf_detector::{mf_lists, MfConfig, MfThreshold};
use crate::mmv_amp::{amp_detect, symbol_rank, AmpConfig, TraceRow};
use crate::ortho_mod::{assign_pilots, draw_channel, mmse_estimate, pilot_observation, simulate_slots, PilotPool, SystemParams};
use crate::rng::{derive_seed, stream_rng};

/// Channel knowledge of the COMMA receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommaCsi {
    Perfect,
    /// q-ary pilots of `blocks` one-hot blocks, drawn from a pool of `pool` sequences.
    Estimated { blocks: usize, pool: usize },
}

/// One simulated operating point of the MMV-AMP receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpSetup {
    pub k_a: usize,
    pub q: usize,
    pub m: usize,
    pub p: f64,
    /// Slots per frame.
    pub n: usize,
    pub csi: CommaCsi,
    pub amp: AmpConfig,
}

/// Prefix maxima of the rank of each user's true symbol.
///
/// `max_rank[f * K_a + k][i]` is the largest rank over slots `0..=i` of user
/// `k` in frame `f`; the user is listed in all of the first `i + 1` slots
/// with `N_fa` extra candidates iff this is at most `N_fa`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankProfiles {
    pub n: usize,
    pub max_rank: Vec<Vec<u32>>,
    pub diverged_slots: usize,
    /// AMP trace of slot 0 of frame 0, if requested.
    pub trace: Vec<TraceRow>,
}

impl RankProfiles {
    /// Fraction of users missing from their lists in at least one of the first `n` slots.
    pub fn miss_probability(&self, n: usize, n_fa: usize) -> McEstimate {
        let xs: Vec<f64> = self
            .max_rank
            .iter()
            .map(|r| if r[n - 1] as usize > n_fa { 1.0 } else { 0.0 })
            .collect();
        let (value, std_err) = mean_and_std_err(&xs);
        McEstimate { value, std_err }
    }
}

fn estimated_channel(
    h: &DMatrix<Complex64>,
    pool: &PilotPool,
    p: f64,
    rng: &mut impl Rng,
) -> Result<DMatrix<Complex64>> {
    let idx = assign_pilots(pool.len(), h.ncols(), rng.random());
    let pilots: Vec<_> = idx.iter().map(|&i| pool.pilots[i].clone()).collect();
    let v = pilot_observation(h, &pilots, p, rng);
    Ok(mmse_estimate(&v, &pilots, p)?.h_hat)
}

/// Simulate `frames` frames and record rank profiles.
///
/// Frame `f` draws everything from stream `f` of `seed`, so results do not
/// depend on the number of threads.
pub fn amp_rank_profiles(setup: &AmpSetup, frames: usize, seed: u64, trace: bool) -> Result<RankProfiles> {
    let AmpSetup { k_a, q, m, p, n, csi, amp } = *setup;
    if n == 0 || frames == 0 {
        return Err(invalid("frames", "need at least one frame and one slot"));
    }
    let params = SystemParams { k_a, q, n, m, p, b: 1, eps: 0.5 };
    let pool = match csi {
        CommaCsi::Perfect => None,
        CommaCsi::Estimated { blocks, pool } => Some(PilotPool::qary(pool, blocks, q, derive_seed(seed, 7))?),
    };
    let per_frame: Vec<(Vec<Vec<u32>>, usize, Vec<TraceRow>)> = (0..frames as u64)
        .into_par_iter()
        .map(|f| {
            let mut rng = stream_rng(seed, f);
            let words: Vec<Vec<usize>> = (0..k_a).map(|_| (0..n).map(|_| rng.random_range(0..q)).collect()).collect();
            let h = draw_channel(m, k_a, &mut rng);
            let h_rx = match &pool {
                None => h.clone(),
                Some(pool) => estimated_channel(&h, pool, p, &mut rng)?,
            };
            let frame = simulate_slots(&params, &words, Some(h), rng.random(), false)?;
            let mut ranks = vec![vec![0u32; n]; k_a];
            let mut diverged = 0;
            let mut rows = Vec::new();
            for (i, slot) in frame.slots.iter().enumerate() {
                let cfg = AmpConfig { trace: trace && f == 0 && i == 0, ..amp };
                let out = amp_detect(&slot.y, &h_rx, p, &cfg)?;
                diverged += usize::from(out.diverged);
                if cfg.trace {
                    rows = out.trace;
                }
                for (k, r) in ranks.iter_mut().enumerate() {
                    let row: Vec<f64> = out.state.x.row(k).iter().copied().collect();
                    let rank = symbol_rank(&row, slot.symbols[k]) as u32;
                    r[i] = if i == 0 { rank } else { rank.max(r[i - 1]) };
                }
            }
            Ok((ranks, diverged, rows))
        })
        .collect::<Result<_>>()?;
    let mut out = RankProfiles { n, max_rank: Vec::with_capacity(frames * k_a), diverged_slots: 0, trace: Vec::new() };
    for (f, (ranks, diverged, rows)) in per_frame.into_iter().enumerate() {
        out.max_rank.extend(ranks);
        out.diverged_slots += diverged;
        if f == 0 {
            out.trace = rows;
        }
    }
    Ok(out)
}

/// Outcome of the matched-filter pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfStats {
    /// Users missing their own symbol in at least one slot.
    pub miss: McEstimate,
    /// Spurious list entries per user and slot, divided by `q - 1`.
    pub p_fa: f64,
    /// Spurious list entries per user and slot.
    pub n_fa: f64,
}

/// Simulate matched-filter detection with `theta_k = alpha sqrt(P) ||h_k||^2`.
pub fn mf_pipeline(k_a: usize, q: usize, m: usize, p: f64, n: usize, alpha: f64, frames: usize, seed: u64) -> Result<MfStats> {
    let params = SystemParams { k_a, q, n, m, p, b: 1, eps: 0.5 };
    let cfg = MfConfig { threshold: MfThreshold::Policy { alpha } };
    cfg.validate()?;
    let per_frame: Vec<(Vec<f64>, usize)> = (0..frames as u64)
        .into_par_iter()
        .map(|f| {
            let mut rng = stream_rng(seed, f);
            let words: Vec<Vec<usize>> = (0..k_a).map(|_| (0..n).map(|_| rng.random_range(0..q)).collect()).collect();
            let frame = simulate_slots(&params, &words, None, rng.random(), false)?;
            let mut missed = vec![0.0; k_a];
            let mut spurious = 0;
            for slot in &frame.slots {
                let lists = mf_lists(&slot.y, &frame.h, p, &cfg)?;
                for (k, list) in lists.iter().enumerate() {
                    let hit = list.iter().any(|c| c.symbol == slot.symbols[k]);
                    if !hit {
                        missed[k] = 1.0;
                    }
                    spurious += list.len() - usize::from(hit);
                }
            }
            Ok((missed, spurious))
        })
        .collect::<Result<_>>()?;
    let flags: Vec<f64> = per_frame.iter().flat_map(|(m, _)| m.iter().copied()).collect();
    let (value, std_err) = mean_and_std_err(&flags);
    let total: usize = per_frame.iter().map(|(_, s)| s).sum();
    let n_fa = total as f64 / (frames * k_a * n) as f64;
    Ok(MfStats {
        miss: McEstimate { value, std_err },
        p_fa: if q > 1 { n_fa / (q - 1) as f64 } else { 0.0 },
        n_fa,
    })
}
