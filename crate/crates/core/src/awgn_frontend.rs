//! Non-fading single-antenna front end (`M = 1`, `h_k = 1`).
//!
//! Each frequency bin is compared with a threshold; bins above it form the
//! active set handed to the A-channel decoder. The model is real-valued:
//! an active bin carries amplitude `sqrt(P)(1 + s)` where `s ~ Bino(K_a-1, 1/q)`
//! counts the other users on the same symbol, plus `N(0, 1)` noise.

use crate::achannel::{bound_from_samples, log_product_samples, AChannelParams, CardinalityLaws, McEstimate};
use crate::error::{invalid, Error, Result};
use crate::math::{binomial_pmf, phi, q_inv};

pub use crate::math::q_function;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    pub theta: f64,
    /// Per-pulse power (linear).
    pub p: f64,
    pub k_a: usize,
    pub q: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontEndRates {
    pub p_fa: f64,
    pub p_md: f64,
}

/// `p_fa = Q(theta)` and `p_md = E_s[Phi(theta - sqrt(P)(1 + s))]`.
pub fn frontend_rates(cfg: &ThresholdConfig) -> Result<FrontEndRates> {
    if !(cfg.p > 0.0) || cfg.k_a == 0 || cfg.q == 0 || cfg.theta.is_nan() {
        return Err(invalid("threshold config", "need P > 0, K_a >= 1, q >= 1"));
    }
    Ok(FrontEndRates {
        p_fa: q_function(cfg.theta),
        p_md: misdetection(cfg.theta, cfg.p, &binomial_pmf(cfg.k_a as u64 - 1, 1.0 / cfg.q as f64)),
    })
}

fn misdetection(theta: f64, p: f64, pmf: &[f64]) -> f64 {
    let amp = p.sqrt();
    pmf.iter()
        .enumerate()
        .map(|(s, w)| w * phi(theta - amp * (1.0 + s as f64)))
        .sum()
}

/// Threshold with misdetection probability `target_pmd`.
///
/// `p_md` is increasing in `theta`; bisection stops when
/// `|p_md - target| <= 1e-12 target` or the bracket is narrower than `1e-12`.
pub fn solve_threshold(target_pmd: f64, p: f64, k_a: usize, q: usize) -> Result<f64> {
    if !(target_pmd > 0.0 && target_pmd < 1.0) {
        return Err(Error::Unreachable {
            target: target_pmd,
            reason: "misdetection target must lie in (0, 1)".into(),
        });
    }
    if !(p > 0.0) || k_a == 0 || q == 0 {
        return Err(invalid("threshold config", "need P > 0, K_a >= 1, q >= 1"));
    }
    let pmf = binomial_pmf(k_a as u64 - 1, 1.0 / q as f64);
    let f = |t: f64| misdetection(t, p, &pmf);
    // p_md(theta) lies between Phi(theta - sqrt(P) K_a) and Phi(theta - sqrt(P))
    let amp = p.sqrt();
    let z = -q_inv(target_pmd);
    let mut lo = z + amp - 1.0;
    let mut hi = z + amp * k_a as f64 + 1.0;
    while f(lo) > target_pmd {
        lo -= 1.0 + lo.abs();
    }
    while f(hi) < target_pmd {
        hi += 1.0 + hi.abs();
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if (v - target_pmd).abs() <= 1e-12 * target_pmd || hi - lo < 1e-12 {
            return Ok(mid);
        }
        if v < target_pmd {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Result of [`theorem2_pupe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnBound {
    pub pupe: f64,
    pub std_err: f64,
    pub rates: FrontEndRates,
    pub achannel: McEstimate,
}

/// `P_e <= n p_md + (1 - n p_md) eps_Ach` with `eps_Ach` evaluated at `p_fa = Q(theta)`.
///
/// `params.p_fa` is ignored and replaced by the threshold's false-alarm rate.
pub fn theorem2_pupe(
    params: &AChannelParams,
    p: f64,
    theta: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<AwgnBound> {
    let rates = frontend_rates(&ThresholdConfig {
        theta,
        p,
        k_a: params.k_a,
        q: params.q,
    })?;
    theorem2_with_rates(params, rates, mc_samples, seed)
}

/// [`theorem2_pupe`] with the front-end rates given directly.
pub fn theorem2_with_rates(
    params: &AChannelParams,
    rates: FrontEndRates,
    mc_samples: usize,
    seed: u64,
) -> Result<AwgnBound> {
    let ach = crate::achannel::theorem1_bound(
        &AChannelParams {
            p_fa: rates.p_fa,
            ..*params
        },
        mc_samples,
        seed,
    )?;
    let miss = (params.n as f64 * rates.p_md).min(1.0);
    Ok(AwgnBound {
        pupe: (miss + (1.0 - miss) * ach.value).min(1.0),
        std_err: (1.0 - miss) * ach.std_err,
        rates,
        achannel: ach,
    })
}

/// Largest payload `B` for which the front-end bound meets `eps` at fixed `P`
/// and threshold, or `None` if no `B` in range does.
///
/// Above the smallest feasible `B` the bound is taken to be increasing in `B`.
///
/// The log-product samples do not depend on `B`, so they are drawn once.
pub fn max_payload(
    params: &AChannelParams,
    rates: FrontEndRates,
    eps: f64,
    b_range: std::ops::RangeInclusive<u32>,
    mc_samples: usize,
    seed: u64,
) -> Result<Option<(u32, f64)>> {
    let laws = CardinalityLaws::new(&AChannelParams {
        p_fa: rates.p_fa,
        ..*params
    })?;
    let samples = log_product_samples(&laws.p_out, params.n, mc_samples, seed);
    let miss = (params.n as f64 * rates.p_md).min(1.0);
    let pupe = |b: u32| miss + (1.0 - miss) * bound_from_samples(params.k_a, b, &samples).value;
    let (lo, hi) = (*b_range.start(), *b_range.end());
    let lo = lo.max((params.k_a as f64).log2().ceil() as u32).max(1);
    // collisions dominate at small B, so the smallest feasible B is found by scanning
    let Some(lo) = (lo..=hi).find(|&b| pupe(b) <= eps) else {
        return Ok(None);
    };
    let (mut good, mut bad) = (lo, hi + 1);
    if pupe(hi) <= eps {
        return Ok(Some((hi, pupe(hi))));
    }
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if pupe(mid) <= eps {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(Some((good, pupe(good))))
}

/// Uniform grid of powers in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerGrid {
    pub min_db: f64,
    pub max_db: f64,
    pub step_db: f64,
}

impl Default for PowerGrid {
    fn default() -> Self {
        PowerGrid {
            min_db: -20.0,
            max_db: 40.0,
            step_db: 0.1,
        }
    }
}

impl PowerGrid {
    pub fn len(&self) -> usize {
        ((self.max_db - self.min_db) / self.step_db + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn db(&self, i: usize) -> f64 {
        self.min_db + i as f64 * self.step_db
    }

    pub fn linear(&self, i: usize) -> f64 {
        10f64.powf(self.db(i) / 10.0)
    }

    /// Smallest grid index where the monotone predicate holds.
    pub fn first_feasible<F>(&self, mut feasible: F) -> Result<Option<usize>>
    where
        F: FnMut(usize) -> Result<bool>,
    {
        let last = self.len() - 1;
        if !feasible(last)? {
            return Ok(None);
        }
        if feasible(0)? {
            return Ok(Some(0));
        }
        let (mut bad, mut good) = (0usize, last);
        while good - bad > 1 {
            let mid = bad + (good - bad) / 2;
            if feasible(mid)? {
                good = mid;
            } else {
                bad = mid;
            }
        }
        Ok(Some(good))
    }
}

/// Minimum-`E_b/N0` operating point of threshold detection plus A-channel coding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EbN0Point {
    pub p: f64,
    pub theta: f64,
    pub bound: AwgnBound,
    pub ebn0_db: f64,
}

/// Smallest grid power for which the bound with `p_md = pmd_budget / n` meets `eps`.
pub fn min_ebn0_threshold(
    params: &AChannelParams,
    pmd_budget: f64,
    eps: f64,
    grid: &PowerGrid,
    mc_samples: usize,
    seed: u64,
) -> Result<Option<EbN0Point>> {
    let target = pmd_budget / params.n as f64;
    let eval = |i: usize| -> Result<(f64, AwgnBound)> {
        let p = grid.linear(i);
        let theta = solve_threshold(target, p, params.k_a, params.q)?;
        Ok((theta, theorem2_pupe(params, p, theta, mc_samples, seed)?))
    };
    let idx = grid.first_feasible(|i| Ok(eval(i)?.1.pupe <= eps))?;
    Ok(match idx {
        None => None,
        Some(i) => {
            let (theta, bound) = eval(i)?;
            let p = grid.linear(i);
            Some(EbN0Point {
                p,
                theta,
                bound,
                ebn0_db: 10.0 * (params.n as f64 * p / params.b as f64).log10(),
            })
        }
    })
}

/// Single-user error probability from the complex-AWGN normal approximation:
/// `eps = Q((n ln(1+P) - B ln 2) / sqrt(n P (2+P) / (1+P)^2))`.
pub fn normal_approx_error(n: usize, p: f64, b: f64) -> f64 {
    let n = n as f64;
    let cap = n * p.ln_1p();
    let disp = n * p * (2.0 + p) / (1.0 + p).powi(2);
    q_function((cap - b * std::f64::consts::LN_2) / disp.sqrt())
}

/// ALOHA operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlohaPoint {
    pub subframes: usize,
    pub subframe_len: usize,
    pub p: f64,
    pub eps_su: f64,
    pub pupe: f64,
    pub ebn0_db: f64,
}

/// Minimum `E_b/N0` of slotted ALOHA over `n_tot` channel uses.
///
/// Users pick one of `L` subframes of length `floor(n_tot / L)` uniformly; a
/// user succeeds if nobody else picked its subframe and its single-user code
/// (normal approximation) decodes. `L` ranges over every value that leaves a
/// nonempty subframe, `P` over the
/// grid; energy is counted over the user's own subframe.
pub fn aloha_ebn0(
    k_a: usize,
    b: u32,
    n_tot: usize,
    eps_target: f64,
    grid: &PowerGrid,
) -> Result<Option<AlohaPoint>> {
    if k_a == 0 || n_tot == 0 || !(eps_target > 0.0 && eps_target < 1.0) {
        return Err(invalid("aloha", "need K_a >= 1, n_tot >= 1, eps in (0, 1)"));
    }
    let mut best: Option<AlohaPoint> = None;
    for l in 1..=n_tot {
        let len = n_tot / l;
        let no_collision = (1.0 - 1.0 / l as f64).powi(k_a as i32 - 1);
        let eval = |i: usize| {
            let p = grid.linear(i);
            let eps_su = normal_approx_error(len, p, b as f64);
            (p, eps_su, 1.0 - no_collision * (1.0 - eps_su))
        };
        // the error is monotone in P on the grid
        let Some(i) = grid.first_feasible(|i| Ok(eval(i).2 <= eps_target))? else {
            continue;
        };
        let (p, eps_su, pupe) = eval(i);
        let ebn0_db = 10.0 * (len as f64 * p / b as f64).log10();
        if best.is_none_or(|bp| ebn0_db < bp.ebn0_db) {
            best = Some(AlohaPoint {
                subframes: l,
                subframe_len: len,
                p,
                eps_su,
                pupe,
                ebn0_db,
            });
        }
    }
    Ok(best)
}
