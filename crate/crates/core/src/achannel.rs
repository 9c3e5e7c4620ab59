//! The noisy unsourced A-channel.
//!
//! Each channel use outputs the *set* of symbols sent by the active users,
//! plus every absent symbol independently with probability `p_fa`. This
//! module evaluates the random-coding achievability bound on the per-user
//! error probability (PUPE) for that channel, and provides a brute-force
//! joint decoder over an enumerable codebook to check the bound against.
//!
//! Symbols are 0-based (`0..q`); cardinalities are 1-based.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::math::{inverse_cdf, ln_binomial, ln_binomial_pow2, ln_factorial, stirling2_log_row};
use crate::ortho_mod::Codebook;
use crate::rng::stream_rng;

/// Largest payload for which [`brute_force_pupe`] enumerates the codebook.
pub const MAX_ENUMERABLE_BITS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AChannelParams {
    pub k_a: usize,
    pub q: usize,
    pub n: usize,
    pub b: u32,
    pub p_fa: f64,
}

impl AChannelParams {
    pub fn new(k_a: usize, q: usize, n: usize, b: u32, p_fa: f64) -> Result<Self> {
        let p = AChannelParams { k_a, q, n, b, p_fa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_a == 0 {
            return Err(invalid("k_a", "must be at least 1"));
        }
        if self.q == 0 {
            return Err(invalid("q", "must be at least 1"));
        }
        if self.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if self.b == 0 {
            return Err(invalid("b", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.p_fa) {
            return Err(invalid("p_fa", format!("{} is not in [0, 1]", self.p_fa)));
        }
        Ok(())
    }

    fn validate_for_bound(&self) -> Result<()> {
        self.validate()?;
        if self.q <= self.k_a {
            return Err(invalid(
                "q",
                format!("bound requires q > K_a (q = {}, K_a = {})", self.q, self.k_a),
            ));
        }
        if self.b < 64 && (1u64 << self.b) < self.k_a as u64 {
            return Err(invalid("b", "2^B must be at least K_a"));
        }
        Ok(())
    }
}

/// Distributions of the input-set and output-set cardinalities.
///
/// `p_in[eta - 1] = P(|union of codeword symbols| = eta)` and
/// `p_out[j - 1] = P(|channel output| = j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CardinalityLaws {
    pub p_in: Vec<f64>,
    pub p_out: Vec<f64>,
}

impl CardinalityLaws {
    pub fn new(params: &AChannelParams) -> Result<Self> {
        let p_in = input_cardinality_law(params)?;
        let p_out = output_cardinality_from(&p_in, params.q, params.p_fa);
        Ok(CardinalityLaws { p_in, p_out })
    }
}

/// `p_in[eta - 1] = q! S(K_a, eta) / ((q - eta)! q^K_a)` for `eta = 1..=min(q, K_a)`.
pub fn input_cardinality_law(params: &AChannelParams) -> Result<Vec<f64>> {
    if params.k_a == 0 || params.q == 0 {
        return Err(invalid("k_a/q", "must be positive"));
    }
    let (k, q) = (params.k_a, params.q);
    let stirling = stirling2_log_row(k);
    let ln_qk = k as f64 * (q as f64).ln();
    let ln_qfact = ln_factorial(q as u64);
    let law: Vec<f64> = (1..=k.min(q))
        .map(|eta| (ln_qfact - ln_factorial((q - eta) as u64) + stirling[eta] - ln_qk).exp())
        .collect();
    Ok(renormalize(law))
}

/// Remove the rounding drift of a law computed term by term in log domain.
fn renormalize(mut law: Vec<f64>) -> Vec<f64> {
    let total: f64 = law.iter().sum();
    if total > 0.0 {
        law.iter_mut().for_each(|p| *p = (*p / total).min(1.0));
    }
    law
}

/// Output-cardinality law with `Z_eta = 1`; see [`output_cardinality_from`].
pub fn output_cardinality_law(params: &AChannelParams) -> Result<Vec<f64>> {
    params.validate()?;
    let p_in = input_cardinality_law(params)?;
    Ok(output_cardinality_from(&p_in, params.q, params.p_fa))
}

/// `p_out[j-1] = sum_eta p_in(eta) C(q-eta, j-eta) p_fa^(j-eta) (1-p_fa)^(q-j)`.
pub fn output_cardinality_from(p_in: &[f64], q: usize, p_fa: f64) -> Vec<f64> {
    let ln_p = p_fa.ln();
    let ln_1mp = (-p_fa).ln_1p();
    let xlogy = |x: usize, ly: f64| if x == 0 { 0.0 } else { x as f64 * ly };
    let law = (1..=q)
        .map(|j| {
            (1..=j.min(p_in.len()))
                .map(|eta| {
                    if p_in[eta - 1] == 0.0 {
                        return 0.0;
                    }
                    let ln_term = p_in[eta - 1].ln()
                        + ln_binomial((q - eta) as u64, (j - eta) as u64)
                        + xlogy(j - eta, ln_p)
                        + xlogy(q - j, ln_1mp);
                    ln_term.exp()
                })
                .sum()
        })
        .collect();
    renormalize(law)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
}

/// Samples of `sum_i ln(|y_i| / q)` over `n` channel uses.
///
/// This is the logarithm of `prod_j (j/q)^{A_j}` with `A ~ Multinomial(n, p_out)`.
/// Sample `s` draws the cardinalities of slots `1, 2, ...` in order from
/// stream `s` by inverse CDF, so the same seed gives common random numbers
/// across `n` and across stochastically ordered `p_out` laws.
pub fn log_product_samples(p_out: &[f64], n: usize, mc_samples: usize, seed: u64) -> Vec<f64> {
    let q = p_out.len();
    let mut cdf = Vec::with_capacity(q);
    let mut acc = 0.0;
    for &p in p_out {
        acc += p;
        cdf.push(acc);
    }
    let ln_ratio: Vec<f64> = (1..=q).map(|j| (j as f64 / q as f64).ln()).collect();
    (0..mc_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, s as u64);
            let mut sum = 0.0;
            for _ in 0..n {
                let u: f64 = rng.random::<f64>() * acc;
                sum += ln_ratio[inverse_cdf(&cdf, u)];
            }
            sum
        })
        .collect()
}

/// Theorem-1 style bound evaluated from pre-drawn log-product samples.
///
/// Returns the expectation terms plus the deterministic collision term
/// `C(K_a, 2) / 2^B`, clamped to `[0, 1]`.
pub fn bound_from_samples(k_a: usize, b: u32, samples: &[f64]) -> McEstimate {
    let coef: Vec<(f64, f64)> = (1..=k_a)
        .map(|l| {
            let weight = if l < k_a {
                l as f64 / (k_a + l) as f64
            } else {
                1.0
            };
            (weight, ln_binomial_pow2(b, k_a as u64, l as u64))
        })
        .collect();
    let per_sample: Vec<f64> = samples
        .iter()
        .map(|&s| {
            coef.iter()
                .enumerate()
                .map(|(i, &(w, ln_c))| {
                    let ln_x = ln_c + (i + 1) as f64 * s;
                    w * ln_x.min(0.0).exp()
                })
                .sum()
        })
        .collect();
    let (mean, std_err) = mean_and_std_err(&per_sample);
    let collision = (ln_binomial(k_a as u64, 2) - b as f64 * std::f64::consts::LN_2).exp();
    McEstimate {
        value: (mean + collision).clamp(0.0, 1.0),
        std_err,
    }
}

pub(crate) fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Achievability bound on the PUPE of the noisy unsourced A-channel.
pub fn theorem1_bound(params: &AChannelParams, mc_samples: usize, seed: u64) -> Result<McEstimate> {
    if mc_samples == 0 {
        return Err(invalid("mc_samples", "must be positive"));
    }
    params.validate_for_bound()?;
    let laws = CardinalityLaws::new(params)?;
    let samples = log_product_samples(&laws.p_out, params.n, mc_samples, seed);
    Ok(bound_from_samples(params.k_a, params.b, &samples))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlocklengthSearch {
    Feasible { n: usize, bound: McEstimate },
    Infeasible,
}

impl BlocklengthSearch {
    pub fn n(&self) -> Option<usize> {
        match self {
            BlocklengthSearch::Feasible { n, .. } => Some(*n),
            BlocklengthSearch::Infeasible => None,
        }
    }
}

/// Smallest `n` in `n_range` whose bound is at most `eps_target`.
///
/// `params.n` is ignored. Bisection relies on the bound being non-increasing
/// in `n`, which holds exactly under common random numbers; the result is
/// re-checked at `n - 1` and `n`.
pub fn min_blocklength_for_rate(
    params: &AChannelParams,
    eps_target: f64,
    n_range: std::ops::RangeInclusive<usize>,
    mc_samples: usize,
    seed: u64,
) -> Result<BlocklengthSearch> {
    let (lo, hi) = (*n_range.start(), *n_range.end());
    if lo == 0 || lo > hi {
        return Err(invalid("n_range", "must be a nonempty range of positive lengths"));
    }
    let eval = |n: usize| theorem1_bound(&AChannelParams { n, ..*params }, mc_samples, seed);
    let feasible = |e: &McEstimate| e.value <= eps_target;
    if !feasible(&eval(hi)?) {
        return Ok(BlocklengthSearch::Infeasible);
    }
    let (mut bad, mut good) = (lo.saturating_sub(1), hi);
    if feasible(&eval(lo)?) {
        good = lo;
    } else {
        bad = lo;
    }
    while good - bad > 1 && good > lo {
        let mid = bad + (good - bad) / 2;
        if feasible(&eval(mid)?) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    let mut n = good;
    while n > lo && feasible(&eval(n - 1)?) {
        n -= 1;
    }
    let bound = eval(n)?;
    debug_assert!(feasible(&bound));
    Ok(BlocklengthSearch::Feasible { n, bound })
}

/// One observation of the A-channel: the (sorted) symbol set of each slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AChannelObservation {
    pub slots: Vec<Vec<usize>>,
}

/// Pass the codewords of `messages` through the noisy A-channel.
pub fn simulate_achannel(
    codebook: &Codebook,
    messages: &[u64],
    p_fa: f64,
    seed: u64,
) -> Result<AChannelObservation> {
    if !(0.0..=1.0).contains(&p_fa) {
        return Err(invalid("p_fa", "must lie in [0, 1]"));
    }
    let words: Vec<Vec<usize>> = messages
        .iter()
        .map(|&m| codebook.codeword(m))
        .collect::<Result<_>>()?;
    let mut rng = stream_rng(seed, 0);
    Ok(observe(&words, codebook.q(), codebook.n(), p_fa, &mut rng))
}

fn observe<R: Rng>(words: &[Vec<usize>], q: usize, n: usize, p_fa: f64, rng: &mut R) -> AChannelObservation {
    let mut active = vec![false; q];
    let slots = (0..n)
        .map(|i| {
            active.iter_mut().for_each(|a| *a = false);
            for w in words {
                active[w[i]] = true;
            }
            (0..q)
                .filter(|&j| active[j] || (p_fa > 0.0 && rng.random::<f64>() < p_fa))
                .collect()
        })
        .collect();
    AChannelObservation { slots }
}

/// Empirical PUPE of a joint decoder over an enumerable codebook.
///
/// Each trial draws `K_a` i.i.d. uniform messages, passes them through the
/// channel, and decodes the `K_a` codewords with the most slots consistent
/// with the observation (a codeword symbol is consistent if it appears in the
/// slot's set), ties going to the lower message index. A user errs if its
/// message is not in the decoded list or collides with another user's.
pub fn brute_force_pupe(
    codebook: &Codebook,
    params: &AChannelParams,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    params.validate()?;
    if codebook.bits() > MAX_ENUMERABLE_BITS {
        return Err(Error::CodebookTooLarge {
            bits: codebook.bits(),
            limit: MAX_ENUMERABLE_BITS,
        });
    }
    if codebook.q() != params.q || codebook.n() != params.n || codebook.bits() != params.b {
        return Err(invalid("codebook", "dimensions disagree with params"));
    }
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    let table = codebook.materialize()?;
    let size = table.len();
    let k = params.k_a;
    let per_trial: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let msgs: Vec<usize> = (0..k).map(|_| rng.random_range(0..size)).collect();
            let words: Vec<Vec<usize>> = msgs.iter().map(|&m| table[m].clone()).collect();
            let obs = observe(&words, params.q, params.n, params.p_fa, &mut rng);
            let mut member = vec![vec![false; params.q]; params.n];
            for (i, slot) in obs.slots.iter().enumerate() {
                for &s in slot {
                    member[i][s] = true;
                }
            }
            let mut scored: Vec<(usize, usize)> = table
                .iter()
                .enumerate()
                .map(|(m, w)| {
                    let score = w.iter().enumerate().filter(|&(i, &s)| member[i][s]).count();
                    (m, score)
                })
                .collect();
            scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let decoded: Vec<usize> = scored.iter().take(k).map(|&(m, _)| m).collect();
            let errors = (0..k)
                .filter(|&u| {
                    let collided = (0..k).any(|v| v != u && msgs[v] == msgs[u]);
                    collided || !decoded.contains(&msgs[u])
                })
                .count();
            errors as f64 / k as f64
        })
        .collect();
    let (value, std_err) = mean_and_std_err(&per_trial);
    Ok(McEstimate { value, std_err })
}
