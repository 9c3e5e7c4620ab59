//! Damped MMV-AMP detection of the per-slot model `Y = sqrt(P) H X + Z`.
//!
//! The receiver knows `H` (or an estimate of it). AMP iterates on the
//! normalized system `Y / sqrt(M) = (H / sqrt(M)) (sqrt(P) X) + Z / sqrt(M)`,
//! whose channel columns have unit expected norm; this is the scaling under
//! which the Onsager coefficient `K_a / M` is the usual undersampling ratio.
//!
//! Each row of the estimate is the posterior mean of `sqrt(P) e` in the
//! decoupled model `r = sqrt(P) e + z`, `z ~ CN(0, diag(tau))`, where `e` is a
//! uniformly random unit vector. That posterior is a softmax:
//!
//! ```text
//! eta(r)_a = sqrt(P) softmax_a((2 sqrt(P) Re r_a - P) / tau_a)
//! ```

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::achannel::{theorem1_bound, AChannelParams, McEstimate};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpConfig {
    pub max_iters: usize,
    /// Damping factor in `(0, 1]`; 1 disables damping.
    pub damping: f64,
    /// Stopping tolerance on `||X^{t+1} - X^t||_F`; `None` uses
    /// `1e-8 sqrt(K_a q P)`.
    pub tol: Option<f64>,
    pub tau_floor: f64,
    /// Record a per-iteration trace.
    pub trace: bool,
}

impl Default for AmpConfig {
    fn default() -> Self {
        AmpConfig {
            max_iters: 50,
            damping: 0.7,
            tol: None,
            tau_floor: 1e-12,
            trace: false,
        }
    }
}

impl AmpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid("damping", format!("{} is not in (0, 1]", self.damping)));
        }
        if self.tol.is_some_and(|t| !(t > 0.0)) {
            return Err(invalid("tol", "must be positive"));
        }
        if !(self.tau_floor > 0.0) {
            return Err(invalid("tau_floor", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be positive"));
        }
        Ok(())
    }
}

fn check_tau(tau: &[f64]) -> Result<()> {
    if tau.iter().any(|&t| !(t > 0.0)) {
        return Err(invalid("tau", "all noise variances must be positive"));
    }
    Ok(())
}

/// Posterior mean of `sqrt(P) e` given `r`; see the module docs.
pub fn denoiser(r: &[Complex64], tau: &[f64], p: f64) -> Result<Vec<f64>> {
    if r.len() != tau.len() || r.is_empty() {
        return Err(invalid("r", "r and tau must have the same nonzero length"));
    }
    check_tau(tau)?;
    let mut out = vec![0.0; r.len()];
    denoise_into(r.iter().copied(), tau, p, &mut out);
    Ok(out)
}

fn denoise_into<I: Iterator<Item = Complex64>>(r: I, tau: &[f64], p: f64, out: &mut [f64]) {
    let amp = p.sqrt();
    let mut max = f64::NEG_INFINITY;
    for ((o, x), &t) in out.iter_mut().zip(r).zip(tau) {
        *o = (2.0 * amp * x.re - p) / t;
        max = max.max(*o);
    }
    let mut sum = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        sum += *o;
    }
    let scale = amp / sum;
    out.iter_mut().for_each(|o| *o *= scale);
}

/// Jacobian of [`denoiser`] with respect to `Re r`.
///
/// Entry `(a, b)` is `d eta_b / d Re r_a = (2 / tau_a) eta_a (sqrt(P) delta_ab - eta_b)`.
/// The outputs always sum to `sqrt(P)`, so every row sums to zero.
pub fn denoiser_jacobian(r: &[Complex64], tau: &[f64], p: f64) -> Result<DMatrix<f64>> {
    let eta = denoiser(r, tau, p)?;
    Ok(jacobian_from_output(&eta, tau, p))
}

fn jacobian_from_output(eta: &[f64], tau: &[f64], p: f64) -> DMatrix<f64> {
    let q = eta.len();
    let amp = p.sqrt();
    DMatrix::from_fn(q, q, |a, b| {
        let diag = if a == b { amp } else { 0.0 };
        2.0 / tau[a] * eta[a] * (diag - eta[b])
    })
}

/// AMP state after a detection run.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    /// `K_a x q` scaled posteriors; every row sums to `sqrt(P)`.
    pub x: DMatrix<f64>,
    /// `M x q` residual of the normalized system.
    pub z: DMatrix<Complex64>,
    pub tau: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub z_norm: f64,
    pub mean_tau: f64,
    pub top_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpOutcome {
    pub state: AmpState,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub trace: Vec<TraceRow>,
}

/// Write an AMP trace as CSV: `iter,z_norm,mean_tau,top_0,...,top_{K-1}`.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &[TraceRow]) -> Result<()> {
    let k = trace.first().map_or(0, |t| t.top_scores.len());
    let mut header = String::from("iter,z_norm,mean_tau");
    for u in 0..k {
        header.push_str(&format!(",top_{u}"));
    }
    writeln!(w, "{header}")?;
    for row in trace {
        let mut line = format!("{},{:.16e},{:.16e}", row.iter, row.z_norm, row.mean_tau);
        for s in &row.top_scores {
            line.push_str(&format!(",{s:.16e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Run damped MMV-AMP on one slot.
///
/// `y` is `M x q`, `h` is `M x K_a` (true channel or estimate). Iteration `t`:
///
/// 1. `tau_j = ||Z_{:,j}||^2 / M`
/// 2. `X~ = eta(A^H Z + X, tau)` row by row, `A = H / sqrt(M)`
/// 3. `X = gamma X~ + (1 - gamma) X~_prev`
/// 4. `Z = Y / sqrt(M) - A X + (K_a / M) Z <eta'> / 2`
///
/// `<eta'>` is the user-averaged Jacobian. The factor 1/2 turns the
/// derivative with respect to `Re r` into the complex (Wirtinger) divergence.
pub fn amp_detect(y: &DMatrix<Complex64>, h: &DMatrix<Complex64>, p: f64, cfg: &AmpConfig) -> Result<AmpOutcome> {
    cfg.validate()?;
    let (m, q) = (y.nrows(), y.ncols());
    let k = h.ncols();
    if h.nrows() != m || k == 0 || q == 0 || m == 0 {
        return Err(invalid("h", "must be M x K_a with the same M as y"));
    }
    if !(p > 0.0) {
        return Err(invalid("p", "power must be positive"));
    }
    let scale = Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
    let a = h * scale;
    let a_adj = a.adjoint();
    let y = y * scale;
    let onsager = k as f64 / m as f64;
    let tol = cfg.tol.unwrap_or(1e-8 * ((k * q) as f64 * p).sqrt());
    let amp = p.sqrt();

    let mut x = DMatrix::<f64>::zeros(k, q);
    let mut x_tilde_prev = DMatrix::<f64>::zeros(k, q);
    let mut x_tilde = DMatrix::<f64>::zeros(k, q);
    let mut z = y.clone();
    let z0_norm = z.norm();
    let mut tau = vec![0.0; q];
    let mut row = vec![0.0; q];
    let mut trace = Vec::new();
    let (mut converged, mut diverged) = (false, false);
    let mut iterations = 0;

    for t in 0..cfg.max_iters {
        iterations = t + 1;
        for (j, tj) in tau.iter_mut().enumerate() {
            *tj = (z.column(j).norm_squared() / m as f64).max(cfg.tau_floor);
        }
        let r = &a_adj * &z + x.map(|v| Complex64::new(v, 0.0));
        for u in 0..k {
            denoise_into(r.row(u).iter().copied(), &tau, p, &mut row);
            for (j, v) in row.iter().enumerate() {
                x_tilde[(u, j)] = *v;
            }
        }
        // <eta'>_{ab} = (2 / tau_a) (sqrt(P) delta_ab m_a - (X~^T X~)_{ab} / K_a), m = column means;
        // Z <eta'> is formed as Zw (sqrt(P) diag(m)) - (Zw X~^T) X~ / K_a with Zw = Z diag(2 / tau)
        let mut zw = z.clone();
        for (aidx, mut col) in zw.column_iter_mut().enumerate() {
            col *= Complex64::new(2.0 / tau[aidx], 0.0);
        }
        let xc = x_tilde.map(|v| Complex64::new(v, 0.0));
        let mut correction = (&zw * xc.transpose()) * &xc * Complex64::new(-1.0 / k as f64, 0.0);
        for aidx in 0..q {
            let mean = x_tilde.column(aidx).sum() / k as f64;
            let d = Complex64::new(amp * mean, 0.0);
            for r in 0..m {
                correction[(r, aidx)] += zw[(r, aidx)] * d;
            }
        }
        correction *= Complex64::new(0.5 * onsager, 0.0);
        let x_next = if cfg.damping == 1.0 {
            x_tilde.clone()
        } else {
            &x_tilde * cfg.damping + &x_tilde_prev * (1.0 - cfg.damping)
        };
        z = &y - &a * x_next.map(|v| Complex64::new(v, 0.0)) + correction;
        let delta = (&x_next - &x).norm();
        x = x_next;
        std::mem::swap(&mut x_tilde_prev, &mut x_tilde);

        let z_norm = z.norm();
        if cfg.trace {
            trace.push(TraceRow {
                iter: iterations,
                z_norm,
                mean_tau: tau.iter().sum::<f64>() / q as f64,
                top_scores: (0..k).map(|u| x_tilde_prev.row(u).max()).collect(),
            });
        }
        if !z_norm.is_finite() || z_norm > 1e3 * z0_norm {
            diverged = true;
            break;
        }
        if delta < tol {
            converged = true;
            break;
        }
    }
    Ok(AmpOutcome {
        state: AmpState {
            x: x_tilde_prev,
            z,
            tau,
        },
        iterations,
        converged,
        diverged,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub symbol: usize,
    pub score: f64,
}

/// The `1 + n_fa` highest-posterior symbols of every user, ties to the lower index.
pub fn top_candidates(state: &AmpState, n_fa: usize) -> Result<Vec<Vec<Candidate>>> {
    let q = state.x.ncols();
    if n_fa + 1 > q {
        return Err(invalid("n_fa", format!("1 + N_fa = {} exceeds q = {q}", n_fa + 1)));
    }
    Ok((0..state.x.nrows())
        .map(|u| {
            let row: Vec<f64> = state.x.row(u).iter().copied().collect();
            let mut idx: Vec<usize> = (0..q).collect();
            idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            idx.into_iter()
                .take(n_fa + 1)
                .map(|symbol| Candidate {
                    symbol,
                    score: row[symbol],
                })
                .collect()
        })
        .collect())
}

/// 0-based position of `symbol` in the candidate ordering of `row`.
///
/// `symbol` is in the top `1 + n_fa` list exactly when the rank is `<= n_fa`.
pub fn symbol_rank(row: &[f64], symbol: usize) -> usize {
    let v = row[symbol];
    row.iter()
        .enumerate()
        .filter(|&(j, &x)| x > v || (x == v && j < symbol))
        .count()
}

/// Per-user candidate lists over a frame, indexed `[user][slot]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLists {
    pub per_user: Vec<Vec<Vec<Candidate>>>,
}

impl CandidateLists {
    /// Collect per-slot outputs of [`top_candidates`].
    pub fn from_slots(slots: Vec<Vec<Vec<Candidate>>>) -> Self {
        let k = slots.first().map_or(0, |s| s.len());
        let mut per_user = vec![Vec::with_capacity(slots.len()); k];
        for slot in slots {
            for (u, list) in slot.into_iter().enumerate() {
                per_user[u].push(list);
            }
        }
        CandidateLists { per_user }
    }

    pub fn contains(&self, user: usize, slot: usize, symbol: usize) -> bool {
        self.per_user[user][slot].iter().any(|c| c.symbol == symbol)
    }

    /// Whether every symbol of `codeword` appears in `user`'s lists.
    pub fn covers(&self, user: usize, codeword: &[usize]) -> bool {
        codeword.iter().enumerate().all(|(i, &s)| self.contains(user, i, s))
    }
}

/// Pick the outer-list codeword with the largest summed posterior
/// `sum_i X_{k, c_i}`; ties go to the lexicographically smallest codeword.
///
/// `posteriors[i]` is user `k`'s posterior row in slot `i`.
pub fn disambiguate(posteriors: &[Vec<f64>], outer_list: &[Vec<usize>]) -> Result<Vec<usize>> {
    let score = |c: &Vec<usize>| -> f64 { c.iter().enumerate().map(|(i, &s)| posteriors[i][s]).sum() };
    outer_list
        .iter()
        .map(|c| (score(c), c))
        .max_by(|(sa, ca), (sb, cb)| sa.total_cmp(sb).then_with(|| cb.cmp(ca)))
        .map(|(_, c)| c.clone())
        .ok_or(Error::EmptyList)
}

/// Outer list of an enumerable codebook: every message whose codeword is
/// covered by `user`'s candidate lists.
pub fn outer_list_decode(table: &[Vec<usize>], lists: &CandidateLists, user: usize) -> Vec<usize> {
    (0..table.len()).filter(|&m| lists.covers(user, &table[m])).collect()
}

/// Genie outer decoding certified by the A-channel bound.
#[derive(Debug, Clone, PartialEq)]
pub struct GenieOutcome {
    /// User `k` succeeds iff all of its symbols are in its lists and the code exists.
    pub success: Vec<bool>,
    /// All `n` true symbols were listed.
    pub covered: Vec<bool>,
    pub code_bound: McEstimate,
    pub code_feasible: bool,
}

/// Replace an explicit outer decoder by a rate certificate.
///
/// A single-user A-channel code sees `N_fa` spurious symbols per slot, i.e.
/// a false-alarm rate of `N_fa / (q - 1)`. The code exists when the bound at
/// that rate is at most `eps_code`.
#[allow(clippy::too_many_arguments)]
pub fn genie_outer_decode(
    lists: &CandidateLists,
    codewords: &[Vec<usize>],
    q: usize,
    n_fa: usize,
    b: u32,
    eps_code: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<GenieOutcome> {
    let n = codewords.first().map_or(0, |c| c.len());
    let covered: Vec<bool> = codewords.iter().enumerate().map(|(u, c)| lists.covers(u, c)).collect();
    let code_bound = single_user_code_bound(q, n, b, n_fa, mc_samples, seed)?;
    let code_feasible = code_bound.value <= eps_code;
    Ok(GenieOutcome {
        success: covered.iter().map(|&c| c && code_feasible).collect(),
        covered,
        code_bound,
        code_feasible,
    })
}

/// A-channel bound for one user whose detector lists `N_fa` extra symbols per slot.
pub fn single_user_code_bound(q: usize, n: usize, b: u32, n_fa: usize, mc_samples: usize, seed: u64) -> Result<McEstimate> {
    if q < 2 {
        return Err(invalid("q", "need q >= 2"));
    }
    let p_fa = n_fa as f64 / (q - 1) as f64;
    theorem1_bound(&AChannelParams::new(1, q, n, b, p_fa)?, mc_samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ortho_mod::{simulate_slots, SystemParams};
    use crate::rng::{complex_normal, stream_rng};
    use rand::Rng;

    fn random_input(seed: u64, q: usize) -> (Vec<Complex64>, Vec<f64>, f64) {
        let mut rng = stream_rng(seed, 0);
        let p = 0.1 + 3.0 * rng.random::<f64>();
        let r = (0..q).map(|_| complex_normal(&mut rng) * 1.5).collect();
        let tau = (0..q).map(|_| 0.2 + 2.0 * rng.random::<f64>()).collect();
        (r, tau, p)
    }

    #[test]
    fn uniform_input_gives_uniform_output() {
        let r = vec![Complex64::new(0.3, -1.0); 8];
        let out = denoiser(&r, &[0.5; 8], 2.0).unwrap();
        for v in out {
            assert!((v - 2f64.sqrt() / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn vanishing_noise_recovers_symbol() {
        let p = 1.7f64;
        let mut r = vec![Complex64::new(0.0, 0.0); 5];
        r[0] = Complex64::new(p.sqrt(), 0.0);
        let out = denoiser(&r, &[1e-6; 5], p).unwrap();
        assert!((out[0] - p.sqrt()).abs() < 1e-12);
        assert!(out[1..].iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn denoiser_rejects_nonpositive_tau() {
        let r = vec![Complex64::new(0.0, 0.0); 2];
        assert!(denoiser(&r, &[1.0, 0.0], 1.0).is_err());
        assert!(denoiser_jacobian(&r, &[-1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn jacobian_uniform_pattern() {
        let (q, tau, p) = (4usize, 0.8f64, 2.0f64);
        let r = vec![Complex64::new(0.1, 0.0); q];
        let j = denoiser_jacobian(&r, &vec![tau; q], p).unwrap();
        let amp = p.sqrt();
        for a in 0..q {
            for b in 0..q {
                let d = if a == b { amp } else { 0.0 };
                let expect = 2.0 * amp / (tau * q as f64) * (d - amp / q as f64);
                assert!((j[(a, b)] - expect).abs() < 1e-14);
            }
            assert!(j.row(a).sum().abs() < 1e-14);
        }
    }

    #[test]
    fn jacobian_saturates() {
        let p = 1.0;
        let r: Vec<Complex64> = (0..4).map(|a| Complex64::new(a as f64, 0.0)).collect();
        let j = denoiser_jacobian(&r, &[1e-4; 4], p).unwrap();
        assert!(j.amax() < 1e-100);
    }

    #[test]
    fn jacobian_rows_sum_to_zero() {
        for s in 0..50 {
            let (r, tau, p) = random_input(s, 7);
            let j = denoiser_jacobian(&r, &tau, p).unwrap();
            for a in 0..7 {
                assert!(j.row(a).sum().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn top_candidates_rules() {
        let x = DMatrix::from_row_slice(2, 4, &[0.1, 0.5, 0.5, 0.2, 0.9, 0.0, 0.05, 0.05]);
        let state = AmpState { x, z: DMatrix::zeros(1, 4), tau: vec![1.0; 4] };
        let lists = top_candidates(&state, 1).unwrap();
        assert_eq!(lists[0].iter().map(|c| c.symbol).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(lists[1].iter().map(|c| c.symbol).collect::<Vec<_>>(), vec![0, 2]);
        let all = top_candidates(&state, 3).unwrap();
        assert!(all.iter().all(|l| l.len() == 4));
        assert!(all.iter().all(|l| l.windows(2).all(|w| w[0].score >= w[1].score)));
        assert!(top_candidates(&state, 4).is_err());
        let row = [0.1, 0.5, 0.5, 0.2];
        assert_eq!(symbol_rank(&row, 1), 0);
        assert_eq!(symbol_rank(&row, 2), 1);
        assert_eq!(symbol_rank(&row, 0), 3);
    }

    #[test]
    fn disambiguate_rules() {
        let post = vec![vec![0.1, 0.9], vec![0.6, 0.4]];
        assert_eq!(disambiguate(&post, &[vec![0, 0]]).unwrap(), vec![0, 0]);
        assert_eq!(disambiguate(&post, &[vec![0, 0], vec![1, 0], vec![1, 1]]).unwrap(), vec![1, 0]);
        // tie: [0,1] and [1,0] both score 1.0 under these posteriors
        let tie = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert_eq!(disambiguate(&tie, &[vec![1, 0], vec![0, 1]]).unwrap(), vec![0, 1]);
        assert_eq!(disambiguate(&post, &[]), Err(Error::EmptyList));
    }

    #[test]
    fn disambiguate_matches_brute_force_scores() {
        let mut rng = stream_rng(8, 0);
        for _ in 0..200 {
            let (n, q) = (6, 5);
            let post: Vec<Vec<f64>> = (0..n).map(|_| (0..q).map(|_| rng.random::<f64>()).collect()).collect();
            let list: Vec<Vec<usize>> = (0..4).map(|_| (0..n).map(|_| rng.random_range(0..q)).collect()).collect();
            let got = disambiguate(&post, &list).unwrap();
            let best = list
                .iter()
                .map(|c| c.iter().enumerate().map(|(i, &s)| post[i][s]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            let got_score: f64 = got.iter().enumerate().map(|(i, &s)| post[i][s]).sum();
            assert_eq!(got_score, best);
        }
    }

    #[test]
    fn noiseless_single_user_converges_fast() {
        let params = SystemParams { k_a: 1, q: 16, n: 3, m: 4, p: 1.0, b: 8, eps: 0.05 };
        let frame = simulate_slots(&params, &[vec![3, 9, 15]], None, 2, true).unwrap();
        for slot in &frame.slots {
            let out = amp_detect(&slot.y, &frame.h, 1.0, &AmpConfig { damping: 1.0, ..Default::default() }).unwrap();
            let row: Vec<f64> = out.state.x.row(0).iter().copied().collect();
            assert_eq!(symbol_rank(&row, slot.symbols[0]), 0);
            assert!((row[slot.symbols[0]] - 1.0).abs() < 1e-6);
            assert!(out.iterations <= 5, "{} iterations", out.iterations);
        }
    }

    #[test]
    fn posterior_rows_are_probability_vectors() {
        let params = SystemParams { k_a: 12, q: 16, n: 2, m: 8, p: 0.8, b: 8, eps: 0.05 };
        let mut rng = stream_rng(4, 0);
        let words: Vec<Vec<usize>> = (0..12).map(|_| (0..2).map(|_| rng.random_range(0..16)).collect()).collect();
        let frame = simulate_slots(&params, &words, None, 3, false).unwrap();
        let out = amp_detect(&frame.slots[0].y, &frame.h, 0.8, &AmpConfig::default()).unwrap();
        for u in 0..12 {
            let row = out.state.x.row(u);
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!((row.sum() - 0.8f64.sqrt()).abs() < 1e-9);
        }
        assert!(out.state.tau.iter().all(|&t| t >= 1e-12));
    }

    #[test]
    fn damping_of_one_is_plain_amp() {
        // undamped reference recursion, written out directly
        fn reference(y: &DMatrix<Complex64>, h: &DMatrix<Complex64>, p: f64, iters: usize) -> DMatrix<f64> {
            let (m, q, k) = (y.nrows(), y.ncols(), h.ncols());
            let s = Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
            let a = h * s;
            let y = y * s;
            let mut x = DMatrix::<f64>::zeros(k, q);
            let mut z = y.clone();
            for _ in 0..iters {
                let tau: Vec<f64> = (0..q).map(|j| (z.column(j).norm_squared() / m as f64).max(1e-12)).collect();
                let r = a.adjoint() * &z + x.map(|v| Complex64::new(v, 0.0));
                let mut xn = DMatrix::<f64>::zeros(k, q);
                let mut jbar = DMatrix::<f64>::zeros(q, q);
                for u in 0..k {
                    let row: Vec<Complex64> = r.row(u).iter().copied().collect();
                    let eta = denoiser(&row, &tau, p).unwrap();
                    jbar += jacobian_from_output(&eta, &tau, p);
                    for j in 0..q {
                        xn[(u, j)] = eta[j];
                    }
                }
                jbar /= k as f64;
                let corr = &z * jbar.map(|v| Complex64::new(0.5 * k as f64 / m as f64 * v, 0.0));
                z = &y - &a * xn.map(|v| Complex64::new(v, 0.0)) + corr;
                x = xn;
            }
            x
        }
        let params = SystemParams { k_a: 6, q: 8, n: 1, m: 32, p: 1.0, b: 8, eps: 0.05 };
        let words: Vec<Vec<usize>> = (0..6).map(|k| vec![k % 8]).collect();
        let frame = simulate_slots(&params, &words, None, 6, false).unwrap();
        let cfg = AmpConfig { damping: 1.0, max_iters: 6, tol: Some(1e-300), ..Default::default() };
        let out = amp_detect(&frame.slots[0].y, &frame.h, 1.0, &cfg).unwrap();
        let refx = reference(&frame.slots[0].y, &frame.h, 1.0, out.iterations);
        let diff = (&out.state.x - &refx).amax();
        assert!(diff < 1e-12, "max diff {diff}");
    }

    #[test]
    fn trace_is_recorded() {
        let params = SystemParams { k_a: 2, q: 4, n: 1, m: 4, p: 1.0, b: 8, eps: 0.05 };
        let frame = simulate_slots(&params, &[vec![0], vec![1]], None, 1, false).unwrap();
        let cfg = AmpConfig { trace: true, ..Default::default() };
        let out = amp_detect(&frame.slots[0].y, &frame.h, 1.0, &cfg).unwrap();
        assert_eq!(out.trace.len(), out.iterations);
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &out.trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,z_norm,mean_tau,top_0,top_1\n"));
        assert_eq!(text.lines().count(), out.iterations + 1);
    }

    #[test]
    fn genie_requires_full_coverage() {
        let cand = |s: usize| vec![Candidate { symbol: s, score: 1.0 }];
        let lists = CandidateLists::from_slots(vec![vec![cand(1)], vec![cand(2)], vec![cand(0)]]);
        let ok = genie_outer_decode(&lists, &[vec![1, 2, 0]], 8, 0, 3, 0.05, 200, 1).unwrap();
        assert!(ok.code_feasible && ok.success[0]);
        let miss = genie_outer_decode(&lists, &[vec![1, 2, 3]], 8, 0, 3, 0.05, 200, 1).unwrap();
        assert!(!miss.success[0] && !miss.covered[0]);
    }

    #[test]
    fn bad_config_is_rejected() {
        let y = DMatrix::<Complex64>::zeros(2, 2);
        let h = DMatrix::<Complex64>::zeros(2, 1);
        let cfg = AmpConfig { damping: 1.5, ..Default::default() };
        assert!(amp_detect(&y, &h, 1.0, &cfg).is_err());
        let cfg = AmpConfig { damping: 0.0, ..Default::default() };
        assert!(amp_detect(&y, &h, 1.0, &cfg).is_err());
    }
}
