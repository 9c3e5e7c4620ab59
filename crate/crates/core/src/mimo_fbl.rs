//! Gaussian-signaling baseline: pilot-based MMSE estimation, MMSE combining
//! and the random-coding union bound with parameter `s` (RCUS) for scaled
//! nearest-neighbor decoding.
//!
//! The bound is evaluated for user 0 by direct Monte Carlo of
//! `P[sum_i i_s(q[i], v[i]) <= ln((2^B - 1) / U)]`. After combining,
//! `v[i] = g q[i] + w[i]` where, given the channels, `w[i]` is
//! `CN(0, P sum_{k != 0} |u^H h_k|^2 + ||u||^2)` because the interfering
//! symbols and the noise are Gaussian. The sum of information densities only
//! depends on `sum |v - g_hat q|^2` and `sum |v|^2`, so one trial serves
//! every `s` on the grid.

use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::achannel::{mean_and_std_err, McEstimate};
use crate::error::{invalid, Error, Result};
use crate::math::q_function;
use crate::ortho_mod::{mmse_estimate, pilot_observation, ChannelEstimate, PilotPool};
use crate::rng::{complex_normal, derive_seed, stream_rng};

/// How the receiver learns the channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    /// Channels known exactly; `n_p` symbols are still spent if nonzero.
    Perfect,
    /// MMSE estimation from random-phase pilots drawn from a shared pool.
    Estimated { pool_size: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FblConfig {
    /// Total symbols per packet.
    pub n: usize,
    /// Pilot symbols at the start of the packet.
    pub n_p: usize,
    pub b: u32,
    pub k_a: usize,
    pub m: usize,
    /// Per-symbol transmit power.
    pub p: f64,
    /// `s` values in units of the inverse effective noise variance.
    pub s_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub csi: CsiMode,
    /// Rayleigh fading; otherwise every channel is the all-ones vector.
    pub fading: bool,
}

/// 20 log-spaced points in `[0.01, 10]`.
pub fn default_s_grid() -> Vec<f64> {
    (0..20).map(|i| 10f64.powf(-2.0 + 3.0 * i as f64 / 19.0)).collect()
}

impl FblConfig {
    pub fn new(n: usize, b: u32, k_a: usize, m: usize, p: f64) -> Self {
        FblConfig {
            n,
            n_p: 0,
            b,
            k_a,
            m,
            p,
            s_grid: default_s_grid(),
            trials: 10_000,
            seed: 0,
            csi: CsiMode::Perfect,
            fading: true,
        }
    }

    pub fn n_d(&self) -> usize {
        self.n.saturating_sub(self.n_p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_p >= self.n {
            return Err(invalid("n_p", format!("need n_p < n, got n_p = {}, n = {}", self.n_p, self.n)));
        }
        if let CsiMode::Estimated { pool_size } = self.csi {
            if self.n_p == 0 || pool_size == 0 {
                return Err(invalid("n_p", "estimated CSI needs pilots and a nonempty pool"));
            }
        }
        if self.s_grid.is_empty() || self.s_grid.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(invalid("s_grid", "must be a nonempty list of positive values"));
        }
        if self.k_a == 0 || self.m == 0 || self.trials == 0 {
            return Err(invalid("fbl config", "need K_a, M, trials >= 1"));
        }
        if !(self.p > 0.0) {
            return Err(invalid("p", "power must be positive"));
        }
        Ok(())
    }
}

/// Combiner of one user and the resulting effective channels.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerOutput {
    pub u: DVector<Complex64>,
    /// `u^H h_k`
    pub g: Complex64,
    /// `u^H h_hat_k`
    pub g_hat: Complex64,
}

impl CombinerOutput {
    pub fn new(u: DVector<Complex64>, h: &DVector<Complex64>, h_hat: &DVector<Complex64>) -> Self {
        let g = u.dotc(h);
        let g_hat = u.dotc(h_hat);
        CombinerOutput { u, g, g_hat }
    }
}

/// MMSE combiners of all users, as the columns of an `M x K_a` matrix.
///
/// `u_k = (sum_k h_hat_k h_hat_k^H + sum_k Phi_k + I / P)^{-1} h_hat_k`, where
/// `Phi_k = error_var[k] I` is the estimation-error covariance (zero with
/// perfect CSI).
pub fn mmse_combiner(h_hat: &DMatrix<Complex64>, error_var: &[f64], p: f64) -> Result<DMatrix<Complex64>> {
    if error_var.len() != h_hat.ncols() {
        return Err(invalid("error_var", "one variance per user is required"));
    }
    if !(p > 0.0) {
        return Err(invalid("p", "power must be positive"));
    }
    let m = h_hat.nrows();
    let reg = error_var.iter().sum::<f64>() + 1.0 / p;
    let a = h_hat * h_hat.adjoint() + DMatrix::<Complex64>::identity(m, m) * Complex64::new(reg, 0.0);
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("combiner system is not positive definite".into()))?;
    let u = chol.solve(h_hat);
    let residual = (&a * &u - h_hat).norm();
    if !(residual <= 1e-10 * h_hat.norm().max(f64::MIN_POSITIVE)) {
        return Err(Error::Domain(format!("combiner solve residual {residual:e} too large")));
    }
    Ok(u)
}

/// `i_s = -s |v - g_hat q|^2 + s |v|^2 / (1 + s P |g_hat|^2) + ln(1 + s P |g_hat|^2)`.
pub fn information_density(q_sym: Complex64, v: Complex64, g_hat: Complex64, s: f64, p: f64) -> f64 {
    let a = 1.0 + s * p * g_hat.norm_sqr();
    -s * (v - g_hat * q_sym).norm_sqr() + s * v.norm_sqr() / a + a.ln()
}

/// Sufficient statistics of one trial.
#[derive(Debug, Clone, Copy)]
struct TrialStats {
    /// `sum |v - g_hat q|^2`
    dist: f64,
    /// `sum |v|^2`
    energy: f64,
    /// `ln((2^B - 1) / U)`
    threshold: f64,
    g_hat_sq: f64,
    /// Receiver-side noise-plus-interference estimate used to scale `s`.
    noise_hat: f64,
}

impl TrialStats {
    fn density_sum(&self, s_rel: f64, p: f64, n_d: usize) -> f64 {
        let s = s_rel / self.noise_hat;
        let a = 1.0 + s * p * self.g_hat_sq;
        -s * self.dist + s * self.energy / a + n_d as f64 * a.ln()
    }

    fn error(&self, s_rel: f64, p: f64, n_d: usize) -> bool {
        self.density_sum(s_rel, p, n_d) <= self.threshold
    }
}

fn ln_codebook_minus_one(b: u32) -> f64 {
    // ln(2^B - 1) = B ln 2 + ln(1 - 2^{-B})
    b as f64 * std::f64::consts::LN_2 + (-(-(b as f64) * std::f64::consts::LN_2).exp()).ln_1p()
}

fn draw_channels(cfg: &FblConfig, trial: u64) -> DMatrix<Complex64> {
    if !cfg.fading {
        return DMatrix::from_element(cfg.m, cfg.k_a, Complex64::new(1.0, 0.0));
    }
    // user by user, so user 0's channel does not depend on K_a
    let mut rng = stream_rng(derive_seed(cfg.seed, 1), trial);
    let mut h = DMatrix::zeros(cfg.m, cfg.k_a);
    for k in 0..cfg.k_a {
        for r in 0..cfg.m {
            h[(r, k)] = complex_normal(&mut rng);
        }
    }
    h
}

fn run_trial(cfg: &FblConfig, pool: Option<&PilotPool>, trial: u64) -> Result<TrialStats> {
    let h = draw_channels(cfg, trial);
    let est = match pool {
        None => ChannelEstimate::perfect(&h),
        Some(pool) => {
            let mut rng = stream_rng(derive_seed(cfg.seed, 2), trial);
            let pilots: Vec<DVector<Complex64>> = (0..cfg.k_a)
                .map(|_| pool.pilots[rng.random_range(0..pool.len())].clone())
                .collect();
            let v = pilot_observation(&h, &pilots, cfg.p, &mut rng);
            mmse_estimate(&v, &pilots, cfg.p)?
        }
    };
    let u_all = mmse_combiner(&est.h_hat, &est.error_var, cfg.p)?;
    let u = u_all.column(0).into_owned();
    let out = CombinerOutput::new(u, &h.column(0).into_owned(), &est.h_hat.column(0).into_owned());
    let u_sq = out.u.norm_squared();
    let interference = |m: &DMatrix<Complex64>| -> f64 {
        (1..cfg.k_a).map(|k| out.u.dotc(&m.column(k)).norm_sqr()).sum::<f64>() * cfg.p
    };
    let noise_var = interference(&h) + u_sq;
    let noise_hat = interference(&est.h_hat) + cfg.p * u_sq * est.error_var.iter().sum::<f64>() + u_sq;

    let mut rng = stream_rng(derive_seed(cfg.seed, 3), trial);
    let uniform = 1.0 - rng.random::<f64>();
    let (amp, sd) = (cfg.p.sqrt(), noise_var.sqrt());
    let (mut dist, mut energy) = (0.0, 0.0);
    for _ in 0..cfg.n_d() {
        let q = complex_normal(&mut rng) * amp;
        let v = out.g * q + complex_normal(&mut rng) * sd;
        dist += (v - out.g_hat * q).norm_sqr();
        energy += v.norm_sqr();
    }
    Ok(TrialStats {
        dist,
        energy,
        threshold: ln_codebook_minus_one(cfg.b) - uniform.ln(),
        g_hat_sq: out.g_hat.norm_sqr(),
        noise_hat,
    })
}

/// RCUS estimate minimized over the `s` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FblBound {
    pub eps: f64,
    pub std_err: f64,
    /// Minimizing grid value (relative units).
    pub s: f64,
    /// Estimate at every grid point, in grid order.
    pub per_s: Vec<f64>,
    /// Fewer than ten error events at the minimizer.
    pub low_precision: bool,
}

impl FblBound {
    pub fn estimate(&self) -> McEstimate {
        McEstimate {
            value: self.eps,
            std_err: self.std_err,
        }
    }
}

fn pilot_pool(cfg: &FblConfig) -> Result<Option<PilotPool>> {
    match cfg.csi {
        CsiMode::Perfect => Ok(None),
        CsiMode::Estimated { pool_size } => Ok(Some(PilotPool::random_phase(pool_size, cfg.n_p, derive_seed(cfg.seed, 4))?)),
    }
}

/// Monte Carlo RCUS bound on user 0's packet error probability.
pub fn fbl_error_bound(cfg: &FblConfig) -> Result<FblBound> {
    cfg.validate()?;
    let pool = pilot_pool(cfg)?;
    let stats: Vec<TrialStats> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, pool.as_ref(), t))
        .collect::<Result<_>>()?;
    let n_d = cfg.n_d();
    let per_s: Vec<f64> = cfg
        .s_grid
        .iter()
        .map(|&s| stats.iter().filter(|t| t.error(s, cfg.p, n_d)).count() as f64 / stats.len() as f64)
        .collect();
    let (best, &eps) = per_s
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("nonempty grid");
    let s = cfg.s_grid[best];
    let indicators: Vec<f64> = stats
        .iter()
        .map(|t| if t.error(s, cfg.p, n_d) { 1.0 } else { 0.0 })
        .collect();
    let (_, std_err) = mean_and_std_err(&indicators);
    Ok(FblBound {
        eps,
        std_err,
        s,
        per_s,
        low_precision: eps * (cfg.trials as f64) < 10.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FblSearch {
    /// Smallest feasible total blocklength `n_p + n_d`.
    pub n: usize,
    pub bound: FblBound,
}

/// Smallest total blocklength in `n_range` with `fbl_error_bound <= eps_target`.
///
/// `cfg.n` is ignored. Bisection assumes the bound is non-increasing in `n`;
/// the answer is re-checked one step below.
pub fn min_blocklength_gaussian(cfg: &FblConfig, eps_target: f64, n_range: RangeInclusive<usize>) -> Result<Option<FblSearch>> {
    let (lo, hi) = (*n_range.start().max(&(cfg.n_p + 1)), *n_range.end());
    if lo > hi {
        return Err(invalid("n_range", "range holds no blocklength above the pilot length"));
    }
    let eval = |n: usize| fbl_error_bound(&FblConfig { n, ..cfg.clone() });
    let ok = |b: &FblBound| b.eps <= eps_target;
    let top = eval(hi)?;
    if !ok(&top) {
        return Ok(None);
    }
    let first = eval(lo)?;
    if ok(&first) {
        return Ok(Some(FblSearch { n: lo, bound: first }));
    }
    let (mut bad, mut good, mut good_bound) = (lo, hi, top);
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        let b = eval(mid)?;
        if ok(&b) {
            good = mid;
            good_bound = b;
        } else {
            bad = mid;
        }
    }
    while good > lo {
        let b = eval(good - 1)?;
        if !ok(&b) {
            break;
        }
        good -= 1;
        good_bound = b;
    }
    Ok(Some(FblSearch { n: good, bound: good_bound }))
}

/// Normal approximation for i.i.d. Gaussian inputs on the complex AWGN
/// channel at SNR `rho`: `Q((n C - B ln 2) / sqrt(n V))` with
/// `C = ln(1 + rho)` and `V = 2 rho / (1 + rho)`.
pub fn normal_approx_gaussian_input(n_d: usize, rho: f64, b: u32) -> f64 {
    let n = n_d as f64;
    let c = rho.ln_1p();
    let v = 2.0 * rho / (1.0 + rho);
    q_function((n * c - b as f64 * std::f64::consts::LN_2) / (n * v).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ortho_mod::draw_channel;

    fn herm_solve_check(u: &DMatrix<Complex64>, h_hat: &DMatrix<Complex64>, reg: f64) -> f64 {
        let m = h_hat.nrows();
        let a = h_hat * h_hat.adjoint() + DMatrix::<Complex64>::identity(m, m) * Complex64::new(reg, 0.0);
        (a * u - h_hat).norm() / h_hat.norm()
    }

    #[test]
    fn single_user_high_power_is_matched_filter() {
        let mut rng = stream_rng(1, 0);
        let h = draw_channel(4, 1, &mut rng);
        let u = mmse_combiner(&h, &[0.0], 1e6).unwrap();
        let ratio = u.column(0).component_div(&h.column(0));
        for r in ratio.iter() {
            assert!((r - ratio[0]).norm() < 1e-9 * ratio[0].norm());
        }
    }

    #[test]
    fn orthogonal_users_do_not_leak() {
        let mut h = DMatrix::zeros(4, 2);
        h[(0, 0)] = Complex64::new(1.0, 0.5);
        h[(1, 0)] = Complex64::new(-0.3, 0.2);
        h[(2, 1)] = Complex64::new(0.7, -1.0);
        h[(3, 1)] = Complex64::new(0.1, 0.1);
        let u = mmse_combiner(&h, &[0.0, 0.0], 2.0).unwrap();
        assert!(u.column(0).dotc(&h.column(1)).norm() < 1e-14);
        assert!(u.column(1).dotc(&h.column(0)).norm() < 1e-14);
    }

    #[test]
    fn combiner_residual_is_small() {
        let mut rng = stream_rng(2, 0);
        let h = draw_channel(6, 9, &mut rng);
        let var = vec![0.1; 9];
        let u = mmse_combiner(&h, &var, 0.5).unwrap();
        assert!(herm_solve_check(&u, &h, 0.9 + 2.0) < 1e-10);
    }

    #[test]
    fn combiner_minimizes_mse() {
        // E|u^H r - x_0|^2 over r = sum_k h_k x_k + z, x_k ~ CN(0, P), scaled by sqrt(P)
        let mut rng = stream_rng(3, 0);
        let (m, k, p) = (3, 4, 0.8);
        let h = draw_channel(m, k, &mut rng);
        let cov = &h * h.adjoint() * Complex64::new(p, 0.0) + DMatrix::<Complex64>::identity(m, m);
        let cross = h.column(0) * Complex64::new(p, 0.0);
        let mse = |u: &DVector<Complex64>| -> f64 {
            (u.adjoint() * &cov * u)[(0, 0)].re - 2.0 * u.dotc(&cross).re + p
        };
        let u = mmse_combiner(&h, &vec![0.0; k], p).unwrap().column(0).into_owned();
        let best = mse(&u);
        for _ in 0..2000 {
            let d = DVector::from_fn(m, |_, _| complex_normal(&mut rng) * 1e-3);
            assert!(mse(&(&u + d)) >= best - 1e-12);
        }
    }

    #[test]
    fn density_examples() {
        let (q, g, s, p) = (Complex64::new(0.4, -1.1), Complex64::new(0.8, 0.3), 0.7, 1.3);
        let v = g * q;
        let a = 1.0 + s * p * g.norm_sqr();
        let expect = s * v.norm_sqr() / a + a.ln();
        assert!((information_density(q, v, g, s, p) - expect).abs() < 1e-14);
        assert!(expect > 0.0);
        assert!(information_density(q, v + 1.0, g, 1e-12, p).abs() < 1e-10);
    }

    #[test]
    fn density_mean_matches_closed_form() {
        // v = g q + w, w ~ CN(0, sigma2): E[i_s] = -s sigma2 + s (P |g|^2 + sigma2) / a + ln a
        let (g, p, sigma2, s) = (Complex64::new(0.6, 0.2), 1.5f64, 0.4f64, 1.8);
        let mut rng = stream_rng(4, 0);
        let trials = 400_000;
        let xs: Vec<f64> = (0..trials)
            .map(|_| {
                let q = complex_normal(&mut rng) * p.sqrt();
                let v = g * q + complex_normal(&mut rng) * sigma2.sqrt();
                information_density(q, v, g, s, p)
            })
            .collect();
        let (mean, se) = mean_and_std_err(&xs);
        let a = 1.0 + s * p * g.norm_sqr();
        let expect = -s * sigma2 + s * (p * g.norm_sqr() + sigma2) / a + a.ln();
        assert!((mean - expect).abs() < 4.0 * se, "{mean} vs {expect} ± {se}");
    }

    #[test]
    fn sufficient_statistics_match_direct_sum() {
        let mut rng = stream_rng(5, 0);
        let (g, gh, p, sd) = (Complex64::new(0.9, 0.1), Complex64::new(0.85, 0.05), 2.0f64, 0.3f64);
        let pairs: Vec<(Complex64, Complex64)> = (0..50)
            .map(|_| {
                let q = complex_normal(&mut rng) * p.sqrt();
                (q, g * q + complex_normal(&mut rng) * sd)
            })
            .collect();
        let st = TrialStats {
            dist: pairs.iter().map(|(q, v)| (v - gh * q).norm_sqr()).sum(),
            energy: pairs.iter().map(|(_, v)| v.norm_sqr()).sum(),
            threshold: 0.0,
            g_hat_sq: gh.norm_sqr(),
            noise_hat: 0.5,
        };
        let direct: f64 = pairs.iter().map(|&(q, v)| information_density(q, v, gh, 0.8 / 0.5, p)).sum();
        assert!((st.density_sum(0.8, p, 50) - direct).abs() < 1e-10);
    }

    #[test]
    fn huge_payload_always_fails() {
        let mut cfg = FblConfig::new(50, 2000, 1, 1, 1.0);
        cfg.trials = 200;
        assert_eq!(fbl_error_bound(&cfg).unwrap().eps, 1.0);
    }

    #[test]
    fn long_packets_succeed() {
        let mut cfg = FblConfig::new(0, 40, 1, 1, 3.0);
        cfg.trials = 2000;
        let eps: Vec<f64> = [40, 80, 160, 640]
            .iter()
            .map(|&n| fbl_error_bound(&FblConfig { n, ..cfg.clone() }).unwrap().eps)
            .collect();
        assert!(eps.windows(2).all(|w| w[1] <= w[0]), "{eps:?}");
        assert!(eps[3] < 0.05, "{eps:?}");
    }

    #[test]
    fn minimum_over_grid_is_grid_minimum() {
        let mut cfg = FblConfig::new(60, 30, 3, 2, 1.0);
        cfg.trials = 1000;
        let b = fbl_error_bound(&cfg).unwrap();
        assert!(b.per_s.iter().all(|&e| b.eps <= e));
        assert_eq!(b.per_s.len(), 20);
    }

    #[test]
    fn trivial_target_returns_range_start() {
        let mut cfg = FblConfig::new(0, 30, 1, 1, 1.0);
        cfg.trials = 100;
        let r = min_blocklength_gaussian(&cfg, 1.0, 5..=500).unwrap().unwrap();
        assert_eq!(r.n, 5);
    }

    #[test]
    fn estimated_csi_needs_pilots() {
        let mut cfg = FblConfig::new(60, 30, 1, 1, 1.0);
        cfg.csi = CsiMode::Estimated { pool_size: 16 };
        assert!(cfg.validate().is_err());
        cfg.n_p = 60;
        assert!(cfg.validate().is_err());
        cfg.n_p = 8;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn ln_codebook_size() {
        assert!((ln_codebook_minus_one(1)).abs() < 1e-15);
        assert!((ln_codebook_minus_one(3) - 7f64.ln()).abs() < 1e-14);
    }
}
