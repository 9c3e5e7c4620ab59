//! Matched-filter (half-space) detection.
//!
//! Symbol `j` enters user `k`'s list when `Re <y_j, h_k> > theta_k`. Given
//! `h_k`, the statistic of the transmitted symbol is Gaussian with mean
//! `sqrt(P) ||h_k||^2` and variance `||h_k||^2 (P s + 1) / 2`, where
//! `s ~ Bino(K_a - 1, 1/q)` counts the other users on the same symbol; for a
//! symbol not sent by user `k` the mean is zero.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::math::{binomial_pmf, q_function, q_inv};
use crate::mmv_amp::Candidate;

/// Variance convention of the correlation statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    /// Complex baseband: variance `||h||^2 (P s + 1) / 2`.
    #[default]
    Complex,
    /// Real-valued model: variance `||h||^2 (P s + 1)`.
    Real,
}

impl NoiseModel {
    fn factor(self) -> f64 {
        match self {
            NoiseModel::Complex => 0.5,
            NoiseModel::Real => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MfThreshold {
    /// One threshold per user.
    Fixed(Vec<f64>),
    /// `theta_k = alpha sqrt(P) ||h_k||^2`.
    Policy { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfConfig {
    pub threshold: MfThreshold,
}

impl Default for MfConfig {
    fn default() -> Self {
        MfConfig {
            threshold: MfThreshold::Policy { alpha: 0.5 },
        }
    }
}

impl MfConfig {
    pub fn validate(&self) -> Result<()> {
        match &self.threshold {
            MfThreshold::Policy { alpha } if !(0.0..=1.0).contains(alpha) => {
                Err(invalid("alpha", format!("{alpha} is not in [0, 1]")))
            }
            MfThreshold::Fixed(t) if t.iter().any(|v| v.is_nan()) => Err(invalid("theta", "NaN threshold")),
            _ => Ok(()),
        }
    }

    /// Thresholds for the users of `h` at power `p`.
    pub fn thresholds(&self, h: &DMatrix<Complex64>, p: f64) -> Result<Vec<f64>> {
        self.validate()?;
        match &self.threshold {
            MfThreshold::Fixed(t) if t.len() == h.ncols() => Ok(t.clone()),
            MfThreshold::Fixed(_) => Err(invalid("theta", "one threshold per user is required")),
            MfThreshold::Policy { alpha } => Ok(h
                .column_iter()
                .map(|c| alpha * p.sqrt() * c.norm_squared())
                .collect()),
        }
    }
}

/// Per-user candidate lists of one slot, sorted by decreasing correlation.
///
/// `y` is `M x q`, `h` is `M x K_a`; the list lengths vary.
pub fn mf_lists(y: &DMatrix<Complex64>, h: &DMatrix<Complex64>, p: f64, cfg: &MfConfig) -> Result<Vec<Vec<Candidate>>> {
    if y.nrows() != h.nrows() {
        return Err(invalid("h", "must have as many rows as y"));
    }
    let theta = cfg.thresholds(h, p)?;
    let corr = h.adjoint() * y;
    Ok(theta
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut list: Vec<Candidate> = corr
                .row(k)
                .iter()
                .enumerate()
                .filter(|(_, c)| c.re > t)
                .map(|(symbol, c)| Candidate { symbol, score: c.re })
                .collect();
            list.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.symbol.cmp(&b.symbol)));
            list
        })
        .collect())
}

fn check(h_norm_sq: f64, p: f64, k_a: usize, q: usize) -> Result<()> {
    if !(h_norm_sq > 0.0) || !h_norm_sq.is_finite() {
        return Err(invalid("h", "channel norm must be positive"));
    }
    if !(p > 0.0) || k_a == 0 || q == 0 {
        return Err(invalid("mf config", "need P > 0, K_a >= 1, q >= 1"));
    }
    Ok(())
}

/// Misdetection probability of a user with `||h||^2 = h_norm_sq` at threshold `theta`:
/// `sum_s Q((sqrt(P) ||h||^2 - theta) / (||h|| sigma_s)) P(s)`.
pub fn misdetection_prob(h_norm_sq: f64, theta: f64, p: f64, k_a: usize, q: usize, model: NoiseModel) -> Result<f64> {
    check(h_norm_sq, p, k_a, q)?;
    let pmf = binomial_pmf(k_a as u64 - 1, 1.0 / q as f64);
    Ok(mixture_md(h_norm_sq, theta, p, &pmf, model))
}

fn mixture_md(h_norm_sq: f64, theta: f64, p: f64, pmf: &[f64], model: NoiseModel) -> f64 {
    let mean = p.sqrt() * h_norm_sq;
    let hn = h_norm_sq.sqrt();
    pmf.iter()
        .enumerate()
        .map(|(s, w)| w * q_function((mean - theta) / (hn * ((p * s as f64 + 1.0) * model.factor()).sqrt())))
        .sum()
}

/// Threshold at which [`misdetection_prob`] equals `target`.
pub fn calibrate_threshold(h_norm_sq: f64, p: f64, k_a: usize, q: usize, target: f64, model: NoiseModel) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Unreachable {
            target,
            reason: "misdetection target must lie in (0, 1)".into(),
        });
    }
    check(h_norm_sq, p, k_a, q)?;
    let pmf = binomial_pmf(k_a as u64 - 1, 1.0 / q as f64);
    let f = |t: f64| mixture_md(h_norm_sq, t, p, &pmf, model);
    let mean = p.sqrt() * h_norm_sq;
    let hn = h_norm_sq.sqrt();
    // every mixture component lies between the s = 0 and s = K_a - 1 components
    let z = q_inv(target);
    let sd_lo = hn * model.factor().sqrt();
    let sd_hi = hn * ((p * (k_a - 1) as f64 + 1.0) * model.factor()).sqrt();
    let mut lo = mean - z.abs().max(1.0) * sd_hi - sd_lo;
    let mut hi = mean + z.abs().max(1.0) * sd_hi + sd_lo;
    while f(lo) > target {
        lo -= sd_hi;
    }
    while f(hi) < target {
        hi += sd_hi;
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..500 {
        mid = 0.5 * (lo + hi);
        let v = f(mid);
        if (v - target).abs() <= 1e-12 * target || hi - lo <= 1e-15 * (mean.abs() + sd_hi) {
            break;
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Expected number of false alarms per slot:
/// `(q - 1) sum_s Q(theta / (||h|| sigma_s)) P(s)`.
pub fn expected_false_alarms(h_norm_sq: f64, theta: f64, p: f64, k_a: usize, q: usize, model: NoiseModel) -> Result<f64> {
    check(h_norm_sq, p, k_a, q)?;
    if q == 1 {
        return Ok(0.0);
    }
    let hn = h_norm_sq.sqrt();
    let pmf = binomial_pmf(k_a as u64 - 1, 1.0 / q as f64);
    let sum: f64 = pmf
        .iter()
        .enumerate()
        .map(|(s, w)| w * q_function(theta / (hn * ((p * s as f64 + 1.0) * model.factor()).sqrt())))
        .sum();
    Ok((q - 1) as f64 * sum)
}

fn theorem3_ratio(k_a: usize, q: usize, p: f64) -> f64 {
    let k = k_a as f64;
    (p / 2.0) / (p * (k / q as f64 + k.powf(0.75)) + 1.0)
}

/// Miss/false-alarm rate per slot certified for the outer code:
/// `(1 + (P/2) / (P (K_a/q + K_a^{3/4}) + 1))^{-M}`.
pub fn theorem3_slot_rate(k_a: usize, q: usize, m: usize, p: f64) -> f64 {
    (-(m as f64) * theorem3_ratio(k_a, q, p).ln_1p()).exp()
}

/// PUPE bound of the matched filter with an outer single-user A-channel code:
/// `min(1, n r) + exp(-2 sqrt(K_a)) + eps`, where `r` is [`theorem3_slot_rate`].
/// The total is clamped to 1.
pub fn theorem3_bound(k_a: usize, q: usize, m: usize, p: f64, n: usize, eps: f64) -> Result<f64> {
    if k_a == 0 || q == 0 || n == 0 || !(p >= 0.0) || !(0.0..=1.0).contains(&eps) {
        return Err(invalid("theorem 3", "need K_a, q, n >= 1, P >= 0, eps in [0, 1]"));
    }
    let log_first = (n as f64).ln() - m as f64 * theorem3_ratio(k_a, q, p).ln_1p();
    let first = log_first.min(0.0).exp();
    Ok((first + (-2.0 * (k_a as f64).sqrt()).exp() + eps).min(1.0))
}

/// Antenna count from the scaling law and the sum spectral efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingLaw {
    pub m: f64,
    /// `K_a log2(q) / q`.
    pub s: f64,
}

/// `M = K_a/q + min(K_a^{3/4}, sqrt(ln(1/P_e)/2) K_a^{1/2}) + 2/P + ln B - ln P_e`.
pub fn scaling_law_antennas(k_a: usize, q: usize, p: f64, b: u32, p_e: f64) -> Result<ScalingLaw> {
    if !(p_e > 0.0 && p_e < 1.0) {
        return Err(invalid("p_e", "must lie in (0, 1)"));
    }
    if k_a == 0 || q < 2 || !(p > 0.0) || b == 0 {
        return Err(invalid("scaling law", "need K_a >= 1, q >= 2, P > 0, B >= 1"));
    }
    let k = k_a as f64;
    let spread = k.powf(0.75).min((p_e.recip().ln() / 2.0).sqrt() * k.sqrt());
    Ok(ScalingLaw {
        m: k / q as f64 + spread + 2.0 / p + (b as f64).ln() - p_e.ln(),
        s: k * (q as f64).log2() / q as f64,
    })
}

#[cfg(test)]
/// Chernoff bound on the per-collision misdetection at `theta = alpha sqrt(P) ||h||^2`:
/// `Q(x) <= exp(-x^2 / 2)` gives `exp(-P (1 - alpha)^2 ||h||^2 / (P s + 1))`.
fn md_tail_bound(alpha: f64, p: f64, h_norm_sq: f64, s: usize) -> f64 {
    (-p * (1.0 - alpha).powi(2) * h_norm_sq / (p * s as f64 + 1.0)).exp()
}

#[cfg(test)]
/// Average of [`md_tail_bound`] over `||h||^2 ~ Gamma(M, 1)`:
/// `(1 + P (1 - alpha)^2 / (P s + 1))^{-M}`.
fn expected_md_tail_bound(alpha: f64, p: f64, m: usize, s: usize) -> f64 {
    (1.0 + p * (1.0 - alpha).powi(2) / (p * s as f64 + 1.0)).powi(-(m as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ortho_mod::draw_channel;
    use crate::rng::{complex_normal, stream_rng};
    use rand::Rng;

    #[test]
    fn noiseless_single_user_list() {
        let mut rng = stream_rng(1, 0);
        let h = draw_channel(4, 1, &mut rng);
        let p = 2.0f64;
        let mut y = DMatrix::zeros(4, 8);
        y.set_column(5, &(h.column(0) * Complex64::new(p.sqrt(), 0.0)));
        for alpha in [0.01, 0.5, 0.99] {
            let cfg = MfConfig { threshold: MfThreshold::Policy { alpha } };
            let lists = mf_lists(&y, &h, p, &cfg).unwrap();
            assert_eq!(lists[0].iter().map(|c| c.symbol).collect::<Vec<_>>(), vec![5]);
        }
    }

    #[test]
    fn very_low_threshold_lists_everything() {
        let mut rng = stream_rng(2, 0);
        let h = draw_channel(3, 2, &mut rng);
        let y = draw_channel(3, 6, &mut rng);
        let cfg = MfConfig { threshold: MfThreshold::Fixed(vec![f64::NEG_INFINITY; 2]) };
        let lists = mf_lists(&y, &h, 1.0, &cfg).unwrap();
        assert!(lists.iter().all(|l| l.len() == 6));
    }

    #[test]
    fn alpha_out_of_range_is_rejected() {
        let cfg = MfConfig { threshold: MfThreshold::Policy { alpha: 1.5 } };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_user_threshold_closed_form() {
        let (hn2, p, target) = (3.0f64, 1.5f64, 0.02);
        let theta = calibrate_threshold(hn2, p, 1, 16, target, NoiseModel::Complex).unwrap();
        let expect = p.sqrt() * hn2 - q_inv(target) * hn2.sqrt() / 2f64.sqrt();
        assert!((theta - expect).abs() < 1e-9, "{theta} vs {expect}");
        let median = calibrate_threshold(hn2, p, 1, 16, 0.5, NoiseModel::Complex).unwrap();
        assert!((median - p.sqrt() * hn2).abs() < 1e-9);
    }

    #[test]
    fn calibration_is_an_inverse() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..100 {
            let hn2 = 0.5 + 10.0 * rng.random::<f64>();
            let p = 0.1 + 3.0 * rng.random::<f64>();
            let k = rng.random_range(1..60);
            let q = rng.random_range(2..128);
            let target = 10f64.powf(-4.0 * rng.random::<f64>() - 0.1);
            for model in [NoiseModel::Complex, NoiseModel::Real] {
                let t = calibrate_threshold(hn2, p, k, q, target, model).unwrap();
                let got = misdetection_prob(hn2, t, p, k, q, model).unwrap();
                assert!((got - target).abs() <= 1e-10 * target.max(1e-3), "{got} vs {target}");
            }
        }
    }

    #[test]
    fn calibration_rejects_bad_targets() {
        assert!(calibrate_threshold(1.0, 1.0, 2, 4, 0.0, NoiseModel::Complex).is_err());
        assert!(calibrate_threshold(1.0, 1.0, 2, 4, 1.0, NoiseModel::Complex).is_err());
    }

    #[test]
    fn false_alarm_edge_cases() {
        assert_eq!(expected_false_alarms(2.0, f64::INFINITY, 1.0, 4, 16, NoiseModel::Complex).unwrap(), 0.0);
        assert_eq!(expected_false_alarms(2.0, 0.0, 1.0, 4, 1, NoiseModel::Complex).unwrap(), 0.0);
        let half = expected_false_alarms(2.0, 0.0, 1.0, 4, 9, NoiseModel::Complex).unwrap();
        assert!((half - 4.0).abs() < 1e-12);
    }

    #[test]
    fn false_alarms_monotone() {
        let mut last = f64::INFINITY;
        for i in 0..50 {
            let v = expected_false_alarms(2.0, i as f64 * 0.1, 0.8, 20, 32, NoiseModel::Complex).unwrap();
            assert!(v <= last);
            last = v;
        }
        let mut last = 0.0;
        for k in 1..80 {
            let v = expected_false_alarms(2.0, 1.5, 0.8, k, 32, NoiseModel::Complex).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn real_model_has_heavier_tails() {
        let c = expected_false_alarms(2.0, 2.0, 1.0, 5, 16, NoiseModel::Complex).unwrap();
        let r = expected_false_alarms(2.0, 2.0, 1.0, 5, 16, NoiseModel::Real).unwrap();
        assert!(r > c);
    }

    #[test]
    fn theorem3_limits() {
        let eps = 0.01;
        let big_m = theorem3_bound(16, 64, 100_000, 1.0, 20, eps).unwrap();
        assert!((big_m - ((-8.0f64).exp() + eps)).abs() < 1e-15);
        assert_eq!(theorem3_bound(16, 64, 8, 1e-12, 20, eps).unwrap(), 1.0);
        assert!(theorem3_slot_rate(16, 64, 0, 1.0) == 1.0);
    }

    #[test]
    fn theorem3_decreases_with_antennas() {
        let mut last = 2.0;
        for m in (1..200).step_by(7) {
            let v = theorem3_bound(100, 128, m, 0.7, 23, 0.01).unwrap();
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn scaling_law_monotone() {
        let base = scaling_law_antennas(100, 128, 0.7, 100, 0.05).unwrap();
        assert!(scaling_law_antennas(120, 128, 0.7, 100, 0.05).unwrap().m > base.m);
        assert!(scaling_law_antennas(100, 128, 1.4, 100, 0.05).unwrap().m < base.m);
        let wide = scaling_law_antennas(100, 256, 0.7, 100, 0.05).unwrap();
        assert!(wide.m < base.m);
        assert!((base.s - 100.0 * 7.0 / 128.0).abs() < 1e-12);
        assert!((wide.s - 100.0 * 8.0 / 256.0).abs() < 1e-12);
        assert!(scaling_law_antennas(100, 128, 0.7, 100, 1.0).is_err());
    }

    #[test]
    fn scaling_law_reference_point() {
        // independent evaluation of the same expression
        let (k, q, p, b, pe) = (500.0f64, 128.0f64, 0.7f64, 100.0f64, 0.05f64);
        let a = k.powf(0.75);
        let c = (-(pe.ln()) / 2.0).sqrt() * k.sqrt();
        let expect = k / q + if a < c { a } else { c } + 2.0 / p + b.ln() - pe.ln();
        let got = scaling_law_antennas(500, 128, 0.7, 100, 0.05).unwrap();
        assert!((got.m - expect).abs() < 1e-12);
        assert!((got.m - 41.73).abs() < 0.01, "{}", got.m);
    }

    #[test]
    fn tail_helpers_bound_exact_quantities() {
        let mut rng = stream_rng(9, 0);
        for _ in 0..200 {
            let alpha = rng.random::<f64>();
            let p = 0.1 + 5.0 * rng.random::<f64>();
            let hn2 = 0.1 + 20.0 * rng.random::<f64>();
            let s = rng.random_range(0..10);
            let hn = hn2.sqrt();
            let exact = q_function((1.0 - alpha) * p.sqrt() * hn2 / (hn * ((p * s as f64 + 1.0) / 2.0).sqrt()));
            assert!(exact <= md_tail_bound(alpha, p, hn2, s) + 1e-15);
        }
        // expectation over ||h||^2 ~ Gamma(M, 1)
        let (alpha, p, m, s) = (0.5, 1.0, 4, 1);
        let trials = 200_000;
        let mean: f64 = (0..trials)
            .map(|_| {
                let hn2: f64 = (0..m).map(|_| complex_normal(&mut rng).norm_sqr()).sum();
                md_tail_bound(alpha, p, hn2, s)
            })
            .sum::<f64>()
            / trials as f64;
        assert!((mean - expected_md_tail_bound(alpha, p, m, s)).abs() < 2e-3);
    }
}
