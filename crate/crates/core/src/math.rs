//! Gaussian tail functions and log-domain combinatorics.


use crate::error::{Error, Result};

/// Standard normal tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    q_function(-x)
}

/// Inverse of [`q_function`] on `(0, 1)`.
pub fn q_inv(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::INFINITY;
    }
    if p >= 1.0 {
        return f64::NEG_INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    // rational starting point refined by Newton steps on Q(x) - p
    let mut x = if p < 0.5 {
        tail_start(p)
    } else {
        -tail_start(1.0 - p)
    };
    for _ in 0..6 {
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if density == 0.0 {
            break;
        }
        let step = (q_function(x) - p) / density;
        x += step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Approximation of `Q^{-1}(p)` for `p < 0.5` (absolute error below 5e-4).
fn tail_start(p: f64) -> f64 {
    let t = (-2.0 * p.ln()).sqrt();
    t - (2.515517 + 0.802853 * t + 0.010328 * t * t) / (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t)
}

pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if k <= 64 {
        // falling factorial; avoids cancellation between huge ln-gammas
        return (0..k).map(|i| ((n - i) as f64).ln()).sum::<f64>() - ln_factorial(k);
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `ln C(2^bits - offset, k)` without forming `2^bits`.
///
/// Exact up to floating point for any `bits`; the falling factorial is summed
/// term by term, so `k` is expected to be moderate (it is at most `K_a` here).
pub fn ln_binomial_pow2(bits: u32, offset: u64, k: u64) -> f64 {
    if bits < 63 {
        let n = 1u64 << bits;
        if offset > n {
            return f64::NEG_INFINITY;
        }
        return ln_binomial(n - offset, k);
    }
    let ln_n = bits as f64 * std::f64::consts::LN_2;
    let inv_n = (-(bits as f64)).exp2();
    let mut acc = 0.0;
    for i in 0..k {
        acc += ln_n + (-((offset + i) as f64) * inv_n).ln_1p();
    }
    acc - ln_factorial(k)
}

/// Binomial pmf `P(S = s)`, `S ~ Bino(n, p)`, for all `s = 0..=n`.
pub fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    (0..=n)
        .map(|s| {
            if p <= 0.0 {
                return if s == 0 { 1.0 } else { 0.0 };
            }
            if p >= 1.0 {
                return if s == n { 1.0 } else { 0.0 };
            }
            (ln_binomial(n, s) + s as f64 * p.ln() + (n - s) as f64 * (-p).ln_1p()).exp()
        })
        .collect()
}

/// `ln S(k, eta)`, the Stirling number of the second kind, in log domain.
///
/// Runs the recurrence `S(i, j) = j S(i-1, j) + S(i-1, j-1)` on logarithms,
/// one row at a time, so `k` in the thousands stays finite.
pub fn stirling2_log(k: usize, eta: usize) -> Result<f64> {
    if eta > k {
        return Err(Error::Domain(format!(
            "Stirling number S({k}, {eta}) requires eta <= k"
        )));
    }
    Ok(stirling2_log_row(k)[eta])
}

/// `[ln S(k, 0), ..., ln S(k, k)]`.
pub fn stirling2_log_row(k: usize) -> Vec<f64> {
    let mut row = vec![f64::NEG_INFINITY; k + 1];
    row[0] = 0.0;
    for i in 1..=k {
        for j in (1..=i).rev() {
            let stay = (j as f64).ln() + row[j];
            row[j] = log_add(stay, row[j - 1]);
        }
        row[0] = f64::NEG_INFINITY;
    }
    row
}

/// `ln(e^a + e^b)`.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// First index `i` with `cdf[i] > u`, clamped to the last index.
pub(crate) fn inverse_cdf(cdf: &[f64], u: f64) -> usize {
    let idx = cdf.partition_point(|&c| c <= u);
    idx.min(cdf.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counts set partitions of {0..k} into exactly `eta` nonempty blocks.
    fn enumerate_partitions(k: usize, eta: usize) -> u64 {
        // restricted growth strings
        fn rec(pos: usize, k: usize, max_block: usize, eta: usize) -> u64 {
            if pos == k {
                return u64::from(max_block == eta);
            }
            (0..=max_block.min(eta - 1))
                .map(|b| rec(pos + 1, k, max_block.max(b + 1), eta))
                .sum()
        }
        if eta == 0 {
            return u64::from(k == 0);
        }
        rec(0, k, 0, eta)
    }

    #[test]
    fn stirling_small_values() {
        assert_eq!(stirling2_log(2, 1).unwrap(), 0.0);
        assert!((stirling2_log(3, 2).unwrap() - 3f64.ln()).abs() < 1e-14);
        assert!(stirling2_log(5, 5).unwrap().abs() < 1e-14);
        assert!(stirling2_log(2, 3).is_err());
    }

    #[test]
    fn stirling_matches_enumeration() {
        for k in 1..=9 {
            for eta in 1..=k {
                let expect = (enumerate_partitions(k, eta) as f64).ln();
                let got = stirling2_log(k, eta).unwrap();
                assert!((got - expect).abs() < 1e-12, "S({k},{eta})");
            }
        }
    }

    #[test]
    fn stirling_large_k_finite() {
        let row = stirling2_log_row(1000);
        assert!(row[1..].iter().all(|v| v.is_finite()));
        // S(k, 2) = 2^(k-1) - 1
        let expect = 999.0 * std::f64::consts::LN_2;
        assert!((row[2] - expect).abs() < 1e-9);
    }

    #[test]
    fn q_function_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert_eq!(q_function(f64::INFINITY), 0.0);
        // Simpson's rule on the Gaussian density over [1, 12]
        let n = 200_000;
        let (a, b) = (1.0f64, 12.0f64);
        let h = (b - a) / n as f64;
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        // compensated summation keeps the rounding below the tolerance
        let (mut sum, mut comp) = (pdf(a) + pdf(b), 0.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            let y = w * pdf(a + i as f64 * h) - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        let oracle = sum * h / 3.0;
        assert!((q_function(1.0) - oracle).abs() < 1e-14);
        assert!((q_function(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
    }

    #[test]
    fn q_inv_round_trip() {
        for &p in &[1e-9, 1e-4, 0.01, 0.3, 0.5, 0.9] {
            assert!((q_function(q_inv(p)) - p).abs() < 1e-12 * p.max(1e-3));
        }
        assert_eq!(q_inv(0.5), 0.0);
    }

    #[test]
    fn binomial_pow2_matches_direct() {
        let direct = ln_binomial(64 - 3, 4);
        assert!((ln_binomial_pow2(6, 3, 4) - direct).abs() < 1e-10);
        // continuity across the 2^63 switch-over
        let a = ln_binomial_pow2(62, 5, 3);
        let b = ln_binomial_pow2(63, 5, 3);
        assert!((b - a - 3.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn binomial_pmf_sums_to_one() {
        let pmf = binomial_pmf(40, 1.0 / 16.0);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }
}
