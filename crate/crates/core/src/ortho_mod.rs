//! Orthogonal modulation over the SIMO quasi-static fading adder channel.
//!
//! Each q-ary symbol is sent as one of q orthonormal pulses (a one-hot block
//! of length q). In slot `i` the receiver sees the `M x q` matrix
//! `Y_i = sqrt(P) H X_i + Z_i`, where row `k` of `X_i` is the one-hot vector of
//! user `k`'s symbol and `H` is constant over the frame. Noise power is 1, so
//! `P` is the per-pulse SNR.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::{Complex32, Complex64};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::rng::{complex_normal, stream_rng};

/// Largest payload whose codebook is held in memory.
pub const MAX_MATERIALIZED_BITS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub k_a: usize,
    pub q: usize,
    pub n: usize,
    pub m: usize,
    /// Per-pulse power (linear).
    pub p: f64,
    pub b: u32,
    pub eps: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_a == 0 || self.q == 0 || self.n == 0 || self.m == 0 || self.b == 0 {
            return Err(invalid("system", "K_a, q, n, M and B must be positive"));
        }
        if !(self.p > 0.0) {
            return Err(invalid("p", "power must be positive"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(invalid("eps", "target must lie in (0, 1)"));
        }
        Ok(())
    }

    /// `E_b/N0 = nP/B` (linear).
    pub fn ebn0(&self) -> f64 {
        self.n as f64 * self.p / self.b as f64
    }

    pub fn ebn0_db(&self) -> f64 {
        10.0 * self.ebn0().log10()
    }
}

/// A common random codebook over `[q]^n` with `2^B` codewords.
///
/// Codeword `m` is drawn i.i.d. uniform from stream `m` of the seed, so any
/// codeword can be regenerated on its own; codebooks with at most
/// `2^MAX_MATERIALIZED_BITS` entries are also kept as a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    bits: u32,
    n: usize,
    q: usize,
    seed: u64,
    table: Option<Vec<Vec<usize>>>,
}

impl Codebook {
    pub fn generate(bits: u32, n: usize, q: usize, seed: u64) -> Result<Self> {
        if bits == 0 || n == 0 || q == 0 {
            return Err(invalid("codebook", "B, n and q must be positive"));
        }
        let mut cb = Codebook {
            bits,
            n,
            q,
            seed,
            table: None,
        };
        if bits <= MAX_MATERIALIZED_BITS {
            cb.table = Some((0..1u64 << bits).map(|m| cb.draw(m)).collect());
        }
        Ok(cb)
    }

    fn draw(&self, message: u64) -> Vec<usize> {
        let mut rng = stream_rng(self.seed, message);
        (0..self.n).map(|_| rng.random_range(0..self.q)).collect()
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn codeword(&self, message: u64) -> Result<Vec<usize>> {
        if self.bits < 64 && message >> self.bits != 0 {
            return Err(invalid("message", format!("{message} >= 2^{}", self.bits)));
        }
        Ok(match &self.table {
            Some(t) => t[message as usize].clone(),
            None => self.draw(message),
        })
    }

    /// The full `2^B x n` table.
    pub fn materialize(&self) -> Result<Vec<Vec<usize>>> {
        match &self.table {
            Some(t) => Ok(t.clone()),
            None => Err(Error::CodebookTooLarge {
                bits: self.bits,
                limit: MAX_MATERIALIZED_BITS,
            }),
        }
    }
}

/// One-hot pulse sequence `[e_{c_1}; ...; e_{c_n}]` of length `n q`.
pub fn modulate(codeword: &[usize], q: usize) -> Result<Vec<u8>> {
    let mut s = vec![0u8; codeword.len() * q];
    for (i, &c) in codeword.iter().enumerate() {
        if c >= q {
            return Err(Error::SymbolOutOfRange { symbol: c, q });
        }
        s[i * q + c] = 1;
    }
    Ok(s)
}

/// Inverse of [`modulate`]; each block must contain exactly one pulse.
pub fn demodulate(signal: &[u8], q: usize) -> Result<Vec<usize>> {
    if q == 0 || !signal.len().is_multiple_of(q) {
        return Err(invalid("signal", "length is not a multiple of q"));
    }
    signal
        .chunks(q)
        .map(|block| {
            let hot: Vec<usize> = (0..q).filter(|&j| block[j] != 0).collect();
            match hot.as_slice() {
                [c] => Ok(*c),
                _ => Err(invalid("signal", "block is not one-hot")),
            }
        })
        .collect()
}

/// Observation of one slot. `symbols[k]` is the column of the single one in
/// row `k` of `X_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotMatrices {
    pub y: DMatrix<Complex64>,
    pub z: DMatrix<Complex64>,
    pub symbols: Vec<usize>,
}

impl SlotMatrices {
    /// The binary `K_a x q` matrix `X_i`.
    pub fn x(&self, q: usize) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.symbols.len(), q);
        for (k, &c) in self.symbols.iter().enumerate() {
            x[(k, c)] = 1.0;
        }
        x
    }
}

/// A quasi-static frame: one channel matrix shared by all `n` slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub h: DMatrix<Complex64>,
    pub slots: Vec<SlotMatrices>,
}

/// `M x K` matrix with i.i.d. CN(0, 1) entries.
pub fn draw_channel<R: Rng>(m: usize, k: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(m, k, |_, _| complex_normal(rng))
}

/// Simulate one frame. `codewords[k]` is user `k`'s length-`n` codeword; if
/// `h` is `None` the channel is drawn i.i.d. CN(0, 1). With `noiseless` the
/// noise matrices are zero.
pub fn simulate_slots(
    params: &SystemParams,
    codewords: &[Vec<usize>],
    h: Option<DMatrix<Complex64>>,
    seed: u64,
    noiseless: bool,
) -> Result<Frame> {
    let (m, q) = (params.m, params.q);
    if codewords.is_empty() {
        return Err(invalid("codewords", "at least one user is required"));
    }
    let n = codewords[0].len();
    if codewords.iter().any(|c| c.len() != n) {
        return Err(invalid("codewords", "all codewords must have the same length"));
    }
    if let Some(&bad) = codewords.iter().flatten().find(|&&c| c >= q) {
        return Err(Error::SymbolOutOfRange { symbol: bad, q });
    }
    let mut rng = stream_rng(seed, 0);
    let h = match h {
        Some(h) => {
            if h.nrows() != m || h.ncols() != codewords.len() {
                return Err(invalid("h", "must be M x K_a"));
            }
            h
        }
        None => draw_channel(m, codewords.len(), &mut rng),
    };
    let amp = params.p.sqrt();
    let slots = (0..n)
        .map(|i| {
            let z = if noiseless {
                DMatrix::zeros(m, q)
            } else {
                DMatrix::from_fn(m, q, |_, _| complex_normal(&mut rng))
            };
            let mut y = z.clone();
            let symbols: Vec<usize> = codewords.iter().map(|c| c[i]).collect();
            for (k, &c) in symbols.iter().enumerate() {
                for r in 0..m {
                    y[(r, c)] += h[(r, k)] * amp;
                }
            }
            SlotMatrices { y, z, symbols }
        })
        .collect();
    Ok(Frame { h, slots })
}

/// A pool of `2^J` pilot sequences; `pilots[j]` is a column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotPool {
    pub pilots: Vec<DVector<Complex64>>,
}

impl PilotPool {
    /// Constant-modulus pilots with i.i.d. uniform phases, `||phi||^2 = n_p`.
    pub fn random_phase(pool_size: usize, n_p: usize, seed: u64) -> Result<Self> {
        if n_p == 0 || pool_size == 0 {
            return Err(invalid("pilots", "pool size and n_p must be positive"));
        }
        let mut rng = stream_rng(seed, 0);
        let pilots = (0..pool_size)
            .map(|_| {
                DVector::from_fn(n_p, |_, _| {
                    let theta = rng.random::<f64>() * std::f64::consts::TAU;
                    Complex64::from_polar(1.0, theta)
                })
            })
            .collect();
        Ok(PilotPool { pilots })
    }

    /// q-ary pilots: `blocks` one-hot blocks of length `q`, `||phi||^2 = blocks`.
    pub fn qary(pool_size: usize, blocks: usize, q: usize, seed: u64) -> Result<Self> {
        if blocks == 0 || pool_size == 0 || q == 0 {
            return Err(invalid("pilots", "pool size, blocks and q must be positive"));
        }
        let mut rng = stream_rng(seed, 0);
        let pilots = (0..pool_size)
            .map(|_| {
                let mut v = DVector::zeros(blocks * q);
                for l in 0..blocks {
                    v[l * q + rng.random_range(0..q)] = Complex64::new(1.0, 0.0);
                }
                v
            })
            .collect();
        Ok(PilotPool { pilots })
    }

    pub fn len(&self) -> usize {
        self.pilots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pilots.is_empty()
    }

    pub fn pilot_len(&self) -> usize {
        self.pilots.first().map_or(0, |p| p.len())
    }
}

/// Each of `k_a` users picks a pilot index uniformly from the pool.
pub fn assign_pilots(pool_size: usize, k_a: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, 1);
    (0..k_a).map(|_| rng.random_range(0..pool_size)).collect()
}

/// Users whose pilot index is shared with another user.
pub fn pilot_collisions(assigned: &[usize]) -> Vec<bool> {
    assigned
        .iter()
        .map(|a| assigned.iter().filter(|&b| b == a).count() > 1)
        .collect()
}

/// `V = sum_k sqrt(P) h_k phi_k^T + Z` (`M x n_p`).
pub fn pilot_observation<R: Rng>(
    h: &DMatrix<Complex64>,
    pilots: &[DVector<Complex64>],
    p: f64,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let n_p = pilots[0].len();
    let mut v = DMatrix::from_fn(h.nrows(), n_p, |_, _| complex_normal(rng));
    let amp = Complex64::new(p.sqrt(), 0.0);
    for (k, phi) in pilots.iter().enumerate() {
        v += (h.column(k) * amp) * phi.transpose();
    }
    v
}

/// MMSE channel estimate.
///
/// `error_var[k]` is the per-antenna error variance of `h_hat[:, k]`: the
/// estimator is isotropic because the channel is i.i.d. CN(0, I).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub h_hat: DMatrix<Complex64>,
    pub error_var: Vec<f64>,
}

impl ChannelEstimate {
    /// Perfect CSI: the true channel with zero error.
    pub fn perfect(h: &DMatrix<Complex64>) -> Self {
        ChannelEstimate {
            h_hat: h.clone(),
            error_var: vec![0.0; h.ncols()],
        }
    }
}

/// MMSE estimate of `H` from `V = sum_k sqrt(P) h_k phi_k^T + Z`.
///
/// With `Phi = [phi_1 .. phi_K]` and `A = P Phi^H Phi + I`,
/// `H_hat^T = sqrt(P) A^{-1} Phi^H V^T` and the error variance of user `k` is
/// `1 - P [Phi^H Phi A^{-1}]_{kk}`; this is the usual
/// `sqrt(P) phi_k^H (P Phi Phi^H + I)^{-1} v` estimator written in `K x K` form.
pub fn mmse_estimate(
    v: &DMatrix<Complex64>,
    pilots: &[DVector<Complex64>],
    p: f64,
) -> Result<ChannelEstimate> {
    let k = pilots.len();
    if k == 0 {
        return Err(invalid("pilots", "at least one user is required"));
    }
    let n_p = v.ncols();
    if pilots.iter().any(|phi| phi.len() != n_p) {
        return Err(invalid("pilots", "pilot length differs from the observation"));
    }
    let phi = DMatrix::from_fn(n_p, k, |t, j| pilots[j][t]);
    let gram = phi.adjoint() * &phi;
    let a = &gram * Complex64::new(p, 0.0) + DMatrix::identity(k, k);
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("pilot Gram system is not positive definite".into()))?;
    let rhs = phi.adjoint() * v.transpose();
    let h_hat = chol.solve(&rhs).transpose() * Complex64::new(p.sqrt(), 0.0);
    let ga = chol.solve(&gram);
    let error_var = (0..k).map(|j| (1.0 - p * ga[(j, j)].re).max(0.0)).collect();
    Ok(ChannelEstimate { h_hat, error_var })
}

const DUMP_MAGIC: &[u8; 4] = b"COMA";
const DUMP_VERSION: u32 = 1;

/// Write slot observations as a frame dump.
///
/// Layout (little-endian): `"COMA"`, version `u32`, `M u32`, `q u32`, then
/// for each slot the `M x q` matrix in row-major order as `(f32 re, f32 im)`
/// pairs. The slot count follows from the file length.
pub fn write_frame_dump<W: Write>(mut w: W, slots: &[DMatrix<Complex64>]) -> Result<()> {
    let (m, q) = slots.first().map_or((0, 0), |s| (s.nrows(), s.ncols()));
    if slots.iter().any(|s| s.nrows() != m || s.ncols() != q) {
        return Err(invalid("slots", "all slots must share one shape"));
    }
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    w.write_all(&(m as u32).to_le_bytes())?;
    w.write_all(&(q as u32).to_le_bytes())?;
    for s in slots {
        for r in 0..m {
            for c in 0..q {
                let v = s[(r, c)];
                w.write_all(&(v.re as f32).to_le_bytes())?;
                w.write_all(&(v.im as f32).to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Read a frame dump written by [`write_frame_dump`].
pub fn read_frame_dump<R: Read>(mut r: R) -> Result<Vec<DMatrix<Complex32>>> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if &header[0..4] != DUMP_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != DUMP_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let (m, q) = (word(8) as usize, word(12) as usize);
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    let slot_bytes = m * q * 8;
    if slot_bytes == 0 {
        return if body.is_empty() {
            Ok(Vec::new())
        } else {
            Err(Error::Format("payload with empty slot shape".into()))
        };
    }
    if body.len() % slot_bytes != 0 {
        return Err(Error::Format("payload is not a whole number of slots".into()));
    }
    let f = |off: usize| f32::from_le_bytes(body[off..off + 4].try_into().unwrap());
    Ok(body
        .chunks(slot_bytes)
        .enumerate()
        .map(|(s, _)| {
            DMatrix::from_fn(m, q, |row, col| {
                let off = s * slot_bytes + (row * q + col) * 8;
                Complex32::new(f(off), f(off + 4))
            })
        })
        .collect())
}
