//! Sum-product decoding on the joint LT + LDPC graph.

use super::code::{check_len, Neighbors, RaptorCode};
use crate::error::Result;
use crate::scalar::Scalar;

/// Magnitude bound for every LLR and message.
pub const LLR_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaConfig {
    /// Iterations per decode attempt.
    pub max_iters: usize,
    /// End an attempt early after this many iterations without fewer errors
    /// than the best so far. Only applies to genie decoding.
    pub stall_iters: Option<usize>,
}

impl Default for SpaConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            stall_iters: Some(20),
        }
    }
}

/// How a decoder decides it has succeeded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuccessCriterion<'a> {
    /// Compare against the transmitted message.
    Genie(&'a [u8]),
    /// The message ends in a CRC-16 of the preceding bits and the
    /// intermediate word satisfies every precode check.
    Checksum,
}

/// CRC-16/CCITT-FALSE over a bit sequence, most significant bit first.
pub fn crc16(bits: &[u8]) -> u16 {
    let mut crc: u16 = 0xffff;
    for &b in bits {
        let top = (crc >> 15) as u8 ^ (b & 1);
        crc <<= 1;
        if top == 1 {
            crc ^= 0x1021;
        }
    }
    crc
}

/// Appends the 16 CRC bits of `payload`.
pub fn append_checksum(payload: &[u8]) -> Vec<u8> {
    let crc = crc16(payload);
    let mut out = payload.to_vec();
    out.extend((0..16).rev().map(|b| (crc >> b & 1) as u8));
    out
}

pub fn checksum_ok(message: &[u8]) -> bool {
    if message.len() < 16 {
        return false;
    }
    let (payload, tail) = message.split_at(message.len() - 16);
    let crc = crc16(payload);
    tail.iter()
        .enumerate()
        .all(|(i, &b)| b == (crc >> (15 - i) & 1) as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttemptOutcome {
    pub success: bool,
    pub iterations: usize,
}

/// Decoder working state. Output symbols can be appended between attempts;
/// messages from the previous attempt are kept as a warm start.
#[derive(Debug, Clone)]
pub struct RaptorDecoder<'c, T> {
    code: &'c RaptorCode,
    check_start: Vec<usize>,
    edge_var: Vec<u32>,
    /// `tanh(L/2)` of each check's channel observation; 1 for precode checks.
    check_factor: Vec<T>,
    v2c: Vec<T>,
    c2v: Vec<T>,
    total: Vec<T>,
    n_outputs: usize,
    scratch_t: Vec<T>,
    scratch_fwd: Vec<T>,
}

fn clamp<T: Scalar>(x: T) -> T {
    let c = T::of(LLR_CLAMP);
    x.max(-c).min(c)
}

impl<'c, T: Scalar> RaptorDecoder<'c, T> {
    pub fn new(code: &'c RaptorCode) -> Self {
        let mut d = Self {
            code,
            check_start: vec![0],
            edge_var: Vec::new(),
            check_factor: Vec::new(),
            v2c: Vec::new(),
            c2v: Vec::new(),
            total: vec![T::zero(); code.k_prime()],
            n_outputs: 0,
            scratch_t: Vec::new(),
            scratch_fwd: Vec::new(),
        };
        for row in &code.precode.checks {
            d.push_check(row, T::one());
        }
        d
    }

    fn push_check(&mut self, vars: &[u32], factor: T) {
        for &v in vars {
            self.edge_var.push(v);
            self.v2c.push(self.total[v as usize]);
            self.c2v.push(T::zero());
        }
        self.check_start.push(self.edge_var.len());
        self.check_factor.push(factor);
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// Appends the next output symbols, whose neighbour sets come from the code.
    pub fn push_outputs(&mut self, llrs: &[T]) {
        for &l in llrs {
            let nb = self.code.neighbors(self.n_outputs);
            self.push_output_with(&nb, l);
        }
    }

    /// Appends output symbols with explicitly supplied neighbour sets.
    pub fn push_outputs_with_edges(&mut self, llrs: &[T], edges: &[Neighbors]) -> Result<()> {
        check_len(llrs.len(), edges.len())?;
        for (&l, nb) in llrs.iter().zip(edges) {
            self.push_output_with(nb, l);
        }
        Ok(())
    }

    fn push_output_with(&mut self, nb: &[u32], llr: T) {
        let half = clamp(llr) * T::of(0.5);
        self.push_check(nb, half.tanh());
        self.n_outputs += 1;
    }

    fn iterate_once(&mut self) {
        let max_prod = T::one() - T::epsilon() * T::of(4.0);
        let two = T::of(2.0);
        let half = T::of(0.5);
        for c in 0..self.check_factor.len() {
            let (s, e) = (self.check_start[c], self.check_start[c + 1]);
            let deg = e - s;
            if self.scratch_t.len() < deg {
                self.scratch_t.resize(deg, T::zero());
                self.scratch_fwd.resize(deg, T::zero());
            }
            let mut acc = self.check_factor[c];
            for i in 0..deg {
                let t = (self.v2c[s + i] * half).tanh();
                self.scratch_t[i] = t;
                self.scratch_fwd[i] = acc;
                acc *= t;
            }
            let mut back = T::one();
            for i in (0..deg).rev() {
                let p = (self.scratch_fwd[i] * back).max(-max_prod).min(max_prod);
                self.c2v[s + i] = clamp(two * p.atanh());
                back *= self.scratch_t[i];
            }
        }
        self.total.iter_mut().for_each(|t| *t = T::zero());
        for (e, &v) in self.edge_var.iter().enumerate() {
            self.total[v as usize] += self.c2v[e];
        }
        for (e, &v) in self.edge_var.iter().enumerate() {
            self.v2c[e] = clamp(self.total[v as usize] - self.c2v[e]);
        }
    }

    /// Hard decisions on the intermediate symbols.
    pub fn intermediate(&self) -> Vec<u8> {
        self.total.iter().map(|&l| (l < T::zero()) as u8).collect()
    }

    /// Hard-decision message.
    pub fn message(&self) -> Vec<u8> {
        self.code
            .precode
            .info_positions
            .iter()
            .map(|&p| (self.total[p as usize] < T::zero()) as u8)
            .collect()
    }

    fn message_errors(&self, truth: &[u8]) -> usize {
        self.code
            .precode
            .info_positions
            .iter()
            .zip(truth)
            .filter(|(&p, &b)| (self.total[p as usize] < T::zero()) as u8 != b)
            .count()
    }

    /// Runs up to `cfg.max_iters` flooding iterations.
    pub fn attempt(&mut self, cfg: &SpaConfig, criterion: SuccessCriterion<'_>) -> AttemptOutcome {
        let mut best = usize::MAX;
        let mut since_best = 0;
        for it in 1..=cfg.max_iters {
            self.iterate_once();
            match criterion {
                SuccessCriterion::Genie(truth) => {
                    let errs = self.message_errors(truth);
                    if errs == 0 {
                        return AttemptOutcome {
                            success: true,
                            iterations: it,
                        };
                    }
                    if errs < best {
                        best = errs;
                        since_best = 0;
                    } else {
                        since_best += 1;
                        if cfg.stall_iters.is_some_and(|s| since_best >= s) {
                            return AttemptOutcome {
                                success: false,
                                iterations: it,
                            };
                        }
                    }
                }
                SuccessCriterion::Checksum => {
                    let word = self.intermediate();
                    if self.code.precode.satisfies_checks(&word)
                        && checksum_ok(&self.code.precode.message(&word))
                    {
                        return AttemptOutcome {
                            success: true,
                            iterations: it,
                        };
                    }
                }
            }
        }
        AttemptOutcome {
            success: false,
            iterations: cfg.max_iters,
        }
    }
}

/// Cold decode of a fixed set of output symbols.
pub fn sp_decode<T: Scalar>(
    llrs: &[T],
    edges: &[Neighbors],
    code: &RaptorCode,
    max_iters: usize,
    criterion: SuccessCriterion<'_>,
) -> Result<(Vec<u8>, bool)> {
    let mut dec = RaptorDecoder::new(code);
    dec.push_outputs_with_edges(llrs, edges)?;
    let cfg = SpaConfig {
        max_iters,
        stall_iters: None,
    };
    let out = dec.attempt(&cfg, criterion);
    Ok((dec.message(), out.success))
}

/// When decode attempts happen as output symbols arrive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatelessSchedule {
    /// Symbols between attempts.
    pub cadence: usize,
    /// Symbols received at the first attempt.
    pub start: usize,
    /// Largest number of symbols the stage may consume.
    pub cap: usize,
}

impl RatelessSchedule {
    /// Attempts every `ceil(k/16)` symbols, starting at the first checkpoint
    /// that reaches the Gaussian capacity bound `k / log2(1 + snr)` and
    /// ending at `cap_factor` times that bound.
    pub fn for_snr(k: usize, snr: f64, cap_factor: f64) -> Self {
        let cadence = k.div_ceil(16).max(1);
        let ideal = k as f64 / (1.0 + snr).log2();
        let start = ((ideal / cadence as f64).ceil() as usize).max(1) * cadence;
        let cap = if ideal.is_finite() {
            (ideal * cap_factor).floor() as usize
        } else {
            usize::MAX
        };
        Self {
            cadence,
            start,
            cap,
        }
    }

    pub fn checkpoints(&self) -> impl Iterator<Item = usize> + '_ {
        (0..)
            .map(move |a| self.start + a * self.cadence)
            .take_while(move |&n| n <= self.cap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatelessOutcome {
    pub success: bool,
    /// Symbols received at the successful attempt, or at the last attempt.
    pub symbols_consumed: usize,
    pub attempts: usize,
    pub iterations: usize,
    pub message: Vec<u8>,
}

/// Feeds `llrs` to a decoder checkpoint by checkpoint until an attempt
/// succeeds, the stream runs out or the cap is reached.
pub fn decode_rateless<T: Scalar>(
    code: &RaptorCode,
    llrs: &[T],
    schedule: &RatelessSchedule,
    cfg: &SpaConfig,
    criterion: SuccessCriterion<'_>,
) -> RatelessOutcome {
    let mut dec = RaptorDecoder::new(code);
    let mut attempts = 0;
    let mut iterations = 0;
    let mut consumed = 0;
    for n in schedule.checkpoints() {
        if n > llrs.len() {
            break;
        }
        dec.push_outputs(&llrs[dec.n_outputs()..n]);
        consumed = n;
        attempts += 1;
        let out = dec.attempt(cfg, criterion);
        iterations += out.iterations;
        if out.success {
            return RatelessOutcome {
                success: true,
                symbols_consumed: n,
                attempts,
                iterations,
                message: dec.message(),
            };
        }
    }
    RatelessOutcome {
        success: false,
        symbols_consumed: consumed,
        attempts,
        iterations,
        message: dec.message(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crc_round_trip() {
        let payload: Vec<u8> = (0..100).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let msg = append_checksum(&payload);
        assert!(checksum_ok(&msg));
        let mut bad = msg.clone();
        bad[5] ^= 1;
        assert!(!checksum_ok(&bad));
        // CCITT-FALSE check value for ASCII "123456789".
        let bits: Vec<u8> = b"123456789"
            .iter()
            .flat_map(|&c| (0..8).rev().map(move |b| c >> b & 1))
            .collect();
        assert_eq!(crc16(&bits), 0x29b1);
    }

    #[test]
    fn schedule_layout() {
        let s = RatelessSchedule::for_snr(1024, 0.1, 4.0);
        assert_eq!(s.cadence, 64);
        assert_eq!(s.start % 64, 0);
        assert!(s.start as f64 >= 1024.0 / 1.1f64.log2());
        assert!((s.start as f64) < 1024.0 / 1.1f64.log2() + 64.0);
        assert!(s.checkpoints().all(|n| n <= s.cap));
    }
}
