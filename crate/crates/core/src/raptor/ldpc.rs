//! High-rate LDPC precode with a seeded random parity matrix.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::seed::derive_seed;

const COLUMN_WEIGHT: usize = 3;
const MAX_CONSTRUCTION_ATTEMPTS: u64 = 64;

/// Systematic LDPC code of length `n` carrying `k` message bits.
#[derive(Debug, Clone, PartialEq)]
pub struct LdpcPrecode {
    pub k: usize,
    pub n: usize,
    /// Seed that produced a full-rank parity matrix.
    pub seed: u64,
    /// Column indices of each parity check.
    pub checks: Vec<Vec<u32>>,
    /// Codeword positions holding the message, in message order.
    pub info_positions: Vec<u32>,
    /// `(position, message indices)` defining each parity bit.
    parity: Vec<(u32, Vec<u32>)>,
}

type Row = Vec<u64>;

fn get(row: &Row, c: usize) -> bool {
    row[c / 64] >> (c % 64) & 1 == 1
}

fn xor_into(dst: &mut Row, src: &Row) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

impl LdpcPrecode {
    /// Builds a code with `n - k` checks, each column of the parity matrix
    /// touching three distinct checks. Seeds are retried until the matrix has
    /// full row rank.
    pub fn new(k: usize, n: usize, seed: u64) -> Result<Self> {
        if k == 0 || n < k {
            return Err(invalid(format!(
                "precode needs 1 <= k <= n, got k={k}, n={n}"
            )));
        }
        for attempt in 0..MAX_CONSTRUCTION_ATTEMPTS {
            if let Some(code) = Self::try_build(k, n, seed.wrapping_add(attempt)) {
                return Ok(code);
            }
        }
        Err(Error::Numerical(format!(
            "no full-rank parity matrix for k={k}, n={n} after {MAX_CONSTRUCTION_ATTEMPTS} seeds"
        )))
    }

    fn try_build(k: usize, n: usize, seed: u64) -> Option<Self> {
        let m = n - k;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[0x4c44, seed]));
        let mut checks = vec![Vec::new(); m];
        if m > 0 {
            let w = COLUMN_WEIGHT.min(m);
            for c in 0..n {
                for r in sample(&mut rng, m, w) {
                    checks[r].push(c as u32);
                }
            }
        }
        let words = n.div_ceil(64);
        let mut rows: Vec<Row> = checks
            .iter()
            .map(|cols| {
                let mut row = vec![0u64; words];
                for &c in cols {
                    row[c as usize / 64] |= 1 << (c % 64);
                }
                row
            })
            .collect();
        // Reduced row echelon form, taking pivots from the highest column
        // first so parity bits gather at the end of the codeword.
        let mut pivots = Vec::with_capacity(m);
        let mut col = n;
        for r in 0..m {
            let found = loop {
                if col == 0 {
                    break None;
                }
                col -= 1;
                if let Some(p) = (r..m).find(|&p| get(&rows[p], col)) {
                    break Some(p);
                }
            };
            let p = found?;
            rows.swap(r, p);
            let pivot_row = rows[r].clone();
            for (q, row) in rows.iter_mut().enumerate() {
                if q != r && get(row, col) {
                    xor_into(row, &pivot_row);
                }
            }
            pivots.push(col);
        }
        let mut is_pivot = vec![false; n];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let info_positions: Vec<u32> = (0..n).filter(|&c| !is_pivot[c]).map(|c| c as u32).collect();
        let mut message_index = vec![u32::MAX; n];
        for (i, &c) in info_positions.iter().enumerate() {
            message_index[c as usize] = i as u32;
        }
        let parity = pivots
            .iter()
            .zip(&rows)
            .map(|(&pc, row)| {
                let deps = (0..n)
                    .filter(|&c| c != pc && get(row, c))
                    .map(|c| message_index[c])
                    .collect();
                (pc as u32, deps)
            })
            .collect();
        Some(Self {
            k,
            n,
            seed,
            checks,
            info_positions,
            parity,
        })
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k {
            return Err(Error::LengthMismatch {
                left: message.len(),
                right: self.k,
            });
        }
        let mut word = vec![0u8; self.n];
        for (&pos, &b) in self.info_positions.iter().zip(message) {
            word[pos as usize] = b & 1;
        }
        for (pos, deps) in &self.parity {
            word[*pos as usize] = deps.iter().fold(0, |acc, &i| acc ^ message[i as usize] & 1);
        }
        Ok(word)
    }

    /// Extracts the message from a codeword.
    pub fn message(&self, word: &[u8]) -> Vec<u8> {
        self.info_positions
            .iter()
            .map(|&p| word[p as usize])
            .collect()
    }

    pub fn satisfies_checks(&self, word: &[u8]) -> bool {
        self.checks
            .iter()
            .all(|cols| cols.iter().fold(0, |acc, &c| acc ^ word[c as usize]) == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::seed_stream;
    use rand::Rng;

    #[test]
    fn codewords_satisfy_every_check() {
        let code = LdpcPrecode::new(1024, 1045, 5).unwrap();
        assert_eq!(code.checks.len(), 21);
        let mut rng = seed_stream(3, 0, 0);
        for _ in 0..10 {
            let msg: Vec<u8> = (0..1024).map(|_| rng.random_range(0..2)).collect();
            let word = code.encode(&msg).unwrap();
            assert!(code.satisfies_checks(&word));
            assert_eq!(code.message(&word), msg);
        }
    }

    #[test]
    fn column_weight_three() {
        let code = LdpcPrecode::new(200, 220, 1).unwrap();
        let mut weight = vec![0; 220];
        for row in &code.checks {
            for &c in row {
                weight[c as usize] += 1;
            }
        }
        assert!(weight.iter().all(|&w| w == 3));
    }

    #[test]
    fn rate_one_is_identity() {
        let code = LdpcPrecode::new(8, 8, 0).unwrap();
        let msg = vec![1, 0, 1, 1, 0, 0, 1, 0];
        assert_eq!(code.encode(&msg).unwrap(), msg);
    }

    #[test]
    fn flipping_one_bit_breaks_a_check() {
        let code = LdpcPrecode::new(100, 110, 2).unwrap();
        let mut word = code.encode(&[0; 100]).unwrap();
        word[17] ^= 1;
        assert!(!code.satisfies_checks(&word));
    }
}
