//! Deterministic random streams.
//!
//! Every stochastic quantity in a run is drawn from a stream addressed by
//! `(base, trial, lane)`. The base seed and trial index form the ChaCha key
//! and the lane selects the ChaCha stream, so distinct addresses never share
//! keystream.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The random number generator used throughout the crate.
pub type RandomStream = ChaCha12Rng;

/// Well-known lanes. Callers may use any other `u64` as well.
pub mod lanes {
    pub const ARRIVALS: u64 = 1;
    pub const PLACEMENT: u64 = 2;
    pub const PREAMBLE: u64 = 3;
    pub const PRACH_NOISE: u64 = 4;
    pub const WEIGHTS: u64 = 5;
    pub const CHANNEL: u64 = 6;
    pub const EFFICIENCY: u64 = 7;
    pub const MESSAGES: u64 = 8;
    pub const ACB: u64 = 9;
}

const KEY_TAG: u64 = 0x6d61_7373_6163_6373;

/// Returns the stream for `(base, trial, lane)`.
pub fn seed_stream(base: u64, trial: u64, lane: u64) -> RandomStream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&base.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&KEY_TAG.to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(lane);
    rng
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds several integers into one 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x243f_6a88_85a3_08d3, |acc, &p| mix64(acc ^ mix64(p)))
}

/// Seed of the LT generator a device uses, known to the base station from
/// the device's preamble and timing index alone.
pub fn device_code_seed(preamble: usize, timing: usize) -> u64 {
    derive_seed(&[0x4c54, preamble as u64, timing as u64])
}

/// Seed of the channel adapter for the `slot`-th device sharing a cell.
pub fn device_adapter_seed(preamble: usize, timing: usize, slot: usize) -> u64 {
    derive_seed(&[0x4144, preamble as u64, timing as u64, slot as u64])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_address_same_sequence() {
        let a: Vec<u64> = seed_stream(7, 3, 2).random_iter().take(64).collect();
        let b: Vec<u64> = seed_stream(7, 3, 2).random_iter().take(64).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn lanes_are_uncorrelated() {
        let mut a = seed_stream(11, 0, 0);
        let mut b = seed_stream(11, 0, 1);
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| a.random::<f64>()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.random::<f64>()).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in xs.iter().zip(&ys) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
        let rho = sxy / (sxx * syy).sqrt();
        assert!(rho.abs() < 0.05, "rho = {rho}");
    }

    #[test]
    fn trial_and_base_change_the_stream() {
        let x = seed_stream(1, 0, 0).random::<u64>();
        assert_ne!(x, seed_stream(1, 1, 0).random::<u64>());
        assert_ne!(x, seed_stream(2, 0, 0).random::<u64>());
        assert_ne!(x, seed_stream(1, 0, 1).random::<u64>());
    }

    #[test]
    fn device_seeds_are_position_dependent() {
        assert_eq!(device_code_seed(3, 5), device_code_seed(3, 5));
        assert_ne!(device_code_seed(3, 5), device_code_seed(5, 3));
        assert_ne!(device_adapter_seed(3, 5, 0), device_adapter_seed(3, 5, 1));
    }
}
