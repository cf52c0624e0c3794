//! Raptor encoder: LDPC precode followed by an LT code, plus channel adapters.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::degree::DegreeDistribution;
use super::ldpc::LdpcPrecode;
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct RaptorCodeSpec {
    pub k: usize,
    pub precode_rate: f64,
    pub degree_dist: DegreeDistribution,
    pub graph_seed: u64,
}

impl RaptorCodeSpec {
    /// Rate-0.98 precode and the low-SNR degree distribution.
    pub fn new(k: usize, graph_seed: u64) -> Self {
        Self {
            k,
            precode_rate: 0.98,
            degree_dist: DegreeDistribution::low_snr(),
            graph_seed,
        }
    }

    /// Number of intermediate (precoded) symbols.
    pub fn k_prime(&self) -> usize {
        (self.k as f64 / self.precode_rate).round() as usize
    }
}

/// Neighbour list of one output symbol.
pub type Neighbors = Vec<u32>;

/// XORs `input` over each neighbour set.
pub fn lt_output_bits(input: &[u8], edges: &[Neighbors]) -> Vec<u8> {
    edges
        .iter()
        .map(|nb| nb.iter().fold(0, |acc, &v| acc ^ input[v as usize]))
        .collect()
}

fn draw_neighbors<R: Rng + ?Sized>(
    dd: &DegreeDistribution,
    n_inputs: usize,
    rng: &mut R,
) -> Neighbors {
    let d = dd.sample(rng).min(n_inputs);
    sample(rng, n_inputs, d)
        .into_iter()
        .map(|v| v as u32)
        .collect()
}

/// Generates `count` LT output symbols from `input`, drawing degrees and
/// neighbours from `rng`.
pub fn lt_encode<R: Rng + ?Sized>(
    input: &[u8],
    count: usize,
    dd: &DegreeDistribution,
    rng: &mut R,
) -> (Vec<u8>, Vec<Neighbors>) {
    let edges: Vec<Neighbors> = (0..count)
        .map(|_| draw_neighbors(dd, input.len(), rng))
        .collect();
    (lt_output_bits(input, &edges), edges)
}

/// A constructed Raptor code. Output symbol `t` has a neighbour set derived
/// from `(graph_seed, t)` alone, so encoder and decoder rebuild the same graph
/// from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RaptorCode {
    pub spec: RaptorCodeSpec,
    pub precode: LdpcPrecode,
}

impl RaptorCode {
    pub fn new(spec: RaptorCodeSpec) -> Result<Self> {
        if !(spec.precode_rate > 0.0 && spec.precode_rate <= 1.0) {
            return Err(invalid(format!(
                "precode rate {} outside (0, 1]",
                spec.precode_rate
            )));
        }
        if spec.k == 0 {
            return Err(invalid("message length must be positive"));
        }
        let precode = LdpcPrecode::new(spec.k, spec.k_prime(), spec.graph_seed)?;
        Ok(Self { spec, precode })
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    pub fn k_prime(&self) -> usize {
        self.precode.n
    }

    pub fn neighbors(&self, t: usize) -> Neighbors {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[self.spec.graph_seed, t as u64]));
        draw_neighbors(&self.spec.degree_dist, self.k_prime(), &mut rng)
    }

    pub fn precode(&self, message: &[u8]) -> Result<Vec<u8>> {
        self.precode.encode(message)
    }

    /// Output symbols `start..start + count` of the codeword for `message`.
    pub fn encode_range(&self, message: &[u8], start: usize, count: usize) -> Result<Vec<u8>> {
        let inter = self.precode(message)?;
        Ok((start..start + count)
            .map(|t| {
                self.neighbors(t)
                    .iter()
                    .fold(0, |acc, &v| acc ^ inter[v as usize])
            })
            .collect())
    }

    pub fn encode(&self, message: &[u8], count: usize) -> Result<Vec<u8>> {
        self.encode_range(message, 0, count)
    }
}

/// Reproducible i.i.d. binary scrambling sequence. The seedless stream is all
/// zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdapterStream {
    pub seed: Option<u64>,
}

impl AdapterStream {
    pub fn new(seed: u64) -> Self {
        Self { seed: Some(seed) }
    }

    pub fn zero() -> Self {
        Self { seed: None }
    }

    /// The first `n` bits.
    pub fn bits(&self, n: usize) -> Vec<u8> {
        let Some(seed) = self.seed else {
            return vec![0; n];
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[0xada, seed]));
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let w = rng.next_u32();
            for b in 0..32 {
                if out.len() == n {
                    break;
                }
                out.push((w >> b & 1) as u8);
            }
        }
        out
    }
}

/// `d = c XOR t`.
pub fn adapter_apply(bits: &[u8], adapter: &AdapterStream) -> Vec<u8> {
    bits.iter()
        .zip(adapter.bits(bits.len()))
        .map(|(&c, t)| c ^ t)
        .collect()
}

/// `v = u (1 - 2t)`.
pub fn adapter_unapply<T: Scalar>(llrs: &[T], adapter: &AdapterStream) -> Vec<T> {
    llrs.iter()
        .zip(adapter.bits(llrs.len()))
        .map(|(&u, t)| if t == 1 { -u } else { u })
        .collect()
}

/// BPSK mapping `0 -> +1`, `1 -> -1`.
pub fn bpsk<T: Scalar>(bits: &[u8]) -> Vec<T> {
    bits.iter()
        .map(|&b| if b == 0 { T::one() } else { -T::one() })
        .collect()
}

pub(crate) fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::seed_stream;

    #[test]
    fn k_prime_for_1024() {
        let spec = RaptorCodeSpec::new(1024, 0);
        assert_eq!(spec.k_prime(), 1045);
        assert!((1024.0 / 1045.0 - 0.98f64).abs() < 1e-3);
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let mut rng = seed_stream(0, 0, 0);
        let (bits, edges) = lt_encode(&[0u8; 50], 40, &DegreeDistribution::low_snr(), &mut rng);
        assert!(bits.iter().all(|&b| b == 0));
        assert_eq!(edges.len(), 40);
    }

    #[test]
    fn degree_one_copies() {
        let mut rng = seed_stream(0, 0, 0);
        let input: Vec<u8> = (0..20).map(|i| (i % 3 == 0) as u8).collect();
        let (bits, edges) = lt_encode(&input, 30, &DegreeDistribution::point(1).unwrap(), &mut rng);
        for (b, nb) in bits.iter().zip(&edges) {
            assert_eq!(nb.len(), 1);
            assert_eq!(*b, input[nb[0] as usize]);
        }
    }

    #[test]
    fn neighbour_sets_are_distinct_and_reproducible() {
        let code = RaptorCode::new(RaptorCodeSpec::new(64, 9)).unwrap();
        for t in 0..200 {
            let nb = code.neighbors(t);
            let mut s = nb.clone();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), nb.len());
            assert!(nb.iter().all(|&v| (v as usize) < code.k_prime()));
            assert_eq!(nb, code.neighbors(t));
        }
    }

    #[test]
    fn adapter_sign_rule() {
        let a = AdapterStream::new(4);
        let t = a.bits(64);
        let ones: Vec<usize> = (0..64).filter(|&i| t[i] == 1).collect();
        let c = vec![1u8; 64];
        let d = adapter_apply(&c, &a);
        for &i in &ones {
            assert_eq!(d[i], 0);
        }
        assert_eq!(adapter_apply(&d, &a), c);
        let u = vec![2.0f64; 64];
        let v = adapter_unapply(&u, &a);
        for i in 0..64 {
            assert_eq!(v[i], if t[i] == 1 { -2.0 } else { 2.0 });
        }
        assert_eq!(a.bits(100)[..64], t[..]);
    }

    #[test]
    fn zero_adapter_is_identity() {
        let z = AdapterStream::zero();
        let c = vec![1u8, 0, 1, 1];
        assert_eq!(adapter_apply(&c, &z), c);
        assert_eq!(adapter_unapply(&[0.5f64, -1.0], &z), vec![0.5, -1.0]);
    }

    #[test]
    fn hand_sign_rule() {
        // c = 1, t = 1 gives d = 0; u = +2, t = 1 gives v = -2.
        let a = AdapterStream::new(4);
        let t = a.bits(64);
        let i = t.iter().position(|&b| b == 1).unwrap();
        let mut c = vec![0u8; 64];
        c[i] = 1;
        assert_eq!(adapter_apply(&c, &a)[i], 0);
        let mut u = vec![0.0f64; 64];
        u[i] = 2.0;
        assert_eq!(adapter_unapply(&u, &a)[i], -2.0);
    }
}
