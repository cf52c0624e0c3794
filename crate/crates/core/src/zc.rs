//! Zadoff-Chu root sequences, cyclically shifted preambles and the preamble
//! bank used on the random-access channel.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// How to treat a non-prime sequence length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LengthCheck {
    /// Reject non-prime lengths.
    Strict,
    /// Accept them with a logged warning.
    #[default]
    Warn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZcRoot<T> {
    pub root: usize,
    pub samples: Vec<Complex<T>>,
}

impl<T> ZcRoot<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preamble<T> {
    pub root: usize,
    pub preamble_index: usize,
    pub shift_step: usize,
    /// One-based timing group.
    pub delay_index: usize,
    pub shift: usize,
    pub samples: Vec<Complex<T>>,
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn warn_non_prime(n_zc: usize) {
    static WARNED: Mutex<BTreeSet<usize>> = Mutex::new(BTreeSet::new());
    let fresh = WARNED.lock().map(|mut w| w.insert(n_zc)).unwrap_or(true);
    if fresh {
        log::warn!("Zadoff-Chu length {n_zc} is not prime; cross-correlations are not ideal");
    }
}

/// `z_r[n] = exp(-j pi r n (n+1) / N)`.
pub fn generate_root<T: Scalar>(root: usize, n_zc: usize, check: LengthCheck) -> Result<ZcRoot<T>> {
    if n_zc < 2 || root == 0 || root >= n_zc {
        return Err(Error::InvalidRoot { root, n_zc });
    }
    if !is_prime(n_zc) {
        match check {
            LengthCheck::Strict => return Err(Error::NonPrimeLength(n_zc)),
            LengthCheck::Warn => warn_non_prime(n_zc),
        }
    }
    // Reduce the phase index modulo 2N in integers so long sequences keep
    // full precision.
    let two_n = 2 * n_zc as u128;
    let samples = (0..n_zc)
        .map(|n| {
            let n = n as u128;
            let m = (root as u128 * n * (n + 1)) % two_n;
            let angle = -T::PI() * T::of(m as f64) / T::of_usize(n_zc);
            Complex::new(angle.cos(), angle.sin())
        })
        .collect();
    Ok(ZcRoot { root, samples })
}

/// Cyclically shifts `root` by `i * n_cs + (j - 1) * tau_samples`.
pub fn derive_preamble<T: Scalar>(
    root: &ZcRoot<T>,
    i: usize,
    n_cs: usize,
    j: usize,
    tau_samples: usize,
) -> Result<Preamble<T>> {
    if j == 0 {
        return Err(invalid("timing index is one-based"));
    }
    let n = root.len();
    let shift = i * n_cs + (j - 1) * tau_samples;
    if shift >= n {
        return Err(Error::ShiftOverflow { shift, n_zc: n });
    }
    Ok(Preamble {
        root: root.root,
        preamble_index: i,
        shift_step: n_cs,
        delay_index: j,
        shift,
        samples: cyclic_shift(&root.samples, shift),
    })
}

pub(crate) fn cyclic_shift<T: Copy>(x: &[T], shift: usize) -> Vec<T> {
    let n = x.len();
    (0..n).map(|k| x[(k + shift) % n]).collect()
}

/// Complex cyclic correlation `sum_n a[n] conj(b[(n + s) mod N])` for every lag `s`.
pub fn cyclic_correlate_complex<T: Scalar>(
    a: &[Complex<T>],
    b: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    Ok((0..n)
        .map(|s| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (k, &ak) in a.iter().enumerate() {
                let idx = if k + s >= n { k + s - n } else { k + s };
                acc += ak * b[idx].conj();
            }
            acc
        })
        .collect())
}

/// Magnitude of the cyclic correlation at every lag.
pub fn cyclic_correlate<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Result<Vec<T>> {
    Ok(cyclic_correlate_complex(a, b)?
        .into_iter()
        .map(|c| c.norm())
        .collect())
}

/// Layout of the preamble bank.
#[derive(Debug, Clone, PartialEq)]
pub struct BankConfig {
    pub n_zc: usize,
    pub n_preambles: usize,
    pub n_timing: usize,
    pub tau_samples: usize,
    /// Shift between preambles of one root. Defaults to `n_timing * tau_samples`,
    /// the smallest spacing that keeps timing copies of neighbours apart.
    pub n_cs: Option<usize>,
    /// Root indices. Chosen greedily for low cross-correlation when absent.
    pub roots: Option<Vec<usize>>,
    pub check: LengthCheck,
}

impl BankConfig {
    pub fn new(n_zc: usize, n_preambles: usize, n_timing: usize) -> Self {
        Self {
            n_zc,
            n_preambles,
            n_timing,
            tau_samples: 1,
            n_cs: None,
            roots: None,
            check: LengthCheck::Warn,
        }
    }
}

/// All `(preamble, timing)` signatures a cell may observe.
///
/// Preamble `i` uses root `roots[i / per_root]` with base shift
/// `(i % per_root) * n_cs`; timing group `j` adds `(j - 1) * tau_samples`.
#[derive(Debug, Clone)]
pub struct PreambleBank<T> {
    pub n_zc: usize,
    pub n_preambles: usize,
    pub n_timing: usize,
    pub n_cs: usize,
    pub tau_samples: usize,
    pub per_root: usize,
    pub roots: Vec<ZcRoot<T>>,
}

impl<T: Scalar> PreambleBank<T> {
    pub fn new(cfg: &BankConfig) -> Result<Self> {
        if cfg.n_preambles == 0 || cfg.n_timing == 0 || cfg.tau_samples == 0 {
            return Err(invalid("bank dimensions must be positive"));
        }
        let n_cs = cfg.n_cs.unwrap_or(cfg.n_timing * cfg.tau_samples);
        if n_cs == 0 {
            return Err(invalid("n_cs must be positive"));
        }
        let span = (cfg.n_timing - 1) * cfg.tau_samples;
        if span >= cfg.n_zc {
            return Err(Error::ShiftOverflow {
                shift: span,
                n_zc: cfg.n_zc,
            });
        }
        let per_root = ((cfg.n_zc - span - 1) / n_cs + 1).min(cfg.n_preambles);
        let roots_needed = cfg.n_preambles.div_ceil(per_root);
        let root_ids = match &cfg.roots {
            Some(r) => {
                if r.len() < roots_needed {
                    return Err(invalid(format!(
                        "{} roots given but {roots_needed} are needed",
                        r.len()
                    )));
                }
                r[..roots_needed].to_vec()
            }
            None => select_roots::<T>(cfg.n_zc, roots_needed, cfg.check)?,
        };
        let roots = root_ids
            .iter()
            .map(|&r| generate_root(r, cfg.n_zc, cfg.check))
            .collect::<Result<Vec<_>>>()?;
        let bank = Self {
            n_zc: cfg.n_zc,
            n_preambles: cfg.n_preambles,
            n_timing: cfg.n_timing,
            n_cs,
            tau_samples: cfg.tau_samples,
            per_root,
            roots,
        };
        bank.check_collisions()?;
        Ok(bank)
    }

    fn check_collisions(&self) -> Result<()> {
        let mut seen: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for i in 0..self.n_preambles {
            for j in 1..=self.n_timing {
                let key = self.signature(i, j);
                if let Some(prev) = seen.insert(key, (i, j)) {
                    return Err(Error::ShiftCollision {
                        first: prev,
                        second: (i, j),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.n_preambles * self.n_timing
    }

    /// Flat cell index of `(i, j)` with one-based `j`.
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        i * self.n_timing + (j - 1)
    }

    /// `(root slot, total shift)` of cell `(i, j)`.
    pub fn signature(&self, i: usize, j: usize) -> (usize, usize) {
        let slot = i / self.per_root;
        let shift = (i % self.per_root) * self.n_cs + (j - 1) * self.tau_samples;
        (slot, shift)
    }

    pub fn preamble(&self, i: usize, j: usize) -> Result<Preamble<T>> {
        if i >= self.n_preambles || j == 0 || j > self.n_timing {
            return Err(Error::MissingPreamble {
                preamble: i,
                timing: j,
            });
        }
        let (slot, _) = self.signature(i, j);
        let mut p = derive_preamble(
            &self.roots[slot],
            i % self.per_root,
            self.n_cs,
            j,
            self.tau_samples,
        )?;
        p.preamble_index = i;
        Ok(p)
    }
}

/// Greedy root selection: start from root 1 and repeatedly add the root
/// coprime to `n_zc` whose worst correlation sidelobe, counting its own
/// off-peak autocorrelation and its cross-correlation with every root already
/// chosen, is smallest. Prime lengths have ideal correlations, so the first
/// `count` roots are taken directly.
pub fn select_roots<T: Scalar>(
    n_zc: usize,
    count: usize,
    check: LengthCheck,
) -> Result<Vec<usize>> {
    let candidates: Vec<usize> = (1..n_zc).filter(|&r| gcd(r, n_zc) == 1).collect();
    if candidates.len() < count {
        return Err(invalid(format!(
            "length {n_zc} admits only {} usable roots, {count} needed",
            candidates.len()
        )));
    }
    if is_prime(n_zc) {
        return Ok(candidates[..count].to_vec());
    }
    let seqs: Vec<ZcRoot<T>> = candidates
        .iter()
        .map(|&r| generate_root(r, n_zc, check))
        .collect::<Result<_>>()?;
    let peak = |a: &ZcRoot<T>, b: &ZcRoot<T>, skip_zero: bool| -> Result<f64> {
        Ok(cyclic_correlate(&a.samples, &b.samples)?
            .into_iter()
            .enumerate()
            .filter(|&(s, _)| !(skip_zero && s == 0))
            .fold(0.0f64, |m, (_, v)| m.max(v.as_f64())))
    };
    let mut worst: Vec<f64> = seqs
        .iter()
        .map(|s| peak(s, s, true))
        .collect::<Result<_>>()?;
    let mut chosen = vec![0usize];
    while chosen.len() < count {
        let last = &seqs[*chosen.last().unwrap()];
        let mut best: Option<(f64, usize)> = None;
        for c in 0..candidates.len() {
            if chosen.contains(&c) {
                continue;
            }
            worst[c] = worst[c].max(peak(&seqs[c], last, false)?);
            // Ties resolve to the smaller root; the tolerance absorbs rounding.
            if best.is_none_or(|(b, _)| worst[c] < b - 1e-9) {
                best = Some((worst[c], c));
            }
        }
        chosen.push(best.expect("candidates remain").1);
    }
    Ok(chosen.into_iter().map(|c| candidates[c]).collect())
}
