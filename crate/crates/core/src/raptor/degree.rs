//! Output-degree distributions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Probability mass over output-symbol degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    /// `(degree, probability)` sorted by degree, zero entries dropped.
    terms: Vec<(usize, f64)>,
    cdf: Vec<f64>,
}

const SUM_TOLERANCE: f64 = 1e-9;

impl DegreeDistribution {
    /// Builds a distribution whose coefficients must already sum to one.
    pub fn new(terms: &[(usize, f64)]) -> Result<Self> {
        let total = Self::check_terms(terms)?;
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(invalid(format!(
                "degree coefficients sum to {total}, not 1"
            )));
        }
        Ok(Self::build(terms, 1.0))
    }

    /// Builds a distribution after dividing by the coefficient sum.
    pub fn normalized(terms: &[(usize, f64)]) -> Result<Self> {
        let total = Self::check_terms(terms)?;
        if total <= 0.0 {
            return Err(invalid("degree coefficients have zero mass"));
        }
        Ok(Self::build(terms, total))
    }

    fn check_terms(terms: &[(usize, f64)]) -> Result<f64> {
        let mut total = 0.0;
        for &(d, p) in terms {
            if d == 0 {
                return Err(invalid("degree 0 is not allowed"));
            }
            if !(p >= 0.0 && p.is_finite()) {
                return Err(invalid(format!("coefficient for degree {d} is {p}")));
            }
            total += p;
        }
        Ok(total)
    }

    fn build(terms: &[(usize, f64)], scale: f64) -> Self {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        let mut sorted = terms.to_vec();
        sorted.sort_by_key(|t| t.0);
        for (d, p) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == d => last.1 += p / scale,
                _ => merged.push((d, p / scale)),
            }
        }
        merged.retain(|t| t.1 > 0.0);
        let mut acc = 0.0;
        let cdf = merged
            .iter()
            .map(|t| {
                acc += t.1;
                acc
            })
            .collect();
        Self { terms: merged, cdf }
    }

    /// The fifteen-term distribution with maximum degree 300 used for the
    /// low-SNR link.
    pub fn low_snr() -> Self {
        Self::new(&[
            (1, 0.0174),
            (2, 0.3488),
            (3, 0.2309),
            (4, 0.0695),
            (5, 0.0873),
            (6, 0.0002),
            (7, 0.0805),
            (8, 0.0004),
            (11, 0.0191),
            (12, 0.0518),
            (23, 0.0123),
            (24, 0.0310),
            (59, 0.0220),
            (60, 0.0020),
            (300, 0.0268),
        ])
        .expect("coefficients sum to one")
    }

    /// Every output symbol has degree `d`.
    pub fn point(d: usize) -> Result<Self> {
        Self::new(&[(d, 1.0)])
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn max_degree(&self) -> usize {
        self.terms.last().map_or(0, |t| t.0)
    }

    pub fn coefficient(&self, d: usize) -> f64 {
        self.terms
            .binary_search_by_key(&d, |t| t.0)
            .map_or(0.0, |k| self.terms[k].1)
    }

    pub fn total_mass(&self) -> f64 {
        self.terms.iter().map(|t| t.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.terms.iter().map(|&(d, p)| d as f64 * p).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.cdf.last().copied().unwrap_or(1.0);
        let k = self.cdf.partition_point(|&c| c <= u);
        self.terms[k.min(self.terms.len() - 1)].0
    }
}

pub fn sample_degree<R: Rng + ?Sized>(dd: &DegreeDistribution, rng: &mut R) -> usize {
    dd.sample(rng)
}

/// One `d coefficient` pair per line.
impl fmt::Display for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(d, p) in &self.terms {
            writeln!(f, "{d} {p}")?;
        }
        Ok(())
    }
}

/// Parses `d coefficient` lines. Blank lines and `#` comments are skipped.
impl FromStr for DegreeDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (n, line) in s.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let bad = || invalid(format!("line {}: expected `degree coefficient`", n + 1));
            let d: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
            let p: f64 = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
            if parts.next().is_some() {
                return Err(bad());
            }
            terms.push((d, p));
        }
        Self::new(&terms)
    }
}
