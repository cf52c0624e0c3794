//! Random-access phase: arrivals, preamble and timing-group draws, the
//! composite PRACH signal and the iterative load estimator.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::zc::{cyclic_correlate_complex, PreambleBank};

/// Basic LTE sampling period in seconds.
pub const LTE_SAMPLE_PERIOD: f64 = 32.552e-9;
pub const LIGHT_SPEED: f64 = 3.0e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    /// Cell radius in meters.
    pub radius: f64,
    /// Delay quantum in seconds.
    pub tau: f64,
    pub light_speed: f64,
}

impl Default for CellGeometry {
    /// 1.5 km cell with an eight-sample delay quantum; 20 timing groups.
    fn default() -> Self {
        Self {
            radius: 1500.0,
            tau: 8.0 * LTE_SAMPLE_PERIOD,
            light_speed: LIGHT_SPEED,
        }
    }
}

impl CellGeometry {
    /// Geometry with exactly `n_timing` rings over a cell of the given radius.
    pub fn with_groups(radius: f64, n_timing: usize) -> Self {
        Self {
            radius,
            tau: radius / (LIGHT_SPEED * n_timing as f64),
            light_speed: LIGHT_SPEED,
        }
    }

    pub fn ring_width(&self) -> f64 {
        self.light_speed * self.tau
    }

    pub fn n_timing(&self) -> usize {
        // The small slack keeps exact multiples from rounding up.
        ((self.radius / self.ring_width()) - 1e-9).ceil().max(1.0) as usize
    }

    /// One-based timing group of a device at `distance` meters.
    pub fn timing_group(&self, distance: f64) -> usize {
        let g = (distance / self.ring_width()).ceil() as usize;
        g.clamp(1, self.n_timing())
    }

    /// Distance of a point drawn uniformly over the disk.
    pub fn sample_distance<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.radius * rng.random::<f64>().sqrt()
    }

    /// Probability that a uniformly placed device falls in ring `group`.
    pub fn group_probability(&self, group: usize) -> f64 {
        let w = self.ring_width();
        let outer = (group as f64 * w).min(self.radius);
        let inner = ((group - 1) as f64 * w).min(self.radius);
        (outer * outer - inner * inner) / (self.radius * self.radius)
    }
}

/// Device counts per (preamble, timing group) cell. Timing groups are one-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadMatrix {
    pub n_preambles: usize,
    pub n_timing: usize,
    counts: Vec<u32>,
}

impl LoadMatrix {
    pub fn zeros(n_preambles: usize, n_timing: usize) -> Self {
        Self {
            n_preambles,
            n_timing,
            counts: vec![0; n_preambles * n_timing],
        }
    }

    pub fn from_cells(n_preambles: usize, n_timing: usize, cells: &[(usize, usize)]) -> Self {
        let mut m = Self::zeros(n_preambles, n_timing);
        for &(i, j) in cells {
            m.add(i, j, 1);
        }
        m
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        assert!(i < self.n_preambles && (1..=self.n_timing).contains(&j));
        i * self.n_timing + (j - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.counts[self.idx(i, j)]
    }

    pub fn add(&mut self, i: usize, j: usize, n: u32) {
        let k = self.idx(i, j);
        self.counts[k] += n;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Counts in flat order: preamble-major, timing-minor.
    pub fn as_slice(&self) -> &[u32] {
        &self.counts
    }

    /// Nonzero cells as `((i, j), count)`.
    pub fn occupied(&self) -> impl Iterator<Item = ((usize, usize), u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| ((k / self.n_timing, k % self.n_timing + 1), c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrachObservation<T> {
    pub samples: Vec<Complex<T>>,
    pub noise_variance: T,
    pub per_device_power: T,
}

pub fn sample_arrivals<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let p: f64 = Poisson::new(lambda)
        .expect("positive finite rate")
        .sample(rng);
    p as u64
}

/// Draws `(preamble, timing group)` for each of `l` devices.
pub fn draw_cells<R: Rng + ?Sized>(
    l: usize,
    n_preambles: usize,
    geometry: &CellGeometry,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    (0..l)
        .map(|_| {
            let i = rng.random_range(0..n_preambles);
            let j = geometry.timing_group(geometry.sample_distance(rng));
            (i, j)
        })
        .collect()
}

pub fn assign_devices<R: Rng + ?Sized>(
    l: usize,
    n_preambles: usize,
    geometry: &CellGeometry,
    rng: &mut R,
) -> LoadMatrix {
    let cells = draw_cells(l, n_preambles, geometry, rng);
    LoadMatrix::from_cells(n_preambles, geometry.n_timing(), &cells)
}

pub(crate) fn complex_noise<T: Scalar, R: Rng + ?Sized>(variance: T, rng: &mut R) -> Complex<T> {
    let s = (variance.as_f64() / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(T::of(s * re), T::of(s * im))
}

/// `Y = sum n(i,j) P_(i,j) + Z` with unit per-device power.
pub fn synthesize_prach<T: Scalar, R: Rng + ?Sized>(
    load: &LoadMatrix,
    bank: &PreambleBank<T>,
    noise_variance: T,
    rng: &mut R,
) -> Result<PrachObservation<T>> {
    if let Some(((i, j), _)) = load
        .occupied()
        .find(|&((i, j), _)| i >= bank.n_preambles || j > bank.n_timing)
    {
        return Err(Error::MissingPreamble {
            preamble: i,
            timing: j,
        });
    }
    let n = bank.n_zc;
    let mut samples = vec![Complex::new(T::zero(), T::zero()); n];
    for ((i, j), count) in load.occupied() {
        let (slot, shift) = bank.signature(i, j);
        let root = &bank.roots[slot].samples;
        let c = T::of(count as f64);
        for (k, s) in samples.iter_mut().enumerate() {
            *s += root[(k + shift) % n] * c;
        }
    }
    if noise_variance > T::zero() {
        for s in samples.iter_mut() {
            *s += complex_noise(noise_variance, rng);
        }
    }
    Ok(PrachObservation {
        samples,
        noise_variance,
        per_device_power: T::one(),
    })
}

/// Statistic compared against the correlation threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationTest {
    /// `|<Y, P>|`.
    Magnitude,
    /// `Re <Y, P>`. A phantom `-P` left by an earlier wrong subtraction cannot
    /// trigger further subtractions.
    InPhase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSchedule {
    /// The correlation threshold is used from the first pass.
    Fixed,
    /// Start at the largest correlation and decay geometrically to the
    /// threshold over `passes` sweeps, so strong cells are peeled first.
    Descending { passes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Correlation gate as a fraction of `N_ZC * sqrt(P0)`.
    pub correlation_threshold: f64,
    /// The loop stops once residual energy is below `N_ZC * noise * (1 + margin)`.
    pub energy_margin: f64,
    pub max_passes: usize,
    pub test: CorrelationTest,
    pub schedule: ThresholdSchedule,
    /// With the in-phase test, also take a device back out of a counted cell
    /// whose residual correlation falls below `-threshold`. This undoes
    /// detections that sidelobes of other cells pushed over the gate.
    pub prune: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            correlation_threshold: 0.5,
            energy_margin: 0.1,
            max_passes: 50,
            test: CorrelationTest::InPhase,
            schedule: ThresholdSchedule::Descending { passes: 20 },
            prune: true,
        }
    }
}

impl EstimatorConfig {
    /// Single fixed magnitude gate at 0.65 of the peak.
    pub fn literal() -> Self {
        Self {
            correlation_threshold: 0.65,
            test: CorrelationTest::Magnitude,
            schedule: ThresholdSchedule::Fixed,
            prune: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadEstimate {
    pub counts: LoadMatrix,
    pub passes: usize,
    /// The pass cap was reached before the residual fell below the energy gate.
    pub capped: bool,
}

/// Matching-pursuit load estimator with precomputed preamble cross-correlations.
#[derive(Debug, Clone)]
pub struct LoadEstimator<T> {
    bank: PreambleBank<T>,
    /// `cross[a * R + b][s] = sum_u root_a[u] conj(root_b[u + s])`.
    cross: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> LoadEstimator<T> {
    pub fn new(bank: &PreambleBank<T>) -> Self {
        let r = bank.roots.len();
        let mut cross = Vec::with_capacity(r * r);
        for a in 0..r {
            for b in 0..r {
                cross.push(
                    cyclic_correlate_complex(&bank.roots[a].samples, &bank.roots[b].samples)
                        .expect("roots share a length"),
                );
            }
        }
        Self {
            bank: bank.clone(),
            cross,
        }
    }

    pub fn bank(&self) -> &PreambleBank<T> {
        &self.bank
    }

    pub fn estimate(
        &self,
        obs: &PrachObservation<T>,
        cfg: &EstimatorConfig,
    ) -> Result<LoadEstimate> {
        let bank = &self.bank;
        let n = bank.n_zc;
        if obs.samples.len() != n {
            return Err(Error::LengthMismatch {
                left: obs.samples.len(),
                right: n,
            });
        }
        if cfg.correlation_threshold <= 0.0 {
            return Err(invalid("correlation threshold must be positive"));
        }
        let n_roots = bank.roots.len();
        let cells: Vec<(usize, usize)> = (0..bank.n_preambles)
            .flat_map(|i| (1..=bank.n_timing).map(move |j| (i, j)))
            .map(|(i, j)| bank.signature(i, j))
            .collect();
        let per_root: Vec<Vec<Complex<T>>> = bank
            .roots
            .iter()
            .map(|r| cyclic_correlate_complex(&obs.samples, &r.samples))
            .collect::<Result<_>>()?;
        let mut corr: Vec<Complex<T>> = cells.iter().map(|&(r, s)| per_root[r][s]).collect();
        let mut energy: T = obs.samples.iter().map(|s| s.norm_sqr()).sum();
        let nf = T::of_usize(n);
        let peak = nf * obs.per_device_power.sqrt();
        let gate = nf * obs.noise_variance * T::of(1.0 + cfg.energy_margin);
        let floor = peak * T::of(cfg.correlation_threshold);
        let stat = |c: Complex<T>| match cfg.test {
            CorrelationTest::Magnitude => c.norm(),
            CorrelationTest::InPhase => c.re,
        };
        let (mut threshold, decay) = match cfg.schedule {
            ThresholdSchedule::Fixed => (floor, T::one()),
            ThresholdSchedule::Descending { passes } => {
                let start = corr.iter().map(|&c| stat(c)).fold(floor, T::max);
                let decay = if start > floor && passes > 0 {
                    (floor / start).powf(T::one() / T::of_usize(passes))
                } else {
                    T::one()
                };
                ((start * decay).max(floor), decay)
            }
        };
        let prune = cfg.prune && cfg.test == CorrelationTest::InPhase;
        let mut counts = vec![0u32; cells.len()];
        let mut passes = 0;
        let mut capped = true;
        while passes < cfg.max_passes {
            if energy <= gate {
                capped = false;
                break;
            }
            passes += 1;
            let mut hits = 0;
            for k in 0..cells.len() {
                let sign = if stat(corr[k]) > threshold {
                    counts[k] += 1;
                    T::one()
                } else if prune && counts[k] > 0 && corr[k].re < -threshold {
                    counts[k] -= 1;
                    -T::one()
                } else {
                    continue;
                };
                hits += 1;
                let amp = obs.per_device_power.sqrt() * sign;
                energy = energy - T::of(2.0) * corr[k].re * amp + nf * obs.per_device_power;
                let (ra, sa) = cells[k];
                for (m, &(rb, sb)) in cells.iter().enumerate() {
                    let lag = if sb >= sa { sb - sa } else { sb + n - sa };
                    corr[m] -= self.cross[ra * n_roots + rb][lag] * amp;
                }
            }
            if hits == 0 && threshold <= floor {
                capped = false;
                break;
            }
            threshold = (threshold * decay).max(floor);
        }
        if capped {
            log::debug!(
                "load estimator stopped at the pass cap ({})",
                cfg.max_passes
            );
        }
        let mut m = LoadMatrix::zeros(bank.n_preambles, bank.n_timing);
        m.counts = counts;
        Ok(LoadEstimate {
            counts: m,
            passes,
            capped,
        })
    }
}

pub fn estimate_load<T: Scalar>(
    obs: &PrachObservation<T>,
    bank: &PreambleBank<T>,
    cfg: &EstimatorConfig,
) -> Result<LoadEstimate> {
    LoadEstimator::new(bank).estimate(obs, cfg)
}

/// Signed relative error of the estimated total. Infinite when the truth is
/// empty but the estimate is not.
pub fn estimation_accuracy(est: &LoadMatrix, truth: &LoadMatrix) -> f64 {
    let e = est.total() as f64;
    let t = truth.total() as f64;
    if t == 0.0 {
        return if e == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (e - t) / t
}
