//! Closed-form rate and minimum-SNR approximations, signalling overhead and
//! the access-class-barring baselines.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::msd::ceil_tolerant;
use crate::quad::integrate;
use crate::ra::CellGeometry;
use crate::scalar::q_function;

/// Minimum per-layer rate with `L` equal weights and total noise `σ²`.
pub fn min_rate_eqw(l: usize, noise_variance: f64) -> Result<f64> {
    if l == 0 {
        return Err(invalid("need at least one layer"));
    }
    let lf = l as f64;
    Ok((1.0 / (lf - 1.0 + lf * noise_variance)).ln_1p() / std::f64::consts::LN_2)
}

/// Gaussian approximation of the reciprocal minimum SNR under random
/// exponential-weight assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct MinSnrModel {
    pub l: usize,
    pub target: f64,
    /// Probability that a given coefficient is left unused.
    pub p0: f64,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// Relative shift applied to the implied distribution of the minimum
    /// SNR, zero unless calibrating against simulation.
    pub mean_shift: f64,
}

impl MinSnrModel {
    pub fn new(l: usize, target: f64) -> Result<Self> {
        if l == 0 || !(target > 0.0) {
            return Err(invalid("model needs L >= 1 and a positive target"));
        }
        let lf = l as f64;
        let p0 = (1.0 - 1.0 / lf).powi(l as i32);
        let q = (1.0 + target).powi(-2);
        // sum_(j=i..L) (1+g0)^(2(i-j)) is a geometric series in q.
        let variances = (1..=l)
            .map(|i| {
                let terms = (l - i + 1) as i32;
                let series = if q < 1.0 {
                    (1.0 - q.powi(terms)) / (1.0 - q)
                } else {
                    terms as f64
                };
                (1.0 - 1.0 / lf) * series
            })
            .collect();
        Ok(Self {
            l,
            target,
            p0,
            means: vec![1.0 / target; l],
            variances,
            mean_shift: 0.0,
        })
    }

    /// Same model with a relative shift of the minimum SNR.
    pub fn with_mean_shift(mut self, shift: f64) -> Self {
        self.mean_shift = shift;
        self
    }

    fn factor(&self, inv_x: f64) -> f64 {
        self.means
            .iter()
            .zip(&self.variances)
            .map(|(&m, &s)| {
                let below = if s > 0.0 {
                    1.0 - q_function((inv_x - m) / s.sqrt())
                } else if inv_x > m {
                    1.0
                } else {
                    0.0
                };
                self.p0 + (1.0 - self.p0) * below
            })
            .product()
    }

    /// `P(γ_min < x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        let x = x / (1.0 + self.mean_shift);
        (1.0 - self.factor(1.0 / x)).clamp(0.0, 1.0)
    }

    /// Limit of the cdf as `x` grows; the rest of the mass sits at infinity.
    pub fn finite_mass(&self) -> f64 {
        (1.0 - self.factor(0.0)).clamp(0.0, 1.0)
    }

    /// Mean of the minimum SNR, `∫ (F(x_max) - F(x)) dx` over `[0, x_max]`
    /// with `x_max` the total SNR. The Gaussian tail of `1/γ_min` reaches
    /// zero, so without the cut the mean would diverge logarithmically; no
    /// layer can see more than the total SNR anyway.
    pub fn mean(&self) -> Result<f64> {
        let g = self.target * (1.0 + self.mean_shift);
        let x_max = (self.l as f64 * self.target.ln_1p()).exp_m1() * (1.0 + self.mean_shift);
        let top = self.cdf(x_max);
        let f = |x: f64| (top - self.cdf(x)).max(0.0);
        let split = (4.0 * g).min(x_max);
        let body = integrate(f, 0.0, split, 1e-10 * g, 64)?;
        // Past the split substitute u = 1/x, over which the integrand is smooth.
        let tail = integrate(
            |u: f64| f(1.0 / u) / (u * u),
            1.0 / x_max,
            1.0 / split,
            1e-10 * g,
            64,
        )?;
        Ok(body + tail)
    }

    /// Mean of `log2(1 + γ_min)` under the same cut as [`MinSnrModel::mean`].
    pub fn mean_rate(&self) -> Result<f64> {
        let g = self.target * (1.0 + self.mean_shift);
        let x_max = (self.l as f64 * self.target.ln_1p()).exp_m1() * (1.0 + self.mean_shift);
        let top = self.cdf(x_max);
        let f = |x: f64| (top - self.cdf(x)).max(0.0) / ((1.0 + x) * std::f64::consts::LN_2);
        let split = (4.0 * g).min(x_max);
        let body = integrate(f, 0.0, split, 1e-10, 64)?;
        let tail = integrate(
            |u: f64| f(1.0 / u) / (u * u),
            1.0 / x_max,
            1.0 / split,
            1e-10,
            64,
        )?;
        Ok(body + tail)
    }
}

pub fn min_snr_cdf_conditional(x: f64, model: &MinSnrModel) -> f64 {
    model.cdf(x)
}

/// Poisson weights `P(L = j)` for `j = 0, 1, ...` up to the point where the
/// cumulative mass reaches `1 - 1e-9`.
pub fn poisson_weights(lambda: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut p = (-lambda).exp();
    let mut cum = 0.0;
    let mut j = 0usize;
    // Past the mode the terms shrink, so stop once the mass is reached.
    loop {
        out.push(p);
        cum += p;
        if cum >= 1.0 - 1e-9 && j as f64 >= lambda {
            break;
        }
        j += 1;
        p *= lambda / j as f64;
        if j > 10_000 + 20 * lambda as usize {
            break;
        }
    }
    out
}

/// Minimum-SNR cdf with a Poisson number of devices, each population drawing
/// among as many exponential coefficients as there are devices. No devices
/// means no minimum, which counts as `F = 0`.
pub fn min_snr_cdf(x: f64, lambda: f64, target: f64) -> Result<f64> {
    Ok(min_snr_cdf_models(lambda, target)?.cdf(x))
}

/// Precomputed mixture for evaluating many points.
#[derive(Debug, Clone)]
pub struct MinSnrMixture {
    pub weights: Vec<f64>,
    pub models: Vec<Option<MinSnrModel>>,
}

impl MinSnrMixture {
    pub fn cdf(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.models)
            .map(|(&p, m)| m.as_ref().map_or(0.0, |m| p * m.cdf(x)))
            .sum()
    }
}

pub fn min_snr_cdf_models(lambda: f64, target: f64) -> Result<MinSnrMixture> {
    if !(lambda > 0.0) {
        return Err(invalid("mean device count must be positive"));
    }
    let weights = poisson_weights(lambda);
    let models = (0..weights.len())
        .map(|j| {
            if j == 0 {
                Ok(None)
            } else {
                MinSnrModel::new(j, target).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    Ok(MinSnrMixture { weights, models })
}

/// Resource blocks taken by orthogonal weight sequences:
/// `ceil(δ N / (log2(1 + γ_w) W_s τ_s))`.
pub fn weight_overhead_rbs(
    expansion: f64,
    n_sequences: usize,
    snr: f64,
    bandwidth_hz: f64,
    rb_duration_s: f64,
) -> Result<u64> {
    if !(expansion >= 1.0) || !(snr > 0.0) {
        return Err(invalid("need expansion >= 1 and positive SNR"));
    }
    let x = expansion * n_sequences as f64 / ((1.0 + snr).log2() * bandwidth_hz * rb_duration_s);
    Ok(ceil_tolerant(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AcbScheme {
    #[default]
    Original,
    /// Collided preambles are resolved by timing advance.
    TimingAdvance,
}

/// How the original scheme's barring probability is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BarringRule {
    /// `min{1, N_s/N}`.
    #[default]
    Standard,
    /// `min{1, N/N_s}`.
    Inverted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcbConfig {
    pub scheme: AcbScheme,
    pub n_preambles: usize,
    pub cell: CellGeometry,
    /// Ring width in meters.
    pub ring_width: f64,
    pub rule: BarringRule,
}

impl AcbConfig {
    pub fn new(scheme: AcbScheme, n_preambles: usize, cell: CellGeometry) -> Self {
        Self {
            scheme,
            n_preambles,
            cell,
            ring_width: cell.ring_width(),
            rule: BarringRule::Standard,
        }
    }

    /// `4 d (R - d) / R²`.
    pub fn rho(&self) -> f64 {
        let r = self.cell.radius;
        let d = self.ring_width;
        4.0 * d * (r - d) / (r * r)
    }
}

pub fn acb_transmit_probability(cfg: &AcbConfig, contending: usize) -> f64 {
    if contending == 0 {
        return 1.0;
    }
    let n = contending as f64;
    let ns = cfg.n_preambles as f64;
    match cfg.scheme {
        AcbScheme::Original => match cfg.rule {
            BarringRule::Standard => (ns / n).min(1.0),
            BarringRule::Inverted => (n / ns).min(1.0),
        },
        AcbScheme::TimingAdvance => {
            let rho = cfg.rho();
            (1.17 * ns * rho.ln() / (n * (rho - 1.0))).min(1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AcbFrame {
    pub participants: usize,
    /// Indices in `0..contending` of devices that got through.
    pub served: Vec<usize>,
}

impl AcbFrame {
    pub fn successes(&self) -> usize {
        self.served.len()
    }
}

/// One contention round among `contending` devices.
pub fn acb_frame_outcome<R: Rng + ?Sized>(
    cfg: &AcbConfig,
    contending: usize,
    rng: &mut R,
) -> AcbFrame {
    let p = acb_transmit_probability(cfg, contending);
    let ns = cfg.n_preambles;
    // (device, timing) per preamble.
    let mut picks: Vec<Vec<(usize, usize)>> = vec![Vec::new(); ns];
    let mut participants = 0;
    for dev in 0..contending {
        if rng.random::<f64>() >= p {
            continue;
        }
        participants += 1;
        let pre = rng.random_range(0..ns);
        let timing = match cfg.scheme {
            AcbScheme::Original => 0,
            AcbScheme::TimingAdvance => cfg.cell.timing_group(cfg.cell.sample_distance(rng)),
        };
        picks[pre].push((dev, timing));
    }
    let mut served = Vec::new();
    for group in &picks {
        match group.len() {
            0 => {}
            1 => served.push(group[0].0),
            _ if cfg.scheme == AcbScheme::TimingAdvance => {
                let mut seen: Vec<usize> = group.iter().map(|&(_, t)| t).collect();
                seen.sort_unstable();
                seen.dedup();
                let t = seen[rng.random_range(0..seen.len())];
                let mut holders = group.iter().filter(|&&(_, g)| g == t);
                if let (Some(&(d, _)), None) = (holders.next(), holders.next()) {
                    served.push(d);
                }
            }
            _ => {}
        }
    }
    served.sort_unstable();
    AcbFrame {
        participants,
        served,
    }
}
