//! Weight-coefficient designs and the layered superposition channel.

use num_complex::Complex;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::ra::complex_noise;
use crate::scalar::Scalar;

/// A distinct amplitude shared by `multiplicity` layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightGroup<T> {
    pub weight: T,
    pub multiplicity: usize,
}

/// Amplitudes in decoding order (largest first) with unit total receive
/// power, so the noise variance is the reciprocal of the total SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightProfile<T> {
    groups: Vec<WeightGroup<T>>,
    target_snr: T,
    noise_variance: T,
}

impl<T: Scalar> WeightProfile<T> {
    /// Normalizes arbitrary groups to unit power. `noise_variance` is in the
    /// same units as the unnormalized weights.
    pub fn from_groups(
        groups: Vec<WeightGroup<T>>,
        target_snr: T,
        noise_variance: T,
    ) -> Result<Self> {
        if !(noise_variance > T::zero()) {
            return Err(invalid("noise variance must be positive"));
        }
        if groups
            .iter()
            .any(|g| !(g.weight >= T::zero()) || !g.weight.is_finite())
        {
            return Err(invalid("weights must be finite and non-negative"));
        }
        if groups.windows(2).any(|w| w[1].weight > w[0].weight) {
            return Err(invalid("weights must be non-increasing in decoding order"));
        }
        let power: T = groups
            .iter()
            .map(|g| T::of_usize(g.multiplicity) * g.weight * g.weight)
            .sum();
        if !(power > T::zero()) {
            return Err(invalid("profile carries no power"));
        }
        let scale = power.sqrt().recip();
        Ok(Self {
            groups: groups
                .into_iter()
                .map(|g| WeightGroup {
                    weight: g.weight * scale,
                    multiplicity: g.multiplicity,
                })
                .collect(),
            target_snr,
            noise_variance: noise_variance / power,
        })
    }

    pub fn groups(&self) -> &[WeightGroup<T>] {
        &self.groups
    }

    pub fn target_snr(&self) -> T {
        self.target_snr
    }

    pub fn total_snr(&self) -> T {
        self.noise_variance.recip()
    }

    pub fn noise_variance(&self) -> T {
        self.noise_variance
    }

    pub fn n_layers(&self) -> usize {
        self.groups.iter().map(|g| g.multiplicity).sum()
    }

    /// Distinct weights.
    pub fn weights(&self) -> Vec<T> {
        self.groups.iter().map(|g| g.weight).collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.multiplicity).collect()
    }

    /// One amplitude per layer in decoding order.
    pub fn layer_weights(&self) -> Vec<T> {
        self.groups
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.weight, g.multiplicity))
            .collect()
    }

    /// Group index of every layer.
    pub fn layer_groups(&self) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(k, g)| std::iter::repeat_n(k, g.multiplicity))
            .collect()
    }

    pub fn total_power(&self) -> T {
        self.groups
            .iter()
            .map(|g| T::of_usize(g.multiplicity) * g.weight * g.weight)
            .sum()
    }
}

/// Every layer at `1/sqrt(L)`.
pub fn eqw_profile<T: Scalar>(l: usize, total_snr: T) -> Result<WeightProfile<T>> {
    if l == 0 || !(total_snr > T::zero()) {
        return Err(invalid("equal weights need L >= 1 and positive SNR"));
    }
    let lf = T::of_usize(l);
    let sigma2 = total_snr.recip();
    let min_snr = (lf - T::one() + lf * sigma2).recip();
    WeightProfile::from_groups(
        vec![WeightGroup {
            weight: lf.sqrt().recip(),
            multiplicity: l,
        }],
        min_snr,
        sigma2,
    )
}

/// Total SNR `(1 + g0)^L - 1` reached by `L` exponential layers.
pub fn exw_total_snr<T: Scalar>(l: usize, target: T) -> T {
    (T::of_usize(l) * target.ln_1p()).exp_m1()
}

/// Squared exponential weights `w_m^2 = g0 (1+g0)^(L-m) / ((1+g0)^L - 1)`
/// for decoding positions `m = 1..=L`.
fn exw_power_levels<T: Scalar>(l: usize, target: T) -> Vec<T> {
    let lg = target.ln_1p();
    let denom = -(-(T::of_usize(l) * lg)).exp_m1();
    (1..=l)
        .map(|m| target * (-(T::of_usize(m) * lg)).exp() / denom)
        .collect()
}

/// Weights under which every layer sees effective SNR `target`.
pub fn exw_optimal_weights<T: Scalar>(l: usize, target: T) -> Result<WeightProfile<T>> {
    if l == 0 || !(target > T::zero()) {
        return Err(invalid(
            "exponential weights need L >= 1 and a positive target",
        ));
    }
    let total = exw_total_snr(l, target);
    if !total.is_finite() {
        return Err(Error::Numerical(format!(
            "total SNR of {l} exponential layers overflows"
        )));
    }
    let groups = exw_power_levels(l, target)
        .into_iter()
        .map(|p| WeightGroup {
            weight: p.sqrt(),
            multiplicity: 1,
        })
        .collect();
    WeightProfile::from_groups(groups, target, total.recip())
}

/// Outcome of devices drawing exponential weights at random.
#[derive(Debug, Clone, PartialEq)]
pub struct ExwAssignment<T> {
    /// All `L` coefficients in decoding order, with the number of devices
    /// that drew each (possibly zero).
    pub profile: WeightProfile<T>,
    /// Coefficient index chosen by each device, in device order.
    pub choices: Vec<usize>,
}

/// Each of `L` devices picks one of the `L` exponential coefficients
/// uniformly. The noise level is the one the coefficients were designed
/// for; the profile is renormalized to unit power afterwards, which leaves
/// every SNR unchanged.
pub fn exw_random_assignment<T: Scalar, R: Rng + ?Sized>(
    l: usize,
    target: T,
    rng: &mut R,
) -> Result<ExwAssignment<T>> {
    let choices: Vec<usize> = (0..l).map(|_| rng.random_range(0..l)).collect();
    exw_assignment_from_choices(l, target, choices)
}

/// Builds the assignment for given coefficient choices among `slots`
/// exponential coefficients.
pub fn exw_assignment_from_choices<T: Scalar>(
    slots: usize,
    target: T,
    choices: Vec<usize>,
) -> Result<ExwAssignment<T>> {
    if slots == 0 || !(target > T::zero()) {
        return Err(invalid(
            "exponential weights need L >= 1 and a positive target",
        ));
    }
    let mut counts = vec![0usize; slots];
    for &c in &choices {
        if c >= slots {
            return Err(invalid(format!("coefficient index {c} out of range")));
        }
        counts[c] += 1;
    }
    if choices.is_empty() {
        return Err(invalid("no devices drew a coefficient"));
    }
    let groups = exw_power_levels(slots, target)
        .into_iter()
        .zip(counts)
        .map(|(p, r)| WeightGroup {
            weight: p.sqrt(),
            multiplicity: r,
        })
        .collect();
    let profile = WeightProfile::from_groups(groups, target, exw_total_snr(slots, target).recip())?;
    Ok(ExwAssignment { profile, choices })
}

/// Ordering of groups before the group-wise design is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupOrder {
    /// Smaller groups are decoded first.
    #[default]
    Ascending,
    /// Keep the order given.
    AsGiven,
}

/// Result of the group-wise design. `order[k]` is the input index of the
/// `k`-th group in decoding order.
#[derive(Debug, Clone, PartialEq)]
pub struct GrwDesign<T> {
    pub profile: WeightProfile<T>,
    pub order: Vec<usize>,
}

fn check_grw_feasible<T: Scalar>(sizes: &[usize], target: T) -> Result<()> {
    if !(target > T::zero()) {
        return Err(invalid("target SNR must be positive"));
    }
    let r_max = sizes.iter().copied().max().unwrap_or(0);
    if r_max > 1 && target * T::of_usize(r_max - 1) >= T::one() {
        return Err(Error::Infeasible(format!(
            "a group of {r_max} devices cannot all reach the target SNR"
        )));
    }
    Ok(())
}

/// Total SNR of the group-wise design, summed as the normalization
/// condition prescribes: `g0 * sum_i r_i (1+g0)^(N-i) / prod_(l>=i) (1 - g0 (r_l - 1))`.
pub fn grw_total_snr<T: Scalar>(sizes: &[usize], target: T) -> Result<T> {
    check_grw_feasible(sizes, target)?;
    let n = sizes.len();
    let mut total = T::zero();
    let mut prod = T::one();
    for i in (0..n).rev() {
        prod *= T::one() - target * (T::of_usize(sizes[i]) - T::one());
        let growth = target.ln_1p() * T::of_usize(n - 1 - i);
        total += T::of_usize(sizes[i]) * growth.exp() / prod;
    }
    Ok(target * total)
}

/// Group-wise weights: the first device decoded in every nonempty group
/// sees effective SNR exactly `target`. Empty groups are dropped.
pub fn grw_profile<T: Scalar>(
    sizes: &[usize],
    target: T,
    order: GroupOrder,
) -> Result<GrwDesign<T>> {
    let mut idx: Vec<usize> = (0..sizes.len()).filter(|&k| sizes[k] > 0).collect();
    if idx.is_empty() {
        return Err(invalid("no nonempty groups"));
    }
    if order == GroupOrder::Ascending {
        idx.sort_by_key(|&k| sizes[k]);
    }
    let r: Vec<usize> = idx.iter().map(|&k| sizes[k]).collect();
    check_grw_feasible(&r, target)?;
    // Backward recursion with unit noise: D holds noise plus the power of
    // every group decoded later.
    let mut power = vec![T::zero(); r.len()];
    let mut d = T::one();
    for i in (0..r.len()).rev() {
        let denom = T::one() - target * (T::of_usize(r[i]) - T::one());
        power[i] = target * d / denom;
        d += T::of_usize(r[i]) * power[i];
    }
    let groups = power
        .iter()
        .zip(&r)
        .map(|(&p, &m)| WeightGroup {
            weight: p.sqrt(),
            multiplicity: m,
        })
        .collect();
    Ok(GrwDesign {
        profile: WeightProfile::from_groups(groups, target, T::one())?,
        order: idx,
    })
}

/// Largest target for which the group-wise design keeps the total SNR at or
/// below `max_total`.
pub fn grw_target_for_total<T: Scalar>(sizes: &[usize], max_total: T) -> Result<T> {
    let r: Vec<usize> = sizes.iter().copied().filter(|&s| s > 0).collect();
    if r.is_empty() || !(max_total > T::zero()) {
        return Err(invalid("need nonempty groups and a positive SNR budget"));
    }
    let r_max = *r.iter().max().unwrap();
    // The total SNR plus one is the product of (1+g0)/(1-g0(r-1)), so the
    // search is done on its logarithm.
    let log_growth = |g: T| -> T {
        r.iter()
            .map(|&s| g.ln_1p() - (-(g * (T::of_usize(s) - T::one()))).ln_1p())
            .sum()
    };
    let goal = max_total.ln_1p();
    let mut lo = T::zero();
    let mut hi = if r_max > 1 {
        T::of_usize(r_max - 1).recip()
    } else {
        max_total
    };
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_growth(mid) <= goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `min{(1 + g_max)^(1/L) - 1, g0_max}`.
pub fn adaptive_target_snr<T: Scalar>(l: usize, max_total: T, max_target: T) -> T {
    if l == 0 {
        return max_target;
    }
    (max_total.ln_1p() / T::of_usize(l))
        .exp_m1()
        .min(max_target)
}

/// `w_i^2 / (sum_(j>i) w_j^2 + noise)` for every layer.
pub fn effective_snrs<T: Scalar>(profile: &WeightProfile<T>) -> Vec<T> {
    effective_snrs_of(&profile.layer_weights(), profile.noise_variance())
}

/// Effective SNRs for explicit layer amplitudes in decoding order.
pub fn effective_snrs_of<T: Scalar>(weights: &[T], noise_variance: T) -> Vec<T> {
    let mut out = vec![T::zero(); weights.len()];
    let mut below = noise_variance;
    for (k, &w) in weights.iter().enumerate().rev() {
        let p = w * w;
        out[k] = p / below;
        below += p;
    }
    out
}

/// Per-device BPSK streams and their noisy superposition on a complex
/// baseband channel. Layer `i` arrives with amplitude `w_i` and carrier phase
/// `phases[i]`; the noise is circular with total variance equal to the
/// profile's noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredFrame<T> {
    /// `+-1` symbols per layer in decoding order.
    pub symbols: Vec<Vec<T>>,
    pub phases: Vec<T>,
    pub received: Vec<Complex<T>>,
    pub profile: WeightProfile<T>,
}

/// How layer carrier phases are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseModel {
    /// All layers on the real axis.
    Aligned,
    /// Independent uniform phases, known to the receiver.
    #[default]
    Random,
}

/// `y = sum w_i x_i + z` with every layer on the real axis.
pub fn superpose<T: Scalar, R: Rng + ?Sized>(
    symbols: Vec<Vec<T>>,
    profile: &WeightProfile<T>,
    rng: &mut R,
) -> Result<LayeredFrame<T>> {
    superpose_with(symbols, profile, PhaseModel::Aligned, T::one(), rng)
}

/// General superposition. `noise_scale` multiplies the noise variance;
/// zero gives a noiseless frame.
pub fn superpose_with<T: Scalar, R: Rng + ?Sized>(
    symbols: Vec<Vec<T>>,
    profile: &WeightProfile<T>,
    phases: PhaseModel,
    noise_scale: T,
    rng: &mut R,
) -> Result<LayeredFrame<T>> {
    let weights = profile.layer_weights();
    if symbols.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: symbols.len(),
            right: weights.len(),
        });
    }
    let n = symbols.first().map_or(0, |s| s.len());
    if let Some(bad) = symbols.iter().find(|s| s.len() != n) {
        return Err(Error::LengthMismatch {
            left: bad.len(),
            right: n,
        });
    }
    let phases: Vec<T> = match phases {
        PhaseModel::Aligned => vec![T::zero(); weights.len()],
        PhaseModel::Random => (0..weights.len())
            .map(|_| T::of(rng.random::<f64>() * std::f64::consts::TAU))
            .collect(),
    };
    let mut received = vec![Complex::new(T::zero(), T::zero()); n];
    for ((w, xs), th) in weights.iter().zip(&symbols).zip(&phases) {
        let a = Complex::from_polar(*w, *th);
        for (y, &x) in received.iter_mut().zip(xs) {
            *y += a * x;
        }
    }
    let var = profile.noise_variance() * noise_scale;
    if var > T::zero() {
        for y in received.iter_mut() {
            *y += complex_noise(var, rng);
        }
    }
    Ok(LayeredFrame {
        symbols,
        phases,
        received,
        profile: profile.clone(),
    })
}
