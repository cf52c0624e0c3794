//! Multistage (successive interference cancellation) decoding.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::raptor::{
    adapter_apply, adapter_unapply, bpsk, decode_rateless, AdapterStream, RaptorCode,
    RatelessSchedule, SpaConfig, SuccessCriterion,
};
use crate::scalar::Scalar;
use crate::superposition::LayeredFrame;

/// Which LLR expression to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LlrForm {
    /// `2 w y / s2`, the binary-input AWGN log-likelihood ratio.
    #[default]
    Standard,
    /// `2 w^2 y / s2`, scaled by the layer power instead of its amplitude.
    SquaredWeight,
}

/// Log-likelihood ratios of `+-w` observed in real Gaussian noise of variance `s2`.
pub fn app_llr<T: Scalar>(y: &[T], w: T, s2: T, form: LlrForm) -> Result<Vec<T>> {
    if !(s2 > T::zero()) {
        return Err(invalid("noise variance must be positive"));
    }
    let scale = T::of(2.0)
        * match form {
            LlrForm::Standard => w,
            LlrForm::SquaredWeight => w * w,
        }
        / s2;
    Ok(y.iter().map(|&v| v * scale).collect())
}

/// `ceil(k / (symbols_per_rb * r_min))` with `symbols_per_rb = W_s * tau_s`.
pub fn required_rbs(k: usize, r_min: f64, bandwidth_hz: f64, rb_duration_s: f64) -> Result<u64> {
    required_rbs_per(k, r_min, bandwidth_hz * rb_duration_s)
}

pub fn required_rbs_per(k: usize, r_min: f64, symbols_per_rb: f64) -> Result<u64> {
    if !(r_min > 0.0) {
        return Err(Error::Unservable);
    }
    Ok(ceil_tolerant(k as f64 / (symbols_per_rb * r_min)))
}

/// Ceiling that forgives exact fits computed in floating point landing a
/// hair above an integer.
pub(crate) fn ceil_tolerant(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// What a device transmitted, as far as the receiver needs to know.
#[derive(Debug, Clone)]
pub struct DeviceCodec<'c> {
    pub code: &'c RaptorCode,
    pub adapter: AdapterStream,
    /// Transmitted message, used for genie success checks.
    pub message: Vec<u8>,
}

impl DeviceCodec<'_> {
    /// `+-1` channel symbols for `message` over `n` symbol periods.
    pub fn modulate<T: Scalar>(&self, message: &[u8], n: usize) -> Result<Vec<T>> {
        let coded = self.code.encode(message, n)?;
        Ok(bpsk(&adapter_apply(&coded, &self.adapter)))
    }
}

/// How each stage decodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StageDecoder {
    /// Belief propagation on the Raptor graph.
    Spa(SpaConfig),
    /// Succeeds at the first checkpoint reaching rate
    /// `efficiency * log2(1 + snr)`, without looking at the samples.
    CapacityOracle { efficiency: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsdConfig {
    pub decoder: StageDecoder,
    pub llr_form: LlrForm,
    /// Per-stage symbol cap as a multiple of `k / log2(1 + snr)`.
    pub cap_factor: f64,
    pub symbols_per_rb: f64,
}

impl Default for MsdConfig {
    fn default() -> Self {
        Self {
            decoder: StageDecoder::Spa(SpaConfig::default()),
            llr_form: LlrForm::Standard,
            cap_factor: 4.0,
            symbols_per_rb: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    /// Layer index in decoding order.
    pub device_index: usize,
    pub success: bool,
    pub symbols_consumed: usize,
    /// Bits per symbol; zero on failure.
    pub realized_rate: f64,
    pub effective_snr: f64,
    /// Mean power of the received signal left after this stage.
    pub residual_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeReport {
    pub per_stage: Vec<StageResult>,
    /// Smallest realized rate, zero if any stage failed.
    pub min_rate: f64,
    /// Resource blocks needed at the minimum rate; absent on outage.
    pub rbs_required: Option<u64>,
    pub outage: bool,
}

impl DecodeReport {
    /// One CSV row per stage, with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "device_index,success,symbols_consumed,realized_rate,effective_snr,residual_power\n",
        );
        for r in &self.per_stage {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.device_index,
                r.success as u8,
                r.symbols_consumed,
                r.realized_rate,
                r.effective_snr,
                r.residual_power
            ));
        }
        s
    }
}

/// Decodes layers strongest first, cancelling every layer that succeeds.
/// Failed layers stay in the interference of later stages.
pub fn decode_multistage<T: Scalar>(
    frame: &LayeredFrame<T>,
    devices: &[DeviceCodec<'_>],
    cap: Option<usize>,
    cfg: &MsdConfig,
) -> Result<DecodeReport> {
    let weights = frame.profile.layer_weights();
    if devices.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: devices.len(),
            right: weights.len(),
        });
    }
    let n_sym = frame.received.len();
    let sigma2 = frame.profile.noise_variance();
    let mut residual = frame.received.clone();
    let mut cancelled = vec![false; weights.len()];
    let mut stages = Vec::with_capacity(weights.len());
    let half = T::of(0.5);
    for i in 0..weights.len() {
        let w = weights[i];
        let dev = &devices[i];
        let k = dev.code.k();
        let th = frame.phases[i];
        // Everything not yet cancelled except this layer is interference.
        let mut interference = T::zero();
        let mut inphase = sigma2 * half;
        for j in 0..weights.len() {
            if j != i && !cancelled[j] {
                let p = weights[j] * weights[j];
                interference += p;
                let c = (frame.phases[j] - th).cos();
                inphase += p * c * c;
            }
        }
        let snr = (w * w / (interference + sigma2)).as_f64();
        let mut schedule = RatelessSchedule::for_snr(k, snr, cfg.cap_factor);
        schedule.cap = schedule.cap.min(n_sym).min(cap.unwrap_or(usize::MAX));
        let (success, consumed, message) = match cfg.decoder {
            StageDecoder::CapacityOracle { efficiency } => {
                let need = k as f64 / (efficiency * (1.0 + snr).log2());
                let n = schedule.checkpoints().find(|&n| n as f64 >= need - 1e-9);
                match n {
                    Some(n) => (true, n, dev.message.clone()),
                    None => (false, schedule.cap, Vec::new()),
                }
            }
            StageDecoder::Spa(spa) => {
                let n = schedule.cap;
                let rot = Complex::from_polar(T::one(), -th);
                let y: Vec<T> = residual[..n].iter().map(|&r| (r * rot).re).collect();
                let llr = adapter_unapply(&app_llr(&y, w, inphase, cfg.llr_form)?, &dev.adapter);
                let out = decode_rateless(
                    dev.code,
                    &llr,
                    &schedule,
                    &spa,
                    SuccessCriterion::Genie(&dev.message),
                );
                (out.success, out.symbols_consumed, out.message)
            }
        };
        if success {
            let x: Vec<T> = dev.modulate(&message, n_sym)?;
            let a = Complex::from_polar(w, th);
            for (r, &xv) in residual.iter_mut().zip(&x) {
                *r -= a * xv;
            }
            cancelled[i] = true;
        }
        let residual_power =
            residual.iter().map(|r| r.norm_sqr().as_f64()).sum::<f64>() / n_sym.max(1) as f64;
        stages.push(StageResult {
            device_index: i,
            success,
            symbols_consumed: consumed,
            realized_rate: if success {
                k as f64 / consumed as f64
            } else {
                0.0
            },
            effective_snr: snr,
            residual_power,
        });
    }
    let outage = stages.iter().any(|s| !s.success);
    let min_rate = if outage {
        0.0
    } else {
        stages
            .iter()
            .map(|s| s.realized_rate)
            .fold(f64::INFINITY, f64::min)
    };
    let rbs_required = match (outage, devices.first()) {
        (false, Some(d)) => Some(required_rbs_per(d.code.k(), min_rate, cfg.symbols_per_rb)?),
        _ => None,
    };
    Ok(DecodeReport {
        per_stage: stages,
        min_rate,
        rbs_required,
        outage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn llr_by_hand() {
        assert_eq!(
            app_llr(&[3.0f64], 1.0, 2.0, LlrForm::Standard).unwrap(),
            vec![3.0]
        );
        assert_eq!(
            app_llr(&[0.0f64], 0.7, 2.0, LlrForm::Standard).unwrap(),
            vec![0.0]
        );
        assert_eq!(
            app_llr(&[3.0f64], 0.5, 2.0, LlrForm::SquaredWeight).unwrap(),
            vec![0.75]
        );
        assert!(app_llr(&[1.0f64], 1.0, 0.0, LlrForm::Standard).is_err());
    }

    #[test]
    fn rb_counts() {
        assert_eq!(required_rbs(1024, 1.024, 1e6, 1e-3).unwrap(), 1);
        assert_eq!(required_rbs(1024, 0.1, 1e6, 1e-3).unwrap(), 11);
        assert_eq!(required_rbs(1024, 0.0, 1e6, 1e-3), Err(Error::Unservable));
    }
}
