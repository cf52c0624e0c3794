//! Frame-level simulation of the random-access and data phases.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::analysis::{
    acb_frame_outcome, weight_overhead_rbs, AcbConfig, AcbScheme, BarringRule, MinSnrModel,
};
use crate::error::{invalid, Result};
use crate::msd::{ceil_tolerant, decode_multistage, DeviceCodec, LlrForm, MsdConfig};
use crate::ra::{
    sample_arrivals, synthesize_prach, CellGeometry, EstimatorConfig, LoadEstimator, LoadMatrix,
};
use crate::raptor::{AdapterStream, RaptorCode, RaptorCodeSpec};
use crate::scalar::db_to_ratio;
use crate::seed::{device_adapter_seed, device_code_seed, lanes, seed_stream, RandomStream};
use crate::superposition::{
    adaptive_target_snr, exw_assignment_from_choices, grw_profile, grw_target_for_total,
    superpose_with, GroupOrder, PhaseModel, WeightGroup, WeightProfile,
};
use crate::zc::{BankConfig, LengthCheck, PreambleBank};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBudget {
    /// Data resource blocks per frame; `u64::MAX` means unconstrained.
    pub data_rbs: u64,
    pub rb_bandwidth: f64,
    pub rb_duration: f64,
    pub frame_length: f64,
}

impl Default for FrameBudget {
    fn default() -> Self {
        Self {
            data_rbs: 100,
            rb_bandwidth: 1e6,
            rb_duration: 1e-3,
            frame_length: 10e-3,
        }
    }
}

impl FrameBudget {
    pub fn symbols_per_rb(&self) -> f64 {
        self.rb_bandwidth * self.rb_duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    ProposedExw,
    #[default]
    ProposedGrw,
    AcbOriginal,
    AcbTimingAdvance,
}

impl Scheme {
    pub fn is_proposed(self) -> bool {
        matches!(self, Scheme::ProposedExw | Scheme::ProposedGrw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodeMode {
    /// Rate-efficiency model in place of belief propagation.
    #[default]
    Fast,
    /// Per-symbol superposition and belief-propagation decoding.
    Full,
}

/// Which preamble groups receive a not-to-transmit message first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeferralPolicy {
    #[default]
    LargestFirst,
    SmallestFirst,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadKnowledge {
    /// Counts come from the PRACH load estimator.
    #[default]
    Estimated,
    /// Counts are the true ones.
    Genie,
}

/// Fraction of capacity a decoder achieves: a normal draw clipped to
/// `[floor, ceiling]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyModel {
    pub mean: f64,
    pub std_dev: f64,
    pub floor: f64,
    pub ceiling: f64,
}

impl Default for EfficiencyModel {
    fn default() -> Self {
        Self {
            mean: 0.8,
            std_dev: 0.05,
            floor: 0.6,
            ceiling: 0.95,
        }
    }
}

impl EfficiencyModel {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = if self.std_dev > 0.0 {
            Normal::new(self.mean, self.std_dev)
                .expect("finite spread")
                .sample(rng)
        } else {
            self.mean
        };
        x.clamp(self.floor, self.ceiling)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrachParams {
    pub n_zc: usize,
    /// Per-device receive SNR on the PRACH.
    pub snr: f64,
    pub estimator: EstimatorConfig,
}

impl Default for PrachParams {
    fn default() -> Self {
        Self {
            n_zc: 839,
            snr: 1.0,
            estimator: EstimatorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub scheme: Scheme,
    pub mode: DecodeMode,
    /// Mean new arrivals per frame.
    pub lambda: f64,
    pub budget: FrameBudget,
    pub k: usize,
    pub n_preambles: usize,
    pub geometry: CellGeometry,
    pub gamma_max: f64,
    pub gamma0_max: f64,
    /// Fixed per-device target SNR in place of the adaptive rule.
    pub fixed_target: Option<f64>,
    pub efficiency: EfficiencyModel,
    /// Efficiency the base station assumes when sizing the allocation.
    pub planning_efficiency: f64,
    pub overhead_expansion: f64,
    pub overhead_snr: f64,
    pub deferral: DeferralPolicy,
    pub load_knowledge: LoadKnowledge,
    pub prach: PrachParams,
    pub acb_rule: BarringRule,
    pub llr_form: LlrForm,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            scheme: Scheme::ProposedGrw,
            mode: DecodeMode::Fast,
            lambda: 100.0,
            budget: FrameBudget::default(),
            k: 1024,
            n_preambles: 64,
            geometry: CellGeometry::default(),
            gamma_max: db_to_ratio(30.0),
            gamma0_max: db_to_ratio(10.0),
            fixed_target: None,
            efficiency: EfficiencyModel::default(),
            planning_efficiency: 0.6,
            overhead_expansion: 1.0,
            overhead_snr: 1.0,
            deferral: DeferralPolicy::LargestFirst,
            load_knowledge: LoadKnowledge::Estimated,
            prach: PrachParams::default(),
            acb_rule: BarringRule::Standard,
            llr_form: LlrForm::Standard,
        }
    }
}

impl SystemParams {
    pub fn n_timing(&self) -> usize {
        self.geometry.n_timing()
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget.data_rbs == 0 {
            return Err(invalid("at least one data resource block is needed"));
        }
        if !(self.lambda >= 0.0) || self.k == 0 || self.n_preambles == 0 {
            return Err(invalid(
                "arrival rate, message length and preamble count must be positive",
            ));
        }
        if !(self.gamma_max > 0.0) || !(self.gamma0_max > 0.0) || !(self.planning_efficiency > 0.0)
        {
            return Err(invalid(
                "SNR limits and planning efficiency must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Device {
    pub id: u64,
    pub arrival_frame: u64,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceRecord {
    pub device: u64,
    pub arrival_frame: u64,
    pub service_frame: u64,
}

impl ServiceRecord {
    pub fn delay_frames(&self) -> u64 {
        self.service_frame - self.arrival_frame
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeviceQueueState {
    pub backlog: Vec<Device>,
    pub served_log: Vec<ServiceRecord>,
    next_id: u64,
}

impl DeviceQueueState {
    pub fn admit<R: Rng + ?Sized>(
        &mut self,
        count: u64,
        frame: u64,
        geometry: &CellGeometry,
        rng: &mut R,
    ) {
        for _ in 0..count {
            self.backlog.push(Device {
                id: self.next_id,
                arrival_frame: frame,
                distance: geometry.sample_distance(rng),
            });
            self.next_id += 1;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameReport {
    pub frame: u64,
    pub arrivals: u64,
    pub contending: u64,
    pub served: u64,
    pub rbs_used: u64,
    /// Devices told not to transmit.
    pub deferred: u64,
    /// Devices that transmitted but were not decoded.
    pub failed: u64,
    pub estimated_load: u64,
    pub target_snr: f64,
    pub delay_sum_frames: u64,
}

/// Shared, read-only state for a scenario.
pub struct SimContext {
    pub params: SystemParams,
    estimator: Option<LoadEstimator<f64>>,
    exw_plan: Mutex<HashMap<(usize, u64), f64>>,
}

impl SimContext {
    pub fn new(params: SystemParams) -> Result<Self> {
        params.validate()?;
        let estimator = if params.scheme.is_proposed()
            && params.load_knowledge == LoadKnowledge::Estimated
        {
            let mut cfg = BankConfig::new(params.prach.n_zc, params.n_preambles, params.n_timing());
            cfg.check = LengthCheck::Warn;
            Some(LoadEstimator::new(&PreambleBank::new(&cfg)?))
        } else {
            None
        };
        Ok(Self {
            params,
            estimator,
            exw_plan: Mutex::new(HashMap::new()),
        })
    }

    /// Mean minimum SNR the base station expects from `l` devices drawing
    /// exponential weights.
    fn exw_planned_snr(&self, l: usize, target: f64) -> Result<f64> {
        let key = (l, target.to_bits());
        if let Some(&v) = self.exw_plan.lock().expect("plan cache").get(&key) {
            return Ok(v);
        }
        let v = MinSnrModel::new(l, target)?.mean()?;
        self.exw_plan.lock().expect("plan cache").insert(key, v);
        Ok(v)
    }

    fn rbs_for(&self, rate: f64, n_devices: usize) -> Result<u64> {
        let p = &self.params;
        let spr = p.budget.symbols_per_rb();
        let data = ceil_tolerant(p.k as f64 / (spr * rate));
        let overhead = weight_overhead_rbs(
            p.overhead_expansion,
            n_devices,
            p.overhead_snr,
            p.budget.rb_bandwidth,
            p.budget.rb_duration,
        )?;
        Ok(data.saturating_add(overhead))
    }
}

/// A preamble group scheduled for the data phase.
#[derive(Debug, Clone)]
struct Cell {
    estimated: usize,
    devices: Vec<usize>,
}

fn streams(seed: u64, frame: u64) -> impl Fn(u64) -> RandomStream {
    move |lane| seed_stream(seed, frame, lane)
}

/// Advances the queue by one frame.
pub fn run_frame(
    ctx: &SimContext,
    state: &mut DeviceQueueState,
    frame: u64,
    seed: u64,
) -> Result<FrameReport> {
    let p = &ctx.params;
    let rng = streams(seed, frame);
    let arrivals = sample_arrivals(p.lambda, &mut rng(lanes::ARRIVALS));
    state.admit(arrivals, frame, &p.geometry, &mut rng(lanes::PLACEMENT));
    let mut report = FrameReport {
        frame,
        arrivals,
        contending: state.backlog.len() as u64,
        ..FrameReport::default()
    };
    if state.backlog.is_empty() {
        return Ok(report);
    }
    let served = if p.scheme.is_proposed() {
        proposed_frame(ctx, state, &rng, &mut report)?
    } else {
        acb_frame(ctx, state, &rng, &mut report)
    };
    let mut is_served = vec![false; state.backlog.len()];
    for &d in &served {
        is_served[d] = true;
    }
    let mut keep = Vec::with_capacity(state.backlog.len() - served.len());
    for (d, dev) in state.backlog.drain(..).enumerate() {
        if is_served[d] {
            let rec = ServiceRecord {
                device: dev.id,
                arrival_frame: dev.arrival_frame,
                service_frame: frame,
            };
            report.delay_sum_frames += rec.delay_frames();
            state.served_log.push(rec);
        } else {
            keep.push(dev);
        }
    }
    state.backlog = keep;
    report.served = served.len() as u64;
    Ok(report)
}

fn acb_frame(
    ctx: &SimContext,
    state: &DeviceQueueState,
    rng: &impl Fn(u64) -> RandomStream,
    report: &mut FrameReport,
) -> Vec<usize> {
    let p = &ctx.params;
    let scheme = match p.scheme {
        Scheme::AcbTimingAdvance => AcbScheme::TimingAdvance,
        _ => AcbScheme::Original,
    };
    let mut cfg = AcbConfig::new(scheme, p.n_preambles, p.geometry);
    cfg.rule = p.acb_rule;
    let out = acb_frame_outcome(&cfg, state.backlog.len(), &mut rng(lanes::ACB));
    // One resource block per admitted device.
    let cap = usize::try_from(p.budget.data_rbs).unwrap_or(usize::MAX);
    let served: Vec<usize> = out.served.into_iter().take(cap).collect();
    report.rbs_used = served.len() as u64;
    served
}

fn proposed_frame(
    ctx: &SimContext,
    state: &DeviceQueueState,
    rng: &impl Fn(u64) -> RandomStream,
    report: &mut FrameReport,
) -> Result<Vec<usize>> {
    let p = &ctx.params;
    let n_t = p.n_timing();
    // Random access: fresh preamble every frame, timing from position.
    let mut pre_rng = rng(lanes::PREAMBLE);
    let cells: Vec<(usize, usize)> = state
        .backlog
        .iter()
        .map(|d| {
            (
                pre_rng.random_range(0..p.n_preambles),
                p.geometry.timing_group(d.distance),
            )
        })
        .collect();
    let truth = LoadMatrix::from_cells(p.n_preambles, n_t, &cells);
    let estimate = match &ctx.estimator {
        Some(est) => {
            let obs = synthesize_prach(
                &truth,
                est.bank(),
                1.0 / p.prach.snr,
                &mut rng(lanes::PRACH_NOISE),
            )?;
            est.estimate(&obs, &p.prach.estimator)?.counts
        }
        None => truth.clone(),
    };
    report.estimated_load = estimate.total();
    let mut members: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (d, &c) in cells.iter().enumerate() {
        members.entry(c).or_default().push(d);
    }
    // Devices in cells the estimator missed do not learn of an allocation.
    let mut scheduled: Vec<Cell> = estimate
        .occupied()
        .map(|((i, j), n)| Cell {
            estimated: n as usize,
            devices: members.remove(&(i, j)).unwrap_or_default(),
        })
        .collect();
    match p.deferral {
        DeferralPolicy::LargestFirst => scheduled.sort_by_key(|c| std::cmp::Reverse(c.estimated)),
        DeferralPolicy::SmallestFirst => scheduled.sort_by_key(|c| c.estimated),
        DeferralPolicy::Random => scheduled.shuffle(&mut rng(lanes::WEIGHTS + 100)),
    }
    // Evict from the front until the planned allocation fits.
    let mut first = 0;
    let (target, planned_rbs) = loop {
        if first == scheduled.len() {
            break (0.0, 0);
        }
        let sizes: Vec<usize> = scheduled[first..].iter().map(|c| c.estimated).collect();
        let l_hat: usize = sizes.iter().sum();
        let (target, snr) = match p.scheme {
            Scheme::ProposedGrw => match p.fixed_target {
                // A fixed target cannot serve a group of 1 + 1/g0 devices.
                Some(g) if sizes.iter().any(|&r| g * (r as f64 - 1.0) >= 1.0) => {
                    first += 1;
                    continue;
                }
                Some(g) => (g, g),
                None => {
                    let g = grw_target_for_total(&sizes, p.gamma_max)?.min(p.gamma0_max);
                    (g, g)
                }
            },
            _ => {
                let g = p
                    .fixed_target
                    .unwrap_or_else(|| adaptive_target_snr(l_hat, p.gamma_max, p.gamma0_max));
                (g, ctx.exw_planned_snr(l_hat, g)?)
            }
        };
        let v = ctx.rbs_for(p.planning_efficiency * (1.0 + snr).log2(), l_hat)?;
        if v <= p.budget.data_rbs {
            break (target, v);
        }
        first += 1;
    };
    report.deferred = scheduled[..first]
        .iter()
        .map(|c| c.devices.len() as u64)
        .sum();
    let scheduled = &scheduled[first..];
    if scheduled.is_empty() {
        return Ok(Vec::new());
    }
    report.target_snr = target;
    let l_hat: usize = scheduled.iter().map(|c| c.estimated).sum();

    // Devices in decoding order.
    let (profile, layers, rbs) = match p.scheme {
        Scheme::ProposedGrw => {
            let sizes: Vec<usize> = scheduled.iter().map(|c| c.estimated).collect();
            let design = grw_profile(&sizes, target, GroupOrder::Ascending)?;
            let mut layers = Vec::new();
            let mut groups = Vec::new();
            for (g, &c) in design.order.iter().enumerate() {
                let devs = &scheduled[c].devices;
                layers.extend(devs.iter().copied());
                groups.push(WeightGroup {
                    weight: design.profile.groups()[g].weight,
                    multiplicity: devs.len(),
                });
            }
            let profile = (!layers.is_empty())
                .then(|| {
                    WeightProfile::from_groups(groups, target, design.profile.noise_variance())
                })
                .transpose()?;
            (profile, layers, planned_rbs)
        }
        _ => {
            let mut w_rng = rng(lanes::WEIGHTS);
            let mut picks: Vec<(usize, usize)> = Vec::new();
            for cell in scheduled {
                for &d in &cell.devices {
                    picks.push((w_rng.random_range(0..l_hat), d));
                }
            }
            picks.sort_unstable();
            if picks.is_empty() {
                (None, Vec::new(), planned_rbs)
            } else {
                let choices = picks.iter().map(|&(s, _)| s).collect();
                let a = exw_assignment_from_choices(l_hat, target, choices)?;
                let layers = picks.iter().map(|&(_, d)| d).collect();
                // The base station learns the realized multiplicities from
                // the weight sequences and sizes the allocation for them.
                let min_snr = crate::superposition::effective_snrs(&a.profile)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                let v = ctx
                    .rbs_for(p.planning_efficiency * (1.0 + min_snr).log2(), l_hat)?
                    .min(p.budget.data_rbs);
                (Some(a.profile), layers, v)
            }
        }
    };
    report.rbs_used = rbs;
    let Some(profile) = profile else {
        return Ok(Vec::new());
    };
    let data_rbs = rbs.saturating_sub(weight_overhead_rbs(
        p.overhead_expansion,
        l_hat,
        p.overhead_snr,
        p.budget.rb_bandwidth,
        p.budget.rb_duration,
    )?);
    let symbols = (data_rbs as f64 * p.budget.symbols_per_rb()).floor() as usize;
    let decoded = match p.mode {
        DecodeMode::Fast => {
            let mut eta_rng = rng(lanes::EFFICIENCY);
            let etas: Vec<f64> = layers
                .iter()
                .map(|_| p.efficiency.sample(&mut eta_rng))
                .collect();
            sic_fast(
                &profile.layer_weights(),
                profile.noise_variance(),
                &etas,
                p.k,
                symbols,
            )
        }
        DecodeMode::Full => sic_full(ctx, &profile, &layers, &cells, symbols, rng)?,
    };
    let served: Vec<usize> = layers
        .iter()
        .zip(&decoded)
        .filter(|(_, &ok)| ok)
        .map(|(&d, _)| d)
        .collect();
    report.failed = (layers.len() - served.len()) as u64;
    Ok(served)
}

/// Successive cancellation under the rate-efficiency model: a stage decodes
/// iff `k <= eta * log2(1 + snr) * symbols`, where failed layers stay in the
/// interference of later stages.
pub fn sic_fast(weights: &[f64], noise: f64, etas: &[f64], k: usize, symbols: usize) -> Vec<bool> {
    let powers: Vec<f64> = weights.iter().map(|w| w * w).collect();
    let mut remaining: f64 = powers.iter().sum::<f64>() + noise;
    let mut out = Vec::with_capacity(powers.len());
    for (&pw, &eta) in powers.iter().zip(etas) {
        remaining -= pw;
        let snr = pw / remaining.max(f64::MIN_POSITIVE);
        let ok = k as f64 <= eta * (1.0 + snr).log2() * symbols as f64 * (1.0 + 1e-12);
        if !ok {
            remaining += pw;
        }
        out.push(ok);
    }
    out
}

fn sic_full(
    ctx: &SimContext,
    profile: &WeightProfile<f64>,
    layers: &[usize],
    cells: &[(usize, usize)],
    symbols: usize,
    rng: &impl Fn(u64) -> RandomStream,
) -> Result<Vec<bool>> {
    let p = &ctx.params;
    let mut msg_rng = rng(lanes::MESSAGES);
    let mut codes = Vec::with_capacity(layers.len());
    let mut adapters = Vec::with_capacity(layers.len());
    let mut slot_of: HashMap<(usize, usize), usize> = HashMap::new();
    for &d in layers {
        let (i, j) = cells[d];
        let slot = slot_of.entry((i, j)).or_insert(0);
        codes.push(RaptorCode::new(RaptorCodeSpec::new(
            p.k,
            device_code_seed(i, j) ^ *slot as u64,
        ))?);
        adapters.push(AdapterStream::new(device_adapter_seed(i, j, *slot)));
        *slot += 1;
    }
    let devices: Vec<DeviceCodec> = codes
        .iter()
        .zip(adapters)
        .map(|(code, adapter)| DeviceCodec {
            code,
            adapter,
            message: (0..p.k).map(|_| msg_rng.random_range(0..2u8)).collect(),
        })
        .collect();
    let tx = devices
        .iter()
        .map(|d| d.modulate::<f64>(&d.message, symbols))
        .collect::<Result<Vec<_>>>()?;
    let frame = superpose_with(
        tx,
        profile,
        PhaseModel::Random,
        1.0,
        &mut rng(lanes::CHANNEL),
    )?;
    let cfg = MsdConfig {
        llr_form: p.llr_form,
        symbols_per_rb: p.budget.symbols_per_rb(),
        ..MsdConfig::default()
    };
    let report = decode_multistage(&frame, &devices, Some(symbols), &cfg)?;
    Ok(report.per_stage.iter().map(|s| s.success).collect())
}

/// Per-seed totals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub frames: u64,
    pub arrivals: u64,
    pub served: u64,
    pub rbs_used: u64,
    pub deferred: u64,
    pub failed: u64,
    pub delay_sum_frames: u64,
    pub final_backlog: u64,
}

impl SeedSummary {
    pub fn served_per_frame(&self) -> f64 {
        self.served as f64 / self.frames as f64
    }

    /// Devices served per data resource block used.
    pub fn devices_per_rb(&self) -> f64 {
        if self.rbs_used == 0 {
            0.0
        } else {
            self.served as f64 / self.rbs_used as f64
        }
    }

    /// Mean wait of served devices, in frames.
    pub fn mean_delay_frames(&self) -> f64 {
        if self.served == 0 {
            0.0
        } else {
            self.delay_sum_frames as f64 / self.served as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean; NaN with fewer than two samples.
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n < 2 {
            f64::NAN
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self { mean, stderr, n }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub per_seed: Vec<SeedSummary>,
    pub served_per_frame: Estimate,
    pub devices_per_rb: Estimate,
    pub delay_frames: Estimate,
    pub delay_seconds: Estimate,
}

/// Simulates `frames` frames for one seed.
pub fn run_seed(ctx: &SimContext, frames: u64, seed: u64) -> Result<SeedSummary> {
    let mut state = DeviceQueueState::default();
    let mut s = SeedSummary {
        seed,
        frames,
        ..SeedSummary::default()
    };
    for f in 0..frames {
        let r = run_frame(ctx, &mut state, f, seed)?;
        s.arrivals += r.arrivals;
        s.served += r.served;
        s.rbs_used += r.rbs_used;
        s.deferred += r.deferred;
        s.failed += r.failed;
        s.delay_sum_frames += r.delay_sum_frames;
    }
    s.final_backlog = state.backlog.len() as u64;
    Ok(s)
}

/// Runs every seed in parallel and aggregates in seed order.
pub fn run_scenario(params: &SystemParams, frames: u64, seeds: &[u64]) -> Result<ScenarioResult> {
    if frames == 0 || seeds.is_empty() {
        return Err(invalid("need at least one frame and one seed"));
    }
    let ctx = SimContext::new(params.clone())?;
    let per_seed = seeds
        .par_iter()
        .map(|&s| run_seed(&ctx, frames, s))
        .collect::<Result<Vec<_>>>()?;
    let col =
        |f: fn(&SeedSummary) -> f64| Estimate::of(&per_seed.iter().map(f).collect::<Vec<_>>());
    let delay_frames = col(SeedSummary::mean_delay_frames);
    let tf = params.budget.frame_length;
    Ok(ScenarioResult {
        served_per_frame: col(SeedSummary::served_per_frame),
        devices_per_rb: col(SeedSummary::devices_per_rb),
        delay_seconds: Estimate {
            mean: delay_frames.mean * tf,
            stderr: delay_frames.stderr * tf,
            n: delay_frames.n,
        },
        delay_frames,
        per_seed,
    })
}
