//! Experiment configuration, figure runners and CSV output.
//!
//! A run is described by flat `key=value` settings. Each figure declares the
//! keys it reads together with their defaults; settings come from the
//! defaults, then a config file, then the environment, then the command line.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::analysis::{BarringRule, MinSnrModel};
use crate::error::{Error, Result};
use crate::msd::{decode_multistage, DeviceCodec, LlrForm, MsdConfig, StageDecoder};
use crate::ra::{assign_devices, synthesize_prach, CellGeometry, LoadEstimator};
use crate::raptor::{AdapterStream, DegreeDistribution, RaptorCode, RaptorCodeSpec, SpaConfig};
use crate::scalar::db_to_ratio;
use crate::seed::{derive_seed, lanes, seed_stream};
use crate::superposition::{
    effective_snrs, exw_optimal_weights, exw_random_assignment, superpose_with, PhaseModel,
};
use crate::system_sim::{
    run_scenario, DecodeMode, DeferralPolicy, EfficiencyModel, Estimate, FrameBudget,
    LoadKnowledge, PrachParams, Scheme, SystemParams,
};
use crate::zc::{BankConfig, LengthCheck, PreambleBank};

/// Environment variables with this prefix override settings, e.g.
/// `MASSIVE_ACCESS_TRIALS=20`.
pub const ENV_PREFIX: &str = "MASSIVE_ACCESS_";

/// Header key holding the wall-clock time; ignored when a header is read back.
pub const TIMESTAMP_KEY: &str = "generated_unix";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Figure {
    Fig3,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Fig11,
    Custom,
}

impl Figure {
    pub const ALL: [Figure; 9] = [
        Figure::Fig3,
        Figure::Fig5,
        Figure::Fig6,
        Figure::Fig7,
        Figure::Fig8,
        Figure::Fig9,
        Figure::Fig10,
        Figure::Fig11,
        Figure::Custom,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
            Figure::Fig9 => "fig9",
            Figure::Fig10 => "fig10",
            Figure::Fig11 => "fig11",
            Figure::Custom => "custom",
        }
    }

    /// Declared keys and their defaults.
    pub fn keys(self) -> Vec<(&'static str, &'static str)> {
        let mut k = vec![("seed", "1"), ("mode", "fast"), ("threads", "0")];
        match self {
            Figure::Fig3 => k.extend([
                ("trials", "200"),
                ("num_devices", "10:10:100"),
                ("n_zc", "100"),
                ("n_preambles", "20"),
                ("n_timing", "20"),
                ("snr_db", "0"),
                ("estimator", "default"),
            ]),
            Figure::Fig5 => k.extend([
                ("trials", "20"),
                ("snr_db", "-10,-5,0"),
                ("k", "1024"),
                ("cap_factor", "4"),
                ("max_iters", "100"),
                ("stall_iters", "20"),
                ("llr_form", "standard"),
                ("precision", "f32"),
                ("degree", "builtin"),
            ]),
            Figure::Fig6 => k.extend([
                ("trials", "2000"),
                ("num_devices", "16,64"),
                ("gamma_db", "20"),
                ("grid", "0.05:0.05:2"),
                ("mean_shift", "0"),
            ]),
            Figure::Fig7 => k.extend([
                ("trials", "2000"),
                ("num_devices", "2,4,8,16,32,64,128"),
                ("gamma_db", "10,20,30"),
            ]),
            Figure::Fig8 | Figure::Fig9 | Figure::Fig10 | Figure::Fig11 | Figure::Custom => {
                let (trials, seeds, rbs, ns, schemes, lambda, levels) = match self {
                    Figure::Fig8 => (
                        "200",
                        "1",
                        "unlimited",
                        "20",
                        "grw,exw",
                        "50:50:500",
                        "-10,-5",
                    ),
                    Figure::Fig9 => ("200", "1", "unlimited", "20", "grw,exw", "50:50:500", "30"),
                    _ => (
                        "100",
                        "10",
                        "100",
                        "64",
                        "acb,acb-ta,grw",
                        "50,100,200,300,400,500",
                        "10,30",
                    ),
                };
                k.extend([
                    ("trials", trials),
                    ("seeds", seeds),
                    ("schemes", schemes),
                    ("lambda", lambda),
                    ("data_rbs", rbs),
                    ("n_preambles", ns),
                    ("n_timing", "20"),
                    ("radius_m", "1500"),
                    ("k", "1024"),
                    ("bandwidth_hz", "1e6"),
                    ("rb_duration_s", "1e-3"),
                    ("frame_length_s", "10e-3"),
                    ("gamma0_max_db", "10"),
                    ("planning_efficiency", "0.6"),
                    ("eta_mean", "0.8"),
                    ("eta_std", "0.05"),
                    ("eta_floor", "0.6"),
                    ("eta_ceiling", "0.95"),
                    ("overhead_expansion", "1"),
                    ("overhead_snr_db", "0"),
                    ("load_knowledge", "estimated"),
                    ("n_zc", "839"),
                    ("prach_snr_db", "0"),
                    ("deferral", "largest"),
                    ("acb_p", "standard"),
                    ("llr_form", "standard"),
                ]);
                if self == Figure::Fig8 {
                    k.push(("target_snr_db", levels));
                } else {
                    k.push(("gamma_max_db", levels));
                }
                if self == Figure::Custom {
                    k.push(("metric", "devices_per_rb"));
                }
            }
        }
        k
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure tag `{s}`")))
    }
}

/// Ordered `key=value` settings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings(pub BTreeMap<String, String>);

fn is_key(k: &str) -> bool {
    !k.is_empty()
        && k.chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl Settings {
    /// Parses `key=value` lines. A leading `#` is stripped first so the
    /// header of an output file can be fed back in; lines that do not look
    /// like a setting are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = BTreeMap::new();
        for line in text.lines() {
            let hashed = line.trim_start().starts_with('#');
            let line = line.trim().trim_start_matches('#').trim();
            let Some((k, v)) = line.split_once('=') else {
                continue;
            };
            let k = k.trim();
            if !is_key(k) {
                if hashed {
                    continue;
                }
                return Err(Error::Config(format!("malformed setting `{line}`")));
            }
            if k == TIMESTAMP_KEY {
                continue;
            }
            out.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self(out))
    }

    /// Settings from variables named `ENV_PREFIX` + upper-case key.
    pub fn from_env<I: IntoIterator<Item = (String, String)>>(vars: I) -> Self {
        Self(
            vars.into_iter()
                .filter_map(|(k, v)| {
                    let key = k.strip_prefix(ENV_PREFIX)?.to_ascii_lowercase();
                    is_key(&key).then_some((key, v))
                })
                .collect(),
        )
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }
}

/// Fully resolved settings for one figure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub figure: Figure,
    values: BTreeMap<String, String>,
}

impl ExperimentSpec {
    /// Layers `file`, `env` and `flags` over the figure defaults. Keys the
    /// figure does not declare are errors in `file` and `flags`; in the
    /// environment they are skipped, since one environment may serve
    /// several figures.
    pub fn resolve(
        figure: Figure,
        file: &Settings,
        env: &Settings,
        flags: &Settings,
    ) -> Result<Self> {
        let declared = figure.keys();
        let mut values: BTreeMap<String, String> = declared
            .iter()
            .map(|&(k, v)| (k.to_string(), v.to_string()))
            .collect();
        for (layer, strict) in [(file, true), (env, false), (flags, true)] {
            for (k, v) in &layer.0 {
                if k == "figure" {
                    continue;
                }
                if values.contains_key(k) {
                    values.insert(k.clone(), v.clone());
                } else if strict {
                    return Err(Error::Config(format!("`{k}` is not a setting of {figure}")));
                } else {
                    log::warn!(
                        "ignoring {ENV_PREFIX}{} for {figure}",
                        k.to_ascii_uppercase()
                    );
                }
            }
        }
        let spec = Self { figure, values };
        spec.check()?;
        Ok(spec)
    }

    /// Defaults only.
    pub fn defaults(figure: Figure) -> Self {
        Self::resolve(
            figure,
            &Settings::default(),
            &Settings::default(),
            &Settings::default(),
        )
        .expect("defaults are valid")
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Result<Self> {
        if !self.values.contains_key(key) {
            return Err(Error::Config(format!(
                "`{key}` is not a setting of {}",
                self.figure
            )));
        }
        self.values.insert(key.to_string(), value.into());
        self.check()?;
        Ok(self)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn raw(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("{} does not declare `{key}`", self.figure)))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("cannot parse {key}={v}")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let v = self.raw(key)?;
        let items = expand_list(v).map_err(|e| Error::Config(format!("{key}: {e}")))?;
        let out = items
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Config(format!("cannot parse `{s}` in {key}")))
            })
            .collect::<Result<Vec<T>>>()?;
        if out.is_empty() {
            return Err(Error::Config(format!("{key} is empty")));
        }
        Ok(out)
    }

    /// Parses every declared value once, so bad settings fail at startup.
    fn check(&self) -> Result<()> {
        for (k, v) in &self.values {
            let numeric_list = matches!(
                k.as_str(),
                "num_devices"
                    | "snr_db"
                    | "gamma_db"
                    | "grid"
                    | "lambda"
                    | "gamma_max_db"
                    | "target_snr_db"
            );
            if numeric_list {
                self.list::<f64>(k)?;
            } else if k == "data_rbs" {
                self.data_rbs()?;
            } else if v.parse::<f64>().is_err()
                && !matches!(
                    k.as_str(),
                    "mode"
                        | "schemes"
                        | "load_knowledge"
                        | "deferral"
                        | "acb_p"
                        | "llr_form"
                        | "estimator"
                        | "precision"
                        | "metric"
                        | "degree"
                )
            {
                return Err(Error::Config(format!("cannot parse {k}={v}")));
            }
        }
        for key in ["trials", "seeds"] {
            if self.values.contains_key(key) && self.get::<u64>(key)? == 0 {
                return Err(Error::Config(format!("{key} must be at least 1")));
            }
        }
        self.mode()?;
        if self.values.contains_key("schemes") {
            self.schemes()?;
        }
        if self.values.contains_key("llr_form") {
            self.llr_form()?;
        }
        if self.values.contains_key("acb_p") {
            self.acb_rule()?;
        }
        Ok(())
    }

    pub fn mode(&self) -> Result<DecodeMode> {
        match self.raw("mode")? {
            "fast" => Ok(DecodeMode::Fast),
            "full" | "full-codec" => Ok(DecodeMode::Full),
            m => Err(Error::Config(format!("unknown mode `{m}`"))),
        }
    }

    pub fn llr_form(&self) -> Result<LlrForm> {
        match self.raw("llr_form")? {
            "standard" => Ok(LlrForm::Standard),
            "paper" => Ok(LlrForm::SquaredWeight),
            m => Err(Error::Config(format!("unknown llr form `{m}`"))),
        }
    }

    pub fn acb_rule(&self) -> Result<BarringRule> {
        match self.raw("acb_p")? {
            "standard" => Ok(BarringRule::Standard),
            "paper" => Ok(BarringRule::Inverted),
            m => Err(Error::Config(format!("unknown barring rule `{m}`"))),
        }
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>> {
        self.raw("schemes")?
            .split(',')
            .map(|s| match s.trim() {
                "grw" => Ok(Scheme::ProposedGrw),
                "exw" => Ok(Scheme::ProposedExw),
                "acb" => Ok(Scheme::AcbOriginal),
                "acb-ta" => Ok(Scheme::AcbTimingAdvance),
                o => Err(Error::Config(format!("unknown scheme `{o}`"))),
            })
            .collect()
    }

    fn data_rbs(&self) -> Result<u64> {
        match self.raw("data_rbs")? {
            "unlimited" => Ok(u64::MAX),
            _ => self.get("data_rbs"),
        }
    }

    /// System parameters for one scheme; sweep keys are left at defaults.
    pub fn system_params(&self, scheme: Scheme) -> Result<SystemParams> {
        let geometry = CellGeometry::with_groups(self.get("radius_m")?, self.get("n_timing")?);
        Ok(SystemParams {
            scheme,
            mode: self.mode()?,
            budget: FrameBudget {
                data_rbs: self.data_rbs()?,
                rb_bandwidth: self.get("bandwidth_hz")?,
                rb_duration: self.get("rb_duration_s")?,
                frame_length: self.get("frame_length_s")?,
            },
            k: self.get("k")?,
            n_preambles: self.get("n_preambles")?,
            geometry,
            gamma0_max: db_to_ratio(self.get("gamma0_max_db")?),
            efficiency: EfficiencyModel {
                mean: self.get("eta_mean")?,
                std_dev: self.get("eta_std")?,
                floor: self.get("eta_floor")?,
                ceiling: self.get("eta_ceiling")?,
            },
            planning_efficiency: self.get("planning_efficiency")?,
            overhead_expansion: self.get("overhead_expansion")?,
            overhead_snr: db_to_ratio(self.get("overhead_snr_db")?),
            deferral: match self.raw("deferral")? {
                "largest" => DeferralPolicy::LargestFirst,
                "smallest" => DeferralPolicy::SmallestFirst,
                "random" => DeferralPolicy::Random,
                o => return Err(Error::Config(format!("unknown deferral policy `{o}`"))),
            },
            load_knowledge: match self.raw("load_knowledge")? {
                "estimated" => LoadKnowledge::Estimated,
                "genie" => LoadKnowledge::Genie,
                o => return Err(Error::Config(format!("unknown load knowledge `{o}`"))),
            },
            prach: PrachParams {
                n_zc: self.get("n_zc")?,
                snr: db_to_ratio(self.get("prach_snr_db")?),
                ..PrachParams::default()
            },
            acb_rule: self.acb_rule()?,
            llr_form: self.llr_form()?,
            ..SystemParams::default()
        })
    }
}

/// Expands `a,b,c` and `start:step:stop` items.
pub fn expand_list(v: &str) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [one] => out.push(one.to_string()),
            [a, step, b] => {
                let (a, step, b): (f64, f64, f64) = (
                    a.parse().map_err(|_| format!("bad range start `{a}`"))?,
                    step.parse()
                        .map_err(|_| format!("bad range step `{step}`"))?,
                    b.parse().map_err(|_| format!("bad range stop `{b}`"))?,
                );
                if !(step > 0.0) || b < a {
                    return Err(format!("empty or endless range `{item}`"));
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                for i in 0..=n {
                    // Round away representation noise such as 0.30000000000000004.
                    let x = a + i as f64 * step;
                    out.push(format!("{}", (x * 1e9).round() / 1e9));
                }
            }
            _ => return Err(format!("bad list item `{item}`")),
        }
    }
    Ok(out)
}

/// A CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        let row: Vec<String> = row.into_iter().collect();
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Writes the header (tool version, optional timestamp, every setting) and
/// the table.
pub fn write_csv<W: Write>(
    out: &mut W,
    spec: &ExperimentSpec,
    table: &Table,
    timestamp: Option<u64>,
) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "# massive-access {}", env!("CARGO_PKG_VERSION"));
    if let Some(t) = timestamp {
        let _ = writeln!(s, "# {TIMESTAMP_KEY}={t}");
    }
    let _ = writeln!(s, "# figure={}", spec.figure);
    for (k, v) in spec.entries() {
        let _ = writeln!(s, "# {k}={v}");
    }
    let _ = writeln!(s, "{}", table.columns.join(","));
    for row in &table.rows {
        let _ = writeln!(s, "{}", row.join(","));
    }
    out.write_all(s.as_bytes())
        .map_err(|e| Error::Config(format!("cannot write output: {e}")))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn est_cells(e: Estimate) -> [String; 3] {
    [num(e.mean), num(e.stderr), e.n.to_string()]
}

/// Runs the experiment the spec describes. `threads=0` uses every core;
/// results do not depend on the thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Table> {
    let threads: usize = spec.get("threads")?;
    if threads == 0 {
        return dispatch(spec);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} threads: {e}")))?
        .install(|| dispatch(spec))
}

fn dispatch(spec: &ExperimentSpec) -> Result<Table> {
    match spec.figure {
        Figure::Fig3 => fig3(spec),
        Figure::Fig5 => codec_bench(spec),
        Figure::Fig6 => fig6(spec),
        Figure::Fig7 => fig7(spec),
        Figure::Fig8 | Figure::Fig9 | Figure::Fig10 | Figure::Fig11 | Figure::Custom => {
            system_figure(spec)
        }
    }
}

/// Trial index for sweep point `point`, trial `t`.
fn trial_id(point: usize, t: u64) -> u64 {
    ((point as u64) << 32) | t
}

fn fig3(spec: &ExperimentSpec) -> Result<Table> {
    let seed: u64 = spec.get("seed")?;
    let trials: u64 = spec.get("trials")?;
    let n_s: usize = spec.get("n_preambles")?;
    let n_t: usize = spec.get("n_timing")?;
    let mut cfg = BankConfig::new(spec.get("n_zc")?, n_s, n_t);
    cfg.check = LengthCheck::Warn;
    let est = LoadEstimator::<f64>::new(&PreambleBank::new(&cfg)?);
    let est_cfg = match spec.raw("estimator")? {
        "default" => crate::ra::EstimatorConfig::default(),
        "literal" => crate::ra::EstimatorConfig::literal(),
        o => return Err(Error::Config(format!("unknown estimator `{o}`"))),
    };
    let noise = 1.0 / db_to_ratio(spec.get("snr_db")?);
    let geometry = CellGeometry::with_groups(1500.0, n_t);
    let mut table = Table::new(&[
        "num_devices",
        "mean_accuracy",
        "stderr",
        "mean_abs_error",
        "trials",
    ]);
    for (p, n) in spec.list::<usize>("num_devices")?.into_iter().enumerate() {
        let errs = (0..trials)
            .into_par_iter()
            .map(|t| {
                let id = trial_id(p, t);
                let truth = assign_devices(
                    n,
                    n_s,
                    &geometry,
                    &mut seed_stream(seed, id, lanes::PREAMBLE),
                );
                let obs = synthesize_prach(
                    &truth,
                    est.bank(),
                    noise,
                    &mut seed_stream(seed, id, lanes::PRACH_NOISE),
                )?;
                let got = est.estimate(&obs, &est_cfg)?.counts;
                Ok(crate::ra::estimation_accuracy(&got, &truth).abs())
            })
            .collect::<Result<Vec<f64>>>()?;
        let acc = Estimate::of(&errs.iter().map(|e| 1.0 - e).collect::<Vec<_>>());
        let mae = errs.iter().sum::<f64>() / errs.len() as f64;
        table.push([
            n.to_string(),
            num(acc.mean),
            num(acc.stderr),
            num(mae),
            trials.to_string(),
        ]);
    }
    Ok(table)
}

/// Outcome of one single-device link run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkTrial {
    pub success: bool,
    pub symbols: usize,
    pub rate: f64,
    pub efficiency: f64,
}

/// Single device over the complex Gaussian channel at `snr`.
pub fn link_trial(
    k: usize,
    degree: &DegreeDistribution,
    snr: f64,
    seed: u64,
    trial: u64,
    cfg: &MsdConfig,
    f32_math: bool,
) -> Result<LinkTrial> {
    let code = RaptorCode::new(RaptorCodeSpec {
        degree_dist: degree.clone(),
        ..RaptorCodeSpec::new(k, derive_seed(&[seed, trial, 0x6c696e6b]))
    })?;
    let mut msg_rng = seed_stream(seed, trial, lanes::MESSAGES);
    let dev = DeviceCodec {
        code: &code,
        adapter: AdapterStream::new(derive_seed(&[seed, trial, 0x6164])),
        message: (0..k).map(|_| msg_rng.random_range(0..2u8)).collect(),
    };
    let ideal = k as f64 / (1.0 + snr).log2();
    let n = (ideal * cfg.cap_factor).floor() as usize;
    let mut ch = seed_stream(seed, trial, lanes::CHANNEL);
    let report = if f32_math {
        let profile = exw_optimal_weights::<f32>(1, snr as f32)?;
        let frame = superpose_with(
            vec![dev.modulate(&dev.message, n)?],
            &profile,
            PhaseModel::Random,
            1.0,
            &mut ch,
        )?;
        decode_multistage(&frame, std::slice::from_ref(&dev), None, cfg)?
    } else {
        let profile = exw_optimal_weights::<f64>(1, snr)?;
        let frame = superpose_with(
            vec![dev.modulate(&dev.message, n)?],
            &profile,
            PhaseModel::Random,
            1.0,
            &mut ch,
        )?;
        decode_multistage(&frame, std::slice::from_ref(&dev), None, cfg)?
    };
    let st = &report.per_stage[0];
    Ok(LinkTrial {
        success: st.success,
        symbols: st.symbols_consumed,
        rate: st.realized_rate,
        efficiency: st.realized_rate / (1.0 + snr).log2(),
    })
}

fn codec_bench(spec: &ExperimentSpec) -> Result<Table> {
    let seed: u64 = spec.get("seed")?;
    let trials: u64 = spec.get("trials")?;
    let k: usize = spec.get("k")?;
    let stall: usize = spec.get("stall_iters")?;
    let cfg = MsdConfig {
        decoder: StageDecoder::Spa(SpaConfig {
            max_iters: spec.get("max_iters")?,
            stall_iters: (stall > 0).then_some(stall),
        }),
        llr_form: spec.llr_form()?,
        cap_factor: spec.get("cap_factor")?,
        ..MsdConfig::default()
    };
    let f32_math = match spec.raw("precision")? {
        "f32" => true,
        "f64" => false,
        o => return Err(Error::Config(format!("unknown precision `{o}`"))),
    };
    let degree = match spec.raw("degree")? {
        "builtin" => DegreeDistribution::low_snr(),
        path => std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read degree file {path}: {e}")))?
            .parse()?,
    };
    let mut table = Table::new(&[
        "snr_db",
        "trial",
        "success",
        "symbols_consumed",
        "rate",
        "efficiency",
    ]);
    for (p, snr_db) in spec.list::<f64>("snr_db")?.into_iter().enumerate() {
        let snr = db_to_ratio(snr_db);
        let runs = (0..trials)
            .into_par_iter()
            .map(|t| link_trial(k, &degree, snr, seed, trial_id(p, t), &cfg, f32_math))
            .collect::<Result<Vec<_>>>()?;
        for (t, r) in runs.iter().enumerate() {
            table.push([
                num(snr_db),
                t.to_string(),
                (r.success as u8).to_string(),
                r.symbols.to_string(),
                num(r.rate),
                num(r.efficiency),
            ]);
        }
    }
    Ok(table)
}

/// Minimum effective SNR over `trials` random exponential assignments of
/// `l` devices at per-layer target `target`.
pub fn exw_min_snr_samples(
    l: usize,
    target: f64,
    seed: u64,
    point: usize,
    trials: u64,
) -> Result<Vec<f64>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed_stream(seed, trial_id(point, t), lanes::WEIGHTS);
            let a = exw_random_assignment::<f64, _>(l, target, &mut rng)?;
            Ok(effective_snrs(&a.profile)
                .into_iter()
                .fold(f64::INFINITY, f64::min))
        })
        .collect()
}

/// `(1 + γ)^(1/L) - 1`.
pub fn exw_target_for_total(l: usize, total: f64) -> f64 {
    (total.ln_1p() / l as f64).exp_m1()
}

fn fig6(spec: &ExperimentSpec) -> Result<Table> {
    let seed: u64 = spec.get("seed")?;
    let trials: u64 = spec.get("trials")?;
    let gamma = db_to_ratio(spec.get("gamma_db")?);
    let shift: f64 = spec.get("mean_shift")?;
    let grid: Vec<f64> = spec.list("grid")?;
    let mut table = Table::new(&[
        "num_devices",
        "x_over_gamma0",
        "model_cdf",
        "empirical_cdf",
        "trials",
    ]);
    for (p, l) in spec.list::<usize>("num_devices")?.into_iter().enumerate() {
        let g0 = exw_target_for_total(l, gamma);
        let model = MinSnrModel::new(l, g0)?.with_mean_shift(shift);
        let mut ratios: Vec<f64> = exw_min_snr_samples(l, g0, seed, p, trials)?
            .into_iter()
            .map(|m| m / g0)
            .collect();
        ratios.sort_by(f64::total_cmp);
        for &x in &grid {
            let below = ratios.partition_point(|&r| r <= x);
            table.push([
                l.to_string(),
                num(x),
                num(model.cdf(x * g0)),
                num(below as f64 / trials as f64),
                trials.to_string(),
            ]);
        }
    }
    Ok(table)
}

fn fig7(spec: &ExperimentSpec) -> Result<Table> {
    let seed: u64 = spec.get("seed")?;
    let trials: u64 = spec.get("trials")?;
    let mut table = Table::new(&[
        "gamma_db",
        "num_devices",
        "sim_rate",
        "stderr",
        "model_rate",
        "design_rate",
        "trials",
    ]);
    let mut point = 0;
    for gamma_db in spec.list::<f64>("gamma_db")? {
        for l in spec.list::<usize>("num_devices")? {
            let g0 = exw_target_for_total(l, db_to_ratio(gamma_db));
            let rates: Vec<f64> = exw_min_snr_samples(l, g0, seed, point, trials)?
                .into_iter()
                .map(|m| m.ln_1p() / std::f64::consts::LN_2)
                .collect();
            point += 1;
            let e = Estimate::of(&rates);
            table.push([
                num(gamma_db),
                l.to_string(),
                num(e.mean),
                num(e.stderr),
                num(MinSnrModel::new(l, g0)?.mean_rate()?),
                num((1.0 + g0).log2()),
                trials.to_string(),
            ]);
        }
    }
    Ok(table)
}

fn system_figure(spec: &ExperimentSpec) -> Result<Table> {
    let seed: u64 = spec.get("seed")?;
    let frames: u64 = spec.get("trials")?;
    let n_seeds: u64 = spec.get("seeds")?;
    let seeds: Vec<u64> = (0..n_seeds).map(|s| derive_seed(&[seed, s])).collect();
    let (level_key, fixed) = if spec.figure == Figure::Fig8 {
        ("target_snr_db", true)
    } else {
        ("gamma_max_db", false)
    };
    let metrics: Vec<&str> = match spec.figure {
        Figure::Fig8 | Figure::Fig9 => vec!["devices_per_rb"],
        Figure::Fig10 => vec!["served_per_frame"],
        Figure::Fig11 => vec!["delay_frames", "delay_seconds"],
        _ => vec![spec.raw("metric")?],
    };
    let mut table = Table::new(&[
        "scheme", level_key, "lambda", "metric", "mean", "stderr", "trials",
    ]);
    for scheme in spec.schemes()? {
        let levels: Vec<Option<f64>> = if scheme.is_proposed() {
            spec.list::<f64>(level_key)?.into_iter().map(Some).collect()
        } else {
            vec![None]
        };
        for level in levels {
            for lambda in spec.list::<f64>("lambda")? {
                let mut params = spec.system_params(scheme)?;
                params.lambda = lambda;
                match (level, fixed) {
                    (Some(db), true) => params.fixed_target = Some(db_to_ratio(db)),
                    (Some(db), false) => params.gamma_max = db_to_ratio(db),
                    (None, _) => {}
                }
                let r = run_scenario(&params, frames, &seeds)?;
                for &m in &metrics {
                    let e = match m {
                        "devices_per_rb" => r.devices_per_rb,
                        "served_per_frame" => r.served_per_frame,
                        "delay_frames" => r.delay_frames,
                        "delay_seconds" => r.delay_seconds,
                        o => return Err(Error::Config(format!("unknown metric `{o}`"))),
                    };
                    let [mean, se, n] = est_cells(e);
                    table.push([
                        scheme_tag(scheme).to_string(),
                        level.map(num).unwrap_or_default(),
                        num(lambda),
                        m.to_string(),
                        mean,
                        se,
                        n,
                    ]);
                }
            }
        }
    }
    Ok(table)
}

pub fn scheme_tag(s: Scheme) -> &'static str {
    match s {
        Scheme::ProposedGrw => "grw",
        Scheme::ProposedExw => "exw",
        Scheme::AcbOriginal => "acb",
        Scheme::AcbTimingAdvance => "acb-ta",
    }
}
