//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use massive_access::analysis::{
    acb_transmit_probability, min_rate_eqw, min_snr_cdf_models, weight_overhead_rbs, AcbConfig,
    AcbScheme, BarringRule, MinSnrModel,
};
use massive_access::harness::{
    expand_list, exw_target_for_total, run_experiment, write_csv, ExperimentSpec, Figure, Settings,
    Table,
};
use massive_access::ra::CellGeometry;
use massive_access::raptor::{asymptotic_degree_density, DegreeDistribution};
use massive_access::scalar::db_to_ratio;

#[derive(Debug, Parser)]
#[command(
    name = "massive-access",
    version,
    about = "Random access and superposition-coded uplink simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a figure experiment and write CSV.
    Simulate(SimulateArgs),
    /// Evaluate closed-form expressions.
    Analyze(AnalyzeArgs),
    /// Single-device Raptor link benchmark.
    CodecBench(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormChoice {
    Standard,
    Paper,
}

impl FormChoice {
    fn tag(self) -> &'static str {
        match self {
            FormChoice::Standard => "standard",
            FormChoice::Paper => "paper",
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// fig3, fig5 .. fig11 or custom.
    #[arg(long)]
    pub figure: String,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Trials per point; frames per seed for system figures.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key=value` settings file. Output headers can be fed back in.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub llr_form: Option<FormChoice>,
    #[arg(long, value_enum)]
    pub acb_p: Option<FormChoice>,
    /// Any other setting, e.g. `--set lambda=50,100`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    pub op: AnalyzeOp,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeOp {
    /// Distribution of the smallest effective SNR under random exponential
    /// weight assignment.
    #[command(allow_negative_numbers = true)]
    MinSnrCdf {
        /// Number of devices; ignored when `--lambda` is given.
        #[arg(long = "L", default_value_t = 16)]
        l: usize,
        /// Total received SNR the per-layer target is derived from.
        #[arg(long, default_value_t = 20.0)]
        gamma_db: f64,
        /// Per-layer target instead of `--gamma-db`.
        #[arg(long)]
        target_db: Option<f64>,
        /// Evaluation points in units of the per-layer target.
        #[arg(long, default_value = "0.1:0.1:2")]
        grid: String,
        /// Average over a Poisson number of devices with this mean.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Worst-layer rate with equal weights.
    #[command(allow_negative_numbers = true)]
    EqwRate {
        #[arg(long = "L")]
        l: usize,
        #[arg(long)]
        snr_db: f64,
    },
    /// Resource blocks spent sending weight information.
    #[command(allow_negative_numbers = true)]
    Overhead {
        #[arg(long)]
        devices: usize,
        #[arg(long, default_value_t = 1.0)]
        expansion: f64,
        #[arg(long, default_value_t = 0.0)]
        snr_db: f64,
        #[arg(long, default_value_t = 1e6)]
        bandwidth_hz: f64,
        #[arg(long, default_value_t = 1e-3)]
        rb_duration_s: f64,
    },
    /// Access-class-barring transmit probability.
    AcbP {
        #[arg(long, value_enum, default_value_t = AcbChoice::Original)]
        scheme: AcbChoice,
        #[arg(long, default_value_t = 64)]
        preambles: usize,
        /// Contending devices.
        #[arg(long)]
        devices: String,
        #[arg(long, default_value_t = 1500.0)]
        radius_m: f64,
        #[arg(long, default_value_t = 20)]
        timing_groups: usize,
        #[arg(long, value_enum, default_value_t = FormChoice::Standard)]
        acb_p: FormChoice,
    },
    /// Output-degree distribution as `d coefficient` lines.
    Degree {
        /// Print the built-in distribution instead of fitting.
        #[arg(long)]
        builtin: bool,
        #[arg(long, default_value_t = 60)]
        max_degree: usize,
        #[arg(long, default_value_t = 200)]
        grid_points: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AcbChoice {
    Original,
    Ta,
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Builds the experiment spec for `figure` from a config file, environment
/// variables and flags, in increasing precedence.
pub fn resolve_spec<I>(figure: Figure, run: &RunArgs, env: I) -> Result<ExperimentSpec, String>
where
    I: IntoIterator<Item = (String, String)>,
{
    let file = match &run.config {
        Some(p) => {
            Settings::parse(&fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?)
                .map_err(err)?
        }
        None => Settings::default(),
    };
    let mut flags = Settings::default();
    for kv in &run.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        flags.set(k.trim(), v.trim());
    }
    if let Some(m) = run.mode {
        flags.set("mode", if m == Mode::Fast { "fast" } else { "full" });
    }
    if let Some(t) = run.trials {
        flags.set("trials", t.to_string());
    }
    if let Some(s) = run.seed {
        flags.set("seed", s.to_string());
    }
    if let Some(f) = run.llr_form {
        flags.set("llr_form", f.tag());
    }
    if let Some(f) = run.acb_p {
        flags.set("acb_p", f.tag());
    }
    ExperimentSpec::resolve(figure, &file, &Settings::from_env(env), &flags).map_err(err)
}

fn emit(out: &Option<PathBuf>, text: &[u8], stdout: &mut dyn Write) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => stdout.write_all(text).map_err(err),
    }
}

fn run_figure(
    figure: Figure,
    run: &RunArgs,
    env: Vec<(String, String)>,
    stdout: &mut dyn Write,
) -> Result<(), String> {
    let spec = resolve_spec(figure, run, env)?;
    log::info!("running {figure}");
    let table = run_experiment(&spec).map_err(err)?;
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut buf = Vec::new();
    write_csv(&mut buf, &spec, &table, Some(now)).map_err(err)?;
    emit(&run.out, &buf, stdout)
}

fn analysis_csv(op: &str, params: &[(&str, String)], table: &Table) -> String {
    let mut s = format!(
        "# massive-access {}\n# op={op}\n",
        env!("CARGO_PKG_VERSION")
    );
    for (k, v) in params {
        s.push_str(&format!("# {k}={v}\n"));
    }
    s.push_str(&table.columns.join(","));
    s.push('\n');
    for r in &table.rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    expand_list(v)?
        .iter()
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: `{s}`")))
        .collect()
}

fn analyze(op: &AnalyzeOp) -> Result<String, String> {
    Ok(match op {
        AnalyzeOp::MinSnrCdf {
            l,
            gamma_db,
            target_db,
            grid,
            lambda,
        } => {
            let grid = parse_list(grid)?;
            let mut t = Table::new(&["x_over_gamma0", "cdf"]);
            let (target, cdf): (f64, Box<dyn Fn(f64) -> f64>) = match (lambda, target_db) {
                (Some(lam), _) => {
                    let g0 = db_to_ratio(target_db.unwrap_or(0.0));
                    let m = min_snr_cdf_models(*lam, g0).map_err(err)?;
                    (g0, Box::new(move |x| m.cdf(x)))
                }
                (None, td) => {
                    let g0 = match td {
                        Some(db) => db_to_ratio(*db),
                        None => exw_target_for_total(*l, db_to_ratio(*gamma_db)),
                    };
                    let m = MinSnrModel::new(*l, g0).map_err(err)?;
                    (g0, Box::new(move |x| m.cdf(x)))
                }
            };
            for x in grid {
                t.push([x.to_string(), cdf(x * target).to_string()]);
            }
            let mut params = vec![("target", target.to_string())];
            match lambda {
                Some(lam) => params.push(("lambda", lam.to_string())),
                None => params.push(("num_devices", l.to_string())),
            }
            analysis_csv("min-snr-cdf", &params, &t)
        }
        AnalyzeOp::EqwRate { l, snr_db } => {
            let r = min_rate_eqw(*l, 1.0 / db_to_ratio(*snr_db)).map_err(err)?;
            let mut t = Table::new(&["num_devices", "snr_db", "min_rate"]);
            t.push([l.to_string(), snr_db.to_string(), r.to_string()]);
            analysis_csv("eqw-rate", &[], &t)
        }
        AnalyzeOp::Overhead {
            devices,
            expansion,
            snr_db,
            bandwidth_hz,
            rb_duration_s,
        } => {
            let n = weight_overhead_rbs(
                *expansion,
                *devices,
                db_to_ratio(*snr_db),
                *bandwidth_hz,
                *rb_duration_s,
            )
            .map_err(err)?;
            let mut t = Table::new(&["num_devices", "rbs"]);
            t.push([devices.to_string(), n.to_string()]);
            analysis_csv(
                "overhead",
                &[
                    ("expansion", expansion.to_string()),
                    ("snr_db", snr_db.to_string()),
                ],
                &t,
            )
        }
        AnalyzeOp::AcbP {
            scheme,
            preambles,
            devices,
            radius_m,
            timing_groups,
            acb_p,
        } => {
            let mut cfg = AcbConfig::new(
                match scheme {
                    AcbChoice::Original => AcbScheme::Original,
                    AcbChoice::Ta => AcbScheme::TimingAdvance,
                },
                *preambles,
                CellGeometry::with_groups(*radius_m, *timing_groups),
            );
            cfg.rule = match acb_p {
                FormChoice::Standard => BarringRule::Standard,
                FormChoice::Paper => BarringRule::Inverted,
            };
            let mut t = Table::new(&["num_devices", "p"]);
            for n in parse_list(devices)? {
                let n = n as usize;
                t.push([n.to_string(), acb_transmit_probability(&cfg, n).to_string()]);
            }
            analysis_csv(
                "acb-p",
                &[
                    ("preambles", preambles.to_string()),
                    ("rule", acb_p.tag().to_string()),
                ],
                &t,
            )
        }
        AnalyzeOp::Degree {
            builtin,
            max_degree,
            grid_points,
        } => {
            let dd: DegreeDistribution = if *builtin {
                DegreeDistribution::low_snr()
            } else {
                let grid: Vec<f64> = (1..=*grid_points)
                    .map(|i| i as f64 / *grid_points as f64)
                    .collect();
                asymptotic_degree_density(&grid, *max_degree)
                    .map_err(err)?
                    .distribution
            };
            dd.to_string()
        }
    })
}

/// Runs the command line `args` (program name first) with environment
/// `env`. Output without `--out` goes to `stdout`.
pub fn run_cli<A, E>(args: A, env: E, stdout: &mut dyn Write) -> Result<(), String>
where
    A: IntoIterator,
    A::Item: Into<OsString> + Clone,
    E: IntoIterator<Item = (String, String)>,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            return stdout.write_all(e.to_string().as_bytes()).map_err(err);
        }
        Err(e) => return Err(e.to_string()),
    };
    let env: Vec<(String, String)> = env.into_iter().collect();
    match cli.command {
        Command::Simulate(a) => {
            let fig: Figure = a.figure.parse().map_err(err)?;
            run_figure(fig, &a.run, env, stdout)
        }
        Command::CodecBench(run) => run_figure(Figure::Fig5, &run, env, stdout),
        Command::Analyze(a) => {
            let text = analyze(&a.op)?;
            emit(&a.out, text.as_bytes(), stdout)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str], env: &[(&str, &str)]) -> Result<String, String> {
        let mut out = Vec::new();
        let argv = std::iter::once("massive-access").chain(args.iter().copied());
        let env = env.iter().map(|(k, v)| (k.to_string(), v.to_string()));
        run_cli(argv, env, &mut out)?;
        Ok(String::from_utf8(out).unwrap())
    }

    fn body(csv: &str) -> Vec<&str> {
        csv.lines().filter(|l| !l.starts_with('#')).collect()
    }

    #[test]
    fn simulate_writes_header_and_rows() {
        let out = run(
            &[
                "simulate",
                "--figure",
                "fig6",
                "--trials",
                "50",
                "--set",
                "grid=0.5,1",
                "--set",
                "num_devices=4",
            ],
            &[],
        )
        .unwrap();
        assert!(out.starts_with("# massive-access "));
        assert!(out.contains("# figure=fig6\n"));
        assert!(out.contains("# trials=50\n"));
        let rows = body(&out);
        assert_eq!(
            rows[0],
            "num_devices,x_over_gamma0,model_cdf,empirical_cdf,trials"
        );
        assert_eq!(rows.len(), 3);
    }

    #[test]
    fn precedence_is_config_env_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "trials = 7\nseed = 3\nnum_devices = 4\ngrid = 1\n").unwrap();
        let c = cfg.to_str().unwrap();
        let out = run(
            &["simulate", "--figure", "fig6", "--config", c],
            &[
                ("MASSIVE_ACCESS_SEED", "11"),
                ("MASSIVE_ACCESS_TRIALS", "9"),
            ],
        )
        .unwrap();
        assert!(out.contains("# seed=11\n") && out.contains("# trials=9\n"));
        let out = run(
            &[
                "simulate", "--figure", "fig6", "--config", c, "--trials", "5",
            ],
            &[("MASSIVE_ACCESS_TRIALS", "9")],
        )
        .unwrap();
        assert!(out.contains("# trials=5\n") && out.contains("# seed=3\n"));
    }

    #[test]
    fn header_feeds_back_as_config() {
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("a.csv");
        let p = first.to_str().unwrap();
        run(
            &[
                "simulate",
                "--figure",
                "fig7",
                "--trials",
                "20",
                "--seed",
                "4",
                "--set",
                "num_devices=2,4",
                "--set",
                "gamma_db=10",
                "--out",
                p,
            ],
            &[],
        )
        .unwrap();
        let again = run(&["simulate", "--figure", "fig7", "--config", p], &[]).unwrap();
        assert_eq!(body(&fs::read_to_string(p).unwrap()), body(&again));
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(run(&["simulate", "--figure", "fig4"], &[]).is_err());
        assert!(run(&["simulate", "--figure", "fig3", "--acb-p", "paper"], &[]).is_err());
        assert!(run(&["simulate", "--figure", "fig6", "--trials", "0"], &[]).is_err());
        assert!(run(&["simulate", "--figure", "fig6", "--set", "grid"], &[]).is_err());
    }

    #[test]
    fn analyze_ops() {
        let out = run(&["analyze", "eqw-rate", "--L", "2", "--snr-db", "0"], &[]).unwrap();
        let row = body(&out)[1].to_string();
        // Two layers of power 1/2 each against unit noise: log2(1 + 0.5/1.5).
        let r: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((r - (4.0f64 / 3.0).log2()).abs() < 1e-12);

        let out = run(&["analyze", "overhead", "--devices", "1000"], &[]).unwrap();
        assert_eq!(body(&out)[1], "1000,1");

        let out = run(&["analyze", "acb-p", "--devices", "32,128"], &[]).unwrap();
        assert_eq!(&body(&out)[1..], &["32,1", "128,0.5"]);

        let out = run(&["analyze", "degree", "--builtin"], &[]).unwrap();
        let dd: DegreeDistribution = out.parse().unwrap();
        assert_eq!(dd, DegreeDistribution::low_snr());

        let out = run(
            &["analyze", "min-snr-cdf", "--L", "8", "--grid", "0.5,1,1.5"],
            &[],
        )
        .unwrap();
        let cdf: Vec<f64> = body(&out)[1..]
            .iter()
            .map(|r| r.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
    }

    fn points(csv: &str) -> Vec<(f64, f64)> {
        body(csv)[1..]
            .iter()
            .map(|r| {
                let mut it = r.split(',').map(|v| v.parse::<f64>().unwrap());
                (it.next().unwrap(), it.next().unwrap())
            })
            .collect()
    }

    #[test]
    fn min_snr_cdf_matches_the_library() {
        let out = run(
            &[
                "analyze",
                "min-snr-cdf",
                "--L",
                "16",
                "--target-db",
                "-5",
                "--grid",
                "0.25:0.25:2",
            ],
            &[],
        )
        .unwrap();
        let g0 = 10f64.powf(-0.5);
        let m = MinSnrModel::new(16, g0).unwrap();
        let pts = points(&out);
        assert_eq!(pts.len(), 8);
        for (x, f) in pts {
            assert!((f - m.cdf(x * g0)).abs() < 1e-12, "x {x}");
        }

        let out = run(
            &[
                "analyze",
                "min-snr-cdf",
                "--lambda",
                "20",
                "--target-db",
                "-10",
                "--grid",
                "0.5,1,2",
            ],
            &[],
        )
        .unwrap();
        let m = min_snr_cdf_models(20.0, 0.1).unwrap();
        for (x, f) in points(&out) {
            assert!((f - m.cdf(x * 0.1)).abs() < 1e-12, "x {x}");
        }
    }

    #[test]
    fn out_flag_writes_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fig6.csv");
        let p = path.to_str().unwrap();
        let printed = run(
            &[
                "simulate",
                "--figure",
                "fig6",
                "--seed",
                "9",
                "--set",
                "num_devices=16",
                "--set",
                "grid=1",
                "--out",
                p,
            ],
            &[("MASSIVE_ACCESS_TRIALS", "50")],
        )
        .unwrap();
        assert!(printed.is_empty());
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("# trials=50\n"), "{text}");
        assert!(text.contains("# seed=9\n"));
        assert_eq!(body(&text).len(), 2);
    }
}
