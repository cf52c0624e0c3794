//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use massive_access::analysis::{min_snr_cdf_models, MinSnrModel};
use massive_access::harness::{
    exw_min_snr_samples, exw_target_for_total, run_experiment, write_csv, ExperimentSpec, Figure,
    Table,
};
use massive_access::ra::{
    assign_devices, estimation_accuracy, sample_arrivals, synthesize_prach, CellGeometry,
    EstimatorConfig, LoadEstimator, LoadMatrix,
};
use massive_access::scalar::db_to_ratio;
use massive_access::seed::{seed_stream, RandomStream};
use massive_access::superposition::{
    effective_snrs, eqw_profile, exw_optimal_weights, exw_random_assignment, exw_total_snr,
    grw_profile, grw_target_for_total, GroupOrder, WeightProfile,
};
use massive_access::zc::{BankConfig, LengthCheck, PreambleBank};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn spec(figure: Figure, settings: &[(&str, &str)]) -> ExperimentSpec {
    settings
        .iter()
        .fold(ExperimentSpec::defaults(figure), |s, (k, v)| {
            s.with(k, *v).expect("valid setting")
        })
}

fn csv_without_timestamp(spec: &ExperimentSpec, table: &Table) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, spec, table, None).expect("in-memory write");
    buf
}

/// Column `name` of the row where `keys` match.
fn lookup(table: &Table, keys: &[(&str, &str)], name: &str) -> f64 {
    let idx: Vec<(usize, &str)> = keys
        .iter()
        .map(|(k, v)| (table.column(k).expect("key column"), *v))
        .collect();
    let col = table.column(name).expect("value column");
    let row = table
        .rows
        .iter()
        .find(|r| idx.iter().all(|&(i, v)| r[i] == v))
        .unwrap_or_else(|| panic!("no row with {keys:?}"));
    row[col].parse().expect("numeric cell")
}

fn random_total(rng: &mut RandomStream) -> f64 {
    db_to_ratio(rng.random_range(-10.0..=30.0))
}

fn random_groups(rng: &mut RandomStream, l: usize) -> Vec<usize> {
    let mut left = l;
    let mut sizes = Vec::new();
    while left > 0 {
        let r = rng.random_range(1..=left.min(8));
        sizes.push(r);
        left -= r;
    }
    sizes
}

fn telescoping_gap(p: &WeightProfile<f64>) -> f64 {
    let sum: f64 = effective_snrs(p).iter().map(|g| g.ln_1p()).sum();
    let total = p.total_power() / p.noise_variance();
    rel(sum, total.ln_1p())
}

fn criterion_1() -> Outcome {
    let mut rng = seed_stream(SEED, 1, 0);
    let mut worst: f64 = 0.0;
    for t in 0..1000 {
        let l = rng.random_range(1..=128);
        let total = random_total(&mut rng);
        let p = match t % 4 {
            0 => eqw_profile(l, total).unwrap(),
            1 => exw_optimal_weights(l, exw_target_for_total(l, total)).unwrap(),
            2 => {
                exw_random_assignment(l, exw_target_for_total(l, total), &mut rng)
                    .unwrap()
                    .profile
            }
            _ => {
                let sizes = random_groups(&mut rng, l);
                let g0 = grw_target_for_total(&sizes, total).unwrap();
                grw_profile(&sizes, g0, GroupOrder::Ascending)
                    .unwrap()
                    .profile
            }
        };
        worst = worst.max(telescoping_gap(&p));
    }
    outcome(
        worst < 1e-9,
        format!("worst relative error {worst:.2e} over 1000 profiles"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = seed_stream(SEED, 2, 0);
    let (mut worst_layer, mut worst_total): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let l = rng.random_range(1..=128);
        let g0 = db_to_ratio(rng.random_range(-20.0..=10.0));
        let p = exw_optimal_weights(l, g0).unwrap();
        for g in effective_snrs(&p) {
            worst_layer = worst_layer.max(rel(g, g0));
        }
        let want = (l as f64 * g0.ln_1p()).exp_m1();
        worst_total = worst_total
            .max(rel(p.total_power() / p.noise_variance(), want))
            .max(rel(exw_total_snr(l, g0), want));
    }
    outcome(
        worst_layer < 1e-9 && worst_total < 1e-12,
        format!("per-layer {worst_layer:.2e}, total {worst_total:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = seed_stream(SEED, 3, 0);
    let mut ok = true;
    let mut worst_floor: f64 = 0.0;
    for _ in 0..500 {
        let l = rng.random_range(1..=128);
        let sizes = random_groups(&mut rng, l);
        let r_max = *sizes.iter().max().unwrap();
        let cap = if r_max > 1 {
            1.0 / (r_max - 1) as f64
        } else {
            10.0
        };
        let g0 = cap * rng.random_range(0.01..0.99);
        let d = grw_profile(&sizes, g0, GroupOrder::Ascending).unwrap();
        let snr = effective_snrs(&d.profile);
        let groups = d.profile.layer_groups();
        let min = snr.iter().copied().fold(f64::INFINITY, f64::min);
        worst_floor = worst_floor.max(g0 - min);
        let first_hits = (0..snr.len())
            .filter(|&i| i == 0 || groups[i] != groups[i - 1])
            .any(|i| rel(snr[i], g0) < 1e-9);
        ok &= min >= g0 - 1e-9 && first_hits;
    }
    let mut worst_single: f64 = 0.0;
    for _ in 0..100 {
        let l = rng.random_range(1..=128);
        let g0 = db_to_ratio(rng.random_range(-20.0..=10.0));
        let a = grw_profile(&vec![1; l], g0, GroupOrder::Ascending)
            .unwrap()
            .profile;
        let b = exw_optimal_weights(l, g0).unwrap();
        let (wa, wb) = (a.layer_weights(), b.layer_weights());
        for (x, y) in wa.iter().zip(&wb) {
            worst_single =
                worst_single.max(rel(x * x / a.noise_variance(), y * y / b.noise_variance()));
        }
    }
    ok &= worst_single < 1e-12;
    outcome(
        ok,
        format!(
            "max shortfall below target {worst_floor:.2e}; singleton mismatch {worst_single:.2e}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let gamma = db_to_ratio(20.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for (point, l) in [16usize, 64].into_iter().enumerate() {
        let g0 = exw_target_for_total(l, gamma);
        let samples = exw_min_snr_samples(l, g0, SEED, point, 10_000).unwrap();
        let mc = samples.iter().sum::<f64>() / samples.len() as f64 / g0;
        let model = MinSnrModel::new(l, g0).unwrap().mean().unwrap() / g0;
        let gap = (model - mc) / mc;
        ok &= gap.abs() <= 0.05;
        parts.push(format!(
            "L={l}: simulated {mc:.4}, model {model:.4} ({:+.1}%)",
            gap * 100.0
        ));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_5() -> Outcome {
    let cfg = BankConfig {
        check: LengthCheck::Warn,
        ..BankConfig::new(100, 20, 20)
    };
    let est = LoadEstimator::<f64>::new(&PreambleBank::new(&cfg).unwrap());
    let geometry = CellGeometry::with_groups(1500.0, 20);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (point, n) in (20..=100).step_by(20).enumerate() {
        let mut sum = 0.0;
        for t in 0..200u64 {
            let id = ((point as u64) << 32) | t;
            let truth = assign_devices(n, 20, &geometry, &mut seed_stream(SEED, id, 3));
            let obs =
                synthesize_prach(&truth, est.bank(), 1.0, &mut seed_stream(SEED, id, 4)).unwrap();
            let got = est
                .estimate(&obs, &EstimatorConfig::default())
                .unwrap()
                .counts;
            sum += estimation_accuracy(&got, &truth).abs();
        }
        let mean = sum / 200.0;
        worst = worst.max(mean);
        parts.push(format!("{n}:{:.1}%", mean * 100.0));
    }
    let mut rng = seed_stream(SEED, 5, 0);
    let mut exact = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=30);
        let mut cells: Vec<usize> = (0..400).collect();
        for i in 0..n {
            let j = rng.random_range(i..400);
            cells.swap(i, j);
        }
        let picked: Vec<(usize, usize)> =
            cells[..n].iter().map(|&c| (c / 20, c % 20 + 1)).collect();
        let truth = LoadMatrix::from_cells(20, 20, &picked);
        let obs = synthesize_prach(&truth, est.bank(), 0.0, &mut rng).unwrap();
        let got = est
            .estimate(&obs, &EstimatorConfig::default())
            .unwrap()
            .counts;
        exact += usize::from(got == truth);
    }
    outcome(
        worst <= 0.10 && exact == 100,
        format!(
            "mean |relative error| {}; noiseless exact {exact}/100",
            parts.join(" ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let s = spec(
        Figure::Fig5,
        &[
            ("snr_db", "-10"),
            ("trials", "100"),
            ("seed", "6"),
            ("precision", "f32"),
        ],
    );
    let table = run_experiment(&s).unwrap();
    let col = table.column("efficiency").unwrap();
    let mut eff: Vec<f64> = table.rows.iter().map(|r| r[col].parse().unwrap()).collect();
    eff.sort_by(f64::total_cmp);
    let above = eff.iter().filter(|&&e| e >= 0.6).count();
    let median = (eff[49] + eff[50]) / 2.0;
    outcome(
        above >= 90 && median >= 0.7,
        format!(
            "{above}/100 trials at efficiency >= 0.6, median {median:.3}, min {:.3}",
            eff[0]
        ),
    )
}

fn fig9_spec(frames: &str) -> ExperimentSpec {
    spec(
        Figure::Fig9,
        &[
            ("schemes", "grw,exw"),
            ("lambda", "500"),
            ("gamma_max_db", "30"),
            ("trials", frames),
            ("seeds", "1"),
            ("seed", "7"),
        ],
    )
}

fn criterion_7() -> Outcome {
    let table = run_experiment(&fig9_spec("200")).unwrap();
    let grw = lookup(&table, &[("scheme", "grw")], "mean");
    let exw = lookup(&table, &[("scheme", "exw")], "mean");
    outcome(
        grw > exw && (5.5..=8.5).contains(&grw) && (3.5..=6.5).contains(&exw),
        format!("devices per RB at lambda 500: GrW {grw:.3}, ExW {exw:.3}"),
    )
}

fn criterion_8() -> Outcome {
    let s = spec(
        Figure::Fig10,
        &[
            ("schemes", "acb,acb-ta,grw"),
            ("lambda", "100,300,500"),
            ("gamma_max_db", "30"),
            ("trials", "100"),
            ("seeds", "10"),
            ("seed", "8"),
        ],
    );
    let table = run_experiment(&s).unwrap();
    let acb_max = ["100", "300", "500"]
        .iter()
        .map(|l| lookup(&table, &[("scheme", "acb"), ("lambda", l)], "mean"))
        .fold(0.0, f64::max);
    let acb = lookup(&table, &[("scheme", "acb"), ("lambda", "500")], "mean");
    let ta = lookup(&table, &[("scheme", "acb-ta"), ("lambda", "500")], "mean");
    let grw = lookup(&table, &[("scheme", "grw"), ("lambda", "500")], "mean");
    outcome(
        acb_max <= 27.0 && ta > acb && grw >= 5.0 * ta,
        format!(
            "served per frame at lambda 500: ACB {acb:.2} (max over loads {acb_max:.2}), ACB-TA {ta:.2}, GrW {grw:.2} ({:.1}x TA)",
            grw / ta
        ),
    )
}

fn fig11_table(schemes: &str, lambda: &str, frames: &str) -> Table {
    let s = spec(
        Figure::Fig11,
        &[
            ("schemes", schemes),
            ("lambda", lambda),
            ("gamma_max_db", "30"),
            ("trials", frames),
            ("seeds", "10"),
            ("seed", "9"),
        ],
    );
    run_experiment(&s).unwrap()
}

fn delay(table: &Table, scheme: &str, lambda: &str) -> f64 {
    lookup(
        table,
        &[
            ("scheme", scheme),
            ("lambda", lambda),
            ("metric", "delay_frames"),
        ],
        "mean",
    )
}

fn criterion_9() -> Outcome {
    let loads = ["50", "100", "150", "200"];
    let prop = fig11_table("grw", &loads.join(","), "100");
    let prop_max = loads
        .iter()
        .map(|l| delay(&prop, "grw", l))
        .fold(0.0, f64::max);
    let short = fig11_table("acb", "16,96,128", "100");
    let long = fig11_table("acb", "96,128", "200");
    let d16 = delay(&short, "acb", "16");
    let mut ok = prop_max < 0.1;
    let mut parts = vec![format!("proposed max delay {prop_max:.4} frames")];
    for (l, n) in [("96", 96.0), ("128", 128.0)] {
        let (d100, d200) = (delay(&short, "acb", l), delay(&long, "acb", l));
        let superlinear = d100 / d16 > n / 16.0;
        let growing = d200 >= 1.8 * d100;
        ok &= superlinear && growing;
        parts.push(format!(
            "ACB lambda {l}: {d100:.2} -> {d200:.2} frames over 100 -> 200 frames, {:.1}x the lambda-16 delay",
            d100 / d16
        ));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let runs = [
        spec(Figure::Fig3, &[("trials", "20"), ("num_devices", "20,100")]),
        spec(Figure::Fig5, &[("trials", "2"), ("snr_db", "-10")]),
        spec(
            Figure::Fig6,
            &[("trials", "10000"), ("num_devices", "16,64")],
        ),
        fig9_spec("20"),
        spec(
            Figure::Fig11,
            &[("trials", "20"), ("seeds", "3"), ("lambda", "64,200")],
        ),
    ];
    let mut same = 0;
    for s in &runs {
        let a = csv_without_timestamp(s, &run_experiment(s).unwrap());
        let serial = s.clone().with("threads", "1").unwrap();
        let b = csv_without_timestamp(s, &run_experiment(&serial).unwrap());
        same += usize::from(a == b);
    }
    outcome(
        same == runs.len(),
        format!("{same}/{} figure reruns byte-identical", runs.len()),
    )
}

/// Kolmogorov distance between the Poisson-mixture model and simulation at
/// mean load 50.
fn mixture_ks() -> Outcome {
    let lambda = 50.0;
    let g0 = exw_target_for_total(50, db_to_ratio(20.0));
    let mixture = min_snr_cdf_models(lambda, g0).unwrap();
    let mut rng = seed_stream(SEED, 11, 0);
    let mut mins: Vec<f64> = (0..10_000u64)
        .map(|t| {
            let l = sample_arrivals(lambda, &mut rng) as usize;
            if l == 0 {
                return f64::INFINITY;
            }
            let mut r = seed_stream(SEED, t, 5);
            let a = exw_random_assignment(l, g0, &mut r).unwrap();
            effective_snrs(&a.profile)
                .into_iter()
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    mins.sort_by(f64::total_cmp);
    let n = mins.len() as f64;
    let mut ks: f64 = 0.0;
    for (i, &x) in mins.iter().enumerate().filter(|(_, x)| x.is_finite()) {
        let f = mixture.cdf(x);
        ks = ks
            .max((f - i as f64 / n).abs())
            .max((f - (i + 1) as f64 / n).abs());
    }
    outcome(
        ks <= 0.08,
        format!("Kolmogorov distance {ks:.3} (limit 0.08)"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("criterion 1 telescoping rate identity", criterion_1),
        (
            "criterion 2 exponential weights hit the target",
            criterion_2,
        ),
        ("criterion 3 group-wise weights floor", criterion_3),
        ("criterion 4 min-SNR mean vs model", criterion_4),
        ("criterion 5 load estimation", criterion_5),
        ("criterion 6 Raptor link at -10 dB", criterion_6),
        ("criterion 7 devices per RB ordering", criterion_7),
        ("criterion 8 served-per-frame regime", criterion_8),
        ("criterion 9 delay ordering", criterion_9),
        ("criterion 10 determinism", criterion_10),
        ("supplementary min-SNR mixture vs simulation", mixture_ks),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let o = f();
        failed += usize::from(!o.pass);
        println!(
            "{} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} check(s) failed");
        ExitCode::FAILURE
    }
}
