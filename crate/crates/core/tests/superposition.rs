use massive_access::raptor::bpsk;
use massive_access::seed::seed_stream;
use massive_access::superposition::{
    adaptive_target_snr, effective_snrs, eqw_profile, exw_optimal_weights, exw_random_assignment,
    grw_profile, grw_target_for_total, superpose_with, GroupOrder, PhaseModel, WeightProfile,
};
use proptest::prelude::*;
use rand::Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sizes_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..8, 1..40)
}

#[derive(Debug, Clone, Copy)]
enum Design {
    Equal,
    Exponential,
    RandomExponential(u64),
    GroupWise,
}

fn design() -> impl Strategy<Value = Design> {
    prop_oneof![
        Just(Design::Equal),
        Just(Design::Exponential),
        any::<u64>().prop_map(Design::RandomExponential),
        Just(Design::GroupWise),
    ]
}

fn build(d: Design, sizes: &[usize], total: f64) -> WeightProfile<f64> {
    let l: usize = sizes.iter().sum();
    let g0 = adaptive_target_snr(l, total, f64::INFINITY);
    match d {
        Design::Equal => eqw_profile(l, total).unwrap(),
        Design::Exponential => exw_optimal_weights(l, g0).unwrap(),
        Design::RandomExponential(s) => {
            exw_random_assignment(l, g0, &mut seed_stream(s, 0, 5))
                .unwrap()
                .profile
        }
        Design::GroupWise => {
            let g0 = grw_target_for_total(sizes, total).unwrap();
            grw_profile(sizes, g0, GroupOrder::Ascending)
                .unwrap()
                .profile
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rates_telescope(d in design(), sizes in sizes_strategy(), db in -10.0f64..30.0) {
        let p = build(d, &sizes, 10f64.powf(db / 10.0));
        let sum: f64 = effective_snrs(&p).iter().map(|g| g.ln_1p()).sum();
        prop_assert!(rel(sum, p.total_snr().ln_1p()) < 1e-9);
    }

    #[test]
    fn every_constructor_normalizes(d in design(), sizes in sizes_strategy(), db in -10.0f64..30.0) {
        let p = build(d, &sizes, 10f64.powf(db / 10.0));
        prop_assert!((p.total_power() - 1.0).abs() < 1e-12);
        let w = p.layer_weights();
        prop_assert!(w.windows(2).all(|x| x[0] >= x[1]));
    }

    #[test]
    fn snr_rises_within_a_group(d in design(), sizes in sizes_strategy(), db in -10.0f64..30.0) {
        let p = build(d, &sizes, 10f64.powf(db / 10.0));
        let s = effective_snrs(&p);
        let g = p.layer_groups();
        for i in 1..s.len() {
            if g[i] == g[i - 1] {
                prop_assert!(s[i] > s[i - 1]);
            }
        }
    }

    #[test]
    fn singleton_groups_are_exponential(l in 1usize..128, db in -20.0f64..10.0) {
        let g0 = 10f64.powf(db / 10.0);
        let a = grw_profile(&vec![1; l], g0, GroupOrder::Ascending).unwrap().profile;
        let b = exw_optimal_weights(l, g0).unwrap();
        for (x, y) in a.layer_weights().iter().zip(b.layer_weights()) {
            prop_assert!(rel(*x, y) < 1e-12);
        }
        prop_assert!(rel(a.total_snr(), b.total_snr()) < 1e-12);
    }

    #[test]
    fn group_wise_floor(sizes in sizes_strategy(), frac in 0.01f64..0.99) {
        let r_max = *sizes.iter().max().unwrap();
        let g0 = if r_max > 1 { frac / (r_max - 1) as f64 } else { 10.0 * frac };
        let p = grw_profile(&sizes, g0, GroupOrder::Ascending).unwrap().profile;
        let s = effective_snrs(&p);
        let g = p.layer_groups();
        prop_assert!(s.iter().all(|&x| x >= g0 - 1e-9));
        for i in 0..s.len() {
            if i == 0 || g[i] != g[i - 1] {
                prop_assert!(rel(s[i], g0) < 1e-9);
            }
        }
    }

    #[test]
    fn single_precision_tracks_double(l in 1usize..64, db in -10.0f64..10.0) {
        let g0 = 10f64.powf(db / 10.0);
        // Keep the total SNR inside the f32 range.
        prop_assume!(l as f64 * g0.ln_1p() < 80.0);
        let a = effective_snrs(&exw_optimal_weights(l, g0).unwrap());
        let b = effective_snrs(&exw_optimal_weights(l, g0 as f32).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(rel(*y as f64, *x) < 1e-3);
        }
    }
}

#[test]
fn equal_weights_closed_form() {
    for (l, s2) in [(2usize, 0.01f64), (10, 0.01), (50, 0.3)] {
        let p = eqw_profile(l, 1.0 / s2).unwrap();
        let s = effective_snrs(&p);
        for (i, &g) in s.iter().enumerate() {
            let want = 1.0 / ((l - i - 1) as f64 + l as f64 * s2);
            assert!(rel(g, want) < 1e-12, "L={l} layer {i}");
        }
    }
    let s = effective_snrs(&eqw_profile(2, 100.0).unwrap());
    assert!(rel(s[0], 1.0 / 1.02) < 1e-12);
}

#[test]
fn exponential_weights_at_low_target() {
    let p = exw_optimal_weights(32, 0.01).unwrap();
    for g in effective_snrs(&p) {
        assert!(rel(g, 0.01) < 1e-9);
    }
}

#[test]
fn unused_coefficients_appear_at_the_expected_rate() {
    let l = 20;
    let mut rng = seed_stream(21, 0, 5);
    let mut empty = 0usize;
    let trials = 20_000;
    for _ in 0..trials {
        let a = exw_random_assignment::<f64, _>(l, 0.1, &mut rng).unwrap();
        empty += a
            .profile
            .multiplicities()
            .iter()
            .filter(|&&r| r == 0)
            .count();
    }
    let p0 = empty as f64 / (trials * l) as f64;
    let want = (1.0 - 1.0 / l as f64).powi(l as i32);
    assert!((p0 - want).abs() < 0.005, "{p0} vs {want}");
}

#[test]
fn group_wise_pair_by_hand() {
    let p = grw_profile(&[2], 0.1f64, GroupOrder::Ascending)
        .unwrap()
        .profile;
    assert!(rel(p.total_snr(), 0.2 / 0.9) < 1e-12);
    let s = effective_snrs(&p);
    assert!(rel(s[0], 0.1) < 1e-12);
}

#[test]
fn received_snr_matches_the_profile() {
    let p = exw_optimal_weights(4, 0.5f64).unwrap();
    let n = 1_000_000;
    let mut rng = seed_stream(22, 0, 8);
    let symbols: Vec<Vec<f64>> = (0..4)
        .map(|_| bpsk(&(0..n).map(|_| rng.random_range(0..2u8)).collect::<Vec<_>>()))
        .collect();
    // Same stream for both frames, so the phases agree and only the noise differs.
    let noisy = superpose_with(
        symbols.clone(),
        &p,
        PhaseModel::Random,
        1.0,
        &mut seed_stream(22, 0, 6),
    )
    .unwrap();
    let clean = superpose_with(
        symbols,
        &p,
        PhaseModel::Random,
        0.0,
        &mut seed_stream(22, 0, 6),
    )
    .unwrap();
    assert_eq!(noisy.phases, clean.phases);
    let signal = clean.received.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let noise = noisy
        .received
        .iter()
        .zip(&clean.received)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>();
    let snr = signal / noise;
    assert!(rel(snr, p.total_snr()) < 0.02, "{snr} vs {}", p.total_snr());
}

#[test]
fn single_precision_overflow_is_reported() {
    assert!(exw_optimal_weights(64, 10.0f32).is_err());
    assert!(exw_optimal_weights(64, 10.0f64).is_ok());
}
