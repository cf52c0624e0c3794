use massive_access::ra::CellGeometry;
use massive_access::system_sim::{
    run_frame, run_scenario, run_seed, DeviceQueueState, FrameBudget, LoadKnowledge, Scheme,
    SimContext, SystemParams,
};
use proptest::prelude::*;

fn params(scheme: Scheme, lambda: f64, data_rbs: u64) -> SystemParams {
    SystemParams {
        scheme,
        lambda,
        budget: FrameBudget {
            data_rbs,
            ..FrameBudget::default()
        },
        geometry: CellGeometry::with_groups(1500.0, 20),
        load_knowledge: LoadKnowledge::Genie,
        ..SystemParams::default()
    }
}

fn scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![
        Just(Scheme::ProposedGrw),
        Just(Scheme::ProposedExw),
        Just(Scheme::AcbOriginal),
        Just(Scheme::AcbTimingAdvance),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_device_is_accounted_for(s in scheme(), lambda in 1.0f64..300.0, rbs in 1u64..200, seed in any::<u64>()) {
        let ctx = SimContext::new(params(s, lambda, rbs)).unwrap();
        let mut st = DeviceQueueState::default();
        for f in 0..15 {
            let before = st.backlog.len() as u64;
            let logged = st.served_log.len();
            let r = run_frame(&ctx, &mut st, f, seed).unwrap();
            prop_assert_eq!(before + r.arrivals, st.backlog.len() as u64 + r.served);
            prop_assert_eq!(st.served_log.len() - logged, r.served as usize);
            prop_assert!(r.rbs_used <= rbs);
            let new = &st.served_log[logged..];
            prop_assert!(new.iter().all(|x| x.service_frame == f && x.arrival_frame <= f));
            prop_assert_eq!(new.iter().map(|x| x.delay_frames()).sum::<u64>(), r.delay_sum_frames);
        }
    }
}

#[test]
fn same_seed_same_result() {
    for s in [Scheme::ProposedGrw, Scheme::AcbOriginal] {
        let p = params(s, 150.0, 50);
        let a = run_scenario(&p, 30, &[1, 2, 3]).unwrap();
        let b = run_scenario(&p, 30, &[1, 2, 3]).unwrap();
        assert_eq!(a, b);
        let c = run_scenario(&p, 30, &[4, 5, 6]).unwrap();
        assert_ne!(a.per_seed, c.per_seed);
    }
}

#[test]
fn seeds_are_independent_of_their_neighbours() {
    let p = params(Scheme::ProposedExw, 100.0, 40);
    let ctx = SimContext::new(p.clone()).unwrap();
    let all = run_scenario(&p, 20, &[7, 8, 9]).unwrap();
    assert_eq!(all.per_seed[1], run_seed(&ctx, 20, 8).unwrap());
}

#[test]
fn delays_are_in_frames_and_seconds() {
    let p = params(Scheme::ProposedGrw, 400.0, 30);
    let r = run_scenario(&p, 40, &[1, 2, 3, 4]).unwrap();
    assert!(r.delay_frames.mean >= 0.0);
    assert!(
        r.delay_frames.mean > 0.0,
        "a tight budget should queue devices"
    );
    let tf = p.budget.frame_length;
    assert!((r.delay_seconds.mean - r.delay_frames.mean * tf).abs() < 1e-12);
    assert!((r.delay_seconds.stderr - r.delay_frames.stderr * tf).abs() < 1e-12);
    for s in &r.per_seed {
        assert_eq!(s.arrivals, s.served + s.final_backlog);
    }
}

#[test]
fn stderr_shrinks_with_the_square_root_of_seeds() {
    let p = params(Scheme::ProposedGrw, 100.0, 20);
    let few: Vec<u64> = (1..=16).collect();
    let many: Vec<u64> = (101..=164).collect();
    let a = run_scenario(&p, 20, &few).unwrap().served_per_frame;
    let b = run_scenario(&p, 20, &many).unwrap().served_per_frame;
    let ratio = a.stderr / b.stderr;
    assert!(
        (1.3..=3.0).contains(&ratio),
        "{} / {} = {ratio}",
        a.stderr,
        b.stderr
    );
    assert!((a.mean - b.mean).abs() < 4.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt());
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(SimContext::new(params(Scheme::ProposedGrw, 10.0, 0)).is_err());
    assert!(run_scenario(&params(Scheme::ProposedGrw, 10.0, 5), 0, &[1]).is_err());
    assert!(run_scenario(&params(Scheme::ProposedGrw, 10.0, 5), 5, &[]).is_err());
}
