use mmil::envs::{forward_kinematics, EnvError, EnvKind, EnvSpec, EnvState, TargetLayout};
use mmil::experts::{
    expert_action, generate_demos, generate_demos_noisy, load_demos, save_demos, subsample, DemoError, DemoSet,
    ExpertSpec,
};
use proptest::prelude::*;

fn run_expert(env: &EnvSpec, x: &ExpertSpec, seed: u64) -> bool {
    let mut s = x.initial_state(env, seed);
    loop {
        if x.is_complete(&s) {
            break;
        }
        let a = expert_action(x, env, &s).unwrap();
        let r = env.step(&s, &a).unwrap();
        s = r.next_state;
        if r.done {
            break;
        }
    }
    x.succeeded(env, &s).unwrap()
}

fn success_rate(env: &EnvSpec, x: &ExpertSpec, episodes: u64) -> f64 {
    (0..episodes).filter(|&e| run_expert(env, x, 1000 + e)).count() as f64 / episodes as f64
}

#[test]
fn every_default_expert_succeeds_reliably() {
    for (kind, n) in [
        (EnvKind::ReacherPoint, 1),
        (EnvKind::ReacherPoint, 2),
        (EnvKind::ReacherPoint, 4),
        (EnvKind::ReacherArm2, 2),
        (EnvKind::Locomotor1d, 1),
        (EnvKind::SequentialReacher, 1),
    ] {
        let env = EnvSpec::new(kind, n);
        for x in ExpertSpec::defaults_for(&env) {
            let rate = success_rate(&env, &x, 100);
            assert!(rate >= 0.95, "{} {}: {rate}", env.name(), x.label());
        }
    }
}

#[test]
fn spiral_and_elbow_variants_succeed() {
    let point = EnvSpec::new(EnvKind::ReacherPoint, 1);
    for tok in ["target:0:cw", "target:0:ccw"] {
        let x = ExpertSpec::parse(tok, &point, 5.0).unwrap();
        assert!(success_rate(&point, &x, 100) >= 0.95, "{tok}");
    }
    let arm = EnvSpec::new(EnvKind::ReacherArm2, 1);
    for tok in ["target:0:up", "target:0:down"] {
        let x = ExpertSpec::parse(tok, &arm, 5.0).unwrap();
        assert!(success_rate(&arm, &x, 100) >= 0.95, "{tok}");
    }
}

#[test]
fn clipped_proportional_control() {
    let env = EnvSpec {
        action_bound: 0.1,
        ..EnvSpec::new(EnvKind::ReacherPoint, 1)
    };
    let x = ExpertSpec::parse("target:0", &env, 1.0).unwrap();
    let mut s = env.reset(0);
    s.values[2] = 1.0;
    s.values[3] = 0.0;
    assert_eq!(expert_action(&x, &env, &s).unwrap(), vec![0.1, 0.0]);
    s.values[0] = 1.0;
    assert_eq!(expert_action(&x, &env, &s).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn arm_kinematics_examples() {
    let l = [0.5, 0.5];
    let close = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12;
    assert!(close(forward_kinematics([0.0, 0.0], l), [1.0, 0.0]));
    assert!(close(forward_kinematics([std::f64::consts::FRAC_PI_2, 0.0], l), [0.0, 1.0]));
    assert!(close(
        forward_kinematics([std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2], l),
        [0.5, 0.5]
    ));
}

#[test]
fn demos_have_no_label_columns() {
    let env = EnvSpec::new(EnvKind::ReacherPoint, 4);
    let demos = generate_demos(&env, &ExpertSpec::defaults_for(&env), 3, 7).unwrap();
    let csv = demos.to_csv();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header.split(',').count(), env.state_dim() + env.action_dim());
    for line in csv.lines().filter(|l| !l.starts_with('#')).skip(1) {
        assert_eq!(line.split(',').count(), env.state_dim() + env.action_dim());
    }
}

#[test]
fn record_counts_and_early_termination() {
    let env = EnvSpec::new(EnvKind::ReacherPoint, 2);
    let demos = generate_demos(&env, &ExpertSpec::defaults_for(&env), 10, 1).unwrap();
    assert_eq!(demos.len(), 2 * 10 * 50);
    let seq = EnvSpec::new(EnvKind::SequentialReacher, 1);
    let demos = generate_demos(&seq, &ExpertSpec::defaults_for(&seq), 10, 1).unwrap();
    assert!(demos.len() < 2 * 10 * seq.horizon);
}

#[test]
fn generation_errors() {
    let env = EnvSpec::new(EnvKind::ReacherPoint, 2);
    assert!(matches!(generate_demos(&env, &[], 5, 0), Err(DemoError::NoExperts)));
    assert!(matches!(
        generate_demos(&env, &ExpertSpec::defaults_for(&env), 0, 0),
        Err(DemoError::NoEpisodes)
    ));
    assert!(matches!(
        ExpertSpec::parse("target:3", &env, 5.0),
        Err(DemoError::Env(EnvError::TargetIndex { index: 3, n: 2 }))
    ));
    assert!(matches!(ExpertSpec::parse("forward", &env, 5.0), Err(DemoError::WrongEnv { .. })));
    assert!(matches!(ExpertSpec::parse("target:0", &env, 0.0), Err(DemoError::BadGain(_))));
}

#[test]
fn csv_round_trip_and_determinism() {
    let env = EnvSpec::new(EnvKind::Locomotor1d, 1);
    let a = generate_demos(&env, &ExpertSpec::defaults_for(&env), 4, 11).unwrap();
    let b = generate_demos(&env, &ExpertSpec::defaults_for(&env), 4, 11).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.demos.csv");
    save_demos(&a, &p).unwrap();
    let back = load_demos(&p).unwrap();
    assert_eq!(back.records, a.records);
    assert_eq!(std::fs::read_to_string(&p).unwrap(), a.to_csv());
}

#[test]
fn csv_errors_name_the_row() {
    let header_only = DemoSet::from_csv("s0,s1,a0\n").unwrap();
    assert!(header_only.is_empty());
    assert_eq!((header_only.state_dim, header_only.action_dim), (2, 1));
    match DemoSet::from_csv("s0,s1,a0\n1,2,3\n1,2\n") {
        Err(DemoError::Row { row, .. }) => assert_eq!(row, 2),
        other => panic!("{other:?}"),
    }
    match DemoSet::from_csv("s0,s1,a0\n1,2,3\n4,5,6\n7,x,9\n") {
        Err(DemoError::Row { row, .. }) => assert_eq!(row, 3),
        other => panic!("{other:?}"),
    }
    assert!(matches!(DemoSet::from_csv("a,b\n"), Err(DemoError::Header(_))));
}

#[test]
fn subsample_sizes() {
    let env = EnvSpec::new(EnvKind::ReacherPoint, 1);
    let d = generate_demos(&env, &ExpertSpec::defaults_for(&env), 20, 2).unwrap();
    assert_eq!(d.len(), 1000);
    assert_eq!(subsample(&d, 1.0, 0).unwrap().records, d.records);
    assert_eq!(subsample(&d, 0.5, 0).unwrap().len(), 500);
    assert!(matches!(subsample(&d, 0.0, 0), Err(DemoError::BadFraction(_))));
    assert!(matches!(subsample(&d, 1.5, 0), Err(DemoError::BadFraction(_))));
}

#[test]
fn target_layouts() {
    assert_eq!("fixed".parse::<TargetLayout>().unwrap(), TargetLayout::Fixed(0));
    assert_eq!("fixed:7".parse::<TargetLayout>().unwrap(), TargetLayout::Fixed(7));
    assert_eq!("per-episode".parse::<TargetLayout>().unwrap(), TargetLayout::PerEpisode);
    assert!("fixed:x".parse::<TargetLayout>().is_err());
    for l in [TargetLayout::Fixed(3), TargetLayout::PerEpisode] {
        assert_eq!(l.to_string().parse::<TargetLayout>().unwrap(), l);
    }

    let mut env = EnvSpec::new(EnvKind::ReacherPoint, 3);
    let targets = |env: &EnvSpec, seed| -> Vec<[f64; 2]> {
        let s = env.reset(seed);
        (0..3).map(|j| env.target(&s, j).unwrap()).collect()
    };
    assert_eq!(targets(&env, 1), targets(&env, 2));
    env.target_layout = TargetLayout::Fixed(1);
    let other = targets(&env, 1);
    env.target_layout = TargetLayout::Fixed(0);
    assert_ne!(targets(&env, 1), other);
    env.target_layout = TargetLayout::PerEpisode;
    assert_ne!(targets(&env, 1), targets(&env, 2));
    assert_eq!(targets(&env, 1), targets(&env, 1));
}

#[test]
fn noisy_demos_record_clean_expert_actions() {
    let env = EnvSpec::new(EnvKind::ReacherPoint, 2);
    let experts = ExpertSpec::defaults_for(&env);
    let clean = generate_demos(&env, &experts, 3, 4).unwrap();
    assert_eq!(generate_demos_noisy(&env, &experts, 3, 4, 0.0).unwrap(), clean);
    let noisy = generate_demos_noisy(&env, &experts, 3, 4, 0.3).unwrap();
    assert_eq!(noisy.len(), clean.len());
    assert_ne!(sorted_bits(&noisy), sorted_bits(&clean));
    for r in &noisy.records {
        let state = EnvState {
            values: r.state.clone(),
            t: 0,
        };
        let matches = experts
            .iter()
            .any(|x| expert_action(x, &env, &state).unwrap() == r.action);
        assert!(matches, "{:?}", r);
    }
    assert!(matches!(
        generate_demos_noisy(&env, &experts, 3, 4, -1.0),
        Err(DemoError::BadNoise(_))
    ));
}

fn sorted_bits(d: &DemoSet) -> Vec<Vec<u64>> {
    let mut v: Vec<Vec<u64>> = d
        .records
        .iter()
        .map(|r| r.state.iter().chain(&r.action).map(|x| x.to_bits()).collect())
        .collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reshuffling_preserves_the_multiset(seed in any::<u64>(), other in any::<u64>()) {
        let env = EnvSpec::new(EnvKind::ReacherPoint, 2);
        let d = generate_demos(&env, &ExpertSpec::defaults_for(&env), 2, seed).unwrap();
        let r = d.reshuffled(other);
        prop_assert_eq!(sorted_bits(&d), sorted_bits(&r));
    }

    #[test]
    fn point_reacher_stays_bounded(seed in any::<u64>(), ax in -5.0f64..5.0, ay in -5.0f64..5.0) {
        let env = EnvSpec::new(EnvKind::ReacherPoint, 2);
        let mut s = env.reset(seed);
        for _ in 0..env.horizon {
            s = env.step(&s, &[ax, ay]).unwrap().next_state;
        }
        let r = (s.values[0].powi(2) + s.values[1].powi(2)).sqrt();
        prop_assert!(r <= env.horizon as f64 * env.action_bound * env.dt * 2f64.sqrt() + 1e-9);
    }

    #[test]
    fn same_seed_same_trajectory(seed in any::<u64>()) {
        let env = EnvSpec::new(EnvKind::ReacherArm2, 2);
        let run = || {
            let mut s = env.reset(seed);
            let mut out = Vec::new();
            for t in 0..10 {
                s = env.step(&s, &[0.3 * t as f64, -0.2]).unwrap().next_state;
                out.extend(s.values.iter().map(|v| v.to_bits()));
            }
            out
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn sequential_phase_flips_once(seed in any::<u64>()) {
        let env = EnvSpec::new(EnvKind::SequentialReacher, 1);
        let x = ExpertSpec::parse("reach", &env, 5.0).unwrap();
        let c = ExpertSpec::parse("carry", &env, 5.0).unwrap();
        let mut s = env.reset_in_phase(seed, 0);
        let mut flips = 0;
        loop {
            let spec = if s.values[6] == 1.0 { &c } else { &x };
            let a = expert_action(spec, &env, &s).unwrap();
            let r = env.step(&s, &a).unwrap();
            if r.next_state.values[6] != s.values[6] {
                flips += 1;
            }
            s = r.next_state;
            if r.done {
                break;
            }
        }
        prop_assert!(flips <= 1);
    }
}
