use mmil::diffnet::{
    grad_check, load_net, parse_net, render_net, save_net, Activation,
    AdamState, CrossEntropy, MlpNet, NetError, OutputHead, SquaredLoss, Tape,
};
use mmil::rng;
use proptest::prelude::*;
use rand::Rng as _;

fn random_net(seed: u64) -> (MlpNet, Vec<f64>) {
    let mut r = rng::stream(seed, "net-shape", &[]);
    let n_in = r.gen_range(1..=8);
    let depth = r.gen_range(1..=3);
    let mut sizes = vec![n_in];
    for _ in 1..depth {
        sizes.push(r.gen_range(1..=64));
    }
    sizes.push(r.gen_range(1..=4));
    let act = if r.gen_bool(0.5) { Activation::Tanh } else { Activation::Relu };
    let net = MlpNet::new(&sizes, act, OutputHead::Linear, &mut r).unwrap();
    let x = (0..n_in).map(|_| r.gen_range(-2.0..2.0)).collect();
    (net, x)
}

#[test]
fn backprop_matches_finite_differences_on_random_nets() {
    for seed in 0..20 {
        let (net, x) = random_net(seed);
        let target = vec![0.25; net.output_dim()];
        let err = grad_check(&net, &SquaredLoss { target: &target }, &x).unwrap();
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn softmax_head_gradients() {
    let mut r = rng::stream(5, "softmax", &[]);
    for label in 0..3 {
        let net = MlpNet::new(&[5, 32, 32, 3], Activation::Tanh, OutputHead::Softmax, &mut r).unwrap();
        let err = grad_check(&net, &CrossEntropy { label }, &[0.3, -0.1, 0.8, 1.2, -0.7]).unwrap();
        assert!(err < 1e-4, "{err}");
    }
}

#[test]
fn forward_rejects_wrong_input_width() {
    let mut r = rng::stream(1, "w", &[]);
    let net = MlpNet::new(&[4, 3, 1], Activation::Tanh, OutputHead::Linear, &mut r).unwrap();
    assert!(matches!(
        net.forward(&[1.0, 2.0]),
        Err(NetError::InputShape { expected: 4, got: 2 })
    ));
}

#[test]
fn backward_without_forward_is_an_error() {
    let mut r = rng::stream(1, "w", &[]);
    let net = MlpNet::new(&[2, 3, 1], Activation::Tanh, OutputHead::Linear, &mut r).unwrap();
    assert!(matches!(net.backward(&Tape::new(), &[1.0]), Err(NetError::NoForward)));
}

#[test]
fn persistence_is_bit_exact_on_many_inputs() {
    let mut r = rng::stream(3, "persist", &[]);
    let net = MlpNet::new(&[4, 64, 64, 2], Activation::Tanh, OutputHead::GaussianMean, &mut r).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.net");
    save_net(&net, &path).unwrap();
    let back = load_net(&path).unwrap();
    assert_eq!(back, net);
    for _ in 0..100 {
        let x: Vec<f64> = (0..4).map(|_| r.gen_range(-3.0..3.0)).collect();
        let a = net.forward(&x).unwrap();
        let b = back.forward(&x).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn truncated_file_reports_line() {
    let mut r = rng::stream(4, "trunc", &[]);
    let net = MlpNet::new(&[2, 3, 1], Activation::Tanh, OutputHead::Linear, &mut r).unwrap();
    let text = render_net(&net);
    let cut: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
    match parse_net(&cut) {
        Err(NetError::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn adam_minimizes_a_quadratic_bowl() {
    let mut p = vec![3.0, -2.0];
    let mut opt = AdamState::new(2, 0.05);
    for _ in 0..500 {
        let g = vec![2.0 * (p[0] - 1.0), 20.0 * (p[1] + 0.5)];
        opt.apply(&mut p, &g).unwrap();
    }
    assert!((p[0] - 1.0).abs() < 1e-2 && (p[1] + 0.5).abs() < 1e-2, "{p:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradient_agrees_for_any_small_net(seed in 0u64..10_000, h in 1usize..12, t in -2.0f64..2.0) {
        let mut r = rng::stream(seed, "prop", &[]);
        let net = MlpNet::new(&[3, h, 2], Activation::Tanh, OutputHead::Linear, &mut r).unwrap();
        let x: Vec<f64> = (0..3).map(|_| r.gen_range(-1.5..1.5)).collect();
        let err = grad_check(&net, &SquaredLoss { target: &[t, -t] }, &x).unwrap();
        prop_assert!(err < 1e-4, "{}", err);
    }

    #[test]
    fn render_parse_round_trip(seed in 0u64..10_000) {
        let mut r = rng::stream(seed, "prop-rt", &[]);
        let net = MlpNet::new(&[2, 5, 3], Activation::Relu, OutputHead::Softmax, &mut r).unwrap();
        prop_assert_eq!(parse_net(&render_net(&net)).unwrap(), net);
    }

    #[test]
    fn softmax_outputs_form_a_distribution(seed in 0u64..10_000, a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let mut r = rng::stream(seed, "prop-sm", &[]);
        let net = MlpNet::new(&[2, 4, 3], Activation::Tanh, OutputHead::Softmax, &mut r).unwrap();
        let out = net.forward(&[a, b]).unwrap();
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(out.iter().all(|p| *p > 0.0));
    }
}
