mod common;

use ndarray::Array2;
use proptest::prelude::*;
use uvaa_core::neural::{
    sample_action, Architecture, GradCheck, Net, NetSpec, PolicyNetwork, LOG_STD_MAX, LOG_STD_MIN,
};

const TOL: f64 = 1e-4;

fn check_all(name: &str, f: fn(u64) -> GradCheck) {
    for seed in 0..20 {
        let g = f(seed);
        assert!(
            g.max_rel_error < TOL,
            "{name} seed {seed}: rel err {:.3e} at {} (analytic {}, numeric {})",
            g.max_rel_error,
            g.worst_index,
            g.analytic[g.worst_index],
            g.numeric[g.worst_index]
        );
    }
}

#[test]
fn lstm_gradients() {
    check_all("lstm", common::lstm_instance);
}

#[test]
fn mlp_gradients() {
    check_all("mlp", common::mlp_instance);
}

#[test]
fn value_head_gradients() {
    check_all("value", common::value_head_instance);
}

#[test]
fn policy_head_gradients() {
    check_all("policy", common::policy_head_instance);
}

#[test]
fn squash_log_prob_gradients() {
    check_all("log_prob", common::squash_log_prob_instance);
}

#[test]
fn truncation_changes_only_gradients() {
    let mut r = common::rng(4);
    let spec = NetSpec::value(3, 2, Architecture::Lstm).with_widths(4, vec![5]);
    let net = uvaa_core::neural::ValueNetwork::new(spec, &mut r).net;
    let x = Array2::from_shape_fn((12, 3), |(i, j)| ((i + 2 * j) as f64 * 0.37).sin());
    let a = net.forward(x.view(), 2, None).unwrap();
    let b = net.forward(x.view(), 2, None).unwrap();
    assert_eq!(a.out, b.out);
    let d = Array2::from_elem(a.out.dim(), 1.0);
    let mut full = vec![0.0; net.len()];
    let mut cut = vec![0.0; net.len()];
    net.backward(&a, d.view(), &mut full, None).unwrap();
    net.backward(&a, d.view(), &mut cut, Some(2)).unwrap();
    // Dense layers see the same activations, so their gradients agree.
    let head = net.layout().entries().iter().find(|e| e.name == "head.w").unwrap().range();
    assert_eq!(full[head.clone()], cut[head]);
    let wh = net.layout().entries()[1].range();
    assert_ne!(full[wh.clone()], cut[wh]);
}

#[test]
fn repeated_observations_after_reset_give_identical_outputs() {
    let mut r = common::rng(1);
    let p = PolicyNetwork::new(NetSpec::policy(15, 4, Architecture::Lstm), &mut r);
    let obs = Array2::from_elem((1, 15), 0.4);
    let mut s1 = p.net.initial_state(1);
    let mut s2 = p.net.initial_state(1);
    let a = p.net.step(obs.view(), &mut s1).unwrap();
    let b = p.net.step(obs.view(), &mut s2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.ncols(), 16);
}

#[test]
fn zeroed_policy_mean_and_std() {
    let spec = NetSpec::policy(15, 4, Architecture::Lstm);
    let mut net = Net::zeroed(spec);
    let r = net.log_std_range().unwrap();
    net.params[r].fill(PolicyNetwork::LOG_STD_INIT);
    let p = PolicyNetwork { net };
    let out = p.net.forward(Array2::from_elem((2, 15), 1.0).view(), 1, None).unwrap().out;
    assert!(out.iter().all(|&m| m == 0.0));
    assert!(p.log_std().iter().all(|&s| s.exp() == (-0.5f64).exp()));
}

#[test]
fn million_draws_stay_in_bounds() {
    let mut r = common::rng(77);
    let bounds = [(0.0, 1.0), (0.0, std::f64::consts::TAU), (0.0, 20.0), (-10.0, 10.0)];
    let mean = [3.0, -4.0, 0.0, 20.0];
    let log_std = [LOG_STD_MAX; 4];
    for _ in 0..250_000 {
        let s = sample_action(&mean, &log_std, &bounds, &mut r);
        for (a, (lo, hi)) in s.action.iter().zip(bounds) {
            assert!((lo..=hi).contains(a));
        }
        assert!(s.log_prob.is_finite());
    }
}

proptest! {
    #[test]
    fn clamped_log_std_in_range(raw in prop::collection::vec(-100.0f64..100.0, 4)) {
        let spec = NetSpec::policy(6, 1, Architecture::Mlp).with_widths(3, vec![]);
        let mut net = Net::zeroed(spec);
        let r = net.log_std_range().unwrap();
        net.params[r].copy_from_slice(&raw);
        let p = PolicyNetwork { net };
        prop_assert!(p.log_std().iter().all(|v| (LOG_STD_MIN..=LOG_STD_MAX).contains(v)));
    }

    #[test]
    fn forward_is_bit_stable(seed in 0u64..1000) {
        let mut r = common::rng(seed);
        let spec = NetSpec::policy(6, 1, Architecture::Lstm).with_widths(4, vec![4]);
        let p = PolicyNetwork::new(spec, &mut r);
        let x = Array2::from_shape_fn((6, 6), |(i, j)| (seed as f64 + i as f64 - j as f64).cos());
        let a = p.net.forward(x.view(), 2, None).unwrap().out;
        let b = p.net.clone().forward(x.view(), 2, None).unwrap().out;
        prop_assert_eq!(a, b);
    }
}
