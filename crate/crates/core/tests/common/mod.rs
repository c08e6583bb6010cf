#![allow(dead_code)]

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uvaa_core::neural::{
    log_prob, log_prob_grad, lstm_backward, lstm_forward, Architecture, GradCheck, Net, NetSpec, PolicyNetwork,
    ValueNetwork,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..scale))
}

/// Quadratic-plus-linear probe loss on a net output and its derivative.
fn probe_loss(out: &Array2<f64>, c: &Array2<f64>) -> (f64, Array2<f64>) {
    let l = (out * c).sum() + 0.5 * out.mapv(|v| v * v).sum();
    (l, c + out)
}

/// Raw LSTM layer, all weights and inputs perturbed.
pub fn lstm_instance(seed: u64) -> GradCheck {
    let mut r = rng(seed);
    let (d, h, b, t) = (r.random_range(1..4), r.random_range(1..5), r.random_range(1..3), r.random_range(1..6));
    let wx = random_matrix(4 * h, d, 0.8, &mut r);
    let wh = random_matrix(4 * h, h, 0.8, &mut r);
    let bias = random_matrix(1, 4 * h, 0.5, &mut r).row(0).to_owned();
    let x = random_matrix(t * b, d, 1.0, &mut r);
    let h0 = random_matrix(b, h, 0.5, &mut r);
    let c0 = random_matrix(b, h, 0.5, &mut r);
    let c = random_matrix(t * b, h, 1.0, &mut r);
    let n_wx = 4 * h * d;
    let n_wh = 4 * h * h;
    let mut theta: Vec<f64> = wx.iter().chain(wh.iter()).chain(bias.iter()).copied().collect();
    theta.extend(x.iter());
    let unpack = |th: &[f64]| {
        let wx = Array2::from_shape_vec((4 * h, d), th[..n_wx].to_vec()).unwrap();
        let wh = Array2::from_shape_vec((4 * h, h), th[n_wx..n_wx + n_wh].to_vec()).unwrap();
        let bias = ndarray::Array1::from(th[n_wx + n_wh..n_wx + n_wh + 4 * h].to_vec());
        let x = Array2::from_shape_vec((t * b, d), th[n_wx + n_wh + 4 * h..].to_vec()).unwrap();
        (wx, wh, bias, x)
    };
    let loss = |th: &[f64]| {
        let (wx, wh, bias, x) = unpack(th);
        let cache = lstm_forward(x.view(), b, wx.view(), wh.view(), bias.view(), h0.view(), c0.view());
        probe_loss(&cache.h, &c).0
    };
    let (wx, wh, bias, x) = unpack(&theta);
    let cache = lstm_forward(x.view(), b, wx.view(), wh.view(), bias.view(), h0.view(), c0.view());
    let (_, dh) = probe_loss(&cache.h, &c);
    let mut gwx = Array2::zeros((4 * h, d));
    let mut gwh = Array2::zeros((4 * h, h));
    let mut gb = ndarray::Array1::zeros(4 * h);
    let dx = lstm_backward(
        x.view(),
        &cache,
        dh.view(),
        wx.view(),
        wh.view(),
        gwx.view_mut(),
        gwh.view_mut(),
        gb.view_mut(),
        None,
    );
    let analytic: Vec<f64> = gwx.iter().chain(gwh.iter()).chain(gb.iter()).chain(dx.iter()).copied().collect();
    GradCheck::run(loss, &theta, analytic)
}

fn net_instance(net: Net, batch: usize, steps: usize, r: &mut ChaCha8Rng) -> GradCheck {
    let x = random_matrix(steps * batch, net.spec().input, 1.0, r);
    let c = random_matrix(steps * batch, net.spec().output, 1.0, r);
    let loss = |th: &[f64]| {
        let n = Net::from_params(net.spec().clone(), th.to_vec()).unwrap();
        probe_loss(&n.forward(x.view(), batch, None).unwrap().out, &c).0
    };
    let fwd = net.forward(x.view(), batch, None).unwrap();
    let (_, d_out) = probe_loss(&fwd.out, &c);
    let mut grad = vec![0.0; net.len()];
    net.backward(&fwd, d_out.view(), &mut grad, None).unwrap();
    GradCheck::run(loss, &net.params, grad)
}

fn small_spec(r: &mut ChaCha8Rng, arch: Architecture, value: bool) -> NetSpec {
    let input = r.random_range(2..6);
    let base = if value {
        NetSpec::value(input, 2, arch)
    } else {
        NetSpec::policy(input, r.random_range(1..3), arch)
    };
    let hidden = (0..r.random_range(1..4)).map(|_| r.random_range(2..6)).collect();
    base.with_widths(r.random_range(2..5), hidden)
}

/// Tanh MLP trunk with a linear head.
pub fn mlp_instance(seed: u64) -> GradCheck {
    let mut r = rng(seed);
    let spec = small_spec(&mut r, Architecture::Mlp, true);
    let mut net = ValueNetwork::new(spec, &mut r).net;
    net.params.iter_mut().for_each(|p| *p += r.random_range(-0.3..0.3));
    net_instance(net, r.random_range(1..4), 1, &mut r)
}

/// Recurrent critic with a two-output head.
pub fn value_head_instance(seed: u64) -> GradCheck {
    let mut r = rng(seed);
    let spec = small_spec(&mut r, Architecture::Lstm, true);
    let mut net = ValueNetwork::new(spec, &mut r).net;
    net.params.iter_mut().for_each(|p| *p += r.random_range(-0.3..0.3));
    let (b, t) = (r.random_range(1..3), r.random_range(1..5));
    net_instance(net, b, t, &mut r)
}

/// Log-likelihood of fixed pre-squash draws under the recurrent Gaussian
/// policy, differentiated w.r.t. every policy parameter including log-std.
pub fn policy_head_instance(seed: u64) -> GradCheck {
    let mut r = rng(seed);
    let spec = small_spec(&mut r, Architecture::Lstm, false);
    let mut net = PolicyNetwork::new(spec, &mut r).net;
    net.params.iter_mut().for_each(|p| *p += r.random_range(-0.3..0.3));
    let (b, t) = (r.random_range(1..3), r.random_range(1..5));
    let a = net.spec().output;
    let x = random_matrix(t * b, net.spec().input, 1.0, &mut r);
    let u = random_matrix(t * b, a, 1.5, &mut r);
    let ls_range = net.log_std_range().unwrap();
    let total = |n: &Net| {
        let out = n.forward(x.view(), b, None).unwrap().out;
        let ls = &n.params[ls_range.clone()];
        (0..t * b)
            .map(|row| log_prob(u.row(row).as_slice().unwrap(), out.row(row).as_slice().unwrap(), ls))
            .sum::<f64>()
    };
    let loss = |th: &[f64]| total(&Net::from_params(net.spec().clone(), th.to_vec()).unwrap());
    let fwd = net.forward(x.view(), b, None).unwrap();
    let ls = net.params[ls_range.clone()].to_vec();
    let mut d_out = Array2::zeros(fwd.out.dim());
    let mut d_ls = vec![0.0; a];
    for row in 0..t * b {
        let (dm, dl) = log_prob_grad(u.row(row).as_slice().unwrap(), fwd.out.row(row).as_slice().unwrap(), &ls);
        d_out.row_mut(row).iter_mut().zip(&dm).for_each(|(o, g)| *o = *g);
        d_ls.iter_mut().zip(&dl).for_each(|(o, g)| *o += g);
    }
    let mut grad = vec![0.0; net.len()];
    net.backward(&fwd, d_out.view(), &mut grad, None).unwrap();
    grad[net.log_std_range().unwrap()].iter_mut().zip(&d_ls).for_each(|(o, g)| *o += g);
    GradCheck::run(loss, &net.params, grad)
}

/// Squashed-Gaussian log-density w.r.t. mean and log-std.
pub fn squash_log_prob_instance(seed: u64) -> GradCheck {
    let mut r = rng(seed);
    let n = r.random_range(1..8);
    let u: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
    let theta: Vec<f64> = (0..2 * n)
        .map(|i| if i < n { r.random_range(-2.0..2.0) } else { r.random_range(-2.0..1.0) })
        .collect();
    let loss = |th: &[f64]| log_prob(&u, &th[..n], &th[n..]);
    let (dm, dl) = log_prob_grad(&u, &theta[..n], &theta[n..]);
    GradCheck::run(loss, &theta, dm.into_iter().chain(dl).collect())
}

/// Advantage by the explicit double sum over future TD residuals of the
/// same episode, with a zero value past the last step.
pub fn gae_oracle(rewards: &Array2<f64>, values: &Array2<f64>, episodes: usize, gamma: f64, lambda: f64) -> Array2<f64> {
    let steps = rewards.nrows() / episodes;
    let m = rewards.ncols();
    let v = |t: usize, e: usize, k: usize| if t < steps { values[[t * episodes + e, k]] } else { 0.0 };
    let mut out = Array2::zeros(rewards.dim());
    for e in 0..episodes {
        for k in 0..m {
            for t in 0..steps {
                let mut sum = 0.0;
                for j in t..steps {
                    let delta = rewards[[j * episodes + e, k]] + gamma * v(j + 1, e, k) - v(j, e, k);
                    sum += (gamma * lambda).powi((j - t) as i32) * delta;
                }
                out[[t * episodes + e, k]] = sum;
            }
        }
    }
    out
}

pub fn random_batch(seed: u64) -> (Array2<f64>, Array2<f64>, usize, f64, f64) {
    let mut r = rng(seed);
    let episodes = r.random_range(1..5);
    let steps = r.random_range(1..13);
    let rewards = random_matrix(episodes * steps, 2, 5.0, &mut r);
    let values = random_matrix(episodes * steps, 2, 5.0, &mut r);
    (rewards, values, episodes, r.random_range(0.0..0.999), r.random_range(0.0..=1.0))
}

/// Mean-policy return on the one-step bandit after `iterations` of
/// single-task training with ω = (1, 0), as a fraction of the optimum 1.
pub fn bandit_fraction(seed: u64, target: f64, iterations: usize) -> f64 {
    use uvaa_core::moppo::{evaluate_mean_policy, train_iteration, NetworkConfig, PpoConfig, Task, ToyBandit, TrainContext};
    let env = ToyBandit { target };
    let net = NetworkConfig {
        first_hidden: 16,
        hidden: vec![32, 32, 32],
        disable_lstm: false,
    };
    let ppo = PpoConfig {
        episodes: 16,
        ..PpoConfig::default()
    };
    let mut task = Task::new(0, [1.0, 0.0], &env, &net, &ppo, &mut rng(seed));
    let ctx = TrainContext {
        env: &env,
        ppo: &ppo,
        master_seed: seed,
        generation: 0,
    };
    for it in 0..iterations as u64 {
        train_iteration(&mut task, &ctx, it).expect("training");
    }
    evaluate_mean_policy(&task.policy, &env, &[0]).expect("evaluation").0[0]
}

// Direct evaluation of the complex exponential sum, written out per component.
pub fn af_oracle(pos: &[(f64, f64, f64)], w: &[f64], theta: f64, phi: f64, lambda: f64) -> Complex64 {
    let k = 2.0 * PI / lambda;
    let mut acc = Complex64::new(0.0, 0.0);
    for (&(x, y, z), &i) in pos.iter().zip(w) {
        let phase = k * (x * theta.sin() * phi.cos() + y * theta.sin() * phi.sin() + z * theta.cos());
        acc += Complex64::from_polar(i, phase);
    }
    acc
}

// Asymptotic Kolmogorov tail with the small-sample correction of Stephens.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

pub fn igd_oracle(front: &[Vec<f64>], reference: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for r in reference {
        let d2 = front
            .iter()
            .map(|p| (p[0] - r[0]).powi(2) + (p[1] - r[1]).powi(2))
            .fold(f64::INFINITY, f64::min);
        total += d2.sqrt();
    }
    total / reference.len() as f64
}

/// Union area of the boxes [ref, p] on the grid of distinct coordinates.
pub fn hv_grid_oracle(front: &[Vec<f64>], r: &[f64]) -> f64 {
    let mut xs: Vec<f64> = front.iter().map(|p| p[0]).chain([r[0]]).collect();
    let mut ys: Vec<f64> = front.iter().map(|p| p[1]).chain([r[1]]).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    xs.dedup();
    ys.dedup();
    let mut area = 0.0;
    for i in 0..xs.len() - 1 {
        for j in 0..ys.len() - 1 {
            let (cx, cy) = (0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
            if front.iter().any(|p| p[0] >= cx && p[1] >= cy) {
                area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
            }
        }
    }
    area
}
