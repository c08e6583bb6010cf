//! Diagonal Gaussian over a pre-squash variable `u`, mapped into a box by
//! `tanh` and an affine stretch.

use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{LN_2, PI};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Map `a ∈ [-1, 1]` linearly onto `[lo, hi]`.
pub fn affine_to_bounds(a: f64, lo: f64, hi: f64) -> f64 {
    (lo + 0.5 * (a + 1.0) * (hi - lo)).clamp(lo, hi)
}

pub fn squash_to_bounds(u: f64, lo: f64, hi: f64) -> f64 {
    affine_to_bounds(u.tanh(), lo, hi)
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// log(1 − tanh²u) without cancellation.
fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (LN_2 - u - softplus(-2.0 * u))
}

/// Log-density of the squashed sample `tanh(u)` given the pre-squash draw.
pub fn log_prob(u: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    u.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((&u, &m), &ls)| {
            let z = (u - m) / ls.exp();
            -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln() - log_one_minus_tanh_sq(u)
        })
        .sum()
}

/// Partial derivatives of [`log_prob`] w.r.t. the means and log-stds.
pub fn log_prob_grad(u: &[f64], mean: &[f64], log_std: &[f64]) -> (Vec<f64>, Vec<f64>) {
    u.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((&u, &m), &ls)| {
            let s = ls.exp();
            let z = (u - m) / s;
            (z / s, z * z - 1.0)
        })
        .unzip()
}

/// A drawn action together with the quantities PPO needs to re-score it.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicyStep {
    pub u: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
}

/// Draw `u ~ N(mean, exp(log_std)²)` and squash each component into its bounds.
pub fn sample_action<R: Rng + ?Sized>(
    mean: &[f64],
    log_std: &[f64],
    bounds: &[(f64, f64)],
    rng: &mut R,
) -> GaussianPolicyStep {
    let u: Vec<f64> = mean
        .iter()
        .zip(log_std)
        .map(|(&m, &ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let action = u
        .iter()
        .zip(bounds)
        .map(|(&u, &(lo, hi))| squash_to_bounds(u, lo, hi))
        .collect();
    let log_prob = log_prob(&u, mean, log_std);
    GaussianPolicyStep { u, action, log_prob }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn density_at_mode() {
        let lp = log_prob(&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]);
        assert!((lp - (-(2.0 * PI).ln())).abs() < 1e-15);
    }

    #[test]
    fn jacobian_term_is_stable() {
        for u in [-40.0, -5.0, 0.3, 5.0, 40.0f64] {
            let direct = (1.0 - u.tanh().powi(2)).ln();
            let stable = log_one_minus_tanh_sq(u);
            if direct.is_finite() && u.abs() < 10.0 {
                assert!((direct - stable).abs() < 1e-9);
            }
            assert!(stable.is_finite());
        }
    }

    #[test]
    fn tiny_std_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_action(&[0.4], &[LOG_STD_MIN], &[(0.0, 10.0)], &mut rng);
        assert!((s.action[0] - squash_to_bounds(0.4, 0.0, 10.0)).abs() < 1e-7);
    }

    #[test]
    fn affine_ends() {
        assert_eq!(affine_to_bounds(-1.0, -3.0, 5.0), -3.0);
        assert_eq!(affine_to_bounds(1.0, -3.0, 5.0), 5.0);
        assert_eq!(affine_to_bounds(0.0, 0.0, 1.0), 0.5);
    }
}
