//! C interface to the UVAA simulator, metrics and trained policies.
//!
//! Every fallible function returns a [`UvaaStatus`]. On failure the message
//! is available from [`uvaa_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ndarray::ArrayView2;
use uvaa_core::dynamics::{propulsion_power, RotorParams};
use uvaa_core::env::{ActionVector, EnvConfig, Environment};
use uvaa_core::harness::tasks::load_policy;
use uvaa_core::harness::HarnessError;
use uvaa_core::metrics;
use uvaa_core::neural::{squash_to_bounds, PolicyNetwork, RecurrentState};
use uvaa_core::physics::{achievable_rate, array_factor, Direction, Point3, SwarmLayout};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UvaaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EpisodeDone = 3,
    CheckpointMismatch = 4,
    Internal = 5,
    Panic = 6,
}

struct Failure(UvaaStatus, String);

impl Failure {
    fn invalid(e: impl std::fmt::Display) -> Self {
        Self(UvaaStatus::InvalidArgument, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UvaaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UvaaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {msg}"));
            UvaaStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(UvaaStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn utf8<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid(format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    non_null(out, "output pointer")?;
    out.write(value);
    Ok(())
}

fn check_len(got: usize, want: usize, what: &str) -> Result<(), Failure> {
    if got == want {
        Ok(())
    } else {
        Err(Failure::invalid(format!("{what} has length {got}, expected {want}")))
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn uvaa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uvaa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque simulation environment.
pub struct UvaaEnv {
    config: EnvConfig,
    inner: Environment,
}

/// Outcome of one environment step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct UvaaStep {
    pub rate_reward: f64,
    pub energy_reward: f64,
    /// Achievable rate, bits/s/Hz.
    pub rate: f64,
    /// Propulsion energy of the whole swarm in the slot, J.
    pub energy: f64,
    pub valid: bool,
    pub done: bool,
}

/// Create an environment from a JSON configuration (null or "" for the
/// defaults) and start an episode with `seed`.
///
/// # Safety
/// `config_json` must be null or a NUL-terminated string; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uvaa_env_new(config_json: *const c_char, seed: u64, out: *mut *mut UvaaEnv) -> UvaaStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = if config_json.is_null() { "" } else { utf8(config_json, "config")? };
        let config: EnvConfig = if text.trim().is_empty() {
            EnvConfig::default()
        } else {
            serde_json::from_str(text).map_err(Failure::invalid)?
        };
        let inner = Environment::reset(&config, seed).map_err(Failure::invalid)?;
        write_out(out, Box::into_raw(Box::new(UvaaEnv { config, inner })))
    })
}

/// # Safety
/// `env` must be null or a handle from [`uvaa_env_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uvaa_env_free(env: *mut UvaaEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Start a new episode.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn uvaa_env_reset(env: *mut UvaaEnv, seed: u64) -> UvaaStatus {
    guard(|| {
        non_null(env, "env")?;
        let env = &mut *env;
        env.inner = Environment::reset(&env.config, seed).map_err(Failure::invalid)?;
        Ok(())
    })
}

/// Observation length 3N+3, or 0 for a null handle.
///
/// # Safety
/// `env` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uvaa_env_observation_len(env: *const UvaaEnv) -> usize {
    env.as_ref().map_or(0, |e| e.config.observation_len())
}

/// Action length 4N, or 0 for a null handle.
///
/// # Safety
/// `env` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uvaa_env_action_len(env: *const UvaaEnv) -> usize {
    env.as_ref().map_or(0, |e| e.config.action_len())
}

/// # Safety
/// `env` must be a live handle and `obs` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn uvaa_env_observe(env: *const UvaaEnv, obs: *mut f64, len: usize) -> UvaaStatus {
    guard(|| {
        non_null(env, "env")?;
        let env = &*env;
        let o = env.inner.observe();
        check_len(len, o.len(), "observation buffer")?;
        slice_mut(obs, len, "obs")?.copy_from_slice(&o);
        Ok(())
    })
}

/// Apply a flat action `[I_1..I_N, ψ_1..ψ_N, d^h_1..d^h_N, d^v_1..d^v_N]`.
///
/// # Safety
/// `env` must be a live handle, `action` must hold `len` doubles and `out`
/// must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn uvaa_env_step(
    env: *mut UvaaEnv,
    action: *const f64,
    len: usize,
    out: *mut UvaaStep,
) -> UvaaStatus {
    guard(|| {
        non_null(env, "env")?;
        let env = &mut *env;
        if env.inner.is_done() {
            return Err(Failure(UvaaStatus::EpisodeDone, "episode is over; call uvaa_env_reset".into()));
        }
        let a = ActionVector::from_flat(slice(action, len, "action")?, env.config.n_uav).map_err(Failure::invalid)?;
        let o = env.inner.step(&a).map_err(Failure::invalid)?;
        if !out.is_null() {
            out.write(UvaaStep {
                rate_reward: o.reward.rate_reward,
                energy_reward: o.reward.energy_reward,
                rate: o.rate,
                energy: o.energy,
                valid: o.valid,
                done: o.done,
            });
        }
        Ok(())
    })
}

/// Opaque trained policy with its recurrent state.
pub struct UvaaPolicy {
    policy: PolicyNetwork,
    state: RecurrentState,
    bounds: Vec<(f64, f64)>,
}

/// Load the actor of a checkpoint for use with environments shaped like `env`.
///
/// # Safety
/// `path` must be a NUL-terminated string, `env` a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn uvaa_policy_load(
    path: *const c_char,
    env: *const UvaaEnv,
    out: *mut *mut UvaaPolicy,
) -> UvaaStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(env, "env")?;
        let path = utf8(path, "path")?;
        let config = &(*env).config;
        let policy = load_policy(Path::new(path), config).map_err(|e| match e {
            HarnessError::CheckpointMismatch(m) => Failure(UvaaStatus::CheckpointMismatch, m),
            other => Failure(UvaaStatus::Internal, other.to_string()),
        })?;
        let state = policy.net.initial_state(1);
        let p = UvaaPolicy {
            policy,
            state,
            bounds: config.action_bounds(),
        };
        write_out(out, Box::into_raw(Box::new(p)))
    })
}

/// # Safety
/// `policy` must be null or a handle from [`uvaa_policy_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uvaa_policy_free(policy: *mut UvaaPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Clear the recurrent state before a new episode.
///
/// # Safety
/// `policy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn uvaa_policy_reset(policy: *mut UvaaPolicy) -> UvaaStatus {
    guard(|| {
        non_null(policy, "policy")?;
        let p = &mut *policy;
        p.state = p.policy.net.initial_state(1);
        Ok(())
    })
}

/// Deterministic (mean) action for one observation, mapped into the action
/// bounds. Advances the recurrent state.
///
/// # Safety
/// `policy` must be a live handle; `obs` and `action` must hold
/// `obs_len` and `action_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn uvaa_policy_act(
    policy: *mut UvaaPolicy,
    obs: *const f64,
    obs_len: usize,
    action: *mut f64,
    action_len: usize,
) -> UvaaStatus {
    guard(|| {
        non_null(policy, "policy")?;
        let p = &mut *policy;
        let spec = p.policy.net.spec();
        check_len(obs_len, spec.input, "observation")?;
        check_len(action_len, spec.output, "action buffer")?;
        let obs = ArrayView2::from_shape((1, obs_len), slice(obs, obs_len, "obs")?).map_err(Failure::invalid)?;
        let mean = p
            .policy
            .net
            .step(obs, &mut p.state)
            .map_err(|e| Failure(UvaaStatus::Internal, e.to_string()))?;
        let out = slice_mut(action, action_len, "action")?;
        for ((o, &m), &(lo, hi)) in out.iter_mut().zip(mean.row(0)).zip(&p.bounds) {
            *o = squash_to_bounds(m, lo, hi);
        }
        Ok(())
    })
}

/// Array factor of `n` elements at `positions` (x, y, z triples, m) with
/// excitation `weights`, toward (theta, phi) in radians.
///
/// # Safety
/// `positions` must hold `3n` doubles, `weights` `n`; `re` and `im` valid.
#[no_mangle]
pub unsafe extern "C" fn uvaa_array_factor(
    positions: *const f64,
    weights: *const f64,
    n: usize,
    theta: f64,
    phi: f64,
    wavelength: f64,
    re: *mut f64,
    im: *mut f64,
) -> UvaaStatus {
    guard(|| {
        let pos = slice(positions, 3 * n, "positions")?;
        let w = slice(weights, n, "weights")?;
        if !(wavelength > 0.0) {
            return Err(Failure::invalid(format!("wavelength must be positive, got {wavelength}")));
        }
        let points = pos.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect();
        let layout = SwarmLayout::new(points, w.to_vec()).map_err(Failure::invalid)?;
        let af = array_factor(&layout, Direction::new(theta, phi), wavelength);
        write_out(re, af.re)?;
        write_out(im, af.im)
    })
}

/// log2(1 + sinr), bits/s/Hz.
#[no_mangle]
pub extern "C" fn uvaa_achievable_rate(sinr: f64) -> f64 {
    achievable_rate(sinr)
}

/// Rotary-wing propulsion power at horizontal speed `speed` (m/s) with
/// the default rotor constants, W.
#[no_mangle]
pub extern "C" fn uvaa_propulsion_power(speed: f64) -> f64 {
    propulsion_power(speed, &RotorParams::default())
}

unsafe fn points2(p: *const f64, n: usize, what: &str) -> Result<Vec<Vec<f64>>, Failure> {
    Ok(slice(p, 2 * n, what)?.chunks_exact(2).map(<[f64]>::to_vec).collect())
}

/// Hypervolume of `n` two-objective points (maximized) against `reference`.
///
/// # Safety
/// `points` must hold `2n` doubles, `reference` 2 and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uvaa_hypervolume(
    points: *const f64,
    n: usize,
    reference: *const f64,
    out: *mut f64,
) -> UvaaStatus {
    guard(|| {
        let front = points2(points, n, "points")?;
        let r = slice(reference, 2, "reference")?;
        let hv = metrics::hypervolume(&front, r).map_err(Failure::invalid)?;
        write_out(out, hv)
    })
}

/// Inverted generational distance of a front against a reference front,
/// both two-objective.
///
/// # Safety
/// `front` must hold `2n` doubles, `reference` `2m`, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uvaa_igd(
    front: *const f64,
    n: usize,
    reference: *const f64,
    m: usize,
    out: *mut f64,
) -> UvaaStatus {
    guard(|| {
        let f = points2(front, n, "front")?;
        let r = points2(reference, m, "reference")?;
        let v = metrics::igd(&f, &r).map_err(Failure::invalid)?;
        write_out(out, v)
    })
}
