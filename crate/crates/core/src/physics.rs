//! Electromagnetic and link-budget model of the UAV virtual antenna array.
//!
//! The swarm radiates as a single array whose far-field response is the
//! array factor of the element positions and real excitation weights. Beam
//! gain toward the user is the array directivity (normalised by the radiated
//! power integrated over the sphere) times antenna efficiency. Link gains
//! follow a power-law path loss with Rician block fading.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Div, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("invalid swarm layout: {0}")]
    InvalidLayout(String),
    #[error("all excitation weights are zero; the beam pattern is undefined")]
    DegenerateArray,
    #[error("link distance must be positive, got {0}")]
    ZeroDistance(f64),
    #[error("source and target coincide; direction undefined")]
    CoincidentPoints,
    #[error("invalid quadrature resolution {n_theta}x{n_phi} (need at least 8x8)")]
    InvalidQuadrature { n_theta: usize, n_phi: usize },
}

/// A point (or displacement) in the global Cartesian frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Positions and excitation current weights of every UAV in one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmLayout {
    positions: Vec<Point3>,
    weights: Vec<f64>,
}

impl SwarmLayout {
    pub fn new(positions: Vec<Point3>, weights: Vec<f64>) -> Result<Self, PhysicsError> {
        if positions.is_empty() {
            return Err(PhysicsError::InvalidLayout("swarm is empty".into()));
        }
        if positions.len() != weights.len() {
            return Err(PhysicsError::InvalidLayout(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(0.0..=1.0).contains(w)) {
            return Err(PhysicsError::InvalidLayout(format!(
                "weight {i} = {} outside [0, 1]",
                weights[i]
            )));
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(PhysicsError::InvalidLayout(format!("position {i} is not finite")));
        }
        Ok(Self { positions, weights })
    }

    /// All elements with unit weight.
    pub fn uniform(positions: Vec<Point3>) -> Result<Self, PhysicsError> {
        let n = positions.len();
        Self::new(positions, vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn positions_mut(&mut self) -> &mut [Point3] {
        &mut self.positions
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn centroid(&self) -> Point3 {
        let sum = self
            .positions
            .iter()
            .fold(Point3::default(), |acc, p| acc + *p);
        sum / self.positions.len() as f64
    }

    /// Σ I_i², the radiated-power factor of the excitation.
    pub fn power_factor(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

/// Far-field direction: elevation `theta` in [0, π], azimuth `phi` in [−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn unit_vector(self) -> Point3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Point3::new(st * cp, st * sp, ct)
    }
}

/// Link-budget constants shared by the UVAA and base-station links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    /// Path-loss constant K0 at 1 m.
    pub k0: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Rician factor, used for both the UVAA and the BS link.
    pub rician_k: f64,
    /// Receiver noise power σ², W.
    pub noise_power: f64,
    /// Carrier wavelength, m.
    pub wavelength: f64,
    pub antenna_efficiency: f64,
    /// Sidelobe gain of the interfering base station toward the user.
    pub bs_sidelobe_gain: f64,
    /// Maximum transmit power of one UAV (reached at unit excitation), W.
    pub tx_power_per_uav: f64,
    /// Transmit power of the non-associated base station, W.
    pub bs_tx_power: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        let wavelength = SPEED_OF_LIGHT / 2.4e9;
        // -155 dBm/Hz over a 1 MHz channel.
        let noise_power = 10f64.powf((-155.0 - 30.0) / 10.0) * 1.0e6;
        Self {
            k0: (wavelength / (4.0 * PI)).powi(2),
            alpha: 2.0,
            rician_k: 10.0,
            noise_power,
            wavelength,
            antenna_efficiency: 1.0,
            bs_sidelobe_gain: 0.1,
            tx_power_per_uav: 0.1,
            bs_tx_power: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha > 0.0) {
            return Err(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.noise_power > 0.0) {
            return Err(format!("noise_power must be > 0, got {}", self.noise_power));
        }
        if !(0.0..=1.0).contains(&self.antenna_efficiency) {
            return Err(format!(
                "antenna_efficiency must lie in [0, 1], got {}",
                self.antenna_efficiency
            ));
        }
        if !(self.wavelength > 0.0) {
            return Err(format!("wavelength must be > 0, got {}", self.wavelength));
        }
        if !(self.k0 > 0.0) || !(self.rician_k >= 0.0) {
            return Err("k0 must be > 0 and rician_k >= 0".into());
        }
        if !(self.bs_sidelobe_gain > 0.0) || !(self.tx_power_per_uav > 0.0) {
            return Err("bs_sidelobe_gain and tx_power_per_uav must be > 0".into());
        }
        if !(self.bs_tx_power >= 0.0) {
            return Err("bs_tx_power must be >= 0".into());
        }
        Ok(())
    }

    /// Phase constant k_c = 2π/λ.
    pub fn phase_constant(&self) -> f64 {
        TAU / self.wavelength
    }
}

/// Node counts for the sphere quadrature (Gauss–Legendre in θ, trapezoid in φ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            n_theta: 64,
            n_phi: 128,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        if self.n_theta < 8 || self.n_phi < 8 {
            return Err(PhysicsError::InvalidQuadrature {
                n_theta: self.n_theta,
                n_phi: self.n_phi,
            });
        }
        Ok(())
    }

    pub fn doubled(self) -> Self {
        Self {
            n_theta: self.n_theta * 2,
            n_phi: self.n_phi * 2,
        }
    }
}

/// How the radiated-power integral in the gain denominator is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum GainIntegration {
    /// Closed-form pair sum, exact for isotropic elements.
    Exact,
    /// Numerical sphere quadrature.
    Quadrature { n_theta: usize, n_phi: usize },
}

impl Default for GainIntegration {
    fn default() -> Self {
        GainIntegration::Exact
    }
}

/// Magnitude of the far-field pattern of a single element.
pub trait ElementPattern: Sync {
    fn magnitude(&self, dir: Direction) -> f64;
}

/// Constant unit pattern.
#[derive(Debug, Clone, Copy, Default)]
pub struct Isotropic;

impl ElementPattern for Isotropic {
    fn magnitude(&self, _dir: Direction) -> f64 {
        1.0
    }
}

/// Default element pattern ω(θ, φ).
pub fn element_pattern(dir: Direction) -> f64 {
    Isotropic.magnitude(dir)
}

/// Array factor Σ I_i exp(j k_c r_i · û(θ, φ)).
pub fn array_factor(layout: &SwarmLayout, dir: Direction, wavelength: f64) -> Complex64 {
    let k = TAU / wavelength;
    array_factor_unit(layout, dir.unit_vector(), k)
}

fn array_factor_unit(layout: &SwarmLayout, u: Point3, k: f64) -> Complex64 {
    layout
        .positions
        .iter()
        .zip(&layout.weights)
        .fold(Complex64::new(0.0, 0.0), |acc, (p, &w)| {
            let (s, c) = (k * p.dot(u)).sin_cos();
            acc + Complex64::new(w * c, w * s)
        })
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n(x) and P_{n-1}(x).
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Quadrature nodes over the unit sphere: (direction, weight including sin θ).
pub fn sphere_nodes(quad: QuadratureSpec) -> Vec<(Direction, f64)> {
    let (x, w) = gauss_legendre(quad.n_theta);
    let dphi = TAU / quad.n_phi as f64;
    let mut out = Vec::with_capacity(quad.n_theta * quad.n_phi);
    for (xi, wi) in x.iter().zip(&w) {
        let theta = (xi + 1.0) * PI / 2.0;
        let wt = wi * PI / 2.0 * theta.sin();
        for j in 0..quad.n_phi {
            // Azimuth reported in [-π, π).
            let phi = -PI + j as f64 * dphi;
            out.push((Direction::new(theta, phi), wt * dphi));
        }
    }
    out
}

/// ∬ |AF|² ω² sin θ dθ dφ by sphere quadrature.
pub fn radiated_power_quadrature(
    layout: &SwarmLayout,
    wavelength: f64,
    quad: QuadratureSpec,
    pattern: &dyn ElementPattern,
) -> f64 {
    let k = TAU / wavelength;
    sphere_nodes(quad)
        .into_iter()
        .map(|(dir, w)| {
            let e = pattern.magnitude(dir);
            array_factor_unit(layout, dir.unit_vector(), k).norm_sqr() * e * e * w
        })
        .sum()
}

/// ∬ |AF|² sin θ dθ dφ in closed form for isotropic elements:
/// 4π Σ_i Σ_k I_i I_k sinc(k_c |r_i − r_k|).
pub fn radiated_power_exact(layout: &SwarmLayout, wavelength: f64) -> f64 {
    let k = TAU / wavelength;
    let p = &layout.positions;
    let w = &layout.weights;
    let mut sum = 0.0;
    for i in 0..p.len() {
        sum += w[i] * w[i];
        for j in (i + 1)..p.len() {
            let x = k * p[i].distance(p[j]);
            let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
            sum += 2.0 * w[i] * w[j] * sinc;
        }
    }
    4.0 * PI * sum
}

fn gain_from_denominator(
    layout: &SwarmLayout,
    target: Direction,
    params: &ChannelParams,
    pattern: &dyn ElementPattern,
    denominator: f64,
) -> Result<f64, PhysicsError> {
    if !(denominator > 0.0) {
        return Err(PhysicsError::DegenerateArray);
    }
    let af = array_factor(layout, target, params.wavelength).norm_sqr();
    let e = pattern.magnitude(target);
    Ok(4.0 * PI * af * e * e / denominator * params.antenna_efficiency)
}

fn check_weights(layout: &SwarmLayout) -> Result<(), PhysicsError> {
    if layout.weights.iter().all(|&w| w == 0.0) {
        Err(PhysicsError::DegenerateArray)
    } else {
        Ok(())
    }
}

/// Beam gain toward `target` with isotropic elements, integral by quadrature.
pub fn array_gain(
    layout: &SwarmLayout,
    target: Direction,
    params: &ChannelParams,
    quad: QuadratureSpec,
) -> Result<f64, PhysicsError> {
    array_gain_with_pattern(layout, target, params, quad, &Isotropic)
}

/// Beam gain toward `target` for an arbitrary element pattern.
pub fn array_gain_with_pattern(
    layout: &SwarmLayout,
    target: Direction,
    params: &ChannelParams,
    quad: QuadratureSpec,
    pattern: &dyn ElementPattern,
) -> Result<f64, PhysicsError> {
    quad.validate()?;
    check_weights(layout)?;
    let denom = radiated_power_quadrature(layout, params.wavelength, quad, pattern);
    gain_from_denominator(layout, target, params, pattern, denom)
}

/// Beam gain toward `target` for isotropic elements with the exact integral.
pub fn array_gain_exact(
    layout: &SwarmLayout,
    target: Direction,
    params: &ChannelParams,
) -> Result<f64, PhysicsError> {
    check_weights(layout)?;
    let denom = radiated_power_exact(layout, params.wavelength);
    gain_from_denominator(layout, target, params, &Isotropic, denom)
}

/// Dispatch on the configured integration method.
pub fn beam_gain(
    layout: &SwarmLayout,
    target: Direction,
    params: &ChannelParams,
    method: GainIntegration,
) -> Result<f64, PhysicsError> {
    match method {
        GainIntegration::Exact => array_gain_exact(layout, target, params),
        GainIntegration::Quadrature { n_theta, n_phi } => {
            array_gain(layout, target, params, QuadratureSpec { n_theta, n_phi })
        }
    }
}

/// Draw a Rician fading power with factor `rician_k` and mean `mean`.
pub fn sample_rician<R: Rng + ?Sized>(rician_k: f64, mean: f64, rng: &mut R) -> f64 {
    let los = (rician_k / (rician_k + 1.0)).sqrt();
    let scatter_std = (0.5 / (rician_k + 1.0)).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let c_re = los + scatter_std * re;
    let c_im = scatter_std * im;
    (c_re * c_re + c_im * c_im) * mean
}

/// Channel power gain K0 d^(−α) Ω.
pub fn channel_gain(distance: f64, params: &ChannelParams, fading: f64) -> Result<f64, PhysicsError> {
    if !(distance > 0.0) {
        return Err(PhysicsError::ZeroDistance(distance));
    }
    Ok(params.k0 * distance.powf(-params.alpha) * fading)
}

/// Signal-to-interference-plus-noise ratio at the user.
pub fn sinr(
    p_u: f64,
    g_uvaa: f64,
    g_um: f64,
    p_b: f64,
    g_bm_ant: f64,
    g_bm_ch: f64,
    noise: f64,
) -> f64 {
    p_u * g_uvaa * g_um / (noise + p_b * g_bm_ant * g_bm_ch)
}

/// Shannon rate log₂(1 + SINR), bits/s/Hz.
pub fn achievable_rate(sinr_value: f64) -> f64 {
    (1.0 + sinr_value).log2()
}

/// Spherical angles of the vector from `source` to `target`.
pub fn direction_to(source: Point3, target: Point3) -> Result<Direction, PhysicsError> {
    let d = target - source;
    let r = d.norm();
    if r == 0.0 {
        return Err(PhysicsError::CoincidentPoints);
    }
    let theta = (d.z / r).clamp(-1.0, 1.0).acos();
    Ok(Direction::new(theta, d.y.atan2(d.x)))
}
