//! Memory-based Gauss–Markov random walk of the terrestrial user.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Axis-aligned rectangle on the ground plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Area {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Area {
    pub fn square(min: f64, max: f64) -> Self {
        Self {
            x_min: min,
            x_max: max,
            y_min: min,
            y_max: max,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }
}

/// Parameters of the speed and heading AR(1) processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilityParams {
    /// Memory level α_g in [0, 1].
    pub memory: f64,
    /// Asymptotic mean speed, m/s.
    pub mean_speed: f64,
    /// Asymptotic mean heading, rad.
    pub mean_heading: f64,
    /// Asymptotic standard deviation of the speed process.
    pub sigma_speed: f64,
    /// Asymptotic standard deviation of the heading process.
    pub sigma_heading: f64,
    pub area: Area,
}

impl Default for MobilityParams {
    fn default() -> Self {
        Self {
            memory: 0.8,
            mean_speed: 1.0,
            mean_heading: 0.0,
            sigma_speed: 0.3,
            sigma_heading: 0.3,
            area: Area::square(0.0, 100.0),
        }
    }
}

impl MobilityParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.memory) {
            return Err(format!("mobility.memory must lie in [0, 1], got {}", self.memory));
        }
        if !(self.sigma_speed >= 0.0 && self.sigma_heading >= 0.0) {
            return Err("mobility sigmas must be >= 0".into());
        }
        if !(self.mean_speed >= 0.0) {
            return Err("mobility.mean_speed must be >= 0".into());
        }
        let a = &self.area;
        if !(a.x_min < a.x_max && a.y_min < a.y_max) {
            return Err("mobility.area must have min < max on both axes".into());
        }
        Ok(())
    }
}

/// Current state of the user's mobility process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussMarkovState {
    pub speed: f64,
    /// Unwrapped heading, rad.
    pub heading: f64,
    pub x: f64,
    pub y: f64,
    pub params: MobilityParams,
}

impl GaussMarkovState {
    /// User at the centre of its area, moving at the mean speed and heading.
    pub fn centered(params: MobilityParams) -> Self {
        let (x, y) = params.area.center();
        Self {
            speed: params.mean_speed,
            heading: params.mean_heading,
            x,
            y,
            params,
        }
    }

    /// Heading reduced to [0, 2π).
    pub fn wrapped_heading(&self) -> f64 {
        self.heading.rem_euclid(TAU)
    }
}

/// One AR(1) update of speed and heading; returns `(speed, heading)`.
pub fn gm_step<R: Rng + ?Sized>(state: &GaussMarkovState, rng: &mut R) -> (f64, f64) {
    let p = &state.params;
    let a = p.memory;
    let innov = (1.0 - a * a).max(0.0).sqrt();
    let w_v: f64 = rng.sample::<f64, _>(StandardNormal) * p.sigma_speed;
    let w_h: f64 = rng.sample::<f64, _>(StandardNormal) * p.sigma_heading;
    let speed = (a * state.speed + (1.0 - a) * p.mean_speed + innov * w_v).max(0.0);
    let heading = a * state.heading + (1.0 - a) * p.mean_heading + innov * w_h;
    (speed, heading)
}

/// Reflect `pos` into `[lo, hi]`; returns the new coordinate and whether the
/// direction of travel along this axis flipped.
fn reflect(pos: f64, lo: f64, hi: f64) -> (f64, bool) {
    if (lo..=hi).contains(&pos) {
        return (pos, false);
    }
    // Unfold the motion onto a line of period 2w; an odd number of wall hits
    // lands in the mirrored half.
    let width = hi - lo;
    let offset = (pos - lo).rem_euclid(2.0 * width);
    if offset > width {
        (lo + 2.0 * width - offset, true)
    } else {
        (lo + offset, false)
    }
}

/// Advance the user by one slot with specular reflection at the area edges.
pub fn user_step<R: Rng + ?Sized>(state: &GaussMarkovState, dt: f64, rng: &mut R) -> GaussMarkovState {
    let (speed, mut heading) = gm_step(state, rng);
    let area = state.params.area;
    let (s, c) = heading.sin_cos();
    let nx = state.x + speed * dt * c;
    let ny = state.y + speed * dt * s;
    let (x, flip_x) = reflect(nx, area.x_min, area.x_max);
    let (y, flip_y) = reflect(ny, area.y_min, area.y_max);
    if flip_x {
        heading = PI - heading;
    }
    if flip_y {
        heading = -heading;
    }
    GaussMarkovState {
        speed,
        heading,
        x,
        y,
        params: state.params.clone(),
    }
}
