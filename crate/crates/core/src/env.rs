//! The multi-objective decision process: state, feasible action application,
//! vector rewards and the episode lifecycle.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{slot_energy, step_position, MoveCommand, RotorParams};
use crate::mobility::{user_step, GaussMarkovState, MobilityParams};
use crate::physics::{
    achievable_rate, beam_gain, channel_gain, direction_to, sample_rician, sinr, ChannelParams,
    GainIntegration, PhysicsError, Point3, SwarmLayout,
};
use crate::seed::{self, Rng};

/// Number of objectives (rate, energy).
pub const NUM_OBJECTIVES: usize = 2;

/// Rejected placements tolerated by [`Environment::reset`].
pub const MAX_PLACEMENT_REJECTIONS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("could not place UAVs with the required separation after {0} rejections")]
    PlacementFailure(usize),
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("action has {got} components, expected {expected}")]
    ActionDimension { expected: usize, got: usize },
    #[error("action component {index} = {value} outside [{lo}, {hi}]")]
    ActionOutOfBounds { index: usize, value: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub n_uav: usize,
    /// Episode length T in slots.
    pub horizon: usize,
    /// Seconds per slot.
    pub slot_duration: f64,
    /// Horizontal bounds L_min..L_max for both x and y, m.
    pub area_min: f64,
    pub area_max: f64,
    /// Altitude bounds H_min..H_max, m.
    pub altitude_min: f64,
    pub altitude_max: f64,
    pub d_h_max: f64,
    pub d_v_max: f64,
    /// Collision distance, m.
    pub d_min: f64,
    /// Ground position of the interfering base station, m.
    pub bs_position: [f64; 2],
    /// Energy reward scale.
    pub eps1: f64,
    /// Rate reward factor in infeasible slots.
    pub eps2: f64,
    /// Energy penalty factor in infeasible slots.
    pub eps3: f64,
    /// Floor applied to link distances before path loss, m.
    pub min_link_distance: f64,
    pub clamp_negative_energy: bool,
    pub gain_integration: GainIntegration,
    pub channel: ChannelParams,
    pub rotor: RotorParams,
    pub mobility: MobilityParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_uav: 8,
            horizon: 300,
            slot_duration: 1.0,
            area_min: 0.0,
            area_max: 100.0,
            altitude_min: 60.0,
            altitude_max: 90.0,
            d_h_max: 20.0,
            d_v_max: 10.0,
            d_min: 0.5,
            bs_position: [100.0, 100.0],
            eps1: 1e-3,
            eps2: 0.5,
            eps3: 2.0,
            min_link_distance: 1.0,
            clamp_negative_energy: false,
            gain_integration: GainIntegration::Exact,
            channel: ChannelParams::default(),
            rotor: RotorParams::default(),
            mobility: MobilityParams::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::InvalidConfig(m));
        if self.n_uav == 0 {
            return bad("n_uav must be >= 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if !(self.slot_duration > 0.0) {
            return bad("slot_duration must be > 0".into());
        }
        if !(self.area_min < self.area_max) {
            return bad("area_min must be < area_max".into());
        }
        if !(self.altitude_min < self.altitude_max) {
            return bad("altitude_min must be < altitude_max".into());
        }
        if !(self.d_min > 0.0) {
            return bad("d_min must be > 0".into());
        }
        if !(self.d_h_max >= 0.0 && self.d_v_max >= 0.0) {
            return bad("d_h_max and d_v_max must be >= 0".into());
        }
        if !(self.eps1 >= 0.0 && self.eps2 >= 0.0 && self.eps3 >= 0.0) {
            return bad("penalty coefficients must be >= 0".into());
        }
        if !(self.min_link_distance > 0.0) {
            return bad("min_link_distance must be > 0".into());
        }
        if let GainIntegration::Quadrature { n_theta, n_phi } = self.gain_integration {
            if n_theta < 8 || n_phi < 8 {
                return bad("quadrature node counts must be >= 8".into());
            }
        }
        self.channel.validate().map_err(EnvError::InvalidConfig)?;
        self.rotor.validate().map_err(EnvError::InvalidConfig)?;
        self.mobility.validate().map_err(EnvError::InvalidConfig)?;
        Ok(())
    }

    pub fn observation_len(&self) -> usize {
        3 * self.n_uav + 3
    }

    pub fn action_len(&self) -> usize {
        4 * self.n_uav
    }

    /// Per-component bounds of the flat action, in [`ActionVector::to_flat`] order.
    pub fn action_bounds(&self) -> Vec<(f64, f64)> {
        let n = self.n_uav;
        let mut b = Vec::with_capacity(4 * n);
        b.extend(std::iter::repeat_n((0.0, 1.0), n));
        b.extend(std::iter::repeat_n((0.0, std::f64::consts::TAU), n));
        b.extend(std::iter::repeat_n((0.0, self.d_h_max), n));
        b.extend(std::iter::repeat_n((-self.d_v_max, self.d_v_max), n));
        b
    }

    /// Energy of one UAV hovering for one slot from rest, J.
    pub fn hover_slot_energy(&self) -> f64 {
        slot_energy(0.0, &MoveCommand::HOVER, self.slot_duration, &self.rotor).joules
    }

    fn in_box(&self, p: Point3) -> bool {
        (self.area_min..=self.area_max).contains(&p.x)
            && (self.area_min..=self.area_max).contains(&p.y)
            && (self.altitude_min..=self.altitude_max).contains(&p.z)
    }
}

/// Excitation weights and movement commands for every UAV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionVector {
    pub weights: Vec<f64>,
    pub commands: Vec<MoveCommand>,
}

impl ActionVector {
    /// Decode `[I_1..I_N, ψ_1..ψ_N, d^h_1..d^h_N, d^v_1..d^v_N]`.
    pub fn from_flat(flat: &[f64], n_uav: usize) -> Result<Self, EnvError> {
        if flat.len() != 4 * n_uav {
            return Err(EnvError::ActionDimension {
                expected: 4 * n_uav,
                got: flat.len(),
            });
        }
        let n = n_uav;
        let commands = (0..n)
            .map(|i| MoveCommand {
                psi: flat[n + i],
                d_h: flat[2 * n + i],
                d_v: flat[3 * n + i],
            })
            .collect();
        Ok(Self {
            weights: flat[..n].to_vec(),
            commands,
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.extend(self.commands.iter().map(|c| c.psi));
        v.extend(self.commands.iter().map(|c| c.d_h));
        v.extend(self.commands.iter().map(|c| c.d_v));
        v
    }

    /// No movement, every element at `weight`.
    pub fn hover(n_uav: usize, weight: f64) -> Self {
        Self {
            weights: vec![weight; n_uav],
            commands: vec![MoveCommand::HOVER; n_uav],
        }
    }

    fn check(&self, config: &EnvConfig) -> Result<(), EnvError> {
        let flat = self.to_flat();
        if flat.len() != config.action_len() {
            return Err(EnvError::ActionDimension {
                expected: config.action_len(),
                got: flat.len(),
            });
        }
        for (index, (&value, (lo, hi))) in flat.iter().zip(config.action_bounds()).enumerate() {
            if !(value >= lo && value <= hi) {
                return Err(EnvError::ActionOutOfBounds { index, value, lo, hi });
            }
        }
        Ok(())
    }
}

/// Per-slot vector reward (rate reward, non-positive scaled energy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardVector {
    pub rate_reward: f64,
    pub energy_reward: f64,
}

impl RewardVector {
    pub fn as_array(&self) -> [f64; NUM_OBJECTIVES] {
        [self.rate_reward, self.energy_reward]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub layout: SwarmLayout,
    pub prev_speeds: Vec<f64>,
    pub user: GaussMarkovState,
    pub slot_index: usize,
}

/// What one call to [`Environment::step`] produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: RewardVector,
    pub valid: bool,
    /// Achievable rate R_UM[t], bits/s/Hz.
    pub rate: f64,
    /// Σ_i E_i[t], J.
    pub energy: f64,
    pub frozen: Vec<bool>,
    pub done: bool,
}

/// One JSONL line of an episode trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub positions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub user: [f64; 2],
    pub action: Vec<f64>,
    pub reward: [f64; 2],
    pub rate: f64,
    pub energy: f64,
    pub valid: bool,
}

#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    state: EnvState,
    rng: Rng,
}

impl Environment {
    /// Start an episode; everything stochastic derives from `seed`.
    pub fn reset(config: &EnvConfig, seed: u64) -> Result<Self, EnvError> {
        config.validate()?;
        let mut rng = seed::substream(seed, "env", &[]);
        let positions = place_uavs(config, &mut rng)?;
        let layout = SwarmLayout::uniform(positions)?;
        let state = EnvState {
            prev_speeds: vec![0.0; config.n_uav],
            layout,
            user: GaussMarkovState::centered(config.mobility.clone()),
            slot_index: 0,
        };
        Ok(Self {
            config: config.clone(),
            state,
            rng,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.state.slot_index >= self.config.horizon
    }

    /// Normalised positions of every UAV followed by the user.
    pub fn observe(&self) -> Vec<f64> {
        let c = &self.config;
        let l = c.area_max;
        let dh = c.altitude_max - c.altitude_min;
        let mut obs = Vec::with_capacity(c.observation_len());
        for p in self.state.layout.positions() {
            obs.extend([p.x / l, p.y / l, (p.z - c.altitude_min) / dh]);
        }
        obs.extend([self.state.user.x / l, self.state.user.y / l, 0.0]);
        obs
    }

    /// Apply `action` for one slot.
    pub fn step(&mut self, action: &ActionVector) -> Result<StepOutcome, EnvError> {
        if self.is_done() {
            return Err(EnvError::EpisodeFinished);
        }
        action.check(&self.config)?;
        let cfg = &self.config;
        let n = cfg.n_uav;
        let current: Vec<Point3> = self.state.layout.positions().to_vec();
        let tentative: Vec<Point3> = current
            .iter()
            .zip(&action.commands)
            .map(|(p, c)| step_position(*p, c))
            .collect();

        let mut frozen: Vec<bool> = tentative.iter().map(|p| !cfg.in_box(*p)).collect();
        // Freezing one UAV can create a new conflict with another's tentative
        // position; iterate until the effective layout is collision free.
        loop {
            let effective: Vec<Point3> = (0..n)
                .map(|i| if frozen[i] { current[i] } else { tentative[i] })
                .collect();
            let mut changed = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    if effective[i].distance(effective[j]) < cfg.d_min {
                        for k in [i, j] {
                            if !frozen[k] {
                                frozen[k] = true;
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let valid = !frozen.iter().any(|&f| f);

        let mut energy = 0.0;
        for i in 0..n {
            let cmd = if frozen[i] { MoveCommand::HOVER } else { action.commands[i] };
            let e = slot_energy(self.state.prev_speeds[i], &cmd, cfg.slot_duration, &cfg.rotor);
            self.state.prev_speeds[i] = e.speed;
            energy += if cfg.clamp_negative_energy { e.joules.max(0.0) } else { e.joules };
            if !frozen[i] {
                self.state.layout.positions_mut()[i] = tentative[i];
            }
        }
        self.state.layout.weights_mut().copy_from_slice(&action.weights);

        self.state.user = user_step(&self.state.user, cfg.slot_duration, &mut self.rng);
        let fade_um = sample_rician(cfg.channel.rician_k, 1.0, &mut self.rng);
        let fade_bm = sample_rician(cfg.channel.rician_k, 1.0, &mut self.rng);

        let rate = link_rate(cfg, &self.state.layout, &self.state.user, fade_um, fade_bm)?;
        let reward = if valid {
            RewardVector {
                rate_reward: rate,
                energy_reward: -cfg.eps1 * energy,
            }
        } else {
            RewardVector {
                rate_reward: cfg.eps2 * rate,
                energy_reward: -cfg.eps1 * cfg.eps3 * energy,
            }
        };
        self.state.slot_index += 1;
        Ok(StepOutcome {
            reward,
            valid,
            rate,
            energy,
            frozen,
            done: self.is_done(),
        })
    }

    /// Trace line for the slot just stepped with `action`.
    pub fn record(&self, action: &ActionVector, outcome: &StepOutcome) -> SlotRecord {
        SlotRecord {
            slot: self.state.slot_index - 1,
            positions: self
                .state
                .layout
                .positions()
                .iter()
                .map(|p| [p.x, p.y, p.z])
                .collect(),
            weights: self.state.layout.weights().to_vec(),
            user: [self.state.user.x, self.state.user.y],
            action: action.to_flat(),
            reward: outcome.reward.as_array(),
            rate: outcome.rate,
            energy: outcome.energy,
            valid: outcome.valid,
        }
    }
}

fn place_uavs(config: &EnvConfig, rng: &mut Rng) -> Result<Vec<Point3>, EnvError> {
    let mut placed: Vec<Point3> = Vec::with_capacity(config.n_uav);
    let mut rejections = 0;
    while placed.len() < config.n_uav {
        let p = Point3::new(
            rng.random_range(config.area_min..=config.area_max),
            rng.random_range(config.area_min..=config.area_max),
            rng.random_range(config.altitude_min..=config.altitude_max),
        );
        if placed.iter().all(|q| q.distance(p) >= config.d_min) {
            placed.push(p);
        } else {
            rejections += 1;
            if rejections >= MAX_PLACEMENT_REJECTIONS {
                return Err(EnvError::PlacementFailure(rejections));
            }
        }
    }
    Ok(placed)
}

/// Achievable rate of the UVAA-to-user link for one slot.
pub fn link_rate(
    cfg: &EnvConfig,
    layout: &SwarmLayout,
    user: &GaussMarkovState,
    fade_um: f64,
    fade_bm: f64,
) -> Result<f64, EnvError> {
    let p_u = cfg.channel.tx_power_per_uav * layout.power_factor();
    if p_u == 0.0 {
        return Ok(0.0);
    }
    let centroid = layout.centroid();
    let user_pos = Point3::new(user.x, user.y, 0.0);
    let dir = direction_to(centroid, user_pos)?;
    let gain = beam_gain(layout, dir, &cfg.channel, cfg.gain_integration)?;
    let d_um = centroid.distance(user_pos).max(cfg.min_link_distance);
    let g_um = channel_gain(d_um, &cfg.channel, fade_um)?;
    let bs = Point3::new(cfg.bs_position[0], cfg.bs_position[1], 0.0);
    let d_bm = bs.distance(user_pos).max(cfg.min_link_distance);
    let g_bm = channel_gain(d_bm, &cfg.channel, fade_bm)?;
    let s = sinr(
        p_u,
        gain,
        g_um,
        cfg.channel.bs_tx_power,
        cfg.channel.bs_sidelobe_gain,
        g_bm,
        cfg.channel.noise_power,
    );
    Ok(achievable_rate(s))
}
