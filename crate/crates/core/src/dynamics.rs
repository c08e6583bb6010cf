//! UAV kinematics and rotary-wing energy accounting per time slot.

use serde::{Deserialize, Serialize};

use crate::physics::Point3;

/// Rotary-wing propulsion constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RotorParams {
    /// Blade-profile power in hover, W.
    pub blade_power: f64,
    /// Induced power in hover, W.
    pub induced_power: f64,
    /// Rotor blade tip speed, m/s.
    pub tip_speed: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub hover_induced_velocity: f64,
    pub fuselage_drag_ratio: f64,
    /// kg/m³
    pub air_density: f64,
    pub rotor_solidity: f64,
    /// m²
    pub rotor_disc_area: f64,
    /// kg
    pub uav_mass: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for RotorParams {
    fn default() -> Self {
        Self {
            blade_power: 79.86,
            induced_power: 88.63,
            tip_speed: 120.0,
            hover_induced_velocity: 4.03,
            fuselage_drag_ratio: 0.6,
            air_density: 1.225,
            rotor_solidity: 0.05,
            rotor_disc_area: 0.503,
            uav_mass: 2.0,
            gravity: 9.8,
        }
    }
}

impl RotorParams {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("blade_power", self.blade_power),
            ("induced_power", self.induced_power),
            ("tip_speed", self.tip_speed),
            ("hover_induced_velocity", self.hover_induced_velocity),
            ("fuselage_drag_ratio", self.fuselage_drag_ratio),
            ("air_density", self.air_density),
            ("rotor_solidity", self.rotor_solidity),
            ("rotor_disc_area", self.rotor_disc_area),
            ("uav_mass", self.uav_mass),
            ("gravity", self.gravity),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("rotor.{name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }

    /// Hover power P_B + P_I.
    pub fn hover_power(&self) -> f64 {
        self.blade_power + self.induced_power
    }
}

/// Per-slot movement of one UAV.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MoveCommand {
    /// Horizontal heading, rad in [0, 2π].
    pub psi: f64,
    /// Horizontal distance, m.
    pub d_h: f64,
    /// Signed vertical distance, m.
    pub d_v: f64,
}

impl MoveCommand {
    pub const HOVER: MoveCommand = MoveCommand {
        psi: 0.0,
        d_h: 0.0,
        d_v: 0.0,
    };

    pub fn displacement(&self) -> f64 {
        self.d_h.hypot(self.d_v)
    }
}

pub fn step_position(pos: Point3, cmd: &MoveCommand) -> Point3 {
    let (s, c) = cmd.psi.sin_cos();
    Point3::new(pos.x + cmd.d_h * c, pos.y + cmd.d_h * s, pos.z + cmd.d_v)
}

/// Propulsion power of a rotary-wing UAV at forward speed `v`, W.
pub fn propulsion_power(v: f64, rotor: &RotorParams) -> f64 {
    let v2 = v * v;
    let v0_2 = rotor.hover_induced_velocity * rotor.hover_induced_velocity;
    let blade = rotor.blade_power * (1.0 + 3.0 * v2 / (rotor.tip_speed * rotor.tip_speed));
    let induced_ratio = ((1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)).sqrt() - v2 / (2.0 * v0_2))
        .max(0.0)
        .sqrt();
    let parasite = 0.5
        * rotor.fuselage_drag_ratio
        * rotor.air_density
        * rotor.rotor_solidity
        * rotor.rotor_disc_area
        * v2
        * v;
    blade + rotor.induced_power * induced_ratio + parasite
}

/// Energy spent in one slot together with the speed flown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotEnergy {
    pub joules: f64,
    /// Piecewise-constant 3D speed during the slot, m/s.
    pub speed: f64,
}

/// Per-slot energy: propulsion over the slot plus the kinetic and potential
/// energy changes. May be negative on steep descents.
pub fn slot_energy(v_prev: f64, cmd: &MoveCommand, dt: f64, rotor: &RotorParams) -> SlotEnergy {
    let v_new = cmd.displacement() / dt;
    let m = rotor.uav_mass;
    let joules = propulsion_power(v_new, rotor) * dt
        + 0.5 * m * (v_new * v_new - v_prev * v_prev)
        + m * rotor.gravity * cmd.d_v;
    SlotEnergy {
        joules,
        speed: v_new,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // Independent transcription of the propulsion model used as a cross-check.
    fn power_reference(v: f64, r: &RotorParams) -> f64 {
        let term1 = r.blade_power * (1.0 + 3.0 * v.powi(2) / r.tip_speed.powi(2));
        let inner = (1.0 + v.powi(4) / (4.0 * r.hover_induced_velocity.powi(4))).powf(0.5)
            - v.powi(2) / (2.0 * r.hover_induced_velocity.powi(2));
        let term2 = r.induced_power * inner.powf(0.5);
        let term3 = r.fuselage_drag_ratio * r.air_density * r.rotor_solidity * r.rotor_disc_area
            * v.powi(3)
            / 2.0;
        term1 + term2 + term3
    }

    #[test]
    fn moves() {
        let p = Point3::new(0.0, 0.0, 70.0);
        assert_eq!(
            step_position(p, &MoveCommand { psi: 0.0, d_h: 5.0, d_v: 0.0 }),
            Point3::new(5.0, 0.0, 70.0)
        );
        let q = step_position(p, &MoveCommand { psi: PI / 2.0, d_h: 5.0, d_v: -3.0 });
        assert!(q.x.abs() < 1e-12 && (q.y - 5.0).abs() < 1e-12 && q.z == 67.0);
        assert_eq!(step_position(p, &MoveCommand::HOVER), p);
    }

    #[test]
    fn hover_power_at_rest() {
        let r = RotorParams::default();
        assert_eq!(propulsion_power(0.0, &r), r.blade_power + r.induced_power);
    }

    #[test]
    fn parasite_term_dominates_at_high_speed() {
        let r = RotorParams::default();
        let v: f64 = 100.0;
        let parasite =
            0.5 * r.fuselage_drag_ratio * r.air_density * r.rotor_solidity * r.rotor_disc_area * v.powi(3);
        let ratio = propulsion_power(v, &r) / parasite;
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn matches_reference_transcription() {
        let r = RotorParams::default();
        for v in [0.0, 1.0, r.hover_induced_velocity, 10.0, 22.36, 40.0] {
            let a = propulsion_power(v, &r);
            let b = power_reference(v, &r);
            assert!((a - b).abs() <= 1e-10 * b, "v={v}: {a} vs {b}");
        }
    }

    #[test]
    fn power_is_positive() {
        let r = RotorParams::default();
        for i in 0..2000 {
            assert!(propulsion_power(i as f64 * 0.05, &r) > 0.0);
        }
    }

    #[test]
    fn hover_slot_energy() {
        let r = RotorParams::default();
        let e = slot_energy(0.0, &MoveCommand::HOVER, 1.0, &r);
        assert_eq!(e.joules, r.hover_power());
        assert_eq!(e.speed, 0.0);
    }

    #[test]
    fn climb_slot_energy() {
        let r = RotorParams::default();
        let cmd = MoveCommand { psi: 0.0, d_h: 0.0, d_v: 10.0 };
        let e = slot_energy(10.0, &cmd, 1.0, &r);
        let expected = power_reference(10.0, &r) + r.uav_mass * r.gravity * 10.0;
        assert!((e.joules - expected).abs() < 1e-9);
    }

    #[test]
    fn potential_terms_telescope() {
        let r = RotorParams::default();
        let down = MoveCommand { psi: 0.0, d_h: 0.0, d_v: -7.0 };
        let up = MoveCommand { psi: 0.0, d_h: 0.0, d_v: 7.0 };
        let e1 = slot_energy(0.0, &down, 1.0, &r);
        let e2 = slot_energy(e1.speed, &up, 1.0, &r);
        let p7 = propulsion_power(7.0, &r);
        // Both slots fly at 7 m/s; kinetic: +49 then 0; potential cancels.
        let total_non_propulsive = e1.joules + e2.joules - 2.0 * p7;
        assert!((total_non_propulsive - 0.5 * r.uav_mass * 49.0).abs() < 1e-9);
    }
}
