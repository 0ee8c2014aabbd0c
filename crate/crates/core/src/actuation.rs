//! Hybrid motor/brake command policy for a single module.
//!
//! The motor renders smooth forces up to its steady-state limit. Above that,
//! only the passive one-way brake can help, and only while the cable is being
//! pulled out of the module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorParams {
    pub motor_max_force: f64,
    pub brake_max_force: f64,
    pub min_taut_force: f64,
    /// Cable tension per ampere of motor current, N/A.
    pub force_per_amp: f64,
}

impl Default for ActuatorParams {
    fn default() -> Self {
        Self { motor_max_force: 6.0, brake_max_force: 186.0, min_taut_force: 0.5, force_per_amp: 3.0 }
    }
}

impl ActuatorParams {
    pub fn validate(&self) -> Result<()> {
        let ordered = 0.0 < self.min_taut_force
            && self.min_taut_force < self.motor_max_force
            && self.motor_max_force < self.brake_max_force
            && self.brake_max_force.is_finite();
        if !ordered {
            return Err(Error::InvalidActuatorParams(
                "need 0 < min_taut_force < motor_max_force < brake_max_force".into(),
            ));
        }
        if !(self.force_per_amp > 0.0 && self.force_per_amp.is_finite()) {
            return Err(Error::InvalidActuatorParams("force_per_amp must be positive".into()));
        }
        Ok(())
    }

    pub fn max_current(&self) -> f64 {
        self.motor_max_force / self.force_per_amp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActuatorMode {
    Motor,
    Brake,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorCommand {
    pub mode: ActuatorMode,
    /// Amperes; zero in brake mode.
    pub motor_current: f64,
    pub brake_engaged: bool,
}

impl ActuatorCommand {
    /// Cable tension the command is expected to hold, capped at the brake
    /// limit in brake mode.
    pub fn nominal_tension(&self, params: &ActuatorParams) -> f64 {
        match self.mode {
            ActuatorMode::Motor => self.motor_current * params.force_per_amp,
            ActuatorMode::Brake => params.brake_max_force,
        }
    }
}

pub fn command_for_tension(desired_tension: f64, cable_paying_out: bool, params: &ActuatorParams) -> Result<ActuatorCommand> {
    if !desired_tension.is_finite() || desired_tension < 0.0 {
        return Err(Error::InvalidTension(desired_tension));
    }
    params.validate()?;

    if desired_tension > params.motor_max_force && cable_paying_out {
        return Ok(ActuatorCommand { mode: ActuatorMode::Brake, motor_current: 0.0, brake_engaged: true });
    }
    // The brake cannot resist reel-in, so excess demand saturates the motor.
    let tension = desired_tension.clamp(params.min_taut_force, params.motor_max_force);
    Ok(ActuatorCommand {
        mode: ActuatorMode::Motor,
        motor_current: tension / params.force_per_amp,
        brake_engaged: false,
    })
}
