//! Capacitor energy buffer: charge, consumption, and threshold bookkeeping.
//!
//! The buffer is modeled energy-linearly: charging adds
//! `efficiency * power * dt` microjoules, saturating at the capacity set by
//! `voltage_max`. The device turns on when the stored energy reaches the
//! `voltage_on` level and browns out at the `voltage_off` level.

use serde::{Deserialize, Serialize};

use super::EnergyError;

/// Converts a capacitor voltage to stored energy in microjoules.
fn energy_uj(capacitance_f: f64, volts: f64) -> f64 {
    0.5 * capacitance_f * volts * volts * 1e6
}

/// Energy buffer state. All energies are microjoules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitorState {
    pub capacitance_f: f64,
    pub voltage_on: f64,
    pub voltage_off: f64,
    pub voltage_max: f64,
    pub current_energy_uj: f64,
}

/// Result of drawing energy from the buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsumeOutcome {
    /// Full cost paid; voltage stayed at or above the brown-out threshold.
    Ok,
    /// The draw crossed the brown-out threshold: the buffer is clamped to
    /// the `voltage_off` level and the device loses power.
    Died,
}

impl CapacitorState {
    /// Validates thresholds and constructs a buffer with the given initial
    /// stored energy.
    pub fn new(
        capacitance_f: f64,
        voltage_on: f64,
        voltage_off: f64,
        voltage_max: f64,
        current_energy_uj: f64,
    ) -> Result<Self, EnergyError> {
        if !(capacitance_f > 0.0) {
            return Err(EnergyError::InvalidCapacitor(format!(
                "capacitance must be positive, got {capacitance_f}"
            )));
        }
        if !(voltage_off < voltage_on && voltage_on <= voltage_max) {
            return Err(EnergyError::InvalidCapacitor(format!(
                "need voltage_off < voltage_on <= voltage_max, got {voltage_off} / {voltage_on} / {voltage_max}"
            )));
        }
        if voltage_off < 0.0 {
            return Err(EnergyError::InvalidCapacitor(
                "voltage_off must be non-negative".into(),
            ));
        }
        let cap = Self {
            capacitance_f,
            voltage_on,
            voltage_off,
            voltage_max,
            current_energy_uj,
        };
        if current_energy_uj < 0.0 || current_energy_uj > cap.energy_max_uj() {
            return Err(EnergyError::InvalidCapacitor(format!(
                "initial energy {current_energy_uj} outside [0, {}]",
                cap.energy_max_uj()
            )));
        }
        Ok(cap)
    }

    /// Capacity: `0.5 * C * voltage_max^2`.
    pub fn energy_max_uj(&self) -> f64 {
        energy_uj(self.capacitance_f, self.voltage_max)
    }

    /// Stored energy at the turn-on threshold.
    pub fn energy_on_uj(&self) -> f64 {
        energy_uj(self.capacitance_f, self.voltage_on)
    }

    /// Stored energy at the brown-out threshold; consumption clamps here.
    pub fn energy_floor_uj(&self) -> f64 {
        energy_uj(self.capacitance_f, self.voltage_off)
    }

    /// Energy available in one power cycle: `0.5 * C * (v_on^2 - v_off^2)`.
    pub fn usable_budget_uj(&self) -> f64 {
        self.energy_on_uj() - self.energy_floor_uj()
    }

    /// Energy currently spendable before brown-out.
    pub fn available_uj(&self) -> f64 {
        (self.current_energy_uj - self.energy_floor_uj()).max(0.0)
    }

    /// Voltage implied by the stored energy.
    pub fn voltage(&self) -> f64 {
        (2.0 * self.current_energy_uj * 1e-6 / self.capacitance_f).sqrt()
    }

    /// Adds `efficiency * power * dt` microjoules, saturating at capacity.
    /// Returns the energy actually stored (less than the input when
    /// saturated).
    pub fn step_charge(&mut self, power_uw: f64, dt_s: f64, efficiency: f64) -> f64 {
        debug_assert!(dt_s > 0.0 && efficiency > 0.0 && efficiency <= 1.0);
        let input = efficiency * power_uw * dt_s;
        let before = self.current_energy_uj;
        self.current_energy_uj = (before + input).min(self.energy_max_uj());
        self.current_energy_uj - before
    }

    /// Draws `cost_uj`. If the draw would leave the voltage below the
    /// brown-out threshold the buffer clamps to that level and the outcome
    /// is [`ConsumeOutcome::Died`]; the partial draw is still spent.
    /// Returns the outcome and the energy actually removed.
    pub fn consume(&mut self, cost_uj: f64) -> (ConsumeOutcome, f64) {
        debug_assert!(cost_uj >= 0.0);
        let floor = self.energy_floor_uj();
        if self.current_energy_uj - cost_uj >= floor {
            self.current_energy_uj -= cost_uj;
            (ConsumeOutcome::Ok, cost_uj)
        } else {
            let spent = (self.current_energy_uj - floor).max(0.0);
            self.current_energy_uj = floor;
            (ConsumeOutcome::Died, spent)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cap_default(energy: f64) -> CapacitorState {
        CapacitorState::new(1470e-6, 2.8, 1.8, 3.3, energy).unwrap()
    }

    #[test]
    fn threshold_energies() {
        let c = cap_default(0.0);
        assert!((c.energy_max_uj() - 8004.15).abs() < 1e-6);
        assert!((c.usable_budget_uj() - 3381.0).abs() < 1e-6);
        assert!(c.usable_budget_uj() > 0.0);
    }

    #[test]
    fn rejects_bad_thresholds() {
        assert!(CapacitorState::new(1470e-6, 1.8, 2.8, 3.3, 0.0).is_err());
        assert!(CapacitorState::new(1470e-6, 3.5, 1.8, 3.3, 0.0).is_err());
        assert!(CapacitorState::new(-1.0, 2.8, 1.8, 3.3, 0.0).is_err());
        assert!(CapacitorState::new(1470e-6, 2.8, 1.8, 3.3, 1e9).is_err());
    }

    #[test]
    fn charge_unit_arithmetic() {
        let mut c = cap_default(0.0);
        let stored = c.step_charge(100.0, 1.0, 1.0);
        assert!((stored - 100.0).abs() < 1e-12);
        assert!((c.current_energy_uj - 100.0).abs() < 1e-12);
    }

    #[test]
    fn charge_saturates_at_capacity() {
        let mut c = cap_default(0.0);
        c.current_energy_uj = c.energy_max_uj();
        let stored = c.step_charge(1e9, 10.0, 1.0);
        assert_eq!(stored, 0.0);
        assert_eq!(c.current_energy_uj, c.energy_max_uj());
    }

    #[test]
    fn full_charge_time_matches_closed_form() {
        // Charging an empty 1470 uF buffer to 3.3 V at 1000 uW with 0.8
        // efficiency: t = 0.5 * C * V^2 / (eff * P) ~= 10.005 s.
        let mut c = cap_default(0.0);
        let dt = 1e-3;
        let mut t = 0.0;
        while c.current_energy_uj < c.energy_max_uj() {
            c.step_charge(1000.0, dt, 0.8);
            t += dt;
        }
        let expected = 0.5 * 1470e-6 * 3.3 * 3.3 / (800e-6);
        assert!((t - expected).abs() <= dt + 1e-9, "t={t} expected={expected}");
    }

    #[test]
    fn consume_above_floor_is_ok() {
        let mut c = cap_default(0.0);
        c.current_energy_uj = c.energy_floor_uj() + 500.0;
        let (out, spent) = c.consume(100.0);
        assert_eq!(out, ConsumeOutcome::Ok);
        assert_eq!(spent, 100.0);
        assert!((c.available_uj() - 400.0).abs() < 1e-9);
    }

    #[test]
    fn consume_zero_is_identity() {
        let mut c = cap_default(1234.0);
        let before = c;
        let (out, spent) = c.consume(0.0);
        assert_eq!(out, ConsumeOutcome::Ok);
        assert_eq!(spent, 0.0);
        assert_eq!(c, before);
    }

    #[test]
    fn consume_past_floor_dies_and_clamps() {
        let mut c = cap_default(0.0);
        c.current_energy_uj = c.energy_floor_uj() + 50.0;
        let (out, spent) = c.consume(100.0);
        assert_eq!(out, ConsumeOutcome::Died);
        assert!((spent - 50.0).abs() < 1e-12);
        assert_eq!(c.current_energy_uj, c.energy_floor_uj());
    }
}
