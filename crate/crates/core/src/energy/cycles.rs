//! Power-cycle segmentation: charge/wake/death integration over a trace.
//!
//! A power cycle runs from the instant the buffer crosses the turn-on
//! threshold to the brown-out that follows. The integrator here is shared
//! between [`segment_cycles`] (no workload, idle drain only) and the runtime
//! engine, which interleaves workload energy draws.

use serde::{Deserialize, Serialize};

use super::capacitor::{CapacitorState, ConsumeOutcome};
use super::trace::{EnergyTrace, TraceSampler};

/// One wake-to-brown-out interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCycle {
    pub index: u64,
    pub wake_time_s: f64,
    /// `None` when the trace ends while the device is still powered.
    pub death_time_s: Option<f64>,
    /// Energy available at wake; equals the capacitor's usable budget.
    pub budget_uj: f64,
}

/// Fixed integration parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperParams {
    /// Integration step, seconds. Trace power is zero-order held.
    pub dt_s: f64,
    /// Harvester-to-buffer converter efficiency, (0, 1].
    pub efficiency: f64,
    /// Constant sleep/idle draw while the device is on, microwatts.
    pub idle_power_uw: f64,
}

impl Default for StepperParams {
    fn default() -> Self {
        Self {
            dt_s: 1e-3,
            efficiency: 0.8,
            idle_power_uw: 1.0,
        }
    }
}

/// Wake notification from the stepper.
#[derive(Debug, Clone, Copy)]
pub struct WakeInfo {
    pub cycle: u64,
    pub t_s: f64,
    pub budget_uj: f64,
}

/// Trace-driven charge/discharge integrator with wake/death detection.
///
/// Call [`phase_wake`](Self::phase_wake) then
/// [`phase_advance`](Self::phase_advance) once per step; workload draws go
/// directly through [`cap`](Self::cap) between the two phases, with
/// [`force_off`](Self::force_off) signalled on a workload-induced brown-out.
pub struct EnergyStepper<'a> {
    sampler: TraceSampler<'a>,
    pub cap: CapacitorState,
    params: StepperParams,
    t: f64,
    end: f64,
    on: bool,
    cycles_seen: u64,
    /// Total `efficiency * power * dt` offered by the harvester.
    pub harvested_eff_uj: f64,
    /// Energy offered but not stored: buffer saturation plus the wake clamp.
    pub discarded_uj: f64,
    /// Idle drain actually spent.
    pub idle_spent_uj: f64,
}

impl<'a> EnergyStepper<'a> {
    pub fn new(trace: &'a EnergyTrace, cap: CapacitorState, params: StepperParams) -> Self {
        assert!(params.dt_s > 0.0, "dt must be positive");
        assert!(
            params.efficiency > 0.0 && params.efficiency <= 1.0,
            "efficiency must be in (0, 1]"
        );
        Self {
            sampler: trace.sampler(),
            cap,
            params,
            t: trace.start_time(),
            end: trace.end_time(),
            on: false,
            cycles_seen: 0,
            harvested_eff_uj: 0.0,
            discarded_uj: 0.0,
            idle_spent_uj: 0.0,
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn finished(&self) -> bool {
        self.t >= self.end
    }

    pub fn is_on(&self) -> bool {
        self.on
    }

    /// Cycles started so far.
    pub fn cycles_seen(&self) -> u64 {
        self.cycles_seen
    }

    /// Detects a turn-on threshold crossing at the current instant.
    ///
    /// On wake the stored energy is clamped to the threshold level (the
    /// sub-step overshoot is discarded) so the cycle budget equals the
    /// usable budget exactly.
    pub fn phase_wake(&mut self) -> Option<WakeInfo> {
        if self.on || self.cap.current_energy_uj < self.cap.energy_on_uj() {
            return None;
        }
        let overshoot = self.cap.current_energy_uj - self.cap.energy_on_uj();
        self.discarded_uj += overshoot;
        self.cap.current_energy_uj = self.cap.energy_on_uj();
        self.on = true;
        let cycle = self.cycles_seen;
        self.cycles_seen += 1;
        Some(WakeInfo {
            cycle,
            t_s: self.t,
            budget_uj: self.cap.usable_budget_uj(),
        })
    }

    /// Charges over `[t, t + dt)`, applies the idle drain when on, and
    /// advances time. Returns the death instant if the idle drain crossed
    /// the brown-out threshold.
    pub fn phase_advance(&mut self) -> Option<f64> {
        let power = self.sampler.power_at(self.t);
        let offered = self.params.efficiency * power * self.params.dt_s;
        let stored = self
            .cap
            .step_charge(power, self.params.dt_s, self.params.efficiency);
        self.harvested_eff_uj += offered;
        self.discarded_uj += offered - stored;
        self.t += self.params.dt_s;
        if self.on {
            let idle_cost = self.params.idle_power_uw * self.params.dt_s;
            let (outcome, spent) = self.cap.consume(idle_cost);
            self.idle_spent_uj += spent;
            if outcome == ConsumeOutcome::Died {
                self.on = false;
                return Some(self.t);
            }
        }
        None
    }

    /// Marks the device off after a workload draw browned it out.
    pub fn force_off(&mut self) {
        self.on = false;
    }
}

/// Segments a trace into power cycles with no workload running: the device
/// wakes at the turn-on threshold, idles at `params.idle_power_uw`, and
/// dies at the brown-out threshold. Returns an empty list when the trace
/// never charges the buffer to the turn-on level.
pub fn segment_cycles(
    trace: &EnergyTrace,
    cap: CapacitorState,
    params: StepperParams,
) -> Vec<PowerCycle> {
    let mut stepper = EnergyStepper::new(trace, cap, params);
    let mut cycles: Vec<PowerCycle> = Vec::new();
    while !stepper.finished() {
        if let Some(w) = stepper.phase_wake() {
            cycles.push(PowerCycle {
                index: w.cycle,
                wake_time_s: w.t_s,
                death_time_s: None,
                budget_uj: w.budget_uj,
            });
        }
        if let Some(death_t) = stepper.phase_advance() {
            if let Some(open) = cycles.last_mut() {
                open.death_time_s = Some(death_t);
            }
        }
    }
    cycles
}
