//! Source-seeking control law.
//!
//! Stage 1 flies one full circle and takes the bearing of maximum (gated,
//! smoothed) frequency as the initial direction. Stage 2 alternates legs at
//! `theta + delta` and `theta - delta`, `M` slots each, and moves `theta` by
//! the difference of the two leg means. Differencing cancels the carrier
//! offset, which is common to both legs.
//!
//! Convention: bearings are absolute headings, so the ideal Stage-1 maximum
//! is the heading pointing straight at the emitter.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::estimator::Measurement;
use crate::world::{wrap_angle, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct SeekerConfig {
    /// Bearing perturbation, rad.
    pub delta: f64,
    /// Slots per half-leg (`M`).
    pub leg_slots: usize,
    /// Moving-average length used during Stage 1, slots.
    pub smoothing_len: usize,
    /// Stage-1 circle radius, m.
    pub circle_radius: f64,
    /// Known maximum Doppler `v f_c / c`, Hz.
    pub f_d_max: f64,
    /// Outlier gate on consecutive frequency estimates, rad/s.
    pub outlier_threshold: f64,
    /// After this many consecutive rejections the gate re-seeds on the newest
    /// estimate. Zero disables re-seeding.
    pub relock_after: usize,
}

impl SeekerConfig {
    /// Defaults: 10 degree perturbation, `M = 20`, 15-slot smoother, 50 m circle,
    /// gate at `4 pi v f_c / c`.
    pub fn new(scenario: &Scenario) -> Self {
        let mut cfg = SeekerConfig {
            delta: 10f64.to_radians(),
            leg_slots: 20,
            smoothing_len: 15,
            circle_radius: 50.0,
            f_d_max: 0.0,
            outlier_threshold: 0.0,
            relock_after: 20,
        };
        cfg.derive_from(scenario);
        cfg
    }

    /// Refreshes the quantities fixed by the scenario's known constants.
    pub fn derive_from(&mut self, scenario: &Scenario) {
        self.f_d_max = scenario.f_d_max();
        self.outlier_threshold = 4.0 * PI * self.f_d_max;
    }

    /// Gain `alpha = delta sin(delta)` of the error recursion.
    pub fn alpha(&self) -> f64 {
        self.delta * self.delta.sin()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < PI / 2.0) {
            return Err(Error::config(format!("delta must lie in (0, 90) degrees, got {} deg", self.delta.to_degrees())));
        }
        if self.alpha() >= 1.0 {
            return Err(Error::config("delta * sin(delta) must be below 1 for convergence"));
        }
        if self.leg_slots == 0 || self.smoothing_len == 0 {
            return Err(Error::config("M and smoothing_len must be at least 1"));
        }
        if !(self.circle_radius > 0.0) {
            return Err(Error::config("R_c must be positive"));
        }
        if !(self.f_d_max > 0.0 && self.outlier_threshold > 0.0) {
            return Err(Error::config("f_d_max and outlier threshold must be positive"));
        }
        Ok(())
    }
}

/// Keeps `omega_new` unless it jumped at least `threshold` from `omega_prev`.
pub fn reject_outlier(omega_new: f64, omega_prev: f64, threshold: f64) -> f64 {
    if (omega_new - omega_prev).abs() < threshold {
        omega_new
    } else {
        omega_prev
    }
}

/// Mean of the last `min(len, history.len())` values.
pub fn smooth(history: &[f64], len: usize) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::InsufficientData("smoothing needs at least one value"));
    }
    let take = len.clamp(1, history.len());
    let tail = &history[history.len() - take..];
    Ok(tail.iter().sum::<f64>() / take as f64)
}

/// Bearing reading at the first maximum of the smoothed frequency.
pub fn stage1_direction(measurements: &[(f64, f64)]) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &(omega, phi) in measurements {
        match best {
            Some((b, _)) if omega <= b => {}
            _ => best = Some((omega, phi)),
        }
    }
    best.map(|(_, phi)| wrap_angle(phi))
        .ok_or(Error::InsufficientData("stage 1 needs at least one measurement"))
}

/// One perturbation-feedback step from the two leg measurement sets.
pub fn stage2_update(theta: f64, plus_leg: &[f64], minus_leg: &[f64], delta: f64, f_d_max: f64) -> Result<f64> {
    if plus_leg.len() != minus_leg.len() || plus_leg.is_empty() {
        return Err(Error::Protocol(format!(
            "leg lengths must match and be non-zero, got {} and {}",
            plus_leg.len(),
            minus_leg.len()
        )));
    }
    // Pairwise differences first so a common offset cancels before summation.
    let diff: f64 = plus_leg.iter().zip(minus_leg).map(|(p, m)| p - m).sum();
    let mean_diff = diff / plus_leg.len() as f64;
    Ok(wrap_angle(theta + mean_diff * delta / (2.0 * PI * f_d_max)))
}

/// Noiseless far-field recursion of the direction error.
pub fn error_step(theta_err: f64, delta: f64) -> f64 {
    wrap_angle(theta_err - 2.0 * theta_err.sin() * delta.sin() * delta)
}

/// Change of the Lyapunov function `err^2` over one [`error_step`].
pub fn lyapunov_decrement(theta_err: f64, delta: f64) -> f64 {
    let alpha = delta * delta.sin();
    let s = theta_err.sin();
    -4.0 * alpha * s * (theta_err - alpha * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phase {
    /// Stage 1: slot `slot` of `total`, turning by `step` per slot.
    Circle { slot: usize, total: usize, start_heading: f64, step: f64 },
    PlusLeg,
    MinusLeg,
}

impl Phase {
    pub fn is_circle(&self) -> bool {
        matches!(self, Phase::Circle { .. })
    }
}

/// What the gate did with one measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Gated frequency.
    pub checked: f64,
    pub accepted: bool,
    /// `theta` moved (end of a Stage-2 iteration or of Stage 1).
    pub updated: bool,
}

#[derive(Debug, Clone)]
pub struct SeekerState {
    /// Current direction estimate, rad.
    pub theta: f64,
    pub phase: Phase,
    /// Completed Stage-2 iterations.
    pub k: u64,
    plus: Vec<f64>,
    minus: Vec<f64>,
    last_accepted: Option<f64>,
    rejected_in_row: usize,
    smoother: VecDeque<f64>,
    circle: Vec<(f64, f64)>,
    best_circle: Option<(f64, f64)>,
}

impl SeekerState {
    /// Starts with a one-turn circle of radius `R_c` flown at `speed`.
    ///
    /// The circle is a regular polygon of `round(2 pi R_c / (v T_slot))` sides
    /// turning counter-clockwise from `start_heading`.
    pub fn with_circle(start_heading: f64, speed: f64, t_slot: f64, cfg: &SeekerConfig) -> Self {
        let total = ((2.0 * PI * cfg.circle_radius / (speed * t_slot)).round() as usize).max(3);
        let phase = Phase::Circle { slot: 0, total, start_heading, step: 2.0 * PI / total as f64 };
        SeekerState::new(wrap_angle(start_heading), phase)
    }

    /// Skips Stage 1 and starts perturbation feedback around `theta0`.
    pub fn direct(theta0: f64) -> Self {
        SeekerState::new(wrap_angle(theta0), Phase::PlusLeg)
    }

    fn new(theta: f64, phase: Phase) -> Self {
        SeekerState {
            theta,
            phase,
            k: 0,
            plus: Vec::new(),
            minus: Vec::new(),
            last_accepted: None,
            rejected_in_row: 0,
            smoother: VecDeque::new(),
            circle: Vec::new(),
            best_circle: None,
        }
    }

    /// Heading to fly during the coming slot.
    pub fn next_heading(&self, cfg: &SeekerConfig) -> f64 {
        match self.phase {
            Phase::Circle { slot, start_heading, step, .. } => wrap_angle(start_heading + slot as f64 * step),
            Phase::PlusLeg => wrap_angle(self.theta + cfg.delta),
            Phase::MinusLeg => wrap_angle(self.theta - cfg.delta),
        }
    }

    pub fn leg_fill(&self) -> (usize, usize) {
        (self.plus.len(), self.minus.len())
    }

    /// Stage-1 record of (smoothed frequency, bearing reading) pairs.
    pub fn circle_log(&self) -> &[(f64, f64)] {
        &self.circle
    }

    fn gate(&mut self, omega: f64, cfg: &SeekerConfig) -> (f64, bool) {
        let Some(prev) = self.last_accepted else {
            self.last_accepted = Some(omega);
            return (omega, true);
        };
        let checked = reject_outlier(omega, prev, cfg.outlier_threshold);
        let accepted = (omega - prev).abs() < cfg.outlier_threshold;
        if accepted {
            self.rejected_in_row = 0;
            self.last_accepted = Some(checked);
            return (checked, true);
        }
        self.rejected_in_row += 1;
        if cfg.relock_after > 0 && self.rejected_in_row >= cfg.relock_after {
            self.rejected_in_row = 0;
            self.last_accepted = Some(omega);
            return (omega, true);
        }
        (checked, false)
    }

    /// Consumes the measurement taken at the end of the slot just flown.
    pub fn observe(&mut self, m: &Measurement, cfg: &SeekerConfig) -> Result<Observation> {
        let (checked, accepted) = self.gate(m.omega_tilde, cfg);
        let mut updated = false;
        match self.phase {
            Phase::Circle { slot, total, start_heading, step } => {
                self.smoother.push_back(checked);
                if self.smoother.len() > cfg.smoothing_len {
                    self.smoother.pop_front();
                }
                let smoothed = smooth(self.smoother.make_contiguous(), cfg.smoothing_len)?;
                self.circle.push((smoothed, m.phi_tilde));
                if self.best_circle.is_none_or(|(b, _)| smoothed > b) {
                    self.best_circle = Some((smoothed, m.phi_tilde));
                    self.theta = wrap_angle(m.phi_tilde);
                }
                if slot + 1 >= total {
                    self.theta = stage1_direction(&self.circle)?;
                    self.phase = Phase::PlusLeg;
                    updated = true;
                } else {
                    self.phase = Phase::Circle { slot: slot + 1, total, start_heading, step };
                }
            }
            Phase::PlusLeg => {
                self.plus.push(checked);
                if self.plus.len() == cfg.leg_slots {
                    self.phase = Phase::MinusLeg;
                }
            }
            Phase::MinusLeg => {
                self.minus.push(checked);
                if self.minus.len() == cfg.leg_slots {
                    self.theta = stage2_update(self.theta, &self.plus, &self.minus, cfg.delta, cfg.f_d_max)?;
                    self.plus.clear();
                    self.minus.clear();
                    self.k += 1;
                    self.phase = Phase::PlusLeg;
                    updated = true;
                }
            }
        }
        Ok(Observation { checked, accepted, updated })
    }
}
