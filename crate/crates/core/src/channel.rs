//! Complex baseband beacon synthesis.
//!
//! The received pilot is a sum of a line-of-sight path and one reflected path
//! per scatterer. Path amplitudes and phases come from the geometric field
//! model (`1/d` for the direct path, `gamma_i / (d_i + r_i)` for reflections);
//! each path rotates at its own Doppler frequency plus the common carrier
//! offset. The Rician K-factor and total received power are therefore outputs
//! of the geometry, not inputs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::world::{bearing_to_source, path_angles, Scenario, UavState, Vec2};

/// Number of positions on the initial-range circle used for gain calibration.
pub const CALIBRATION_POSITIONS: usize = 4096;

/// Carrier frequency offset following a clamped random walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfoProcess {
    /// Current offset, Hz.
    pub offset_hz: f64,
    /// Random-walk intensity, Hz/sqrt(s).
    pub drift_std: f64,
    /// Symmetric clamp on the offset, Hz.
    pub limit_hz: f64,
}

impl CfoProcess {
    /// Offset drawn uniformly on `+-init_range_hz`.
    pub fn new<R: Rng>(init_range_hz: f64, drift_std: f64, limit_hz: f64, rng: &mut R) -> Self {
        let offset_hz = init_range_hz * (2.0 * rng.random::<f64>() - 1.0);
        CfoProcess::fixed(offset_hz, drift_std, limit_hz)
    }

    pub fn fixed(offset_hz: f64, drift_std: f64, limit_hz: f64) -> Self {
        CfoProcess { offset_hz: offset_hz.clamp(-limit_hz, limit_hz), drift_std, limit_hz }
    }

    pub fn from_scenario<R: Rng>(scenario: &Scenario, rng: &mut R) -> Self {
        CfoProcess::new(scenario.cfo_init_hz, scenario.cfo_drift_std, scenario.cfo_limit_hz(), rng)
    }

    /// Advances the walk by `dt` seconds.
    pub fn evolve<R: Rng>(&self, dt: f64, rng: &mut R) -> Self {
        if self.drift_std == 0.0 || dt == 0.0 {
            return *self;
        }
        let step: f64 = rng.sample(StandardNormal);
        let offset = self.offset_hz + self.drift_std * dt.sqrt() * step;
        CfoProcess { offset_hz: offset.clamp(-self.limit_hz, self.limit_hz), ..*self }
    }
}

/// One propagation path as seen at the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub amplitude: f64,
    /// Phase at the start of the capture, rad.
    pub phase: f64,
    /// Doppler shift, rad/s.
    pub doppler: f64,
}

/// Direct path first, then one path per scatterer.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
    pub range: f64,
    pub true_bearing: f64,
}

impl PathSet {
    pub fn line_of_sight(&self) -> &Path {
        &self.paths[0]
    }

    /// Direct-path power over total reflected power.
    pub fn k_factor(&self) -> f64 {
        let scattered: f64 = self.paths[1..].iter().map(|p| p.amplitude * p.amplitude).sum();
        let los = self.paths[0].amplitude.powi(2);
        if scattered == 0.0 {
            f64::INFINITY
        } else {
            los / scattered
        }
    }

    /// Sum of per-path powers.
    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.amplitude * p.amplitude).sum()
    }
}

pub fn build_paths(scenario: &Scenario, state: &UavState, gain: f64) -> Result<PathSet> {
    let p = state.position;
    let true_bearing = bearing_to_source(p)?;
    let range = p.norm();
    let beta = scenario.wavenumber();
    let omega_max = 2.0 * PI * scenario.f_d_max();

    let mut paths = Vec::with_capacity(1 + scenario.scatterers.len());
    paths.push(Path {
        amplitude: gain / range,
        phase: -beta * range,
        doppler: omega_max * (true_bearing - state.heading).cos(),
    });
    for s in &scenario.scatterers {
        let g = path_angles(p, s)?;
        let length = g.length();
        paths.push(Path {
            amplitude: gain * s.reflection.norm() / length,
            phase: -beta * length + s.reflection.arg(),
            doppler: omega_max * (g.arrival_angle - state.heading).cos(),
        });
    }
    Ok(PathSet { paths, range, true_bearing })
}

/// Ungained electric field at `p`.
pub fn field_at(scenario: &Scenario, p: Vec2) -> Result<Complex64> {
    let beta = scenario.wavenumber();
    let d = p.norm();
    if d == 0.0 {
        return Err(crate::Error::UndefinedBearing);
    }
    let mut field = Complex64::from_polar(1.0 / d, -beta * d);
    for s in &scenario.scatterers {
        let length = path_angles(p, s)?.length();
        field += s.reflection * Complex64::from_polar(1.0 / length, -beta * length);
    }
    Ok(field)
}

/// Received signal strength `|g * EF|^2`.
pub fn rss_at(scenario: &Scenario, p: Vec2, gain: f64) -> Result<f64> {
    Ok((field_at(scenario, p)? * gain).norm_sqr())
}

/// Gain that puts the average received power at `d_init` on the SNR target.
///
/// Averages `|EF|^2` over [`CALIBRATION_POSITIONS`] evenly spaced positions on
/// the initial-range circle, starting from a random angle.
pub fn calibrate_gain<R: Rng>(scenario: &Scenario, rng: &mut R) -> Result<f64> {
    let start = 2.0 * PI * rng.random::<f64>();
    let step = 2.0 * PI / CALIBRATION_POSITIONS as f64;
    let mut acc = 0.0;
    for j in 0..CALIBRATION_POSITIONS {
        let p = Vec2::from_polar(scenario.d_init, start + j as f64 * step);
        acc += field_at(scenario, p)?.norm_sqr();
    }
    let mean = acc / CALIBRATION_POSITIONS as f64;
    Ok((scenario.target_signal_power() / mean).sqrt())
}

/// Ground truth attached to a capture.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureTruth {
    pub range: f64,
    pub true_bearing: f64,
    pub cfo_hz: f64,
    /// Per-path Doppler, rad/s, direct path first.
    pub dopplers: Vec<f64>,
}

impl CaptureTruth {
    /// Direct-path frequency including the carrier offset, rad/s.
    pub fn los_omega(&self) -> f64 {
        self.dopplers[0] + 2.0 * PI * self.cfo_hz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeaconCapture {
    pub samples: Vec<Complex64>,
    pub truth: CaptureTruth,
    pub slot_index: u64,
}

/// Noise-free sum of rotating path phasors.
pub fn tone_sum(paths: &PathSet, cfo_hz: f64, n: usize, t_s: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let offset = 2.0 * PI * cfo_hz;
    for path in &paths.paths {
        let rotation = Complex64::cis((path.doppler + offset) * t_s);
        let mut z = Complex64::from_polar(path.amplitude, path.phase);
        for s in out.iter_mut() {
            *s += z;
            z *= rotation;
        }
    }
    out
}

/// One beacon capture: path phasors plus circular Gaussian noise of total
/// variance `noise_power` per sample. Path frequencies are frozen for the
/// duration of the capture.
pub fn synthesize_beacon<R: Rng>(
    paths: &PathSet,
    cfo: &CfoProcess,
    scenario: &Scenario,
    noise_power: f64,
    rng: &mut R,
    slot_index: u64,
) -> BeaconCapture {
    let mut samples = tone_sum(paths, cfo.offset_hz, scenario.n_samples, scenario.t_s);
    if noise_power > 0.0 {
        let scale = (noise_power / 2.0).sqrt();
        for s in samples.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *s += Complex64::new(scale * re, scale * im);
        }
    }
    BeaconCapture {
        samples,
        truth: CaptureTruth {
            range: paths.range,
            true_bearing: paths.true_bearing,
            cfo_hz: cfo.offset_hz,
            dopplers: paths.paths.iter().map(|p| p.doppler).collect(),
        },
        slot_index,
    }
}

/// Writes a capture as `index,real,imag` rows.
pub fn write_capture_csv<W: std::io::Write>(capture: &BeaconCapture, mut out: W) -> std::io::Result<()> {
    writeln!(out, "index,real,imag")?;
    for (i, s) in capture.samples.iter().enumerate() {
        writeln!(out, "{i},{:e},{:e}", s.re, s.im)?;
    }
    Ok(())
}
