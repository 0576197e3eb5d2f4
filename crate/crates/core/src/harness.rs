//! Closed-loop episodes and Monte Carlo batches.
//!
//! Each slot the UAV flies the seeker's heading for `T_slot`, then takes one
//! measurement: the full backend synthesizes a beacon and estimates its
//! frequency, the abstract backend perturbs the ground truth with Gaussian
//! noise. The measurement is gated and fed back to the seeker.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{build_paths, calibrate_gain, rss_at, synthesize_beacon, CfoProcess};
use crate::error::{Error, Result};
use crate::estimator::{measure_abstract, measure_bearing, FrequencyEstimator, Measurement};
use crate::rng::{episode_seed, stream_rng, stream_seed, Stream};
use crate::seeker::{error_step, SeekerConfig, SeekerState};
use crate::world::{advance, bearing_to_source, wrap_angle, Scenario, UavState, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Beacon synthesis plus DFT estimation.
    Full,
    /// Gaussian noise on the true direct-path frequency.
    Abstract,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Backend::Full),
            "abstract" => Ok(Backend::Abstract),
            other => Err(Error::Usage(format!("unknown backend '{other}', expected full or abstract"))),
        }
    }
}

/// Per-episode choices that are not part of the world or the control law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSetup {
    pub backend: Backend,
    pub stage1: bool,
    /// Initial direction error when Stage 1 is skipped; random if `None`.
    pub initial_error: Option<f64>,
    /// Angle of the UAV as seen from the emitter at t = 0; random if `None`.
    pub start_angle: Option<f64>,
    /// Flight-time limit, s; defaults to four times the straight-line time.
    pub max_t: Option<f64>,
    /// Keep per-slot records.
    pub record: bool,
}

impl EpisodeSetup {
    pub fn new(backend: Backend, stage1: bool) -> Self {
        EpisodeSetup { backend, stage1, initial_error: None, start_angle: None, max_t: None, record: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub d: f64,
    pub phi: f64,
    pub theta_k: f64,
    pub theta_star: f64,
    pub omega_tilde: f64,
    pub accepted: bool,
    pub rss: f64,
    /// Direct-path frequency including carrier offset, rad/s.
    pub omega_true: f64,
    pub stage1: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum Termination {
    Success { distance_traveled: f64 },
    Timeout { max_t: f64, distance_traveled: f64 },
}

impl Termination {
    pub fn distance_traveled(&self) -> f64 {
        match *self {
            Termination::Success { distance_traveled } | Termination::Timeout { distance_traveled, .. } => {
                distance_traveled
            }
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, Termination::Success { .. })
    }
}

/// Compact result of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeOutcome {
    pub seed: u64,
    pub termination: Termination,
    pub shortest_path: f64,
}

impl EpisodeOutcome {
    pub fn ratio(&self) -> f64 {
        self.termination.distance_traveled() / self.shortest_path
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub records: Vec<SlotRecord>,
    pub termination: Termination,
    pub seed: u64,
    pub backend: Backend,
    pub shortest_path: f64,
    /// Completed Stage-2 iterations.
    pub iterations: u64,
}

pub const TRAJECTORY_HEADER: &str = "t,x,y,d,phi,theta_k,theta_star,omega_tilde,accepted,rss";

impl EpisodeLog {
    pub fn outcome(&self) -> EpisodeOutcome {
        EpisodeOutcome { seed: self.seed, termination: self.termination, shortest_path: self.shortest_path }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRAJECTORY_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{:.3},{:.6},{:.6},{:.6},{:.9},{:.9},{:.9},{:.6},{},{:e}",
                r.t,
                r.x,
                r.y,
                r.d,
                r.phi,
                r.theta_k,
                r.theta_star,
                r.omega_tilde,
                u8::from(r.accepted),
                r.rss
            )?;
        }
        Ok(())
    }

    /// Direction error `theta_k - theta*` at every slot.
    pub fn bearing_errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| wrap_angle(r.theta_k - r.theta_star))
    }
}

/// Runs one closed-loop episode on a realized scenario.
pub fn run_episode(scenario: &Scenario, cfg: &SeekerConfig, setup: &EpisodeSetup, seed: u64) -> Result<EpisodeLog> {
    scenario.validate()?;
    cfg.validate()?;

    let mut init_rng = stream_rng(seed, Stream::Initial);
    let mut cfo_rng = stream_rng(seed, Stream::Cfo);
    let mut noise_rng = stream_rng(seed, Stream::SampleNoise);
    let mut bearing_rng = stream_rng(seed, Stream::Bearing);

    // Always draw all three so paired runs with and without Stage 1 share a start.
    let random_start = PI - 2.0 * PI * init_rng.random::<f64>();
    let random_circle = PI - 2.0 * PI * init_rng.random::<f64>();
    let random_theta = PI - 2.0 * PI * init_rng.random::<f64>();

    let start_angle = setup.start_angle.unwrap_or(random_start);
    let position = Vec2::from_polar(scenario.d_init, start_angle);
    let theta_star0 = bearing_to_source(position)?;

    let mut seeker = if setup.stage1 {
        SeekerState::with_circle(random_circle, scenario.v, scenario.t_slot, cfg)
    } else {
        let theta0 = match setup.initial_error {
            Some(err) => theta_star0 + err,
            None => random_theta,
        };
        SeekerState::direct(theta0)
    };

    let mut state = UavState { position, heading: seeker.next_heading(cfg), speed: scenario.v, t: 0.0 };
    let gain = calibrate_gain(scenario, &mut stream_rng(seed, Stream::Calibration))?;
    let mut cfo = CfoProcess::from_scenario(scenario, &mut cfo_rng);
    let mut estimator = FrequencyEstimator::new(scenario.n_fft, scenario.t_s);
    let noise_power = scenario.noise_power();
    let omega_max = 2.0 * PI * scenario.f_d_max();
    let max_t = setup.max_t.unwrap_or(4.0 * scenario.shortest_path() / scenario.v);
    let step = scenario.v * scenario.t_slot;

    let mut records = Vec::new();
    let mut slot: u64 = 0;
    let termination = loop {
        let commanded = seeker.next_heading(cfg);
        let heading = match scenario.max_turn_rate {
            Some(rate) => {
                let limit = rate * scenario.t_slot;
                state.heading + wrap_angle(commanded - state.heading).clamp(-limit, limit)
            }
            None => commanded,
        };
        let in_stage1 = seeker.phase.is_circle();
        state = advance(&state, heading, scenario.t_slot);
        cfo = cfo.evolve(scenario.t_slot, &mut cfo_rng);
        let theta_star = bearing_to_source(state.position)?;

        let (measurement, omega_true, rss) = match setup.backend {
            Backend::Full => {
                let paths = build_paths(scenario, &state, gain)?;
                let rss = paths.paths.iter().map(|p| Complex64::from_polar(p.amplitude, p.phase)).sum::<Complex64>().norm_sqr();
                let capture = synthesize_beacon(&paths, &cfo, scenario, noise_power, &mut noise_rng, slot);
                let omega_tilde = estimator.estimate(&capture.samples)?;
                let phi_tilde = measure_bearing(state.heading, scenario.sigma_phi, &mut bearing_rng);
                (Measurement { omega_tilde, phi_tilde, slot_index: slot }, capture.truth.los_omega(), rss)
            }
            Backend::Abstract => {
                let omega_true = omega_max * (theta_star - state.heading).cos() + 2.0 * PI * cfo.offset_hz;
                let mut m = measure_abstract(
                    omega_true,
                    state.heading,
                    scenario.sigma_omega,
                    scenario.sigma_phi,
                    slot,
                    &mut noise_rng,
                );
                m.phi_tilde = wrap_angle(m.phi_tilde);
                let rss = if setup.record { rss_at(scenario, state.position, gain)? } else { 0.0 };
                (m, omega_true, rss)
            }
        };

        let obs = seeker.observe(&measurement, cfg)?;
        let d = state.range();
        if setup.record {
            records.push(SlotRecord {
                t: state.t,
                x: state.position.x,
                y: state.position.y,
                d,
                phi: state.heading,
                theta_k: seeker.theta,
                theta_star,
                omega_tilde: measurement.omega_tilde,
                accepted: obs.accepted,
                rss,
                omega_true,
                stage1: in_stage1,
            });
        }
        slot += 1;
        let distance_traveled = slot as f64 * step;
        if d <= scenario.d_v {
            break Termination::Success { distance_traveled };
        }
        if state.t > max_t {
            break Termination::Timeout { max_t, distance_traveled };
        }
    };

    Ok(EpisodeLog {
        records,
        termination,
        seed,
        backend: setup.backend,
        shortest_path: scenario.shortest_path(),
        iterations: seeker.k,
    })
}

/// Runs episode `index` of a batch, with its own scatterer field.
pub fn run_batch_episode(
    scenario: &Scenario,
    cfg: &SeekerConfig,
    setup: &EpisodeSetup,
    master_seed: u64,
    index: u64,
) -> Result<EpisodeLog> {
    let seed = episode_seed(master_seed, index);
    let world = scenario.realize(stream_seed(seed, Stream::Scatterers))?;
    run_episode(&world, cfg, setup, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_low: f64,
    pub bin_high: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_distance: f64,
    pub median_distance: f64,
    pub std_distance: f64,
    pub shortest_path: f64,
    pub mean_ratio: f64,
    pub bin_width: f64,
    pub histogram: Vec<HistogramBin>,
}

pub const DEFAULT_BIN_WIDTH: f64 = 250.0;

impl McSummary {
    pub fn write_histogram_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "bin_low,bin_high,count")?;
        for b in &self.histogram {
            writeln!(out, "{},{},{}", b.bin_low, b.bin_high, b.count)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Aggregates outcomes in the order given. Distance statistics and the
/// histogram cover every run; timeouts count at the distance flown.
pub fn summarize(outcomes: &[EpisodeOutcome], bin_width: f64) -> Result<McSummary> {
    if outcomes.is_empty() {
        return Err(Error::InsufficientData("summary needs at least one episode"));
    }
    if !(bin_width > 0.0) {
        return Err(Error::config("histogram bin width must be positive"));
    }
    let n = outcomes.len();
    let distances: Vec<f64> = outcomes.iter().map(|o| o.termination.distance_traveled()).collect();
    let successes = outcomes.iter().filter(|o| o.termination.is_success()).count();
    let mean = distances.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (distances.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = distances.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    let mean_ratio = outcomes.iter().map(EpisodeOutcome::ratio).sum::<f64>() / n as f64;

    let first = (sorted[0] / bin_width).floor() as i64;
    let last = (sorted[n - 1] / bin_width).floor() as i64;
    let mut histogram: Vec<HistogramBin> = (first..=last)
        .map(|b| HistogramBin { bin_low: b as f64 * bin_width, bin_high: (b + 1) as f64 * bin_width, count: 0 })
        .collect();
    for d in &distances {
        let idx = ((d / bin_width).floor() as i64 - first) as usize;
        histogram[idx].count += 1;
    }

    Ok(McSummary {
        runs: n,
        successes,
        success_rate: successes as f64 / n as f64,
        mean_distance: mean,
        median_distance: median,
        std_distance: std,
        shortest_path: outcomes[0].shortest_path,
        mean_ratio,
        bin_width,
        histogram,
    })
}

/// Outcomes of `n_runs` independent episodes in index order.
pub fn monte_carlo_outcomes(
    scenario: &Scenario,
    cfg: &SeekerConfig,
    backend: Backend,
    n_runs: usize,
    master_seed: u64,
    with_stage1: bool,
) -> Result<Vec<EpisodeOutcome>> {
    if n_runs == 0 {
        return Err(Error::InsufficientData("at least one run is required"));
    }
    let setup = EpisodeSetup { record: false, ..EpisodeSetup::new(backend, with_stage1) };
    (0..n_runs as u64)
        .into_par_iter()
        .map(|i| run_batch_episode(scenario, cfg, &setup, master_seed, i).map(|log| log.outcome()))
        .collect()
}

pub fn monte_carlo(
    scenario: &Scenario,
    cfg: &SeekerConfig,
    backend: Backend,
    n_runs: usize,
    master_seed: u64,
    with_stage1: bool,
) -> Result<McSummary> {
    let outcomes = monte_carlo_outcomes(scenario, cfg, backend, n_runs, master_seed, with_stage1)?;
    summarize(&outcomes, DEFAULT_BIN_WIDTH)
}

/// Iterates the far-field error recursion; the result has `k_max + 1` entries.
pub fn convergence_trace(theta_err_0: f64, delta: f64, k_max: usize) -> Vec<f64> {
    std::iter::successors(Some(wrap_angle(theta_err_0)), |&e| Some(error_step(e, delta)))
        .take(k_max + 1)
        .collect()
}
