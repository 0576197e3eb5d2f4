//! Planar geometry of the seeking problem.
//!
//! The emitter sits at the origin, surrounded by point scatterers in an
//! annulus `r_inner ..= r_outer`. The UAV is a constant-speed kinematic point.

use std::f64::consts::PI;
use std::ops::{Add, Sub};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Normalizes an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    // rem_euclid can return exactly 2pi for tiny negative inputs
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ORIGIN: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Vec2::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Angle of the vector in `(-pi, pi]`.
    pub fn angle(self) -> f64 {
        wrap_angle(self.y.atan2(self.x))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

/// A point reflector around the emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    /// Angular position seen from the emitter, in `(-pi, pi]`.
    pub angle: f64,
    /// Distance from the emitter.
    pub radius: f64,
    /// Complex reflection coefficient, `|gamma| <= 1`.
    pub reflection: Complex64,
}

impl Scatterer {
    pub fn position(&self) -> Vec2 {
        Vec2::from_polar(self.radius, self.angle)
    }
}

/// Reflection magnitudes are drawn uniformly from this range.
pub const REFLECTION_MAGNITUDE: (f64, f64) = (0.3, 0.9);

/// Draws `count` scatterers uniformly over the area of the annulus.
///
/// Angles are uniform on `(-pi, pi]`; reflection coefficients have magnitude
/// uniform on [`REFLECTION_MAGNITUDE`] and uniform phase.
pub fn place_scatterers(seed: u64, count: usize, r_inner: f64, r_outer: f64) -> Result<Vec<Scatterer>> {
    if !(r_inner > 0.0 && r_inner < r_outer && r_outer.is_finite()) {
        return Err(Error::config(format!(
            "scatterer annulus needs 0 < R_in < R, got R_in={r_inner}, R={r_outer}"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Scatterers);
    let (lo, hi) = REFLECTION_MAGNITUDE;
    let scatterers = (0..count)
        .map(|_| {
            let angle = PI - 2.0 * PI * rng.random::<f64>();
            let u: f64 = rng.random();
            let radius = (u * (r_outer * r_outer - r_inner * r_inner) + r_inner * r_inner).sqrt();
            let magnitude = lo + (hi - lo) * rng.random::<f64>();
            let phase = PI - 2.0 * PI * rng.random::<f64>();
            Scatterer {
                angle,
                radius: radius.clamp(r_inner, r_outer),
                reflection: Complex64::from_polar(magnitude, phase),
            }
        })
        .collect();
    Ok(scatterers)
}

/// Everything about the world that stays fixed during an episode.
///
/// Defaults follow the reference parameter table: 5 km initial range,
/// scatterers between 100 m and 200 m, 2 GHz carrier, 10 m/s, -70 dB noise,
/// 50 ms beacon slots carrying 1000 samples at 10 us, and a 4096-point DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Initial emitter-to-UAV range, m.
    pub d_init: f64,
    /// Outer scatterer radius, m.
    pub r_outer: f64,
    /// Inner scatterer radius, m.
    pub r_inner: f64,
    pub num_scatterers: usize,
    /// Carrier frequency, Hz.
    pub f_c: f64,
    /// UAV speed, m/s.
    pub v: f64,
    /// Propagation speed, m/s.
    pub c: f64,
    /// Receiver noise power, dB.
    pub sigma_n2_db: f64,
    /// Average per-sample SNR at `d_init`, dB.
    pub snr_init_db: f64,
    /// Success radius, m.
    pub d_v: f64,
    /// Beacon period, s.
    pub t_slot: f64,
    /// Sample period, s.
    pub t_s: f64,
    /// Samples per beacon capture.
    pub n_samples: usize,
    pub n_fft: usize,
    /// Initial carrier offset is uniform on `+-cfo_init_hz`.
    pub cfo_init_hz: f64,
    /// Random-walk intensity of the carrier offset, Hz/sqrt(s).
    pub cfo_drift_std: f64,
    /// Bearing reading noise std, rad.
    pub sigma_phi: f64,
    /// Frequency noise std used by the abstract backend, rad/s.
    pub sigma_omega: f64,
    /// Optional heading slew limit, rad/s.
    pub max_turn_rate: Option<f64>,
    pub scatterers: Vec<Scatterer>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            d_init: 5000.0,
            r_outer: 200.0,
            r_inner: 100.0,
            num_scatterers: 10,
            f_c: 2e9,
            v: 10.0,
            c: 2.998e8,
            sigma_n2_db: -70.0,
            snr_init_db: 0.0,
            d_v: 200.0,
            t_slot: 0.05,
            t_s: 1e-5,
            n_samples: 1000,
            n_fft: 4096,
            cfo_init_hz: 1000.0,
            cfo_drift_std: 1.0,
            sigma_phi: 1f64.to_radians(),
            sigma_omega: 2.0 * PI,
            max_turn_rate: None,
            scatterers: Vec::new(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_init", self.d_init),
            ("R_in", self.r_inner),
            ("f_c", self.f_c),
            ("v", self.v),
            ("c", self.c),
            ("d_v", self.d_v),
            ("T_slot", self.t_slot),
            ("T_s", self.t_s),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(format!("{name} must be positive and finite, got {value}")));
            }
        }
        if !(self.r_inner < self.r_outer && self.r_outer < self.d_init) {
            return Err(Error::config("need R_in < R < d_init"));
        }
        if self.d_v >= self.d_init {
            return Err(Error::config("need d_v < d_init"));
        }
        if self.n_samples == 0 || self.n_samples > self.n_fft {
            return Err(Error::config(format!(
                "need 0 < N <= N_fft, got N={} N_fft={}",
                self.n_samples, self.n_fft
            )));
        }
        if (self.n_samples as f64) * self.t_s > self.t_slot {
            return Err(Error::config("capture N*T_s does not fit in T_slot"));
        }
        let non_negative = [
            ("cfo_init_hz", self.cfo_init_hz),
            ("cfo_drift_std", self.cfo_drift_std),
            ("sigma_phi", self.sigma_phi),
            ("sigma_omega", self.sigma_omega),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::config(format!("{name} must be non-negative, got {value}")));
            }
        }
        if self.cfo_init_hz >= self.cfo_limit_hz() {
            return Err(Error::config("cfo_init_hz must stay below 1/(4 T_s)"));
        }
        if let Some(rate) = self.max_turn_rate {
            if !(rate > 0.0) {
                return Err(Error::config("max_turn_rate must be positive"));
            }
        }
        for s in &self.scatterers {
            if s.radius < self.r_inner || s.radius > self.r_outer || s.reflection.norm() > 1.0 {
                return Err(Error::config("scatterer outside annulus or with |gamma| > 1"));
            }
        }
        Ok(())
    }

    /// Same constants with a freshly drawn scatterer field.
    pub fn realize(&self, seed: u64) -> Result<Scenario> {
        let scatterers = place_scatterers(seed, self.num_scatterers, self.r_inner, self.r_outer)?;
        Ok(Scenario { scatterers, ..self.clone() })
    }

    pub fn wavelength(&self) -> f64 {
        self.c / self.f_c
    }

    /// Wavenumber `2 pi / lambda`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    /// Maximum Doppler shift `v f_c / c`, Hz.
    pub fn f_d_max(&self) -> f64 {
        self.v * self.f_c / self.c
    }

    /// Linear noise power.
    pub fn noise_power(&self) -> f64 {
        10f64.powf(self.sigma_n2_db / 10.0)
    }

    /// Received signal power targeted at `d_init`.
    pub fn target_signal_power(&self) -> f64 {
        self.noise_power() * 10f64.powf(self.snr_init_db / 10.0)
    }

    /// The carrier offset is clamped below a quarter of the sample rate.
    pub fn cfo_limit_hz(&self) -> f64 {
        1.0 / (4.0 * self.t_s)
    }

    /// Straight-line distance to the success radius.
    pub fn shortest_path(&self) -> f64 {
        self.d_init - self.d_v
    }
}

/// Kinematic state of the UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavState {
    pub position: Vec2,
    /// Heading, rad, in `(-pi, pi]`.
    pub heading: f64,
    pub speed: f64,
    /// Elapsed time, s.
    pub t: f64,
}

impl UavState {
    pub fn range(&self) -> f64 {
        self.position.norm()
    }
}

/// Direction from `p` towards the emitter at the origin.
pub fn bearing_to_source(p: Vec2) -> Result<f64> {
    if p == Vec2::ORIGIN {
        return Err(Error::UndefinedBearing);
    }
    Ok((Vec2::ORIGIN - p).angle())
}

/// Flies a straight segment at constant speed.
pub fn advance(state: &UavState, heading: f64, duration: f64) -> UavState {
    let heading = wrap_angle(heading);
    let step = state.speed * duration;
    UavState {
        position: state.position + Vec2::from_polar(step, heading),
        heading,
        speed: state.speed,
        t: state.t + duration,
    }
}

/// Geometry of the reflected path through one scatterer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGeometry {
    /// Emitter to scatterer, m.
    pub source_to_scatterer: f64,
    /// Scatterer to UAV, m.
    pub scatterer_to_uav: f64,
    /// Direction from the UAV towards the scatterer, rad.
    pub arrival_angle: f64,
}

impl PathGeometry {
    pub fn length(&self) -> f64 {
        self.source_to_scatterer + self.scatterer_to_uav
    }
}

pub fn path_angles(p: Vec2, scatterer: &Scatterer) -> Result<PathGeometry> {
    let s = scatterer.position();
    let to_scatterer = s - p;
    if to_scatterer == Vec2::ORIGIN {
        return Err(Error::UndefinedBearing);
    }
    Ok(PathGeometry {
        source_to_scatterer: s.norm(),
        scatterer_to_uav: to_scatterer.norm(),
        arrival_angle: to_scatterer.angle(),
    })
}
