//! Single-tone frequency estimation: zero-padded DFT, grid peak, and a
//! three-point parabolic refinement on spectral magnitudes.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::channel::BeaconCapture;
use crate::error::{Error, Result};
use crate::world::wrap_angle;

/// One slot's frequency estimate and bearing reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Estimated received frequency, rad/s.
    pub omega_tilde: f64,
    /// Bearing reading, rad.
    pub phi_tilde: f64,
    pub slot_index: u64,
}

/// Reusable DFT plan and buffers for a fixed transform length.
pub struct FrequencyEstimator {
    n_fft: usize,
    t_s: f64,
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
    magnitudes: Vec<f64>,
}

impl std::fmt::Debug for FrequencyEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrequencyEstimator").field("n_fft", &self.n_fft).field("t_s", &self.t_s).finish()
    }
}

impl FrequencyEstimator {
    pub fn new(n_fft: usize, t_s: f64) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        FrequencyEstimator {
            n_fft,
            t_s,
            fft,
            buffer: vec![Complex64::new(0.0, 0.0); n_fft],
            scratch,
            magnitudes: vec![0.0; n_fft],
        }
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    /// Grid spacing, rad/s.
    pub fn bin_width(&self) -> f64 {
        2.0 * PI / (self.t_s * self.n_fft as f64)
    }

    /// Magnitude spectrum of the zero-padded samples.
    pub fn spectrum(&mut self, samples: &[Complex64]) -> Result<&[f64]> {
        if samples.len() > self.n_fft {
            return Err(Error::config(format!(
                "capture of {} samples exceeds DFT length {}",
                samples.len(),
                self.n_fft
            )));
        }
        self.buffer[..samples.len()].copy_from_slice(samples);
        self.buffer[samples.len()..].fill(Complex64::new(0.0, 0.0));
        self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (m, z) in self.magnitudes.iter_mut().zip(&self.buffer) {
            *m = z.norm();
        }
        Ok(&self.magnitudes)
    }

    /// Peak frequency in rad/s, signed on `(-pi/T_s, pi/T_s]`.
    pub fn estimate(&mut self, samples: &[Complex64]) -> Result<f64> {
        let n = self.n_fft;
        let t_s = self.t_s;
        let mags = self.spectrum(samples)?;
        let mut peak = 0;
        for (k, &m) in mags.iter().enumerate() {
            if m > mags[peak] {
                peak = k;
            }
        }
        let prev = mags[(peak + n - 1) % n];
        let next = mags[(peak + 1) % n];
        Ok(quad_interp(prev, mags[peak], next, signed_bin(peak, n), t_s, n))
    }
}

/// Maps a DFT index onto a signed bin so that bin `n/2` is the positive Nyquist.
pub fn signed_bin(k: usize, n_fft: usize) -> i64 {
    if k > n_fft / 2 {
        k as i64 - n_fft as i64
    } else {
        k as i64
    }
}

/// Magnitude spectrum of `samples` zero-padded to `n_fft`.
pub fn spectrum(samples: &[Complex64], n_fft: usize) -> Result<Vec<f64>> {
    let mut est = FrequencyEstimator::new(n_fft, 1.0);
    est.spectrum(samples).map(<[f64]>::to_vec)
}

/// Parabolic refinement of a grid peak, returned in rad/s.
///
/// `m_prev`, `m_peak`, `m_next` are spectral magnitudes at bins
/// `peak_bin - 1`, `peak_bin`, `peak_bin + 1`. A flat triple returns the grid
/// frequency unchanged.
pub fn quad_interp(m_prev: f64, m_peak: f64, m_next: f64, peak_bin: i64, t_s: f64, n_fft: usize) -> f64 {
    let bin = 2.0 * PI / (t_s * n_fft as f64);
    let denom = 2.0 * (m_prev + m_next - 2.0 * m_peak);
    let offset = if denom == 0.0 { 0.0 } else { (m_prev - m_next) / denom };
    (peak_bin as f64 + offset) * bin
}

pub fn estimate_frequency(capture: &BeaconCapture, t_s: f64, n_fft: usize) -> Result<f64> {
    FrequencyEstimator::new(n_fft, t_s).estimate(&capture.samples)
}

/// Gaussian measurement of frequency and bearing around ground truth.
pub fn measure_abstract<R: Rng>(
    true_omega: f64,
    true_phi: f64,
    sigma_omega: f64,
    sigma_phi: f64,
    slot_index: u64,
    rng: &mut R,
) -> Measurement {
    let n_omega: f64 = rng.sample(StandardNormal);
    let n_phi: f64 = rng.sample(StandardNormal);
    Measurement {
        omega_tilde: true_omega + sigma_omega * n_omega,
        phi_tilde: true_phi + sigma_phi * n_phi,
        slot_index,
    }
}

/// Noisy bearing reading wrapped to `(-pi, pi]`.
pub fn measure_bearing<R: Rng>(true_phi: f64, sigma_phi: f64, rng: &mut R) -> f64 {
    if sigma_phi == 0.0 {
        return wrap_angle(true_phi);
    }
    let n: f64 = rng.sample(StandardNormal);
    wrap_angle(true_phi + sigma_phi * n)
}
