//! Flat `key = value` configuration files.
//!
//! Keys use the parameter-table names (`d_init`, `R`, `R_in`, `f_c`, ...).
//! Blank lines and `#` comments are ignored. Angles ending in `_deg` are in
//! degrees.

use crate::error::{Error, Result};
use crate::seeker::SeekerConfig;
use crate::world::Scenario;

/// Every recognised key with a short description.
pub const KEYS: &[(&str, &str)] = &[
    ("d_init", "initial range to the emitter, m"),
    ("R", "outer scatterer radius, m"),
    ("R_in", "inner scatterer radius, m"),
    ("L", "number of scatterers"),
    ("f_c", "carrier frequency, Hz"),
    ("v", "UAV speed, m/s"),
    ("c", "propagation speed, m/s"),
    ("sigma_n2_db", "receiver noise power, dB"),
    ("snr_init_db", "average SNR at d_init, dB"),
    ("d_v", "success radius, m"),
    ("T_slot", "beacon period, s"),
    ("T_s", "sample period, s"),
    ("N", "samples per beacon"),
    ("N_fft", "DFT length"),
    ("delta_deg", "bearing perturbation, degrees"),
    ("M", "slots per perturbation leg"),
    ("smoothing_len", "stage-1 moving average length, slots"),
    ("R_c", "stage-1 circle radius, m"),
    ("cfo_init_hz", "initial carrier offset bound, Hz"),
    ("cfo_drift_std", "carrier offset random walk, Hz/sqrt(s)"),
    ("sigma_phi_deg", "bearing reading noise, degrees"),
    ("sigma_omega", "abstract-backend frequency noise, rad/s"),
    ("max_turn_rate_deg", "heading slew limit, deg/s (0 = off)"),
    ("relock_after", "consecutive rejections before the gate re-seeds (0 = never)"),
];

/// Current value of `key` rendered for help text.
pub fn value_of(key: &str, sc: &Scenario, cfg: &SeekerConfig) -> Option<String> {
    let v = match key {
        "d_init" => sc.d_init.to_string(),
        "R" => sc.r_outer.to_string(),
        "R_in" => sc.r_inner.to_string(),
        "L" => sc.num_scatterers.to_string(),
        "f_c" => format!("{:e}", sc.f_c),
        "v" => sc.v.to_string(),
        "c" => format!("{:e}", sc.c),
        "sigma_n2_db" => sc.sigma_n2_db.to_string(),
        "snr_init_db" => sc.snr_init_db.to_string(),
        "d_v" => sc.d_v.to_string(),
        "T_slot" => sc.t_slot.to_string(),
        "T_s" => format!("{:e}", sc.t_s),
        "N" => sc.n_samples.to_string(),
        "N_fft" => sc.n_fft.to_string(),
        "delta_deg" => format!("{}", round6(cfg.delta.to_degrees())),
        "M" => cfg.leg_slots.to_string(),
        "smoothing_len" => cfg.smoothing_len.to_string(),
        "R_c" => cfg.circle_radius.to_string(),
        "cfo_init_hz" => sc.cfo_init_hz.to_string(),
        "cfo_drift_std" => sc.cfo_drift_std.to_string(),
        "sigma_phi_deg" => format!("{}", round6(sc.sigma_phi.to_degrees())),
        "sigma_omega" => format!("{}", round6(sc.sigma_omega)),
        "max_turn_rate_deg" => sc.max_turn_rate.map_or(0.0, f64::to_degrees).to_string(),
        "relock_after" => cfg.relock_after.to_string(),
        _ => return None,
    };
    Some(v)
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn number(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::config(format!("{key}: '{value}' is not a number")))
}

fn count(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::config(format!("{key}: '{value}' is not a non-negative integer")))
}

/// Sets one parameter. Derived seeker quantities are not refreshed here.
pub fn apply_key(key: &str, value: &str, sc: &mut Scenario, cfg: &mut SeekerConfig) -> Result<()> {
    match key {
        "d_init" => sc.d_init = number(key, value)?,
        "R" => sc.r_outer = number(key, value)?,
        "R_in" => sc.r_inner = number(key, value)?,
        "L" => sc.num_scatterers = count(key, value)?,
        "f_c" => sc.f_c = number(key, value)?,
        "v" => sc.v = number(key, value)?,
        "c" => sc.c = number(key, value)?,
        "sigma_n2_db" => sc.sigma_n2_db = number(key, value)?,
        "snr_init_db" => sc.snr_init_db = number(key, value)?,
        "d_v" => sc.d_v = number(key, value)?,
        "T_slot" => sc.t_slot = number(key, value)?,
        "T_s" => sc.t_s = number(key, value)?,
        "N" => sc.n_samples = count(key, value)?,
        "N_fft" => sc.n_fft = count(key, value)?,
        "delta_deg" => cfg.delta = number(key, value)?.to_radians(),
        "M" => cfg.leg_slots = count(key, value)?,
        "smoothing_len" => cfg.smoothing_len = count(key, value)?,
        "R_c" => cfg.circle_radius = number(key, value)?,
        "cfo_init_hz" => sc.cfo_init_hz = number(key, value)?,
        "cfo_drift_std" => sc.cfo_drift_std = number(key, value)?,
        "sigma_phi_deg" => sc.sigma_phi = number(key, value)?.to_radians(),
        "sigma_omega" => sc.sigma_omega = number(key, value)?,
        "max_turn_rate_deg" => {
            let rate = number(key, value)?;
            sc.max_turn_rate = (rate > 0.0).then(|| rate.to_radians());
        }
        "relock_after" => cfg.relock_after = count(key, value)?,
        _ => return Err(Error::config(format!("unknown key '{key}'"))),
    }
    Ok(())
}

/// Applies a whole config file on top of the given values.
pub fn apply_config(text: &str, sc: &mut Scenario, cfg: &mut SeekerConfig) -> Result<()> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected key = value", lineno + 1)))?;
        apply_key(key.trim(), value.trim(), sc, cfg)
            .map_err(|e| Error::config(format!("line {}: {e}", lineno + 1)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> (Scenario, SeekerConfig) {
        let sc = Scenario::default();
        let cfg = SeekerConfig::new(&sc);
        (sc, cfg)
    }

    #[test]
    fn parses_table_keys() {
        let (mut sc, mut cfg) = defaults();
        let text = "# test\nd_init = 4000\nR=250 \n R_in = 120 # inner\n\ndelta_deg = 15\nM = 10\nN_fft = 8192\nmax_turn_rate_deg = 30\n";
        apply_config(text, &mut sc, &mut cfg).unwrap();
        assert_eq!(sc.d_init, 4000.0);
        assert_eq!(sc.r_outer, 250.0);
        assert_eq!(sc.r_inner, 120.0);
        assert_eq!(sc.n_fft, 8192);
        assert_eq!(cfg.leg_slots, 10);
        assert!((cfg.delta - 15f64.to_radians()).abs() < 1e-15);
        assert!((sc.max_turn_rate.unwrap() - 30f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let (mut sc, mut cfg) = defaults();
        let err = apply_config("bogus = 1", &mut sc, &mut cfg).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        assert!(apply_config("d_init 5000", &mut sc, &mut cfg).is_err());
        assert!(apply_config("M = -3", &mut sc, &mut cfg).is_err());
        assert!(apply_config("v = fast", &mut sc, &mut cfg).is_err());
    }

    #[test]
    fn every_key_round_trips() {
        let (sc, cfg) = defaults();
        for (key, _) in KEYS {
            let value = value_of(key, &sc, &cfg).unwrap();
            let (mut sc2, mut cfg2) = defaults();
            apply_key(key, &value, &mut sc2, &mut cfg2).unwrap();
            assert_eq!(value_of(key, &sc2, &cfg2).unwrap(), value, "{key}");
        }
    }
}
