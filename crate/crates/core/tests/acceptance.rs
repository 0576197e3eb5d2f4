//! Acceptance suite. Each test prints one `PASS`/`FAIL` line before asserting.
//!
//! Run with `cargo test --release -p rfseek --test acceptance -- --nocapture`
//! to see the report; the Monte Carlo cases take a few minutes each on one core.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rfseek::estimator::FrequencyEstimator;
use rfseek::harness::{
    convergence_trace, monte_carlo_outcomes, run_batch_episode, run_episode, summarize, Backend, EpisodeSetup,
    DEFAULT_BIN_WIDTH,
};
use rfseek::seeker::{lyapunov_decrement, stage2_update, SeekerConfig};
use rfseek::world::Scenario;

const MASTER_SEED: u64 = 2024;
const RUNS: usize = 100;

fn report(name: &str, ok: bool, detail: String) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn grid() -> Vec<f64> {
    [0.1, 0.5, 1.0, 2.0, 3.0].iter().flat_map(|&x| [x, -x]).collect()
}

#[test]
fn criterion_1a_trace_decreases_and_converges() {
    let delta = 10f64.to_radians();
    let mut ok = true;
    let mut worst = 0;
    for e0 in grid() {
        let trace = convergence_trace(e0, delta, 200);
        let decreasing = trace.windows(2).all(|w| w[1].abs() < w[0].abs());
        let hit = trace.iter().position(|e| e.abs() < 0.01);
        ok &= decreasing && hit.is_some();
        worst = worst.max(hit.unwrap_or(usize::MAX));
    }
    report("1a convergence", ok, format!("monotone on all seeds, slowest reaches 0.01 rad at step {worst}"));
    assert!(ok);
}

#[test]
fn criterion_1b_small_angle_envelope() {
    let delta = 10f64.to_radians();
    let rate = 1.0 - 2.0 * delta * delta.sin();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut at = (0.0, 0);
    for e0 in grid().into_iter().filter(|e| e.abs() <= 1.0) {
        for (k, e) in convergence_trace(e0, delta, 200).iter().enumerate() {
            let excess = e.abs() - rate.powi(k as i32);
            if excess > worst_excess {
                worst_excess = excess;
                at = (e0, k);
            }
        }
    }
    let ok = worst_excess <= 1e-6;
    report(
        "1b envelope",
        ok,
        format!("max |err_k| - {rate:.4}^k = {worst_excess:.3e} (err0 = {}, k = {})", at.0, at.1),
    );
    assert!(ok);
}

#[test]
fn criterion_2_lyapunov_decrement_negative() {
    // largest admissible step: delta * sin(delta) = 1
    let mut delta_max = 1.0f64;
    for _ in 0..50 {
        delta_max -= (delta_max * delta_max.sin() - 1.0) / (delta_max.sin() + delta_max * delta_max.cos());
    }
    let n = 100;
    let mut checked = 0;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        // open interval (0, pi) on both sides of zero
        let mag = PI * (i as f64 + 0.5) / n as f64;
        let err = if i % 2 == 0 { mag } else { -mag };
        for j in 0..n {
            let delta = delta_max * (j as f64 + 0.5) / n as f64;
            assert!(delta * delta.sin() < 1.0);
            worst = worst.max(lyapunov_decrement(err, delta));
            checked += 1;
        }
    }
    let ok = worst < 0.0 && checked > 0;
    report("2 lyapunov", ok, format!("{checked} admissible grid points, max decrement {worst:.3e}"));
    assert!(ok);
}

fn tone(f: f64, n: usize, t_s: f64) -> Vec<Complex64> {
    (0..n).map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64 * t_s)).collect()
}

/// Peak of the DTFT magnitude on a grid 64 times finer than the sample count.
fn dense_peak(samples: &[Complex64], t_s: f64, lo: f64, hi: f64) -> f64 {
    let df = 1.0 / (64.0 * samples.len() as f64 * t_s);
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut f = (lo / df).floor() * df;
    while f <= hi {
        let w = Complex64::from_polar(1.0, -2.0 * PI * f * t_s);
        let mut z = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for s in samples {
            acc += s * z;
            z *= w;
        }
        if acc.norm() > best.0 {
            best = (acc.norm(), f);
        }
        f += df;
    }
    best.1
}

#[test]
fn criterion_3_estimator_fidelity() {
    let sc = Scenario::default();
    let mut est = FrequencyEstimator::new(sc.n_fft, sc.t_s);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut oracle_worst = 0.0f64;
    for _ in 0..100 {
        let f = rng.random_range(-3000.0..3000.0);
        let x = tone(f, sc.n_samples, sc.t_s);
        let got = est.estimate(&x).unwrap() / (2.0 * PI);
        let oracle = dense_peak(&x, sc.t_s, f - 60.0, f + 60.0);
        worst = worst.max((got - f).abs());
        oracle_worst = oracle_worst.max((oracle - f).abs());
    }
    let mut grid_worst = 0.0f64;
    for k in [-120i64, -37, -1, 0, 1, 5, 64, 122] {
        let f = k as f64 / (sc.n_fft as f64 * sc.t_s);
        let got = est.estimate(&tone(f, sc.n_samples, sc.t_s)).unwrap() / (2.0 * PI);
        grid_worst = grid_worst.max((got - f).abs());
    }
    let ok = worst < 2.0 && grid_worst < 1e-6;
    report(
        "3 estimator",
        ok,
        format!("off-grid max error {worst:.3} Hz (dense oracle {oracle_worst:.3} Hz), on-grid {grid_worst:.2e} Hz"),
    );
    assert!(ok);
}

#[test]
fn criterion_4_cfo_offset_cancels() {
    let m = 20;
    let delta = 10f64.to_radians();
    let f_d_max = Scenario::default().f_d_max();
    // Dyadic values so that adding the offset is exact in floating point.
    let unit = 2f64.powi(-20);
    let value = (-(1i64 << 40)..(1i64 << 40)).prop_map(move |k| k as f64 * unit);
    let strategy = (
        proptest::collection::vec(value.clone(), m),
        proptest::collection::vec(value.clone(), m),
        value,
        -PI..PI,
    );
    let mut runner = TestRunner::new(Config { cases: 1000, ..Config::default() });
    let result = runner.run(&strategy, |(plus, minus, offset, theta)| {
        let shifted_plus: Vec<f64> = plus.iter().map(|x| x + offset).collect();
        let shifted_minus: Vec<f64> = minus.iter().map(|x| x + offset).collect();
        let a = stage2_update(theta, &plus, &minus, delta, f_d_max).unwrap();
        let b = stage2_update(theta, &shifted_plus, &shifted_minus, delta, f_d_max).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
        Ok(())
    });
    report("4 cfo immunity", result.is_ok(), format!("1000 cases: {result:?}"));
    assert!(result.is_ok());
}

#[test]
fn criterion_5_noiseless_closed_loop() {
    let sc = Scenario { sigma_omega: 0.0, sigma_phi: 0.0, cfo_drift_std: 0.0, ..Scenario::default() };
    let cfg = SeekerConfig::new(&sc);
    let setup = EpisodeSetup { initial_error: Some(60f64.to_radians()), ..EpisodeSetup::new(Backend::Abstract, false) };
    let log = run_episode(&sc, &cfg, &setup, 5).unwrap();
    let ratio = log.outcome().ratio();
    let ok = log.termination.is_success() && ratio <= 1.05;
    report("5 noiseless loop", ok, format!("{:?}, ratio {ratio:.4}", log.termination));
    assert!(ok);
}

fn headline_batch(stage1: bool) -> Vec<rfseek::harness::EpisodeOutcome> {
    let sc = Scenario::default();
    let cfg = SeekerConfig::new(&sc);
    monte_carlo_outcomes(&sc, &cfg, Backend::Full, RUNS, MASTER_SEED, stage1).unwrap()
}

/// Criteria 6, 7 and 9 share batches, so they run in one test.
#[test]
fn criteria_6_7_9_monte_carlo() {
    let with = summarize(&headline_batch(true), DEFAULT_BIN_WIDTH).unwrap();
    let ok6 = with.success_rate >= 0.95 && (1.05..=1.35).contains(&with.mean_ratio);
    report(
        "6 headline",
        ok6,
        format!("success {:.2}, mean ratio {:.4}, mean distance {:.1} m", with.success_rate, with.mean_ratio, with.mean_distance),
    );

    let without = summarize(&headline_batch(false), DEFAULT_BIN_WIDTH).unwrap();
    let ok7 = without.mean_ratio > with.mean_ratio;
    report("7 stage-1 benefit", ok7, format!("without {:.4} vs with {:.4}", without.mean_ratio, with.mean_ratio));

    let mut first = Vec::new();
    with.write_histogram_csv(&mut first).unwrap();
    let again = summarize(&headline_batch(true), DEFAULT_BIN_WIDTH).unwrap();
    let mut second = Vec::new();
    again.write_histogram_csv(&mut second).unwrap();
    let ok9 = first == second;
    report("9 determinism", ok9, format!("histogram csv {} bytes, identical: {ok9}", first.len()));

    assert!(ok6 && ok7 && ok9);
}

/// Compares estimates that pass the outlier gate: at long range a few deep
/// fades leave only noise peaks, which the gate removes before the seeker.
#[test]
fn criterion_8_doppler_spread_near_source() {
    let sc = Scenario::default();
    let cfg = SeekerConfig::new(&sc);
    let log = run_batch_episode(&sc, &cfg, &EpisodeSetup::new(Backend::Full, true), MASTER_SEED, 0).unwrap();
    let rms = |keep: &dyn Fn(&rfseek::harness::SlotRecord) -> bool| {
        let errs: Vec<f64> =
            log.records.iter().filter(|r| keep(r)).map(|r| (r.omega_tilde - r.omega_true) / (2.0 * PI)).collect();
        ((errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt(), errs.len())
    };
    let (near, n_near) = rms(&|r| r.d < 500.0 && r.accepted);
    let (far, n_far) = rms(&|r| r.d > 4000.0 && r.accepted);
    let (near_raw, _) = rms(&|r| r.d < 500.0);
    let (far_raw, _) = rms(&|r| r.d > 4000.0);
    let rejected = log.records.iter().filter(|r| !r.accepted).count();
    let ok = n_near > 0 && n_far > 0 && near > far;
    report(
        "8 doppler spread",
        ok,
        format!(
            "gated rms error d<500 m: {near:.2} Hz ({n_near} slots), d>4000 m: {far:.2} Hz ({n_far} slots); \
             ungated {near_raw:.2} / {far_raw:.2} Hz with {rejected} gate rejections"
        ),
    );
    assert!(ok);
}
