//! `rfseek` command line.
//!
//! Precedence: command-line flags, then `--config` file, then defaults.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{apply_config, value_of, KEYS};
use crate::error::{Error, Result};
use crate::harness::{
    convergence_trace, monte_carlo_outcomes, run_episode, summarize, Backend, EpisodeSetup, Termination,
    DEFAULT_BIN_WIDTH,
};
use crate::rng::{stream_seed, Stream};
use crate::seeker::SeekerConfig;
use crate::world::Scenario;

const OUTPUT_COLUMNS: &str = "\
OUTPUT FILES:
  run         trajectory.csv   t,x,y,d,phi,theta_k,theta_star,omega_tilde,accepted,rss
                 t s; x,y,d m; phi (heading), theta_k (estimate), theta_star (true bearing) rad;
                 omega_tilde rad/s; accepted 1 if the outlier gate kept the estimate; rss linear power
  montecarlo  histogram.csv    bin_low,bin_high,count   (distance traveled, m)
              summary.json     runs, successes, success_rate, mean/median/std_distance,
                               shortest_path, mean_ratio, bin_width, histogram
  converge    convergence.csv  k,theta_err   (rad)

ENVIRONMENT:
  SEEK_SEED   seed used when --seed is absent";

fn parameter_help() -> String {
    let sc = Scenario::default();
    let cfg = SeekerConfig::new(&sc);
    let mut out = String::from("PARAMETERS (config-file keys, defaults):\n");
    for (key, what) in KEYS {
        let value = value_of(key, &sc, &cfg).unwrap_or_default();
        out.push_str(&format!("  {key:<18} {value:<12} {what}\n"));
    }
    out.push('\n');
    out.push_str(OUTPUT_COLUMNS);
    out
}

#[derive(Debug, Parser)]
#[command(name = "rfseek", version, about = "Doppler-driven RF source seeking simulator", after_help = parameter_help())]
pub struct Cli {
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Fly one episode and write its trajectory.
    #[command(after_help = parameter_help())]
    Run(SimArgs),
    /// Fly a batch of independent episodes and summarize distance traveled.
    #[command(after_help = parameter_help())]
    Montecarlo {
        #[command(flatten)]
        sim: SimArgs,
        /// Number of episodes.
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Histogram bin width, m.
        #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
        bin_width: f64,
    },
    /// Iterate the far-field direction-error recursion.
    #[command(after_help = OUTPUT_COLUMNS)]
    Converge {
        /// Initial direction error (deg, or suffix `rad`).
        #[arg(long, default_value = "1rad", value_parser = parse_angle)]
        theta0: f64,
        /// Perturbation (deg, or suffix `rad`) [default: 10]
        #[arg(long, value_parser = parse_angle)]
        delta: Option<f64>,
        /// Number of iterations.
        #[arg(long, default_value_t = 50)]
        kmax: usize,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Master seed.
    #[arg(long, env = "SEEK_SEED", default_value_t = 1)]
    pub seed: u64,
    /// full (beacon synthesis + DFT) or abstract (Gaussian measurement model).
    #[arg(long, default_value = "full")]
    pub backend: Backend,
    /// Skip the Stage-1 circle and start from a random (or --initial-error) direction.
    #[arg(long)]
    pub no_stage1: bool,
    /// Initial direction error when Stage 1 is skipped (deg, or suffix `rad`).
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub initial_error: Option<f64>,
    /// key = value parameter file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
}

/// Parameter overrides; see the PARAMETERS table for defaults.
#[derive(Debug, Default, Args)]
pub struct ParamArgs {
    /// Initial range d_init, m [default: 5000]
    #[arg(long)]
    pub d_init: Option<f64>,
    /// Outer scatterer radius R, m [default: 200]
    #[arg(long)]
    pub r_outer: Option<f64>,
    /// Inner scatterer radius R_in, m [default: 100]
    #[arg(long)]
    pub r_inner: Option<f64>,
    /// Number of scatterers L [default: 10]
    #[arg(long)]
    pub scatterers: Option<usize>,
    /// Carrier frequency f_c, Hz [default: 2e9]
    #[arg(long)]
    pub f_c: Option<f64>,
    /// UAV speed v, m/s [default: 10]
    #[arg(long)]
    pub v: Option<f64>,
    /// Noise power sigma_n^2, dB [default: -70]
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_n2_db: Option<f64>,
    /// Average SNR at d_init, dB [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub snr_init_db: Option<f64>,
    /// Success radius d_v, m [default: 200]
    #[arg(long)]
    pub d_v: Option<f64>,
    /// Beacon period T_slot, s [default: 0.05]
    #[arg(long)]
    pub t_slot: Option<f64>,
    /// Sample period T_s, s [default: 1e-5]
    #[arg(long)]
    pub t_s: Option<f64>,
    /// Samples per beacon N (T = N T_s) [default: 1000]
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// DFT length N_fft [default: 4096]
    #[arg(long)]
    pub n_fft: Option<usize>,
    /// Perturbation delta (deg, or suffix `rad`) [default: 10]
    #[arg(long, value_parser = parse_angle)]
    pub delta: Option<f64>,
    /// Slots per leg M [default: 20]
    #[arg(long)]
    pub m: Option<usize>,
    /// Stage-1 moving-average length, slots [default: 15]
    #[arg(long)]
    pub smoothing_len: Option<usize>,
    /// Stage-1 circle radius R_c, m [default: 50]
    #[arg(long)]
    pub r_c: Option<f64>,
}

/// Parses an angle: bare numbers and `deg`/`°` suffixes are degrees, `rad` is radians.
pub fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    let (number, radians) = if let Some(n) = t.strip_suffix("rad") {
        (n, true)
    } else if let Some(n) = t.strip_suffix("deg").or_else(|| t.strip_suffix('°')) {
        (n, false)
    } else {
        (t, false)
    };
    let value: f64 = number.trim().parse().map_err(|_| format!("'{s}' is not an angle"))?;
    Ok(if radians { value } else { value.to_radians() })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Run,
    MonteCarlo { runs: usize, bin_width: f64 },
    Converge { theta0: f64, delta: f64, k_max: usize },
}

/// Fully resolved and validated invocation.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub command: Command,
    pub scenario: Scenario,
    pub seeker: SeekerConfig,
    pub backend: Backend,
    pub seed: u64,
    pub stage1: bool,
    pub initial_error: Option<f64>,
    pub out_dir: PathBuf,
}

impl ParamArgs {
    fn apply(&self, sc: &mut Scenario, cfg: &mut SeekerConfig) {
        macro_rules! set {
            ($field:ident => $target:expr) => {
                if let Some(v) = self.$field {
                    $target = v;
                }
            };
        }
        set!(d_init => sc.d_init);
        set!(r_outer => sc.r_outer);
        set!(r_inner => sc.r_inner);
        set!(scatterers => sc.num_scatterers);
        set!(f_c => sc.f_c);
        set!(v => sc.v);
        set!(sigma_n2_db => sc.sigma_n2_db);
        set!(snr_init_db => sc.snr_init_db);
        set!(d_v => sc.d_v);
        set!(t_slot => sc.t_slot);
        set!(t_s => sc.t_s);
        set!(n_samples => sc.n_samples);
        set!(n_fft => sc.n_fft);
        set!(delta => cfg.delta);
        set!(m => cfg.leg_slots);
        set!(smoothing_len => cfg.smoothing_len);
        set!(r_c => cfg.circle_radius);
    }
}

impl RunSpec {
    pub fn from_cli(cli: Cli) -> Result<RunSpec> {
        let mut scenario = Scenario::default();
        let mut seeker = SeekerConfig::new(&scenario);
        let (command, sim) = match cli.command {
            Commands::Run(sim) => (Command::Run, sim),
            Commands::Montecarlo { sim, runs, bin_width } => {
                if runs == 0 {
                    return Err(Error::Usage("--runs must be at least 1".into()));
                }
                if !(bin_width > 0.0) {
                    return Err(Error::Usage("--bin-width must be positive".into()));
                }
                (Command::MonteCarlo { runs, bin_width }, sim)
            }
            Commands::Converge { theta0, delta, kmax, out } => {
                if let Some(d) = delta {
                    seeker.delta = d;
                }
                seeker.validate().map_err(|e| Error::Usage(format!("--delta: {e}")))?;
                if theta0.abs() > PI {
                    return Err(Error::Usage("--theta0 must lie within [-180, 180] degrees".into()));
                }
                return Ok(RunSpec {
                    command: Command::Converge { theta0, delta: seeker.delta, k_max: kmax },
                    scenario,
                    seeker,
                    backend: Backend::Abstract,
                    seed: 0,
                    stage1: false,
                    initial_error: None,
                    out_dir: out,
                });
            }
        };

        if let Some(path) = &sim.config {
            let text = fs::read_to_string(path)?;
            apply_config(&text, &mut scenario, &mut seeker)?;
        }
        sim.params.apply(&mut scenario, &mut seeker);
        seeker.derive_from(&scenario);
        scenario.validate().map_err(|e| Error::Usage(e.to_string()))?;
        seeker.validate().map_err(|e| Error::Usage(e.to_string()))?;

        Ok(RunSpec {
            command,
            scenario,
            seeker,
            backend: sim.backend,
            seed: sim.seed,
            stage1: !sim.no_stage1,
            initial_error: sim.initial_error,
            out_dir: sim.out,
        })
    }
}

/// Parses a full argument vector (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<RunSpec>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Usage(e.render().to_string()))?;
    RunSpec::from_cli(cli)
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Usage(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, contents).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Runs the command; returns the one-line report printed on success.
pub fn execute(spec: &RunSpec) -> Result<String> {
    fs::create_dir_all(&spec.out_dir)?;
    match spec.command {
        Command::Run => {
            let world = spec.scenario.realize(stream_seed(spec.seed, Stream::Scatterers))?;
            let setup = EpisodeSetup {
                initial_error: spec.initial_error,
                ..EpisodeSetup::new(spec.backend, spec.stage1)
            };
            let log = run_episode(&world, &spec.seeker, &setup, spec.seed)?;
            let mut csv = Vec::new();
            log.write_csv(&mut csv)?;
            let path = spec.out_dir.join("trajectory.csv");
            write_atomic(&path, &csv)?;
            let outcome = match log.termination {
                Termination::Success { .. } => "success",
                Termination::Timeout { .. } => "timeout",
            };
            let d = log.termination.distance_traveled();
            Ok(format!(
                "outcome={outcome} distance_traveled={d:.1} ratio={:.4} slots={} iterations={} trajectory={}",
                d / log.shortest_path,
                log.records.len(),
                log.iterations,
                path.display()
            ))
        }
        Command::MonteCarlo { runs, bin_width } => {
            let outcomes =
                monte_carlo_outcomes(&spec.scenario, &spec.seeker, spec.backend, runs, spec.seed, spec.stage1)?;
            let summary = summarize(&outcomes, bin_width)?;
            let mut hist = Vec::new();
            summary.write_histogram_csv(&mut hist)?;
            write_atomic(&spec.out_dir.join("histogram.csv"), &hist)?;
            write_atomic(&spec.out_dir.join("summary.json"), (summary.to_json() + "\n").as_bytes())?;
            Ok(format!(
                "runs={} success_rate={:.3} mean_distance={:.1} median_distance={:.1} std_distance={:.1} mean_ratio={:.4}",
                summary.runs,
                summary.success_rate,
                summary.mean_distance,
                summary.median_distance,
                summary.std_distance,
                summary.mean_ratio
            ))
        }
        Command::Converge { theta0, delta, k_max } => {
            let trace = convergence_trace(theta0, delta, k_max);
            let mut csv = String::from("k,theta_err\n");
            for (k, e) in trace.iter().enumerate() {
                csv.push_str(&format!("{k},{e:.12e}\n"));
            }
            let path = spec.out_dir.join("convergence.csv");
            write_atomic(&path, csv.as_bytes())?;
            Ok(format!("k_max={k_max} final_error={:.6e} csv={}", trace[trace.len() - 1], path.display()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_parsing() {
        assert!((parse_angle("10").unwrap() - 10f64.to_radians()).abs() < 1e-15);
        assert!((parse_angle("10deg").unwrap() - 10f64.to_radians()).abs() < 1e-15);
        assert!((parse_angle("10°").unwrap() - 10f64.to_radians()).abs() < 1e-15);
        assert_eq!(parse_angle("1rad").unwrap(), 1.0);
        assert!(parse_angle("ten").is_err());
    }

    #[test]
    fn run_with_seed() {
        let spec = parse_args(["rfseek", "run", "--seed", "7"]).unwrap();
        assert_eq!(spec.command, Command::Run);
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.scenario, Scenario::default());
        assert_eq!(spec.seeker, SeekerConfig::new(&Scenario::default()));
        assert!(spec.stage1);
        assert_eq!(spec.backend, Backend::Full);
    }

    #[test]
    fn montecarlo_flags() {
        let spec = parse_args(["rfseek", "montecarlo", "--runs", "100", "--no-stage1"]).unwrap();
        assert!(!spec.stage1);
        assert!(matches!(spec.command, Command::MonteCarlo { runs: 100, .. }));
    }

    #[test]
    fn delta_out_of_range_is_usage_error() {
        let err = parse_args(["rfseek", "run", "--delta", "100deg"]).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        assert!(err.to_string().contains("delta"), "{err}");
    }

    #[test]
    fn unknown_flag_is_named() {
        let err = parse_args(["rfseek", "run", "--warp-speed", "9"]).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        assert!(err.to_string().contains("--warp-speed"), "{err}");
    }

    #[test]
    fn help_lists_every_parameter() {
        let help = parameter_help();
        for (key, _) in KEYS {
            assert!(help.contains(key), "{key}");
        }
        for column in ["t,x,y,d,phi,theta_k,theta_star,omega_tilde,accepted,rss", "bin_low,bin_high,count", "k,theta_err"] {
            assert!(help.contains(column));
        }
        assert!(help.contains("5000") && help.contains("4096") && help.contains("-70"));
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("scenario.conf");
        fs::write(&cfg, "d_init = 3000\nM = 10\n").unwrap();
        let cfg = cfg.to_str().unwrap();
        let spec = parse_args(["rfseek", "run", "--config", cfg, "--m", "12"]).unwrap();
        assert_eq!(spec.scenario.d_init, 3000.0);
        assert_eq!(spec.seeker.leg_slots, 12);
    }

    #[test]
    fn converge_defaults() {
        let spec = parse_args(["rfseek", "converge"]).unwrap();
        assert_eq!(spec.command, Command::Converge { theta0: 1.0, delta: 10f64.to_radians(), k_max: 50 });
    }
}
