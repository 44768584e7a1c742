//! The `recon` command line.
//!
//! Every subcommand takes the same option set; `--config FILE` loads a JSON
//! object with the same keys, and flags given explicitly override it.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use recon_core::estimators::{
    canonical_dual, consistent_estimate, default_start, linear_estimate, rg_estimate, worst_case_error_exact,
    EnumerationCaps,
};
use recon_core::measurement::{distance, draw_instance, error_polytope};
use recon_core::rng::stream;

use crate::config::{CoverageConfig, Demo1dConfig, Overrides, RadialConfig, SweepConfig};
use crate::csv::{fmt_f64, Cell, Table};
use crate::error::{HarnessError, Result};
use crate::fit::fit_power_law;
use crate::instance_io::{format_instance, read_instance};
use crate::sweep::{
    bounds_table, run_coverage_sweep, run_demo_1d, run_mse_sweep, run_radial, sweep_signal, CERTIFICATE_TOL,
    MAX_PASSES,
};

#[derive(Debug, Parser)]
#[command(name = "recon", version, about = "Consistent reconstruction experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Empirical E|W_N|², E|R_N|² and estimator MSEs over an N-list
    MseSweep(CommonArgs),
    /// Non-coverage frequencies of random caps next to their bounds
    Coverage(CommonArgs),
    /// Every closed-form bound for (d, N, delta)
    Bounds(CommonArgs),
    /// One-dimensional exact-law reproduction
    #[command(name = "demo-1d")]
    Demo1d(CommonArgs),
    /// Survival curve and mean square of the radial error R_N(e1)
    Radial(CommonArgs),
    /// Draw one instance and write it in the instance file format
    DrawInstance(CommonArgs),
    /// Reconstruct from an instance file
    Solve(SolveArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON file with the same keys as the long flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "d")]
    pub d: Option<usize>,
    /// Comma-separated, strictly increasing
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long = "n")]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Master seed; defaults to $RECON_SEED, then 0
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cap radii, comma-separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub net_eps: Option<f64>,
    /// Output file; standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// uniform | cap:THETA0 | file:PATH
    #[arg(long)]
    pub law: Option<String>,
    /// Subset of consistent,rg,linear
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// Largest number of d-subsets the exact W_N may enumerate
    #[arg(long)]
    pub max_systems: Option<u64>,
    /// Survival thresholds for `radial`, comma-separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambda: Option<Vec<f64>>,
}

impl CommonArgs {
    /// Defaults < config file < flags.
    pub fn overrides(&self) -> Result<Overrides> {
        let flags = Overrides {
            d: self.d,
            n_list: self.n_list.clone(),
            n: self.n,
            trials: self.trials,
            delta: self.delta,
            seed: self.seed,
            theta: self.theta.clone(),
            net_eps: self.net_eps,
            out: self.out.clone(),
            workers: self.workers,
            law: self.law.clone(),
            estimators: self.estimators.clone(),
            max_systems: self.max_systems,
            lambda: self.lambda.clone(),
        };
        Ok(match &self.config {
            Some(path) => Overrides::from_json_file(path)?.overlay(flags),
            None => flags,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Instance file
    pub input: PathBuf,
    #[arg(long)]
    pub max_systems: Option<u64>,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status: 0 on success, 1 on a runtime failure, 2 on a configuration
/// error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::io(p, e)),
        None => stdout.write_all(text.as_bytes()).map_err(|e| HarnessError::io("<stdout>", e)),
    }
}

fn note(stderr: &mut dyn Write, msg: std::fmt::Arguments<'_>) {
    let _ = writeln!(stderr, "{msg}");
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::MseSweep(a) => {
            let cfg = SweepConfig::from_overrides(&a.overrides()?)?;
            let out = run_mse_sweep(&cfg)?;
            for s in &out.skipped {
                note(stderr, format_args!("skipped N = {}: {}", s.n, s.reason));
            }
            if out.rows.len() >= 3 {
                let pts: Vec<(f64, f64)> = out.rows.iter().map(|r| (r.n as f64, r.w2.mean)).collect();
                if let Ok(fit) = fit_power_law(&pts) {
                    note(stderr, format_args!("E|W_N|^2 ~ N^{:.4} (log residual {:.3e})", fit.slope, fit.residual));
                }
            }
            emit(&out.table().render(), cfg.out.as_deref(), stdout)?;
            Ok(0)
        }
        Command::Coverage(a) => {
            let cfg = CoverageConfig::from_overrides(&a.overrides()?)?;
            let out = run_coverage_sweep(&cfg)?;
            emit(&out.table().render(), cfg.out.as_deref(), stdout)?;
            Ok(0)
        }
        Command::Radial(a) => {
            let cfg = RadialConfig::from_overrides(&a.overrides()?)?;
            let out = run_radial(&cfg)?;
            note(
                stderr,
                format_args!(
                    "E|R_N|^2 = {} +- {}, interval [{}, {}]: {}",
                    fmt_f64(out.r2.mean),
                    fmt_f64(out.r2.std_error),
                    fmt_f64(out.terms.lower()),
                    fmt_f64(out.terms.upper()),
                    verdict(out.r2_in_interval(3.0))
                ),
            );
            if let Some(f) = out.certificate_failures {
                note(stderr, format_args!("certificate failures: {f}"));
            }
            emit(&out.table().render(), cfg.out.as_deref(), stdout)?;
            Ok(0)
        }
        Command::Demo1d(a) => {
            let cfg = Demo1dConfig::from_overrides(&a.overrides()?)?;
            let out = run_demo_1d(&cfg)?;
            let denom = (cfg.n + 1) * (cfg.n + 2);
            let _ = writeln!(
                stdout,
                "endpoint MSE {} +- {} exact 8/{denom} = {}: {}",
                fmt_f64(out.endpoint.mean),
                fmt_f64(out.endpoint.std_error),
                fmt_f64(out.exact.endpoint),
                verdict(out.endpoint_pass())
            );
            let _ = writeln!(
                stdout,
                "worst MSE    {} +- {} exact 14/{denom} = {}: {}",
                fmt_f64(out.worst.mean),
                fmt_f64(out.worst.std_error),
                fmt_f64(out.exact.worst),
                verdict(out.worst_pass())
            );
            Ok(if out.endpoint_pass() && out.worst_pass() { 0 } else { 1 })
        }
        Command::Bounds(a) => {
            let o = a.overrides()?;
            let (d, n, delta) = (o.d.unwrap_or(3), o.n.unwrap_or(1000), o.delta.unwrap_or(1.0));
            let thetas = o.theta.clone().unwrap_or_default();
            let rows = bounds_table(d, n, delta, &thetas)?;
            let table = Table {
                config_json: serde_json::json!({ "d": d, "n": n, "delta": delta, "theta": thetas }).to_string(),
                header: vec!["quantity", "value"],
                rows: rows.into_iter().map(|(k, v)| vec![Cell::Text(k), v.into()]).collect(),
            };
            emit(&table.render(), o.out.as_deref(), stdout)?;
            Ok(0)
        }
        Command::DrawInstance(a) => {
            let o = a.overrides()?;
            let d = o.d.unwrap_or(3);
            let n = o.n.unwrap_or(20);
            let delta = o.delta.unwrap_or(1.0);
            if d == 0 {
                return Err(HarnessError::config("d", "must be at least 1"));
            }
            if n == 0 {
                return Err(HarnessError::config("n", "must be positive"));
            }
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(HarnessError::config("delta", "must be positive and finite"));
            }
            let law = o.law.as_deref().unwrap_or("uniform").parse::<crate::config::LawSpec>()?.resolve(d)?;
            let inst = draw_instance(&sweep_signal(d), n, delta, &law, &mut stream(o.resolved_seed()?, &[0, 0]))?;
            emit(&format_instance(&inst), o.out.as_deref(), stdout)?;
            Ok(0)
        }
        Command::Solve(a) => {
            let inst = read_instance(&a.input)?;
            let x = inst.signal().to_vec();
            let mut caps = EnumerationCaps::default();
            if let Some(m) = a.max_systems {
                caps.max_systems = m;
            }
            let join = |v: &[f64]| v.iter().map(|&t| fmt_f64(t)).collect::<Vec<_>>().join(" ");
            let w = worst_case_error_exact(&error_polytope(&inst), &caps)?;
            let _ = writeln!(stdout, "worst_case_error {}", fmt_f64(w.value));
            let _ = writeln!(stdout, "worst_case_witness {}", join(&w.witness));
            let rep = consistent_estimate(&inst, &default_start(&inst), CERTIFICATE_TOL, MAX_PASSES)?;
            let _ = writeln!(stdout, "consistent {}", join(&rep.estimate));
            let _ = writeln!(
                stdout,
                "consistent_error {} passes {} certified {}",
                fmt_f64(distance(&rep.estimate, &x)),
                rep.passes_used,
                rep.consistent
            );
            let rg = rg_estimate(&inst, &vec![0.0; inst.dim()])?;
            let _ = writeln!(stdout, "rg {}", join(&rg.estimate));
            let _ = writeln!(stdout, "rg_error {}", fmt_f64(distance(&rg.estimate, &x)));
            match canonical_dual(&inst.directions()) {
                Ok(dual) => {
                    let lin = linear_estimate(&inst, &dual)?;
                    let _ = writeln!(stdout, "linear {}", join(&lin));
                    let _ = writeln!(stdout, "linear_error {}", fmt_f64(distance(&lin, &x)));
                }
                Err(e) => note(stderr, format_args!("linear estimate unavailable: {e}")),
            }
            Ok(0)
        }
    }
}
