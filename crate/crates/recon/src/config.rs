//! Run configuration: JSON files, command-line overrides and validation.
//!
//! A JSON config is a flat object whose keys are the long flag names
//! (`"n-list"`, `"net-eps"`, …). Flags given on the command line win over
//! the file, and `RECON_SEED` supplies the seed when neither sets one.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use recon_core::estimators::DEFAULT_MAX_SYSTEMS;
use recon_core::measurement::DirectionLaw;
use recon_core::sphere::UnitVector;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::instance_io::read_directions;

/// Environment variable consulted for the seed when none is configured.
pub const SEED_ENV: &str = "RECON_SEED";
pub const DEFAULT_SEED: u64 = 0;
/// Smallest accepted trial count for MSE sweeps.
pub const MIN_SWEEP_TRIALS: u64 = 100;

/// Every option any subcommand understands. Unset fields fall back to the
/// subcommand's defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Overrides {
    pub d: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub n: Option<usize>,
    pub trials: Option<u64>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub theta: Option<Vec<f64>>,
    pub net_eps: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub law: Option<String>,
    pub estimators: Option<Vec<String>>,
    pub max_systems: Option<u64>,
    pub lambda: Option<Vec<f64>>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        Overrides { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Overrides {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::config("config", e.to_string()))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// `top` wins wherever it sets a value.
    pub fn overlay(self, top: Overrides) -> Overrides {
        overlay!(
            self, top, d, n_list, n, trials, delta, seed, theta, net_eps, out, workers, law, estimators,
            max_systems, lambda
        )
    }

    /// Seed from the options, else from `RECON_SEED`, else [`DEFAULT_SEED`].
    pub fn resolved_seed(&self) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| HarnessError::config("seed", format!("{SEED_ENV}=`{v}` is not a 64-bit unsigned integer"))),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }

    fn workers(&self) -> Result<usize> {
        match self.workers {
            Some(0) => Err(HarnessError::config("workers", "must be at least 1")),
            Some(w) => Ok(w),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

/// Direction law as written in configs: `uniform`, `cap:θ0` (the open cap
/// of radius `θ0` around `e₁`) or `file:PATH` (a direction list).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LawSpec {
    Uniform,
    Cap(f64),
    File(PathBuf),
}

impl FromStr for LawSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: String| HarnessError::config("law", m);
        if s == "uniform" {
            return Ok(LawSpec::Uniform);
        }
        if let Some(t) = s.strip_prefix("cap:") {
            let theta: f64 = t.parse().map_err(|_| bad(format!("bad cap radius `{t}`")))?;
            if !(theta > 0.0 && theta <= std::f64::consts::PI) {
                return Err(bad(format!("cap radius {theta} outside (0, pi]")));
            }
            return Ok(LawSpec::Cap(theta));
        }
        if let Some(p) = s.strip_prefix("file:") {
            if p.is_empty() {
                return Err(bad("empty file path".into()));
            }
            return Ok(LawSpec::File(PathBuf::from(p)));
        }
        Err(bad(format!("`{s}` is not uniform, cap:THETA or file:PATH")))
    }
}

impl TryFrom<String> for LawSpec {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LawSpec> for String {
    fn from(l: LawSpec) -> String {
        match l {
            LawSpec::Uniform => "uniform".into(),
            LawSpec::Cap(t) => format!("cap:{t}"),
            LawSpec::File(p) => format!("file:{}", p.display()),
        }
    }
}

impl LawSpec {
    pub fn resolve(&self, d: usize) -> Result<DirectionLaw> {
        Ok(match self {
            LawSpec::Uniform => DirectionLaw::UniformSphere,
            LawSpec::Cap(theta) => DirectionLaw::UniformCap {
                center: UnitVector::basis(d, 0).map_err(|e| HarnessError::config("d", e.to_string()))?,
                theta: *theta,
            },
            LawSpec::File(path) => {
                let dirs = read_directions(path).map_err(|e| HarnessError::config("law", e.to_string()))?;
                if dirs[0].dim() != d {
                    return Err(HarnessError::config(
                        "law",
                        format!("{} holds {}-dimensional directions, d = {d}", path.display(), dirs[0].dim()),
                    ));
                }
                DirectionLaw::FixedList(dirs)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Consistent,
    Rg,
    Linear,
}

impl FromStr for EstimatorKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(EstimatorKind::Consistent),
            "rg" => Ok(EstimatorKind::Rg),
            "linear" => Ok(EstimatorKind::Linear),
            _ => Err(HarnessError::config("estimators", format!("unknown estimator `{s}`"))),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(HarnessError::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn strictly_increasing(field: &str, ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return Err(HarnessError::config(field, "must not be empty"));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HarnessError::config(field, "must be strictly increasing"));
    }
    Ok(())
}

fn fill_estimators(names: &Option<Vec<String>>, default: &[EstimatorKind]) -> Result<Vec<EstimatorKind>> {
    let Some(names) = names else { return Ok(default.to_vec()) };
    let mut out = Vec::new();
    for n in names {
        let k: EstimatorKind = n.parse()?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(out)
}

/// Configuration of `mse-sweep`. `workers` and `out` are not serialized:
/// the CSV config line must not depend on them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub d: usize,
    pub n_list: Vec<usize>,
    pub trials: u64,
    pub delta: f64,
    pub law: LawSpec,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub max_systems: u64,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_overrides(o: &Overrides) -> Result<Self> {
        let cfg = SweepConfig {
            d: o.d.unwrap_or(3),
            n_list: o.n_list.clone().unwrap_or_else(|| vec![16, 24, 32, 48, 64]),
            trials: o.trials.unwrap_or(1000),
            delta: o.delta.unwrap_or(1.0),
            law: o.law.as_deref().unwrap_or("uniform").parse()?,
            seed: o.resolved_seed()?,
            estimators: fill_estimators(
                &o.estimators,
                &[EstimatorKind::Consistent, EstimatorKind::Rg, EstimatorKind::Linear],
            )?,
            max_systems: o.max_systems.unwrap_or(DEFAULT_MAX_SYSTEMS),
            workers: o.workers()?,
            out: o.out.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(HarnessError::config("d", "must be at least 1"));
        }
        strictly_increasing("n-list", &self.n_list)?;
        if let Some(&n) = self.n_list.iter().find(|&&n| n < self.d) {
            return Err(HarnessError::config("n-list", format!("N = {n} is below d = {}", self.d)));
        }
        if self.trials < MIN_SWEEP_TRIALS {
            return Err(HarnessError::config(
                "trials",
                format!("must be at least {MIN_SWEEP_TRIALS}, got {}", self.trials),
            ));
        }
        positive("delta", self.delta)?;
        if self.workers == 0 {
            return Err(HarnessError::config("workers", "must be at least 1"));
        }
        if self.max_systems == 0 {
            return Err(HarnessError::config("max-systems", "must be at least 1"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Configuration of `coverage`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageConfig {
    pub d: usize,
    pub theta: Vec<f64>,
    pub n_list: Vec<usize>,
    pub trials: u64,
    pub net_eps: f64,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl CoverageConfig {
    pub fn from_overrides(o: &Overrides) -> Result<Self> {
        let cfg = CoverageConfig {
            d: o.d.unwrap_or(2),
            theta: o.theta.clone().unwrap_or_else(|| vec![std::f64::consts::FRAC_PI_4]),
            n_list: o.n_list.clone().unwrap_or_else(|| vec![1, 5, 10, 20, 40]),
            trials: o.trials.unwrap_or(10_000),
            net_eps: o.net_eps.unwrap_or(0.05),
            seed: o.resolved_seed()?,
            workers: o.workers()?,
            out: o.out.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(HarnessError::config("d", "coverage needs d >= 2"));
        }
        if self.theta.is_empty() {
            return Err(HarnessError::config("theta", "must not be empty"));
        }
        if let Some(t) = self.theta.iter().find(|t| !(**t > 0.0 && **t < std::f64::consts::FRAC_PI_2)) {
            return Err(HarnessError::config("theta", format!("{t} is outside (0, pi/2)")));
        }
        strictly_increasing("n-list", &self.n_list)?;
        if self.n_list[0] == 0 {
            return Err(HarnessError::config("n-list", "N must be positive"));
        }
        if self.trials == 0 {
            return Err(HarnessError::config("trials", "must be positive"));
        }
        positive("net-eps", self.net_eps)?;
        if self.net_eps >= std::f64::consts::FRAC_PI_2 {
            return Err(HarnessError::config("net-eps", "must be below pi/2"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Configuration of `radial`: the law of `R_N(e₁)` for uniform directions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialConfig {
    pub d: usize,
    pub n: usize,
    pub trials: u64,
    pub delta: f64,
    pub seed: u64,
    /// Thresholds at which the survival probability is estimated.
    pub lambda: Vec<f64>,
    /// Also run the consistent estimator and certify every output.
    pub certify: bool,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RadialConfig {
    pub fn from_overrides(o: &Overrides) -> Result<Self> {
        let delta = o.delta.unwrap_or(1.0);
        let cfg = RadialConfig {
            d: o.d.unwrap_or(3),
            n: o.n.unwrap_or(15),
            trials: o.trials.unwrap_or(100_000),
            delta,
            seed: o.resolved_seed()?,
            lambda: o.lambda.clone().unwrap_or_else(|| (0..=8).map(|k| delta * k as f64 / 4.0).collect()),
            certify: fill_estimators(&o.estimators, &[])?.contains(&EstimatorKind::Consistent),
            workers: o.workers()?,
            out: o.out.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(HarnessError::config("d", "the radial law needs d >= 2"));
        }
        if self.n < 3 {
            return Err(HarnessError::config("n", "must be at least 3"));
        }
        if self.trials == 0 {
            return Err(HarnessError::config("trials", "must be positive"));
        }
        positive("delta", self.delta)?;
        if let Some(l) = self.lambda.iter().find(|l| !(0.0..=2.0 * self.delta).contains(*l)) {
            return Err(HarnessError::config("lambda", format!("{l} is outside [0, 2 delta]")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Configuration of `demo-1d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Demo1dConfig {
    pub n: usize,
    pub trials: u64,
    pub delta: f64,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
}

impl Demo1dConfig {
    pub fn from_overrides(o: &Overrides) -> Result<Self> {
        let cfg = Demo1dConfig {
            n: o.n.unwrap_or(10),
            trials: o.trials.unwrap_or(200_000),
            delta: o.delta.unwrap_or(1.0),
            seed: o.resolved_seed()?,
            workers: o.workers()?,
        };
        if cfg.n == 0 {
            return Err(HarnessError::config("n", "must be positive"));
        }
        if cfg.trials < 2 {
            return Err(HarnessError::config("trials", "must be at least 2"));
        }
        positive("delta", cfg.delta)?;
        Ok(cfg)
    }
}
