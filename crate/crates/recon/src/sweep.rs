//! Monte Carlo sweeps.
//!
//! Trial `t` of row `r` draws everything from `stream(seed, [r, t])`.
//! Trials run on a rayon pool but results are gathered in trial order and
//! accumulated sequentially, so every number is independent of the worker
//! count.

use rayon::prelude::*;
use rayon::ThreadPool;
use recon_core::bounds::{
    bcl_noncoverage_bound, general_radial_lower, mse_lower_limit, mse_upper_general, mse_upper_uniform,
    one_dim_mse_exact, radial_mse_limit, radial_survival, simple_bound_min_n, simple_noncoverage_bound,
    theorem_radial_mse, uniform_admissibility, uniform_noise_variance, OneDimMse, RadialMseTerms, BCL_QUAD_TOL,
};
use recon_core::coverage::{coverage_trial, CoverageEstimate, NET_STREAM_KEY};
use recon_core::estimators::{
    binomial, canonical_dual, consistent_estimate, default_start, linear_estimate, rg_estimate,
    worst_case_error_exact, EnumerationCaps,
};
use recon_core::measurement::{distance, draw_instance, error_polytope, radial_extent, DirectionLaw, Instance};
use recon_core::rng::stream;
use recon_core::sphere::{build_geodesic_net, gamma_ratio_constant, UnitVector};
use recon_core::stats::{binomial_std_error, MeanAccumulator};

use crate::config::{CoverageConfig, Demo1dConfig, EstimatorKind, RadialConfig, SweepConfig};
use crate::csv::{Cell, Table};
use crate::error::{HarnessError, Result};

/// Residual tolerance of the consistency certificate.
pub const CERTIFICATE_TOL: f64 = 1e-9;
/// Pass budget of the consistent estimator.
pub const MAX_PASSES: usize = 10_000;

pub fn thread_pool(workers: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Runtime(format!("cannot start worker pool: {e}")))
}

/// Runs `f` for every trial in parallel and returns the results in trial
/// order. The first error in trial order wins.
pub fn par_trials<T: Send>(pool: &ThreadPool, trials: u64, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let out: Vec<Result<T>> = pool.install(|| (0..trials).into_par_iter().map(&f).collect());
    out.into_iter().collect()
}

/// Mean with its standard error `sample std / √trials`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let acc: MeanAccumulator = values.into_iter().collect();
        Estimate { mean: acc.mean(), std_error: acc.std_error() }
    }

    /// `|mean - target| ≤ k·std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// The signal used by every sweep: `0.5·(1, …, 1)/√d`. Errors do not depend
/// on it since the noise is additive and the directions are independent.
pub fn sweep_signal(d: usize) -> Vec<f64> {
    vec![0.5 / (d as f64).sqrt(); d]
}

/// Closed-form columns, a function of `(d, N, δ)` only. `None` marks a
/// formula outside its range of validity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryColumns {
    pub radial: Option<RadialMseTerms>,
    pub upper_uniform: Option<f64>,
    pub upper_general: Option<f64>,
    pub lower_limit_over_n2: Option<f64>,
    pub linear_floor: f64,
    pub one_dim: Option<OneDimMse>,
}

impl TheoryColumns {
    pub fn new(d: usize, n: usize, delta: f64) -> Self {
        let nf = n as f64;
        TheoryColumns {
            radial: theorem_radial_mse(n, d, delta).ok(),
            upper_uniform: mse_upper_uniform(n, d, delta).ok(),
            upper_general: uniform_admissibility(d).and_then(|p| mse_upper_general(n, d, delta, &p)).ok(),
            lower_limit_over_n2: mse_lower_limit(d, delta).ok().map(|c| c / (nf * nf)),
            linear_floor: (d * d) as f64 * uniform_noise_variance(delta) / nf,
            one_dim: if d == 1 { one_dim_mse_exact(n, delta).ok() } else { None },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub d: usize,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub w2: Estimate,
    pub r2: Estimate,
    pub consistent: Option<Estimate>,
    pub rg: Option<Estimate>,
    pub linear: Option<Estimate>,
    /// Consistent-estimator outputs that failed the residual check.
    pub certificate_failures: u64,
    /// Trials in which the true signal failed the residual check.
    pub signal_failures: u64,
    pub theory: TheoryColumns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRow {
    pub n: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<SkippedRow>,
}

struct MseTrial {
    w2: f64,
    r2: f64,
    consistent: Option<f64>,
    certified: bool,
    signal_ok: bool,
    rg: Option<f64>,
    linear: Option<f64>,
}

fn mse_trial(cfg: &SweepConfig, law: &DirectionLaw, row: u64, n: usize, t: u64) -> Result<MseTrial> {
    let x = sweep_signal(cfg.d);
    let mut rng = stream(cfg.seed, &[row, t]);
    let inst = draw_instance(&x, n, cfg.delta, law, &mut rng)?;
    let slabs = error_polytope(&inst);
    let w = worst_case_error_exact(&slabs, &EnumerationCaps { max_systems: cfg.max_systems })?.value;
    let r = radial_extent(&slabs, &UnitVector::basis(cfg.d, 0)?);
    let wants = |k| cfg.estimators.contains(&k);
    let sq_err = |est: &[f64]| {
        let e = distance(est, &x);
        e * e
    };

    let (mut consistent, mut certified) = (None, true);
    if wants(EstimatorKind::Consistent) {
        let rep = consistent_estimate(&inst, &default_start(&inst), CERTIFICATE_TOL, MAX_PASSES)?;
        certified = rep.consistent && inst.is_consistent(&rep.estimate, CERTIFICATE_TOL)?;
        consistent = Some(sq_err(&rep.estimate));
    }
    let rg = if wants(EstimatorKind::Rg) {
        Some(sq_err(&rg_estimate(&inst, &vec![0.0; cfg.d])?.estimate))
    } else {
        None
    };
    let linear = if wants(EstimatorKind::Linear) {
        let dual = canonical_dual(&inst.directions())?;
        Some(sq_err(&linear_estimate(&inst, &dual)?))
    } else {
        None
    };
    Ok(MseTrial {
        w2: w * w,
        r2: r * r,
        consistent,
        certified,
        signal_ok: inst.is_consistent(&x, CERTIFICATE_TOL)?,
        rg,
        linear,
    })
}

fn estimate_opt(trials: &[MseTrial], pick: impl Fn(&MseTrial) -> Option<f64>) -> Option<Estimate> {
    let v: Option<Vec<f64>> = trials.iter().map(pick).collect();
    v.map(Estimate::of)
}

/// Per `N`: draw instances, compute the exact `W_N` and `R_N(e₁)`, run the
/// requested estimators and average. Rows whose enumeration exceeds the cap
/// or that hit any other per-trial error are skipped and reported.
pub fn run_mse_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let law = cfg.law.resolve(cfg.d)?;
    let pool = thread_pool(cfg.workers)?;
    let (mut rows, mut skipped) = (Vec::new(), Vec::new());
    for (row, &n) in cfg.n_list.iter().enumerate() {
        let systems = binomial(2 * n as u64, cfg.d as u64);
        if systems > cfg.max_systems as f64 {
            skipped.push(SkippedRow {
                n,
                reason: format!("C(2N, d) = {systems:.0} exceeds the cap {}", cfg.max_systems),
            });
            continue;
        }
        let trials = match par_trials(&pool, cfg.trials, |t| mse_trial(cfg, &law, row as u64, n, t)) {
            Ok(t) => t,
            Err(HarnessError::Core(e)) => {
                skipped.push(SkippedRow { n, reason: e.to_string() });
                continue;
            }
            Err(e) => return Err(e),
        };
        rows.push(SweepRow {
            d: cfg.d,
            n,
            trials: cfg.trials,
            seed: cfg.seed,
            w2: Estimate::of(trials.iter().map(|t| t.w2)),
            r2: Estimate::of(trials.iter().map(|t| t.r2)),
            consistent: estimate_opt(&trials, |t| t.consistent),
            rg: estimate_opt(&trials, |t| t.rg),
            linear: estimate_opt(&trials, |t| t.linear),
            certificate_failures: trials.iter().filter(|t| !t.certified).count() as u64,
            signal_failures: trials.iter().filter(|t| !t.signal_ok).count() as u64,
            theory: TheoryColumns::new(cfg.d, n, cfg.delta),
        });
    }
    if rows.is_empty() {
        let reasons: Vec<String> = skipped.iter().map(|s| format!("N = {}: {}", s.n, s.reason)).collect();
        return Err(HarnessError::Runtime(format!("every row was skipped ({})", reasons.join("; "))));
    }
    Ok(SweepOutput { config: cfg.clone(), rows, skipped })
}

pub const MSE_HEADER: [&str; 27] = [
    "d",
    "N",
    "trials",
    "seed",
    "W2_mean",
    "W2_std_error",
    "R2_mean",
    "R2_std_error",
    "consistent_mse",
    "consistent_std_error",
    "rg_mse",
    "rg_std_error",
    "linear_mse",
    "linear_std_error",
    "certificate_failures",
    "signal_failures",
    "radial_mse_lower",
    "radial_mse_upper",
    "radial_leading",
    "upper_uniform",
    "upper_general",
    "lower_limit_over_N2",
    "general_radial_lower",
    "linear_floor",
    "one_dim_endpoint",
    "one_dim_worst",
    "delta",
];

fn est_cells(e: Option<Estimate>) -> [Cell; 2] {
    match e {
        Some(e) => [e.mean.into(), e.std_error.into()],
        None => [Cell::Empty, Cell::Empty],
    }
}

impl SweepOutput {
    pub fn table(&self) -> Table {
        let delta = self.config.delta;
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let th = &r.theory;
                let mut cells: Vec<Cell> = vec![r.d.into(), r.n.into(), r.trials.into(), r.seed.into()];
                cells.extend(est_cells(Some(r.w2)));
                cells.extend(est_cells(Some(r.r2)));
                cells.extend(est_cells(r.consistent));
                cells.extend(est_cells(r.rg));
                cells.extend(est_cells(r.linear));
                let has_consistent = r.consistent.is_some();
                cells.push(if has_consistent { r.certificate_failures.into() } else { Cell::Empty });
                cells.push(r.signal_failures.into());
                cells.push(th.radial.map(|t| t.lower()).into());
                cells.push(th.radial.map(|t| t.upper()).into());
                cells.push(th.radial.map(|t| t.leading).into());
                cells.push(th.upper_uniform.into());
                cells.push(th.upper_general.into());
                cells.push(th.lower_limit_over_n2.into());
                cells.push(general_radial_lower(r.n, delta).into());
                cells.push(th.linear_floor.into());
                cells.push(th.one_dim.map(|o| o.endpoint).into());
                cells.push(th.one_dim.map(|o| o.worst).into());
                cells.push(delta.into());
                cells
            })
            .collect();
        Table { config_json: self.config.to_json(), header: MSE_HEADER.to_vec(), rows }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub d: usize,
    pub theta: f64,
    pub n: usize,
    pub estimate: CoverageEstimate,
    pub net_size: Option<usize>,
    pub bcl_bound: Option<f64>,
    pub simple_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageOutput {
    pub config: CoverageConfig,
    pub rows: Vec<CoverageRow>,
}

/// Non-coverage frequencies for every `(θ, N)` pair, row index
/// `i_θ·|N-list| + i_N`. For `d ≥ 3` each row builds its own net from
/// `stream(seed, [row, NET_STREAM_KEY])`.
pub fn run_coverage_sweep(cfg: &CoverageConfig) -> Result<CoverageOutput> {
    cfg.validate()?;
    let pool = thread_pool(cfg.workers)?;
    let mut rows = Vec::new();
    for (i, &theta) in cfg.theta.iter().enumerate() {
        for (j, &n) in cfg.n_list.iter().enumerate() {
            let row = (i * cfg.n_list.len() + j) as u64;
            let net = if cfg.d == 2 {
                None
            } else {
                Some(build_geodesic_net(cfg.d, cfg.net_eps, &mut stream(cfg.seed, &[row, NET_STREAM_KEY]))?)
            };
            let classes = par_trials(&pool, cfg.trials, |t| {
                Ok(coverage_trial(n, cfg.d, theta, net.as_ref(), &mut stream(cfg.seed, &[row, t]))?)
            })?;
            rows.push(CoverageRow {
                d: cfg.d,
                theta,
                n,
                estimate: CoverageEstimate::from_classes(classes)?,
                net_size: net.as_ref().map(|n| n.len()),
                bcl_bound: if n >= cfg.d { bcl_noncoverage_bound(n, cfg.d, theta, BCL_QUAD_TOL).ok() } else { None },
                simple_bound: simple_noncoverage_bound(n, cfg.d).ok(),
            });
        }
    }
    Ok(CoverageOutput { config: cfg.clone(), rows })
}

pub const COVERAGE_HEADER: [&str; 14] = [
    "d",
    "theta",
    "N",
    "trials",
    "noncover",
    "cover",
    "indeterminate",
    "estimate",
    "lower",
    "upper",
    "std_error",
    "bcl_bound",
    "simple_bound",
    "net_size",
];

impl CoverageOutput {
    pub fn table(&self) -> Table {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let e = &r.estimate;
                vec![
                    r.d.into(),
                    r.theta.into(),
                    r.n.into(),
                    e.trials.into(),
                    e.noncover_count.into(),
                    e.cover_count.into(),
                    e.indeterminate_count.into(),
                    e.point_estimate.into(),
                    e.lower().into(),
                    e.upper().into(),
                    e.std_error.into(),
                    r.bcl_bound.into(),
                    r.simple_bound.into(),
                    r.net_size.map_or(Cell::Empty, Cell::from),
                ]
            })
            .collect();
        Table { config_json: self.config.to_json(), header: COVERAGE_HEADER.to_vec(), rows }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalPoint {
    pub lambda: f64,
    pub exceed: u64,
    pub frequency: f64,
    pub std_error: f64,
    pub theory: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialOutput {
    pub config: RadialConfig,
    pub survival: Vec<SurvivalPoint>,
    pub r2: Estimate,
    pub terms: RadialMseTerms,
    /// Present when the run certified consistent estimates.
    pub certificate_failures: Option<u64>,
    pub signal_failures: u64,
}

struct RadialTrial {
    r: f64,
    certified: bool,
    signal_ok: bool,
}

/// The law of `R_N(e₁)` under uniform directions: survival frequencies at
/// each threshold and the mean of `R_N²`.
pub fn run_radial(cfg: &RadialConfig) -> Result<RadialOutput> {
    cfg.validate()?;
    let pool = thread_pool(cfg.workers)?;
    let x = sweep_signal(cfg.d);
    let e1 = UnitVector::basis(cfg.d, 0)?;
    let trials = par_trials(&pool, cfg.trials, |t| {
        let mut rng = stream(cfg.seed, &[0, t]);
        let inst = draw_instance(&x, cfg.n, cfg.delta, &DirectionLaw::UniformSphere, &mut rng)?;
        let r = radial_extent(&error_polytope(&inst), &e1);
        let certified = if cfg.certify {
            let rep = consistent_estimate(&inst, &default_start(&inst), CERTIFICATE_TOL, MAX_PASSES)?;
            rep.consistent && inst.is_consistent(&rep.estimate, CERTIFICATE_TOL)?
        } else {
            true
        };
        Ok(RadialTrial { r, certified, signal_ok: inst.is_consistent(&x, CERTIFICATE_TOL)? })
    })?;
    let survival = cfg
        .lambda
        .iter()
        .map(|&lambda| {
            let exceed = trials.iter().filter(|t| t.r > lambda).count() as u64;
            let p = exceed as f64 / cfg.trials as f64;
            Ok(SurvivalPoint {
                lambda,
                exceed,
                frequency: p,
                std_error: binomial_std_error(p, cfg.trials),
                theory: radial_survival(lambda, cfg.n, cfg.d, cfg.delta)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RadialOutput {
        config: cfg.clone(),
        survival,
        r2: Estimate::of(trials.iter().map(|t| t.r * t.r)),
        terms: theorem_radial_mse(cfg.n, cfg.d, cfg.delta)?,
        certificate_failures: cfg.certify.then(|| trials.iter().filter(|t| !t.certified).count() as u64),
        signal_failures: trials.iter().filter(|t| !t.signal_ok).count() as u64,
    })
}

pub const RADIAL_HEADER: [&str; 10] = [
    "lambda",
    "exceed",
    "trials",
    "frequency",
    "std_error",
    "survival_theory",
    "R2_mean",
    "R2_std_error",
    "radial_mse_lower",
    "radial_mse_upper",
];

impl RadialOutput {
    pub fn table(&self) -> Table {
        let rows = self
            .survival
            .iter()
            .map(|s| {
                vec![
                    s.lambda.into(),
                    s.exceed.into(),
                    self.config.trials.into(),
                    s.frequency.into(),
                    s.std_error.into(),
                    s.theory.into(),
                    self.r2.mean.into(),
                    self.r2.std_error.into(),
                    self.terms.lower().into(),
                    self.terms.upper().into(),
                ]
            })
            .collect();
        Table { config_json: self.config.to_json(), header: RADIAL_HEADER.to_vec(), rows }
    }

    /// `E|R_N|²` inside `[terms.lower(), terms.upper()]` widened by `k` standard errors.
    pub fn r2_in_interval(&self, k: f64) -> bool {
        let slack = k * self.r2.std_error;
        self.r2.mean >= self.terms.lower() - slack && self.r2.mean <= self.terms.upper() + slack
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demo1dOutput {
    pub config: Demo1dConfig,
    /// Squared distance from the signal to the lower interval endpoint.
    pub endpoint: Estimate,
    /// Squared distance to the farther endpoint, `|w_N|²`.
    pub worst: Estimate,
    pub exact: OneDimMse,
}

impl Demo1dOutput {
    pub fn endpoint_pass(&self) -> bool {
        self.endpoint.within(self.exact.endpoint, 3.0)
    }

    pub fn worst_pass(&self) -> bool {
        self.worst.within(self.exact.worst, 3.0)
    }
}

/// One-dimensional reconstruction with `φ_n = +1`: the consistent set is an
/// interval `[A, B]`; compares the squared errors of the endpoint `A` and of
/// the worst point against their exact means.
pub fn run_demo_1d(cfg: &Demo1dConfig) -> Result<Demo1dOutput> {
    let pool = thread_pool(cfg.workers)?;
    let plus = UnitVector::basis(1, 0)?;
    let law = DirectionLaw::FixedList(vec![plus.clone(); cfg.n]);
    let minus = plus.antipode();
    let x = sweep_signal(1);
    let trials = par_trials(&pool, cfg.trials, |t| {
        let inst: Instance = draw_instance(&x, cfg.n, cfg.delta, &law, &mut stream(cfg.seed, &[0, t]))?;
        let slabs = error_polytope(&inst);
        let w = worst_case_error_exact(&slabs, &EnumerationCaps::default())?.value;
        // x − A is the extent of the error polytope towards −1
        let to_lower = radial_extent(&slabs, &minus);
        Ok((to_lower * to_lower, w * w))
    })?;
    Ok(Demo1dOutput {
        config: cfg.clone(),
        endpoint: Estimate::of(trials.iter().map(|t| t.0)),
        worst: Estimate::of(trials.iter().map(|t| t.1)),
        exact: one_dim_mse_exact(cfg.n, cfg.delta)?,
    })
}

/// Every closed-form quantity for `(d, N, δ)` and the given cap radii, as
/// `(name, value)` rows; `None` when a formula does not apply.
pub fn bounds_table(d: usize, n: usize, delta: f64, thetas: &[f64]) -> Result<Vec<(String, Option<f64>)>> {
    if d == 0 {
        return Err(HarnessError::config("d", "must be at least 1"));
    }
    if n == 0 {
        return Err(HarnessError::config("n", "must be positive"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(HarnessError::config("delta", "must be positive and finite"));
    }
    let th = TheoryColumns::new(d, n, delta);
    let mut out: Vec<(String, Option<f64>)> = vec![
        ("gamma_ratio_constant".into(), gamma_ratio_constant(d).ok()),
        ("radial_leading".into(), th.radial.map(|t| t.leading)),
        ("radial_alpha_low".into(), th.radial.map(|t| t.alpha_low)),
        ("radial_alpha_high".into(), th.radial.map(|t| t.alpha_high)),
        ("radial_mse_lower".into(), th.radial.map(|t| t.lower())),
        ("radial_mse_upper".into(), th.radial.map(|t| t.upper())),
        ("radial_survival_at_delta".into(), if d >= 2 { radial_survival(delta, n, d, delta).ok() } else { None }),
        ("general_radial_lower".into(), Some(general_radial_lower(n, delta))),
        ("mse_lower_limit".into(), mse_lower_limit(d, delta).ok()),
        ("mse_lower_limit_over_N2".into(), th.lower_limit_over_n2),
        ("radial_mse_limit".into(), radial_mse_limit(d, delta).ok()),
        ("mse_lower_limit_weak".into(), recon_core::bounds::mse_lower_limit_weak(d, delta).ok()),
        ("mse_upper_uniform".into(), th.upper_uniform),
        ("mse_upper_general".into(), th.upper_general),
        ("linear_floor".into(), Some(th.linear_floor)),
        ("one_dim_endpoint".into(), th.one_dim.map(|o| o.endpoint)),
        ("one_dim_worst".into(), th.one_dim.map(|o| o.worst)),
        ("simple_bound_min_N".into(), Some(simple_bound_min_n(d) as f64)),
        ("simple_noncoverage_bound".into(), simple_noncoverage_bound(n, d).ok()),
    ];
    for &theta in thetas {
        let v = if d >= 2 && n >= d { bcl_noncoverage_bound(n, d, theta, BCL_QUAD_TOL).ok() } else { None };
        out.push((format!("bcl_noncoverage_bound(theta={theta})"), v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{LawSpec, Overrides};

    fn small_sweep(workers: usize) -> SweepConfig {
        SweepConfig::from_overrides(&Overrides {
            d: Some(2),
            n_list: Some(vec![4, 8]),
            trials: Some(100),
            seed: Some(5),
            workers: Some(workers),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn sweep_is_worker_independent() {
        let a = run_mse_sweep(&small_sweep(1)).unwrap().table().render();
        let b = run_mse_sweep(&small_sweep(4)).unwrap().table().render();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_row_invariants() {
        let out = run_mse_sweep(&small_sweep(2)).unwrap();
        for r in &out.rows {
            let c = r.consistent.unwrap();
            // the consistent estimate lies in the polytope up to the certificate tolerance
            assert!(c.mean <= r.w2.mean + 1e-6, "{c:?} {:?}", r.w2);
            let se = (r.w2.std_error.powi(2) + r.r2.std_error.powi(2)).sqrt();
            assert!(r.w2.mean >= r.r2.mean - 3.0 * se);
            assert_eq!(r.certificate_failures, 0);
            assert_eq!(r.signal_failures, 0);
        }
    }

    #[test]
    fn capacity_rows_are_skipped() {
        let mut cfg = small_sweep(1);
        cfg.max_systems = 100; // C(8,2) = 28 fits, C(16,2) = 120 does not
        let out = run_mse_sweep(&cfg).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].n, 8);
        cfg.max_systems = 10;
        assert!(matches!(run_mse_sweep(&cfg), Err(HarnessError::Runtime(_))));
    }

    #[test]
    fn theory_columns_applicability() {
        let th = TheoryColumns::new(3, 4, 1.0);
        assert!(th.upper_uniform.is_none());
        assert!(th.radial.is_some());
        assert!(TheoryColumns::new(3, 5, 1.0).upper_uniform.is_some());
        let one = TheoryColumns::new(1, 10, 1.0);
        assert_eq!(one.one_dim.unwrap().worst, 14.0 / 132.0);
        assert!(one.radial.is_none());
        assert_eq!(TheoryColumns::new(3, 12, 1.0).linear_floor, 0.25);
    }

    #[test]
    fn one_dim_sweep_matches_exact_law() {
        let cfg = SweepConfig::from_overrides(&Overrides {
            d: Some(1),
            n_list: Some(vec![10]),
            trials: Some(20_000),
            seed: Some(3),
            workers: Some(4),
            estimators: Some(vec!["consistent".into()]),
            ..Default::default()
        })
        .unwrap();
        let out = run_mse_sweep(&cfg).unwrap();
        let r = &out.rows[0];
        assert!(r.w2.within(14.0 / 132.0, 3.0), "{:?}", r.w2);
        let table = out.table().render();
        assert!(table.lines().nth(2).unwrap().ends_with(&crate::csv::fmt_f64(1.0)));
    }

    #[test]
    fn coverage_matches_core_sequential_run() {
        let cfg = CoverageConfig::from_overrides(&Overrides {
            d: Some(3),
            theta: Some(vec![1.2]),
            n_list: Some(vec![1, 6]),
            trials: Some(200),
            net_eps: Some(0.3),
            seed: Some(11),
            workers: Some(3),
            ..Default::default()
        })
        .unwrap();
        let out = run_coverage_sweep(&cfg).unwrap();
        for (row, r) in out.rows.iter().enumerate() {
            let seq = recon_core::coverage::coverage_noncover_mc(r.n, 3, 1.2, 200, 0.3, 11, row as u64).unwrap();
            assert_eq!(r.estimate, seq);
        }
        assert_eq!(out.rows[0].estimate.noncover_count, 200);
        assert!(out.rows[0].bcl_bound.is_none());
    }

    #[test]
    fn coverage_half_circle_near_stevens() {
        let cfg = CoverageConfig::from_overrides(&Overrides {
            d: Some(2),
            theta: Some(vec![std::f64::consts::FRAC_PI_2 - 1e-12]),
            n_list: Some(vec![5]),
            trials: Some(20_000),
            seed: Some(2),
            workers: Some(4),
            ..Default::default()
        })
        .unwrap();
        let e = run_coverage_sweep(&cfg).unwrap().rows[0].estimate;
        assert!((e.point_estimate - 5.0 / 16.0).abs() <= 3.0 * e.std_error);
    }

    #[test]
    fn radial_survival_and_interval() {
        let cfg = RadialConfig::from_overrides(&Overrides {
            d: Some(3),
            n: Some(10),
            trials: Some(20_000),
            seed: Some(4),
            workers: Some(4),
            ..Default::default()
        })
        .unwrap();
        let out = run_radial(&cfg).unwrap();
        for s in &out.survival {
            assert!((s.frequency - s.theory).abs() <= 3.0 * s.std_error + 1e-12, "{s:?}");
        }
        assert!(out.r2_in_interval(3.0));
        assert_eq!(out.certificate_failures, None);
        assert_eq!(out.signal_failures, 0);
    }

    #[test]
    fn demo_1d_small() {
        let cfg = Demo1dConfig { n: 10, trials: 20_000, delta: 1.0, seed: 7, workers: 2 };
        let out = run_demo_1d(&cfg).unwrap();
        assert!(out.endpoint_pass() && out.worst_pass(), "{out:?}");
    }

    #[test]
    fn bounds_table_contents() {
        let t = bounds_table(3, 1000, 1.0, &[0.5]).unwrap();
        let get = |k: &str| t.iter().find(|(n, _)| n == k).unwrap().1;
        assert!((get("mse_lower_limit").unwrap() - 8.0).abs() < 1e-12);
        assert!((get("mse_upper_uniform").unwrap() - 8.7625).abs() < 1e-3);
        assert!(get("one_dim_worst").is_none());
        assert!(get("bcl_noncoverage_bound(theta=0.5)").is_some());
        assert!(bounds_table(0, 3, 1.0, &[]).is_err());
    }

    #[test]
    fn law_from_file_is_used() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("dirs.txt");
        std::fs::write(&p, "1 0\n0 1\n").unwrap();
        let mut cfg = small_sweep(1);
        cfg.n_list = vec![2];
        cfg.trials = 2000;
        cfg.law = LawSpec::File(p);
        let out = run_mse_sweep(&cfg).unwrap();
        // a square of half-width δ around (ε₁, ε₂): E W² = 2 E(1 + |ε|)² = 14/3
        let w2 = out.rows[0].w2;
        assert!(w2.within(14.0 / 3.0, 3.0), "{w2:?}");
    }
}
