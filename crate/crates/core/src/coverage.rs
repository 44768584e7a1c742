//! Bi-caps, coverage of the sphere and non-coverage Monte Carlo.
//!
//! `W_N ≥ λ` exactly when the bi-caps `B_n(λ)` built from the measurement
//! directions fail to cover `𝕊^{d-1}`. On the circle coverage is decided
//! exactly by [`arc_noncoverage_exact_d2`]; in higher dimensions a geodesic
//! net gives a three-way certificate.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use rand::Rng;

use crate::estimators::soft_threshold;
use crate::rng::stream;
use crate::sphere::{build_geodesic_net, cap_contains_raw, check_dim, sample_uniform_direction, GeodesicNet, UnitVector};
use crate::stats::binomial_std_error;
use crate::{Error, Result};

/// Margin by which an arc endpoint must sit inside another arc before the
/// exact circle check calls it covered. Ties are resolved as uncovered.
pub const ARC_TOL: f64 = 1e-12;

/// `Cap(axis, θ⁺) ∪ Cap(-axis, θ⁻)`. A radius of zero means that cap is
/// empty.
#[derive(Debug, Clone, PartialEq)]
pub struct BiCap {
    pub axis: UnitVector,
    pub theta_plus: f64,
    pub theta_minus: f64,
}

impl BiCap {
    pub fn new(axis: UnitVector, theta_plus: f64, theta_minus: f64) -> Result<Self> {
        for (name, v) in [("theta_plus", theta_plus), ("theta_minus", theta_minus)] {
            if !(0.0..=PI / 2.0).contains(&v) {
                return Err(Error::Domain { name, value: v, domain: "[0, pi/2]" });
            }
        }
        Ok(BiCap { axis, theta_plus, theta_minus })
    }

    /// A single cap, with the antipodal side empty.
    pub fn cap(center: UnitVector, theta: f64) -> Result<Self> {
        Self::new(center, theta, 0.0)
    }

    pub fn contains(&self, u: &UnitVector) -> Result<bool> {
        check_dim(self.axis.dim(), u.dim())?;
        Ok(self.contains_raw(u.as_slice()))
    }

    fn contains_raw(&self, u: &[f64]) -> bool {
        let c = self.axis.dot(u);
        (self.theta_plus > 0.0 && c > libm::cos(self.theta_plus))
            || (self.theta_minus > 0.0 && -c > libm::cos(self.theta_minus))
    }

    /// Both radii reduced by `eps`, clamped at zero.
    pub fn shrink(&self, eps: f64) -> BiCap {
        BiCap {
            axis: self.axis.clone(),
            theta_plus: soft_threshold(self.theta_plus, eps),
            theta_minus: soft_threshold(self.theta_minus, eps),
        }
    }

    /// The two caps as circle arcs; only meaningful for `d = 2`.
    pub fn arcs(&self) -> [Arc; 2] {
        let a = self.axis.angle();
        [Arc { center: a, half_width: self.theta_plus }, Arc { center: a + PI, half_width: self.theta_minus }]
    }
}

/// Directions `ψ` for which measurement `n` alone forces `R_N(ψ) < λ`:
/// `θ⁺ = arccos((δ+ε)/λ)` and `θ⁻ = arccos((δ-ε)/λ)`, each zero once the
/// ratio reaches one.
pub fn bicap_from_measurement(epsilon: f64, delta: f64, lambda: f64, axis: UnitVector) -> Result<BiCap> {
    if !(delta > 0.0) || epsilon.abs() > delta {
        return Err(Error::Domain { name: "epsilon", value: epsilon, domain: "[-delta, delta]" });
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain { name: "lambda", value: lambda, domain: "(0, inf)" });
    }
    let radius = |h: f64| if h < lambda { libm::acos(h / lambda) } else { 0.0 };
    BiCap::new(axis, radius(delta + epsilon), radius(delta - epsilon))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoverageOutcome {
    /// The witness lies outside every bi-cap.
    NotCovered(UnitVector),
    /// Every net point lies in a shrunken bi-cap, so the sphere is covered.
    Covered,
    Indeterminate,
}

/// Net-certified coverage decision.
///
/// A net point outside all bi-caps proves non-coverage. If instead every net
/// point sits in some bi-cap shrunk by `shrink_eps ≥` the net resolution,
/// the triangle inequality puts each sphere point in the unshrunk bi-cap.
/// Anything else is reported as indeterminate.
pub fn noncoverage_event(bicaps: &[BiCap], net: &GeodesicNet, shrink_eps: f64) -> Result<CoverageOutcome> {
    if !(shrink_eps >= net.resolution() * (1.0 - 1e-12)) {
        return Err(Error::Domain { name: "shrink_eps", value: shrink_eps, domain: ">= net resolution" });
    }
    for b in bicaps {
        check_dim(net.dim(), b.axis.dim())?;
    }
    let shrunk: Vec<BiCap> = bicaps.iter().map(|b| b.shrink(shrink_eps)).collect();
    let mut certified = true;
    for p in net.points() {
        let u = p.as_slice();
        if !bicaps.iter().any(|b| b.contains_raw(u)) {
            return Ok(CoverageOutcome::NotCovered(p.clone()));
        }
        if certified && !shrunk.iter().any(|b| b.contains_raw(u)) {
            certified = false;
        }
    }
    Ok(if certified { CoverageOutcome::Covered } else { CoverageOutcome::Indeterminate })
}

/// Open arc `(center - half_width, center + half_width)` of the unit circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub center: f64,
    pub half_width: f64,
}

/// Exact test of whether open arcs fail to cover the circle.
///
/// Arcs are swept in order of their start angle, with arcs crossing angle
/// zero also entered shifted by `-2π`. A gap exists when the next start does
/// not lie strictly (by [`ARC_TOL`]) below the reach of the arcs before it.
/// Returns `true` when some point stays uncovered.
pub fn arc_noncoverage_exact_d2(arcs: &[Arc]) -> bool {
    let mut spans: Vec<(f64, f64)> = Vec::with_capacity(2 * arcs.len());
    for a in arcs {
        if a.half_width > PI {
            return false;
        }
        if a.half_width <= 0.0 {
            continue;
        }
        let mut start = libm::fmod(a.center - a.half_width, TAU);
        if start < 0.0 {
            start += TAU;
        }
        let end = start + 2.0 * a.half_width;
        spans.push((start, end));
        if end > TAU {
            spans.push((start - TAU, end - TAU));
        }
    }
    if spans.is_empty() {
        return true;
    }
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut reach = 0.0;
    for &(start, end) in &spans {
        if reach >= TAU {
            break;
        }
        if start >= reach - ARC_TOL {
            return true;
        }
        if end > reach {
            reach = end;
        }
    }
    reach < TAU
}

/// Classification of a single Monte Carlo coverage trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialClass {
    NotCovered,
    Covered,
    Indeterminate,
}

/// Non-coverage counts from a batch of trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageEstimate {
    pub noncover_count: u64,
    pub cover_count: u64,
    pub indeterminate_count: u64,
    pub trials: u64,
    /// `(noncover + indeterminate / 2) / trials`.
    pub point_estimate: f64,
    /// Binomial standard error of the point estimate.
    pub std_error: f64,
}

impl CoverageEstimate {
    pub fn from_counts(noncover_count: u64, cover_count: u64, indeterminate_count: u64) -> Result<Self> {
        let trials = noncover_count + cover_count + indeterminate_count;
        if trials == 0 {
            return Err(Error::Domain { name: "trials", value: 0.0, domain: ">= 1" });
        }
        let p = (noncover_count as f64 + 0.5 * indeterminate_count as f64) / trials as f64;
        Ok(CoverageEstimate {
            noncover_count,
            cover_count,
            indeterminate_count,
            trials,
            point_estimate: p,
            std_error: binomial_std_error(p, trials),
        })
    }

    pub fn from_classes(classes: impl IntoIterator<Item = TrialClass>) -> Result<Self> {
        let (mut n, mut c, mut i) = (0, 0, 0);
        for cls in classes {
            match cls {
                TrialClass::NotCovered => n += 1,
                TrialClass::Covered => c += 1,
                TrialClass::Indeterminate => i += 1,
            }
        }
        Self::from_counts(n, c, i)
    }

    /// Certified non-coverage frequency.
    pub fn lower(&self) -> f64 {
        self.noncover_count as f64 / self.trials as f64
    }

    /// Non-coverage frequency counting every indeterminate trial as uncovered.
    pub fn upper(&self) -> f64 {
        (self.noncover_count + self.indeterminate_count) as f64 / self.trials as f64
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::Domain { name: "theta", value: theta, domain: "(0, pi)" });
    }
    Ok(())
}

/// One trial: drop `n` uniform open caps of radius `theta` and classify.
/// `d = 2` uses the exact arc check and ignores `net`; `d ≥ 3` needs a net.
pub fn coverage_trial<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    theta: f64,
    net: Option<&GeodesicNet>,
    rng: &mut R,
) -> Result<TrialClass> {
    check_theta(theta)?;
    if d == 2 {
        let arcs: Vec<Arc> = (0..n)
            .map(|_| sample_uniform_direction(2, rng).map(|u| Arc { center: u.angle(), half_width: theta }))
            .collect::<Result<_>>()?;
        return Ok(if arc_noncoverage_exact_d2(&arcs) { TrialClass::NotCovered } else { TrialClass::Covered });
    }
    let net = net.ok_or_else(|| Error::Internal("coverage in d >= 3 needs a geodesic net".into()))?;
    check_dim(d, net.dim())?;
    // a cap of radius above π/2 is not a bi-cap; shrinking handles it the same way
    let caps: Vec<(UnitVector, f64)> =
        (0..n).map(|_| sample_uniform_direction(d, rng).map(|u| (u, theta))).collect::<Result<_>>()?;
    let eps = net.resolution();
    let mut certified = true;
    for p in net.points() {
        let u = p.as_slice();
        if !caps.iter().any(|(c, t)| cap_contains_raw(c.as_slice(), *t, u)) {
            return Ok(TrialClass::NotCovered);
        }
        if certified && !caps.iter().any(|(c, t)| cap_contains_raw(c.as_slice(), soft_threshold(*t, eps), u)) {
            certified = false;
        }
    }
    Ok(if certified { TrialClass::Covered } else { TrialClass::Indeterminate })
}

/// Key under which [`coverage_noncover_mc`] derives the stream for its net.
pub const NET_STREAM_KEY: u64 = u64::MAX;

/// Monte Carlo estimate of the probability that `n` uniform caps of radius
/// `theta` leave part of `𝕊^{d-1}` uncovered.
///
/// Trial `t` draws from `stream(master_seed, [row, t])`; the net for
/// `d ≥ 3` comes from `stream(master_seed, [row, NET_STREAM_KEY])`.
pub fn coverage_noncover_mc(
    n: usize,
    d: usize,
    theta: f64,
    trials: u64,
    net_eps: f64,
    master_seed: u64,
    row: u64,
) -> Result<CoverageEstimate> {
    if d < 2 {
        return Err(Error::InvalidDimension { found: d, requirement: "d >= 2" });
    }
    check_theta(theta)?;
    let net = if d == 2 {
        None
    } else {
        Some(build_geodesic_net(d, net_eps, &mut stream(master_seed, &[row, NET_STREAM_KEY]))?)
    };
    let mut classes = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        classes.push(coverage_trial(n, d, theta, net.as_ref(), &mut stream(master_seed, &[row, t]))?);
    }
    CoverageEstimate::from_classes(classes)
}
