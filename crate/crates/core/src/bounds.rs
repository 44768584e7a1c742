//! Closed-form error laws and bounds for consistent reconstruction with
//! i.i.d. random directions.
//!
//! Everything here is a pure function of `(N, d, δ, …)`. Large powers are
//! formed as exponentials of log sums so the sweep ranges (`d ≤ 64`,
//! `N ≤ 10⁴`) neither overflow nor underflow prematurely.

use core::f64::consts::{LN_2, PI};

use rand::Rng;

use crate::estimators::DualFrame;
use crate::measurement::DirectionLaw;
use crate::quad::adaptive_simpson;
use crate::sphere::{cap_measure, check_dim, gamma_ratio_constant, UnitVector};
use crate::{Error, Result};

/// Default absolute tolerance for the `F_{N,d-1}` quadrature.
pub const BCL_QUAD_TOL: f64 = 1e-12;

/// Accuracy requested from the inner cap-measure integrals inside `F`.
const INNER_CAP_TOL: f64 = 1e-13;

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension { found: d, requirement: "d >= 2" });
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain { name: "delta", value: delta, domain: "(0, inf)" });
    }
    Ok(())
}

/// `ln C(n, k)` as a sum of logs, exact enough for `n` up to `10⁶`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| libm::log((n - i) as f64 / (i + 1) as f64)).sum()
}

/// Constants `(α, s)` of the small-ball condition
/// `Pr(|⟨x, φ⟩| ≤ t) ≤ α tˢ` for all unit `x` and `t ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityParams {
    alpha: f64,
    s: f64,
}

impl AdmissibilityParams {
    pub fn new(alpha: f64, s: f64) -> Result<Self> {
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::Domain { name: "alpha", value: alpha, domain: "[1, inf)" });
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Domain { name: "s", value: s, domain: "(0, inf)" });
        }
        Ok(AdmissibilityParams { alpha, s })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// Admissibility constants for directions uniform on `𝕊^{d-1}`:
/// `α = 1` on the circle and `α = 2C_d` above it, `s = 1` throughout.
pub fn uniform_admissibility(d: usize) -> Result<AdmissibilityParams> {
    check_d(d)?;
    let alpha = if d == 2 { 1.0 } else { 2.0 * gamma_ratio_constant(d)? };
    AdmissibilityParams::new(alpha, 1.0)
}

/// Monte Carlo estimate of `Pr(|⟨x, φ⟩| ≤ t)` for `φ` drawn from `law`.
pub fn small_ball_frequency<R: Rng + ?Sized>(
    law: &DirectionLaw,
    x: &UnitVector,
    t: f64,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Domain { name: "samples", value: 0.0, domain: ">= 1" });
    }
    let hits = law
        .draw(x.dim(), samples, rng)?
        .iter()
        .filter(|phi| phi.dot(x.as_slice()).abs() <= t)
        .count();
    Ok(hits as f64 / samples as f64)
}

/// `2^{1-N} Σ_{k<d} C(N-1, k)`, the first term of [`bcl_noncoverage_bound`]:
/// the probability that `N` uniform points all lie in some hemisphere.
///
/// The binomials are accumulated as exact integers while they fit in an
/// `f64` mantissa, so e.g. `N = d` gives exactly 1.
pub fn bcl_hemisphere_term(n: usize, d: usize) -> Result<f64> {
    check_d(d)?;
    if n == 0 {
        return Err(Error::Domain { name: "N", value: 0.0, domain: "N >= 1" });
    }
    let m = (n - 1) as u64;
    let (mut c, mut sum) = (1.0f64, 0.0f64);
    for k in 0..(d as u64).min(m + 1) {
        if k > 0 {
            c = c * (m - k + 1) as f64 / k as f64;
        }
        sum += c;
    }
    if sum < 9.007_199_254_740_992e15 {
        return Ok(libm::scalbn(sum, -(m as i32)));
    }
    Ok((0..d as u64).map(|k| libm::exp(ln_binomial(m, k) - m as f64 * LN_2)).sum())
}

/// Upper bound on the probability that `N` uniform open caps of angular
/// radius `theta` fail to cover `𝕊^{d-1}`.
///
/// `2^{1-N} Σ_{k<d} C(N-1, k) + C(N, d) (d√(d-1) / 2^{d-1}) F_{N,d-1}(θ)`
/// with `F_{N,d-1}(θ) = ∫_0^{cos θ} (1-t²)^{((d-1)²-2)/2}
/// (1 - r_{d-1}(arccos t))^{N-d-2} dt`. The integral is computed with an
/// absolute error of about `quad_tol`, and to relative accuracy `quad_tol`
/// when it is far smaller than one.
pub fn bcl_noncoverage_bound(n: usize, d: usize, theta: f64, quad_tol: f64) -> Result<f64> {
    check_d(d)?;
    if n < d {
        return Err(Error::Domain { name: "N", value: n as f64, domain: "N >= d" });
    }
    if !(theta > 0.0 && theta < PI / 2.0) {
        return Err(Error::Domain { name: "theta", value: theta, domain: "(0, pi/2)" });
    }
    if !(quad_tol > 0.0) {
        return Err(Error::Domain { name: "quad_tol", value: quad_tol, domain: "(0, inf)" });
    }
    let (nu, du) = (n as u64, d as u64);
    let hemisphere = bcl_hemisphere_term(n, d)?;

    let df = d as f64;
    let e1 = ((df - 1.0) * (df - 1.0) - 2.0) / 2.0;
    let e2 = n as f64 - df - 2.0;
    let ln_g = |t: f64| -> f64 {
        let r = cap_measure(d, libm::acos(t), INNER_CAP_TOL).unwrap_or(0.5);
        e1 * libm::log1p(-t * t) + e2 * libm::log1p(-r)
    };
    let upper = libm::cos(theta);
    // rescale by the largest of a few samples so that tiny integrands
    // keep their relative accuracy
    let shift = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|f| ln_g(f * upper))
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = if shift > 0.0 { quad_tol * libm::exp(-shift) } else { quad_tol };
    let scaled = adaptive_simpson(|t| libm::exp(ln_g(t) - shift), 0.0, upper, tol);
    let ln_front = ln_binomial(nu, du) + libm::log(df) + 0.5 * libm::log(df - 1.0) - (df - 1.0) * LN_2;
    let f_term = if scaled > 0.0 { libm::exp(ln_front + shift + libm::log(scaled)) } else { 0.0 };
    Ok(hemisphere + f_term)
}

/// Smallest `N` for which [`simple_noncoverage_bound`] holds: `⌈2d / ln(12/11)⌉`.
pub fn simple_bound_min_n(d: usize) -> usize {
    libm::ceil(2.0 * d as f64 / libm::log(12.0 / 11.0)) as usize
}

/// `2√d · 13^d · (11/12)^{N/2}`, a bound on the non-coverage probability for
/// every `θ ∈ [arccos(1/√d), π/2)` once `N ≥ 2d / ln(12/11)`.
pub fn simple_noncoverage_bound(n: usize, d: usize) -> Result<f64> {
    check_d(d)?;
    if n < simple_bound_min_n(d) {
        return Err(Error::Domain { name: "N", value: n as f64, domain: "N >= 2d/ln(12/11)" });
    }
    let df = d as f64;
    Ok(libm::exp(
        LN_2 + 0.5 * libm::log(df) + df * libm::log(13.0) + 0.5 * n as f64 * libm::log(11.0 / 12.0),
    ))
}

/// `Pr[R_N(ψ) > λ] = (1 - λ C_d / (δ (d-1)))^N` for uniform directions,
/// valid for `0 ≤ λ ≤ 2δ`.
pub fn radial_survival(lambda: f64, n: usize, d: usize, delta: f64) -> Result<f64> {
    check_d(d)?;
    check_delta(delta)?;
    if !(0.0..=2.0 * delta).contains(&lambda) {
        return Err(Error::Domain { name: "lambda", value: lambda, domain: "[0, 2 delta]" });
    }
    let c = gamma_ratio_constant(d)?;
    let base = 1.0 - lambda * c / (delta * (d as f64 - 1.0));
    Ok(libm::exp(n as f64 * libm::log(base)))
}

/// Two-sided description of `E|R_N(ψ)|²` for uniform directions:
/// it lies in `[leading + alpha_low, leading + alpha_high]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialMseTerms {
    pub leading: f64,
    pub alpha_low: f64,
    pub alpha_high: f64,
}

impl RadialMseTerms {
    pub fn lower(&self) -> f64 {
        self.leading + self.alpha_low
    }

    pub fn upper(&self) -> f64 {
        self.leading + self.alpha_high
    }
}

/// Leading term and correction range of `E|R_N|²`, for `N ≥ 3`.
///
/// `alpha_high` carries the constant `54 C_d²` as stated; integrating the
/// tail estimates directly would give `54π² C_d²`. At the sizes exercised
/// here the correction is below the Monte Carlo resolution either way.
pub fn theorem_radial_mse(n: usize, d: usize, delta: f64) -> Result<RadialMseTerms> {
    check_d(d)?;
    check_delta(delta)?;
    if n < 3 {
        return Err(Error::Domain { name: "N", value: n as f64, domain: "N >= 3" });
    }
    let c = gamma_ratio_constant(d)?;
    let (nf, dm1, d2) = (n as f64, d as f64 - 1.0, delta * delta);
    let leading = 2.0 * d2 * dm1 * dm1 / (c * c * (nf + 1.0) * (nf + 2.0));
    let alpha_low = -2.0 * d2 * (2.0 * c / dm1) * libm::exp((nf + 1.0) * libm::log1p(-c / dm1));
    let alpha_high = 2.0 * d2 * 54.0 * c * c * libm::exp(nf * libm::log1p(-2.0 * c / dm1));
    Ok(RadialMseTerms { leading, alpha_low, alpha_high })
}

/// Mean squared radial error lower bound valid for any directions:
/// `8δ² / ((N+1)(N+2))`.
pub fn general_radial_lower(n: usize, delta: f64) -> f64 {
    let nf = n as f64;
    8.0 * delta * delta / ((nf + 1.0) * (nf + 2.0))
}

/// `2δ² ((d-1) / (2C_d))²`, the stated lower constant for
/// `lim inf N² E|W_N|²` under uniform directions.
///
/// The leading term of [`theorem_radial_mse`] actually gives
/// `N² E|R_N|² → 2δ²(d-1)²/C_d²` ([`radial_mse_limit`]), four times this
/// value, so the constant is a valid but conservative lower bound.
pub fn mse_lower_limit(d: usize, delta: f64) -> Result<f64> {
    check_d(d)?;
    let c = gamma_ratio_constant(d)?;
    let r = (d as f64 - 1.0) / (2.0 * c);
    Ok(2.0 * delta * delta * r * r)
}

/// `lim N² E|R_N|² = 2δ²(d-1)²/C_d²`, read off the leading term of
/// [`theorem_radial_mse`].
pub fn radial_mse_limit(d: usize, delta: f64) -> Result<f64> {
    check_d(d)?;
    let c = gamma_ratio_constant(d)?;
    let r = (d as f64 - 1.0) / c;
    Ok(2.0 * delta * delta * r * r)
}

/// The simpler `πδ²(d-1)`, never larger than [`mse_lower_limit`].
pub fn mse_lower_limit_weak(d: usize, delta: f64) -> Result<f64> {
    check_d(d)?;
    Ok(PI * delta * delta * (d as f64 - 1.0))
}

/// Upper bound on `E|W_N|²` for any admissible direction law, `N ≥ (d+2)/s`:
///
/// `10⁵δ²d²(2α)^{2/s} ln²(16(2α)^{1/s}) / ((N+1)(N+2)) + δ² 32^{d+1} (2α)^{(d+1)/s} 2^{-N}`.
pub fn mse_upper_general(n: usize, d: usize, delta: f64, params: &AdmissibilityParams) -> Result<f64> {
    check_d(d)?;
    check_delta(delta)?;
    let (nf, df, s) = (n as f64, d as f64, params.s);
    if nf < (df + 2.0) / s {
        return Err(Error::Domain { name: "N", value: nf, domain: "N >= (d+2)/s" });
    }
    let ln_2a = libm::log(2.0 * params.alpha);
    let ln16 = libm::log(16.0) + ln_2a / s;
    let first = libm::exp(libm::log(1e5) + 2.0 * libm::log(delta * df) + 2.0 * ln_2a / s)
        * ln16
        * ln16
        / ((nf + 1.0) * (nf + 2.0));
    let second = libm::exp(
        2.0 * libm::log(delta) + (df + 1.0) * libm::log(32.0) + (df + 1.0) / s * ln_2a - nf * LN_2,
    );
    Ok(first + second)
}

/// Upper bound on `E|W_N|²` for uniform directions, `N ≥ d+2`:
///
/// `2e¹²δ²d³ / ((N+1)(N+2)) + 26δ² d^{3/2} (11/12)^{N/2} e^{d ln(1024d)/2}`.
pub fn mse_upper_uniform(n: usize, d: usize, delta: f64) -> Result<f64> {
    check_d(d)?;
    check_delta(delta)?;
    if n < d + 2 {
        return Err(Error::Domain { name: "N", value: n as f64, domain: "N >= d+2" });
    }
    let (nf, df) = (n as f64, d as f64);
    let first = libm::exp(12.0 + libm::log(2.0) + 2.0 * libm::log(delta) + 3.0 * libm::log(df))
        / ((nf + 1.0) * (nf + 2.0));
    let second = libm::exp(
        libm::log(26.0)
            + 2.0 * libm::log(delta)
            + 1.5 * libm::log(df)
            + 0.5 * nf * libm::log(11.0 / 12.0)
            + 0.5 * df * libm::log(1024.0 * df),
    );
    Ok(first + second)
}

/// Exact mean squared errors of one-dimensional consistent reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneDimMse {
    /// `E|x - A_N|²` for either interval endpoint.
    pub endpoint: f64,
    /// `E|w_N|²` for the worst point of the interval.
    pub worst: f64,
}

pub fn one_dim_mse_exact(n: usize, delta: f64) -> Result<OneDimMse> {
    if n == 0 {
        return Err(Error::Domain { name: "N", value: 0.0, domain: "N >= 1" });
    }
    let nf = n as f64;
    let denom = (nf + 1.0) * (nf + 2.0);
    Ok(OneDimMse { endpoint: 8.0 * delta * delta / denom, worst: 14.0 * delta * delta / denom })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMse {
    /// `σ² Σ ‖f_n‖²`.
    pub exact: f64,
    /// `d² σ² / N`, attained by unit-norm tight frames.
    pub tight_frame_floor: f64,
}

/// Mean squared error of linear reconstruction with `duals` when each
/// measurement carries independent zero-mean noise of variance `sigma2`.
/// `N` and `d` are read off the frame.
pub fn linear_mse_formulas(duals: &DualFrame, sigma2: f64) -> Result<LinearMse> {
    if !(sigma2 > 0.0) {
        return Err(Error::Domain { name: "sigma2", value: sigma2, domain: "(0, inf)" });
    }
    let n = duals.duals.len();
    let d = duals.duals.first().map_or(0, |f| f.len());
    if n == 0 || d == 0 {
        return Err(Error::RankDeficient { dim: d, detail: "empty dual frame".into() });
    }
    for f in &duals.duals {
        check_dim(d, f.len())?;
    }
    let df = d as f64;
    Ok(LinearMse {
        exact: sigma2 * duals.squared_norm_sum(),
        tight_frame_floor: df * df * sigma2 / n as f64,
    })
}

/// Variance `δ²/3` of noise uniform on `[-δ, δ]`.
pub fn uniform_noise_variance(delta: f64) -> f64 {
    delta * delta / 3.0
}
