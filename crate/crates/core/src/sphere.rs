//! Geometry on the unit sphere `𝕊^{d-1} ⊂ ℝ^d`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::quad::adaptive_simpson;
use crate::{dot, norm, Error, Result};

/// Tolerance on `‖u‖ - 1` accepted at construction.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Absolute tolerance used for the cap-measure quadrature.
pub const CAP_QUAD_TOL: f64 = 1e-10;

/// Default rejection streak, as a multiple of the current net size, that
/// ends greedy net growth.
pub const DEFAULT_STREAK_FACTOR: usize = 200;

/// A point of `𝕊^{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Wraps `coords`, which must already have unit norm.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension { found: 0, requirement: "d >= 1" });
        }
        let n = norm(&coords);
        if !((n - 1.0).abs() <= UNIT_NORM_TOL) {
            return Err(Error::NotUnitNorm { norm: n });
        }
        Ok(UnitVector(coords))
    }

    /// Scales a nonzero vector to unit norm.
    pub fn normalize(mut coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension { found: 0, requirement: "d >= 1" });
        }
        let n = norm(&coords);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NotUnitNorm { norm: n });
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Ok(UnitVector(coords))
    }

    /// The `i`-th standard basis vector of `ℝ^d`.
    pub fn basis(d: usize, i: usize) -> Result<Self> {
        if d == 0 || i >= d {
            return Err(Error::InvalidDimension { found: d, requirement: "d >= 1 and index < d" });
        }
        let mut v = alloc::vec![0.0; d];
        v[i] = 1.0;
        Ok(UnitVector(v))
    }

    /// Point `(cos a, sin a)` of the unit circle.
    pub fn from_angle(angle: f64) -> Self {
        UnitVector(alloc::vec![libm::cos(angle), libm::sin(angle)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn antipode(&self) -> Self {
        UnitVector(self.0.iter().map(|c| -c).collect())
    }

    /// Angle of a 2-D unit vector in `(-π, π]`.
    pub fn angle(&self) -> f64 {
        debug_assert_eq!(self.dim(), 2);
        libm::atan2(self.0[1], self.0[0])
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Draws a direction uniformly from `𝕊^{d-1}` by normalizing a standard
/// Gaussian vector.
pub fn sample_uniform_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<UnitVector> {
    if d == 0 {
        return Err(Error::InvalidDimension { found: 0, requirement: "d >= 1" });
    }
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-150 {
            return Ok(UnitVector(v.into_iter().map(|c| c / n).collect()));
        }
    }
}

/// `arccos⟨u, v⟩` with the inner product clamped to `[-1, 1]`.
pub fn geodesic_distance(u: &UnitVector, v: &UnitVector) -> Result<f64> {
    check_dim(u.dim(), v.dim())?;
    Ok(libm::acos(u.dot(v.as_slice()).clamp(-1.0, 1.0)))
}

/// `C_d = Γ(d/2) / (√π Γ((d-1)/2))`, the normalizing constant of the
/// surface measure of caps.
pub fn gamma_ratio_constant(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidDimension { found: d, requirement: "d >= 2" });
    }
    let d = d as f64;
    Ok(libm::exp(libm::lgamma(d / 2.0) - libm::lgamma((d - 1.0) / 2.0)) / libm::sqrt(PI))
}

/// Relative surface measure `r_{d-1}(θ)` of an open cap of angular radius
/// `theta ∈ (0, π/2)`.
pub fn cap_relative_measure(d: usize, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < PI / 2.0) {
        return Err(Error::Domain { name: "theta", value: theta, domain: "(0, pi/2)" });
    }
    cap_measure(d, theta, CAP_QUAD_TOL)
}

/// Same integral without the domain check; valid for `theta ∈ [0, π/2]`.
pub(crate) fn cap_measure(d: usize, theta: f64, tol: f64) -> Result<f64> {
    let c = gamma_ratio_constant(d)?;
    match d {
        2 => return Ok(c * theta),
        3 => return Ok(c * (1.0 - libm::cos(theta))),
        _ => {}
    }
    let k = (d - 2) as f64;
    Ok(c * adaptive_simpson(|u| libm::pow(libm::sin(u), k), 0.0, theta, tol / c))
}

/// Density of `|⟨e, φ⟩|` for `φ` uniform on `𝕊^{d-1}`.
pub fn inner_product_abs_pdf(d: usize, z: f64) -> Result<f64> {
    let c = gamma_ratio_constant(d)?;
    if !(0.0..=1.0).contains(&z) {
        return Ok(0.0);
    }
    Ok(2.0 * c * libm::pow((1.0 - z * z).max(0.0), (d as f64 - 3.0) / 2.0))
}

/// Open spherical cap `{u : ⟨u, center⟩ > cos θ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cap {
    center: UnitVector,
    radius: f64,
}

impl Cap {
    /// `radius ∈ [0, π)`; a zero radius is the empty cap.
    pub fn new(center: UnitVector, radius: f64) -> Result<Self> {
        if !(0.0..PI).contains(&radius) {
            return Err(Error::Domain { name: "cap radius", value: radius, domain: "[0, pi)" });
        }
        Ok(Cap { center, radius })
    }

    pub fn center(&self) -> &UnitVector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, point: &UnitVector) -> Result<bool> {
        check_dim(self.center.dim(), point.dim())?;
        Ok(cap_contains_raw(self.center.as_slice(), self.radius, point.as_slice()))
    }
}

/// Open-cap membership; radius 0 is empty.
#[inline]
pub(crate) fn cap_contains_raw(center: &[f64], radius: f64, point: &[f64]) -> bool {
    radius > 0.0 && dot(center, point) > libm::cos(radius)
}

/// Free-function form of [`Cap::contains`].
pub fn cap_contains(cap: &Cap, point: &UnitVector) -> Result<bool> {
    cap.contains(point)
}

/// Finite point set whose geodesic `resolution` neighbourhoods cover the
/// sphere.
#[derive(Debug, Clone)]
pub struct GeodesicNet {
    points: Vec<UnitVector>,
    resolution: f64,
}

impl GeodesicNet {
    pub fn points(&self) -> &[UnitVector] {
        &self.points
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Geodesic distance from `u` to the closest net point.
    pub fn distance_to(&self, u: &UnitVector) -> f64 {
        let best = self.points.iter().map(|p| p.dot(u.as_slice())).fold(-1.0f64, f64::max);
        libm::acos(best.clamp(-1.0, 1.0))
    }

    /// `(8/ε)^{d-1}`.
    pub fn cardinality_bound(d: usize, eps: f64) -> f64 {
        libm::exp((d as f64 - 1.0) * libm::log(8.0 / eps))
    }
}

/// Builds a geodesic `eps`-net with the default rejection streak.
///
/// On the circle the net is the `⌈π/ε⌉` equally spaced points starting at
/// angle 0. For `d ≥ 3` it is a greedy `eps`-separated set grown from
/// uniform candidates, stopping once `max(200 × |net|, 10⁶)` candidates in a
/// row have been rejected.
pub fn build_geodesic_net<R: Rng + ?Sized>(d: usize, eps: f64, rng: &mut R) -> Result<GeodesicNet> {
    build_geodesic_net_with(d, eps, DEFAULT_STREAK_FACTOR, rng)
}

pub fn build_geodesic_net_with<R: Rng + ?Sized>(
    d: usize,
    eps: f64,
    streak_factor: usize,
    rng: &mut R,
) -> Result<GeodesicNet> {
    if d < 2 {
        return Err(Error::InvalidDimension { found: d, requirement: "d >= 2" });
    }
    if !(eps > 0.0 && eps <= PI / 2.0) {
        return Err(Error::Domain { name: "eps", value: eps, domain: "(0, pi/2]" });
    }
    let points = if d == 2 {
        // guard against π/(π/k) landing a hair above k
        let m = libm::ceil((PI / eps) - 1e-9).max(1.0) as usize;
        (0..m).map(|k| UnitVector::from_angle(2.0 * PI * k as f64 / m as f64)).collect()
    } else {
        greedy_separated(d, eps, streak_factor.max(1), rng)?
    };
    let bound = GeodesicNet::cardinality_bound(d, eps);
    if points.len() as f64 > bound {
        return Err(Error::Internal(format!(
            "net of {} points exceeds the (8/eps)^(d-1) bound {bound}",
            points.len()
        )));
    }
    Ok(GeodesicNet { points, resolution: eps })
}

fn greedy_separated<R: Rng + ?Sized>(
    d: usize,
    eps: f64,
    streak_factor: usize,
    rng: &mut R,
) -> Result<Vec<UnitVector>> {
    let cos_eps = libm::cos(eps);
    let mut grid = CellGrid::new(2.0 * libm::sin(eps / 2.0));
    let mut points: Vec<UnitVector> = Vec::new();
    let mut streak = 0usize;
    loop {
        let c = sample_uniform_direction(d, rng)?;
        // distance < eps  ⇔  ⟨c, p⟩ > cos eps
        let too_close = grid.any_near(c.as_slice(), |i| points[i].dot(c.as_slice()) > cos_eps);
        if too_close {
            streak += 1;
            if streak >= (streak_factor * points.len()).max(MIN_REJECTION_STREAK) {
                return Ok(points);
            }
        } else {
            grid.insert(c.as_slice(), points.len());
            points.push(c);
            streak = 0;
        }
    }
}

/// Minimum rejection streak before greedy growth may stop. The uncovered
/// mass left behind is of order `1 / streak`.
pub const MIN_REJECTION_STREAK: usize = 1_000_000;

/// Uniform grid over the first three coordinates. Two points at chord
/// distance below `chord` sit in neighbouring cells.
struct CellGrid {
    side: usize,
    width: f64,
    cells: Vec<Vec<u32>>,
}

impl CellGrid {
    const MAX_SIDE: usize = 128;

    fn new(chord: f64) -> Self {
        let width = chord.max(2.0 / Self::MAX_SIDE as f64);
        let side = (libm::ceil(2.0 / width) as usize).clamp(1, Self::MAX_SIDE);
        CellGrid { side, width, cells: alloc::vec![Vec::new(); side * side * side] }
    }

    fn coord(&self, x: f64) -> usize {
        (((x + 1.0) / self.width) as usize).min(self.side - 1)
    }

    fn key(&self, p: &[f64]) -> [usize; 3] {
        [self.coord(p[0]), self.coord(p[1]), self.coord(p.get(2).copied().unwrap_or(0.0))]
    }

    fn insert(&mut self, p: &[f64], index: usize) {
        let [a, b, c] = self.key(p);
        let s = self.side;
        self.cells[(a * s + b) * s + c].push(index as u32);
    }

    fn any_near(&self, p: &[f64], mut hit: impl FnMut(usize) -> bool) -> bool {
        let s = self.side;
        let [a, b, c] = self.key(p);
        let span = |i: usize| i.saturating_sub(1)..=(i + 1).min(s - 1);
        for i in span(a) {
            for j in span(b) {
                for k in span(c) {
                    if self.cells[(i * s + j) * s + k].iter().any(|&q| hit(q as usize)) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use crate::rng::stream;
    use alloc::vec;
    use std::vec::Vec;

    #[test]
    fn unit_vector_validation() {
        assert!(UnitVector::new(vec![0.6, 0.8]).is_ok());
        assert!(matches!(UnitVector::new(vec![1.0, 1.0]), Err(Error::NotUnitNorm { .. })));
        assert!(matches!(UnitVector::new(vec![]), Err(Error::InvalidDimension { .. })));
        assert!(UnitVector::normalize(vec![0.0, 0.0]).is_err());
        let u = UnitVector::normalize(vec![3.0, 4.0]).unwrap();
        assert_eq!(u.as_slice(), &[0.6, 0.8]);
    }

    #[test]
    fn zero_dimension_rejected() {
        let mut rng = stream(1, &[]);
        assert!(matches!(
            sample_uniform_direction(0, &mut rng),
            Err(Error::InvalidDimension { found: 0, .. })
        ));
    }

    #[test]
    fn one_dimensional_sphere_is_two_points() {
        let mut rng = stream(11, &[0]);
        let t = 20_000;
        let mut plus = 0;
        for _ in 0..t {
            let u = sample_uniform_direction(1, &mut rng).unwrap();
            let c = u.as_slice()[0];
            assert!(c == 1.0 || c == -1.0);
            if c > 0.0 {
                plus += 1;
            }
        }
        let freq = plus as f64 / t as f64;
        assert!((freq - 0.5).abs() <= 4.0 / (t as f64).sqrt());
    }

    #[test]
    fn samples_are_unit_and_centered() {
        let mut rng = stream(12, &[0]);
        let t = 100_000;
        let mut mean = [0.0; 3];
        for _ in 0..t {
            let u = sample_uniform_direction(3, &mut rng).unwrap();
            assert!((norm(u.as_slice()) - 1.0).abs() < 1e-12);
            for (m, c) in mean.iter_mut().zip(u.as_slice()) {
                *m += c / t as f64;
            }
        }
        assert!(norm(&mean) <= 4.0 / (t as f64).sqrt() * 3f64.sqrt());
    }

    #[test]
    fn abs_inner_product_uniform_for_d3() {
        // density of |⟨e1, φ⟩| is ≡ 1 on [0,1] when d = 3
        let mut rng = stream(13, &[0]);
        let t = 100_000;
        let mut z: Vec<f64> = (0..t)
            .map(|_| sample_uniform_direction(3, &mut rng).unwrap().as_slice()[0].abs())
            .collect();
        z.sort_by(f64::total_cmp);
        let ks = z
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let lo = i as f64 / t as f64;
                let hi = (i + 1) as f64 / t as f64;
                (v - lo).abs().max((hi - v).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn geodesic_distance_examples() {
        let u = UnitVector::new(vec![1.0, 0.0]).unwrap();
        let v = UnitVector::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(geodesic_distance(&u, &u).unwrap(), 0.0);
        assert_eq!(geodesic_distance(&u, &u.antipode()).unwrap(), PI);
        assert!((geodesic_distance(&u, &v).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(geodesic_distance(&u, &v).unwrap(), geodesic_distance(&v, &u).unwrap());
        let w = UnitVector::basis(3, 0).unwrap();
        assert!(matches!(geodesic_distance(&u, &w), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn geodesic_distance_clamps_rounding() {
        let u = UnitVector::normalize(vec![0.1, 0.2, 0.3]).unwrap();
        let d = geodesic_distance(&u, &u).unwrap();
        assert!(d.is_finite() && d < 1e-7);
    }

    #[test]
    fn gamma_ratio_small_dimensions() {
        assert!((gamma_ratio_constant(2).unwrap() - 1.0 / PI).abs() < 1e-14);
        assert!((gamma_ratio_constant(3).unwrap() - 0.5).abs() < 1e-14);
        assert!(gamma_ratio_constant(1).is_err());
    }

    #[test]
    fn gamma_ratio_bracket_and_limit() {
        for d in 2..=64usize {
            let df = d as f64;
            let c = gamma_ratio_constant(d).unwrap();
            let hi = ((df - 1.0) / (2.0 * PI)).sqrt();
            let lo = (1.0 - 1.0 / df).sqrt() * hi;
            assert!(lo <= c * (1.0 + 1e-12) && c <= hi * (1.0 + 1e-12), "d={d}: {lo} {c} {hi}");
        }
        assert!((gamma_ratio_constant(64).unwrap() / 8.0 - 0.39894).abs() < 0.01);
        let c10 = gamma_ratio_constant(10).unwrap();
        assert!(c10 >= 0.9f64.sqrt() * (9.0 / (2.0 * PI)).sqrt() && c10 <= (9.0 / (2.0 * PI)).sqrt());
    }

    #[test]
    fn cap_measure_closed_forms() {
        assert!((cap_relative_measure(2, PI / 4.0).unwrap() - 0.25).abs() < 1e-12);
        assert!((cap_relative_measure(3, PI / 3.0).unwrap() - 0.25).abs() < 1e-10);
        for d in [2, 3, 4, 7, 12] {
            let v = cap_relative_measure(d, PI / 2.0 - 1e-8).unwrap();
            assert!((v - 0.5).abs() < 1e-6, "d={d}: {v}");
        }
        assert!(cap_relative_measure(3, 0.0).is_err());
        assert!(cap_relative_measure(3, PI / 2.0).is_err());
        assert!(cap_relative_measure(3, -0.1).is_err());
    }

    #[test]
    fn cap_measure_increasing() {
        for d in [2, 3, 5, 9] {
            let mut prev = 0.0;
            for k in 1..40 {
                let v = cap_relative_measure(d, k as f64 * PI / 80.0).unwrap();
                assert!(v > prev);
                prev = v;
            }
        }
    }

    #[test]
    fn cap_measure_matches_membership_frequency() {
        let t = 100_000;
        for (i, d) in [2usize, 3, 5].into_iter().enumerate() {
            let mut rng = stream(14, &[i as u64]);
            let theta = 0.9;
            let cap = Cap::new(UnitVector::basis(d, 0).unwrap(), theta).unwrap();
            let hits = (0..t)
                .filter(|_| cap.contains(&sample_uniform_direction(d, &mut rng).unwrap()).unwrap())
                .count();
            let p = cap_relative_measure(d, theta).unwrap();
            let se = (p * (1.0 - p) / t as f64).sqrt();
            let freq = hits as f64 / t as f64;
            assert!((freq - p).abs() <= 3.0 * se, "d={d}: {freq} vs {p}");
        }
    }

    #[test]
    fn pdf_examples() {
        assert!((inner_product_abs_pdf(3, 0.7).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(inner_product_abs_pdf(4, 1.5).unwrap(), 0.0);
        assert_eq!(inner_product_abs_pdf(4, -0.1).unwrap(), 0.0);
        assert!(inner_product_abs_pdf(1, 0.5).is_err());
    }

    #[test]
    fn pdf_normalizes() {
        for d in 2..=16usize {
            // z = sin u turns the density into 2 C_d cos^{d-2} u; stop short
            // of π/2 where sin u rounds to 1 and close the strip with the
            // boundary value (exact for d = 2, where it is constant)
            let g = |u: f64| inner_product_abs_pdf(d, u.sin()).unwrap() * u.cos();
            let b = PI / 2.0 - 1e-7;
            let total = adaptive_simpson(g, 0.0, b, 1e-11) + g(b) * (PI / 2.0 - b);
            assert!((total - 1.0).abs() < 1e-8, "d={d}: {total}");
        }
    }

    #[test]
    fn pdf_d2_matches_histogram() {
        let mut rng = stream(15, &[0]);
        let t = 100_000;
        let bins = 10;
        let mut counts = vec![0usize; bins];
        for _ in 0..t {
            let z = sample_uniform_direction(2, &mut rng).unwrap().as_slice()[0].abs();
            counts[((z * bins as f64) as usize).min(bins - 1)] += 1;
        }
        for (b, &count) in counts.iter().enumerate() {
            let (lo, hi) = (b as f64 / bins as f64, (b + 1) as f64 / bins as f64);
            // ∫ 2/(π√(1-z²)) = (2/π)(asin hi - asin lo)
            let p = 2.0 / PI * (hi.asin() - lo.asin());
            let se = (p * (1.0 - p) / t as f64).sqrt();
            let freq = count as f64 / t as f64;
            assert!((freq - p).abs() <= 4.0 * se, "bin {b}: {freq} vs {p}");
        }
    }

    #[test]
    fn cap_membership_is_open() {
        let c = UnitVector::new(vec![1.0, 0.0]).unwrap();
        assert!(Cap::new(c.clone(), 0.1).unwrap().contains(&c).unwrap());
        assert!(!Cap::new(c.clone(), PI / 2.0).unwrap().contains(&c.antipode()).unwrap());
        // ⟨edge, e1⟩ is exactly cos θ
        let theta = PI / 3.0;
        let h = theta.cos();
        let edge = UnitVector::new(vec![h, (1.0 - h * h).sqrt()]).unwrap();
        assert!(!Cap::new(c.clone(), theta).unwrap().contains(&edge).unwrap());
        assert!(!Cap::new(c.clone(), 0.0).unwrap().contains(&c).unwrap());
        assert!(Cap::new(c.clone(), PI).is_err());
    }

    #[test]
    fn circle_net_is_deterministic() {
        let mut rng = stream(0, &[]);
        let net = build_geodesic_net(2, PI / 8.0, &mut rng).unwrap();
        assert_eq!(net.len(), 8);
        for (k, p) in net.points().iter().enumerate() {
            let a = 2.0 * PI * k as f64 / 8.0;
            assert!((p.as_slice()[0] - a.cos()).abs() < 1e-15);
            assert!((p.as_slice()[1] - a.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn net_rejects_bad_arguments() {
        let mut rng = stream(0, &[]);
        assert!(build_geodesic_net(2, 0.0, &mut rng).is_err());
        assert!(build_geodesic_net(3, -1.0, &mut rng).is_err());
        assert!(build_geodesic_net(1, 0.5, &mut rng).is_err());
    }

    #[test]
    fn greedy_net_separated_bounded_and_covering() {
        let mut rng = stream(16, &[0]);
        let eps = 0.5;
        let net = build_geodesic_net(3, eps, &mut rng).unwrap();
        assert!(net.len() as f64 <= 256.0);
        let pts = net.points();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                assert!(geodesic_distance(&pts[i], &pts[j]).unwrap() >= eps);
            }
        }
        let mut probe_rng = stream(16, &[1]);
        for _ in 0..10_000 {
            let u = sample_uniform_direction(3, &mut probe_rng).unwrap();
            assert!(net.distance_to(&u) <= eps);
        }
    }

    #[test]
    fn circle_net_covers() {
        let mut rng = stream(17, &[0]);
        for eps in [0.05, 0.3, 1.0, PI / 2.0] {
            let net = build_geodesic_net(2, eps, &mut rng).unwrap();
            for _ in 0..2_000 {
                let u = sample_uniform_direction(2, &mut rng).unwrap();
                assert!(net.distance_to(&u) <= eps + 1e-12);
            }
        }
    }
}
