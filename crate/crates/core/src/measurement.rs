//! Noisy linear measurements, consistency and the error polytope.

use alloc::vec::Vec;
use rand::Rng;

use crate::sphere::{check_dim, sample_uniform_direction, UnitVector};
use crate::{dot, norm, Error, Result};

/// One observation `q = ⟨x, φ⟩ + ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub direction: UnitVector,
    pub noise: f64,
    pub value: f64,
}

/// How measurement directions are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionLaw {
    UniformSphere,
    /// Uniform on the open cap of radius `theta` around `center`.
    UniformCap { center: UnitVector, theta: f64 },
    /// The first `N` entries of a fixed list, in order.
    FixedList(Vec<UnitVector>),
}

impl DirectionLaw {
    pub fn draw<R: Rng + ?Sized>(&self, d: usize, n: usize, rng: &mut R) -> Result<Vec<UnitVector>> {
        match self {
            DirectionLaw::UniformSphere => (0..n).map(|_| sample_uniform_direction(d, rng)).collect(),
            DirectionLaw::UniformCap { center, theta } => {
                check_dim(d, center.dim())?;
                if !(*theta > 0.0 && *theta <= core::f64::consts::PI) {
                    return Err(Error::Domain { name: "cap theta", value: *theta, domain: "(0, pi]" });
                }
                let cos = libm::cos(*theta);
                (0..n)
                    .map(|_| loop {
                        let u = sample_uniform_direction(d, rng)?;
                        if center.dot(u.as_slice()) > cos {
                            return Ok(u);
                        }
                    })
                    .collect()
            }
            DirectionLaw::FixedList(list) => {
                if list.len() < n {
                    return Err(Error::FixedListTooShort { needed: n, available: list.len() });
                }
                for u in &list[..n] {
                    check_dim(d, u.dim())?;
                }
                Ok(list[..n].to_vec())
            }
        }
    }
}

/// Noise model for instance generation. `Zero` exists for exact noiseless
/// identities in tests and demos.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    #[default]
    Uniform,
    Zero,
}

/// A synthetic estimation problem with ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    signal: Vec<f64>,
    delta: f64,
    measurements: Vec<Measurement>,
}

impl Instance {
    /// Assembles an instance from stored parts, checking every invariant.
    /// Values must agree with `⟨x, φ⟩ + ε` to within rounding.
    pub fn new(signal: Vec<f64>, delta: f64, measurements: Vec<Measurement>) -> Result<Self> {
        if signal.is_empty() {
            return Err(Error::InvalidDimension { found: 0, requirement: "d >= 1" });
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain { name: "delta", value: delta, domain: "(0, inf)" });
        }
        if measurements.is_empty() {
            return Err(Error::Domain { name: "N", value: 0.0, domain: "N >= 1" });
        }
        let scale = 1.0 + norm(&signal) + delta;
        for m in &measurements {
            check_dim(signal.len(), m.direction.dim())?;
            if !(m.noise.abs() <= delta) {
                return Err(Error::Domain { name: "noise", value: m.noise, domain: "[-delta, delta]" });
            }
            let expect = m.direction.dot(&signal) + m.noise;
            if !((m.value - expect).abs() <= 1e-12 * scale) {
                return Err(Error::Domain { name: "value", value: m.value, domain: "<x, phi> + noise" });
            }
        }
        Ok(Instance { signal, delta, measurements })
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn measurements(&self) -> &[Measurement] {
        &self.measurements
    }

    pub fn dim(&self) -> usize {
        self.signal.len()
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn directions(&self) -> Vec<UnitVector> {
        self.measurements.iter().map(|m| m.direction.clone()).collect()
    }

    /// `max_n |⟨candidate, φ_n⟩ - q_n| ≤ δ + tol`.
    pub fn is_consistent(&self, candidate: &[f64], tol: f64) -> Result<bool> {
        Ok(max_abs(&consistency_residuals(candidate, self)?) <= self.delta + tol)
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, r| m.max(r.abs()))
}

/// Draws `n` measurements of `x` with directions from `law` and noise
/// uniform on `[-delta, delta]`.
pub fn draw_instance<R: Rng + ?Sized>(
    x: &[f64],
    n: usize,
    delta: f64,
    law: &DirectionLaw,
    rng: &mut R,
) -> Result<Instance> {
    draw_instance_with_noise(x, n, delta, law, NoiseModel::Uniform, rng)
}

pub fn draw_instance_with_noise<R: Rng + ?Sized>(
    x: &[f64],
    n: usize,
    delta: f64,
    law: &DirectionLaw,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<Instance> {
    if x.is_empty() {
        return Err(Error::InvalidDimension { found: 0, requirement: "d >= 1" });
    }
    if n == 0 {
        return Err(Error::Domain { name: "N", value: 0.0, domain: "N >= 1" });
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain { name: "delta", value: delta, domain: "(0, inf)" });
    }
    let directions = law.draw(x.len(), n, rng)?;
    let measurements = directions
        .into_iter()
        .map(|direction| {
            let noise = match noise {
                NoiseModel::Uniform => rng.random_range(-delta..=delta),
                NoiseModel::Zero => 0.0,
            };
            let value = direction.dot(x) + noise;
            Measurement { direction, noise, value }
        })
        .collect();
    Ok(Instance { signal: x.to_vec(), delta, measurements })
}

/// `r_n = ⟨candidate, φ_n⟩ - q_n` for every measurement.
pub fn consistency_residuals(candidate: &[f64], instance: &Instance) -> Result<Vec<f64>> {
    check_dim(instance.dim(), candidate.len())?;
    Ok(instance
        .measurements
        .iter()
        .map(|m| m.direction.dot(candidate) - m.value)
        .collect())
}

/// One slab `{u : |⟨u, direction⟩ - offset| ≤ δ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slab {
    pub direction: UnitVector,
    pub offset: f64,
}

/// The error polytope `P_N`: intersection of slabs sharing one half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabSystem {
    slabs: Vec<Slab>,
    delta: f64,
}

impl SlabSystem {
    /// Offsets must lie in `[-δ, δ]`, so the origin is always a member.
    pub fn new(slabs: Vec<Slab>, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain { name: "delta", value: delta, domain: "(0, inf)" });
        }
        let Some(first) = slabs.first() else {
            return Err(Error::Domain { name: "N", value: 0.0, domain: "N >= 1" });
        };
        let d = first.direction.dim();
        for s in &slabs {
            check_dim(d, s.direction.dim())?;
            if !(s.offset.abs() <= delta) {
                return Err(Error::Domain { name: "offset", value: s.offset, domain: "[-delta, delta]" });
            }
        }
        Ok(SlabSystem { slabs, delta })
    }

    pub fn slabs(&self) -> &[Slab] {
        &self.slabs
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.slabs[0].direction.dim()
    }

    pub fn len(&self) -> usize {
        self.slabs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slabs.is_empty()
    }

    /// Membership with the slab half-width inflated by `slack`.
    pub fn contains_with_slack(&self, u: &[f64], slack: f64) -> bool {
        let bound = self.delta + slack;
        self.slabs.iter().all(|s| (s.direction.dot(u) - s.offset).abs() <= bound)
    }

    pub fn contains(&self, u: &[f64]) -> Result<bool> {
        check_dim(self.dim(), u.len())?;
        Ok(self.contains_with_slack(u, 0.0))
    }

    /// The same system with `δ` and every offset multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        SlabSystem::new(
            self.slabs
                .iter()
                .map(|s| Slab { direction: s.direction.clone(), offset: s.offset * c })
                .collect(),
            self.delta * c,
        )
    }
}

/// `P_N` for an instance: slabs `(φ_n, ε_n)` with the instance's `δ`.
pub fn error_polytope(instance: &Instance) -> SlabSystem {
    SlabSystem {
        slabs: instance
            .measurements
            .iter()
            .map(|m| Slab { direction: m.direction.clone(), offset: m.noise })
            .collect(),
        delta: instance.delta,
    }
}

/// `R_N(ψ) = max{r ≥ 0 : rψ ∈ P_N}`; `+∞` when the ray never leaves.
pub fn radial_extent(slabs: &SlabSystem, psi: &UnitVector) -> f64 {
    let delta = slabs.delta;
    slabs
        .slabs
        .iter()
        .map(|s| {
            let c = s.direction.dot(psi.as_slice());
            if c > 0.0 {
                (s.offset + delta) / c
            } else if c < 0.0 {
                (delta - s.offset) / -c
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean distance between two points.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    libm::sqrt(dot(&diff, &diff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use alloc::vec;
    use proptest::prelude::{prop_assert, proptest};

    fn square() -> SlabSystem {
        SlabSystem::new(
            vec![
                Slab { direction: UnitVector::basis(2, 0).unwrap(), offset: 0.0 },
                Slab { direction: UnitVector::basis(2, 1).unwrap(), offset: 0.0 },
            ],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_signal_values_are_noise() {
        let mut rng = stream(1, &[]);
        let inst = draw_instance(&[0.0, 0.0, 0.0], 50, 0.7, &DirectionLaw::UniformSphere, &mut rng).unwrap();
        for m in inst.measurements() {
            assert_eq!(m.value, m.noise);
            assert!(m.noise.abs() <= 0.7);
        }
    }

    #[test]
    fn noise_mean_near_zero() {
        let mut rng = stream(2, &[]);
        let n = 10_000;
        let delta = 1.3;
        let inst = draw_instance(&[0.4, -1.0], n, delta, &DirectionLaw::UniformSphere, &mut rng).unwrap();
        let mean = inst.measurements().iter().map(|m| m.noise).sum::<f64>() / n as f64;
        assert!(mean.abs() <= 3.0 * (2.0 * delta / 12f64.sqrt()) / (n as f64).sqrt());
    }

    #[test]
    fn noiseless_basis_identity() {
        let law = DirectionLaw::FixedList(vec![UnitVector::basis(2, 0).unwrap(), UnitVector::basis(2, 1).unwrap()]);
        let mut rng = stream(3, &[]);
        let inst = draw_instance_with_noise(&[1.0, 2.0], 2, 1.0, &law, NoiseModel::Zero, &mut rng).unwrap();
        let q: Vec<f64> = inst.measurements().iter().map(|m| m.value).collect();
        assert_eq!(q, vec![1.0, 2.0]);
    }

    #[test]
    fn fixed_list_too_short() {
        let law = DirectionLaw::FixedList(vec![UnitVector::basis(2, 0).unwrap()]);
        let mut rng = stream(3, &[]);
        assert_eq!(
            draw_instance(&[1.0, 2.0], 2, 1.0, &law, &mut rng),
            Err(Error::FixedListTooShort { needed: 2, available: 1 })
        );
    }

    #[test]
    fn bad_arguments_rejected() {
        let mut rng = stream(3, &[]);
        let law = DirectionLaw::UniformSphere;
        assert!(draw_instance(&[1.0], 0, 1.0, &law, &mut rng).is_err());
        assert!(draw_instance(&[1.0], 3, 0.0, &law, &mut rng).is_err());
        assert!(draw_instance(&[], 3, 1.0, &law, &mut rng).is_err());
    }

    #[test]
    fn cap_law_stays_in_cap() {
        let mut rng = stream(4, &[]);
        let center = UnitVector::basis(3, 2).unwrap();
        let law = DirectionLaw::UniformCap { center: center.clone(), theta: 0.6 };
        let inst = draw_instance(&[0.0, 0.0, 1.0], 500, 1.0, &law, &mut rng).unwrap();
        for m in inst.measurements() {
            assert!(center.dot(m.direction.as_slice()) > 0.6f64.cos());
        }
    }

    #[test]
    fn one_dimensional_residual() {
        let m = Measurement { direction: UnitVector::basis(1, 0).unwrap(), noise: 0.5, value: 0.5 };
        let inst = Instance::new(vec![0.0], 1.0, vec![m]).unwrap();
        assert_eq!(consistency_residuals(&[2.0], &inst).unwrap(), vec![1.5]);
        assert!(!inst.is_consistent(&[2.0], 0.0).unwrap());
        assert!(inst.is_consistent(&[2.0], 0.5).unwrap());
        assert!(consistency_residuals(&[2.0, 1.0], &inst).is_err());
    }

    #[test]
    fn instance_constructor_checks_values() {
        let m = Measurement { direction: UnitVector::basis(1, 0).unwrap(), noise: 0.5, value: 0.6 };
        assert!(Instance::new(vec![0.0], 1.0, vec![m]).is_err());
        let m = Measurement { direction: UnitVector::basis(1, 0).unwrap(), noise: 1.5, value: 1.5 };
        assert!(Instance::new(vec![0.0], 1.0, vec![m]).is_err());
    }

    #[test]
    fn square_membership() {
        let sq = square();
        assert!(sq.contains(&[0.0, 0.0]).unwrap());
        assert!(sq.contains(&[0.5, -0.5]).unwrap());
        assert!(!sq.contains(&[1.5, 0.0]).unwrap());
    }

    #[test]
    fn slab_system_rejects_bad_offsets() {
        let s = vec![Slab { direction: UnitVector::basis(2, 0).unwrap(), offset: 2.0 }];
        assert!(SlabSystem::new(s, 1.0).is_err());
        assert!(SlabSystem::new(vec![], 1.0).is_err());
    }

    #[test]
    fn radial_extent_examples() {
        let one = SlabSystem::new(vec![Slab { direction: UnitVector::basis(2, 0).unwrap(), offset: 0.0 }], 1.0).unwrap();
        assert_eq!(radial_extent(&one, &UnitVector::basis(2, 0).unwrap()), 1.0);
        assert_eq!(radial_extent(&one, &UnitVector::basis(2, 1).unwrap()), f64::INFINITY);
        let diag = UnitVector::normalize(vec![1.0, 1.0]).unwrap();
        assert!((radial_extent(&square(), &diag) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn polytope_membership_equals_consistency() {
        let mut rng = stream(5, &[]);
        let x = [0.3, -0.2, 1.1];
        let inst = draw_instance(&x, 30, 0.5, &DirectionLaw::UniformSphere, &mut rng).unwrap();
        let p = error_polytope(&inst);
        assert!(p.contains(&[0.0, 0.0, 0.0]).unwrap());
        for _ in 0..100 {
            let u: Vec<f64> = (0..3).map(|_| rng.random_range(-0.3..0.3)).collect();
            let xu: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();
            assert_eq!(p.contains(&u).unwrap(), inst.is_consistent(&xu, 0.0).unwrap());
        }
    }

    #[test]
    fn radial_extent_is_the_exit_point() {
        let mut rng = stream(6, &[]);
        for trial in 0..200 {
            let d = 2 + trial % 3;
            let x: Vec<f64> = (0..d).map(|i| i as f64 * 0.25).collect();
            let inst = draw_instance(&x, 12, 1.0, &DirectionLaw::UniformSphere, &mut rng).unwrap();
            assert!(inst.is_consistent(&x, 0.0).unwrap());
            let p = error_polytope(&inst);
            let psi = sample_uniform_direction(d, &mut rng).unwrap();
            let r = radial_extent(&p, &psi);
            assert!(r.is_finite() && r >= 0.0);
            let at = |t: f64| psi.as_slice().iter().map(|c| c * t).collect::<Vec<f64>>();
            let inside = r * rng.random_range(0.0..1.0);
            assert!(p.contains_with_slack(&at(inside), 1e-12));
            assert!(p.contains_with_slack(&at(r), 1e-12));
            assert!(!p.contains(&at(r * (1.0 + 1e-6))).unwrap());
        }
    }

    #[test]
    fn radial_extent_law_independent_of_probe() {
        // two-sample KS at level 1e-3: critical value sqrt(-ln(5e-4)/2 * 2/m)
        let trials = 100_000usize;
        let mut rng = stream(7, &[]);
        let e1 = UnitVector::basis(3, 0).unwrap();
        let other = UnitVector::normalize(vec![0.3, -0.5, 0.8]).unwrap();
        let mut a = Vec::with_capacity(trials);
        let mut b = Vec::with_capacity(trials);
        for _ in 0..trials {
            let inst = draw_instance(&[0.0; 3], 10, 1.0, &DirectionLaw::UniformSphere, &mut rng).unwrap();
            let p = error_polytope(&inst);
            a.push(radial_extent(&p, &e1));
            let inst = draw_instance(&[0.0; 3], 10, 1.0, &DirectionLaw::UniformSphere, &mut rng).unwrap();
            b.push(radial_extent(&error_polytope(&inst), &other));
        }
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut ks) = (0, 0, 0.0f64);
        while i < trials && j < trials {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            ks = ks.max((i as f64 - j as f64).abs() / trials as f64);
        }
        let crit = (-(5e-4f64).ln() / 2.0 * 2.0 / trials as f64).sqrt();
        assert!(ks < crit, "KS {ks} >= {crit}");
    }

    proptest! {
        #[test]
        fn radial_extent_scales_with_delta(seed in 0u64..1000, c in 0.01f64..100.0) {
            let mut rng = stream(seed, &[8]);
            let inst = draw_instance(&[0.0, 0.0], 6, 1.0, &DirectionLaw::UniformSphere, &mut rng).unwrap();
            let p = error_polytope(&inst);
            let psi = sample_uniform_direction(2, &mut rng).unwrap();
            let r = radial_extent(&p, &psi);
            let rc = radial_extent(&p.scaled(c).unwrap(), &psi);
            prop_assert!((rc - c * r).abs() <= 1e-12 * c * r);
        }

        #[test]
        fn consistency_is_monotone_in_delta(seed in 0u64..1000, extra in 0.0f64..2.0) {
            let mut rng = stream(seed, &[9]);
            let inst = draw_instance(&[1.0, -1.0], 8, 0.5, &DirectionLaw::UniformSphere, &mut rng).unwrap();
            let cand = [1.0 + rng.random_range(-0.2..0.2), -1.0 + rng.random_range(-0.2..0.2)];
            if inst.is_consistent(&cand, 0.0).unwrap() {
                prop_assert!(inst.is_consistent(&cand, extra).unwrap());
            }
        }
    }
}
