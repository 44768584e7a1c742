//! Reconstruction methods and the worst case error `W_N`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Lu;
use crate::measurement::{consistency_residuals, max_abs, radial_extent, Instance, Measurement, SlabSystem};
use crate::sphere::{check_dim, GeodesicNet, UnitVector};
use crate::{dot, norm, Error, Result};

/// Slack, relative to `δ`, allowed when testing vertex membership.
pub const VERTEX_SLACK: f64 = 1e-9;

/// Default cap on `C(2N, d)` for exact vertex enumeration.
pub const DEFAULT_MAX_SYSTEMS: u64 = 5_000_000;

/// Soft threshold `T_δ(t)`: shrink toward zero by `δ`, zero on `[-δ, δ]`.
pub fn soft_threshold(t: f64, delta: f64) -> f64 {
    if t > delta {
        t - delta
    } else if t < -delta {
        t + delta
    } else {
        0.0
    }
}

/// One soft-threshold update `x + φ T_δ(q - ⟨x, φ⟩)`. For unit `φ` this is
/// the Euclidean projection of `x` onto the measurement's slab.
pub fn rg_step(current: &[f64], m: &Measurement, delta: f64) -> Vec<f64> {
    let mut out = current.to_vec();
    rg_step_in_place(&mut out, m, delta);
    out
}

pub(crate) fn rg_step_in_place(x: &mut [f64], m: &Measurement, delta: f64) -> bool {
    let phi = m.direction.as_slice();
    let shift = soft_threshold(m.value - dot(x, phi), delta);
    if shift == 0.0 {
        return false;
    }
    for (xi, p) in x.iter_mut().zip(phi) {
        *xi += shift * p;
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimate: Vec<f64>,
    /// `max_abs_residual ≤ δ + tol` for the tolerance the run used.
    pub consistent: bool,
    pub passes_used: usize,
    pub max_abs_residual: f64,
}

/// Finds a consistent estimate by sweeping [`rg_step`] over all
/// measurements until every residual is within `δ + tol`.
///
/// Running out of passes is not an error: the report comes back with
/// `consistent = false`.
pub fn consistent_estimate(instance: &Instance, x0: &[f64], tol: f64, max_passes: usize) -> Result<EstimateReport> {
    consistent_estimate_observed(instance, x0, tol, max_passes, |_, _| {})
}

/// [`consistent_estimate`] that hands the iterate to `on_pass` after every
/// sweep.
pub fn consistent_estimate_observed(
    instance: &Instance,
    x0: &[f64],
    tol: f64,
    max_passes: usize,
    mut on_pass: impl FnMut(usize, &[f64]),
) -> Result<EstimateReport> {
    check_dim(instance.dim(), x0.len())?;
    if !(tol > 0.0) {
        return Err(Error::Domain { name: "tol", value: tol, domain: "(0, inf)" });
    }
    if max_passes == 0 {
        return Err(Error::Domain { name: "max_passes", value: 0.0, domain: ">= 1" });
    }
    let delta = instance.delta();
    let mut x = x0.to_vec();
    let mut worst = f64::INFINITY;
    for pass in 1..=max_passes {
        for m in instance.measurements() {
            rg_step_in_place(&mut x, m, delta);
        }
        on_pass(pass, &x);
        worst = max_abs(&consistency_residuals(&x, instance)?);
        if worst <= delta + tol {
            return Ok(EstimateReport { estimate: x, consistent: true, passes_used: pass, max_abs_residual: worst });
        }
    }
    Ok(EstimateReport { estimate: x, consistent: false, passes_used: max_passes, max_abs_residual: worst })
}

/// Warm start for [`consistent_estimate`]: the canonical-dual linear
/// estimate when the directions span, the origin otherwise.
pub fn default_start(instance: &Instance) -> Vec<f64> {
    match canonical_dual(&instance.directions()) {
        Ok(dual) => linear_estimate(instance, &dual).unwrap_or_else(|_| vec![0.0; instance.dim()]),
        Err(_) => vec![0.0; instance.dim()],
    }
}

/// The online soft-threshold iteration: one pass in measurement order.
/// The result need not be consistent.
pub fn rg_estimate(instance: &Instance, x0: &[f64]) -> Result<EstimateReport> {
    check_dim(instance.dim(), x0.len())?;
    let mut x = x0.to_vec();
    for m in instance.measurements() {
        rg_step_in_place(&mut x, m, instance.delta());
    }
    let worst = max_abs(&consistency_residuals(&x, instance)?);
    Ok(EstimateReport {
        consistent: worst <= instance.delta(),
        estimate: x,
        passes_used: 1,
        max_abs_residual: worst,
    })
}

/// A dual frame `{f_n}` for a set of directions: `Σ ⟨x, φ_n⟩ f_n = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFrame {
    pub duals: Vec<Vec<f64>>,
    pub source_directions: Vec<UnitVector>,
}

impl DualFrame {
    /// `Σ ‖f_n‖²`.
    pub fn squared_norm_sum(&self) -> f64 {
        self.duals.iter().map(|f| dot(f, f)).sum()
    }

    /// `Σ c_n f_n`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.duals.len() {
            return Err(Error::LengthMismatch { expected: self.duals.len(), found: coeffs.len() });
        }
        let d = self.duals.first().map_or(0, Vec::len);
        let mut out = vec![0.0; d];
        for (c, f) in coeffs.iter().zip(&self.duals) {
            for (o, fi) in out.iter_mut().zip(f) {
                *o += c * fi;
            }
        }
        Ok(out)
    }
}

/// Frame operator `S = Σ φ_n φ_nᵀ`, row-major.
pub fn frame_operator(directions: &[UnitVector]) -> Result<Vec<f64>> {
    let Some(first) = directions.first() else {
        return Err(Error::RankDeficient { dim: 0, detail: "no directions".into() });
    };
    let d = first.dim();
    let mut s = vec![0.0; d * d];
    for u in directions {
        check_dim(d, u.dim())?;
        let p = u.as_slice();
        for i in 0..d {
            for j in 0..d {
                s[i * d + j] += p[i] * p[j];
            }
        }
    }
    Ok(s)
}

/// Canonical dual `f_n = S⁻¹ φ_n`.
pub fn canonical_dual(directions: &[UnitVector]) -> Result<DualFrame> {
    let s = frame_operator(directions)?;
    let d = directions[0].dim();
    if directions.len() < d {
        return Err(Error::RankDeficient {
            dim: d,
            detail: format!("{} directions cannot span R^{d}", directions.len()),
        });
    }
    let lu = Lu::factor(&s, d).ok_or_else(|| Error::RankDeficient {
        dim: d,
        detail: format!("frame operator of {} directions is singular", directions.len()),
    })?;
    let duals = directions.iter().map(|u| lu.solve(u.as_slice())).collect();
    Ok(DualFrame { duals, source_directions: directions.to_vec() })
}

/// Linear reconstruction `Σ q_n f_n`.
pub fn linear_estimate(instance: &Instance, dual: &DualFrame) -> Result<Vec<f64>> {
    if dual.duals.len() != instance.len() {
        return Err(Error::LengthMismatch { expected: instance.len(), found: dual.duals.len() });
    }
    let q: Vec<f64> = instance.measurements().iter().map(|m| m.value).collect();
    let x = dual.synthesize(&q)?;
    check_dim(instance.dim(), x.len())?;
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorstCaseMethod {
    VertexExact,
    RadialNetLower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseResult {
    pub value: f64,
    pub witness: Vec<f64>,
    pub method: WorstCaseMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationCaps {
    /// Largest admissible `C(2N, d)`.
    pub max_systems: u64,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        EnumerationCaps { max_systems: DEFAULT_MAX_SYSTEMS }
    }
}

/// `C(n, k)` as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact `W_N = max{‖u‖ : u ∈ P_N}` by enumerating the vertices of the
/// polytope.
///
/// Every `d`-subset of slabs is factored once and solved for all `2^d`
/// choices of facet side. Subsets are visited in lexicographic order and
/// sides in binary order with bit `j` clear meaning `+δ`; among vertices of
/// equal norm the first one visited is the witness.
pub fn worst_case_error_exact(slabs: &SlabSystem, caps: &EnumerationCaps) -> Result<WorstCaseResult> {
    let d = slabs.dim();
    let n = slabs.len();
    let systems = binomial(2 * n as u64, d as u64);
    if systems > caps.max_systems as f64 {
        return Err(Error::Capacity { systems, cap: caps.max_systems });
    }
    let delta = slabs.delta();
    let slack = VERTEX_SLACK * delta;
    let rows: Vec<&[f64]> = slabs.slabs().iter().map(|s| s.direction.as_slice()).collect();
    let offsets: Vec<f64> = slabs.slabs().iter().map(|s| s.offset).collect();

    let mut lu = Lu::with_dim(d);
    let mut mat = vec![0.0; d * d];
    let mut rhs = vec![0.0; d];
    let mut v = vec![0.0; d];
    let mut best_sq = -1.0;
    let mut witness = vec![0.0; d];

    let mut combo: Vec<usize> = (0..d).collect();
    let mut more = d <= n;
    while more {
        for (r, &i) in combo.iter().enumerate() {
            mat[r * d..(r + 1) * d].copy_from_slice(rows[i]);
        }
        if lu.refactor(&mat) {
            for pattern in 0u64..(1u64 << d) {
                for (j, &i) in combo.iter().enumerate() {
                    rhs[j] = offsets[i] + if pattern >> j & 1 == 0 { delta } else { -delta };
                }
                lu.solve_into(&rhs, &mut v);
                let sq = dot(&v, &v);
                if sq > best_sq && slabs.contains_with_slack(&v, slack) {
                    best_sq = sq;
                    witness.copy_from_slice(&v);
                }
            }
        }
        more = next_combination(&mut combo, n);
    }

    if best_sq < 0.0 {
        return Err(match complement_direction(&rows, d) {
            Some(ray) => Error::Unbounded { ray },
            None => Error::Internal("spanning slab system produced no feasible vertex".into()),
        });
    }
    Ok(WorstCaseResult { value: libm::sqrt(best_sq), witness, method: WorstCaseMethod::VertexExact })
}

/// Advances `combo` to the next `k`-subset of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// A unit vector orthogonal to every row, if the rows fail to span `ℝ^d`.
fn complement_direction(rows: &[&[f64]], d: usize) -> Option<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let mut v = r.to_vec();
        for b in &basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
        }
        let nv = norm(&v);
        if nv > 1e-9 {
            basis.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    if basis.len() >= d {
        return None;
    }
    (0..d)
        .map(|k| {
            let mut v = vec![0.0; d];
            v[k] = 1.0;
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
            }
            v
        })
        .max_by(|a, b| norm(a).total_cmp(&norm(b)))
        .map(|v| {
            let nv = norm(&v);
            v.into_iter().map(|x| x / nv).collect()
        })
}

/// Lower bound on `W_N`: the largest radial extent over the net directions.
pub fn worst_case_error_radial_net(slabs: &SlabSystem, net: &GeodesicNet) -> Result<WorstCaseResult> {
    check_dim(slabs.dim(), net.dim())?;
    let mut best = -1.0;
    let mut best_dir: Option<&UnitVector> = None;
    for p in net.points() {
        let r = radial_extent(slabs, p);
        if r.is_infinite() {
            return Err(Error::Unbounded { ray: p.as_slice().to_vec() });
        }
        if r > best {
            best = r;
            best_dir = Some(p);
        }
    }
    let dir = best_dir.ok_or_else(|| Error::Internal("empty net".into()))?;
    Ok(WorstCaseResult {
        value: best,
        witness: dir.as_slice().iter().map(|c| c * best).collect(),
        method: WorstCaseMethod::RadialNetLower,
    })
}
