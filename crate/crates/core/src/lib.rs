//! Consistent reconstruction from uniformly-noisy linear measurements.
//!
//! A signal `x ∈ ℝ^d` is observed through `N` measurements
//! `q_n = ⟨x, φ_n⟩ + ε_n` with unit directions `φ_n` and noise `ε_n`
//! uniform on `[-δ, δ]`. Any estimate whose predicted measurements all sit
//! within `δ` of the observations is *consistent*; the set of possible
//! errors is the polytope `P_N = ⋂ {u : |⟨u, φ_n⟩ - ε_n| ≤ δ}` and the worst
//! case error `W_N` is its largest norm.
//!
//! This crate is `no_std` (it needs `alloc`) and contains only pure
//! computation:
//!
//! * [`sphere`]: sampling on `𝕊^{d-1}`, caps, the constant `C_d`, the
//!   inner-product density and geodesic nets.
//! * [`measurement`]: synthetic instances, slab systems and the exact
//!   radial extent `R_N(ψ)`.
//! * [`estimators`]: soft-threshold iteration, consistent reconstruction by
//!   cyclic slab projection, canonical-dual linear reconstruction and `W_N`.
//! * [`bounds`]: closed-form error laws and bounds.
//! * [`coverage`]: bi-caps and cap-coverage Monte Carlo.
//!
//! Randomness always comes from a caller-supplied [`rand::Rng`]; [`rng`]
//! derives independent reproducible streams from a master seed.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bounds;
pub mod coverage;
mod error;
pub mod estimators;
pub mod linalg;
pub mod measurement;
pub mod quad;
pub mod rng;
pub mod sphere;
pub mod stats;

pub use error::{Error, Result};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}
