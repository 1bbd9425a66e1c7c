//! Harmonic (spin-wave) gap above the semi-classical ground state.
//!
//! After rotating the quantization axis onto θ₀ and expanding to quadratic
//! order in Holstein–Primakoff bosons, the fluctuation Hamiltonian is
//! `δ a†a + γ (a†² + a²)`. A Bogoliubov rotation with `tanh Θ = ε = −2γ/δ`
//! diagonalizes it with gap `Δ = δ √(1 − ε²)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{power, AnnealPoint, ModelParams};
use crate::semiclassical::find_theta0;

/// |ε| at or above `1 − EPSILON_MARGIN` is a breakdown.
pub const EPSILON_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error, Serialize, Deserialize)]
pub enum Breakdown {
    #[error("delta = {0} is not positive")]
    NonPositiveDelta(f64),
    #[error("|epsilon| = {0} is not below 1")]
    EpsilonOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub theta0: f64,
    pub delta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Θ with tanh Θ = ε; `None` on breakdown.
    pub bogoliubov_angle: Option<f64>,
    pub gap: Option<f64>,
    pub breakdown: Option<Breakdown>,
    /// Set when θ₀ sits on a first-order point; the gap belongs to the
    /// larger-mᶻ branch.
    pub coexistence: bool,
}

impl GapResult {
    pub fn is_valid(&self) -> bool {
        self.gap.is_some()
    }
}

/// δ and γ at angle θ.
pub fn coefficients(theta: f64, pt: AnnealPoint, params: ModelParams) -> (f64, f64) {
    let (s, l) = (pt.s(), pt.lambda());
    let (p, k) = (params.p(), params.k());
    let (pf, kf) = (f64::from(p), f64::from(k));
    let (sin, cos) = theta.sin_cos();
    let (sin2, cos2) = (sin * sin, cos * cos);

    let target = pf * (pf - 1.0) * power(sin, p - 2) * cos2;
    let driver = kf * (kf - 1.0) * sin2 * power(cos, k - 2);
    let delta = -s * l * (target - 2.0 * pf * power(sin, p))
        + s * (1.0 - l) * (driver - 2.0 * kf * power(cos, k))
        + 2.0 * (1.0 - s) * cos;
    let gamma = -0.5 * s * l * target + 0.5 * s * (1.0 - l) * driver;
    (delta, gamma)
}

/// Gap from precomputed δ, γ at a given θ₀.
pub fn gap_from_coefficients(theta0: f64, delta: f64, gamma: f64) -> GapResult {
    let epsilon = if delta != 0.0 { -2.0 * gamma / delta } else { f64::INFINITY };
    let breakdown = if delta <= 0.0 {
        Some(Breakdown::NonPositiveDelta(delta))
    } else if epsilon.abs() >= 1.0 - EPSILON_MARGIN {
        Some(Breakdown::EpsilonOutOfRange(epsilon.abs()))
    } else {
        None
    };
    let valid = breakdown.is_none();
    GapResult {
        theta0,
        delta,
        gamma,
        epsilon,
        bogoliubov_angle: valid.then(|| epsilon.atanh()),
        gap: valid.then(|| delta * (1.0 - epsilon * epsilon).sqrt()),
        breakdown,
        coexistence: false,
    }
}

/// Spin-wave gap at `pt`, with θ₀ from the global minimizer.
pub fn gap(pt: AnnealPoint, params: ModelParams) -> GapResult {
    let st = find_theta0(pt, params);
    let (delta, gamma) = coefficients(st.theta0, pt, params);
    GapResult {
        coexistence: st.coexistence,
        ..gap_from_coefficients(st.theta0, delta, gamma)
    }
}

/// [`gap`] along a line of constant λ.
pub fn gap_profile(params: ModelParams, lambda: f64, s_grid: &[f64]) -> Vec<GapResult> {
    s_grid
        .par_iter()
        .map(|&s| gap(AnnealPoint::clamped(lambda, s), params))
        .collect()
}
