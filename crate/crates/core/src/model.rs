//! Model parameters and the semi-classical energy landscape.
//!
//! The Hamiltonian mixes three pieces in the maximal-spin sector:
//!
//! ```text
//! H(s, λ) = s [ λ H₀ + (1 − λ) V_k ] + (1 − s) V_TF
//! H₀   = −N (Σσᶻ/N)^p      (target ferromagnet, p odd)
//! V_k  = +N (Σσˣ/N)^k      (k-body transverse driver)
//! V_TF = −Σσˣ              (transverse field)
//! ```
//!
//! For large N the total spin behaves as a classical unit vector
//! `(cos θ, 0, sin θ)` in the xz-plane (θ measured from the x axis), and the
//! energy per spin becomes
//!
//! ```text
//! e(θ) = −sλ sinᵖθ + s(1 − λ) cosᵏθ − (1 − s) cos θ.
//! ```
//!
//! Everything else in the crate evaluates these functions.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised when constructing model inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("p must be odd and at least 3, got {0}")]
    InvalidP(u32),
    #[error("k must be at least 2, got {0}")]
    InvalidK(u32),
    #[error("{name} = {value} lies outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
}

/// Exponents of the target ferromagnet (`p`) and of the transverse driver (`k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelParams {
    p: u32,
    k: u32,
}

impl ModelParams {
    /// `p` must be odd and at least 3; `k` must be at least 2.
    pub fn new(p: u32, k: u32) -> Result<Self, ModelError> {
        if p < 3 || p.is_multiple_of(2) {
            return Err(ModelError::InvalidP(p));
        }
        validate_k(k)?;
        Ok(Self { p, k })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }
}

pub(crate) fn validate_k(k: u32) -> Result<(), ModelError> {
    if k < 2 {
        Err(ModelError::InvalidK(k))
    } else {
        Ok(())
    }
}

/// A position `(λ, s)` in the unit annealing square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealPoint {
    lambda: f64,
    s: f64,
}

impl AnnealPoint {
    pub fn new(lambda: f64, s: f64) -> Result<Self, ModelError> {
        check_unit("lambda", lambda)?;
        check_unit("s", s)?;
        Ok(Self { lambda, s })
    }

    /// Builds a point after clamping both coordinates into `[0, 1]`.
    ///
    /// Used for interpolated and perturbed points where rounding may push a
    /// coordinate a few ulps outside the square. Panics on NaN.
    pub fn clamped(lambda: f64, s: f64) -> Self {
        assert!(!lambda.is_nan() && !s.is_nan(), "NaN annealing coordinate");
        Self {
            lambda: lambda.clamp(0.0, 1.0),
            s: s.clamp(0.0, 1.0),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::OutOfRange { name, value })
    }
}

/// Phase label attached to a semi-classical ground state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    /// Paramagnet polarized along +x (θ₀ = 0).
    #[serde(rename = "QP+")]
    QpPlus,
    /// Paramagnet polarized along −x (θ₀ = π); odd k only.
    #[serde(rename = "QP-")]
    QpMinus,
    /// Ferromagnet with mᶻ close to one.
    #[serde(rename = "F")]
    F,
    /// Ferromagnet whose mˣ follows the driver-dominated closed form.
    #[serde(rename = "F'")]
    FPrime,
    /// Ferromagnet matching neither closed form.
    #[serde(rename = "INT")]
    Intermediate,
}

impl Phase {
    /// The label used in CSV and JSON output.
    pub fn label(&self) -> &'static str {
        match self {
            Phase::QpPlus => "QP+",
            Phase::QpMinus => "QP-",
            Phase::F => "F",
            Phase::FPrime => "F'",
            Phase::Intermediate => "INT",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Some(match label {
            "QP+" => Phase::QpPlus,
            "QP-" => Phase::QpMinus,
            "F" => Phase::F,
            "F'" => Phase::FPrime,
            "INT" => Phase::Intermediate,
            _ => return None,
        })
    }

    pub fn is_paramagnetic(&self) -> bool {
        matches!(self, Phase::QpPlus | Phase::QpMinus)
    }

    pub fn is_ferromagnetic(&self) -> bool {
        !self.is_paramagnetic()
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Semi-classical ground state at one annealing point.
///
/// θ₀ is the only stored coordinate; the magnetizations are derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiClassicalState {
    pub theta0: f64,
    pub energy: f64,
    pub phase: Phase,
    /// Set when a second, distinct minimum is degenerate with this one to
    /// within 1e-12 (the point sits on a first-order line).
    pub coexistence: bool,
}

impl SemiClassicalState {
    pub fn mx(&self) -> f64 {
        self.theta0.cos()
    }

    /// Never negative: θ₀ lives in `[0, π]`.
    pub fn mz(&self) -> f64 {
        self.theta0.sin().max(0.0)
    }
}

/// `xⁿ`, switching to `exp(n ln|x|)` for large exponents.
///
/// `powi` runs a multiplication chain whose length grows with `n`; the
/// logarithmic form keeps large-p evaluations cheap and underflows cleanly
/// to zero.
pub fn power(x: f64, n: u32) -> f64 {
    if n > 64 && x != 0.0 {
        let magnitude = (f64::from(n) * x.abs().ln()).exp();
        if x < 0.0 && n % 2 == 1 {
            -magnitude
        } else {
            magnitude
        }
    } else {
        x.powi(n as i32)
    }
}

/// Semi-classical energy per spin `e(θ)` on the φ = 0 plane.
pub fn energy(theta: f64, pt: AnnealPoint, params: ModelParams) -> f64 {
    let (s, l) = (pt.s, pt.lambda);
    let (sin, cos) = theta.sin_cos();
    -s * l * power(sin, params.p) + s * (1.0 - l) * power(cos, params.k) - (1.0 - s) * cos
}

/// `∂e/∂θ`.
pub fn energy_derivative(theta: f64, pt: AnnealPoint, params: ModelParams) -> f64 {
    let (s, l) = (pt.s, pt.lambda);
    let (p, k) = (params.p, params.k);
    let (sin, cos) = theta.sin_cos();
    -f64::from(p) * s * l * power(sin, p - 1) * cos
        - f64::from(k) * s * (1.0 - l) * power(cos, k - 1) * sin
        + (1.0 - s) * sin
}

/// The bracket whose zeros are the ferromagnetic stationary points:
/// `∂e/∂θ = −sin θ · stationarity_residual(θ)`.
///
/// Also well defined at θ = 0 and θ = π, where its sign decides whether the
/// paramagnetic endpoints are minima.
pub fn stationarity_residual(theta: f64, pt: AnnealPoint, params: ModelParams) -> f64 {
    let (s, l) = (pt.s, pt.lambda);
    let (p, k) = (params.p, params.k);
    let (sin, cos) = theta.sin_cos();
    f64::from(p) * s * l * power(sin, p - 2) * cos + f64::from(k) * s * (1.0 - l) * power(cos, k - 1)
        - 1.0
        + s
}
