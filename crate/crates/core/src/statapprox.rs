//! Static-approximation free energy and its self-consistent magnetization
//! equations.
//!
//! ```text
//! f = (p−1)sλ(mᶻ)^p − (k−1)s(1−λ)(mˣ)^k − (1/β) ln 2cosh(β√(A² + B²))
//! A = p s λ (mᶻ)^{p−1},   B = 1 − s − s(1−λ) k (mˣ)^{k−1}
//! ```
//!
//! Stationarity gives `(mˣ, mᶻ) = (B, A) tanh(βR) / R` with `R = √(A² + B²)`;
//! at β = ∞ the tanh is 1 and solutions lie on the unit circle. The QP2 branch
//! sits where `R → 0` and is handled in closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{energy, power, AnnealPoint, ModelParams, Phase};
use crate::semiclassical::{classify, fprime_cos};

pub const TOLERANCE: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 100_000;
pub const INITIAL_DAMPING: f64 = 0.5;
const MIN_DAMPING: f64 = 1e-6;
/// A collapsed damping must not pass for convergence.
const RESIDUAL_GUARD: f64 = 1e-6;
const START_OFFSET: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StaticPhase {
    #[serde(rename = "QP+")]
    QpPlus,
    #[serde(rename = "QP-")]
    QpMinus,
    #[serde(rename = "QP2")]
    Qp2,
    F,
    #[serde(rename = "F'")]
    FPrime,
    #[serde(rename = "INT")]
    Intermediate,
}

impl StaticPhase {
    pub fn label(&self) -> &'static str {
        match self {
            StaticPhase::Qp2 => "QP2",
            other => other.as_phase().map_or("QP2", |p| p.label()),
        }
    }

    /// The matching semi-classical label; QP2 has none.
    pub fn as_phase(&self) -> Option<Phase> {
        match self {
            StaticPhase::QpPlus => Some(Phase::QpPlus),
            StaticPhase::QpMinus => Some(Phase::QpMinus),
            StaticPhase::Qp2 => None,
            StaticPhase::F => Some(Phase::F),
            StaticPhase::FPrime => Some(Phase::FPrime),
            StaticPhase::Intermediate => Some(Phase::Intermediate),
        }
    }
}

impl From<Phase> for StaticPhase {
    fn from(p: Phase) -> Self {
        match p {
            Phase::QpPlus => StaticPhase::QpPlus,
            Phase::QpMinus => StaticPhase::QpMinus,
            Phase::F => StaticPhase::F,
            Phase::FPrime => StaticPhase::FPrime,
            Phase::Intermediate => StaticPhase::Intermediate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatApproxError {
    #[error("QP2 is undefined at (λ, s) = ({lambda}, {s}) for p = {p}")]
    Qp2Domain { lambda: f64, s: f64, p: u32 },
    #[error("the F' branch does not exist at (λ, s) = ({lambda}, {s})")]
    FPrimeDomain { lambda: f64, s: f64 },
    #[error("inverse temperature must be positive, got {0}")]
    InvalidBeta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfConsistentSolution {
    pub mx: f64,
    pub mz: f64,
    pub beta: Beta,
    pub free_energy: f64,
    pub phase: StaticPhase,
    pub converged: bool,
    pub iterations: usize,
}

/// `ln(2 cosh x)` without overflow.
fn ln_2cosh(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p()
}

fn fields(mx: f64, mz: f64, pt: AnnealPoint, params: ModelParams) -> (f64, f64) {
    let (s, l) = (pt.s(), pt.lambda());
    let (p, k) = (params.p(), params.k());
    let a = f64::from(p) * s * l * power(mz, p - 1);
    let b = 1.0 - s - s * (1.0 - l) * f64::from(k) * power(mx, k - 1);
    (a, b)
}

pub fn pseudo_free_energy(mx: f64, mz: f64, pt: AnnealPoint, params: ModelParams, beta: Beta) -> f64 {
    let (s, l) = (pt.s(), pt.lambda());
    let (p, k) = (params.p(), params.k());
    let (a, b) = fields(mx, mz, pt, params);
    let r = a.hypot(b);
    let entropy = match beta {
        Beta::Infinite => r,
        Beta::Finite(bt) => ln_2cosh(bt * r) / bt,
    };
    f64::from(p - 1) * s * l * power(mz, p) - f64::from(k - 1) * s * (1.0 - l) * power(mx, k) - entropy
}

/// Right-hand side of the self-consistent equations.
fn update(mx: f64, mz: f64, pt: AnnealPoint, params: ModelParams, beta: Beta) -> Option<(f64, f64)> {
    let (a, b) = fields(mx, mz, pt, params);
    let r = a.hypot(b);
    if r == 0.0 {
        return None;
    }
    let t = match beta {
        Beta::Infinite => 1.0,
        Beta::Finite(bt) => (bt * r).tanh(),
    };
    Some((b / r * t, a / r * t))
}

fn phase_of(mx: f64, mz: f64, pt: AnnealPoint, params: ModelParams) -> StaticPhase {
    classify(mz.atan2(mx).clamp(0.0, std::f64::consts::PI), pt, params).into()
}

/// Damped fixed-point iteration of the self-consistent equations from
/// `init`.
///
/// At finite β the damping starts at 0.5, is halved whenever the residual
/// grows and recovers slowly while it shrinks; convergence is judged on the
/// damped step `d·|F(m) − m| < 1e-12`. At β = ∞ the iterate lives on the unit
/// circle and the iteration runs on its angle. Near the second-order line the
/// field direction swings by almost π across a tiny window of θ (map slopes of
/// order −10⁴), which defeats plain damping in Cartesian components.
pub fn solve_self_consistent(
    pt: AnnealPoint,
    params: ModelParams,
    beta: Beta,
    init: (f64, f64),
) -> Result<SelfConsistentSolution, StatApproxError> {
    if let Beta::Finite(b) = beta {
        if b.is_nan() || b <= 0.0 {
            return Err(StatApproxError::InvalidBeta(b));
        }
    }
    let (mx, mz, converged, iterations) = match beta {
        Beta::Infinite => iterate_on_circle(init, pt, params),
        Beta::Finite(_) => iterate_damped(init, pt, params, beta),
    };
    Ok(SelfConsistentSolution {
        mx,
        mz,
        beta,
        free_energy: pseudo_free_energy(mx, mz, pt, params, beta),
        phase: phase_of(mx, mz, pt, params),
        converged,
        iterations,
    })
}

fn iterate_damped(init: (f64, f64), pt: AnnealPoint, params: ModelParams, beta: Beta) -> (f64, f64, bool, usize) {
    let (mut mx, mut mz) = init;
    let mut damping = INITIAL_DAMPING;
    let mut prev = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let Some((fx, fz)) = update(mx, mz, pt, params, beta) else {
            break;
        };
        let res = (fx - mx).hypot(fz - mz);
        if res > prev {
            damping = (damping * 0.5).max(MIN_DAMPING);
        } else {
            damping = (damping * 1.05).min(INITIAL_DAMPING);
        }
        prev = res;
        mx += damping * (fx - mx);
        mz += damping * (fz - mz);
        if damping * res < TOLERANCE && res < RESIDUAL_GUARD {
            return (mx, mz, true, iterations);
        }
    }
    (mx, mz, false, iterations)
}

/// Angular misfit between the magnetization at `theta` and the field it
/// generates, wrapped to (−π, π].
fn angular_residual(theta: f64, pt: AnnealPoint, params: ModelParams) -> Option<f64> {
    let (a, b) = fields(theta.cos(), theta.sin(), pt, params);
    if a == 0.0 && b == 0.0 {
        return None;
    }
    let d = a.atan2(b) - theta;
    Some(d.sin().atan2(d.cos()))
}

/// β = ∞: `|m| = 1`, so the iteration runs on the angle, `θ ← θ + d·r(θ)`.
/// The field is minus the gradient of the energy on the circle, so the step
/// descends `e(θ)`: it is accepted when the energy drops, or, once energy
/// differences are at rounding level, when `|r|` shrinks. Otherwise the
/// damping is halved. When no representable step helps, a residual below the
/// guard counts as converged.
fn iterate_on_circle(init: (f64, f64), pt: AnnealPoint, params: ModelParams) -> (f64, f64, bool, usize) {
    let mut theta = init.1.atan2(init.0);
    let mut e = energy(theta, pt, params);
    let mut damping = INITIAL_DAMPING;
    let mut iterations = 0;
    let mut converged = false;
    if let Some(mut r) = angular_residual(theta, pt, params) {
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            if r.abs() < TOLERANCE {
                converged = true;
                break;
            }
            let next = theta + damping * r;
            let e_next = energy(next, pt, params);
            let flat = 4.0 * f64::EPSILON * e.abs().max(1.0);
            match angular_residual(next, pt, params) {
                Some(rn) if e_next < e - flat || (e_next <= e + flat && rn.abs() < r.abs()) => {
                    theta = next;
                    e = e_next;
                    r = rn;
                    damping = (damping * 2.0).min(1.0);
                }
                _ if next == theta || damping < f64::EPSILON => {
                    converged = r.abs() < RESIDUAL_GUARD;
                    break;
                }
                _ => damping *= 0.5,
            }
        }
    }
    (theta.cos(), theta.sin(), converged, iterations)
}

fn qp2_mx(pt: AnnealPoint, params: ModelParams) -> Result<f64, StatApproxError> {
    let (s, l) = (pt.s(), pt.lambda());
    let err = StatApproxError::Qp2Domain {
        lambda: l,
        s,
        p: params.p(),
    };
    if params.p() <= 3 {
        return Err(err);
    }
    fprime_cos(pt, params.k()).ok_or(err)
}

/// Free energy of the QP2 branch, `mᶻ = 0`, `mˣ = [(1−s)/(ks(1−λ))]^{1/(k−1)}`.
pub fn qp2_free_energy(pt: AnnealPoint, params: ModelParams) -> Result<f64, StatApproxError> {
    let mx = qp2_mx(pt, params)?;
    let k = f64::from(params.k());
    Ok(-(k - 1.0) / k * mx * (1.0 - pt.s()))
}

/// Free energy of the approximate finite-p F′ solution, which shares `mˣ`
/// with QP2 and adds the target contribution `−sλ(mᶻ)^p`.
pub fn fprime_free_energy(pt: AnnealPoint, params: ModelParams) -> Result<f64, StatApproxError> {
    let mx = fprime_cos(pt, params.k()).ok_or(StatApproxError::FPrimeDomain {
        lambda: pt.lambda(),
        s: pt.s(),
    })?;
    let k = f64::from(params.k());
    let mz = (1.0 - mx * mx).max(0.0).sqrt();
    Ok(-pt.s() * pt.lambda() * power(mz, params.p()) - (k - 1.0) / k * mx * (1.0 - pt.s()))
}

/// Multi-start solve: x-polarized up and down, nearly z-polarized, and the
/// F′ closed form, plus the QP2 branch where it exists. The converged
/// solution with the lowest free energy wins.
pub fn solve(pt: AnnealPoint, params: ModelParams, beta: Beta) -> Result<SelfConsistentSolution, StatApproxError> {
    let mut starts = vec![(1.0, 0.0), (-1.0, 0.0), (START_OFFSET, 1.0 - START_OFFSET)];
    if let Some(c) = fprime_cos(pt, params.k()) {
        starts.push((c, (1.0 - c * c).max(0.0).sqrt()));
    }
    let mut candidates = starts
        .into_iter()
        .map(|init| solve_self_consistent(pt, params, beta, init))
        .collect::<Result<Vec<_>, _>>()?;
    if beta == Beta::Infinite {
        if let Ok(mx) = qp2_mx(pt, params) {
            candidates.push(SelfConsistentSolution {
                mx,
                mz: 0.0,
                beta,
                free_energy: pseudo_free_energy(mx, 0.0, pt, params, beta),
                phase: StaticPhase::Qp2,
                converged: true,
                iterations: 0,
            });
        }
    }
    let best = candidates
        .iter()
        .filter(|c| c.converged)
        .min_by(|a, b| {
            a.free_energy
                .total_cmp(&b.free_energy)
                .then(b.mz.total_cmp(&a.mz))
        })
        .or_else(|| candidates.iter().min_by(|a, b| a.free_energy.total_cmp(&b.free_energy)))
        .copied()
        .expect("at least three starts");
    Ok(best)
}
