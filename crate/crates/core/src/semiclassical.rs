//! Global minimization of the semi-classical energy, phase labels, diagram
//! scans and transition-line tracing.
//!
//! Stationary points of `e(θ)` are either the poles θ = 0, π or zeros of
//! [`stationarity_residual`]. We bracket the zeros on a uniform θ grid and
//! bisect each bracket to machine precision, so the global minimum is picked
//! from an exact list of local minima rather than from a sampled energy curve.
//! Near the second-order line the energy is quartic in θ and a minimizer on
//! `e` itself would only resolve θ₀ to ~1e-4; the residual has a simple root
//! there and bisects cleanly.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    energy, stationarity_residual, validate_k, AnnealPoint, ModelError, ModelParams, Phase,
    SemiClassicalState,
};
use crate::spinwave::{self, GapResult};

/// Number of θ intervals used to bracket stationary points.
pub const DEFAULT_GRID: usize = 2048;
/// θ₀ closer than this to a pole is paramagnetic.
pub const THETA_EPS: f64 = 1e-8;
/// Relative band used to match θ₀ against the F and F′ closed forms.
pub const CLASSIFY_BAND: f64 = 0.05;
/// θ₀ discontinuities above this are physical jumps.
pub const JUMP_THRESHOLD: f64 = 1e-3;
/// Minima closer than this in energy are degenerate.
pub const TIE_TOLERANCE: f64 = 1e-12;

const LINE_STEP: f64 = 1e-2;
const SEED_WINDOW: f64 = 0.05;
const SEED_STEP: f64 = 1e-3;
const MARCH_WINDOW: f64 = 0.2;
const MARCH_STEP: f64 = 2e-3;
const LINE_RESOLUTION: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemiclassicalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no θ₀ discontinuity near (λ, s) = ({lambda}, {s})")]
    NoDiscontinuity { lambda: f64, s: f64 },
    #[error("finite-p approximation invalid: (1 - s)/(s p λ) = {0} is not below 0.5")]
    ApproximationInvalid(f64),
    #[error("diagram resolution must be at least 2x2, got {0}x{1}")]
    Resolution(usize, usize),
}

/// A stationary point of `e(θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stationary {
    pub theta: f64,
    pub energy: f64,
    pub minimum: bool,
}

/// All stationary points on `[0, π]`, sorted by θ. Both poles are always
/// included, flagged as minimum or maximum.
pub fn stationary_points(pt: AnnealPoint, params: ModelParams, grid: usize) -> Vec<Stationary> {
    let grid = grid.max(8);
    let thetas: Vec<f64> = (0..=grid).map(|i| PI * i as f64 / grid as f64).collect();
    let res: Vec<f64> = thetas.iter().map(|&t| stationarity_residual(t, pt, params)).collect();
    let at = |theta: f64, minimum| Stationary {
        theta,
        energy: energy(theta, pt, params),
        minimum,
    };

    let mut out = Vec::new();
    // e' = -sin θ · residual, so θ = 0 is a minimum when the residual starts
    // out negative and θ = π when it ends positive.
    out.push(at(0.0, res[0] < 0.0 || (res[0] == 0.0 && res[1] <= 0.0)));
    for i in 0..grid {
        let (a, b) = (res[i], res[i + 1]);
        if a > 0.0 && b <= 0.0 {
            out.push(at(bisect_residual(thetas[i], thetas[i + 1], pt, params), true));
        } else if a <= 0.0 && b > 0.0 && !(i == 0 && a == 0.0) {
            out.push(at(bisect_residual(thetas[i], thetas[i + 1], pt, params), false));
        }
    }
    let last = res[grid];
    out.push(at(PI, last > 0.0 || (last == 0.0 && res[grid - 1] >= 0.0)));
    out
}

fn bisect_residual(mut a: f64, mut b: f64, pt: AnnealPoint, params: ModelParams) -> f64 {
    let left_positive = stationarity_residual(a, pt, params) > 0.0;
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return m;
        }
        let r = stationarity_residual(m, pt, params);
        if r == 0.0 {
            return m;
        }
        if (r > 0.0) == left_positive {
            a = m;
        } else {
            b = m;
        }
    }
}

/// Global minimizer of `e(θ)` on `[0, π]`.
pub fn find_theta0(pt: AnnealPoint, params: ModelParams) -> SemiClassicalState {
    find_theta0_with_grid(pt, params, DEFAULT_GRID)
}

pub fn find_theta0_with_grid(pt: AnnealPoint, params: ModelParams, grid: usize) -> SemiClassicalState {
    let minima: Vec<(f64, f64)> = stationary_points(pt, params, grid)
        .into_iter()
        .filter(|st| st.minimum)
        .map(|st| (st.theta, st.energy))
        .collect();
    let (theta0, energy, coexistence) = pick_ground(&minima);
    SemiClassicalState {
        theta0,
        energy,
        phase: classify(theta0, pt, params),
        coexistence,
    }
}

/// Lowest of `(θ, e)` candidates; near-degenerate ties go to the larger mᶻ.
fn pick_ground(candidates: &[(f64, f64)]) -> (f64, f64, bool) {
    let lowest = candidates
        .iter()
        .map(|c| c.1)
        .fold(f64::INFINITY, f64::min);
    let tied: Vec<&(f64, f64)> = candidates
        .iter()
        .filter(|c| c.1 - lowest <= TIE_TOLERANCE)
        .collect();
    let best = tied
        .iter()
        .copied()
        .max_by(|a, b| a.0.sin().total_cmp(&b.0.sin()))
        .expect("at least one candidate");
    let coexistence = tied.iter().any(|c| (c.0 - best.0).abs() > JUMP_THRESHOLD);
    (best.0, best.1, coexistence)
}

/// Phase label for a stationary angle θ₀ at `pt`.
///
/// The F/F′/INT split is diagnostic: θ₀ is compared against the large-p
/// closed forms with a relative band of [`CLASSIFY_BAND`].
pub fn classify(theta0: f64, pt: AnnealPoint, params: ModelParams) -> Phase {
    if theta0 < THETA_EPS {
        return Phase::QpPlus;
    }
    if PI - theta0 < THETA_EPS {
        return Phase::QpMinus;
    }
    let (s, l) = (pt.s(), pt.lambda());
    let cos = theta0.cos();
    if s * l > 0.0 {
        let bound = (1.0 - s) / (s * f64::from(params.p()) * l);
        if bound < 1.0 && cos <= bound * (1.0 + CLASSIFY_BAND) + 1e-12 {
            return Phase::F;
        }
    }
    if let Some(c) = fprime_cos(pt, params.k()) {
        if (cos - c).abs() <= CLASSIFY_BAND * c + 1e-12 {
            return Phase::FPrime;
        }
    }
    Phase::Intermediate
}

/// `cos θ` of the F′ closed form, when it lies in `[0, 1]`.
pub fn fprime_cos(pt: AnnealPoint, k: u32) -> Option<f64> {
    let (s, l) = (pt.s(), pt.lambda());
    let denom = f64::from(k) * s * (1.0 - l);
    if denom <= 0.0 {
        return None;
    }
    let q = (1.0 - s) / denom;
    (q <= 1.0).then(|| q.powf(1.0 / f64::from(k - 1)))
}

/// The F′–QP⁺ second-order line `s = 1/(1 + k(1 − λ))`.
pub fn second_order_line(k: u32, lambda: f64) -> Result<f64, SemiclassicalError> {
    validate_k(k)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ModelError::OutOfRange {
            name: "lambda",
            value: lambda,
        }
        .into());
    }
    Ok(1.0 / (1.0 + f64::from(k) * (1.0 - lambda)))
}

/// Approximate F and F′ branches for finite p, used to cross-check the
/// numerical minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteBranchEstimates {
    pub f_cos: f64,
    pub f_energy: f64,
    pub fprime: Option<FPrimeEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FPrimeEstimate {
    pub cos: f64,
    pub energy: f64,
    /// False for p = 3, where the target term enters the small-θ expansion at
    /// the same order as the driver and the closed form is not a solution.
    pub reliable: bool,
}

pub fn finite_p_branch_energies(
    pt: AnnealPoint,
    params: ModelParams,
) -> Result<FiniteBranchEstimates, SemiclassicalError> {
    let (s, l) = (pt.s(), pt.lambda());
    let (p, k) = (f64::from(params.p()), params.k());
    let quotient = if s * l > 0.0 {
        (1.0 - s) / (s * p * l)
    } else {
        f64::INFINITY
    };
    if quotient >= 0.5 {
        return Err(SemiclassicalError::ApproximationInvalid(quotient));
    }
    let f_cos = if k == 2 {
        (1.0 - s) / (s * (p * l + 2.0 * (1.0 - l)))
    } else {
        quotient
    };
    let fprime = fprime_cos(pt, k).map(|cos| FPrimeEstimate {
        cos,
        energy: energy(cos.acos(), pt, params),
        reliable: params.p() > 3,
    });
    Ok(FiniteBranchEstimates {
        f_cos,
        f_energy: energy(f_cos.acos(), pt, params),
        fprime,
    })
}

/// The p → ∞ limit, where every branch has a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LargePLimit {
    k: u32,
}

impl LargePLimit {
    pub fn new(k: u32) -> Result<Self, ModelError> {
        validate_k(k)?;
        Ok(Self { k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }
}

/// Closed-form energy of one p → ∞ branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchValue {
    pub energy: f64,
    pub theta: f64,
    /// Whether the branch is a locally stable solution at this point.
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticEnergies {
    pub f: BranchValue,
    /// Absent when `s(1 − λ) = 0`.
    pub fprime: Option<BranchValue>,
    pub qp_plus: BranchValue,
    /// Odd k only.
    pub qp_minus: Option<BranchValue>,
}

impl AsymptoticEnergies {
    pub fn entries(&self) -> Vec<(Phase, BranchValue)> {
        let mut out = vec![(Phase::F, self.f)];
        out.extend(self.fprime.map(|b| (Phase::FPrime, b)));
        out.push((Phase::QpPlus, self.qp_plus));
        out.extend(self.qp_minus.map(|b| (Phase::QpMinus, b)));
        out
    }

    pub fn get(&self, phase: Phase) -> Option<BranchValue> {
        self.entries().into_iter().find(|e| e.0 == phase).map(|e| e.1)
    }
}

/// Branch energies of the p → ∞ model.
pub fn pinfty_energies(pt: AnnealPoint, limit: LargePLimit) -> AsymptoticEnergies {
    let (s, l) = (pt.s(), pt.lambda());
    let k = limit.k;
    let kf = f64::from(k);
    let s_c = 1.0 / (1.0 + kf * (1.0 - l));

    let f = BranchValue {
        energy: -s * l,
        theta: FRAC_PI_2,
        valid: s * l > 0.0,
    };
    let fprime = (s * (1.0 - l) > 0.0).then(|| {
        let q = (1.0 - s) / (kf * s * (1.0 - l));
        let cos = q.max(0.0).powf(1.0 / (kf - 1.0));
        BranchValue {
            energy: -(kf - 1.0) / kf * cos * (1.0 - s),
            theta: cos.min(1.0).acos(),
            valid: q <= 1.0,
        }
    });
    let qp_plus = BranchValue {
        energy: s * (1.0 - l) - 1.0 + s,
        theta: 0.0,
        valid: s <= s_c,
    };
    let qp_minus = (k % 2 == 1).then(|| BranchValue {
        energy: -s * (1.0 - l) + 1.0 - s,
        theta: PI,
        valid: s >= s_c,
    });
    AsymptoticEnergies {
        f,
        fprime,
        qp_plus,
        qp_minus,
    }
}

/// Common interface of the finite-p model and its p → ∞ limit, used by the
/// diagram scanner, the line tracer and the path evaluator.
pub trait Landscape: Sync {
    /// `None` for the p → ∞ limit.
    fn p(&self) -> Option<u32>;
    fn k(&self) -> u32;
    fn ground_state(&self, pt: AnnealPoint) -> SemiClassicalState;
    /// The local minimum at `pt` reached by continuing the branch that holds
    /// `from`, or `None` if that branch does not exist there.
    fn follow_branch(&self, from: &SemiClassicalState, pt: AnnealPoint) -> Option<SemiClassicalState>;
    fn spin_wave_gap(&self, _pt: AnnealPoint) -> Option<GapResult> {
        None
    }
}

impl Landscape for ModelParams {
    fn p(&self) -> Option<u32> {
        Some(ModelParams::p(self))
    }

    fn k(&self) -> u32 {
        ModelParams::k(self)
    }

    fn ground_state(&self, pt: AnnealPoint) -> SemiClassicalState {
        find_theta0(pt, *self)
    }

    fn follow_branch(&self, from: &SemiClassicalState, pt: AnnealPoint) -> Option<SemiClassicalState> {
        let points = stationary_points(pt, *self, DEFAULT_GRID);
        let theta = basin_minimum(&points, from.theta0)?;
        Some(SemiClassicalState {
            theta0: theta.theta,
            energy: theta.energy,
            phase: classify(theta.theta, pt, *self),
            coexistence: false,
        })
    }

    fn spin_wave_gap(&self, pt: AnnealPoint) -> Option<GapResult> {
        Some(spinwave::gap(pt, *self))
    }
}

/// The minimum whose basin of attraction (bounded by the neighbouring
/// maxima) contains `theta`.
fn basin_minimum(points: &[Stationary], theta: f64) -> Option<Stationary> {
    let left = points
        .iter()
        .filter(|st| !st.minimum && st.theta < theta)
        .map(|st| st.theta)
        .fold(f64::NEG_INFINITY, f64::max);
    let right = points
        .iter()
        .filter(|st| !st.minimum && st.theta > theta)
        .map(|st| st.theta)
        .fold(f64::INFINITY, f64::min);
    points
        .iter()
        .filter(|st| st.minimum && st.theta >= left && st.theta <= right)
        .min_by(|a, b| (a.theta - theta).abs().total_cmp(&(b.theta - theta).abs()))
        .copied()
}

impl Landscape for LargePLimit {
    fn p(&self) -> Option<u32> {
        None
    }

    fn k(&self) -> u32 {
        self.k
    }

    fn ground_state(&self, pt: AnnealPoint) -> SemiClassicalState {
        let branches = pinfty_energies(pt, *self).entries();
        let valid: Vec<&(Phase, BranchValue)> = branches.iter().filter(|b| b.1.valid).collect();
        let candidates: Vec<(f64, f64)> = valid.iter().map(|b| (b.1.theta, b.1.energy)).collect();
        let (theta0, energy, coexistence) = pick_ground(&candidates);
        let phase = valid
            .iter()
            .find(|b| b.1.theta == theta0 && b.1.energy == energy)
            .map(|b| b.0)
            .expect("QP+ or QP- is always available");
        SemiClassicalState {
            theta0,
            energy,
            phase,
            coexistence,
        }
    }

    fn follow_branch(&self, from: &SemiClassicalState, pt: AnnealPoint) -> Option<SemiClassicalState> {
        let branch = pinfty_energies(pt, *self).get(from.phase)?;
        branch.valid.then_some(SemiClassicalState {
            theta0: branch.theta,
            energy: branch.energy,
            phase: from.phase,
            coexistence: false,
        })
    }
}

/// One grid cell of a phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramCell {
    pub point: AnnealPoint,
    pub state: SemiClassicalState,
}

/// Ground states on a uniform `n_lambda × n_s` grid covering the closed unit
/// square, stored row-major with λ as the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub p: Option<u32>,
    pub k: u32,
    pub n_lambda: usize,
    pub n_s: usize,
    pub cells: Vec<DiagramCell>,
}

impl PhaseDiagram {
    pub fn cell(&self, i_lambda: usize, i_s: usize) -> &DiagramCell {
        &self.cells[i_lambda * self.n_s + i_s]
    }

    /// The cells of one λ column, in increasing s.
    pub fn column(&self, i_lambda: usize) -> &[DiagramCell] {
        &self.cells[i_lambda * self.n_s..(i_lambda + 1) * self.n_s]
    }

    pub fn contains_phase(&self, phase: Phase) -> bool {
        self.cells.iter().any(|c| c.state.phase == phase)
    }
}

pub(crate) fn grid_value(i: usize, n: usize) -> f64 {
    if i + 1 == n {
        1.0
    } else {
        i as f64 / (n - 1) as f64
    }
}

/// Evaluates the ground state on every grid point (in parallel; the output
/// order does not depend on scheduling).
pub fn scan_diagram<L: Landscape>(
    landscape: &L,
    n_lambda: usize,
    n_s: usize,
) -> Result<PhaseDiagram, SemiclassicalError> {
    if n_lambda < 2 || n_s < 2 {
        return Err(SemiclassicalError::Resolution(n_lambda, n_s));
    }
    let cells = (0..n_lambda * n_s)
        .into_par_iter()
        .map(|idx| {
            let point = AnnealPoint::clamped(grid_value(idx / n_s, n_lambda), grid_value(idx % n_s, n_s));
            DiagramCell {
                point,
                state: landscape.ground_state(point),
            }
        })
        .collect();
    Ok(PhaseDiagram {
        p: landscape.p(),
        k: landscape.k(),
        n_lambda,
        n_s,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransitionKind {
    FirstOrder,
    SecondOrder,
}

/// A resolved transition between two ground-state branches along a 1-D cut
/// `x ↦ point(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub x: f64,
    pub kind: TransitionKind,
    pub before: SemiClassicalState,
    pub after: SemiClassicalState,
    /// |e_before − e_after| at `x`, both branches continued to the crossing.
    /// Zero for second-order crossings.
    pub energy_difference: f64,
    /// Width of the final bracket in `x`.
    pub width: f64,
}

impl Crossing {
    pub fn theta_jump(&self) -> f64 {
        (self.after.theta0 - self.before.theta0).abs()
    }
}

fn distinct(a: &SemiClassicalState, b: &SemiClassicalState) -> bool {
    (a.theta0 - b.theta0).abs() > JUMP_THRESHOLD
}

fn is_para(st: &SemiClassicalState) -> bool {
    st.theta0 < THETA_EPS || PI - st.theta0 < THETA_EPS
}

/// Locates and classifies the θ₀ change between `xa` and `xb`.
///
/// The bracket is first narrowed to `tol`, following the paramagnetic /
/// ferromagnetic boundary when the ends differ in that respect and the half
/// with the larger θ₀ change otherwise. A first-order crossing has two coexisting minima at the final
/// bracket; its position is then refined by bisecting the energy difference
/// of the two continued branches. A second-order crossing connects a
/// paramagnet to a ferromagnet continuously. Anything else is a smooth
/// crossover and yields `None`.
fn resolve_one<L, F>(
    landscape: &L,
    point_at: &F,
    mut xa: f64,
    mut xb: f64,
    mut ga: SemiClassicalState,
    mut gb: SemiClassicalState,
    tol: f64,
) -> (Option<Crossing>, Bracket)
where
    L: Landscape + ?Sized,
    F: Fn(f64) -> AnnealPoint,
{
    while (xb - xa).abs() > tol {
        let xm = 0.5 * (xa + xb);
        if xm == xa || xm == xb {
            break;
        }
        let gm = landscape.ground_state(point_at(xm));
        let left = if is_para(&ga) != is_para(&gb) {
            is_para(&gm) != is_para(&ga)
        } else {
            (gm.theta0 - ga.theta0).abs() >= (gb.theta0 - gm.theta0).abs()
        };
        if left {
            xb = xm;
            gb = gm;
        } else {
            xa = xm;
            ga = gm;
        }
    }

    let a_at_b = landscape.follow_branch(&ga, point_at(xb));
    let b_at_a = landscape.follow_branch(&gb, point_at(xa));
    let coexist = distinct(&ga, &gb)
        && (a_at_b.is_some_and(|st| distinct(&st, &gb)) || b_at_a.is_some_and(|st| distinct(&st, &ga)));

    if coexist {
        // Bisect e_A − e_B with both branches continued to the midpoint. A
        // branch that no longer exists at the midpoint is past its spinodal,
        // which places the crossing on the other side.
        let mut width = (xb - xa).abs();
        let (mut lo, mut hi) = (xa, xb);
        let mut diff = f64::NAN;
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            x = 0.5 * (lo + hi);
            if x == lo || x == hi {
                break;
            }
            let pt = point_at(x);
            let a = landscape.follow_branch(&ga, pt);
            let b = landscape.follow_branch(&gb, pt);
            let a_lower = match (a, b) {
                (Some(a), Some(b)) if distinct(&a, &b) => {
                    diff = a.energy - b.energy;
                    if diff == 0.0 {
                        width = (hi - lo).abs();
                        break;
                    }
                    diff < 0.0
                }
                (Some(_), None) => true,
                (None, Some(_)) => false,
                _ => break,
            };
            // Branch A is the ground state before the crossing.
            if a_lower {
                lo = x;
            } else {
                hi = x;
            }
            width = (hi - lo).abs();
            if width <= LINE_RESOLUTION {
                break;
            }
        }
        if diff.is_nan() {
            diff = ga.energy - gb.energy;
        }
        let c = Crossing {
            x,
            kind: TransitionKind::FirstOrder,
            before: ga,
            after: gb,
            energy_difference: diff.abs(),
            width,
        };
        return (Some(c), Bracket { xa, xb, ga, gb });
    }

    let found = (is_para(&ga) != is_para(&gb)).then(|| Crossing {
        x: 0.5 * (xa + xb),
        kind: TransitionKind::SecondOrder,
        before: ga,
        after: gb,
        energy_difference: 0.0,
        width: (xb - xa).abs(),
    });
    (found, Bracket { xa, xb, ga, gb })
}

struct Bracket {
    xa: f64,
    xb: f64,
    ga: SemiClassicalState,
    gb: SemiClassicalState,
}

fn may_hide_crossing(a: &SemiClassicalState, b: &SemiClassicalState) -> bool {
    distinct(a, b) || is_para(a) != is_para(b)
}

/// All crossings between `xa` and `xb`, in order. After one crossing is
/// resolved, the stretches on either side of its final bracket are searched
/// again, so a second-order point and a nearby jump sharing one sampling
/// interval are both found.
pub(crate) fn resolve_crossings<L, F>(
    landscape: &L,
    point_at: &F,
    xa: f64,
    xb: f64,
    ga: SemiClassicalState,
    gb: SemiClassicalState,
    tol: f64,
) -> Vec<Crossing>
where
    L: Landscape + ?Sized,
    F: Fn(f64) -> AnnealPoint,
{
    let (found, inner) = resolve_one(landscape, point_at, xa, xb, ga, gb, tol);
    let Some(c) = found else {
        return Vec::new();
    };
    let mut out = Vec::new();
    if (inner.xa - xa).abs() > tol && may_hide_crossing(&ga, &inner.ga) {
        out.extend(resolve_crossings(landscape, point_at, xa, inner.xa, ga, inner.ga, tol));
    }
    out.push(c);
    if (xb - inner.xb).abs() > tol && may_hide_crossing(&inner.gb, &gb) {
        out.extend(resolve_crossings(landscape, point_at, inner.xb, xb, inner.gb, gb, tol));
    }
    out
}

/// One resolved point of a transition line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinePoint {
    pub lambda: f64,
    pub s: f64,
    pub theta_below: f64,
    pub theta_above: f64,
    pub phase_below: Phase,
    pub phase_above: Phase,
    pub energy_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionLine {
    pub kind: TransitionKind,
    /// Phases below and above the line (in increasing s) at the seed.
    pub pair: (Phase, Phase),
    /// Ordered by increasing λ.
    pub points: Vec<LinePoint>,
    /// Largest bracket width in s among the resolved points.
    pub tolerance: f64,
}

impl TransitionLine {
    pub fn polyline(&self) -> Vec<AnnealPoint> {
        self.points
            .iter()
            .map(|p| AnnealPoint::clamped(p.lambda, p.s))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Plus,
    Minus,
    Ferro,
}

fn side(phase: Phase) -> Side {
    match phase {
        Phase::QpPlus => Side::Plus,
        Phase::QpMinus => Side::Minus,
        _ => Side::Ferro,
    }
}

fn same_pair(a: (Phase, Phase), b: (Phase, Phase)) -> bool {
    let (a0, a1, b0, b1) = (side(a.0), side(a.1), side(b.0), side(b.1));
    if (a0, a1) != (b0, b1) && (a0, a1) != (b1, b0) {
        return false;
    }
    // Two ferromagnetic sides: keep F-like and F′-like labels apart when both
    // are resolved, ignore INT.
    let resolved = |p: Phase| matches!(p, Phase::F | Phase::FPrime);
    if a0 == Side::Ferro && a1 == Side::Ferro {
        let ordered = |x: Phase, y: Phase| x == y || !resolved(x) || !resolved(y);
        return ordered(a.0, b.0) && ordered(a.1, b.1);
    }
    true
}

/// First-order crossings in s at fixed λ inside `[s_lo, s_hi]`.
fn first_order_crossings_at<L: Landscape + ?Sized>(
    landscape: &L,
    lambda: f64,
    s_lo: f64,
    s_hi: f64,
    step: f64,
) -> Vec<Crossing> {
    let (s_lo, s_hi) = (s_lo.max(0.0), s_hi.min(1.0));
    if s_hi <= s_lo {
        return Vec::new();
    }
    let n = ((s_hi - s_lo) / step).ceil().max(1.0) as usize;
    let point_at = |s: f64| AnnealPoint::clamped(lambda, s);
    let samples: Vec<(f64, SemiClassicalState)> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let s = if i == n { s_hi } else { s_lo + (s_hi - s_lo) * i as f64 / n as f64 };
            (s, landscape.ground_state(point_at(s)))
        })
        .collect();
    samples
        .par_windows(2)
        .filter(|w| may_hide_crossing(&w[0].1, &w[1].1))
        .flat_map_iter(|w| {
            resolve_crossings(landscape, &point_at, w[0].0, w[1].0, w[0].1, w[1].1, 1e-9)
                .into_iter()
                .filter(|c| c.kind == TransitionKind::FirstOrder)
        })
        .collect()
}

/// Rounds to the λ lattice so that marching does not accumulate error.
fn snap(lambda: f64) -> f64 {
    let per_unit = (1.0 / LINE_STEP).round();
    let r = (lambda * per_unit).round() / per_unit;
    if (r - lambda).abs() < 1e-9 {
        r
    } else {
        lambda
    }
}

fn line_point(lambda: f64, c: &Crossing) -> LinePoint {
    LinePoint {
        lambda,
        s: c.x,
        theta_below: c.before.theta0,
        theta_above: c.after.theta0,
        phase_below: c.before.phase,
        phase_above: c.after.phase,
        energy_difference: c.energy_difference,
    }
}

/// Traces the first-order line through a discontinuity near `seed`.
///
/// At each λ (step 1e-2, both directions from the seed) the crossing is
/// bracketed on an s window around the extrapolated position and resolved by
/// bisecting the energy difference of the two competing branches. The line
/// stops at the boundary of the square, where the θ₀ jump drops below
/// [`JUMP_THRESHOLD`] (critical endpoint), or where the crossing changes to a
/// different pair of phases.
pub fn trace_first_order<L: Landscape>(
    landscape: &L,
    seed: AnnealPoint,
) -> Result<TransitionLine, SemiclassicalError> {
    let no_jump = SemiclassicalError::NoDiscontinuity {
        lambda: seed.lambda(),
        s: seed.s(),
    };
    let lambda0 = seed.lambda();
    let first = first_order_crossings_at(
        landscape,
        lambda0,
        seed.s() - SEED_WINDOW,
        seed.s() + SEED_WINDOW,
        SEED_STEP,
    )
    .into_iter()
    .min_by(|a, b| (a.x - seed.s()).abs().total_cmp(&(b.x - seed.s()).abs()))
    .ok_or(no_jump)?;
    let pair = (first.before.phase, first.after.phase);

    let mut points = vec![line_point(lambda0, &first)];
    let mut tolerance = first.width;
    for direction in [1.0, -1.0] {
        let mut trail = vec![(lambda0, first.x)];
        let mut lambda = lambda0;
        loop {
            if (direction > 0.0 && lambda >= 1.0) || (direction < 0.0 && lambda <= 0.0) {
                break;
            }
            let next = snap(lambda + direction * LINE_STEP).clamp(0.0, 1.0);
            let predicted = match trail.as_slice() {
                [.., (l1, s1), (l2, s2)] => s2 + (s2 - s1) / (l2 - l1) * (next - l2),
                [(_, s)] => *s,
                [] => unreachable!(),
            };
            let found = first_order_crossings_at(
                landscape,
                next,
                predicted - MARCH_WINDOW,
                predicted + MARCH_WINDOW,
                MARCH_STEP,
            )
            .into_iter()
            .filter(|c| same_pair(pair, (c.before.phase, c.after.phase)))
            .min_by(|a, b| (a.x - predicted).abs().total_cmp(&(b.x - predicted).abs()));
            let Some(c) = found else { break };
            if c.theta_jump() <= JUMP_THRESHOLD {
                break;
            }
            tolerance = tolerance.max(c.width);
            points.push(line_point(next, &c));
            trail.push((next, c.x));
            lambda = next;
        }
    }
    points.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(TransitionLine {
        kind: TransitionKind::FirstOrder,
        pair,
        points,
        tolerance,
    })
}

const SEED_LAMBDA_STEP: f64 = 0.05;
const SEED_SCAN_STEP: f64 = 2e-3;

/// Every first-order line, seeded from crossings found on columns
/// λ = 0, 0.05, …, 1 and traced with [`trace_first_order`].
pub fn first_order_lines<L: Landscape>(landscape: &L) -> Vec<TransitionLine> {
    let columns = (1.0 / SEED_LAMBDA_STEP).round() as usize;
    let mut lines: Vec<TransitionLine> = Vec::new();
    for i in 0..=columns {
        let lambda = grid_value(i, columns + 1);
        for c in first_order_crossings_at(landscape, lambda, 0.0, 1.0, SEED_SCAN_STEP) {
            let covered = lines.iter().any(|line| {
                line.points
                    .iter()
                    .any(|p| (p.lambda - lambda).abs() < 1e-9 && (p.s - c.x).abs() < 1e-6)
            });
            if covered {
                continue;
            }
            if let Ok(line) = trace_first_order(landscape, AnnealPoint::clamped(lambda, c.x)) {
                lines.push(line);
            }
        }
    }
    lines
}

const CONTINUITY_PROBE: f64 = 1e-12;

/// Whether the QP⁺ → ferromagnet change across `s = 1/(1 + k(1 − λ))` at this
/// λ is continuous.
fn continuous_at<L: Landscape + ?Sized>(landscape: &L, lambda: f64) -> Option<(SemiClassicalState, SemiClassicalState)> {
    let s_c = 1.0 / (1.0 + f64::from(landscape.k()) * (1.0 - lambda));
    if s_c + CONTINUITY_PROBE > 1.0 {
        return None;
    }
    let below = landscape.ground_state(AnnealPoint::clamped(lambda, s_c - CONTINUITY_PROBE));
    let above = landscape.ground_state(AnnealPoint::clamped(lambda, s_c + CONTINUITY_PROBE));
    (below.theta0 < THETA_EPS && above.theta0 < JUMP_THRESHOLD).then_some((below, above))
}

/// Samples the F′–QP⁺ second-order line from λ = 0 (step 1e-2) up to the
/// point where a first-order transition preempts it; the endpoint itself is
/// located by bisection in λ.
pub fn trace_second_order<L: Landscape>(landscape: &L) -> TransitionLine {
    let k = f64::from(landscape.k());
    let s_of = |lambda: f64| 1.0 / (1.0 + k * (1.0 - lambda));
    let mut points = Vec::new();
    let mut push = |lambda: f64, below: &SemiClassicalState, above: &SemiClassicalState| {
        points.push(LinePoint {
            lambda,
            s: s_of(lambda),
            theta_below: below.theta0,
            theta_above: above.theta0,
            phase_below: below.phase,
            phase_above: above.phase,
            energy_difference: (below.energy - above.energy).abs(),
        })
    };

    let mut good = None;
    let mut bad = None;
    let steps = (1.0 / LINE_STEP).round() as usize;
    for i in 0..=steps {
        let lambda = grid_value(i, steps + 1);
        match continuous_at(landscape, lambda) {
            Some((b, a)) => {
                push(lambda, &b, &a);
                good = Some(lambda);
            }
            None => {
                bad = Some(lambda);
                break;
            }
        }
    }
    if let (Some(mut lo), Some(mut hi)) = (good, bad) {
        while hi - lo > LINE_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if continuous_at(landscape, mid).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if let Some((b, a)) = continuous_at(landscape, lo) {
            push(lo, &b, &a);
        }
    }
    TransitionLine {
        kind: TransitionKind::SecondOrder,
        pair: (Phase::QpPlus, Phase::FPrime),
        points,
        tolerance: CONTINUITY_PROBE,
    }
}
