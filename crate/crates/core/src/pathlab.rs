//! Annealing paths through the `(λ, s)` square and the transitions they
//! cross.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AnnealPoint, SemiClassicalState};
use crate::semiclassical::{resolve_crossings, Landscape, TransitionKind, JUMP_THRESHOLD};

/// Second-order crossings must have a spin-wave gap below this.
pub const GAP_FLOOR: f64 = 1e-3;
/// Bracket width, in path parameter, of located crossings.
pub const PATH_TOLERANCE: f64 = 1e-6;
pub const MIN_SAMPLES: usize = 16;
const SAFE_SCAN_STEP: f64 = 0.01;
const SAFE_SCAN_SAMPLES: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("a path needs at least two waypoints")]
    TooShort,
    #[error("path must start at s = 0")]
    BadStart,
    #[error("path must end at (1,1)")]
    BadEnd,
    #[error("s decreases at waypoint {index}")]
    DecreasingS { index: usize },
    #[error("at least {MIN_SAMPLES} samples are required, got {0}")]
    TooFewSamples(usize),
}

/// Piecewise-linear path through its waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealPath {
    waypoints: Vec<AnnealPoint>,
    /// Cumulative arc length at each waypoint.
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl AnnealPath {
    /// Validates start at `s = 0` and end at `(1, 1)`; with `strict`, also
    /// rejects any decrease of s.
    pub fn new(waypoints: Vec<AnnealPoint>, strict: bool) -> Result<Self, PathError> {
        if waypoints.len() < 2 {
            return Err(PathError::TooShort);
        }
        if waypoints[0].s() != 0.0 {
            return Err(PathError::BadStart);
        }
        let last = waypoints[waypoints.len() - 1];
        if last.lambda() != 1.0 || last.s() != 1.0 {
            return Err(PathError::BadEnd);
        }
        if strict {
            if let Some(i) = waypoints.windows(2).position(|w| w[1].s() < w[0].s()) {
                return Err(PathError::DecreasingS { index: i + 1 });
            }
        }
        Ok(Self::unchecked(waypoints))
    }

    fn unchecked(waypoints: Vec<AnnealPoint>) -> Self {
        let mut cumulative = vec![0.0];
        for w in waypoints.windows(2) {
            let d = (w[1].lambda() - w[0].lambda()).hypot(w[1].s() - w[0].s());
            cumulative.push(cumulative.last().unwrap() + d);
        }
        Self { waypoints, cumulative }
    }

    /// `(λ, 0) → (λ, 1) → (1, 1)`.
    pub fn vertical_rise(lambda: f64) -> Result<Self, PathError> {
        let start = AnnealPoint::new(lambda, 0.0).map_err(|_| PathError::BadStart)?;
        let mut points = vec![start, AnnealPoint::clamped(lambda, 1.0)];
        if lambda != 1.0 {
            points.push(AnnealPoint::clamped(1.0, 1.0));
        }
        Self::new(points, true)
    }

    /// The same geometry traversed backwards. Not a valid annealing path;
    /// used to check that crossing detection is direction independent.
    pub fn reversed(&self) -> Self {
        Self::unchecked(self.waypoints.iter().rev().copied().collect())
    }

    pub fn waypoints(&self) -> &[AnnealPoint] {
        &self.waypoints
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Point at arc-length fraction `t ∈ [0, 1]`.
    pub fn point_at(&self, t: f64) -> AnnealPoint {
        let total = self.length();
        if total == 0.0 {
            return self.waypoints[0];
        }
        let target = t.clamp(0.0, 1.0) * total;
        let seg = self
            .cumulative
            .windows(2)
            .position(|c| target <= c[1])
            .unwrap_or(self.waypoints.len() - 2);
        let (c0, c1) = (self.cumulative[seg], self.cumulative[seg + 1]);
        let f = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        let (a, b) = (self.waypoints[seg], self.waypoints[seg + 1]);
        AnnealPoint::clamped(
            a.lambda() + f * (b.lambda() - a.lambda()),
            a.s() + f * (b.s() - a.s()),
        )
    }

    /// True when every segment runs along λ = 0 or s = 1, where the target
    /// never acts before the end of the schedule.
    pub fn is_meaningless(&self) -> bool {
        self.waypoints.windows(2).all(|w| {
            (w[0].lambda() == 0.0 && w[1].lambda() == 0.0) || (w[0].s() == 1.0 && w[1].s() == 1.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathCrossing {
    /// Arc-length fraction along the path.
    pub position: f64,
    pub point: AnnealPoint,
    pub kind: TransitionKind,
    pub theta_jump: f64,
    /// Spin-wave gap at the crossing, when available.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub crossings: Vec<PathCrossing>,
    /// Smallest sampled spin-wave gap and its position.
    pub min_gap: Option<(f64, f64)>,
    /// Path-parameter intervals over which the spin-wave expansion breaks
    /// down at every sample.
    pub breakdown_intervals: Vec<(f64, f64)>,
    pub meaningless: bool,
}

impl PathReport {
    pub fn count(&self, kind: TransitionKind) -> usize {
        self.crossings.iter().filter(|c| c.kind == kind).count()
    }
}

/// Samples the path uniformly in arc length and locates every first- and
/// second-order crossing between neighbouring samples.
pub fn evaluate_path<L: Landscape>(path: &AnnealPath, landscape: &L, samples: usize) -> Result<PathReport, PathError> {
    if samples < MIN_SAMPLES {
        return Err(PathError::TooFewSamples(samples));
    }
    let ts: Vec<f64> = (0..samples)
        .map(|i| if i + 1 == samples { 1.0 } else { i as f64 / (samples - 1) as f64 })
        .collect();
    let evaluated: Vec<(SemiClassicalState, Option<f64>)> = ts
        .par_iter()
        .map(|&t| {
            let pt = path.point_at(t);
            let gap = landscape.spin_wave_gap(pt).map(|g| g.gap.unwrap_or(f64::NAN));
            (landscape.ground_state(pt), gap)
        })
        .collect();

    let point_at = |t: f64| path.point_at(t);
    let has_gaps = landscape.p().is_some();
    let mut crossings: Vec<PathCrossing> = (0..samples - 1)
        .into_par_iter()
        .filter(|&i| {
            let (a, b) = (&evaluated[i].0, &evaluated[i + 1].0);
            (a.theta0 - b.theta0).abs() > JUMP_THRESHOLD || a.phase.is_paramagnetic() != b.phase.is_paramagnetic()
        })
        .flat_map_iter(|i| {
            resolve_crossings(
                landscape,
                &point_at,
                ts[i],
                ts[i + 1],
                evaluated[i].0,
                evaluated[i + 1].0,
                PATH_TOLERANCE,
            )
        })
        .filter_map(|c| {
            let pt = point_at(c.x);
            let gap = landscape.spin_wave_gap(pt).map(|g| g.gap.unwrap_or(0.0));
            if c.kind == TransitionKind::SecondOrder && has_gaps && gap.is_some_and(|g| g >= GAP_FLOOR) {
                return None;
            }
            if c.kind == TransitionKind::FirstOrder && c.theta_jump() <= JUMP_THRESHOLD {
                return None;
            }
            Some(PathCrossing {
                position: c.x,
                point: pt,
                kind: c.kind,
                theta_jump: c.theta_jump(),
                gap,
            })
        })
        .collect();
    crossings.sort_by(|a, b| a.position.total_cmp(&b.position));

    let min_gap = ts
        .iter()
        .zip(&evaluated)
        .filter_map(|(&t, (_, g))| g.filter(|g| g.is_finite()).map(|g| (g, t)))
        .min_by(|a, b| a.0.total_cmp(&b.0));

    let mut breakdown_intervals = Vec::new();
    let mut open: Option<f64> = None;
    for (&t, (_, g)) in ts.iter().zip(&evaluated) {
        let broken = g.is_some_and(|g| g.is_nan());
        match (broken, open) {
            (true, None) => open = Some(t),
            (false, Some(start)) => {
                breakdown_intervals.push((start, t));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        breakdown_intervals.push((start, 1.0));
    }

    Ok(PathReport {
        crossings,
        min_gap,
        breakdown_intervals,
        meaningless: path.is_meaningless(),
    })
}

/// Largest λ (scanned downward in steps of 0.01) whose vertical-rise path
/// crosses no first-order transition.
pub fn suggest_safe_lambda<L: Landscape>(landscape: &L) -> Option<f64> {
    let steps = (1.0 / SAFE_SCAN_STEP).round() as usize;
    (1..steps)
        .rev()
        .map(|i| i as f64 * SAFE_SCAN_STEP)
        .find(|&lambda| {
            let path = AnnealPath::vertical_rise(lambda).expect("λ inside (0, 1)");
            evaluate_path(&path, landscape, SAFE_SCAN_SAMPLES)
                .map(|r| r.count(TransitionKind::FirstOrder) == 0)
                .unwrap_or(false)
        })
}
