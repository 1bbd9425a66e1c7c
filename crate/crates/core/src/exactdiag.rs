//! Exact spectrum in the maximal-spin sector `S = N/2` and ground-state
//! overlaps of the initial drivers with the target ground state.
//!
//! Basis index `i` corresponds to `Sᶻ = m = i − N/2`. The Hamiltonian
//!
//! ```text
//! H = −sλN(2Sᶻ/N)^p + s(1−λ)N(2Sˣ/N)^k − 2(1−s)Sˣ
//! ```
//!
//! is applied matrix-free: a diagonal term plus `k` products with the
//! tridiagonal `Sˣ`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{power, AnnealPoint, ModelParams};

/// Largest N handled by the dense solver by default.
pub const DENSE_LIMIT: usize = 512;
/// Default bound on the residual `‖Hv − Ev‖` of every returned pair.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Eigenvalues closer than this count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

const GOLDEN: f64 = 0.618_033_988_749_895;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactDiagError {
    #[error("the number of spins must be at least 1")]
    EmptySystem,
    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("requested {count} eigenpairs from a space of dimension {dim}")]
    InvalidCount { count: usize, dim: usize },
    #[error("Lanczos did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// The Hamiltonian restricted to the `S = N/2` sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorOperator {
    n: usize,
    params: ModelParams,
    pt: AnnealPoint,
    diagonal: Vec<f64>,
    /// Coupling of basis states `i` and `i + 1` in `Sˣ`.
    sx_offdiag: Vec<f64>,
}

impl SectorOperator {
    pub fn new(n: usize, params: ModelParams, pt: AnnealPoint) -> Result<Self, ExactDiagError> {
        if n == 0 {
            return Err(ExactDiagError::EmptySystem);
        }
        let nf = n as f64;
        let (s, l) = (pt.s(), pt.lambda());
        let diagonal = (0..=n)
            .map(|i| {
                let m2 = 2.0 * i as f64 - nf;
                -s * l * nf * power(m2 / nf, params.p())
            })
            .collect();
        Ok(Self {
            n,
            params,
            pt,
            diagonal,
            sx_offdiag: sx_couplings(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn point(&self) -> AnnealPoint {
        self.pt
    }

    /// `H v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, ExactDiagError> {
        if v.len() != self.dim() {
            return Err(ExactDiagError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(self.apply_unchecked(v))
    }

    fn apply_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let (s, l) = (self.pt.s(), self.pt.lambda());
        let nf = self.n as f64;
        let sx_v = sx_apply(&self.sx_offdiag, v);
        let mut out: Vec<f64> = self
            .diagonal
            .iter()
            .zip(v)
            .zip(&sx_v)
            .map(|((d, x), y)| d * x - 2.0 * (1.0 - s) * y)
            .collect();
        let driver = s * (1.0 - l);
        if driver != 0.0 {
            let scale = 2.0 / nf;
            let mut w: Vec<f64> = sx_v.iter().map(|y| scale * y).collect();
            for _ in 1..self.params.k() {
                w = sx_apply(&self.sx_offdiag, &w);
                w.iter_mut().for_each(|x| *x *= scale);
            }
            out.iter_mut().zip(&w).for_each(|(o, x)| *o += driver * nf * x);
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        let mut e = vec![0.0; dim];
        for j in 0..dim {
            e[j] = 1.0;
            let col = self.apply_unchecked(&e);
            e[j] = 0.0;
            m.column_mut(j).copy_from_slice(&col);
        }
        // Symmetrize away roundoff from the repeated products.
        (&m + m.transpose()) * 0.5
    }
}

fn sx_couplings(n: usize) -> Vec<f64> {
    let s = n as f64 / 2.0;
    (0..n)
        .map(|i| {
            let m = i as f64 - s;
            0.5 * (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
        })
        .collect()
}

fn sx_apply(offdiag: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (i, a) in offdiag.iter().enumerate() {
        out[i] += a * v[i + 1];
        out[i + 1] += a * v[i];
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Solver {
    /// Dense for N ≤ [`DENSE_LIMIT`], Lanczos above.
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub solver: Solver,
    pub tolerance: f64,
    /// Defaults to 10·N.
    pub max_iterations: Option<usize>,
    /// Report the gap to the next level that is not degenerate with E₀.
    pub distinct_gap: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            solver: Solver::Auto,
            tolerance: RESIDUAL_TOLERANCE,
            max_iterations: None,
            distinct_gap: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSpectrum {
    pub n: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors, one per eigenvalue.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// E₁ − E₀, or the distinct gap if requested.
    pub gap_n: Option<f64>,
    /// E₁ − E₀ < [`DEGENERACY_TOLERANCE`].
    pub degenerate: bool,
}

impl SectorSpectrum {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn ground_vector(&self) -> &[f64] {
        &self.vectors[0]
    }
}

/// The `count` lowest eigenpairs with default options.
pub fn lowest_eigenpairs(op: &SectorOperator, count: usize) -> Result<SectorSpectrum, ExactDiagError> {
    lowest_eigenpairs_with(op, count, SolverOptions::default())
}

pub fn lowest_eigenpairs_with(
    op: &SectorOperator,
    count: usize,
    opts: SolverOptions,
) -> Result<SectorSpectrum, ExactDiagError> {
    let dim = op.dim();
    if count == 0 || count > dim {
        return Err(ExactDiagError::InvalidCount { count, dim });
    }
    let dense = match opts.solver {
        Solver::Dense => true,
        Solver::Lanczos => false,
        Solver::Auto => op.n() <= DENSE_LIMIT,
    };
    let (eigenvalues, mut vectors) = if dense {
        dense_pairs(op, count)
    } else {
        lanczos(op, count, &opts)?
    };
    vectors.iter_mut().for_each(|v| fix_sign(v));
    let residuals = eigenvalues
        .iter()
        .zip(&vectors)
        .map(|(&e, v)| residual(op, e, v))
        .collect();

    let degenerate = eigenvalues.len() > 1 && eigenvalues[1] - eigenvalues[0] < DEGENERACY_TOLERANCE;
    let gap_n = if opts.distinct_gap {
        eigenvalues
            .iter()
            .find(|&&e| e - eigenvalues[0] >= DEGENERACY_TOLERANCE)
            .map(|e| e - eigenvalues[0])
    } else {
        eigenvalues.get(1).map(|e| e - eigenvalues[0])
    };
    Ok(SectorSpectrum {
        n: op.n(),
        eigenvalues,
        vectors,
        residuals,
        gap_n,
        degenerate,
    })
}

fn dense_pairs(op: &SectorOperator, count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(op.to_dense());
    lowest_of(&eig, count)
        .into_iter()
        .map(|j| (eig.eigenvalues[j], eig.eigenvectors.column(j).iter().copied().collect()))
        .unzip()
}

fn lowest_of(eig: &SymmetricEigen<f64, nalgebra::Dyn>, count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(count);
    order
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(op: &SectorOperator, e: f64, v: &[f64]) -> f64 {
    let hv = op.apply_unchecked(v);
    hv.iter()
        .zip(v)
        .map(|(h, x)| (h - e * x).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Positive largest-magnitude component, for reproducible output.
fn fix_sign(v: &mut [f64]) {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Deterministic start vector without the m → −m symmetry, so that both
/// parity classes are reached when the Hamiltonian has that symmetry.
fn start_vector(dim: usize, salt: usize) -> Vec<f64> {
    let mult = GOLDEN * (salt + 1) as f64 + 0.1 * salt as f64;
    let v: Vec<f64> = (0..dim).map(|i| ((i + 1) as f64 * mult).fract() - 0.5).collect();
    let nv = norm(&v);
    v.into_iter().map(|x| x / nv).collect()
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// Lanczos with full reorthogonalization. Ritz pairs are tested at
/// geometrically spaced Krylov dimensions against the true residual.
fn lanczos(
    op: &SectorOperator,
    count: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), ExactDiagError> {
    let dim = op.dim();
    let limit = opts.max_iterations.unwrap_or(10 * op.n()).clamp(count, dim.max(count));
    let limit = limit.min(dim);

    let mut basis: Vec<Vec<f64>> = vec![start_vector(dim, 0)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut next_check = (count + 20).min(limit);
    let mut salt = 1;
    let mut scale = 0.0f64;
    let mut worst = f64::INFINITY;

    loop {
        let j = basis.len() - 1;
        let mut w = op.apply_unchecked(&basis[j]);
        let a = dot(&basis[j], &w);
        alphas.push(a);
        orthogonalize(&mut w, &basis);
        let b = norm(&w);
        scale = scale.max(a.abs() + b);
        let m = basis.len();

        let exhausted = b <= 1e-10 * scale.max(1.0);
        if m >= count && (m >= next_check || m == limit || exhausted) {
            let (vals, vecs) = ritz(&alphas, &betas, &basis, count);
            worst = vals
                .iter()
                .zip(&vecs)
                .map(|(&e, v)| residual(op, e, v))
                .fold(0.0, f64::max);
            if worst < opts.tolerance {
                return Ok((vals, vecs));
            }
            next_check = ((m as f64 * 1.3).ceil() as usize).max(m + 1).min(limit);
        }
        if m == limit {
            return Err(ExactDiagError::NoConvergence {
                iterations: m,
                residual: worst,
            });
        }
        if exhausted {
            // Invariant subspace found: continue from a fresh direction.
            let mut fresh = start_vector(dim, salt);
            salt += 1;
            orthogonalize(&mut fresh, &basis);
            let nf = norm(&fresh);
            if nf < 1e-8 {
                continue;
            }
            betas.push(0.0);
            basis.push(fresh.into_iter().map(|x| x / nf).collect());
        } else {
            betas.push(b);
            basis.push(w.into_iter().map(|x| x / b).collect());
        }
    }
}

fn ritz(alphas: &[f64], betas: &[f64], basis: &[Vec<f64>], count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let dim = basis[0].len();
    lowest_of(&eig, count)
        .into_iter()
        .map(|c| {
            let y = eig.eigenvectors.column(c);
            let mut v = vec![0.0; dim];
            for (q, &coef) in basis.iter().zip(y.iter()) {
                v.iter_mut().zip(q).for_each(|(x, qi)| *x += coef * qi);
            }
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            (eig.eigenvalues[c], v)
        })
        .unzip()
}

/// `⟨all up along z | all up along x⟩ = 2^{−n/2}`.
pub fn overlap_tf(n: u32) -> f64 {
    0.5f64.powf(f64::from(n) / 2.0)
}

/// Overlap of the driver `N(2Sˣ/N)^k` ground state with the all-up target
/// ground state.
///
/// For even k the driver ground state has `Sˣ = 0` (even n) or `Sˣ = ±1/2`
/// (odd n) and the overlap decays only as `n^{−1/4}`. For odd k the ground
/// state is the fully x-polarized state and the overlap is `2^{−n/2}`.
pub fn overlap_vk(n: u32, k: u32) -> f64 {
    if k % 2 == 1 {
        return overlap_tf(n);
    }
    // P(2h) = C(2h, h) / 4^h, built as a product to avoid overflow.
    let central = |half: u32| -> f64 {
        (1..=half)
            .map(|j| f64::from(2 * j - 1) / f64::from(2 * j))
            .product()
    };
    if n.is_multiple_of(2) {
        central(n / 2).sqrt()
    } else {
        // C(n, (n−1)/2) / 2^n = P(n−1) · n / (n + 1)
        (central((n - 1) / 2) * f64::from(n) / f64::from(n + 1)).sqrt()
    }
}

fn ln_binomial(n: usize, i: usize) -> f64 {
    let i = i.min(n - i);
    (0..i).map(|j| ((n - j) as f64).ln() - ((j + 1) as f64).ln()).sum()
}

/// Sector coefficients (index `i ↔ m = i − n/2`) of the ground state of the
/// driver `N(2Sˣ/N)^k`.
///
/// Odd k: the state with `Sˣ = −n/2`. Even k: the `Sˣ = 0` eigenstate for
/// even n and the `Sˣ = +1/2` eigenstate for odd n. The sign is fixed by a
/// positive `m = n/2` component.
pub fn vk_ground_in_sector(n: usize, k: u32) -> Result<Vec<f64>, ExactDiagError> {
    if n == 0 {
        return Err(ExactDiagError::EmptySystem);
    }
    if k % 2 == 1 {
        let half_ln2 = n as f64 * std::f64::consts::LN_2 / 2.0;
        return Ok((0..=n)
            .map(|i| {
                let mag = (0.5 * ln_binomial(n, i) - half_ln2).exp();
                if (n - i).is_multiple_of(2) {
                    mag
                } else {
                    -mag
                }
            })
            .collect());
    }
    let mu = if n.is_multiple_of(2) { 0.0 } else { 0.5 };
    let a = sx_couplings(n);
    let mut v = vec![0.0; n + 1];
    v[0] = 1.0;
    v[1] = mu / a[0];
    for i in 1..n {
        v[i + 1] = (mu * v[i] - a[i - 1] * v[i - 1]) / a[i];
        // Rescale occasionally to keep the recurrence in range.
        if v[i + 1].abs() > 1e100 {
            v.iter_mut().take(i + 2).for_each(|x| *x *= 1e-100);
        }
    }
    let nv = norm(&v);
    let sign = if v[n] < 0.0 { -1.0 } else { 1.0 };
    Ok(v.into_iter().map(|x| sign * x / nv).collect())
}
