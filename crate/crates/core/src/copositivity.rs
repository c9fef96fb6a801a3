//! Copositivity of finite matrices and violated configurations for sphere kernels.
//!
//! A symmetric `K` is copositive when `aᵀKa ≥ 0` for every `a ≥ 0`. The exact
//! test uses the principal-submatrix eigenvector criterion: `K` fails to be
//! copositive iff some principal submatrix has an eigenvector with strictly
//! positive entries and a negative eigenvalue. A minimal failing submatrix
//! always has a simple negative eigenvalue with a positive eigenvector, so the
//! enumeration is exact up to the positivity thresholds below.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{dot, energy_of, normalize, random_unit, PolyKernel, PointConfig};
use crate::linalg::{eig_sym, SymmatN};
use crate::seed;

/// Largest matrix accepted by [`is_copositive_exact`].
pub const EXACT_MAX_DIM: usize = 18;
/// Eigenvector entries must exceed this to count as strictly positive.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Eigenvalues below `-NEGATIVITY_TOL` count as negative.
pub const NEGATIVITY_TOL: f64 = 1e-10;
/// Quadratic-form values below `-WITNESS_TOL` refute copositivity.
pub const WITNESS_TOL: f64 = 1e-10;
/// Resolution used to re-test numerically ambiguous submatrices.
pub const BORDERLINE_RESOLUTION: usize = 200;
/// Default acceptance threshold for sphere cuts.
pub const DEFAULT_EPS_CUT: f64 = 1e-7;

const BORDERLINE_GRID_BUDGET: u64 = 20_000_000;
const GRID_POINT_CAP: u64 = 1 << 32;
const CHUNK: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Copositive,
    NotCopositive,
}

/// How one principal submatrix was cleared or flagged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SubsetScreen {
    /// Some row is entrywise nonnegative, so no positive vector can map to a negative multiple of itself.
    NonnegativeRow,
    PositiveDefinite,
    Spectral { min_eigenvalue: f64, negative: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsetSummary {
    /// Bit `i` set when row/column `i` belongs to the submatrix.
    pub mask: u32,
    pub screen: SubsetScreen,
}

/// A submatrix with a negative eigenvalue whose eigenvector was nonnegative
/// but not clearly positive; re-tested on a simplex grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BorderlineSubset {
    pub mask: u32,
    pub eigenvalue: f64,
    pub resolution: usize,
    pub grid_minimum: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CopCertificate {
    pub subsets: Vec<SubsetSummary>,
    pub borderline: Vec<BorderlineSubset>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CopResult {
    pub verdict: Verdict,
    /// Nonnegative `a` with `aᵀKa < 0`.
    pub witness: Option<Vec<f64>>,
    pub witness_value: Option<f64>,
    pub certificate: Option<CopCertificate>,
    /// Set when a `Copositive` verdict only means "no violation found".
    pub heuristic: bool,
}

impl CopResult {
    pub fn is_copositive(&self) -> bool {
        self.verdict == Verdict::Copositive
    }

    fn refuted(witness: Vec<f64>, value: f64, heuristic: bool) -> Self {
        CopResult {
            verdict: Verdict::NotCopositive,
            witness: Some(witness),
            witness_value: Some(value),
            certificate: None,
            heuristic,
        }
    }
}

enum SubsetOutcome {
    Clear(SubsetScreen),
    Violated { vector: Vec<f64> },
    Borderline { eigenvalue: f64, min_eigenvalue: f64, negative: usize },
}

/// Masks of all nonempty subsets of `0..n`, ordered by size then value.
fn masks_by_size(n: usize) -> Vec<u32> {
    let mut masks = Vec::with_capacity((1usize << n) - 1);
    for size in 1..=n {
        // Gosper's hack.
        let mut m: u64 = (1u64 << size) - 1;
        while m < (1u64 << n) {
            masks.push(m as u32);
            let c = m & m.wrapping_neg();
            let r = m + c;
            m = (((r ^ m) >> 2) / c) | r;
        }
    }
    masks
}

fn indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

fn check_subset(k: &SymmatN, mask: u32) -> Result<SubsetOutcome> {
    let idx = indices(mask);
    let b = k.principal(&idx);
    let m = idx.len();
    for i in 0..m {
        if (0..m).all(|j| b.get(i, j) >= 0.0) {
            return Ok(SubsetOutcome::Clear(SubsetScreen::NonnegativeRow));
        }
    }
    if b.is_positive_definite(1e-12) {
        return Ok(SubsetOutcome::Clear(SubsetScreen::PositiveDefinite));
    }
    let eig = eig_sym(&b)?;
    let negative = eig.eigenvalues.iter().filter(|&&l| l < -NEGATIVITY_TOL).count();
    let min_eigenvalue = eig.min_eigenvalue();
    let mut borderline = None;
    for (lam, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
        if *lam >= -NEGATIVITY_TOL {
            break;
        }
        let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let v: Vec<f64> = v.iter().map(|x| sign * x).collect();
        if v.iter().all(|&x| x > POSITIVITY_TOL) {
            return Ok(SubsetOutcome::Violated { vector: v });
        }
        if borderline.is_none() && v.iter().all(|&x| x > -POSITIVITY_TOL) {
            borderline = Some(*lam);
        }
    }
    Ok(match borderline {
        Some(eigenvalue) => SubsetOutcome::Borderline {
            eigenvalue,
            min_eigenvalue,
            negative,
        },
        None => SubsetOutcome::Clear(SubsetScreen::Spectral {
            min_eigenvalue,
            negative,
        }),
    })
}

/// Scales `v` so its largest entry is one.
fn max_normalized(v: &[f64]) -> Vec<f64> {
    let m = v.iter().fold(0.0f64, |a, x| a.max(*x));
    v.iter().map(|x| (x / m).max(0.0)).collect()
}

fn extend(mask: u32, n: usize, local: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; n];
    for (slot, i) in indices(mask).into_iter().enumerate() {
        full[i] = local[slot];
    }
    full
}

/// Exact copositivity by principal-submatrix enumeration (`n ≤ 18`).
pub fn is_copositive_exact(k: &SymmatN) -> Result<CopResult> {
    k.check_finite()?;
    let n = k.dim();
    if n > EXACT_MAX_DIM {
        return Err(Error::SizeCap {
            what: "exact copositivity test",
            cap: EXACT_MAX_DIM,
            got: n,
            hint: "; use refute_copositive_grid for larger matrices",
        });
    }
    let masks = masks_by_size(n);
    let mut subsets = Vec::with_capacity(masks.len());
    let mut borderline = Vec::new();
    for chunk in masks.chunks(CHUNK) {
        let outcomes: Vec<Result<SubsetOutcome>> =
            chunk.par_iter().map(|&m| check_subset(k, m)).collect();
        for (&mask, out) in chunk.iter().zip(outcomes) {
            match out? {
                SubsetOutcome::Clear(screen) => subsets.push(SubsetSummary { mask, screen }),
                SubsetOutcome::Violated { vector } => {
                    let w = max_normalized(&extend(mask, n, &vector));
                    let value = k.quad_form(&w);
                    return Ok(CopResult::refuted(w, value, false));
                }
                SubsetOutcome::Borderline {
                    eigenvalue,
                    min_eigenvalue,
                    negative,
                } => {
                    let idx = indices(mask);
                    let sub = k.principal(&idx);
                    let resolution = affordable_resolution(idx.len(), BORDERLINE_RESOLUTION);
                    let grid = refute_copositive_grid(&sub, resolution)?;
                    if let (Some(w), Some(_)) = (&grid.witness, grid.witness_value) {
                        let full = extend(mask, n, w);
                        let value = k.quad_form(&full);
                        return Ok(CopResult::refuted(full, value, false));
                    }
                    borderline.push(BorderlineSubset {
                        mask,
                        eigenvalue,
                        resolution,
                        grid_minimum: grid_minimum(&sub, resolution),
                    });
                    subsets.push(SubsetSummary {
                        mask,
                        screen: SubsetScreen::Spectral {
                            min_eigenvalue,
                            negative,
                        },
                    });
                }
            }
        }
    }
    Ok(CopResult {
        verdict: Verdict::Copositive,
        witness: None,
        witness_value: None,
        certificate: Some(CopCertificate { subsets, borderline }),
        heuristic: false,
    })
}

/// Number of points `C(r + n - 1, n - 1)` of the simplex grid, saturating.
pub fn grid_point_count(n: usize, resolution: usize) -> u64 {
    let mut c: u128 = 1;
    for i in 1..n as u128 {
        c = c * (resolution as u128 + i) / i;
        if c > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    c as u64
}

fn affordable_resolution(n: usize, wanted: usize) -> usize {
    let mut r = wanted;
    while r > 1 && grid_point_count(n, r) > BORDERLINE_GRID_BUDGET {
        r = r * 3 / 4;
    }
    r.max(1)
}

/// Exhaustive minimum of `aᵀKa` over `{c / r : c ∈ ℕⁿ, Σc = r}`; returns `(min, counts)`.
fn grid_search(k: &SymmatN, r: usize) -> (f64, Vec<usize>) {
    let n = k.dim();
    let dense = k.to_dense();
    let mut counts = vec![0usize; n];
    let mut best_counts = vec![0usize; n];
    let mut best = f64::INFINITY;
    // vbuf[i] holds K·c for the counts fixed at depths < i.
    let mut vbuf = vec![vec![0.0; n]; n];

    #[allow(clippy::too_many_arguments)]
    fn rec(
        depth: usize,
        remaining: usize,
        q: f64,
        dense: &[Vec<f64>],
        vbuf: &mut [Vec<f64>],
        counts: &mut [usize],
        best: &mut f64,
        best_counts: &mut [usize],
    ) {
        let n = dense.len();
        if depth == n - 1 {
            let rf = remaining as f64;
            let val = q + 2.0 * rf * vbuf[depth][depth] + rf * rf * dense[depth][depth];
            if val < *best {
                *best = val;
                counts[depth] = remaining;
                best_counts.copy_from_slice(counts);
            }
            return;
        }
        let mut q = q;
        for m in 0..=remaining {
            counts[depth] = m;
            let (head, tail) = vbuf.split_at_mut(depth + 1);
            tail[0].copy_from_slice(&head[depth]);
            rec(depth + 1, remaining - m, q, dense, vbuf, counts, best, best_counts);
            // Add one unit to coordinate `depth`.
            q += 2.0 * vbuf[depth][depth] + dense[depth][depth];
            for (v, kij) in vbuf[depth].iter_mut().zip(&dense[depth]) {
                *v += kij;
            }
        }
        counts[depth] = 0;
    }

    rec(0, r, 0.0, &dense, &mut vbuf, &mut counts, &mut best, &mut best_counts);
    let rf = r as f64;
    (best / (rf * rf), best_counts)
}

fn grid_minimum(k: &SymmatN, r: usize) -> f64 {
    grid_search(k, r).0
}

/// Pairwise mass transfers on the simplex with exact line search.
fn polish_simplex(k: &SymmatN, a: &mut [f64]) -> f64 {
    let n = a.len();
    let mut g = k.mul_vec(a);
    let mut val: f64 = dot(a, &g);
    for _ in 0..10_000 {
        let mut best_gain = 0.0;
        let mut best_move = None;
        for i in 0..n {
            if a[i] <= 0.0 {
                continue;
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                // a + t (e_j - e_i), t ∈ [0, a_i]
                let slope = 2.0 * (g[j] - g[i]);
                let curv = k.get(i, i) + k.get(j, j) - 2.0 * k.get(i, j);
                let t = if curv > 0.0 {
                    (-slope / (2.0 * curv)).clamp(0.0, a[i])
                } else if slope + curv * a[i] < 0.0 {
                    a[i]
                } else {
                    0.0
                };
                let gain = -(slope * t + curv * t * t);
                if gain > best_gain {
                    best_gain = gain;
                    best_move = Some((i, j, t));
                }
            }
        }
        let Some((i, j, t)) = best_move else { break };
        if best_gain <= 1e-16 * (1.0 + val.abs()) {
            break;
        }
        a[i] -= t;
        a[j] += t;
        if a[i] < 1e-300 {
            a[i] = 0.0;
        }
        for (l, gl) in g.iter_mut().enumerate() {
            *gl += t * (k.get(l, j) - k.get(l, i));
        }
        val = dot(a, &g);
    }
    // Recompute from scratch to shed accumulated drift.
    k.quad_form(a)
}

/// Minimizes `aᵀKa` over the simplex grid of the given resolution, then polishes.
///
/// A `Copositive` answer is heuristic: it only states that no violation was found.
pub fn refute_copositive_grid(k: &SymmatN, resolution: usize) -> Result<CopResult> {
    k.check_finite()?;
    if resolution < 1 {
        return Err(Error::InvalidInput("grid resolution must be at least 1".into()));
    }
    let n = k.dim();
    let points = grid_point_count(n, resolution);
    if points > GRID_POINT_CAP {
        return Err(Error::SizeCap {
            what: "simplex grid point count",
            cap: GRID_POINT_CAP as usize,
            got: points.min(usize::MAX as u64) as usize,
            hint: "; lower the resolution",
        });
    }
    let (_, counts) = grid_search(k, resolution);
    let mut a: Vec<f64> = counts.iter().map(|&c| c as f64 / resolution as f64).collect();
    let value = polish_simplex(k, &mut a);
    if value < -WITNESS_TOL {
        Ok(CopResult::refuted(a, value, true))
    } else {
        Ok(CopResult {
            verdict: Verdict::Copositive,
            witness: None,
            witness_value: None,
            certificate: None,
            heuristic: true,
        })
    }
}

/// Configuration whose kernel energy is negative: a violated copositivity condition.
#[derive(Clone, Debug, PartialEq)]
pub struct CutConfig {
    pub config: PointConfig,
    pub energy: f64,
}

/// Local search budget for [`search_sphere`].
#[derive(Clone, Copy, Debug)]
pub struct DescentParams {
    pub max_iters: usize,
    pub initial_step: f64,
    pub armijo: f64,
    pub grad_tol: f64,
}

impl Default for DescentParams {
    fn default() -> Self {
        DescentParams {
            max_iters: 500,
            initial_step: 0.1,
            armijo: 1e-4,
            grad_tol: 1e-9,
        }
    }
}

/// Lowest-energy configuration of `n_points` points found from `restarts` random starts.
///
/// Restart `r` draws its start from a generator seeded by `(seed, r)`, so the
/// result does not depend on how restarts are scheduled across threads.
pub fn search_sphere(
    kernel: &PolyKernel,
    n_points: usize,
    restarts: usize,
    seed: u64,
    params: &DescentParams,
) -> Result<CutConfig> {
    if n_points < 1 {
        return Err(Error::InvalidInput("configuration size must be at least 1".into()));
    }
    if restarts < 1 {
        return Err(Error::InvalidInput("need at least one restart".into()));
    }
    let dim = kernel.dim();
    let runs: Vec<(Vec<Vec<f64>>, f64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::rng(seed, &[r as u64]);
            let start: Vec<Vec<f64>> = (0..n_points).map(|_| random_unit(dim, &mut rng)).collect();
            descend(kernel, start, params)
        })
        .collect();
    let (points, energy) = runs
        .into_iter()
        .reduce(|best, cur| if cur.1 < best.1 { cur } else { best })
        .unwrap();
    Ok(CutConfig {
        config: PointConfig::normalized(dim, points)?,
        energy,
    })
}

/// Separation oracle: a configuration with energy below `-eps_cut`, if the search finds one.
pub fn separate_sphere(
    kernel: &PolyKernel,
    n_points: usize,
    restarts: usize,
    seed: u64,
) -> Result<Option<CutConfig>> {
    separate_sphere_with(kernel, n_points, restarts, seed, DEFAULT_EPS_CUT, &DescentParams::default())
}

pub fn separate_sphere_with(
    kernel: &PolyKernel,
    n_points: usize,
    restarts: usize,
    seed: u64,
    eps_cut: f64,
    params: &DescentParams,
) -> Result<Option<CutConfig>> {
    let best = search_sphere(kernel, n_points, restarts, seed, params)?;
    // Re-evaluate on the stored (renormalized) points.
    let energy = energy_of(kernel, best.config.points());
    Ok((energy < -eps_cut).then_some(CutConfig {
        config: best.config,
        energy,
    }))
}

/// Projected gradient descent on the product of spheres with Armijo backtracking.
fn descend(kernel: &PolyKernel, mut x: Vec<Vec<f64>>, params: &DescentParams) -> (Vec<Vec<f64>>, f64) {
    let n = x.len();
    let dim = x[0].len();
    let mut energy = energy_of(kernel, &x);
    let mut grad = vec![vec![0.0; dim]; n];
    let mut trial = x.clone();
    for _ in 0..params.max_iters {
        for g in grad.iter_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let w = 2.0 * kernel.derivative(dot(&x[i], &x[j]).clamp(-1.0, 1.0));
                for c in 0..dim {
                    grad[i][c] += w * x[j][c];
                    grad[j][c] += w * x[i][c];
                }
            }
        }
        let mut norm2 = 0.0;
        for i in 0..n {
            let radial = dot(&grad[i], &x[i]);
            for c in 0..dim {
                grad[i][c] -= radial * x[i][c];
            }
            norm2 += dot(&grad[i], &grad[i]);
        }
        if norm2.sqrt() < params.grad_tol {
            break;
        }
        let mut step = params.initial_step;
        let mut accepted = false;
        while step > 1e-20 {
            for i in 0..n {
                for c in 0..dim {
                    trial[i][c] = x[i][c] - step * grad[i][c];
                }
                normalize(&mut trial[i]);
            }
            let e = energy_of(kernel, &trial);
            if e <= energy - params.armijo * step * norm2 {
                std::mem::swap(&mut x, &mut trial);
                energy = e;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (x, energy)
}
