//! The completely positive dual on finitely supported measures.
//!
//! A measure `μ = (Σ a_i δ_{x_i}) ⊗ (Σ a_i δ_{x_i})` with `a ≥ 0` is represented
//! by its atoms. It is feasible for the dual of the stability-number program
//! when its support avoids the edges and `μ(diagonal) = Σ a_i² = 1`; its value
//! is `μ(V × V) = (Σ a_i)²`.

use crate::error::{Error, Result};
use crate::graphs::{dkp_threshold, Graph};
use crate::linalg::{eig_sym, SymmatN};

pub const DUAL_MAX_VERTICES: usize = 25;

const UNIT_MASS_TOL: f64 = 1e-9;
const RANK_ONE_REL_TOL: f64 = 1e-8;
const ENTRY_TOL: f64 = 1e-10;

/// Atoms of a product delta measure.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedConfig {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl WeightedConfig {
    pub fn new(indices: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if indices.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                got: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidInput(format!("atom weights must be nonnegative, got {w}")));
        }
        Ok(WeightedConfig { indices, weights })
    }

    /// Weights `1/√|S|` on every element of `set`.
    pub fn uniform(set: &[usize]) -> Self {
        let a = 1.0 / (set.len() as f64).sqrt();
        WeightedConfig {
            indices: set.to_vec(),
            weights: vec![a; set.len()],
        }
    }

    /// Indices carrying positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.indices
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&i, _)| i)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualValue {
    /// `(Σ a_i)²`
    pub total_mass: f64,
    /// `Σ a_i²`
    pub diag_mass: f64,
}

pub fn dual_objective(c: &WeightedConfig) -> DualValue {
    let s: f64 = c.weights.iter().sum();
    DualValue {
        total_mass: s * s,
        diag_mass: c.weights.iter().map(|a| a * a).sum(),
    }
}

/// True when the support is stable in `g` and the diagonal mass is one.
pub fn feasibility_check(c: &WeightedConfig, g: &Graph) -> bool {
    let support = c.support();
    support.iter().all(|&i| i < g.n())
        && g.is_stable(&support)
        && (dual_objective(c).diag_mass - 1.0).abs() <= UNIT_MASS_TOL
}

/// Maximal stable sets of `g` (Bron–Kerbosch with pivoting on the complement).
pub fn maximal_stable_sets(g: &Graph) -> Result<Vec<Vec<usize>>> {
    let n = g.n();
    if n > DUAL_MAX_VERTICES {
        return Err(Error::SizeCap {
            what: "stable set enumeration",
            cap: DUAL_MAX_VERTICES,
            got: n,
            hint: "",
        });
    }
    // Neighbourhoods in the complement graph.
    let co: Vec<u32> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && !g.adjacent(i, j))
                .fold(0u32, |m, j| m | 1 << j)
        })
        .collect();
    let mut out = Vec::new();

    fn expand(r: u32, mut p: u32, mut x: u32, co: &[u32], out: &mut Vec<Vec<usize>>) {
        if p == 0 && x == 0 {
            out.push((0..32).filter(|i| r >> i & 1 == 1).collect());
            return;
        }
        let px = p | x;
        let pivot = (0..32)
            .filter(|i| px >> i & 1 == 1)
            .max_by_key(|&u| (p & co[u]).count_ones())
            .unwrap();
        let mut cand = p & !co[pivot];
        while cand != 0 {
            let v = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            expand(r | 1 << v, p & co[v], x & co[v], co, out);
            p &= !(1 << v);
            x |= 1 << v;
        }
    }

    if n > 0 {
        let all = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        expand(0, all, 0, &co, &mut out);
    }
    Ok(out)
}

/// Optimal dual value: the best `(Σa)²` with `Σa² = 1` over stable supports.
///
/// On a stable set `S` Cauchy–Schwarz gives `(Σa)² ≤ |S| Σa²` with equality at
/// uniform weights, so the optimum is the largest maximal stable set.
pub fn dual_optimum(g: &Graph) -> Result<f64> {
    let sets = maximal_stable_sets(g)?;
    Ok(sets.iter().map(Vec::len).max().unwrap_or(0) as f64)
}

/// The optimal atoms: uniform weights on a largest stable set.
pub fn dual_optimizer(g: &Graph) -> Result<WeightedConfig> {
    let sets = maximal_stable_sets(g)?;
    let best = sets.iter().max_by_key(|s| s.len()).cloned().unwrap_or_default();
    Ok(WeightedConfig::uniform(&best))
}

/// Whether `m` spans an extreme ray of the completely positive cone, i.e. `m = aaᵀ` with `a ≥ 0`, `a ≠ 0`.
pub fn is_cp_extreme(m: &SymmatN) -> bool {
    if !m.is_entrywise_nonnegative(ENTRY_TOL) {
        return false;
    }
    let Ok(eig) = eig_sym(m) else {
        return false;
    };
    let mut sv: Vec<(f64, usize)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, l)| (l.abs(), k))
        .collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (largest, top) = sv[0];
    if largest <= 0.0 || eig.eigenvalues[top] <= 0.0 {
        return false;
    }
    if sv.len() > 1 && sv[1].0 > RANK_ONE_REL_TOL * largest {
        return false;
    }
    let v = &eig.eigenvectors[top];
    let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    v.iter().all(|x| sign * x >= -1e-8 * scale)
}

/// `|dkp_threshold(g) - dual_optimum(g)|`.
pub fn duality_gap_report(g: &Graph, tol: f64) -> Result<f64> {
    let primal = dkp_threshold(g, tol)?;
    let dual = dual_optimum(g)?;
    Ok((primal - dual).abs())
}
