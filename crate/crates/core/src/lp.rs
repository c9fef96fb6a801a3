//! Small dense linear programs.
//!
//! Problems are stated as `min cᵀx` subject to rows `aᵀx {≥, ≤, =} b` and
//! per-variable bounds. Internally every problem is rewritten in the canonical
//! form `min ĉᵀz, Âz ≥ b̂, z ≥ 0`:
//!
//! * a finite lower bound shifts the variable (`x = l + z`), a finite upper
//!   bound then becomes the extra row `-z ≥ l - u`;
//! * a variable with only an upper bound is reflected (`x = u - z`);
//! * a free variable is split (`x = z⁺ - z⁻`);
//! * `≤` rows are negated and each `=` row becomes a pair of opposite `≥` rows,
//!   so the dual value of an equality is the difference of the pair's
//!   multipliers.
//!
//! The canonical problem is then solved through its dual
//! `max b̂ᵀy, Âᵀy ≤ ĉ, y ≥ 0` with a two-phase dense tableau simplex. The dual
//! has one row per canonical variable, which keeps the tableau narrow for the
//! tall problems (thousands of rows, a few dozen variables) this crate builds.
//! The primal point is read off the optimal basis as the dual's shadow prices
//! and both are recomputed from the original data by an LU solve on the basis.

use thiserror::Error;

use crate::linalg::Lu;

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_BEFORE_BLAND: usize = 1000;
const MAX_PIVOTS: usize = 200_000;

const PRIMAL_RESIDUAL_TOL: f64 = 1e-8;
const CS_RESIDUAL_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("simplex stalled after {pivots} pivots ({detail})")]
    Stall { pivots: usize, detail: String },
    #[error(
        "solution failed verification: primal residual {primal:.3e}, complementary slackness residual {cs:.3e}, basis condition estimate {condition:.3e}"
    )]
    Residual { primal: f64, cs: f64, condition: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

#[derive(Clone, Debug)]
pub struct LpConstraint {
    pub row: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<LpConstraint>,
    /// `None` means unbounded below.
    pub lower: Vec<Option<f64>>,
    /// `None` means unbounded above.
    pub upper: Vec<Option<f64>>,
}

impl LpProblem {
    /// `min objectiveᵀx` with `x ≥ 0` and no rows yet.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            constraints: Vec::new(),
            lower: vec![Some(0.0); n],
            upper: vec![None; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, row: Vec<f64>, sense: Sense, rhs: f64) {
        self.constraints.push(LpConstraint { row, sense, rhs });
    }

    pub fn with_constraint(mut self, row: Vec<f64>, sense: Sense, rhs: f64) -> Self {
        self.add_constraint(row, sense, rhs);
        self
    }

    pub fn set_bounds(&mut self, j: usize, lower: Option<f64>, upper: Option<f64>) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn set_free(&mut self, j: usize) {
        self.set_bounds(j, None, None);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if n == 0 {
            return Err(LpError::Malformed("no variables".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed("bound vectors do not match the variable count".into()));
        }
        if !self.objective.iter().all(|v| v.is_finite()) {
            return Err(LpError::Malformed("objective has non-finite entries".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.row.len() != n {
                return Err(LpError::Malformed(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.row.len()
                )));
            }
            if !c.rhs.is_finite() || !c.row.iter().all(|v| v.is_finite()) {
                return Err(LpError::Malformed(format!("constraint {i} has non-finite data")));
            }
        }
        for j in 0..n {
            if let Some(l) = self.lower[j] {
                if !l.is_finite() {
                    return Err(LpError::Malformed(format!("lower bound of x{j} is not finite")));
                }
            }
            if let Some(u) = self.upper[j] {
                if !u.is_finite() {
                    return Err(LpError::Malformed(format!("upper bound of x{j} is not finite")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Farkas-type proof of infeasibility.
///
/// Multipliers follow the sign convention of the rows they weight: `≥` rows and
/// lower bounds take nonnegative multipliers, `≤` rows and upper bounds
/// nonpositive ones, `=` rows are free. The weighted sum of all rows has a zero
/// left-hand side and a strictly positive right-hand side.
#[derive(Clone, Debug)]
pub struct FarkasCertificate {
    pub constraint_multipliers: Vec<f64>,
    pub lower_multipliers: Vec<f64>,
    pub upper_multipliers: Vec<f64>,
}

impl FarkasCertificate {
    /// Aggregated row `(Σ λ_i a_i + μ_l + μ_u, Σ λ_i b_i + μ_lᵀl + μ_uᵀu)`.
    pub fn aggregate(&self, p: &LpProblem) -> (Vec<f64>, f64) {
        let n = p.num_vars();
        let mut row = vec![0.0; n];
        let mut rhs = 0.0;
        for (c, &lam) in p.constraints.iter().zip(&self.constraint_multipliers) {
            for j in 0..n {
                row[j] += lam * c.row[j];
            }
            rhs += lam * c.rhs;
        }
        for j in 0..n {
            row[j] += self.lower_multipliers[j] + self.upper_multipliers[j];
            if let Some(l) = p.lower[j] {
                rhs += self.lower_multipliers[j] * l;
            }
            if let Some(u) = p.upper[j] {
                rhs += self.upper_multipliers[j] * u;
            }
        }
        (row, rhs)
    }

    /// Checks signs and the contradiction `0 ≥ rhs > 0`.
    pub fn proves_infeasibility(&self, p: &LpProblem, tol: f64) -> bool {
        for (c, &lam) in p.constraints.iter().zip(&self.constraint_multipliers) {
            let ok = match c.sense {
                Sense::Ge => lam >= -tol,
                Sense::Le => lam <= tol,
                Sense::Eq => true,
            };
            if !ok {
                return false;
            }
        }
        for j in 0..p.num_vars() {
            if self.lower_multipliers[j] < -tol || self.upper_multipliers[j] > tol {
                return false;
            }
            if p.lower[j].is_none() && self.lower_multipliers[j].abs() > tol {
                return false;
            }
            if p.upper[j].is_none() && self.upper_multipliers[j].abs() > tol {
                return false;
            }
        }
        let (row, rhs) = self.aggregate(p);
        let scale = 1.0 + rhs.abs();
        row.iter().all(|v| v.abs() <= tol * scale) && rhs > tol
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; empty unless optimal.
    pub x: Vec<f64>,
    /// `cᵀx` when optimal, `+∞` when infeasible, `-∞` when unbounded.
    pub objective: f64,
    /// Objective of the dual solution; equals `objective` at optimality.
    pub dual_objective: f64,
    /// One multiplier per constraint, signed as in [`FarkasCertificate`]; empty unless optimal.
    pub duals: Vec<f64>,
    pub farkas: Option<FarkasCertificate>,
    /// Scaled worst row or bound violation of `x`.
    pub primal_residual: f64,
    /// Scaled worst complementary-slackness product.
    pub cs_residual: f64,
    pub pivots: usize,
}

#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// `x = l + z`
    Shift(usize),
    /// `x = u - z`
    Reflect(usize),
    /// `x = z⁺ - z⁻`, this is the `+` or `-` part.
    Split(usize, f64),
}

#[derive(Clone, Copy, Debug)]
enum RowOrigin {
    Constraint { index: usize, sign: f64 },
    Upper { var: usize },
}

struct Canonical {
    zmap: Vec<VarMap>,
    offset: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    origin: Vec<RowOrigin>,
    cost: Vec<f64>,
}

impl Canonical {
    fn build(p: &LpProblem) -> Self {
        let n = p.num_vars();
        let mut zmap = Vec::new();
        let mut offset = vec![0.0; n];
        // For each x_j: list of (z index, coefficient).
        let mut expand: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut upper_rows = Vec::new();
        for j in 0..n {
            match (p.lower[j], p.upper[j]) {
                (Some(l), u) => {
                    offset[j] = l;
                    expand[j].push((zmap.len(), 1.0));
                    if let Some(u) = u {
                        upper_rows.push((j, zmap.len(), u - l));
                    }
                    zmap.push(VarMap::Shift(j));
                }
                (None, Some(u)) => {
                    offset[j] = u;
                    expand[j].push((zmap.len(), -1.0));
                    zmap.push(VarMap::Reflect(j));
                }
                (None, None) => {
                    expand[j].push((zmap.len(), 1.0));
                    zmap.push(VarMap::Split(j, 1.0));
                    expand[j].push((zmap.len(), -1.0));
                    zmap.push(VarMap::Split(j, -1.0));
                }
            }
        }
        let nz = zmap.len();
        let mut cost = vec![0.0; nz];
        for j in 0..n {
            for &(k, s) in &expand[j] {
                cost[k] += s * p.objective[j];
            }
        }

        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut origin = Vec::new();
        for (i, c) in p.constraints.iter().enumerate() {
            let mut zrow = vec![0.0; nz];
            let mut shift = 0.0;
            for j in 0..n {
                shift += c.row[j] * offset[j];
                for &(k, s) in &expand[j] {
                    zrow[k] += s * c.row[j];
                }
            }
            let b = c.rhs - shift;
            let signs: &[f64] = match c.sense {
                Sense::Ge => &[1.0],
                Sense::Le => &[-1.0],
                Sense::Eq => &[1.0, -1.0],
            };
            for &sg in signs {
                rows.push(zrow.iter().map(|v| sg * v).collect());
                rhs.push(sg * b);
                origin.push(RowOrigin::Constraint { index: i, sign: sg });
            }
        }
        for (j, k, width) in upper_rows {
            let mut zrow = vec![0.0; nz];
            zrow[k] = -1.0;
            rows.push(zrow);
            rhs.push(-width);
            origin.push(RowOrigin::Upper { var: j });
        }
        Canonical {
            zmap,
            offset,
            rows,
            rhs,
            origin,
            cost,
        }
    }

    fn primal_point(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.offset.clone();
        for (k, m) in self.zmap.iter().enumerate() {
            match *m {
                VarMap::Shift(j) => x[j] += z[k],
                VarMap::Reflect(j) => x[j] -= z[k],
                VarMap::Split(j, s) => x[j] += s * z[k],
            }
        }
        x
    }

    fn constraint_duals(&self, p: &LpProblem, y: &[f64]) -> Vec<f64> {
        let mut duals = vec![0.0; p.constraints.len()];
        for (k, o) in self.origin.iter().enumerate() {
            if let RowOrigin::Constraint { index, sign } = *o {
                duals[index] += sign * y[k];
            }
        }
        duals
    }

    fn farkas(&self, p: &LpProblem, y: &[f64]) -> FarkasCertificate {
        let n = p.num_vars();
        let constraint_multipliers = self.constraint_duals(p, y);
        let mut lower_multipliers = vec![0.0; n];
        let mut upper_multipliers = vec![0.0; n];
        for (k, o) in self.origin.iter().enumerate() {
            if let RowOrigin::Upper { var } = *o {
                upper_multipliers[var] -= y[k];
            }
        }
        for (zi, m) in self.zmap.iter().enumerate() {
            let w: f64 = self
                .rows
                .iter()
                .zip(y)
                .map(|(r, yk)| r[zi] * yk)
                .sum();
            match *m {
                VarMap::Shift(j) => lower_multipliers[j] -= w,
                VarMap::Reflect(j) => upper_multipliers[j] += w,
                VarMap::Split(..) => {}
            }
        }
        FarkasCertificate {
            constraint_multipliers,
            lower_multipliers,
            upper_multipliers,
        }
    }
}

enum TableauOutcome {
    Optimal { y: Vec<f64>, shadow: Vec<f64>, condition: f64 },
    Unbounded { ray: Vec<f64> },
    Infeasible,
}

/// Dense tableau for `min fᵀy, M y ≤ h, y ≥ 0` with `M` given as `p` rows of length `q`.
struct Tableau {
    p: usize,
    q: usize,
    ncols: usize,
    /// `p` rows of `ncols + 1` (last entry is the right-hand side).
    t: Vec<f64>,
    basis: Vec<usize>,
    art_start: usize,
    art_of_row: Vec<Option<usize>>,
    pivots: usize,
}

impl Tableau {
    fn new(m: &[Vec<f64>], h: &[f64], q: usize) -> Self {
        let p = m.len();
        let art_rows: Vec<usize> = (0..p).filter(|&i| h[i] < 0.0).collect();
        let art_start = q + p;
        let ncols = q + p + art_rows.len();
        let w = ncols + 1;
        let mut t = vec![0.0; p * w];
        let mut basis = vec![0; p];
        let mut art_of_row = vec![None; p];
        let mut next_art = art_start;
        for i in 0..p {
            let sg = if h[i] < 0.0 { -1.0 } else { 1.0 };
            for k in 0..q {
                t[i * w + k] = sg * m[i][k];
            }
            t[i * w + q + i] = sg;
            t[i * w + ncols] = sg * h[i];
            if sg < 0.0 {
                t[i * w + next_art] = 1.0;
                basis[i] = next_art;
                art_of_row[i] = Some(next_art);
                next_art += 1;
            } else {
                basis[i] = q + i;
            }
        }
        Tableau {
            p,
            q,
            ncols,
            t,
            basis,
            art_start,
            art_of_row,
            pivots: 0,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.ncols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.ncols)
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let w = self.ncols + 1;
        let mut r = cost.to_vec();
        r.push(0.0);
        for i in 0..self.p {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * w..(i + 1) * w];
                for (rj, tij) in r.iter_mut().zip(row) {
                    *rj -= cb * tij;
                }
            }
        }
        r
    }

    fn pivot(&mut self, r: &mut [f64], row: usize, col: usize) {
        let w = self.ncols + 1;
        let pv = self.t[row * w + col];
        for j in 0..w {
            self.t[row * w + j] /= pv;
        }
        let prow: Vec<f64> = self.t[row * w..(row + 1) * w].to_vec();
        for i in 0..self.p {
            if i == row {
                continue;
            }
            let f = self.t[i * w + col];
            if f != 0.0 {
                let dst = &mut self.t[i * w..(i + 1) * w];
                for (d, s) in dst.iter_mut().zip(&prow) {
                    *d -= f * s;
                }
                dst[col] = 0.0;
            }
        }
        let f = r[col];
        if f != 0.0 {
            for (d, s) in r.iter_mut().zip(&prow) {
                *d -= f * s;
            }
            r[col] = 0.0;
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Runs simplex iterations on reduced-cost row `r` over columns `< allowed`.
    /// Returns `Some(col)` if column `col` proves unboundedness.
    fn iterate(&mut self, r: &mut [f64], allowed: usize) -> Result<Option<usize>, LpError> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Err(LpError::Stall {
                    pivots: self.pivots,
                    detail: format!("pivot cap reached on a {}x{} tableau", self.p, self.ncols),
                });
            }
            let enter = if bland {
                (0..allowed).find(|&j| r[j] < -OPT_TOL)
            } else {
                let mut best = None;
                let mut best_val = -OPT_TOL;
                for (j, &rj) in r.iter().enumerate().take(allowed) {
                    if rj < best_val {
                        best_val = rj;
                        best = Some(j);
                    }
                }
                best
            };
            let Some(col) = enter else {
                return Ok(None);
            };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.p {
                let a = self.at(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if ratio < best_ratio - 1e-12 {
                                true
                            } else if ratio <= best_ratio + 1e-12 {
                                if bland {
                                    self.basis[i] < self.basis[l]
                                } else {
                                    a > self.at(l, col)
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        best_ratio = best_ratio.min(ratio);
                        leave = Some(i);
                    }
                }
            }
            let Some(row) = leave else {
                return Ok(Some(col));
            };
            if best_ratio <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= DEGENERATE_BEFORE_BLAND {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, row, col);
        }
    }

    fn values(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.ncols];
        for i in 0..self.p {
            v[self.basis[i]] = self.rhs(i);
        }
        v
    }

    /// Basis matrix in the original row orientation `M y + s - a = h`.
    fn basis_matrix(&self, m: &[Vec<f64>]) -> Vec<f64> {
        let p = self.p;
        let mut b = vec![0.0; p * p];
        for (c, &col) in self.basis.iter().enumerate() {
            if col < self.q {
                for i in 0..p {
                    b[i * p + c] = m[i][col];
                }
            } else if col < self.art_start {
                b[(col - self.q) * p + c] = 1.0;
            } else {
                let row = self.art_of_row.iter().position(|a| *a == Some(col)).unwrap();
                b[row * p + c] = -1.0;
            }
        }
        b
    }
}

fn solve_tableau(m: &[Vec<f64>], h: &[f64], f: &[f64]) -> Result<(TableauOutcome, usize), LpError> {
    let p = m.len();
    let q = f.len();
    let mut tab = Tableau::new(m, h, q);

    let hscale = 1.0 + h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if tab.ncols > tab.art_start {
        let mut cost = vec![0.0; tab.ncols];
        for c in cost.iter_mut().skip(tab.art_start) {
            *c = 1.0;
        }
        let mut r = tab.reduced_costs(&cost);
        let ncols = tab.ncols;
        // Phase one is bounded below by zero, so no ray can appear.
        tab.iterate(&mut r, ncols)?;
        let infeas: f64 = (0..p)
            .filter(|&i| tab.basis[i] >= tab.art_start)
            .map(|i| tab.rhs(i))
            .sum();
        if infeas > FEAS_TOL * hscale {
            return Ok((TableauOutcome::Infeasible, tab.pivots));
        }
        // Drive remaining artificials out of the basis where possible.
        for i in 0..p {
            if tab.basis[i] >= tab.art_start {
                let col = (0..tab.art_start)
                    .filter(|&j| tab.at(i, j).abs() > PIVOT_TOL)
                    .max_by(|&a, &b| tab.at(i, a).abs().total_cmp(&tab.at(i, b).abs()));
                if let Some(col) = col {
                    tab.pivot(&mut r, i, col);
                }
            }
        }
    }

    let mut cost = vec![0.0; tab.ncols];
    cost[..q].copy_from_slice(f);
    let mut r = tab.reduced_costs(&cost);
    let art_start = tab.art_start;
    if let Some(col) = tab.iterate(&mut r, art_start)? {
        let mut dir = vec![0.0; tab.ncols];
        dir[col] = 1.0;
        for i in 0..p {
            dir[tab.basis[i]] = -tab.at(i, col);
        }
        let ray = dir[..q].iter().map(|v| v.max(0.0)).collect();
        return Ok((TableauOutcome::Unbounded { ray }, tab.pivots));
    }

    // Recompute the basic solution and shadow prices from the original data.
    let vals = tab.values();
    let bmat = tab.basis_matrix(m);
    let (y, shadow, condition) = match Lu::factor(&bmat, p) {
        Ok(lu) if p > 0 => {
            let xb = lu.solve(h);
            let mut y = vec![0.0; q];
            for (c, &col) in tab.basis.iter().enumerate() {
                if col < q {
                    y[col] = xb[c].max(0.0);
                }
            }
            let cb: Vec<f64> = tab.basis.iter().map(|&col| cost[col]).collect();
            let pi = lu.solve_transpose(&cb);
            let shadow = pi.iter().map(|v| (-v).max(0.0)).collect();
            (y, shadow, basis_condition(&lu, &bmat, p))
        }
        _ => {
            let y = vals[..q].to_vec();
            let shadow = (0..p).map(|i| r[q + i].max(0.0)).collect();
            (y, shadow, f64::INFINITY)
        }
    };
    Ok((TableauOutcome::Optimal { y, shadow, condition }, tab.pivots))
}

fn basis_condition(lu: &Lu, b: &[f64], p: usize) -> f64 {
    let norm_b = (0..p)
        .map(|i| (0..p).map(|j| b[i * p + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut inv_rows = vec![0.0; p];
    for j in 0..p {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        let col = lu.solve(&e);
        for i in 0..p {
            inv_rows[i] += col[i].abs();
        }
    }
    norm_b * inv_rows.iter().fold(0.0, |a: f64, v| a.max(*v))
}

/// Solves `p` with the two-phase simplex method.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    p.validate()?;
    let can = Canonical::build(p);
    let nz = can.zmap.len();
    let nrows = can.rows.len();

    // Dual in tableau form: min -b̂ᵀy, Âᵀy ≤ ĉ, y ≥ 0.
    let m: Vec<Vec<f64>> = (0..nz)
        .map(|zi| can.rows.iter().map(|r| r[zi]).collect())
        .collect();
    let f: Vec<f64> = can.rhs.iter().map(|b| -b).collect();
    let (outcome, mut pivots) = solve_tableau(&m, &can.cost, &f)?;

    match outcome {
        TableauOutcome::Optimal { y, shadow, condition } => {
            let x = can.primal_point(&shadow);
            let objective: f64 = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            let const_obj: f64 = p.objective.iter().zip(&can.offset).map(|(c, v)| c * v).sum();
            let dual_objective = const_obj + can.rhs.iter().zip(&y).map(|(b, v)| b * v).sum::<f64>();
            let duals = can.constraint_duals(p, &y);
            let (primal_residual, cs_residual) = residuals(p, &can, &x, &shadow, &y);
            if primal_residual > PRIMAL_RESIDUAL_TOL || cs_residual > CS_RESIDUAL_TOL {
                return Err(LpError::Residual {
                    primal: primal_residual,
                    cs: cs_residual,
                    condition,
                });
            }
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                objective,
                dual_objective,
                duals,
                farkas: None,
                primal_residual,
                cs_residual,
                pivots,
            })
        }
        TableauOutcome::Unbounded { ray } => Ok(infeasible(p, &can, &ray, pivots)),
        TableauOutcome::Infeasible => {
            // The dual is infeasible: the primal is unbounded or infeasible.
            // Decide by the feasibility problem min 0, whose dual is always feasible.
            let zero = vec![0.0; nz];
            let (outcome, extra) = solve_tableau(&m, &zero, &f)?;
            pivots += extra;
            match outcome {
                TableauOutcome::Unbounded { ray } => Ok(infeasible(p, &can, &ray, pivots)),
                TableauOutcome::Optimal { .. } => Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    x: Vec::new(),
                    objective: f64::NEG_INFINITY,
                    dual_objective: f64::NEG_INFINITY,
                    duals: Vec::new(),
                    farkas: None,
                    primal_residual: 0.0,
                    cs_residual: 0.0,
                    pivots,
                }),
                TableauOutcome::Infeasible => Err(LpError::Stall {
                    pivots,
                    detail: format!(
                        "feasibility dual reported infeasible on a {nz}x{nrows} system; this cannot happen in exact arithmetic"
                    ),
                }),
            }
        }
    }
}

fn infeasible(p: &LpProblem, can: &Canonical, ray: &[f64], pivots: usize) -> LpSolution {
    let norm = ray.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let y: Vec<f64> = ray.iter().map(|v| v / norm).collect();
    LpSolution {
        status: LpStatus::Infeasible,
        x: Vec::new(),
        objective: f64::INFINITY,
        dual_objective: f64::INFINITY,
        duals: Vec::new(),
        farkas: Some(can.farkas(p, &y)),
        primal_residual: f64::INFINITY,
        cs_residual: 0.0,
        pivots,
    }
}

/// Scaled residuals. Each row's violation is divided by `1 + |b| + Σ|a_j x_j|`.
fn residuals(p: &LpProblem, can: &Canonical, x: &[f64], z: &[f64], y: &[f64]) -> (f64, f64) {
    let mut primal = 0.0f64;
    for c in &p.constraints {
        let act: f64 = c.row.iter().zip(x).map(|(a, v)| a * v).sum();
        let scale = 1.0 + c.rhs.abs() + c.row.iter().zip(x).map(|(a, v)| (a * v).abs()).sum::<f64>();
        let viol = match c.sense {
            Sense::Ge => (c.rhs - act).max(0.0),
            Sense::Le => (act - c.rhs).max(0.0),
            Sense::Eq => (act - c.rhs).abs(),
        };
        primal = primal.max(viol / scale);
    }
    for j in 0..p.num_vars() {
        if let Some(l) = p.lower[j] {
            primal = primal.max((l - x[j]).max(0.0) / (1.0 + l.abs()));
        }
        if let Some(u) = p.upper[j] {
            primal = primal.max((x[j] - u).max(0.0) / (1.0 + u.abs()));
        }
    }

    // Canonical complementarity: y_k (Â_k z - b̂_k) = 0 and z_i (ĉ - Âᵀy)_i = 0.
    let mut cs = 0.0f64;
    for ((row, b), yk) in can.rows.iter().zip(&can.rhs).zip(y) {
        let act: f64 = row.iter().zip(z).map(|(a, v)| a * v).sum();
        let scale = 1.0 + b.abs() + row.iter().zip(z).map(|(a, v)| (a * v).abs()).sum::<f64>();
        cs = cs.max((yk * (act - b)).abs() / scale);
    }
    for (i, zi) in z.iter().enumerate() {
        let col: f64 = can.rows.iter().zip(y).map(|(r, yk)| r[i] * yk).sum();
        let scale = 1.0
            + can.cost[i].abs()
            + can.rows.iter().zip(y).map(|(r, yk)| (r[i] * yk).abs()).sum::<f64>();
        // Dual feasibility violations count towards the same residual.
        let red = can.cost[i] - col;
        cs = cs.max((zi * red).abs() / scale).max((-red).max(0.0) / scale);
    }
    (primal, cs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_lower_bound_row() {
        let p = LpProblem::new(vec![1.0]).with_constraint(vec![1.0], Sense::Ge, 3.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_ray() {
        let p = LpProblem::new(vec![-1.0]);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible_with_certificate() {
        let p = LpProblem::new(vec![1.0, 1.0])
            .with_constraint(vec![1.0, 1.0], Sense::Ge, 4.0)
            .with_constraint(vec![1.0, 1.0], Sense::Le, 2.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(s.farkas.unwrap().proves_infeasibility(&p, 1e-9));
    }

    #[test]
    fn infeasible_bounds() {
        let mut p = LpProblem::new(vec![1.0]).with_constraint(vec![1.0], Sense::Ge, 5.0);
        p.set_bounds(0, Some(0.0), Some(2.0));
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(s.farkas.unwrap().proves_infeasibility(&p, 1e-9));
    }

    #[test]
    fn infeasible_and_unbounded_direction() {
        // Objective unbounded along x1 but rows contradict: must say Infeasible.
        let mut p = LpProblem::new(vec![0.0, -1.0])
            .with_constraint(vec![1.0, 0.0], Sense::Ge, 1.0)
            .with_constraint(vec![1.0, 0.0], Sense::Le, 0.0);
        p.set_free(0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(s.farkas.unwrap().proves_infeasibility(&p, 1e-9));
    }

    #[test]
    fn free_and_equality() {
        // min x + 2y, x + y = 1, x - y ≥ -3, x free, y ≥ 0 → x = -1, y = 2? No: minimize
        // x + 2y = 1 + y, so y = 0, x = 1.
        let mut p = LpProblem::new(vec![1.0, 2.0])
            .with_constraint(vec![1.0, 1.0], Sense::Eq, 1.0)
            .with_constraint(vec![1.0, -1.0], Sense::Ge, -3.0);
        p.set_free(0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-10 && s.x[1].abs() < 1e-10);
        assert!((s.objective - s.dual_objective).abs() < 1e-9);
    }

    #[test]
    fn upper_only_and_boxed() {
        // max x0 + x1 with x0 ≤ 2 (no lower bound), 1 ≤ x1 ≤ 3, x0 + x1 ≤ 4.
        let mut p = LpProblem::new(vec![-1.0, -1.0]).with_constraint(vec![1.0, 1.0], Sense::Le, 4.0);
        p.set_bounds(0, None, Some(2.0));
        p.set_bounds(1, Some(1.0), Some(3.0));
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 4.0).abs() < 1e-10);
        assert!((s.objective - s.dual_objective).abs() < 1e-9);
    }

    #[test]
    fn malformed_rejected() {
        let p = LpProblem::new(vec![1.0, 1.0]).with_constraint(vec![1.0], Sense::Ge, 0.0);
        assert!(matches!(solve_lp(&p), Err(LpError::Malformed(_))));
        let p = LpProblem::new(vec![f64::NAN]);
        assert!(matches!(solve_lp(&p), Err(LpError::Malformed(_))));
    }

    #[test]
    fn degenerate_klee_minty_like() {
        // Many rows through the same vertex.
        let mut p = LpProblem::new(vec![-1.0, -1.0]);
        for k in 0..50 {
            let a = 1.0 + k as f64 * 0.01;
            p.add_constraint(vec![a, 2.0 - a], Sense::Le, 2.0);
        }
        let s = solve_lp(&p).unwrap();
        assert!((s.objective + 2.0).abs() < 1e-9);
    }
}
