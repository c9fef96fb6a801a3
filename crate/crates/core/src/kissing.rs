//! Linear programming bounds for the kissing number.
//!
//! Both modes minimize `1 + p(1)` over polynomials `p` of degree `d` with
//! `p(s) ≤ -1` on `[-1, 1/2]`, enforced on a uniform grid including both
//! endpoints. They differ in how the kernel `(x, y) ↦ p(xᵀy)` is constrained:
//!
//! * **Delsarte**: `p = Σ g_k P̃_k` with `g ≥ 0`, a positive semidefinite
//!   kernel. After solving, the constraint is re-verified on a ten times finer
//!   grid (plus local refinement of its maxima) and `p` is rescaled so the
//!   verified maximum is at most `-1`. These bounds are certified.
//! * **Copositive**: `p = Σ c_k s^k` with free coefficients and one linear cut
//!   `Σ_{ij} p(x_iᵀx_j) ≥ 0` per stored configuration. Cuts come from the sphere
//!   separation oracle. Only finitely many configurations are ever enforced,
//!   so the value is a relaxation and never certified.

use crate::copositivity::{separate_sphere, CutConfig};
use crate::error::{Error, Result};
use crate::kernels::{jacobi_to_monomial, JacobiBasis, PolyKernel, PointConfig, MAX_DEGREE};
use crate::lp::{solve_lp, LpProblem, LpSolution, LpStatus, Sense};
use crate::seed;

pub const DEFAULT_GRID: usize = 2000;
pub const MIN_GRID: usize = 16;
pub const FINE_FACTOR: usize = 10;
/// Upper end of the constraint interval: inner products at most `1/2` are non-edges.
pub const ANGLE_LIMIT: f64 = 0.5;
/// Largest accepted `max (p(s) + 1)` on the verification grid for a certified bound.
pub const CERTIFY_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Delsarte,
    Copositive,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Delsarte => "delsarte",
            Mode::Copositive => "copositive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CutBudget {
    pub max_iters: usize,
    pub restarts: usize,
    /// Configurations of `2..=n_max` points are searched each iteration.
    pub n_max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KissingInstance {
    pub dim: usize,
    pub degree: usize,
    pub grid_size: usize,
    pub mode: Mode,
    pub budget: CutBudget,
    pub seed: u64,
}

impl KissingInstance {
    /// Default grid of 2000 nodes, 50 iterations, 32 restarts, `n_max = 4·dim`, seed 0.
    pub fn new(dim: usize, degree: usize, mode: Mode) -> Self {
        KissingInstance {
            dim,
            degree,
            grid_size: DEFAULT_GRID,
            mode,
            budget: CutBudget {
                max_iters: 50,
                restarts: 32,
                n_max: 4 * dim,
            },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidInput(format!("dimension must be at least 2, got {}", self.dim)));
        }
        if self.degree > MAX_DEGREE {
            return Err(Error::SizeCap {
                what: "polynomial degree",
                cap: MAX_DEGREE,
                got: self.degree,
                hint: "",
            });
        }
        if self.grid_size < MIN_GRID {
            return Err(Error::InvalidInput(format!(
                "grid needs at least {MIN_GRID} nodes, got {}",
                self.grid_size
            )));
        }
        if self.budget.max_iters < 1 || self.budget.restarts < 1 || self.budget.n_max < 1 {
            return Err(Error::InvalidInput(
                "iteration budget, restarts and n_max must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BoundReport {
    pub instance: KissingInstance,
    pub mode: Mode,
    /// Reported upper bound (after certification in Delsarte mode).
    pub bound: f64,
    /// Optimal value of the last discretized LP.
    pub lp_value: f64,
    pub iterations: usize,
    pub cuts: Vec<CutConfig>,
    pub certified: bool,
    /// `max (p(s) + 1)` over the verification grid for the reported polynomial.
    pub constraint_check: f64,
    /// Delsarte mode: the verified violation `δ` the polynomial was rescaled by.
    pub inflation: f64,
    /// LP value after each iteration.
    pub trace: Vec<f64>,
    /// Monomial coefficients of the reported `p`.
    pub coefficients: Vec<f64>,
    /// Jacobi coefficients of the reported `p` (Delsarte mode).
    pub jacobi_coefficients: Option<Vec<f64>>,
    /// Copositive mode: the last separation round found nothing.
    pub converged: bool,
}

/// `count` uniform nodes on `[-1, 1/2]` with both endpoints exact.
pub fn uniform_grid(count: usize) -> Vec<f64> {
    let h = (ANGLE_LIMIT + 1.0) / (count - 1) as f64;
    let mut s: Vec<f64> = (0..count).map(|j| -1.0 + j as f64 * h).collect();
    s[count - 1] = ANGLE_LIMIT;
    s
}

/// Largest value of `f` on `[-1, 1/2]`, searched on the `FINE_FACTOR`-refined
/// grid and then sharpened by golden-section search around each local maximum.
fn verified_max(f: impl Fn(f64) -> f64, grid_size: usize) -> f64 {
    let fine = uniform_grid(FINE_FACTOR * (grid_size - 1) + 1);
    let vals: Vec<f64> = fine.iter().map(|&s| f(s)).collect();
    let mut best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last = fine.len() - 1;
    for i in 0..=last {
        let left = if i > 0 { vals[i - 1] } else { f64::NEG_INFINITY };
        let right = if i < last { vals[i + 1] } else { f64::NEG_INFINITY };
        if vals[i] >= left && vals[i] >= right {
            let a = fine[i.saturating_sub(1)];
            let b = fine[(i + 1).min(last)];
            best = best.max(golden_max(&f, a, b));
        }
    }
    best
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd).max(f(a)).max(f(b))
}

fn check_lp(sol: LpSolution, what: &str) -> Result<LpSolution> {
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => Err(Error::Infeasible(format!(
            "{what}: no polynomial of this degree satisfies p(1) ≥ 0 and p ≤ -1 on the grid"
        ))),
        LpStatus::Unbounded => Err(Error::InvalidInput(format!(
            "{what}: LP reported unbounded, which the single-point constraint rules out"
        ))),
    }
}

/// Delsarte–Goethals–Seidel bound with certified discretization.
pub fn delsarte_bound(inst: &KissingInstance) -> Result<BoundReport> {
    inst.validate()?;
    if inst.mode != Mode::Delsarte {
        return Err(Error::InvalidInput("delsarte_bound needs a Delsarte-mode instance".into()));
    }
    let basis = JacobiBasis::new(inst.dim, inst.degree)?;
    let d = inst.degree;
    let mut lp = LpProblem::new(vec![1.0; d + 1]);
    for s in uniform_grid(inst.grid_size) {
        lp.add_constraint(basis.eval_all(s), Sense::Le, -1.0);
    }
    let sol = check_lp(solve_lp(&lp)?, "Delsarte LP")?;
    let lp_value = 1.0 + sol.objective;
    let g = sol.x;

    let peak = verified_max(|s| basis.combine(&g, s), inst.grid_size);
    let inflation = (peak + 1.0).max(0.0);
    if inflation >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "LP polynomial violates p ≤ -1 by {inflation}; cannot certify"
        )));
    }
    // p ≤ -(1 - δ) on the interval, so p / (1 - δ) ≤ -1 and stays a nonnegative combination.
    let g: Vec<f64> = g.iter().map(|v| v / (1.0 - inflation)).collect();
    let constraint_check = verified_max(|s| basis.combine(&g, s), inst.grid_size) + 1.0;
    let bound = 1.0 + g.iter().sum::<f64>();
    let coefficients = jacobi_to_monomial(&basis, &g)?.coeffs().to_vec();

    Ok(BoundReport {
        instance: *inst,
        mode: Mode::Delsarte,
        bound,
        lp_value,
        iterations: 1,
        cuts: Vec::new(),
        certified: constraint_check <= CERTIFY_TOL,
        constraint_check,
        inflation,
        trace: vec![lp_value],
        coefficients,
        jacobi_coefficients: Some(g),
        converged: true,
    })
}

/// Row `(Σ_{ij} (x_iᵀx_j)^k)_k` of a configuration cut.
fn cut_row(config: &PointConfig, degree: usize) -> Vec<f64> {
    let mut row = vec![0.0; degree + 1];
    let n = config.len();
    for i in 0..n {
        for j in 0..n {
            let s = if i == j { 1.0 } else { config.inner(i, j).clamp(-1.0, 1.0) };
            let mut p = 1.0;
            for r in row.iter_mut() {
                *r += p;
                p *= s;
            }
        }
    }
    row
}

/// Copositive cutting-plane bound (not certified).
pub fn copositive_bound(inst: &KissingInstance) -> Result<BoundReport> {
    inst.validate()?;
    if inst.mode != Mode::Copositive {
        return Err(Error::InvalidInput("copositive_bound needs a Copositive-mode instance".into()));
    }
    let d = inst.degree;
    let mut lp = LpProblem::new(vec![1.0; d + 1]);
    for k in 0..=d {
        lp.set_free(k);
    }
    for s in uniform_grid(inst.grid_size) {
        let mut row = Vec::with_capacity(d + 1);
        let mut p = 1.0;
        for _ in 0..=d {
            row.push(p);
            p *= s;
        }
        lp.add_constraint(row, Sense::Le, -1.0);
    }
    let single = PointConfig::new(inst.dim, vec![unit(inst.dim)])?;
    lp.add_constraint(cut_row(&single, d), Sense::Ge, 0.0);

    let mut cuts = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut coefficients;
    loop {
        let iteration = trace.len();
        let sol = match solve_lp(&lp) {
            Ok(sol) => sol,
            Err(source) => {
                return Err(Error::CutLoop {
                    iteration,
                    trace,
                    source,
                })
            }
        };
        let sol = check_lp(sol, "copositive LP")?;
        trace.push(1.0 + sol.objective);
        coefficients = sol.x;
        if trace.len() >= inst.budget.max_iters {
            break;
        }
        let kernel = PolyKernel::new(inst.dim, coefficients.clone())?;
        let mut found = Vec::new();
        for n_points in 2..=inst.budget.n_max.max(2) {
            let s = seed::derive(inst.seed, &[iteration as u64, n_points as u64]);
            if let Some(cut) = separate_sphere(&kernel, n_points, inst.budget.restarts, s)? {
                found.push(cut);
            }
        }
        if found.is_empty() {
            converged = true;
            break;
        }
        for cut in found {
            lp.add_constraint(cut_row(&cut.config, d), Sense::Ge, 0.0);
            cuts.push(cut);
        }
    }

    let kernel = PolyKernel::new(inst.dim, coefficients.clone())?;
    let constraint_check = verified_max(|s| kernel.value(s), inst.grid_size) + 1.0;
    let lp_value = *trace.last().unwrap();
    Ok(BoundReport {
        instance: *inst,
        mode: Mode::Copositive,
        bound: lp_value,
        lp_value,
        iterations: trace.len(),
        cuts,
        certified: false,
        constraint_check,
        inflation: 0.0,
        trace,
        coefficients,
        jacobi_coefficients: None,
        converged,
    })
}

fn unit(dim: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[0] = 1.0;
    e
}

/// Dispatches on the instance mode.
pub fn run(inst: &KissingInstance) -> Result<BoundReport> {
    match inst.mode {
        Mode::Delsarte => delsarte_bound(inst),
        Mode::Copositive => copositive_bound(inst),
    }
}

/// Both modes on the same `(dim, degree, grid)`.
#[derive(Clone, Debug)]
pub struct BoundRelation {
    pub delsarte: BoundReport,
    pub copositive: BoundReport,
}

impl BoundRelation {
    /// `(Delsarte bound, copositive bound)`.
    pub fn bounds(&self) -> (f64, f64) {
        (self.delsarte.bound, self.copositive.bound)
    }

    /// Largest excess of any copositive iterate over the Delsarte LP value.
    ///
    /// Every positive semidefinite kernel satisfies every configuration cut, so
    /// on a shared grid the copositive feasible set contains the Delsarte one.
    pub fn worst_excess(&self) -> f64 {
        self.copositive
            .trace
            .iter()
            .map(|v| v - self.delsarte.lp_value)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn bound_relation_check(
    dim: usize,
    degree: usize,
    grid_size: usize,
    budget: CutBudget,
    seed: u64,
) -> Result<BoundRelation> {
    let mut inst = KissingInstance::new(dim, degree, Mode::Delsarte);
    inst.grid_size = grid_size;
    inst.budget = budget;
    inst.seed = seed;
    let delsarte = delsarte_bound(&inst)?;
    inst.mode = Mode::Copositive;
    let copositive = copositive_bound(&inst)?;
    Ok(BoundRelation {
        delsarte,
        copositive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = uniform_grid(16);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[15], 0.5);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn validation() {
        let mut inst = KissingInstance::new(3, 4, Mode::Delsarte);
        inst.grid_size = 15;
        assert!(inst.validate().is_err());
        let inst = KissingInstance::new(1, 4, Mode::Delsarte);
        assert!(inst.validate().is_err());
        let inst = KissingInstance::new(3, 25, Mode::Delsarte);
        assert!(matches!(inst.validate(), Err(Error::SizeCap { .. })));
        let inst = KissingInstance::new(3, 4, Mode::Copositive);
        assert!(delsarte_bound(&inst).is_err());
    }

    #[test]
    fn degree_zero_is_infeasible() {
        let inst = KissingInstance::new(3, 0, Mode::Delsarte);
        assert!(matches!(delsarte_bound(&inst), Err(Error::Infeasible(_))));
        let inst = KissingInstance::new(3, 0, Mode::Copositive);
        assert!(matches!(copositive_bound(&inst), Err(Error::Infeasible(_))));
    }

    #[test]
    fn first_iteration_bounded_by_one() {
        let mut inst = KissingInstance::new(3, 4, Mode::Copositive);
        inst.budget.max_iters = 1;
        let r = copositive_bound(&inst).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.bound >= 1.0 - 1e-9);
        assert!(!r.certified);
    }

    #[test]
    fn cut_row_single_point() {
        let c = PointConfig::new(2, vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(cut_row(&c, 3), vec![1.0; 4]);
        let c = PointConfig::new(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(cut_row(&c, 3), vec![4.0, 0.0, 4.0, 0.0]);
    }

    #[test]
    fn golden_section_finds_interior_peak() {
        let m = verified_max(|s| -(s - 0.123_456_7).powi(2), 16);
        assert!(m.abs() < 1e-14);
    }
}
