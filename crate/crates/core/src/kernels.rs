//! Zonal polynomial kernels on the unit sphere `S^{n-1}`.
//!
//! A [`PolyKernel`] is `(x, y) ↦ Σ_k c_k (xᵀy)^k`. A [`JacobiBasis`] evaluates
//! the Jacobi polynomials `P_k^{(a,a)}` with `a = (n-3)/2`, rescaled so that
//! `P̃_k(1) = 1`; nonnegative combinations of these are exactly the positive
//! semidefinite zonal kernels on the sphere.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{solve_dense, SymmatN};

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 24;

const DOMAIN_SLACK: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PolyKernel {
    dim: usize,
    coeffs: Vec<f64>,
}

impl PolyKernel {
    /// `coeffs[k]` multiplies `s^k`.
    pub fn new(dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("sphere dimension must be at least 2, got {dim}")));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("kernel needs at least one coefficient".into()));
        }
        if !coeffs.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("kernel coefficients must be finite".into()));
        }
        Ok(PolyKernel { dim, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `Σ c_k s^k`, rejecting `s` outside `[-1, 1]` (with a `1e-12` slack).
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(s.abs() <= 1.0 + DOMAIN_SLACK) {
            return Err(Error::Domain {
                what: "kernel argument",
                detail: format!("{s} is not in [-1, 1]"),
            });
        }
        Ok(self.value(s))
    }

    /// Horner evaluation without the domain check.
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    /// Derivative `Σ k c_k s^{k-1}`.
    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * s + k as f64 * c)
    }
}

/// Normalized Jacobi polynomials `P̃_0, …, P̃_d` for the sphere `S^{n-1}`.
///
/// Values come from the three-term recurrence of `P_k^{(a,a)}`, with each
/// coefficient pre-divided by `P_k^{(a,a)}(1) = binom(k + a, k)`.
#[derive(Clone, Debug)]
pub struct JacobiBasis {
    dim: usize,
    degree: usize,
    /// `P̃_k(t) = lead[k] t P̃_{k-1}(t) - back[k] P̃_{k-2}(t)` for `k ≥ 2`.
    lead: Vec<f64>,
    back: Vec<f64>,
}

impl JacobiBasis {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("sphere dimension must be at least 2, got {dim}")));
        }
        if degree > MAX_DEGREE {
            return Err(Error::SizeCap {
                what: "polynomial degree",
                cap: MAX_DEGREE,
                got: degree,
                hint: "",
            });
        }
        let a = (dim as f64 - 3.0) / 2.0;
        // value_at_one[k] = P_k^{(a,a)}(1)
        let mut value_at_one = vec![1.0; degree + 1];
        for k in 1..=degree {
            value_at_one[k] = value_at_one[k - 1] * (k as f64 + a) / k as f64;
        }
        let mut lead = vec![0.0; degree + 1];
        let mut back = vec![0.0; degree + 1];
        for k in 2..=degree {
            let kf = k as f64;
            let s = 2.0 * kf + 2.0 * a;
            // 2k(k+2a)(2k+2a-2) P_k = (2k+2a-1)(2k+2a)(2k+2a-2) t P_{k-1} - 2(k+a-1)^2 (2k+2a) P_{k-2}
            let den = 2.0 * kf * (kf + 2.0 * a) * (s - 2.0);
            let c1 = (s - 1.0) * s * (s - 2.0) / den;
            let c2 = 2.0 * (kf + a - 1.0) * (kf + a - 1.0) * s / den;
            lead[k] = c1 * value_at_one[k - 1] / value_at_one[k];
            back[k] = c2 * value_at_one[k - 2] / value_at_one[k];
        }
        Ok(JacobiBasis {
            dim,
            degree,
            lead,
            back,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `P̃_k(t)`.
    pub fn eval(&self, k: usize, t: f64) -> Result<f64> {
        if k > self.degree {
            return Err(Error::Domain {
                what: "Jacobi degree",
                detail: format!("{k} exceeds basis degree {}", self.degree),
            });
        }
        if !(t.abs() <= 1.0 + DOMAIN_SLACK) {
            return Err(Error::Domain {
                what: "Jacobi argument",
                detail: format!("{t} is not in [-1, 1]"),
            });
        }
        Ok(self.eval_upto(k, t)[k])
    }

    /// `[P̃_0(t), …, P̃_d(t)]`.
    pub fn eval_all(&self, t: f64) -> Vec<f64> {
        self.eval_upto(self.degree, t)
    }

    fn eval_upto(&self, k: usize, t: f64) -> Vec<f64> {
        if t == 1.0 {
            // The normalization, exactly; the recurrence would round.
            return vec![1.0; k + 1];
        }
        let mut out = Vec::with_capacity(k + 1);
        out.push(1.0);
        if k >= 1 {
            out.push(t);
        }
        for j in 2..=k {
            let v = self.lead[j] * t * out[j - 1] - self.back[j] * out[j - 2];
            out.push(v);
        }
        out
    }

    /// Value of `Σ g_k P̃_k(t)`.
    pub fn combine(&self, g: &[f64], t: f64) -> f64 {
        assert_eq!(g.len(), self.degree + 1);
        self.eval_all(t).iter().zip(g).map(|(p, c)| p * c).sum()
    }
}

/// Chebyshev nodes of the first kind on `[-1, 1]`, used for basis changes.
fn chebyshev_nodes(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| ((2 * i + 1) as f64 * std::f64::consts::PI / (2 * count) as f64).cos())
        .collect()
}

/// Monomial coefficients of `Σ g_k P̃_k`.
pub fn jacobi_to_monomial(basis: &JacobiBasis, g: &[f64]) -> Result<PolyKernel> {
    let d = basis.degree();
    if g.len() != d + 1 {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            got: g.len(),
        });
    }
    let nodes = chebyshev_nodes(d + 1);
    let mut vander = Vec::with_capacity((d + 1) * (d + 1));
    for &t in &nodes {
        let mut p = 1.0;
        for _ in 0..=d {
            vander.push(p);
            p *= t;
        }
    }
    let rhs: Vec<f64> = nodes.iter().map(|&t| basis.combine(g, t)).collect();
    PolyKernel::new(basis.dim(), solve_dense(&vander, &rhs)?)
}

/// Jacobi coefficients `g` with `Σ g_k P̃_k = kernel`.
pub fn monomial_to_jacobi(basis: &JacobiBasis, kernel: &PolyKernel) -> Result<Vec<f64>> {
    let d = basis.degree();
    if kernel.degree() > d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: kernel.degree(),
        });
    }
    let nodes = chebyshev_nodes(d + 1);
    let mut colloc = Vec::with_capacity((d + 1) * (d + 1));
    for &t in &nodes {
        colloc.extend(basis.eval_all(t));
    }
    let rhs: Vec<f64> = nodes.iter().map(|&t| kernel.value(t)).collect();
    solve_dense(&colloc, &rhs)
}

/// Finite list of unit vectors in `ℝⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointConfig {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl PointConfig {
    /// Validates that every point has length `dim` and unit norm within `1e-12`.
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("configuration needs at least one point".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !((norm - 1.0).abs() <= UNIT_TOL) {
                return Err(Error::InvalidInput(format!("point {i} has norm {norm}, expected 1")));
            }
        }
        Ok(PointConfig { dim, points })
    }

    /// Normalizes each (nonzero) vector before validating.
    pub fn normalized(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let points = points
            .into_iter()
            .map(|mut p| {
                normalize(&mut p);
                p
            })
            .collect();
        Self::new(dim, points)
    }

    /// `count` points drawn uniformly from the sphere.
    pub fn random<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Self {
        let points = (0..count).map(|_| random_unit(dim, rng)).collect();
        PointConfig { dim, points }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn inner(&self, i: usize, j: usize) -> f64 {
        dot(&self.points[i], &self.points[j])
    }

    /// Applies `x ↦ Q x` for a row-major `n × n` matrix `q`.
    pub fn transformed(&self, q: &[Vec<f64>]) -> Result<Self> {
        let points = self
            .points
            .iter()
            .map(|p| q.iter().map(|row| dot(row, p)).collect())
            .collect();
        Self::normalized(self.dim, points)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

pub(crate) fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

/// `Σ_i Σ_j p(x_iᵀx_j)`, diagonal terms included.
pub fn config_energy(kernel: &PolyKernel, config: &PointConfig) -> Result<f64> {
    if kernel.dim() != config.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: config.dim(),
        });
    }
    Ok(energy_of(kernel, config.points()))
}

pub(crate) fn energy_of(kernel: &PolyKernel, points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let diag = kernel.value(1.0) * n as f64;
    let mut off = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            off += kernel.value(dot(&points[i], &points[j]).clamp(-1.0, 1.0));
        }
    }
    diag + 2.0 * off
}

/// Matrix `(P̃_k(x_iᵀx_j))_{ij}`.
pub fn gram_matrix(basis: &JacobiBasis, k: usize, config: &PointConfig) -> Result<SymmatN> {
    if basis.dim() != config.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: config.dim(),
        });
    }
    if k > basis.degree() {
        return Err(Error::Domain {
            what: "Jacobi degree",
            detail: format!("{k} exceeds basis degree {}", basis.degree()),
        });
    }
    SymmatN::from_fn(config.len(), |i, j| {
        basis.eval_upto(k, config.inner(i, j).clamp(-1.0, 1.0))[k]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        let k = PolyKernel::new(3, vec![-1.0]).unwrap();
        assert_eq!(k.eval(0.3).unwrap(), -1.0);
        let k = PolyKernel::new(3, vec![0.0, 1.0]).unwrap();
        assert_eq!(k.eval(0.5).unwrap(), 0.5);
        let k = PolyKernel::new(3, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(k.eval(-1.0).unwrap(), 2.0);
        assert!(k.eval(1.0 + 1e-9).is_err());
        assert!(k.eval(-1.0 - 1e-13).is_ok());
        assert!((k.derivative(0.5) - (2.0 + 6.0 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn jacobi_low_degrees() {
        let b = JacobiBasis::new(5, 6).unwrap();
        for &t in &[-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_eq!(b.eval(0, t).unwrap(), 1.0);
            assert_eq!(b.eval(1, t).unwrap(), t);
        }
        assert!(b.eval(7, 0.0).is_err());
        let b3 = JacobiBasis::new(3, 2).unwrap();
        assert!((b3.eval(2, 0.0).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn degree_cap() {
        assert!(JacobiBasis::new(3, MAX_DEGREE).is_ok());
        assert!(matches!(JacobiBasis::new(3, MAX_DEGREE + 1), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn energy_examples() {
        let k1 = PolyKernel::new(2, vec![1.0]).unwrap();
        let one = PointConfig::new(2, vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(config_energy(&k1, &one).unwrap(), 1.0);

        let lin = PolyKernel::new(2, vec![0.0, 1.0]).unwrap();
        let anti = PointConfig::new(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(config_energy(&lin, &anti).unwrap(), 0.0);

        let tri = PointConfig::normalized(
            2,
            (0..3)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / 3.0;
                    vec![a.cos(), a.sin()]
                })
                .collect(),
        )
        .unwrap();
        assert!(config_energy(&lin, &tri).unwrap().abs() < 1e-14);

        let k3 = PolyKernel::new(3, vec![1.0]).unwrap();
        assert!(matches!(config_energy(&k3, &one), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn point_validation() {
        assert!(PointConfig::new(2, vec![vec![1.0, 1.0]]).is_err());
        assert!(PointConfig::new(2, vec![]).is_err());
        assert!(PointConfig::new(3, vec![vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn gram_trivial_cases() {
        let b = JacobiBasis::new(3, 4).unwrap();
        let x = PointConfig::normalized(3, vec![vec![1.0, 2.0, 0.5]; 4]).unwrap();
        for k in 0..=4 {
            let g = gram_matrix(&b, k, &x).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!((g.get(i, j) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn basis_change_round_trip() {
        let b = JacobiBasis::new(8, 6).unwrap();
        let g = vec![0.5, 1.0, 0.0, 2.0, 0.25, 0.0, 3.0];
        let mono = jacobi_to_monomial(&b, &g).unwrap();
        for &t in &[-1.0, -0.4, 0.1, 0.9] {
            assert!((mono.value(t) - b.combine(&g, t)).abs() < 1e-10);
        }
        let back = monomial_to_jacobi(&b, &mono).unwrap();
        for (x, y) in back.iter().zip(&g) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
