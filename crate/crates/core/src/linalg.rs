//! Dense symmetric matrices, a cyclic Jacobi eigensolver and a small LU solver.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};

const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense symmetric real matrix stored as its row-major upper triangle.
#[derive(Clone, PartialEq)]
pub struct SymmatN {
    n: usize,
    upper: Vec<f64>,
}

impl SymmatN {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be at least 1");
        SymmatN {
            n,
            upper: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds the matrix from `f(i, j)` evaluated on the upper triangle (`i <= j`).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m.check_finite()?;
        Ok(m)
    }

    /// Builds a matrix from full rows, rejecting asymmetry larger than `sym_tol`.
    pub fn from_rows(rows: &[Vec<f64>], sym_tol: f64) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput("matrix must have at least one row".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidInput(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    r.len(),
                    n
                )));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (rows[i][j] - rows[j][i]).abs();
                if d > sym_tol || d.is_nan() {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({}, {}): {} vs {}",
                        i + 1,
                        j + 1,
                        rows[i][j],
                        rows[j][i]
                    )));
                }
            }
        }
        Self::from_fn(n, |i, j| rows[i][j])
    }

    /// Outer product `a aᵀ`.
    pub fn outer(a: &[f64]) -> Result<Self> {
        Self::from_fn(a.len(), |i, j| a[i] * a[j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        r * self.n - r * (r + 1) / 2 + c
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.idx(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.upper[k] = v;
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.upper.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput("matrix has non-finite entries".into()))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn is_entrywise_nonnegative(&self, tol: f64) -> bool {
        self.upper.iter().all(|&v| v >= -tol)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Principal submatrix on the given (sorted or unsorted) index list.
    pub fn principal(&self, idx: &[usize]) -> SymmatN {
        let k = idx.len();
        let mut m = SymmatN::zeros(k);
        for a in 0..k {
            for b in a..k {
                m.set(a, b, self.get(idx[a], idx[b]));
            }
        }
        m
    }

    pub fn add_diagonal(&self, d: &[f64]) -> SymmatN {
        assert_eq!(d.len(), self.n);
        let mut m = self.clone();
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, m.get(i, i) + v);
        }
        m
    }

    pub fn add(&self, other: &SymmatN) -> SymmatN {
        assert_eq!(self.n, other.n);
        SymmatN {
            n: self.n,
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Quadratic form `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Frobenius inner product `⟨A, B⟩`.
    pub fn frobenius_dot(&self, other: &SymmatN) -> f64 {
        assert_eq!(self.n, other.n);
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    /// Stable hash of the entry bit patterns, used in failure diagnostics.
    pub fn content_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.n.hash(&mut h);
        for v in &self.upper {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// `true` when a Cholesky factorization succeeds with every pivot above
    /// `rel_tol · max|a_ij|`, i.e. the matrix is numerically positive definite.
    pub fn is_positive_definite(&self, rel_tol: f64) -> bool {
        let n = self.n;
        let floor = rel_tol * self.max_abs();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) {
                return false;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        true
    }
}

impl fmt::Debug for SymmatN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmatN")
            .field("n", &self.n)
            .field("rows", &self.to_dense())
            .finish()
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SpectralDecomp {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` belongs to `eigenvalues[k]`; unit length, mutually orthogonal.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectralDecomp {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Rebuilds `Q Λ Qᵀ`.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let n = self.eigenvalues.len();
        let mut out = vec![vec![0.0; n]; n];
        for (lam, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            for i in 0..n {
                for j in 0..n {
                    out[i][j] += lam * v[i] * v[j];
                }
            }
        }
        out
    }
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.
pub fn eig_sym(a: &SymmatN) -> Result<SpectralDecomp> {
    a.check_finite()?;
    let n = a.dim();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = a.get(i, j);
        }
    }
    // v is stored row-major with eigenvectors as columns.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let scale = a.max_abs();
    let mut converged = n == 1 || scale == 0.0;
    let mut sweep = 0;
    while !converged {
        if sweep == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "Jacobi eigensolver",
                iterations: JACOBI_MAX_SWEEPS,
                hash: a.content_hash(),
            });
        }
        sweep += 1;

        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off.sqrt() <= f64::EPSILON * 1e-2 * scale {
            break;
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // Skip rotations that cannot change the diagonal in floating point.
                if sweep > 4
                    && apq.abs() * 1e2 < f64::EPSILON * app.abs()
                    && apq.abs() * 1e2 < f64::EPSILON * aqq.abs()
                {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }

        let mut off_after = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off_after += m[p * n + q] * m[p * n + q];
            }
        }
        converged = off_after.sqrt() <= f64::EPSILON * 1e-2 * scale;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let eigenvalues = order.iter().map(|&i| m[i * n + i]).collect();
    let eigenvectors = order
        .iter()
        .map(|&c| (0..n).map(|r| v[r * n + c]).collect())
        .collect();
    Ok(SpectralDecomp {
        eigenvalues,
        eigenvectors,
    })
}

/// LU factorization with partial pivoting of a dense square matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Factorizes the row-major `n × n` matrix `a`. Fails on an (exactly or nearly) singular pivot.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if pmax <= 1e-14 * scale {
                return Err(Error::Singular { pivot: k });
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let d = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // Uᵀ w = b
        let mut w = b.to_vec();
        for i in 0..n {
            let mut s = w[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * w[j];
            }
            w[i] = s / self.lu[i * n + i];
        }
        // Lᵀ z = w
        for i in (0..n).rev() {
            let mut s = w[i];
            for j in (i + 1)..n {
                s -= self.lu[j * n + i] * w[j];
            }
            w[i] = s;
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = w[k];
        }
        x
    }
}

/// Solves the dense square system `A x = b` (`a` row-major).
pub fn solve_dense(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    Ok(Lu::factor(a, n)?.solve(b))
}
