//! Finite graphs, exact stability numbers and the copositive side of their duality.
//!
//! For a graph `G` on `n` vertices the de Klerk–Pasechnik matrix
//! `K_t = t(I + A) - J` is copositive exactly when `t ≥ α(G)`, so bisecting
//! on `t` with the exact copositivity test recovers the stability number.
//! The weighted analogue uses `K_t = t(I + A) - √w √wᵀ`.

use std::fmt;

use rand::Rng;

use crate::copositivity::is_copositive_exact;
use crate::error::{Error, Result};
use crate::linalg::SymmatN;
use crate::seed;

pub const ALPHA_MAX_VERTICES: usize = 40;
pub const ALPHA_WEIGHTED_MAX_VERTICES: usize = 30;

/// Simple undirected graph on vertices `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<bool>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Rejects loops, duplicate edges (in either orientation) and out-of-range endpoints.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph {
            n,
            adj: vec![vec![false; n]; n],
            edges: Vec::with_capacity(edges.len()),
        };
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn empty(n: usize) -> Self {
        Graph::new(n, &[]).unwrap()
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        Graph::new(n, &edges).unwrap()
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3);
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::new(n, &edges).unwrap()
    }

    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Graph::new(10, &edges).unwrap()
    }

    /// Mycielskian of `C_5`: triangle-free with chromatic number four.
    pub fn grotzsch() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            let next = (i + 1) % 5;
            let prev = (i + 4) % 5;
            edges.push((i, next));
            edges.push((5 + i, next));
            edges.push((5 + i, prev));
            edges.push((5 + i, 10));
        }
        Graph::new(11, &edges).unwrap()
    }

    /// Erdős–Rényi `G(n, p)`.
    pub fn random_gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Graph::new(n, &edges).unwrap()
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidInput(format!(
                "edge {{{i}, {j}}} out of range for {} vertices",
                self.n
            )));
        }
        if i == j {
            return Err(Error::InvalidInput(format!("loop at vertex {i}")));
        }
        if self.adj[i][j] {
            return Err(Error::InvalidInput(format!("duplicate edge {{{i}, {j}}}")));
        }
        self.adj[i][j] = true;
        self.adj[j][i] = true;
        self.edges.push((i.min(j), i.max(j)));
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i][j]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().filter(|&&a| a).count()
    }

    pub fn is_stable(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(a, &i)| set[a + 1..].iter().all(|&j| i != j && !self.adj[i][j]))
    }

    fn masks(&self) -> Vec<u64> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .filter(|&j| self.adj[i][j])
                    .fold(0u64, |m, j| m | 1 << j)
            })
            .collect()
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, edges={:?})", self.n, self.edges)
    }
}

/// Nonnegative vertex weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFn {
    w: Vec<f64>,
}

impl WeightFn {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        for (i, v) in w.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidInput(format!("weight {i} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(WeightFn { w })
    }

    pub fn ones(n: usize) -> Self {
        WeightFn { w: vec![1.0; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    fn check(&self, g: &Graph) -> Result<()> {
        if self.w.len() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                got: self.w.len(),
            });
        }
        Ok(())
    }
}

#[inline]
fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

/// Greedy clique cover of `cand`; calls `f` with each clique.
fn clique_cover(cand: u64, adj: &[u64], mut f: impl FnMut(u64)) {
    let mut rest = cand;
    while rest != 0 {
        let u = rest.trailing_zeros() as usize;
        let mut clique = 1u64 << u;
        let mut pool = rest & adj[u];
        while pool != 0 {
            let w = pool.trailing_zeros() as usize;
            clique |= 1 << w;
            pool &= adj[w];
        }
        rest &= !clique;
        f(clique);
    }
}

fn mis_search(cand: u64, adj: &[u64], size: usize, best: &mut usize) {
    if cand == 0 {
        *best = (*best).max(size);
        return;
    }
    let mut cover = 0;
    clique_cover(cand, adj, |_| cover += 1);
    if size + cover <= *best {
        return;
    }
    // Vertices of degree at most one can always be taken.
    for v in bits(cand) {
        if (adj[v] & cand).count_ones() <= 1 {
            let closed = (adj[v] & cand) | (1 << v);
            mis_search(cand & !closed, adj, size + 1, best);
            return;
        }
    }
    let v = bits(cand)
        .max_by_key(|&v| ((adj[v] & cand).count_ones(), std::cmp::Reverse(v)))
        .unwrap();
    mis_search(cand & !(adj[v] | 1 << v), adj, size + 1, best);
    mis_search(cand & !(1 << v), adj, size, best);
}

/// Exact stability number by branch and bound (`n ≤ 40`).
pub fn alpha(g: &Graph) -> Result<usize> {
    if g.n() > ALPHA_MAX_VERTICES {
        return Err(Error::SizeCap {
            what: "stability number search",
            cap: ALPHA_MAX_VERTICES,
            got: g.n(),
            hint: "",
        });
    }
    let adj = g.masks();
    let all = if g.n() == 0 { 0 } else { u64::MAX >> (64 - g.n()) };
    let mut best = 0;
    mis_search(all, &adj, 0, &mut best);
    Ok(best)
}

fn mwis_search(cand: u64, adj: &[u64], w: &[f64], value: f64, best: &mut f64) {
    if cand == 0 {
        if value > *best {
            *best = value;
        }
        return;
    }
    let mut bound = 0.0;
    clique_cover(cand, adj, |c| {
        bound += bits(c).map(|v| w[v]).fold(0.0, f64::max);
    });
    if value + bound <= *best {
        return;
    }
    // Isolated vertices are always taken.
    let isolated = bits(cand).filter(|&v| adj[v] & cand == 0).fold(0u64, |m, v| m | 1 << v);
    if isolated != 0 {
        let gain: f64 = bits(isolated).map(|v| w[v]).sum();
        mwis_search(cand & !isolated, adj, w, value + gain, best);
        return;
    }
    let v = bits(cand)
        .max_by_key(|&v| ((adj[v] & cand).count_ones(), std::cmp::Reverse(v)))
        .unwrap();
    mwis_search(cand & !(adj[v] | 1 << v), adj, w, value + w[v], best);
    mwis_search(cand & !(1 << v), adj, w, value, best);
}

/// Exact maximum weight of a stable set (`n ≤ 30`).
pub fn alpha_weighted(g: &Graph, w: &WeightFn) -> Result<f64> {
    w.check(g)?;
    if g.n() > ALPHA_WEIGHTED_MAX_VERTICES {
        return Err(Error::SizeCap {
            what: "weighted stability number search",
            cap: ALPHA_WEIGHTED_MAX_VERTICES,
            got: g.n(),
            hint: "",
        });
    }
    let adj = g.masks();
    let all = if g.n() == 0 { 0 } else { u64::MAX >> (64 - g.n()) };
    let mut best = 0.0;
    mwis_search(all, &adj, w.values(), 0.0, &mut best);
    Ok(best)
}

/// `K_t = t(I + A) - J`: diagonal and edges `t - 1`, non-edges `-1`.
pub fn dkp_matrix(g: &Graph, t: f64) -> SymmatN {
    let mut k = SymmatN::zeros(g.n().max(1));
    for i in 0..g.n() {
        for j in i..g.n() {
            let v = if i == j || g.adjacent(i, j) { t - 1.0 } else { -1.0 };
            k.set(i, j, v);
        }
    }
    k
}

/// Diagonal `t - w_i`, edges `t - √(w_i w_j)`, non-edges `-√(w_i w_j)`.
pub fn weighted_dkp_matrix(g: &Graph, w: &WeightFn, t: f64) -> Result<SymmatN> {
    w.check(g)?;
    let r: Vec<f64> = w.values().iter().map(|v| v.sqrt()).collect();
    let mut k = SymmatN::zeros(g.n().max(1));
    for i in 0..g.n() {
        for j in i..g.n() {
            let shift = if i == j || g.adjacent(i, j) { t } else { 0.0 };
            k.set(i, j, shift - r[i] * r[j]);
        }
    }
    Ok(k)
}

/// Smallest `t` in `[lo, hi]` where `copositive(t)` holds, to within `tol`.
///
/// The returned value always tests copositive; the true threshold lies in `(t - tol, t]`.
///
/// `hi` must test copositive. Below `lo` the family has a negative diagonal,
/// so a copositive `lo` is returned as is.
fn bisect(lo: f64, hi: f64, tol: f64, mut copositive: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if !copositive(hi)? {
        return Err(Error::Bracket(format!("matrix at upper end t = {hi} is not copositive")));
    }
    if copositive(lo)? {
        return Ok(lo);
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if copositive(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Copositivity threshold of [`dkp_matrix`], bisected on `[1, n]`.
pub fn dkp_threshold(g: &Graph, tol: f64) -> Result<f64> {
    let n = g.n().max(1) as f64;
    bisect(1.0, n, tol, |t| Ok(is_copositive_exact(&dkp_matrix(g, t))?.is_copositive()))
}

/// Copositivity threshold of [`weighted_dkp_matrix`], bisected on `[max w, Σ w]`.
pub fn weighted_dkp_threshold(g: &Graph, w: &WeightFn, tol: f64) -> Result<f64> {
    w.check(g)?;
    let lo = w.values().iter().fold(0.0, |a: f64, v| a.max(*v));
    let hi: f64 = w.values().iter().sum();
    bisect(lo, hi.max(lo), tol, |t| {
        Ok(is_copositive_exact(&weighted_dkp_matrix(g, w, t)?)?.is_copositive())
    })
}

/// Parses the DIMACS-like edge format: `p edge <n> <m>` then `m` lines `e <i> <j>` (1-indexed).
///
/// Lines starting with `c` are comments; blank lines are ignored.
pub fn parse_dimacs(text: &str) -> Result<Graph> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut graph: Option<Graph> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first() {
            None => continue,
            Some(&"c") => continue,
            Some(&"p") => {
                if header.is_some() {
                    return Err(err("duplicate problem line".into()));
                }
                if toks.len() != 4 || toks[1] != "edge" {
                    return Err(err(format!("expected `p edge <n> <m>`, got `{line}`")));
                }
                let n: usize = toks[2].parse().map_err(|_| err(format!("bad vertex count `{}`", toks[2])))?;
                let m: usize = toks[3].parse().map_err(|_| err(format!("bad edge count `{}`", toks[3])))?;
                header = Some((n, m, 0));
                graph = Some(Graph::empty(n));
            }
            Some(&"e") => {
                let (n, m, seen) = header.ok_or_else(|| err("edge line before `p edge` line".into()))?;
                if toks.len() != 3 {
                    return Err(err(format!("expected `e <i> <j>`, got `{line}`")));
                }
                let parse_v = |s: &str| -> Result<usize> {
                    let v: usize = s.parse().map_err(|_| err(format!("bad vertex `{s}`")))?;
                    if v == 0 || v > n {
                        return Err(err(format!("vertex {v} out of range 1..={n}")));
                    }
                    Ok(v - 1)
                };
                let i = parse_v(toks[1])?;
                let j = parse_v(toks[2])?;
                if seen == m {
                    return Err(err(format!("more than the declared {m} edges")));
                }
                graph
                    .as_mut()
                    .unwrap()
                    .add_edge(i, j)
                    .map_err(|e| err(e.to_string()))?;
                header = Some((n, m, seen + 1));
            }
            Some(other) => return Err(err(format!("unknown line type `{other}`"))),
        }
    }
    let last = text.lines().count().max(1);
    let (_, m, seen) = header.ok_or(Error::Parse {
        line: last,
        msg: "missing `p edge <n> <m>` line".into(),
    })?;
    if seen != m {
        return Err(Error::Parse {
            line: last,
            msg: format!("declared {m} edges but found {seen}"),
        });
    }
    Ok(graph.unwrap())
}

/// Parses `n` lines with one nonnegative decimal each.
pub fn parse_weights(text: &str, n: usize) -> Result<WeightFn> {
    let mut w = Vec::with_capacity(n);
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: lineno + 1, msg };
        let v: f64 = t.parse().map_err(|_| err(format!("bad weight `{t}`")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(err(format!("weight must be finite and nonnegative, got {v}")));
        }
        if w.len() == n {
            return Err(err(format!("more than {n} weights")));
        }
        w.push(v);
    }
    if w.len() != n {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            msg: format!("expected {n} weights, found {}", w.len()),
        });
    }
    WeightFn::new(w)
}

/// Test and benchmark graphs with pinned seeds.
pub mod corpus {
    use super::*;

    /// Empty and complete graphs up to 8 vertices, `C_5`, `C_7`, Petersen,
    /// Grötzsch and twenty `G(n, p)` instances with `6 ≤ n ≤ 12`.
    pub fn graphs() -> Vec<(String, Graph)> {
        let mut out = Vec::new();
        for n in 1..=8 {
            out.push((format!("empty{n}"), Graph::empty(n)));
        }
        for n in 2..=8 {
            out.push((format!("complete{n}"), Graph::complete(n)));
        }
        out.push(("C5".into(), Graph::cycle(5)));
        out.push(("C7".into(), Graph::cycle(7)));
        out.push(("petersen".into(), Graph::petersen()));
        out.push(("grotzsch".into(), Graph::grotzsch()));
        out.extend(random_graphs());
        out
    }

    pub fn random_graphs() -> Vec<(String, Graph)> {
        const P: [f64; 3] = [0.3, 0.5, 0.7];
        (0..20u64)
            .map(|i| {
                let n = 6 + (i as usize % 7);
                let p = P[i as usize % 3];
                let mut rng = seed::rng(0x00C0_FAC4, &[i]);
                (format!("gnp{i}_n{n}_p{p}"), Graph::random_gnp(n, p, &mut rng))
            })
            .collect()
    }

    /// Ten weighted instances on at most 8 vertices.
    pub fn weighted() -> Vec<(String, Graph, WeightFn)> {
        (0..10u64)
            .map(|i| {
                let n = 3 + (i as usize % 6);
                let mut rng = seed::rng(0x3E16_47ED, &[i]);
                let g = Graph::random_gnp(n, 0.45, &mut rng);
                let w = (0..n).map(|_| 0.1 + 2.9 * rng.random::<f64>()).collect();
                (format!("weighted{i}_n{n}"), g, WeightFn::new(w).unwrap())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_validation() {
        assert!(Graph::new(3, &[(0, 0)]).is_err());
        assert!(Graph::new(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, &[(0, 3)]).is_err());
        assert_eq!(Graph::petersen().edges().len(), 15);
        assert_eq!(Graph::grotzsch().edges().len(), 20);
        assert!((0..10).all(|v| Graph::petersen().degree(v) == 3));
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(&Graph::empty(5)).unwrap(), 5);
        assert_eq!(alpha(&Graph::complete(6)).unwrap(), 1);
        assert_eq!(alpha(&Graph::cycle(5)).unwrap(), 2);
        assert_eq!(alpha(&Graph::petersen()).unwrap(), 4);
        assert_eq!(alpha(&Graph::grotzsch()).unwrap(), 5);
        assert!(matches!(alpha(&Graph::empty(41)), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn weighted_examples() {
        let edge = Graph::complete(2);
        let w = WeightFn::new(vec![2.0, 1.0]).unwrap();
        assert_eq!(alpha_weighted(&edge, &w).unwrap(), 2.0);
        assert_eq!(alpha_weighted(&Graph::empty(2), &w).unwrap(), 3.0);
        assert!(WeightFn::new(vec![-1.0]).is_err());
        assert!(alpha_weighted(&Graph::empty(3), &w).is_err());
    }

    #[test]
    fn dkp_examples() {
        let k = dkp_matrix(&Graph::complete(2), 1.0);
        assert_eq!(k.to_dense(), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        let k = dkp_matrix(&Graph::empty(2), 2.0);
        assert_eq!(k.to_dense(), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let k = weighted_dkp_matrix(&Graph::complete(2), &WeightFn::ones(2), 1.0).unwrap();
        assert_eq!(k.to_dense(), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn thresholds_small() {
        let t = dkp_threshold(&Graph::complete(3), 1e-3).unwrap();
        assert!((t - 1.0).abs() <= 1e-3);
        let t = dkp_threshold(&Graph::cycle(5), 1e-3).unwrap();
        assert!((t - 2.0).abs() <= 1e-3);
        let w = WeightFn::new(vec![2.0, 1.0]).unwrap();
        let t = weighted_dkp_threshold(&Graph::empty(2), &w, 1e-4).unwrap();
        assert!((t - 3.0).abs() <= 1e-4);
        let t = weighted_dkp_threshold(&Graph::complete(2), &w, 1e-4).unwrap();
        assert!((t - 2.0).abs() <= 1e-4);
        let w = WeightFn::new(vec![5.0, 1.0, 1.0]).unwrap();
        let t = weighted_dkp_threshold(&Graph::complete(3), &w, 1e-4).unwrap();
        assert!((t - 5.0).abs() <= 1e-4);
        assert!(dkp_threshold(&Graph::cycle(5), 0.0).is_err());
    }

    #[test]
    fn dimacs_parsing() {
        let g = parse_dimacs("c five cycle\np edge 5 5\ne 1 2\ne 2 3\ne 3 4\ne 4 5\ne 5 1\n").unwrap();
        assert_eq!(g, Graph::cycle(5));
        let bad = [
            ("e 1 2\n", 1),
            ("p edge 3 1\ne 1 4\n", 2),
            ("p edge 3 1\ne 1 1\n", 2),
            ("p edge 3 2\ne 1 2\ne 2 1\n", 3),
            ("p edge 3 2\ne 1 2\n", 2),
            ("p edge 3 1\ne 1 2\ne 2 3\n", 3),
            ("p edge x 1\n", 1),
            ("p edge 3 0\nq\n", 2),
        ];
        for (text, line) in bad {
            match parse_dimacs(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn weights_parsing() {
        let w = parse_weights("1.5\n2\n0\n", 3).unwrap();
        assert_eq!(w.values(), &[1.5, 2.0, 0.0]);
        assert!(matches!(parse_weights("1\nx\n", 2), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_weights("1\n-2\n", 2), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_weights("1\n", 2), Err(Error::Parse { .. })));
        assert!(matches!(parse_weights("1\n2\n3\n", 2), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn corpus_is_pinned() {
        let a = corpus::graphs();
        let b = corpus::graphs();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8 + 7 + 4 + 20);
        assert!(a.iter().all(|(_, g)| g.n() <= 12));
        assert_eq!(corpus::weighted().len(), 10);
    }
}
