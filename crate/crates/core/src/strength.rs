//! Strength of connection by algebraic distances.
//!
//! The distance mu_ij is the inverse of the caliber-1 least-squares error of
//! fitting the Jacobi-smoothed value of vector entry i from entry j across
//! the weighted test vector set. An exact fit has mu = infinity, which is a
//! dedicated flag rather than a float so maxima run over finite values only.

use std::io::Write;

use crate::error::{Error, Result};
use crate::sparse::{graph_power, AdjacencyGraph, SparseMatrix};
use crate::testvectors::TestVectorSet;

/// Relative slack applied at the retention threshold so exact ties stay in.
const TIE_TOLERANCE: f64 = 1e-14;
/// Least-squares values below this count as exact fits.
const LS_UNDERFLOW: f64 = 1e-300;
/// A fit whose residual is this small relative to the weighted energy of the
/// target is exact to working precision. Inverting it would rank neighbors by
/// rounding noise, so such fits are flagged infinite instead. The ratio test
/// keeps the flag invariant under rescaling of the matrix or the vectors.
const EXACT_FIT_RELATIVE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mu {
    Finite(f64),
    Infinite,
}

impl Mu {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Mu::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Mu::Finite(v) => Some(*v),
            Mu::Infinite => None,
        }
    }
}

impl std::fmt::Display for Mu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mu::Finite(v) => write!(f, "{v}"),
            Mu::Infinite => write!(f, "inf"),
        }
    }
}

/// Jacobi-smoothed values of the test vectors at row i:
/// v_i + r_i / a_ii with r = -A v.
pub(crate) fn smoothed_row_values(a: &SparseMatrix, tvs: &TestVectorSet, i: usize) -> Result<Vec<f64>> {
    let (cols, vals) = a.row(i);
    let mut diag = 0.0;
    for (&j, &v) in cols.iter().zip(vals) {
        if j == i {
            diag = v;
        }
    }
    if diag == 0.0 {
        return Err(Error::ZeroDiagonal(i));
    }
    let mut out = Vec::with_capacity(tvs.k());
    for v in tvs.vectors() {
        let mut av = 0.0;
        for (&j, &w) in cols.iter().zip(vals) {
            av += w * v[j];
        }
        out.push(v[i] - av / diag);
    }
    Ok(out)
}

/// mu from precomputed smoothed values at i and raw values at j.
fn mu_from_values(weights: &[f64], tilde_i: &[f64], vj: &[f64]) -> Mu {
    let mut denom = 0.0;
    let mut cross = 0.0;
    for ((&w, &t), &x) in weights.iter().zip(tilde_i).zip(vj) {
        denom += w * x * x;
        cross += w * t * x;
    }
    if denom == 0.0 {
        // j carries no information; the fit is exact only if i has nothing
        // left to fit
        let target: f64 = weights.iter().zip(tilde_i).map(|(&w, &t)| w * t * t).sum();
        return if target == 0.0 { Mu::Infinite } else { Mu::Finite(0.0) };
    }
    let p = cross / denom;
    let mut ls = 0.0;
    let mut energy = 0.0;
    for ((&w, &t), &x) in weights.iter().zip(tilde_i).zip(vj) {
        let r = t - p * x;
        ls += w * r * r;
        energy += w * t * t;
    }
    if ls < LS_UNDERFLOW || ls <= EXACT_FIT_RELATIVE * energy {
        Mu::Infinite
    } else {
        Mu::Finite(1.0 / ls)
    }
}

/// Algebraic distance between rows i and j of A under the given vectors.
pub fn algebraic_distance(a: &SparseMatrix, tvs: &TestVectorSet, i: usize, j: usize) -> Result<Mu> {
    let n = a.n_rows();
    if tvs.n() != n || i >= n || j >= n {
        return Err(Error::DimensionMismatch("algebraic_distance".into()));
    }
    let tilde = smoothed_row_values(a, tvs, i)?;
    let vj: Vec<f64> = tvs.vectors().iter().map(|v| v[j]).collect();
    Ok(mu_from_values(tvs.weights(), &tilde, &vj))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrengthEdge {
    pub to: usize,
    pub mu: Mu,
    /// Hop count of the pair in the matrix graph, between 1 and the depth.
    /// Coloring spends this much of its distance budget crossing the edge.
    pub dist: usize,
}

/// Directed strong-connection graph over a vertex subset (the F-points or a
/// compatible-relaxation candidate set).
#[derive(Debug, Clone)]
pub struct StrengthGraph {
    vertices: Vec<usize>,
    local: Vec<usize>,
    edges: Vec<Vec<StrengthEdge>>,
    depth: usize,
    theta: f64,
}

impl StrengthGraph {
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Local index of a global vertex, if present.
    pub fn local_of(&self, global: usize) -> Option<usize> {
        self.local
            .get(global)
            .copied()
            .filter(|&l| l != usize::MAX)
    }

    /// Retained strong edges leaving local vertex `l`, ascending by target.
    pub fn edges(&self, l: usize) -> &[StrengthEdge] {
        &self.edges[l]
    }

    /// Text dump: one `i j mu strong` line per retained edge.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        for (l, &i) in self.vertices.iter().enumerate() {
            for e in &self.edges[l] {
                writeln!(w, "{i} {} {} 1", e.to, e.mu)?;
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn from_parts(n: usize, vertices: Vec<usize>, edges: Vec<Vec<StrengthEdge>>) -> Self {
        let mut local = vec![usize::MAX; n];
        for (l, &g) in vertices.iter().enumerate() {
            local[g] = l;
        }
        Self {
            vertices,
            local,
            edges,
            depth: 1,
            theta: 0.5,
        }
    }
}

/// Threshold rule: keep infinite edges, and finite edges with
/// mu >= theta * max(finite mu) up to a relative tie tolerance.
fn retain_edges(candidates: &[(usize, usize, Mu)], theta: f64) -> Vec<StrengthEdge> {
    // Exact fits dominate: any neighbor that predicts the point to working
    // precision is a strictly better interpolation witness than every finite
    // one, so when such neighbors exist the finite leftovers, which on locally
    // converged points are the weak cross-characteristic couplings, are
    // dropped rather than promoted by the relative threshold.
    if candidates.iter().any(|(_, _, m)| m.is_infinite()) {
        return candidates
            .iter()
            .filter(|(_, _, m)| m.is_infinite())
            .map(|&(j, dist, mu)| StrengthEdge { to: j, mu, dist })
            .collect();
    }
    let max_finite = candidates
        .iter()
        .filter_map(|(_, _, m)| m.finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::new();
    for &(j, dist, mu) in candidates {
        if let Mu::Finite(v) = mu {
            if max_finite.is_finite() && v >= theta * max_finite - TIE_TOLERANCE * theta * max_finite.abs() {
                out.push(StrengthEdge { to: j, mu, dist });
            }
        }
    }
    out
}

/// Strength graph over `vertices` using neighborhoods from the depth-d power
/// of the pattern of A.
pub fn build_strength_graph(
    a: &SparseMatrix,
    tvs: &TestVectorSet,
    vertices: &[usize],
    depth: usize,
    theta: f64,
) -> Result<StrengthGraph> {
    let graph = graph_power(a, depth)?;
    build_strength_graph_with(a, tvs, vertices, &graph, depth, theta)
}

pub(crate) fn build_strength_graph_with(
    a: &SparseMatrix,
    tvs: &TestVectorSet,
    vertices: &[usize],
    neighborhoods: &AdjacencyGraph,
    depth: usize,
    theta: f64,
) -> Result<StrengthGraph> {
    let n = a.n_rows();
    if !(0.0..1.0).contains(&theta) || theta == 0.0 {
        return Err(Error::InvalidParameter(format!("theta={theta} must lie in (0, 1)")));
    }
    if tvs.n() != n {
        return Err(Error::DimensionMismatch("strength graph test vectors".into()));
    }
    let mut local = vec![usize::MAX; n];
    for (l, &g) in vertices.iter().enumerate() {
        if g >= n {
            return Err(Error::InvalidParameter(format!("vertex {g} out of range")));
        }
        if local[g] != usize::MAX {
            return Err(Error::InvalidParameter(format!("duplicate vertex {g}")));
        }
        local[g] = l;
    }
    let weights = tvs.weights();
    let mut edges = Vec::with_capacity(vertices.len());
    let mut scratch = Vec::new();
    let mut hop = vec![0usize; n];
    let mut touched = Vec::new();
    for &i in vertices {
        let tilde = smoothed_row_values(a, tvs, i)?;
        // layered walk over the matrix graph records how many hops each
        // neighborhood member is from i
        touched.clear();
        hop[i] = usize::MAX;
        touched.push(i);
        let mut frontier = vec![i];
        for step in 1..=depth.max(1) {
            let mut next = Vec::new();
            for &v in &frontier {
                let (cols, _) = a.row(v);
                for &w in cols {
                    if hop[w] == 0 {
                        hop[w] = step;
                        touched.push(w);
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        scratch.clear();
        for &j in neighborhoods.neighbors(i) {
            if local[j] == usize::MAX {
                continue;
            }
            let dist = match hop[j] {
                0 | usize::MAX => depth.max(1),
                h => h,
            };
            let vj: Vec<f64> = tvs.vectors().iter().map(|v| v[j]).collect();
            scratch.push((j, dist, mu_from_values(weights, &tilde, &vj)));
        }
        edges.push(retain_edges(&scratch, theta));
        for &t in &touched {
            hop[t] = 0;
        }
    }
    Ok(StrengthGraph {
        vertices: vertices.to_vec(),
        local,
        edges,
        depth,
        theta,
    })
}
