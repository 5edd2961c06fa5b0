//! Clique-reduction gadget: a point set whose best coordinate k-subspace is
//! cheaper exactly when the graph has a k-clique, plus exact evaluators and a
//! brute-force search over coordinate subspaces.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{bail, Error, Result};
use crate::linalg::pairwise_sum;
use crate::measure::WeightVector;
use crate::par::map_indices;
#[cfg(not(feature = "parallel"))]
#[allow(unused_imports)]
use crate::float::Float;

/// Upper bound on the number of subsets `brute_force_best_coordinate` visits.
pub const ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GadgetInstance {
    pub d: usize,
    /// Common vertex degree.
    pub r: usize,
    pub k: usize,
    pub b1: f64,
    /// Multiplicity of the simplex points.
    pub b2: u64,
    pub c: f64,
    pub adjacency: Vec<Vec<bool>>,
    /// One unit-norm row per vertex.
    pub a: DMatrix<f64>,
}

/// Symmetric 0/1 adjacency from an undirected edge list; rejects loops and
/// out-of-range endpoints. Repeated edges collapse.
pub fn adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Vec<Vec<bool>>> {
    let mut adj = alloc::vec![alloc::vec![false; n]; n];
    for &(u, v) in edges {
        if u >= n || v >= n {
            bail!(Domain, "edge ({u}, {v}) outside {n} vertices");
        }
        if u == v {
            bail!(Domain, "self loop at vertex {u}");
        }
        adj[u][v] = true;
        adj[v][u] = true;
    }
    Ok(adj)
}

/// Common degree of a regular graph.
fn regular_degree(adj: &[Vec<bool>]) -> Result<usize> {
    let n = adj.len();
    if n == 0 {
        bail!(Domain, "empty graph");
    }
    for (i, row) in adj.iter().enumerate() {
        if row.len() != n {
            bail!(Shape, "adjacency row {i} has length {}", row.len());
        }
        if row[i] {
            bail!(Domain, "self loop at vertex {i}");
        }
        for j in 0..n {
            if row[j] != adj[j][i] {
                bail!(Domain, "adjacency not symmetric at ({i}, {j})");
            }
        }
    }
    let deg = |i: usize| adj[i].iter().filter(|&&e| e).count();
    let r = deg(0);
    if (1..n).any(|i| deg(i) != r) {
        return Err(Error::NonRegularGraph);
    }
    Ok(r)
}

/// Builds the gadget for a regular graph. Requires `1 <= k <= r`.
pub fn gen_gadget(adjacency: &[Vec<bool>], k: usize, b1: f64, b2: u64) -> Result<GadgetInstance> {
    let r = regular_degree(adjacency)?;
    if r == 0 {
        bail!(Domain, "graph has no edges");
    }
    if k == 0 || k > r {
        bail!(InvalidParameter, "k = {k} must lie in [1, {r}]");
    }
    if !(b1.is_finite() && b1 > 1.0) {
        bail!(InvalidParameter, "B1 must exceed 1");
    }
    if b2 == 0 {
        bail!(InvalidParameter, "B2 must be positive");
    }
    let d = adjacency.len();
    let c = (2.0 - 1.0 / b1).sqrt();
    let off = c / (b1 * r as f64).sqrt();
    let a = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            1.0 - 1.0 / b1
        } else if adjacency[i][j] {
            off
        } else {
            0.0
        }
    });
    Ok(GadgetInstance { d, r, k, b1, b2, c, adjacency: adjacency.to_vec(), a })
}

impl GadgetInstance {
    /// Number of neighbours of `i` inside `s`.
    pub fn edges_into(&self, i: usize, s: &[usize]) -> usize {
        s.iter().filter(|&&j| self.adjacency[i][j]).count()
    }

    /// The point set as a weighted matrix: the `d` simplex points carrying
    /// weight `b2`, followed by the vertex rows with weight 1.
    pub fn weighted_points(&self) -> (DMatrix<f64>, WeightVector) {
        let d = self.d;
        let mut q = DMatrix::zeros(2 * d, d);
        q.view_mut((0, 0), (d, d)).fill_with_identity();
        q.view_mut((d, 0), (d, d)).copy_from(&self.a);
        let mut w = alloc::vec![self.b2 as f64; d];
        w.extend(core::iter::repeat_n(1.0, d));
        (q, WeightVector::new(w).expect("weights are at least 1"))
    }

    /// Cost with every vertex row at distance 1 and every simplex copy paying
    /// `d - k`; differences from this isolate the clique-dependent part.
    pub fn reference_cost(&self) -> f64 {
        (self.b2 as f64 + 1.0) * (self.d - self.k) as f64
    }
}

fn check_subset(inst: &GadgetInstance, s: &[usize]) -> Result<()> {
    if s.len() != inst.k {
        bail!(InvalidParameter, "subset has {} elements, expected {}", s.len(), inst.k);
    }
    let mut seen = alloc::vec![false; inst.d];
    for &j in s {
        if j >= inst.d || seen[j] {
            bail!(InvalidParameter, "subset entries must be distinct indices below {}", inst.d);
        }
        seen[j] = true;
    }
    Ok(())
}

/// Squared distance of a vertex row with `e` neighbours in `s` to the
/// coordinate subspace on `s`.
fn vertex_residual_sq(inst: &GadgetInstance, in_s: bool, e: usize) -> f64 {
    let b1 = inst.b1;
    let edge_mass = e as f64 * inst.c * inst.c / (b1 * inst.r as f64);
    let v = if in_s {
        // 1 - (1 - 1/B1)^2 - edge_mass, expanded to avoid cancellation
        2.0 / b1 - 1.0 / (b1 * b1) - edge_mass
    } else {
        1.0 - edge_mass
    };
    v.max(0.0)
}

/// Cost of the point set against `span{e_j : j in s}` from the closed forms.
pub fn coordinate_subspace_cost(inst: &GadgetInstance, s: &[usize], p: f64) -> Result<f64> {
    check_subset(inst, s)?;
    if !(p > 0.0) {
        bail!(InvalidParameter, "p must be positive");
    }
    let mut in_s = alloc::vec![false; inst.d];
    for &j in s {
        in_s[j] = true;
    }
    let terms: Vec<f64> = (0..inst.d)
        .map(|i| vertex_residual_sq(inst, in_s[i], inst.edges_into(i, s)).powf(p / 2.0))
        .collect();
    Ok(inst.b2 as f64 * (inst.d - inst.k) as f64 + pairwise_sum(&terms))
}

/// Cost against an arbitrary subspace with orthonormal basis `v` (`d x m`),
/// through an explicit projector.
pub fn projector_cost(inst: &GadgetInstance, v: &DMatrix<f64>, p: f64) -> Result<f64> {
    if v.nrows() != inst.d {
        bail!(Shape, "basis has {} rows, gadget has {} coordinates", v.nrows(), inst.d);
    }
    let resid = DMatrix::identity(inst.d, inst.d) - v * v.transpose();
    let simplex: Vec<f64> = (0..inst.d).map(|j| resid.column(j).norm().powf(p)).collect();
    let ra = &resid * inst.a.transpose();
    let rows: Vec<f64> = (0..inst.d).map(|i| ra.column(i).norm().powf(p)).collect();
    Ok(inst.b2 as f64 * pairwise_sum(&simplex) + pairwise_sum(&rows))
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn lex_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    crate::small::subsets(n, k)
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    acc
}

/// Minimum of [`coordinate_subspace_cost`] over all `k`-subsets; ties go to
/// the lexicographically smallest subset.
pub fn brute_force_best_coordinate(inst: &GadgetInstance, p: f64) -> Result<(Vec<usize>, f64)> {
    let count = binomial(inst.d, inst.k);
    if count > ENUMERATION_CAP {
        bail!(CapExceeded, "C({}, {}) = {count} subsets exceeds {ENUMERATION_CAP}", inst.d, inst.k);
    }
    let subsets = lex_subsets(inst.d, inst.k);
    let costs = map_indices(subsets.len(), |t| coordinate_subspace_cost(inst, &subsets[t], p));
    let mut best: Option<(usize, f64)> = None;
    for (t, c) in costs.into_iter().enumerate() {
        let c = c?;
        if best.is_none_or(|(_, b)| c < b) {
            best = Some((t, c));
        }
    }
    let (t, c) = best.ok_or_else(|| Error::InvalidParameter("no subsets to search".into()))?;
    Ok((subsets[t].clone(), c))
}

/// Lower bound on the simplex cost of a `k`-subspace whose `(k+1)`-th largest
/// squared coordinate leverage is `v`.
pub fn perturbed_simplex_cost(d: usize, k: usize, v: f64, p: f64) -> Result<f64> {
    if k >= d {
        bail!(InvalidParameter, "k = {k} must be below d = {d}");
    }
    let top = 1.0 - 1.0 / (k as f64 + 1.0);
    if !(v >= 0.0 && v <= top + 1e-15) {
        bail!(Domain, "v = {v} outside [0, {top}]");
    }
    let h = p / 2.0;
    Ok((d - k) as f64 + ((1.0 - v).powf(h) + v.powf(h) - 1.0))
}

/// Squared row norms of `v` sorted in decreasing order.
pub fn sorted_leverages(v: &DMatrix<f64>) -> Vec<f64> {
    let mut l: Vec<f64> = (0..v.nrows()).map(|i| v.row(i).norm_squared()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    l
}

/// Additive gap the reduction predicts between instances with and without a
/// `k`-clique: `(2/B1)^(p/2) [(1-(k-2)/r)^(p/2) - (1-(k-1)/r)^(p/2)]`.
pub fn clique_gap_bound(b1: f64, k: usize, r: usize, p: f64) -> f64 {
    let h = p / 2.0;
    let (k, r) = (k as f64, r as f64);
    (2.0 / b1).powf(h) * ((1.0 - (k - 2.0) / r).max(0.0).powf(h) - (1.0 - (k - 1.0) / r).max(0.0).powf(h))
}

/// Whether the vertices in `s` are pairwise adjacent.
pub fn is_clique(adj: &[Vec<bool>], s: &[usize]) -> bool {
    s.iter().enumerate().all(|(t, &i)| s[t + 1..].iter().all(|&j| adj[i][j]))
}

/// Small regular graphs used as fixtures.
pub mod graphs {
    use super::adjacency_from_edges;
    use alloc::vec::Vec;

    fn build(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        adjacency_from_edges(n, edges).expect("fixture edges are valid")
    }

    pub fn complete(n: usize) -> Vec<Vec<bool>> {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        build(n, &edges)
    }

    pub fn cycle(n: usize) -> Vec<Vec<bool>> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        build(n, &edges)
    }

    /// 3-regular, triangle-free, 10 vertices.
    pub fn petersen() -> Vec<Vec<bool>> {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        build(10, &edges)
    }

    /// The 3-cube: 3-regular, bipartite, 8 vertices.
    pub fn cube() -> Vec<Vec<bool>> {
        let mut edges = Vec::new();
        for i in 0..8usize {
            for b in 0..3 {
                let j = i ^ (1 << b);
                if i < j {
                    edges.push((i, j));
                }
            }
        }
        build(8, &edges)
    }

    /// `K_{3,3}`: 3-regular, triangle-free, 6 vertices.
    pub fn k33() -> Vec<Vec<bool>> {
        let edges: Vec<_> = (0..3).flat_map(|i| (3..6).map(move |j| (i, j))).collect();
        build(6, &edges)
    }

    /// Triangular prism: 3-regular with two triangles, 6 vertices.
    pub fn prism() -> Vec<Vec<bool>> {
        build(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity_columns, random_orthonormal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coord_basis(d: usize, s: &[usize]) -> DMatrix<f64> {
        let mut v = DMatrix::zeros(d, s.len());
        for (t, &j) in s.iter().enumerate() {
            v[(j, t)] = 1.0;
        }
        v
    }

    #[test]
    fn rows_are_unit_and_normalizer_matches() {
        let inst = gen_gadget(&graphs::petersen(), 3, 1e4, 1_000_000).unwrap();
        assert!(((1.0 - 1.0 / inst.b1).powi(2) + inst.c * inst.c / inst.b1 - 1.0).abs() < 1e-12);
        for i in 0..inst.d {
            assert!((inst.a.row(i).norm_squared() - 1.0).abs() < 1e-12);
        }
        assert!((inst.c - 1.41417).abs() < 1e-5);
    }

    #[test]
    fn preconditions() {
        assert!(gen_gadget(&graphs::cycle(4), 3, 1e4, 10).is_err());
        assert!(gen_gadget(&graphs::cycle(4), 2, 1e4, 10).is_ok());
        let mut bad = graphs::cycle(5);
        bad[0][2] = true;
        bad[2][0] = true;
        assert_eq!(gen_gadget(&bad, 2, 1e4, 10), Err(Error::NonRegularGraph));
        assert!(adjacency_from_edges(3, &[(0, 0)]).is_err());
    }

    #[test]
    fn closed_form_matches_projector_on_every_subset() {
        for (g, k) in [(graphs::complete(4), 3), (graphs::cycle(5), 2), (graphs::prism(), 3), (graphs::cube(), 3)] {
            let inst = gen_gadget(&g, k, 1e4, 1_000_000).unwrap();
            for p in [1.0, 1.5, 2.0] {
                for s in lex_subsets(inst.d, k) {
                    let closed = coordinate_subspace_cost(&inst, &s, p).unwrap();
                    let naive = projector_cost(&inst, &coord_basis(inst.d, &s), p).unwrap();
                    assert!((closed - naive).abs() <= 1e-9 * naive, "{s:?} {closed} {naive}");
                }
            }
        }
    }

    #[test]
    fn complete_graph_picks_a_triangle() {
        let inst = gen_gadget(&graphs::complete(4), 3, 1e4, 1_000_000).unwrap();
        let (s, _) = brute_force_best_coordinate(&inst, 1.0).unwrap();
        assert_eq!(s, [0, 1, 2]);
        assert!(s.iter().all(|&i| inst.edges_into(i, &s) == 2));
    }

    #[test]
    fn outside_term_instantiates_formula() {
        let inst = gen_gadget(&graphs::complete(4), 3, 1e4, 1).unwrap();
        let s = [0, 1, 2];
        let resid = DMatrix::identity(4, 4) - coord_basis(4, &s) * coord_basis(4, &s).transpose();
        let direct = (&resid * inst.a.row(3).transpose()).norm_squared();
        let formula = 1.0 - 3.0 * inst.c * inst.c / (inst.b1 * 3.0);
        assert!((direct - formula).abs() < 1e-14);
    }

    #[test]
    fn triangle_free_graph_pays_more() {
        let k4 = gen_gadget(&graphs::complete(4), 3, 1e4, 1_000_000).unwrap();
        let pet = gen_gadget(&graphs::petersen(), 3, 1e4, 1_000_000).unwrap();
        let (_, c4) = brute_force_best_coordinate(&k4, 1.0).unwrap();
        let (s, cp) = brute_force_best_coordinate(&pet, 1.0).unwrap();
        assert!(!is_clique(&pet.adjacency, &s));
        // the clique formula value for the Petersen instance
        let clique_value = (2.0 / pet.b1).sqrt() * 3.0 * (1.0f64 - 2.0 / 3.0).sqrt() + (pet.d - pet.k) as f64 * (pet.b2 as f64 + 1.0);
        assert!(cp > clique_value - 1e-3);
        let margin = (cp - pet.reference_cost()) - (c4 - k4.reference_cost());
        let bound = clique_gap_bound(1e4, 3, 3, 1.0);
        assert!(margin > 0.0 && margin <= 10.0 * bound && margin >= bound / 10.0, "{margin} {bound}");
    }

    #[test]
    fn perturbation_bound_examples() {
        assert_eq!(perturbed_simplex_cost(5, 2, 0.0, 1.0).unwrap(), 3.0);
        let v = perturbed_simplex_cost(5, 2, 0.5, 1.0).unwrap();
        assert!((v - (3.0 + 2f64.sqrt() - 1.0)).abs() < 1e-14);
        assert!(perturbed_simplex_cost(5, 2, 0.9, 1.0).is_err());
    }

    #[test]
    fn random_subspaces_respect_perturbation_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = gen_gadget(&graphs::cycle(6), 2, 1e4, 1).unwrap();
        let a_part = projector_cost(&inst, &identity_columns(6, 0), 1.0).unwrap() - 6.0;
        for _ in 0..100 {
            let v = random_orthonormal(&mut rng, 6, 2);
            let lev = sorted_leverages(&v);
            let bound = perturbed_simplex_cost(6, 2, lev[2], 1.0).unwrap();
            // one simplex copy: total cost minus the vertex rows' own distances
            let resid = DMatrix::identity(6, 6) - &v * v.transpose();
            let rows: f64 = (0..6).map(|i| (&resid * inst.a.row(i).transpose()).norm()).sum();
            let simplex = projector_cost(&inst, &v, 1.0).unwrap() - rows;
            assert!(simplex >= bound - 1e-12);
        }
        assert!((a_part - 6.0).abs() < 1e-12);
        assert_eq!(sorted_leverages(&identity_columns(4, 2)), [1.0, 1.0, 0.0, 0.0]);
    }
}
