//! Weighted multigraphs on the complete graph's edge set.
//!
//! Every unordered pair `{i, j}` of the `n` vertices is an arc with fixed
//! orientation `tail = min(i, j)`, `head = max(i, j)`, enumerated
//! lexicographically by `k ∈ 0..n(n-1)/2`. A [`MultiGraph`] assigns each arc a
//! nonnegative integer multiplicity `w_k`; only the positive entries are
//! stored. The weighted Laplacian `Δ_w = Bᵗ W B` is never materialized on the
//! iterative paths: [`MultiGraph::laplacian_apply`] evaluates
//! `(Δ_w v)_i = Σ_j w_ij (v_i − v_j)` in one sweep over the support.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical key of the arc between two distinct vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey {
    /// Tail, always the smaller vertex id.
    pub i: usize,
    /// Head, always the larger vertex id.
    pub j: usize,
    /// Lexicographic index of `(i, j)` among all pairs.
    pub k: usize,
}

/// Number of unordered pairs on `n` vertices.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Canonical key for the pair `{i, j}`; argument order does not matter.
pub fn edge_index(i: usize, j: usize, n: usize) -> Result<EdgeKey> {
    if i == j || i >= n || j >= n {
        return Err(Error::InvalidEdge { i, j, n });
    }
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    let k = i * (2 * n - i - 1) / 2 + (j - i - 1);
    Ok(EdgeKey { i, j, k })
}

/// Inverse of [`edge_index`].
pub fn edge_from_index(k: usize, n: usize) -> Result<EdgeKey> {
    if k >= pair_count(n) {
        return Err(Error::InvalidInput(format!(
            "edge index {k} out of range for {n} vertices"
        )));
    }
    // Row i starts at s(i) = i(2n - i - 1)/2; estimate i from the quadratic
    // and then correct for floating point.
    let nf = n as f64;
    let disc = (2.0 * nf - 1.0).powi(2) - 8.0 * k as f64;
    let mut i = (((2.0 * nf - 1.0) - disc.max(0.0).sqrt()) / 2.0).floor() as usize;
    let start = |i: usize| i * (2 * n - i - 1) / 2;
    while i > 0 && start(i) > k {
        i -= 1;
    }
    while i + 1 < n && start(i + 1) <= k {
        i += 1;
    }
    let j = k - start(i) + i + 1;
    Ok(EdgeKey { i, j, k })
}

/// Degree summary of a multigraph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeStats {
    pub degrees: Vec<u64>,
    pub d_plus: u64,
    pub d_minus: u64,
    /// `M = Σ_k w_k`, the total number of comparisons.
    pub total_weight: u64,
    /// `m = #{k : w_k > 0}`.
    pub support_size: usize,
}

/// A global minimum cut and one side achieving it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinCut {
    pub value: u64,
    pub partition: Vec<usize>,
}

/// Integer edge weights over the complete graph on `n` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiGraph {
    n: usize,
    weights: BTreeMap<EdgeKey, u32>,
}

impl MultiGraph {
    /// The graph on `n ≥ 2` vertices with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "a multigraph needs at least 2 vertices, got {n}"
            )));
        }
        Ok(Self {
            n,
            weights: BTreeMap::new(),
        })
    }

    /// Builds a graph from `(i, j, w)` triples; repeated pairs accumulate and
    /// zero weights are ignored.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u32)>,
    {
        let mut g = Self::empty(n)?;
        for (i, j, w) in edges {
            let e = edge_index(i, j, n)?;
            if w > 0 {
                g.add_weight(e, w)?;
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `N = n(n-1)/2`, the number of candidate arcs.
    pub fn pair_count(&self) -> usize {
        pair_count(self.n)
    }

    pub fn key(&self, i: usize, j: usize) -> Result<EdgeKey> {
        edge_index(i, j, self.n)
    }

    pub fn weight(&self, e: EdgeKey) -> u32 {
        self.weights.get(&e).copied().unwrap_or(0)
    }

    pub fn weight_between(&self, i: usize, j: usize) -> u32 {
        edge_index(i, j, self.n)
            .map(|e| self.weight(e))
            .unwrap_or(0)
    }

    /// Positive-weight arcs in lexicographic order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = (EdgeKey, u32)> + '_ {
        self.weights.iter().map(|(&e, &w)| (e, w))
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.values().map(|&w| u64::from(w)).sum()
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    fn check_key(&self, e: EdgeKey) -> Result<()> {
        let canonical = edge_index(e.i, e.j, self.n)?;
        if canonical != e {
            return Err(Error::InvalidEdge {
                i: e.i,
                j: e.j,
                n: self.n,
            });
        }
        Ok(())
    }

    /// `w_e += c` in place.
    pub fn add_weight(&mut self, e: EdgeKey, c: u32) -> Result<()> {
        self.check_key(e)?;
        if c == 0 {
            return Err(Error::InvalidInput(
                "weight increment must be positive".into(),
            ));
        }
        let slot = self.weights.entry(e).or_insert(0);
        *slot = slot
            .checked_add(c)
            .ok_or_else(|| Error::InvalidInput("edge weight overflow".into()))?;
        Ok(())
    }

    /// Copy of `self` with `w_e += c`.
    pub fn with_weight_added(&self, e: EdgeKey, c: u32) -> Result<Self> {
        let mut g = self.clone();
        g.add_weight(e, c)?;
        Ok(g)
    }

    /// Matrix-free `Δ_w v`.
    pub fn laplacian_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v.len())?;
        let mut out = vec![0.0; self.n];
        self.laplacian_apply_into(v, &mut out);
        Ok(out)
    }

    /// `out ← Δ_w v`; both slices must have length `n`.
    pub(crate) fn laplacian_apply_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (e, &w) in &self.weights {
            let flow = f64::from(w) * (v[e.i] - v[e.j]);
            out[e.i] += flow;
            out[e.j] -= flow;
        }
    }

    /// `⟨v, Δ_w v⟩ = Σ_k w_k (v_head − v_tail)²`.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        self.check_len(v.len())?;
        Ok(self
            .weights
            .iter()
            .map(|(e, &w)| f64::from(w) * (v[e.j] - v[e.i]).powi(2))
            .sum())
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    pub fn degrees(&self) -> Vec<u64> {
        let mut d = vec![0u64; self.n];
        for (e, &w) in &self.weights {
            d[e.i] += u64::from(w);
            d[e.j] += u64::from(w);
        }
        d
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let degrees = self.degrees();
        DegreeStats {
            d_plus: degrees.iter().copied().max().unwrap_or(0),
            d_minus: degrees.iter().copied().min().unwrap_or(0),
            total_weight: self.total_weight(),
            support_size: self.support_size(),
            degrees,
        }
    }

    /// Adjacency lists over the positive-weight support.
    pub fn adjacency(&self) -> Vec<Vec<(usize, u32)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (e, &w) in &self.weights {
            adj[e.i].push((e.j, w));
            adj[e.j].push((e.i, w));
        }
        adj
    }

    /// Connected components (BFS), each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for root in 0..self.n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut comp = vec![root];
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// `cut(U, Uᶜ) = Σ_{i∈U, j∉U} w_ij`. Ids outside `0..n` are rejected.
    pub fn cut_weight(&self, subset: &[usize]) -> Result<u64> {
        let mask = self.subset_mask(subset)?;
        Ok(self
            .weights
            .iter()
            .filter(|(e, _)| mask[e.i] != mask[e.j])
            .map(|(_, &w)| u64::from(w))
            .sum())
    }

    pub(crate) fn subset_mask(&self, subset: &[usize]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.n];
        for &u in subset {
            if u >= self.n {
                return Err(Error::InvalidInput(format!(
                    "vertex {u} out of range for {} vertices",
                    self.n
                )));
            }
            mask[u] = true;
        }
        Ok(mask)
    }

    /// Global minimum cut by Stoer–Wagner maximum-adjacency contraction,
    /// `O(n³)` on a dense weight table.
    pub fn global_min_cut(&self) -> MinCut {
        let n = self.n;
        let comps = self.components();
        if comps.len() > 1 {
            return MinCut {
                value: 0,
                partition: comps.into_iter().next().unwrap_or_default(),
            };
        }

        let mut w = vec![vec![0u64; n]; n];
        for (e, &x) in &self.weights {
            w[e.i][e.j] = u64::from(x);
            w[e.j][e.i] = u64::from(x);
        }
        // members[v]: original vertices merged into super-vertex v
        let mut members: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        let mut active: Vec<usize> = (0..n).collect();
        let mut best = MinCut {
            value: u64::MAX,
            partition: Vec::new(),
        };

        while active.len() > 1 {
            let mut key = vec![0u64; n];
            let mut added = vec![false; n];
            let mut prev = active[0];
            let mut last = active[0];
            for step in 0..active.len() {
                let next = *active
                    .iter()
                    .filter(|&&v| !added[v])
                    .max_by(|&&a, &&b| key[a].cmp(&key[b]).then(b.cmp(&a)))
                    .expect("an unadded vertex remains");
                added[next] = true;
                if step + 1 == active.len() {
                    // cut-of-the-phase separates `next` from everything else
                    if key[next] < best.value {
                        let mut part = members[next].clone();
                        part.sort_unstable();
                        best = MinCut {
                            value: key[next],
                            partition: part,
                        };
                    }
                    prev = last;
                    last = next;
                } else {
                    last = next;
                    for &v in &active {
                        if !added[v] {
                            key[v] += w[next][v];
                        }
                    }
                }
            }
            // merge `last` into `prev`
            let (s, t) = (prev, last);
            let moved = std::mem::take(&mut members[t]);
            members[s].extend(moved);
            for &v in &active {
                w[s][v] += w[t][v];
                w[v][s] = w[s][v];
            }
            w[s][s] = 0;
            active.retain(|&v| v != t);
        }
        best
    }

    /// Dense `n × n` Laplacian; intended for small `n`.
    pub fn dense_laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for (e, &w) in &self.weights {
            let w = f64::from(w);
            l[(e.i, e.i)] += w;
            l[(e.j, e.j)] += w;
            l[(e.i, e.j)] -= w;
            l[(e.j, e.i)] -= w;
        }
        l
    }

    /// True when every pair carries weight exactly one.
    pub fn is_complete_simple(&self) -> bool {
        self.support_size() == self.pair_count() && self.weights.values().all(|&w| w == 1)
    }

    pub fn max_weight(&self) -> u32 {
        self.weights.values().copied().max().unwrap_or(0)
    }
}

/// Standard graph families used as fixtures and demos.
pub mod families {
    use super::MultiGraph;
    use crate::error::Result;

    /// `P_n`: vertices `0, 1, …, n-1` joined in order.
    pub fn path(n: usize) -> Result<MultiGraph> {
        MultiGraph::from_edges(n, (0..n.saturating_sub(1)).map(|i| (i, i + 1, 1)))
    }

    /// `C_n` for `n ≥ 3`.
    pub fn cycle(n: usize) -> Result<MultiGraph> {
        if n < 3 {
            return Err(crate::Error::InvalidInput(
                "a cycle needs at least 3 vertices".into(),
            ));
        }
        MultiGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n, 1)))
    }

    /// `K_n` with unit weights.
    pub fn complete(n: usize) -> Result<MultiGraph> {
        MultiGraph::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1))))
    }

    /// `K_{a,b}`: vertices `0..a` on one side, `a..a+b` on the other.
    pub fn complete_bipartite(a: usize, b: usize) -> Result<MultiGraph> {
        MultiGraph::from_edges(
            a + b,
            (0..a).flat_map(|i| (a..a + b).map(move |j| (i, j, 1))),
        )
    }

    pub fn star(leaves: usize) -> Result<MultiGraph> {
        complete_bipartite(1, leaves)
    }

    /// Two disjoint `K_size` (vertices `0..size` and `size..2·size`) joined by
    /// `bridges` edges `(b, size + b)` for `b < bridges`.
    pub fn bridged_cliques(size: usize, bridges: usize) -> Result<MultiGraph> {
        if bridges > size {
            return Err(crate::Error::InvalidInput(format!(
                "at most {size} bridges fit between two cliques of size {size}"
            )));
        }
        let clique = move |offset: usize| {
            (0..size).flat_map(move |i| (i + 1..size).map(move |j| (offset + i, offset + j, 1)))
        };
        MultiGraph::from_edges(
            2 * size,
            clique(0)
                .chain(clique(size))
                .chain((0..bridges).map(|b| (b, size + b, 1))),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::families::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn edge_index_examples() {
        assert_eq!(edge_index(0, 1, 4).unwrap().k, 0);
        let e = edge_index(3, 2, 4).unwrap();
        assert_eq!((e.i, e.j, e.k), (2, 3, 5));
        assert!(matches!(
            edge_index(2, 2, 4),
            Err(Error::InvalidEdge { .. })
        ));
        assert!(edge_index(0, 4, 4).is_err());
    }

    #[test]
    fn edge_index_enumerates_lexicographically() {
        for n in 2..40 {
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    let e = edge_index(i, j, n).unwrap();
                    assert_eq!(e.k, k);
                    assert_eq!(edge_from_index(k, n).unwrap(), e);
                    k += 1;
                }
            }
            assert_eq!(k, pair_count(n));
            assert!(edge_from_index(k, n).is_err());
        }
    }

    #[test]
    fn add_weight_examples() {
        let mut g = MultiGraph::empty(3).unwrap();
        g.add_weight(g.key(0, 1).unwrap(), 1).unwrap();
        assert_eq!((g.total_weight(), g.support_size()), (1, 1));

        let k3 = complete(3).unwrap();
        let g = k3.with_weight_added(k3.key(0, 1).unwrap(), 1).unwrap();
        let w: Vec<u32> = g.edges().map(|(_, w)| w).collect();
        assert_eq!(w, vec![2, 1, 1]);
        assert_eq!(g.total_weight(), 4);

        let e = k3.key(0, 1).unwrap();
        let twice = k3
            .with_weight_added(e, 1)
            .unwrap()
            .with_weight_added(e, 1)
            .unwrap();
        assert_eq!(twice, k3.with_weight_added(e, 2).unwrap());
        assert!(k3.with_weight_added(e, 0).is_err());
    }

    #[test]
    fn laplacian_apply_examples() {
        let k3 = complete(3).unwrap();
        assert_eq!(
            k3.laplacian_apply(&[1.0, -1.0, 0.0]).unwrap(),
            vec![3.0, -3.0, 0.0]
        );
        let g = MultiGraph::from_edges(2, [(0, 1, 2)]).unwrap();
        assert_eq!(g.laplacian_apply(&[1.0, 0.0]).unwrap(), vec![2.0, -2.0]);
        assert!(matches!(
            g.laplacian_apply(&[1.0]),
            Err(Error::Dimension {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn degree_examples() {
        let s = complete(4).unwrap().degree_stats();
        assert_eq!(s.degrees, vec![3, 3, 3, 3]);
        assert_eq!((s.total_weight, s.support_size), (6, 6));
        let s = path(4).unwrap().degree_stats();
        assert_eq!(s.degrees, vec![1, 2, 2, 1]);
        assert_eq!((s.d_minus, s.d_plus), (1, 2));
        let s = MultiGraph::empty(5).unwrap().degree_stats();
        assert_eq!(s.degrees, vec![0; 5]);
        assert_eq!((s.total_weight, s.support_size), (0, 0));
    }

    #[test]
    fn connectivity_examples() {
        assert!(path(5).unwrap().is_connected());
        let two = MultiGraph::from_edges(4, [(0, 1, 1), (2, 3, 1)]).unwrap();
        assert!(!two.is_connected());
        assert_eq!(two.components(), vec![vec![0, 1], vec![2, 3]]);
        assert!(!MultiGraph::empty(2).unwrap().is_connected());
    }

    #[test]
    fn min_cut_examples() {
        assert_eq!(path(7).unwrap().global_min_cut().value, 1);
        assert_eq!(cycle(6).unwrap().global_min_cut().value, 2);
        assert_eq!(complete(5).unwrap().global_min_cut().value, 4);
        let two = MultiGraph::from_edges(4, [(0, 1, 1), (2, 3, 1)]).unwrap();
        assert_eq!(two.global_min_cut().value, 0);
        let bc = bridged_cliques(4, 1).unwrap();
        let cut = bc.global_min_cut();
        assert_eq!(cut.value, 1);
        assert_eq!(bc.cut_weight(&cut.partition).unwrap(), 1);
    }

    fn brute_min_cut(g: &MultiGraph) -> u64 {
        let n = g.n();
        (1u64..(1 << (n - 1)))
            .map(|mask| {
                let u: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
                g.cut_weight(&u).unwrap()
            })
            .min()
            .unwrap()
    }

    fn small_graph() -> impl Strategy<Value = MultiGraph> {
        (2usize..9).prop_flat_map(|n| {
            proptest::collection::vec(0u32..3, pair_count(n)).prop_map(move |ws| {
                MultiGraph::from_edges(
                    n,
                    ws.into_iter().enumerate().map(|(k, w)| {
                        let e = edge_from_index(k, n).unwrap();
                        (e.i, e.j, w)
                    }),
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn quadratic_form_matches_apply(g in small_graph(), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..g.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lv = g.laplacian_apply(&v).unwrap();
            let inner: f64 = v.iter().zip(&lv).map(|(a, b)| a * b).sum();
            let q = g.quadratic_form(&v).unwrap();
            prop_assert!((inner - q).abs() <= 1e-12 * (1.0 + q.abs()));
            prop_assert!(q >= 0.0);
            let ones = vec![1.0; g.n()];
            prop_assert!(g.laplacian_apply(&ones).unwrap().iter().all(|&x| x == 0.0));

            // monotone under any increment
            let k = rng.random_range(0..g.pair_count());
            let g2 = g.with_weight_added(edge_from_index(k, g.n()).unwrap(), 1).unwrap();
            prop_assert!(g2.quadratic_form(&v).unwrap() >= q);
        }

        #[test]
        fn degree_sum_and_min_cut(g in small_graph()) {
            let s = g.degree_stats();
            prop_assert_eq!(s.degrees.iter().sum::<u64>(), 2 * s.total_weight);
            let cut = g.global_min_cut();
            prop_assert_eq!(cut.value, brute_min_cut(&g));
            prop_assert_eq!(g.cut_weight(&cut.partition).unwrap(), cut.value);
            prop_assert!(!cut.partition.is_empty() && cut.partition.len() < g.n());
            prop_assert_eq!(cut.value == 0, !g.is_connected());
        }
    }

    #[test]
    fn complete_graph_acts_as_n_identity_minus_ones() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [3, 8, 21] {
            let g = complete(n).unwrap();
            for _ in 0..5 {
                let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let s: f64 = v.iter().sum();
                let lv = g.laplacian_apply(&v).unwrap();
                for i in 0..n {
                    assert!((lv[i] - (n as f64 * v[i] - s)).abs() < 1e-12);
                }
            }
        }
    }
}
