//! Closed-form upper bounds on the algebraic connectivity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{pair_count, MultiGraph};

/// Largest `n` accepted by [`best_cut_bound_exhaustive`].
pub const EXHAUSTIVE_CUT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Degree,
    Cut,
    EdgeConnectivity,
    ErProbabilistic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: BoundKind,
    pub value: f64,
    /// Vertex subset `U` realizing the bound, when there is one.
    pub certificate: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeBound {
    /// `n·d₋/(n−1)`.
    pub tight: f64,
    /// `2M/(n−1)`.
    pub loose: f64,
}

pub fn degree_bound(g: &MultiGraph) -> DegreeBound {
    let n = g.n() as f64;
    let stats = g.degree_stats();
    DegreeBound {
        tight: n * stats.d_minus as f64 / (n - 1.0),
        loose: 2.0 * stats.total_weight as f64 / (n - 1.0),
    }
}

impl DegreeBound {
    pub fn report(&self) -> BoundReport {
        BoundReport {
            name: BoundKind::Degree,
            value: self.tight,
            certificate: None,
            note: Some(format!("loose form 2M/(n-1) = {}", self.loose)),
        }
    }
}

fn normalized_cut(n: usize, cut: u64, size: usize) -> f64 {
    n as f64 * cut as f64 / (size * (n - size)) as f64
}

/// `n·cut(U, Uᶜ) / (|U|·|Uᶜ|)` for a nonempty proper subset `U`.
pub fn cut_bound(g: &MultiGraph, subset: &[usize]) -> Result<BoundReport> {
    let mask = g.subset_mask(subset)?;
    let size = mask.iter().filter(|&&m| m).count();
    if size == 0 || size == g.n() {
        return Err(Error::InvalidSubset);
    }
    let certificate: Vec<usize> = (0..g.n()).filter(|&v| mask[v]).collect();
    Ok(BoundReport {
        name: BoundKind::Cut,
        value: normalized_cut(g.n(), g.cut_weight(&certificate)?, size),
        certificate: Some(certificate),
        note: None,
    })
}

/// Minimum normalized cut over all `2^{n−1} − 1` bipartitions.
///
/// Subsets of `{0, …, n−2}` are walked in Gray-code order so each step
/// toggles one vertex and updates the cut in `O(n)`. Vertex `n−1` always
/// stays in the complement. Ties keep the first subset visited.
pub fn best_cut_bound_exhaustive(g: &MultiGraph) -> Result<BoundReport> {
    let n = g.n();
    if n > EXHAUSTIVE_CUT_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: EXHAUSTIVE_CUT_LIMIT,
            what: "exhaustive cut search",
        });
    }
    let mut w = vec![vec![0i64; n]; n];
    for (e, x) in g.edges() {
        w[e.i][e.j] = i64::from(x);
        w[e.j][e.i] = i64::from(x);
    }

    let mut inside = vec![false; n];
    let mut size = 0usize;
    let mut cut = 0i64;
    let mut best: Option<(f64, Vec<bool>)> = None;
    for step in 1u64..(1u64 << (n - 1)) {
        let v = step.trailing_zeros() as usize;
        for u in 0..n {
            if u != v {
                cut += if inside[u] == inside[v] {
                    w[v][u]
                } else {
                    -w[v][u]
                };
            }
        }
        inside[v] = !inside[v];
        if inside[v] {
            size += 1;
        } else {
            size -= 1;
        }
        let value = normalized_cut(n, cut as u64, size);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, inside.clone()));
        }
    }
    let (value, mask) = best.expect("n >= 2 gives at least one bipartition");
    Ok(BoundReport {
        name: BoundKind::Cut,
        value,
        certificate: Some((0..n).filter(|&v| mask[v]).collect()),
        note: Some("minimum over all bipartitions".into()),
    })
}

/// High-probability upper bound on `λ₂` of `G(n, p)`:
/// `np + 4n⁻²√(2 ln(1/ε))`, valid for even `n`.
pub fn er_bound(n: usize, p: f64, eps: f64) -> Result<f64> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Hypothesis(format!(
            "the bound holds for even n >= 2, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("p = {p} is not a probability")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "eps = {eps} must lie in (0, 1]"
        )));
    }
    let n = n as f64;
    Ok(n * p + 4.0 / (n * n) * (2.0 * (1.0 / eps).ln()).sqrt())
}

/// [`er_bound`] written in terms of the expected edge count `E[m] = pN`,
/// i.e. `2E[m]/(n−1)` plus the same correction.
pub fn er_bound_edges(n: usize, expected_edges: f64, eps: f64) -> Result<f64> {
    er_bound(n, expected_edges / pair_count(n.max(2)) as f64, eps)
}

/// Edge connectivity (global minimum cut) as an upper bound.
///
/// The chain `λ₂ ≤ vertex connectivity ≤ edge connectivity` is stated for
/// non-complete simple graphs; `K_n` has `λ₂ = n > n − 1`. Both situations
/// are flagged in `note` rather than refused.
pub fn edge_connectivity_bound(g: &MultiGraph) -> BoundReport {
    let cut = g.global_min_cut();
    let mut notes = Vec::new();
    if g.max_weight() > 1 {
        log::warn!("edge connectivity bound evaluated on a graph with weights above 1");
        notes.push("weights exceed 1; the chain is stated for unit weights");
    }
    if g.is_complete_simple() {
        notes.push("complete graph: lambda_2 = n exceeds the edge connectivity n-1");
    }
    BoundReport {
        name: BoundKind::EdgeConnectivity,
        value: cut.value as f64,
        certificate: Some(cut.partition),
        note: (!notes.is_empty()).then(|| notes.join("; ")),
    }
}
