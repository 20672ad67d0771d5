//! Choosing which comparisons to collect next.
//!
//! With Fisher information `σ⁻² Δ_w`, the E-optimal design problem
//! `max λ₂(w)  s.t.  w ≥ w₀, ‖w − w₀‖₁ ≤ ξ, w integral` is attacked with the
//! greedy Fiedler heuristic: repeatedly add one comparison on the pair that
//! maximizes `(F_i − F_j)²`, `F` the current Fiedler vector. Uniform random
//! augmentation is the baseline. [`criteria`] evaluates the E/A/D/T
//! scalarizations of the information matrix for any schedule.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{edge_from_index, edge_index, EdgeKey, MultiGraph};
use crate::spectral::{
    full_spectrum_capped, smallest_eigs_with, SolverOptions, SpectralPair, DEFAULT_DENSE_CAP,
    DEFAULT_TOL, MULTIPLICITY_GAP,
};

/// Scalarizations of the information matrix `Δ_w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaReport {
    /// `J_E = λ₂`.
    pub j_e: f64,
    /// `J_A = [ (1/n) Σ_{i≥2} 1/λ_i ]⁻¹`; `None` if disconnected or too large
    /// for a dense spectrum.
    pub j_a: Option<f64>,
    /// `J_D = (1/n) Σ_{i≥2} log λ_i`; same availability as `j_a`.
    pub j_d: Option<f64>,
    /// Total number of comparisons `M = ‖w‖₁`.
    pub t: u64,
    /// `tr Δ_w = 2M` (each arc contributes its weight to two diagonal entries).
    pub trace: u64,
    pub connected: bool,
}

/// E/A/D/T criteria. Uses a dense spectrum up to `n = 2000`; beyond that
/// only `j_e` is computed (iteratively).
pub fn criteria(g: &MultiGraph) -> Result<CriteriaReport> {
    criteria_capped(g, DEFAULT_DENSE_CAP)
}

pub fn criteria_capped(g: &MultiGraph, dense_cap: usize) -> Result<CriteriaReport> {
    let t = g.total_weight();
    let connected = g.is_connected();
    let mut report = CriteriaReport {
        j_e: 0.0,
        j_a: None,
        j_d: None,
        t,
        trace: 2 * t,
        connected,
    };
    if !connected {
        return Ok(report);
    }
    let n = g.n() as f64;
    if g.n() <= dense_cap {
        let spectrum = full_spectrum_capped(g, dense_cap)?;
        let nonzero = &spectrum[1..];
        report.j_e = nonzero[0];
        report.j_a = Some(n / nonzero.iter().map(|l| 1.0 / l).sum::<f64>());
        report.j_d = Some(nonzero.iter().map(|l| l.ln()).sum::<f64>() / n);
    } else {
        let pairs = smallest_eigs_with(g, 2, &SolverOptions::default())?;
        report.j_e = pairs[1].value;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Greedy,
    Random,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Greedy => "greedy",
            Strategy::Random => "random",
        })
    }
}

/// Outcome of spending a budget of `ξ` unit increments.
#[derive(Debug, Clone, Serialize)]
pub struct DesignResult {
    pub strategy: Strategy,
    /// One arc per increment, in the order chosen.
    pub sequence: Vec<EdgeKey>,
    /// Distinct arcs with their multiplicities, in order of first choice.
    pub added: Vec<(EdgeKey, u32)>,
    /// `λ₂` before any increment and after each one (`ξ + 1` entries).
    pub lambda2_trajectory: Vec<f64>,
    pub criteria_before: CriteriaReport,
    pub criteria_after: CriteriaReport,
    #[serde(skip)]
    pub augmented: MultiGraph,
}

fn tally(sequence: &[EdgeKey]) -> Vec<(EdgeKey, u32)> {
    let mut out: Vec<(EdgeKey, u32)> = Vec::new();
    for &e in sequence {
        match out.iter_mut().find(|(x, _)| *x == e) {
            Some((_, c)) => *c += 1,
            None => out.push((e, 1)),
        }
    }
    out
}

/// Set of arc indices that may not be incremented.
#[derive(Debug, Clone, Default)]
pub struct Forbidden(HashSet<usize>);

impl Forbidden {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn contains(&self, e: EdgeKey) -> bool {
        self.0.contains(&e.k)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, e: EdgeKey) {
        self.0.insert(e.k);
    }
}

impl FromIterator<EdgeKey> for Forbidden {
    fn from_iter<T: IntoIterator<Item = EdgeKey>>(iter: T) -> Self {
        Self(iter.into_iter().map(|e| e.k).collect())
    }
}

fn check_forbidden(g: &MultiGraph, forbidden: &Forbidden) -> Result<()> {
    if forbidden.0.iter().any(|&k| k >= g.pair_count()) {
        return Err(Error::InvalidInput(
            "forbidden arc index out of range".into(),
        ));
    }
    if forbidden.len() >= g.pair_count() {
        return Err(Error::Exhausted);
    }
    Ok(())
}

#[derive(PartialEq)]
struct Candidate {
    gap: f64,
    lo: usize,
    hi: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gap
            .total_cmp(&other.gap)
            .then_with(|| other.lo.cmp(&self.lo))
            .then_with(|| other.hi.cmp(&self.hi))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Admissible pair maximizing `(F_i − F_j)²`; exact ties go to the lowest
/// arc index.
///
/// Pairs are visited best-first over the vertices sorted by `F`, so with few
/// forbidden arcs only a handful of candidates is inspected instead of all
/// `n(n-1)/2`.
pub fn fiedler_argmax(fiedler: &[f64], forbidden: &Forbidden) -> Option<EdgeKey> {
    let n = fiedler.len();
    if n < 2 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| fiedler[a].total_cmp(&fiedler[b]).then(a.cmp(&b)));
    let gap = |lo: usize, hi: usize| fiedler[order[hi]] - fiedler[order[lo]];

    let mut heap = BinaryHeap::from([Candidate {
        gap: gap(0, n - 1),
        lo: 0,
        hi: n - 1,
    }]);
    let mut seen = HashSet::from([(0, n - 1)]);
    let mut best: Option<(f64, EdgeKey)> = None;
    while let Some(c) = heap.pop() {
        if let Some((g, _)) = best {
            if c.gap < g {
                break;
            }
        }
        let e = edge_index(order[c.lo], order[c.hi], n).expect("distinct vertices");
        if !forbidden.contains(e) {
            best = match best {
                Some((g, b)) if b.k <= e.k => Some((g, b)),
                _ => Some((c.gap, e)),
            };
        }
        for (lo, hi) in [(c.lo + 1, c.hi), (c.lo, c.hi.wrapping_sub(1))] {
            if lo < hi && seen.insert((lo, hi)) {
                heap.push(Candidate {
                    gap: gap(lo, hi),
                    lo,
                    hi,
                });
            }
        }
    }
    best.map(|(_, e)| e)
}

/// Options for [`greedy_augment_with`].
#[derive(Debug, Clone)]
pub struct GreedyOptions {
    pub tol: f64,
    /// Seed each eigensolve with the previous step's eigenvectors, except
    /// right after a step where `λ₂` looked multiple.
    pub warm_start: bool,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            warm_start: true,
        }
    }
}

/// Lowest eigenpairs used by the greedy loop: `λ₂` and, when it exists,
/// `λ₃` to detect a multiple `λ₂`.
fn low_pairs(g: &MultiGraph, opts: &SolverOptions) -> Result<Vec<SpectralPair>> {
    smallest_eigs_with(g, 3.min(g.n()), opts)
}

/// Greedy Fiedler augmentation with `ξ` unit increments.
pub fn greedy_augment(
    g: &MultiGraph,
    xi: usize,
    forbidden: &Forbidden,
    warm_start: bool,
) -> Result<DesignResult> {
    greedy_augment_with(
        g,
        xi,
        forbidden,
        &GreedyOptions {
            warm_start,
            ..GreedyOptions::default()
        },
    )
}

pub fn greedy_augment_with(
    g: &MultiGraph,
    xi: usize,
    forbidden: &Forbidden,
    opts: &GreedyOptions,
) -> Result<DesignResult> {
    let components = g.components();
    if components.len() > 1 {
        return Err(Error::NonIdentifiable { components });
    }
    check_forbidden(g, forbidden)?;

    let mut graph = g.clone();
    let mut solver = SolverOptions::with_tol(opts.tol);
    let mut pairs = low_pairs(&graph, &solver)?;
    let mut trajectory = vec![pairs[1].value];
    let mut sequence = Vec::with_capacity(xi);

    for _ in 0..xi {
        let e = fiedler_argmax(&pairs[1].vector, forbidden).ok_or(Error::Exhausted)?;
        graph.add_weight(e, 1)?;
        sequence.push(e);

        let multiple = pairs.len() > 2 && pairs[2].value - pairs[1].value < MULTIPLICITY_GAP;
        solver.warm_start = if opts.warm_start && !multiple {
            pairs[1..].iter().map(|p| p.vector.clone()).collect()
        } else {
            Vec::new()
        };
        pairs = low_pairs(&graph, &solver)?;
        trajectory.push(pairs[1].value);
    }

    Ok(DesignResult {
        strategy: Strategy::Greedy,
        added: tally(&sequence),
        sequence,
        lambda2_trajectory: trajectory,
        criteria_before: criteria(g)?,
        criteria_after: criteria(&graph)?,
        augmented: graph,
    })
}

/// `ξ` arcs drawn uniformly with replacement from the admissible pairs.
pub fn random_pairs<R: Rng>(
    n: usize,
    xi: usize,
    forbidden: &Forbidden,
    rng: &mut R,
) -> Result<Vec<EdgeKey>> {
    let total = crate::graph::pair_count(n);
    if forbidden.len() >= total {
        return Err(Error::Exhausted);
    }
    if forbidden.len() * 2 > total {
        let admissible: Vec<usize> = (0..total).filter(|k| !forbidden.0.contains(k)).collect();
        return (0..xi)
            .map(|_| edge_from_index(admissible[rng.random_range(0..admissible.len())], n))
            .collect();
    }
    let mut out = Vec::with_capacity(xi);
    while out.len() < xi {
        let k = rng.random_range(0..total);
        if !forbidden.0.contains(&k) {
            out.push(edge_from_index(k, n)?);
        }
    }
    Ok(out)
}

/// Uniform random augmentation, reproducible for a fixed `seed`.
pub fn random_augment(
    g: &MultiGraph,
    xi: usize,
    forbidden: &Forbidden,
    seed: u64,
) -> Result<DesignResult> {
    check_forbidden(g, forbidden)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sequence = random_pairs(g.n(), xi, forbidden, &mut rng)?;
    let mut graph = g.clone();
    let mut solver = SolverOptions::default();
    let first = low_pairs(&graph, &solver)?;
    let mut trajectory = vec![first[1].value];
    solver.warm_start = vec![first[1].vector.clone()];
    for &e in &sequence {
        graph.add_weight(e, 1)?;
        let pairs = low_pairs(&graph, &solver)?;
        trajectory.push(pairs[1].value);
        solver.warm_start = vec![pairs[1].vector.clone()];
    }
    Ok(DesignResult {
        strategy: Strategy::Random,
        added: tally(&sequence),
        sequence,
        lambda2_trajectory: trajectory,
        criteria_before: criteria(g)?,
        criteria_after: criteria(&graph)?,
        augmented: graph,
    })
}

/// All arcs touching any of `vertices`; handy for building forbidden sets.
pub fn arcs_touching(n: usize, vertices: &BTreeSet<usize>) -> Vec<EdgeKey> {
    (0..crate::graph::pair_count(n))
        .filter_map(|k| edge_from_index(k, n).ok())
        .filter(|e| vertices.contains(&e.i) || vertices.contains(&e.j))
        .collect()
}
