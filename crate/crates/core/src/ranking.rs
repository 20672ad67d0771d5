//! Least-squares ranking from cardinal pairwise comparisons.
//!
//! Each observed arc `k = (i, j)`, `i < j`, carries `y_k`, the mean of `w_k`
//! comparisons estimating `φ_j − φ_i`. The estimator
//!
//! ```text
//! φ̂ = argmin_{⟨φ,1⟩=0} Σ_k w_k ((Bφ)_k − y_k)²  =  Δ_w† Bᵗ W y
//! ```
//!
//! is computed by conjugate gradients on the normal equations, with a Jacobi
//! (degree) preconditioner and every iterate projected back onto mean-zero
//! vectors.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{edge_index, EdgeKey, MultiGraph};

/// A multigraph plus one cardinal comparison value per observed arc.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseData {
    graph: MultiGraph,
    y: BTreeMap<EdgeKey, f64>,
}

impl PairwiseData {
    /// `y` must be finite and defined exactly on the positive-weight arcs.
    pub fn new(graph: MultiGraph, y: BTreeMap<EdgeKey, f64>) -> Result<Self> {
        if y.len() != graph.support_size() {
            return Err(Error::InvalidInput(format!(
                "{} comparison values for {} observed pairs",
                y.len(),
                graph.support_size()
            )));
        }
        for (e, &v) in &y {
            if graph.weight(*e) == 0 {
                return Err(Error::InvalidInput(format!(
                    "comparison value on unobserved pair ({}, {})",
                    e.i, e.j
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite comparison on pair ({}, {})",
                    e.i, e.j
                )));
            }
        }
        Ok(Self { graph, y })
    }

    /// Builds data from `(a, b, w, y)` records where `y` estimates
    /// `φ_b − φ_a`; records with `a > b` are flipped to the canonical
    /// orientation. Repeated pairs are merged by weighted mean.
    pub fn from_records<I>(n: usize, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u32, f64)>,
    {
        let mut graph = MultiGraph::empty(n)?;
        let mut sums: BTreeMap<EdgeKey, f64> = BTreeMap::new();
        for (a, b, w, y) in records {
            let e = edge_index(a, b, n)?;
            if w == 0 {
                return Err(Error::InvalidInput(
                    "comparison weight must be positive".into(),
                ));
            }
            if !y.is_finite() {
                return Err(Error::InvalidInput("non-finite comparison value".into()));
            }
            let y = if a < b { y } else { -y };
            graph.add_weight(e, w)?;
            *sums.entry(e).or_insert(0.0) += f64::from(w) * y;
        }
        let y = sums
            .into_iter()
            .map(|(e, s)| (e, s / f64::from(graph.weight(e))))
            .collect();
        Self::new(graph, y)
    }

    pub fn graph(&self) -> &MultiGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn value(&self, e: EdgeKey) -> Option<f64> {
        self.y.get(&e).copied()
    }

    /// `(arc, w, y)` in lexicographic arc order.
    pub fn observations(&self) -> impl Iterator<Item = (EdgeKey, u32, f64)> + '_ {
        self.y.iter().map(|(&e, &y)| (e, self.graph.weight(e), y))
    }

    /// Folds one more comparison of `φ_j − φ_i` into the running mean on `e`.
    pub fn add_observation(&mut self, e: EdgeKey, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidInput("non-finite comparison value".into()));
        }
        let w = f64::from(self.graph.weight(e));
        self.graph.add_weight(e, 1)?;
        let mean = self.y.entry(e).or_insert(0.0);
        *mean = (*mean * w + value) / (w + 1.0);
        Ok(())
    }

    /// `Bᵗ W y`.
    pub fn divergence(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n()];
        for (e, w, y) in self.observations() {
            let flow = f64::from(w) * y;
            b[e.j] += flow;
            b[e.i] -= flow;
        }
        b
    }
}

/// Output of [`lsq_rank`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingEstimate {
    /// Mean-zero scores.
    pub phi: Vec<f64>,
    /// `‖Bφ̂ − y‖_w / ‖y‖_w` (zero when `y = 0`).
    pub relative_residual: f64,
    pub solver_iterations: usize,
}

pub const DEFAULT_LSQ_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Least-squares scores; `tol` bounds the relative normal-equation residual
/// `‖Bᵗ W y − Δ_w φ̂‖ / ‖Bᵗ W y‖`. At most `10 n` CG iterations are taken.
pub fn lsq_rank(data: &PairwiseData, tol: f64) -> Result<RankingEstimate> {
    let g = data.graph();
    let components = g.components();
    if components.len() > 1 {
        return Err(Error::NonIdentifiable { components });
    }
    let n = g.n();
    let inv_deg: Vec<f64> = g.degrees().iter().map(|&d| 1.0 / d as f64).collect();
    let precondition = |r: &[f64]| {
        let mut z: Vec<f64> = r.iter().zip(&inv_deg).map(|(a, b)| a * b).collect();
        center(&mut z);
        z
    };

    let b = data.divergence();
    let b_norm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; n];
    let mut iterations = 0;
    if b_norm > 0.0 {
        let mut r = b.clone();
        let mut z = precondition(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut q = vec![0.0; n];
        let cap = 10 * n;
        loop {
            if dot(&r, &r).sqrt() <= tol * b_norm {
                break;
            }
            if iterations >= cap {
                let residual = dot(&r, &r).sqrt() / b_norm;
                return Err(Error::LinearSolverFailure {
                    iterations,
                    residual,
                    best: x,
                });
            }
            iterations += 1;
            g.laplacian_apply_into(&p, &mut q);
            let alpha = rz / dot(&p, &q);
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
            center(&mut x);
            z = precondition(&r);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            p.iter_mut()
                .zip(&z)
                .for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
    }
    center(&mut x);

    let (res2, y2) = data.observations().fold((0.0, 0.0), |(rs, ys), (e, w, y)| {
        let w = f64::from(w);
        (rs + w * (x[e.j] - x[e.i] - y).powi(2), ys + w * y * y)
    });
    Ok(RankingEstimate {
        relative_residual: if y2 > 0.0 { (res2 / y2).sqrt() } else { 0.0 },
        phi: x,
        solver_iterations: iterations,
    })
}

/// `r_k = y_k − (Bφ̂)_k` on every observed arc.
pub fn residuals(data: &PairwiseData, est: &RankingEstimate) -> Vec<(EdgeKey, f64)> {
    data.observations()
        .map(|(e, _, y)| (e, y - (est.phi[e.j] - est.phi[e.i])))
        .collect()
}

/// Equal-width histogram of residuals on `[-R, R]`, `R = max |r_k|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualHistogram {
    /// `bins + 1` ascending bin edges; bins are half-open `[a, b)` except the last.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// `‖y − Bφ̂‖_w`.
    pub weighted_norm: f64,
    pub residuals: Vec<(EdgeKey, f64)>,
}

/// Residuals below `1e-9 · max(1, max|y|)` are treated as exact zeros so
/// that consistent data lands in the bin containing zero.
pub fn residual_histogram(
    data: &PairwiseData,
    est: &RankingEstimate,
    bins: usize,
) -> Result<ResidualHistogram> {
    if bins == 0 {
        return Err(Error::InvalidInput(
            "histogram needs at least one bin".into(),
        ));
    }
    let res = residuals(data, est);
    let y_scale = data
        .observations()
        .map(|(_, _, y)| y.abs())
        .fold(1.0, f64::max);
    let zero_tol = 1e-9 * y_scale;
    let clean = |r: f64| if r.abs() < zero_tol { 0.0 } else { r };
    let radius = res.iter().map(|&(_, r)| clean(r).abs()).fold(0.0, f64::max);
    let radius = if radius > 0.0 { radius } else { 1.0 };
    let width = 2.0 * radius / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|b| -radius + b as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &(_, r) in &res {
        let idx = (((clean(r) + radius) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let weighted_norm = data
        .observations()
        .zip(&res)
        .map(|((_, w, _), &(_, r))| f64::from(w) * r * r)
        .sum::<f64>()
        .sqrt();
    Ok(ResidualHistogram {
        edges,
        counts,
        weighted_norm,
        residuals: res,
    })
}

/// Fraction of pairs ordered strictly oppositely by the two score vectors;
/// a tie in either vector is not a disagreement.
pub fn kendall_tau(phi1: &[f64], phi2: &[f64]) -> Result<f64> {
    if phi1.len() != phi2.len() {
        return Err(Error::Dimension {
            expected: phi1.len(),
            got: phi2.len(),
        });
    }
    let n = phi1.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "Kendall distance needs at least 2 items".into(),
        ));
    }
    let mut disagree = 0usize;
    for i in 1..n {
        for j in 0..i {
            if (phi1[i] - phi1[j]) * (phi2[i] - phi2[j]) < 0.0 {
                disagree += 1;
            }
        }
    }
    Ok(disagree as f64 / (n * (n - 1) / 2) as f64)
}

/// `‖(φ̂ − mean φ̂) − (φ − mean φ)‖₂`.
pub fn l2_error(phi_hat: &[f64], phi_true: &[f64]) -> Result<f64> {
    if phi_hat.len() != phi_true.len() {
        return Err(Error::Dimension {
            expected: phi_true.len(),
            got: phi_hat.len(),
        });
    }
    let mut a = phi_hat.to_vec();
    let mut b = phi_true.to_vec();
    if !a.is_empty() {
        center(&mut a);
        center(&mut b);
    }
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Moore–Penrose pseudoinverse `Δ_w†` by dense eigendecomposition. Used as an
/// independent reference for the estimator and its covariance; small `n` only.
pub fn dense_laplacian_pinv(g: &MultiGraph) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(g.dense_laplacian());
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
    let cutoff = 1e-10 * scale;
    let n = g.n();
    let mut pinv = DMatrix::zeros(n, n);
    for (c, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let v = eig.eigenvectors.column(c);
            pinv += (v * v.transpose()) / lambda;
        }
    }
    pinv
}
