//! Laplacian spectra: the algebraic connectivity `λ₂` and its Fiedler vector,
//! dense spectra for small graphs, and normalized spectral clustering.

mod kmeans;
mod lanczos;

pub use kmeans::{kmeans, KMeansResult};

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MultiGraph;

/// Default residual tolerance `‖Δv − λv‖₂` for the iterative solver.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Largest `n` accepted by [`full_spectrum`].
pub const DEFAULT_DENSE_CAP: usize = 2000;
/// Two eigenvalues closer than this are treated as one multiple eigenvalue.
pub const MULTIPLICITY_GAP: f64 = 1e-6;

/// An eigenpair of the weighted Laplacian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPair {
    pub value: f64,
    /// Unit norm; the largest-magnitude entry is positive.
    pub vector: Vec<f64>,
    pub residual_norm: f64,
}

/// Knobs for the iterative eigensolver.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    /// Cap on operator applications; `None` means `50 n`.
    pub max_applies: Option<usize>,
    /// Initial directions, e.g. eigenvectors from a previous, nearby problem.
    pub warm_start: Vec<Vec<f64>>,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_applies: None,
            warm_start: Vec::new(),
            seed: 0x5eed,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

fn orient(mut v: Vec<f64>) -> Vec<f64> {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() + 1e-12 {
            pivot = i;
        }
    }
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    v
}

/// Smallest `want` eigenpairs of a symmetric PSD operator restricted to the
/// complement of the unit null vector `null`, with the null pair prepended.
fn smallest_deflated<A>(
    n: usize,
    apply: A,
    null: &[f64],
    count: usize,
    opts: &SolverOptions,
) -> Result<Vec<SpectralPair>>
where
    A: Fn(&[f64], &mut [f64]),
{
    if count == 0 || count > n {
        return Err(Error::InvalidInput(format!(
            "eigenpair count must lie in 1..={n}, got {count}"
        )));
    }
    let kernel = SpectralPair {
        value: 0.0,
        vector: orient(null.to_vec()),
        residual_norm: {
            let mut r = vec![0.0; n];
            apply(null, &mut r);
            r.iter().map(|x| x * x).sum::<f64>().sqrt()
        },
    };
    if count == 1 {
        return Ok(vec![kernel]);
    }
    let problem = lanczos::Problem {
        n,
        apply,
        deflate: null,
        want: count - 1,
        tol: opts.tol,
        max_applies: opts.max_applies.unwrap_or(50 * n).max(1),
        warm_start: &opts.warm_start,
        seed: opts.seed,
    };
    let outcome = lanczos::smallest(&problem);
    let to_pair = |p: lanczos::RitzPair| {
        // Projecting off the null vector again keeps ⟨v, null⟩ at rounding level.
        let c: f64 = p.vector.iter().zip(null).map(|(a, b)| a * b).sum();
        let v: Vec<f64> = p.vector.iter().zip(null).map(|(a, b)| a - c * b).collect();
        SpectralPair {
            value: p.value,
            vector: orient(normalized(v)),
            residual_norm: p.residual,
        }
    };
    let mut pairs = vec![kernel];
    pairs.extend(outcome.pairs.into_iter().map(to_pair));
    if !outcome.converged {
        let residual = pairs.iter().map(|p| p.residual_norm).fold(0.0, f64::max);
        return Err(Error::EigenSolverFailure {
            iterations: outcome.applies,
            residual,
            best: pairs,
        });
    }
    Ok(pairs)
}

/// The `count` smallest eigenpairs of `Δ_w`, ascending; the first is always
/// `(0, 1/√n)`.
pub fn smallest_eigs_with(
    g: &MultiGraph,
    count: usize,
    opts: &SolverOptions,
) -> Result<Vec<SpectralPair>> {
    let n = g.n();
    let null = vec![1.0 / (n as f64).sqrt(); n];
    smallest_deflated(n, |x, y| g.laplacian_apply_into(x, y), &null, count, opts)
}

pub fn smallest_eigs(g: &MultiGraph, count: usize, tol: f64) -> Result<Vec<SpectralPair>> {
    smallest_eigs_with(g, count, &SolverOptions::with_tol(tol))
}

/// `(λ₂, v₂)`: the minimum of the Rayleigh quotient over unit vectors
/// orthogonal to the constant vector. Returns `λ₂ ≈ 0` with a null-space
/// certificate when `g` is disconnected.
pub fn fiedler(g: &MultiGraph, tol: f64) -> Result<SpectralPair> {
    fiedler_with(g, &SolverOptions::with_tol(tol))
}

pub fn fiedler_with(g: &MultiGraph, opts: &SolverOptions) -> Result<SpectralPair> {
    let mut pairs = smallest_eigs_with(g, 2, opts)?;
    Ok(pairs.swap_remove(1))
}

/// Ascending eigenvalues of `Δ_w` by dense symmetric eigendecomposition.
pub fn full_spectrum(g: &MultiGraph) -> Result<Vec<f64>> {
    full_spectrum_capped(g, DEFAULT_DENSE_CAP)
}

pub fn full_spectrum_capped(g: &MultiGraph, cap: usize) -> Result<Vec<f64>> {
    if g.n() > cap {
        return Err(Error::TooLarge {
            n: g.n(),
            limit: cap,
            what: "dense eigendecomposition; use smallest_eigs instead",
        });
    }
    let mut values: Vec<f64> = SymmetricEigen::new(g.dense_laplacian())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Output of [`spectral_cluster`].
#[derive(Debug, Clone, Serialize)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    /// Mean over clusters of the summed squared point-to-centroid distances.
    pub within_cluster_sum: f64,
    /// Row-normalized spectral coordinates, one row per vertex.
    pub embedding: Vec<Vec<f64>>,
    /// Eigenvalues of the normalized Laplacian used for the embedding.
    pub eigenvalues: Vec<f64>,
    /// Set when the second normalized eigenvalue is numerically zero, i.e.
    /// the graph is disconnected.
    pub disconnected: bool,
}

/// Normalized spectral clustering into `k` groups.
///
/// Vertices are embedded with the first `k` eigenvectors of
/// `D^{-1/2} Δ_w D^{-1/2}`, rows rescaled to unit length, then grouped by
/// seeded k-means++ / Lloyd.
pub fn spectral_cluster(g: &MultiGraph, k: usize, seed: u64) -> Result<ClusterResult> {
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "cluster count must lie in 1..={n}, got {k}"
        )));
    }
    let degrees = g.degrees();
    if let Some(v) = degrees.iter().position(|&d| d == 0) {
        return Err(Error::ZeroDegree(v));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
    let null = normalized(degrees.iter().map(|&d| (d as f64).sqrt()).collect());
    let apply = |x: &[f64], y: &mut [f64]| {
        let scaled: Vec<f64> = x.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect();
        g.laplacian_apply_into(&scaled, y);
        y.iter_mut().zip(&inv_sqrt).for_each(|(a, b)| *a *= b);
    };
    // The normalized spectrum lives in [0, 2]; tighten the tolerance accordingly.
    let opts = SolverOptions {
        tol: 1e-10,
        seed,
        ..SolverOptions::default()
    };
    let count = k.max(2).min(n);
    let pairs = smallest_deflated(n, apply, &null, count, &opts)?;
    let disconnected = pairs[1].value < 1e-9;
    if disconnected {
        log::warn!(
            "graph is disconnected (normalized λ₂ ≈ {:.2e}); clustering anyway",
            pairs[1].value
        );
    }

    let embedding: Vec<Vec<f64>> = (0..n)
        .map(|i| normalized(pairs.iter().take(k).map(|p| p.vector[i]).collect()))
        .collect();
    let km = kmeans(&embedding, k, seed);
    Ok(ClusterResult {
        assignments: km.assignments,
        within_cluster_sum: km.mean_within_sum,
        embedding,
        eigenvalues: pairs.iter().take(k).map(|p| p.value).collect(),
        disconnected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;
    use crate::graph::{edge_from_index, pair_count};
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fiedler_examples() {
        let k5 = fiedler(&complete(5).unwrap(), DEFAULT_TOL).unwrap();
        assert!(close(k5.value, 5.0, 1e-10));
        let p4 = fiedler(&path(4).unwrap(), DEFAULT_TOL).unwrap();
        assert!(close(p4.value, 2.0 - 2.0 * (PI / 4.0).cos(), 1e-10));
        assert!(close(p4.value, 0.585_786_4, 1e-7));
        let two = MultiGraph::from_edges(4, [(0, 1, 1), (2, 3, 1)]).unwrap();
        let d = fiedler(&two, DEFAULT_TOL).unwrap();
        assert!(d.value.abs() < 1e-10);
        assert!(two.quadratic_form(&d.vector).unwrap() < 1e-10);
        let k23 = fiedler(&complete_bipartite(2, 3).unwrap(), DEFAULT_TOL).unwrap();
        assert!(close(k23.value, 2.0, 1e-10));
    }

    #[test]
    fn fiedler_pair_invariants() {
        let g = bridged_cliques(6, 2).unwrap();
        let p = fiedler(&g, DEFAULT_TOL).unwrap();
        let nrm: f64 = p.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mean: f64 = p.vector.iter().sum();
        assert!((nrm - 1.0).abs() < 1e-10);
        assert!(mean.abs() < 1e-10);
        assert!(p.residual_norm <= DEFAULT_TOL);
        let r = g.laplacian_apply(&p.vector).unwrap();
        let res: f64 = r
            .iter()
            .zip(&p.vector)
            .map(|(a, b)| (a - p.value * b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(res <= 1e-8);
    }

    #[test]
    fn full_spectrum_examples() {
        let check = |got: Vec<f64>, want: &[f64]| {
            assert_eq!(got.len(), want.len());
            for (a, b) in got.iter().zip(want) {
                assert!(close(*a, *b, 1e-10), "{got:?} vs {want:?}");
            }
        };
        check(
            full_spectrum(&complete(4).unwrap()).unwrap(),
            &[0.0, 4.0, 4.0, 4.0],
        );
        check(
            full_spectrum(&complete_bipartite(2, 3).unwrap()).unwrap(),
            &[0.0, 2.0, 2.0, 3.0, 5.0],
        );
        check(
            full_spectrum(&cycle(4).unwrap()).unwrap(),
            &[0.0, 2.0, 2.0, 4.0],
        );
        assert!(matches!(
            full_spectrum_capped(&path(10).unwrap(), 5),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn smallest_eigs_examples() {
        let k4 = smallest_eigs(&complete(4).unwrap(), 2, DEFAULT_TOL).unwrap();
        assert!(close(k4[0].value, 0.0, 1e-12) && close(k4[1].value, 4.0, 1e-10));

        let one = smallest_eigs(&path(7).unwrap(), 1, DEFAULT_TOL).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].value, 0.0);
        assert!(one[0]
            .vector
            .iter()
            .all(|&x| close(x, 1.0 / 7f64.sqrt(), 1e-15)));

        // P_3 Laplacian [[1,-1,0],[-1,2,-1],[0,-1,1]]: characteristic polynomial
        // -λ(λ-1)(λ-3) by cofactor expansion.
        let p3 = smallest_eigs(&path(3).unwrap(), 3, DEFAULT_TOL).unwrap();
        let values: Vec<f64> = p3.iter().map(|p| p.value).collect();
        for (a, b) in values.iter().zip([0.0, 1.0, 3.0]) {
            assert!(close(*a, b, 1e-10));
        }
        for a in 0..3 {
            for b in a + 1..3 {
                let d: f64 = p3[a]
                    .vector
                    .iter()
                    .zip(&p3[b].vector)
                    .map(|(x, y)| x * y)
                    .sum();
                assert!(d.abs() < 1e-10);
            }
        }
        assert!(smallest_eigs(&path(3).unwrap(), 4, DEFAULT_TOL).is_err());
        assert!(smallest_eigs(&path(3).unwrap(), 0, DEFAULT_TOL).is_err());
    }

    #[test]
    fn degenerate_spectrum_is_resolved() {
        // K_n has a single nonzero eigenvalue of multiplicity n-1: every
        // Krylov space is one-dimensional.
        for n in [3, 10, 60] {
            let pairs = smallest_eigs(&complete(n).unwrap(), 4.min(n), DEFAULT_TOL).unwrap();
            for p in &pairs[1..] {
                assert!(close(p.value, n as f64, 1e-9));
            }
        }
    }

    #[test]
    fn solver_failure_carries_best_iterate() {
        let g = path(200).unwrap();
        let opts = SolverOptions {
            max_applies: Some(5),
            ..SolverOptions::default()
        };
        match fiedler_with(&g, &opts) {
            Err(Error::EigenSolverFailure { best, .. }) => assert_eq!(best.len(), 2),
            other => panic!("expected solver failure, got {other:?}"),
        }
    }

    #[test]
    fn iterative_agrees_with_dense_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..60 {
            let n = rng.random_range(2..=(if trial < 50 { 30 } else { 200 }));
            let p = rng.random_range(0.05..0.9);
            let g = MultiGraph::from_edges(
                n,
                (0..pair_count(n)).filter_map(|k| {
                    let e = edge_from_index(k, n).unwrap();
                    (rng.random::<f64>() < p).then(|| (e.i, e.j, rng.random_range(1..4)))
                }),
            )
            .unwrap();
            let dense = full_spectrum(&g).unwrap();
            let it = fiedler(&g, DEFAULT_TOL).unwrap();
            assert!(
                close(it.value, dense[1], 1e-8),
                "n={n}: {} vs {}",
                it.value,
                dense[1]
            );
        }
    }

    #[test]
    fn warm_start_is_accepted() {
        let g = path(80).unwrap();
        let cold = fiedler(&g, DEFAULT_TOL).unwrap();
        let g2 = g.with_weight_added(g.key(0, 79).unwrap(), 1).unwrap();
        let opts = SolverOptions {
            warm_start: vec![cold.vector.clone()],
            ..SolverOptions::default()
        };
        let warm = fiedler_with(&g2, &opts).unwrap();
        let dense = full_spectrum(&g2).unwrap();
        assert!(close(warm.value, dense[1], 1e-8));
    }

    fn ncut(g: &MultiGraph, mask: u32) -> f64 {
        let n = g.n();
        let u: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        let d = g.degrees();
        let vol_u: u64 = u.iter().map(|&v| d[v]).sum();
        let vol: u64 = d.iter().sum();
        let cut = g.cut_weight(&u).unwrap() as f64;
        cut / vol_u as f64 + cut / (vol - vol_u) as f64
    }

    #[test]
    fn two_cliques_split_along_the_bridge() {
        let g = bridged_cliques(5, 1).unwrap();
        // Exhaustive normalized-cut oracle over all bipartitions.
        let best = (1u32..(1 << 9))
            .min_by(|&a, &b| ncut(&g, a).total_cmp(&ncut(&g, b)))
            .unwrap();
        let oracle: Vec<bool> = (0..10).map(|v| best >> v & 1 == 1).collect();
        assert_eq!(oracle, [[true; 5], [false; 5]].concat());

        for seed in 0..5 {
            let c = spectral_cluster(&g, 2, seed).unwrap();
            let a = &c.assignments;
            assert!(a[..5].iter().all(|&x| x == a[0]));
            assert!(a[5..].iter().all(|&x| x == a[5]));
            assert_ne!(a[0], a[5]);
            assert!(!c.disconnected);
            assert!(c.within_cluster_sum >= 0.0);
            assert_eq!(c.embedding.len(), 10);
        }
    }

    #[test]
    fn clustering_edge_cases() {
        let g = cycle(6).unwrap();
        let c = spectral_cluster(&g, 1, 3).unwrap();
        assert!(c.assignments.iter().all(|&a| a == 0));

        let iso = MultiGraph::from_edges(4, [(0, 1, 1), (1, 2, 1)]).unwrap();
        assert!(matches!(
            spectral_cluster(&iso, 2, 0),
            Err(Error::ZeroDegree(3))
        ));

        let split = MultiGraph::from_edges(4, [(0, 1, 1), (2, 3, 1)]).unwrap();
        let c = spectral_cluster(&split, 2, 0).unwrap();
        assert!(c.disconnected);
        assert_eq!(c.assignments[0], c.assignments[1]);
        assert_ne!(c.assignments[0], c.assignments[2]);

        let k6 = complete(6).unwrap();
        let a = spectral_cluster(&k6, 2, 9).unwrap();
        let b = spectral_cluster(&k6, 2, 9).unwrap();
        assert_eq!(a.within_cluster_sum, b.within_cluster_sum);
        assert_eq!(a.assignments, b.assignments);
    }
}
