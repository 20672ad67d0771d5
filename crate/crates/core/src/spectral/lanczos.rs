//! Restarted Lanczos for the smallest eigenpairs of a symmetric operator on
//! the orthogonal complement of a known null vector.
//!
//! The basis is kept fully reorthogonalized (classical Gram–Schmidt, two
//! passes) and every candidate is projected off the deflation vector, so the
//! Krylov space never re-acquires the null direction. Rayleigh–Ritz is done on
//! the explicit projected matrix `Vᵀ A V`, which lets a restart keep any
//! number of Ritz vectors and continue from the residual of the first
//! unconverged one (thick restart). A breakdown, such as an operator with a
//! highly degenerate spectrum like `K_n`, is handled by injecting a fresh
//! pseudo-random direction.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub(crate) struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

pub(crate) struct Outcome {
    pub pairs: Vec<RitzPair>,
    pub applies: usize,
    pub converged: bool,
}

pub(crate) struct Problem<'a, A> {
    pub n: usize,
    pub apply: A,
    /// Unit null vector of the operator to deflate.
    pub deflate: &'a [f64],
    pub want: usize,
    pub tol: f64,
    pub max_applies: usize,
    pub warm_start: &'a [Vec<f64>],
    pub seed: u64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn scale(x: &mut [f64], s: f64) {
    x.iter_mut().for_each(|v| *v *= s);
}

struct Basis<'a, A> {
    problem: &'a Problem<'a, A>,
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
    applies: usize,
    rng: ChaCha8Rng,
}

impl<'a, A> Basis<'a, A>
where
    A: Fn(&[f64], &mut [f64]),
{
    fn capacity(&self) -> usize {
        self.problem.n - 1
    }

    fn apply(&mut self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.problem.n];
        (self.problem.apply)(x, &mut out);
        self.applies += 1;
        out
    }

    /// Projects `x` off the deflation vector and the current basis; returns
    /// the remaining norm relative to the input norm.
    fn orthogonalize(&self, x: &mut [f64]) -> f64 {
        let before = norm(x);
        if before == 0.0 {
            return 0.0;
        }
        for _ in 0..2 {
            let c = dot(self.problem.deflate, x);
            axpy(-c, self.problem.deflate, x);
            for q in &self.v {
                let c = dot(q, x);
                axpy(-c, q, x);
            }
        }
        norm(x) / before
    }

    /// Tries to append `x`; returns false if it is (numerically) dependent.
    fn push(&mut self, mut x: Vec<f64>) -> bool {
        if self.v.len() >= self.capacity() {
            return false;
        }
        let rel = self.orthogonalize(&mut x);
        if rel < 1e-8 {
            return false;
        }
        let nx = norm(&x);
        scale(&mut x, 1.0 / nx);
        let ax = self.apply(&x);
        self.v.push(x);
        self.av.push(ax);
        true
    }

    fn random_vector(&mut self) -> Vec<f64> {
        (0..self.problem.n)
            .map(|_| self.rng.random_range(-1.0..1.0))
            .collect()
    }

    /// Appends a random direction, retrying a few times on bad luck.
    fn push_random(&mut self) -> bool {
        for _ in 0..8 {
            if self.v.len() >= self.capacity() {
                return false;
            }
            let x = self.random_vector();
            if self.push(x) {
                return true;
            }
        }
        false
    }

    fn rayleigh_ritz(&self) -> Vec<RitzPair> {
        let k = self.v.len();
        let n = self.problem.n;
        let mut h = DMatrix::<f64>::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let x = 0.5 * (dot(&self.v[a], &self.av[b]) + dot(&self.v[b], &self.av[a]));
                h[(a, b)] = x;
                h[(b, a)] = x;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order
            .into_iter()
            .map(|c| {
                let theta = eig.eigenvalues[c];
                let mut y = vec![0.0; n];
                let mut ay = vec![0.0; n];
                for r in 0..k {
                    let s = eig.eigenvectors[(r, c)];
                    axpy(s, &self.v[r], &mut y);
                    axpy(s, &self.av[r], &mut ay);
                }
                let mut res = ay;
                axpy(-theta, &y, &mut res);
                RitzPair {
                    value: theta,
                    residual: norm(&res),
                    vector: y,
                }
            })
            .collect()
    }
}

/// Residual of `pair` against the operator, `A y − θ y`.
fn residual_vector<A: Fn(&[f64], &mut [f64])>(apply: &A, pair: &RitzPair) -> Vec<f64> {
    let mut r = vec![0.0; pair.vector.len()];
    apply(&pair.vector, &mut r);
    axpy(-pair.value, &pair.vector, &mut r);
    r
}

pub(crate) fn smallest<A>(problem: &Problem<'_, A>) -> Outcome
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = problem.n;
    let cap = n - 1;
    let want = problem.want.min(cap);
    let kmax = cap.min((2 * want + 20).max(40));
    let keep = (want + 2)
        .max(kmax / 2)
        .min(kmax.saturating_sub(1))
        .max(want);

    let mut basis = Basis {
        problem,
        v: Vec::with_capacity(kmax),
        av: Vec::with_capacity(kmax),
        applies: 0,
        rng: ChaCha8Rng::seed_from_u64(problem.seed),
    };

    for w in problem.warm_start {
        if w.len() == n && basis.v.len() < want.max(1) {
            basis.push(w.clone());
        }
    }
    while basis.v.len() < want.max(2).min(cap) {
        if !basis.push_random() {
            break;
        }
    }

    let mut best: Vec<RitzPair>;
    loop {
        // Lanczos expansion from the newest direction.
        while basis.v.len() < kmax {
            if basis.applies >= problem.max_applies {
                break;
            }
            let next = basis.av.last().cloned();
            let grew = match next {
                Some(x) => basis.push(x),
                None => false,
            };
            if !grew && !basis.push_random() {
                break;
            }
        }

        let ritz = basis.rayleigh_ritz();
        let full = basis.v.len() >= cap;
        let wanted = &ritz[..want.min(ritz.len())];
        let worst = wanted.iter().map(|p| p.residual).fold(0.0, f64::max);
        best = ritz[..want.min(ritz.len())].to_vec();
        if wanted.len() == want && worst <= problem.tol {
            return Outcome {
                pairs: best,
                applies: basis.applies,
                converged: true,
            };
        }
        if basis.applies >= problem.max_applies {
            break;
        }

        // Thick restart: keep the lowest Ritz vectors, recompute their images
        // explicitly, and continue from the first unconverged residual.
        let restart_from = wanted
            .iter()
            .find(|p| p.residual > problem.tol)
            .map(|p| residual_vector(&problem.apply, p));
        let kept: Vec<Vec<f64>> = ritz
            .iter()
            .take(if full { want } else { keep })
            .map(|p| p.vector.clone())
            .collect();
        basis.v.clear();
        basis.av.clear();
        for y in kept {
            basis.push(y);
        }
        if let Some(r) = restart_from {
            if !basis.push(r) {
                basis.push_random();
            }
        }
        if basis.applies >= problem.max_applies {
            break;
        }
    }

    // Report the best available estimate with explicit residuals.
    for p in &mut best {
        p.residual = norm(&residual_vector(&problem.apply, p));
    }
    Outcome {
        pairs: best,
        applies: basis.applies,
        converged: false,
    }
}
