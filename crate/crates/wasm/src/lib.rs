//! JSON-in, JSON-out entry points for the static demo page in `www/`.

use rankdesign::bounds::{degree_bound, er_bound};
use rankdesign::design::{self, Forbidden};
use rankdesign::experiments::er_ensemble;
use rankdesign::ingest::{parse_edge_list, LabeledPairwiseData};
use rankdesign::spectral::{fiedler, full_spectrum, spectral_cluster, DEFAULT_TOL};
use serde::Serialize;
use thiserror::Error;
use wasm_bindgen::prelude::*;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error(transparent)]
    Core(#[from] rankdesign::Error),
    #[error("unknown strategy {0:?}; expected greedy or random")]
    Strategy(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

type Result<T> = std::result::Result<T, DemoError>;

#[derive(Serialize)]
struct Edge<'a> {
    i: &'a str,
    j: &'a str,
    w: u32,
}

fn edges(d: &LabeledPairwiseData) -> Vec<Edge<'_>> {
    d.data
        .graph()
        .edges()
        .map(|(e, w)| Edge {
            i: &d.labels[e.i],
            j: &d.labels[e.j],
            w,
        })
        .collect()
}

#[derive(Serialize)]
struct AugmentView<'a> {
    labels: &'a [String],
    edges: Vec<Edge<'a>>,
    added: Vec<Edge<'a>>,
    lambda2: Vec<f64>,
    degree_bound_after: f64,
    before: design::CriteriaReport,
    after: design::CriteriaReport,
}

/// Spends `xi` comparisons on the graph in `edges_tsv`.
pub fn augment_json(edges_tsv: &str, xi: usize, strategy: &str, seed: u64) -> Result<String> {
    let d = parse_edge_list(edges_tsv, "input")?;
    let g = d.data.graph();
    let r = match strategy {
        "greedy" => design::greedy_augment(g, xi, &Forbidden::none(), true)?,
        "random" => design::random_augment(g, xi, &Forbidden::none(), seed)?,
        other => return Err(DemoError::Strategy(other.to_owned())),
    };
    let view = AugmentView {
        labels: &d.labels,
        edges: edges(&d),
        added: r
            .added
            .iter()
            .map(|&(e, w)| Edge {
                i: &d.labels[e.i],
                j: &d.labels[e.j],
                w,
            })
            .collect(),
        lambda2: r.lambda2_trajectory.clone(),
        degree_bound_after: degree_bound(&r.augmented).tight,
        before: r.criteria_before,
        after: r.criteria_after,
    };
    Ok(serde_json::to_string(&view)?)
}

#[derive(Serialize)]
struct SpectrumView<'a> {
    labels: &'a [String],
    edges: Vec<Edge<'a>>,
    spectrum: Vec<f64>,
    lambda2: f64,
    fiedler: Vec<f64>,
    clusters: Vec<usize>,
}

/// Spectrum, Fiedler vector and a `k`-way spectral clustering.
pub fn spectrum_json(edges_tsv: &str, k: usize, seed: u64) -> Result<String> {
    let d = parse_edge_list(edges_tsv, "input")?;
    let g = d.data.graph();
    let spectrum = full_spectrum(g)?;
    let pair = fiedler(g, DEFAULT_TOL)?;
    let clusters = spectral_cluster(g, k, seed)?.assignments;
    let view = SpectrumView {
        labels: &d.labels,
        edges: edges(&d),
        lambda2: spectrum[1],
        spectrum,
        fiedler: pair.vector,
        clusters,
    };
    Ok(serde_json::to_string(&view)?)
}

#[derive(Serialize)]
struct EnsembleView {
    m: Vec<usize>,
    lambda2: Vec<f64>,
    mean_lambda2: f64,
    bound: Option<f64>,
}

/// `trials` samples of `G(n, p)` with the concentration bound at `eps`
/// (absent for odd `n`).
pub fn er_json(n: usize, p: f64, trials: usize, seed: u64, eps: f64) -> Result<String> {
    let ens = er_ensemble(n, p, trials, seed)?;
    let view = EnsembleView {
        m: ens.samples.iter().map(|s| s.m).collect(),
        lambda2: ens.samples.iter().map(|s| s.lambda2).collect(),
        mean_lambda2: ens.mean_lambda2,
        bound: er_bound(n, p, eps).ok(),
    };
    Ok(serde_json::to_string(&view)?)
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn augment(
    edges_tsv: &str,
    xi: usize,
    strategy: &str,
    seed: u64,
) -> std::result::Result<String, JsError> {
    js(augment_json(edges_tsv, xi, strategy, seed))
}

#[wasm_bindgen]
pub fn spectrum(edges_tsv: &str, k: usize, seed: u64) -> std::result::Result<String, JsError> {
    js(spectrum_json(edges_tsv, k, seed))
}

#[wasm_bindgen]
pub fn er_scatter(
    n: usize,
    p: f64,
    trials: usize,
    seed: u64,
    eps: f64,
) -> std::result::Result<String, JsError> {
    js(er_json(n, p, trials, seed, eps))
}
