use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rankdesign::bounds::{self, BoundKind, BoundReport};
use rankdesign::design::{self, CriteriaReport, Forbidden, Strategy};
use rankdesign::experiments::{self, SyntheticModel};
use rankdesign::graph::{families, EdgeKey, MultiGraph};
use rankdesign::ingest::{self, format_decimal, LabeledPairwiseData, Provenance};
use rankdesign::ranking::{self, PairwiseData};
use rankdesign::spectral;
use serde::Serialize;

use crate::output::Output;
use crate::CliError;

fn load(path: &Path) -> Result<LabeledPairwiseData, CliError> {
    ingest::read_edge_list(path).map_err(|e| match e {
        rankdesign::Error::Io(source) => CliError::io(path, source),
        other => other.into(),
    })
}

/// Renders vertex ids in domain errors with their labels.
fn labeled(err: rankdesign::Error, labels: &[String]) -> CliError {
    match err {
        rankdesign::Error::NonIdentifiable { components } => {
            let parts: Vec<String> = components
                .iter()
                .map(|c| {
                    let names: Vec<&str> = c.iter().map(|&v| labels[v].as_str()).collect();
                    format!("{{{}}}", names.join(", "))
                })
                .collect();
            CliError::Domain(format!(
                "scores are not identifiable: {} connected components: {}",
                components.len(),
                parts.join(" ")
            ))
        }
        rankdesign::Error::ZeroDegree(v) => {
            CliError::Domain(format!("vertex {:?} has no comparisons", labels[v]))
        }
        other => other.into(),
    }
}

fn read_label_pairs(path: &Path, data: &LabeledPairwiseData) -> Result<Forbidden, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Forbidden::none();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [a, b] = parts[..] else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected two tab-separated labels",
                path.display(),
                idx + 1
            )));
        };
        let find = |l: &str| {
            data.index_of(l).ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{}: unknown label {l:?}",
                    path.display(),
                    idx + 1
                ))
            })
        };
        out.insert(data.data.graph().key(find(a)?, find(b)?)?);
    }
    Ok(out)
}

fn read_labels(path: &Path, data: &LabeledPairwiseData) -> Result<Vec<usize>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            data.index_of(l)
                .ok_or_else(|| CliError::Usage(format!("{}: unknown label {l:?}", path.display())))
        })
        .collect()
}

#[derive(Args, Serialize)]
pub struct RankArgs {
    /// Edge list (TSV: label_i, label_j, w, y).
    pub edges: PathBuf,
    /// Relative residual tolerance of the solver.
    #[arg(long, default_value_t = ranking::DEFAULT_LSQ_TOL)]
    pub tol: f64,
    /// Residual histogram bins.
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
}

pub fn rank(args: &RankArgs, dir: &Path) -> Result<(), CliError> {
    let data = load(&args.edges)?;
    let est = ranking::lsq_rank(&data.data, args.tol).map_err(|e| labeled(e, &data.labels))?;
    let hist = ranking::residual_histogram(&data.data, &est, args.bins)?;

    let mut order: Vec<usize> = (0..data.labels.len()).collect();
    order.sort_by(|&a, &b| {
        est.phi[b]
            .total_cmp(&est.phi[a])
            .then(data.labels[a].cmp(&data.labels[b]))
    });
    let mut scores = String::from("label,score\n");
    for v in order {
        scores.push_str(&format!(
            "{},{}\n",
            data.labels[v],
            format_decimal(est.phi[v])
        ));
    }
    let mut bins = String::from("bin_low,bin_high,count\n");
    for (b, c) in hist.counts.iter().enumerate() {
        bins.push_str(&format!(
            "{},{},{c}\n",
            format_decimal(hist.edges[b]),
            format_decimal(hist.edges[b + 1])
        ));
    }

    let mut out = Output::new(dir, "rank", args, None)?;
    out.text(
        "ranking.csv",
        &[
            ("relative_residual", format_decimal(est.relative_residual)),
            ("solver_iterations", est.solver_iterations.to_string()),
        ],
        &scores,
    )?;
    out.text(
        "residuals.csv",
        &[("weighted_residual_norm", format_decimal(hist.weighted_norm))],
        &bins,
    )?;
    out.finish();
    Ok(())
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyArg {
    Greedy,
    Random,
}

#[derive(Args, Serialize)]
pub struct AugmentArgs {
    pub edges: PathBuf,
    /// Number of unit increments to add.
    #[arg(long)]
    pub xi: usize,
    #[arg(long, value_enum, default_value = "greedy")]
    pub strategy: StrategyArg,
    /// Pairs that may not be incremented (TSV: label_i, label_j).
    #[arg(long)]
    pub forbid: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Serialize)]
struct LabeledArc {
    i: String,
    j: String,
    multiplicity: u32,
}

#[derive(Serialize)]
struct LabeledDesign<'a> {
    strategy: Strategy,
    added: Vec<LabeledArc>,
    sequence: Vec<[&'a str; 2]>,
    lambda2_trajectory: &'a [f64],
    criteria_before: &'a CriteriaReport,
    criteria_after: &'a CriteriaReport,
}

/// Augmented data: existing arcs keep their `y`; new arcs get `y = 0` as a
/// placeholder until real comparisons arrive.
fn augmented_data(data: &PairwiseData, graph: MultiGraph) -> Result<PairwiseData, CliError> {
    let y: BTreeMap<EdgeKey, f64> = graph
        .edges()
        .map(|(e, _)| (e, data.value(e).unwrap_or(0.0)))
        .collect();
    Ok(PairwiseData::new(graph, y)?)
}

pub fn augment(args: &AugmentArgs, dir: &Path) -> Result<(), CliError> {
    let data = load(&args.edges)?;
    let forbidden = match &args.forbid {
        Some(p) => read_label_pairs(p, &data)?,
        None => Forbidden::none(),
    };
    let g = data.data.graph();
    let result = match args.strategy {
        StrategyArg::Greedy => design::greedy_augment(g, args.xi, &forbidden, true),
        StrategyArg::Random => design::random_augment(g, args.xi, &forbidden, args.seed),
    }
    .map_err(|e| labeled(e, &data.labels))?;

    let name = |v: usize| data.labels[v].as_str();
    let report = LabeledDesign {
        strategy: result.strategy,
        added: result
            .added
            .iter()
            .map(|(e, c)| LabeledArc {
                i: name(e.i).to_owned(),
                j: name(e.j).to_owned(),
                multiplicity: *c,
            })
            .collect(),
        sequence: result
            .sequence
            .iter()
            .map(|e| [name(e.i), name(e.j)])
            .collect(),
        lambda2_trajectory: &result.lambda2_trajectory,
        criteria_before: &result.criteria_before,
        criteria_after: &result.criteria_after,
    };
    let mut trajectory = String::from("xi,lambda2\n");
    for (xi, l) in result.lambda2_trajectory.iter().enumerate() {
        trajectory.push_str(&format!("{xi},{}\n", format_decimal(*l)));
    }
    let augmented = LabeledPairwiseData::new(
        augmented_data(&data.data, result.augmented.clone())?,
        data.labels.clone(),
        data.provenance.clone(),
    )?;

    let seed = matches!(args.strategy, StrategyArg::Random).then_some(args.seed);
    let mut out = Output::new(dir, "augment", args, seed)?;
    out.json("design.json", &report)?;
    out.text("lambda2.csv", &[], &trajectory)?;
    out.text(
        "augmented.tsv",
        &[(
            "note",
            "arcs added by the design carry y = 0 until observed".to_owned(),
        )],
        &ingest::edge_list_string(&augmented)?,
    )?;
    out.finish();
    Ok(())
}

#[derive(Args, Serialize)]
pub struct CriteriaArgs {
    pub edges: PathBuf,
}

pub fn criteria(args: &CriteriaArgs, dir: &Path) -> Result<(), CliError> {
    let data = load(&args.edges)?;
    let report = design::criteria(data.data.graph())?;
    let mut out = Output::new(dir, "criteria", args, None)?;
    out.json("criteria.json", &report)?;
    out.finish();
    Ok(())
}

#[derive(Args, Serialize)]
pub struct BoundsArgs {
    pub edges: Option<PathBuf>,
    /// File of labels (one per line) forming the cut side U.
    #[arg(long)]
    pub subset: Option<PathBuf>,
    /// Erdős–Rényi bound for G(N, P) at failure probability EPS.
    #[arg(long, num_args = 3, value_names = ["N", "P", "EPS"])]
    pub er_bound: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct LabeledBound {
    name: BoundKind,
    value: f64,
    certificate: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn label_bound(b: BoundReport, labels: &[String]) -> LabeledBound {
    LabeledBound {
        name: b.name,
        value: b.value,
        certificate: b
            .certificate
            .map(|c| c.into_iter().map(|v| labels[v].clone()).collect()),
        note: b.note,
    }
}

#[derive(Serialize, Default)]
struct BoundsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    degree: Option<bounds::DegreeBound>,
    bounds: Vec<LabeledBound>,
}

pub fn bounds(args: &BoundsArgs, dir: &Path) -> Result<(), CliError> {
    if args.edges.is_none() && args.er_bound.is_none() {
        return Err(CliError::Usage(
            "give an edge list, --er-bound, or both".into(),
        ));
    }
    let mut report = BoundsReport::default();
    if let Some(path) = &args.edges {
        let data = load(path)?;
        let g = data.data.graph();
        report.lambda2 = Some(experiments::lambda2(g)?);
        let degree = bounds::degree_bound(g);
        report.degree = Some(degree);
        report
            .bounds
            .push(label_bound(degree.report(), &data.labels));
        if let Some(subset) = &args.subset {
            let u = read_labels(subset, &data)?;
            report
                .bounds
                .push(label_bound(bounds::cut_bound(g, &u)?, &data.labels));
        }
        if g.n() <= bounds::EXHAUSTIVE_CUT_LIMIT {
            let best = bounds::best_cut_bound_exhaustive(g)?;
            report.bounds.push(label_bound(best, &data.labels));
        }
        report.bounds.push(label_bound(
            bounds::edge_connectivity_bound(g),
            &data.labels,
        ));
    }
    if let Some(v) = &args.er_bound {
        let n = v[0];
        if n.fract() != 0.0 || n < 0.0 {
            return Err(CliError::Usage(format!(
                "--er-bound N must be a whole number, got {n}"
            )));
        }
        report.bounds.push(LabeledBound {
            name: BoundKind::ErProbabilistic,
            value: bounds::er_bound(n as usize, v[1], v[2])?,
            certificate: None,
            note: Some(format!("holds with probability at least {}", 1.0 - v[2])),
        });
    }
    let mut out = Output::new(dir, "bounds", args, None)?;
    out.json("bounds.json", &report)?;
    out.finish();
    Ok(())
}

#[derive(Args, Serialize)]
pub struct ClusterArgs {
    pub edges: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn cluster(args: &ClusterArgs, dir: &Path) -> Result<(), CliError> {
    let data = load(&args.edges)?;
    let g = data.data.graph();
    let result =
        spectral::spectral_cluster(g, args.k, args.seed).map_err(|e| labeled(e, &data.labels))?;

    let mut csv = String::from("label,cluster");
    for c in 0..args.k {
        csv.push_str(&format!(",x{c}"));
    }
    csv.push('\n');
    for (v, label) in data.labels.iter().enumerate() {
        csv.push_str(&format!("{label},{}", result.assignments[v]));
        for x in &result.embedding[v] {
            csv.push_str(&format!(",{}", format_decimal(*x)));
        }
        csv.push('\n');
    }

    // set19 has 9 colors; larger k cycles through them
    let mut dot = String::from("graph clusters {\n  node [colorscheme=set19, style=filled];\n");
    for (v, label) in data.labels.iter().enumerate() {
        let c = result.assignments[v];
        dot.push_str(&format!(
            "  {} [cluster={c}, fillcolor={}];\n",
            dot_id(label),
            c % 9 + 1
        ));
    }
    for (e, w) in g.edges() {
        dot.push_str(&format!(
            "  {} -- {} [weight={w}];\n",
            dot_id(&data.labels[e.i]),
            dot_id(&data.labels[e.j])
        ));
    }
    dot.push_str("}\n");

    let eigen: Vec<String> = result
        .eigenvalues
        .iter()
        .map(|x| format_decimal(*x))
        .collect();
    let mut out = Output::new(dir, "cluster", args, Some(args.seed))?;
    out.text(
        "clusters.csv",
        &[
            (
                "within_cluster_sum",
                format_decimal(result.within_cluster_sum),
            ),
            ("normalized_eigenvalues", eigen.join(" ")),
        ],
        &csv,
    )?;
    out.dot("clusters.dot", &dot)?;
    out.finish();
    Ok(())
}

#[derive(Args, Serialize)]
pub struct IngestRatingsArgs {
    /// CSV with columns user,item,rating.
    pub ratings: PathBuf,
    /// Drop items with fewer ratings than this.
    #[arg(long, default_value_t = 0)]
    pub min_reviews: usize,
}

pub fn ingest_ratings(args: &IngestRatingsArgs, dir: &Path) -> Result<(), CliError> {
    let t = ingest::read_ratings(&args.ratings).map_err(|e| match e {
        rankdesign::Error::Io(source) => CliError::io(&args.ratings, source),
        other => other.into(),
    })?;
    let mut data = ingest::ratings_to_pairwise(&t, args.min_reviews)?;
    data.provenance.source = args.ratings.display().to_string();
    let mut out = Output::new(dir, "ingest-ratings", args, None)?;
    out.text(
        "edges.tsv",
        &[
            ("items", data.labels.len().to_string()),
            ("users", t.users().len().to_string()),
        ],
        &ingest::edge_list_string(&data)?,
    )?;
    out.finish();
    Ok(())
}

#[derive(Args, Serialize)]
pub struct IngestScheduleArgs {
    /// CSV with columns team_a,team_b,score_a,score_b.
    pub schedule: PathBuf,
}

pub fn ingest_schedule(args: &IngestScheduleArgs, dir: &Path) -> Result<(), CliError> {
    let data = ingest::read_schedule(&args.schedule).map_err(|e| match e {
        rankdesign::Error::Io(source) => CliError::io(&args.schedule, source),
        other => other.into(),
    })?;
    let mut out = Output::new(dir, "ingest-schedule", args, None)?;
    out.text(
        "edges.tsv",
        &[("teams", data.labels.len().to_string())],
        &ingest::edge_list_string(&data)?,
    )?;
    out.finish();
    Ok(())
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Path,
    Cycle,
    Complete,
    Star,
    Bipartite,
    /// Two cliques of size N joined by M bridges.
    Bridged,
    /// Erdős–Rényi G(N, P).
    Er,
}

#[derive(Args, Serialize)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub family: Family,
    /// Vertices (path, cycle, complete, er), leaves (star), first side
    /// (bipartite), or clique size (bridged).
    #[arg(long)]
    pub n: usize,
    /// Second side (bipartite) or number of bridges (bridged).
    #[arg(long)]
    pub m: Option<usize>,
    /// Edge probability (er).
    #[arg(long)]
    pub p: Option<f64>,
    /// Noise variance of one synthetic comparison.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn generate(args: &GenerateArgs, dir: &Path) -> Result<(), CliError> {
    let need = |v: Option<usize>, what: &str| {
        v.ok_or_else(|| CliError::Usage(format!("this family needs --{what}")))
    };
    let g = match args.family {
        Family::Path => families::path(args.n)?,
        Family::Cycle => families::cycle(args.n)?,
        Family::Complete => families::complete(args.n)?,
        Family::Star => families::star(args.n)?,
        Family::Bipartite => families::complete_bipartite(args.n, need(args.m, "m")?)?,
        Family::Bridged => families::bridged_cliques(args.n, args.m.unwrap_or(1))?,
        Family::Er => {
            let p = args
                .p
                .ok_or_else(|| CliError::Usage("er needs --p".into()))?;
            experiments::er_sample(args.n, p, args.seed)?
        }
    };
    if g.support_size() == 0 {
        return Err(
            rankdesign::Error::DegenerateDataset("generated graph has no edges".into()).into(),
        );
    }
    let model = SyntheticModel::standard_normal(g.n(), args.sigma2, args.seed)?;
    let data = experiments::synth_scores(&g, &model)?;
    let labeled = LabeledPairwiseData::with_numeric_labels(
        data,
        Provenance {
            source: "generated".into(),
            format: "edge-list".into(),
            min_reviews: None,
        },
    );
    // an edge list only names vertices with comparisons
    let mut truth = String::from("label,phi\n");
    for (v, label) in labeled.labels.iter().enumerate() {
        if g.degrees()[v] > 0 {
            truth.push_str(&format!("{label},{}\n", format_decimal(model.phi_true[v])));
        }
    }
    let mut out = Output::new(dir, "generate", args, Some(args.seed))?;
    out.text("edges.tsv", &[], &ingest::edge_list_string(&labeled)?)?;
    out.text("truth.csv", &[], &truth)?;
    out.finish();
    Ok(())
}

#[derive(Args, Serialize)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also evaluate the high-probability bound at this failure rate.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Serialize)]
struct EnsembleSummary {
    n: usize,
    p: f64,
    trials: usize,
    mean_m: f64,
    mean_lambda2: f64,
    disconnected_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    er_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fraction_above_bound: Option<f64>,
}

pub fn ensemble(args: &EnsembleArgs, dir: &Path) -> Result<(), CliError> {
    let e = experiments::er_ensemble(args.n, args.p, args.trials, args.seed)?;
    let bound = args
        .eps
        .map(|eps| bounds::er_bound(args.n, args.p, eps))
        .transpose()?;
    let above = bound
        .map(|b| e.samples.iter().filter(|s| s.lambda2 > b).count() as f64 / args.trials as f64);
    let summary = EnsembleSummary {
        n: args.n,
        p: args.p,
        trials: args.trials,
        mean_m: e.mean_m,
        mean_lambda2: e.mean_lambda2,
        disconnected_fraction: e.disconnected_fraction,
        er_bound: bound,
        fraction_above_bound: above,
    };
    let mut out = Output::new(dir, "ensemble", args, Some(args.seed))?;
    out.text("ensemble.csv", &[], &e.to_csv())?;
    out.json("ensemble.json", &summary)?;
    out.finish();
    Ok(())
}
