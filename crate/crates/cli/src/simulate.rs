use std::path::{Path, PathBuf};

use clap::Args;
use rankdesign::design::Strategy;
use rankdesign::experiments::{
    active_vs_random, paired_one_sided_test, Metric, PairedTest, ProtocolConfig, SummaryRow,
    SyntheticModel,
};
use rankdesign::graph::{families, MultiGraph};
use rankdesign::ingest;
use serde::{Deserialize, Serialize};

use crate::output::Output;
use crate::CliError;

pub const DEFAULT_CONFIG: &str = include_str!("../configs/simulate_default.json");

#[derive(Args, Serialize)]
pub struct SimulateArgs {
    /// JSON config; the bundled two-clique experiment when omitted.
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    BridgedCliques {
        size: usize,
        bridges: usize,
    },
    Path {
        n: usize,
    },
    Cycle {
        n: usize,
    },
    Complete {
        n: usize,
    },
    /// Only the comparison graph is used; the file's `y` values are ignored.
    EdgeList {
        path: PathBuf,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub graph: GraphSpec,
    pub sigma2: f64,
    pub seed: u64,
    /// Ground truth; drawn i.i.d. N(0, 1) from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_true: Option<Vec<f64>>,
    pub protocol: ProtocolConfig,
}

#[derive(Serialize)]
struct FinalTests {
    xi: usize,
    l2: PairedTest,
    ktau: PairedTest,
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    n: usize,
    phi_true: &'a [f64],
    greedy_sequence: Vec<[&'a str; 2]>,
    summary: &'a [SummaryRow],
    final_tests: FinalTests,
    /// Mean greedy λ₂ at least the mean random λ₂ at every checkpoint.
    lambda2_dominates: bool,
}

fn build_graph(spec: &GraphSpec) -> Result<(MultiGraph, Vec<String>), CliError> {
    let numeric = |g: MultiGraph| {
        let width = (g.n() - 1).to_string().len();
        let labels = (0..g.n()).map(|v| format!("{v:0width$}")).collect();
        (g, labels)
    };
    Ok(match spec {
        GraphSpec::BridgedCliques { size, bridges } => {
            numeric(families::bridged_cliques(*size, *bridges)?)
        }
        GraphSpec::Path { n } => numeric(families::path(*n)?),
        GraphSpec::Cycle { n } => numeric(families::cycle(*n)?),
        GraphSpec::Complete { n } => numeric(families::complete(*n)?),
        GraphSpec::EdgeList { path } => {
            let d = ingest::read_edge_list(path)?;
            (d.data.graph().clone(), d.labels)
        }
    })
}

pub fn simulate(args: &SimulateArgs, dir: &Path) -> Result<(), CliError> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
        None => DEFAULT_CONFIG.to_owned(),
    };
    let config: SimulationConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
    let (g, labels) = build_graph(&config.graph)?;
    let model = match &config.phi_true {
        Some(phi) => SyntheticModel::new(phi.clone(), config.sigma2, config.seed)?,
        None => SyntheticModel::standard_normal(g.n(), config.sigma2, config.seed)?,
    };
    let report = active_vs_random(&g, &model, &config.protocol)?;

    let last = config.protocol.xi_max;
    let test = |m| {
        paired_one_sided_test(
            &report.values(Strategy::Greedy, last, m),
            &report.values(Strategy::Random, last, m),
        )
    };
    let (l2, ktau) = if config.protocol.trials >= 2 {
        (test(Metric::L2)?, test(Metric::KendallTau)?)
    } else {
        let nan = PairedTest {
            mean_difference: f64::NAN,
            t_statistic: f64::NAN,
            degrees_of_freedom: 0.0,
            p_value: f64::NAN,
        };
        (nan, nan)
    };
    let lambda2_dominates = report.checkpoints.iter().all(|&xi| {
        match (
            report.summary_at(Strategy::Greedy, xi),
            report.summary_at(Strategy::Random, xi),
        ) {
            (Some(a), Some(b)) => a.lambda2.mean >= b.lambda2.mean - 1e-9,
            _ => false,
        }
    });
    let summary = SimulationSummary {
        n: g.n(),
        phi_true: &model.phi_true,
        greedy_sequence: report
            .greedy_sequence
            .iter()
            .map(|e| [labels[e.i].as_str(), labels[e.j].as_str()])
            .collect(),
        summary: &report.summary,
        final_tests: FinalTests { xi: last, l2, ktau },
        lambda2_dominates,
    };

    let mut out = Output::new(dir, "simulate", &config, Some(config.seed))?;
    out.text("simulation.csv", &[], &report.to_csv())?;
    out.json("simulation.json", &summary)?;
    out.finish();
    Ok(())
}
