//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
//! if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rankdesign::bounds::er_bound;
use rankdesign::design::{greedy_augment, Forbidden, Strategy};
use rankdesign::experiments::{
    active_vs_random, covariance_check, criteria_comparison, er_ensemble, paired_one_sided_test,
    path_gap_dominance, stream_rng, Metric, ProtocolConfig, SyntheticModel, PILOT_GREEDY_RATIO,
};
use rankdesign::graph::{families, pair_count, MultiGraph};
use rankdesign::ingest::{ratings_to_pairwise, RatingTriplets};
use rankdesign::ranking::{dense_laplacian_pinv, lsq_rank, PairwiseData};
use rankdesign::spectral::{fiedler, full_spectrum};
use rankdesign::Result;

const SEED: u64 = 0xacce97;
const SLACK: f64 = 1e-8;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64, max_weight: u32) -> MultiGraph {
    let mut g = MultiGraph::empty(n).unwrap();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                g.add_weight(g.key(i, j).unwrap(), rng.random_range(1..=max_weight))
                    .unwrap();
            }
        }
    }
    g
}

fn random_connected<R: Rng>(rng: &mut R, n: usize, max_weight: u32) -> MultiGraph {
    loop {
        let p = rng.random_range(0.3..1.0);
        let g = random_graph(rng, n, p, max_weight);
        if g.is_connected() {
            return g;
        }
    }
}

fn random_arc<R: Rng>(rng: &mut R, n: usize) -> rankdesign::graph::EdgeKey {
    rankdesign::graph::edge_from_index(rng.random_range(0..pair_count(n)), n).unwrap()
}

fn closed_forms() -> Result<Verdict> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 3..=50usize {
        let nf = n as f64;
        let mut family = vec![
            (
                families::path(n)?,
                2.0 - 2.0 * (std::f64::consts::PI / nf).cos(),
            ),
            (
                families::cycle(n)?,
                2.0 - 2.0 * (2.0 * std::f64::consts::PI / nf).cos(),
            ),
            (families::complete(n)?, nf),
        ];
        for a in 1..=n / 2 {
            family.push((families::complete_bipartite(a, n - a)?, a as f64));
        }
        for (g, expected) in family {
            let iterative = fiedler(&g, 1e-10)?.value;
            let dense = full_spectrum(&g)?[1];
            worst = worst
                .max((iterative - expected).abs())
                .max((dense - expected).abs());
            cases += 1;
        }
    }
    verdict(
        worst <= SLACK,
        format!("{cases} graphs, max error {worst:.2e}"),
    )
}

fn spectral_laws() -> Result<Verdict> {
    const CASES: usize = 500;
    let mut rng = stream_rng(SEED, 2);
    let mut violations = [0usize; 6];
    for _ in 0..CASES {
        let n = rng.random_range(2..=10);
        let p = rng.random_range(0.2..0.9);
        let g = random_graph(&mut rng, n, p, 3);
        let before = full_spectrum(&g)?;
        let after = full_spectrum(&g.with_weight_added(random_arc(&mut rng, n), 1)?)?;

        // monotonicity
        if (0..n).any(|i| after[i] < before[i] - SLACK) {
            violations[0] += 1;
        }
        // interlacing
        if (0..n - 1).any(|i| after[i] > before[i + 1] + SLACK) {
            violations[1] += 1;
        }
        // Weyl increment
        if (0..n).any(|i| after[i] - before[i] > 2.0 + SLACK) {
            violations[2] += 1;
        }
        // uniform shift by n·w₀
        let w0 = rng.random_range(1..=3u32);
        let mut shifted = g.clone();
        for i in 0..n {
            for j in i + 1..n {
                shifted.add_weight(shifted.key(i, j)?, w0)?;
            }
        }
        let s = full_spectrum(&shifted)?;
        if (1..n).any(|i| (s[i] - before[i] - (n as f64) * f64::from(w0)).abs() > SLACK) {
            violations[3] += 1;
        }
        let d_plus = g.degree_stats().d_plus as f64;
        let top = *before.last().unwrap();
        // eigenvalue range as stated: [0, d₊]
        if before[0] < -SLACK || top > d_plus + SLACK {
            violations[4] += 1;
        }
        // Gershgorin range [0, 2d₊]
        if before[0] < -SLACK || top > 2.0 * d_plus + SLACK {
            violations[5] += 1;
        }
    }
    let [mono, inter, weyl, shift, range, gersh] = violations;
    verdict(
        violations[..5].iter().all(|&v| v == 0),
        format!(
            "{CASES} cases each; violations: monotone {mono}, interlacing {inter}, weyl {weyl}, \
             shift {shift}, range [0,d+] {range}; range [0,2d+] {gersh}"
        ),
    )
}

fn estimator() -> Result<Verdict> {
    let mut rng = stream_rng(SEED, 3);
    let mut worst_oracle = 0.0f64;
    let mut worst_exact = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(2..=8);
        let g = random_connected(&mut rng, n, 4);
        let truth: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mean = truth.iter().sum::<f64>() / n as f64;
        let truth: Vec<f64> = truth.iter().map(|x| x - mean).collect();

        let noisy = g
            .edges()
            .map(|(e, _)| (e, rng.random_range(-3.0..3.0)))
            .collect();
        let data = PairwiseData::new(g.clone(), noisy)?;
        let phi = lsq_rank(&data, 1e-13)?.phi;
        let pinv = dense_laplacian_pinv(&g);
        let b = data.divergence();
        for v in 0..n {
            let oracle: f64 = (0..n).map(|u| pinv[(v, u)] * b[u]).sum();
            worst_oracle = worst_oracle.max((phi[v] - oracle).abs());
        }

        let exact = g
            .edges()
            .map(|(e, _)| (e, truth[e.j] - truth[e.i]))
            .collect();
        let phi = lsq_rank(&PairwiseData::new(g, exact)?, 1e-13)?.phi;
        for v in 0..n {
            worst_exact = worst_exact.max((phi[v] - truth[v]).abs());
        }
    }
    let g = MultiGraph::from_edges(
        6,
        [
            (0, 1, 2),
            (1, 2, 1),
            (2, 3, 3),
            (3, 4, 1),
            (4, 5, 2),
            (5, 0, 1),
            (1, 4, 1),
        ],
    )?;
    let cov = covariance_check(&g, 2.0, 100_000, SEED)?;
    verdict(
        worst_oracle <= SLACK && worst_exact <= 1e-9 && cov.relative_frobenius <= 0.05,
        format!(
            "pinv oracle max error {worst_oracle:.2e}, noise-free max error {worst_exact:.2e}, \
             covariance relative Frobenius {:.4} at {} trials",
            cov.relative_frobenius, cov.trials
        ),
    )
}

fn greedy_quality() -> Result<Verdict> {
    let row = &path_gap_dominance(50, &[490], 200, 2024)?[0];
    verdict(
        row.greedy_lambda2 > row.er_mean_lambda2 && row.ratio() >= PILOT_GREEDY_RATIO,
        format!(
            "greedy lambda2 {:.6} vs ER mean {:.6}; ratio to 2m/49 {:.4} (frozen threshold {PILOT_GREEDY_RATIO})",
            row.greedy_lambda2,
            row.er_mean_lambda2,
            row.ratio()
        ),
    )
}

fn er_concentration() -> Result<Verdict> {
    let bound = er_bound(50, 0.4, 0.05)?;
    let ens = er_ensemble(50, 0.4, 1000, SEED)?;
    let above = ens.samples.iter().filter(|s| s.lambda2 > bound).count();
    let fraction = above as f64 / ens.samples.len() as f64;
    verdict(
        fraction <= 0.05,
        format!("{above}/1000 samples above {bound:.6} (fraction {fraction:.3})"),
    )
}

fn simulate_config() -> serde_json::Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/simulate_default.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn active_vs_random_criterion() -> Result<Verdict> {
    let cfg = simulate_config();
    let clique = &cfg["graph"]["bridged_cliques"];
    let g = families::bridged_cliques(
        clique["size"].as_u64().unwrap() as usize,
        clique["bridges"].as_u64().unwrap() as usize,
    )?;
    let protocol: ProtocolConfig = serde_json::from_value(cfg["protocol"].clone()).unwrap();
    let model = SyntheticModel::standard_normal(
        g.n(),
        cfg["sigma2"].as_f64().unwrap(),
        cfg["seed"].as_u64().unwrap(),
    )?;
    let report = active_vs_random(&g, &model, &protocol)?;
    let last = protocol.xi_max;
    let test = |m| {
        paired_one_sided_test(
            &report.values(Strategy::Greedy, last, m),
            &report.values(Strategy::Random, last, m),
        )
    };
    let (l2, ktau) = (test(Metric::L2)?, test(Metric::KendallTau)?);
    let dominated = report.checkpoints.iter().all(|&xi| {
        let mean = |s| report.summary_at(s, xi).unwrap().lambda2.mean;
        mean(Strategy::Greedy) >= mean(Strategy::Random) - SLACK
    });
    let greedy = report.summary_at(Strategy::Greedy, last).unwrap();
    let random = report.summary_at(Strategy::Random, last).unwrap();
    verdict(
        l2.significant(0.05) && ktau.significant(0.05) && dominated,
        format!(
            "n={}, xi={last}, trials={}: L2 {:.4} vs {:.4} (p={:.2e}), ktau {:.4} vs {:.4} (p={:.2e}), \
             lambda2 dominates at all {} checkpoints: {dominated}",
            g.n(),
            protocol.trials,
            greedy.l2.mean,
            random.l2.mean,
            l2.p_value,
            greedy.ktau.mean,
            random.ktau.mean,
            ktau.p_value,
            report.checkpoints.len()
        ),
    )
}

fn plateau() -> Result<Verdict> {
    let d = greedy_augment(&families::complete(4)?, 1, &Forbidden::none(), true)?;
    let iterative = d.lambda2_trajectory[1];
    let dense = full_spectrum(&d.augmented)?[1];
    let err = (iterative - 4.0).abs().max((dense - 4.0).abs());
    verdict(
        err <= 1e-9,
        format!("lambda2 after one increment {dense:.12}, error {err:.1e}"),
    )
}

fn cross_dominance() -> Result<Verdict> {
    let g = families::bridged_cliques(15, 2)?;
    let xi = g.total_weight() as usize;
    let c = criteria_comparison(&g, xi, 50, SEED)?;
    let (ja, jd) = (c.greedy.j_a.unwrap(), c.greedy.j_d.unwrap());
    verdict(
        ja > c.random_mean_j_a && jd > c.random_mean_j_d,
        format!(
            "xi={xi}, 50 trials: J_A {ja:.6} vs {:.6}, J_D {jd:.6} vs {:.6}",
            c.random_mean_j_a, c.random_mean_j_d
        ),
    )
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

/// All output files of one run, version line removed.
fn run_cli(args: &[String], out: &Path) -> std::result::Result<Vec<(String, String)>, String> {
    std::fs::create_dir_all(out).map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_rankdesign"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(out)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    Ok(files
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let stripped: Vec<&str> = text
                .lines()
                .filter(|l| {
                    !l.contains("\"version\"")
                        && !l.starts_with("# rankdesign ")
                        && !l.starts_with("// rankdesign ")
                })
                .collect();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                stripped.join("\n"),
            )
        })
        .collect())
}

fn determinism() -> Result<Verdict> {
    let work = tempfile::TempDir::new()?;
    let sim = work.path().join("sim.json");
    std::fs::write(
        &sim,
        r#"{"graph": {"bridged_cliques": {"size": 5, "bridges": 1}}, "sigma2": 2.0, "seed": 7,
            "protocol": {"xi_max": 10, "trials": 6, "checkpoints": [5]}}"#,
    )?;
    let forbid = work.path().join("forbid.tsv");
    std::fs::write(&forbid, "1\t5\n")?;
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let runs = vec![
        s(&["rank", &fixture("k3_inconsistent.tsv")]),
        s(&["augment", &fixture("p5.tsv"), "--xi", "3"]),
        s(&[
            "augment",
            &fixture("p5.tsv"),
            "--xi",
            "3",
            "--strategy",
            "random",
            "--seed",
            "4",
        ]),
        s(&[
            "augment",
            &fixture("p5.tsv"),
            "--xi",
            "2",
            "--forbid",
            forbid.to_str().unwrap(),
        ]),
        s(&["criteria", &fixture("k4.tsv")]),
        s(&[
            "bounds",
            &fixture("k4.tsv"),
            "--subset",
            &fixture("subset_a.txt"),
            "--er-bound",
            "100",
            "0.4",
            "0.01",
        ]),
        s(&["cluster", &fixture("p5.tsv"), "--k", "2", "--seed", "3"]),
        s(&["simulate", sim.to_str().unwrap()]),
        s(&["ingest-ratings", &fixture("ratings_two_users.csv")]),
        s(&["ingest-schedule", &fixture("schedule.csv")]),
        s(&["generate", "er", "--n", "15", "--p", "0.4", "--seed", "11"]),
        s(&[
            "generate", "bridged", "--n", "6", "--m", "2", "--sigma2", "0.5", "--seed", "1",
        ]),
        s(&[
            "ensemble", "--n", "20", "--p", "0.3", "--trials", "25", "--seed", "5",
        ]),
    ];
    let mut mismatched = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let a = run_cli(args, &work.path().join(format!("{i}a")));
        let b = run_cli(args, &work.path().join(format!("{i}b")));
        match (a, b) {
            (Ok(a), Ok(b)) if a == b && !a.is_empty() => {}
            (Err(e), _) | (_, Err(e)) => mismatched.push(e),
            _ => mismatched.push(args[0].clone()),
        }
    }
    verdict(
        mismatched.is_empty(),
        format!(
            "{} invocations rerun; differing: {mismatched:?}",
            runs.len()
        ),
    )
}

fn ratings_identity() -> Result<Verdict> {
    let mut rng = stream_rng(SEED, 10);
    let mut broken = 0;
    for _ in 0..100 {
        let users = rng.random_range(1..=12);
        let items = rng.random_range(2..=9);
        let mut entries = Vec::new();
        for u in 0..users {
            for i in 0..items {
                if rng.random_bool(0.6) {
                    entries.push((
                        format!("u{u}"),
                        format!("i{i}"),
                        f64::from(rng.random_range(1..=5u8)),
                    ));
                }
            }
        }
        // guarantee two rated items so the dataset is not degenerate
        entries.push(("anchor".into(), "i0".into(), 3.0));
        entries.push(("anchor".into(), "i1".into(), 4.0));
        let t = RatingTriplets::from_entries(entries)?;
        let mut per_user = vec![0u64; t.users().len()];
        for &(u, _, _) in t.entries() {
            per_user[u] += 1;
        }
        let expected: u64 = per_user.iter().map(|&c| c * c.saturating_sub(1) / 2).sum();
        let got = ratings_to_pairwise(&t, 0)?.data.graph().total_weight();
        if got != expected {
            broken += 1;
        }
    }
    let t = RatingTriplets::from_entries([
        ("u1", "A", 5.0),
        ("u1", "B", 3.0),
        ("u2", "A", 4.0),
        ("u2", "B", 4.0),
    ])?;
    let d = ratings_to_pairwise(&t, 0)?;
    let (e, w, y) = d.data.observations().next().unwrap();
    let worked = d.labels == ["A", "B"] && (e.i, e.j) == (0, 1) && w == 2 && y == -1.0;
    verdict(
        broken == 0 && worked,
        format!("identity broken on {broken}/100 fixtures; two-user example (w, y) = ({w}, {y})"),
    )
}

type Check = fn() -> Result<Verdict>;

fn main() {
    let criteria_list: [(&str, Check); 10] = [
        ("closed-form spectra", closed_forms),
        ("spectral law suite", spectral_laws),
        ("estimator correctness", estimator),
        ("greedy quality", greedy_quality),
        ("ER concentration bound", er_concentration),
        ("active vs random", active_vs_random_criterion),
        ("single-increment plateau", plateau),
        ("criteria cross-dominance", cross_dominance),
        ("pipeline determinism", determinism),
        ("ratings ingestion", ratings_identity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria_list.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1}s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
