//! Reading and writing comparison data.
//!
//! Vertex ids are always assigned by sorting labels bytewise, so the same
//! file yields the same ids regardless of line order.
//!
//! Edge-list format: UTF-8, one arc per line, four tab-separated columns
//! `label_i  label_j  w  y` where `y` estimates `φ_j − φ_i`. Blank lines and
//! lines starting with `#` are ignored.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ranking::PairwiseData;

/// Formats `x` rounded to 12 significant digits, in plain decimal notation.
pub fn format_decimal(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if rounded == 0.0 {
        "0".to_owned()
    } else {
        format!("{rounded}")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Provenance {
    pub source: String,
    pub format: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_reviews: Option<usize>,
}

/// Pairwise data whose vertices carry string labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPairwiseData {
    pub data: PairwiseData,
    /// `labels[v]` names vertex `v`; sorted and unique.
    pub labels: Vec<String>,
    pub provenance: Provenance,
}

impl LabeledPairwiseData {
    pub fn new(data: PairwiseData, labels: Vec<String>, provenance: Provenance) -> Result<Self> {
        if labels.len() != data.n() {
            return Err(Error::Dimension {
                expected: data.n(),
                got: labels.len(),
            });
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "labels must be sorted and unique".into(),
            ));
        }
        Ok(Self {
            data,
            labels,
            provenance,
        })
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    /// Unlabeled data gets labels `0, 1, …`, zero-padded so that byte order
    /// matches numeric order.
    pub fn with_numeric_labels(data: PairwiseData, provenance: Provenance) -> Self {
        let width = (data.n() - 1).to_string().len();
        let labels = (0..data.n()).map(|v| format!("{v:0width$}")).collect();
        Self {
            data,
            labels,
            provenance,
        }
    }
}

/// A comparison between two labels as read from a file.
struct LabeledRecord {
    a: String,
    b: String,
    w: u32,
    y: f64,
    line: usize,
}

fn assemble(
    records: Vec<LabeledRecord>,
    provenance: Provenance,
    warn_repeats: bool,
) -> Result<LabeledPairwiseData> {
    if records.is_empty() {
        return Err(Error::DegenerateDataset(format!(
            "{} contains no comparisons",
            provenance.source
        )));
    }
    let labels: Vec<String> = records
        .iter()
        .flat_map(|r| [r.a.clone(), r.b.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let id = |l: &str| {
        labels
            .binary_search_by(|x| x.as_str().cmp(l))
            .expect("collected")
    };
    let mut seen = HashSet::new();
    let mut ids = Vec::with_capacity(records.len());
    for r in &records {
        let (a, b) = (id(&r.a), id(&r.b));
        if !seen.insert((a.min(b), a.max(b))) && warn_repeats {
            log::warn!(
                "line {}: repeated pair ({}, {}) merged by weighted mean",
                r.line,
                r.a,
                r.b
            );
        }
        ids.push((a, b, r.w, r.y));
    }
    let data = PairwiseData::from_records(labels.len(), ids)?;
    LabeledPairwiseData::new(data, labels, provenance)
}

fn parse_finite(field: &str, what: &str, line: usize) -> Result<f64> {
    let x: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("{what} {field:?} is not a number"),
    })?;
    if !x.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("{what} {field:?} is not finite"),
        });
    }
    Ok(x)
}

fn distinct_labels(a: &str, b: &str, line: usize) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Parse {
            line,
            msg: "empty label".into(),
        });
    }
    if a == b {
        return Err(Error::Parse {
            line,
            msg: format!("{a:?} compared with itself"),
        });
    }
    Ok(())
}

pub fn parse_edge_list(text: &str, source: &str) -> Result<LabeledPairwiseData> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim_end_matches('\r');
        if body.trim().is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let (a, b) = (fields[0].trim(), fields[1].trim());
        distinct_labels(a, b, line)?;
        let w: u32 = fields[2].trim().parse().map_err(|_| Error::Parse {
            line,
            msg: format!("weight {:?} is not a positive integer", fields[2]),
        })?;
        if w == 0 {
            return Err(Error::Parse {
                line,
                msg: "weight must be positive".into(),
            });
        }
        let y = parse_finite(fields[3], "comparison", line)?;
        records.push(LabeledRecord {
            a: a.to_owned(),
            b: b.to_owned(),
            w,
            y,
            line,
        });
    }
    assemble(
        records,
        Provenance {
            source: source.to_owned(),
            format: "edge-list".into(),
            min_reviews: None,
        },
        true,
    )
}

pub fn read_edge_list(path: &Path) -> Result<LabeledPairwiseData> {
    parse_edge_list(&std::fs::read_to_string(path)?, &path.display().to_string())
}

pub const EDGE_LIST_HEADER: &str = "# label_i\tlabel_j\tw\ty";

/// Canonical text: a header comment, then one line per arc sorted by
/// `(i, j)`, with `y` oriented from `label_i` to `label_j`.
pub fn edge_list_string(data: &LabeledPairwiseData) -> Result<String> {
    if let Some(bad) = data
        .labels
        .iter()
        .find(|l| l.is_empty() || l.contains(['\t', '\n', '\r']) || l.starts_with('#'))
    {
        return Err(Error::InvalidInput(format!(
            "label {bad:?} cannot be written to an edge list"
        )));
    }
    let mut out = String::new();
    writeln!(out, "{EDGE_LIST_HEADER}").expect("string write");
    for (e, w, y) in data.data.observations() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            data.labels[e.i],
            data.labels[e.j],
            w,
            format_decimal(y)
        )
        .expect("string write");
    }
    Ok(out)
}

pub fn write_edge_list(data: &LabeledPairwiseData, path: &Path) -> Result<()> {
    std::fs::write(path, edge_list_string(data)?)?;
    Ok(())
}

fn csv_reader<R: std::io::Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(input)
}

fn record_line(r: &csv::StringRecord) -> usize {
    r.position().map_or(0, |p| p.line() as usize)
}

/// Reads a game schedule CSV with rows `team_a, team_b, score_a, score_b`.
/// Each game contributes one comparison `score_b − score_a`. A first row
/// whose scores are not numeric is taken as a header.
pub fn parse_schedule<R: std::io::Read>(input: R, source: &str) -> Result<LabeledPairwiseData> {
    let mut records = Vec::new();
    for (idx, row) in csv_reader(input).records().enumerate() {
        let row = row?;
        let line = record_line(&row);
        if row.len() != 4 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 4 fields, found {}", row.len()),
            });
        }
        if idx == 0 && row[2].parse::<f64>().is_err() && row[3].parse::<f64>().is_err() {
            continue;
        }
        distinct_labels(&row[0], &row[1], line)?;
        let sa = parse_finite(&row[2], "score", line)?;
        let sb = parse_finite(&row[3], "score", line)?;
        records.push(LabeledRecord {
            a: row[0].to_owned(),
            b: row[1].to_owned(),
            w: 1,
            y: sb - sa,
            line,
        });
    }
    assemble(
        records,
        Provenance {
            source: source.to_owned(),
            format: "schedule".into(),
            min_reviews: None,
        },
        false,
    )
}

pub fn read_schedule(path: &Path) -> Result<LabeledPairwiseData> {
    parse_schedule(std::fs::File::open(path)?, &path.display().to_string())
}

/// Ratings `(user, item, rating)` with sorted label tables.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTriplets {
    users: Vec<String>,
    items: Vec<String>,
    /// `(user id, item id, rating)`, sorted, one per `(user, item)`.
    entries: Vec<(usize, usize, f64)>,
}

impl RatingTriplets {
    /// Repeated `(user, item)` pairs keep the last rating, with a warning.
    pub fn from_entries<I, S, T>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T, f64)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut latest: BTreeMap<(String, String), f64> = BTreeMap::new();
        for (u, i, r) in entries {
            if !r.is_finite() {
                return Err(Error::InvalidInput("non-finite rating".into()));
            }
            let key = (u.into(), i.into());
            if latest.contains_key(&key) {
                log::warn!(
                    "user {:?} rated {:?} more than once; keeping the last",
                    key.0,
                    key.1
                );
            }
            latest.insert(key, r);
        }
        let users: Vec<String> = latest
            .keys()
            .map(|k| k.0.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let items: Vec<String> = latest
            .keys()
            .map(|k| k.1.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let find = |table: &[String], l: &str| {
            table
                .binary_search_by(|x| x.as_str().cmp(l))
                .expect("collected")
        };
        let entries = latest
            .iter()
            .map(|((u, i), &r)| (find(&users, u), find(&items, i), r))
            .collect();
        Ok(Self {
            users,
            items,
            entries,
        })
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }
}

/// Reads ratings CSV `user, item, rating`; a non-numeric first rating is
/// treated as a header.
pub fn parse_ratings<R: std::io::Read>(input: R) -> Result<RatingTriplets> {
    let mut rows = Vec::new();
    for (idx, row) in csv_reader(input).records().enumerate() {
        let row = row?;
        let line = record_line(&row);
        if row.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 3 fields, found {}", row.len()),
            });
        }
        if idx == 0 && row[2].parse::<f64>().is_err() {
            continue;
        }
        if row[0].is_empty() || row[1].is_empty() {
            return Err(Error::Parse {
                line,
                msg: "empty label".into(),
            });
        }
        let r = parse_finite(&row[2], "rating", line)?;
        rows.push((row[0].to_owned(), row[1].to_owned(), r));
    }
    RatingTriplets::from_entries(rows)
}

pub fn read_ratings(path: &Path) -> Result<RatingTriplets> {
    parse_ratings(std::fs::File::open(path)?)
}

/// Turns ratings into comparisons: items with fewer than `min_reviews`
/// ratings are dropped, and each pair `i < j` rated by a common set of
/// users `Σ_ij` gets `w = |Σ_ij|` and `y = mean_σ (r_j^σ − r_i^σ)`.
pub fn ratings_to_pairwise(t: &RatingTriplets, min_reviews: usize) -> Result<LabeledPairwiseData> {
    let mut counts = vec![0usize; t.items.len()];
    for &(_, i, _) in &t.entries {
        counts[i] += 1;
    }
    let mut new_id = vec![None; t.items.len()];
    let mut labels = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if c >= min_reviews {
            new_id[i] = Some(labels.len());
            labels.push(t.items[i].clone());
        }
    }
    if labels.len() < 2 {
        return Err(Error::DegenerateDataset(format!(
            "{} item(s) have at least {min_reviews} ratings; need 2",
            labels.len()
        )));
    }

    // entries are sorted by user, then item, so each user's row is contiguous
    // and already in increasing item order
    let mut records = Vec::new();
    for row in t.entries.chunk_by(|a, b| a.0 == b.0) {
        let kept: Vec<(usize, f64)> = row
            .iter()
            .filter_map(|&(_, i, r)| new_id[i].map(|v| (v, r)))
            .collect();
        for (a, &(i, ri)) in kept.iter().enumerate() {
            for &(j, rj) in &kept[a + 1..] {
                records.push((i, j, 1, rj - ri));
            }
        }
    }
    let data = PairwiseData::from_records(labels.len(), records)?;
    LabeledPairwiseData::new(
        data,
        labels,
        Provenance {
            source: String::new(),
            format: "ratings".into(),
            min_reviews: Some(min_reviews),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_users_two_items() {
        let t = RatingTriplets::from_entries([
            ("u1", "A", 5.0),
            ("u1", "B", 3.0),
            ("u2", "A", 4.0),
            ("u2", "B", 4.0),
        ])
        .unwrap();
        let d = ratings_to_pairwise(&t, 0).unwrap();
        let obs: Vec<_> = d.data.observations().collect();
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].1, 2);
        assert_eq!(obs[0].2, -1.0);
        assert_eq!(d.labels, ["A", "B"]);
    }

    #[test]
    fn relabeling_flips_sign() {
        let t = RatingTriplets::from_entries([
            ("u1", "Z", 5.0),
            ("u1", "B", 3.0),
            ("u2", "Z", 4.0),
            ("u2", "B", 4.0),
        ])
        .unwrap();
        let d = ratings_to_pairwise(&t, 0).unwrap();
        assert_eq!(d.labels, ["B", "Z"]);
        assert_eq!(d.data.observations().next().unwrap().2, 1.0);
    }

    #[test]
    fn single_item_users_and_filtering() {
        let t = RatingTriplets::from_entries([
            ("u1", "A", 5.0),
            ("u2", "B", 3.0),
            ("u3", "A", 1.0),
            ("u3", "C", 2.0),
        ])
        .unwrap();
        let d = ratings_to_pairwise(&t, 0).unwrap();
        assert_eq!(d.data.graph().total_weight(), 1);
        assert!(matches!(
            ratings_to_pairwise(&t, 2),
            Err(Error::DegenerateDataset(_))
        ));
    }

    #[test]
    fn duplicate_rating_last_wins() {
        let t = RatingTriplets::from_entries([("u", "A", 1.0), ("u", "B", 2.0), ("u", "A", 7.0)])
            .unwrap();
        assert_eq!(t.entries().len(), 2);
        let d = ratings_to_pairwise(&t, 0).unwrap();
        assert_eq!(d.data.observations().next().unwrap().2, -5.0);
        assert!(RatingTriplets::from_entries([("u", "A", f64::NAN)]).is_err());
    }

    #[test]
    fn ratings_csv_with_header() {
        let t = parse_ratings("user,item,rating\nu1,A,5\nu1,B,3\n".as_bytes()).unwrap();
        assert_eq!(t.entries().len(), 2);
        let t = parse_ratings("u1,A,5\nu1,B,3\n".as_bytes()).unwrap();
        assert_eq!(t.entries().len(), 2);
        let err = parse_ratings("u1,A,5\nu1,B,inf\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn edge_list_line() {
        let d = parse_edge_list("a\tb\t3\t1.5\n", "mem").unwrap();
        let (e, w, y) = d.data.observations().next().unwrap();
        assert_eq!((e.i, e.j, w, y), (0, 1, 3, 1.5));
        let flipped = parse_edge_list("b\ta\t3\t1.5\n", "mem").unwrap();
        assert_eq!(flipped.data.observations().next().unwrap().2, -1.5);
    }

    #[test]
    fn edge_list_errors() {
        assert!(matches!(
            parse_edge_list("", "x"),
            Err(Error::DegenerateDataset(_))
        ));
        assert!(matches!(
            parse_edge_list("# only\n\n", "x"),
            Err(Error::DegenerateDataset(_))
        ));
        let cases = [
            ("a\tb\t1\t0\nc\td\t1\n", 2),
            ("a\tb\t0\t1\n", 1),
            ("a\tb\t1\tNaN\n", 1),
            ("a\tb\t1\t-inf\n", 1),
            ("#\na\ta\t1\t1\n", 2),
            ("a\tb\tx\t1\n", 1),
        ];
        for (text, line) in cases {
            match parse_edge_list(text, "x") {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn edge_list_duplicates_merge() {
        let d = parse_edge_list("a\tb\t1\t2\nb\ta\t3\t2\n", "x").unwrap();
        let (_, w, y) = d.data.observations().next().unwrap();
        assert_eq!(w, 4);
        assert!((y - (2.0 - 6.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn k3_round_trip_bytes() {
        let text =
            "# label_i\tlabel_j\tw\ty\nx\ty\t1\t0.5\nx\tz\t2\t-1.25\ny\tz\t1\t0.333333333333\n";
        let d = parse_edge_list(text, "k3").unwrap();
        assert_eq!(edge_list_string(&d).unwrap(), text);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k3.tsv");
        write_edge_list(&d, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), text);
        assert_eq!(read_edge_list(&p).unwrap().data, d.data);
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(format_decimal(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_decimal(-0.0), "0");
        assert_eq!(format_decimal(123456789.1234567), "123456789.123");
        assert_eq!(format_decimal(2.5), "2.5");
    }

    #[test]
    fn schedule_examples() {
        let d = parse_schedule("A,B,21,14\n".as_bytes(), "s").unwrap();
        let (_, w, y) = d.data.observations().next().unwrap();
        assert_eq!((w, y), (1, -7.0));
        let d = parse_schedule(
            "team_a,team_b,score_a,score_b\nA,B,21,14\nB,A,21,14\n".as_bytes(),
            "s",
        )
        .unwrap();
        let (_, w, y) = d.data.observations().next().unwrap();
        assert_eq!((w, y), (2, 0.0));
        let d = parse_schedule("A,B,1,2\nC,D,3,3\n".as_bytes(), "s").unwrap();
        assert_eq!(d.labels, ["A", "B", "C", "D"]);
        assert!(matches!(
            parse_schedule("A,B,1,2\nC,C,3,3\n".as_bytes(), "s"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    fn triplets() -> impl Strategy<Value = Vec<(u8, u8, i8)>> {
        prop::collection::vec((0u8..8, 0u8..10, -5i8..=5), 0..60)
    }

    fn build(raw: &[(u8, u8, i8)]) -> RatingTriplets {
        RatingTriplets::from_entries(
            raw.iter()
                .map(|&(u, i, r)| (format!("u{u}"), format!("i{i}"), f64::from(r))),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn weight_counts_co_rated_pairs(raw in triplets()) {
            let t = build(&raw);
            prop_assume!(t.items().len() >= 2);
            let d = ratings_to_pairwise(&t, 0).unwrap();
            let mut per_user = vec![0u64; t.users().len()];
            for &(u, _, _) in t.entries() {
                per_user[u] += 1;
            }
            let expected: u64 = per_user.iter().map(|c| c * c.saturating_sub(1) / 2).sum();
            prop_assert_eq!(d.data.graph().total_weight(), expected);
        }

        #[test]
        fn filter_is_monotone(raw in triplets(), lo in 0usize..4, step in 0usize..4) {
            let t = build(&raw);
            let a = ratings_to_pairwise(&t, lo);
            let b = ratings_to_pairwise(&t, lo + step);
            if let Ok(b) = b {
                let a = a.unwrap();
                let (ga, gb) = (a.data.graph(), b.data.graph());
                prop_assert!(gb.n() <= ga.n());
                prop_assert!(gb.support_size() <= ga.support_size());
                prop_assert!(gb.total_weight() <= ga.total_weight());
            }
        }

        #[test]
        fn edge_list_round_trip(raw in prop::collection::vec((0u8..6, 0u8..6, 1u32..4, -1e3f64..1e3), 1..20)) {
            let text: String = raw
                .iter()
                .filter(|r| r.0 != r.1)
                .map(|(a, b, w, y)| format!("v{a}\tv{b}\t{w}\t{y}\n"))
                .collect();
            prop_assume!(!text.is_empty());
            let once = edge_list_string(&parse_edge_list(&text, "p").unwrap()).unwrap();
            let twice = edge_list_string(&parse_edge_list(&once, "p").unwrap()).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
