//! Labeled evaluation: qrels, average precision, MAP lifts, Kendall tau.
//!
//! Nothing here is used by [`crate::selector`].

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::Serialize;
use thiserror::Error;

use crate::retrieval::RankedList;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{source_name} line {line}: {message}")]
    Malformed { source_name: &'static str, line: usize, message: String },
    #[error("no evaluable queries")]
    NoEvaluableQueries,
    #[error("query `{0}` has no relevant documents")]
    NoRelevant(String),
    #[error("lift is undefined against a MAP of zero")]
    UndefinedLift,
    #[error("rankings differ: only in first {only_a:?}, only in second {only_b:?}")]
    ItemMismatch { only_a: Vec<String>, only_b: Vec<String> },
    #[error("ranking lists `{0}` twice")]
    DuplicateItem(String),
    #[error("query sets differ: only in run {only_run:?}, only in qrels {only_qrels:?}")]
    QueryMismatch { only_run: Vec<String>, only_qrels: Vec<String> },
    #[error("run `{0}` has no ranking for the selector's configuration list")]
    MissingRun(String),
    #[error("run file mixes tags `{0}` and `{1}`")]
    MixedTags(String, String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

/// Graded judgments; grades of 1 or more count as relevant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QrelSet {
    grades: BTreeMap<String, BTreeMap<String, u32>>,
}

impl QrelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the previous grade when the pair was already judged.
    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) -> Option<u32> {
        self.grades.entry(query_id.to_owned()).or_default().insert(doc_id.to_owned(), grade)
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.grades.get(query_id)?.get(doc_id).copied()
    }

    pub fn is_relevant(&self, query_id: &str, doc_id: &str) -> bool {
        self.grade(query_id, doc_id).is_some_and(|g| g >= 1)
    }

    pub fn relevant_count(&self, query_id: &str) -> usize {
        self.grades.get(query_id).map_or(0, |m| m.values().filter(|&&g| g >= 1).count())
    }

    pub fn judged_count(&self, query_id: &str) -> usize {
        self.grades.get(query_id).map_or(0, BTreeMap::len)
    }

    /// Query ids in ascending order.
    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.grades.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.grades.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.grades.is_empty()
    }
}

/// Parses `qid iter docid grade` lines.
pub fn parse_qrels<R: BufRead>(reader: R) -> Result<QrelSet, EvalError> {
    let mut qrels = QrelSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| EvalError::Malformed { source_name: "qrels", line: lineno, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [qid, _iter, doc, grade] = fields[..] else {
            return Err(malformed(format!("expected 4 columns, found {}", fields.len())));
        };
        let grade: i64 = grade.parse().map_err(|_| malformed(format!("grade `{grade}` is not an integer")))?;
        let grade = u32::try_from(grade).map_err(|_| malformed(format!("grade {grade} is negative")))?;
        if let Some(old) = qrels.insert(qid, doc, grade) {
            log::warn!("qrels line {lineno}: ({qid}, {doc}) judged again, {old} replaced by {grade}");
        }
    }
    Ok(qrels)
}

/// Parsed TREC run: ranked external doc ids per query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrecRun {
    pub tag: Option<String>,
    pub rankings: BTreeMap<String, Vec<String>>,
}

/// Parses `qid Q0 docid rank score tag` lines. Documents are ordered by the
/// rank column.
pub fn parse_trec_run<R: BufRead>(reader: R) -> Result<TrecRun, EvalError> {
    let mut tag: Option<String> = None;
    let mut rows: BTreeMap<String, Vec<(u64, String)>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| EvalError::Malformed { source_name: "run", line: lineno, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [qid, _q0, doc, rank, score, t] = fields[..] else {
            return Err(malformed(format!("expected 6 columns, found {}", fields.len())));
        };
        let rank: u64 = rank.parse().map_err(|_| malformed(format!("rank `{rank}` is not an integer")))?;
        score.parse::<f64>().map_err(|_| malformed(format!("score `{score}` is not a number")))?;
        match &tag {
            None => tag = Some(t.to_owned()),
            Some(prev) if prev != t => return Err(EvalError::MixedTags(prev.clone(), t.to_owned())),
            Some(_) => {}
        }
        rows.entry(qid.to_owned()).or_default().push((rank, doc.to_owned()));
    }
    let rankings = rows
        .into_iter()
        .map(|(q, mut v)| {
            v.sort();
            (q, v.into_iter().map(|(_, d)| d).collect())
        })
        .collect();
    Ok(TrecRun { tag, rankings })
}

/// Converts retrieval output to the form the metrics consume.
pub fn rankings_from_lists(lists: &[RankedList]) -> BTreeMap<String, Vec<String>> {
    lists.iter().map(|l| (l.query_id.clone(), l.items.iter().map(|d| d.external_id.clone()).collect())).collect()
}

/// `(1/R) Σ_{i relevant} precision@i` with `R` the number of relevant
/// documents in the qrels.
pub fn average_precision<S: AsRef<str>>(ranking: &[S], qrels: &QrelSet, query_id: &str) -> Result<f64, EvalError> {
    let total = qrels.relevant_count(query_id);
    if total == 0 {
        return Err(EvalError::NoRelevant(query_id.to_owned()));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in ranking.iter().enumerate() {
        if qrels.is_relevant(query_id, d.as_ref()) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapScore {
    pub map: f64,
    /// AP per evaluated query.
    pub per_query: BTreeMap<String, f64>,
    /// Judged queries without a relevant document.
    pub excluded: Vec<String>,
}

/// Mean AP over the judged queries that have a relevant document. The run
/// and the qrels must cover the same queries; a query the run omits would
/// otherwise count silently.
pub fn map_score(rankings: &BTreeMap<String, Vec<String>>, qrels: &QrelSet) -> Result<MapScore, EvalError> {
    let run_q: BTreeSet<&str> = rankings.keys().map(String::as_str).collect();
    let qrel_q: BTreeSet<&str> = qrels.queries().collect();
    if run_q != qrel_q {
        return Err(EvalError::QueryMismatch {
            only_run: run_q.difference(&qrel_q).map(|s| s.to_string()).collect(),
            only_qrels: qrel_q.difference(&run_q).map(|s| s.to_string()).collect(),
        });
    }
    let mut per_query = BTreeMap::new();
    let mut excluded = Vec::new();
    for (q, ranking) in rankings {
        match average_precision(ranking, qrels, q) {
            Ok(ap) => {
                per_query.insert(q.clone(), ap);
            }
            Err(EvalError::NoRelevant(q)) => {
                log::warn!("query {q} has no relevant documents; excluded from MAP");
                excluded.push(q);
            }
            Err(e) => return Err(e),
        }
    }
    if per_query.is_empty() {
        return Err(EvalError::NoEvaluableQueries);
    }
    let map = per_query.values().sum::<f64>() / per_query.len() as f64;
    Ok(MapScore { map, per_query, excluded })
}

/// `map_i / map_j`.
pub fn map_lift(map_i: f64, map_j: f64) -> Result<f64, EvalError> {
    if map_j == 0.0 {
        return Err(EvalError::UndefinedLift);
    }
    Ok(map_i / map_j)
}

/// Expected MAP of picking a configuration uniformly at random.
pub fn random_baseline_map(maps: &[f64]) -> f64 {
    maps.iter().sum::<f64>() / maps.len() as f64
}

/// Kendall's τ-a between two total orders of the same items.
pub fn kendall_tau<S: AsRef<str>>(order_a: &[S], order_b: &[S]) -> Result<f64, EvalError> {
    let pos_b = positions(order_b)?;
    let pos_a = positions(order_a)?;
    if pos_a.len() != pos_b.len() || pos_a.keys().any(|k| !pos_b.contains_key(k)) {
        let a: BTreeSet<&str> = pos_a.keys().copied().collect();
        let b: BTreeSet<&str> = pos_b.keys().copied().collect();
        return Err(EvalError::ItemMismatch {
            only_a: a.difference(&b).map(|s| s.to_string()).collect(),
            only_b: b.difference(&a).map(|s| s.to_string()).collect(),
        });
    }
    let n = order_a.len();
    if n < 2 {
        return Ok(1.0);
    }
    let ranks: Vec<usize> = order_a.iter().map(|x| pos_b[x.as_ref()]).collect();
    let mut score: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            score += if ranks[i] < ranks[j] { 1 } else { -1 };
        }
    }
    Ok(score as f64 / (n * (n - 1) / 2) as f64)
}

fn positions<S: AsRef<str>>(order: &[S]) -> Result<BTreeMap<&str, usize>, EvalError> {
    let mut pos = BTreeMap::new();
    for (i, x) in order.iter().enumerate() {
        if pos.insert(x.as_ref(), i).is_some() {
            return Err(EvalError::DuplicateItem(x.as_ref().to_owned()));
        }
    }
    Ok(pos)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEvaluation {
    pub config: String,
    pub map: f64,
    /// 1-based position in the selector's ordering.
    pub predicted_rank: usize,
    /// 1-based position by MAP, ties broken by name.
    pub map_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub selected: String,
    pub optimal: String,
    pub map_selected: f64,
    pub map_optimal: f64,
    pub map_random: f64,
    pub lift_vs_optimal: f64,
    pub lift_vs_random: f64,
    pub kendall_tau: f64,
    pub evaluated_queries: usize,
    pub excluded_queries: Vec<String>,
    /// In the selector's order.
    pub configs: Vec<ConfigEvaluation>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Summary rows then the per-configuration table.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tvalue\n");
        out.push_str(&format!("selected\t{}\n", self.selected));
        out.push_str(&format!("optimal\t{}\n", self.optimal));
        out.push_str(&format!("map_lift_vs_optimal\t{:.6}\n", self.lift_vs_optimal));
        out.push_str(&format!("map_lift_vs_random\t{:.6}\n", self.lift_vs_random));
        out.push_str(&format!("kendall_tau\t{:.6}\n", self.kendall_tau));
        out.push_str("\nconfig\tmap\tpredicted_rank\tmap_rank\n");
        for c in &self.configs {
            out.push_str(&format!("{}\t{:.6}\t{}\t{}\n", c.config, c.map, c.predicted_rank, c.map_rank));
        }
        out
    }
}

/// Scores every configuration's rankings and compares the selector's
/// ordering (best first) against the MAP ordering.
pub fn evaluate(
    predicted_order: &[String],
    runs: &BTreeMap<String, BTreeMap<String, Vec<String>>>,
    qrels: &QrelSet,
) -> Result<EvalReport, EvalError> {
    let mut maps = Vec::with_capacity(predicted_order.len());
    let mut excluded = Vec::new();
    let mut evaluated = 0;
    for config in predicted_order {
        let rankings = runs.get(config).ok_or_else(|| EvalError::MissingRun(config.clone()))?;
        let score = map_score(rankings, qrels)?;
        excluded = score.excluded;
        evaluated = score.per_query.len();
        maps.push(score.map);
    }
    let Some(selected) = predicted_order.first() else {
        return Err(EvalError::MissingRun(String::new()));
    };
    let mut by_map: Vec<(usize, f64)> = maps.iter().copied().enumerate().collect();
    by_map.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| predicted_order[a.0].cmp(&predicted_order[b.0])));
    let map_order: Vec<&str> = by_map.iter().map(|&(i, _)| predicted_order[i].as_str()).collect();
    let mut map_rank = vec![0; maps.len()];
    for (r, &(i, _)) in by_map.iter().enumerate() {
        map_rank[i] = r + 1;
    }
    let map_selected = maps[0];
    let map_optimal = by_map[0].1;
    let map_random = random_baseline_map(&maps);
    let predicted: Vec<&str> = predicted_order.iter().map(String::as_str).collect();
    Ok(EvalReport {
        selected: selected.clone(),
        optimal: map_order[0].to_owned(),
        map_selected,
        map_optimal,
        map_random,
        lift_vs_optimal: map_lift(map_selected, map_optimal)?,
        lift_vs_random: map_lift(map_selected, map_random)?,
        kendall_tau: kendall_tau(&predicted, &map_order)?,
        evaluated_queries: evaluated,
        excluded_queries: excluded,
        configs: predicted_order
            .iter()
            .enumerate()
            .map(|(i, c)| ConfigEvaluation {
                config: c.clone(),
                map: maps[i],
                predicted_rank: i + 1,
                map_rank: map_rank[i],
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qrels(text: &str) -> QrelSet {
        parse_qrels(text.as_bytes()).unwrap()
    }

    fn ids(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn parses_qrels() {
        let q = qrels("1 0 d1 1\n");
        assert_eq!(q.grade("1", "d1"), Some(1));
        let q = qrels("1 0 d1 1\n1 0 d2 0\n2 0 d3 2\n\n");
        assert_eq!(q.relevant_count("1"), 1);
        assert_eq!(q.judged_count("1"), 2);
        assert_eq!(q.relevant_count("2"), 1);
        assert!(!q.is_relevant("1", "d2"));
        assert_eq!(q.len(), 3);
    }

    #[test]
    fn later_duplicate_overrides() {
        let q = qrels("1 0 d1 1\n1 0 d1 0\n");
        assert_eq!(q.grade("1", "d1"), Some(0));
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn malformed_qrels_name_the_line() {
        for bad in ["1 0 d1 1\n1 0 d2\n", "1 0 d1 1\n1 0 d2 x\n", "1 0 d1 1\n1 0 d2 -1\n"] {
            match parse_qrels(bad.as_bytes()) {
                Err(EvalError::Malformed { line: 2, .. }) => {}
                other => panic!("{bad:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn ap_hand_cases() {
        let q = qrels("q 0 a 1\nq 0 c 1\nq 0 b 0\n");
        let ap = average_precision(&["a", "b", "c"], &q, "q").unwrap();
        assert!((ap - 0.833333).abs() < 1e-6);
        assert_eq!(average_precision(&["a", "c"], &q, "q").unwrap(), 1.0);
        assert_eq!(average_precision(&["b", "x"], &q, "q").unwrap(), 0.0);
        assert_eq!(average_precision(&["a"], &q, "q").unwrap(), 0.5);
        assert_eq!(average_precision(&["a"], &q, "z"), Err(EvalError::NoRelevant("z".into())));
    }

    #[test]
    fn map_means_and_exclusions() {
        let q = qrels("q1 0 a 1\nq1 0 b 1\nq2 0 c 1\nq3 0 d 0\n");
        let runs: BTreeMap<String, Vec<String>> = [("q1", ids(&["a", "x"])), ("q2", ids(&["c"])), ("q3", ids(&["d"]))]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let m = map_score(&runs, &q).unwrap();
        assert_eq!(m.map, 0.75);
        assert_eq!(m.excluded, ["q3"]);
        let mut short = runs.clone();
        short.remove("q2");
        assert_eq!(
            map_score(&short, &q).unwrap_err(),
            EvalError::QueryMismatch { only_run: vec![], only_qrels: vec!["q2".into()] }
        );
        let none = qrels("q3 0 d 0\n");
        let only3: BTreeMap<String, Vec<String>> = [("q3".to_string(), ids(&["d"]))].into();
        assert_eq!(map_score(&only3, &none).unwrap_err(), EvalError::NoEvaluableQueries);
    }

    #[test]
    fn lifts_and_random() {
        assert_eq!(map_lift(0.25, 0.20).unwrap(), 1.25);
        assert_eq!(map_lift(0.3, 0.3).unwrap(), 1.0);
        assert_eq!(map_lift(0.3, 0.0), Err(EvalError::UndefinedLift));
        assert!((random_baseline_map(&[0.2, 0.4]) - 0.3).abs() < 1e-15);
        assert_eq!(random_baseline_map(&[0.7]), 0.7);
    }

    #[test]
    fn tau_cases() {
        let x = ["a", "b", "c", "d", "e", "f"];
        let mut r = x;
        r.reverse();
        assert_eq!(kendall_tau(&x, &x).unwrap(), 1.0);
        assert_eq!(kendall_tau(&x, &r).unwrap(), -1.0);
        assert!((kendall_tau(&["1", "2", "3"], &["2", "1", "3"]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(kendall_tau(&["a", "b"], &["a", "c"]), Err(EvalError::ItemMismatch { .. })));
        assert!(matches!(kendall_tau(&["a", "a"], &["a", "b"]), Err(EvalError::DuplicateItem(_))));
    }

    #[test]
    fn parses_runs_by_rank() {
        let run = parse_trec_run("q1 Q0 b 2 0.5 t\nq1 Q0 a 1 0.9 t\nq2 Q0 c 1 1.0 t\n".as_bytes()).unwrap();
        assert_eq!(run.tag.as_deref(), Some("t"));
        assert_eq!(run.rankings["q1"], ["a", "b"]);
        assert!(matches!(parse_trec_run("q Q0 a 1 1 t\nq Q0 b 2 1 u\n".as_bytes()), Err(EvalError::MixedTags(..))));
        assert!(matches!(parse_trec_run("q Q0 a 1\n".as_bytes()), Err(EvalError::Malformed { line: 1, .. })));
    }

    #[test]
    fn evaluate_perfect_prediction() {
        let q = qrels("q 0 a 1\n");
        let mut runs = BTreeMap::new();
        runs.insert("good".to_string(), BTreeMap::from([("q".to_string(), ids(&["a"]))]));
        runs.insert("mid".to_string(), BTreeMap::from([("q".to_string(), ids(&["x", "a"]))]));
        runs.insert("bad".to_string(), BTreeMap::from([("q".to_string(), ids(&["x", "y", "a"]))]));
        let r = evaluate(&ids(&["good", "mid", "bad"]), &runs, &q).unwrap();
        assert_eq!(r.optimal, "good");
        assert_eq!(r.lift_vs_optimal, 1.0);
        assert_eq!(r.kendall_tau, 1.0);
        assert!(r.lift_vs_random > 1.0);
        let r = evaluate(&ids(&["bad", "mid", "good"]), &runs, &q).unwrap();
        assert_eq!(r.kendall_tau, -1.0);
        assert!((r.lift_vs_optimal - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.to_tsv().contains("kendall_tau\t-1.000000"));
    }
}
