//! One end-to-end run on a generated benchmark: index, select, then score
//! the selection against the planted judgments.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use simtune_core::benchmark::QueryBenchmark;
use simtune_core::eval::{evaluate, rankings_from_lists, EvalReport, QrelSet};
use simtune_core::index::{build_index, Analyzer};
use simtune_core::selector::{select, Selection};
use simtune_core::similarity::SimilarityConfig;
use simtune_core::synthetic::{generate, SyntheticParams};

pub struct Trial {
    pub selection: Selection,
    pub eval: EvalReport,
    pub index_time: Duration,
    pub select_time: Duration,
}

pub fn synthetic_trial(params: &SyntheticParams, configs: &[SimilarityConfig], k: usize) -> Trial {
    let bench = generate(params);
    let analyzer = Analyzer::english();
    let start = Instant::now();
    let index = build_index(&analyzer, bench.docs.iter().map(|d| (d.id.as_str(), d.text.as_str()))).expect("index");
    let topics = QueryBenchmark::from_pairs(format!("synthetic-{}", params.seed), &analyzer, bench.topics.clone())
        .expect("topics");
    let index_time = start.elapsed();
    let start = Instant::now();
    let selection = select(configs, &topics, &index, k).expect("select");
    let select_time = start.elapsed();
    let mut qrels = QrelSet::new();
    for (q, d, g) in &bench.qrels {
        qrels.insert(q, d, *g);
    }
    let runs: BTreeMap<String, _> =
        selection.runs.iter().map(|r| (r.config.clone(), rankings_from_lists(&r.lists))).collect();
    let order: Vec<String> = selection.report.ordering().iter().map(|s| s.to_string()).collect();
    let eval = evaluate(&order, &runs, &qrels).expect("eval");
    Trial { selection, eval, index_time, select_time }
}
