//! Selection quality on the synthetic benchmark across seeds.
//!
//! `cargo run --release -p simtune-core --example synthetic_sweep -- [seeds] [n_docs] [n_queries] [usecase1|dfr-grid+bm25]`
//!
//! `SWEEP_FIRST_SEED` sets the first seed (default 1). `SWEEP_PARAMS` takes
//! a JSON object overriding generator parameters.

use simtune_core::similarity::{enumerate_dfr_grid, usecase1_set, Similarity, SimilarityConfig};
use simtune_core::synthetic::SyntheticParams;
use simtune_testkit::trial::synthetic_trial;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seeds: u64 = args.first().map_or(5, |s| s.parse().expect("seeds"));
    let n_docs: usize = args.get(1).map_or(10_000, |s| s.parse().expect("n_docs"));
    let n_queries: usize = args.get(2).map_or(50, |s| s.parse().expect("n_queries"));
    let configs: Vec<SimilarityConfig> = match args.get(3).map_or("usecase1", String::as_str) {
        "usecase1" => usecase1_set(),
        "dfr-grid+bm25" => {
            let mut c = enumerate_dfr_grid();
            c.push(SimilarityConfig::Base(Similarity::bm25_default()));
            c
        }
        other => panic!("unknown config set {other}"),
    };
    let first: u64 = std::env::var("SWEEP_FIRST_SEED").map_or(1, |s| s.parse().expect("seed"));
    let mut taus = Vec::new();
    for seed in first..first + seeds {
        let mut params = SyntheticParams::new(seed, n_docs, n_queries);
        if let Ok(o) = std::env::var("SWEEP_PARAMS") {
            let mut v = serde_json::to_value(&params).expect("params");
            for (k, x) in serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(&o).expect("json") {
                v[k] = x;
            }
            params = serde_json::from_value(v).expect("params");
        }
        let t = synthetic_trial(&params, &configs, 100);
        println!(
            "seed {seed}: lift_random={:.4} lift_opt={:.4} tau={:.4} index={:.1}s select={:.1}s",
            t.eval.lift_vs_random,
            t.eval.lift_vs_optimal,
            t.eval.kendall_tau,
            t.index_time.as_secs_f64(),
            t.select_time.as_secs_f64()
        );
        if configs.len() <= 10 {
            for (c, u) in t.eval.configs.iter().zip(&t.selection.report.configs) {
                println!("  {:<45} util={:.5} map={:.4} map_rank={}", c.config, u.utility.utility, c.map, c.map_rank);
            }
        }
        taus.push(t.eval.kendall_tau);
    }
    println!("mean tau {:.4}", taus.iter().sum::<f64>() / taus.len() as f64);
}
