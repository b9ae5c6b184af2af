use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use simtune_core::benchmark::{read_topics, QueryBenchmark};
use simtune_core::eval::{evaluate, parse_qrels, parse_trec_run};
use simtune_core::index::corpus::{read_corpus, CorpusFormat};
use simtune_core::index::{build_index, read_index, save_index, Analyzer, CorpusIndex};
use simtune_core::qpp::doc_focus_table;
use simtune_core::retrieval::{run_query, write_trec_run};
use simtune_core::selector::{select, Selection};
use simtune_core::similarity::{enumerate_dfr_grid, enumerate_ib_grid, usecase1_set, Similarity, SimilarityConfig};
use simtune_core::synthetic::{generate, SyntheticParams};

use crate::files::FileSource;
use crate::{
    Command, ConfigsCommand, DumpTable, EvalArgs, Format, GenSyntheticArgs, Grid, IndexArgs, QppCommand, QppDumpArgs,
    SearchArgs, SelectArgs, SweepArgs,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_JSON: &str = "selection.json";
pub const REPORT_TEXT: &str = "selection.txt";
pub const RUNS_DIR: &str = "runs";
pub const QPP_DIR: &str = "qpp";
pub const LIKELIHOODS_FILE: &str = "likelihoods.tsv";
pub const WEIGHTS_FILE: &str = "weights.tsv";
pub const EVAL_JSON: &str = "eval.json";
pub const EVAL_TSV: &str = "eval.tsv";

/// Everything that determines the output of `select`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub index: PathBuf,
    pub topics: PathBuf,
    pub configs: String,
    pub resolved_configs: Vec<String>,
    pub k: usize,
    pub out: PathBuf,
    /// Present when the inputs came from `gen-synthetic`.
    pub seed: Option<u64>,
}

pub fn run(command: &Command, files: &dyn FileSource, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Index(args) => cmd_index(args, files, stdout),
        Command::Search(args) => cmd_search(args, files, stdout),
        Command::Configs { command: ConfigsCommand::List { set, grid, usecase1: _ } } => {
            let set = match (set, grid) {
                (Some(s), _) => s.as_str(),
                (None, Some(Grid::Dfr)) => "dfr-grid",
                (None, Some(Grid::Ib)) => "ib-grid",
                (None, None) => "usecase1",
            };
            for c in resolve_configs(set, files)? {
                writeln!(stdout, "{}", c.canonical_name())?;
            }
            Ok(())
        }
        Command::Select(args) => cmd_select(args, files, stdout),
        Command::Eval(args) => cmd_eval(args, files, stdout),
        Command::GenSynthetic(args) => cmd_gen_synthetic(args, stdout),
        Command::Qpp { command: QppCommand::Dump(args) } => cmd_qpp_dump(args, files, stdout),
    }
}

/// Named set, `@file` with one spec per line, or specs separated by whitespace.
pub fn resolve_configs(spec: &str, files: &dyn FileSource) -> Result<Vec<SimilarityConfig>> {
    let configs = match spec {
        "usecase1" => usecase1_set(),
        "dfr-grid" => enumerate_dfr_grid(),
        "dfr-grid+bm25" => {
            let mut c = enumerate_dfr_grid();
            c.push(Similarity::bm25_default().into());
            c
        }
        "ib-grid" => enumerate_ib_grid(),
        _ => {
            let text = match spec.strip_prefix('@') {
                Some(path) => {
                    let mut s = String::new();
                    files.open(Path::new(path))?.read_to_string(&mut s)?;
                    s.lines().map(|l| l.split('#').next().unwrap_or("")).collect::<Vec<_>>().join(" ")
                }
                None => spec.to_owned(),
            };
            text.split_whitespace()
                .map(|s| s.parse::<SimilarityConfig>().with_context(|| format!("config `{s}`")))
                .collect::<Result<_>>()?
        }
    };
    if configs.is_empty() {
        bail!("config set `{spec}` is empty");
    }
    Ok(configs)
}

fn load(files: &dyn FileSource, path: &Path) -> Result<CorpusIndex> {
    let mut reader = files.open(path)?;
    read_index(&mut reader).with_context(|| format!("reading index {}", path.display()))
}

fn load_topics(files: &dyn FileSource, path: &Path, analyzer: &Analyzer) -> Result<QueryBenchmark> {
    let id = path.file_stem().map_or_else(|| "topics".into(), |s| s.to_string_lossy().into_owned());
    read_topics(id, analyzer, files.open(path)?).with_context(|| format!("reading topics {}", path.display()))
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

fn cmd_index(args: &IndexArgs, files: &dyn FileSource, stdout: &mut dyn Write) -> Result<()> {
    let format = match args.format {
        Format::Jsonl => CorpusFormat::Jsonl,
        Format::Trec => CorpusFormat::Trec,
    };
    let docs = read_corpus(files.open(&args.corpus)?, format)
        .with_context(|| format!("reading corpus {}", args.corpus.display()))?;
    let index = build_index(&Analyzer::english(), docs.iter().map(|d| (d.id.as_str(), d.text.as_str())))?;
    save_index(&index, &args.out).with_context(|| format!("writing index {}", args.out.display()))?;
    writeln!(
        stdout,
        "N={} vocab={} avg_doc_length={:.3}",
        index.num_docs(),
        index.vocab_size(),
        index.avg_doc_length()
    )?;
    Ok(())
}

fn cmd_search(args: &SearchArgs, files: &dyn FileSource, stdout: &mut dyn Write) -> Result<()> {
    let index = load(files, &args.index)?;
    let config: SimilarityConfig = args.config.parse()?;
    let query = Analyzer::english().analyze(&args.query.join(" "));
    let list = run_query(&index, &config, "query", &query, args.k)?;
    write_trec_run(stdout, &list)?;
    Ok(())
}

struct Sweep {
    selection: Selection,
    manifest_configs: Vec<String>,
    k: usize,
}

fn sweep(args: &SweepArgs, files: &dyn FileSource) -> Result<Sweep> {
    let analyzer = Analyzer::english();
    let configs = resolve_configs(&args.configs, files)?;
    let index = load(files, &args.index)?;
    let topics = load_topics(files, &args.topics, &analyzer)?;
    let k = usize::try_from(args.k)?;
    let pool = thread_pool(args.jobs)?;
    let selection = pool.install(|| select(&configs, &topics, &index, k))?;
    let mut manifest_configs: Vec<String> = configs.iter().map(SimilarityConfig::canonical_name).collect();
    manifest_configs.sort();
    Ok(Sweep { selection, manifest_configs, k })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_likelihoods(w: &mut dyn Write, selection: &Selection) -> Result<()> {
    writeln!(w, "query_id\tconfig\tlikelihood\tnqc\tcorpus_score")?;
    for r in &selection.table {
        writeln!(w, "{}\t{}\t{:e}\t{:e}\t{:e}", r.query_id, r.config, r.likelihood, r.nqc, r.corpus_score)?;
    }
    Ok(())
}

fn write_weights(w: &mut dyn Write, selection: &Selection) -> Result<()> {
    writeln!(w, "query_id\tdifficulty\tdifficulty_rank\tweight")?;
    for q in selection.report.query_weights.ranked() {
        writeln!(w, "{}\t{:e}\t{}\t{:e}", q.query_id, q.difficulty, q.difficulty_rank, q.weight)?;
    }
    Ok(())
}

/// Run file name for the `i`-th configuration in name order.
pub fn run_file_name(i: usize, total: usize) -> String {
    let width = total.to_string().len().max(3);
    format!("{:0width$}.run", i + 1)
}

fn cmd_select(args: &SelectArgs, files: &dyn FileSource, stdout: &mut dyn Write) -> Result<()> {
    let Sweep { selection, manifest_configs, k } = sweep(&args.sweep, files)?;
    let out = &args.out;
    fs::create_dir_all(out.join(RUNS_DIR)).with_context(|| format!("creating {}", out.display()))?;
    fs::create_dir_all(out.join(QPP_DIR))?;

    let manifest = RunManifest {
        index: args.sweep.index.clone(),
        topics: args.sweep.topics.clone(),
        configs: args.sweep.configs.clone(),
        resolved_configs: manifest_configs,
        k,
        out: out.clone(),
        seed: None,
    };
    fs::write(out.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    fs::write(out.join(REPORT_JSON), selection.report.to_json() + "\n")?;
    fs::write(out.join(REPORT_TEXT), selection.report.to_text())?;
    for (i, runs) in selection.runs.iter().enumerate() {
        let mut w = create(&out.join(RUNS_DIR).join(run_file_name(i, selection.runs.len())))?;
        for list in &runs.lists {
            write_trec_run(&mut w, list)?;
        }
        w.flush()?;
    }
    let mut w = create(&out.join(QPP_DIR).join(LIKELIHOODS_FILE))?;
    write_likelihoods(&mut w, &selection)?;
    w.flush()?;
    let mut w = create(&out.join(QPP_DIR).join(WEIGHTS_FILE))?;
    write_weights(&mut w, &selection)?;
    w.flush()?;

    log::info!("wrote {}", out.display());
    writeln!(stdout, "{}", selection.report.chosen)?;
    Ok(())
}

fn cmd_qpp_dump(args: &QppDumpArgs, files: &dyn FileSource, stdout: &mut dyn Write) -> Result<()> {
    let mut sink: Box<dyn Write + '_> = match &args.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(&mut *stdout),
    };
    match args.table {
        DumpTable::Focus => {
            let index = load(files, &args.sweep.index)?;
            let focus = thread_pool(args.sweep.jobs)?.install(|| doc_focus_table(&index));
            writeln!(sink, "doc_id\tfocus")?;
            for (d, f) in index.docs().iter().zip(focus) {
                writeln!(sink, "{}\t{:e}", d.external_id, f)?;
            }
        }
        DumpTable::Likelihoods => write_likelihoods(&mut sink, &sweep(&args.sweep, files)?.selection)?,
        DumpTable::Weights => write_weights(&mut sink, &sweep(&args.sweep, files)?.selection)?,
    }
    sink.flush()?;
    Ok(())
}

fn cmd_eval(args: &EvalArgs, files: &dyn FileSource, stdout: &mut dyn Write) -> Result<()> {
    let report_path = args.run_dir.join(REPORT_JSON);
    let report: serde_json::Value = serde_json::from_reader(files.open(&report_path)?)
        .with_context(|| format!("reading {}", report_path.display()))?;
    let order: Vec<String> = report["configs"]
        .as_array()
        .context("report has no `configs` list")?
        .iter()
        .map(|c| c["config"].as_str().map(str::to_owned).context("config entry without a name"))
        .collect::<Result<_>>()?;
    let mut queries: Vec<String> = report["query_weights"]
        .as_array()
        .context("report has no `query_weights` list")?
        .iter()
        .filter_map(|q| q["query_id"].as_str().map(str::to_owned))
        .collect();
    queries.extend(
        report["skipped_queries"].as_array().into_iter().flatten().filter_map(|q| q.as_str().map(str::to_owned)),
    );

    let mut runs: BTreeMap<String, BTreeMap<String, Vec<String>>> = BTreeMap::new();
    for path in files.list_dir(&args.run_dir.join(RUNS_DIR))? {
        if path.extension().and_then(|e| e.to_str()) != Some("run") {
            continue;
        }
        let run = parse_trec_run(files.open(&path)?).with_context(|| format!("reading {}", path.display()))?;
        let Some(tag) = run.tag else {
            log::warn!("{} is empty", path.display());
            continue;
        };
        if runs.insert(tag.clone(), run.rankings).is_some() {
            bail!("two run files carry tag `{tag}`");
        }
    }
    // a configuration that retrieved nothing for a query writes no lines for it
    for rankings in runs.values_mut() {
        for q in &queries {
            rankings.entry(q.clone()).or_default();
        }
    }
    let qrels = parse_qrels(files.open(&args.qrels)?).with_context(|| format!("reading {}", args.qrels.display()))?;
    let eval = evaluate(&order, &runs, &qrels)?;

    let out = args.out.as_ref().unwrap_or(&args.run_dir);
    fs::create_dir_all(out)?;
    fs::write(out.join(EVAL_JSON), eval.to_json() + "\n")?;
    fs::write(out.join(EVAL_TSV), eval.to_tsv())?;
    writeln!(
        stdout,
        "selected={} optimal={} lift_vs_optimal={:.6} lift_vs_random={:.6} kendall_tau={:.6}",
        eval.selected, eval.optimal, eval.lift_vs_optimal, eval.lift_vs_random, eval.kendall_tau
    )?;
    Ok(())
}

fn cmd_gen_synthetic(args: &GenSyntheticArgs, stdout: &mut dyn Write) -> Result<()> {
    let params = SyntheticParams::new(args.seed, usize::try_from(args.n_docs)?, usize::try_from(args.n_queries)?);
    let bench = generate(&params);
    bench.write_to(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    fs::write(args.out.join("params.json"), serde_json::to_string_pretty(&params)? + "\n")?;
    writeln!(stdout, "docs={} queries={} judgments={}", bench.docs.len(), bench.topics.len(), bench.qrels.len())?;
    Ok(())
}
