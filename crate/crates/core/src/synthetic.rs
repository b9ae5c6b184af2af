//! Seeded synthetic benchmark with planted relevance.
//!
//! Each query has a topic: a small set of terms with skewed weights.
//! Relevant documents mix topic terms into Zipfian background text at a
//! density that varies with verbosity; documents vary widely in length.
//! Distractors repeat one or two query terms without the rest of the topic,
//! and background documents occasionally mention topic terms.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;
use serde::{Deserialize, Serialize};

use crate::index::corpus::RawDocument;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const TOPICS_FILE: &str = "topics.tsv";
pub const QRELS_FILE: &str = "qrels.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    pub seed: u64,
    pub n_docs: usize,
    pub n_queries: usize,
    pub background_vocab: usize,
    pub zipf_exponent: f64,
    pub topic_terms: usize,
    pub median_doc_length: f64,
    pub doc_length_sigma: f64,
    pub relevant_per_topic: (usize, usize),
    pub distractors_per_topic: (usize, usize),
    /// Range of the fraction of a relevant document drawn from its topic.
    pub topic_density: (f64, f64),
    /// Chance that a background token is replaced by a random topic term.
    pub topic_noise: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            seed: 0,
            n_docs: 10_000,
            n_queries: 50,
            background_vocab: 20_000,
            zipf_exponent: 1.0,
            topic_terms: 12,
            median_doc_length: 200.0,
            doc_length_sigma: 0.8,
            relevant_per_topic: (8, 40),
            distractors_per_topic: (10, 40),
            topic_density: (0.1, 0.4),
            topic_noise: 0.002,
        }
    }
}

impl SyntheticParams {
    pub fn new(seed: u64, n_docs: usize, n_queries: usize) -> Self {
        Self { seed, n_docs, n_queries, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBenchmark {
    pub params: SyntheticParams,
    pub docs: Vec<RawDocument>,
    /// `(query id, text)` in id order.
    pub topics: Vec<(String, String)>,
    /// `(query id, doc id, grade)` sorted by query then doc.
    pub qrels: Vec<(String, String, u32)>,
}

struct Topic {
    terms: Vec<String>,
    weights: WeightedIndex<f64>,
}

enum Kind {
    Background,
    Relevant { topic: usize, density: f64 },
    Distractor { topic: usize, terms: Vec<usize>, density: f64 },
}

/// Deterministic in `params`.
pub fn generate(params: &SyntheticParams) -> SyntheticBenchmark {
    assert!(params.n_docs > 0 && params.n_queries > 0, "sizes must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let background: Vec<String> = (1..=params.background_vocab).map(|r| format!("b{r}")).collect();
    let zipf = WeightedIndex::new((1..=params.background_vocab).map(|r| (r as f64).powf(-params.zipf_exponent)))
        .expect("positive weights");
    let topics: Vec<Topic> = (0..params.n_queries)
        .map(|t| Topic {
            terms: (0..params.topic_terms).map(|j| format!("t{t}x{j}")).collect(),
            weights: WeightedIndex::new((1..=params.topic_terms).map(|r| 1.0 / r as f64)).expect("positive weights"),
        })
        .collect();

    let query_terms: Vec<Vec<usize>> = topics
        .iter()
        .map(|topic| {
            let n = rng.gen_range(2..=4).min(topic.terms.len());
            let mut picked: Vec<usize> = Vec::with_capacity(n);
            while picked.len() < n {
                let j = topic.weights.sample(&mut rng);
                if !picked.contains(&j) {
                    picked.push(j);
                }
            }
            picked
        })
        .collect();
    let query_extra: Vec<Option<usize>> =
        (0..params.n_queries).map(|_| rng.gen_bool(0.3).then(|| rng.gen_range(0..200))).collect();

    let (dlo, dhi) = params.topic_density;
    let mut planned: Vec<(usize, usize)> = (0..params.n_queries)
        .map(|_| {
            (
                rng.gen_range(params.relevant_per_topic.0..=params.relevant_per_topic.1),
                rng.gen_range(params.distractors_per_topic.0..=params.distractors_per_topic.1),
            )
        })
        .collect();
    // planted documents take at most half the corpus
    let total: usize = planned.iter().map(|&(r, d)| r + d).sum();
    let budget = params.n_docs / 2;
    if total > budget {
        let f = budget as f64 / total as f64;
        for (r, d) in &mut planned {
            *r = ((*r as f64 * f).round() as usize).max(1);
            *d = (*d as f64 * f).round() as usize;
        }
    }
    let mut kinds: Vec<Kind> = Vec::with_capacity(params.n_docs);
    for t in 0..topics.len() {
        let (n_rel, n_dis) = planned[t];
        for _ in 0..n_rel {
            kinds.push(Kind::Relevant { topic: t, density: rng.gen_range(dlo..=dhi) });
        }
        for _ in 0..n_dis {
            let k = rng.gen_range(1..=2);
            let terms = query_terms[t].choose_multiple(&mut rng, k).copied().collect();
            kinds.push(Kind::Distractor { topic: t, terms, density: rng.gen_range(dlo..=2.0 * dhi) });
        }
    }
    kinds.truncate(params.n_docs);
    while kinds.len() < params.n_docs {
        kinds.push(Kind::Background);
    }
    kinds.shuffle(&mut rng);

    let lengths = LogNormal::new(params.median_doc_length.ln(), params.doc_length_sigma).expect("valid length law");
    let mut docs = Vec::with_capacity(params.n_docs);
    let mut qrels = Vec::new();
    let mut tokens: Vec<&str> = Vec::new();
    for (i, kind) in kinds.iter().enumerate() {
        let id = format!("doc{:06}", i + 1);
        let len = (lengths.sample(&mut rng).round() as usize).clamp(10, 4000);
        tokens.clear();
        for _ in 0..len {
            let token = match kind {
                Kind::Relevant { topic, density } if rng.gen_bool(*density) => {
                    let topic = &topics[*topic];
                    topic.terms[topic.weights.sample(&mut rng)].as_str()
                }
                Kind::Distractor { topic, terms, density } if rng.gen_bool(*density) => {
                    topics[*topic].terms[*terms.choose(&mut rng).expect("non-empty")].as_str()
                }
                _ if rng.gen_bool(params.topic_noise) => {
                    let topic = topics.choose(&mut rng).expect("non-empty");
                    topic.terms[rng.gen_range(0..topic.terms.len())].as_str()
                }
                _ => background[zipf.sample(&mut rng)].as_str(),
            };
            tokens.push(token);
        }
        match kind {
            Kind::Relevant { topic, .. } => qrels.push((*topic, id.clone(), 1)),
            Kind::Distractor { topic, .. } => qrels.push((*topic, id.clone(), 0)),
            Kind::Background => {}
        }
        docs.push(RawDocument { id, text: tokens.join(" ") });
    }

    let topic_ids: Vec<String> = (0..params.n_queries).map(|t| format!("q{:03}", t + 1)).collect();
    let topics_out = topics
        .iter()
        .enumerate()
        .map(|(t, topic)| {
            let mut words: Vec<&str> = query_terms[t].iter().map(|&j| topic.terms[j].as_str()).collect();
            if let Some(b) = query_extra[t] {
                words.push(background[b].as_str());
            }
            (topic_ids[t].clone(), words.join(" "))
        })
        .collect();
    let mut qrels: Vec<(String, String, u32)> =
        qrels.into_iter().map(|(t, d, g)| (topic_ids[t].clone(), d, g)).collect();
    qrels.sort();
    SyntheticBenchmark { params: params.clone(), docs, topics: topics_out, qrels }
}

impl SyntheticBenchmark {
    /// Writes corpus, topics and qrels into `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join(CORPUS_FILE))?);
        for d in &self.docs {
            serde_json::to_writer(&mut w, &serde_json::json!({ "id": d.id, "text": d.text }))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join(TOPICS_FILE))?);
        for (q, text) in &self.topics {
            writeln!(w, "{q}\t{text}")?;
        }
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join(QRELS_FILE))?);
        for (q, d, g) in &self.qrels {
            writeln!(w, "{q} 0 {d} {g}")?;
        }
        w.flush()
    }
}
