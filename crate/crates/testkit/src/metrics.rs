//! Direct-from-definition evaluation metrics.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

/// Average precision with precision@i recounted from scratch at every hit.
pub fn naive_ap(ranking: &[String], grades: &BTreeMap<String, u32>) -> Option<f64> {
    let relevant = |d: &String| grades.get(d).is_some_and(|&g| g >= 1);
    let total = grades.values().filter(|&&g| g >= 1).count();
    if total == 0 {
        return None;
    }
    let mut sum = 0.0;
    for i in 0..ranking.len() {
        if relevant(&ranking[i]) {
            let hits = ranking[..=i].iter().filter(|d| relevant(d)).count();
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / total as f64)
}

/// Mean of [`naive_ap`] over the judged queries that have a relevant document.
pub fn naive_map(
    rankings: &BTreeMap<String, Vec<String>>,
    qrels: &BTreeMap<String, BTreeMap<String, u32>>,
) -> Option<f64> {
    let aps: Vec<f64> = qrels
        .iter()
        .filter_map(|(q, grades)| naive_ap(rankings.get(q).map_or(&[][..], Vec::as_slice), grades))
        .collect();
    if aps.is_empty() {
        None
    } else {
        Some(aps.iter().sum::<f64>() / aps.len() as f64)
    }
}

/// τ-a by enumerating every pair and locating both items in `b` by search.
pub fn naive_tau(a: &[String], b: &[String]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let pos = |x: &String| b.iter().position(|y| y == x).expect("same items");
    let (mut concordant, mut discordant) = (0i64, 0i64);
    for i in 0..n {
        for j in 0..n {
            if i < j {
                if pos(&a[i]) < pos(&a[j]) {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
    }
    (concordant - discordant) as f64 / (n * (n - 1) / 2) as f64
}

/// Run rankings and graded judgments over a shared document pool. Queries
/// may have no relevant document, empty rankings, or unjudged retrieved
/// documents.
pub type EvalFixture = (BTreeMap<String, Vec<String>>, BTreeMap<String, BTreeMap<String, u32>>);

pub fn random_eval_fixture<R: Rng>(rng: &mut R) -> EvalFixture {
    let pool: Vec<String> = (0..rng.gen_range(1..60)).map(|i| format!("doc{i}")).collect();
    let mut rankings = BTreeMap::new();
    let mut qrels = BTreeMap::new();
    for q in 0..rng.gen_range(1..12) {
        let qid = format!("q{q}");
        let depth = rng.gen_range(0..=pool.len());
        rankings.insert(qid.clone(), pool.choose_multiple(rng, depth).cloned().collect());
        let judged = rng.gen_range(1..=pool.len());
        let grades = pool.choose_multiple(rng, judged).map(|d| (d.clone(), rng.gen_range(0..=2))).collect();
        qrels.insert(qid, grades);
    }
    (rankings, qrels)
}

/// A random permutation of `n` distinct labels, paired with a second one.
pub fn random_orders<R: Rng>(rng: &mut R, n: usize) -> (Vec<String>, Vec<String>) {
    let a: Vec<String> = (0..n).map(|i| format!("cfg{i}")).collect();
    let mut b = a.clone();
    b.shuffle(rng);
    let mut a = a;
    a.shuffle(rng);
    (a, b)
}
