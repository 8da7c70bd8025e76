//! Full-ranking top-K evaluation (Recall@K, NDCG@K) with history masking.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};

pub const DEFAULT_KS: [usize; 3] = [10, 20, 50];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub recall: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ks: Vec<usize>,
    /// Empty when no user had ground truth.
    pub at: BTreeMap<usize, Metrics>,
    pub num_evaluated_users: usize,
}

impl MetricsReport {
    pub fn recall(&self, k: usize) -> Option<f64> {
        self.at.get(&k).map(|m| m.recall)
    }

    pub fn ndcg(&self, k: usize) -> Option<f64> {
        self.at.get(&k).map(|m| m.ndcg)
    }
}

/// Dot product of user `u` with every item row of `output`; items present in
/// any of `masks` for this user score `-inf`.
pub fn score_all_items(
    output: ArrayView2<'_, f64>,
    num_users: usize,
    user: usize,
    masks: &[&InteractionDataset],
) -> Vec<f64> {
    let user_row = output.row(user);
    let items = output.slice(ndarray::s![num_users.., ..]);
    let mut scores = items.dot(&user_row).to_vec();
    for m in masks {
        for &i in m.items_of(user) {
            scores[i as usize] = f64::NEG_INFINITY;
        }
    }
    scores
}

fn rank_order(scores: &[f64], a: usize, b: usize) -> Ordering {
    scores[b]
        .partial_cmp(&scores[a])
        .unwrap_or(Ordering::Equal)
        .then(a.cmp(&b))
}

/// Indices of the `k` highest finite scores, best first, ties by ascending index.
pub fn top_k(scores: &[f64], k: usize) -> Vec<u32> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] > f64::NEG_INFINITY).collect();
    let k = k.min(idx.len());
    if k == 0 {
        return Vec::new();
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, |&a, &b| rank_order(scores, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable_by(|&a, &b| rank_order(scores, a, b));
    idx.into_iter().map(|i| i as u32).collect()
}

/// Fraction of `truth` (sorted) found in the first `k` of `ranked`.
pub fn recall_at_k(ranked: &[u32], truth: &[u32], k: usize) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = ranked.iter().take(k).filter(|i| truth.binary_search(i).is_ok()).count();
    hits as f64 / truth.len() as f64
}

/// Binary-relevance NDCG with `log2(rank + 1)` discounts.
pub fn ndcg_at_k(ranked: &[u32], truth: &[u32], k: usize) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| truth.binary_search(i).is_ok())
        .map(|(p, _)| 1.0 / ((p + 2) as f64).log2())
        .sum();
    let idcg: f64 = (0..k.min(truth.len())).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
    dcg / idcg
}

fn evaluate_by<F>(eval_split: &InteractionDataset, ks: &[usize], ranking: F) -> Result<MetricsReport>
where
    F: Fn(usize, usize) -> Vec<u32> + Sync,
{
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::invalid("K list must be non-empty and positive"));
    }
    let max_k = *ks.iter().max().unwrap();
    let users: Vec<usize> = (0..eval_split.num_users())
        .filter(|&u| !eval_split.items_of(u).is_empty())
        .collect();
    let per_user: Vec<Vec<(f64, f64)>> = users
        .par_iter()
        .map(|&u| {
            let truth = eval_split.items_of(u);
            let ranked = ranking(u, max_k);
            ks.iter()
                .map(|&k| (recall_at_k(&ranked, truth, k), ndcg_at_k(&ranked, truth, k)))
                .collect()
        })
        .collect();
    let mut at = BTreeMap::new();
    if !users.is_empty() {
        let n = users.len() as f64;
        for (j, &k) in ks.iter().enumerate() {
            let (r, g) = per_user
                .iter()
                .fold((0.0, 0.0), |(r, g), row| (r + row[j].0, g + row[j].1));
            at.insert(
                k,
                Metrics {
                    recall: r / n,
                    ndcg: g / n,
                },
            );
        }
    }
    Ok(MetricsReport {
        ks: ks.to_vec(),
        at,
        num_evaluated_users: users.len(),
    })
}

/// Ranks every unmasked item for every user with ground truth in `eval_split`
/// and averages the metrics over those users.
pub fn evaluate(
    output: ArrayView2<'_, f64>,
    num_users: usize,
    eval_split: &InteractionDataset,
    masks: &[&InteractionDataset],
    ks: &[usize],
) -> Result<MetricsReport> {
    if output.nrows() != eval_split.num_nodes() {
        return Err(Error::shape(
            format!("{} rows", eval_split.num_nodes()),
            format!("{} rows", output.nrows()),
        ));
    }
    evaluate_by(eval_split, ks, |u, k| {
        top_k(&score_all_items(output, num_users, u, masks), k)
    })
}

/// Items by descending train count, ties by ascending index.
pub fn popularity_baseline(train: &InteractionDataset) -> Vec<u32> {
    let counts: Vec<f64> = train.item_degrees().into_iter().map(|c| c as f64).collect();
    top_k(&counts, counts.len())
}

/// Same protocol as [`evaluate`] but every user gets the popularity ranking.
pub fn evaluate_popularity(
    train: &InteractionDataset,
    eval_split: &InteractionDataset,
    masks: &[&InteractionDataset],
    ks: &[usize],
) -> Result<MetricsReport> {
    let counts: Vec<f64> = train.item_degrees().into_iter().map(|c| c as f64).collect();
    evaluate_by(eval_split, ks, |u, k| {
        let mut scores = counts.clone();
        for m in masks {
            for &i in m.items_of(u) {
                scores[i as usize] = f64::NEG_INFINITY;
            }
        }
        top_k(&scores, k)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn scores_with_mask() {
        // d' = 1: user 2.0, items 3, -1, 5 with item 0 masked
        let out = array![[2.0], [3.0], [-1.0], [5.0]];
        let mask = InteractionDataset::from_indices(1, 3, [(0, 0)]).unwrap();
        let s = score_all_items(out.view(), 1, 0, &[&mask]);
        assert_eq!(s, vec![f64::NEG_INFINITY, -2.0, 10.0]);
    }

    #[test]
    fn zero_user_scores_zero() {
        let out = array![[0.0, 0.0], [1.0, 2.0], [3.0, -4.0]];
        assert_eq!(score_all_items(out.view(), 1, 0, &[]), vec![0.0, 0.0]);
    }

    #[test]
    fn top_k_ties_and_masks() {
        let s = [1.0, 3.0, 3.0, f64::NEG_INFINITY, 2.0];
        assert_eq!(top_k(&s, 3), vec![1, 2, 4]);
        assert_eq!(top_k(&s, 10), vec![1, 2, 4, 0]);
        assert!(top_k(&s, 0).is_empty());
    }

    #[test]
    fn recall_examples() {
        assert_eq!(recall_at_k(&[4, 2, 9], &[2, 4], 3), 1.0);
        assert_eq!(recall_at_k(&[1, 3], &[1, 2], 2), 0.5);
        assert_eq!(recall_at_k(&[5, 6], &[1, 2], 2), 0.0);
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg_at_k(&[7, 1], &[7], 2), 1.0);
        assert_relative_eq!(ndcg_at_k(&[1, 7], &[7], 2), 1.0 / 3f64.log2(), epsilon = 1e-15);
        assert_relative_eq!(ndcg_at_k(&[1, 7], &[7], 2), 0.63093, epsilon = 1e-5);
        assert_eq!(ndcg_at_k(&[1, 2], &[7], 2), 0.0);
    }

    #[test]
    fn popularity_order() {
        let ds = InteractionDataset::from_indices(
            5,
            3,
            [(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (0, 1), (0, 2), (1, 2), (2, 2)],
        )
        .unwrap();
        assert_eq!(popularity_baseline(&ds), vec![0, 2, 1]);
        let flat = InteractionDataset::from_indices(1, 3, [(0, 0), (0, 1), (0, 2)]).unwrap();
        assert_eq!(popularity_baseline(&flat), vec![0, 1, 2]);
    }

    #[test]
    fn empty_eval_split() {
        let out = ndarray::Array2::<f64>::zeros((3, 2));
        let empty = InteractionDataset::from_indices(1, 2, []).unwrap();
        let r = evaluate(out.view(), 1, &empty, &[], &DEFAULT_KS).unwrap();
        assert_eq!(r.num_evaluated_users, 0);
        assert!(r.at.is_empty());
        assert!(r.recall(20).is_none());
    }

    #[test]
    fn rejects_bad_ks() {
        let out = ndarray::Array2::<f64>::zeros((3, 2));
        let ds = InteractionDataset::from_indices(1, 2, [(0, 1)]).unwrap();
        assert!(evaluate(out.view(), 1, &ds, &[], &[]).is_err());
        assert!(evaluate(out.view(), 1, &ds, &[], &[0]).is_err());
    }

    #[test]
    fn hand_built_three_users() {
        // 3 users, 4 items, d = 1. User scores rank items by u * item.
        let out = array![[1.0], [-1.0], [0.0], [4.0], [3.0], [2.0], [1.0]];
        let train = InteractionDataset::from_indices(3, 4, [(0, 0), (1, 3), (2, 0)]).unwrap();
        let test = InteractionDataset::from_indices(3, 4, [(0, 1), (1, 0), (1, 2)]).unwrap();
        let r = evaluate(out.view(), 3, &test, &[&train], &[1, 2]).unwrap();
        // user 0 ranks (masked 0) -> 1,2,3 : hit at rank 1 -> recall@1 = 1, ndcg 1
        // user 1 ranks (masked 3) -> 2,1,0 : truth {0,2}: @1 recall .5 ndcg 1; @2 recall .5, ndcg 1/(1+1/log2 3)
        // user 2 has no test items, skipped
        assert_eq!(r.num_evaluated_users, 2);
        assert_relative_eq!(r.recall(1).unwrap(), 0.75, epsilon = 1e-15);
        assert_relative_eq!(r.ndcg(1).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.recall(2).unwrap(), 0.75, epsilon = 1e-15);
        let user1_ndcg2 = 1.0 / (1.0 + 1.0 / 3f64.log2());
        assert_relative_eq!(r.ndcg(2).unwrap(), (1.0 + user1_ndcg2) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn report_serializes() {
        let mut at = BTreeMap::new();
        at.insert(
            20,
            Metrics {
                recall: 0.5,
                ndcg: 0.25,
            },
        );
        let r = MetricsReport {
            ks: vec![20],
            at,
            num_evaluated_users: 3,
        };
        let json = serde_json::to_string(&r).unwrap();
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
