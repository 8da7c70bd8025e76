//! Invariants of the data pipeline, ranking metrics and correlation helpers.

use std::collections::HashSet;

use proptest::prelude::*;
use specgcf::dataset::{sample_batch, sample_negative, split_dataset, IdMap};
use specgcf::evaluation::{evaluate, ndcg_at_k, recall_at_k, top_k};
use specgcf::rng::{stream, Stream};
use specgcf::spectral::pearson_correlation;
use specgcf::synthetic::random_bipartite;
use specgcf::InteractionDataset;

fn dataset(seed: u64, users: usize, items: usize, p: f64) -> InteractionDataset {
    random_bipartite(users, items, p, &mut stream(seed, Stream::Synthetic)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_is_a_partition(seed in any::<u64>(), users in 2usize..30, items in 2usize..30,
                            p in 0.05f64..0.8, train in 0.5f64..0.85) {
        let ds = dataset(seed, users, items, p);
        let valid = (1.0 - train) / 2.0;
        let s = split_dataset(&ds, train, valid, seed).unwrap();
        prop_assert_eq!(s.total_len(), ds.len());
        let mut all = HashSet::new();
        for part in [&s.train, &s.valid, &s.test] {
            for &pair in part.pairs() {
                prop_assert!(all.insert(pair), "pair {:?} in two splits", pair);
            }
        }
        let orig: HashSet<_> = ds.pairs().iter().copied().collect();
        prop_assert_eq!(all, orig);
        // every user with interactions keeps at least one in train
        for u in 0..ds.num_users() {
            prop_assert!(ds.items_of(u).is_empty() || !s.train.items_of(u).is_empty());
        }
        // the same seed reproduces the split
        let again = split_dataset(&ds, train, valid, seed).unwrap();
        prop_assert_eq!(again.test.pairs(), s.test.pairs());
    }

    #[test]
    fn negatives_never_collide(seed in any::<u64>(), users in 1usize..20, items in 2usize..20, p in 0.05f64..0.95) {
        let ds = dataset(seed, users, items, p);
        prop_assume!(!ds.is_empty());
        let mut rng = stream(seed, Stream::Batch);
        let batch = sample_batch(&ds, 64, &mut rng).unwrap();
        for t in &batch.triples {
            prop_assert!(ds.contains(t.user as usize, t.pos));
            prop_assert!(!ds.contains(t.user as usize, t.neg));
        }
        prop_assert_eq!(batch.triples.len() + batch.skipped, 64);
    }

    #[test]
    fn reindexing_is_a_bijection(raw in proptest::collection::vec("[a-z0-9]{1,6}", 1..60)) {
        let mut map = IdMap::new();
        let codes: Vec<u32> = raw.iter().map(|r| map.encode(r)).collect();
        let distinct: HashSet<&String> = raw.iter().collect();
        prop_assert_eq!(map.len(), distinct.len());
        for (r, &c) in raw.iter().zip(&codes) {
            prop_assert_eq!(map.decode(c), Some(r.as_str()));
            prop_assert_eq!(map.get(r), Some(c));
            prop_assert!((c as usize) < map.len());
        }
    }

    #[test]
    fn top_k_is_prefix_of_full_sort(scores in proptest::collection::vec(prop_oneof![
                                        4 => (-5i32..5).prop_map(f64::from),
                                        1 => Just(f64::NEG_INFINITY)], 0..40),
                                    k in 0usize..45) {
        let mut full: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].is_finite()).collect();
        full.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
        let want: Vec<u32> = full.into_iter().take(k).map(|i| i as u32).collect();
        prop_assert_eq!(top_k(&scores, k), want);
    }

    #[test]
    fn metrics_bounded_and_monotone(ranked in proptest::collection::vec(0u32..30, 0..30),
                                    truth in proptest::collection::btree_set(0u32..30, 1..10)) {
        let mut seen = HashSet::new();
        let ranked: Vec<u32> = ranked.into_iter().filter(|i| seen.insert(*i)).collect();
        let truth: Vec<u32> = truth.into_iter().collect();
        let mut prev = 0.0;
        for k in 1..=30 {
            let r = recall_at_k(&ranked, &truth, k);
            let n = ndcg_at_k(&ranked, &truth, k);
            prop_assert!((0.0..=1.0).contains(&r));
            prop_assert!((0.0..=1.0 + 1e-12).contains(&n));
            prop_assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn pearson_is_affine_invariant(xs in proptest::collection::vec(-10.0f64..10.0, 3..30),
                                   ys in proptest::collection::vec(-10.0f64..10.0, 3..30),
                                   scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let n = xs.len().min(ys.len());
        let (xs, ys) = (&xs[..n], &ys[..n]);
        if let Ok(r) = pearson_correlation(xs, ys) {
            let moved: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
            let flipped: Vec<f64> = xs.iter().map(|x| -scale * x + shift).collect();
            prop_assert!((pearson_correlation(&moved, ys).unwrap() - r).abs() < 1e-9);
            prop_assert!((pearson_correlation(&flipped, ys).unwrap() + r).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }
}

#[test]
fn negatives_are_uniform_over_unobserved_items() {
    let items = 50;
    let observed = [3u32, 7, 8, 20, 41];
    let ds = InteractionDataset::from_indices(1, items, observed.iter().map(|&i| (0, i))).unwrap();
    let mut rng = stream(5, Stream::Batch);
    let draws = 45_000;
    let mut counts = vec![0usize; items];
    for _ in 0..draws {
        counts[sample_negative(&ds, 0, &mut rng).unwrap() as usize] += 1;
    }
    for &i in &observed {
        assert_eq!(counts[i as usize], 0);
    }
    let expected = draws as f64 / (items - observed.len()) as f64;
    let chi2: f64 = (0..items as u32)
        .filter(|i| !observed.contains(i))
        .map(|i| (counts[i as usize] as f64 - expected).powi(2) / expected)
        .sum();
    // 44 degrees of freedom; 78.75 is the 0.999 quantile
    assert!(chi2 < 78.75, "chi-square {chi2}");
}

#[test]
fn metrics_independent_of_thread_count() {
    let ds = dataset(3, 30, 30, 0.3);
    let s = split_dataset(&ds, 0.8, 0.1, 3).unwrap();
    let out = ndarray::Array2::from_shape_fn((60, 4), |(r, c)| ((r * 7 + c * 3) % 11) as f64 - 5.0);
    let a = evaluate(out.view(), 30, &s.test, &[&s.train, &s.valid], &[5, 20]).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| evaluate(out.view(), 30, &s.test, &[&s.train, &s.valid], &[5, 20]).unwrap());
    assert_eq!(a, b);
}
