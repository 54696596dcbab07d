//! Cross-module properties checked against brute-force oracles.

use hullft_core::io::{decode_pool, encode_pool, read_pool, write_pool};
use hullft_core::{
    caratheodory_reduce, frank_wolfe, hullft_select, integerize, knn_preselect, multiset_error, CandidatePool,
    EmbeddingVector, FwConfig, Integerizer, KnnMetric, SelectionRequest, Selector, SimplexWeights,
};
use proptest::prelude::*;

fn rows_strategy(max_k: usize, max_d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_k, 1..=max_d).prop_flat_map(|(k, d)| prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knn_matches_full_sort(rows in rows_strategy(30, 5), k in 1usize..40, seed in any::<u64>()) {
        let d = rows[0].len();
        let q: Vec<f64> = (0..d).map(|j| ((seed >> (j % 60)) & 0xff) as f64 / 128.0 - 1.0).collect();
        let corpus = CandidatePool::from_rows(&rows, None).unwrap();
        let qv = EmbeddingVector::new(q.clone()).unwrap();
        for metric in [KnnMetric::InnerProduct, KnnMetric::Euclidean] {
            let score = |r: &[f64]| match metric {
                KnnMetric::InnerProduct => r.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>(),
                KnnMetric::Euclidean => -r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            };
            let mut order: Vec<usize> = (0..rows.len()).collect();
            order.sort_by(|&a, &b| score(&rows[b]).total_cmp(&score(&rows[a])).then(a.cmp(&b)));
            order.truncate(k.min(rows.len()));
            let pre = knn_preselect(&corpus, &qv, k, metric).unwrap();
            prop_assert_eq!(&pre.source_indices, &order);
            for (i, &src) in pre.source_indices.iter().enumerate() {
                prop_assert_eq!(pre.pool.row(i), corpus.row(src));
            }
        }
    }

    #[test]
    fn pool_file_round_trip(rows in rows_strategy(12, 6)) {
        // the payload is f32, so start from f32-representable values
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&x| x as f32 as f64).collect()).collect();
        let pool = CandidatePool::from_rows(&rows, None).unwrap();
        let bytes = encode_pool(&pool).unwrap();
        let back = decode_pool(&bytes, Some(pool.ids().to_vec())).unwrap().pool;
        prop_assert_eq!(&back, &pool);
        prop_assert_eq!(encode_pool(&back).unwrap(), bytes);
    }

    #[test]
    fn integer_error_never_below_enumeration(rows in rows_strategy(3, 3), n in 1usize..7, raw in prop::collection::vec(0.05f64..1.0, 3)) {
        let k = rows.len();
        let pool = CandidatePool::from_rows(&rows, None).unwrap();
        let w = SimplexWeights::from_unnormalized(k, raw[..k].iter().copied().enumerate().collect()).unwrap();
        let q = EmbeddingVector::new(vec![0.1; rows[0].len()]).unwrap();
        let ms = integerize(&q, &pool, &w, n, 2).unwrap();
        let got = multiset_error(&q, &pool, &ms).unwrap();

        let mut best = f64::INFINITY;
        for a in 0..=n {
            for b in 0..=(n - a) {
                let c = n - a - b;
                let counts = [a, b, c];
                if counts[k..].iter().any(|&x| x > 0) {
                    continue;
                }
                let mean: Vec<f64> = (0..rows[0].len())
                    .map(|j| (0..k).map(|i| counts[i] as f64 * rows[i][j]).sum::<f64>() / n as f64)
                    .collect();
                let e: f64 = mean.iter().zip(q.as_slice()).map(|(m, x)| (m - x) * (m - x)).sum();
                best = best.min(e);
            }
        }
        prop_assert!(got >= best - 1e-15, "{} < {}", got, best);
    }

    #[test]
    fn fw_then_reduce_keeps_the_approximation(rows in rows_strategy(12, 3), seed in any::<u32>()) {
        let d = rows[0].len();
        let pool = CandidatePool::from_rows(&rows, None).unwrap();
        let q: Vec<f64> = (0..d).map(|j| ((seed >> (3 * j)) % 17) as f64 / 17.0 - 0.5).collect();
        let qv = EmbeddingVector::new(q).unwrap();
        let cfg = FwConfig { epsilon: 0.0, support_cap: rows.len(), max_iters: 300, gap_tolerance: 1e-12, forced_unique: false };
        let res = frank_wolfe(&qv, &pool, &cfg).unwrap();
        let reduced = caratheodory_reduce(&pool, &res.weights).unwrap();
        prop_assert!(reduced.support_size() <= d + 1);
        let before = hullft_core::reconstruction_error(&qv, &pool, &res.weights).unwrap();
        let after = hullft_core::reconstruction_error(&qv, &pool, &reduced).unwrap();
        prop_assert!((before - after).abs() <= 1e-9 * (1.0 + before));
    }
}

#[test]
fn selection_from_pool_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pool.hft");
    let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]];
    let ids: Vec<String> = ["north", "east", "south-west"].iter().map(|s| s.to_string()).collect();
    write_pool(&CandidatePool::from_rows(&rows, Some(ids.clone())).unwrap(), &path).unwrap();

    let loaded = read_pool(&path, None).unwrap();
    assert_eq!(loaded.pool.ids(), ids.as_slice());
    let q = EmbeddingVector::new(vec![0.0, 0.0]).unwrap();
    for selector in [Selector::Fw, Selector::FwNoEpsilon, Selector::Caratheodory] {
        for integerizer in [Integerizer::Geometric, Integerizer::PadByWeights] {
            let mut req = SelectionRequest::new(q.clone(), 6);
            req.selector = selector;
            req.integerizer = integerizer;
            let res = hullft_select(&req, &loaded.pool).unwrap();
            let ms = res.multiset.unwrap();
            assert_eq!(ms.total(), 6, "{selector:?}/{integerizer:?}");
            let err = multiset_error(&q, &loaded.pool, &ms).unwrap();
            assert!((res.metrics.integer_error.unwrap() - err).abs() < 1e-15);
        }
    }
}
