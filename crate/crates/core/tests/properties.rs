#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use readmit_core::cohort::{stratified_split, SplitRatios};
use readmit_core::eval::{auc, metrics, roc_curve};
use readmit_core::features::{mock_token_vector, pca_fit};
use readmit_core::linalg::Matrix;
use readmit_core::rng::seeded;
use readmit_core::textprep::{CleanConfig, PROTECTED_TERMS};

use rand::seq::SliceRandom;
use rand::Rng;

fn matrix(n: usize, d: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-100.0f64..100.0, n * d).prop_map(move |v| Matrix::from_vec(n, d, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pca_full_rank_reconstructs_and_orders(x in matrix(50, 20)) {
        let model = pca_fit(&x, 20).unwrap().model;
        let ev = &model.explained_variance;
        prop_assert!(ev.windows(2).all(|w| w[0] >= w[1]), "{:?}", ev);
        let c = &model.components;
        for a in 0..20 {
            for b in 0..20 {
                let dot: f64 = c.row(a).iter().zip(c.row(b)).map(|(p, q)| p * q).sum();
                prop_assert!((dot - f64::from(u8::from(a == b))).abs() < 1e-8);
            }
        }
        let proj = model.transform_rows(&x).unwrap();
        for (row, p) in x.iter_rows().zip(proj.iter_rows()) {
            for f in 0..20 {
                let back = model.mean[f] + (0..20).map(|j| p[j] * c.row(j)[f]).sum::<f64>();
                prop_assert!((back - row[f]).abs() < 1e-8, "{} vs {}", back, row[f]);
            }
        }
    }

    #[test]
    fn pca_wide_input_keeps_n_minus_one(x in matrix(8, 25)) {
        let model = pca_fit(&x, 7).unwrap().model;
        let proj = model.transform_rows(&x).unwrap();
        for (row, p) in x.iter_rows().zip(proj.iter_rows()) {
            for f in 0..25 {
                let back = model.mean[f] + (0..7).map(|j| p[j] * model.components.row(j)[f]).sum::<f64>();
                prop_assert!((back - row[f]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn mock_vectors_depend_only_on_bytes_and_seed(token in "[a-z]{0,12}", seed in any::<u64>()) {
        let a = mock_token_vector(&token, seed);
        let b = mock_token_vector(&token.clone(), seed);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), 768);
        prop_assert!(a.iter().all(|x| (-1.0..1.0).contains(x)));
        prop_assert_ne!(a, mock_token_vector(&token, seed.wrapping_add(1)));
    }

    #[test]
    fn split_ignores_input_order(n in 20usize..400, seed in any::<u64>(), shuffle in any::<u64>()) {
        let items: Vec<(u64, u8)> = (0..n as u64).map(|i| (i * 13 + 5, u8::from(i % 7 == 0))).collect();
        let mut shuffled = items.clone();
        shuffled.shuffle(&mut seeded(shuffle, 0));
        let (a, _) = stratified_split(&items, SplitRatios::default(), seed).unwrap();
        let (b, _) = stratified_split(&shuffled, SplitRatios::default(), seed).unwrap();
        for (id, _) in &items {
            prop_assert_eq!(a.get(*id), b.get(*id));
        }
    }

    #[test]
    fn f1_is_harmonic_mean_or_zero(labels in prop::collection::vec(0u8..2, 1..200), flips in prop::collection::vec(any::<bool>(), 200)) {
        let preds: Vec<u8> = labels.iter().zip(&flips).map(|(l, f)| if *f { 1 - l } else { *l }).collect();
        let s = metrics(&labels, &preds).unwrap().binary;
        if s.precision == 0.0 && s.recall == 0.0 {
            prop_assert_eq!(s.f1, 0.0);
        } else {
            prop_assert!((s.f1 - 2.0 * s.precision * s.recall / (s.precision + s.recall)).abs() <= 1e-12);
        }
    }

    #[test]
    fn protected_terms_survive_any_stopword_list(extra in prop::collection::vec("[a-z]{1,8}", 0..30)) {
        let mut list: Vec<String> = extra;
        list.extend(PROTECTED_TERMS.iter().map(|t| t.to_string()));
        let cfg = CleanConfig::default().with_stopwords(list.iter());
        let text = PROTECTED_TERMS.join(" ");
        let cleaned = cfg.clean(&text);
        for t in PROTECTED_TERMS {
            prop_assert!(cleaned.tokens.iter().any(|x| x == t), "{} dropped", t);
        }
    }
}

#[test]
fn random_labels_give_auc_near_one_half() {
    let mut rng = seeded(17, 0);
    let mut total = 0.0;
    for _ in 0..200 {
        let scores: Vec<f64> = (0..2000).map(|_| rng.gen()).collect();
        let mut labels: Vec<u8> = (0..2000).map(|i| u8::from(i < 1000)).collect();
        labels.shuffle(&mut rng);
        let a = auc(&labels, &scores).unwrap();
        assert!((a - 0.5).abs() < 0.06, "{a}");
        total += a;
    }
    assert!((total / 200.0 - 0.5).abs() < 0.01);
}

#[test]
fn roc_ends_at_corners() {
    let roc = roc_curve(&[0, 1, 1, 0, 1], &[0.1, 0.4, 0.4, 0.3, 0.9]).unwrap();
    let first = roc.points.first().unwrap();
    let last = roc.points.last().unwrap();
    assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
    assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
}
