mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use unmask::corpus::Article;
use unmask::eval::{
    make_publisher_folds, oversample_indices, prepare_fold, run_experiment, sweep, train_publishers, EvalError,
    FoldPlan,
};
use unmask::lexicon::top_k;
use unmask::masking::mask_corpus;
use unmask::synthetic::{generate, SyntheticConfig, FUNCTION_WORDS};
use unmask::{ClassifierKind, Corpus, ExperimentConfig, MaskMode, Orientation, PruningConfig};

fn synthetic() -> unmask::synthetic::SyntheticCorpus {
    generate(&SyntheticConfig::default())
}

fn config(mode: MaskMode) -> ExperimentConfig {
    ExperimentConfig { mode, k: FUNCTION_WORDS.len(), n: 3, ..Default::default() }
}

#[test]
fn fold_hygiene() {
    let s = synthetic();
    let plan = make_publisher_folds(&s.corpus, None).unwrap();
    assert_eq!(plan.folds.len(), 3);
    let mut seen = BTreeSet::new();
    for fold in &plan.folds {
        let test: BTreeSet<String> =
            s.corpus.iter().filter(|a| fold.contains(&a.publisher)).map(|a| a.publisher.clone()).collect();
        let train = train_publishers(&s.corpus, fold);
        assert!(test.is_disjoint(&train));
        assert_eq!(test.len(), 3);
        let orientations: BTreeSet<Orientation> =
            s.corpus.iter().filter(|a| test.contains(&a.publisher)).map(|a| a.orientation).collect();
        assert_eq!(orientations.len(), 3);
        for p in test {
            assert!(seen.insert(p), "publisher tested twice");
        }
    }
    assert_eq!(seen.len(), 9);
}

#[test]
fn vocabulary_has_no_test_only_ngrams() {
    let s = synthetic();
    let plan = make_publisher_folds(&s.corpus, None).unwrap();
    for mode in [MaskMode::TopicModel, MaskMode::StyleModel, MaskMode::Identity] {
        let masked = mask_corpus(&s.corpus, &top_k(&s.full_lexicon, FUNCTION_WORDS.len()), mode);
        for n in [1, 3, 5] {
            let cfg = ExperimentConfig { mode, n, ..config(mode) };
            for (i, fold) in plan.folds.iter().enumerate() {
                let data = prepare_fold(&masked, fold, &cfg, i).unwrap();
                let train_texts: Vec<&str> =
                    masked.iter().filter(|a| !fold.contains(&a.publisher)).map(|a| a.text.as_str()).collect();
                let counts = common::ngram_counts(&train_texts, n);
                assert_eq!(data.vocab.len(), counts.len());
                for (column, term) in data.vocab.terms().iter().enumerate() {
                    let train_count = counts.get(term).copied().unwrap_or(0);
                    assert!(train_count > 0, "{term:?} absent from training text");
                    assert_eq!(data.vocab.total_freq(column), train_count);
                }
            }
        }
    }
}

#[test]
fn oversampling_only_duplicates_training_rows() {
    let s = synthetic();
    let cfg = config(MaskMode::TopicModel);
    let result = run_experiment(&s.corpus, &s.full_lexicon, &cfg).unwrap();
    let plan = make_publisher_folds(&s.corpus, None).unwrap();
    for (fold, res) in plan.folds.iter().zip(&result.folds) {
        let test_count = s.corpus.iter().filter(|a| fold.contains(&a.publisher)).count();
        assert_eq!(res.test_rows, test_count);
        assert_eq!(res.predictions.len(), test_count);
        assert_eq!(res.train_rows, s.corpus.len() - test_count);
        let mut counts = [0usize; 3];
        for a in s.corpus.iter().filter(|a| !fold.contains(&a.publisher)) {
            counts[a.orientation.index()] += 1;
        }
        assert_eq!(res.train_rows_oversampled, 3 * counts.iter().max().unwrap());
        for p in &res.predictions {
            assert!(fold.contains(&p.publisher));
        }
    }

    let masked = mask_corpus(&s.corpus, &top_k(&s.full_lexicon, cfg.k), cfg.mode);
    let data = prepare_fold(&masked, &plan.folds[0], &cfg, 0).unwrap();
    let labels: Vec<Orientation> = data.train.rows.iter().map(|r| r.label).collect();
    let picks = oversample_indices(&labels, 17);
    assert_eq!(&picks[..labels.len()], &(0..labels.len()).collect::<Vec<_>>()[..]);
    assert!(picks.iter().all(|&i| i < data.train.len()));
}

#[test]
fn unbalanced_publishers_need_a_plan() {
    let corpus = Corpus::from_articles(
        ["a", "b"]
            .iter()
            .enumerate()
            .map(|(i, p)| Article {
                id: i.to_string(),
                publisher: p.to_string(),
                orientation: Orientation::Left,
                title: None,
                text: "x".into(),
            })
            .collect(),
    )
    .unwrap();
    assert!(matches!(make_publisher_folds(&corpus, None), Err(EvalError::UnbalancedPublishers(_))));
}

#[test]
fn explicit_plan_with_repeated_publisher_rejected() {
    let s = synthetic();
    let mut plan = make_publisher_folds(&s.corpus, None).unwrap();
    plan.folds[1].left = plan.folds[0].left.clone();
    assert!(matches!(make_publisher_folds(&s.corpus, Some(&plan)), Err(EvalError::InvalidPlan(_))));
}

#[test]
fn synthetic_separation() {
    let s = synthetic();
    let topic = run_experiment(&s.corpus, &s.full_lexicon, &config(MaskMode::TopicModel)).unwrap();
    let style = run_experiment(&s.corpus, &s.full_lexicon, &config(MaskMode::StyleModel)).unwrap();
    let identity = run_experiment(&s.corpus, &s.full_lexicon, &config(MaskMode::Identity)).unwrap();
    let (t, st, id) = (topic.aggregate.macro_f1, style.aggregate.macro_f1, identity.aggregate.macro_f1);
    assert!(t >= st + 0.15, "topic {t} style {st}");
    assert!(id >= t - 0.05, "identity {id} topic {t}");
}

#[test]
fn separation_holds_across_generator_seeds() {
    for seed in 1..=4 {
        let s = generate(&SyntheticConfig { seed, ..Default::default() });
        let topic = run_experiment(&s.corpus, &s.full_lexicon, &config(MaskMode::TopicModel)).unwrap();
        let style = run_experiment(&s.corpus, &s.full_lexicon, &config(MaskMode::StyleModel)).unwrap();
        assert!(topic.aggregate.macro_f1 >= style.aggregate.macro_f1 + 0.15, "seed {seed}");
    }
}

#[test]
fn saturated_style_model_equals_identity() {
    let s = synthetic();
    for classifier in [ClassifierKind::Svm, ClassifierKind::Nb] {
        let base = ExperimentConfig { k: s.full_lexicon.len(), n: 4, classifier, ..Default::default() };
        let style = run_experiment(
            &s.corpus,
            &s.full_lexicon,
            &ExperimentConfig { mode: MaskMode::StyleModel, ..base.clone() },
        )
        .unwrap();
        let identity =
            run_experiment(&s.corpus, &s.full_lexicon, &ExperimentConfig { mode: MaskMode::Identity, ..base }).unwrap();
        assert_eq!(style.folds, identity.folds);
        assert_eq!(style.aggregate, identity.aggregate);
        assert_eq!(style.features, identity.features);
    }
}

#[test]
fn singleton_sweep_matches_experiment() {
    let s = synthetic();
    let cfg = config(MaskMode::StyleModel);
    let rows = sweep(&s.corpus, &s.full_lexicon, std::slice::from_ref(&cfg)).unwrap();
    let result = run_experiment(&s.corpus, &s.full_lexicon, &cfg).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].pooled_macro_f1, result.aggregate.macro_f1);
    assert_eq!(rows[0].mean_macro_f1, result.fold_mean_macro_f1);
    let mean = rows[0].per_fold_macro_f1.iter().sum::<f64>() / 3.0;
    assert!((rows[0].mean_macro_f1 - mean).abs() <= 1e-12);
}

#[test]
fn empty_grid_rejected() {
    let s = synthetic();
    assert!(matches!(sweep(&s.corpus, &s.full_lexicon, &[]), Err(EvalError::EmptyGrid)));
}

#[test]
fn results_independent_of_thread_count() {
    let s = synthetic();
    let cfg = ExperimentConfig {
        pruning: PruningConfig { min_total: Some(2), max_total: Some(500) },
        ..config(MaskMode::TopicModel)
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&s.corpus, &s.full_lexicon, &cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&run(3)).unwrap());
}

#[test]
fn seed_changes_only_randomized_parts() {
    let s = synthetic();
    let a = run_experiment(&s.corpus, &s.full_lexicon, &config(MaskMode::TopicModel)).unwrap();
    let b = run_experiment(&s.corpus, &s.full_lexicon, &ExperimentConfig { seed: 99, ..config(MaskMode::TopicModel) })
        .unwrap();
    for (x, y) in a.folds.iter().zip(&b.folds) {
        assert_eq!(x.vocab_size, y.vocab_size);
        assert_eq!(x.train_rows_oversampled, y.train_rows_oversampled);
    }
}

fn publisher_corpus() -> impl Strategy<Value = Corpus> {
    // 9 distinct publisher names, 1..4 articles each
    (proptest::collection::btree_set("[a-z]{1,6}", 9), proptest::collection::vec(1usize..4, 9)).prop_map(
        |(names, sizes)| {
            let mut articles = Vec::new();
            for (p, (name, size)) in names.into_iter().zip(sizes).enumerate() {
                for d in 0..size {
                    articles.push(Article {
                        id: format!("{name}-{d}"),
                        publisher: name.clone(),
                        orientation: Orientation::from_index(p % 3).unwrap(),
                        title: None,
                        text: format!("text {p} {d}"),
                    });
                }
            }
            Corpus::from_articles(articles).unwrap()
        },
    )
}

fn labels() -> impl Strategy<Value = Vec<Orientation>> {
    proptest::collection::vec((0usize..3).prop_map(|i| Orientation::from_index(i).unwrap()), 0..60)
}

proptest! {
    #[test]
    fn default_folds_partition_publishers(corpus in publisher_corpus()) {
        let plan: FoldPlan = make_publisher_folds(&corpus, None).unwrap();
        let mut seen = BTreeSet::new();
        for fold in &plan.folds {
            for o in Orientation::ALL {
                let p = fold.publisher(o);
                prop_assert!(corpus.iter().any(|a| a.publisher == p && a.orientation == o));
                prop_assert!(seen.insert(p.to_string()));
            }
            let test: BTreeSet<String> = corpus.iter().filter(|a| fold.contains(&a.publisher)).map(|a| a.publisher.clone()).collect();
            prop_assert!(test.is_disjoint(&train_publishers(&corpus, fold)));
        }
        prop_assert_eq!(seen.len(), 9);
    }

    #[test]
    fn oversampling_balances_and_is_deterministic(labels in labels(), seed in any::<u64>()) {
        let picks = oversample_indices(&labels, seed);
        prop_assert_eq!(&picks, &oversample_indices(&labels, seed));
        prop_assert_eq!(&picks[..labels.len()], &(0..labels.len()).collect::<Vec<_>>()[..]);
        let mut before = [0usize; 3];
        for l in &labels {
            before[l.index()] += 1;
        }
        let target = before.iter().copied().max().unwrap_or(0);
        let mut after = [0usize; 3];
        for &i in &picks {
            after[labels[i].index()] += 1;
        }
        for o in 0..3 {
            prop_assert_eq!(after[o], if before[o] == 0 { 0 } else { target });
        }
    }
}
