use indexmap::IndexMap;
use proptest::prelude::*;

use loglens::app::{AnalysisSpec, Application, JobSpec, RepresentationSpec, TfidfDocuments};
use loglens::cluster::Distance;
use loglens::detect_seq::FlagLevel;
use loglens::detect_stat::{BaselineConfig, DivergenceKind};
use loglens::evaluate::SplitProtocol;
use loglens::log_model::{DatasetAdapter, FileFormat, LoaderConfig};
use loglens::parse::{ParserAlgorithm, ParserConfig};
use loglens::preprocess::{PartitionConfig, PreprocessorConfig, ReplaceRule};
use loglens::represent::{CategoricalScheme, QuantWeighting};

fn unit() -> impl Strategy<Value = f64> {
    (1u32..1000).prop_map(|v| v as f64 / 1000.0)
}

fn loader() -> impl Strategy<Value = LoaderConfig> {
    (
        "[a-z]{1,8}\\.log",
        prop_oneof![Just(FileFormat::Log), Just(FileFormat::Csv), Just(FileFormat::Json)],
        proptest::option::of("%Y-%m-%d"),
        proptest::collection::vec(("[a-z]{1,5}", "body|timestamp|attributes\\.[a-z]{1,4}"), 0..3),
    )
        .prop_map(|(path, format, timestamp_format, map)| LoaderConfig {
            field_map: map.into_iter().collect::<IndexMap<_, _>>(),
            timestamp_format,
            ..LoaderConfig::new(path, format)
        })
}

fn parser() -> impl Strategy<Value = ParserConfig> {
    (
        prop_oneof![Just(ParserAlgorithm::Drain), Just(ParserAlgorithm::Iplom), Just(ParserAlgorithm::Ael)],
        any::<bool>(),
        unit(),
        3usize..8,
    )
        .prop_map(|(alg, mask, sim, depth)| {
            let mut p = ParserConfig::with_algorithm(alg);
            p.mask_digits = mask;
            p.drain.sim_threshold = sim;
            p.drain.depth = depth;
            p
        })
}

fn partition() -> impl Strategy<Value = PartitionConfig> {
    prop_oneof![
        (1usize..50).prop_map(PartitionConfig::fixed),
        (2usize..50, 1usize..5).prop_map(|(w, s)| PartitionConfig::sliding(w, s)),
        (1u64..100_000).prop_map(PartitionConfig::time_window),
        Just(PartitionConfig::identifier()),
    ]
}

fn representation() -> impl Strategy<Value = RepresentationSpec> {
    prop_oneof![
        Just(RepresentationSpec::Sequential),
        prop_oneof![Just(QuantWeighting::Count), Just(QuantWeighting::Tfidf)]
            .prop_map(|weighting| RepresentationSpec::Quantitative { weighting }),
        (prop_oneof![Just(TfidfDocuments::Bodies), Just(TfidfDocuments::Templates)], proptest::option::of(1usize..500))
            .prop_map(|(documents, vocab_limit)| RepresentationSpec::Tfidf { documents, vocab_limit }),
        (1i64..86_400, any::<bool>()).prop_map(|(bucket_secs, per_template)| RepresentationSpec::Counter {
            bucket_secs,
            per_template
        }),
        (
            proptest::collection::vec("[a-z_]{1,6}", 1..3),
            prop_oneof![Just(CategoricalScheme::Label), Just(CategoricalScheme::OneHot), Just(CategoricalScheme::Ordinal)]
        )
            .prop_map(|(fields, scheme)| RepresentationSpec::Categorical { fields, scheme }),
    ]
}

fn analysis() -> impl Strategy<Value = AnalysisSpec> {
    let baseline = || {
        (unit(), 1u32..10, 2usize..30).prop_map(|(alpha, z, warmup)| BaselineConfig {
            alpha,
            z_threshold: z as f64,
            warmup,
        })
    };
    prop_oneof![
        (1usize..5, 1usize..20, proptest::option::of(1usize..5), any::<bool>(), any::<bool>()).prop_map(
            |(order, k, window, backoff, event)| AnalysisSpec::NgramTopk {
                order,
                k,
                window,
                backoff,
                flag_level: if event { FlagLevel::Event } else { FlagLevel::Partition },
            }
        ),
        (1usize..200, 2usize..512, proptest::option::of(unit())).prop_map(|(n_trees, subsample, threshold)| {
            AnalysisSpec::IsolationForest {
                n_trees,
                subsample,
                threshold,
            }
        }),
        (1usize..20, proptest::option::of(unit())).prop_map(|(k, threshold)| AnalysisSpec::Lof { k, threshold }),
        (any::<bool>(), proptest::option::of(unit())).prop_map(|(kl, threshold)| AnalysisSpec::Divergence {
            measure: if kl { DivergenceKind::Kl } else { DivergenceKind::Js },
            threshold
        }),
        baseline().prop_map(AnalysisSpec::Ewma),
        baseline().prop_map(AnalysisSpec::EtsAdditive),
        (1usize..10, 1usize..500, unit(), any::<bool>()).prop_map(|(k, max_iter, tol, cos)| AnalysisSpec::Kmeans {
            k,
            max_iter,
            tol,
            distance: if cos { Distance::Cosine } else { Distance::Euclidean },
        }),
        (unit(), 1usize..10).prop_map(|(eps, min_pts)| AnalysisSpec::Dbscan { eps, min_pts }),
    ]
}

fn job_spec() -> impl Strategy<Value = JobSpec> {
    (
        prop_oneof![
            Just(Application::Summarize),
            Just(Application::Cluster),
            Just(Application::DetectAnomaly),
            Just(Application::Benchmark)
        ],
        loader(),
        proptest::option::of(any::<bool>().prop_map(|hdfs| if hdfs { DatasetAdapter::hdfs("labels.csv") } else { DatasetAdapter::bgl() })),
        proptest::collection::vec(("[a-z0-9]{1,4}", "<[A-Z]{1,3}>"), 0..2),
        proptest::option::of(partition()),
        proptest::option::of(parser()),
        proptest::option::of(representation()),
        proptest::option::of(analysis()),
        proptest::option::of((unit(), any::<u64>()).prop_map(|(test_fraction, seed)| SplitProtocol {
            test_fraction,
            seed,
            ..SplitProtocol::default()
        })),
        any::<u64>(),
    )
        .prop_map(
            |(application, loader, adapter, rules, partition, parser, representation, analysis, evaluation, seed)| JobSpec {
                application,
                loader,
                adapter,
                preprocessor: PreprocessorConfig {
                    custom_delimiters_regex: Vec::new(),
                    custom_replace_list: rules.into_iter().map(|(p, r)| ReplaceRule::new(p, r)).collect(),
                },
                partition,
                parser,
                representation,
                analysis,
                evaluation,
                seed,
            },
        )
}

proptest! {
    #[test]
    fn yaml_round_trip(spec in job_spec()) {
        let text = spec.to_yaml();
        prop_assert_eq!(JobSpec::from_yaml(&text).unwrap(), spec.clone());
        // serializing again is stable
        prop_assert_eq!(JobSpec::from_yaml(&text).unwrap().to_yaml(), text);
    }

    #[test]
    fn json_round_trip(spec in job_spec()) {
        let json = serde_json::to_string(&spec).unwrap();
        prop_assert_eq!(serde_json::from_str::<JobSpec>(&json).unwrap(), spec);
    }
}

#[test]
fn defaults_fill_in() {
    let spec = JobSpec::from_yaml(
        "application: detect_anomaly\nloader: {path: a.log}\npartition: {strategy: identifier}\nrepresentation: {kind: sequential}\nanalysis: {kind: ngram_topk}\n",
    )
    .unwrap();
    assert_eq!(
        spec.analysis,
        Some(AnalysisSpec::NgramTopk {
            order: 2,
            k: 10,
            window: None,
            backoff: true,
            flag_level: FlagLevel::Partition
        })
    );
    assert_eq!(spec.seed, 0);
    assert!(spec.validate().is_empty());
}
