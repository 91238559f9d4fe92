use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use lexent::classifiers::{feature_map, train_logreg, train_rbf_svm, FeatureKind};
use lexent::datasets::{synth_corpus, SynthConfig};
use lexent::linalg::DenseMatrix;
use lexent::vecspace::build_space;
use lexent::{HFeatureConfig, HFeatureModel, LabeledPair, Side, SvdParams, VectorSpace};

fn corpus(categories: usize) -> SynthConfig {
    SynthConfig {
        seed: 17,
        categories,
        hyponyms_per_category: 4,
        topics_per_category: 3,
        noise: 0.05,
        include_reversed: false,
        ..SynthConfig::default()
    }
}

fn space_and_pairs(categories: usize, k: usize) -> (VectorSpace, Vec<LabeledPair>) {
    let out = synth_corpus(&corpus(categories)).expect("synth corpus");
    let space = build_space(&out.counts, k, &SvdParams::with_seed(17)).expect("space");
    (space, out.pairs)
}

fn concat_features(space: &VectorSpace, pairs: &[LabeledPair]) -> (DenseMatrix, Vec<bool>) {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for p in pairs {
        let h = space.lookup(&p.consequent, Side::Word);
        let w = space.lookup(&p.antecedent, Side::Word);
        if let (Some(h), Some(w)) = (h, w) {
            rows.push(feature_map(FeatureKind::Concat, h, w).expect("features"));
            y.push(p.label);
        }
    }
    (DenseMatrix::from_rows(&rows), y)
}

fn bench_build_space(c: &mut Criterion) {
    let mut group = c.benchmark_group("build-space");
    for (categories, k) in [(12usize, 30usize), (40, 60), (100, 150)] {
        let out = synth_corpus(&corpus(categories)).expect("synth corpus");
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{categories}cat-k{k}")),
            &out.counts,
            |b, counts| {
                b.iter(|| build_space(black_box(counts), k, &SvdParams::with_seed(17)).unwrap())
            },
        );
    }
    group.finish();
}

fn bench_hfeature_fit(c: &mut Criterion) {
    let (space, pairs) = space_and_pairs(40, 60);
    let mut group = c.benchmark_group("hfeature-fit");
    group.sample_size(10);
    for n in [1usize, 2, 4] {
        let config = HFeatureConfig {
            n,
            ..HFeatureConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &config, |b, config| {
            b.iter(|| HFeatureModel::fit(black_box(&pairs), &space, config).unwrap())
        });
    }
    group.finish();
}

fn bench_classifier_train(c: &mut Criterion) {
    let (space, pairs) = space_and_pairs(40, 60);
    let (x, y) = concat_features(&space, &pairs);
    let gamma = 1.0 / x.n_cols() as f64;
    let mut group = c.benchmark_group("classifier-train");
    group.sample_size(20);
    group.bench_function("logreg-concat", |b| {
        b.iter(|| train_logreg(black_box(&x), &y, 1.0, true).unwrap())
    });
    group.bench_function("rbf-svm-concat", |b| {
        b.iter(|| train_rbf_svm(black_box(&x), &y, 1.0, gamma, true).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_build_space,
    bench_hfeature_fit,
    bench_classifier_train
);
criterion_main!(benches);
