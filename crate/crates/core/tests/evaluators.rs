use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relnas::evaluators::{
    make_synthetic_dataset, surrogate_distance, DatasetSplit, EstimationRequest, Evaluator, MacroConfig, MicroNet,
    MicroNetEvaluator, MicroRegistry, TrainHyper,
};
use relnas::search_space::{CellType, Genotype, OperationKind, SearchSpaceScheme};
use relnas::weight_store::{genotype_keys, WeightSet};

mod common;

use common::random_genotype;

#[test]
fn random_pairs_sit_at_the_expected_distance() {
    let scheme = SearchSpaceScheme::new(4).unwrap();
    let b = scheme.blocks_per_cell();
    // Op slots mismatch with probability 6/7; block k's predecessor slots
    // choose among k + 2 nodes.
    let pred: f64 = (0..b).map(|k| 1.0 - 1.0 / (k + 2) as f64).sum::<f64>() / b as f64;
    let expected = 0.5 * (6.0 / 7.0 + pred);

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 100_000;
    let total: f64 = (0..n)
        .map(|_| {
            let (x, y) = (random_genotype(&mut rng, &scheme), random_genotype(&mut rng, &scheme));
            surrogate_distance(&x, &y).unwrap()
        })
        .sum();
    let mean = total / n as f64;
    assert!((mean - expected).abs() < 0.003, "mean {mean}, expected {expected}");
    assert!((expected - 0.77).abs() < 0.005);
}

#[test]
fn linear_classifier_beats_chance_by_thirty_points() {
    let data = make_synthetic_dataset(7, 4, 16, 2048, 512);
    let (classes, dim) = (data.classes, data.dim);
    let mut w = vec![0.0; classes * (dim + 1)];
    for epoch in 0..60 {
        let lr = 0.1 / (1.0 + epoch as f64 * 0.05);
        for chunk in data.train.chunks(32) {
            let mut grad = vec![0.0; w.len()];
            for e in chunk {
                let p = softmax_linear(&w, &e.features, classes);
                for c in 0..classes {
                    let g = p[c] - f64::from(u8::from(c == e.label));
                    let row = &mut grad[c * (dim + 1)..(c + 1) * (dim + 1)];
                    row.iter_mut().zip(e.features.iter().chain([&1.0])).for_each(|(r, x)| *r += g * x);
                }
            }
            w.iter_mut().zip(&grad).for_each(|(wi, g)| *wi -= lr * g / chunk.len() as f64);
        }
    }
    let correct = data
        .val
        .iter()
        .filter(|e| {
            let p = softmax_linear(&w, &e.features, classes);
            argmax(&p) == e.label
        })
        .count();
    let accuracy = correct as f64 / data.val.len() as f64;
    assert!(accuracy >= 1.0 / classes as f64 + 0.30, "accuracy {accuracy}");
}

fn softmax_linear(w: &[f64], x: &[f64], classes: usize) -> Vec<f64> {
    let d = x.len();
    let z: Vec<f64> = (0..classes)
        .map(|c| {
            let row = &w[c * (d + 1)..(c + 1) * (d + 1)];
            row[d] + row[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect();
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap()
}

fn build(g: &Genotype, seed: u64) -> MicroNet {
    let macro_cfg = MacroConfig::default();
    let scheme = SearchSpaceScheme::new(g.blocks_per_cell()).unwrap();
    let registry = MicroRegistry { width: macro_cfg.width };
    let omega = WeightSet::init(&scheme, &registry, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    MicroNet::build(g, &macro_cfg, 4, omega.inherit(g), seed ^ 0x5eed).unwrap()
}

#[test]
fn parameter_count_matches_the_registry_walk() {
    let scheme = SearchSpaceScheme::new(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = MacroConfig::default().width;
    let b = scheme.blocks_per_cell();
    for _ in 0..20 {
        let g = random_genotype(&mut rng, &scheme);
        let mut expected = 0;
        for key in genotype_keys(&g) {
            let rows = if key.cell_type == CellType::Reduction { d / 2 } else { d };
            let k = key.op.kernel_size();
            expected += match key.op {
                OperationKind::SepConv3 | OperationKind::SepConv5 => 2 * rows * k,
                OperationKind::DilConv3 | OperationKind::DilConv5 => rows * k,
                _ => 0,
            };
        }
        for cell in MacroConfig::default().cells() {
            let node = if cell == CellType::Reduction { d / 2 } else { d };
            expected += d * b * node + d;
        }
        expected += 4 * d + 4;
        assert_eq!(build(&g, 1).param_count(), expected);
    }
}

#[test]
fn analytic_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let probes = common::covering_probes(10, &mut rng);
    assert_eq!(common::ops_used(&probes).len(), OperationKind::COUNT);
    for (p, g) in probes.iter().enumerate() {
        let report = common::gradient_check(g, 100 + p as u64, 1e-3, 1e-4);
        assert!(report.failure.is_none(), "probe {p}: {}", report.failure.unwrap());
        assert!(report.checked > 0);
        let total = report.checked + report.skipped;
        assert!(report.skipped * 4 <= total, "probe {p}: {} of {total} coordinates sit on a kink", report.skipped);
    }
}

#[test]
fn small_steps_agree_to_seven_digits() {
    // At step 1e-5 the finite-difference truncation error is negligible, so
    // any remaining gap would be a wrong analytic gradient.
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (p, g) in common::covering_probes(3, &mut rng).iter().enumerate() {
        let report = common::gradient_check(g, 200 + p as u64, 1e-5, 1e-6);
        assert!(report.failure.is_none(), "probe {p}: {}", report.failure.unwrap());
    }
}

fn micronet_evaluator(seed: u64) -> MicroNetEvaluator {
    let macro_cfg = MacroConfig::default();
    let data: DatasetSplit = make_synthetic_dataset(seed, 4, macro_cfg.width, 2048, 512);
    MicroNetEvaluator::new(macro_cfg, TrainHyper::default(), data, seed + 1).unwrap()
}

#[test]
fn one_epoch_lowers_validation_loss_for_most_genotypes() {
    let evaluator = micronet_evaluator(21);
    let scheme = SearchSpaceScheme::new(4).unwrap();
    let omega = WeightSet::init(&scheme, evaluator.shape_registry(), &mut ChaCha8Rng::seed_from_u64(22)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut improved = 0;
    for i in 0..100 {
        let g = random_genotype(&mut rng, &scheme);
        let before = evaluator.build(&g, omega.inherit(&g)).unwrap().loss(&evaluator.data.val);
        let after = evaluator
            .estimate(EstimationRequest {
                genotype: &g,
                inherited: omega.inherit(&g),
                epoch_index: 1,
                shuffle_seed: i,
            })
            .unwrap()
            .validation_loss;
        improved += usize::from(after <= before);
    }
    assert!(improved >= 90, "{improved} of 100 genotypes improved");
}

#[test]
fn micronet_estimates_are_deterministic_and_keep_keys() {
    let evaluator = micronet_evaluator(31);
    let scheme = SearchSpaceScheme::new(4).unwrap();
    let omega = WeightSet::init(&scheme, evaluator.shape_registry(), &mut ChaCha8Rng::seed_from_u64(32)).unwrap();
    let g = random_genotype(&mut ChaCha8Rng::seed_from_u64(33), &scheme);
    let run = || {
        evaluator
            .estimate(EstimationRequest {
                genotype: &g,
                inherited: omega.inherit(&g),
                epoch_index: 3,
                shuffle_seed: 9,
            })
            .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.validation_loss.to_bits(), b.validation_loss.to_bits());
    assert_eq!(a.trained, b.trained);
    assert!(a.trained.same_keys(&omega.inherit(&g)));
}
