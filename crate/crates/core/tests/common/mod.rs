#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relnas::evaluators::{make_synthetic_dataset, Example, MacroConfig, MicroNet, MicroRegistry};
use relnas::search_space::{decode, random_arch, CellGenotype, Genotype, OperationKind, SearchSpaceScheme};
use relnas::weight_store::{genotype_keys, WeightSet};

pub fn random_genotype(rng: &mut ChaCha8Rng, scheme: &SearchSpaceScheme) -> Genotype {
    decode(&random_arch(rng, scheme), scheme).unwrap()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Micro-net for `g` with a freshly initialized weight set and a random head,
/// so gradients reach every layer.
pub fn probe_net(g: &Genotype, seed: u64, rng: &mut ChaCha8Rng) -> MicroNet {
    let macro_cfg = MacroConfig::default();
    let scheme = SearchSpaceScheme::new(g.blocks_per_cell()).unwrap();
    let registry = MicroRegistry { width: macro_cfg.width };
    let omega = WeightSet::init(&scheme, &registry, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let mut net = MicroNet::build(g, &macro_cfg, 4, omega.inherit(g), seed ^ 0x5eed).unwrap();
    let (hw, hb) = net.head_slots();
    for slot in [hw, hb] {
        net.tensors_mut()[slot].iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
    }
    net
}

/// `count` random genotypes, redrawn until every operation kind appears.
pub fn covering_probes(count: usize, rng: &mut ChaCha8Rng) -> Vec<Genotype> {
    let scheme = SearchSpaceScheme::new(4).unwrap();
    loop {
        let gs: Vec<Genotype> = (0..count).map(|_| random_genotype(rng, &scheme)).collect();
        if ops_used(&gs).len() == OperationKind::COUNT {
            return gs;
        }
    }
}

pub fn ops_used(gs: &[Genotype]) -> BTreeSet<OperationKind> {
    gs.iter()
        .flat_map(|g| [&g.normal, &g.reduction])
        .flat_map(CellGenotype::edges)
        .map(|(_, _, op)| op)
        .collect()
}

#[derive(Debug, Default)]
pub struct GradientReport {
    pub worst: f64,
    pub checked: usize,
    pub skipped: usize,
    /// Description of the first coordinate over tolerance.
    pub failure: Option<String>,
}

/// Central differences with `step` against the analytic gradient on one
/// four-example batch. Checks every weight-set coordinate and eight sampled
/// coordinates of each projection and head tensor. Coordinates whose
/// perturbation flips a ReLU or a max-pool choice are skipped.
pub fn gradient_check(g: &Genotype, seed: u64, step: f64, tolerance: f64) -> GradientReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = probe_net(g, seed, &mut rng);
    let data = make_synthetic_dataset(seed.wrapping_add(1), 4, 16, 64, 0);
    let start = rng.random_range(0..data.train.len() - 4);
    let batch: Vec<&Example> = data.train[start..start + 4].iter().collect();
    let owned: Vec<Example> = batch.iter().map(|e| (*e).clone()).collect();
    let (_, grads) = net.loss_and_gradients(&batch);
    let signature = net.activation_signature(&batch);

    let cell_slots: BTreeSet<usize> = genotype_keys(g).iter().filter_map(|k| net.slot_of(k)).collect();
    let mut coords = Vec::new();
    for (t, tensor) in net.tensors().iter().enumerate() {
        if cell_slots.contains(&t) {
            coords.extend((0..tensor.len()).map(|i| (t, i)));
        } else {
            coords.extend((0..8).map(|_| (t, rng.random_range(0..tensor.len()))));
        }
    }

    let mut report = GradientReport::default();
    for (t, i) in coords {
        let original = net.tensors()[t][i];
        net.tensors_mut()[t][i] = original + step;
        let (plus, sig_plus) = (net.loss(&owned), net.activation_signature(&batch));
        net.tensors_mut()[t][i] = original - step;
        let (minus, sig_minus) = (net.loss(&owned), net.activation_signature(&batch));
        net.tensors_mut()[t][i] = original;
        if sig_plus != signature || sig_minus != signature {
            report.skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * step);
        let analytic = grads[t][i];
        let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
        report.worst = report.worst.max(err);
        report.checked += 1;
        if err > tolerance && report.failure.is_none() {
            report.failure = Some(format!("tensor {t}[{i}]: analytic {analytic:e}, numeric {numeric:e}"));
        }
    }
    report
}
