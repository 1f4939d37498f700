//! A trainable vector-valued analog of the stacked-cell network.
//!
//! Features are `d`-dimensional vectors instead of images. Operations keep
//! their structure: separable convolutions are two ReLU-fronted banded linear
//! maps, dilated convolutions one ReLU-fronted dilation-2 banded map, pooling
//! is a width-3 sliding window. Each intermediate node sums its two edges, each
//! cell concatenates its intermediate nodes and projects back to width `d`.
//! Between cells the output is standardized per example (zero mean, unit
//! variance over its `d` features, no learned scale), which keeps deep stacks
//! trainable with plain SGD.
//! Reduction cells apply stride 2 on the edges leaving their input nodes, so
//! inside a reduction cell the width is `d / 2`.
//!
//! Gradients are computed by hand-written reverse-mode passes over a per-example
//! tape.

use std::collections::BTreeMap;
use std::hash::{DefaultHasher, Hash, Hasher};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finite, DatasetSplit, EstimationRequest, EstimationResult, Evaluator, Example, MacroConfig, TrainHyper};
use crate::error::{Error, Result};
use crate::search_space::{CellType, Genotype, OpFamily, OperationKind};
use crate::weight_store::{genotype_keys, InheritedWeights, ParamShape, ShapeRegistry, WeightKey};

/// `(input width, output width, stride)` of an edge.
fn edge_geometry(cell_type: CellType, source: usize, width: usize) -> (usize, usize, usize) {
    match cell_type {
        CellType::Normal => (width, width, 1),
        CellType::Reduction if source < 2 => (width, width / 2, 2),
        CellType::Reduction => (width / 2, width / 2, 1),
    }
}

fn node_width(cell_type: CellType, width: usize) -> usize {
    match cell_type {
        CellType::Normal => width,
        CellType::Reduction => width / 2,
    }
}

/// Parameter shapes for the micro-network: separable convolutions hold two
/// stacked `[rows, taps]` blocks, dilated convolutions one.
#[derive(Clone, Copy, Debug)]
pub struct MicroRegistry {
    pub width: usize,
}

impl ShapeRegistry for MicroRegistry {
    fn shape(&self, key: &WeightKey) -> Option<ParamShape> {
        let (_, rows, _) = edge_geometry(key.cell_type, key.source, self.width);
        let taps = key.op.kernel_size();
        Some(match key.op.family() {
            OpFamily::SepConv => ParamShape {
                dims: vec![2, rows, taps],
                fan_in: taps,
            },
            OpFamily::DilConv => ParamShape {
                dims: vec![1, rows, taps],
                fan_in: taps,
            },
            _ => ParamShape::empty(),
        })
    }
}

/// `y[i] = sum_o w[i, o] * x[stride * i + dilation * (o - taps / 2)]`, zero padded.
fn banded(x: &[f64], w: &[f64], rows: usize, taps: usize, stride: usize, dilation: usize) -> Vec<f64> {
    let half = (taps / 2) as isize;
    (0..rows)
        .map(|i| {
            let centre = (stride * i) as isize;
            let mut acc = 0.0;
            for o in 0..taps {
                let j = centre + dilation as isize * (o as isize - half);
                if j >= 0 && (j as usize) < x.len() {
                    acc += w[i * taps + o] * x[j as usize];
                }
            }
            acc
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn banded_backward(
    x: &[f64],
    w: &[f64],
    taps: usize,
    stride: usize,
    dilation: usize,
    dy: &[f64],
    dx: &mut [f64],
    dw: &mut [f64],
) {
    let half = (taps / 2) as isize;
    for (i, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let centre = (stride * i) as isize;
        for o in 0..taps {
            let j = centre + dilation as isize * (o as isize - half);
            if j >= 0 && (j as usize) < x.len() {
                dw[i * taps + o] += g * x[j as usize];
                dx[j as usize] += g * w[i * taps + o];
            }
        }
    }
}

fn relu(a: &[f64]) -> Vec<f64> {
    a.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

fn relu_backward(a: &[f64], dy: &[f64]) -> Vec<f64> {
    a.iter().zip(dy).map(|(&v, &g)| if v > 0.0 { g } else { 0.0 }).collect()
}

const STANDARDIZE_EPS: f64 = 1e-5;

/// `(y, 1 / sigma)` with `y = (z - mean(z)) / sigma`.
fn standardize(z: &[f64]) -> (Vec<f64>, f64) {
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + STANDARDIZE_EPS).sqrt();
    (z.iter().map(|v| (v - mean) * inv).collect(), inv)
}

fn standardize_backward(y: &[f64], inv: f64, dy: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let mean_dy = dy.iter().sum::<f64>() / n;
    let mean_dy_y = dy.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / n;
    dy.iter()
        .zip(y)
        .map(|(g, v)| inv * (g - mean_dy - v * mean_dy_y))
        .collect()
}

fn window(centre: usize, len: usize) -> std::ops::RangeInclusive<usize> {
    centre.saturating_sub(1)..=(centre + 1).min(len - 1)
}

/// Per-edge values kept for the backward pass. `xr` is the rectified edge
/// input, `a1` the first banded output of a separable convolution.
#[derive(Clone, Debug)]
enum EdgeTape {
    Sep { xr: Vec<f64>, a1: Vec<f64>, h1: Vec<f64> },
    Dil { xr: Vec<f64> },
    Max { argmax: Vec<usize> },
    Avg,
    Identity,
}

#[derive(Clone, Debug)]
struct CellTape {
    nodes: Vec<Vec<f64>>,
    concat: Vec<f64>,
    edges: Vec<EdgeTape>,
}

#[derive(Clone, Debug)]
struct ExampleTape {
    cell_inputs: Vec<(usize, usize)>,
    /// Standardized cell outputs and their `1 / sigma`.
    outputs: Vec<Vec<f64>>,
    inv_sigma: Vec<f64>,
    cells: Vec<CellTape>,
    logits: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
struct Dense {
    weight: usize,
    bias: usize,
    rows: usize,
    cols: usize,
}

/// One network instance: a genotype wired over the macro layout, holding its
/// inherited weight-set entries plus its own projection and head parameters.
#[derive(Clone, Debug)]
pub struct MicroNet {
    genotype: Genotype,
    width: usize,
    classes: usize,
    cells: Vec<CellType>,
    tensors: Vec<Vec<f64>>,
    slots: BTreeMap<WeightKey, usize>,
    template: InheritedWeights,
    projections: Vec<Dense>,
    head: Dense,
}

/// Gradients, laid out exactly like [`MicroNet::tensors`].
pub type Gradients = Vec<Vec<f64>>;

impl MicroNet {
    /// Wires `genotype` over the macro layout. Projections are drawn uniform
    /// on `[-a, a)` with `a = sqrt(3 / fan_in)` from `init_seed`; the head
    /// starts at zero so every network initially predicts uniformly.
    pub fn build(
        genotype: &Genotype,
        macro_cfg: &MacroConfig,
        classes: usize,
        weights: InheritedWeights,
        init_seed: u64,
    ) -> Result<Self> {
        macro_cfg.validate()?;
        let width = macro_cfg.width;
        let registry = MicroRegistry { width };
        let needed = genotype_keys(genotype);
        if !weights.entries.keys().eq(needed.iter()) {
            return Err(Error::ShapeMismatch {
                key: "inherited key set".into(),
                expected: vec![needed.len()],
                actual: vec![weights.entries.len()],
            });
        }
        let mut tensors = Vec::new();
        let mut slots = BTreeMap::new();
        for (key, entry) in &weights.entries {
            let shape = registry.shape(key).expect("registry is total");
            if entry.shape != shape.dims || entry.params.len() != shape.numel() {
                return Err(Error::ShapeMismatch {
                    key: key.to_string(),
                    expected: shape.dims,
                    actual: entry.shape.clone(),
                });
            }
            if !entry.params.is_empty() {
                slots.insert(*key, tensors.len());
                tensors.push(entry.params.clone());
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
        let mut dense = |tensors: &mut Vec<Vec<f64>>, rows: usize, cols: usize, random: bool| {
            let a = (3.0 / cols as f64).sqrt();
            let w = (0..rows * cols)
                .map(|_| if random { rng.random_range(-a..a) } else { 0.0 })
                .collect();
            tensors.push(w);
            tensors.push(vec![0.0; rows]);
            Dense {
                weight: tensors.len() - 2,
                bias: tensors.len() - 1,
                rows,
                cols,
            }
        };
        let cells = macro_cfg.cells();
        let blocks = genotype.blocks_per_cell();
        let projections = cells
            .iter()
            .map(|&t| dense(&mut tensors, width, blocks * node_width(t, width), true))
            .collect();
        let head = dense(&mut tensors, classes, width, false);

        Ok(MicroNet {
            genotype: genotype.clone(),
            width,
            classes,
            cells,
            tensors,
            slots,
            template: weights,
            projections,
            head,
        })
    }

    pub fn tensors(&self) -> &[Vec<f64>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.tensors
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(Vec::len).sum()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Tensor index of a weight-set entry, if it carries parameters.
    pub fn slot_of(&self, key: &WeightKey) -> Option<usize> {
        self.slots.get(key).copied()
    }

    /// Projection `(weight, bias)` tensor indices of cell `c`.
    pub fn projection_slots(&self, c: usize) -> (usize, usize) {
        (self.projections[c].weight, self.projections[c].bias)
    }

    pub fn head_slots(&self) -> (usize, usize) {
        (self.head.weight, self.head.bias)
    }

    /// The trained weight-set entries, same keys, shapes and versions as inherited.
    pub fn into_trained(self) -> InheritedWeights {
        let mut out = self.template;
        for (key, &slot) in &self.slots {
            out.entries.get_mut(key).unwrap().params.clone_from(&self.tensors[slot]);
        }
        out
    }

    fn dense_forward(&self, d: Dense, x: &[f64]) -> Vec<f64> {
        let w = &self.tensors[d.weight];
        let b = &self.tensors[d.bias];
        (0..d.rows)
            .map(|r| b[r] + w[r * d.cols..(r + 1) * d.cols].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
            .collect()
    }

    fn dense_backward(&self, d: Dense, x: &[f64], dy: &[f64], grads: &mut Gradients) -> Vec<f64> {
        let w = &self.tensors[d.weight];
        let mut dx = vec![0.0; d.cols];
        for (r, &g) in dy.iter().enumerate() {
            grads[d.bias][r] += g;
            let row = r * d.cols;
            for c in 0..d.cols {
                grads[d.weight][row + c] += g * x[c];
                dx[c] += g * w[row + c];
            }
        }
        dx
    }

    fn edge_forward(&self, cell_type: CellType, source: usize, target: usize, op: OperationKind, x: &[f64]) -> (Vec<f64>, EdgeTape) {
        let (_, rows, stride) = edge_geometry(cell_type, source, self.width);
        let key = WeightKey::new(cell_type, source, target, op);
        let taps = op.kernel_size();
        match op.family() {
            OpFamily::SepConv => {
                let w = &self.tensors[self.slots[&key]];
                let (w1, w2) = w.split_at(rows * taps);
                let xr = relu(x);
                let a1 = banded(&xr, w1, rows, taps, stride, 1);
                let h1 = relu(&a1);
                let y = banded(&h1, w2, rows, taps, 1, 1);
                (y, EdgeTape::Sep { xr, a1, h1 })
            }
            OpFamily::DilConv => {
                let w = &self.tensors[self.slots[&key]];
                let xr = relu(x);
                (banded(&xr, w, rows, taps, stride, 2), EdgeTape::Dil { xr })
            }
            OpFamily::MaxPool => {
                let mut y = Vec::with_capacity(rows);
                let mut argmax = Vec::with_capacity(rows);
                for i in 0..rows {
                    let mut best = usize::MAX;
                    for j in window(stride * i, x.len()) {
                        if best == usize::MAX || x[j] > x[best] {
                            best = j;
                        }
                    }
                    y.push(x[best]);
                    argmax.push(best);
                }
                (y, EdgeTape::Max { argmax })
            }
            OpFamily::AvgPool => {
                let y = (0..rows)
                    .map(|i| {
                        let w = window(stride * i, x.len());
                        let n = w.clone().count() as f64;
                        w.map(|j| x[j]).sum::<f64>() / n
                    })
                    .collect();
                (y, EdgeTape::Avg)
            }
            OpFamily::Identity => ((0..rows).map(|i| x[stride * i]).collect(), EdgeTape::Identity),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn edge_backward(
        &self,
        cell_type: CellType,
        source: usize,
        target: usize,
        op: OperationKind,
        x: &[f64],
        tape: &EdgeTape,
        dy: &[f64],
        dx: &mut [f64],
        grads: &mut Gradients,
    ) {
        let (_, rows, stride) = edge_geometry(cell_type, source, self.width);
        let taps = op.kernel_size();
        let key = WeightKey::new(cell_type, source, target, op);
        match tape {
            EdgeTape::Sep { xr, a1, h1 } => {
                let slot = self.slots[&key];
                let (w1, w2) = self.tensors[slot].split_at(rows * taps);
                let (g1, g2) = grads[slot].split_at_mut(rows * taps);
                let mut dh1 = vec![0.0; rows];
                banded_backward(h1, w2, taps, 1, 1, dy, &mut dh1, g2);
                let da1 = relu_backward(a1, &dh1);
                let mut dxr = vec![0.0; x.len()];
                banded_backward(xr, w1, taps, stride, 1, &da1, &mut dxr, g1);
                dx.iter_mut().zip(relu_backward(x, &dxr)).for_each(|(d, v)| *d += v);
            }
            EdgeTape::Dil { xr } => {
                let slot = self.slots[&key];
                let mut dxr = vec![0.0; x.len()];
                banded_backward(xr, &self.tensors[slot], taps, stride, 2, dy, &mut dxr, &mut grads[slot]);
                dx.iter_mut().zip(relu_backward(x, &dxr)).for_each(|(d, v)| *d += v);
            }
            EdgeTape::Max { argmax } => {
                for (&j, &g) in argmax.iter().zip(dy) {
                    dx[j] += g;
                }
            }
            EdgeTape::Avg => {
                for (i, &g) in dy.iter().enumerate() {
                    let w = window(stride * i, x.len());
                    let n = w.clone().count() as f64;
                    for j in w {
                        dx[j] += g / n;
                    }
                }
            }
            EdgeTape::Identity => {
                for (i, &g) in dy.iter().enumerate() {
                    dx[stride * i] += g;
                }
            }
        }
    }

    fn cell_forward(&self, c: usize, s0: &[f64], s1: &[f64]) -> (Vec<f64>, CellTape) {
        let cell_type = self.cells[c];
        let cell = self.genotype.cell(cell_type);
        let w = node_width(cell_type, self.width);
        let mut nodes = vec![s0.to_vec(), s1.to_vec()];
        let mut edges = Vec::with_capacity(2 * cell.blocks.len());
        for (b, block) in cell.blocks.iter().enumerate() {
            let target = b + 2;
            let mut sum = vec![0.0; w];
            for (source, op) in block.edges() {
                let (y, tape) = self.edge_forward(cell_type, source, target, op, &nodes[source]);
                sum.iter_mut().zip(&y).for_each(|(s, v)| *s += v);
                edges.push(tape);
            }
            nodes.push(sum);
        }
        let concat = nodes[2..].concat();
        let out = self.dense_forward(self.projections[c], &concat);
        (out, CellTape { nodes, concat, edges })
    }

    /// Returns the gradients with respect to the two cell inputs.
    fn cell_backward(&self, c: usize, tape: &CellTape, dout: &[f64], grads: &mut Gradients) -> (Vec<f64>, Vec<f64>) {
        let cell_type = self.cells[c];
        let cell = self.genotype.cell(cell_type);
        let w = node_width(cell_type, self.width);
        let dconcat = self.dense_backward(self.projections[c], &tape.concat, dout, grads);
        let mut dnodes: Vec<Vec<f64>> = tape.nodes.iter().map(|n| vec![0.0; n.len()]).collect();
        for (b, chunk) in dconcat.chunks_exact(w).enumerate() {
            dnodes[b + 2].copy_from_slice(chunk);
        }
        for (b, block) in cell.blocks.iter().enumerate().rev() {
            let target = b + 2;
            let g = dnodes[target].clone();
            for (e, (source, op)) in block.edges().into_iter().enumerate().rev() {
                let mut dx = vec![0.0; tape.nodes[source].len()];
                self.edge_backward(
                    cell_type,
                    source,
                    target,
                    op,
                    &tape.nodes[source],
                    &tape.edges[2 * b + e],
                    &g,
                    &mut dx,
                    grads,
                );
                dnodes[source].iter_mut().zip(&dx).for_each(|(d, v)| *d += v);
            }
        }
        let mut it = dnodes.into_iter();
        (it.next().unwrap(), it.next().unwrap())
    }

    fn forward_tape(&self, x: &[f64]) -> ExampleTape {
        assert_eq!(x.len(), self.width, "feature width does not match the network");
        let n = self.cells.len();
        let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut inv_sigma = Vec::with_capacity(n);
        let mut cells = Vec::with_capacity(n);
        let mut cell_inputs = Vec::with_capacity(n);
        // Index `usize::MAX` denotes the network input.
        let input = usize::MAX;
        for c in 0..n {
            let i0 = if c >= 2 { c - 2 } else { input };
            let i1 = if c >= 1 { c - 1 } else { input };
            let get = |i: usize| if i == input { x } else { outputs[i].as_slice() };
            let (raw, tape) = self.cell_forward(c, get(i0), get(i1));
            let (out, inv) = standardize(&raw);
            outputs.push(out);
            inv_sigma.push(inv);
            cells.push(tape);
            cell_inputs.push((i0, i1));
        }
        let logits = self.dense_forward(self.head, outputs.last().unwrap());
        ExampleTape {
            cell_inputs,
            outputs,
            inv_sigma,
            cells,
            logits,
        }
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward_tape(x).logits
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    /// Mean cross-entropy over `examples`.
    pub fn loss(&self, examples: &[Example]) -> f64 {
        let total: f64 = examples
            .iter()
            .map(|e| cross_entropy(&self.logits(&e.features), e.label).0)
            .sum();
        total / examples.len() as f64
    }

    /// Mean cross-entropy over `batch` and its gradient.
    pub fn loss_and_gradients(&self, batch: &[&Example]) -> (f64, Gradients) {
        let mut grads: Gradients = self.tensors.iter().map(|t| vec![0.0; t.len()]).collect();
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for example in batch {
            let tape = self.forward_tape(&example.features);
            let (loss, mut dlogits) = cross_entropy(&tape.logits, example.label);
            total += loss;
            dlogits.iter_mut().for_each(|g| *g *= scale);
            let mut douts: Vec<Vec<f64>> = tape.outputs.iter().map(|o| vec![0.0; o.len()]).collect();
            let last = tape.outputs.len() - 1;
            douts[last] = self.dense_backward(self.head, &tape.outputs[last], &dlogits, &mut grads);
            for c in (0..tape.cells.len()).rev() {
                let dout = standardize_backward(&tape.outputs[c], tape.inv_sigma[c], &douts[c]);
                let (d0, d1) = self.cell_backward(c, &tape.cells[c], &dout, &mut grads);
                let (i0, i1) = tape.cell_inputs[c];
                for (i, d) in [(i0, d0), (i1, d1)] {
                    if i != usize::MAX {
                        douts[i].iter_mut().zip(&d).for_each(|(a, b)| *a += b);
                    }
                }
            }
        }
        (total * scale, grads)
    }

    /// Hash of every ReLU on/off state and max-pool choice over `examples`.
    /// Two parameter settings with equal signatures lie on the same smooth piece.
    pub fn activation_signature(&self, examples: &[&Example]) -> u64 {
        let mut h = DefaultHasher::new();
        for e in examples {
            for cell in self.forward_tape(&e.features).cells {
                for edge in &cell.edges {
                    match edge {
                        EdgeTape::Sep { xr, a1, .. } => {
                            xr.iter().chain(a1).for_each(|v| (*v > 0.0).hash(&mut h));
                        }
                        EdgeTape::Dil { xr } => xr.iter().for_each(|v| (*v > 0.0).hash(&mut h)),
                        EdgeTape::Max { argmax } => argmax.hash(&mut h),
                        EdgeTape::Avg | EdgeTape::Identity => {}
                    }
                }
            }
        }
        h.finish()
    }

    /// `w <- w - lr * (g + weight_decay * w)` on every tensor.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64, weight_decay: f64) {
        for (t, g) in self.tensors.iter_mut().zip(grads) {
            for (w, gi) in t.iter_mut().zip(g) {
                *w -= lr * (gi + weight_decay * *w);
            }
        }
    }

    /// One shuffled pass over the training set at the scheduled learning rate,
    /// then the mean validation cross-entropy. A zero learning rate skips
    /// training entirely.
    pub fn train_epoch(&mut self, hyper: &TrainHyper, data: &DatasetSplit, epoch_index: usize, shuffle_seed: u64) -> Result<f64> {
        let lr = hyper.learning_rate(epoch_index);
        if lr > 0.0 {
            let mut order: Vec<usize> = (0..data.train.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
            for chunk in order.chunks(hyper.batch_size) {
                let batch: Vec<&Example> = chunk.iter().map(|&i| &data.train[i]).collect();
                let (loss, grads) = self.loss_and_gradients(&batch);
                finite(loss)?;
                self.sgd_step(&grads, lr, hyper.weight_decay);
            }
        }
        finite(self.loss(&data.val))
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Loss and gradient with respect to the logits.
fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - m).exp()).sum();
    let lse = m + sum.ln();
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    (lse - logits[label], grad)
}

/// Backend that trains a [`MicroNet`] for one epoch per estimate.
#[derive(Clone, Debug)]
pub struct MicroNetEvaluator {
    pub macro_cfg: MacroConfig,
    pub hyper: TrainHyper,
    pub data: DatasetSplit,
    /// Seed for the per-network projection initialization, shared by all candidates.
    pub init_seed: u64,
    registry: MicroRegistry,
}

impl MicroNetEvaluator {
    pub fn new(macro_cfg: MacroConfig, hyper: TrainHyper, data: DatasetSplit, init_seed: u64) -> Result<Self> {
        macro_cfg.validate()?;
        hyper.validate()?;
        if data.dim != macro_cfg.width {
            return Err(Error::Config(format!(
                "dataset dimension {} does not match macro width {}",
                data.dim, macro_cfg.width
            )));
        }
        Ok(MicroNetEvaluator {
            registry: MicroRegistry { width: macro_cfg.width },
            macro_cfg,
            hyper,
            data,
            init_seed,
        })
    }

    pub fn build(&self, genotype: &Genotype, weights: InheritedWeights) -> Result<MicroNet> {
        MicroNet::build(genotype, &self.macro_cfg, self.data.classes, weights, self.init_seed)
    }
}

impl Evaluator for MicroNetEvaluator {
    fn shape_registry(&self) -> &dyn ShapeRegistry {
        &self.registry
    }

    fn estimate(&self, req: EstimationRequest<'_>) -> Result<EstimationResult> {
        let mut net = self.build(req.genotype, req.inherited)?;
        let validation_loss = net.train_epoch(&self.hyper, &self.data, req.epoch_index, req.shuffle_seed)?;
        Ok(EstimationResult {
            validation_loss,
            trained: net.into_trained(),
        })
    }
}
