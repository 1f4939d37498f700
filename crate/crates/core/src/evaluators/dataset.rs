use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Distance of every class mean from the origin.
const MEAN_NORM: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: usize,
}

/// Train and validation sets drawn from one generator. `train_ids` and
/// `val_ids` are the draw indices, disjoint by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub dim: usize,
    pub classes: usize,
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub train_ids: Vec<usize>,
    pub val_ids: Vec<usize>,
}

/// Class-conditional unit-covariance Gaussians. Class means are orthonormal
/// directions (when `classes <= dim`) scaled to norm 2; labels cycle through
/// the classes so each split is balanced within one example.
pub fn make_synthetic_dataset(
    seed: u64,
    classes: usize,
    dim: usize,
    train_size: usize,
    val_size: usize,
) -> DatasetSplit {
    assert!(classes >= 2, "need at least two classes");
    assert!(dim >= 1, "need at least one feature");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = class_means(&mut rng, classes, dim);

    let mut draw = |count: usize, first_id: usize| {
        let mut items: Vec<(usize, Example)> = (0..count)
            .map(|i| {
                let label = i % classes;
                let features = means[label]
                    .iter()
                    .map(|m| m + Distribution::<f64>::sample(&StandardNormal, &mut rng))
                    .collect();
                (first_id + i, Example { features, label })
            })
            .collect();
        items.shuffle(&mut rng);
        items.into_iter().unzip::<_, _, Vec<_>, Vec<_>>()
    };
    let (train_ids, train) = draw(train_size, 0);
    let (val_ids, val) = draw(val_size, train_size);
    DatasetSplit {
        dim,
        classes,
        train,
        val,
        train_ids,
        val_ids,
    }
}

fn class_means(rng: &mut ChaCha8Rng, classes: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(classes);
    while basis.len() < classes {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        // Gram-Schmidt against the directions so far while they can still be orthogonal.
        if basis.len() < dim {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        basis.push(v.into_iter().map(|x| x / norm).collect());
    }
    basis
        .into_iter()
        .map(|b| b.into_iter().map(|x| x * MEAN_NORM).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn seeded_and_balanced() {
        let a = make_synthetic_dataset(4, 4, 16, 2048, 512);
        assert_eq!(a, make_synthetic_dataset(4, 4, 16, 2048, 512));
        assert_ne!(a, make_synthetic_dataset(5, 4, 16, 2048, 512));
        for split in [&a.train, &a.val] {
            let mut counts = [0usize; 4];
            split.iter().for_each(|e| counts[e.label] += 1);
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(hi - lo <= 1, "{counts:?}");
        }
        let odd = make_synthetic_dataset(4, 3, 16, 100, 10);
        let mut counts = [0usize; 3];
        odd.train.iter().for_each(|e| counts[e.label] += 1);
        assert_eq!(counts, [34, 33, 33]);
    }

    #[test]
    fn splits_are_disjoint() {
        let d = make_synthetic_dataset(1, 4, 16, 300, 100);
        let train: HashSet<_> = d.train_ids.iter().collect();
        let val: HashSet<_> = d.val_ids.iter().collect();
        assert_eq!(train.len(), 300);
        assert_eq!(val.len(), 100);
        assert!(train.is_disjoint(&val));
    }

    #[test]
    fn means_are_orthogonal_with_norm_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = class_means(&mut rng, 4, 16);
        for i in 0..4 {
            let n: f64 = m[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 2.0).abs() < 1e-12);
            for j in 0..i {
                let dot: f64 = m[i].iter().zip(&m[j]).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-9);
            }
        }
    }
}
