//! Pairwise slow-fast learning over a population of architecture vectors.
//!
//! Each generation the population is split into random pairs. Within a pair
//! the member with the lower estimated loss is the fast learner and stays
//! put; the other (slow) member moves by the pseudo-gradient
//!
//! ```text
//! delta = l1 * (alpha_fast - alpha_slow) + l2 * delta_prev_slow
//! ```
//!
//! with `l1, l2 ~ U[0, 1]`, and is clamped back into the gene intervals.

mod search;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search_space::{ArchVector, SearchSpaceScheme};

pub use search::{run, step_generation, BestRecord, GenerationRngs, GenerationStats, LossRecord, SearchResult, SearchState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: usize,
    pub alpha: ArchVector,
    /// The previous update applied to this individual (pre-clamp).
    pub delta_prev: Vec<f64>,
    pub last_loss: Option<f64>,
}

impl Individual {
    pub fn new(id: usize, alpha: ArchVector) -> Self {
        let len = alpha.len();
        Individual {
            id,
            alpha,
            delta_prev: vec![0.0; len],
            last_loss: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub individuals: Vec<Individual>,
    /// Number of completed generations.
    pub generation: usize,
}

impl Population {
    /// `n` individuals with ids `0..n` and uniformly drawn vectors.
    pub fn random<R: Rng + ?Sized>(n: usize, scheme: &SearchSpaceScheme, rng: &mut R) -> Self {
        let individuals = (0..n)
            .map(|id| Individual::new(id, crate::search_space::random_arch(rng, scheme)))
            .collect();
        Population {
            individuals,
            generation: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSampling {
    /// One `l1` and one `l2` per pair, shared by all coordinates.
    Scalar,
    /// Independent draws per coordinate.
    #[default]
    PerCoordinate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlowFastConfig {
    pub population: usize,
    pub generations: usize,
    pub lambda_sampling: LambdaSampling,
    /// Pins `(l1, l2)` instead of sampling; for diagnostics and tests.
    pub fixed_lambdas: Option<[f64; 2]>,
    pub clamp_epsilon: f64,
    /// Run the two estimates of a pair on separate threads.
    pub concurrent_pair_estimates: bool,
}

impl Default for SlowFastConfig {
    fn default() -> Self {
        SlowFastConfig {
            population: 20,
            generations: 50,
            lambda_sampling: LambdaSampling::PerCoordinate,
            fixed_lambdas: None,
            clamp_epsilon: 1e-6,
            concurrent_pair_estimates: false,
        }
    }
}

impl SlowFastConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 || self.population % 2 != 0 {
            return Err(Error::Config(format!(
                "population must be even and at least 2, got {}",
                self.population
            )));
        }
        if self.generations == 0 {
            return Err(Error::Config("generations must be at least 1".into()));
        }
        if !(self.clamp_epsilon > 0.0 && self.clamp_epsilon < 1.0) {
            return Err(Error::Config(format!(
                "clamp_epsilon must lie in (0, 1), got {}",
                self.clamp_epsilon
            )));
        }
        if let Some([l1, l2]) = self.fixed_lambdas {
            if !(0.0..=1.0).contains(&l1) || !(0.0..=1.0).contains(&l2) {
                return Err(Error::Config("fixed lambdas must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn evaluation_budget(&self) -> usize {
        self.population * self.generations
    }
}

/// Disjoint index pairs covering `0..N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingPlan {
    pub pairs: Vec<(usize, usize)>,
}

/// Uniform random perfect matching: shuffle the indices, pair neighbours.
pub fn pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PairingPlan> {
    if n % 2 != 0 {
        return Err(Error::OddPopulation(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ok(PairingPlan {
        pairs: order.chunks_exact(2).map(|c| (c[0], c[1])).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairMember {
    First,
    Second,
}

/// Returns `(fast, slow)`. Lower loss is fast; on an exact tie the member
/// with the lower id is fast.
pub fn classify(
    loss_first: f64,
    loss_second: f64,
    id_first: usize,
    id_second: usize,
) -> Result<(PairMember, PairMember)> {
    for loss in [loss_first, loss_second] {
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss(loss));
        }
    }
    let first_fast = loss_first < loss_second || (loss_first == loss_second && id_first < id_second);
    Ok(if first_fast {
        (PairMember::First, PairMember::Second)
    } else {
        (PairMember::Second, PairMember::First)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Lambdas {
    Scalar { l1: f64, l2: f64 },
    PerCoordinate { l1: Vec<f64>, l2: Vec<f64> },
}

impl Lambdas {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, len: usize, config: &SlowFastConfig) -> Self {
        if let Some([l1, l2]) = config.fixed_lambdas {
            return Lambdas::Scalar { l1, l2 };
        }
        match config.lambda_sampling {
            LambdaSampling::Scalar => {
                let l1 = rng.random::<f64>();
                let l2 = rng.random::<f64>();
                Lambdas::Scalar { l1, l2 }
            }
            LambdaSampling::PerCoordinate => {
                let l1 = (0..len).map(|_| rng.random()).collect();
                let l2 = (0..len).map(|_| rng.random()).collect();
                Lambdas::PerCoordinate { l1, l2 }
            }
        }
    }

    fn at(&self, i: usize) -> (f64, f64) {
        match self {
            Lambdas::Scalar { l1, l2 } => (*l1, *l2),
            Lambdas::PerCoordinate { l1, l2 } => (l1[i], l2[i]),
        }
    }
}

pub fn pseudo_gradient(slow: &Individual, fast: &Individual, lambdas: &Lambdas) -> Result<Vec<f64>> {
    let n = slow.alpha.len();
    if fast.alpha.len() != n || slow.delta_prev.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: if fast.alpha.len() != n {
                fast.alpha.len()
            } else {
                slow.delta_prev.len()
            },
        });
    }
    if let Lambdas::PerCoordinate { l1, l2 } = lambdas {
        if l1.len() != n || l2.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: l1.len().min(l2.len()),
            });
        }
    }
    Ok(slow
        .alpha
        .as_slice()
        .iter()
        .zip(fast.alpha.as_slice())
        .zip(&slow.delta_prev)
        .enumerate()
        .map(|(i, ((s, f), d))| {
            let (l1, l2) = lambdas.at(i);
            l1 * (f - s) + l2 * d
        })
        .collect())
}

/// Moves the slow learner by `delta` and clamps each gene into
/// `[lo, hi - epsilon]`. The unclamped `delta` becomes the new momentum.
pub fn update_slow(slow: &Individual, delta: &[f64], scheme: &SearchSpaceScheme, epsilon: f64) -> Individual {
    assert_eq!(delta.len(), slow.alpha.len(), "delta length");
    let values = slow
        .alpha
        .as_slice()
        .iter()
        .zip(delta)
        .zip(scheme.intervals())
        .map(|((a, d), interval)| (a + d).clamp(interval.lo, interval.hi - epsilon))
        .collect();
    Individual {
        id: slow.id,
        alpha: ArchVector::from_valid(values),
        delta_prev: delta.to_vec(),
        last_loss: slow.last_loss,
    }
}

/// One slow-learner update against `fast`: computes the pseudo-gradient and
/// moves each gene to `slow + delta`, clamped like [`update_slow`]. The sum is
/// formed from whichever endpoint is nearer (`fast + (1 - l1) * (slow - fast)
/// + l2 * delta_prev` once `l1 >= 0.5`), so a zero delta leaves the gene
/// exactly in place and `l1 = 1` without momentum lands exactly on `fast`.
pub fn step_slow(
    slow: &Individual,
    fast: &Individual,
    lambdas: &Lambdas,
    scheme: &SearchSpaceScheme,
    epsilon: f64,
) -> Result<Individual> {
    let delta = pseudo_gradient(slow, fast, lambdas)?;
    let values = slow
        .alpha
        .as_slice()
        .iter()
        .zip(fast.alpha.as_slice())
        .zip(&slow.delta_prev)
        .zip(scheme.intervals())
        .enumerate()
        .map(|(i, (((&s, &f), &d), interval))| {
            let (l1, l2) = lambdas.at(i);
            let moved = if delta[i] == 0.0 {
                s
            } else if l1 >= 0.5 {
                f + ((1.0 - l1) * (s - f) + l2 * d)
            } else {
                s + delta[i]
            };
            moved.clamp(interval.lo, interval.hi - epsilon)
        })
        .collect();
    Ok(Individual {
        id: slow.id,
        alpha: ArchVector::from_valid(values),
        delta_prev: delta,
        last_loss: slow.last_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search_space::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_gene(alpha: f64, delta_prev: f64) -> Individual {
        Individual {
            id: 0,
            alpha: ArchVector::from_valid(vec![alpha]),
            delta_prev: vec![delta_prev],
            last_loss: None,
        }
    }

    #[test]
    fn pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..5 {
            let plan = pair(2, &mut rng).unwrap();
            let (a, b) = plan.pairs[0];
            assert_eq!((a.min(b), a.max(b)), (0, 1));
        }
        let a = pair(4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, pair(4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap());
        let mut seen: Vec<usize> = pair(20, &mut rng).unwrap().pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..20).collect::<Vec<_>>());
        assert!(matches!(pair(5, &mut rng), Err(Error::OddPopulation(5))));
    }

    #[test]
    fn classification() {
        use PairMember::*;
        assert_eq!(classify(0.5, 0.7, 0, 1).unwrap(), (First, Second));
        assert_eq!(classify(0.7, 0.5, 0, 1).unwrap(), (Second, First));
        assert_eq!(classify(0.5, 0.5, 3, 7).unwrap(), (First, Second));
        assert_eq!(classify(0.5, 0.5, 7, 3).unwrap(), (Second, First));
        assert!(matches!(classify(f64::NAN, 0.5, 0, 1), Err(Error::NonFiniteLoss(_))));
        assert!(classify(0.1, f64::INFINITY, 0, 1).is_err());
    }

    #[test]
    fn pseudo_gradient_arithmetic() {
        let d = pseudo_gradient(&one_gene(2.0, 0.0), &one_gene(4.0, 0.0), &Lambdas::Scalar { l1: 0.5, l2: 0.9 }).unwrap();
        assert_eq!(d, vec![1.0]);
        let d = pseudo_gradient(&one_gene(2.0, 0.6), &one_gene(2.0, 0.0), &Lambdas::Scalar { l1: 0.3, l2: 0.5 }).unwrap();
        assert_eq!(d, vec![0.3]);
        let slow = Individual::new(0, ArchVector::from_valid(vec![0.5, 1.5, 3.25]));
        let fast = Individual::new(1, ArchVector::from_valid(vec![1.0, 0.25, 6.0]));
        let d = pseudo_gradient(&slow, &fast, &Lambdas::Scalar { l1: 1.0, l2: 0.0 }).unwrap();
        assert_eq!(d, vec![0.5, -1.25, 2.75]);
        let short = Individual::new(2, ArchVector::from_valid(vec![0.5]));
        assert!(matches!(
            pseudo_gradient(&slow, &short, &Lambdas::Scalar { l1: 1.0, l2: 0.0 }),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn per_coordinate_lambdas() {
        let config = SlowFastConfig {
            lambda_sampling: LambdaSampling::PerCoordinate,
            ..SlowFastConfig::default()
        };
        let l = Lambdas::draw(&mut ChaCha8Rng::seed_from_u64(1), 3, &config);
        let Lambdas::PerCoordinate { l1, l2 } = &l else { panic!() };
        assert!(l1.iter().chain(l2).all(|v| (0.0..1.0).contains(v)));
        let slow = Individual::new(0, ArchVector::from_valid(vec![0.0, 0.0, 0.0]));
        let fast = Individual::new(1, ArchVector::from_valid(vec![1.0, 1.0, 1.0]));
        assert_eq!(pseudo_gradient(&slow, &fast, &l).unwrap(), *l1);
    }

    #[test]
    fn clamping_and_momentum() {
        let scheme = SearchSpaceScheme::new(1).unwrap();
        let mut alpha = vec![0.5; 8];
        alpha[1] = 6.5;
        let slow = Individual::new(0, ArchVector::new(alpha, &scheme).unwrap());
        let mut delta = vec![0.0; 8];
        delta[1] = 2.0;
        delta[0] = -3.0;
        let out = update_slow(&slow, &delta, &scheme, 1e-6);
        assert_eq!(out.alpha.as_slice()[1], 7.0 - 1e-6);
        assert_eq!(out.alpha.as_slice()[0], 0.0);
        assert_eq!(out.delta_prev, delta);
        assert!(validate(out.alpha.as_slice(), &scheme).unwrap().is_valid());

        let same = update_slow(&slow, &[0.0; 8], &scheme, 1e-6);
        assert_eq!(same.alpha, slow.alpha);
        assert_eq!(same.delta_prev, vec![0.0; 8]);
    }

    #[test]
    fn step_slow_absorbs_exactly_and_matches_delta_form() {
        let scheme = SearchSpaceScheme::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let slow = Individual::new(0, crate::search_space::random_arch(&mut rng, &scheme));
            let fast = Individual::new(1, crate::search_space::random_arch(&mut rng, &scheme));
            let out = step_slow(&slow, &fast, &Lambdas::Scalar { l1: 1.0, l2: 0.0 }, &scheme, 1e-6).unwrap();
            assert_eq!(out.alpha, fast.alpha);

            let mut moving = slow.clone();
            moving.delta_prev = (0..scheme.len()).map(|_| rng.random_range(-0.5..0.5)).collect();
            let l = Lambdas::draw(&mut rng, scheme.len(), &SlowFastConfig::default());
            let a = step_slow(&moving, &fast, &l, &scheme, 1e-6).unwrap();
            let delta = pseudo_gradient(&moving, &fast, &l).unwrap();
            let b = update_slow(&moving, &delta, &scheme, 1e-6);
            assert_eq!(a.delta_prev, b.delta_prev);
            for (x, y) in a.alpha.as_slice().iter().zip(b.alpha.as_slice()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(SlowFastConfig::default().validate().is_ok());
        for bad in [
            SlowFastConfig { population: 3, ..Default::default() },
            SlowFastConfig { generations: 0, ..Default::default() },
            SlowFastConfig { clamp_epsilon: 0.0, ..Default::default() },
            SlowFastConfig { fixed_lambdas: Some([1.5, 0.0]), ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
