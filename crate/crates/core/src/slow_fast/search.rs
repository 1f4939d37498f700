use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{classify, pair, step_slow, Lambdas, PairMember, Population, SlowFastConfig};
use crate::error::{Error, Result};
use crate::evaluators::{EstimationRequest, EstimationResult, Evaluator};
use crate::rng::{self, SeedStreams};
use crate::search_space::{decode, Genotype, SearchSpaceScheme};
use crate::weight_store::{InheritedWeights, WeightSet};

/// One row of the per-generation log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub individual_id: usize,
    pub loss: f64,
    pub is_fast: bool,
    pub pair_index: usize,
    pub genotype: Genotype,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// In pair order, first member before second.
    pub records: Vec<LossRecord>,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub spread: f64,
}

impl GenerationStats {
    fn from_records(generation: usize, records: Vec<LossRecord>) -> Self {
        let n = records.len() as f64;
        let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for r in &records {
            min = min.min(r.loss);
            max = max.max(r.loss);
            sum += r.loss;
        }
        GenerationStats {
            generation,
            records,
            min,
            mean: sum / n,
            max,
            spread: max - min,
        }
    }
}

/// Random sources consumed by one generation.
pub struct GenerationRngs<'a> {
    pub pairing: &'a mut ChaCha8Rng,
    pub lambdas: &'a mut ChaCha8Rng,
    /// Combined with generation and individual id into per-estimate shuffle seeds.
    pub shuffle_base: u64,
}

fn estimate_one(
    evaluator: &dyn Evaluator,
    genotype: &Genotype,
    inherited: InheritedWeights,
    generation: usize,
    id: usize,
    shuffle_base: u64,
) -> Result<EstimationResult> {
    evaluator
        .estimate(EstimationRequest {
            genotype,
            inherited,
            epoch_index: generation,
            shuffle_seed: rng::mix(shuffle_base, &[generation as u64, id as u64]),
        })
        .map_err(|e| Error::Evaluation {
            id,
            source: Box::new(e),
        })
        .and_then(|r| {
            if r.validation_loss.is_finite() {
                Ok(r)
            } else {
                Err(Error::Evaluation {
                    id,
                    source: Box::new(Error::NonFiniteLoss(r.validation_loss)),
                })
            }
        })
}

/// Runs one generation in place. Pairs are processed sequentially in plan
/// order; both members of a pair inherit from the same snapshot of the
/// weight set, and the pair's commit happens before the next pair starts.
pub fn step_generation(
    pop: &mut Population,
    evaluator: &dyn Evaluator,
    omega: &mut WeightSet,
    scheme: &SearchSpaceScheme,
    config: &SlowFastConfig,
    rngs: GenerationRngs<'_>,
) -> Result<GenerationStats> {
    let generation = pop.generation + 1;
    let plan = pair(pop.len(), rngs.pairing)?;
    let mut records = Vec::with_capacity(pop.len());

    for (pair_index, &(i, j)) in plan.pairs.iter().enumerate() {
        let (a, b) = (&pop.individuals[i], &pop.individuals[j]);
        let (ga, gb) = (decode(&a.alpha, scheme)?, decode(&b.alpha, scheme)?);
        let (wa, wb) = (omega.inherit(&ga), omega.inherit(&gb));
        let (ra, rb) = if config.concurrent_pair_estimates {
            std::thread::scope(|s| {
                let ha = s.spawn(|| estimate_one(evaluator, &ga, wa, generation, a.id, rngs.shuffle_base));
                let rb = estimate_one(evaluator, &gb, wb, generation, b.id, rngs.shuffle_base);
                (ha.join().expect("estimate thread panicked"), rb)
            })
        } else {
            (
                estimate_one(evaluator, &ga, wa, generation, a.id, rngs.shuffle_base),
                estimate_one(evaluator, &gb, wb, generation, b.id, rngs.shuffle_base),
            )
        };
        let (ra, rb) = (ra?, rb?);

        let (fast, _) = classify(ra.validation_loss, rb.validation_loss, a.id, b.id)?;
        let first_fast = fast == PairMember::First;
        let (fi, si) = if first_fast { (i, j) } else { (j, i) };
        let (rf, rs) = if first_fast { (&ra, &rb) } else { (&rb, &ra) };
        omega.commit(&rf.trained, &rs.trained)?;

        let lambdas = Lambdas::draw(rngs.lambdas, scheme.len(), config);
        let updated = step_slow(&pop.individuals[si], &pop.individuals[fi], &lambdas, scheme, config.clamp_epsilon)?;
        pop.individuals[si] = updated;

        pop.individuals[i].last_loss = Some(ra.validation_loss);
        pop.individuals[j].last_loss = Some(rb.validation_loss);
        records.push(LossRecord {
            individual_id: pop.individuals[i].id,
            loss: ra.validation_loss,
            is_fast: first_fast,
            pair_index,
            genotype: ga,
        });
        records.push(LossRecord {
            individual_id: pop.individuals[j].id,
            loss: rb.validation_loss,
            is_fast: !first_fast,
            pair_index,
            genotype: gb,
        });
    }
    pop.generation = generation;
    Ok(GenerationStats::from_records(generation, records))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub genotype: Genotype,
    pub loss: f64,
    pub generation: usize,
    pub individual_id: usize,
}

/// Everything needed to continue a search; checkpoints serialize this.
#[derive(Clone, Debug)]
pub struct SearchState {
    pub population: Population,
    pub omega: WeightSet,
    pub best: Option<BestRecord>,
    pub history: Vec<GenerationStats>,
    pub pairing_rng: ChaCha8Rng,
    pub lambda_rng: ChaCha8Rng,
    pub shuffle_base: u64,
}

impl SearchState {
    pub fn initialize(
        config: &SlowFastConfig,
        scheme: &SearchSpaceScheme,
        evaluator: &dyn Evaluator,
        streams: &SeedStreams,
    ) -> Result<Self> {
        config.validate()?;
        let population = Population::random(config.population, scheme, &mut streams.rng(rng::POPULATION));
        let omega = WeightSet::init(scheme, evaluator.shape_registry(), &mut streams.rng(rng::OMEGA))?;
        Ok(SearchState {
            population,
            omega,
            best: None,
            history: Vec::new(),
            pairing_rng: streams.rng(rng::PAIRING),
            lambda_rng: streams.rng(rng::LAMBDAS),
            shuffle_base: streams.seed_u64(rng::BATCH_SHUFFLE),
        })
    }

    pub fn generation(&self) -> usize {
        self.population.generation
    }

    pub fn is_finished(&self, config: &SlowFastConfig) -> bool {
        self.generation() >= config.generations
    }

    pub fn step(
        &mut self,
        evaluator: &dyn Evaluator,
        scheme: &SearchSpaceScheme,
        config: &SlowFastConfig,
    ) -> Result<&GenerationStats> {
        let stats = step_generation(
            &mut self.population,
            evaluator,
            &mut self.omega,
            scheme,
            config,
            GenerationRngs {
                pairing: &mut self.pairing_rng,
                lambdas: &mut self.lambda_rng,
                shuffle_base: self.shuffle_base,
            },
        )?;
        for r in &stats.records {
            if self.best.as_ref().is_none_or(|b| r.loss < b.loss) {
                self.best = Some(BestRecord {
                    genotype: r.genotype.clone(),
                    loss: r.loss,
                    generation: stats.generation,
                    individual_id: r.individual_id,
                });
            }
        }
        self.history.push(stats);
        Ok(self.history.last().unwrap())
    }

    pub fn into_result(self) -> Result<SearchResult> {
        let best = self
            .best
            .ok_or_else(|| Error::Config("search finished without any generation".into()))?;
        Ok(SearchResult {
            best,
            history: self.history,
            population: self.population,
            omega: self.omega,
        })
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    /// All-time lowest estimated loss; the earliest wins ties.
    pub best: BestRecord,
    pub history: Vec<GenerationStats>,
    pub population: Population,
    pub omega: WeightSet,
}

/// Full search from `seed`: initialize, then `config.generations` generations.
pub fn run(
    config: &SlowFastConfig,
    scheme: &SearchSpaceScheme,
    evaluator: &dyn Evaluator,
    seed: u64,
) -> Result<SearchResult> {
    let mut state = SearchState::initialize(config, scheme, evaluator, &SeedStreams::new(seed))?;
    while !state.is_finished(config) {
        state.step(evaluator, scheme, config)?;
    }
    state.into_result()
}
