//! Genetic-algorithm wrapper feature selection.
//!
//! Individuals are bitsets over the dataset's feature columns; fitness is the
//! mean stratified 5-fold CV AUC of a model trained on the selected columns.
//! Two GWAS-oriented modifications sit on top of a plain generational GA:
//!
//! * every variation operator is followed by a size-limit repair that
//!   randomly deselects features above `size_limit` (and re-activates one
//!   random feature if a subset became empty);
//! * with decision-tree fitness, crossover first reduces both parents to the
//!   features their trees actually split on.

mod bitset;
mod operators;

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{stratified_kfold, Fold, GenotypeDataset};
use crate::error::{Error, Result};
use crate::mlcore::{cv_fitness_with_folds, ModelKind};
use crate::seed::{rng_from, splitmix64};

pub use bitset::BitSet;
pub use operators::{
    bitflip_mutation, compare_fitness, repair_size_limit, repair_within, tournament_select,
    tree_aware_crossover, uniform_crossover,
};

/// GA individual.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub selected: BitSet,
    /// Mean CV AUC from the last evaluation.
    pub fitness: Option<f64>,
    /// Features the fitness models used; always a subset of `selected`.
    pub used: Option<BitSet>,
}

impl Chromosome {
    pub fn new(selected: BitSet) -> Self {
        Self {
            selected,
            fitness: None,
            used: None,
        }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        Self::new(BitSet::from_indices(len, indices))
    }

    pub fn size(&self) -> usize {
        self.selected.count_ones()
    }

    pub(crate) fn invalidate(&mut self) {
        self.fitness = None;
        self.used = None;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GAConfig {
    pub pop_size: usize,
    pub ngen: usize,
    pub tour_size: usize,
    /// Probability that a consecutive offspring pair is crossed.
    pub cxpb: f64,
    /// Probability that an offspring is mutated.
    pub mutpb: f64,
    pub size_limit: usize,
    pub fitness_kind: ModelKind,
    /// Per-bit flip rate inside a mutation; `1 / n_features` when absent.
    pub per_bit_rate: Option<f64>,
    pub elitism_count: usize,
    pub cv_folds: usize,
    pub seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self::simulation(ModelKind::decision_tree())
    }
}

impl GAConfig {
    /// Simulation-study settings.
    pub fn simulation(fitness_kind: ModelKind) -> Self {
        Self {
            pop_size: 200,
            ngen: 50,
            tour_size: 3,
            cxpb: 0.5,
            mutpb: 0.2,
            size_limit: 5,
            fitness_kind,
            per_bit_rate: None,
            elitism_count: 1,
            cv_folds: 5,
            seed: 0,
        }
    }

    /// GWAS-cohort settings; trees get twice the generations.
    pub fn gwas(fitness_kind: ModelKind) -> Self {
        Self {
            pop_size: 1000,
            ngen: if fitness_kind.is_tree_based() { 100 } else { 50 },
            tour_size: 6,
            cxpb: 0.8,
            mutpb: 0.2,
            size_limit: 200,
            fitness_kind,
            per_bit_rate: None,
            elitism_count: 1,
            cv_folds: 5,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pop_size == 0 {
            return Err(Error::param("pop_size", "must be at least 1"));
        }
        if self.tour_size == 0 {
            return Err(Error::param("tour_size", "must be at least 1"));
        }
        if self.size_limit == 0 {
            return Err(Error::param("size_limit", "must be at least 1"));
        }
        for (name, p) in [("cxpb", self.cxpb), ("mutpb", self.mutpb)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(name, format!("{} is outside [0, 1]", p)));
            }
        }
        if let Some(r) = self.per_bit_rate {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::param("per_bit_rate", format!("{} is outside [0, 1]", r)));
            }
        }
        if self.elitism_count > self.pop_size {
            return Err(Error::param("elitism_count", "exceeds pop_size"));
        }
        if self.cv_folds < 2 {
            return Err(Error::param("cv_folds", "must be at least 2"));
        }
        self.fitness_kind.validate()
    }

    fn tree_mode(&self) -> bool {
        matches!(self.fitness_kind, ModelKind::DecisionTree(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub min_size: usize,
    pub max_size: usize,
    /// Best fitness seen so far in the run.
    pub best_ever: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub best_subset: Vec<usize>,
    pub best_fitness: f64,
    pub generations_executed: usize,
    pub evaluations_count: usize,
    pub cache_hits: usize,
    pub seed: u64,
    pub history: Vec<GenerationStats>,
}

#[derive(Clone)]
struct Evaluated {
    fitness: f64,
    used: Vec<usize>,
}

/// Fitness evaluator for one run: fixed folds plus a memo keyed on the
/// selected feature list.
struct Evaluator<'a> {
    dataset: &'a GenotypeDataset,
    kind: ModelKind,
    folds: Vec<Fold>,
    fit_seed: u64,
    cache: HashMap<Vec<u32>, Evaluated>,
    evaluations: usize,
    hits: usize,
}

impl Evaluator<'_> {
    /// Fills fitness and `used` for every individual, evaluating each distinct
    /// uncached subset once. Every individual counts as either an evaluation
    /// or a cache hit.
    fn evaluate(&mut self, population: &mut [Chromosome]) -> Result<()> {
        let keys: Vec<Vec<u32>> = population
            .iter()
            .map(|c| c.selected.ones().map(|i| i as u32).collect())
            .collect();
        let mut pending: Vec<&Vec<u32>> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for key in &keys {
            if !self.cache.contains_key(key) && queued.insert(key) {
                pending.push(key);
            }
        }
        let results: Vec<Result<Evaluated>> = pending
            .par_iter()
            .map(|key| {
                let features: Vec<usize> = key.iter().map(|&i| i as usize).collect();
                let r = cv_fitness_with_folds(
                    self.dataset,
                    &features,
                    &self.kind,
                    &self.folds,
                    self.fit_seed,
                )?;
                Ok(Evaluated {
                    fitness: r.mean_auc,
                    used: r.used_features,
                })
            })
            .collect();
        self.evaluations += pending.len();
        self.hits += population.len() - pending.len();
        for (key, r) in pending.into_iter().zip(results) {
            self.cache.insert(key.clone(), r?);
        }
        let n = self.dataset.n_features();
        for (c, key) in population.iter_mut().zip(&keys) {
            let e = &self.cache[key];
            c.fitness = Some(e.fitness);
            c.used = Some(BitSet::from_indices(n, e.used.iter().copied()));
        }
        Ok(())
    }
}

fn random_individual<R: Rng>(n: usize, size_limit: usize, rng: &mut R) -> Chromosome {
    let size = rng.gen_range(1..=size_limit.min(n));
    Chromosome::from_indices(n, sample(rng, n, size))
}

fn generation_stats(generation: usize, pop: &[Chromosome], best_ever: f64) -> GenerationStats {
    let fit: Vec<f64> = pop.iter().map(|c| c.fitness.unwrap_or(f64::NAN)).collect();
    GenerationStats {
        generation,
        best_fitness: fit.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_fitness: fit.iter().sum::<f64>() / fit.len() as f64,
        min_size: pop.iter().map(Chromosome::size).min().unwrap_or(0),
        max_size: pop.iter().map(Chromosome::size).max().unwrap_or(0),
        best_ever,
    }
}

/// Index of the best individual: highest fitness, then fewest features,
/// then lowest index.
fn best_index(pop: &[Chromosome]) -> usize {
    let mut best = 0;
    for i in 1..pop.len() {
        if compare_fitness(&pop[i], &pop[best]) == std::cmp::Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Runs one GA for exactly `config.ngen` generations and returns the best
/// subset ever evaluated.
pub fn evolve(dataset: &GenotypeDataset, config: &GAConfig) -> Result<RunResult> {
    config.validate()?;
    if !dataset.has_both_classes() {
        return Err(Error::Precondition("dataset needs both classes".into()));
    }
    let n = dataset.n_features();
    if n == 0 {
        return Err(Error::Precondition("dataset has no features".into()));
    }
    let folds = stratified_kfold(dataset, config.cv_folds, splitmix64(config.seed))?;
    let mut evaluator = Evaluator {
        dataset,
        kind: config.fitness_kind,
        folds,
        fit_seed: config.seed,
        cache: HashMap::new(),
        evaluations: 0,
        hits: 0,
    };
    let mut rng = rng_from(config.seed);
    let per_bit = config.per_bit_rate.unwrap_or(1.0 / n as f64);
    let limit = config.size_limit;

    let mut pop: Vec<Chromosome> = (0..config.pop_size)
        .map(|_| random_individual(n, limit, &mut rng))
        .collect();
    evaluator.evaluate(&mut pop)?;
    let mut best = pop[best_index(&pop)].clone();
    let mut history = vec![generation_stats(0, &pop, best.fitness.unwrap())];

    for generation in 1..=config.ngen {
        let mut ranked: Vec<usize> = (0..pop.len()).collect();
        ranked.sort_by(|&a, &b| compare_fitness(&pop[b], &pop[a]).then(a.cmp(&b)));
        let mut next: Vec<Chromosome> = ranked[..config.elitism_count]
            .iter()
            .map(|&i| pop[i].clone())
            .collect();

        let mut offspring = Vec::with_capacity(config.pop_size - config.elitism_count);
        for _ in 0..config.pop_size - config.elitism_count {
            let i = tournament_select(&pop, config.tour_size, &mut rng)?;
            offspring.push(pop[i].clone());
        }
        let mut k = 1;
        while k < offspring.len() {
            if rng.gen::<f64>() < config.cxpb {
                let (c1, c2) = if config.tree_mode() {
                    tree_aware_crossover(&offspring[k - 1], &offspring[k], limit, &mut rng)?
                } else {
                    uniform_crossover(&offspring[k - 1], &offspring[k], limit, &mut rng)
                };
                offspring[k - 1] = c1;
                offspring[k] = c2;
            }
            k += 2;
        }
        for c in offspring.iter_mut() {
            if rng.gen::<f64>() < config.mutpb {
                *c = bitflip_mutation(c, per_bit, limit, &mut rng);
            }
        }
        next.extend(offspring);
        for c in next.iter_mut() {
            c.invalidate();
        }
        evaluator.evaluate(&mut next)?;
        pop = next;
        let gen_best = &pop[best_index(&pop)];
        if compare_fitness(gen_best, &best) == std::cmp::Ordering::Greater {
            best = gen_best.clone();
        }
        history.push(generation_stats(generation, &pop, best.fitness.unwrap()));
    }

    Ok(RunResult {
        best_subset: best.selected.to_indices(),
        best_fitness: best.fitness.unwrap(),
        generations_executed: config.ngen,
        evaluations_count: evaluator.evaluations,
        cache_hits: evaluator.hits,
        seed: config.seed,
        history,
    })
}

/// `n_runs` independent GA runs with seeds `seed, seed + 1, ...`.
///
/// Runs execute on the current rayon pool; results are in run order and do
/// not depend on the number of workers.
pub fn run_batch(
    dataset: &GenotypeDataset,
    config: &GAConfig,
    n_runs: usize,
    seed: u64,
) -> Result<Vec<RunResult>> {
    if n_runs == 0 {
        return Err(Error::param("runs", "must be at least 1"));
    }
    config.validate()?;
    (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let cfg = GAConfig {
                seed: seed.wrapping_add(i as u64),
                ..*config
            };
            let r = evolve(dataset, &cfg);
            if let Ok(r) = &r {
                log::debug!("GA run {} done: fitness {:.4}, subset {:?}", i, r.best_fitness, r.best_subset);
            }
            r
        })
        .collect()
}
