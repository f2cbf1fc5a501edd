//! The OPTIMIZE action: a graph genetic algorithm over one objective.

use std::collections::{HashMap, HashSet};
use std::fmt;

use molpilot_chem::scoring::{Property, PropertyProfile};
use molpilot_chem::{canonical_key, MolecularGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edit;
use crate::evaluate::{EvalError, Evaluator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GAConfig {
    pub population_size: usize,
    pub generations: usize,
    pub mutation_prob: f64,
    pub elitism: usize,
    pub rng_seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig { population_size: 100, generations: 50, mutation_prob: 0.1, elitism: 2, rng_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("population_size must be at least 2")]
    PopulationTooSmall,
    #[error("elitism must be smaller than population_size")]
    ElitismTooLarge,
    #[error("mutation_prob must lie in [0, 1]")]
    BadMutationProb,
    #[error("initial population is empty")]
    EmptyPopulation,
    #[error("objective weights must be non-negative and not all zero")]
    BadObjective,
    #[error("{0} cannot be optimized")]
    NotOptimizable(Property),
    #[error("scoring failed in generation {generation}: {source}")]
    Scorer { generation: usize, source: EvalError, trace: Vec<GenerationStats> },
}

impl GAConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.population_size < 2 {
            return Err(OptimizeError::PopulationTooSmall);
        }
        if self.elitism >= self.population_size {
            return Err(OptimizeError::ElitismTooLarge);
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(OptimizeError::BadMutationProb);
        }
        Ok(())
    }
}

/// Weighted combination of QED, SAS and VNA. Directions are fixed: QED up,
/// SAS and VNA down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub qed: f64,
    pub sas: f64,
    pub vna: f64,
}

impl Objective {
    pub fn single(p: Property) -> Result<Objective, OptimizeError> {
        let zero = Objective { qed: 0.0, sas: 0.0, vna: 0.0 };
        match p {
            Property::Qed => Ok(Objective { qed: 1.0, ..zero }),
            Property::Sas => Ok(Objective { sas: 1.0, ..zero }),
            Property::Vna => Ok(Objective { vna: 1.0, ..zero }),
            other => Err(OptimizeError::NotOptimizable(other)),
        }
    }

    pub fn weighted(qed: f64, sas: f64, vna: f64) -> Result<Objective, OptimizeError> {
        let o = Objective { qed, sas, vna };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        let w = [self.qed, self.sas, self.vna];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().all(|x| *x == 0.0) {
            return Err(OptimizeError::BadObjective);
        }
        Ok(())
    }

    pub fn uses_vna(&self) -> bool {
        self.vna > 0.0
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = [("QED", self.qed), ("SAS", self.sas), ("VNA", self.vna)]
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(n, w)| if *w == 1.0 { n.to_string() } else { format!("{w}*{n}") })
            .collect();
        f.write_str(&parts.join("+"))
    }
}

/// Maps each property onto [0, 1] with 1 best, then takes the weighted mean.
pub fn fitness(obj: &Objective, p: &PropertyProfile) -> f64 {
    let q = p.qed;
    let s = (10.0 - p.sas) / 9.0;
    let v = (-p.vna / 12.0).clamp(0.0, 1.0);
    let total = obj.qed + obj.sas + obj.vna;
    (obj.qed * q + obj.sas * s + obj.vna * v) / total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub median: f64,
}

#[derive(Debug, Clone)]
pub struct Individual {
    pub graph: MolecularGraph,
    pub key: String,
    pub profile: PropertyProfile,
    pub fitness: f64,
}

#[derive(Debug, Clone)]
pub struct GAResult {
    /// Sorted by fitness, best first.
    pub population: Vec<Individual>,
    /// Entry 0 is the padded initial population.
    pub trace: Vec<GenerationStats>,
}

fn median(sorted_desc: &[f64]) -> f64 {
    let n = sorted_desc.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted_desc[n / 2]
    } else {
        0.5 * (sorted_desc[n / 2 - 1] + sorted_desc[n / 2])
    }
}

struct Scoring<'a> {
    evaluator: &'a Evaluator,
    objective: Objective,
    cache: HashMap<String, PropertyProfile>,
}

impl Scoring<'_> {
    /// Profiles for new individuals. With an expensive docker only the top
    /// decile (by fitness under the inherited VNA) is docked.
    fn score(&mut self, batch: Vec<(MolecularGraph, String, f64)>) -> Result<Vec<Individual>, EvalError> {
        let expensive = self.evaluator.docking_is_expensive() && self.objective.uses_vna();
        let mut out = Vec::with_capacity(batch.len());
        for (graph, key, inherited_vna) in batch {
            let profile = match self.cache.get(&key) {
                Some(p) => *p,
                None => {
                    let mut p = self.evaluator.evaluate(&graph, !expensive)?.profile;
                    if expensive {
                        p.vna = inherited_vna;
                    } else {
                        self.cache.insert(key.clone(), p);
                    }
                    p
                }
            };
            let fitness = fitness(&self.objective, &profile);
            out.push(Individual { graph, key, profile, fitness });
        }
        if expensive {
            let mut order: Vec<usize> = (0..out.len()).filter(|&i| !self.cache.contains_key(&out[i].key)).collect();
            order.sort_by(|&a, &b| out[b].fitness.total_cmp(&out[a].fitness));
            let take = order.len().div_ceil(10);
            for &i in &order[..take] {
                let d = self.evaluator.docker.score(&out[i].graph, &self.evaluator.pocket).map_err(EvalError::from)?;
                out[i].profile.vna = d.vna;
                out[i].fitness = fitness(&self.objective, &out[i].profile);
                self.cache.insert(out[i].key.clone(), out[i].profile);
            }
        }
        Ok(out)
    }
}

fn sort_desc(pop: &mut [Individual]) {
    // Ties broken by canonical key so order never depends on insertion.
    pop.sort_by(|a, b| b.fitness.total_cmp(&a.fitness).then_with(|| a.key.cmp(&b.key)));
}

fn stats(generation: usize, pop: &[Individual]) -> GenerationStats {
    let f: Vec<f64> = pop.iter().map(|i| i.fitness).collect();
    GenerationStats { generation, best: f[0], median: median(&f) }
}

/// Roulette over ranks: the best of `n` gets weight `n`, the worst 1.
fn pick<'p, R: Rng>(pop: &'p [Individual], rng: &mut R) -> &'p Individual {
    let n = pop.len();
    let total = n * (n + 1) / 2;
    let mut ticket = rng.random_range(0..total);
    for (i, ind) in pop.iter().enumerate() {
        let w = n - i;
        if ticket < w {
            return ind;
        }
        ticket -= w;
    }
    &pop[n - 1]
}

/// Runs the GA from `initial`, padded to the population size by mutating
/// random members. Each generation keeps the `elitism` best individuals and
/// fills the rest with the best unique offspring of rank-roulette parents.
pub fn ga_optimize(
    initial: &[MolecularGraph],
    objective: &Objective,
    cfg: &GAConfig,
    evaluator: &Evaluator,
    library: &[MolecularGraph],
) -> Result<GAResult, OptimizeError> {
    cfg.validate()?;
    objective.validate()?;
    if initial.is_empty() {
        return Err(OptimizeError::EmptyPopulation);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut scoring = Scoring { evaluator, objective: *objective, cache: HashMap::new() };
    let mut trace = Vec::new();
    let fail = |generation: usize, source: EvalError, trace: &Vec<GenerationStats>| OptimizeError::Scorer {
        generation,
        source,
        trace: trace.clone(),
    };

    // Initial population: unique inputs, then mutants of random members.
    let mut seen = HashSet::new();
    let mut start: Vec<(MolecularGraph, String, f64)> = Vec::new();
    for g in initial {
        let key = canonical_key(g);
        if seen.insert(key.clone()) {
            start.push((g.clone(), key, f64::NAN));
        }
    }
    let base = start.len();
    let mut attempts = 0;
    while start.len() < cfg.population_size && attempts < 50 * cfg.population_size {
        attempts += 1;
        let parent = &start[rng.random_range(0..base)].0;
        let child = edit::mutate(parent, library, 1.0, &mut rng);
        let key = canonical_key(&child);
        if seen.insert(key.clone()) {
            start.push((child, key, f64::NAN));
        }
    }
    // With an expensive docker the starting set still needs real VNA values.
    let mut pop = if evaluator.docking_is_expensive() && objective.uses_vna() {
        let mut out = Vec::new();
        for (g, key, _) in start {
            let profile = evaluator.evaluate(&g, true).map_err(|e| fail(0, e, &trace))?.profile;
            scoring.cache.insert(key.clone(), profile);
            out.push(Individual { fitness: fitness(objective, &profile), graph: g, key, profile });
        }
        out
    } else {
        scoring.score(start).map_err(|e| fail(0, e, &trace))?
    };
    sort_desc(&mut pop);
    trace.push(stats(0, &pop));

    for generation in 1..=cfg.generations {
        let n = pop.len();
        let mut next_keys: HashSet<String> = HashSet::new();
        let mut offspring: Vec<(MolecularGraph, String, f64)> = Vec::new();
        let mut tries = 0;
        while offspring.len() < n && tries < 20 * n {
            tries += 1;
            let a = pick(&pop, &mut rng);
            let b = pick(&pop, &mut rng);
            let child = edit::crossover(&a.graph, &b.graph, &mut rng).unwrap_or_else(|| a.graph.clone());
            let child = edit::mutate(&child, library, cfg.mutation_prob, &mut rng);
            let key = canonical_key(&child);
            if next_keys.insert(key.clone()) {
                offspring.push((child, key, a.profile.vna));
            }
        }
        let mut children = scoring.score(offspring).map_err(|e| fail(generation, e, &trace))?;
        sort_desc(&mut children);

        let mut next: Vec<Individual> = Vec::with_capacity(n);
        let mut taken: HashSet<String> = HashSet::new();
        for elite in pop.iter().take(cfg.elitism) {
            taken.insert(elite.key.clone());
            next.push(elite.clone());
        }
        for c in children {
            if next.len() >= n {
                break;
            }
            if taken.insert(c.key.clone()) {
                next.push(c);
            }
        }
        // Too few unique offspring: top up from the previous generation.
        for old in &pop {
            if next.len() >= n {
                break;
            }
            if taken.insert(old.key.clone()) {
                next.push(old.clone());
            }
        }
        sort_desc(&mut next);
        pop = next;
        trace.push(stats(generation, &pop));
    }
    Ok(GAResult { population: pop, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(qed: f64, sas: f64, vna: f64) -> PropertyProfile {
        PropertyProfile { qed, lrf: 4, sas, vna, nvt: 1.0 }
    }

    #[test]
    fn fitness_maps() {
        let q = Objective::single(Property::Qed).unwrap();
        let s = Objective::single(Property::Sas).unwrap();
        let v = Objective::single(Property::Vna).unwrap();
        assert_eq!(fitness(&q, &profile(0.5, 5.0, -6.0)), 0.5);
        assert_eq!(fitness(&s, &profile(0.5, 10.0, -6.0)), 0.0);
        assert_eq!(fitness(&s, &profile(0.5, 1.0, -6.0)), 1.0);
        assert_eq!(fitness(&v, &profile(0.5, 1.0, -6.0)), 0.5);
        assert_eq!(fitness(&v, &profile(0.5, 1.0, 3.0)), 0.0);
        assert_eq!(fitness(&v, &profile(0.5, 1.0, -20.0)), 1.0);
        let qs = Objective::weighted(1.0, 1.0, 0.0).unwrap();
        assert_eq!(fitness(&qs, &profile(1.0, 1.0, 0.0)), 1.0);
    }

    #[test]
    fn objective_validation() {
        assert!(Objective::weighted(0.0, 0.0, 0.0).is_err());
        assert!(Objective::weighted(-1.0, 1.0, 0.0).is_err());
        assert_eq!(Objective::single(Property::Nvt).unwrap_err(), OptimizeError::NotOptimizable(Property::Nvt));
        assert_eq!(Objective::weighted(1.0, 0.0, 0.5).unwrap().to_string(), "QED+0.5*VNA");
    }

    #[test]
    fn config_validation() {
        let base = GAConfig::default();
        assert!(base.validate().is_ok());
        assert_eq!(GAConfig { population_size: 1, elitism: 0, ..base }.validate(), Err(OptimizeError::PopulationTooSmall));
        assert_eq!(GAConfig { elitism: 100, ..base }.validate(), Err(OptimizeError::ElitismTooLarge));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 2.0, 1.0]), 2.0);
        assert_eq!(median(&[4.0, 3.0, 2.0, 1.0]), 2.5);
    }
}
