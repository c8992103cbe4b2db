use rand::Rng;

use super::nsga2::{check_resumable, evaluate_all};
use super::operators::{polynomial_mutation, random_genome, sbx, DEFAULT_ETA_CROSSOVER, DEFAULT_ETA_MUTATION};
use super::{check_bounds, Archive, Bounds, GenerationRecord, Individual};
use crate::error::{Error, Result};
use crate::stochastic::{stream_rng, SimRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub pop_size: usize,
    pub generations: usize,
    pub cx_prob: f64,
    pub mut_prob: f64,
    pub eta_c: f64,
    pub eta_m: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            pop_size: 60,
            generations: 100,
            cx_prob: 0.5,
            mut_prob: 0.2,
            eta_c: DEFAULT_ETA_CROSSOVER,
            eta_m: DEFAULT_ETA_MUTATION,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub best: Individual,
    /// Best objective after each generation, starting with generation 0.
    pub history: Vec<f64>,
    /// Final population, best first.
    pub population: Vec<Individual>,
}

/// Roulette wheel on `worst − f`; failed evaluations get no share. A flat population is
/// sampled uniformly.
fn roulette<'a>(pop: &'a [Individual], rng: &mut SimRng) -> &'a Individual {
    let worst = pop
        .iter()
        .map(|i| i.objectives[0])
        .filter(|f| *f < f64::MAX)
        .fold(f64::NEG_INFINITY, f64::max);
    let fitness: Vec<f64> = pop
        .iter()
        .map(|i| {
            if i.objectives[0] < f64::MAX {
                worst - i.objectives[0]
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = fitness.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return &pop[rng.random_range(0..pop.len())];
    }
    let mut target = rng.random::<f64>() * total;
    for (ind, f) in pop.iter().zip(&fitness) {
        if target < *f {
            return ind;
        }
        target -= f;
    }
    pop.iter()
        .zip(&fitness)
        .rev()
        .find(|(_, f)| **f > 0.0)
        .map(|(i, _)| i)
        .unwrap()
}

fn sort_by_objective(pop: &mut [Individual]) {
    pop.sort_by(|a, b| a.objectives[0].total_cmp(&b.objectives[0]));
}

/// Single-objective GA (minimisation): fitness-proportional parent selection, SBX and
/// polynomial mutation, then the best `pop_size` of parents and children survive (parents win
/// ties). Generation `g` uses its own random stream, so runs resume exactly from `archive`.
pub fn evolve_ga<F>(evaluator: F, bounds: &Bounds, cfg: &GaConfig, archive: &mut Archive) -> Result<GaOutcome>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    check_bounds(bounds)?;
    if cfg.pop_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "population size must be >= 2, got {}",
            cfg.pop_size
        )));
    }
    let eval = |g: &[f64]| evaluator(g).map(|f| vec![f]);
    let mut history = Vec::new();
    let (mut population, start) = match archive.last() {
        Some(r) => {
            check_resumable(r, cfg.pop_size, bounds.len(), 1)?;
            history.extend(archive.records.iter().map(|r| best_of(&r.individuals)));
            (r.individuals.clone(), r.generation + 1)
        }
        None => {
            let mut rng = stream_rng(cfg.seed, 0);
            let genomes = (0..cfg.pop_size).map(|_| random_genome(bounds, &mut rng)).collect();
            let mut pop = evaluate_all(genomes, 1, &eval);
            sort_by_objective(&mut pop);
            history.push(pop[0].objectives[0]);
            archive.push(GenerationRecord {
                generation: 0,
                individuals: pop.clone(),
            })?;
            (pop, 1)
        }
    };
    let gene_prob = 1.0 / bounds.len() as f64;
    for generation in start..=cfg.generations {
        let mut rng = stream_rng(cfg.seed, generation as u64);
        let mut genomes = Vec::with_capacity(cfg.pop_size);
        while genomes.len() < cfg.pop_size {
            let mut a = roulette(&population, &mut rng).genome.clone();
            let mut b = roulette(&population, &mut rng).genome.clone();
            if rng.random::<f64>() < cfg.cx_prob {
                sbx(&mut a, &mut b, bounds, cfg.eta_c, &mut rng);
            }
            for child in [&mut a, &mut b] {
                if rng.random::<f64>() < cfg.mut_prob {
                    polynomial_mutation(child, bounds, cfg.eta_m, gene_prob, &mut rng);
                }
            }
            genomes.push(a);
            genomes.push(b);
        }
        genomes.truncate(cfg.pop_size);
        population.extend(evaluate_all(genomes, 1, &eval));
        sort_by_objective(&mut population);
        population.truncate(cfg.pop_size);
        history.push(population[0].objectives[0]);
        archive.push(GenerationRecord {
            generation,
            individuals: population.clone(),
        })?;
        log::debug!("ga generation {generation}: best {}", population[0].objectives[0]);
    }
    Ok(GaOutcome {
        best: population[0].clone(),
        history,
        population,
    })
}

fn best_of(pop: &[Individual]) -> f64 {
    pop.iter().map(|i| i.objectives[0]).fold(f64::INFINITY, f64::min)
}
