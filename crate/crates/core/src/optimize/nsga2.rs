use rand::Rng;
use rayon::prelude::*;

use super::operators::{polynomial_mutation, random_genome, sbx, DEFAULT_ETA_CROSSOVER, DEFAULT_ETA_MUTATION};
use super::{check_bounds, crowded_compare, crowding_distance, fast_non_dominated_sort, rank_population};
use super::{Archive, Bounds, GenerationRecord, Individual, RankedIndividual};
use crate::error::{Error, Result};
use crate::stochastic::{stream_rng, SimRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nsga2Config {
    /// Must be even.
    pub pop_size: usize,
    pub generations: usize,
    pub cx_prob: f64,
    /// Probability that a child is mutated at all; genes then mutate with probability 1/n.
    pub mut_prob: f64,
    pub eta_c: f64,
    pub eta_m: f64,
    pub n_objectives: usize,
    pub seed: u64,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Nsga2Config {
            pop_size: 100,
            generations: 100,
            cx_prob: 0.5,
            mut_prob: 0.2,
            eta_c: DEFAULT_ETA_CROSSOVER,
            eta_m: DEFAULT_ETA_MUTATION,
            n_objectives: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Nsga2Outcome {
    pub population: Vec<RankedIndividual>,
}

impl Nsga2Outcome {
    /// Members of the first front.
    pub fn pareto_front(&self) -> Vec<&Individual> {
        self.population
            .iter()
            .filter(|r| r.rank == 1)
            .map(|r| &r.individual)
            .collect()
    }
}

/// Evaluate genomes in parallel; results keep the input order. A failing or malformed
/// evaluation gets the worst possible objectives.
pub(crate) fn evaluate_all<F>(genomes: Vec<Vec<f64>>, n_objectives: usize, evaluator: &F) -> Vec<Individual>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    genomes
        .into_par_iter()
        .map(|g| {
            let objectives = match evaluator(&g) {
                Ok(o) if o.len() == n_objectives && o.iter().all(|v| !v.is_nan()) => o,
                Ok(o) => {
                    log::warn!("evaluator returned {o:?} for {g:?}; assigning worst objectives");
                    vec![f64::MAX; n_objectives]
                }
                Err(e) => {
                    log::warn!("evaluation of {g:?} failed: {e}; assigning worst objectives");
                    vec![f64::MAX; n_objectives]
                }
            };
            Individual::evaluated(g, objectives)
        })
        .collect()
}

fn tournament<'a>(pop: &'a [RankedIndividual], rng: &mut SimRng) -> &'a RankedIndividual {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if crowded_compare(a, b).is_le() {
        a
    } else {
        b
    }
}

/// Offspring of one generation: binary tournament, SBX on consecutive pairs, then mutation.
pub(crate) fn make_children(
    pop: &[RankedIndividual],
    bounds: &Bounds,
    cx_prob: f64,
    mut_prob: f64,
    eta_c: f64,
    eta_m: f64,
    rng: &mut SimRng,
) -> Vec<Vec<f64>> {
    let gene_prob = 1.0 / bounds.len() as f64;
    let parents: Vec<&RankedIndividual> = (0..pop.len()).map(|_| tournament(pop, rng)).collect();
    let mut children = Vec::with_capacity(pop.len());
    for pair in parents.chunks(2) {
        let mut a = pair[0].individual.genome.clone();
        let mut b = pair.get(1).map_or_else(|| a.clone(), |p| p.individual.genome.clone());
        if rng.random::<f64>() < cx_prob {
            sbx(&mut a, &mut b, bounds, eta_c, rng);
        }
        for child in [&mut a, &mut b] {
            if rng.random::<f64>() < mut_prob {
                polynomial_mutation(child, bounds, eta_m, gene_prob, rng);
            }
        }
        children.push(a);
        children.push(b);
    }
    children.truncate(pop.len());
    children
}

/// Elitist survivor selection: fill front by front, cutting the last front by crowding.
/// Drop the most crowded member one at a time, recomputing distances after each removal, until
/// `slots` remain. Ties drop the later index.
fn truncate_front(merged: &[Individual], mut front: Vec<usize>, slots: usize) -> Vec<usize> {
    while front.len() > slots {
        let objs: Vec<&[f64]> = front.iter().map(|&i| merged[i].objectives.as_slice()).collect();
        let dist = crowding_distance(&objs);
        let worst = (0..front.len())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(front[b].cmp(&front[a])))
            .expect("front is non-empty");
        front.remove(worst);
    }
    front
}

/// Children whose genome repeats a parent or an earlier child are not evaluated again.
pub(crate) fn drop_duplicates(children: Vec<Vec<f64>>, parents: &[Individual]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(children.len());
    for c in children {
        if !parents.iter().any(|p| p.genome == c) && !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

fn survivors(merged: Vec<Individual>, n: usize) -> Result<Vec<Individual>> {
    let fronts = fast_non_dominated_sort(&merged)?;
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for front in fronts {
        if keep.len() + front.len() <= n {
            keep.extend(front);
            if keep.len() == n {
                break;
            }
            continue;
        }
        keep.extend(truncate_front(&merged, front, n - keep.len()));
        break;
    }
    let mut slots: Vec<Option<Individual>> = merged.into_iter().map(Some).collect();
    Ok(keep
        .into_iter()
        .map(|i| slots[i].take().expect("each index kept once"))
        .collect())
}

/// NSGA-II. Generation 0 is a uniform random population; each later generation draws its
/// randomness from its own stream, so resuming from `archive` reproduces an uninterrupted run.
pub fn evolve_nsga2<F>(evaluator: F, bounds: &Bounds, cfg: &Nsga2Config, archive: &mut Archive) -> Result<Nsga2Outcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    check_bounds(bounds)?;
    if cfg.pop_size == 0 || !cfg.pop_size.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "population size must be even and positive, got {}",
            cfg.pop_size
        )));
    }
    if cfg.n_objectives == 0 {
        return Err(Error::InvalidArgument("need at least one objective".into()));
    }
    let (mut population, start) = match archive.last() {
        Some(r) => {
            check_resumable(r, cfg.pop_size, bounds.len(), cfg.n_objectives)?;
            (r.individuals.clone(), r.generation + 1)
        }
        None => {
            let mut rng = stream_rng(cfg.seed, 0);
            let genomes = (0..cfg.pop_size).map(|_| random_genome(bounds, &mut rng)).collect();
            let pop = evaluate_all(genomes, cfg.n_objectives, &evaluator);
            archive.push(GenerationRecord {
                generation: 0,
                individuals: pop.clone(),
            })?;
            (pop, 1)
        }
    };
    for generation in start..=cfg.generations {
        let mut rng = stream_rng(cfg.seed, generation as u64);
        let ranked = rank_population(population)?;
        let children = make_children(
            &ranked,
            bounds,
            cfg.cx_prob,
            cfg.mut_prob,
            cfg.eta_c,
            cfg.eta_m,
            &mut rng,
        );
        let mut merged: Vec<Individual> = ranked.into_iter().map(|r| r.individual).collect();
        let children = drop_duplicates(children, &merged);
        merged.extend(evaluate_all(children, cfg.n_objectives, &evaluator));
        population = survivors(merged, cfg.pop_size)?;
        archive.push(GenerationRecord {
            generation,
            individuals: population.clone(),
        })?;
        log::debug!("nsga2 generation {generation} done");
    }
    Ok(Nsga2Outcome {
        population: rank_population(population)?,
    })
}

pub(crate) fn check_resumable(r: &GenerationRecord, pop: usize, genes: usize, objectives: usize) -> Result<()> {
    let ok = r.individuals.len() == pop
        && r.individuals
            .iter()
            .all(|i| i.genome.len() == genes && i.objectives.len() == objectives);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidState(format!(
            "archive generation {} does not match population {pop}, {genes} genes, {objectives} objectives",
            r.generation
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::dominates;

    fn schaffer(x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![x[0] * x[0], (x[0] - 2.0) * (x[0] - 2.0)])
    }

    fn cfg(seed: u64, generations: usize) -> Nsga2Config {
        Nsga2Config {
            pop_size: 40,
            generations,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn zero_generations_returns_initial_population() {
        let mut a = Archive::in_memory();
        let out = evolve_nsga2(schaffer, &[(-5.0, 5.0)], &cfg(1, 0), &mut a).unwrap();
        let initial = &a.records[0].individuals;
        assert_eq!(a.records.len(), 1);
        let got: Vec<&Individual> = out.population.iter().map(|r| &r.individual).collect();
        assert_eq!(got, initial.iter().collect::<Vec<_>>());
    }

    #[test]
    fn schaffer_front_is_found() {
        let mut a = Archive::in_memory();
        let out = evolve_nsga2(schaffer, &[(-5.0, 5.0)], &cfg(7, 60), &mut a).unwrap();
        for ind in out.pareto_front() {
            assert!(ind.genome[0] > -0.05 && ind.genome[0] < 2.05, "{:?}", ind.genome);
        }
    }

    fn first_front(r: &GenerationRecord) -> Vec<[f64; 2]> {
        let f = fast_non_dominated_sort(&r.individuals).unwrap();
        f[0].iter()
            .map(|&i| [r.individuals[i].objectives[0], r.individuals[i].objectives[1]])
            .collect()
    }

    #[test]
    fn no_front_member_is_dominated_by_its_predecessor() {
        let mut a = Archive::in_memory();
        evolve_nsga2(schaffer, &[(-5.0, 5.0)], &cfg(3, 15), &mut a).unwrap();
        for w in a.records.windows(2) {
            let (old, new) = (first_front(&w[0]), first_front(&w[1]));
            for n in &new {
                assert!(!old.iter().any(|o| dominates(o, n)));
            }
        }
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let mut full = Archive::in_memory();
        let a = evolve_nsga2(schaffer, &[(-5.0, 5.0)], &cfg(11, 8), &mut full).unwrap();
        let mut partial = Archive::in_memory();
        evolve_nsga2(schaffer, &[(-5.0, 5.0)], &cfg(11, 3), &mut partial).unwrap();
        let b = evolve_nsga2(schaffer, &[(-5.0, 5.0)], &cfg(11, 8), &mut partial).unwrap();
        assert_eq!(a.population, b.population);
        assert_eq!(full.records, partial.records);
    }

    #[test]
    fn failed_evaluations_get_worst_objectives() {
        let mut a = Archive::in_memory();
        let eval = |x: &[f64]| {
            if x[0] > 0.0 {
                Err(Error::InvalidArgument("boom".into()))
            } else {
                schaffer(x)
            }
        };
        let out = evolve_nsga2(eval, &[(-5.0, 5.0)], &cfg(2, 0), &mut a).unwrap();
        for r in &out.population {
            if r.individual.genome[0] > 0.0 {
                assert_eq!(r.individual.objectives, vec![f64::MAX; 2]);
            }
        }
    }

    #[test]
    fn odd_population_rejected() {
        let c = Nsga2Config {
            pop_size: 3,
            ..cfg(0, 1)
        };
        assert!(evolve_nsga2(schaffer, &[(-5.0, 5.0)], &c, &mut Archive::in_memory()).is_err());
    }
}
