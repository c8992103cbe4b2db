//! Genetic search: a single-objective GA and NSGA-II over real-coded genomes, plus the
//! genome encodings and objective functions used to calibrate and steer the simulator.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod archive;
mod ga;
pub mod genome;
mod nsga2;
pub mod objectives;
pub mod operators;

pub use archive::{Archive, GenerationRecord};
pub use ga::{evolve_ga, GaConfig, GaOutcome};
pub use nsga2::{evolve_nsga2, Nsga2Config, Nsga2Outcome};

/// Inclusive `(low, high)` per gene.
pub type Bounds = [(f64, f64)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub objectives: Vec<f64>,
    pub evaluated: bool,
}

impl Individual {
    pub fn unevaluated(genome: Vec<f64>) -> Self {
        Individual {
            genome,
            objectives: Vec::new(),
            evaluated: false,
        }
    }

    pub fn evaluated(genome: Vec<f64>, objectives: Vec<f64>) -> Self {
        Individual {
            genome,
            objectives,
            evaluated: true,
        }
    }
}

/// An individual with its non-domination rank (1 = first front) and crowding distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedIndividual {
    pub individual: Individual,
    pub rank: usize,
    pub distance: f64,
    /// Position in the population, used to break ties.
    pub index: usize,
}

/// `a` dominates `b` under minimisation: no worse everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Partition the population into successive non-dominated fronts of indices.
pub fn fast_non_dominated_sort(population: &[Individual]) -> Result<Vec<Vec<usize>>> {
    if let Some(i) = population.iter().position(|p| !p.evaluated) {
        return Err(Error::InvalidState(format!("individual {i} has not been evaluated")));
    }
    let n = population.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (&population[i].objectives, &population[j].objectives);
            if dominates(a, b) {
                dominated_by_me[i].push(j);
                domination_count[j] += 1;
            } else if dominates(b, a) {
                dominated_by_me[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    Ok(fronts)
}

/// Crowding distance of each member of a front, given as objective vectors.
///
/// Boundary points of every objective get `+inf`; interior points accumulate the normalised
/// gap between their neighbours. An objective with zero spread contributes nothing.
pub fn crowding_distance(front: &[&[f64]]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].len();
    let mut dist = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| front[a][k].total_cmp(&front[b][k]).then(a.cmp(&b)));
        let lo = front[order[0]][k];
        let hi = front[order[n - 1]][k];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 || !span.is_finite() {
            continue;
        }
        for w in 1..n - 1 {
            let i = order[w];
            if dist[i].is_finite() {
                dist[i] += (front[order[w + 1]][k] - front[order[w - 1]][k]) / span;
            }
        }
    }
    dist
}

/// Crowded-comparison order: lower rank first, then larger crowding distance, then lower index.
/// `Ordering::Less` means `a` is preferred.
pub fn crowded_compare(a: &RankedIndividual, b: &RankedIndividual) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then_with(|| b.distance.total_cmp(&a.distance))
        .then_with(|| a.index.cmp(&b.index))
}

/// Sort and crowd a whole population.
pub fn rank_population(population: Vec<Individual>) -> Result<Vec<RankedIndividual>> {
    let fronts = fast_non_dominated_sort(&population)?;
    let mut rank = vec![0; population.len()];
    let mut distance = vec![0.0; population.len()];
    for (r, front) in fronts.iter().enumerate() {
        let objs: Vec<&[f64]> = front.iter().map(|&i| population[i].objectives.as_slice()).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&objs)) {
            rank[i] = r + 1;
            distance[i] = d;
        }
    }
    Ok(population
        .into_iter()
        .enumerate()
        .map(|(index, individual)| RankedIndividual {
            individual,
            rank: rank[index],
            distance: distance[index],
            index,
        })
        .collect())
}

/// Area dominated by a set of 2-objective points (minimisation) and bounded by `reference`.
/// Points not strictly better than the reference in both objectives contribute nothing.
pub fn hypervolume_2d(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut volume = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            volume += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    volume
}

/// Hypervolume of each generation's non-dominated set for a 2-objective archive. The reference
/// point is the component-wise maximum over generation 0, ignoring failed evaluations.
pub fn hypervolume_trace(records: &[GenerationRecord]) -> Result<Vec<f64>> {
    let Some(first) = records.first() else {
        return Ok(Vec::new());
    };
    let valid = |i: &&Individual| i.objectives.len() == 2 && i.objectives.iter().all(|f| *f < f64::MAX);
    let reference = first
        .individuals
        .iter()
        .filter(valid)
        .fold([f64::NEG_INFINITY; 2], |r, i| {
            [r[0].max(i.objectives[0]), r[1].max(i.objectives[1])]
        });
    if records
        .iter()
        .flat_map(|r| &r.individuals)
        .any(|i| i.objectives.len() != 2)
    {
        return Err(Error::InvalidArgument(
            "hypervolume needs exactly two objectives".into(),
        ));
    }
    records
        .iter()
        .map(|r| {
            let fronts = fast_non_dominated_sort(&r.individuals)?;
            let pts: Vec<[f64; 2]> = fronts
                .first()
                .map(|f| {
                    f.iter()
                        .map(|&i| [r.individuals[i].objectives[0], r.individuals[i].objectives[1]])
                        .collect()
                })
                .unwrap_or_default();
            Ok(hypervolume_2d(&pts, reference))
        })
        .collect()
}

fn check_bounds(bounds: &Bounds) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::InvalidArgument("genome needs at least one gene".into()));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!("gene {i}: bad bounds [{lo}, {hi}]")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    use crate::stochastic::stream_rng;

    fn pop(points: &[&[f64]]) -> Vec<Individual> {
        points
            .iter()
            .map(|p| Individual::evaluated(vec![], p.to_vec()))
            .collect()
    }

    fn brute_force_layers(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
        let mut left: Vec<usize> = (0..points.len()).collect();
        let mut layers = Vec::new();
        while !left.is_empty() {
            let layer: Vec<usize> = left
                .iter()
                .copied()
                .filter(|&i| !left.iter().any(|&j| dominates(&points[j], &points[i])))
                .collect();
            left.retain(|i| !layer.contains(i));
            layers.push(layer);
        }
        layers
    }

    #[test]
    fn sort_examples() {
        assert_eq!(
            fast_non_dominated_sort(&pop(&[&[1.0, 1.0], &[2.0, 2.0]])).unwrap(),
            vec![vec![0], vec![1]]
        );
        assert_eq!(
            fast_non_dominated_sort(&pop(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap(),
            vec![vec![0, 1]]
        );
    }

    #[test]
    fn sort_rejects_unevaluated() {
        let p = vec![Individual::unevaluated(vec![0.0])];
        assert!(matches!(fast_non_dominated_sort(&p), Err(Error::InvalidState(_))));
    }

    #[test]
    fn sort_matches_brute_force_on_random_points() {
        let mut rng = stream_rng(3, 0);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let p: Vec<Individual> = pts.iter().map(|o| Individual::evaluated(vec![], o.clone())).collect();
        let mut fronts = fast_non_dominated_sort(&p).unwrap();
        fronts.iter_mut().for_each(|f| f.sort_unstable());
        assert_eq!(fronts, brute_force_layers(&pts));
    }

    #[test]
    fn crowding_examples() {
        assert!(crowding_distance(&[&[0.0, 1.0], &[1.0, 0.0]])
            .iter()
            .all(|d| d.is_infinite()));
        let d = crowding_distance(&[&[0.0, 2.0], &[1.0, 1.0], &[2.0, 0.0]]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert_eq!(d[1], 2.0);
        // coincident interior points see a zero gap on one side
        let d = crowding_distance(&[&[0.0, 4.0], &[1.0, 2.0], &[1.0, 2.0], &[4.0, 0.0]]);
        assert_eq!(d[1], 1.0 / 4.0 + 2.0 / 4.0);
        assert_eq!(d[2], 3.0 / 4.0 + 2.0 / 4.0);
    }

    #[test]
    fn degenerate_objective_adds_nothing() {
        let d = crowding_distance(&[&[0.0, 5.0], &[1.0, 5.0], &[2.0, 5.0]]);
        // the flat objective marks its own extremes but adds nothing to the middle
        assert_eq!(d[1], 1.0);
    }

    fn ranked(rank: usize, distance: f64, index: usize) -> RankedIndividual {
        RankedIndividual {
            individual: Individual::evaluated(vec![], vec![]),
            rank,
            distance,
            index,
        }
    }

    #[test]
    fn crowded_compare_examples() {
        assert_eq!(
            crowded_compare(&ranked(1, 0.0, 5), &ranked(2, f64::INFINITY, 0)),
            Ordering::Less
        );
        assert_eq!(
            crowded_compare(&ranked(1, f64::INFINITY, 5), &ranked(1, 2.0, 0)),
            Ordering::Less
        );
        assert_eq!(crowded_compare(&ranked(1, 2.0, 0), &ranked(1, 2.0, 1)), Ordering::Less);
    }

    #[test]
    fn hypervolume_of_staircase() {
        let hv = hypervolume_2d(&[[1.0, 3.0], [2.0, 2.0], [3.0, 1.0], [3.5, 3.5]], [4.0, 4.0]);
        assert!((hv - (3.0 * 1.0 + 2.0 * 1.0 + 1.0 * 1.0)).abs() < 1e-12);
        assert_eq!(hypervolume_2d(&[[5.0, 0.0]], [4.0, 4.0]), 0.0);
    }

    #[test]
    fn hypervolume_trace_uses_generation_zero_reference() {
        let gen = |g, pts: &[[f64; 2]]| GenerationRecord {
            generation: g,
            individuals: pts
                .iter()
                .map(|p| Individual::evaluated(vec![0.0], p.to_vec()))
                .collect(),
        };
        let records = [
            gen(0, &[[4.0, 1.0], [1.0, 4.0], [f64::MAX, f64::MAX]]),
            gen(1, &[[2.0, 2.0], [4.0, 4.0], [5.0, 0.0]]),
        ];
        let hv = hypervolume_trace(&records).unwrap();
        assert_eq!(hv, vec![0.0, 4.0]);
    }

    fn objective_vec(m: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0i32..4, m).prop_map(|v| v.into_iter().map(f64::from).collect())
    }

    proptest! {
        #[test]
        fn domination_is_a_strict_partial_order(a in objective_vec(3), b in objective_vec(3), c in objective_vec(3)) {
            prop_assert!(!dominates(&a, &a));
            prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
            if dominates(&a, &b) && dominates(&b, &c) {
                prop_assert!(dominates(&a, &c));
            }
        }

        #[test]
        fn argmin_is_invariant_to_affine_rescaling(
            pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 3..30),
            scale in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let best = |p: Vec<Individual>| {
                let r = rank_population(p).unwrap();
                r.iter().min_by(|a, b| crowded_compare(a, b)).unwrap().index
            };
            let a: Vec<Individual> = pts.iter().map(|o| Individual::evaluated(vec![], o.clone())).collect();
            let b: Vec<Individual> = pts
                .iter()
                .map(|o| Individual::evaluated(vec![], vec![o[0] * scale + shift, o[1]]))
                .collect();
            prop_assert_eq!(best(a), best(b));
        }
    }
}
