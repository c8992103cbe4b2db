//! Real-coded variation: simulated binary crossover and polynomial mutation, both bounded.

use rand::Rng;

use super::Bounds;

pub const DEFAULT_ETA_CROSSOVER: f64 = 15.0;
pub const DEFAULT_ETA_MUTATION: f64 = 20.0;

pub fn random_genome<R: Rng + ?Sized>(bounds: &Bounds, rng: &mut R) -> Vec<f64> {
    bounds
        .iter()
        .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
        .collect()
}

pub fn clamp_to_bounds(genome: &mut [f64], bounds: &Bounds) {
    for (x, &(lo, hi)) in genome.iter_mut().zip(bounds) {
        *x = x.clamp(lo, hi);
    }
}

fn spread_factor(u: f64, alpha: f64, eta: f64) -> f64 {
    if u <= 1.0 / alpha {
        (u * alpha).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
    }
}

/// Bounded simulated binary crossover. Each gene is recombined with probability 1/2.
pub fn sbx<R: Rng + ?Sized>(a: &mut [f64], b: &mut [f64], bounds: &Bounds, eta: f64, rng: &mut R) {
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if rng.random::<f64>() > 0.5 || (a[i] - b[i]).abs() <= 1e-14 || hi <= lo {
            continue;
        }
        let (x1, x2) = (a[i].min(b[i]), a[i].max(b[i]));
        let u = rng.random::<f64>();

        let beta = 1.0 + 2.0 * (x1 - lo) / (x2 - x1);
        let alpha = 2.0 - beta.powf(-(eta + 1.0));
        let c1 = 0.5 * (x1 + x2 - spread_factor(u, alpha, eta) * (x2 - x1));

        let beta = 1.0 + 2.0 * (hi - x2) / (x2 - x1);
        let alpha = 2.0 - beta.powf(-(eta + 1.0));
        let c2 = 0.5 * (x1 + x2 + spread_factor(u, alpha, eta) * (x2 - x1));

        let (c1, c2) = (c1.clamp(lo, hi), c2.clamp(lo, hi));
        if rng.random::<f64>() <= 0.5 {
            a[i] = c2;
            b[i] = c1;
        } else {
            a[i] = c1;
            b[i] = c2;
        }
    }
}

/// Bounded polynomial mutation; each gene mutates with probability `gene_prob`.
pub fn polynomial_mutation<R: Rng + ?Sized>(x: &mut [f64], bounds: &Bounds, eta: f64, gene_prob: f64, rng: &mut R) {
    let pow = 1.0 / (eta + 1.0);
    for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
        if rng.random::<f64>() > gene_prob || hi <= lo {
            continue;
        }
        let d1 = (*xi - lo) / (hi - lo);
        let d2 = (hi - *xi) / (hi - lo);
        let u = rng.random::<f64>();
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            v.powf(pow) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - v.powf(pow)
        };
        *xi = (*xi + dq * (hi - lo)).clamp(lo, hi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::stream_rng;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn operators_respect_bounds(seed in 0u64..1000, lo in -10.0f64..0.0, width in 0.0f64..20.0) {
            let bounds = vec![(lo, lo + width); 6];
            let mut rng = stream_rng(seed, 0);
            let mut a = random_genome(&bounds, &mut rng);
            let mut b = random_genome(&bounds, &mut rng);
            for _ in 0..20 {
                sbx(&mut a, &mut b, &bounds, DEFAULT_ETA_CROSSOVER, &mut rng);
                polynomial_mutation(&mut a, &bounds, DEFAULT_ETA_MUTATION, 1.0, &mut rng);
                polynomial_mutation(&mut b, &bounds, DEFAULT_ETA_MUTATION, 1.0, &mut rng);
                for x in a.iter().chain(&b) {
                    prop_assert!(*x >= lo && *x <= lo + width);
                }
            }
        }
    }

    #[test]
    fn sbx_keeps_mean_of_parents() {
        let bounds = vec![(-100.0, 100.0)];
        let mut rng = stream_rng(1, 0);
        for _ in 0..100 {
            let (mut a, mut b) = (vec![1.0], vec![3.0]);
            sbx(&mut a, &mut b, &bounds, DEFAULT_ETA_CROSSOVER, &mut rng);
            // far from the bounds the children are symmetric about the parents' mean
            assert!((a[0] + b[0] - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn collapsed_bounds_fix_the_gene() {
        let bounds = vec![(2.0, 2.0)];
        let mut rng = stream_rng(1, 0);
        let mut x = random_genome(&bounds, &mut rng);
        assert_eq!(x, vec![2.0]);
        polynomial_mutation(&mut x, &bounds, DEFAULT_ETA_MUTATION, 1.0, &mut rng);
        assert_eq!(x, vec![2.0]);
    }
}
