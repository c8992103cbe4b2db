//! Hypervolume of the first front on the Schaffer problem, reference point = component-wise
//! max of generation 0.

use std::io::Write;

use elecmarket::optimize::{evolve_nsga2, hypervolume_trace, Archive, Nsga2Config};

fn schaffer(x: &[f64]) -> elecmarket::Result<Vec<f64>> {
    Ok(vec![x[0] * x[0], (x[0] - 2.0) * (x[0] - 2.0)])
}

fn trace(seed: u64) -> Vec<f64> {
    let cfg = Nsga2Config {
        pop_size: 100,
        generations: 100,
        seed,
        ..Nsga2Config::default()
    };
    let mut archive = Archive::in_memory();
    evolve_nsga2(schaffer, &[(-5.0, 5.0)], &cfg, &mut archive).unwrap();
    hypervolume_trace(&archive.records).unwrap()
}

#[test]
fn median_hypervolume_over_ten_seeds_never_falls() {
    let traces: Vec<Vec<f64>> = (0..10).map(trace).collect();
    let median: Vec<f64> = (0..traces[0].len())
        .map(|g| {
            let mut v: Vec<f64> = traces.iter().map(|t| t[g]).collect();
            v.sort_by(f64::total_cmp);
            0.5 * (v[4] + v[5])
        })
        .collect();
    let fall = median.windows(2).position(|w| w[1] < w[0]);
    if let Some(g) = fall {
        let (before, after) = (median[g], median[g + 1]);
        let _ = writeln!(
            std::io::stderr().lock(),
            "FAIL median hypervolume fell at generation {}: {before} -> {after} (relative {:.1e})",
            g + 1,
            (before - after) / before
        );
    } else {
        let _ = writeln!(
            std::io::stderr().lock(),
            "PASS median hypervolume {:.4} -> {:.4}",
            median[0],
            median[median.len() - 1]
        );
    }
    assert!(fall.is_none(), "median hypervolume is not monotone: {median:?}");
}

#[test]
fn every_seed_improves_on_generation_zero() {
    for seed in 0..10 {
        let t = trace(seed);
        assert!(t[t.len() - 1] > t[0], "seed {seed}: {} -> {}", t[0], t[t.len() - 1]);
    }
}
