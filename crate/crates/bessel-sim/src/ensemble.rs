//! Parallel ensemble generation with per-path deterministic seeding.

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::SamplePath;
use crate::stats::compensated_total;

/// Generate `n_paths` paths in parallel. The sampler receives the path index;
/// it must derive its randomness from `(master_seed, index)` (see
/// [`crate::rng::path_rng`]) so the ensemble is reproducible regardless of
/// thread count.
pub fn par_map_paths<F>(n_paths: usize, sampler: F) -> Result<Vec<SamplePath>>
where
    F: Fn(u64) -> Result<SamplePath> + Send + Sync,
{
    (0..n_paths as u64)
        .into_par_iter()
        .map(|k| sampler(k))
        .collect()
}

/// Parallel per-path statistic with compensated reduction.
pub fn par_statistic<F>(n_paths: usize, stat: F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> Result<f64> + Send + Sync,
{
    (0..n_paths as u64).into_par_iter().map(stat).collect()
}

/// Compensated ensemble mean of a per-path statistic.
pub fn ensemble_mean<F>(n_paths: usize, stat: F) -> Result<f64>
where
    F: Fn(u64) -> Result<f64> + Send + Sync,
{
    let terms = par_statistic(n_paths, stat)?;
    Ok(compensated_total(terms.iter().copied()) / n_paths as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Dimension, TimeGrid};
    use crate::sde::sample_besq_exact;

    #[test]
    fn ensemble_is_thread_count_independent() {
        let grid = TimeGrid::uniform(1.0, 8).unwrap();
        let dim = Dimension::new(0.5).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                par_map_paths(64, |k| sample_besq_exact(1.0, dim, &grid, 1000 + k))
                    .unwrap()
                    .iter()
                    .map(|p| p.terminal())
                    .collect::<Vec<_>>()
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn ensemble_mean_matches_serial() {
        let vals: Vec<f64> = (0..100).map(|k| (k as f64).sin()).collect();
        let parallel = ensemble_mean(100, |k| Ok((k as f64).sin())).unwrap();
        let serial: f64 = vals.iter().sum::<f64>() / 100.0;
        assert!((parallel - serial).abs() < 1e-12);
    }
}
