//! Girsanov reweighting: exponential (Novikov) weight processes built from
//! the stored Brownian increments, and change-of-measure expectation
//! estimates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::PathFunctional;
use crate::grid::SamplePath;
use crate::stats::mean_stderr;

/// Discrete exponential martingale weight process
/// `N_t = exp( sum_{t_i < t} Gamma_i dW_i - 1/2 sum Gamma_i^2 dt_i )`
/// with `Gamma_i = gamma(t_i, X^{t_i})`; `N_0 = 1`, `N > 0` throughout.
/// Requires a bounded functional (Novikov's condition is certified through
/// the declared bound) and stored increments.
pub fn novikov_weight(gamma: &PathFunctional, path: &SamplePath) -> Result<SamplePath> {
    if gamma.bounded_by().is_none() {
        return Err(Error::domain(
            "novikov_weight needs a bounded functional; clamp it first",
        ));
    }
    let dw = path
        .noise_increments()
        .ok_or(Error::MissingNoiseIncrements)?;
    let grid = path.grid();
    let mut log_n = 0.0;
    let mut values = Vec::with_capacity(grid.n_steps() + 1);
    values.push(1.0);
    for i in 0..grid.n_steps() {
        let g = gamma.evaluate(grid.times()[i], path)?;
        log_n += g * dw[i] - 0.5 * g * g * grid.dt(i);
        values.push(log_n.exp());
    }
    SamplePath::new(std::sync::Arc::clone(grid), values, None, path.seed())
}

/// Terminal Novikov weight `N_T`.
pub fn novikov_weight_terminal(gamma: &PathFunctional, path: &SamplePath) -> Result<f64> {
    Ok(novikov_weight(gamma, path)?.terminal())
}

/// Reweighted-expectation estimate with its diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct ReweightedEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// `(sum w)^2 / (n sum w^2)`; below ~0.1 the reweighting is unreliable.
    pub effective_sample_fraction: f64,
    pub degenerate: bool,
}

/// Estimate of the drifted-measure expectation `E_Q[phi(X)]` from paths
/// sampled under the reference measure: `mean(N_T phi)` (the weights average
/// to 1 in expectation, so no self-normalization is applied), with the plain
/// Monte Carlo standard error of the weighted terms.
pub fn reweighted_expectation(
    gamma: &PathFunctional,
    paths: &[SamplePath],
    phi: impl Fn(&SamplePath) -> f64,
) -> Result<ReweightedEstimate> {
    if paths.is_empty() {
        return Err(Error::domain("reweighting needs at least one path"));
    }
    let mut weights = Vec::with_capacity(paths.len());
    let mut weighted = Vec::with_capacity(paths.len());
    for p in paths {
        let w = novikov_weight_terminal(gamma, p)?;
        weights.push(w);
        weighted.push(w * phi(p));
    }
    let (estimate, stderr) = mean_stderr(&weighted);
    let sum_w: f64 = weights.iter().sum();
    let sum_w2: f64 = weights.iter().map(|w| w * w).sum();
    let ess = if sum_w2 > 0.0 {
        sum_w * sum_w / (paths.len() as f64 * sum_w2)
    } else {
        0.0
    };
    Ok(ReweightedEstimate {
        estimate,
        stderr,
        effective_sample_fraction: ess,
        degenerate: ess < 0.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::par_map_paths;
    use crate::grid::TimeGrid;
    use crate::rng::path_rng;
    use crate::stats::mean_stderr;
    use rand_distr::{Distribution, Normal};
    use std::sync::Arc;

    /// Brownian path from `x0` with stored increments.
    fn bm_path(x0: f64, grid: &Arc<TimeGrid>, seed: u64) -> SamplePath {
        let mut rng = path_rng(seed, 0);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut values = vec![x0];
        let mut dws = Vec::new();
        for i in 0..grid.n_steps() {
            let dw = normal.sample(&mut rng) * grid.dt(i).sqrt();
            dws.push(dw);
            values.push(values[i] + dw);
        }
        SamplePath::new(Arc::clone(grid), values, Some(dws), seed).unwrap()
    }

    #[test]
    fn weight_requires_bound_and_increments() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let p = bm_path(0.0, &grid, 1);
        let unbounded = PathFunctional::new(|_, eta: &SamplePath| eta.terminal());
        assert!(novikov_weight(&unbounded, &p).is_err());
        let bounded = PathFunctional::constant(1.0);
        let no_inc = SamplePath::new(Arc::clone(&grid), vec![0.0; 5], None, 0).unwrap();
        assert!(novikov_weight(&bounded, &no_inc).is_err());
    }

    #[test]
    fn zero_drift_weight_is_identically_one() {
        let grid = TimeGrid::uniform(1.0, 32).unwrap();
        let p = bm_path(0.0, &grid, 7);
        let n = novikov_weight(&PathFunctional::zero(), &p).unwrap();
        assert!(n.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn unit_drift_weight_by_hand() {
        // Gamma = 1, W_1 = 0.3: N_1 = exp(0.3 - 0.5) ~ 0.8187
        let grid = TimeGrid::from_times(vec![0.0, 0.5, 1.0]).unwrap();
        let p = SamplePath::new(
            Arc::clone(&grid),
            vec![0.0, 0.1, 0.3],
            Some(vec![0.1, 0.2]),
            0,
        )
        .unwrap();
        let w = novikov_weight_terminal(&PathFunctional::constant(1.0), &p).unwrap();
        assert!((w - (0.3f64 - 0.5).exp()).abs() < 1e-12);
        assert!((w - 0.8187).abs() < 1e-3);
    }

    #[test]
    fn weight_process_is_positive_and_starts_at_one() {
        let grid = TimeGrid::uniform(1.0, 64).unwrap();
        for seed in 0..20 {
            let p = bm_path(0.0, &grid, seed);
            let n = novikov_weight(&PathFunctional::constant(0.9), &p).unwrap();
            assert_eq!(n.values()[0], 1.0);
            assert!(n.values().iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn log_weight_recomputation_is_bit_identical() {
        let grid = TimeGrid::uniform(1.0, 32).unwrap();
        let p = bm_path(0.0, &grid, 13);
        let gamma = PathFunctional::constant(0.7);
        let a = novikov_weight_terminal(&gamma, &p).unwrap();
        let b = novikov_weight_terminal(&gamma, &p).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn weights_average_to_one() {
        // E[N_T] = 1 under the reference measure
        let grid = TimeGrid::uniform(1.0, 32).unwrap();
        let gamma = PathFunctional::constant(0.5);
        let terms: Vec<f64> = (0..20_000u64)
            .map(|k| novikov_weight_terminal(&gamma, &bm_path(0.0, &grid, 900 + k)).unwrap())
            .collect();
        let (mean, se) = mean_stderr(&terms);
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn reweighting_shifts_brownian_mean() {
        // Under the drifted measure with constant drift c, X_T = W_T has
        // mean cT; estimate it from reference-measure paths.
        let grid = TimeGrid::uniform(1.0, 32).unwrap();
        let c = 0.8;
        let gamma = PathFunctional::constant(c);
        let paths = par_map_paths(20_000, |k| Ok(bm_path(0.0, &grid, 40_000 + k))).unwrap();
        let est = reweighted_expectation(&gamma, &paths, |p| p.terminal()).unwrap();
        assert!(
            (est.estimate - c).abs() < 3.0 * est.stderr,
            "est {} se {}",
            est.estimate,
            est.stderr
        );
        assert!(!est.degenerate, "ess {}", est.effective_sample_fraction);
    }

    #[test]
    fn sign_symmetry_to_first_order() {
        // small c: shift(c) + shift(-c) = O(c^2), each shift = O(c)
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let paths = par_map_paths(30_000, |k| Ok(bm_path(0.0, &grid, 90_000 + k))).unwrap();
        let c = 0.1;
        let plus = reweighted_expectation(&PathFunctional::constant(c), &paths, |p| p.terminal())
            .unwrap()
            .estimate;
        let minus = reweighted_expectation(&PathFunctional::constant(-c), &paths, |p| p.terminal())
            .unwrap()
            .estimate;
        assert!((plus + minus).abs() < 0.3 * c, "plus {plus} minus {minus}");
    }

    #[test]
    fn uniqueness_in_law_witness() {
        // two independent driftless ensembles reweighted with the same
        // bounded drift agree on E_Q[X_T^2] within combined MC error
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let gamma = PathFunctional::constant(0.5);
        let e1 = par_map_paths(15_000, |k| Ok(bm_path(0.0, &grid, 1_000_000 + k))).unwrap();
        let e2 = par_map_paths(15_000, |k| Ok(bm_path(0.0, &grid, 2_000_000 + k))).unwrap();
        let phi = |p: &SamplePath| p.terminal() * p.terminal();
        let a = reweighted_expectation(&gamma, &e1, phi).unwrap();
        let b = reweighted_expectation(&gamma, &e2, phi).unwrap();
        let combined = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
        assert!(
            (a.estimate - b.estimate).abs() < 3.0 * combined,
            "a {} b {} se {}",
            a.estimate,
            b.estimate,
            combined
        );
    }
}
