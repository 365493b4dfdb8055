//! Path-dependent Bessel solver: drive the squared process with the induced
//! drift, take square roots, probe the growth/Lipschitz assumptions, and
//! compare against the integer-dimension radial construction.

use std::sync::Arc;

use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{bar_gamma, PathFunctional};
use crate::grid::{Dimension, SamplePath, TimeGrid};
use crate::rng::path_rng;
use crate::sde::{euler_besq, sqrt_path, SchemeVariant};

/// Path-dependent Bessel process from `x0`: builds the induced squared-process
/// drift, runs the Euler recursion for the squared process from `x0^2`, and
/// returns the (nonnegative) square root. The driving increments are carried
/// on the returned path.
pub fn solve_pathdep_bessel(
    x0: f64,
    dim: Dimension,
    gamma: &PathFunctional,
    grid: &Arc<TimeGrid>,
    seed: u64,
    variant: SchemeVariant,
) -> Result<SamplePath> {
    if !(x0 >= 0.0) {
        return Err(Error::domain(format!("x0 must be >= 0, got {x0}")));
    }
    let bar = bar_gamma(gamma, dim);
    let s = euler_besq(x0 * x0, &bar, grid, seed, variant)?;
    // full truncation can leave slightly negative excursions in S; the
    // Bessel path is the root of the nonnegative part
    sqrt_path(&s.map_values(|v| v.max(0.0)))
}

/// Squared path-dependent process (no square root); used for couplings where
/// the raw scheme output, including negative excursions, matters.
pub fn solve_pathdep_squared(
    x0: f64,
    dim: Dimension,
    gamma: &PathFunctional,
    grid: &Arc<TimeGrid>,
    seed: u64,
    variant: SchemeVariant,
) -> Result<SamplePath> {
    if !(x0 >= 0.0) {
        return Err(Error::domain(format!("x0 must be >= 0, got {x0}")));
    }
    let bar = bar_gamma(gamma, dim);
    euler_besq(x0 * x0, &bar, grid, seed, variant)
}

/// Empirical assumption probe over random path pairs.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub n_samples: usize,
    /// max over samples of `|Gamma(s, eta)| / (1 + sup sqrt|eta|)`.
    pub observed_growth: f64,
    /// max over pairs of `|Gamma(s,a) - Gamma(s,b)| / (|a(s)-b(s)| + int |a-b|)`.
    pub observed_lipschitz: f64,
    /// Same ratios for the induced squared-process drift.
    pub observed_growth_bar: f64,
    pub observed_lipschitz_bar: f64,
    pub declared_growth: Option<f64>,
    pub declared_lipschitz: Option<f64>,
    pub growth_violated: bool,
    pub lipschitz_violated: bool,
}

/// Random probe path: a smooth sinusoid plus a rough random-walk component,
/// scaled to exercise both small and order-one amplitudes.
fn probe_path(grid: &Arc<TimeGrid>, seed: u64, index: u64) -> SamplePath {
    let mut rng = path_rng(seed, index);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let amp: f64 = 0.1 + 3.0 * (index % 7) as f64 / 7.0;
    let freq = 1.0 + (index % 5) as f64;
    let rough = 0.5 * (index % 3) as f64;
    let mut w = 0.0;
    let values = grid
        .times()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if i > 0 {
                w += normal.sample(&mut rng) * grid.dt(i - 1).sqrt();
            }
            (amp * (1.0 + (freq * t).sin()) + rough * w).abs()
        })
        .collect();
    SamplePath::new(Arc::clone(grid), values, None, seed).unwrap()
}

/// Estimate empirical growth and Lipschitz constants of `gamma` (and of the
/// induced squared-process drift) by sampling random smooth-plus-rough path
/// pairs, and flag violations of the declared metadata constants.
pub fn probe_assumptions(
    gamma: &PathFunctional,
    dim: Dimension,
    n_samples: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    if n_samples == 0 {
        return Err(Error::domain("probe needs at least one sample"));
    }
    let grid = TimeGrid::uniform(1.0, 64)?;
    let bar = bar_gamma(gamma, dim);
    let mut growth: f64 = 0.0;
    let mut lipschitz: f64 = 0.0;
    let mut growth_bar: f64 = 0.0;
    let mut lipschitz_bar: f64 = 0.0;

    let eval_times: Vec<f64> = [0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&u| u * grid.horizon())
        .collect();
    for k in 0..n_samples as u64 {
        let a = probe_path(&grid, seed, 2 * k);
        let b = probe_path(&grid, seed, 2 * k + 1);
        for &s in &eval_times {
            let ga = gamma.evaluate(s, &a)?;
            let gb = gamma.evaluate(s, &b)?;
            let sup_sqrt_a = a.values().iter().fold(0.0f64, |m, &v| m.max(v.abs().sqrt()));
            let sup_sqrt_b = b.values().iter().fold(0.0f64, |m, &v| m.max(v.abs().sqrt()));
            growth = growth.max(ga.abs() / (1.0 + sup_sqrt_a));
            growth = growth.max(gb.abs() / (1.0 + sup_sqrt_b));

            let bar_a = bar.evaluate(s, &a)?;
            let bar_b = bar.evaluate(s, &b)?;
            let sup_a = a.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            let sup_b = b.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            // growth for the induced drift is linear: |bar| <= C (1 + sup|eta|)
            growth_bar = growth_bar.max(bar_a.abs() / (1.0 + sup_a));
            growth_bar = growth_bar.max(bar_b.abs() / (1.0 + sup_b));

            // Lipschitz ratio with the paper's pointwise + integral modulus
            let node = grid.node_at_or_before(s)?;
            let point = (a.values()[node] - b.values()[node]).abs();
            let mut integral = 0.0;
            for i in 0..node {
                integral += (a.values()[i] - b.values()[i]).abs() * grid.dt(i);
            }
            let modulus = point + integral;
            if modulus > 1e-12 {
                lipschitz = lipschitz.max((ga - gb).abs() / modulus);
                lipschitz_bar = lipschitz_bar.max((bar_a - bar_b).abs() / modulus);
            }
        }
    }

    let declared_growth = gamma.growth_constant();
    let declared_lipschitz = gamma.lipschitz_constant();
    // small slack: empirical ratios sit on the constraint boundary for
    // extremal functionals
    let tol = 1e-9;
    Ok(AssumptionReport {
        n_samples,
        observed_growth: growth,
        observed_lipschitz: lipschitz,
        observed_growth_bar: growth_bar,
        observed_lipschitz_bar: lipschitz_bar,
        declared_growth,
        declared_lipschitz,
        growth_violated: declared_growth.is_some_and(|k| growth > k + tol),
        lipschitz_violated: declared_lipschitz.is_some_and(|k| lipschitz > k + tol),
    })
}

/// Sup-distance statistics of a shared-noise coupling of two scheme variants.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    pub n_paths: usize,
    pub n_steps: usize,
    /// Quantiles of `sup_t |S^A_t - S^B_t|` over the ensemble.
    pub median: f64,
    pub q90: f64,
    pub max: f64,
}

/// Couple two Euler variants on the same Brownian increments (same seed and
/// grid) and report sup-distance quantiles of the squared processes.
pub fn coupling_distance(
    x0: f64,
    dim: Dimension,
    gamma: &PathFunctional,
    grid: &Arc<TimeGrid>,
    master_seed: u64,
    n_paths: usize,
    variant_a: SchemeVariant,
    variant_b: SchemeVariant,
) -> Result<CouplingReport> {
    if n_paths == 0 {
        return Err(Error::domain("coupling needs at least one path"));
    }
    let mut sups = Vec::with_capacity(n_paths);
    for k in 0..n_paths as u64 {
        let seed = master_seed.wrapping_add(k);
        let a = solve_pathdep_squared(x0, dim, gamma, grid, seed, variant_a)?;
        let b = solve_pathdep_squared(x0, dim, gamma, grid, seed, variant_b)?;
        debug_assert_eq!(a.noise_increments(), b.noise_increments());
        let sup = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(u, v)| (u - v).abs())
            .fold(0.0f64, f64::max);
        sups.push(sup);
    }
    sups.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let q = |p: f64| sups[(((n_paths - 1) as f64) * p).round() as usize];
    Ok(CouplingReport {
        n_paths,
        n_steps: grid.n_steps(),
        median: q(0.5),
        q90: q(0.9),
        max: *sups.last().unwrap(),
    })
}

/// Sup-moment monitor for an ensemble of paths: `mean(sup_t |X_t|^m)` for
/// `m` in {3, 6}, with a blow-up warning flag.
#[derive(Debug, Clone, Serialize)]
pub struct MomentMonitor {
    pub sup_moment_3: f64,
    pub sup_moment_6: f64,
    pub blow_up: bool,
}

pub fn moment_monitor(paths: &[SamplePath]) -> Result<MomentMonitor> {
    if paths.is_empty() {
        return Err(Error::domain("moment monitor needs at least one path"));
    }
    let mut m3 = 0.0;
    let mut m6 = 0.0;
    for p in paths {
        let sup = p.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        m3 += sup.powi(3);
        m6 += sup.powi(6);
    }
    m3 /= paths.len() as f64;
    m6 /= paths.len() as f64;
    Ok(MomentMonitor {
        sup_moment_3: m3,
        sup_moment_6: m6,
        blow_up: !m3.is_finite() || !m6.is_finite() || m6 > 1e12,
    })
}

/// Integer-dimension radial construction: Euler scheme for the
/// `delta`-dimensional SDE `dY = d(beta) + Gamma(t, ||Y||-path) Y/||Y|| dt`,
/// returning the Euclidean-norm path. At a step with `||Y|| = 0` the unit
/// drift direction is replaced by 0 (the event has measure zero in
/// continuous time; this choice is a pragmatic discretization).
pub fn radial_bessel_oracle(
    delta: usize,
    x0: f64,
    gamma: &PathFunctional,
    grid: &Arc<TimeGrid>,
    seed: u64,
) -> Result<SamplePath> {
    if !(delta == 2 || delta == 3) {
        return Err(Error::domain("radial oracle supports delta in {2, 3}"));
    }
    if !(x0 >= 0.0) {
        return Err(Error::domain(format!("x0 must be >= 0, got {x0}")));
    }
    if gamma.bounded_by().is_none() && gamma.constant_value() != Some(0.0) {
        return Err(Error::domain("radial oracle needs a bounded functional"));
    }
    let n = grid.n_steps();
    let mut rng = path_rng(seed, 0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut y = vec![0.0; delta];
    y[0] = x0;
    let mut norm_values = Vec::with_capacity(n + 1);
    norm_values.push(x0);
    // running norm path, tail frozen, for the functional argument
    let mut norm_path = SamplePath::new(Arc::clone(grid), vec![x0; n + 1], None, seed)?;
    let gamma_const = gamma.constant_value();
    for i in 0..n {
        let dt = grid.dt(i);
        let t_i = grid.times()[i];
        let g = match gamma_const {
            Some(c) => c,
            None => gamma.evaluate_stopped(t_i, &norm_path),
        };
        let norm = norm_path.values()[i];
        let drift_dir: Vec<f64> = if norm > 0.0 {
            y.iter().map(|&c| c / norm).collect()
        } else {
            vec![0.0; delta]
        };
        for (j, c) in y.iter_mut().enumerate() {
            let dw = normal.sample(&mut rng) * dt.sqrt();
            *c += dw + g * drift_dir[j] * dt;
        }
        let new_norm = y.iter().map(|c| c * c).sum::<f64>().sqrt();
        let values = norm_path.values_mut();
        if gamma_const.is_some() {
            values[i + 1] = new_norm;
        } else {
            for v in values.iter_mut().skip(i + 1) {
                *v = new_norm;
            }
        }
    }
    SamplePath::new(Arc::clone(grid), norm_path.values().to_vec(), None, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{default_y_max, CdfTable, DensitySpec};
    use crate::ensemble::par_map_paths;
    use crate::functional::clamp_functional;
    use crate::stats::{ks_critical_one_sample, ks_statistic};

    fn dim(delta: f64) -> Dimension {
        Dimension::new(delta).unwrap()
    }

    #[test]
    fn solver_is_nonnegative() {
        let grid = TimeGrid::uniform(1.0, 64).unwrap();
        let gamma = PathFunctional::constant(-1.5);
        for seed in 0..30 {
            let p = solve_pathdep_bessel(
                0.5,
                dim(0.3),
                &gamma,
                &grid,
                seed,
                SchemeVariant::EulerFullTruncation,
            )
            .unwrap();
            assert!(p.values().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn zero_gamma_reduces_to_plain_euler() {
        // with Gamma = 0 the solver is the euler recursion with constant
        // drift delta, bit for bit
        let grid = TimeGrid::uniform(1.0, 32).unwrap();
        let d = dim(0.5);
        let direct = euler_besq(
            1.0,
            &bar_gamma(&PathFunctional::zero(), d),
            &grid,
            77,
            SchemeVariant::EulerFullTruncation,
        )
        .unwrap();
        let via_solver = solve_pathdep_squared(
            1.0,
            d,
            &PathFunctional::zero(),
            &grid,
            77,
            SchemeVariant::EulerFullTruncation,
        )
        .unwrap();
        assert_eq!(direct.values(), via_solver.values());
        assert_eq!(direct.noise_increments(), via_solver.noise_increments());
    }

    #[test]
    fn null_solution_at_zero_dim_zero_start() {
        let grid = TimeGrid::uniform(1.0, 32).unwrap();
        let gamma = PathFunctional::constant(2.0).with_growth_constant(2.0);
        for seed in 0..10 {
            let p = solve_pathdep_bessel(
                0.0,
                dim(0.0),
                &gamma,
                &grid,
                seed,
                SchemeVariant::EulerFullTruncation,
            )
            .unwrap();
            assert!(p.values().iter().all(|&v| v == 0.0), "seed {seed}");
        }
    }

    #[test]
    fn driftless_solver_matches_bessel_law() {
        // delta = 1: the Euler boundary bias decays at full first order, so
        // a modest grid already sits well below the doubled critical value
        let grid = TimeGrid::uniform(1.0, 256).unwrap();
        let d = dim(1.0);
        let n = 2000;
        let paths = par_map_paths(n, |k| {
            solve_pathdep_bessel(
                1.0,
                d,
                &PathFunctional::zero(),
                &grid,
                3000 + k,
                SchemeVariant::EulerFullTruncation,
            )
        })
        .unwrap();
        let terminals: Vec<f64> = paths.iter().map(|p| p.terminal()).collect();
        let spec = DensitySpec::new(d, 1.0, 1.0).unwrap();
        let table = CdfTable::build(&spec, default_y_max(&spec), 4000).unwrap();
        let ks = ks_statistic(&terminals, |y| table.eval(y));
        // Euler bias at dt = 1/256 plus MC noise; generous but diagnostic
        let crit = 2.0 * ks_critical_one_sample(n, 0.01);
        assert!(ks < crit, "ks {ks} crit {crit}");
    }

    #[test]
    fn probe_zero_gamma() {
        let r = probe_assumptions(&PathFunctional::zero(), dim(0.5), 50, 1).unwrap();
        assert_eq!(r.observed_growth, 0.0);
        assert_eq!(r.observed_lipschitz, 0.0);
        assert_eq!(r.observed_lipschitz_bar, 0.0);
        assert!(!r.growth_violated && !r.lipschitz_violated);
    }

    #[test]
    fn probe_clipped_sup_respects_growth() {
        let k_cap = 2.0;
        let sup_gamma = PathFunctional::new(move |s, eta: &SamplePath| {
            let node = eta.grid().node_at_or_before(s).unwrap();
            eta.values()[..=node]
                .iter()
                .fold(0.0f64, |m, &v| m.max(v.abs().sqrt()))
                .min(k_cap)
        })
        .with_growth_constant(k_cap);
        let r = probe_assumptions(&sup_gamma, dim(0.5), 100, 2).unwrap();
        assert!(r.observed_growth <= k_cap + 1e-9, "{}", r.observed_growth);
        assert!(!r.growth_violated);
    }

    #[test]
    fn probe_flags_understated_growth() {
        // |Gamma| reaches ~3 on order-one paths but declares K = 0.01
        let gamma = PathFunctional::new(|s, eta: &SamplePath| {
            let node = eta.grid().node_at_or_before(s).unwrap();
            3.0 * eta.values()[..=node]
                .iter()
                .fold(0.0f64, |m, &v| m.max(v.abs().sqrt()))
        })
        .with_growth_constant(0.01);
        let r = probe_assumptions(&gamma, dim(0.5), 100, 3).unwrap();
        assert!(r.growth_violated, "observed {}", r.observed_growth);
    }

    #[test]
    fn coupling_identical_variant_is_zero() {
        let grid = TimeGrid::uniform(1.0, 64).unwrap();
        let r = coupling_distance(
            1.0,
            dim(0.5),
            &PathFunctional::zero(),
            &grid,
            9,
            64,
            SchemeVariant::EulerFullTruncation,
            SchemeVariant::EulerFullTruncation,
        )
        .unwrap();
        assert_eq!(r.max, 0.0);
    }

    #[test]
    fn coupling_shrinks_under_refinement() {
        // start near the boundary so truncation and reflection actually
        // disagree on most paths
        let d = dim(0.5);
        let mut medians = Vec::new();
        for steps in [32usize, 128, 512] {
            let grid = TimeGrid::uniform(1.0, steps).unwrap();
            let r = coupling_distance(
                0.2,
                d,
                &PathFunctional::zero(),
                &grid,
                400,
                200,
                SchemeVariant::EulerFullTruncation,
                SchemeVariant::EulerReflection,
            )
            .unwrap();
            medians.push(r.median);
        }
        assert!(
            medians[2] < medians[0],
            "medians do not shrink: {medians:?}"
        );
    }

    #[test]
    fn radial_oracle_rejects_bad_dims() {
        let grid = TimeGrid::uniform(1.0, 8).unwrap();
        assert!(radial_bessel_oracle(1, 1.0, &PathFunctional::zero(), &grid, 0).is_err());
        assert!(radial_bessel_oracle(4, 1.0, &PathFunctional::zero(), &grid, 0).is_err());
        let unbounded = PathFunctional::new(|_, eta: &SamplePath| eta.terminal());
        assert!(radial_bessel_oracle(3, 1.0, &unbounded, &grid, 0).is_err());
    }

    #[test]
    fn radial_oracle_matches_bes3_law() {
        let grid = TimeGrid::uniform(1.0, 128).unwrap();
        let n = 2000;
        let terminals: Vec<f64> = par_map_paths(n, |k| {
            radial_bessel_oracle(3, 1.0, &PathFunctional::zero(), &grid, 5000 + k)
        })
        .unwrap()
        .iter()
        .map(|p| p.terminal())
        .collect();
        let spec = DensitySpec::new(dim(3.0), 1.0, 1.0).unwrap();
        let table = CdfTable::build(&spec, default_y_max(&spec), 4000).unwrap();
        let ks = ks_statistic(&terminals, |y| table.eval(y));
        let crit = 2.0 * ks_critical_one_sample(n, 0.01);
        assert!(ks < crit, "ks {ks} crit {crit}");
    }

    #[test]
    fn bes2_stays_positive_at_desk_scale() {
        let grid = TimeGrid::uniform(1.0, 256).unwrap();
        let paths = par_map_paths(500, |k| {
            radial_bessel_oracle(2, 1.0, &PathFunctional::zero(), &grid, 7000 + k)
        })
        .unwrap();
        let min = paths
            .iter()
            .flat_map(|p| p.values().iter().cloned())
            .fold(f64::MAX, f64::min);
        assert!(min > 0.0, "min {min}");
    }

    #[test]
    fn two_simulators_agree_with_bounded_gamma() {
        // bounded constant drift, delta = 3: radial construction vs the
        // squared-process solver, two-sample KS on terminal values
        let grid = TimeGrid::uniform(1.0, 256).unwrap();
        let gamma = clamp_functional(&PathFunctional::constant(0.5), 1.0).unwrap();
        let n = 1500;
        let a: Vec<f64> = par_map_paths(n, |k| {
            radial_bessel_oracle(3, 1.0, &gamma, &grid, 11_000 + k)
        })
        .unwrap()
        .iter()
        .map(|p| p.terminal())
        .collect();
        let b: Vec<f64> = par_map_paths(n, |k| {
            solve_pathdep_bessel(
                1.0,
                dim(3.0),
                &gamma,
                &grid,
                13_000 + k,
                SchemeVariant::EulerFullTruncation,
            )
        })
        .unwrap()
        .iter()
        .map(|p| p.terminal())
        .collect();
        let ks = crate::stats::ks_two_sample(&a, &b);
        let crit = 2.0 * crate::stats::ks_critical_two_sample(n, n, 0.01);
        assert!(ks < crit, "ks {ks} crit {crit}");
    }

    #[test]
    fn moment_monitor_flags_blow_up() {
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        let tame = SamplePath::new(Arc::clone(&grid), vec![1.0, 2.0, 1.0], None, 0).unwrap();
        let r = moment_monitor(&[tame.clone()]).unwrap();
        assert!(!r.blow_up);
        assert!((r.sup_moment_3 - 8.0).abs() < 1e-12);
        let wild = SamplePath::new(grid, vec![1.0, 1e4, 1.0], None, 0).unwrap();
        assert!(moment_monitor(&[wild]).unwrap().blow_up);
    }
}
