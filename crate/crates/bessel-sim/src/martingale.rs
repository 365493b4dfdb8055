//! Statistical verification of the singular martingale problem: build the
//! candidate martingale `M^f` along simulated paths and test the martingale
//! property through conditional-increment z-scores against adapted
//! statistics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::PathFunctional;
use crate::grid::{Dimension, SamplePath};
use crate::operator::{apply_l, TestFunction};
use crate::stats::mean_stderr;

/// `M^f` sampled at the grid nodes of the underlying path:
/// `M^f_t = f(X_t) - f(X_0) - sum_i Lf(X_{t_i}) dt_i
///          - sum_i f'(X_{t_i}) Gamma(t_i, X^{t_i}) dt_i`
/// with left-endpoint quadrature over nodes `t_i < t`.
pub fn compute_mf(
    f: &TestFunction,
    dim: Dimension,
    gamma: &PathFunctional,
    path: &SamplePath,
) -> Result<Vec<f64>> {
    let grid = path.grid();
    let n = grid.n_steps();
    let x = path.values();
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    let gamma_const = gamma.constant_value();
    for i in 0..n {
        let dt = grid.dt(i);
        let lf = apply_l(f, dim, x[i])?;
        let g = match gamma_const {
            Some(c) => c,
            None => gamma.evaluate(grid.times()[i], path)?,
        };
        acc += (lf + f.d1(x[i]) * g) * dt;
        out.push(f.eval(x[i + 1]) - f.eval(x[0]) - acc);
    }
    Ok(out)
}

/// Strong residual `M^f_t - sum_i f'(X_{t_i}) dW_i`: for paths carrying
/// their Brownian increments this should vanish at the scheme's weak order.
pub fn strong_residual(
    f: &TestFunction,
    dim: Dimension,
    gamma: &PathFunctional,
    path: &SamplePath,
) -> Result<Vec<f64>> {
    let dw = path
        .noise_increments()
        .ok_or(Error::MissingNoiseIncrements)?;
    let mf = compute_mf(f, dim, gamma, path)?;
    let x = path.values();
    let mut stoch = 0.0;
    let mut out = Vec::with_capacity(mf.len());
    out.push(mf[0]);
    for i in 0..dw.len() {
        stoch += f.d1(x[i]) * dw[i];
        out.push(mf[i + 1] - stoch);
    }
    Ok(out)
}

/// One entry of the z-score matrix.
#[derive(Debug, Clone, Serialize)]
pub struct ZEntry {
    /// Conditioning time `s` of the checkpoint pair `(s, t)`.
    pub s: f64,
    /// Evaluation time `t`.
    pub t: f64,
    /// Name of the adapted statistic `H_s`.
    pub statistic: String,
    /// Monte Carlo estimate of `E[(M_t - M_s) H_s]`.
    pub estimate: f64,
    pub stderr: f64,
    pub z: f64,
}

/// Outcome of a martingale-property test over an ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct MartingaleReport {
    pub test_function: String,
    pub delta: f64,
    pub n_paths: usize,
    pub z_threshold: f64,
    pub entries: Vec<ZEntry>,
    pub max_abs_z: f64,
    pub pass: bool,
}

/// Adapted statistics used in the orthogonality test: for a martingale,
/// `E[(M_t - M_s) H_s] = 0` for any bounded `F_s`-measurable `H_s`.
fn statistic_basket(path: &SamplePath, node: usize) -> [(&'static str, f64); 4] {
    let x = path.values();
    let running_max = x[..=node].iter().cloned().fold(f64::MIN, f64::max);
    [
        ("1", 1.0),
        ("X_s", x[node]),
        ("X_s^2", x[node] * x[node]),
        ("max_{u<=s} X_u", running_max),
    ]
}

/// Martingale z-test: checkpoint pairs `(0, T/4), (T/4, T/2), (T/2, 3T/4),
/// (3T/4, T)` crossed with four adapted statistics. `paths` must share a
/// grid whose step count is divisible by 4. Pass iff every `|z|` is below
/// `z_threshold`.
pub fn martingale_zscore(
    f: &TestFunction,
    dim: Dimension,
    gamma: &PathFunctional,
    paths: &[SamplePath],
    z_threshold: f64,
) -> Result<MartingaleReport> {
    if paths.is_empty() {
        return Err(Error::domain("martingale test needs at least one path"));
    }
    let grid = paths[0].grid();
    let n = grid.n_steps();
    if n % 4 != 0 {
        return Err(Error::domain("step count must be divisible by 4"));
    }
    let checkpoints = [0, n / 4, n / 2, 3 * n / 4, n];

    // per-path: M at the checkpoints and the statistics at the left ends
    let mut increments: Vec<Vec<f64>> = vec![Vec::with_capacity(paths.len()); 16];
    for path in paths {
        if path.grid().times() != grid.times() {
            return Err(Error::domain("paths must share one grid"));
        }
        let mf = compute_mf(f, dim, gamma, path)?;
        for (pair, w) in checkpoints.windows(2).enumerate() {
            let dm = mf[w[1]] - mf[w[0]];
            for (j, (_, h)) in statistic_basket(path, w[0]).iter().enumerate() {
                increments[4 * pair + j].push(dm * h);
            }
        }
    }

    let mut entries = Vec::with_capacity(16);
    let mut max_abs_z: f64 = 0.0;
    for (pair, w) in checkpoints.windows(2).enumerate() {
        let names = ["1", "X_s", "X_s^2", "max_{u<=s} X_u"];
        for (j, name) in names.iter().enumerate() {
            let terms = &increments[4 * pair + j];
            let (mean, se) = mean_stderr(terms);
            let z = if se > 0.0 { mean / se } else { 0.0 };
            max_abs_z = max_abs_z.max(z.abs());
            entries.push(ZEntry {
                s: grid.times()[w[0]],
                t: grid.times()[w[1]],
                statistic: (*name).to_string(),
                estimate: mean,
                stderr: se,
                z,
            });
        }
    }
    Ok(MartingaleReport {
        test_function: f.label().to_string(),
        delta: dim.delta(),
        n_paths: paths.len(),
        z_threshold,
        entries,
        max_abs_z,
        pass: max_abs_z < z_threshold,
    })
}
