//! Samplers for squared Bessel / Bessel paths: the exact Markov-transition
//! sampler, Euler-type schemes with path-dependent drift, the reflected
//! representation for dimension one, and auxiliary path transforms.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};

use crate::error::{Error, Result};
use crate::functional::PathFunctional;
use crate::grid::{Dimension, SamplePath, TimeGrid};
use crate::rng::path_rng;

/// Boundary handling of the Euler recursion near 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeVariant {
    /// Square-root argument truncated at 0; state left untouched.
    EulerFullTruncation,
    /// State reflected (`S <- |S|`) after each step.
    EulerReflection,
    /// Diffusion term taken implicitly (quadratic solve in `sqrt(S)`);
    /// positivity preserving.
    DriftImplicit,
}

/// Tolerance below which an exactly-sampled value counts as having hit 0.
pub const ZERO_ATOL: f64 = 1e-12;

/// One draw from the squared Bessel transition over `dt` started at `s`:
/// a scaled noncentral chi-squared with `delta` degrees of freedom,
/// sampled as a Poisson-mixed gamma. Valid for all real `delta >= 0`.
fn besq_transition<R: Rng>(s: f64, delta: f64, dt: f64, rng: &mut R) -> f64 {
    let lambda_half = s / (2.0 * dt);
    let mixing = if lambda_half > 0.0 {
        Poisson::new(lambda_half).expect("positive rate").sample(rng)
    } else {
        0.0
    };
    let shape = delta / 2.0 + mixing;
    if shape > 0.0 {
        dt * Gamma::new(shape, 2.0).expect("positive shape").sample(rng)
    } else {
        0.0
    }
}

/// Exact `BESQ^delta(s0)` sample on the grid: each step is drawn from the
/// exact Markov transition given the previous value. No Brownian
/// decomposition is available, so no noise increments are stored.
pub fn sample_besq_exact(
    s0: f64,
    dim: Dimension,
    grid: &Arc<TimeGrid>,
    seed: u64,
) -> Result<SamplePath> {
    if !(s0 >= 0.0) {
        return Err(Error::domain(format!("s0 must be >= 0, got {s0}")));
    }
    let mut rng = path_rng(seed, 0);
    let delta = dim.delta();
    let mut values = Vec::with_capacity(grid.n_steps() + 1);
    values.push(s0);
    let mut s = s0;
    for i in 0..grid.n_steps() {
        s = besq_transition(s, delta, grid.dt(i), &mut rng);
        values.push(s);
    }
    SamplePath::new(Arc::clone(grid), values, None, seed)
}

/// Euler recursion for the squared process with drift supplied in
/// `bar_gamma` form (which already contains the `+ delta`):
/// `S_{i+1} = S_i + bar_gamma(t_i, S^{t_i}) dt + 2 sqrt(pos(S_i)) dW_i`,
/// boundary handling per `variant`. Brownian increments are stored.
pub fn euler_besq(
    s0: f64,
    bar_gamma: &PathFunctional,
    grid: &Arc<TimeGrid>,
    seed: u64,
    variant: SchemeVariant,
) -> Result<SamplePath> {
    if !(s0 >= 0.0) {
        return Err(Error::domain(format!("s0 must be >= 0, got {s0}")));
    }
    let n = grid.n_steps();
    let mut rng = path_rng(seed, 0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut increments = Vec::with_capacity(n);

    // `path` doubles as the stopped path S^{t_i}: true values up to i,
    // tail frozen at the current value
    let mut path = SamplePath::new(Arc::clone(grid), vec![s0; n + 1], None, seed)?;
    let drift_is_constant = bar_gamma.constant_value();

    for i in 0..n {
        let dt = grid.dt(i);
        let t_i = grid.times()[i];
        let drift = match drift_is_constant {
            Some(c) => c,
            None => bar_gamma.evaluate_stopped(t_i, &path),
        };
        let s_i = path.values()[i];
        let dw = normal.sample(&mut rng) * dt.sqrt();
        increments.push(dw);
        let next = match variant {
            SchemeVariant::EulerFullTruncation => s_i + drift * dt + 2.0 * s_i.max(0.0).sqrt() * dw,
            SchemeVariant::EulerReflection => {
                (s_i + drift * dt + 2.0 * s_i.max(0.0).sqrt() * dw).abs()
            }
            SchemeVariant::DriftImplicit => {
                // solve v^2 - 2 dw v - (s_i + drift dt) = 0 for v = sqrt(S)
                let disc = dw * dw + s_i + drift * dt;
                if disc > 0.0 {
                    let v = dw + disc.sqrt();
                    if v > 0.0 {
                        v * v
                    } else {
                        0.0
                    }
                } else {
                    0.0
                }
            }
        };
        let values = path.values_mut();
        if drift_is_constant.is_some() {
            values[i + 1] = next;
        } else {
            for v in values.iter_mut().skip(i + 1) {
                *v = next;
            }
        }
    }
    SamplePath::new(
        Arc::clone(grid),
        path.values().to_vec(),
        Some(increments),
        seed,
    )
}

/// Pointwise square root; errors on negative input (schemes must have
/// sanitized), carries noise increments over unchanged.
pub fn sqrt_path(s: &SamplePath) -> Result<SamplePath> {
    if let Some(&bad) = s.values().iter().find(|v| **v < 0.0) {
        return Err(Error::domain(format!(
            "sqrt_path on a path with negative value {bad}"
        )));
    }
    Ok(s.map_values(f64::sqrt))
}

/// Exact `BES^delta(x0)` sample: square root of an exact squared-Bessel path.
pub fn sample_bes_exact(
    x0: f64,
    dim: Dimension,
    grid: &Arc<TimeGrid>,
    seed: u64,
) -> Result<SamplePath> {
    sqrt_path(&sample_besq_exact(x0 * x0, dim, grid, seed)?)
}

/// Reflected Brownian motion via the Skorokhod construction on the grid:
/// `L_t = max(0, sup_{s<=t} -(x0 + W_s))`, `X = x0 + W + L`. Returns the
/// reflected path (with the driving increments) and the boundary term `L`.
pub fn reflected_bm(
    x0: f64,
    grid: &Arc<TimeGrid>,
    seed: u64,
) -> Result<(SamplePath, SamplePath)> {
    if !(x0 >= 0.0) {
        return Err(Error::domain(format!("x0 must be >= 0, got {x0}")));
    }
    let n = grid.n_steps();
    let mut rng = path_rng(seed, 0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut increments = Vec::with_capacity(n);
    let mut x_values = Vec::with_capacity(n + 1);
    let mut l_values = Vec::with_capacity(n + 1);
    let mut w = 0.0;
    let mut l: f64 = 0.0;
    x_values.push(x0);
    l_values.push(0.0);
    for i in 0..n {
        let dw = normal.sample(&mut rng) * grid.dt(i).sqrt();
        increments.push(dw);
        w += dw;
        l = l.max(-(x0 + w));
        x_values.push(x0 + w + l);
        l_values.push(l);
    }
    let x = SamplePath::new(Arc::clone(grid), x_values, Some(increments), seed)?;
    let l_path = SamplePath::new(Arc::clone(grid), l_values, None, seed)?;
    Ok((x, l_path))
}

/// Reflected Brownian motion driven by explicitly given increments
/// (deterministic checks, couplings).
pub fn reflected_bm_from_increments(
    x0: f64,
    grid: &Arc<TimeGrid>,
    increments: &[f64],
) -> Result<(SamplePath, SamplePath)> {
    if increments.len() != grid.n_steps() {
        return Err(Error::domain("increments length != n_steps"));
    }
    let mut x_values = vec![x0];
    let mut l_values = vec![0.0];
    let mut w = 0.0;
    let mut l: f64 = 0.0;
    for &dw in increments {
        w += dw;
        l = l.max(-(x0 + w));
        x_values.push(x0 + w + l);
        l_values.push(l);
    }
    let x = SamplePath::new(Arc::clone(grid), x_values, Some(increments.to_vec()), 0)?;
    let l_path = SamplePath::new(Arc::clone(grid), l_values, None, 0)?;
    Ok((x, l_path))
}

/// Negate the path strictly after the first grid node where it hits 0
/// (within [`ZERO_ATOL`]); unchanged if it never does. Demonstrates the
/// second solution branch of the full-line martingale problem.
pub fn sign_flip_after_zero(x: &SamplePath) -> SamplePath {
    let hit = x.values().iter().position(|&v| v.abs() <= ZERO_ATOL);
    match hit {
        None => x.clone(),
        Some(tau) => {
            let values = x
                .values()
                .iter()
                .enumerate()
                .map(|(i, &v)| if i > tau { -v } else { v })
                .collect();
            SamplePath::new(
                Arc::clone(x.grid()),
                values,
                x.noise_increments().map(|d| d.to_vec()),
                x.seed(),
            )
            .expect("same shape")
        }
    }
}

/// Two distinct-in-law solutions of the dimension-one full-line martingale
/// problem built from one driving Brownian path `B = x0 + W`: the reflected
/// process `X = |B|` (exact in law at the grid nodes) and its sign-flipped
/// companion, negated from the first zero of `X` onward. For continuous
/// dimensions the grid values are almost surely nonzero, so the flip time is
/// detected here as the first sign change of `B`, which brackets a true zero
/// of `X` inside the preceding step. Returns `(reflected, flipped)`.
pub fn nonuniqueness_pair(
    x0: f64,
    grid: &Arc<TimeGrid>,
    seed: u64,
) -> Result<(SamplePath, SamplePath)> {
    if !(x0 >= 0.0) {
        return Err(Error::domain(format!("x0 must be >= 0, got {x0}")));
    }
    let n = grid.n_steps();
    let mut rng = path_rng(seed, 0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut increments = Vec::with_capacity(n);
    let mut b_values = Vec::with_capacity(n + 1);
    b_values.push(x0);
    let mut b = x0;
    for i in 0..n {
        let dw = normal.sample(&mut rng) * grid.dt(i).sqrt();
        increments.push(dw);
        b += dw;
        b_values.push(b);
    }
    let tau = b_values.iter().position(|&v| v < 0.0);
    let x_values: Vec<f64> = b_values.iter().map(|v| v.abs()).collect();
    let flipped_values: Vec<f64> = x_values
        .iter()
        .enumerate()
        .map(|(i, &v)| if tau.is_some_and(|t| i >= t) { -v } else { v })
        .collect();
    let x = SamplePath::new(Arc::clone(grid), x_values, Some(increments.clone()), seed)?;
    let flipped = SamplePath::new(Arc::clone(grid), flipped_values, Some(increments), seed)?;
    Ok((x, flipped))
}

/// Euler path for the driftless Lamperti-transformed SDE
/// `dY = sigma_0(Y) dW`; demonstrator for the uniqueness discussion.
pub fn lamperti_sde(
    y0: f64,
    dim: Dimension,
    grid: &Arc<TimeGrid>,
    seed: u64,
) -> Result<SamplePath> {
    if !dim.is_low_dim() {
        return Err(Error::domain("lamperti demonstrator needs delta in [0,1]"));
    }
    let n = grid.n_steps();
    let mut rng = path_rng(seed, 0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut values = Vec::with_capacity(n + 1);
    let mut increments = Vec::with_capacity(n);
    let mut y = y0;
    values.push(y);
    for i in 0..n {
        let dw = normal.sample(&mut rng) * grid.dt(i).sqrt();
        increments.push(dw);
        y += crate::operator::sigma0(dim, y) * dw;
        values.push(y);
    }
    SamplePath::new(Arc::clone(grid), values, Some(increments), seed)
}
