//! Non-anticipative drift functionals and the transforms used to pass
//! between the radial and squared formulations.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{stop_path, Dimension, SamplePath};

type Evaluator = Arc<dyn Fn(f64, &SamplePath) -> f64 + Send + Sync>;

/// A drift intensity `Gamma(t, eta^t)` evaluated on stopped paths, with
/// optional growth/Lipschitz/bound metadata. Evaluators must be pure.
#[derive(Clone)]
pub struct PathFunctional {
    evaluator: Evaluator,
    growth_constant: Option<f64>,
    lipschitz_constant: Option<f64>,
    bounded_by: Option<f64>,
    constant: Option<f64>,
}

impl std::fmt::Debug for PathFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PathFunctional")
            .field("growth_constant", &self.growth_constant)
            .field("lipschitz_constant", &self.lipschitz_constant)
            .field("bounded_by", &self.bounded_by)
            .finish_non_exhaustive()
    }
}

impl PathFunctional {
    pub fn new(evaluator: impl Fn(f64, &SamplePath) -> f64 + Send + Sync + 'static) -> Self {
        PathFunctional {
            evaluator: Arc::new(evaluator),
            growth_constant: None,
            lipschitz_constant: None,
            bounded_by: None,
            constant: None,
        }
    }

    /// The zero functional.
    pub fn zero() -> Self {
        PathFunctional::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        let mut out = PathFunctional::new(move |_, _| c)
            .with_growth_constant(c.abs())
            .with_lipschitz_constant(0.0)
            .with_bound(c.abs());
        out.constant = Some(c);
        out
    }

    /// `Some(c)` when the functional is known to be identically `c`;
    /// samplers use this to skip stopped-path bookkeeping.
    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    pub fn with_growth_constant(mut self, k: f64) -> Self {
        self.growth_constant = Some(k);
        self
    }

    pub fn with_lipschitz_constant(mut self, k: f64) -> Self {
        self.lipschitz_constant = Some(k);
        self
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bounded_by = Some(bound);
        self
    }

    pub fn growth_constant(&self) -> Option<f64> {
        self.growth_constant
    }

    pub fn lipschitz_constant(&self) -> Option<f64> {
        self.lipschitz_constant
    }

    pub fn bounded_by(&self) -> Option<f64> {
        self.bounded_by
    }

    /// Evaluate at time `t` on the path stopped at `t`; stopping enforces
    /// non-anticipativity regardless of the inner closure.
    pub fn evaluate(&self, t: f64, path: &SamplePath) -> Result<f64> {
        let stopped = stop_path(path, t)?;
        Ok((self.evaluator)(t, &stopped))
    }

    /// Evaluate on a path that is already stopped at `t` (used by samplers
    /// that maintain the running prefix themselves).
    pub fn evaluate_stopped(&self, t: f64, stopped: &SamplePath) -> f64 {
        (self.evaluator)(t, stopped)
    }
}

/// The induced drift for the squared process:
/// `2 sqrt(|eta(s)|) * Gamma(s, sqrt(|eta^s|)) + delta`.
pub fn bar_gamma(gamma: &PathFunctional, dim: Dimension) -> PathFunctional {
    let delta = dim.delta();
    // Gamma = 0 collapses to the constant delta (2 sqrt * 0 + delta),
    // bit-identical to the general evaluation
    if gamma.constant_value() == Some(0.0) {
        let k = gamma.growth_constant().unwrap_or(0.0);
        return PathFunctional::constant(delta).with_growth_constant(4.0 * k + delta);
    }
    let out = if let Some(c) = gamma.constant_value() {
        // constant Gamma never reads the path, so skip building sqrt(|eta^s|)
        PathFunctional::new(move |s, eta: &SamplePath| {
            let here = match eta.value_at(s) {
                Ok(v) => v,
                Err(_) => return f64::NAN,
            };
            2.0 * here.abs().sqrt() * c + delta
        })
    } else {
        let inner = gamma.clone();
        PathFunctional::new(move |s, eta: &SamplePath| {
            let here = match eta.value_at(s) {
                Ok(v) => v,
                Err(_) => return f64::NAN,
            };
            let sqrt_eta = eta.map_values(|v| v.abs().sqrt());
            2.0 * here.abs().sqrt() * inner.evaluate_stopped(s, &sqrt_eta) + delta
        })
    };
    // |bar| <= 2 sqrt(b) K (1 + sqrt(b)) + delta <= (4K + delta)(1 + sup|eta|)
    match gamma.growth_constant() {
        Some(k) => out.with_growth_constant(4.0 * k + delta),
        None => out,
    }
}

/// Two-sided clamp `Gamma^N = (Gamma v (-N)) ^ N`; equals `Gamma` wherever
/// `|Gamma| <= N`.
pub fn clamp_functional(gamma: &PathFunctional, n: f64) -> Result<PathFunctional> {
    if !(n > 0.0) {
        return Err(Error::domain(format!("clamp level must be > 0, got {n}")));
    }
    // clamping a constant yields a constant; keep the marker so samplers can
    // still take their constant-drift fast path
    if let Some(c) = gamma.constant_value() {
        let mut out = PathFunctional::constant(c.clamp(-n, n)).with_bound(n);
        if let Some(k) = gamma.lipschitz_constant() {
            out = out.with_lipschitz_constant(k);
        }
        return Ok(out);
    }
    let inner = gamma.clone();
    let mut out = PathFunctional::new(move |s, eta: &SamplePath| {
        inner.evaluator_value(s, eta).clamp(-n, n)
    })
    .with_bound(n);
    if let Some(k) = gamma.growth_constant() {
        out = out.with_growth_constant(k.min(n));
    }
    if let Some(k) = gamma.lipschitz_constant() {
        out = out.with_lipschitz_constant(k);
    }
    Ok(out)
}

impl PathFunctional {
    fn evaluator_value(&self, t: f64, stopped: &SamplePath) -> f64 {
        (self.evaluator)(t, stopped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    fn path(values: Vec<f64>) -> SamplePath {
        let g = TimeGrid::uniform(1.0, values.len() - 1).unwrap();
        SamplePath::new(g, values, None, 0).unwrap()
    }

    #[test]
    fn bar_gamma_of_zero_is_delta() {
        let bar = bar_gamma(&PathFunctional::zero(), Dimension::new(0.5).unwrap());
        let p = path(vec![1.0, 2.0, 3.0]);
        assert_eq!(bar.evaluate(0.5, &p).unwrap(), 0.5);
    }

    #[test]
    fn bar_gamma_direct_substitution() {
        // Gamma = c, eta(s) = 4 => 2 * 2 * c + delta = 4c + delta
        let c = 0.7;
        let delta = 0.3;
        let bar = bar_gamma(
            &PathFunctional::constant(c),
            Dimension::new(delta).unwrap(),
        );
        let p = path(vec![4.0, 4.0, 4.0]);
        let got = bar.evaluate(1.0, &p).unwrap();
        assert!((got - (4.0 * c + delta)).abs() < 1e-14);
    }

    #[test]
    fn bar_gamma_propagates_growth() {
        let g = PathFunctional::zero().with_growth_constant(2.0);
        let bar = bar_gamma(&g, Dimension::new(1.0).unwrap());
        assert_eq!(bar.growth_constant(), Some(9.0));
    }

    #[test]
    fn clamp_is_identity_below_level() {
        let clamped = clamp_functional(&PathFunctional::constant(0.0), 5.0).unwrap();
        let p = path(vec![1.0, 1.0]);
        assert_eq!(clamped.evaluate(1.0, &p).unwrap(), 0.0);
        assert_eq!(clamped.bounded_by(), Some(5.0));
    }

    #[test]
    fn clamp_two_sided() {
        let p = path(vec![1.0, 1.0]);
        let hi = clamp_functional(&PathFunctional::constant(7.0), 5.0).unwrap();
        assert_eq!(hi.evaluate(0.5, &p).unwrap(), 5.0);
        let lo = clamp_functional(&PathFunctional::constant(-7.0), 5.0).unwrap();
        assert_eq!(lo.evaluate(0.5, &p).unwrap(), -5.0);
    }

    #[test]
    fn clamp_rejects_nonpositive_level() {
        assert!(clamp_functional(&PathFunctional::zero(), 0.0).is_err());
        assert!(clamp_functional(&PathFunctional::zero(), -1.0).is_err());
    }

    #[test]
    fn evaluation_is_non_anticipative() {
        // functional that (incorrectly) peeks at the terminal value; the
        // stop-before-evaluate contract must hide the future anyway
        let peek = PathFunctional::new(|_, eta: &SamplePath| eta.terminal());
        let a = path(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = path(vec![1.0, 2.0, 3.0, -9.0, 0.0]);
        let va = peek.evaluate(0.5, &a).unwrap();
        let vb = peek.evaluate(0.5, &b).unwrap();
        assert_eq!(va, vb);
        assert_eq!(va, 3.0);
    }
}
