//! Time grids and discretized sample paths.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Discretization of `[0, T]` by strictly increasing nodes `t_0 = 0 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// Uniform grid with `n_steps` equal steps over `[0, horizon]`.
    pub fn uniform(horizon: f64, n_steps: usize) -> Result<Arc<Self>> {
        if !(horizon > 0.0) {
            return Err(Error::domain(format!("horizon must be > 0, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(Error::domain("grid needs at least one step"));
        }
        let dt = horizon / n_steps as f64;
        let mut times: Vec<f64> = (0..=n_steps).map(|i| i as f64 * dt).collect();
        // pin the endpoint so t_n = T exactly
        times[n_steps] = horizon;
        Ok(Arc::new(TimeGrid { times }))
    }

    /// Grid from explicit nodes; must start at 0 and be strictly increasing.
    pub fn from_times(times: Vec<f64>) -> Result<Arc<Self>> {
        if times.len() < 2 {
            return Err(Error::domain("grid needs at least two nodes"));
        }
        if times[0] != 0.0 {
            return Err(Error::domain("grid must start at t = 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("grid nodes must be strictly increasing"));
        }
        Ok(Arc::new(TimeGrid { times }))
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Step size of step `i`, i.e. `t_{i+1} - t_i`.
    pub fn dt(&self, i: usize) -> f64 {
        self.times[i + 1] - self.times[i]
    }

    /// Index of the last node with `t_i <= t`.
    pub fn node_at_or_before(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::domain(format!(
                "t = {t} outside [0, {}]",
                self.horizon()
            )));
        }
        Ok(match self.times.partition_point(|&u| u <= t) {
            0 => 0,
            k => k - 1,
        })
    }
}

/// A trajectory on a [`TimeGrid`], optionally with the Brownian increments
/// that generated it.
#[derive(Debug, Clone)]
pub struct SamplePath {
    grid: Arc<TimeGrid>,
    values: Vec<f64>,
    noise_increments: Option<Vec<f64>>,
    seed: u64,
}

impl SamplePath {
    pub fn new(
        grid: Arc<TimeGrid>,
        values: Vec<f64>,
        noise_increments: Option<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        if values.len() != grid.n_steps() + 1 {
            return Err(Error::domain(format!(
                "values length {} != n_steps + 1 = {}",
                values.len(),
                grid.n_steps() + 1
            )));
        }
        if let Some(dw) = &noise_increments {
            if dw.len() != grid.n_steps() {
                return Err(Error::domain(format!(
                    "noise_increments length {} != n_steps = {}",
                    dw.len(),
                    grid.n_steps()
                )));
            }
        }
        Ok(SamplePath {
            grid,
            values,
            noise_increments,
            seed,
        })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Samplers maintain the running prefix / frozen tail in place.
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn noise_increments(&self) -> Option<&[f64]> {
        self.noise_increments.as_deref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Path value at time `t`: the value at the last grid node `<= t`
    /// (paths are piecewise constant in grid index for functional evaluation).
    pub fn value_at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.grid.node_at_or_before(t)?])
    }

    /// Pointwise map of the values; increments are carried over unchanged.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> SamplePath {
        SamplePath {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
            noise_increments: self.noise_increments.clone(),
            seed: self.seed,
        }
    }
}

/// Stopped path `eta^t`: agrees with the input on `[0, t]`, frozen at the
/// value at `t` afterwards.
pub fn stop_path(path: &SamplePath, t: f64) -> Result<SamplePath> {
    let k = path.grid.node_at_or_before(t)?;
    let frozen = path.values[k];
    let mut values = path.values.clone();
    for v in values.iter_mut().skip(k + 1) {
        *v = frozen;
    }
    Ok(SamplePath {
        grid: Arc::clone(&path.grid),
        values,
        noise_increments: path.noise_increments.clone(),
        seed: path.seed,
    })
}

/// The dimension parameter of a (squared) Bessel process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimension {
    delta: f64,
}

impl Dimension {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::domain(format!("dimension must be >= 0, got {delta}")));
        }
        Ok(Dimension { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The singular regime where the Bessel process is not an Ito process.
    pub fn is_low_dim(&self) -> bool {
        self.delta <= 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_endpoints() {
        let g = TimeGrid::uniform(1.0, 7).unwrap();
        assert_eq!(g.times()[0], 0.0);
        assert_eq!(g.horizon(), 1.0);
        assert_eq!(g.n_steps(), 7);
    }

    #[test]
    fn non_monotone_grid_rejected() {
        assert!(TimeGrid::from_times(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(TimeGrid::from_times(vec![0.1, 0.5, 1.0]).is_err());
    }

    #[test]
    fn stop_path_direct_substitution() {
        let g = TimeGrid::from_times(vec![0.0, 0.5, 1.0]).unwrap();
        let p = SamplePath::new(g, vec![0.0, 1.0, 2.0], None, 0).unwrap();
        let s = stop_path(&p, 0.5).unwrap();
        assert_eq!(s.values(), &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn stop_at_horizon_is_identity() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let p = SamplePath::new(g, vec![0.0, 1.0, 0.5, 2.0, 3.0], None, 0).unwrap();
        let s = stop_path(&p, 1.0).unwrap();
        assert_eq!(s.values(), p.values());
    }

    #[test]
    fn stop_path_idempotent() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let p = SamplePath::new(g, vec![0.0, 1.0, 0.5, 2.0, 3.0], None, 0).unwrap();
        let once = stop_path(&p, 0.6).unwrap();
        let twice = stop_path(&once, 0.6).unwrap();
        assert_eq!(once.values(), twice.values());
    }

    #[test]
    fn stop_path_outside_horizon_errors() {
        let g = TimeGrid::uniform(1.0, 2).unwrap();
        let p = SamplePath::new(g, vec![0.0, 1.0, 2.0], None, 0).unwrap();
        assert!(stop_path(&p, 1.5).is_err());
        assert!(stop_path(&p, -0.1).is_err());
    }
}
