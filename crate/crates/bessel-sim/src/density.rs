//! Modified Bessel function of the first kind, Bessel transition densities
//! and the weighted time-integral limits they satisfy near the origin.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::Dimension;

/// Crossover between power series and asymptotic expansion, chosen by a
/// branch-agreement sweep over [15, 25].
const BESSEL_I_CROSSOVER: f64 = 20.0;

/// Modified Bessel function of the first kind `I_nu(z)` for `nu >= -1`
/// (negative integer order handled by `I_{-1} = I_1`) and `z >= 0`.
pub fn bessel_i(nu: f64, z: f64) -> Result<f64> {
    Ok(bessel_i_scaled(nu, z)? * z.exp())
}

/// Exponentially scaled variant `e^{-z} I_nu(z)`; stable for large `z`.
pub fn bessel_i_scaled(nu: f64, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::domain(format!("bessel_i needs z >= 0, got {z}")));
    }
    if nu < -1.0 || nu > 5.0 {
        return Err(Error::domain(format!("unsupported order nu = {nu}")));
    }
    // negative integer order reflects to the positive one
    let nu = if nu < 0.0 && (nu - nu.round()).abs() < 1e-14 {
        -nu
    } else {
        nu
    };
    if z == 0.0 {
        return Ok(if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    if z <= BESSEL_I_CROSSOVER {
        Ok(bessel_i_series(nu, z) * (-z).exp())
    } else {
        Ok(bessel_i_asymptotic_scaled(nu, z))
    }
}

fn bessel_i_series(nu: f64, z: f64) -> f64 {
    let half = z / 2.0;
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    let q = half * half;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum
}

fn bessel_i_asymptotic_scaled(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        let num = mu - (2.0 * kf - 1.0) * (2.0 * kf - 1.0);
        let next = -term * num / (8.0 * kf * z);
        if next.abs() >= term.abs() {
            break; // divergent tail of the asymptotic series
        }
        term = next;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}

/// Identifies a Bessel transition density: dimension, start point, time.
#[derive(Debug, Clone, Copy)]
pub struct DensitySpec {
    dim: Dimension,
    x0: f64,
    t: f64,
}

impl DensitySpec {
    pub fn new(dim: Dimension, x0: f64, t: f64) -> Result<Self> {
        if !(x0 >= 0.0) {
            return Err(Error::domain(format!("x0 must be >= 0, got {x0}")));
        }
        if !(t > 0.0) {
            return Err(Error::domain(format!("t must be > 0, got {t}")));
        }
        if dim.delta() == 0.0 && x0 == 0.0 {
            return Err(Error::domain(
                "delta = 0 started at 0 is the null process; no density",
            ));
        }
        Ok(DensitySpec { dim, x0, t })
    }

    pub fn delta(&self) -> f64 {
        self.dim.delta()
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Bessel function order `nu = delta/2 - 1`.
    pub fn nu(&self) -> f64 {
        self.dim.delta() / 2.0 - 1.0
    }

    /// Probability mass absorbed at 0 by time `t` (nonzero only for delta = 0).
    pub fn atom_at_zero(&self) -> f64 {
        if self.dim.delta() == 0.0 {
            (-self.x0 * self.x0 / (2.0 * self.t)).exp()
        } else {
            0.0
        }
    }
}

/// Transition density of `BES^delta(x0)` at time `t`, evaluated at `y`.
///
/// For `x0 > 0` this is `(y/t)(y/x0)^nu exp(-(x0^2+y^2)/2t) I_nu(x0 y / t)`;
/// for `x0 = 0` it is `t^{-(nu+1)} y^{2nu+1} exp(-y^2/2t) / (2^nu Gamma(nu+1))`.
/// For `delta = 0` the density covers only the non-absorbed part of the law
/// (total mass `1 - atom_at_zero`).
pub fn bes_density(spec: &DensitySpec, y: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::domain(format!("y must be >= 0, got {y}")));
    }
    let delta = spec.delta();
    let nu = spec.nu();
    let t = spec.t();
    let x0 = spec.x0();
    if x0 == 0.0 {
        // 0^0 = 1 covers delta = 1 at y = 0; negative powers give +inf for
        // the integrable singularity when delta < 1
        return Ok(t.powf(-(nu + 1.0)) * y.powf(2.0 * nu + 1.0) * (-y * y / (2.0 * t)).exp()
            / (2f64.powf(nu) * gamma(nu + 1.0)));
    }
    if y == 0.0 {
        return Ok(if delta == 0.0 {
            0.0
        } else if delta < 1.0 {
            f64::INFINITY
        } else if delta == 1.0 {
            (2.0 / (std::f64::consts::PI * t)).sqrt() * (-x0 * x0 / (2.0 * t)).exp()
        } else {
            0.0
        });
    }
    let z = x0 * y / t;
    let gauss = (-(y - x0) * (y - x0) / (2.0 * t)).exp();
    Ok((y / t) * (y / x0).powf(nu) * gauss * bessel_i_scaled(nu, z)?)
}

/// Tabulated CDF of a [`DensitySpec`], built by cumulative Simpson
/// integration of the density. For `delta` in (0,1) the integrable `y^{delta-1}`
/// boundary singularity is removed by substituting `u = y^delta`.
#[derive(Debug, Clone)]
pub struct CdfTable {
    ys: Vec<f64>,
    cdf: Vec<f64>,
    atom: f64,
}

impl CdfTable {
    pub fn build(spec: &DensitySpec, y_max: f64, panels: usize) -> Result<CdfTable> {
        let delta = spec.delta();
        let atom = spec.atom_at_zero();
        let m = panels.max(64);
        let (ys, integrand): (Vec<f64>, Vec<f64>) = if delta > 0.0 && delta < 1.0 {
            let u_max = y_max.powf(delta);
            let du = u_max / (2 * m) as f64;
            let mut ys = Vec::with_capacity(2 * m + 1);
            let mut fs = Vec::with_capacity(2 * m + 1);
            for i in 0..=(2 * m) {
                let u = i as f64 * du;
                let y = u.powf(1.0 / delta);
                ys.push(y);
                let f = if i == 0 {
                    weighted_density_at_origin(spec)
                } else {
                    bes_density(spec, y)? * y.powf(1.0 - delta) / delta
                };
                fs.push(f);
            }
            (ys, fs)
        } else {
            let dy = y_max / (2 * m) as f64;
            let mut ys = Vec::with_capacity(2 * m + 1);
            let mut fs = Vec::with_capacity(2 * m + 1);
            for i in 0..=(2 * m) {
                let y = i as f64 * dy;
                ys.push(y);
                fs.push(bes_density(spec, y)?);
            }
            (ys, fs)
        };
        // cumulative Simpson over pairs of panels; nodes kept at even indices
        let h = if delta > 0.0 && delta < 1.0 {
            y_max.powf(delta) / (2 * m) as f64
        } else {
            y_max / (2 * m) as f64
        };
        let mut nodes = Vec::with_capacity(m + 1);
        let mut cdf = Vec::with_capacity(m + 1);
        nodes.push(ys[0]);
        cdf.push(0.0);
        let mut acc = 0.0;
        for j in 1..=m {
            let i = 2 * j;
            acc += h / 3.0 * (integrand[i - 2] + 4.0 * integrand[i - 1] + integrand[i]);
            nodes.push(ys[i]);
            cdf.push(acc);
        }
        Ok(CdfTable {
            ys: nodes,
            cdf,
            atom,
        })
    }

    /// Total mass of the table (atom plus integrated density); close to 1
    /// when `y_max` is generous enough.
    pub fn total_mass(&self) -> f64 {
        self.atom + self.cdf.last().copied().unwrap_or(0.0)
    }

    /// CDF value at `y` (atom at zero included), by linear interpolation.
    pub fn eval(&self, y: f64) -> f64 {
        if y <= self.ys[0] {
            return self.atom;
        }
        if y >= *self.ys.last().unwrap() {
            return self.atom + *self.cdf.last().unwrap();
        }
        let k = self.ys.partition_point(|&u| u <= y) - 1;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (c0, c1) = (self.cdf[k], self.cdf[k + 1]);
        let w = (y - y0) / (y1 - y0);
        self.atom + c0 + w * (c1 - c0)
    }
}

/// Limit value of `p(y) y^{1-delta} / delta` as `y -> 0` (the substituted
/// integrand of [`CdfTable`]); finite for `delta` in (0,1).
fn weighted_density_at_origin(spec: &DensitySpec) -> f64 {
    let nu = spec.nu();
    let t = spec.t();
    let x0 = spec.x0();
    let delta = spec.delta();
    if x0 == 0.0 {
        t.powf(-(nu + 1.0)) / (2f64.powf(nu) * gamma(nu + 1.0)) / delta
    } else {
        (1.0 / t)
            * x0.powf(-nu)
            * (x0 / (2.0 * t)).powf(nu)
            * (-x0 * x0 / (2.0 * t)).exp()
            / (gamma(nu + 1.0) * delta)
    }
}

/// Default evaluation cutoff for terminal-law CDF tables: generous upper
/// bound on where the mass of `X_t` lives.
pub fn default_y_max(spec: &DensitySpec) -> f64 {
    let delta = spec.delta();
    let t = spec.t();
    let s_mean = spec.x0() * spec.x0() + delta * t;
    let s_std = (2.0 * delta * t * t + 4.0 * spec.x0() * spec.x0() * t).sqrt();
    // wide enough that the truncated tail is ~1e-9 of the mass
    (s_mean + 30.0 * s_std + 36.0 * t).sqrt().max(2.0)
}

/// `x^{1-delta} * int_0^T p_t(x) dt`, computed by quadrature after the
/// substitution `s = x^2 / t` (then `v = ln s`) that tames the `t -> 0`
/// boundary.
pub fn weighted_time_integral(dim: Dimension, x0: f64, horizon: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("x must be > 0, got {x}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::domain("T must be > 0"));
    }
    let delta = dim.delta();
    let v_min = (x * x / horizon).ln();
    let v_max = v_min + 90.0;
    let n = 20_000usize; // Simpson intervals (even)
    let h = (v_max - v_min) / n as f64;
    let integrand = |v: f64| -> Result<f64> {
        let s = v.exp();
        let t = x * x / s;
        let spec = DensitySpec::new(dim, x0, t)?;
        let p = bes_density(&spec, x)?;
        // dt = x^2 e^{-v} dv
        Ok(p * x * x * (-v).exp())
    };
    let mut sum = integrand(v_min)? + integrand(v_max)?;
    for i in 1..n {
        let v = v_min + i as f64 * h;
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        let f = integrand(v)?;
        if !f.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand at v = {v} (x = {x})"
            )));
        }
        sum += w * f;
    }
    let integral = sum * h / 3.0;
    Ok(x.powf(1.0 - delta) * integral)
}

/// Closed-form limit of [`weighted_time_integral`] as `x -> 0+` when the
/// process starts at `x0 = 0`: `2^{2-delta/2} t^{1-delta/2} / ((2-delta) Gamma(delta/2))`.
pub fn p319_limit(dim: Dimension, t: f64) -> Result<f64> {
    let delta = dim.delta();
    if !(delta > 0.0) {
        return Err(Error::domain("limit needs delta > 0 (Gamma pole at 0)"));
    }
    if !(t > 0.0) {
        return Err(Error::domain("t must be > 0"));
    }
    Ok(2f64.powf(2.0 - delta / 2.0) * t.powf(1.0 - delta / 2.0)
        / ((2.0 - delta) * gamma(delta / 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // independent power-series oracle: direct 30-term sum with explicit
    // factorials, no recurrences shared with the implementation
    fn series_oracle(nu: f64, z: f64) -> f64 {
        let mut sum = 0.0;
        for k in 0..30 {
            let mut kfact = 1.0;
            for j in 1..=k {
                kfact *= j as f64;
            }
            sum += (z / 2.0).powf(2.0 * k as f64 + nu) / (kfact * gamma(nu + k as f64 + 1.0));
        }
        sum
    }

    #[test]
    fn bessel_i_at_zero() {
        assert_eq!(bessel_i(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(0.5, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i(-0.5, 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn bessel_i_minus_half_vs_oracle() {
        let expected = series_oracle(-0.5, 1.0);
        assert_relative_eq!(bessel_i(-0.5, 1.0).unwrap(), expected, max_relative = 1e-12);
        // sanity against the closed form sqrt(2/pi z) cosh z
        let closed = (2.0 / (std::f64::consts::PI * 1.0)).sqrt() * 1f64.cosh();
        assert_relative_eq!(expected, closed, max_relative = 1e-12);
        assert!((expected - 1.2313).abs() < 1e-4);
    }

    #[test]
    fn bessel_i_branches_agree_on_crossover() {
        for nu in [-0.85, -0.5, -0.25, 0.0, 0.5] {
            for i in 0..=20 {
                let z = 15.0 + 0.5 * i as f64;
                let series = bessel_i_series(nu, z) * (-z).exp();
                let asym = bessel_i_asymptotic_scaled(nu, z);
                assert_relative_eq!(series, asym, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn bessel_i_negative_integer_reflection() {
        let z = 3.0;
        assert_relative_eq!(
            bessel_i(-1.0, z).unwrap(),
            bessel_i(1.0, z).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn scaled_bound_lemma() {
        // e^{-z} I_nu(z) stays below 1 and decays on [5, 50]
        for nu in [-0.5, -0.25, 0.0, 0.5] {
            let mut prev = f64::INFINITY;
            for i in 0..=90 {
                let z = 5.0 + 0.5 * i as f64;
                let v = bessel_i_scaled(nu, z).unwrap();
                assert!(v > 0.0 && v < 1.0, "nu={nu} z={z} v={v}");
                if nu <= 0.0 {
                    assert!(v <= prev + 1e-15, "not decaying at nu={nu} z={z}");
                }
                prev = v;
            }
        }
    }

    #[test]
    fn half_normal_density() {
        // delta = 1, x0 = 0, t = 1: p(y) = sqrt(2/pi) e^{-y^2/2}
        let spec = DensitySpec::new(Dimension::new(1.0).unwrap(), 0.0, 1.0).unwrap();
        for y in [0.0f64, 0.3, 1.0, 2.5] {
            let expected = (2.0 / std::f64::consts::PI).sqrt() * (-y * y / 2.0).exp();
            assert_relative_eq!(bes_density(&spec, y).unwrap(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn folded_normal_density() {
        // delta = 1, x0 = 1: folded normal around x0
        let spec = DensitySpec::new(Dimension::new(1.0).unwrap(), 1.0, 0.7).unwrap();
        let t: f64 = 0.7;
        for y in [0.0, 0.4, 1.0, 2.0] {
            let expected = ((-(y - 1.0) * (y - 1.0) / (2.0 * t)).exp()
                + (-(y + 1.0) * (y + 1.0) / (2.0 * t)).exp())
                / (2.0 * std::f64::consts::PI * t).sqrt();
            assert_relative_eq!(bes_density(&spec, y).unwrap(), expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn density_normalizes() {
        for delta in [0.3, 0.7, 1.0] {
            for x0 in [0.0, 1.0] {
                for t in [0.5, 1.0] {
                    let spec =
                        DensitySpec::new(Dimension::new(delta).unwrap(), x0, t).unwrap();
                    let table =
                        CdfTable::build(&spec, default_y_max(&spec), 4000).unwrap();
                    assert!(
                        (table.total_mass() - 1.0).abs() < 1e-6,
                        "mass {} for delta={delta} x0={x0} t={t}",
                        table.total_mass()
                    );
                }
            }
        }
    }

    #[test]
    fn density_with_atom_normalizes() {
        // delta = 0 from x0 = 1: continuous part plus atom exp(-1/2t)
        let spec = DensitySpec::new(Dimension::new(0.0).unwrap(), 1.0, 1.0).unwrap();
        let table = CdfTable::build(&spec, default_y_max(&spec), 4000).unwrap();
        assert!((spec.atom_at_zero() - (-0.5f64).exp()).abs() < 1e-15);
        assert!((table.total_mass() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn null_process_has_no_density() {
        assert!(DensitySpec::new(Dimension::new(0.0).unwrap(), 0.0, 1.0).is_err());
    }

    #[test]
    fn density_nonnegative() {
        let spec = DensitySpec::new(Dimension::new(0.3).unwrap(), 1.0, 1.0).unwrap();
        for i in 0..200 {
            let y = 0.02 * i as f64;
            assert!(bes_density(&spec, y).unwrap() >= 0.0);
        }
    }

    #[test]
    fn p319_limit_values() {
        let one = Dimension::new(1.0).unwrap();
        let expected = 2f64.powf(1.5) / std::f64::consts::PI.sqrt();
        assert_relative_eq!(p319_limit(one, 1.0).unwrap(), expected, max_relative = 1e-12);
        assert!((expected - 1.5958).abs() < 1e-4);
        // power-law scaling in t
        let half = Dimension::new(0.5).unwrap();
        let v1 = p319_limit(half, 1.0).unwrap();
        let v4 = p319_limit(half, 4.0).unwrap();
        assert_relative_eq!(v4, 4f64.powf(1.0 - 0.25) * v1, max_relative = 1e-12);
    }

    #[test]
    fn p319_rejects_delta_zero() {
        assert!(p319_limit(Dimension::new(0.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn weighted_integral_converges_for_positive_start() {
        // For x0 > 0 and delta in (0,1] the small-x limit is the positive
        // constant 2^{1-d/2}/Gamma(d/2) * int_0^T t^{-d/2} e^{-x0^2/2t} dt
        // (I_nu(z) ~ (z/2)^nu / Gamma(nu+1) as z -> 0). Oracle by direct
        // Simpson quadrature of that integral.
        let delta = 0.5;
        let dim = Dimension::new(delta).unwrap();
        let n = 100_000;
        let h = 1.0 / n as f64;
        let g = |t: f64| t.powf(-delta / 2.0) * (-1.0 / (2.0 * t)).exp();
        let mut acc = g(1.0); // g(0+) = 0
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(i as f64 * h);
        }
        let oracle = 2f64.powf(1.0 - delta / 2.0) / gamma(delta / 2.0) * acc * h / 3.0;

        let mut prev = f64::INFINITY;
        let mut last = f64::NAN;
        for k in 1..=4 {
            let x = 10f64.powi(-k);
            let v = weighted_time_integral(dim, 1.0, 1.0, x).unwrap();
            assert!(v < prev, "x={x} v={v} prev={prev}");
            prev = v;
            last = v;
        }
        assert!(
            (last - oracle).abs() / oracle < 1e-3,
            "last={last} oracle={oracle}"
        );
    }

    #[test]
    fn weighted_integral_approaches_limit_from_zero_start() {
        for delta in [0.5, 1.0] {
            let dim = Dimension::new(delta).unwrap();
            let limit = p319_limit(dim, 1.0).unwrap();
            let v = weighted_time_integral(dim, 0.0, 1.0, 1e-4).unwrap();
            assert!(
                (v - limit).abs() / limit < 0.01,
                "delta={delta} v={v} limit={limit}"
            );
        }
    }
}
