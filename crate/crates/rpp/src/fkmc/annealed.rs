//! Annealed `E exp{−θ∫₀ᵗ V̄(B_s) ds}` in d = 1, by double Monte Carlo over
//! (field, path) and by path-only Monte Carlo with the field average done
//! exactly through the Campbell functional.

use super::{normal, sub_seed};
use crate::error::{check_renormalizable, domain, Result};
use crate::field::{poisson_count, Estimate};
use crate::potential::R_MIN_FACTOR;
use crate::rng::{par_indexed, stream};
use crate::specfun::{integrate, QuadratureSpec};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealedConfig {
    pub p: f64,
    pub theta: f64,
    pub t: f64,
    pub n_steps: usize,
    /// Kernel window radius R.
    pub radius: f64,
    pub density: f64,
    /// Paths for each estimator.
    pub n_paths: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealedReport {
    /// Double Monte Carlo over independent (field, path) pairs.
    pub double_mc: Estimate,
    /// Path-only Monte Carlo of the exact field average.
    pub reduced: Estimate,
    pub z: f64,
    /// Sample variance of the reduced estimator over that of the double one.
    pub variance_ratio: f64,
}

struct Kernel {
    p: f64,
    radius: f64,
    r_min: f64,
}

impl Kernel {
    #[inline]
    fn eval(&self, u: f64) -> f64 {
        let r = u.abs();
        if r > self.radius {
            0.0
        } else {
            r.max(self.r_min).powf(-self.p)
        }
    }

    /// density·∫_{|u|≤R} k(u) du with the floor.
    fn mass(&self, density: f64) -> f64 {
        let q = 1.0 - self.p;
        density * 2.0 * ((self.radius.powf(q) - self.r_min.powf(q)) / q + self.r_min.powf(q))
    }
}

/// Segment midpoints of a 1D path from the origin.
fn midpoints(cfg: &AnnealedConfig, seed: u64, index: u64) -> Vec<f64> {
    let dt = cfg.t / cfg.n_steps as f64;
    let sd = dt.sqrt();
    let mut rng = stream(seed, index);
    let mut x = 0.0;
    (0..cfg.n_steps)
        .map(|_| {
            let y = x + sd * normal(&mut rng);
            let m = 0.5 * (x + y);
            x = y;
            m
        })
        .collect()
}

/// `∫(e^{−θF(y)} − 1) dy` with `F(y) = dt Σ_k k(y − m_k)`, split at the kernel
/// breakpoints.
fn campbell_exponent(cfg: &AnnealedConfig, kern: &Kernel, mids: &[f64]) -> Result<f64> {
    let dt = cfg.t / cfg.n_steps as f64;
    let mut bps: Vec<f64> = mids.iter().flat_map(|&m| [m - kern.radius, m, m + kern.radius]).collect();
    bps.sort_by(|a, b| a.total_cmp(b));
    bps.dedup();
    let f = |y: f64| {
        let s: f64 = mids.iter().map(|&m| kern.eval(y - m)).sum();
        (-cfg.theta * dt * s).exp_m1()
    };
    let spec = QuadratureSpec::new(1e-10, 1e-12 / bps.len() as f64, 2000)?;
    let mut total = 0.0;
    for w in bps.windows(2) {
        if w[1] > w[0] {
            total += integrate(f, w[0], w[1], &spec)?.value;
        }
    }
    Ok(cfg.density * total)
}

pub fn annealed_two_ways(cfg: &AnnealedConfig) -> Result<AnnealedReport> {
    check_renormalizable(1, cfg.p)?;
    if !(cfg.theta >= 0.0 && cfg.t > 0.0 && cfg.radius > 0.0 && cfg.density > 0.0) || cfg.n_steps == 0 || cfg.n_paths < 2 {
        return domain("annealed run needs theta >= 0, t, R, density > 0, n_steps >= 1, n_paths >= 2");
    }
    let kern = Kernel { p: cfg.p, radius: cfg.radius, r_min: R_MIN_FACTOR * cfg.radius };
    let comp = kern.mass(cfg.density);
    let dt = cfg.t / cfg.n_steps as f64;

    let path_i = sub_seed(cfg.seed, "annealed-double-path", 0);
    let field_i = sub_seed(cfg.seed, "annealed-double-field", 0);
    let double: Vec<f64> = par_indexed(cfg.n_paths, |j| {
        let mids = midpoints(cfg, path_i, j);
        let lo = mids.iter().cloned().fold(f64::INFINITY, f64::min) - kern.radius;
        let hi = mids.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + kern.radius;
        let mut rng = stream(field_i, j);
        let n = poisson_count(&mut rng, cfg.density * (hi - lo));
        let pts: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        let integral: f64 = mids.iter().map(|&m| dt * (pts.iter().map(|&y| kern.eval(y - m)).sum::<f64>() - comp)).sum();
        (-cfg.theta * integral).exp()
    });

    let path_ii = sub_seed(cfg.seed, "annealed-reduced-path", 0);
    let reduced = par_indexed(cfg.n_paths, |j| -> Result<f64> {
        let mids = midpoints(cfg, path_ii, j);
        Ok((cfg.theta * cfg.t * comp + campbell_exponent(cfg, &kern, &mids)?).exp())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let exact = |v: &[f64]| Estimate { value: 1.0, std_error: 0.0, n: v.len() as u64, seed: cfg.seed };
    let (double_mc, reduced) = if cfg.theta == 0.0 {
        (exact(&double), exact(&reduced))
    } else {
        (Estimate::from_values(&double, cfg.seed)?, Estimate::from_values(&reduced, cfg.seed)?)
    };
    let variance_ratio = if double_mc.std_error == 0.0 { 0.0 } else { reduced.sample_variance() / double_mc.sample_variance() };
    Ok(AnnealedReport { z: double_mc.z_between(&reduced), double_mc, reduced, variance_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> AnnealedConfig {
        AnnealedConfig { p: 0.75, theta: 0.5, t: 1.0, n_steps: 64, radius: 10.0, density: 1.0, n_paths: 400, seed: 3 }
    }

    #[test]
    fn zero_theta() {
        let r = annealed_two_ways(&AnnealedConfig { theta: 0.0, ..cfg() }).unwrap();
        assert_eq!(r.double_mc.value, 1.0);
        assert_eq!(r.reduced.value, 1.0);
    }

    #[test]
    fn kernel_mass_with_floor() {
        let k = Kernel { p: 0.75, radius: 10.0, r_min: 1e-5 };
        let spec = QuadratureSpec::new(1e-12, 1e-14, 4000).unwrap();
        let q = integrate(|u: f64| k.eval(u), 0.0, 1e-5, &spec).unwrap().value
            + integrate(|u: f64| k.eval(u), 1e-5, 10.0, &spec).unwrap().value;
        assert!((k.mass(1.0) - 2.0 * q).abs() < 1e-8);
    }

    #[test]
    fn single_step_campbell_exponent() {
        // one midpoint at 0: ∫(e^{−θ dt k(y)} − 1) dy by a separate fine rule
        let c = AnnealedConfig { n_steps: 1, ..cfg() };
        let k = Kernel { p: 0.75, radius: 10.0, r_min: 1e-5 };
        let got = campbell_exponent(&c, &k, &[0.0]).unwrap();
        let n = 2_000_000;
        let h = 10.0 / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let y = (i as f64 + 0.5) * h;
            s += (-0.5 * k.eval(y)).exp_m1();
        }
        assert!((got - 2.0 * s * h).abs() < 1e-5, "{got} {}", 2.0 * s * h);
    }

    #[test]
    fn estimators_agree_small() {
        let r = annealed_two_ways(&cfg()).unwrap();
        assert!(r.z.abs() < 4.0, "{r:?}");
        assert!(r.variance_ratio < 1.0);
    }
}
