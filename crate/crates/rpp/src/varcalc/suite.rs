//! Randomized consistency checks of the lattice eigenvalue.

use super::lattice::{principal_eigenvalue, LatticeOperatorSpec};
use crate::error::{domain, Result};
use crate::rng::stream;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSuiteReport {
    pub h: f64,
    /// λ of the free interval (−1, 1) at mesh `h`.
    pub interval_value: f64,
    pub interval_target: f64,
    pub interval_error: f64,
    /// max |λ_{ξ+c} − λ_ξ − c| over the instances.
    pub shift_residual: f64,
    pub instances: usize,
    pub potential_violations: usize,
    pub domain_violations: usize,
}

impl EigenSuiteReport {
    pub fn passed(&self, interval_tol: f64, shift_tol: f64) -> bool {
        self.interval_error < interval_tol
            && self.shift_residual < shift_tol
            && self.potential_violations == 0
            && self.domain_violations == 0
    }
}

fn below(a: f64, b: f64) -> bool {
    a <= b + 1e-9 * (1.0 + b.abs())
}

/// Interval eigenvalue at mesh `h`, then `instances` random potentials (alternating
/// between the interval (−1, 1) at mesh 1/32 and the square (−1, 1)² at mesh 1/16):
/// shift covariance, monotonicity under a nonnegative bump and under enlarging
/// the domain.
pub fn eigen_suite(h: f64, instances: usize, seed: u64) -> Result<EigenSuiteReport> {
    if !(h > 0.0 && h < 1.0) {
        return domain("mesh must lie in (0, 1)");
    }
    let interval_value = principal_eigenvalue(&LatticeOperatorSpec::zero(vec![-1.0], vec![1.0], h)?)?;
    let interval_target = -PI * PI / 8.0;
    let mut shift_residual: f64 = 0.0;
    let mut potential_violations = 0;
    let mut domain_violations = 0;
    for i in 0..instances {
        let mut rng = stream(seed, i as u64);
        let d = 1 + i % 2;
        let hh = if d == 1 { 1.0 / 32.0 } else { 1.0 / 16.0 };
        let amp = rng.random_range(0.5..5.0);
        let modes: Vec<(f64, f64, f64)> =
            (0..4).map(|_| (rng.random_range(-amp..amp), rng.random_range(0.5..4.0), rng.random_range(0.0..2.0 * PI))).collect();
        let xi = |x: &[f64]| -> f64 { modes.iter().map(|(c, k, ph)| c * x.iter().map(|v| (k * v + ph).cos()).product::<f64>()).sum() };
        let lo = vec![-1.0; d];
        let hi = vec![1.0; d];
        let base = LatticeOperatorSpec::from_fn(lo.clone(), hi.clone(), hh, xi)?;
        let a = principal_eigenvalue(&base)?;
        let c = rng.random_range(-3.0..3.0);
        let shifted = principal_eigenvalue(&base.shifted(c)?)?;
        shift_residual = shift_residual.max((shifted - a - c).abs());
        let bump_amp = rng.random_range(0.0..2.0);
        let centre = rng.random_range(-1.0..1.0);
        let bumped =
            LatticeOperatorSpec::from_fn(lo.clone(), hi.clone(), hh, |x| xi(x) + bump_amp * (-(x[0] - centre).powi(2) * 4.0).exp())?;
        if !below(a, principal_eigenvalue(&bumped)?) {
            potential_violations += 1;
        }
        let mut big_hi = hi.clone();
        big_hi[0] = 1.5;
        let larger = LatticeOperatorSpec::from_fn(lo, big_hi, hh, xi)?;
        if !below(a, principal_eigenvalue(&larger)?) {
            domain_violations += 1;
        }
    }
    Ok(EigenSuiteReport {
        h,
        interval_value,
        interval_target,
        interval_error: (interval_value - interval_target).abs(),
        shift_residual,
        instances,
        potential_violations,
        domain_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let r = eigen_suite(1.0 / 64.0, 6, 3).unwrap();
        assert!(r.interval_error < 2e-3, "{r:?}");
        assert!(r.passed(2e-3, 1e-8), "{r:?}");
    }
}
