//! Large-deviation ingredients at reachable scales: exact Campbell identities along an
//! ε schedule, exact Poisson-count tail rates, empirical lower tails of ζ_ε and the
//! law of the maximal cell count.

mod maxcount;
mod zeta;

pub use maxcount::{max_count_law_table, max_count_median, max_count_spot_check, MaxCountRow, MaxCountSpot, MaxCountTable};
pub use zeta::{dictionary_1d, zeta_tail_experiment, FunctionCheck, ZetaConfig, ZetaReport, ZetaRow};

use crate::cutoff::{alpha, KernelSpec, ScaleLaw};
use crate::error::{check_hardy_range, check_renormalizable, domain, Error, Result};
use crate::field::{campbell_log_mgf_exact, kernel_integrand, poisson_log_tail, Sign};
use crate::fmt::f17;
use crate::specfun::{big_psi, psi, radial_integral, unit_ball_volume, PowerHints, QuadratureSpec};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Strictly decreasing ε values in (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScalingSchedule {
    eps: Vec<f64>,
}

impl TryFrom<Vec<f64>> for ScalingSchedule {
    type Error = Error;

    fn try_from(eps: Vec<f64>) -> Result<Self> {
        ScalingSchedule::new(eps)
    }
}

impl From<ScalingSchedule> for Vec<f64> {
    fn from(s: ScalingSchedule) -> Self {
        s.eps
    }
}

impl Default for ScalingSchedule {
    /// 1e−1, 1e−2, …, 1e−6.
    fn default() -> Self {
        ScalingSchedule { eps: (1..=6).map(|k| 10f64.powi(-k)).collect() }
    }
}

impl ScalingSchedule {
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        if eps.is_empty() {
            return domain("the ε schedule is empty");
        }
        if eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return domain("ε values must lie in (0, 1)");
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return domain("ε values must be strictly decreasing");
        }
        Ok(ScalingSchedule { eps })
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn rows(&self, d: usize, p: f64) -> Vec<ScaleRow> {
        self.eps
            .iter()
            .map(|&e| ScaleRow {
                eps: e,
                l: l_eps(e, d, p),
                deviation_scale: deviation_scale(e, d, p),
                mgf_exponent: mgf_exponent(e, d, p),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub eps: f64,
    pub l: f64,
    pub deviation_scale: f64,
    pub mgf_exponent: f64,
}

/// `ε^{−(2−p)/d}`.
pub fn deviation_scale(eps: f64, d: usize, p: f64) -> f64 {
    eps.powf(-(2.0 - p) / d as f64)
}

/// `l(ε) = ε^{−(2−p)/d} log(1/ε)`.
pub fn l_eps(eps: f64, d: usize, p: f64) -> f64 {
    deviation_scale(eps, d, p) * (1.0 / eps).ln()
}

/// `ε^{−p(2+d−p)/(d(d−p))}`.
pub fn mgf_exponent(eps: f64, d: usize, p: f64) -> f64 {
    let df = d as f64;
    eps.powf(-p * (2.0 + df - p) / (df * (df - p)))
}

/// `|v − t|/|t|`, or `|v|` when the target is zero.
pub fn relative_gap(value: f64, target: f64) -> f64 {
    if target == 0.0 {
        value.abs()
    } else {
        (value - target).abs() / target.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub eps: f64,
    pub scale: f64,
    /// `None` when the probability estimate is zero.
    pub normalized: Option<f64>,
    pub target: f64,
    pub gap: Option<f64>,
}

impl TailRow {
    fn new(eps: f64, scale: f64, normalized: Option<f64>, target: f64) -> Self {
        let normalized = normalized.filter(|v| v.is_finite());
        TailRow { eps, scale, normalized, target, gap: normalized.map(|v| relative_gap(v, target)) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub experiment: String,
    pub d: usize,
    pub p: f64,
    /// θ for the MGF checks, γ for the tail checks.
    pub parameter: f64,
    pub target: f64,
    pub rows: Vec<TailRow>,
}

impl TailReport {
    pub fn gaps(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.gap).collect()
    }

    pub fn max_gap(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.gap).try_fold(0.0f64, |m, g| g.map(|g| m.max(g)))
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.gap)
    }

    /// Number of steps along the schedule where the gap grows.
    pub fn gap_increases(&self) -> usize {
        self.rows
            .windows(2)
            .filter(|w| match (w[0].gap, w[1].gap) {
                (Some(a), Some(b)) => b > a,
                _ => true,
            })
            .count()
    }

    /// Columns: eps, scale, normalized, target, gap.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "eps,scale,normalized,target,gap")?;
        let opt = |v: Option<f64>| v.map(f17).unwrap_or_default();
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", f17(r.eps), f17(r.scale), opt(r.normalized), f17(r.target), opt(r.gap))?;
        }
        Ok(())
    }
}

fn check_theta_a(theta: f64, a: f64) -> Result<()> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return domain(format!("theta must be finite and nonnegative (got {theta})"));
    }
    if !(a > 0.0) {
        return domain(format!("cutoff parameter a must be positive (got {a})"));
    }
    Ok(())
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::new(1e-13, 1e-300, 20_000).expect("valid tolerances")
}

/// `∫ψ(θ(1−α(|x|/a))/|x|^p) dx`, or with Ψ for `Sign::Plus`, by radial quadrature.
pub fn mgf_limit_constant(theta: f64, a: f64, d: usize, p: f64, sign: Sign) -> Result<f64> {
    check_renormalizable(d, p)?;
    check_theta_a(theta, a)?;
    if theta == 0.0 {
        return Ok(0.0);
    }
    let df = d as f64;
    let g = |r: f64| -> f64 {
        let v = theta * (1.0 - alpha(r / a).unwrap_or(0.0)) * r.powf(-p);
        match sign {
            Sign::Minus => psi(v).unwrap_or(f64::NAN),
            Sign::Plus => big_psi(v).unwrap_or(f64::NAN),
        }
    };
    let hints = PowerHints::default().tail(2.0 * p - df).breakpoints([2.0 * a, 3.0 * a]);
    Ok(radial_integral(g, d, a, f64::INFINITY, &hints, &quad())?.value)
}

/// `ε^{2/(d−p)} log E exp{∓θ ε^{−p(2+d−p)/(d(d−p))} V̄^{(0)}_{a,ε}(0)}` along the schedule,
/// computed exactly by the Campbell formula for the far kernel at intensity ε,
/// against the limit constant. At a single point the two agree for every ε.
pub fn mgf_limit_check(theta: f64, a: f64, d: usize, p: f64, sign: Sign, schedule: &ScalingSchedule) -> Result<TailReport> {
    let target = mgf_limit_constant(theta, a, d, p, sign)?;
    let df = d as f64;
    let q = quad();
    let mut rows = Vec::with_capacity(schedule.eps().len());
    for &eps in schedule.eps() {
        let scale = mgf_exponent(eps, d, p);
        let f = kernel_integrand(KernelSpec::far(d, p, a, eps, ScaleLaw::Power)?, None)?;
        // the sign of the exponent: −θV̄ pairs with ψ, +θV̄ with Ψ
        let log_mgf = campbell_log_mgf_exact(&f, eps, sign, theta * scale, &q)?;
        rows.push(TailRow::new(eps, scale, Some(eps.powf(2.0 / (df - p)) * log_mgf), target));
    }
    let name = match sign {
        Sign::Minus => "mgf-psi",
        Sign::Plus => "mgf-big-psi",
    };
    Ok(TailReport { experiment: name.into(), d, p, parameter: theta, target, rows })
}

/// Default radius δ of the counting ball in `count_rate_check`.
pub const COUNT_BALL_RADIUS: f64 = 0.5;

/// `(1/l(ε)) log P{Z_ε ≥ γ ε^{−(2−p)/d}}` for `Z_ε ~ Poisson(ω_d δ^d ε)`, exactly,
/// against `−(2+d−p)γ/d`, with `δ = COUNT_BALL_RADIUS`.
pub fn count_rate_check(gamma: f64, d: usize, p: f64, schedule: &ScalingSchedule) -> Result<TailReport> {
    count_rate_check_with(gamma, d, p, COUNT_BALL_RADIUS, schedule)
}

/// Only `0 < p < min(2, d)` is needed: the count law does not involve the kernel.
pub fn count_rate_check_with(gamma: f64, d: usize, p: f64, delta: f64, schedule: &ScalingSchedule) -> Result<TailReport> {
    check_hardy_range(d, p)?;
    if !(gamma > 0.0 && gamma.is_finite()) || !(delta > 0.0) {
        return domain("count rate needs gamma > 0 and delta > 0");
    }
    let df = d as f64;
    let target = -(2.0 + df - p) * gamma / df;
    let vol = unit_ball_volume(d)? * delta.powi(d as i32);
    let mut rows = Vec::with_capacity(schedule.eps().len());
    for &eps in schedule.eps() {
        let scale = deviation_scale(eps, d, p);
        let k = count_threshold(gamma * scale);
        let lp = poisson_log_tail(vol * eps, k)?;
        rows.push(TailRow::new(eps, scale, Some(lp / l_eps(eps, d, p)), target));
    }
    Ok(TailReport { experiment: "count-rate".into(), d, p, parameter: gamma, target, rows })
}

/// Smallest integer `k ≥ c`, ignoring rounding noise in `c` itself.
fn count_threshold(c: f64) -> u64 {
    let r = c.round();
    if (c - r).abs() <= 1e-9 * c.abs().max(1.0) {
        r.max(0.0) as u64
    } else {
        c.ceil().max(0.0) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn schedule_validation() {
        assert!(ScalingSchedule::new(vec![0.1, 0.1]).is_err());
        assert!(ScalingSchedule::new(vec![1.0]).is_err());
        assert!(ScalingSchedule::new(vec![]).is_err());
        let s = ScalingSchedule::default();
        assert_eq!(s.eps().len(), 6);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ScalingSchedule>(&json).unwrap(), s);
        assert!(serde_json::from_str::<ScalingSchedule>("[0.1, 0.2]").is_err());
        let r = &s.rows(3, 2.0)[1];
        assert!((r.deviation_scale - 0.01f64.powf(0.0)).abs() < 1e-15);
        assert!((r.mgf_exponent - 0.01f64.powf(-2.0)).abs() < 1e-6);
    }

    #[test]
    fn zero_theta_mgf() {
        let r = mgf_limit_check(0.0, 1.0, 3, 2.0, Sign::Minus, &ScalingSchedule::default()).unwrap();
        assert!(r.rows.iter().all(|row| row.normalized == Some(0.0) && row.target == 0.0));
    }

    #[test]
    fn mgf_identity_is_exact_along_the_schedule() {
        for (d, p, a, theta) in [(3, 2.0, 1.0, 1.0), (2, 1.5, 2.0, 0.5)] {
            for sign in [Sign::Minus, Sign::Plus] {
                let r = mgf_limit_check(theta, a, d, p, sign, &ScalingSchedule::default()).unwrap();
                assert!(r.max_gap().unwrap() < 1e-8, "{r:?}");
                assert!(r.target > 0.0);
            }
        }
    }

    #[test]
    fn limit_constant_small_theta() {
        // ψ(λ) ≈ λ²/2: ∫ψ(θL) ≈ θ²/2 ∫L², with ∫L² known for the untruncated tail
        let (d, p, a) = (3, 2.0, 1.0);
        let theta = 1e-4;
        let c = mgf_limit_constant(theta, a, d, p, Sign::Minus).unwrap();
        let l2 = radial_integral(
            |r| ((1.0 - alpha(r / a).unwrap()) * r.powf(-p)).powi(2),
            d,
            a,
            f64::INFINITY,
            &PowerHints::default().tail(2.0 * p - 3.0).breakpoints([3.0]),
            &QuadratureSpec::default(),
        )
        .unwrap()
        .value;
        assert!((c / (theta * theta * l2 / 2.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn count_rate_converges() {
        let r = count_rate_check(1.0, 3, 1.5, &ScalingSchedule::default()).unwrap();
        assert!(r.final_gap().unwrap() < 0.1, "{r:?}");
        assert!(r.gap_increases() <= 1, "{r:?}");
    }

    #[test]
    fn count_rate_trivial_cases() {
        let s = ScalingSchedule::default();
        let a = count_rate_check(1.0, 3, 1.5, &s).unwrap();
        let b = count_rate_check(2.0, 3, 1.5, &s).unwrap();
        assert_eq!(b.target, 2.0 * a.target);
        // threshold far below the mean count of a large ball
        let s1 = ScalingSchedule::new(vec![0.1, 0.01]).unwrap();
        let tiny = count_rate_check_with(1e-3, 3, 1.5, 10.0, &s1).unwrap();
        assert!(tiny.rows.iter().all(|r| r.normalized.unwrap().abs() < 1e-12), "{tiny:?}");
        assert!(count_rate_check(1.0, 3, 2.5, &s).is_err());
        assert!(count_rate_check(1.0, 1, 1.0, &s).is_err());
    }

    #[test]
    fn count_threshold_rounding() {
        assert_eq!(count_threshold(1e-6f64.powf(-1.0 / 6.0)), 10);
        assert_eq!(count_threshold(2.3), 3);
        assert_eq!(count_threshold(0.0), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn count_rate_nonpositive_and_linear_target(gamma in 0.1f64..5.0, eps in 1e-6f64..0.5) {
            let s = ScalingSchedule::new(vec![eps]).unwrap();
            let r = count_rate_check(gamma, 3, 1.5, &s).unwrap();
            prop_assert!(r.rows[0].normalized.unwrap() <= 0.0);
            prop_assert!((r.target + 3.5 / 3.0 * gamma).abs() < 1e-12);
        }
    }
}
