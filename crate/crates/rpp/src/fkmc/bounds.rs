//! Restricted exponential moments on boxes and the Feynman–Kac inequality suite.

use super::{bridge_survival, log_mean_exp, normal, step_count, sub_seed};
use crate::error::{domain, Error, Result};
use crate::field::Estimate;
use crate::rng::{par_indexed, stream, StreamRng};
use crate::varcalc::{principal_eigenvalue, LatticeOperatorSpec};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Potential on the nodes `lo + j·h` of a box, interpolated multilinearly and
/// held constant beyond the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    lo: Vec<f64>,
    h: f64,
    n: Vec<usize>,
    values: Vec<f64>,
}

impl XiGrid {
    pub fn from_fn<F: Fn(&[f64]) -> f64>(lo: &[f64], hi: &[f64], h: f64, f: F) -> Result<Self> {
        let d = lo.len();
        if d == 0 || d > 3 || hi.len() != d || !(h > 0.0) {
            return Err(Error::Geometry("potential grids need 1 to 3 dimensions and h > 0".into()));
        }
        let mut n = Vec::with_capacity(d);
        for k in 0..d {
            let m = (hi[k] - lo[k]) / h;
            if !(m.round() >= 1.0) || (m - m.round()).abs() > 1e-6 {
                return Err(Error::Geometry(format!("axis {k} is not a multiple of h = {h}")));
            }
            n.push(m.round() as usize + 1);
        }
        let total: usize = n.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut x = vec![0.0; d];
        for mut i in 0..total {
            for k in 0..d {
                x[k] = lo[k] + (i % n[k]) as f64 * h;
                i /= n[k];
            }
            let v = f(&x);
            if !v.is_finite() {
                return domain("potential values must be finite");
            }
            values.push(v);
        }
        Ok(XiGrid { lo: lo.to_vec(), h, n, values })
    }

    pub fn d(&self) -> usize {
        self.lo.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Multilinear interpolation.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.d();
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for k in 0..d {
            let u = ((x[k] - self.lo[k]) / self.h).clamp(0.0, (self.n[k] - 1) as f64);
            let i = (u.floor() as usize).min(self.n[k].saturating_sub(2));
            base[k] = i;
            frac[k] = (u - i as f64).min(1.0);
        }
        let mut s = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = 0;
            let mut stride = 1;
            for k in 0..d {
                let bit = (corner >> k) & 1;
                let j = if self.n[k] == 1 { 0 } else { base[k] + bit };
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                idx += j * stride;
                stride *= self.n[k];
            }
            if w != 0.0 {
                s += w * self.values[idx];
            }
        }
        s
    }

    /// Lattice operator `½Δ_h + diag(scale·ξ)` on the box `(lo, hi)`.
    pub fn lattice(&self, lo: &[f64], hi: &[f64], scale: f64) -> Result<LatticeOperatorSpec> {
        LatticeOperatorSpec::from_fn(lo.to_vec(), hi.to_vec(), self.h, |x| scale * self.eval(x))
    }
}

/// Bounded random potential on `[−w, w]`: a low-frequency Fourier series with
/// coefficients of size `amplitude/(k+1)`, periodic with period 4.
pub fn random_xi(seed: u64, index: u64, amplitude: f64, half_width: f64, h: f64) -> Result<XiGrid> {
    let mut rng = stream(seed, index);
    let coef: Vec<(f64, f64)> = (0..5)
        .map(|k| {
            let a = amplitude / (k + 1) as f64;
            (rng.random_range(-a..a), rng.random_range(-a..a))
        })
        .collect();
    XiGrid::from_fn(&[-half_width], &[half_width], h, |x| {
        coef.iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let w = k as f64 * PI * x[0] / 2.0;
                a * w.cos() + b * w.sin()
            })
            .sum()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum LegMode {
    Free,
    /// Only the end point must lie in the box.
    EndInside,
    /// The whole leg must stay in the box.
    Confined,
}

#[derive(Debug, Clone, Copy)]
struct Leg {
    duration: f64,
    scale: f64,
    mode: LegMode,
}

#[derive(Debug, Clone, Copy)]
enum Start<'a> {
    Point(&'a [f64]),
    Uniform,
}

struct BoxMc<'a> {
    lo: &'a [f64],
    hi: &'a [f64],
    xi: &'a XiGrid,
    dt: f64,
}

impl BoxMc<'_> {
    fn inside(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(k, v)| *v > self.lo[k] && *v < self.hi[k])
    }

    fn step_log_survival(&self, x: &[f64], y: &[f64], dt: f64) -> f64 {
        let mut s = 0.0;
        for k in 0..x.len() {
            let f = bridge_survival(x[k] - self.lo[k], y[k] - self.lo[k], dt) * bridge_survival(self.hi[k] - x[k], self.hi[k] - y[k], dt);
            s += f.ln();
        }
        s
    }

    /// Log-weight of one path: the scaled time integrals of ξ plus the log
    /// survival factors; `−∞` when killed.
    fn path(&self, rng: &mut StreamRng, start: Start<'_>, legs: &[Leg]) -> f64 {
        let d = self.lo.len();
        let mut x: Vec<f64> = match start {
            Start::Point(p) => p.to_vec(),
            Start::Uniform => (0..d).map(|k| rng.random_range(self.lo[k]..self.hi[k])).collect(),
        };
        let mut y = vec![0.0; d];
        let mut logw = 0.0;
        for leg in legs {
            let n = ((leg.duration / self.dt).round() as usize).max(1);
            let dt = leg.duration / n as f64;
            let sd = dt.sqrt();
            let mut fx = self.xi.eval(&x);
            for _ in 0..n {
                for k in 0..d {
                    y[k] = x[k] + sd * normal(rng);
                }
                let fy = self.xi.eval(&y);
                logw += leg.scale * 0.5 * dt * (fx + fy);
                if leg.mode == LegMode::Confined {
                    if !self.inside(&y) {
                        return f64::NEG_INFINITY;
                    }
                    logw += self.step_log_survival(&x, &y, dt);
                }
                std::mem::swap(&mut x, &mut y);
                fx = fy;
            }
            if leg.mode == LegMode::EndInside && !self.inside(&x) {
                return f64::NEG_INFINITY;
            }
        }
        logw
    }

    fn run(&self, start: Start<'_>, legs: &[Leg], n_paths: u64, seed: u64) -> Vec<f64> {
        par_indexed(n_paths, |i| {
            let mut rng = stream(seed, i);
            self.path(&mut rng, start, legs)
        })
    }
}

/// `E_x[exp{∫₀ᵗ ξ(B_s) ds}; τ_D ≥ t]` for the box `D = (lo, hi)`.
#[allow(clippy::too_many_arguments)]
pub fn restricted_moment(lo: &[f64], hi: &[f64], x: &[f64], t: f64, xi: &XiGrid, n_paths: u64, dt: f64, seed: u64) -> Result<Estimate> {
    if x.len() != lo.len() || hi.len() != lo.len() || xi.d() != lo.len() {
        return Err(Error::Geometry("box, point and potential dimensions differ".into()));
    }
    if !x.iter().enumerate().all(|(k, v)| *v > lo[k] && *v < hi[k]) {
        return domain("start point must lie in the box");
    }
    step_count(t, dt)?;
    let mc = BoxMc { lo, hi, xi, dt };
    let logs = mc.run(Start::Point(x), &[Leg { duration: t, scale: 1.0, mode: LegMode::Confined }], n_paths, seed);
    let values: Vec<f64> = logs.iter().map(|v| v.exp()).collect();
    Estimate::from_values(&values, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FkSuiteConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub t: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_paths: u64,
    pub dt: f64,
    pub seed: u64,
}

impl FkSuiteConfig {
    fn validate(&self) -> Result<()> {
        if (1.0 / self.alpha + 1.0 / self.beta - 1.0).abs() > 1e-12 || !(self.alpha > 1.0 && self.beta > 1.0) {
            return domain("alpha, beta > 1 must satisfy 1/alpha + 1/beta = 1");
        }
        if !(self.delta > 0.0 && self.delta < self.t) {
            return domain("need 0 < delta < t");
        }
        if !self.lo.iter().zip(&self.hi).all(|(a, b)| *a < 0.0 && *b > 0.0) {
            return domain("the box must contain the origin");
        }
        if self.n_paths < 2 {
            return domain("need at least two paths");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundVerdict {
    Pass,
    Violation,
    Inconclusive,
}

/// An inequality `lower ≤ upper` with relative standard errors of both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub lower_rel_se: f64,
    pub upper_rel_se: f64,
    /// `ln upper − ln lower`.
    pub log_margin: f64,
    /// Standard error of `log_margin`.
    pub sigma: f64,
    pub verdict: BoundVerdict,
}

/// Relative standard error above which a side cannot decide an inequality.
pub const MAX_REL_SE: f64 = 0.5;

impl BoundCheck {
    fn new(name: &str, lower: (f64, f64), upper: (f64, f64)) -> Self {
        let log_margin = upper.0.ln() - lower.0.ln();
        let sigma = (lower.1 * lower.1 + upper.1 * upper.1).sqrt();
        let verdict = if lower.1 > MAX_REL_SE || upper.1 > MAX_REL_SE || log_margin.is_nan() {
            BoundVerdict::Inconclusive
        } else if log_margin < -4.0 * sigma {
            BoundVerdict::Violation
        } else {
            BoundVerdict::Pass
        };
        BoundCheck {
            name: name.into(),
            lower: lower.0,
            upper: upper.0,
            lower_rel_se: lower.1,
            upper_rel_se: upper.1,
            log_margin,
            sigma,
            verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkBoundReport {
    pub lambda: f64,
    pub lambda_beta_over_alpha: f64,
    pub lambda_over_alpha: f64,
    pub checks: Vec<BoundCheck>,
}

impl FkBoundReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| c.verdict == BoundVerdict::Violation).count()
    }

    pub fn inconclusive(&self) -> usize {
        self.checks.iter().filter(|c| c.verdict == BoundVerdict::Inconclusive).count()
    }
}

/// Evaluates every side of the four Feynman–Kac inequalities for `ξ` on the
/// box, by Monte Carlo and lattice eigenvalues at the grid mesh of `xi`.
pub fn fk_bound_suite(xi: &XiGrid, cfg: &FkSuiteConfig) -> Result<FkBoundReport> {
    cfg.validate()?;
    let d = cfg.lo.len();
    if xi.d() != d {
        return Err(Error::Geometry("potential and box dimensions differ".into()));
    }
    let (lo, hi) = (cfg.lo.as_slice(), cfg.hi.as_slice());
    let (t, delta, a, b) = (cfg.t, cfg.delta, cfg.alpha, cfg.beta);
    let df = d as f64;
    let vol: f64 = lo.iter().zip(hi).map(|(l, h)| h - l).product();
    let lam = |s: f64| -> Result<f64> { principal_eigenvalue(&xi.lattice(lo, hi, s)?) };
    let lambda = lam(1.0)?;
    let lambda_ba = lam(b / a)?;
    let lambda_a = lam(1.0 / a)?;

    let mc = BoxMc { lo, hi, xi, dt: cfg.dt };
    let origin = vec![0.0; d];
    let leg = |duration: f64, scale: f64, mode: LegMode| Leg { duration, scale, mode };
    let est = |label: &str, start: Start<'_>, legs: &[Leg]| -> (f64, f64) {
        let (lm, rse) = log_mean_exp(&mc.run(start, legs, cfg.n_paths, sub_seed(cfg.seed, label, 0)));
        (lm.exp(), rse)
    };
    // ∫_D E_x[e^{∫₀ᵗξ}; τ ≥ t] dx
    let q1 = est("fk-q1", Start::Uniform, &[leg(t, 1.0, LegMode::Confined)]);
    let q1 = (vol * q1.0, q1.1);
    // E_0[e^{∫₀ᵗξ}; τ ≥ t]
    let q2 = est("fk-q2", Start::Point(&origin), &[leg(t, 1.0, LegMode::Confined)]);
    // E_0 e^{β∫₀^δ ξ}
    let q3 = est("fk-q3", Start::Point(&origin), &[leg(delta, b, LegMode::Free)]);
    // ∫_D E_x[e^{α∫₀^{t−δ}ξ}; τ ≥ t−δ] dx
    let q4 = est("fk-q4", Start::Uniform, &[leg(t - delta, a, LegMode::Confined)]);
    let q4 = (vol * q4.0, q4.1);
    // E_0 e^{∫₀ᵗξ}
    let q5 = est("fk-q5", Start::Point(&origin), &[leg(t, 1.0, LegMode::Free)]);
    // E_0 e^{−(β/α)∫₀^δ ξ}
    let q6 = est("fk-q6", Start::Point(&origin), &[leg(delta, -b / a, LegMode::Free)]);
    // ∫ p_δ(x) E_x[e^{α⁻¹∫₀^{t−δ}ξ}; τ ≥ t−δ] dx
    let q7 = est("fk-q7", Start::Point(&origin), &[leg(delta, 0.0, LegMode::EndInside), leg(t - delta, 1.0 / a, LegMode::Confined)]);

    let mut checks = Vec::new();
    checks.push(BoundCheck::new("FK-2 upper bound on the restricted moment integral", q1, (vol * (t * lambda).exp(), 0.0)));
    let fk2p = (2.0 * PI).powf(a * df / 2.0)
        * delta.powf(df / 2.0)
        * t.powf(a * df / (2.0 * b))
        * vol.powf(-2.0 * a / b)
        * (-delta * (a / b) * lambda_ba).exp()
        * (a * (t + delta) * lambda_a).exp();
    checks.push(BoundCheck::new("FK-2' lower bound on the restricted moment integral", (fk2p, 0.0), q1));
    let fk4 = q3.0.powf(1.0 / b) * (q4.0 / (2.0 * PI * delta).powf(df / 2.0)).powf(1.0 / a);
    let fk4_se = ((q3.1 / b).powi(2) + (q4.1 / a).powi(2)).sqrt();
    checks.push(BoundCheck::new("FK-4 Hölder upper bound from the origin", q2, (fk4, fk4_se)));
    let fk5 = q6.0.powf(-a / b) * q7.0.powf(a);
    let fk5_se = ((q6.1 * a / b).powi(2) + (q7.1 * a).powi(2)).sqrt();
    checks.push(BoundCheck::new("FK-5 Hölder lower bound from the origin", (fk5, fk5_se), q5));
    Ok(FkBoundReport { lambda, lambda_beta_over_alpha: lambda_ba, lambda_over_alpha: lambda_a, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fkmc::confinement_probability;

    fn zero_xi() -> XiGrid {
        XiGrid::from_fn(&[-8.0], &[8.0], 1.0 / 64.0, |_| 0.0).unwrap()
    }

    fn suite() -> FkSuiteConfig {
        FkSuiteConfig { lo: vec![-1.0], hi: vec![1.0], t: 1.0, delta: 0.5, alpha: 2.0, beta: 2.0, n_paths: 4000, dt: 1.0 / 256.0, seed: 5 }
    }

    #[test]
    fn interpolation() {
        let g = XiGrid::from_fn(&[0.0, 0.0], &[1.0, 1.0], 0.5, |x| x[0] + 2.0 * x[1]).unwrap();
        assert!((g.eval(&[0.3, 0.7]) - 1.7).abs() < 1e-12);
        assert!((g.eval(&[5.0, -1.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn restricted_reduces_to_confinement() {
        let xi = zero_xi();
        let a = restricted_moment(&[-1.0], &[1.0], &[0.0], 1.0, &xi, 20_000, 1.0 / 256.0, 1).unwrap();
        let b = confinement_probability(1.0, 1.0, 1, 20_000, 1.0 / 256.0, 2).unwrap();
        assert!(a.z_between(&b).abs() < 4.0);
        let c = XiGrid::from_fn(&[-8.0], &[8.0], 1.0 / 64.0, |_| -0.7).unwrap();
        let e = restricted_moment(&[-1.0], &[1.0], &[0.0], 1.0, &c, 20_000, 1.0 / 256.0, 1).unwrap();
        assert!((e.value - (-0.7f64).exp() * a.value).abs() < 1e-9);
        let later = restricted_moment(&[-1.0], &[1.0], &[0.0], 2.0, &c, 20_000, 1.0 / 256.0, 1).unwrap();
        assert!(later.value < e.value);
    }

    #[test]
    fn zero_potential_suite_against_spectral_series() {
        let xi = zero_xi();
        let r = fk_bound_suite(&xi, &suite()).unwrap();
        // ∫_{−1}^{1} P_x{τ ≥ 1} dx = Σ_{k odd} 16/(k²π²) e^{−k²π²/8}
        let series: f64 = (0..50)
            .map(|j| {
                let k = (2 * j + 1) as f64;
                16.0 / (k * k * PI * PI) * (-k * k * PI * PI / 8.0).exp()
            })
            .sum();
        let fk2 = &r.checks[0];
        assert!((fk2.lower - series).abs() < 4.0 * fk2.lower_rel_se * fk2.lower, "{} {series}", fk2.lower);
        assert!((r.lambda + PI * PI / 8.0).abs() < 1e-3);
        assert_eq!(r.violations(), 0, "{r:?}");
    }

    #[test]
    fn random_potential_and_late_delta() {
        let xi = random_xi(9, 0, 2.0, 8.0, 1.0 / 64.0).unwrap();
        let r = fk_bound_suite(&xi, &suite()).unwrap();
        assert_eq!(r.violations(), 0, "{r:?}");
        let late = fk_bound_suite(&xi, &FkSuiteConfig { delta: 0.99, ..suite() }).unwrap();
        assert_eq!(late.violations(), 0, "{late:?}");
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(fk_bound_suite(&zero_xi(), &FkSuiteConfig { beta: 3.0, ..suite() }).is_err());
        assert!(fk_bound_suite(&zero_xi(), &FkSuiteConfig { delta: 1.0, ..suite() }).is_err());
    }
}
