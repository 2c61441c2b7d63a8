//! Discretized variational problems: principal eigenvalues, the Hardy-type
//! constants σ, ρ and M(λ), the rate function I_D and the limit constants.

mod ascent;
mod lanczos;
mod lattice;
mod radial;
mod suite;

pub use ascent::{
    random_quadratic_form, suprema_equivalence_check, ConstantPotential, HomogeneousFunctional, IntervalLattice, QuadraticForm,
    SupremaComparison, TIE_TOL,
};
pub use lanczos::{top_eigenpair, TopEigen};
pub use lattice::{ground_energy, principal_eigenpair, principal_eigenvalue, Eigenpair, LatticeOperatorSpec, EIGEN_TOL};
pub use radial::{rho_line, RadialGrid};
pub use suite::{eigen_suite, EigenSuiteReport};

use crate::error::{check_hardy_range, check_renormalizable, domain, Result};
use crate::specfun::{bessel_j_first_zero, gamma_fn, unit_ball_volume};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// `λ_d = j²_{d/2−1,1}/2`, the ground energy of −½Δ on the unit ball.
pub fn dirichlet_lambda_d(d: usize) -> Result<f64> {
    if !(1..=3).contains(&d) {
        return domain(format!("dirichlet_lambda_d supports d in 1..=3 (got {d})"));
    }
    let j = bessel_j_first_zero(d as f64 / 2.0 - 1.0)?;
    Ok(0.5 * j * j)
}

/// `sup ‖g‖₂` over `‖g‖₂² + ½‖∇g‖₂² = 1` on the box, i.e. `(1 + λ₁⁰)^{−1/2}`,
/// with `λ₁⁰` from the lattice at mesh `h`.
pub fn sup_l2_on_gd(lo: &[f64], hi: &[f64], h: f64) -> Result<f64> {
    Ok((1.0 + ground_energy(lo, hi, h)?).powf(-0.5))
}

/// The same quantity from the continuum spectrum of the box.
pub fn sup_l2_on_gd_exact(lo: &[f64], hi: &[f64]) -> f64 {
    let e: f64 = lo.iter().zip(hi).map(|(a, b)| std::f64::consts::PI.powi(2) / (2.0 * (b - a).powi(2))).sum();
    (1.0 + e).powf(-0.5)
}

/// `I_D(γ)` given `S = sup_{G_d(D)} ‖g‖₂`.
pub fn rate_i_d(gamma: f64, d: usize, p: f64, sup_l2: f64) -> Result<f64> {
    check_renormalizable(d, p)?;
    if !(gamma > 0.0) {
        return domain(format!("rate function needs gamma > 0 (got {gamma})"));
    }
    if !(sup_l2 > 0.0 && sup_l2 <= 1.0) {
        return domain(format!("sup of the L2 norm must lie in (0, 1] (got {sup_l2})"));
    }
    let df = d as f64;
    let e = df / (df - p);
    let base = gamma * (df - p) / df;
    let omega_gamma = unit_ball_volume(d)? * gamma_fn((2.0 * p - df) / p)?;
    Ok(base.powf(e) * omega_gamma.powf(-p / (df - p)) * sup_l2.powf(-2.0 * e))
}

/// `I_D(γ)` for a box at lattice mesh `h`.
pub fn rate_i_d_box(gamma: f64, p: f64, lo: &[f64], hi: &[f64], h: f64) -> Result<f64> {
    rate_i_d(gamma, lo.len(), p, sup_l2_on_gd(lo, hi, h)?)
}

/// `Λ₀(θ) = θ d²/(d−p) · (ω_d Γ((2p−d)/p)/d)^{p/d}`.
pub fn lambda0(theta: f64, d: usize, p: f64) -> Result<f64> {
    check_renormalizable(d, p)?;
    if !(theta > 0.0) {
        return domain("theta must be positive");
    }
    let df = d as f64;
    let c = unit_ball_volume(d)? * gamma_fn((2.0 * p - df) / p)? / df;
    Ok(theta * df * df / (df - p) * c.powf(p / df))
}

/// The closed form printed for `d = 3, p = 2`: `3·∛12·π·θ`.
pub fn lambda0_printed_d3p2(theta: f64) -> f64 {
    3.0 * 12f64.cbrt() * std::f64::consts::PI * theta
}

/// Side-by-side report of the general Λ₀ formula and the printed closed form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lambda0Report {
    pub theta: f64,
    pub d: usize,
    pub p: f64,
    pub computed: f64,
    pub printed: f64,
    pub ratio: f64,
    /// `(computed/printed)³`; a typo of `(9/4)^{1/3}` shows up as 4/9.
    pub ratio_cubed: f64,
    pub discrepancy: bool,
}

pub fn lambda0_report(theta: f64) -> Result<Lambda0Report> {
    let computed = lambda0(theta, 3, 2.0)?;
    let printed = lambda0_printed_d3p2(theta);
    let ratio = computed / printed;
    Ok(Lambda0Report {
        theta,
        d: 3,
        p: 2.0,
        computed,
        printed,
        ratio,
        ratio_cubed: ratio.powi(3),
        discrepancy: (ratio - 1.0).abs() > 1e-12,
    })
}

/// `σ = ρ·((2−p)/2)^{−(2−p)/2}·p^{−p/2}`.
pub fn sigma_from_rho(rho: f64, p: f64) -> f64 {
    rho * ((2.0 - p) / 2.0).powf(-(2.0 - p) / 2.0) * p.powf(-p / 2.0)
}

/// `ρ = ((2−p)/2)^{(2−p)/2}·p^{p/2}·σ`.
pub fn rho_from_sigma(sigma: f64, p: f64) -> f64 {
    sigma * ((2.0 - p) / 2.0).powf((2.0 - p) / 2.0) * p.powf(p / 2.0)
}

/// `M(λ) = ((2−p)/2)·p^{p/(2−p)}·(λσ)^{2/(2−p)}`.
pub fn m_lambda_with_sigma(lambda: f64, p: f64, sigma: f64) -> f64 {
    (2.0 - p) / 2.0 * p.powf(p / (2.0 - p)) * (lambda * sigma).powf(2.0 / (2.0 - p))
}

/// `Λ₁(θ) = ½(p/(2κ))^{p/(2−p)}(2−p)^{(4−p)/(2−p)}(dθσ/(2+d−p))^{2/(2−p)}`.
pub fn lambda1_with_sigma(theta: f64, d: usize, p: f64, kappa: f64, sigma: f64) -> Result<f64> {
    check_hardy_range(d, p)?;
    if !(theta > 0.0 && kappa > 0.0) {
        return domain("theta and kappa must be positive");
    }
    let df = d as f64;
    let q = 2.0 - p;
    Ok(0.5 * (p / (2.0 * kappa)).powf(p / q) * q.powf((4.0 - p) / q) * (df * theta * sigma / (2.0 + df - p)).powf(2.0 / q))
}

/// Radii and base mesh for the radial ρ solver; each radius is solved at
/// `h0, h0/2, …` (`levels` meshes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSchedule {
    pub radii: Vec<f64>,
    pub h0: f64,
    pub levels: usize,
}

impl Default for MeshSchedule {
    fn default() -> Self {
        MeshSchedule { radii: vec![2.0, 4.0, 8.0, 16.0], h0: 1.0 / 32.0, levels: 3 }
    }
}

impl MeshSchedule {
    pub fn meshes(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.h0 / (1u64 << k) as f64).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.levels == 0 || !(self.h0 > 0.0) {
            return domain("mesh schedule needs radii, levels >= 1 and h0 > 0");
        }
        if self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("schedule radii must increase");
        }
        Ok(())
    }
}

/// Richardson extrapolation of values on meshes `h, h/2, h/4, …`; the order is
/// estimated from the last three values when they converge monotonically.
pub fn richardson(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    if n < 2 {
        return (values.last().copied().unwrap_or(f64::NAN), None);
    }
    if n >= 3 {
        let d1 = values[n - 2] - values[n - 3];
        let d2 = values[n - 1] - values[n - 2];
        if d1 != 0.0 && d2 / d1 > 0.0 && d2 / d1 < 1.0 {
            let order = (d1 / d2).log2();
            return (values[n - 1] + d2 / (2f64.powf(order) - 1.0), Some(order));
        }
    }
    (values[n - 1], None)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoRow {
    pub radius: f64,
    pub meshes: Vec<f64>,
    pub values: Vec<f64>,
    pub extrapolated: f64,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoReport {
    pub d: usize,
    pub p: f64,
    pub rows: Vec<RhoRow>,
    /// Extrapolated value at the largest radius.
    pub value: f64,
    /// At every mesh, values are nondecreasing along the radii.
    pub nondecreasing: bool,
}

/// `ρ(d,p) = sup ∫g²|x|^{−p}` over `‖g‖₂² + ½‖∇g‖₂² = 1`, from the radial
/// finite-volume problem on growing balls.
pub fn rho_dp(d: usize, p: f64, schedule: &MeshSchedule) -> Result<RhoReport> {
    check_hardy_range(d, p)?;
    schedule.validate()?;
    let meshes = schedule.meshes();
    let mut rows = Vec::new();
    for &radius in &schedule.radii {
        let values = meshes.iter().map(|&h| Ok(RadialGrid::new(d, radius, h)?.rho(p)?.0)).collect::<Result<Vec<_>>>()?;
        let (extrapolated, order) = richardson(&values);
        rows.push(RhoRow { radius, meshes: meshes.clone(), values, extrapolated, order });
    }
    let nondecreasing = (0..meshes.len()).all(|k| rows.windows(2).all(|w| w[1].values[k] >= w[0].values[k] * (1.0 - 1e-9)));
    let value = rows.last().map(|r| r.extrapolated).unwrap_or(f64::NAN);
    Ok(RhoReport { d, p, rows, value, nondecreasing })
}

fn cached_rho(d: usize, p: f64) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (d, p.to_bits());
    if let Some(v) = cache.lock().expect("rho cache poisoned").get(&key) {
        return Ok(*v);
    }
    let v = rho_dp(d, p, &MeshSchedule::default())?.value;
    cache.lock().expect("rho cache poisoned").insert(key, v);
    Ok(v)
}

/// `σ(d,p)` from ρ on the default schedule.
pub fn sigma_dp(d: usize, p: f64) -> Result<f64> {
    Ok(sigma_from_rho(cached_rho(d, p)?, p))
}

/// `M(λ)` with σ on the default schedule.
pub fn m_lambda(lambda: f64, d: usize, p: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return domain("lambda must be positive");
    }
    Ok(m_lambda_with_sigma(lambda, p, sigma_dp(d, p)?))
}

/// `Λ₁(θ)` with σ on the default schedule.
pub fn lambda1(theta: f64, d: usize, p: f64, kappa: f64) -> Result<f64> {
    lambda1_with_sigma(theta, d, p, kappa, sigma_dp(d, p)?)
}

/// Independent estimate compared with a formula value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossCheck {
    pub method: String,
    pub meshes: Vec<f64>,
    pub values: Vec<f64>,
    pub extrapolated: f64,
    pub reference: f64,
    pub relative_difference: f64,
}

impl CrossCheck {
    fn new(method: &str, meshes: Vec<f64>, values: Vec<f64>, reference: f64) -> Self {
        let (extrapolated, _) = richardson(&values);
        CrossCheck {
            method: method.into(),
            meshes,
            values,
            extrapolated,
            reference,
            relative_difference: (extrapolated - reference).abs() / reference.abs(),
        }
    }
}

/// Residuals of the algebraic links among σ, ρ and M.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantResiduals {
    /// `M(2) − 2^{2/(2−p)} M(1)`, relative.
    pub scaling: f64,
    /// `M(1)` against the log-space evaluation of its closed form, relative.
    pub m_closed_form: f64,
    /// `ρ − ((2−p)/2)^{(2−p)/2} p^{p/2} σ`, relative.
    pub rho_sigma: f64,
    /// `M(1/ρ) − 1`.
    pub m_inverse_rho: f64,
}

impl ConstantResiduals {
    pub fn max(&self) -> f64 {
        self.scaling.abs().max(self.m_closed_form.abs()).max(self.rho_sigma.abs()).max(self.m_inverse_rho.abs())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub d: usize,
    pub p: f64,
    pub sigma: f64,
    pub rho: f64,
    pub m1: f64,
    pub schedule: MeshSchedule,
    pub rho_audit: RhoReport,
    pub residuals: ConstantResiduals,
    /// `M(1)` from solving `sup {λ∫g²|x|^{−p} − ½‖∇g‖²}` over `‖g‖₂ = 1` directly at
    /// `λ = 1/ρ` and rescaling by `λ^{−2/(2−p)}`.
    pub m1_direct: CrossCheck,
    /// ρ from the full line lattice (d = 1 only).
    pub rho_line: Option<CrossCheck>,
    /// `∫g*²|x|^{−p} / (σ ‖g*‖₂^{2−p} ‖∇g*‖₂^p)` at the finest mesh.
    pub sigma_tightness: f64,
}

impl ConstantsReport {
    pub fn compute(d: usize, p: f64, schedule: &MeshSchedule) -> Result<Self> {
        let rho_audit = rho_dp(d, p, schedule)?;
        let rho = rho_audit.value;
        let sigma = sigma_from_rho(rho, p);
        let m1 = m_lambda_with_sigma(1.0, p, sigma);
        let q = 2.0 - p;
        let m1_log = ((q / 2.0).ln() + p / q * p.ln() + 2.0 / q * sigma.ln()).exp();
        let residuals = ConstantResiduals {
            scaling: (m_lambda_with_sigma(2.0, p, sigma) - 2f64.powf(2.0 / q) * m1) / m1,
            m_closed_form: (m1 - m1_log) / m1,
            rho_sigma: (rho - rho_from_sigma(sigma, p)) / rho,
            m_inverse_rho: m_lambda_with_sigma(1.0 / rho, p, sigma) - 1.0,
        };

        let radius = *schedule.radii.last().expect("validated schedule");
        let meshes = schedule.meshes();
        // at λ = 1/ρ the optimizer has unit length scale; rescale to M(1)
        let lam = 1.0 / rho;
        let to_m1 = lam.powf(-2.0 / q);
        let m1_direct = if d == 1 {
            let values = meshes
                .iter()
                .map(|&h| {
                    let spec = LatticeOperatorSpec::singular_power(vec![-radius], vec![radius], h, lam, p, &[0.0])?;
                    Ok(to_m1 * principal_eigenvalue(&spec)?)
                })
                .collect::<Result<Vec<_>>>()?;
            CrossCheck::new("line lattice at lambda = 1/rho", meshes.clone(), values, m1)
        } else {
            let values =
                meshes.iter().map(|&h| Ok(to_m1 * RadialGrid::new(d, radius, h)?.m_direct(lam, p)?)).collect::<Result<Vec<_>>>()?;
            CrossCheck::new("radial finite volume at lambda = 1/rho", meshes.clone(), values, m1)
        };
        let rho_line = if d == 1 {
            // singularity on a cell face, so the lattice is not the even restriction of the radial grid
            let values = meshes.iter().map(|&h| radial::rho_line(p, radius, h, 0.5 * h)).collect::<Result<Vec<_>>>()?;
            Some(CrossCheck::new("line lattice, face-centered singularity", meshes.clone(), values, rho))
        } else {
            None
        };
        let finest = *meshes.last().expect("validated schedule");
        let grid = RadialGrid::new(d, radius, finest)?;
        let (_, g) = grid.rho(p)?;
        let sigma_tightness = gn_ratio(&grid, &g, p, sigma);
        Ok(ConstantsReport { d, p, sigma, rho, m1, schedule: schedule.clone(), rho_audit, residuals, m1_direct, rho_line, sigma_tightness })
    }
}

/// `∫g²|x|^{−p} / (σ ‖g‖₂^{2−p} ‖∇g‖₂^p)` for a radial profile.
pub fn gn_ratio(grid: &RadialGrid, g: &[f64], p: f64, sigma: f64) -> f64 {
    let (l2, grad, pot) = grid.norms(g, p);
    pot / (sigma * l2.powf((2.0 - p) / 2.0) * grad.powf(p / 2.0))
}

/// Largest [`gn_ratio`] over `count` random radial profiles
/// `Σ c_k exp(−(r/s_k)²)` on the grid.
pub fn sigma_random_sweep(grid: &RadialGrid, p: f64, sigma: f64, count: usize, seed: u64) -> f64 {
    use rand::Rng;
    let mut rng = crate::rng::stream(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let terms: Vec<(f64, f64)> = (0..3).map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.2..4.0))).collect();
        let g = grid.sample(|r| terms.iter().map(|(c, s)| c * (-(r / s).powi(2)).exp()).sum());
        worst = worst.max(gn_ratio(grid, &g, p, sigma));
    }
    worst
}

/// ρ on the line with the singularity moved to each of `centers`.
pub fn rho_translation_scan(p: f64, radius: f64, h: f64, centers: &[f64]) -> Result<Vec<(f64, f64)>> {
    centers.iter().map(|&c| Ok((c, radial::rho_line(p, radius, h, c)?))).collect()
}

/// Both sides of `λ_{θ|x|^{−p}}(Q_R) = a²·λ_{θa^{p−2}|x|^{−p}}(Q_{aR})`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn eigen_scaling_check(theta: f64, d: usize, p: f64, radius: f64, a: f64, h: f64) -> Result<ScalingCheck> {
    if !(a > 0.0 && radius > 0.0) {
        return domain("scale and radius must be positive");
    }
    let cube = |r: f64| (vec![-r; d], vec![r; d]);
    let (lo, hi) = cube(radius);
    let lhs = principal_eigenvalue(&LatticeOperatorSpec::singular_power(lo, hi, h, theta, p, &vec![0.0; d])?)?;
    let (lo, hi) = cube(a * radius);
    let rhs = a * a * principal_eigenvalue(&LatticeOperatorSpec::singular_power(lo, hi, h, theta * a.powf(p - 2.0), p, &vec![0.0; d])?)?;
    Ok(ScalingCheck { lhs, rhs, residual: (lhs - rhs).abs() / lhs.abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dirichlet_constants() {
        assert!((dirichlet_lambda_d(1).unwrap() - PI * PI / 8.0).abs() < 1e-12);
        assert!((dirichlet_lambda_d(2).unwrap() - 2.891592981473392).abs() < 1e-10);
        assert!((dirichlet_lambda_d(3).unwrap() - PI * PI / 2.0).abs() < 1e-12);
        assert!(dirichlet_lambda_d(4).is_err());
        // disk, radial finite volume
        let m = RadialGrid::new(2, 1.0, 1.0 / 256.0).unwrap().m_direct(0.0, 1.0).unwrap();
        assert!((m + 2.891592981473392).abs() < 1e-2);
    }

    #[test]
    fn sup_l2_values() {
        let s = sup_l2_on_gd(&[-1.0], &[1.0], 1.0 / 256.0).unwrap();
        assert!((s - (1.0 + PI * PI / 8.0f64).powf(-0.5)).abs() < 1e-5);
        assert!((s - 0.669088).abs() < 1e-5);
        let mut prev = 0.0;
        for r in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let v = sup_l2_on_gd(&[-r], &[r], 1.0 / 16.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(prev > 0.95);
        assert!(sup_l2_on_gd(&[0.0], &[0.01], 0.001).unwrap() < 0.01);
    }

    #[test]
    fn rate_function() {
        let s = sup_l2_on_gd_exact(&[-1.0], &[1.0]);
        let a = rate_i_d(1.0, 1, 0.75, s).unwrap();
        // extended-precision evaluation of the same three factors
        assert!((a - 0.004895537451473752).abs() < 1e-15);
        let b = rate_i_d(2.0, 1, 0.75, s).unwrap();
        assert!((b / a - 2f64.powf(1.0 / 0.25)).abs() < 1e-12);
        assert!(rate_i_d(1e-12, 1, 0.75, s).unwrap() < 1e-40);
        assert!(rate_i_d(1.0, 1, 0.25, s).is_err());
    }

    #[test]
    fn lambda0_values() {
        let r = lambda0_report(1.0).unwrap();
        assert!((r.computed - 16.46660382201068).abs() < 1e-11);
        assert!((r.printed - 21.57735512919091).abs() < 1e-11);
        assert!((r.ratio_cubed - 4.0 / 9.0).abs() < 1e-12);
        assert!(r.discrepancy);
        assert!((lambda0(2.0, 3, 2.0).unwrap() - 2.0 * r.computed).abs() < 1e-12);
    }

    #[test]
    fn lambda1_algebra() {
        let s = 1.7;
        let a = lambda1_with_sigma(1.0, 3, 1.5, 0.5, s).unwrap();
        let b = lambda1_with_sigma(2.0, 3, 1.5, 0.5, s).unwrap();
        assert!((b / a - 2f64.powf(2.0 / 0.5)).abs() < 1e-9);
        // κ = ½: ½ p^{p/(2−p)} (2−p)^{(4−p)/(2−p)} (dθσ/(2+d−p))^{2/(2−p)}
        let p: f64 = 1.5;
        let direct = 0.5 * p.powf(p / 0.5) * 0.5f64.powf(2.5 / 0.5) * (3.0 * s / 3.5f64).powf(4.0);
        assert!((a - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn richardson_recovers_order() {
        let f = |h: f64| 3.0 + 0.7 * h.powf(1.25);
        let (v, q) = richardson(&[f(0.1), f(0.05), f(0.025)]);
        assert!((v - 3.0).abs() < 1e-12);
        assert!((q.unwrap() - 1.25).abs() < 1e-9);
    }

    #[test]
    fn constants_d1() {
        let sched = MeshSchedule { radii: vec![4.0, 8.0, 12.0], h0: 1.0 / 32.0, levels: 3 };
        let r = ConstantsReport::compute(1, 0.75, &sched).unwrap();
        assert!(r.residuals.max() < 1e-12, "{:?}", r.residuals);
        assert!(r.rho_audit.nondecreasing);
        let line = r.rho_line.as_ref().unwrap();
        assert!(line.relative_difference < 0.01, "{line:?}");
        assert!(r.m1_direct.relative_difference < 0.02, "{:?}", r.m1_direct);
        assert!((r.sigma_tightness - 1.0).abs() < 0.01, "{}", r.sigma_tightness);
    }

    #[test]
    fn eigen_scaling_trivial_and_refining() {
        let r = eigen_scaling_check(1.0, 1, 0.75, 1.0, 1.0, 1.0 / 64.0).unwrap();
        assert_eq!(r.residual, 0.0);
        let res: Vec<f64> = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]
            .iter()
            .map(|&h| eigen_scaling_check(1.0, 1, 0.75, 1.0, 2.0, h).unwrap().residual)
            .collect();
        assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
    }

    #[test]
    fn translation_never_increases_rho() {
        let h = 1.0 / 32.0;
        let centers: Vec<f64> = (0..6).map(|k| k as f64 * 4.0 * h).collect();
        let scan = rho_translation_scan(0.75, 8.0, h, &centers).unwrap();
        let at_zero = scan[0].1;
        for (c, v) in &scan {
            assert!(*v <= at_zero * (1.0 + 1e-9), "{c}: {v} > {at_zero}");
        }
    }

    #[test]
    fn sigma_inequality_on_random_profiles() {
        let sched = MeshSchedule { radii: vec![8.0, 16.0], h0: 1.0 / 32.0, levels: 3 };
        let r = ConstantsReport::compute(3, 1.5, &sched).unwrap();
        assert!((r.sigma_tightness - 1.0).abs() < 0.01);
        let grid = RadialGrid::new(3, 16.0, 1.0 / 64.0).unwrap();
        assert!(sigma_random_sweep(&grid, 1.5, r.sigma, 1000, 4) <= 1.0);
        assert!(r.m1_direct.relative_difference < 0.02, "{:?}", r.m1_direct);
    }

    #[test]
    fn lambda1_stable_under_refinement() {
        let coarse = MeshSchedule { radii: vec![8.0, 16.0], h0: 1.0 / 16.0, levels: 3 };
        let fine = MeshSchedule { radii: vec![8.0, 16.0], h0: 1.0 / 32.0, levels: 3 };
        let s1 = sigma_from_rho(rho_dp(3, 1.5, &coarse).unwrap().value, 1.5);
        let s2 = sigma_from_rho(rho_dp(3, 1.5, &fine).unwrap().value, 1.5);
        let a = lambda1_with_sigma(1.0, 3, 1.5, 0.5, s1).unwrap();
        let b = lambda1_with_sigma(1.0, 3, 1.5, 0.5, s2).unwrap();
        assert!((a - b).abs() / b < 0.02);
        assert!((lambda1(1.0, 3, 1.5, 0.5).unwrap() - b).abs() / b < 0.02);
    }
}
