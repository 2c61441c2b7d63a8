//! Special functions, radial quadrature and closed-form integral identities.

mod quad;

pub(crate) use quad::kronrod21_rule;
pub use quad::{integrate, integrate_with_hints, PowerHints, QuadResult, QuadratureSpec};

use crate::error::{check_renormalizable, domain, Error, Result};

/// Below this argument ψ and Ψ switch to their Taylor series.
pub const SERIES_SWITCH: f64 = 1e-4;

fn series(lambda: f64, sign: f64) -> f64 {
    // λ²/2 + s λ³/6 + λ⁴/24 + s λ⁵/120 + λ⁶/720 with s = ±1
    let l = lambda;
    let l2 = l * l;
    l2 * (0.5 + l * (sign / 6.0 + l * (1.0 / 24.0 + l * (sign / 120.0 + l / 720.0))))
}

/// ψ(λ) = e^{−λ} − 1 + λ.
pub fn psi(lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return domain(format!("psi needs a nonnegative argument (got {lambda})"));
    }
    if lambda < SERIES_SWITCH {
        Ok(series(lambda, -1.0))
    } else {
        Ok((-lambda).exp_m1() + lambda)
    }
}

/// Ψ(λ) = e^{λ} − 1 − λ.
pub fn big_psi(lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return domain(format!("Psi needs a nonnegative argument (got {lambda})"));
    }
    if lambda < SERIES_SWITCH {
        Ok(series(lambda, 1.0))
    } else {
        Ok(lambda.exp_m1() - lambda)
    }
}

/// ψ without the argument check, for hot loops that already know `λ ≥ 0`.
#[inline]
pub(crate) fn psi_unchecked(lambda: f64) -> f64 {
    if lambda < SERIES_SWITCH {
        series(lambda, -1.0)
    } else {
        (-lambda).exp_m1() + lambda
    }
}

#[inline]
pub(crate) fn big_psi_unchecked(lambda: f64) -> f64 {
    if lambda < SERIES_SWITCH {
        series(lambda, 1.0)
    } else {
        lambda.exp_m1() - lambda
    }
}

/// Euler's Gamma function on the positive axis.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("gamma_fn needs x > 0 (got {x})"));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// log Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("ln_gamma needs x > 0 (got {x})"));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// Volume ω_d of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    if d == 0 {
        return domain("unit_ball_volume needs d >= 1");
    }
    let h = d as f64 / 2.0;
    Ok(std::f64::consts::PI.powf(h) / gamma_fn(h + 1.0)?)
}

/// Surface measure d·ω_d of the unit sphere.
pub fn sphere_area(d: usize) -> Result<f64> {
    Ok(d as f64 * unit_ball_volume(d)?)
}

/// d·ω_d ∫ f(ρ) ρ^{d−1} dρ over `[r_lo, r_hi]`, the integral of a radial
/// function over a shell of R^d.
///
/// `hints` describe the one-dimensional integrand `f(ρ) ρ^{d−1}`.
pub fn radial_integral<F: Fn(f64) -> f64>(
    f: F,
    d: usize,
    r_lo: f64,
    r_hi: f64,
    hints: &PowerHints,
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    if r_lo < 0.0 {
        return domain(format!("radial_integral needs r_lo >= 0 (got {r_lo})"));
    }
    let area = sphere_area(d)?;
    let dm1 = (d - 1) as i32;
    let r = integrate_with_hints(|rho: f64| f(rho) * rho.powi(dm1), r_lo, r_hi, hints, spec)?;
    Ok(QuadResult { value: area * r.value, abs_err: area * r.abs_err, evaluations: r.evaluations })
}

/// Closed form of ∫_{R^d} ψ(|x|^{−p}) dx = ω_d · p/(d−p) · Γ((2p−d)/p).
pub fn psi_riesz_integral(d: usize, p: f64) -> Result<f64> {
    check_renormalizable(d, p)?;
    let df = d as f64;
    Ok(unit_ball_volume(d)? * p / (df - p) * gamma_fn((2.0 * p - df) / p)?)
}

/// The same integral by radial quadrature.
pub fn psi_riesz_quadrature(d: usize, p: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    check_renormalizable(d, p)?;
    let df = d as f64;
    let hints = PowerHints::default().origin(df - p).tail(2.0 * p - df).breakpoints([1.0]);
    radial_integral(|r: f64| psi_unchecked(r.powf(-p)), d, 0.0, f64::INFINITY, &hints, spec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub passed: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityCheck {
    pub fn relative(lhs: f64, rhs: f64, tol: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs());
        let residual = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
        IdentityCheck { passed: residual < tol, lhs, rhs, residual }
    }
}

/// ∫₀^∞ ψ(γ) γ^{−(d+p)/p} dγ against p²/(d(d−p)) · Γ((2p−d)/p), both sides
/// evaluated independently; passes at 1e−7 relative.
pub fn gamma_step_identity_check(d: usize, p: f64, spec: &QuadratureSpec) -> Result<IdentityCheck> {
    check_renormalizable(d, p)?;
    let df = d as f64;
    let e = -(df + p) / p;
    // ψ(γ)γ^e ~ γ^{2+e}/2 at 0 and ~ γ^{1+e} at infinity
    let hints = PowerHints::default().origin(3.0 + e).tail(-2.0 - e).breakpoints([1.0]);
    let lhs = integrate_with_hints(|g: f64| psi_unchecked(g) * g.powf(e), 0.0, f64::INFINITY, &hints, spec)?;
    let rhs = p * p / (df * (df - p)) * gamma_fn((2.0 * p - df) / p)?;
    Ok(IdentityCheck::relative(lhs.value, rhs, 1e-7))
}

fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    // power series; accurate for the small arguments used here
    let half = 0.5 * x;
    let mut term = half.powf(nu) / gamma_fn(nu + 1.0)?;
    let mut sum = term;
    let q = -half * half;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    Ok(sum)
}

/// First positive zero of the Bessel function J_ν, for −1 < ν ≤ 2.
pub fn bessel_j_first_zero(nu: f64) -> Result<f64> {
    if !(nu > -1.0 && nu <= 2.0) {
        return domain(format!("bessel_j_first_zero supports -1 < nu <= 2 (got {nu})"));
    }
    let step = 0.05;
    let mut a = step;
    let mut fa = bessel_j(nu, a)?;
    loop {
        let b = a + step;
        let fb = bessel_j(nu, b)?;
        if fa.signum() != fb.signum() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = bessel_j(nu, mid)?;
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
        if a > 10.0 {
            return Err(Error::Convergence { what: "Bessel zero search", value: a, abs_err: f64::NAN, lo: step, hi: a });
        }
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn psi_values() {
        assert_eq!(psi(0.0).unwrap(), 0.0);
        assert!((psi(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        // mpmath, 40 digits
        let r = 4.999999983333333374999999916666664590774e-17;
        assert!((psi(1e-8).unwrap() - r).abs() / r < 1e-14);
        assert!(psi(-1e-3).is_err());
    }

    #[test]
    fn big_psi_values() {
        assert_eq!(big_psi(0.0).unwrap(), 0.0);
        assert!((big_psi(1.0).unwrap() - (std::f64::consts::E - 2.0)).abs() < 1e-15);
        assert!(big_psi(-1.0).is_err());
    }

    #[test]
    fn series_branch_is_continuous() {
        let l = SERIES_SWITCH;
        assert!((series(l, -1.0) - ((-l).exp_m1() + l)).abs() < 1e-14);
        assert!((series(l, 1.0) - (l.exp_m1() - l)).abs() < 1e-14);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1).unwrap() - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(2).unwrap() - std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(3).unwrap() - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-13);
        assert!(unit_ball_volume(0).is_err());
    }

    #[test]
    fn gamma_values() {
        let sp = std::f64::consts::PI.sqrt();
        assert!((gamma_fn(0.5).unwrap() - sp).abs() < 1e-14);
        assert!((gamma_fn(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma_fn(1.5).unwrap() - sp / 2.0).abs() < 1e-14);
        // Γ(n) = (n−1)!
        let mut fact = 1.0;
        for n in 1..20 {
            let g = gamma_fn(n as f64).unwrap();
            assert!((g - fact).abs() / fact < 1e-13, "n={n}");
            fact *= n as f64;
        }
        assert!(gamma_fn(0.0).is_err());
    }

    #[test]
    fn radial_integral_examples() {
        let spec = QuadratureSpec::default();
        let v = radial_integral(|_| 1.0, 3, 0.0, 1.0, &PowerHints::default(), &spec).unwrap();
        assert!((v.value - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
        let r = 2.5;
        let t = radial_integral(|x: f64| x.powf(-4.0), 3, r, f64::INFINITY, &PowerHints::default().tail(1.0), &spec).unwrap();
        assert!((t.value - 4.0 * std::f64::consts::PI / r).abs() < 1e-11);
    }

    #[test]
    fn psi_riesz_closed_form_values() {
        // mpmath references
        let cases = [
            (1, 0.75, 8.124707636558402501671728168927082713116),
            (2, 1.5, 12.76226091178838456659833552500846397109),
            (3, 2.0, 14.8488746582178875874261812856502285387),
            (3, 2.5, 24.38357010486907434656308431037298253955),
        ];
        for (d, p, r) in cases {
            let v = psi_riesz_integral(d, p).unwrap();
            assert!((v - r).abs() / r < 1e-13, "({d},{p})");
        }
        assert!(psi_riesz_integral(3, 3.0 - 1e-4).unwrap() > 1e3);
        assert!(psi_riesz_integral(3, 1.5).is_err());
    }

    #[test]
    fn gamma_step_identity() {
        let spec = QuadratureSpec::default();
        for (d, p) in [(3, 2.0), (2, 1.5), (1, 0.75), (3, 2.7)] {
            let c = gamma_step_identity_check(d, p, &spec).unwrap();
            assert!(c.passed, "({d},{p}) residual {}", c.residual);
        }
        assert!(gamma_step_identity_check(3, 1.4, &spec).is_err());
    }

    #[test]
    fn bessel_zeros() {
        assert!((bessel_j_first_zero(-0.5).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((bessel_j_first_zero(0.0).unwrap() - 2.404825557695772768).abs() < 1e-12);
        assert!((bessel_j_first_zero(0.5).unwrap() - std::f64::consts::PI).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn psi_pair_convex_and_ordered(a in 0.0f64..20.0, b in 0.0f64..20.0, t in 0.0f64..1.0) {
            let m = t * a + (1.0 - t) * b;
            for f in [psi, big_psi] {
                let lhs = f(m).unwrap();
                let rhs = t * f(a).unwrap() + (1.0 - t) * f(b).unwrap();
                prop_assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0));
            }
            prop_assert!(psi(a).unwrap() <= big_psi(a).unwrap());
            if a > 0.0 {
                prop_assert!(psi(a).unwrap() > 0.0);
            }
        }

        #[test]
        fn closed_form_matches_quadrature(d in 1usize..=3, u in 0.02f64..0.98) {
            let df = d as f64;
            let p = df / 2.0 + u * df / 2.0;
            let closed = psi_riesz_integral(d, p).unwrap();
            let q = psi_riesz_quadrature(d, p, &QuadratureSpec::default()).unwrap();
            prop_assert!((closed - q.value).abs() / closed < 1e-8, "d={} p={} {} {}", d, p, closed, q.value);
        }
    }
}
