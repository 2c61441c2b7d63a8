//! Smooth truncation profile α and the truncated Riesz kernels.
//!
//! α is the cubic smoothstep: 1 on `[0, 1]`, `3s² − 2s³` with `s = (3 − λ)/2`
//! on `(1, 3)`, 0 from 3 on. It is C¹ with `−3/4 ≤ α′ ≤ 0`.

use crate::error::{check_renormalizable, domain, Error, Result};
use crate::specfun::{radial_integral, sphere_area, PowerHints, QuadratureSpec};

/// The cutoff profile α(λ).
pub fn alpha(lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return domain(format!("alpha needs a nonnegative argument (got {lambda})"));
    }
    Ok(alpha_unchecked(lambda))
}

#[inline]
pub(crate) fn alpha_unchecked(lambda: f64) -> f64 {
    if lambda <= 1.0 {
        1.0
    } else if lambda >= 3.0 {
        0.0
    } else {
        let s = 0.5 * (3.0 - lambda);
        s * s * (3.0 - 2.0 * s)
    }
}

/// Derivative α′(λ).
pub fn alpha_prime(lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return domain(format!("alpha_prime needs a nonnegative argument (got {lambda})"));
    }
    if lambda <= 1.0 || lambda >= 3.0 {
        Ok(0.0)
    } else {
        Ok(0.75 * (lambda - 1.0) * (lambda - 3.0))
    }
}

/// Which scale law sets the cutoff radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleLaw {
    /// Radius `a ε^{−(2+d−p)/(d(d−p))}` (index i = 0).
    Power,
    /// Radius `a (log 1/ε)^{1/p}` (index i = 1).
    Log,
}

impl ScaleLaw {
    pub fn index(self) -> u8 {
        match self {
            ScaleLaw::Power => 0,
            ScaleLaw::Log => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelVariant {
    Full,
    Near { a: f64, eps: f64, law: ScaleLaw },
    Far { a: f64, eps: f64, law: ScaleLaw },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    d: usize,
    p: f64,
    variant: KernelVariant,
    scale: f64,
}

/// Exponent `(2+d−p)/(d(d−p))` of the power-law cutoff radius.
pub fn power_cutoff_exponent(d: usize, p: f64) -> f64 {
    let df = d as f64;
    (2.0 + df - p) / (df * (df - p))
}

/// Cutoff radius for the given law.
pub fn cutoff_radius(d: usize, p: f64, a: f64, eps: f64, law: ScaleLaw) -> Result<f64> {
    check_renormalizable(d, p)?;
    if !(a > 0.0) {
        return domain(format!("cutoff parameter a must be positive (got {a})"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("eps must lie in (0, 1) (got {eps})"));
    }
    Ok(match law {
        ScaleLaw::Power => a * eps.powf(-power_cutoff_exponent(d, p)),
        ScaleLaw::Log => a * (1.0 / eps).ln().powf(1.0 / p),
    })
}

impl KernelSpec {
    pub fn new(d: usize, p: f64, variant: KernelVariant) -> Result<Self> {
        check_renormalizable(d, p)?;
        let scale = match variant {
            KernelVariant::Full => f64::INFINITY,
            KernelVariant::Near { a, eps, law } | KernelVariant::Far { a, eps, law } => cutoff_radius(d, p, a, eps, law)?,
        };
        Ok(KernelSpec { d, p, variant, scale })
    }

    pub fn full(d: usize, p: f64) -> Result<Self> {
        Self::new(d, p, KernelVariant::Full)
    }

    pub fn near(d: usize, p: f64, a: f64, eps: f64, law: ScaleLaw) -> Result<Self> {
        Self::new(d, p, KernelVariant::Near { a, eps, law })
    }

    pub fn far(d: usize, p: f64, a: f64, eps: f64, law: ScaleLaw) -> Result<Self> {
        Self::new(d, p, KernelVariant::Far { a, eps, law })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    /// Radius where α starts to drop; infinite for the full kernel.
    pub fn cutoff_scale(&self) -> f64 {
        self.scale
    }

    /// Kernel value at distance `r`.
    pub fn radial(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return domain(format!("distance must be nonnegative (got {r})"));
        }
        match self.variant {
            KernelVariant::Full | KernelVariant::Near { .. } if r == 0.0 => {
                Err(Error::Singularity("singular kernel evaluated at the origin".into()))
            }
            KernelVariant::Far { .. } if r == 0.0 => Ok(0.0),
            _ => Ok(self.radial_unchecked(r)),
        }
    }

    #[inline]
    pub(crate) fn radial_unchecked(&self, r: f64) -> f64 {
        let base = r.powf(-self.p);
        match self.variant {
            KernelVariant::Full => base,
            KernelVariant::Near { .. } => base * alpha_unchecked(r / self.scale),
            KernelVariant::Far { .. } => {
                let l = r / self.scale;
                if l <= 1.0 {
                    0.0
                } else {
                    base * (1.0 - alpha_unchecked(l))
                }
            }
        }
    }
}

/// Kernel value at the point `x`.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.d {
        return Err(Error::Geometry(format!("point has {} coordinates, kernel expects {}", x.len(), spec.d)));
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    spec.radial(r)
}

/// ∫₀³ u^m α(u) du in closed form, `m > −1`.
pub fn alpha_moment(m: f64) -> f64 {
    // on [1, 3], α(u) = (9u − 6u² + u³)/4
    let i = |k: f64| (3f64.powf(k + 1.0) - 1.0) / (k + 1.0);
    1.0 / (m + 1.0) + 0.25 * (9.0 * i(m + 1.0) - 6.0 * i(m + 2.0) + i(m + 3.0))
}

/// ∫_{R^d} K(x) dx for a near kernel, by radial quadrature.
pub fn near_kernel_mass(spec: &KernelSpec) -> Result<f64> {
    if !matches!(spec.variant, KernelVariant::Near { .. }) {
        return domain("near_kernel_mass needs a Near kernel (the others are not integrable)");
    }
    let s = spec.scale;
    let hints = PowerHints::default().origin(spec.d as f64 - spec.p).breakpoints([s]);
    let q = QuadratureSpec::default();
    Ok(radial_integral(|r| spec.radial_unchecked(r), spec.d, 0.0, 3.0 * s, &hints, &q)?.value)
}

/// Closed form of the near-kernel mass: `dω_d s^{d−p} ∫₀³ u^{d−1−p} α(u) du`.
pub fn near_kernel_mass_exact(spec: &KernelSpec) -> Result<f64> {
    if !matches!(spec.variant, KernelVariant::Near { .. }) {
        return domain("near_kernel_mass_exact needs a Near kernel");
    }
    let m = spec.d as f64 - 1.0 - spec.p;
    Ok(sphere_area(spec.d)? * spec.scale.powf(spec.d as f64 - spec.p) * alpha_moment(m))
}

/// Exponent fitted from the masses at `eps` and `eps/2`: `log2(mass(eps/2)/mass(eps))`.
pub fn near_mass_doubling_exponent(d: usize, p: f64, a: f64, eps: f64, law: ScaleLaw) -> Result<f64> {
    let m1 = near_kernel_mass(&KernelSpec::near(d, p, a, eps, law)?)?;
    let m2 = near_kernel_mass(&KernelSpec::near(d, p, a, eps / 2.0, law)?)?;
    Ok((m2 / m1).log2())
}

/// ∫_{|z| ≤ w} k(z) dz for any kernel, by radial quadrature.
pub fn kernel_ball_mass(spec: &KernelSpec, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return domain(format!("ball radius must be positive (got {w})"));
    }
    let df = spec.d as f64;
    let q = QuadratureSpec::default();
    match spec.variant {
        KernelVariant::Full => Ok(sphere_area(spec.d)? * w.powf(df - spec.p) / (df - spec.p)),
        KernelVariant::Near { .. } => {
            let s = spec.scale;
            let hints = PowerHints::default().origin(df - spec.p).breakpoints([s, 3.0 * s]);
            Ok(radial_integral(|r| spec.radial_unchecked(r), spec.d, 0.0, w, &hints, &q)?.value)
        }
        KernelVariant::Far { .. } => {
            let s = spec.scale;
            if w <= s {
                return Ok(0.0);
            }
            let hints = PowerHints::default().breakpoints([3.0 * s]);
            Ok(radial_integral(|r| spec.radial_unchecked(r), spec.d, s, w, &hints, &q)?.value)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(0.5).unwrap(), 1.0);
        assert_eq!(alpha(1.0).unwrap(), 1.0);
        assert_eq!(alpha(3.5).unwrap(), 0.0);
        assert!((alpha(2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(alpha(-0.1).is_err());
    }

    #[test]
    fn alpha_derivative_bounds_and_consistency() {
        let mut max_abs: f64 = 0.0;
        for i in 0..=40000 {
            let l = i as f64 * 1e-4;
            let a1 = alpha_prime(l).unwrap();
            assert!(a1 <= 0.0);
            max_abs = max_abs.max(a1.abs());
            if l > 1e-3 && l < 4.0 - 1e-3 {
                let h = 1e-6;
                let fd = (alpha(l + h).unwrap() - alpha(l - h).unwrap()) / (2.0 * h);
                assert!((fd - a1).abs() < 1e-6, "l={l}");
            }
        }
        assert!((max_abs - 0.75).abs() < 1e-12);
    }

    #[test]
    fn kernel_plateau_and_support() {
        let near = KernelSpec::near(3, 2.0, 1.0, 0.1, ScaleLaw::Power).unwrap();
        let s = near.cutoff_scale();
        let r = 0.5 * s;
        assert_eq!(near.radial(r).unwrap(), r.powf(-2.0));
        assert_eq!(near.radial(3.5 * s).unwrap(), 0.0);
        let far = KernelSpec::far(3, 2.0, 1.0, 0.1, ScaleLaw::Power).unwrap();
        assert_eq!(far.radial(0.0).unwrap(), 0.0);
        assert_eq!(far.radial(r).unwrap(), 0.0);
        assert!(near.radial(0.0).is_err());
        assert!(KernelSpec::full(3, 2.0).unwrap().radial(0.0).is_err());
    }

    #[test]
    fn kernel_eval_uses_euclidean_norm() {
        let full = KernelSpec::full(2, 1.5).unwrap();
        let v = kernel_eval(&full, &[3.0, 4.0]).unwrap();
        assert!((v - 5f64.powf(-1.5)).abs() < 1e-15);
        assert!(kernel_eval(&full, &[1.0]).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(KernelSpec::near(3, 1.4, 1.0, 0.1, ScaleLaw::Power).is_err());
        assert!(KernelSpec::near(3, 2.0, 1.0, 1.0, ScaleLaw::Log).is_err());
        assert!(KernelSpec::near(3, 2.0, 0.0, 0.5, ScaleLaw::Power).is_err());
    }

    #[test]
    fn near_mass_power_law_doubling() {
        for (d, p) in [(3, 2.0), (1, 0.75), (2, 1.5)] {
            let e = near_mass_doubling_exponent(d, p, 1.0, 1e-2, ScaleLaw::Power).unwrap();
            let df = d as f64;
            let expected = (df - p) * (2.0 + df - p) / (df * (df - p));
            assert!((e - expected).abs() / expected < 1e-3, "({d},{p}) {e} vs {expected}");
        }
    }

    #[test]
    fn near_mass_matches_closed_form_and_envelopes() {
        for law in [ScaleLaw::Power, ScaleLaw::Log] {
            let k = KernelSpec::near(3, 1.6, 1.0, 1e-3, law).unwrap();
            let q = near_kernel_mass(&k).unwrap();
            let exact = near_kernel_mass_exact(&k).unwrap();
            assert!((q - exact).abs() / exact < 1e-10);
            let s = k.cutoff_scale();
            let area = sphere_area(3).unwrap();
            let upper = area * (3.0 * s).powf(1.4) / 1.4;
            let lower = area * s.powf(1.4) / 1.4;
            assert!(q < upper && q > lower);
        }
        assert!(near_kernel_mass(&KernelSpec::full(3, 2.0).unwrap()).is_err());
    }

    #[test]
    fn ball_masses_partition() {
        let near = KernelSpec::near(2, 1.5, 2.0, 0.3, ScaleLaw::Log).unwrap();
        let far = KernelSpec::far(2, 1.5, 2.0, 0.3, ScaleLaw::Log).unwrap();
        let full = KernelSpec::full(2, 1.5).unwrap();
        let w = 10.0 * near.cutoff_scale();
        let sum = kernel_ball_mass(&near, w).unwrap() + kernel_ball_mass(&far, w).unwrap();
        let tot = kernel_ball_mass(&full, w).unwrap();
        assert!((sum - tot).abs() / tot < 1e-10);
    }

    proptest! {
        #[test]
        fn near_plus_far_is_full(
            d in 1usize..=3,
            u in 0.01f64..0.99,
            a in 0.1f64..5.0,
            eps in 1e-6f64..0.9,
            log_law in any::<bool>(),
            x in proptest::collection::vec(-50.0f64..50.0, 3),
        ) {
            let df = d as f64;
            let p = df / 2.0 + u * df / 2.0;
            let law = if log_law { ScaleLaw::Log } else { ScaleLaw::Power };
            let near = KernelSpec::near(d, p, a, eps, law).unwrap();
            let far = KernelSpec::far(d, p, a, eps, law).unwrap();
            let pt = &x[..d];
            prop_assume!(pt.iter().any(|v| *v != 0.0));
            let r = pt.iter().map(|v| v * v).sum::<f64>().sqrt();
            let full = r.powf(-p);
            let s = kernel_eval(&near, pt).unwrap() + kernel_eval(&far, pt).unwrap();
            prop_assert!((s - full).abs() <= 1e-13 * full);
            let l = kernel_eval(&far, pt).unwrap();
            prop_assert!(l <= full && l >= 0.0);
        }
    }
}
