//! Poisson fields, compensated integrals, the Campbell moment formula and
//! exact Poisson tail probabilities.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::cutoff::{kernel_ball_mass, KernelSpec, KernelVariant, ScaleLaw};
use crate::error::{domain, Error, Result};
use crate::fmt::f17;
use crate::rng::{self, StreamRng};
use crate::specfun::{big_psi_unchecked, ln_gamma, psi_unchecked, radial_integral, PowerHints, QuadratureSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Window {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Window {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Geometry("box bounds must be nonempty and of equal length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Geometry("box needs finite lo < hi on every axis".into()));
        }
        Ok(Window::Box { lo, hi })
    }

    /// The cube `[lo, hi]^d`.
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; d], vec![hi; d])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Geometry("ball needs a center and a finite positive radius".into()));
        }
        Ok(Window::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            Window::Box { lo, .. } => lo.len(),
            Window::Ball { center, .. } => center.len(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Window::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            Window::Ball { center, radius } => {
                crate::specfun::unit_ball_volume(center.len()).expect("d >= 1") * radius.powi(center.len() as i32)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.depth(x) >= 0.0
    }

    /// Distance from `x` to the complement of the window; negative outside.
    pub fn depth(&self, x: &[f64]) -> f64 {
        match self {
            Window::Box { lo, hi } => lo.iter().zip(hi).zip(x).map(|((a, b), v)| (v - a).min(b - v)).fold(f64::INFINITY, f64::min),
            Window::Ball { center, radius } => {
                let r2: f64 = center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum();
                radius - r2.sqrt()
            }
        }
    }

    fn sample_uniform(&self, rng: &mut StreamRng, out: &mut [f64]) {
        match self {
            Window::Box { lo, hi } => {
                for i in 0..out.len() {
                    out[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
                }
            }
            Window::Ball { center, radius } => loop {
                let mut r2 = 0.0;
                for o in out.iter_mut() {
                    let u = 2.0 * rng.random::<f64>() - 1.0;
                    *o = u;
                    r2 += u * u;
                }
                if r2 <= 1.0 {
                    for (o, c) in out.iter_mut().zip(center) {
                        *o = c + radius * *o;
                    }
                    return;
                }
            },
        }
    }
}

/// A realized Poisson configuration. Points are stored flat, `d` coordinates each.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSample {
    d: usize,
    coords: Vec<f64>,
    intensity: f64,
    window: Window,
    seed: u64,
    stream: u64,
}

#[derive(Serialize, Deserialize)]
struct CsvHeader {
    d: usize,
    intensity: f64,
    seed: u64,
    stream: u64,
    window: Window,
}

impl PoissonSample {
    /// Builds a sample from explicit points; every point must lie in the window.
    pub fn from_points(window: Window, intensity: f64, points: &[Vec<f64>]) -> Result<Self> {
        let d = window.dim();
        let mut coords = Vec::with_capacity(points.len() * d);
        for p in points {
            if p.len() != d || !window.contains(p) {
                return Err(Error::Geometry(format!("point {p:?} is not in the window")));
            }
            coords.extend_from_slice(p);
        }
        Ok(PoissonSample { d, coords, intensity, window, seed: 0, stream: 0 })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Writes a JSON metadata comment line, a column header and one point per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header = CsvHeader { d: self.d, intensity: self.intensity, seed: self.seed, stream: self.stream, window: self.window.clone() };
        writeln!(w, "# {}", serde_json::to_string(&header)?)?;
        let cols: Vec<String> = (0..self.d).map(|i| format!("x{i}")).collect();
        writeln!(w, "{}", cols.join(","))?;
        for p in self.points() {
            let row: Vec<String> = p.iter().map(|v| f17(*v)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines.next().ok_or_else(|| Error::Config("empty field CSV".into()))??;
        let meta = first.strip_prefix("# ").ok_or_else(|| Error::Config("field CSV must start with a '# {json}' line".into()))?;
        let h: CsvHeader = serde_json::from_str(meta)?;
        lines.next().ok_or_else(|| Error::Config("field CSV is missing its column header".into()))??;
        let mut coords = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| Error::Config(format!("field CSV row {}: {e}", i + 3)))?;
            if vals.len() != h.d {
                return Err(Error::Config(format!("field CSV row {} has {} columns", i + 3, vals.len())));
            }
            coords.extend(vals);
        }
        Ok(PoissonSample { d: h.d, coords, intensity: h.intensity, window: h.window, seed: h.seed, stream: h.stream })
    }
}

/// Draws a Poisson(μ) count.
pub fn poisson_count(rng: &mut StreamRng, mu: f64) -> u64 {
    if mu <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mu).expect("positive finite mean");
    dist.sample(rng) as u64
}

pub(crate) fn fill_field(window: &Window, intensity: f64, rng: &mut StreamRng, coords: &mut Vec<f64>) {
    let d = window.dim();
    let n = poisson_count(rng, intensity * window.volume()) as usize;
    let start = coords.len();
    coords.resize(start + n * d, 0.0);
    for chunk in coords[start..].chunks_exact_mut(d) {
        window.sample_uniform(rng, chunk);
    }
}

/// Poisson field of the given intensity on the window, from stream `stream` of `seed`.
pub fn sample_field_stream(window: &Window, intensity: f64, seed: u64, stream: u64) -> Result<PoissonSample> {
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return domain(format!("intensity must be finite and nonnegative (got {intensity})"));
    }
    let mut rng = rng::stream(seed, stream);
    let mut coords = Vec::new();
    fill_field(window, intensity, &mut rng, &mut coords);
    Ok(PoissonSample { d: window.dim(), coords, intensity, window: window.clone(), seed, stream })
}

/// Poisson field of the given intensity on the window.
pub fn sample_field(window: &Window, intensity: f64, seed: u64) -> Result<PoissonSample> {
    sample_field_stream(window, intensity, seed, 0)
}

/// The contracted field ω(ε dx) in analysis coordinates: intensity ε.
pub fn scaled_sample(window: &Window, eps: f64, seed: u64) -> Result<PoissonSample> {
    if !(eps > 0.0) {
        return domain(format!("eps must be positive (got {eps})"));
    }
    sample_field(window, eps, seed)
}

/// Σᵢ f(xᵢ) − density·∫f, with `f_integral` the caller's value of ∫_window f.
pub fn compensated_integral<F: Fn(&[f64]) -> f64>(sample: &PoissonSample, f: F, f_integral: f64, density: f64) -> f64 {
    let s: f64 = sample.points().map(f).sum();
    s - density * f_integral
}

/// Monte Carlo result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
    pub seed: u64,
}

impl Estimate {
    /// Sample mean and its standard error.
    pub fn from_values(values: &[f64], seed: u64) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return domain("an estimate needs at least two samples");
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        Ok(Estimate { value: mean, std_error: (var / n as f64).sqrt(), n: n as u64, seed })
    }

    /// Sample variance (unbiased).
    pub fn sample_variance(&self) -> f64 {
        self.std_error * self.std_error * self.n as f64
    }

    /// (value − target)/std_error, or 0 when both agree exactly.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.value - target;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }

    /// z-score of the difference of two independent estimates.
    pub fn z_between(&self, other: &Estimate) -> f64 {
        let diff = self.value - other.value;
        if diff == 0.0 {
            0.0
        } else {
            diff / (self.std_error.powi(2) + other.std_error.powi(2)).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    /// E exp{−θ∫f d(ω−ρdx)}, governed by ψ.
    Minus,
    /// E exp{+θ∫f d(ω−ρdx)}, governed by Ψ.
    Plus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }
}

/// A nonnegative function whose composite integrals ∫ g(f(x)) dx, for `g(0) = 0`,
/// can be computed exactly.
pub trait CampbellIntegrand {
    fn composite_integral(&self, g: &dyn Fn(f64) -> f64, q: &QuadratureSpec) -> Result<f64>;
}

/// Radial profile on the shell `inner ≤ |x| ≤ outer` (`outer` may be infinite).
pub struct RadialIntegrand<F> {
    pub d: usize,
    pub profile: F,
    pub inner: f64,
    pub outer: f64,
    /// Hints for the composite integrand `g(f(r)) r^{d−1}`.
    pub hints: PowerHints,
}

impl<F: Fn(f64) -> f64> CampbellIntegrand for RadialIntegrand<F> {
    fn composite_integral(&self, g: &dyn Fn(f64) -> f64, q: &QuadratureSpec) -> Result<f64> {
        let r = radial_integral(|r| g((self.profile)(r)), self.d, self.inner, self.outer, &self.hints, q)?;
        Ok(r.value)
    }
}

/// A truncated Riesz kernel on the ball of radius `outer` (or on R^d).
pub fn kernel_integrand(spec: KernelSpec, outer: Option<f64>) -> Result<RadialIntegrand<impl Fn(f64) -> f64>> {
    let d = spec.d();
    let df = d as f64;
    let p = spec.p();
    let outer = outer.unwrap_or(f64::INFINITY);
    if !(outer > 0.0) {
        return domain("outer radius must be positive");
    }
    let s = spec.cutoff_scale();
    let (inner, hints) = match spec.variant() {
        KernelVariant::Full => (0.0, PowerHints::default().origin(df - p).tail(2.0 * p - df).breakpoints([1.0])),
        KernelVariant::Near { .. } => (0.0, PowerHints::default().origin(df - p).breakpoints([s, 3.0 * s])),
        KernelVariant::Far { .. } => (s.min(outer * 0.5), PowerHints::default().tail(2.0 * p - df).breakpoints([s, 3.0 * s])),
    };
    let outer = match spec.variant() {
        KernelVariant::Near { .. } => outer.min(3.0 * s),
        _ => outer,
    };
    Ok(RadialIntegrand { d, profile: move |r: f64| spec.radial_unchecked(r), inner, outer, hints })
}

/// Indicator of a set of the given volume.
pub struct Indicator {
    pub volume: f64,
}

impl CampbellIntegrand for Indicator {
    fn composite_integral(&self, g: &dyn Fn(f64) -> f64, _q: &QuadratureSpec) -> Result<f64> {
        Ok(self.volume * g(1.0))
    }
}

/// log E exp{±θ ∫f d(ω − density·dx)} = density · ∫ψ(θf) (or Ψ for `Sign::Plus`).
pub fn campbell_log_mgf_exact(f: &dyn CampbellIntegrand, density: f64, sign: Sign, theta: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(theta >= 0.0) || !(density >= 0.0) {
        return domain("theta and density must be nonnegative");
    }
    if theta == 0.0 || density == 0.0 {
        return Ok(0.0);
    }
    let v = match sign {
        Sign::Minus => f.composite_integral(&|v: f64| psi_unchecked(theta * v), q),
        Sign::Plus => f.composite_integral(&|v: f64| big_psi_unchecked(theta * v), q),
    }
    .map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("Campbell exponent diverges: {m}")),
        other => other,
    })?;
    if !v.is_finite() {
        return domain("Campbell exponent diverges");
    }
    Ok(density * v)
}

/// E exp{±θ ∫f d(ω − density·dx)}.
pub fn campbell_mgf_exact(f: &dyn CampbellIntegrand, density: f64, sign: Sign, theta: f64, q: &QuadratureSpec) -> Result<f64> {
    Ok(campbell_log_mgf_exact(f, density, sign, theta, q)?.exp())
}

/// Which part of the truncated Riesz kernel a Campbell check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelPart {
    Full,
    Near,
    Far,
}

/// A kernel restricted to the ball of radius `radius`, integrated against a
/// compensated field of intensity `density`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampbellConfig {
    pub d: usize,
    pub p: f64,
    pub part: KernelPart,
    /// Cutoff parameters for the near and far parts, with the logarithmic law.
    pub a: f64,
    pub eps: f64,
    pub radius: f64,
    pub density: f64,
    pub sign: Sign,
    pub theta: f64,
}

impl CampbellConfig {
    pub fn kernel(&self) -> Result<KernelSpec> {
        match self.part {
            KernelPart::Full => KernelSpec::full(self.d, self.p),
            KernelPart::Near => KernelSpec::near(self.d, self.p, self.a, self.eps, ScaleLaw::Log),
            KernelPart::Far => KernelSpec::far(self.d, self.p, self.a, self.eps, ScaleLaw::Log),
        }
    }

    /// One configuration per kernel part, in dimensions 1 to 3.
    pub fn reference_set() -> Vec<CampbellConfig> {
        vec![
            CampbellConfig {
                d: 1,
                p: 0.75,
                part: KernelPart::Far,
                a: 1.0,
                eps: 0.5,
                radius: 6.0,
                density: 0.5,
                sign: Sign::Minus,
                theta: 1.0,
            },
            CampbellConfig {
                d: 2,
                p: 1.5,
                part: KernelPart::Near,
                a: 1.0,
                eps: 0.5,
                radius: 2.0,
                density: 0.5,
                sign: Sign::Minus,
                theta: 0.5,
            },
            CampbellConfig {
                d: 3,
                p: 2.0,
                part: KernelPart::Far,
                a: 0.5,
                eps: 0.25,
                radius: 3.0,
                density: 0.25,
                sign: Sign::Plus,
                theta: 0.3,
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampbellCheck {
    pub config: CampbellConfig,
    pub exact: f64,
    pub estimate: Estimate,
    pub z: f64,
}

/// Average of exp{±θ(Σᵢ f(xᵢ) − density·∫_{B_R} f)} over `n_fields` fields on the
/// ball `B_R`, against the Campbell formula.
pub fn campbell_mc_check(cfg: &CampbellConfig, n_fields: u64, seed: u64) -> Result<CampbellCheck> {
    let spec = cfg.kernel()?;
    if n_fields < 2 {
        return domain("need at least two fields");
    }
    let q = QuadratureSpec::default();
    let exact = campbell_mgf_exact(&kernel_integrand(spec, Some(cfg.radius))?, cfg.density, cfg.sign, cfg.theta, &q)?;
    let compensator = cfg.density * kernel_ball_mass(&spec, cfg.radius)?;
    let window = Window::ball(vec![0.0; cfg.d], cfg.radius)?;
    let s = cfg.sign.factor() * cfg.theta;
    let values: Vec<Result<f64>> = rng::par_indexed(n_fields, |i| {
        let sample = sample_field_stream(&window, cfg.density, seed, i)?;
        let sum: f64 = sample.points().map(|x| spec.radial_unchecked(x.iter().map(|v| v * v).sum::<f64>().sqrt())).sum();
        Ok((s * (sum - compensator)).exp())
    });
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let estimate = Estimate::from_values(&values, seed)?;
    Ok(CampbellCheck { config: cfg.clone(), exact, z: estimate.z_score(exact), estimate })
}

fn poisson_log_pmf(mu: f64, k: u64) -> f64 {
    let kf = k as f64;
    -mu + kf * mu.ln() - ln_gamma(kf + 1.0).expect("positive argument")
}

/// log P{Z ≥ k} for Z ~ Poisson(μ).
pub fn poisson_log_tail(mu: f64, k: u64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return domain(format!("Poisson mean must be positive and finite (got {mu})"));
    }
    if k == 0 {
        return Ok(0.0);
    }
    if k as f64 > mu {
        // upper series: pmf(k) Σ_m Π_{i=1..m} μ/(k+i)
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut j = k;
        loop {
            j += 1;
            term *= mu / j as f64;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        Ok(poisson_log_pmf(mu, k) + sum.ln())
    } else {
        let mut lower = 0.0;
        for j in 0..k {
            lower += poisson_log_pmf(mu, j).exp();
        }
        Ok((-lower).ln_1p())
    }
}

/// P{Z ≥ k} for Z ~ Poisson(μ).
pub fn poisson_tail_exact(mu: f64, k: u64) -> Result<f64> {
    Ok(poisson_log_tail(mu, k)?.exp())
}

/// P{max of N independent Poisson(μ) counts ≥ k} = 1 − (1 − P{Z ≥ k})^N.
pub fn max_count_tail(n: u64, mu: f64, k: u64) -> Result<f64> {
    if n == 0 {
        return domain("max_count_tail needs N >= 1");
    }
    let p = poisson_tail_exact(mu, k)?;
    if p >= 1.0 {
        return Ok(1.0);
    }
    Ok(-(n as f64 * (-p).ln_1p()).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::ScaleLaw;
    use proptest::prelude::*;

    #[test]
    fn empty_and_deterministic() {
        let w = Window::cube(2, 0.0, 1.0).unwrap();
        assert!(sample_field(&w, 0.0, 1).unwrap().is_empty());
        let a = sample_field(&w, 50.0, 9).unwrap();
        let b = sample_field(&w, 50.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.points().all(|p| w.contains(p)));
        assert_eq!(scaled_sample(&w, 0.3, 4).unwrap(), sample_field(&w, 0.3, 4).unwrap());
    }

    #[test]
    fn ball_points_inside() {
        let w = Window::ball(vec![1.0, -2.0, 0.5], 2.0).unwrap();
        let s = sample_field(&w, 5.0, 3).unwrap();
        assert!(s.len() > 50);
        assert!(s.points().all(|p| w.contains(p)));
    }

    #[test]
    fn unit_box_mean_count() {
        let w = Window::cube(3, 0.0, 1.0).unwrap();
        let counts: Vec<f64> = (0..10_000).map(|i| sample_field_stream(&w, 1.0, 11, i).unwrap().len() as f64).collect();
        let e = Estimate::from_values(&counts, 11).unwrap();
        assert!((e.value - 1.0).abs() < 0.04, "{}", e.value);
    }

    #[test]
    fn compensated_examples() {
        let w = Window::cube(1, 0.0, 1.0).unwrap();
        let empty = sample_field(&w, 0.0, 0).unwrap();
        assert_eq!(compensated_integral(&empty, |_| 1.0, 1.0, 0.25), -0.25);
    }

    #[test]
    fn csv_round_trip() {
        let w = Window::ball(vec![0.0, 0.0], 3.0).unwrap();
        let s = sample_field_stream(&w, 2.0, 5, 7).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = PoissonSample::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn campbell_indicator_example() {
        let q = QuadratureSpec::default();
        let f = Indicator { volume: 1.0 };
        let v = campbell_mgf_exact(&f, 1.0, Sign::Plus, 1.0, &q).unwrap();
        assert!((v - (std::f64::consts::E - 2.0).exp()).abs() < 1e-14);
        assert_eq!(campbell_mgf_exact(&f, 1.0, Sign::Plus, 0.0, &q).unwrap(), 1.0);
    }

    #[test]
    fn campbell_minus_below_plus() {
        let q = QuadratureSpec::default();
        let k = KernelSpec::far(3, 2.0, 1.0, 0.5, ScaleLaw::Power).unwrap();
        let f = kernel_integrand(k, Some(20.0)).unwrap();
        let m = campbell_log_mgf_exact(&f, 0.5, Sign::Minus, 2.0, &q).unwrap();
        let p = campbell_log_mgf_exact(&f, 0.5, Sign::Plus, 2.0, &q).unwrap();
        assert!(m > 0.0 && m < p);
    }

    #[test]
    fn campbell_full_kernel_matches_closed_form() {
        let q = QuadratureSpec::default();
        let f = kernel_integrand(KernelSpec::full(3, 2.0).unwrap(), None).unwrap();
        let v = campbell_log_mgf_exact(&f, 1.0, Sign::Minus, 1.0, &q).unwrap();
        let exact = crate::specfun::psi_riesz_integral(3, 2.0).unwrap();
        assert!((v - exact).abs() / exact < 1e-9);
        assert!(campbell_log_mgf_exact(&f, 1.0, Sign::Plus, 1.0, &q).is_err());
    }

    #[test]
    fn campbell_mc_reference_set() {
        for (i, cfg) in CampbellConfig::reference_set().iter().enumerate() {
            let c = campbell_mc_check(cfg, 20_000, 40 + i as u64).unwrap();
            assert!(c.z.abs() < 4.0, "{c:?}");
            assert!(c.estimate.std_error < 0.05 * c.exact);
        }
    }

    #[test]
    fn poisson_tail_examples() {
        assert_eq!(poisson_tail_exact(1.0, 0).unwrap(), 1.0);
        let v = poisson_tail_exact(1.0, 3).unwrap();
        assert!((v - (1.0 - 2.5 * (-1.0f64).exp())).abs() < 1e-15);
        let lt = poisson_log_tail(1.0, 200).unwrap();
        let stirling = 200.0 * (std::f64::consts::E / 200.0).ln();
        assert!((lt - stirling).abs() / stirling.abs() < 0.01);
        assert!(poisson_tail_exact(0.0, 1).is_err());
    }

    #[test]
    fn poisson_tail_agrees_across_branches() {
        // both branches near k = μ
        for mu in [3.7f64, 10.0, 55.5] {
            let k = mu.floor() as u64;
            let direct: f64 = 1.0 - (0..k).map(|j| poisson_log_pmf(mu, j).exp()).sum::<f64>();
            let series = {
                let mut s = 0.0;
                for j in k..k + 400 {
                    s += poisson_log_pmf(mu, j).exp();
                }
                s
            };
            assert!((direct - series).abs() < 1e-12);
            assert!((poisson_tail_exact(mu, k).unwrap() - series).abs() < 1e-12);
            assert!((poisson_tail_exact(mu, k + 1).unwrap() - (series - poisson_log_pmf(mu, k).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn max_count_examples() {
        let v = max_count_tail(2, 1.0, 1).unwrap();
        assert!((v - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        assert_eq!(max_count_tail(7, 1.0, 0).unwrap(), 1.0);
    }

    #[test]
    fn max_count_matches_monte_carlo() {
        let (n_cells, mu, k) = (10u64, 1.0, 3u64);
        let exact = max_count_tail(n_cells, mu, k).unwrap();
        let hits: Vec<f64> = rng::par_indexed(100_000, |i| {
            let mut r = rng::stream(77, i);
            let m = (0..n_cells).map(|_| poisson_count(&mut r, mu)).max().unwrap();
            if m >= k {
                1.0
            } else {
                0.0
            }
        });
        let e = Estimate::from_values(&hits, 77).unwrap();
        assert!(e.z_score(exact).abs() < 4.0, "z = {}", e.z_score(exact));
    }

    proptest! {
        #[test]
        fn tail_monotone(mu in 0.05f64..40.0, k in 0u64..80) {
            let a = poisson_tail_exact(mu, k).unwrap();
            let b = poisson_tail_exact(mu, k + 1).unwrap();
            let c = poisson_tail_exact(mu * 1.1, k).unwrap();
            prop_assert!(b <= a);
            prop_assert!(c >= a * (1.0 - 1e-12));
        }
    }
}
