//! Brownian paths, Feynman–Kac functionals of the renormalized potential and
//! checks of the Feynman–Kac bounds on boxes.

mod annealed;
mod bounds;

pub use annealed::{annealed_two_ways, AnnealedConfig, AnnealedReport};
pub use bounds::{fk_bound_suite, random_xi, restricted_moment, BoundCheck, BoundVerdict, FkBoundReport, FkSuiteConfig, XiGrid};

use crate::cutoff::{kernel_ball_mass, KernelSpec};
use crate::error::{check_renormalizable, domain, Error, Result};
use crate::field::{poisson_count, Estimate, Sign};
use crate::fmt::f17;
use crate::potential::{PotentialEvaluator, R_MIN_FACTOR};
use crate::rng::{derive_indexed, derive_seed, par_indexed, stream, StreamRng};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;

/// Number of steps of length close to `dt` covering `[0, t]`.
pub(crate) fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && t >= dt) || !t.is_finite() {
        return domain(format!("need 0 < dt <= t (got dt={dt}, t={t})"));
    }
    let m = t / dt;
    let n = m.round();
    if (m - n).abs() > 1e-9 * m.max(1.0) {
        return domain(format!("t = {t} is not a multiple of dt = {dt}"));
    }
    Ok(n as usize)
}

#[inline]
pub(crate) fn normal(rng: &mut StreamRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Discretized Brownian path on `[0, t_final]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    d: usize,
    dt: f64,
    t_final: f64,
    /// Flat `(steps + 1) × d` positions.
    positions: Vec<f64>,
}

impl PathSample {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// Number of positions, `t_final/dt + 1`.
    pub fn len(&self) -> usize {
        self.positions.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.d..(k + 1) * self.d]
    }

    pub fn terminal(&self) -> &[f64] {
        self.position(self.len() - 1)
    }

    /// Halves the time step by inserting Brownian-bridge midpoints drawn from
    /// stream `(seed, index)`.
    pub fn refine(&self, seed: u64, index: u64) -> PathSample {
        let mut rng = stream(seed, index);
        let d = self.d;
        let sd = (self.dt / 4.0).sqrt();
        let mut out = Vec::with_capacity(2 * self.positions.len());
        for k in 0..self.len() - 1 {
            let a = self.position(k);
            let b = self.position(k + 1);
            out.extend_from_slice(a);
            for j in 0..d {
                out.push(0.5 * (a[j] + b[j]) + sd * normal(&mut rng));
            }
        }
        out.extend_from_slice(self.terminal());
        PathSample { d, dt: self.dt / 2.0, t_final: self.t_final, positions: out }
    }
}

/// Brownian path from the origin drawn from stream `(seed, index)`.
pub fn simulate_path_stream(t: f64, dt: f64, d: usize, seed: u64, index: u64) -> Result<PathSample> {
    simulate_path_from(&vec![0.0; d], t, dt, seed, index)
}

/// Brownian path started at `x0`.
pub fn simulate_path_from(x0: &[f64], t: f64, dt: f64, seed: u64, index: u64) -> Result<PathSample> {
    let d = x0.len();
    if d == 0 {
        return domain("dimension must be at least 1");
    }
    let n = step_count(t, dt)?;
    let dt = t / n as f64;
    let sd = dt.sqrt();
    let mut rng = stream(seed, index);
    let mut positions = Vec::with_capacity((n + 1) * d);
    positions.extend_from_slice(x0);
    for k in 0..n {
        for j in 0..d {
            let prev = positions[k * d + j];
            positions.push(prev + sd * normal(&mut rng));
        }
    }
    Ok(PathSample { d, dt, t_final: t, positions })
}

/// Brownian path from the origin, deterministic in `seed`.
pub fn simulate_path(t: f64, dt: f64, d: usize, seed: u64) -> Result<PathSample> {
    simulate_path_stream(t, dt, d, seed, 0)
}

/// Probability that a Brownian bridge of duration `dt` between points at
/// distances `a, b ≥ 0` from a flat boundary does not touch it.
#[inline]
pub(crate) fn bridge_survival(a: f64, b: f64, dt: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        0.0
    } else {
        1.0 - (-2.0 * a * b / dt).exp()
    }
}

/// Weight of one step for staying in the ball `|x| ≤ r`: 0 outside, else the
/// bridge survival factor (two faces in d = 1, tangent plane for d ≥ 2).
fn ball_step_weight(x: &[f64], y: &[f64], r: f64, dt: f64, correct: bool) -> f64 {
    if x.len() == 1 {
        let (a, b) = (x[0], y[0]);
        if a.abs() > r || b.abs() > r {
            return 0.0;
        }
        if !correct {
            return 1.0;
        }
        return bridge_survival(r - a, r - b, dt) * bridge_survival(r + a, r + b, dt);
    }
    let na = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na > r || nb > r {
        return 0.0;
    }
    if correct {
        bridge_survival(r - na, r - nb, dt)
    } else {
        1.0
    }
}

/// Options for path simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitOptions {
    /// Apply the per-step Brownian-bridge crossing correction.
    pub crossing_correction: bool,
}

impl Default for ExitOptions {
    fn default() -> Self {
        ExitOptions { crossing_correction: true }
    }
}

/// `P{sup_{s≤t} |B_s| ≤ r}` by Monte Carlo with the crossing correction.
pub fn confinement_probability(t: f64, r: f64, d: usize, n_paths: u64, dt: f64, seed: u64) -> Result<Estimate> {
    confinement_probability_with(t, r, d, n_paths, dt, seed, ExitOptions::default())
}

pub fn confinement_probability_with(t: f64, r: f64, d: usize, n_paths: u64, dt: f64, seed: u64, opts: ExitOptions) -> Result<Estimate> {
    if !(r > 0.0) {
        return domain("confinement radius must be positive");
    }
    if d == 0 {
        return domain("dimension must be at least 1");
    }
    let n = step_count(t, dt)?;
    let dt = t / n as f64;
    let sd = dt.sqrt();
    let weights = par_indexed(n_paths, |i| {
        let mut rng = stream(seed, i);
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        let mut w = 1.0;
        for _ in 0..n {
            for j in 0..d {
                y[j] = x[j] + sd * normal(&mut rng);
            }
            w *= ball_step_weight(&x, &y, r, dt, opts.crossing_correction);
            if w == 0.0 {
                break;
            }
            std::mem::swap(&mut x, &mut y);
        }
        w
    });
    Estimate::from_values(&weights, seed)
}

/// Probability that 1D Brownian motion stays in `[−r, r]` up to time `t`.
/// For `t ≥ r²` the eigenfunction series
/// `(4/π) Σ_k (−1)^k/(2k+1) exp{−(2k+1)²π²t/(8r²)}`, otherwise the image series
/// `Σ_k (−1)^k [Φ((2k+1)r/√t) − Φ((2k−1)r/√t)]`.
pub fn confinement_series(t: f64, r: f64) -> f64 {
    let pi = std::f64::consts::PI;
    if t < r * r {
        let erfc = libm::erfc;
        let u = r / (2.0 * t).sqrt();
        // Φ(b) − Φ(a) = (erfc(a/√2) − erfc(b/√2))/2
        let band = |k: i64| 0.5 * (erfc((2 * k - 1) as f64 * u) - erfc((2 * k + 1) as f64 * u));
        let mut s = band(0);
        for k in 1..100 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let term = band(k) + band(-k);
            s += sign * term;
            if term < 1e-18 {
                break;
            }
        }
        return s;
    }
    let mut s = 0.0;
    for k in 0..200 {
        let m = (2 * k + 1) as f64;
        let term = (-m * m * pi * pi * t / (8.0 * r * r)).exp() / m;
        s += if k % 2 == 0 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    4.0 / pi * s
}

/// A potential that can be evaluated anywhere a path goes.
pub trait FieldPotential: Sync {
    /// Potential value and number of floored contributions.
    fn potential(&self, x: &[f64]) -> Result<(f64, u32)>;
    fn r_min(&self) -> f64;
}

impl FieldPotential for PotentialEvaluator {
    fn potential(&self, x: &[f64]) -> Result<(f64, u32)> {
        let v = self.eval(x)?;
        Ok((v.value, v.floored))
    }

    fn r_min(&self) -> f64 {
        PotentialEvaluator::r_min(self)
    }
}

/// Poisson field of unit-free intensity on all of R^d, realized tile by tile.
/// Tile `k` (side = window radius) draws its points from its own stream, so
/// the field is the same whichever tiles are realized first.
#[derive(Debug, Clone)]
pub struct TiledField {
    d: usize,
    p: f64,
    radius: f64,
    density: f64,
    seed: u64,
    r_min: f64,
    compensator: f64,
    eager: HashMap<Vec<i64>, Vec<f64>>,
}

impl TiledField {
    /// Realizes the tiles meeting the cube `[−half_width, half_width]^d`.
    pub fn new(d: usize, p: f64, radius: f64, density: f64, seed: u64, half_width: f64) -> Result<Self> {
        check_renormalizable(d, p)?;
        if !(radius > 0.0 && radius.is_finite()) || !(density >= 0.0) {
            return domain("window radius must be positive and density nonnegative");
        }
        let kernel = KernelSpec::full(d, p)?;
        let compensator = density * kernel_ball_mass(&kernel, radius)?;
        let mut f = TiledField { d, p, radius, density, seed, r_min: R_MIN_FACTOR * radius, compensator, eager: HashMap::new() };
        let m = (half_width / radius).ceil() as i64;
        let side = (2 * m + 1) as usize;
        let total = side.pow(d as u32);
        for idx in 0..total {
            let mut key = Vec::with_capacity(d);
            let mut r = idx;
            for _ in 0..d {
                key.push((r % side) as i64 - m);
                r /= side;
            }
            let pts = f.generate(&key);
            f.eager.insert(key, pts);
        }
        Ok(f)
    }

    fn generate(&self, key: &[i64]) -> Vec<f64> {
        let label = format!("tile{key:?}");
        let mut rng = stream(derive_seed(self.seed, &label), 0);
        let vol = self.radius.powi(self.d as i32);
        let n = poisson_count(&mut rng, self.density * vol);
        let mut pts = Vec::with_capacity(n as usize * self.d);
        for _ in 0..n {
            for &k in key {
                pts.push((k as f64 + rng.random::<f64>()) * self.radius);
            }
        }
        pts
    }

    pub fn compensator(&self) -> f64 {
        self.compensator
    }

    /// Number of eagerly realized tiles.
    pub fn eager_tiles(&self) -> usize {
        self.eager.len()
    }

    fn visit_tile<F: FnMut(&[f64])>(&self, key: &[i64], f: &mut F) {
        match self.eager.get(key) {
            Some(pts) => pts.chunks_exact(self.d).for_each(&mut *f),
            None => self.generate(key).chunks_exact(self.d).for_each(&mut *f),
        }
    }
}

impl FieldPotential for TiledField {
    fn potential(&self, x: &[f64]) -> Result<(f64, u32)> {
        if x.len() != self.d {
            return Err(Error::Geometry("evaluation point has the wrong dimension".into()));
        }
        let base: Vec<i64> = x.iter().map(|v| (v / self.radius).floor() as i64).collect();
        let r2max = self.radius * self.radius;
        let mut sum = 0.0;
        let mut floored = 0u32;
        let mut key = vec![0i64; self.d];
        let total = 3usize.pow(self.d as u32);
        for idx in 0..total {
            let mut r = idx;
            for k in 0..self.d {
                key[k] = base[k] + (r % 3) as i64 - 1;
                r /= 3;
            }
            self.visit_tile(&key, &mut |y| {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                if r2 <= r2max {
                    let mut r = r2.sqrt();
                    if r < self.r_min {
                        r = self.r_min;
                        floored += 1;
                    }
                    sum += r.powf(-self.p);
                }
            });
        }
        Ok((sum - self.compensator, floored))
    }

    fn r_min(&self) -> f64 {
        self.r_min
    }
}

/// `∫₀ᵗ V̄(B_s) ds` by the midpoint rule on each path segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathIntegral {
    pub value: f64,
    /// Floored kernel contributions over all evaluations.
    pub floored: u64,
    pub r_min: f64,
    /// `|T − M| + 3·(Σ δ_k²)^{1/2}` with `δ_k` the per-segment trapezoid minus
    /// midpoint difference and `T − M = Σ δ_k`. Heuristic: it cannot see a bridge
    /// excursion onto a field point between nodes, so for singular kernels a
    /// refined path can move the value by a few times this estimate.
    pub quad_error: f64,
}

pub fn path_potential_integral<P: FieldPotential + ?Sized>(path: &PathSample, field: &P) -> Result<PathIntegral> {
    let d = path.d();
    let dt = path.dt();
    let mut mid = vec![0.0; d];
    let mut floored = 0u64;
    let mut value = 0.0;
    let mut diff_sum = 0.0;
    let mut diff_sq = 0.0;
    let (mut v_prev, f0) = field.potential(path.position(0))?;
    floored += f0 as u64;
    for k in 0..path.len() - 1 {
        let a = path.position(k);
        let b = path.position(k + 1);
        for j in 0..d {
            mid[j] = 0.5 * (a[j] + b[j]);
        }
        let (vm, fm) = field.potential(&mid)?;
        let (vb, fb) = field.potential(b)?;
        floored += (fm + fb) as u64;
        value += dt * vm;
        let delta = dt * (0.5 * (v_prev + vb) - vm);
        diff_sum += delta;
        diff_sq += delta * delta;
        v_prev = vb;
    }
    Ok(PathIntegral { value, floored, r_min: field.r_min(), quad_error: diff_sum.abs() + 3.0 * diff_sq.sqrt() })
}

/// Settings of a quenched partition-function run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FkConfig {
    pub theta: f64,
    pub sign: Sign,
    pub t: f64,
    pub dt: f64,
    pub n_paths: u64,
    /// Half-width of the eagerly realized field cube; defaults to the 99.9%
    /// quantile of the path range plus the window radius.
    pub window: Option<f64>,
    pub p: f64,
    pub d: usize,
    /// Kernel window radius R.
    pub radius: f64,
    pub density: f64,
    pub seed: u64,
    /// Paths per CSV chunk.
    pub chunk: u64,
}

impl FkConfig {
    pub fn validate(&self) -> Result<()> {
        check_renormalizable(self.d, self.p)?;
        if self.sign == Sign::Plus && self.p >= 2.0 {
            return Err(Error::Regime(format!(
                "exp{{+θ∫V̄}} has infinite annealed mean for p >= 2 (got p = {}); only the negative sign is allowed",
                self.p
            )));
        }
        if !(self.theta >= 0.0) || !(self.dt <= self.t) || self.n_paths < 2 || self.chunk == 0 {
            return domain("need theta >= 0, dt <= t, n_paths >= 2 and chunk >= 1");
        }
        step_count(self.t, self.dt)?;
        Ok(())
    }

    /// Field half-width: the 99.9% path-range quantile plus R.
    pub fn default_window(&self) -> f64 {
        // P{sup_{s≤t}|B_s^j| > a} <= 4·P{B_t^j > a}; union over coordinates
        let tail = 1e-3 / (4.0 * self.d as f64);
        let z = upper_normal_quantile(tail);
        z * self.t.sqrt() + self.radius
    }
}

/// `z` with `P{N(0,1) > z} = q`, by bisection on erfc.
fn upper_normal_quantile(q: f64) -> f64 {
    let tail = |z: f64| 0.5 * libm::erfc(z / std::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (0.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Mean and variance of one chunk of path weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkStat {
    pub index: u64,
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
    pub floored: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    /// Mean of `exp{sign·θ·∫V̄}` over paths.
    pub estimate: Estimate,
    /// `log` of the mean, computed in log space.
    pub log_mean: f64,
    /// Delta-method standard error of `log_mean`.
    pub log_std_error: f64,
    pub floored: u64,
    pub r_min: f64,
    pub chunks: Vec<ChunkStat>,
}

/// `(log mean exp(a_i), delta-method se of that log)`.
pub fn log_mean_exp(a: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return (m, 0.0);
    }
    let w: Vec<f64> = a.iter().map(|v| (v - m).exp()).collect();
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (m + mean.ln(), (var / n).sqrt() / mean)
}

/// Quenched `E₀ exp{sign·θ∫₀ᵗ V̄(B_s) ds}` for one field realization.
pub fn partition_estimator(cfg: &FkConfig) -> Result<PartitionReport> {
    cfg.validate()?;
    let half = cfg.window.unwrap_or_else(|| cfg.default_window());
    let field = TiledField::new(cfg.d, cfg.p, cfg.radius, cfg.density, derive_seed(cfg.seed, "field"), half)?;
    let path_seed = derive_seed(cfg.seed, "paths");
    let s = cfg.sign.factor();
    let results = par_indexed(cfg.n_paths, |i| -> Result<(f64, u64)> {
        let path = simulate_path_stream(cfg.t, cfg.dt, cfg.d, path_seed, i)?;
        let pi = path_potential_integral(&path, &field)?;
        Ok((s * cfg.theta * pi.value, pi.floored))
    });
    let mut exps = Vec::with_capacity(results.len());
    let mut floors = Vec::with_capacity(results.len());
    for r in results {
        let (a, f) = r?;
        exps.push(a);
        floors.push(f);
    }
    let (log_mean, log_std_error) = log_mean_exp(&exps);
    let values: Vec<f64> = exps.iter().map(|a| a.exp()).collect();
    let estimate = if cfg.theta == 0.0 {
        Estimate { value: 1.0, std_error: 0.0, n: cfg.n_paths, seed: cfg.seed }
    } else {
        let mut e = Estimate::from_values(&values, cfg.seed)?;
        if !e.value.is_finite() {
            e.value = log_mean.exp();
        }
        e
    };
    let chunks = values
        .chunks(cfg.chunk as usize)
        .zip(floors.chunks(cfg.chunk as usize))
        .enumerate()
        .map(|(k, (v, f))| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let variance = if v.len() > 1 { v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            ChunkStat { index: k as u64, n: v.len() as u64, mean, variance, floored: f.iter().sum() }
        })
        .collect();
    Ok(PartitionReport {
        estimate,
        log_mean: if cfg.theta == 0.0 { 0.0 } else { log_mean },
        log_std_error: if cfg.theta == 0.0 { 0.0 } else { log_std_error },
        floored: floors.iter().sum(),
        r_min: field.r_min(),
        chunks,
    })
}

/// Writes one row per chunk.
pub fn write_chunks_csv<W: Write>(mut w: W, chunks: &[ChunkStat]) -> Result<()> {
    writeln!(w, "chunk,n,mean,variance,floored")?;
    for c in chunks {
        writeln!(w, "{},{},{},{},{}", c.index, c.n, f17(c.mean), f17(c.variance), c.floored)?;
    }
    Ok(())
}

/// Seed for stream `label[index]` of a run.
pub(crate) fn sub_seed(seed: u64, label: &str, index: u64) -> u64 {
    derive_indexed(seed, label, index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{PoissonSample, Window};
    use crate::specfun::sphere_area;

    #[test]
    fn path_shape_and_determinism() {
        let a = simulate_path(1.0, 0.01, 2, 5).unwrap();
        assert_eq!(a.len(), 101);
        assert_eq!(a, simulate_path(1.0, 0.01, 2, 5).unwrap());
        assert_ne!(a, simulate_path(1.0, 0.01, 2, 6).unwrap());
        assert_eq!(a.position(0), &[0.0, 0.0]);
        let r = a.refine(1, 0);
        assert_eq!(r.len(), 201);
        assert_eq!(r.position(2), a.position(1));
        assert!(simulate_path(1.0, 0.3, 1, 1).is_err());
    }

    #[test]
    fn terminal_moments() {
        let n = 10_000;
        let ends: Vec<f64> = (0..n).map(|i| simulate_path_stream(2.0, 0.05, 1, 9, i).unwrap().terminal()[0]).collect();
        let e = Estimate::from_values(&ends, 9).unwrap();
        assert!(e.z_score(0.0).abs() < 4.0);
        assert!((e.sample_variance() / 2.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn series_values() {
        assert!((confinement_series(2.0, 1.0) - 0.10798).abs() < 1e-5);
        assert!((confinement_series(1e-3, 1.0) - 1.0).abs() < 1e-12);
        // the image and eigenfunction series meet at t = r²
        let (below, at) = (confinement_series(4.0 * (1.0 - 1e-14), 2.0), confinement_series(4.0, 2.0));
        assert!((below - at).abs() < 1e-12, "{below} {at}");
    }

    #[test]
    fn confinement_matches_series() {
        let e = confinement_probability(2.0, 1.0, 1, 20_000, 2.0 / 512.0, 3).unwrap();
        assert!(e.z_score(confinement_series(2.0, 1.0)).abs() < 4.0, "{e:?}");
        let far = confinement_probability(1.0, 100.0, 2, 100, 0.01, 3).unwrap();
        assert_eq!(far.value, 1.0);
        // without the correction the discrete check overestimates
        let naive = confinement_probability_with(2.0, 1.0, 1, 20_000, 2.0 / 64.0, 3, ExitOptions { crossing_correction: false }).unwrap();
        assert!(naive.z_score(confinement_series(2.0, 1.0)) > 4.0);
    }

    #[test]
    fn empty_field_integral() {
        let w = Window::cube(1, -50.0, 50.0).unwrap();
        let s = PoissonSample::from_points(w, 1.0, &[]).unwrap();
        let ev = PotentialEvaluator::new(s, 0.75, 10.0, 1.0).unwrap();
        let path = simulate_path(1.5, 0.01, 1, 2).unwrap();
        let pi = path_potential_integral(&path, &ev).unwrap();
        let c = sphere_area(1).unwrap() * 10f64.powf(0.25) / 0.25;
        assert!((pi.value + 1.5 * c).abs() < 1e-10);
        assert_eq!(pi.floored, 0);
    }

    #[test]
    fn far_point_integral() {
        let w = Window::cube(1, -200.0, 200.0).unwrap();
        let s = PoissonSample::from_points(w, 1.0, &[vec![40.0]]).unwrap();
        let ev = PotentialEvaluator::new(s, 0.75, 60.0, 0.01).unwrap();
        let path = simulate_path(1.0, 0.01, 1, 4).unwrap();
        let pi = path_potential_integral(&path, &ev).unwrap();
        let approx = 40f64.powf(-0.75) - ev.compensator();
        assert!((pi.value - approx).abs() < 0.01 * approx.abs(), "{} {approx}", pi.value);
    }

    #[test]
    fn tiled_field_is_order_independent() {
        let a = TiledField::new(1, 0.75, 5.0, 1.0, 7, 20.0).unwrap();
        let b = TiledField::new(1, 0.75, 5.0, 1.0, 7, 0.0).unwrap();
        for x in [-31.3, -4.0, 0.2, 17.9, 44.0] {
            assert_eq!(a.potential(&[x]).unwrap(), b.potential(&[x]).unwrap());
        }
        assert!(a.eager_tiles() > b.eager_tiles());
    }

    fn cfg() -> FkConfig {
        FkConfig {
            theta: 0.5,
            sign: Sign::Minus,
            t: 1.0,
            dt: 1.0 / 64.0,
            n_paths: 400,
            window: None,
            p: 0.75,
            d: 1,
            radius: 8.0,
            density: 1.0,
            seed: 21,
            chunk: 100,
        }
    }

    #[test]
    fn partition_trivial_cases() {
        let r = partition_estimator(&FkConfig { theta: 0.0, ..cfg() }).unwrap();
        assert_eq!((r.estimate.value, r.estimate.std_error), (1.0, 0.0));
        let r = partition_estimator(&FkConfig { t: 1e-3, dt: 1e-3, ..cfg() }).unwrap();
        // every path sees nearly the same potential value over so short a time
        assert!(r.estimate.std_error < 1e-2 * r.estimate.value, "{r:?}");
        let r = partition_estimator(&cfg()).unwrap();
        assert_eq!(r.chunks.len(), 4);
        assert!((r.log_mean - r.estimate.value.ln()).abs() < 1e-12);
    }

    #[test]
    fn positive_sign_regime() {
        let bad = FkConfig { sign: Sign::Plus, d: 3, p: 2.0, ..cfg() };
        assert!(matches!(partition_estimator(&bad), Err(Error::Regime(_))));
        assert!(partition_estimator(&FkConfig { sign: Sign::Plus, n_paths: 50, ..cfg() }).is_ok());
    }
}
