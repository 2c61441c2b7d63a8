//! Empirical lower tails of ζ_ε over a dictionary of grid functions, with the exact
//! Chebyshev bound for each function.

use super::{deviation_scale, TailReport, TailRow};
use crate::cutoff::{kernel_ball_mass, KernelSpec};
use crate::error::{check_renormalizable, domain, Error, Result};
use crate::field::{sample_field_stream, Window};
use crate::potential::{zeta_epsilon, zeta_profile, GridFunction};
use crate::rng::{derive_indexed, par_indexed, stream};
use crate::specfun::kronrod21_rule;
use crate::varcalc::{rate_i_d, sup_l2_on_gd_exact};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// `size` functions on `[lo, hi]`, normalized in the G_d norm: Hermite bumps
/// `H_k(u)e^{−u²/2}` and Gaussians with seeded centers and widths.
pub fn dictionary_1d(lo: f64, hi: f64, h: f64, size: usize, seed: u64) -> Result<Vec<GridFunction>> {
    if !(hi > lo) || size == 0 {
        return domain("dictionary needs lo < hi and at least one function");
    }
    let len = hi - lo;
    let mut rng = stream(seed, 0);
    let mut out = Vec::with_capacity(size);
    for i in 0..size {
        let center = rng.random_range(lo + 0.25 * len..hi - 0.25 * len);
        let width = rng.random_range(0.08 * len..0.3 * len);
        let order = i / 2 % 4;
        let hermite = i % 2 == 0;
        let mut g = GridFunction::from_fn(&[lo], &[hi], h, true, |x| {
            let u = (x[0] - center) / width;
            let mut base = (-0.5 * u * u).exp();
            if hermite {
                let (mut h0, mut h1) = (1.0, 2.0 * u);
                if order == 0 {
                    h1 = h0;
                }
                for n in 1..order {
                    let h2 = 2.0 * u * h1 - 2.0 * n as f64 * h0;
                    h0 = h1;
                    h1 = h2;
                }
                base *= h1;
            }
            base
        })?;
        g.normalize_gd()?;
        out.push(g);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaConfig {
    pub gamma: f64,
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
    /// Mesh of the dictionary functions.
    pub h: f64,
    /// Kernel truncation radius.
    pub radius: f64,
    pub n_fields: u64,
    pub eps: Vec<f64>,
    pub seed: u64,
}

impl Default for ZetaConfig {
    fn default() -> Self {
        ZetaConfig {
            gamma: 0.1,
            p: 0.75,
            lo: -1.0,
            hi: 1.0,
            h: 1.0 / 32.0,
            radius: 8.0,
            n_fields: 4000,
            eps: vec![0.5, 0.25, 0.1],
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionCheck {
    pub index: usize,
    pub events: u64,
    pub frequency: f64,
    /// `inf_θ e^{−θc} E e^{−θζ_ε(g)}` for the threshold `c`.
    pub bound: f64,
    pub theta: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaRow {
    pub eps: f64,
    pub threshold: f64,
    pub n_fields: u64,
    /// Fields where the dictionary infimum is at most `−threshold`.
    pub inf_events: u64,
    pub functions: Vec<FunctionCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaReport {
    /// Normalized log-frequency `ε^{2/(d−p)} log P` against `−I_D(γ)`.
    pub tail: TailReport,
    pub rows: Vec<ZetaRow>,
    pub violations: usize,
    /// No event of the infimum was observed at any ε.
    pub inconclusive: bool,
}

/// Quadrature nodes and weights for ∫ φ(f(x)) dx over the support of the profile.
struct Profile {
    weights: Vec<f64>,
    values: Vec<f64>,
    norm_sq: f64,
}

impl Profile {
    fn new(g: &GridFunction, p: f64, radius: f64) -> Result<Self> {
        let h = g.h();
        let lo = g.lo()[0];
        let mut breaks = Vec::new();
        let mut x = [0.0];
        for i in 0..g.len() {
            if g.values()[i] != 0.0 {
                g.node_into(i, &mut x);
                breaks.extend([x[0] - radius, x[0] - 0.5 * h, x[0] + 0.5 * h, x[0] + radius]);
            }
        }
        if breaks.is_empty() {
            return domain("zero dictionary function");
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * (1.0 + lo.abs()));
        let rule = kronrod21_rule();
        let mut xs = Vec::new();
        let mut weights = Vec::new();
        for w in breaks.windows(2) {
            let n = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
            let step = (w[1] - w[0]) / n as f64;
            for j in 0..n {
                let a = w[0] + j as f64 * step;
                for (t, wt) in rule {
                    xs.push(vec![a + 0.5 * step * (t + 1.0)]);
                    weights.push(0.5 * step * wt);
                }
            }
        }
        let values = zeta_profile(g, p, radius, &xs)?;
        Ok(Profile { weights, values, norm_sq: g.norm_sq() })
    }

    /// log E e^{−θζ} = ε∫(e^{−θf} − 1) + θε‖g‖²∫_{|z|≤R}|z|^{−p}.
    fn log_mgf(&self, theta: f64, eps: f64, mass: f64) -> f64 {
        let s: f64 = self.weights.iter().zip(&self.values).map(|(w, f)| w * (-theta * f).exp_m1()).sum();
        eps * s + theta * eps * self.norm_sq * mass
    }

    /// Minimizes `−θc + log E e^{−θζ}` over θ ≥ 0 (a convex function).
    fn chebyshev(&self, c: f64, eps: f64, mass: f64) -> (f64, f64) {
        let obj = |t: f64| -t * c + self.log_mgf(t, eps, mass);
        let mut hi = 1e-3;
        while obj(2.0 * hi) < obj(hi) && hi < 1e6 {
            hi *= 2.0;
        }
        let (mut a, mut b) = (0.0, 2.0 * hi);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - r * (b - a);
        let mut x2 = a + r * (b - a);
        let (mut f1, mut f2) = (obj(x1), obj(x2));
        for _ in 0..80 {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - r * (b - a);
                f1 = obj(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + r * (b - a);
                f2 = obj(x2);
            }
        }
        let t = 0.5 * (a + b);
        let v = obj(t).min(0.0);
        (if v == 0.0 { 0.0 } else { t }, v.exp())
    }
}

/// Binomial excess beyond which a frequency contradicts a probability bound.
fn exceeds(frequency: f64, bound: f64, n: u64) -> bool {
    frequency > bound + 4.0 * (bound * (1.0 - bound) / n as f64).sqrt()
}

/// Frequencies of `{ζ_ε(g) ≤ −γε^{−(2−p)/d}}` for each dictionary function and of
/// the dictionary infimum, over `n_fields` fields of intensity ε on `D = (lo, hi)`.
/// Only `d = 1` is supported.
pub fn zeta_tail_experiment(cfg: &ZetaConfig, dictionary: &[GridFunction]) -> Result<ZetaReport> {
    let d = 1;
    let p = cfg.p;
    check_renormalizable(d, p)?;
    if dictionary.is_empty() {
        return domain("empty dictionary");
    }
    if dictionary.iter().any(|g| g.d() != 1 || (g.gd_norm_sq() - 1.0).abs() > 1e-9) {
        return Err(Error::Geometry("dictionary functions must be one-dimensional and G_d-normalized".into()));
    }
    if dictionary.iter().any(|g| g.lo()[0] < cfg.lo - 1e-12 || g.hi()[0] > cfg.hi + 1e-12) {
        return Err(Error::Geometry("dictionary functions must live on D".into()));
    }
    if !(cfg.gamma > 0.0) || !(cfg.radius > 0.0) || cfg.n_fields == 0 {
        return domain("need gamma > 0, radius > 0 and n_fields >= 1");
    }
    let schedule = super::ScalingSchedule::new(cfg.eps.clone())?;
    let df = d as f64;
    let target = -rate_i_d(cfg.gamma, d, p, sup_l2_on_gd_exact(&[cfg.lo], &[cfg.hi]))?;
    let mass = kernel_ball_mass(&KernelSpec::full(d, p)?, cfg.radius)?;
    let profiles: Vec<Profile> = dictionary.iter().map(|g| Profile::new(g, p, cfg.radius)).collect::<Result<_>>()?;
    let margin = cfg.radius + 2.0 * cfg.h;
    let window = Window::cube(1, cfg.lo - margin, cfg.hi + margin)?;

    let mut rows = Vec::new();
    let mut tail_rows = Vec::new();
    let mut violations = 0;
    let mut any_event = false;
    for (k, &eps) in schedule.eps().iter().enumerate() {
        let scale = deviation_scale(eps, d, p);
        let c = cfg.gamma * scale;
        let seed = derive_indexed(cfg.seed, "zeta-fields", k as u64);
        let values: Vec<Result<Vec<f64>>> = par_indexed(cfg.n_fields, |i| {
            let s = sample_field_stream(&window, eps, seed, i)?;
            dictionary.iter().map(|g| zeta_epsilon(g, &s, p, eps, cfg.radius)).collect()
        });
        let values: Vec<Vec<f64>> = values.into_iter().collect::<Result<_>>()?;
        let n = cfg.n_fields;
        let inf_events = values.iter().filter(|z| z.iter().cloned().fold(f64::INFINITY, f64::min) <= -c).count() as u64;
        any_event |= inf_events > 0;
        let mut functions = Vec::with_capacity(dictionary.len());
        for (j, prof) in profiles.iter().enumerate() {
            let events = values.iter().filter(|z| z[j] <= -c).count() as u64;
            let frequency = events as f64 / n as f64;
            let (theta, bound) = prof.chebyshev(c, eps, mass);
            let violation = exceeds(frequency, bound, n);
            violations += violation as usize;
            functions.push(FunctionCheck { index: j, events, frequency, bound, theta, violation });
        }
        let freq = inf_events as f64 / n as f64;
        let normalized = (inf_events > 0).then(|| eps.powf(2.0 / (df - p)) * freq.ln());
        tail_rows.push(TailRow::new(eps, scale, normalized, target));
        rows.push(ZetaRow { eps, threshold: c, n_fields: n, inf_events, functions });
    }
    let tail = TailReport { experiment: "zeta-tail".into(), d, p, parameter: cfg.gamma, target, rows: tail_rows };
    Ok(ZetaReport { tail, rows, violations, inconclusive: !any_event })
}
