//! Finite-volume discretizations of radial variational problems on the ball
//! of radius `R`, and the one-dimensional full-line counterpart.

use super::lanczos::top_eigenpair;
use super::lattice::cell_power_average;
use crate::error::{domain, Result};
use crate::specfun::sphere_area;

const TOL: f64 = 1e-11;

/// Largest `μ` with `A g = μ B g`, `A` diagonal, `B` symmetric positive definite
/// tridiagonal. Returns `μ` and the B-normalized `g`.
pub(crate) fn top_generalized(a: &[f64], b_diag: &[f64], b_off: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = a.len();
    // B = L Lᵀ, L lower bidiagonal
    let mut l_d = vec![0.0; n];
    let mut l_s = vec![0.0; n.saturating_sub(1)];
    l_d[0] = b_diag[0].sqrt();
    for i in 1..n {
        l_s[i - 1] = b_off[i - 1] / l_d[i - 1];
        let v = b_diag[i] - l_s[i - 1] * l_s[i - 1];
        if !(v > 0.0) {
            return domain("mass operator is not positive definite");
        }
        l_d[i] = v.sqrt();
    }
    let solve_lt = |x: &[f64], y: &mut [f64]| {
        y[n - 1] = x[n - 1] / l_d[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = (x[i] - l_s[i] * y[i + 1]) / l_d[i];
        }
    };
    let apply = |x: &[f64], out: &mut [f64]| {
        let mut y = vec![0.0; n];
        solve_lt(x, &mut y);
        for i in 0..n {
            y[i] *= a[i];
        }
        out[0] = y[0] / l_d[0];
        for i in 1..n {
            out[i] = (y[i] - l_s[i - 1] * out[i - 1]) / l_d[i];
        }
    };
    // start from Lᵀ·(A-weighted bump)
    let mut start = vec![0.0; n];
    for i in 0..n {
        start[i] = l_d[i] * a[i].sqrt() + if i + 1 < n { l_s[i] * a[i + 1].sqrt() } else { 0.0 };
    }
    let r = top_eigenpair(n, apply, &start, TOL)?;
    let mut g = vec![0.0; n];
    solve_lt(&r.vector, &mut g);
    let s = g.iter().sum::<f64>().signum();
    g.iter_mut().for_each(|v| *v *= s);
    Ok((r.value, g))
}

/// Radial grid `r_i = i·h`, `i = 0..n`, with `g(R) = 0` at `R = n·h`.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    d: usize,
    h: f64,
    radius: f64,
    /// `dω_d ∫ r^{d−1}` over each control volume.
    mass: Vec<f64>,
    /// Flux weights `dω_d r_{i+½}^{d−1}/h` between node i and i+1.
    edge: Vec<f64>,
}

impl RadialGrid {
    pub fn new(d: usize, radius: f64, h: f64) -> Result<Self> {
        let m = radius / h;
        let n = m.round();
        if !(n >= 4.0) || (m - n).abs() > 1e-6 {
            return domain(format!("radius {radius} must be a multiple (>= 4) of h = {h}"));
        }
        let n = n as usize;
        let area = sphere_area(d)?;
        let df = d as f64;
        let shell = |a: f64, b: f64| area * (b.powf(df) - a.powf(df)) / df;
        let mass = (0..n)
            .map(|i| {
                let r = i as f64 * h;
                shell((r - 0.5 * h).max(0.0), r + 0.5 * h)
            })
            .collect();
        let edge = (0..n).map(|i| area * ((i as f64 + 0.5) * h).powf(df - 1.0) / h).collect();
        Ok(RadialGrid { d, h, radius, mass, edge })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    /// Control-volume average of r^{−p} (weight r^{d−1}).
    pub fn power_average(&self, p: f64) -> Vec<f64> {
        let df = self.d as f64;
        (0..self.len())
            .map(|i| {
                let r = self.node(i);
                let a = (r - 0.5 * self.h).max(0.0);
                let b = r + 0.5 * self.h;
                df / (df - p) * (b.powf(df - p) - a.powf(df - p)) / (b.powf(df) - a.powf(df))
            })
            .collect()
    }

    /// Stiffness matrix of ∫|g'|² as (diagonal, off-diagonal).
    fn stiffness(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let diag = (0..n).map(|i| self.edge[i] + if i > 0 { self.edge[i - 1] } else { 0.0 }).collect();
        let off = (0..n - 1).map(|i| -self.edge[i]).collect();
        (diag, off)
    }

    /// (∫g², ∫|∇g|², ∫g²|x|^{−p}) of a radial profile on the nodes.
    pub fn norms(&self, g: &[f64], p: f64) -> (f64, f64, f64) {
        let v = self.power_average(p);
        let mut l2 = 0.0;
        let mut grad = 0.0;
        let mut pot = 0.0;
        for i in 0..self.len() {
            l2 += self.mass[i] * g[i] * g[i];
            pot += self.mass[i] * v[i] * g[i] * g[i];
            let next = if i + 1 < self.len() { g[i + 1] } else { 0.0 };
            grad += self.edge[i] * (next - g[i]) * (next - g[i]);
        }
        (l2, grad, pot)
    }

    /// Samples a radial profile on the nodes.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.node(i))).collect()
    }

    /// `max ∫g²|x|^{−p}` subject to `∫g² + ½∫|∇g|² = 1`, with the maximizer.
    pub fn rho(&self, p: f64) -> Result<(f64, Vec<f64>)> {
        let v = self.power_average(p);
        let a: Vec<f64> = v.iter().zip(&self.mass).map(|(v, m)| v * m).collect();
        let (kd, ko) = self.stiffness();
        let bd: Vec<f64> = kd.iter().zip(&self.mass).map(|(k, m)| m + 0.5 * k).collect();
        let bo: Vec<f64> = ko.iter().map(|k| 0.5 * k).collect();
        top_generalized(&a, &bd, &bo)
    }

    /// `max {λ∫g²|x|^{−p} − ½∫|∇g|²}` subject to `∫g² = 1`.
    pub fn m_direct(&self, lambda: f64, p: f64) -> Result<f64> {
        let v = self.power_average(p);
        let (kd, ko) = self.stiffness();
        let n = self.len();
        let sq: Vec<f64> = self.mass.iter().map(|m| m.sqrt()).collect();
        let diag: Vec<f64> = (0..n).map(|i| lambda * v[i] - 0.5 * kd[i] / self.mass[i]).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| -0.5 * ko[i] / (sq[i] * sq[i + 1])).collect();
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += off[i] * x[i + 1];
                }
                y[i] = s;
            }
        };
        let start: Vec<f64> = (0..n).map(|i| sq[i] * (-(self.node(i) * self.node(i))).exp()).collect();
        Ok(top_eigenpair(n, apply, &start, TOL)?.value)
    }
}

/// The ρ problem on the full line: nodes `−R + j·h` on `(−R, R)` with the
/// singularity at `center`, using exact cell averages of |x − center|^{−p}.
pub fn rho_line(p: f64, radius: f64, h: f64, center: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("the line problem needs 0 < p < 1 (got {p})"));
    }
    let m = 2.0 * radius / h;
    let n = m.round();
    if !(n >= 4.0) || (m - n).abs() > 1e-6 {
        return domain("2R must be a multiple of h");
    }
    let n = n as usize - 1;
    let a: Vec<f64> = (0..n)
        .map(|j| {
            let x = -radius + (j + 1) as f64 * h;
            h * cell_power_average(&[x - center - 0.5 * h], h, p)
        })
        .collect();
    let bd = vec![h + 1.0 / h; n];
    let bo = vec![-0.5 / h; n - 1];
    Ok(top_generalized(&a, &bd, &bo)?.0)
}
