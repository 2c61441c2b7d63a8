//! Dirichlet lattice operators `½Δ_h + diag(ξ)` on boxes.

use super::lanczos::top_eigenpair;
use crate::error::{domain, Error, Result};
use crate::specfun::kronrod21_rule;
use serde::{Deserialize, Serialize};

/// Default residual tolerance for lattice eigen-solves.
pub const EIGEN_TOL: f64 = 1e-10;

/// A potential on the interior nodes `lo + (j+1)·h` of a box, with zero
/// Dirichlet data on the boundary layer. The first axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeOperatorSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    h: f64,
    shape: Vec<usize>,
    xi: Vec<f64>,
}

fn interior_shape(lo: &[f64], hi: &[f64], h: f64) -> Result<Vec<usize>> {
    let d = lo.len();
    if d == 0 || d > 3 || hi.len() != d {
        return Err(Error::Geometry("lattices support 1 to 3 dimensions".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return domain("mesh width must be positive");
    }
    let mut shape = Vec::with_capacity(d);
    for k in 0..d {
        let m = (hi[k] - lo[k]) / h;
        let r = m.round();
        if !(r >= 2.0) || (m - r).abs() > 1e-6 {
            return Err(Error::Geometry(format!("axis {k}: side {} is not a multiple (>= 2) of h = {h}", hi[k] - lo[k])));
        }
        shape.push(r as usize - 1);
    }
    Ok(shape)
}

impl LatticeOperatorSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, h: f64, xi: Vec<f64>) -> Result<Self> {
        let shape = interior_shape(&lo, &hi, h)?;
        let n: usize = shape.iter().product();
        if xi.len() != n {
            return domain(format!("potential has {} values, lattice has {n} interior nodes", xi.len()));
        }
        if let Some(v) = xi.iter().find(|v| !v.is_finite()) {
            return domain(format!("potential value {v} is not finite"));
        }
        Ok(LatticeOperatorSpec { lo, hi, h, shape, xi })
    }

    /// Samples `xi` at the interior nodes.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(lo: Vec<f64>, hi: Vec<f64>, h: f64, xi: F) -> Result<Self> {
        let shape = interior_shape(&lo, &hi, h)?;
        let n: usize = shape.iter().product();
        let spec = LatticeOperatorSpec { lo, hi, h, shape, xi: Vec::new() };
        let mut x = vec![0.0; spec.d()];
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            spec.node_into(i, &mut x);
            values.push(xi(&x));
        }
        Self::new(spec.lo, spec.hi, spec.h, values)
    }

    pub fn zero(lo: Vec<f64>, hi: Vec<f64>, h: f64) -> Result<Self> {
        Self::from_fn(lo, hi, h, |_| 0.0)
    }

    /// `theta·|x − center|^{−p}` as averages over the node cells `x + [−h/2, h/2]^d`
    /// within [`EXACT_CELLS`] cells of `center`, and point values beyond.
    pub fn singular_power(lo: Vec<f64>, hi: Vec<f64>, h: f64, theta: f64, p: f64, center: &[f64]) -> Result<Self> {
        let d = lo.len();
        if center.len() != d {
            return Err(Error::Geometry("center and box dimensions differ".into()));
        }
        if !(p > 0.0 && p < d as f64) {
            return domain(format!("singular potential needs 0 < p < d (got p={p})"));
        }
        let near = EXACT_CELLS as f64 * h;
        Self::from_fn(lo, hi, h, |x| {
            let rel: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
            let inf = rel.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let v = if d == 1 || inf <= near {
                let corner: Vec<f64> = rel.iter().map(|v| v - 0.5 * h).collect();
                cell_power_average(&corner, h, p)
            } else {
                rel.iter().map(|v| v * v).sum::<f64>().powf(-p / 2.0)
            };
            theta * v
        })
    }

    pub fn d(&self) -> usize {
        self.lo.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Coordinates of interior node `i`.
    pub fn node_into(&self, mut i: usize, out: &mut [f64]) {
        for (k, nk) in self.shape.iter().enumerate() {
            out[k] = self.lo[k] + ((i % nk) + 1) as f64 * self.h;
            i /= nk;
        }
    }

    /// Same lattice with `c` added to every potential value.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.lo.clone(), self.hi.clone(), self.h, self.xi.iter().map(|v| v + c).collect())
    }

    /// `y = (½Δ_h + diag ξ) x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let c = 0.5 / (self.h * self.h);
        let d = self.d();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (self.xi[i] - 2.0 * d as f64 * c) * x[i];
        }
        let mut stride = 1;
        for k in 0..d {
            let nk = self.shape[k];
            for i in 0..x.len() {
                let m = (i / stride) % nk;
                if m > 0 {
                    y[i] += c * x[i - stride];
                }
                if m + 1 < nk {
                    y[i] += c * x[i + stride];
                }
            }
            stride *= nk;
        }
    }

    /// Product of discrete sine ground modes, the ξ ≡ 0 eigenvector.
    fn ground_mode(&self) -> Vec<f64> {
        let n = self.len();
        let mut v = vec![1.0; n];
        let mut stride = 1;
        for &nk in &self.shape {
            for (i, vi) in v.iter_mut().enumerate() {
                let m = (i / stride) % nk;
                *vi *= (std::f64::consts::PI * (m + 1) as f64 / (nk + 1) as f64).sin();
            }
            stride *= nk;
        }
        v
    }
}

/// Cells (in ∞-norm) around a singularity that get exact averages.
pub const EXACT_CELLS: usize = 6;

/// Mean of `|x|^{−p}` over the cube `corner + [0, h]^d`, using
/// `(d−p)|x|^{−p} = ∇·(x|x|^{−p})` to reduce to smooth face integrals.
pub fn cell_power_average(corner: &[f64], h: f64, p: f64) -> f64 {
    let d = corner.len();
    let mut total = 0.0;
    for k in 0..d {
        for (s, sign) in [(corner[k] + h, 1.0), (corner[k], -1.0)] {
            if s == 0.0 {
                continue;
            }
            let others: Vec<f64> = (0..d).filter(|&j| j != k).map(|j| corner[j]).collect();
            total += sign * s * face_integral(s, &others, h, p);
        }
    }
    total / ((d as f64 - p) * h.powi(d as i32))
}

/// `∫ (s² + |y|²)^{−p/2} dy` over `y ∈ corner + [0, h]^{m}`, m ≤ 2.
fn face_integral(s: f64, corner: &[f64], h: f64, p: f64) -> f64 {
    let rule = kronrod21_rule();
    let pieces = |a: f64| -> Vec<(f64, f64)> {
        let b = a + h;
        if a < 0.0 && b > 0.0 {
            vec![(a, 0.0), (0.0, b)]
        } else {
            vec![(a, b)]
        }
    };
    let points = |a: f64| -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (lo, hi) in pieces(a) {
            let c = 0.5 * (lo + hi);
            let r = 0.5 * (hi - lo);
            out.extend(rule.iter().map(|(x, w)| (c + r * x, r * w)));
        }
        out
    };
    let s2 = s * s;
    match corner.len() {
        0 => s2.powf(-p / 2.0),
        1 => points(corner[0]).iter().map(|(y, w)| w * (s2 + y * y).powf(-p / 2.0)).sum(),
        _ => {
            let py = points(corner[1]);
            points(corner[0])
                .iter()
                .map(|(y0, w0)| w0 * py.iter().map(|(y1, w1)| w1 * (s2 + y0 * y0 + y1 * y1).powf(-p / 2.0)).sum::<f64>())
                .sum()
        }
    }
}

/// Principal eigenpair of a lattice operator.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    /// Unit-norm (Euclidean) eigenvector on the interior nodes.
    pub vector: Vec<f64>,
}

/// Largest eigenvalue of `½Δ_h + diag ξ` with Dirichlet boundary.
pub fn principal_eigenvalue(spec: &LatticeOperatorSpec) -> Result<f64> {
    Ok(principal_eigenpair(spec)?.value)
}

pub fn principal_eigenpair(spec: &LatticeOperatorSpec) -> Result<Eigenpair> {
    let start = spec.ground_mode();
    let r = top_eigenpair(spec.len(), |x, y| spec.apply(x, y), &start, EIGEN_TOL)?;
    // the ground state has one sign
    let s = r.vector.iter().sum::<f64>().signum();
    Ok(Eigenpair { value: r.value, vector: r.vector.into_iter().map(|v| v * s).collect() })
}

/// Ground Dirichlet energy `λ₁⁰` of −½Δ on a box, from the lattice at mesh `h`.
pub fn ground_energy(lo: &[f64], hi: &[f64], h: f64) -> Result<f64> {
    Ok(-principal_eigenvalue(&LatticeOperatorSpec::zero(lo.to_vec(), hi.to_vec(), h)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn interval(h: f64) -> LatticeOperatorSpec {
        LatticeOperatorSpec::zero(vec![-1.0], vec![1.0], h).unwrap()
    }

    #[test]
    fn free_interval_value() {
        let lam = principal_eigenvalue(&interval(1.0 / 256.0)).unwrap();
        assert!((lam + PI * PI / 8.0).abs() < 1e-3, "{lam}");
        // discrete spectrum: −(1 − cos(πh/2))/h²
        let h: f64 = 1.0 / 256.0;
        assert!((lam + (1.0 - (PI * h / 2.0).cos()) / (h * h)).abs() < 1e-9);
    }

    #[test]
    fn square_separates() {
        let h = 1.0 / 16.0;
        let sq = LatticeOperatorSpec::zero(vec![-1.0, 0.0], vec![1.0, 1.0], h).unwrap();
        let a = principal_eigenvalue(&sq).unwrap();
        let e1 = (1.0 - (PI * h / 2.0).cos()) / (h * h);
        let e2 = (1.0 - (PI * h).cos()) / (h * h);
        assert!((a + e1 + e2).abs() < 1e-9);
    }

    #[test]
    fn shift_covariance() {
        let s = LatticeOperatorSpec::from_fn(vec![-1.0], vec![1.0], 1.0 / 128.0, |x| (3.0 * x[0]).sin()).unwrap();
        let a = principal_eigenvalue(&s).unwrap();
        let b = principal_eigenvalue(&s.shifted(2.5).unwrap()).unwrap();
        assert!((b - a - 2.5).abs() < 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn singular_cell_is_averaged() {
        let s = LatticeOperatorSpec::singular_power(vec![-1.0], vec![1.0], 0.25, 1.0, 0.5, &[0.0]).unwrap();
        // node 3 is at 0; average of |x|^{-1/2} over (−h/2, h/2) is 2·(h/2)^{-1/2}
        assert!((s.xi()[3] - 2.0 * (0.125f64).powf(-0.5)).abs() < 1e-12);
        // over (h/2, 3h/2): 2(√(3h/2) − √(h/2))/h
        assert!((s.xi()[4] - 2.0 * (0.375f64.sqrt() - 0.125f64.sqrt()) / 0.25).abs() < 1e-12);
    }

    #[test]
    fn cube_averages() {
        // square centered at the singularity, p = 1: 8·asinh(1)
        let h = 0.5;
        let v = cell_power_average(&[-0.25, -0.25], h, 1.0);
        assert!((v - 7.050988696156344).abs() < 1e-9, "{v}");
        // cube of side 1 centered, p = 2 (extended-precision face integral)
        let v = cell_power_average(&[-0.5, -0.5, -0.5], 1.0, 2.0);
        assert!((v - 7.674124222443732).abs() < 1e-9, "{v}");
        // off-center square against a direct tensor rule of a smooth integrand
        let v = cell_power_average(&[1.0, 0.5], 0.5, 1.5);
        let n = 400;
        let mut direct = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = 1.0 + (i as f64 + 0.5) * 0.5 / n as f64;
                let y = 0.5 + (j as f64 + 0.5) * 0.5 / n as f64;
                direct += (x * x + y * y).powf(-0.75);
            }
        }
        direct /= (n * n) as f64;
        assert!((v - direct).abs() < 1e-6, "{v} {direct}");
    }

    #[test]
    fn monotone_in_potential_and_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1.0 / 32.0;
        for _ in 0..10 {
            let xi: Vec<f64> = (0..63).map(|_| rng.random_range(-3.0..3.0)).collect();
            let bump: Vec<f64> = xi.iter().map(|v| v + rng.random_range(0.0..1.0)).collect();
            let a = principal_eigenvalue(&LatticeOperatorSpec::new(vec![-1.0], vec![1.0], h, xi.clone()).unwrap()).unwrap();
            let b = principal_eigenvalue(&LatticeOperatorSpec::new(vec![-1.0], vec![1.0], h, bump).unwrap()).unwrap();
            assert!(a <= b + 1e-12);
            // zero extension to (−1, 1.5)
            let mut ext = xi.clone();
            ext.extend((0..16).map(|_| rng.random_range(-3.0..3.0)));
            let c = principal_eigenvalue(&LatticeOperatorSpec::new(vec![-1.0], vec![1.5], h, ext).unwrap()).unwrap();
            assert!(a <= c + 1e-12);
        }
    }
}
