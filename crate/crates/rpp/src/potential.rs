//! The renormalized Riesz potential, its far-field truncations, and the grid
//! functionals ζ_ε, G and F.

use crate::cutoff::{alpha_unchecked, cutoff_radius, kernel_ball_mass, KernelSpec, KernelVariant, ScaleLaw};
use crate::error::{check_renormalizable, domain, Error, Result};
use crate::field::{PoissonSample, Window};
use crate::specfun::{sphere_area, unit_ball_volume};

/// Floor for point distances, as a fraction of the window radius.
pub const R_MIN_FACTOR: f64 = 1e-6;
/// Distances below this are treated as a collision.
pub const COLLISION: f64 = 1e-12;

/// Uniform cell index over the sample's bounding box.
#[derive(Debug, Clone)]
struct CellGrid {
    d: usize,
    lo: Vec<f64>,
    size: f64,
    dims: Vec<usize>,
    starts: Vec<u32>,
    coords: Vec<f64>,
}

impl CellGrid {
    fn new(sample: &PoissonSample, size: f64) -> Self {
        let d = sample.d();
        let (lo, hi) = match sample.window() {
            Window::Box { lo, hi } => (lo.clone(), hi.clone()),
            Window::Ball { center, radius } => (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect()),
        };
        let dims: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (((b - a) / size).ceil() as usize).clamp(1, 4096)).collect();
        let size = lo.iter().zip(&hi).zip(&dims).map(|((a, b), n)| (b - a) / *n as f64).fold(0.0, f64::max);
        let ncell: usize = dims.iter().product();
        let mut keys: Vec<(usize, usize)> = sample.points().enumerate().map(|(i, p)| (Self::cell_of(&lo, size, &dims, p), i)).collect();
        keys.sort_unstable();
        let mut starts = vec![0u32; ncell + 1];
        for (c, _) in &keys {
            starts[c + 1] += 1;
        }
        for c in 0..ncell {
            starts[c + 1] += starts[c];
        }
        let mut coords = Vec::with_capacity(sample.len() * d);
        for (_, i) in &keys {
            coords.extend_from_slice(sample.point(*i));
        }
        CellGrid { d, lo, size, dims, starts, coords }
    }

    fn cell_of(lo: &[f64], size: f64, dims: &[usize], p: &[f64]) -> usize {
        let mut idx = 0;
        for k in (0..lo.len()).rev() {
            let c = (((p[k] - lo[k]) / size).floor().max(0.0) as usize).min(dims[k] - 1);
            idx = idx * dims[k] + c;
        }
        idx
    }

    /// Calls `f(point)` for every point in cells meeting the cube of half-side `r` around `x`.
    #[inline]
    fn for_each_near<F: FnMut(&[f64])>(&self, x: &[f64], r: f64, mut f: F) {
        let d = self.d;
        let mut lo_c = [0usize; 3];
        let mut hi_c = [0usize; 3];
        for k in 0..d {
            let a = ((x[k] - r - self.lo[k]) / self.size).floor();
            let b = ((x[k] + r - self.lo[k]) / self.size).floor();
            if b < 0.0 || a > (self.dims[k] - 1) as f64 {
                return;
            }
            lo_c[k] = a.max(0.0) as usize;
            hi_c[k] = (b as usize).min(self.dims[k] - 1);
        }
        let mut cur = lo_c;
        loop {
            let mut idx = 0;
            for k in (0..d).rev() {
                idx = idx * self.dims[k] + cur[k];
            }
            let (s, e) = (self.starts[idx] as usize, self.starts[idx + 1] as usize);
            for p in self.coords[s * d..e * d].chunks_exact(d) {
                f(p);
            }
            let mut k = 0;
            loop {
                if k == d {
                    return;
                }
                if cur[k] < hi_c[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = lo_c[k];
                k += 1;
            }
        }
    }
}

/// Value of a potential evaluation with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValue {
    pub value: f64,
    /// Standard deviation of the neglected shell beyond the window radius.
    pub tail_std: f64,
    /// Number of contributions evaluated at the floor distance.
    pub floored: u32,
}

/// Truncated compensated kernel sum Σ_{|y−x|≤R} k(y−x) − density·∫_{|z|≤R} k.
#[derive(Debug, Clone)]
pub struct PotentialEvaluator {
    sample: PoissonSample,
    kernel: KernelSpec,
    radius: f64,
    density: f64,
    r_min: f64,
    compensator: f64,
    tail_std: f64,
    grid: CellGrid,
}

/// Standard deviation of the shell beyond R: (density·dω_d R^{d−2p}/(2p−d))^{1/2}.
pub fn tail_std(d: usize, p: f64, radius: f64, density: f64) -> Result<f64> {
    check_renormalizable(d, p)?;
    let df = d as f64;
    Ok((density * sphere_area(d)? * radius.powf(df - 2.0 * p) / (2.0 * p - df)).sqrt())
}

/// Smallest R whose tail std is at most `factor` times the compensator magnitude.
pub fn window_rule_radius(d: usize, p: f64, density: f64, factor: f64) -> Result<f64> {
    check_renormalizable(d, p)?;
    if !(density > 0.0 && factor > 0.0) {
        return domain("density and factor must be positive");
    }
    let df = d as f64;
    let a = sphere_area(d)?;
    // tail_std(R) = sqrt(ρ a/(2p−d)) R^{d/2−p}, compensator = ρ a R^{d−p}/(d−p)
    let c = (density * a / (2.0 * p - df)).sqrt() * (df - p) / (factor * density * a);
    Ok(c.powf(2.0 / df))
}

impl PotentialEvaluator {
    /// Renormalized potential V̄_R with the full kernel |x|^{−p}.
    pub fn new(sample: PoissonSample, p: f64, radius: f64, density: f64) -> Result<Self> {
        let kernel = KernelSpec::full(sample.d(), p)?;
        Self::with_kernel(sample, kernel, radius, density)
    }

    /// Compensated truncated sum for any kernel variant.
    pub fn with_kernel(sample: PoissonSample, kernel: KernelSpec, radius: f64, density: f64) -> Result<Self> {
        if kernel.d() != sample.d() {
            return Err(Error::Geometry("kernel and sample dimensions differ".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return domain(format!("window radius must be positive and finite (got {radius})"));
        }
        if !(density >= 0.0) {
            return domain("density must be nonnegative");
        }
        let compensator = density * kernel_ball_mass(&kernel, radius)?;
        let tail_std = tail_std(kernel.d(), kernel.p(), radius, density)?;
        let grid = CellGrid::new(&sample, radius);
        Ok(PotentialEvaluator { sample, kernel, radius, density, r_min: R_MIN_FACTOR * radius, compensator, tail_std, grid })
    }

    /// Rejects the evaluator when its tail std exceeds `tol`.
    pub fn require_tail_tolerance(self, tol: f64) -> Result<Self> {
        if self.tail_std > tol {
            return Err(Error::Config(format!("tail std {:e} exceeds tolerance {:e}; increase the window radius", self.tail_std, tol)));
        }
        Ok(self)
    }

    pub fn sample(&self) -> &PoissonSample {
        &self.sample
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    /// density·∫_{|z|≤R} k.
    pub fn compensator(&self) -> f64 {
        self.compensator
    }

    pub fn tail_std(&self) -> f64 {
        self.tail_std
    }

    /// Evaluates at `x`, checking the window geometry and collisions.
    pub fn eval(&self, x: &[f64]) -> Result<PotentialValue> {
        if x.len() != self.sample.d() {
            return Err(Error::Geometry("evaluation point has the wrong dimension".into()));
        }
        let depth = self.sample.window().depth(x);
        if depth < self.radius {
            return Err(Error::Geometry(format!("point {x:?} is {depth:e} from the window boundary, need at least R = {:e}", self.radius)));
        }
        let mut collision = false;
        let r2max = self.radius * self.radius;
        self.grid.for_each_near(x, self.radius, |y| {
            let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            if r2 <= r2max && r2.sqrt() < COLLISION {
                collision = true;
            }
        });
        if collision && !matches!(self.kernel.variant(), KernelVariant::Far { .. }) {
            return Err(Error::Singularity(format!("a field point lies within {COLLISION:e} of {x:?}")));
        }
        let (value, floored) = self.eval_unchecked(x);
        Ok(PotentialValue { value, tail_std: self.tail_std, floored })
    }

    /// Evaluates without geometry or collision checks; close points are floored.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> (f64, u32) {
        let r2max = self.radius * self.radius;
        let mut sum = 0.0;
        let mut floored = 0u32;
        self.grid.for_each_near(x, self.radius, |y| {
            let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            if r2 <= r2max {
                let mut r = r2.sqrt();
                if r < self.r_min {
                    r = self.r_min;
                    floored += 1;
                }
                sum += self.kernel.radial_unchecked(r);
            }
        });
        (sum - self.compensator, floored)
    }
}

/// Far-field potential V̄^{(i)}_{a,ε}(x) with the Far kernel truncated at `outer`
/// and compensator density ε.
pub fn far_potential(sample: &PoissonSample, x: &[f64], p: f64, a: f64, eps: f64, law: ScaleLaw, outer: f64) -> Result<f64> {
    let kernel = KernelSpec::far(sample.d(), p, a, eps, law)?;
    let ev = PotentialEvaluator::with_kernel(sample.clone(), kernel, outer, eps)?;
    Ok(ev.eval(x)?.value)
}

/// Real function on the nodes `lo + j·h` of a box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    lo: Vec<f64>,
    h: f64,
    n: Vec<usize>,
    values: Vec<f64>,
    zero_boundary: bool,
}

impl GridFunction {
    /// Samples `f` on the nodes of `[lo, hi]` with mesh `h`; with `zero_boundary`
    /// the outer layer of nodes is set to zero.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(lo: &[f64], hi: &[f64], h: f64, zero_boundary: bool, f: F) -> Result<Self> {
        let d = lo.len();
        if d == 0 || d > 3 || hi.len() != d {
            return Err(Error::Geometry("grid functions support 1 to 3 dimensions".into()));
        }
        if !(h > 0.0) {
            return domain("mesh width must be positive");
        }
        let mut n = Vec::with_capacity(d);
        for k in 0..d {
            let m = ((hi[k] - lo[k]) / h).round();
            if !(m >= 2.0) || ((hi[k] - lo[k]) / h - m).abs() > 1e-6 {
                return Err(Error::Geometry(format!("axis {k}: side {} is not a multiple (>= 2) of h = {h}", hi[k] - lo[k])));
            }
            n.push(m as usize + 1);
        }
        let total: usize = n.iter().product();
        let mut g = GridFunction { lo: lo.to_vec(), h, n, values: vec![0.0; total], zero_boundary };
        let mut x = vec![0.0; d];
        for i in 0..total {
            g.node_into(i, &mut x);
            g.values[i] = if zero_boundary && g.on_boundary(i) { 0.0 } else { f(&x) };
            if !g.values[i].is_finite() {
                return domain(format!("non-finite grid value at {x:?}"));
            }
        }
        Ok(g)
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

    pub fn hi(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.n).map(|(l, n)| l + (*n - 1) as f64 * self.h).collect()
    }

    pub fn shape(&self) -> &[usize] {
        &self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn zero_boundary(&self) -> bool {
        self.zero_boundary
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn multi_index(&self, mut i: usize) -> [usize; 3] {
        let mut m = [0; 3];
        for (k, nk) in self.n.iter().enumerate() {
            m[k] = i % nk;
            i /= nk;
        }
        m
    }

    fn on_boundary(&self, i: usize) -> bool {
        let m = self.multi_index(i);
        self.n.iter().enumerate().any(|(k, nk)| m[k] == 0 || m[k] == nk - 1)
    }

    pub fn node_into(&self, i: usize, out: &mut [f64]) {
        let m = self.multi_index(i);
        for k in 0..self.d() {
            out[k] = self.lo[k] + m[k] as f64 * self.h;
        }
    }

    /// Quadrature weight of each node, h^d.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d() as i32)
    }

    /// ∫ g².
    pub fn norm_sq(&self) -> f64 {
        self.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// ∫ |∇g|² by forward differences between neighbouring nodes.
    pub fn grad_norm_sq(&self) -> f64 {
        let d = self.d();
        let mut s = 0.0;
        let mut stride = 1;
        for k in 0..d {
            for i in 0..self.values.len() {
                let m = self.multi_index(i);
                if m[k] + 1 < self.n[k] {
                    let diff = self.values[i + stride] - self.values[i];
                    s += diff * diff;
                }
            }
            stride *= self.n[k];
        }
        s * self.cell_volume() / (self.h * self.h)
    }

    /// ‖g‖² + ½‖∇g‖², the norm defining the class G_d.
    pub fn gd_norm_sq(&self) -> f64 {
        self.norm_sq() + 0.5 * self.grad_norm_sq()
    }

    /// Scales the values so that `gd_norm_sq` is 1.
    pub fn normalize_gd(&mut self) -> Result<()> {
        let n = self.gd_norm_sq();
        if !(n > 0.0) {
            return domain("cannot normalize the zero function");
        }
        let c = 1.0 / n.sqrt();
        self.values.iter_mut().for_each(|v| *v *= c);
        Ok(())
    }

    /// g ↦ ε^{−1/2} g(ε^{−1/d} ·), realized by shrinking the mesh.
    pub fn rescale(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return domain("eps must be positive");
        }
        let s = eps.powf(1.0 / self.d() as f64);
        let c = eps.powf(-0.5);
        Ok(GridFunction {
            lo: self.lo.iter().map(|v| v * s).collect(),
            h: self.h * s,
            n: self.n.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            zero_boundary: self.zero_boundary,
        })
    }

    /// Nodes with nonzero value, with their weights h^d g².
    fn weighted_nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.d();
        let w0 = self.cell_volume();
        let mut pos = Vec::new();
        let mut w = Vec::new();
        let mut x = vec![0.0; d];
        for (i, v) in self.values.iter().enumerate() {
            if *v != 0.0 {
                self.node_into(i, &mut x);
                pos.extend_from_slice(&x);
                w.push(w0 * v * v);
            }
        }
        (pos, w)
    }
}

/// Which part of the Riesz kernel a grid functional uses.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Part {
    Whole,
    Near(f64),
    Far(f64),
}

/// Discrete kernel between a node of mesh `h` and a point: |y−x|^{−p} truncated at
/// `radius`, with the node's own cell replaced by the average of |·|^{−p} over the
/// ball of equal volume.
#[derive(Debug, Clone, Copy)]
struct CellKernel {
    d: usize,
    p: f64,
    h: f64,
    radius: f64,
    cell_avg: f64,
    part: Part,
}

impl CellKernel {
    fn new(d: usize, p: f64, h: f64, radius: f64, part: Part) -> Result<Self> {
        if !(p < d as f64) {
            return domain("inner Riesz integrals need p < d");
        }
        let df = d as f64;
        let r_eq = h * unit_ball_volume(d)?.powf(-1.0 / df);
        Ok(CellKernel { d, p, h, radius, cell_avg: df / (df - p) * r_eq.powf(-p), part })
    }

    #[inline]
    fn eval(&self, node: &[f64], y: &[f64]) -> f64 {
        let mut r2 = 0.0;
        let mut inf: f64 = 0.0;
        for k in 0..self.d {
            let t = node[k] - y[k];
            r2 += t * t;
            inf = inf.max(t.abs());
        }
        if r2 > self.radius * self.radius {
            return 0.0;
        }
        let r = r2.sqrt();
        let base = if inf <= 0.5 * self.h { self.cell_avg } else { r.powf(-self.p) };
        match self.part {
            Part::Whole => base,
            Part::Near(s) => base * alpha_unchecked(r / s),
            Part::Far(s) => base * (1.0 - alpha_unchecked(r / s)),
        }
    }
}

fn weighted_sum(pos: &[f64], w: &[f64], y: &[f64], k: &CellKernel) -> f64 {
    let d = k.d;
    pos.chunks_exact(d).zip(w).map(|(x, wi)| wi * k.eval(x, y)).sum()
}

/// ∫ g²(y) |y−x|^{−p} dy by node quadrature with the singular-cell correction.
pub fn inner_riesz(g: &GridFunction, x: &[f64], p: f64) -> Result<f64> {
    if x.len() != g.d() {
        return Err(Error::Geometry("point and grid dimensions differ".into()));
    }
    let k = CellKernel::new(g.d(), p, g.h(), f64::INFINITY, Part::Whole)?;
    let (pos, w) = g.weighted_nodes();
    Ok(weighted_sum(&pos, &w, x, &k))
}

fn check_cover(g: &GridFunction, sample: &PoissonSample, radius: f64) -> Result<()> {
    let d = g.d();
    if sample.d() != d {
        return Err(Error::Geometry("grid and sample dimensions differ".into()));
    }
    let lo = g.lo().to_vec();
    let hi = g.hi();
    for c in 0..(1usize << d) {
        let corner: Vec<f64> = (0..d).map(|k| if c >> k & 1 == 1 { hi[k] } else { lo[k] }).collect();
        if sample.window().depth(&corner) < radius {
            return Err(Error::Geometry(format!("sample window does not cover the grid box plus the radius {radius:e}")));
        }
    }
    Ok(())
}

fn grid_functional(
    g: &GridFunction,
    sample: &PoissonSample,
    p: f64,
    density: f64,
    radius: f64,
    part: Part,
    compensator_mass: f64,
) -> Result<f64> {
    check_cover(g, sample, radius)?;
    let k = CellKernel::new(g.d(), p, g.h(), radius, part)?;
    let (pos, w) = g.weighted_nodes();
    let s: f64 = sample.points().map(|y| weighted_sum(&pos, &w, y, &k)).sum();
    Ok(s - density * g.norm_sq() * compensator_mass)
}

/// ζ(g) = Σᵢ ∫g²(y)|y−yᵢ|^{−p}1{|y−yᵢ|≤R}dy − density·‖g‖²·∫_{|z|≤R}|z|^{−p},
/// summed point by point.
pub fn zeta_epsilon(g: &GridFunction, sample: &PoissonSample, p: f64, density: f64, radius: f64) -> Result<f64> {
    check_renormalizable(g.d(), p)?;
    let mass = kernel_ball_mass(&KernelSpec::full(g.d(), p)?, radius)?;
    grid_functional(g, sample, p, density, radius, Part::Whole, mass)
}

/// The same functional summed node by node: ∫ g²(x) V̄_R(x) dx.
pub fn zeta_epsilon_kernel_first(g: &GridFunction, sample: &PoissonSample, p: f64, density: f64, radius: f64) -> Result<f64> {
    check_renormalizable(g.d(), p)?;
    check_cover(g, sample, radius)?;
    let mass = kernel_ball_mass(&KernelSpec::full(g.d(), p)?, radius)?;
    let k = CellKernel::new(g.d(), p, g.h(), radius, Part::Whole)?;
    let (pos, w) = g.weighted_nodes();
    let d = g.d();
    let mut total = 0.0;
    for (x, wi) in pos.chunks_exact(d).zip(&w) {
        let v: f64 = sample.points().map(|y| k.eval(x, y)).sum::<f64>() - density * mass;
        total += wi * v;
    }
    Ok(total)
}

/// The pair (G, F): ζ with the kernel split by α at the cutoff radius of `(a, ε, law)`.
pub fn split_functionals(
    g: &GridFunction,
    sample: &PoissonSample,
    p: f64,
    eps: f64,
    a: f64,
    law: ScaleLaw,
    radius: f64,
) -> Result<(f64, f64)> {
    let d = g.d();
    let s = cutoff_radius(d, p, a, eps, law)?;
    let near = kernel_ball_mass(&KernelSpec::near(d, p, a, eps, law)?, radius)?;
    let far = kernel_ball_mass(&KernelSpec::far(d, p, a, eps, law)?, radius)?;
    let gv = grid_functional(g, sample, p, eps, radius, Part::Near(s), near)?;
    let fv = grid_functional(g, sample, p, eps, radius, Part::Far(s), far)?;
    Ok((gv, fv))
}

/// Point profile f(x) = ∫ g²(y)|y−x|^{−p}1{|y−x|≤R} dy with the discrete kernel of
/// `zeta_epsilon`, so that ζ = Σᵢ f(yᵢ) − density·‖g‖²·∫_{|z|≤R}|z|^{−p}.
pub fn zeta_profile(g: &GridFunction, p: f64, radius: f64, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_renormalizable(g.d(), p)?;
    if xs.iter().any(|x| x.len() != g.d()) {
        return Err(Error::Geometry("point and grid dimensions differ".into()));
    }
    let k = CellKernel::new(g.d(), p, g.h(), radius, Part::Whole)?;
    let (pos, w) = g.weighted_nodes();
    Ok(xs.iter().map(|x| weighted_sum(&pos, &w, x, &k)).collect())
}

/// max over grid nodes of |Σᵢ L_h(x, yᵢ) − ε∫_{|z|≤R} L|, the far potential seen by
/// the grid functional F.
pub fn far_potential_sup_on_grid(
    g: &GridFunction,
    sample: &PoissonSample,
    p: f64,
    eps: f64,
    a: f64,
    law: ScaleLaw,
    radius: f64,
) -> Result<f64> {
    let d = g.d();
    check_cover(g, sample, radius)?;
    let s = cutoff_radius(d, p, a, eps, law)?;
    let far = kernel_ball_mass(&KernelSpec::far(d, p, a, eps, law)?, radius)?;
    let k = CellKernel::new(d, p, g.h(), radius, Part::Far(s))?;
    let mut x = vec![0.0; d];
    let mut sup: f64 = 0.0;
    for i in 0..g.len() {
        if g.values()[i] == 0.0 {
            continue;
        }
        g.node_into(i, &mut x);
        let v: f64 = sample.points().map(|y| k.eval(&x, y)).sum::<f64>() - eps * far;
        sup = sup.max(v.abs());
    }
    Ok(sup)
}
