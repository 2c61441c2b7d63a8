//! Largest eigenpair of a symmetric operator by restarted Lanczos with full
//! reorthogonalization.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TopEigen {
    pub value: f64,
    pub vector: Vec<f64>,
    pub matvecs: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Number of eigenvalues of the symmetric tridiagonal (a, b) strictly below x.
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = a[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..a.len() {
        let denom = if q == 0.0 { f64::EPSILON * (b[i - 1].abs() + 1e-300) } else { q };
        q = a[i] - x - b[i - 1] * b[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of a symmetric tridiagonal matrix by bisection.
pub(crate) fn tridiag_top_value(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < k { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * scale {
            break;
        }
        if sturm_count(a, b, mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves a tridiagonal system with partial pivoting.
fn solve_tridiag(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut dl = sub.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    let norm = diag.iter().chain(sub).chain(sup).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let tiny = f64::EPSILON * norm;
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            b[i + 1] -= f * b[i];
            dl[i] = 0.0;
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du2[i];
            }
            du[i] = tmp;
            b.swap(i, i + 1);
            b[i + 1] -= f * b[i];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    if n >= 2 {
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    x
}

/// Eigenvector of the tridiagonal (a, b) for the eigenvalue `theta`, by inverse iteration.
pub(crate) fn tridiag_vector(a: &[f64], b: &[f64], theta: f64) -> Vec<f64> {
    let k = a.len();
    if k == 1 {
        return vec![1.0];
    }
    let diag: Vec<f64> = a.iter().map(|v| v - theta).collect();
    let mut y = vec![1.0; k];
    for _ in 0..3 {
        y = solve_tridiag(b, &diag, b, &y);
        normalize(&mut y);
    }
    y
}

/// Largest eigenpair of the symmetric operator `apply` on R^n.
///
/// Converges when the Ritz residual `β_j |y_j|` falls below `tol·max(1, |θ|)`.
pub fn top_eigenpair<A>(n: usize, apply: A, start: &[f64], tol: f64) -> Result<TopEigen>
where
    A: Fn(&[f64], &mut [f64]),
{
    let m_max = n.min(300);
    let max_restarts = 200;
    let mut x = start.to_vec();
    if normalize(&mut x) == 0.0 {
        x = vec![1.0 / (n as f64).sqrt(); n];
    }
    let mut matvecs = 0;
    let mut last = (f64::NAN, f64::NAN);
    for _ in 0..max_restarts {
        let mut q: Vec<Vec<f64>> = vec![x.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![0.0; n];
        loop {
            let j = alpha.len();
            apply(&q[j], &mut w);
            matvecs += 1;
            let a = dot(&q[j], &w);
            alpha.push(a);
            for (i, wi) in w.iter_mut().enumerate() {
                *wi -= a * q[j][i];
                if j > 0 {
                    *wi -= beta[j - 1] * q[j - 1][i];
                }
            }
            for _ in 0..2 {
                for qi in &q {
                    let c = dot(qi, &w);
                    for (wk, qk) in w.iter_mut().zip(qi) {
                        *wk -= c * qk;
                    }
                }
            }
            let b = dot(&w, &w).sqrt();
            let k = alpha.len();
            let check = k.is_multiple_of(5) || k == m_max || b == 0.0 || k == n;
            if check {
                let theta = tridiag_top_value(&alpha, &beta);
                let y = tridiag_vector(&alpha, &beta, theta);
                let resid = b * y[k - 1].abs();
                last = (theta, resid);
                let done = resid <= tol * theta.abs().max(1.0) || b <= f64::EPSILON * theta.abs().max(1.0) || k == n;
                if done || k == m_max {
                    let mut v = vec![0.0; n];
                    for (yi, qi) in y.iter().zip(&q) {
                        for (vk, qk) in v.iter_mut().zip(qi) {
                            *vk += yi * qk;
                        }
                    }
                    normalize(&mut v);
                    if done {
                        return Ok(TopEigen { value: theta, vector: v, matvecs });
                    }
                    x = v;
                    break;
                }
            }
            beta.push(b);
            let mut next = w.clone();
            next.iter_mut().for_each(|v| *v /= b);
            q.push(next);
        }
    }
    Err(Error::Convergence { what: "Lanczos eigen-solve", value: last.0, abs_err: last.1, lo: last.0 - last.1, hi: last.0 + last.1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_pieces() {
        // 1D Dirichlet Laplacian: eigenvalues 2 − 2cos(kπ/(n+1))
        let n = 40;
        let a = vec![2.0; n];
        let b = vec![-1.0; n - 1];
        let top = tridiag_top_value(&a, &b);
        let exact = 2.0 - 2.0 * (n as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((top - exact).abs() < 1e-12);
        let v = tridiag_vector(&a, &b, top);
        for i in 0..n {
            let s = ((i + 1) as f64 * n as f64 * std::f64::consts::PI / (n as f64 + 1.0)).sin();
            let s0 = (n as f64 * std::f64::consts::PI / (n as f64 + 1.0)).sin();
            assert!((v[i] / v[0] - s / s0).abs() < 1e-8);
        }
    }

    #[test]
    fn pivoted_solver() {
        let sub = [1.0, 3.0, -2.0];
        let diag = [1e-20, 4.0, 0.5, 2.0];
        let sup = [2.0, -1.0, 1.0];
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let mut rhs = [0.0; 4];
        for i in 0..4 {
            rhs[i] = diag[i] * x_true[i];
            if i > 0 {
                rhs[i] += sub[i - 1] * x_true[i - 1];
            }
            if i < 3 {
                rhs[i] += sup[i] * x_true[i + 1];
            }
        }
        let x = solve_tridiag(&sub, &diag, &sup, &rhs);
        for i in 0..4 {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lanczos_diagonal() {
        let d: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin()).collect();
        let top = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let r = top_eigenpair(500, |x, y| y.iter_mut().zip(x).zip(&d).for_each(|((yi, xi), di)| *yi = di * xi), &vec![1.0; 500], 1e-11)
            .unwrap();
        assert!((r.value - top).abs() < 1e-9);
    }
}
