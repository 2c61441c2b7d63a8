//! Law of the maximal Poisson count over N cells.

use crate::error::{domain, Result};
use crate::field::max_count_tail;
use crate::rng::{par_indexed, stream};
use crate::specfun::unit_ball_volume;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// Median of the maximum of `n` independent Poisson(μ) counts: the largest `k`
/// with `P{M ≥ k} ≥ 1/2`.
pub fn max_count_median(n: u64, mu: f64) -> Result<u64> {
    if !(mu > 0.0) {
        return domain("Poisson mean must be positive");
    }
    let mut hi = 1u64;
    while max_count_tail(n, mu, hi)? >= 0.5 {
        hi *= 2;
    }
    let mut lo = 0u64;
    // P{M ≥ lo} ≥ 1/2 > P{M ≥ hi}
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if max_count_tail(n, mu, mid)? >= 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxCountRow {
    pub t: f64,
    pub n_cells: u64,
    pub median: u64,
    /// `(log log t / log t) · median`.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCountTable {
    pub d: usize,
    pub delta: f64,
    pub mu: f64,
    /// The limit of the normalized median; reported, not asserted.
    pub limit: f64,
    pub rows: Vec<MaxCountRow>,
}

/// For each `t`: the exact median of the maximum over `N = ⌊t^d⌋` cells of
/// independent Poisson(ω_d δ^d) counts and its normalization.
pub fn max_count_law_table(ts: &[f64], delta: f64, d: usize) -> Result<MaxCountTable> {
    if !(delta > 0.0) {
        return domain("delta must be positive");
    }
    let mu = unit_ball_volume(d)? * delta.powi(d as i32);
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        if !(t >= std::f64::consts::E.powf(std::f64::consts::E)) {
            return domain(format!("t must be at least e^e (got {t})"));
        }
        let cells = t.powi(d as i32);
        if !(cells < u64::MAX as f64) {
            return domain(format!("t^d overflows the cell count (t = {t})"));
        }
        let n_cells = cells.floor() as u64;
        let median = max_count_median(n_cells, mu)?;
        rows.push(MaxCountRow { t, n_cells, median, normalized: t.ln().ln() / t.ln() * median as f64 });
    }
    Ok(MaxCountTable { d, delta, mu, limit: d as f64, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxCountSpot {
    pub n_cells: u64,
    pub mu: f64,
    pub k: u64,
    pub reps: u64,
    pub hits: u64,
    pub frequency: f64,
    pub exact: f64,
    pub z: f64,
}

/// Frequency of `{max of n Poisson(μ) counts ≥ k}` over `reps` brute-force draws,
/// against the exact probability.
pub fn max_count_spot_check(n: u64, mu: f64, k: u64, reps: u64, seed: u64) -> Result<MaxCountSpot> {
    if reps == 0 || n == 0 {
        return domain("need n >= 1 and reps >= 1");
    }
    let dist = Poisson::new(mu).map_err(|e| crate::error::Error::Domain(e.to_string()))?;
    let exact = max_count_tail(n, mu, k)?;
    let hit = par_indexed(reps, |i| {
        let mut rng = stream(seed, i);
        (0..n).any(|_| dist.sample(&mut rng) as u64 >= k)
    });
    let hits = hit.iter().filter(|h| **h).count() as u64;
    let frequency = hits as f64 / reps as f64;
    let sd = (exact * (1.0 - exact) / reps as f64).sqrt();
    let z = if sd > 0.0 {
        (frequency - exact) / sd
    } else if frequency == exact {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(MaxCountSpot { n_cells: n, mu, k, reps, hits, frequency, exact, z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::poisson_tail_exact;

    #[test]
    fn median_single_cell() {
        // one Poisson(μ): median from the cdf directly
        for mu in [0.3, 2.0, 7.5] {
            let m = max_count_median(1, mu).unwrap();
            assert!(poisson_tail_exact(mu, m).unwrap() >= 0.5);
            assert!(poisson_tail_exact(mu, m + 1).unwrap() < 0.5);
        }
    }

    #[test]
    fn table_is_nondecreasing_in_t() {
        let t = max_count_law_table(&[20.0, 1e2, 1e3, 1e4, 1e6], 1.0, 3).unwrap();
        assert!(t.rows.windows(2).all(|w| w[1].median >= w[0].median));
        assert_eq!(t.rows[2].n_cells, 1_000_000_000);
        assert!(max_count_law_table(&[10.0], 1.0, 3).is_err());
    }

    #[test]
    fn spot_check_agrees() {
        let m = max_count_median(10_000, 4.0).unwrap();
        let s = max_count_spot_check(10_000, 4.0, m, 300, 5).unwrap();
        assert!(s.z.abs() < 4.0, "{s:?}");
    }
}
