use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge (value {value:e}, error {abs_err:e}, last bracket [{lo:e}, {hi:e}])")]
    Convergence { what: &'static str, value: f64, abs_err: f64, lo: f64, hi: f64 },

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

/// Checks the renormalizable range `d/2 < p < d`.
pub(crate) fn check_renormalizable(d: usize, p: f64) -> Result<()> {
    let df = d as f64;
    if d == 0 {
        return domain("dimension must be at least 1");
    }
    if !(p > df / 2.0 && p < df) {
        return domain(format!("p must satisfy d/2 < p < d (got d={d}, p={p})"));
    }
    Ok(())
}

/// Checks `0 < p < min(2, d)`, where the Hardy-type best constants are finite.
/// The renormalization condition `p > d/2` is not needed for them.
pub(crate) fn check_hardy_range(d: usize, p: f64) -> Result<()> {
    if d == 0 {
        return domain("dimension must be at least 1");
    }
    if !(p > 0.0 && p < 2.0 && p < d as f64) {
        return domain(format!("p must satisfy 0 < p < min(2, d) (got d={d}, p={p})"));
    }
    Ok(())
}
