//! Number formatting shared by the CSV writers.

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn f17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}
