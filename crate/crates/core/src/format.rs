//! Shortest round-trip formatting for emitted floats.

/// Format `x` with the fewest digits that parse back to the same `f64`.
/// Very large or very small magnitudes switch to exponent notation.
pub fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
