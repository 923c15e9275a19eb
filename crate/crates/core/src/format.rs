//! Locale-free number formatting for CSV and console output.

/// `x` rounded to 12 significant digits, printed in shortest round-trip form
/// (`4.0`, `1.15470053838`, `1e-13`).
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded:?}")
}
