//! Decimal formatting for real values in text files and reports.
//!
//! All real values written to text artifacts carry 17 significant digits,
//! which round-trips 64-bit floating point exactly.

/// Formats `v` with 17 significant digits.
///
/// Values of ordinary magnitude use positional notation; extreme magnitudes
/// fall back to scientific notation. `parse::<f64>()` of the result equals
/// `v` exactly (including sign of zero being dropped: `-0.0` prints `0`).
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        format!("{:.*}", decimals, v)
    } else {
        format!("{:.16e}", v)
    }
}
