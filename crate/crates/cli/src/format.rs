//! Number formatting for text and CSV output. JSON keeps full precision.

/// Six significant digits, positional where sensible.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NA".into() } else if x > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn opt6(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_digits() {
        assert_eq!(sig6(0.547_247_418), "0.547247");
        assert_eq!(sig6(7.124_1), "7.12410");
        assert_eq!(sig6(315.54), "315.540");
        assert_eq!(sig6(-19.912_3), "-19.9123");
        assert_eq!(sig6(123_456.7), "123457");
        assert_eq!(sig6(1.5e-7), "1.50000e-7");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(f64::NAN), "NA");
    }
}
