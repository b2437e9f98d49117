//! Fixed-notation number formatting with a given count of significant
//! digits, used for every CSV the tool writes.

/// Significant digits for dB levels, angles and delays.
pub const LEVEL_DIGITS: usize = 9;
/// Significant digits for raw complex samples; enough to round-trip f64.
pub const RAW_DIGITS: usize = 17;

/// `x` in fixed notation with `digits` significant digits.
pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let digits = digits.max(1);
    if x == 0.0 {
        return format!("{:.*}", digits - 1, 0.0);
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{:.*}", decimals, x)
}

pub fn level(x: f64) -> String {
    sig(x, LEVEL_DIGITS)
}

pub fn raw(x: f64) -> String {
    sig(x, RAW_DIGITS)
}
