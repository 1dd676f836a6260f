//! Unit handling shared by the file formats and the command line.
//!
//! Values written to text files pass through decimal strings. Scaling by a
//! power of ten is done on the decimal exponent instead of by floating point
//! multiplication, so `nm -> m -> nm` and `GHz -> Hz -> GHz` round trips are
//! exact.

use std::fmt;

/// Multiplies the decimal number `text` by `10^shift` without rounding the
/// intermediate value. Returns `None` when `text` is not a number.
pub fn parse_scaled(text: &str, shift: i32) -> Option<f64> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    // Reject things like "inf" or "nan"; files only carry finite decimals.
    if !mantissa
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '.' | '+' | '-'))
    {
        return None;
    }
    format!("{}e{}", mantissa, exponent + shift).parse::<f64>().ok()
}

/// Shortest decimal representation of `value · 10^shift` that parses back
/// (through [`parse_scaled`] with `-shift`) to exactly `value`.
pub fn format_scaled(value: f64, shift: i32) -> String {
    let sci = format!("{:e}", value);
    let (mantissa, exponent) = sci.split_once('e').expect("`{:e}` always has an exponent");
    let exponent: i32 = exponent.parse().expect("exponent is an integer");
    let exponent = exponent + shift;
    if exponent == 0 {
        mantissa.to_string()
    } else {
        format!("{}e{}", mantissa, exponent)
    }
}

/// Frequency unit used by Touchstone option lines and CLI suffixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FrequencyUnit {
    pub fn decimal_exponent(self) -> i32 {
        match self {
            FrequencyUnit::Hz => 0,
            FrequencyUnit::KHz => 3,
            FrequencyUnit::MHz => 6,
            FrequencyUnit::GHz => 9,
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token.to_ascii_uppercase().as_str() {
            "HZ" => Some(FrequencyUnit::Hz),
            "KHZ" => Some(FrequencyUnit::KHz),
            "MHZ" => Some(FrequencyUnit::MHz),
            "GHZ" => Some(FrequencyUnit::GHz),
            _ => None,
        }
    }
}

impl fmt::Display for FrequencyUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FrequencyUnit::Hz => "HZ",
            FrequencyUnit::KHz => "KHZ",
            FrequencyUnit::MHz => "MHZ",
            FrequencyUnit::GHz => "GHZ",
        };
        f.write_str(s)
    }
}

/// Parses a frequency such as `13.3GHz`, `500 MHz` or `1.2e10`. Bare numbers
/// are interpreted in `default_unit`.
pub fn parse_frequency(text: &str, default_unit: FrequencyUnit) -> Option<f64> {
    let text = text.trim();
    let split = text
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_alphabetic())
        .last()
        .map(|(i, _)| i);
    let (number, unit) = match split {
        // A trailing "e" alone belongs to the number only when followed by
        // digits, so any alphabetic tail here is a unit token.
        Some(i) => (&text[..i], FrequencyUnit::from_token(&text[i..])?),
        None => (text, default_unit),
    };
    let value = parse_scaled(number.trim(), unit.decimal_exponent())?;
    (value.is_finite() && value > 0.0).then_some(value)
}

/// Formats a value with 17 significant digits, the precision used for every
/// numeric CSV column.
pub fn fmt17(value: f64) -> String {
    format!("{:.16e}", value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_round_trip_is_exact() {
        for &t in &[240e-9, 250e-9, 160e-9, 1.0 / 3.0 * 1e-7, 123.456e-9, 5e-324] {
            let nm = format_scaled(t, 9);
            assert_eq!(parse_scaled(&nm, -9), Some(t), "{t} via {nm}");
        }
        for &f in &[13.3e9, 12_812_345_678.9, 4.9e9, 0.1 + 0.2] {
            let ghz = format_scaled(f, -9);
            assert_eq!(parse_scaled(&ghz, 9), Some(f));
        }
    }

    #[test]
    fn parse_scaled_shifts_decimal_point() {
        assert_eq!(parse_scaled("13.3", 9), Some(13.3e9));
        assert_eq!(parse_scaled("1.5e-3", 3), Some(1.5));
        assert_eq!(parse_scaled("-2", 0), Some(-2.0));
        assert_eq!(parse_scaled("abc", 0), None);
        assert_eq!(parse_scaled("inf", 0), None);
        assert_eq!(parse_scaled("", 0), None);
    }

    #[test]
    fn frequency_suffixes() {
        assert_eq!(parse_frequency("13GHz", FrequencyUnit::Hz), Some(13e9));
        assert_eq!(parse_frequency("500 MHz", FrequencyUnit::Hz), Some(500e6));
        assert_eq!(parse_frequency("2.5khz", FrequencyUnit::Hz), Some(2500.0));
        assert_eq!(parse_frequency("13", FrequencyUnit::GHz), Some(13e9));
        assert_eq!(parse_frequency("1.2e10", FrequencyUnit::Hz), Some(1.2e10));
        assert_eq!(parse_frequency("1.2e1GHz", FrequencyUnit::Hz), Some(12e9));
        assert_eq!(parse_frequency("-1", FrequencyUnit::Hz), None);
        assert_eq!(parse_frequency("10 parsecs", FrequencyUnit::Hz), None);
    }
}
