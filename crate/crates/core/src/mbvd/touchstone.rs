//! Version 1 two-port Touchstone files.
//!
//! Grammar accepted:
//!
//! * `!` starts a comment that runs to the end of the line.
//! * The option line `# <unit> <parameter> <format> R <z0>` must precede the
//!   data. Tokens are case-insensitive and may appear in any order; missing
//!   tokens take the version 1 defaults (`GHZ S MA R 50`). Only `S`
//!   parameters are supported. Later option lines are ignored.
//! * Each record is nine numbers, `f S11 S21 S12 S22`, with every parameter
//!   written as a pair in the selected format. A record may span several
//!   lines.
//!
//! Frequencies are scaled between the file unit and Hz on the decimal
//! exponent, so they round trip exactly.

use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::units::{format_scaled, parse_scaled, FrequencyUnit};

/// Two-port matrix `[[p11, p12], [p21, p22]]`.
pub type Matrix2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// Real and imaginary parts.
    Ri,
    /// Linear magnitude and angle in degrees.
    Ma,
    /// Magnitude in dB (`20·log10`) and angle in degrees.
    Db,
}

impl DataFormat {
    fn from_token(token: &str) -> Option<Self> {
        match token.to_ascii_uppercase().as_str() {
            "RI" => Some(DataFormat::Ri),
            "MA" => Some(DataFormat::Ma),
            "DB" => Some(DataFormat::Db),
            _ => None,
        }
    }

    fn decode(self, x: f64, y: f64) -> Complex64 {
        match self {
            DataFormat::Ri => Complex64::new(x, y),
            DataFormat::Ma => Complex64::from_polar(x, y.to_radians()),
            DataFormat::Db => Complex64::from_polar(10f64.powf(x / 20.0), y.to_radians()),
        }
    }

    fn encode(self, s: Complex64) -> (f64, f64) {
        match self {
            DataFormat::Ri => (s.re, s.im),
            DataFormat::Ma => (s.norm(), s.arg().to_degrees()),
            DataFormat::Db => (20.0 * s.norm().max(DB_FLOOR).log10(), s.arg().to_degrees()),
        }
    }
}

/// Smallest magnitude written in DB format; an exact zero is written as
/// this value (-6000 dB).
const DB_FLOOR: f64 = 1e-300;

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::Ri => "RI",
            DataFormat::Ma => "MA",
            DataFormat::Db => "DB",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TouchstoneData {
    /// Hz, strictly increasing.
    pub frequencies: Vec<f64>,
    pub s: Vec<Matrix2>,
    /// Reference impedance, Ω.
    pub z0: f64,
    pub unit: FrequencyUnit,
    pub format: DataFormat,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TouchstoneError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing option line")]
    MissingOptionLine,
    #[error("invalid data: {0}")]
    Invalid(String),
}

fn syntax(line: usize, message: impl Into<String>) -> TouchstoneError {
    TouchstoneError::Syntax {
        line,
        message: message.into(),
    }
}

struct Options {
    unit: FrequencyUnit,
    format: DataFormat,
    z0: f64,
}

fn parse_options(body: &str, line: usize) -> Result<Options, TouchstoneError> {
    let mut opts = Options {
        unit: FrequencyUnit::GHz,
        format: DataFormat::Ma,
        z0: 50.0,
    };
    let mut tokens = body.split_whitespace();
    while let Some(tok) = tokens.next() {
        if let Some(unit) = FrequencyUnit::from_token(tok) {
            opts.unit = unit;
        } else if let Some(format) = DataFormat::from_token(tok) {
            opts.format = format;
        } else if tok.eq_ignore_ascii_case("S") {
        } else if tok.eq_ignore_ascii_case("R") {
            let value = tokens
                .next()
                .ok_or_else(|| syntax(line, "option `R` needs a reference impedance"))?;
            opts.z0 = value
                .parse::<f64>()
                .ok()
                .filter(|z| z.is_finite() && *z > 0.0)
                .ok_or_else(|| syntax(line, format!("invalid reference impedance `{value}`")))?;
        } else if ["Y", "Z", "H", "G"].iter().any(|p| tok.eq_ignore_ascii_case(p)) {
            return Err(syntax(line, format!("unsupported parameter type `{tok}`")));
        } else {
            return Err(syntax(line, format!("unknown option `{tok}`")));
        }
    }
    Ok(opts)
}

/// Parses a version 1 `.s2p` document.
pub fn parse_touchstone(text: &str) -> Result<TouchstoneData, TouchstoneError> {
    let mut options: Option<Options> = None;
    // (line number, token) of every numeric token after the option line.
    let mut pending: Vec<(usize, f64)> = Vec::with_capacity(9);
    let mut frequencies = Vec::new();
    let mut s = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('!').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(body) = content.strip_prefix('#') {
            if options.is_none() {
                options = Some(parse_options(body, line_no)?);
            }
            continue;
        }
        let Some(opts) = options.as_ref() else {
            return Err(syntax(line_no, "data before the option line"));
        };
        for (col, tok) in content.split_whitespace().enumerate() {
            let is_frequency = pending.is_empty();
            if is_frequency && col > 0 {
                return Err(syntax(line_no, "wrong column count: record has more than 9 values"));
            }
            let value = if is_frequency {
                parse_scaled(tok, opts.unit.decimal_exponent())
            } else {
                tok.parse::<f64>().ok().filter(|v| v.is_finite())
            };
            let value = value.ok_or_else(|| syntax(line_no, format!("invalid number `{tok}`")))?;
            pending.push((line_no, value));
            if pending.len() == 9 {
                let (f_line, f) = pending[0];
                if !(f.is_finite() && f >= 0.0) {
                    return Err(syntax(f_line, format!("invalid frequency `{f}`")));
                }
                if let Some(&prev) = frequencies.last() {
                    if !(f > prev) {
                        return Err(syntax(f_line, "frequencies must be strictly increasing"));
                    }
                }
                let v: Vec<f64> = pending.iter().map(|(_, v)| *v).collect();
                let p = |k: usize| opts.format.decode(v[1 + 2 * k], v[2 + 2 * k]);
                // Column order S11, S21, S12, S22.
                s.push([[p(0), p(2)], [p(1), p(3)]]);
                frequencies.push(f);
                pending.clear();
            }
        }
    }

    let Some(opts) = options else {
        return Err(TouchstoneError::MissingOptionLine);
    };
    if let Some(&(line, _)) = pending.last() {
        return Err(syntax(
            line,
            format!(
                "wrong column count: record starting on line {} has {} of 9 values",
                pending[0].0,
                pending.len()
            ),
        ));
    }
    if frequencies.is_empty() {
        return Err(TouchstoneError::Invalid("no data records".into()));
    }
    Ok(TouchstoneData {
        frequencies,
        s,
        z0: opts.z0,
        unit: opts.unit,
        format: opts.format,
    })
}

/// Writes `data` in its own unit and format, one record per line.
pub fn emit_touchstone(data: &TouchstoneData) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "! two-port S-parameters");
    let _ = writeln!(out, "# {} S {} R {}", data.unit, data.format, data.z0);
    let shift = -data.unit.decimal_exponent();
    for (f, m) in data.frequencies.iter().zip(&data.s) {
        out.push_str(&format_scaled(*f, shift));
        for p in [m[0][0], m[1][0], m[0][1], m[1][1]] {
            let (x, y) = data.format.encode(p);
            let _ = write!(out, " {x:e} {y:e}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: fn(f64, f64) -> Complex64 = Complex64::new;

    #[test]
    fn single_ri_record() {
        let d = parse_touchstone("# GHZ S RI R 50\n13.0 0.1 0.0 0.9 0.0 0.9 0.0 0.1 0.0\n").unwrap();
        assert_eq!(d.frequencies, vec![13.0e9]);
        assert_eq!(d.s[0][1][0], C(0.9, 0.0));
        assert_eq!(d.s[0][0][0], C(0.1, 0.0));
        assert_eq!(d.z0, 50.0);
        assert_eq!(d.format, DataFormat::Ri);
    }

    #[test]
    fn db_zero_is_unity() {
        let d = parse_touchstone("# hz s db r 75\n1 0 0 0 0 0 0 0 0\n").unwrap();
        for row in d.s[0] {
            for p in row {
                assert_eq!(p, C(1.0, 0.0));
            }
        }
        assert_eq!(d.z0, 75.0);
        assert_eq!(d.frequencies, vec![1.0]);
    }

    #[test]
    fn ma_angle_and_defaults() {
        let d = parse_touchstone("#\n1 2 90 1 0 1 0 1 180\n").unwrap();
        assert_eq!(d.unit, FrequencyUnit::GHz);
        assert_eq!(d.format, DataFormat::Ma);
        assert!((d.s[0][0][0] - C(0.0, 2.0)).norm() < 1e-15);
        assert!((d.s[0][1][1] - C(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn multiline_records_and_comments() {
        let text = "! header\n# MHZ S RI R 50 ! trailing\n100 1 2\n 3 4 5 6 7 8\n200 1 2 3 4 5 6 7 8\n";
        let d = parse_touchstone(text).unwrap();
        assert_eq!(d.frequencies, vec![100e6, 200e6]);
        assert_eq!(d.s[0][1][1], C(7.0, 8.0));
        assert_eq!(d.s[0][0][1], C(5.0, 6.0));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let missing = parse_touchstone("1 0 0 0 0 0 0 0 0\n").unwrap_err();
        assert_eq!(missing.to_string(), "line 1: data before the option line");
        assert_eq!(parse_touchstone("! nothing\n").unwrap_err(), TouchstoneError::MissingOptionLine);
        let truncated = parse_touchstone("# GHZ S RI R 50\n1 0 0 0 0 0 0 0 0\n2 0 0 0\n").unwrap_err();
        assert!(matches!(truncated, TouchstoneError::Syntax { line: 3, .. }), "{truncated}");
        let order = parse_touchstone("# GHZ S RI R 50\n2 0 0 0 0 0 0 0 0\n1 0 0 0 0 0 0 0 0\n").unwrap_err();
        assert!(matches!(order, TouchstoneError::Syntax { line: 3, .. }));
        let long = parse_touchstone("# GHZ S RI R 50\n1 0 0 0 0 0 0 0 0 0\n").unwrap_err();
        assert!(matches!(long, TouchstoneError::Syntax { line: 2, .. }));
        let bad = parse_touchstone("# GHZ S RI R 50\n1 0 0 x 0 0 0 0 0\n").unwrap_err();
        assert!(matches!(bad, TouchstoneError::Syntax { line: 2, .. }));
        let ptype = parse_touchstone("# GHZ Y RI R 50\n").unwrap_err();
        assert!(matches!(ptype, TouchstoneError::Syntax { line: 1, .. }));
    }

    #[test]
    fn db_zero_is_written_finite() {
        let z = Complex64::new(0.0, 0.0);
        let (db, _) = DataFormat::Db.encode(z);
        assert_eq!(db, -6000.0);
        assert!(DataFormat::Db.decode(db, 0.0).norm() <= 1e-299);
    }

    #[test]
    fn emit_parse_round_trip() {
        let s = [[C(0.1, -0.2), C(0.7, 0.3)], [C(0.7, 0.3), C(-0.05, 1e-9)]];
        for unit in [FrequencyUnit::Hz, FrequencyUnit::KHz, FrequencyUnit::MHz, FrequencyUnit::GHz] {
            for format in [DataFormat::Ri, DataFormat::Ma, DataFormat::Db] {
                let data = TouchstoneData {
                    frequencies: vec![12.5e9, 12.5e9 + 1.0 / 3.0, 13.3e9],
                    s: vec![s; 3],
                    z0: 50.0,
                    unit,
                    format,
                };
                let back = parse_touchstone(&emit_touchstone(&data)).unwrap();
                assert_eq!(back.frequencies, data.frequencies);
                assert_eq!((back.unit, back.format, back.z0), (unit, format, 50.0));
                for (a, b) in back.s.iter().zip(&data.s) {
                    for i in 0..2 {
                        for j in 0..2 {
                            assert!((a[i][j] - b[i][j]).norm() <= 1e-12 * b[i][j].norm());
                        }
                    }
                }
            }
        }
    }
}
