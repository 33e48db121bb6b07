//! Number formatting and the potential text format.
//!
//! A potential is written one segment per line as `start end value`.
//! Blank lines and lines starting with `#` are ignored on input.

use std::fmt::Write as _;

use cantor_spectra_core::PiecewisePotential;
use thiserror::Error;

/// Failure to read a potential table, with the 1-based offending line.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

/// Integral values without a fraction, everything else with 17 significant
/// digits (trailing zeros dropped). Parsing the result gives back the same
/// bits.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    if x.fract() == 0.0 && x.abs() < 1e16 {
        return format!("{x:.0}");
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..16).contains(&exp) {
        return sci;
    }
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::with_capacity(24);
    if x < 0.0 {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let point = exp as usize + 1;
        out.push_str(&digits[..point]);
        out.push('.');
        out.push_str(&digits[point..]);
    }
    let trimmed = out.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

pub fn serialize_potential(p: &PiecewisePotential) -> String {
    let mut out = String::new();
    for s in p.segments() {
        let _ = writeln!(
            out,
            "{} {} {}",
            format_real(s.start),
            format_real(s.end),
            format_real(s.value)
        );
    }
    out
}

pub fn parse_potential(text: &str) -> Result<PiecewisePotential, ParseError> {
    let mut breakpoints = vec![0.0];
    let mut values = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        last_line = line;
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(ParseError::new(
                line,
                format!(
                    "expected 3 fields `start end value`, found {}",
                    fields.len()
                ),
            ));
        }
        let mut nums = [0.0; 3];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    ParseError::new(line, format!("`{field}` is not a finite number"))
                })?;
        }
        let [start, end, value] = nums;
        let expected = *breakpoints.last().expect("starts at 0");
        if start != expected {
            let what = if start < expected {
                "overlaps"
            } else {
                "leaves a gap after"
            };
            return Err(ParseError::new(
                line,
                format!("segment starting at {start} {what} the previous end {expected}"),
            ));
        }
        if !(end > start) {
            return Err(ParseError::new(
                line,
                format!("segment end {end} is not after its start {start}"),
            ));
        }
        if end > 1.0 {
            return Err(ParseError::new(
                line,
                format!("segment end {end} lies beyond 1"),
            ));
        }
        if !(-1.0..=1.0).contains(&value) {
            return Err(ParseError::new(
                line,
                format!("value {value} lies outside [-1, 1]"),
            ));
        }
        breakpoints.push(end);
        values.push(value);
    }
    if values.is_empty() {
        return Err(ParseError::new(last_line.max(1), "no segments"));
    }
    if *breakpoints.last().expect("nonempty") != 1.0 {
        return Err(ParseError::new(last_line, "the last segment must end at 1"));
    }
    PiecewisePotential::new(breakpoints, values)
        .map_err(|e| ParseError::new(last_line, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cantor_spectra_core::{build_cantor_potential, CantorSpec};

    #[test]
    fn integers_and_fractions() {
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(-0.0), "0");
        assert_eq!(format_real(-1.0), "-1");
        assert_eq!(format_real(300.0), "300");
        assert_eq!(format_real(0.25), "0.25");
        assert_eq!(format_real(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(format_real(-0.31340), "-0.31340000000000001");
        assert_eq!(format_real(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_real(2.5e-5), "0.000025000000000000001");
    }

    #[test]
    fn order_zero_is_one_line() {
        let p = build_cantor_potential(&CantorSpec::with_order(0)).unwrap();
        assert_eq!(serialize_potential(&p), "0 1 -1\n");
    }

    #[test]
    fn order_one_table() {
        let p = build_cantor_potential(&CantorSpec::with_order(1)).unwrap();
        let text = serialize_potential(&p);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            [
                "0 0.33333333333333331 -1",
                "0.33333333333333331 0.66666666666666663 1",
                "0.66666666666666663 1 -1"
            ]
        );
    }

    #[test]
    fn parse_errors_name_the_line() {
        let overlap = "0 0.5 -1\n0.4 1 1\n";
        assert_eq!(parse_potential(overlap).unwrap_err().line, 2);
        let gap = "# comment\n0 0.5 -1\n\n0.6 1 1\n";
        assert_eq!(parse_potential(gap).unwrap_err().line, 4);
        assert_eq!(parse_potential("0 1 2\n").unwrap_err().line, 1);
        assert_eq!(parse_potential("0 1\n").unwrap_err().line, 1);
        assert_eq!(parse_potential("0 x -1\n").unwrap_err().line, 1);
        assert_eq!(parse_potential("0 0.5 -1\n").unwrap_err().line, 1);
        assert_eq!(parse_potential("0.1 1 -1\n").unwrap_err().line, 1);
        assert!(parse_potential("").is_err());
    }
}
