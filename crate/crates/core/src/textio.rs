//! Helpers shared by the line-oriented text formats.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Shortest decimal text that parses back to exactly `x`.
///
/// Plain notation for ordinary magnitudes, scientific otherwise. Rust's
/// float formatting is locale-independent, so the separator is always '.'.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn join_f64(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 12);
    for (k, &v) in values.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}", fmt_f64(v));
    }
    out
}

pub fn parse_f64(line: usize, token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("not a number: {token:?}")))
}

pub fn parse_int<T: std::str::FromStr>(line: usize, token: &str) -> Result<T> {
    token
        .parse::<T>()
        .map_err(|_| Error::parse(line, format!("not an integer: {token:?}")))
}

pub fn parse_f64_list(line: usize, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace().map(|t| parse_f64(line, t)).collect()
}

/// Cursor over the lines of a text document with 1-based line numbers.
pub struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> LineReader<'a> {
    pub fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Line number of the most recently returned line.
    pub fn line_no(&self) -> usize {
        self.last
    }

    /// Next line that is not blank.
    pub fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.lines.by_ref() {
            self.last = i + 1;
            if !l.trim().is_empty() {
                return Some((i + 1, l));
            }
        }
        None
    }

    pub fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let after = self.last;
        self.next_line()
            .ok_or_else(|| Error::parse(after + 1, format!("unexpected end of input, expected {what}")))
    }

    /// Reads a `key rest...` line and returns `rest`.
    pub fn expect_key(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, l) = self.expect_line(key)?;
        match l.split_once(' ') {
            Some((k, rest)) if k == key => Ok((n, rest.trim())),
            _ if l.trim() == key => Ok((n, "")),
            _ => Err(Error::parse(n, format!("expected `{key}`, found {l:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        for x in [0.0, -0.0, 1.0, -1.0, 2.5, 0.1, 1.0 / 3.0, 1e-7, 6.02e23, 1e-300, f64::MAX, f64::MIN_POSITIVE, 12345.678] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(-1.0), "-1");
        assert_eq!(fmt_f64(2.5), "2.5");
        assert_eq!(fmt_f64(1e-7), "1e-7");
    }

    #[test]
    fn reader_skips_blank_lines_and_reports_numbers() {
        let mut r = LineReader::new("a 1\n\n  \nb two words\n");
        assert_eq!(r.expect_key("a").unwrap(), (1, "1"));
        assert_eq!(r.expect_key("b").unwrap(), (4, "two words"));
        let err = r.expect_key("c").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }
}
