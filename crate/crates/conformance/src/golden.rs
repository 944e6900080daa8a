//! The golden file: one worked example per line.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub const GOLDEN_TEXT: &str = include_str!("../goldens/cases.txt");

#[derive(Debug, Error, PartialEq)]
pub enum GoldenError {
    #[error("line {line}: expected 7 columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("line {line}: unknown provenance {tag:?}")]
    Provenance { line: usize, tag: String },
    #[error("line {line}: malformed field {field:?}")]
    Field { line: usize, field: String },
    #[error("line {line}: bad tolerance {value:?}")]
    Tolerance { line: usize, value: String },
    #[error("case {0}: missing key {1:?}")]
    MissingKey(String, String),
    #[error("case {0}: cannot parse {1:?} as a number")]
    Number(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Stated in the published derivation.
    Published,
    /// Follows from the definitions.
    Definition,
    /// Produced by a named oracle.
    Computed,
}

impl FromStr for Provenance {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "published" => Ok(Provenance::Published),
            "definition" => Ok(Provenance::Definition),
            "computed" => Ok(Provenance::Computed),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Published => "published",
            Provenance::Definition => "definition",
            Provenance::Computed => "computed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenCase {
    pub id: String,
    pub provenance: Provenance,
    /// Oracle name for computed cases, a short justification otherwise.
    pub oracle: String,
    pub op: String,
    pub inputs: Vec<(String, String)>,
    pub expected: Vec<(String, String)>,
    pub tolerance: f64,
}

impl GoldenCase {
    pub fn input(&self, key: &str) -> Result<&str, GoldenError> {
        lookup(&self.inputs, key).ok_or_else(|| GoldenError::MissingKey(self.id.clone(), key.into()))
    }

    pub fn expected(&self, key: &str) -> Result<&str, GoldenError> {
        lookup(&self.expected, key).ok_or_else(|| GoldenError::MissingKey(self.id.clone(), key.into()))
    }

    pub fn input_f64(&self, key: &str) -> Result<f64, GoldenError> {
        self.number(self.input(key)?)
    }

    pub fn input_usize(&self, key: &str) -> Result<usize, GoldenError> {
        let raw = self.input(key)?;
        raw.parse().map_err(|_| GoldenError::Number(self.id.clone(), raw.into()))
    }

    pub fn input_vec(&self, key: &str) -> Result<Vec<f64>, GoldenError> {
        self.input(key)?.split(',').map(|v| self.number(v)).collect()
    }

    pub fn input_indices(&self, key: &str) -> Result<Vec<usize>, GoldenError> {
        self.input_vec(key).map(|v| v.into_iter().map(|x| x as usize).collect())
    }

    pub fn expected_f64(&self, key: &str) -> Result<f64, GoldenError> {
        self.number(self.expected(key)?)
    }

    pub fn expected_vec(&self, key: &str) -> Result<Vec<f64>, GoldenError> {
        self.expected(key)?.split(',').map(|v| self.number(v)).collect()
    }

    fn number(&self, raw: &str) -> Result<f64, GoldenError> {
        raw.trim()
            .parse()
            .map_err(|_| GoldenError::Number(self.id.clone(), raw.into()))
    }
}

fn lookup<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn fields(line: usize, text: &str) -> Result<Vec<(String, String)>, GoldenError> {
    text.split(';')
        .map(|f| {
            let (k, v) = f.split_once('=').ok_or_else(|| GoldenError::Field {
                line,
                field: f.trim().into(),
            })?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

pub fn parse_golden(text: &str) -> Result<Vec<GoldenCase>, GoldenError> {
    let mut cases = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = trimmed.split('|').map(str::trim).collect();
        if cols.len() != 7 {
            return Err(GoldenError::Columns { line, found: cols.len() });
        }
        let provenance = cols[1].parse().map_err(|_| GoldenError::Provenance {
            line,
            tag: cols[1].into(),
        })?;
        let tolerance = cols[6].parse().map_err(|_| GoldenError::Tolerance {
            line,
            value: cols[6].into(),
        })?;
        cases.push(GoldenCase {
            id: cols[0].into(),
            provenance,
            oracle: cols[2].into(),
            op: cols[3].into(),
            inputs: fields(line, cols[4])?,
            expected: fields(line, cols[5])?,
            tolerance,
        });
    }
    Ok(cases)
}

/// The cases compiled into this crate.
pub fn golden_cases() -> Vec<GoldenCase> {
    parse_golden(GOLDEN_TEXT).expect("bundled golden file parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_line() {
        let cases = parse_golden("# c\n\na | definition | x | top_k | z=1,2; k=1 | support=1 | 0\n").unwrap();
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].input_vec("z").unwrap(), vec![1.0, 2.0]);
        assert_eq!(cases[0].input_usize("k").unwrap(), 1);
        assert_eq!(cases[0].expected("support").unwrap(), "1");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(parse_golden("a | b"), Err(GoldenError::Columns { .. })));
        assert!(matches!(
            parse_golden("a | maybe | x | op | z=1 | y=1 | 0"),
            Err(GoldenError::Provenance { .. })
        ));
        assert!(matches!(
            parse_golden("a | published | x | op | z | y=1 | 0"),
            Err(GoldenError::Field { .. })
        ));
    }

    #[test]
    fn inexact_values_carry_seventeen_significant_digits() {
        for case in golden_cases() {
            for (_, v) in &case.expected {
                for part in v.split(',') {
                    let digits: String = part.chars().filter(char::is_ascii_digit).collect();
                    let significant = digits.trim_start_matches('0');
                    if part.parse::<f64>().is_ok() && significant.len() > 5 {
                        assert_eq!(significant.len(), 17, "{}: {part}", case.id);
                    }
                }
            }
        }
    }
}
