use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Letter of an extra monomial shape. `B` stands for a symbol of either
/// Bob device.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum LetterClass {
    A,
    B0,
    B1,
    B,
}

impl fmt::Display for LetterClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LetterClass::A => "A",
            LetterClass::B0 => "B0",
            LetterClass::B1 => "B1",
            LetterClass::B => "B",
        })
    }
}

/// Parsed hierarchy level `INT ("+" WORD)*`: all words up to length
/// `depth` plus every product matching one of the extra shapes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Level {
    pub spec: String,
    pub depth: usize,
    pub extras: Vec<Vec<LetterClass>>,
}

impl Level {
    /// Human-readable reading of the level, recorded next to exported
    /// problems.
    pub fn interpretation(&self) -> String {
        let mut out = format!("all words of length <= {}", self.depth);
        for shape in &self.extras {
            let word: Vec<String> = shape
                .iter()
                .map(|c| match c {
                    LetterClass::B => "(B0|B1)".to_string(),
                    other => other.to_string(),
                })
                .collect();
            out.push_str(&format!(" + products {}", word.join("·")));
        }
        out
    }
}

impl std::str::FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_level(s)
    }
}

fn err(position: usize, message: impl Into<String>) -> Error {
    Error::LevelParse { position, message: message.into() }
}

pub fn parse_level(spec: &str) -> Result<Level> {
    let bytes = spec.as_bytes();
    let mut pos = 0;
    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
        pos += 1;
    }
    if pos == 0 {
        return Err(err(0, "expected a nonnegative integer depth"));
    }
    let depth: usize = spec[..pos].parse().map_err(|_| err(0, "depth out of range"))?;
    let mut extras = Vec::new();
    while pos < bytes.len() {
        if bytes[pos] != b'+' {
            return Err(err(pos, format!("expected '+', found '{}'", bytes[pos] as char)));
        }
        pos += 1;
        let mut shape = Vec::new();
        while pos < bytes.len() && bytes[pos] != b'+' {
            match bytes[pos] {
                b'A' => {
                    shape.push(LetterClass::A);
                    pos += 1;
                }
                b'B' => match bytes.get(pos + 1) {
                    Some(b'0') => {
                        shape.push(LetterClass::B0);
                        pos += 2;
                    }
                    Some(b'1') => {
                        shape.push(LetterClass::B1);
                        pos += 2;
                    }
                    _ => {
                        shape.push(LetterClass::B);
                        pos += 1;
                    }
                },
                other => return Err(err(pos, format!("unexpected character '{}'", other as char))),
            }
        }
        if shape.is_empty() {
            return Err(err(pos, "empty word after '+'"));
        }
        extras.push(shape);
    }
    Ok(Level { spec: spec.to_string(), depth, extras })
}
