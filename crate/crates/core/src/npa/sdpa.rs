//! SDPA sparse (`.dat-s`) output for moment problems, and a parser for
//! the same subset of the format.
//!
//! The problem is written in the form `tr(F_i Y) = c_i`, `Y ⪰ 0`, with
//! `Y` the moment matrix. `F_0` is empty: the problem is a feasibility
//! test.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::problem::MomentProblem;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SdpaEntry {
    pub matrix: usize,
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SdpaData {
    pub m: usize,
    /// Negative sizes denote diagonal blocks.
    pub block_sizes: Vec<i64>,
    pub objective: Vec<f64>,
    pub entries: Vec<SdpaEntry>,
}

impl MomentProblem {
    pub fn to_sdpa(&self) -> SdpaData {
        let mut entries = Vec::new();
        for (k, c) in self.constraints.iter().enumerate() {
            for &(i, j, coeff) in &c.terms {
                // off-diagonal entries are mirrored, so each side carries half
                let value = if i == j { coeff } else { coeff / 2.0 };
                entries.push(SdpaEntry { matrix: k + 1, block: 1, i: i + 1, j: j + 1, value });
            }
        }
        entries.sort_by_key(|e| (e.matrix, e.block, e.i, e.j));
        SdpaData {
            m: self.constraints.len(),
            block_sizes: vec![self.size() as i64],
            objective: self.constraints.iter().map(|c| c.target).collect(),
            entries,
        }
    }
}

/// 17 significant digits: every `f64` survives a round trip.
pub fn format_number(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

pub fn format_sdpa(data: &SdpaData) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", data.m);
    let _ = writeln!(out, "{}", data.block_sizes.len());
    let sizes: Vec<String> = data.block_sizes.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let objective: Vec<String> = data.objective.iter().map(|&c| format_number(c)).collect();
    let _ = writeln!(out, "{}", objective.join(" "));
    for e in &data.entries {
        let _ = writeln!(out, "{} {} {} {} {}", e.matrix, e.block, e.i, e.j, format_number(e.value));
    }
    out
}

pub fn write_sdpa(problem: &MomentProblem, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_sdpa(&problem.to_sdpa()))?;
    Ok(())
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || ",{}()".contains(c)).filter(|t| !t.is_empty())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::SdpaParse { line, message: message.into() }
}

fn number<F: std::str::FromStr>(token: &str, line: usize) -> Result<F> {
    token.parse().map_err(|_| parse_err(line, format!("cannot parse `{token}`")))
}

pub fn parse_sdpa(text: &str) -> Result<SdpaData> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .skip_while(|(_, l)| l.starts_with('"') || l.starts_with('*'));

    let mut header = |what: &str| lines.next().ok_or_else(|| parse_err(0, format!("missing {what}")));
    let (ln, l) = header("constraint count")?;
    let m: usize = number(tokens(l).next().ok_or_else(|| parse_err(ln, "empty line"))?, ln)?;
    let (ln, l) = header("block count")?;
    let nblocks: usize = number(tokens(l).next().ok_or_else(|| parse_err(ln, "empty line"))?, ln)?;
    let (ln, l) = header("block sizes")?;
    let block_sizes = tokens(l).map(|t| number::<i64>(t, ln)).collect::<Result<Vec<_>>>()?;
    if block_sizes.len() != nblocks {
        return Err(parse_err(ln, format!("expected {nblocks} block sizes, found {}", block_sizes.len())));
    }
    let (ln, l) = header("objective vector")?;
    let objective = tokens(l).map(|t| number::<f64>(t, ln)).collect::<Result<Vec<_>>>()?;
    if objective.len() != m {
        return Err(parse_err(ln, format!("expected {m} objective values, found {}", objective.len())));
    }
    let mut entries = Vec::new();
    for (ln, l) in lines {
        let t: Vec<&str> = tokens(l).collect();
        if t.len() != 5 {
            return Err(parse_err(ln, format!("expected 5 fields, found {}", t.len())));
        }
        let e = SdpaEntry {
            matrix: number(t[0], ln)?,
            block: number(t[1], ln)?,
            i: number(t[2], ln)?,
            j: number(t[3], ln)?,
            value: number(t[4], ln)?,
        };
        if e.matrix > m || e.block == 0 || e.block > nblocks {
            return Err(parse_err(ln, "matrix or block index out of range"));
        }
        let size = block_sizes[e.block - 1].unsigned_abs() as usize;
        if e.i == 0 || e.j == 0 || e.i > size || e.j > size || e.i > e.j {
            return Err(parse_err(ln, "entry position outside the upper triangle of its block"));
        }
        entries.push(e);
    }
    Ok(SdpaData { m, block_sizes, objective, entries })
}

pub fn read_sdpa(path: impl AsRef<Path>) -> Result<SdpaData> {
    parse_sdpa(&std::fs::read_to_string(path)?)
}
