//! Text formats: colouring files, polynomial family files and the
//! colouring digest that certificates bind to.
//!
//! Colouring file: optional header `m=<m> n=<n> N=<N>` (`n` may be `-` or
//! omitted), then one line per element with `m` labels followed by the final
//! bounded label when `n` is declared. Without a header, a single line of
//! labels is an ordinary colouring of `[N]`; several lines are read as one
//! element per line with no bounded coordinate. `#` starts a comment.
//!
//! Family file: JSON `{"polys": [[1], [2], [0, 1]], "role": "mono"}`, each
//! inner list holding coefficients of `x, x^2, ...`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coloring::{Label, TypedColouring};
use crate::polynomial::{FamilyRole, IntegralPolynomial, PolynomialFamily};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

impl FormatError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

struct Header {
    m: usize,
    n: Option<Label>,
    len: usize,
}

fn parse_header(line: usize, text: &str) -> Result<Header, FormatError> {
    let mut m = None;
    let mut n = None;
    let mut len = None;
    for token in text.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| FormatError::at(line, format!("expected key=value, found `{token}`")))?;
        let number = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| FormatError::at(line, format!("invalid value `{v}` for `{key}`")))
        };
        match key {
            "m" => m = Some(number(value)?),
            "N" => len = Some(number(value)?),
            "n" if value == "-" || value.is_empty() => n = None,
            "n" => {
                let v = number(value)?;
                if v == 0 {
                    return Err(FormatError::at(line, "n must be at least 1"));
                }
                n = Some(Label::try_from(v).map_err(|_| FormatError::at(line, "n too large"))?);
            }
            other => {
                return Err(FormatError::at(
                    line,
                    format!("unknown header key `{other}`"),
                ))
            }
        }
    }
    Ok(Header {
        m: m.ok_or_else(|| FormatError::at(line, "header is missing m="))?,
        n,
        len: len.ok_or_else(|| FormatError::at(line, "header is missing N="))?,
    })
}

fn parse_labels(line: usize, text: &str) -> Result<Vec<Label>, FormatError> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<Label>()
                .map_err(|_| FormatError::at(line, format!("invalid label `{t}`")))
        })
        .collect()
}

pub fn parse_colouring(text: &str) -> Result<TypedColouring, FormatError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let Some(&(first_line, first)) = lines.first() else {
        return Err(FormatError::at(1, "empty colouring"));
    };

    if first.contains('=') {
        let header = parse_header(first_line, first)?;
        let body = &lines[1..];
        if body.len() != header.len {
            let line = body.last().map_or(first_line, |l| l.0);
            return Err(FormatError::at(
                line,
                format!(
                    "header declares N={} but {} element lines follow",
                    header.len,
                    body.len()
                ),
            ));
        }
        let width = header.m + usize::from(header.n.is_some());
        let mut rows = Vec::with_capacity(body.len());
        let mut finals = Vec::new();
        for &(line, text) in body {
            let mut labels = parse_labels(line, text)?;
            if labels.len() != width {
                return Err(FormatError::at(
                    line,
                    format!("expected {width} labels, found {}", labels.len()),
                ));
            }
            if let Some(bound) = header.n {
                let f = labels.pop().unwrap_or(0);
                if f == 0 || f > bound {
                    return Err(FormatError::at(
                        line,
                        format!("final label {f} outside 1..={bound}"),
                    ));
                }
                finals.push(f);
            }
            rows.push(labels);
        }
        let bounded = header.n.map(|b| (b, finals));
        return TypedColouring::new(rows, header.m, bounded)
            .map_err(|e| FormatError::at(first_line, e.to_string()));
    }

    if lines.len() == 1 {
        let labels = parse_labels(first_line, first)?;
        return TypedColouring::single(labels)
            .map_err(|e| FormatError::at(first_line, e.to_string()));
    }
    let mut rows = Vec::with_capacity(lines.len());
    let mut width = None;
    for &(line, text) in &lines {
        let labels = parse_labels(line, text)?;
        match width {
            None => width = Some(labels.len()),
            Some(w) if w != labels.len() => {
                return Err(FormatError::at(
                    line,
                    format!("expected {w} labels, found {}", labels.len()),
                ));
            }
            _ => {}
        }
        rows.push(labels);
    }
    TypedColouring::new(rows, width.unwrap_or(0), None)
        .map_err(|e| FormatError::at(first_line, e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct FamilyFile {
    polys: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    role: Option<FamilyRole>,
}

/// Reads a family file. A missing role defaults to `mono`.
pub fn parse_family(text: &str) -> Result<PolynomialFamily, FormatError> {
    let file: FamilyFile =
        serde_json::from_str(text).map_err(|e| FormatError::at(e.line(), e.to_string()))?;
    let polys = file
        .polys
        .into_iter()
        .map(IntegralPolynomial::new)
        .collect();
    PolynomialFamily::with_role(polys, file.role.unwrap_or_default())
        .map_err(|e| FormatError::at(1, e.to_string()))
}

pub fn family_to_json(family: &PolynomialFamily) -> String {
    let file = FamilyFile {
        polys: family.polys().iter().map(|p| p.coeffs().to_vec()).collect(),
        role: Some(family.role()),
    };
    serde_json::to_string(&file).expect("family serializes")
}

/// SHA-256 (hex) of the serialized restricted-growth form of `c`. Palette
/// renamings of the unbounded coordinates share a digest; the bounded
/// coordinate is hashed as is.
pub fn colouring_digest(c: &TypedColouring) -> String {
    hex::encode(Sha256::digest(
        c.canonical_colouring().serialize().as_bytes(),
    ))
}
