//! Typed colourings of `[N] = {1, ..., N}`.
//!
//! An `(m, n)`-type colouring gives each element `m` unbounded labels plus,
//! when `n` is present, one final label in `1..=n`. Positions in the public
//! API are 1-based, matching `[N]`.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Label = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ColouringError {
    #[error("colouring length must be at least 1")]
    Empty,
    #[error("expected {expected} unbounded labels, element {position} has {found}")]
    Arity {
        position: usize,
        expected: usize,
        found: usize,
    },
    #[error("final label {label} at element {position} is outside 1..={bound}")]
    FinalLabelOutOfRange {
        position: usize,
        label: Label,
        bound: Label,
    },
    #[error("final-coordinate bound must be at least 1")]
    ZeroBound,
    #[error("block length {block_len} does not divide interval length {len}")]
    BlockMismatch { len: usize, block_len: usize },
    #[error("block {index} of length {block_len} lies outside an interval of length {len}")]
    BlockOutOfRange {
        index: usize,
        block_len: usize,
        len: usize,
    },
    #[error("position {position} outside [1, {len}]")]
    PositionOutOfRange { position: i64, len: usize },
}

/// A colouring `Δ: [N] -> ℕ^m × {1..n}` (the final factor only when `n` is set).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypedColouring {
    len: usize,
    m: usize,
    n: Option<Label>,
    /// Row-major `len × m`.
    labels: Vec<Label>,
    finals: Option<Vec<Label>>,
}

impl TypedColouring {
    /// `rows[t]` holds the `m` unbounded labels of element `t + 1`.
    pub fn new(
        rows: Vec<Vec<Label>>,
        m: usize,
        bounded: Option<(Label, Vec<Label>)>,
    ) -> Result<Self, ColouringError> {
        if rows.is_empty() {
            return Err(ColouringError::Empty);
        }
        let len = rows.len();
        let mut labels = Vec::with_capacity(len * m);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(ColouringError::Arity {
                    position: t + 1,
                    expected: m,
                    found: row.len(),
                });
            }
            labels.extend(row);
        }
        let (n, finals) = match bounded {
            None => (None, None),
            Some((bound, finals)) => {
                if bound == 0 {
                    return Err(ColouringError::ZeroBound);
                }
                if finals.len() != len {
                    return Err(ColouringError::Arity {
                        position: finals.len().min(len) + 1,
                        expected: len,
                        found: finals.len(),
                    });
                }
                if let Some((t, &label)) = finals
                    .iter()
                    .enumerate()
                    .find(|(_, &l)| l == 0 || l > bound)
                {
                    return Err(ColouringError::FinalLabelOutOfRange {
                        position: t + 1,
                        label,
                        bound,
                    });
                }
                (Some(bound), Some(finals))
            }
        };
        Ok(Self {
            len,
            m,
            n,
            labels,
            finals,
        })
    }

    /// An ordinary colouring `Δ: [N] -> ℕ` (`m = 1`, no bounded coordinate).
    pub fn single(labels: Vec<Label>) -> Result<Self, ColouringError> {
        if labels.is_empty() {
            return Err(ColouringError::Empty);
        }
        Ok(Self {
            len: labels.len(),
            m: 1,
            n: None,
            labels,
            finals: None,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> Option<Label> {
        self.n
    }

    /// Unbounded labels of element `position` (1-based).
    pub fn row(&self, position: usize) -> &[Label] {
        let start = (position - 1) * self.m;
        &self.labels[start..start + self.m]
    }

    /// `Δ_j(position)`, both 1-based.
    pub fn label(&self, position: usize, coord: usize) -> Label {
        self.labels[(position - 1) * self.m + coord - 1]
    }

    /// `Δ_{m+1}(position)`.
    pub fn final_label(&self, position: usize) -> Option<Label> {
        self.finals.as_ref().map(|f| f[position - 1])
    }

    pub fn finals(&self) -> Option<&[Label]> {
        self.finals.as_deref()
    }

    /// Labels of coordinate `coord` (1-based) across the whole interval.
    pub fn coordinate(&self, coord: usize) -> Vec<Label> {
        (1..=self.len).map(|t| self.label(t, coord)).collect()
    }

    pub fn check_position(&self, position: i64) -> Result<usize, ColouringError> {
        if position >= 1 && (position as u64) <= self.len as u64 {
            Ok(position as usize)
        } else {
            Err(ColouringError::PositionOutOfRange {
                position,
                len: self.len,
            })
        }
    }

    /// The first `len` elements as a colouring of `[len]`.
    pub fn truncate(&self, len: usize) -> Result<Self, ColouringError> {
        if len == 0 {
            return Err(ColouringError::Empty);
        }
        if len > self.len {
            return Err(ColouringError::PositionOutOfRange {
                position: len as i64,
                len: self.len,
            });
        }
        Ok(Self {
            len,
            m: self.m,
            n: self.n,
            labels: self.labels[..len * self.m].to_vec(),
            finals: self.finals.as_ref().map(|f| f[..len].to_vec()),
        })
    }

    /// Applies `relabel(coord, label)` to every unbounded label.
    pub fn map_labels(&self, mut relabel: impl FnMut(usize, Label) -> Label) -> Self {
        let mut out = self.clone();
        for (i, l) in out.labels.iter_mut().enumerate() {
            *l = relabel(i % self.m + 1, *l);
        }
        out
    }

    /// Fixed textual form: a header line `m=<m> n=<n|-> N=<N>` followed by one
    /// line per element. Parsed back by [`crate::format::parse_colouring`].
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let n = self.n.map_or_else(|| "-".to_string(), |n| n.to_string());
        let _ = writeln!(out, "m={} n={} N={}", self.m, n, self.len);
        for t in 1..=self.len {
            let mut fields: Vec<String> = self.row(t).iter().map(Label::to_string).collect();
            if let Some(f) = self.final_label(t) {
                fields.push(f.to_string());
            }
            let _ = writeln!(out, "{}", fields.join(" "));
        }
        out
    }

    /// The colouring with all unbounded labels renamed jointly by first
    /// occurrence in row-major order, so equalities across coordinates
    /// survive. The bounded coordinate is left alone.
    pub fn canonical_colouring(&self) -> Self {
        let mut out = self.clone();
        out.labels = restricted_growth(self.labels.iter().copied());
        out
    }
}

/// Per-coordinate restricted-growth strings of a colouring.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub coords: Vec<Vec<Label>>,
}

/// First-occurrence relabelling of a label sequence.
pub fn restricted_growth(labels: impl IntoIterator<Item = Label>) -> Vec<Label> {
    let mut map: HashMap<Label, Label> = HashMap::new();
    labels
        .into_iter()
        .map(|l| {
            let next = map.len() as Label;
            *map.entry(l).or_insert(next)
        })
        .collect()
}

pub fn canonicalize(c: &TypedColouring) -> CanonicalForm {
    CanonicalForm {
        coords: (1..=c.m())
            .map(|j| restricted_growth(c.coordinate(j)))
            .collect(),
    }
}

pub fn is_restricted_growth(s: &[Label]) -> bool {
    let mut next = 0;
    for &l in s {
        if l > next {
            return false;
        }
        if l == next {
            next += 1;
        }
    }
    true
}

/// Restricted-growth strings of a fixed length in lexicographic order.
///
/// One string per set partition of `[len]`, optionally limited to at most
/// `max_classes` blocks.
#[derive(Debug, Clone)]
pub struct RestrictedGrowthIter {
    current: Vec<Label>,
    /// `prefix_max[i] = max(current[..=i])`
    prefix_max: Vec<Label>,
    limit: Label,
    done: bool,
}

impl RestrictedGrowthIter {
    pub fn new(len: usize, max_classes: Option<u32>) -> Self {
        let limit = max_classes.unwrap_or(u32::MAX);
        Self {
            current: vec![0; len],
            prefix_max: vec![0; len],
            limit,
            done: len == 0 || limit == 0,
        }
    }

    fn advance(&mut self) -> bool {
        let len = self.current.len();
        for i in (1..len).rev() {
            let bound = self.prefix_max[i - 1] + 1;
            if self.current[i] < bound && self.current[i] + 1 < self.limit {
                self.current[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.current[i]);
                for k in i + 1..len {
                    self.current[k] = 0;
                    self.prefix_max[k] = self.prefix_max[i];
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for RestrictedGrowthIter {
    type Item = Vec<Label>;

    fn next(&mut self) -> Option<Vec<Label>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        if !self.advance() {
            self.done = true;
        }
        Some(out)
    }
}

/// Every colouring of `[len]` up to palette renaming (`m = 1`, no bounded
/// coordinate), in lexicographic restricted-growth order.
pub fn enumerate_colourings(
    len: usize,
    max_classes: Option<u32>,
) -> impl Iterator<Item = TypedColouring> {
    RestrictedGrowthIter::new(len, max_classes)
        .map(|s| TypedColouring::single(s).expect("nonempty restricted-growth string"))
}

/// Canonical one-element extensions of a restricted-growth prefix: one per
/// class already used, plus a fresh class if `max_classes` allows it.
pub fn extend(prefix: &[Label], max_classes: Option<u32>) -> impl Iterator<Item = Vec<Label>> + '_ {
    let used = prefix.iter().map(|&l| l + 1).max().unwrap_or(0);
    let choices = max_classes.map_or(used + 1, |k| (used + 1).min(k));
    (0..choices).map(move |l| {
        let mut next = prefix.to_vec();
        next.push(l);
        next
    })
}

/// Bell numbers `B_0..=B_len` by the Bell triangle.
pub fn bell_numbers(len: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(len + 1);
    let mut row = vec![BigUint::from(1u32)];
    for _ in 0..=len {
        out.push(row[0].clone());
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(row.last().cloned().unwrap_or_default());
        for x in &row {
            let v = next.last().unwrap() + x;
            next.push(v);
        }
        row = next;
    }
    out
}

/// Number of restricted-growth strings of length `len` with at most
/// `max_classes` classes (Stirling numbers of the second kind, summed).
pub fn count_colourings(len: usize, max_classes: Option<u32>) -> BigUint {
    let cap = max_classes.map_or(len, |k| (k as usize).min(len));
    // stirling[k] = S(i, k) for the current i
    let mut stirling = vec![BigUint::from(0u32); cap + 1];
    stirling[0] = BigUint::from(1u32);
    for _ in 0..len {
        for k in (1..=cap).rev() {
            stirling[k] = &stirling[k] * BigUint::from(k) + &stirling[k - 1];
        }
        stirling[0] = BigUint::from(0u32);
    }
    stirling.into_iter().sum()
}

/// `n^N · Bell(N)^m`: the number of distinct interval-equivalence classes
/// possible for blocks of length `block_len`.
pub fn fingerprint_count_bound(m: u32, n: u32, block_len: usize) -> BigUint {
    let bell = bell_numbers(block_len).pop().unwrap_or_default();
    BigUint::from(n).pow(block_len as u32) * bell.pow(m)
}

/// What two blocks must share to be equivalent: the bounded labels
/// position-wise, and each unbounded coordinate's equality pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EquivalenceFingerprint {
    pub finals: Vec<Label>,
    pub patterns: Vec<Vec<Label>>,
}

fn block_range(
    c: &TypedColouring,
    index: usize,
    block_len: usize,
) -> Result<std::ops::RangeInclusive<usize>, ColouringError> {
    let out_of_range = ColouringError::BlockOutOfRange {
        index,
        block_len,
        len: c.len(),
    };
    if block_len == 0 || index == 0 {
        return Err(out_of_range);
    }
    let end = index.checked_mul(block_len).ok_or(out_of_range.clone())?;
    if end > c.len() {
        return Err(out_of_range);
    }
    Ok(end - block_len + 1..=end)
}

/// Fingerprint of the 1-based block `index` of length `block_len`.
pub fn fingerprint(
    c: &TypedColouring,
    index: usize,
    block_len: usize,
) -> Result<EquivalenceFingerprint, ColouringError> {
    let range = block_range(c, index, block_len)?;
    let finals = match c.finals() {
        Some(f) => f[*range.start() - 1..*range.end()].to_vec(),
        None => Vec::new(),
    };
    let patterns = (1..=c.m())
        .map(|j| restricted_growth(range.clone().map(|t| c.label(t, j))))
        .collect();
    Ok(EquivalenceFingerprint { finals, patterns })
}

/// Whether blocks `s` and `t` (1-based, length `block_len`) are equivalent.
pub fn interval_equivalent(
    c: &TypedColouring,
    s: usize,
    t: usize,
    block_len: usize,
) -> Result<bool, ColouringError> {
    let rs = block_range(c, s, block_len)?;
    let rt = block_range(c, t, block_len)?;
    let pairs: Vec<(usize, usize)> = rs.zip(rt).collect();
    if pairs
        .iter()
        .any(|&(x, y)| c.final_label(x) != c.final_label(y))
    {
        return Ok(false);
    }
    for k in 1..=c.m() {
        for &(xi, yi) in &pairs {
            for &(xj, yj) in &pairs {
                let here = c.label(xi, k) == c.label(xj, k);
                let there = c.label(yi, k) == c.label(yj, k);
                if here != there {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Colouring of `[len / block_len]` whose element `s` carries the
/// concatenated unbounded labels of block `s`.
///
/// With `with_fingerprint`, a bounded coordinate holds the block's
/// equivalence class, interned densely (1, 2, ...) in order of first
/// appearance; `n` is then the number of classes seen. Without it the
/// result has no bounded coordinate.
pub fn block_coloring(
    c: &TypedColouring,
    block_len: usize,
    with_fingerprint: bool,
) -> Result<TypedColouring, ColouringError> {
    if block_len == 0 || !c.len().is_multiple_of(block_len) {
        return Err(ColouringError::BlockMismatch {
            len: c.len(),
            block_len,
        });
    }
    let blocks = c.len() / block_len;
    let rows: Vec<Vec<Label>> = (0..blocks)
        .map(|s| {
            (s * block_len + 1..=(s + 1) * block_len)
                .flat_map(|t| c.row(t).iter().copied())
                .collect()
        })
        .collect();
    let bounded = if with_fingerprint {
        let mut interned: HashMap<EquivalenceFingerprint, Label> = HashMap::new();
        let mut finals = Vec::with_capacity(blocks);
        for s in 1..=blocks {
            let fp = fingerprint(c, s, block_len)?;
            let next = interned.len() as Label + 1;
            finals.push(*interned.entry(fp).or_insert(next));
        }
        Some((interned.len() as Label, finals))
    } else {
        None
    };
    TypedColouring::new(rows, c.m() * block_len, bounded)
}
