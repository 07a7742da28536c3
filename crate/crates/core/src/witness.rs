//! Set predicates over typed colourings and witness search.
//!
//! A witness for families `A` (monochromatic role) and `B` (rainbow role) is
//! a pair `(a, d)` whose generated tuple `(a, a + p_1(d), ..., a + p_k(d))`
//! lies in `[N]` and is monochromatic for `A`, or rainbow (fully-rainbow
//! when the colouring has a bounded coordinate) for `B`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{ColouringError, Label, TypedColouring};
use crate::format::colouring_digest;
use crate::polynomial::{d_max, FamilyRole, PolyError, PolynomialFamily};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("empty element tuple")]
    EmptyTuple,
    #[error("colouring has no bounded final coordinate")]
    NoBoundedCoordinate,
    #[error("tuple has {elems} elements but the family has {family} members")]
    SizeMismatch { elems: usize, family: usize },
    #[error("member {0} of the collection is not fully-rainbow")]
    NotFullyRainbow(usize),
    #[error(transparent)]
    Colouring(#[from] ColouringError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Which difference parameters `d` a search admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DPolicy {
    /// `d > 0` for both families.
    Positive,
    /// `d != 0` for both families.
    #[default]
    Nonzero,
    /// `d != 0` for the monochromatic family, `d > h` for the rainbow one.
    GreaterThanHForRainbow,
    /// Every `d`, including the degenerate `d = 0`.
    Any,
}

impl DPolicy {
    pub fn admits_mono(self, d: i64) -> bool {
        match self {
            DPolicy::Positive => d > 0,
            DPolicy::Nonzero | DPolicy::GreaterThanHForRainbow => d != 0,
            DPolicy::Any => true,
        }
    }

    pub fn admits_rainbow(self, d: i64, h: i64) -> bool {
        match self {
            DPolicy::Positive => d > 0,
            DPolicy::Nonzero => d != 0,
            DPolicy::GreaterThanHForRainbow => d > h,
            DPolicy::Any => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DPolicy::Positive => "positive",
            DPolicy::Nonzero => "nonzero",
            DPolicy::GreaterThanHForRainbow => "greater_than_h_for_rainbow",
            DPolicy::Any => "any",
        }
    }
}

impl fmt::Display for DPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "positive" => Ok(DPolicy::Positive),
            "nonzero" => Ok(DPolicy::Nonzero),
            "greater_than_h_for_rainbow" | "greater-than-h" => Ok(DPolicy::GreaterThanHForRainbow),
            "any" => Ok(DPolicy::Any),
            other => Err(format!("unknown d-policy `{other}`")),
        }
    }
}

/// `d` values in scan order: increasing `|d|`, positive before negative.
/// Zero comes first and is included only when `include_zero`.
pub fn scan_order(radius: i64, include_zero: bool) -> impl Iterator<Item = i64> {
    let zero = include_zero.then_some(0);
    zero.into_iter().chain((1..=radius).flat_map(|k| [k, -k]))
}

fn positions(c: &TypedColouring, elems: &[i64]) -> Result<Vec<usize>, WitnessError> {
    if elems.is_empty() {
        return Err(WitnessError::EmptyTuple);
    }
    elems
        .iter()
        .map(|&e| c.check_position(e).map_err(WitnessError::from))
        .collect()
}

pub(crate) fn mono_coordinate(c: &TypedColouring, elems: &[usize]) -> Option<usize> {
    (1..=c.m()).find(|&j| {
        let first = c.label(elems[0], j);
        elems.iter().all(|&e| c.label(e, j) == first)
    })
}

pub(crate) fn rainbow_positions(c: &TypedColouring, elems: &[usize]) -> bool {
    for (i, &x) in elems.iter().enumerate() {
        for &y in &elems[..i] {
            if x == y {
                return false;
            }
            let rx = c.row(x);
            if c.row(y).iter().any(|l| rx.contains(l)) {
                return false;
            }
        }
    }
    true
}

fn fully_rainbow_positions(c: &TypedColouring, elems: &[usize]) -> Option<Label> {
    let first = c.final_label(elems[0])?;
    if elems.iter().any(|&e| c.final_label(e) != Some(first)) {
        return None;
    }
    rainbow_positions(c, elems).then_some(first)
}

/// Smallest coordinate `j` (1-based) with `Δ_j` constant on `elems`.
/// Repeated elements are allowed.
pub fn is_monochromatic(c: &TypedColouring, elems: &[i64]) -> Result<Option<usize>, WitnessError> {
    Ok(mono_coordinate(c, &positions(c, elems)?))
}

/// Pairwise-distinct elements, and no label shared between two different
/// elements in any pair of coordinates.
pub fn is_rainbow(c: &TypedColouring, elems: &[i64]) -> Result<bool, WitnessError> {
    Ok(rainbow_positions(c, &positions(c, elems)?))
}

/// The shared final label of a rainbow set with constant bounded coordinate.
pub fn is_fully_rainbow(c: &TypedColouring, elems: &[i64]) -> Result<Option<Label>, WitnessError> {
    if c.n().is_none() {
        return Err(WitnessError::NoBoundedCoordinate);
    }
    Ok(fully_rainbow_positions(c, &positions(c, elems)?))
}

/// Whether `elems` is `B`-focused at `a` for difference parameter `d`.
pub fn is_focused(
    elems: &[i64],
    a: i64,
    family: &PolynomialFamily,
    d: i64,
) -> Result<bool, WitnessError> {
    if elems.len() != family.len() {
        return Err(WitnessError::SizeMismatch {
            elems: elems.len(),
            family: family.len(),
        });
    }
    for (i, (&e, p)) in elems.iter().zip(family.polys()).enumerate() {
        if elems[..i].contains(&e) || e == a {
            return Ok(false);
        }
        if Some(e) != a.checked_add(p.evaluate(d)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    Monochromatic,
    Rainbow,
    FullyRainbow,
}

impl fmt::Display for WitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WitnessKind::Monochromatic => "monochromatic",
            WitnessKind::Rainbow => "rainbow",
            WitnessKind::FullyRainbow => "fully_rainbow",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    /// The constant coordinate of a monochromatic set (1-based).
    Coordinate(usize),
    /// The shared final label of a fully-rainbow set.
    FinalLabel(Label),
    None,
}

/// A witness without the bookkeeping needed to replay it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Witness {
    pub kind: WitnessKind,
    pub a: i64,
    pub d: i64,
    pub elements: Vec<i64>,
    pub evidence: Evidence,
}

/// The families and parameter policy a witness search runs under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessQuery {
    mono: Option<PolynomialFamily>,
    rainbow: Option<PolynomialFamily>,
    h: i64,
    policy: DPolicy,
}

impl WitnessQuery {
    /// Either family may be absent, disabling that half of the dichotomy.
    /// The rainbow family must have pairwise distinct nonzero members.
    pub fn new(
        mono: Option<PolynomialFamily>,
        rainbow: Option<PolynomialFamily>,
        h: i64,
        policy: DPolicy,
    ) -> Result<Self, PolyError> {
        let mono = mono.map(|f| f.into_role(FamilyRole::Mono)).transpose()?;
        let rainbow = rainbow
            .map(|f| f.into_role(FamilyRole::Rainbow))
            .transpose()?;
        Ok(Self {
            mono,
            rainbow,
            h,
            policy,
        })
    }

    pub fn mono(&self) -> Option<&PolynomialFamily> {
        self.mono.as_ref()
    }

    pub fn rainbow(&self) -> Option<&PolynomialFamily> {
        self.rainbow.as_ref()
    }

    pub fn h(&self) -> i64 {
        self.h
    }

    pub fn policy(&self) -> DPolicy {
        self.policy
    }

    /// Largest `|d|` worth scanning in an interval of length `len`.
    pub fn scan_radius(&self, len: usize) -> i64 {
        let window = len as i64;
        [&self.mono, &self.rainbow]
            .into_iter()
            .flatten()
            .map(|f| f.escape_radius(window).map_or(1, |r| r - 1))
            .max()
            .unwrap_or(0)
    }
}

/// Generated tuple `(a, a + p_1(d), ...)`, or `None` on overflow.
pub fn generate(family: &PolynomialFamily, a: i64, d: i64) -> Option<Vec<i64>> {
    let mut out = Vec::with_capacity(family.len() + 1);
    out.push(a);
    for p in family.polys() {
        out.push(a.checked_add(p.evaluate(d).ok()?)?);
    }
    Some(out)
}

/// The first witness in scan order: increasing `|d|` (positive first), then
/// increasing `a`, monochromatic checked before rainbow at each `(a, d)`.
pub fn scan_witness(c: &TypedColouring, query: &WitnessQuery) -> Option<Witness> {
    let len = c.len() as i64;
    let radius = query.scan_radius(c.len());
    let bounded = c.n().is_some();
    let offsets =
        |f: Option<&PolynomialFamily>, d: i64, admitted: bool| -> Option<(Vec<i64>, i64, i64)> {
            let f = f.filter(|_| admitted)?;
            let offs = f.offsets(d).ok()?;
            let lo = offs.iter().copied().min().unwrap_or(0).min(0);
            let hi = offs.iter().copied().max().unwrap_or(0).max(0);
            // a + lo >= 1 and a + hi <= len
            Some((offs, 1 - lo, len - hi))
        };
    let mut buf = Vec::new();
    for d in scan_order(radius, query.policy == DPolicy::Any) {
        let mono = offsets(query.mono(), d, query.policy.admits_mono(d));
        let rainbow = offsets(query.rainbow(), d, query.policy.admits_rainbow(d, query.h));
        if mono.is_none() && rainbow.is_none() {
            continue;
        }
        let lo = [&mono, &rainbow]
            .iter()
            .filter_map(|x| x.as_ref().map(|t| t.1))
            .min()
            .unwrap_or(1)
            .max(1);
        let hi = [&mono, &rainbow]
            .iter()
            .filter_map(|x| x.as_ref().map(|t| t.2))
            .max()
            .unwrap_or(len)
            .min(len);
        for a in lo..=hi {
            for (slot, is_mono) in [(&mono, true), (&rainbow, false)] {
                let Some((offs, from, to)) = slot else {
                    continue;
                };
                if a < *from || a > *to {
                    continue;
                }
                buf.clear();
                buf.push(a as usize);
                buf.extend(offs.iter().map(|&o| (a + o) as usize));
                let found = if is_mono {
                    mono_coordinate(c, &buf)
                        .map(|j| (WitnessKind::Monochromatic, Evidence::Coordinate(j)))
                } else if bounded {
                    fully_rainbow_positions(c, &buf)
                        .map(|l| (WitnessKind::FullyRainbow, Evidence::FinalLabel(l)))
                } else {
                    rainbow_positions(c, &buf).then_some((WitnessKind::Rainbow, Evidence::None))
                };
                if let Some((kind, evidence)) = found {
                    return Some(Witness {
                        kind,
                        a,
                        d,
                        elements: buf.iter().map(|&e| e as i64).collect(),
                        evidence,
                    });
                }
            }
        }
    }
    None
}

/// A replayable witness bound to the colouring it was found in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: WitnessKind,
    pub a: i64,
    pub d: i64,
    pub elements: Vec<i64>,
    pub evidence: Evidence,
    pub family: PolynomialFamily,
    pub h: i64,
    pub digest: String,
    pub d_policy: DPolicy,
}

impl Certificate {
    pub fn from_witness(c: &TypedColouring, query: &WitnessQuery, witness: Witness) -> Self {
        let family = match witness.kind {
            WitnessKind::Monochromatic => query.mono(),
            _ => query.rainbow(),
        }
        .cloned()
        .expect("a witness comes from an enabled family");
        Self {
            kind: witness.kind,
            a: witness.a,
            d: witness.d,
            elements: witness.elements,
            evidence: witness.evidence,
            family,
            h: query.h,
            digest: colouring_digest(c),
            d_policy: query.policy,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }
}

/// [`scan_witness`] packaged as a certificate.
pub fn find_witness(c: &TypedColouring, query: &WitnessQuery) -> Option<Certificate> {
    scan_witness(c, query).map(|w| Certificate::from_witness(c, query, w))
}

/// Why a certificate was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    DigestMismatch,
    InvalidFamily,
    PolicyViolation,
    ElementMismatch,
    OutOfRange,
    PredicateFailed,
    EvidenceMismatch,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::DigestMismatch => "digest mismatch",
            RejectReason::InvalidFamily => "invalid family",
            RejectReason::PolicyViolation => "policy violation",
            RejectReason::ElementMismatch => "element mismatch",
            RejectReason::OutOfRange => "out of range",
            RejectReason::PredicateFailed => "predicate failed",
            RejectReason::EvidenceMismatch => "evidence mismatch",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Replays a certificate against `c`. Checks run in a fixed order: digest,
/// family, `d` policy, element recomputation, range, predicate, evidence.
pub fn verify_certificate(c: &TypedColouring, cert: &Certificate) -> Result<(), RejectReason> {
    if cert.digest != colouring_digest(c) {
        return Err(RejectReason::DigestMismatch);
    }
    let expected_role = match cert.kind {
        WitnessKind::Monochromatic => FamilyRole::Mono,
        _ => FamilyRole::Rainbow,
    };
    if cert.family.role() != expected_role || cert.family.validate().is_err() {
        return Err(RejectReason::InvalidFamily);
    }
    let admitted = match cert.kind {
        WitnessKind::Monochromatic => cert.d_policy.admits_mono(cert.d),
        _ => cert.d_policy.admits_rainbow(cert.d, cert.h),
    };
    if !admitted {
        return Err(RejectReason::PolicyViolation);
    }
    if generate(&cert.family, cert.a, cert.d).as_deref() != Some(cert.elements.as_slice()) {
        return Err(RejectReason::ElementMismatch);
    }
    let elems = positions(c, &cert.elements).map_err(|_| RejectReason::OutOfRange)?;
    match (cert.kind, cert.evidence) {
        (WitnessKind::Monochromatic, Evidence::Coordinate(j)) => {
            if j == 0 || j > c.m() {
                return Err(RejectReason::EvidenceMismatch);
            }
            let first = c.label(elems[0], j);
            if elems.iter().any(|&e| c.label(e, j) != first) {
                return Err(RejectReason::PredicateFailed);
            }
        }
        (WitnessKind::Rainbow, Evidence::None) => {
            if !rainbow_positions(c, &elems) {
                return Err(RejectReason::PredicateFailed);
            }
        }
        (WitnessKind::FullyRainbow, Evidence::FinalLabel(label)) => {
            match fully_rainbow_positions(c, &elems) {
                Some(found) if found == label => {}
                Some(_) => return Err(RejectReason::EvidenceMismatch),
                None => return Err(RejectReason::PredicateFailed),
            }
        }
        _ => return Err(RejectReason::EvidenceMismatch),
    }
    Ok(())
}

/// One focused set `A(d)` of a collection.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FocusedMember {
    pub d: i64,
    pub elements: Vec<i64>,
}

/// Sets `A_1(d_1), ..., A_q(d_q)` focused at a common point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocusedCollection {
    pub focus: i64,
    pub family: PolynomialFamily,
    pub members: Vec<FocusedMember>,
}

/// `w_c` per final label, the support `g = {c : w_c <= m + 1}` and the
/// norm `sum_{c in g} w_c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormReport {
    /// `counts[c - 1] = w_c`.
    pub counts: Vec<usize>,
    pub support: Vec<Label>,
    pub norm: usize,
}

pub fn collection_norm(
    c: &TypedColouring,
    collection: &FocusedCollection,
) -> Result<NormReport, WitnessError> {
    let n = c.n().ok_or(WitnessError::NoBoundedCoordinate)?;
    let mut counts = vec![0usize; n as usize];
    for (i, member) in collection.members.iter().enumerate() {
        let label = positions(c, &member.elements)
            .ok()
            .and_then(|p| fully_rainbow_positions(c, &p))
            .ok_or(WitnessError::NotFullyRainbow(i))?;
        counts[label as usize - 1] += 1;
    }
    let threshold = c.m() + 1;
    let support: Vec<Label> = (1..=n)
        .filter(|&l| counts[l as usize - 1] <= threshold)
        .collect();
    let norm = support.iter().map(|&l| counts[l as usize - 1]).sum();
    Ok(NormReport {
        counts,
        support,
        norm,
    })
}

/// Every member focused at the collection's focus and fully-rainbow, and
/// the union of members a rainbow set of distinct elements.
pub fn validate_collection(c: &TypedColouring, collection: &FocusedCollection) -> bool {
    let mut union = Vec::new();
    for member in &collection.members {
        if !matches!(
            is_focused(
                &member.elements,
                collection.focus,
                &collection.family,
                member.d
            ),
            Ok(true)
        ) {
            return false;
        }
        if !matches!(is_fully_rainbow(c, &member.elements), Ok(Some(_))) {
            return false;
        }
        union.extend_from_slice(&member.elements);
    }
    union.is_empty() || matches!(is_rainbow(c, &union), Ok(true))
}

/// Default node budget for [`find_focused_collection`].
pub const DEFAULT_FOCUS_BUDGET: u64 = 1 << 20;

/// Searches `d` in `(h, d_max]` for fully-rainbow sets focused at `a` and
/// backtracks over compatible choices until the norm reaches `target`.
///
/// Only collections with every `w_c <= m + 1` are explored; dropping all
/// members of an over-full label never changes the norm, so this loses
/// nothing. The search gives up (returns `None`) once `budget` nodes are
/// spent, so `None` is not a proof of absence.
pub fn find_focused_collection(
    c: &TypedColouring,
    family: &PolynomialFamily,
    a: i64,
    h: i64,
    target: usize,
    budget: u64,
) -> Result<Option<FocusedCollection>, WitnessError> {
    c.check_position(a)?;
    let empty = FocusedCollection {
        focus: a,
        family: family.clone(),
        members: Vec::new(),
    };
    if target == 0 {
        return Ok(Some(empty));
    }
    let Some(n) = c.n() else { return Ok(None) };
    let Some(cap) = d_max(family, c.len() as i64, h)? else {
        return Ok(None);
    };

    let mut candidates: Vec<(FocusedMember, Vec<usize>, Label)> = Vec::new();
    for d in (h.max(0) + 1)..=cap {
        let Some(tuple) = generate(family, a, d) else {
            continue;
        };
        let elements = tuple[1..].to_vec();
        let Ok(pos) = positions(c, &elements) else {
            continue;
        };
        if !is_focused(&elements, a, family, d)? {
            continue;
        }
        if let Some(label) = fully_rainbow_positions(c, &pos) {
            candidates.push((FocusedMember { d, elements }, pos, label));
        }
    }

    struct Dfs<'a> {
        c: &'a TypedColouring,
        candidates: &'a [(FocusedMember, Vec<usize>, Label)],
        per_label: Vec<usize>,
        chosen: Vec<usize>,
        union: Vec<usize>,
        target: usize,
        limit: usize,
        nodes: u64,
        budget: u64,
    }

    impl Dfs<'_> {
        fn compatible(&self, pos: &[usize]) -> bool {
            pos.iter().all(|&x| {
                self.union
                    .iter()
                    .all(|&y| x != y && !self.c.row(y).iter().any(|l| self.c.row(x).contains(l)))
            })
        }

        fn run(&mut self, from: usize) -> bool {
            if self.chosen.len() == self.target {
                return true;
            }
            for i in from..self.candidates.len() {
                if self.nodes >= self.budget {
                    return false;
                }
                self.nodes += 1;
                let (_, pos, label) = &self.candidates[i];
                let slot = *label as usize - 1;
                if self.per_label[slot] >= self.limit || !self.compatible(pos) {
                    continue;
                }
                self.per_label[slot] += 1;
                self.chosen.push(i);
                let mark = self.union.len();
                self.union.extend_from_slice(pos);
                if self.run(i + 1) {
                    return true;
                }
                self.union.truncate(mark);
                self.chosen.pop();
                self.per_label[slot] -= 1;
            }
            false
        }
    }

    let mut dfs = Dfs {
        c,
        candidates: &candidates,
        per_label: vec![0; n as usize],
        chosen: Vec::new(),
        union: Vec::new(),
        target,
        limit: c.m() + 1,
        nodes: 0,
        budget,
    };
    if !dfs.run(0) {
        return Ok(None);
    }
    let members = dfs
        .chosen
        .iter()
        .map(|&i| candidates[i].0.clone())
        .collect();
    Ok(Some(FocusedCollection { members, ..empty }))
}
