//! Integral polynomials (integer coefficients, zero constant term) and the
//! family-level constructions built on them: weight vectors and their
//! ordering, the shift threshold `h`, the B* reduction, scaling and `d_max`.
//!
//! Coefficients are `i64` and every arithmetic step is overflow-checked;
//! an overflow is a hard [`PolyError::Overflow`], never a wrapped value.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("integer overflow in polynomial arithmetic")]
    Overflow,
    #[error("family is empty")]
    EmptyFamily,
    #[error("rainbow family contains the zero polynomial")]
    ZeroInRainbow,
    #[error("rainbow family members {0} and {1} are equal")]
    DuplicateInRainbow(usize, usize),
    #[error("first member must have minimal degree (degree {first}, but member {index} has degree {found})")]
    FirstNotMinimal {
        first: usize,
        index: usize,
        found: usize,
    },
    #[error("d_max ({d_max}) must exceed h ({h})")]
    DMaxNotAboveH { d_max: i64, h: i64 },
    #[error("scale factor must be at least 1, got {0}")]
    BadScale(i64),
    #[error("interval length must be at least 1, got {0}")]
    BadLength(i64),
}

/// A polynomial with integer coefficients and `p(0) = 0`.
///
/// `coeffs[i]` is the coefficient of `x^(i+1)`; the constant term is not
/// representable. The trailing coefficient is always nonzero, so the zero
/// polynomial is the empty vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(from = "Vec<i64>", into = "Vec<i64>")]
pub struct IntegralPolynomial {
    coeffs: Vec<i64>,
}

impl From<Vec<i64>> for IntegralPolynomial {
    fn from(coeffs: Vec<i64>) -> Self {
        Self::new(coeffs)
    }
}

impl From<IntegralPolynomial> for Vec<i64> {
    fn from(p: IntegralPolynomial) -> Self {
        p.coeffs
    }
}

impl IntegralPolynomial {
    /// Builds a polynomial from coefficients of `x, x^2, ...`.
    pub fn new(mut coeffs: Vec<i64>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// `c * x^power`, `power >= 1`.
    pub fn monomial(c: i64, power: usize) -> Self {
        assert!(power >= 1, "integral polynomials have no constant term");
        let mut coeffs = vec![0; power];
        coeffs[power - 1] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// Coefficient of `x^power`; zero for `power == 0` and beyond the degree.
    pub fn coeff(&self, power: usize) -> i64 {
        if power == 0 {
            0
        } else {
            self.coeffs.get(power - 1).copied().unwrap_or(0)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial at degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn leading_coefficient(&self) -> Option<i64> {
        self.coeffs.last().copied()
    }

    /// Exact `p(d)`.
    pub fn evaluate(&self, d: i64) -> Result<i64, PolyError> {
        let mut acc: i64 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc
                .checked_add(c)
                .and_then(|v| v.checked_mul(d))
                .ok_or(PolyError::Overflow)?;
        }
        Ok(acc)
    }

    /// `x -> p(x + h) - p(h)`, again integral.
    pub fn shift_difference(&self, h: i64) -> Result<Self, PolyError> {
        let deg = self.degree();
        let mut out = vec![0i64; deg];
        // binomial row for (x + h)^i, updated in place: row[k] = C(i,k) h^(i-k)
        let mut row: Vec<i64> = vec![1];
        for i in 1..=deg {
            let mut next = vec![0i64; i + 1];
            for k in 0..=i {
                let from_x = if k >= 1 { row[k - 1] } else { 0 };
                let from_h = if k < i {
                    row[k].checked_mul(h).ok_or(PolyError::Overflow)?
                } else {
                    0
                };
                next[k] = from_x.checked_add(from_h).ok_or(PolyError::Overflow)?;
            }
            row = next;
            let a = self.coeff(i);
            if a == 0 {
                continue;
            }
            for k in 1..=i {
                let term = row[k].checked_mul(a).ok_or(PolyError::Overflow)?;
                out[k - 1] = out[k - 1].checked_add(term).ok_or(PolyError::Overflow)?;
            }
        }
        Ok(Self::new(out))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PolyError> {
        let len = self.degree().max(other.degree());
        let coeffs = (1..=len)
            .map(|i| {
                self.coeff(i)
                    .checked_sub(other.coeff(i))
                    .ok_or(PolyError::Overflow)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(coeffs))
    }

    /// `p(N x) / N`: coefficient of `x^i` becomes `a_i N^(i-1)`.
    pub fn scale(&self, factor: i64) -> Result<Self, PolyError> {
        if factor < 1 {
            return Err(PolyError::BadScale(factor));
        }
        let mut pow: i64 = 1;
        let mut coeffs = Vec::with_capacity(self.degree());
        for (i, &a) in self.coeffs.iter().enumerate() {
            if i > 0 {
                pow = pow.checked_mul(factor).ok_or(PolyError::Overflow)?;
            }
            coeffs.push(a.checked_mul(pow).ok_or(PolyError::Overflow)?);
        }
        Ok(Self::new(coeffs))
    }

    /// Smallest `R >= 1` such that `|p(d)| >= window` for every `|d| >= R`.
    ///
    /// With `n = deg p` and `S = sum_{i<n} |a_i|`, for `|d| >= 1` we have
    /// `|p(d)| >= |d|^(n-1) (|d| |a_n| - S)`, so `R = ceil((S + window) / |a_n|)`
    /// works. `None` for the zero polynomial.
    pub fn escape_radius(&self, window: i64) -> Option<i64> {
        let lead = self.leading_coefficient()?.unsigned_abs() as u128;
        let lower: u128 = self.coeffs[..self.degree() - 1]
            .iter()
            .map(|c| c.unsigned_abs() as u128)
            .sum();
        let need = lower + window.max(0) as u128;
        let r = need.div_ceil(lead).max(1);
        Some(r.min(i64::MAX as u128) as i64)
    }
}

impl fmt::Debug for IntegralPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for IntegralPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for power in (1..=self.degree()).rev() {
            let c = self.coeff(power);
            if c == 0 {
                continue;
            }
            let sign = if c < 0 { "-" } else { "+" };
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let abs = c.unsigned_abs();
            if abs != 1 {
                write!(f, "{abs}")?;
            }
            match power {
                1 => write!(f, "x")?,
                _ => write!(f, "x^{power}")?,
            }
        }
        Ok(())
    }
}

/// Whether a family plays the monochromatic (`A`) or rainbow (`B`) role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FamilyRole {
    #[default]
    Mono,
    Rainbow,
}

impl fmt::Display for FamilyRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyRole::Mono => "mono",
            FamilyRole::Rainbow => "rainbow",
        })
    }
}

/// An ordered family of integral polynomials.
///
/// Rainbow families hold pairwise distinct, nonzero members; mono families
/// may repeat and may contain zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolynomialFamily {
    polys: Vec<IntegralPolynomial>,
    role: FamilyRole,
}

impl PolynomialFamily {
    pub fn mono(polys: Vec<IntegralPolynomial>) -> Self {
        Self {
            polys,
            role: FamilyRole::Mono,
        }
    }

    pub fn rainbow(polys: Vec<IntegralPolynomial>) -> Result<Self, PolyError> {
        Self::with_role(polys, FamilyRole::Rainbow)
    }

    pub fn with_role(polys: Vec<IntegralPolynomial>, role: FamilyRole) -> Result<Self, PolyError> {
        let family = Self { polys, role };
        family.validate()?;
        Ok(family)
    }

    /// Convenience constructor from coefficient lists, as in the family file
    /// format.
    pub fn from_coeffs(lists: &[&[i64]], role: FamilyRole) -> Result<Self, PolyError> {
        Self::with_role(
            lists
                .iter()
                .map(|c| IntegralPolynomial::new(c.to_vec()))
                .collect(),
            role,
        )
    }

    pub fn validate(&self) -> Result<(), PolyError> {
        if self.role == FamilyRole::Rainbow {
            for (i, p) in self.polys.iter().enumerate() {
                if p.is_zero() {
                    return Err(PolyError::ZeroInRainbow);
                }
                if let Some(j) = self.polys[..i].iter().position(|q| q == p) {
                    return Err(PolyError::DuplicateInRainbow(j, i));
                }
            }
        }
        Ok(())
    }

    pub fn polys(&self) -> &[IntegralPolynomial] {
        &self.polys
    }

    pub fn role(&self) -> FamilyRole {
        self.role
    }

    pub fn into_role(self, role: FamilyRole) -> Result<Self, PolyError> {
        Self::with_role(self.polys, role)
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.polys
            .iter()
            .map(IntegralPolynomial::degree)
            .max()
            .unwrap_or(0)
    }

    /// `(p_1(d), ..., p_k(d))`.
    pub fn offsets(&self, d: i64) -> Result<Vec<i64>, PolyError> {
        self.polys.iter().map(|p| p.evaluate(d)).collect()
    }

    /// Bound `R` such that for `|d| >= R` some member leaves any window of
    /// `window` consecutive integers around a base point. `None` when every
    /// member is zero (offsets do not depend on `d`).
    pub fn escape_radius(&self, window: i64) -> Option<i64> {
        self.polys
            .iter()
            .filter_map(|p| p.escape_radius(window))
            .min()
    }
}

/// Per-degree counts of distinct leading coefficients, index 0 is degree 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightVector(pub Vec<usize>);

impl WeightVector {
    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    /// Strict order: compare from the highest degree down, after zero-padding.
    pub fn less(&self, other: &Self) -> bool {
        self.compare(other) == Ordering::Less
    }

    pub fn compare(&self, other: &Self) -> Ordering {
        let len = self.0.len().max(other.0.len());
        let at = |w: &Self, i: usize| w.0.get(i).copied().unwrap_or(0);
        for i in (0..len).rev() {
            match at(self, i).cmp(&at(other, i)) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

pub fn weight_vector(family: &PolynomialFamily) -> Result<WeightVector, PolyError> {
    if family.is_empty() {
        return Err(PolyError::EmptyFamily);
    }
    let top = family.max_degree();
    let mut seen: Vec<BTreeSet<i64>> = vec![BTreeSet::new(); top];
    for p in family.polys() {
        if let Some(lead) = p.leading_coefficient() {
            seen[p.degree() - 1].insert(lead);
        }
    }
    Ok(WeightVector(seen.into_iter().map(|s| s.len()).collect()))
}

pub fn weight_less(w1: &WeightVector, w2: &WeightVector) -> bool {
    w1.less(w2)
}

/// Whether the ordered pair `(i, j)` is constrained by the shift threshold:
/// distinct polynomials always are; identical ones only from degree 2 up,
/// since a linear polynomial equals each of its own shift differences.
fn admissible_pair(pi: &IntegralPolynomial, pj: &IntegralPolynomial) -> bool {
    pi != pj || pi.degree() >= 2
}

/// Every `h' >= 1` with `shift_difference(p_i, h') == p_j` for an
/// admissible pair, sorted and deduplicated.
pub fn shift_collisions(family: &PolynomialFamily) -> Result<Vec<i64>, PolyError> {
    let mut hits = BTreeSet::new();
    for pi in family.polys() {
        for pj in family.polys() {
            if !admissible_pair(pi, pj) {
                continue;
            }
            let n = pi.degree();
            // linear shift differences are the polynomial itself; the
            // admissible linear pairs are distinct, so they never collide
            if n < 2 || pj.degree() != n || pi.leading_coefficient() != pj.leading_coefficient() {
                continue;
            }
            // x^(n-1) coefficient: b_{n-1} + n b_n h' = a_{n-1}
            let lead = pi.leading_coefficient().unwrap_or(0);
            let num = pj.coeff(n - 1) as i128 - pi.coeff(n - 1) as i128;
            let den = n as i128 * lead as i128;
            if num % den != 0 {
                continue;
            }
            let candidate = num / den;
            if candidate < 1 || candidate > i64::MAX as i128 {
                continue;
            }
            let candidate = candidate as i64;
            match pi.shift_difference(candidate) {
                Ok(shifted) if &shifted == pj => {
                    hits.insert(candidate);
                }
                Ok(_) => {}
                // a collision at an overflowing shift would need a
                // coefficient outside i64, which pj cannot have
                Err(PolyError::Overflow) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(hits.into_iter().collect())
}

/// Smallest `h >= 0` with no admissible collision at any `h' > h`.
pub fn h_value(family: &PolynomialFamily) -> Result<i64, PolyError> {
    if family.is_empty() {
        return Err(PolyError::EmptyFamily);
    }
    Ok(shift_collisions(family)?.last().copied().unwrap_or(0))
}

/// Index pair `(d, j)` a B* member was first produced from (`j` 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BStarOrigin {
    pub d: i64,
    pub j: usize,
}

/// The reduced family `p'_{d,j}(x) = p'_j(x+d) - p'_1(x) - p'_j(d)` for
/// `d` in `{0} ∪ (h, d_max]`, zero members dropped, duplicates collapsed
/// onto the lexicographically smallest `(d, j)`.
pub fn bstar_family(
    family: &PolynomialFamily,
    h: i64,
    d_max: i64,
) -> Result<PolynomialFamily, PolyError> {
    Ok(bstar_family_with_origins(family, h, d_max)?.0)
}

pub fn bstar_family_with_origins(
    family: &PolynomialFamily,
    h: i64,
    d_max: i64,
) -> Result<(PolynomialFamily, Vec<BStarOrigin>), PolyError> {
    let rainbow = PolynomialFamily::rainbow(family.polys().to_vec())?;
    let first = rainbow.polys().first().ok_or(PolyError::EmptyFamily)?;
    if let Some((index, p)) = rainbow
        .polys()
        .iter()
        .enumerate()
        .find(|(_, p)| p.degree() < first.degree())
    {
        return Err(PolyError::FirstNotMinimal {
            first: first.degree(),
            index,
            found: p.degree(),
        });
    }
    if d_max <= h {
        return Err(PolyError::DMaxNotAboveH { d_max, h });
    }
    let ds = std::iter::once(0).chain((h.max(0) + 1)..=d_max);
    let mut out = Vec::new();
    let mut origins = Vec::new();
    let mut seen = BTreeSet::new();
    for d in ds {
        for (j, pj) in rainbow.polys().iter().enumerate() {
            let member = pj.shift_difference(d)?.checked_sub(first)?;
            if member.is_zero() || !seen.insert(member.clone()) {
                continue;
            }
            out.push(member);
            origins.push(BStarOrigin { d, j });
        }
    }
    Ok((PolynomialFamily::rainbow(out)?, origins))
}

/// `q_j(x) = p_j(N x) / N` for every member.
pub fn scale_family(family: &PolynomialFamily, factor: i64) -> Result<PolynomialFamily, PolyError> {
    if factor < 1 {
        return Err(PolyError::BadScale(factor));
    }
    let polys = family
        .polys()
        .iter()
        .map(|p| p.scale(factor))
        .collect::<Result<Vec<_>, _>>()?;
    PolynomialFamily::with_role(polys, family.role())
}

/// Largest `d > h` such that some `a` in `[1, N]` has `a + p_i(d)` in
/// `[1, N]` for every member; `None` if there is no such `d`.
pub fn d_max(family: &PolynomialFamily, interval: i64, h: i64) -> Result<Option<i64>, PolyError> {
    if interval < 1 {
        return Err(PolyError::BadLength(interval));
    }
    let radius = family
        .escape_radius(interval)
        .ok_or(PolyError::EmptyFamily)?;
    let lo = h.saturating_add(1);
    let mut d = radius - 1;
    while d >= lo {
        if fits_window(family, d, interval)? {
            return Ok(Some(d));
        }
        d -= 1;
    }
    Ok(None)
}

/// Whether `{0, p_1(d), ..., p_k(d)}` spans at most `interval - 1`.
pub(crate) fn fits_window(
    family: &PolynomialFamily,
    d: i64,
    interval: i64,
) -> Result<bool, PolyError> {
    let mut lo = 0i64;
    let mut hi = 0i64;
    for p in family.polys() {
        let v = match p.evaluate(d) {
            Ok(v) => v,
            Err(PolyError::Overflow) => return Ok(false),
            Err(e) => return Err(e),
        };
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((hi as i128 - lo as i128) < interval as i128)
}
