//! Triangular fuzzy numbers and the linguistic judgment scale.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("components must be finite, got ({0}, {1}, {2})")]
    NotFinite(f64, f64, f64),
    #[error("components must satisfy l <= m <= u, got ({0}, {1}, {2})")]
    Unordered(f64, f64, f64),
    #[error("{op} requires nonnegative operands, got {value}")]
    Negative { op: &'static str, value: Tfn },
    #[error("division by a fuzzy number with a nonpositive component: {0}")]
    DivisionByZero(Tfn),
    #[error("reciprocal of a fuzzy number with a nonpositive component: {0}")]
    NonPositiveReciprocal(Tfn),
    #[error("complement requires all components in [0, 1], got {0}")]
    OutsideUnitInterval(Tfn),
    #[error("unknown linguistic term {0:?}; valid terms are: {valid}", valid = LinguisticTerm::ALL.map(|t| t.label()).join(", "))]
    UnknownTerm(String),
}

/// Exact indifference `(0.5, 0.5, 0.5)`, the fixed point of the complement.
pub const INDIFFERENCE: Tfn = Tfn::raw(0.5, 0.5, 0.5);

/// Triangular fuzzy number `(l, m, u)` with `l <= m <= u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tfn {
    l: f64,
    m: f64,
    u: f64,
}

impl Tfn {
    pub fn new(l: f64, m: f64, u: f64) -> Result<Self, FuzzyError> {
        if !(l.is_finite() && m.is_finite() && u.is_finite()) {
            return Err(FuzzyError::NotFinite(l, m, u));
        }
        if !(l <= m && m <= u) {
            return Err(FuzzyError::Unordered(l, m, u));
        }
        Ok(Self { l, m, u })
    }

    /// Crisp value `x` as the degenerate triangle `(x, x, x)`.
    pub fn crisp(x: f64) -> Result<Self, FuzzyError> {
        Self::new(x, x, x)
    }

    // Only for literals known to be ordered.
    const fn raw(l: f64, m: f64, u: f64) -> Self {
        Self { l, m, u }
    }

    pub fn lower(&self) -> f64 {
        self.l
    }

    pub fn modal(&self) -> f64 {
        self.m
    }

    pub fn upper(&self) -> f64 {
        self.u
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.l, self.m, self.u]
    }

    fn is_nonnegative(&self) -> bool {
        self.l >= 0.0
    }

    fn is_positive(&self) -> bool {
        self.l > 0.0
    }

    /// Degree of membership of `x`, piecewise linear between the support
    /// endpoints with a peak of 1 at the modal value.
    pub fn membership(&self, x: f64) -> f64 {
        let Tfn { l, m, u } = *self;
        if x == m {
            1.0
        } else if x < l || x > u {
            0.0
        } else if x < m {
            (x - l) / (m - l)
        } else {
            (u - x) / (u - m)
        }
    }

    pub fn add(&self, other: &Tfn) -> Tfn {
        Tfn::raw(self.l + other.l, self.m + other.m, self.u + other.u)
    }

    /// Fuzzy subtraction; the support widens to `(l1 - u2, m1 - m2, u1 - l2)`.
    pub fn sub(&self, other: &Tfn) -> Tfn {
        Tfn::raw(self.l - other.u, self.m - other.m, self.u - other.l)
    }

    /// Component-wise product; both operands must be nonnegative.
    pub fn mul(&self, other: &Tfn) -> Result<Tfn, FuzzyError> {
        for t in [self, other] {
            if !t.is_nonnegative() {
                return Err(FuzzyError::Negative {
                    op: "multiply",
                    value: *t,
                });
            }
        }
        Ok(Tfn::raw(
            self.l * other.l,
            self.m * other.m,
            self.u * other.u,
        ))
    }

    /// `(l1 / u2, m1 / m2, u1 / l2)`; the divisor must be strictly positive
    /// and the dividend nonnegative.
    pub fn div(&self, other: &Tfn) -> Result<Tfn, FuzzyError> {
        if !other.is_positive() {
            return Err(FuzzyError::DivisionByZero(*other));
        }
        if !self.is_nonnegative() {
            return Err(FuzzyError::Negative {
                op: "divide",
                value: *self,
            });
        }
        Ok(Tfn::raw(
            self.l / other.u,
            self.m / other.m,
            self.u / other.l,
        ))
    }

    /// Multiplicative reciprocal `(1/u, 1/m, 1/l)`.
    pub fn reciprocal(&self) -> Result<Tfn, FuzzyError> {
        if !self.is_positive() {
            return Err(FuzzyError::NonPositiveReciprocal(*self));
        }
        Ok(Tfn::raw(1.0 / self.u, 1.0 / self.m, 1.0 / self.l))
    }

    /// Additive complement `(1 - u, 1 - m, 1 - l)` on the unit scale.
    ///
    /// Each difference is taken in decimal on the shortest round-trip
    /// representation of the component, so `complement` maps printed scale
    /// literals onto printed literals and is an exact involution for values
    /// with at most 15 decimal places.
    pub fn complement(&self) -> Result<Tfn, FuzzyError> {
        if !(self.l >= 0.0 && self.u <= 1.0) {
            return Err(FuzzyError::OutsideUnitInterval(*self));
        }
        Ok(Tfn::raw(
            one_minus(self.u),
            one_minus(self.m),
            one_minus(self.l),
        ))
    }
}

/// `1 - x` for `x` in `[0, 1]`, evaluated on the decimal digits that `x`
/// prints as.
fn one_minus(x: f64) -> f64 {
    let text = x.to_string();
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    // u128 holds 38 digits.
    if frac_part.len() > 36 {
        return 1.0 - x;
    }
    let (Ok(int_digits), Ok(frac_digits)) = (
        int_part.parse::<u128>(),
        if frac_part.is_empty() {
            Ok(0)
        } else {
            frac_part.parse::<u128>()
        },
    ) else {
        return 1.0 - x;
    };
    let places = frac_part.len() as u32;
    let scale = 10u128.pow(places);
    let scaled = int_digits * scale + frac_digits;
    let diff = scale - scaled;
    let int_out = diff / scale;
    let frac_out = diff % scale;
    let repr = if places == 0 {
        format!("{int_out}")
    } else {
        format!("{int_out}.{frac_out:0width$}", width = places as usize)
    };
    repr.parse().unwrap_or(1.0 - x)
}

impl fmt::Display for Tfn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.l, self.m, self.u)
    }
}

impl Serialize for Tfn {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.as_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Tfn {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [l, m, u] = <[f64; 3]>::deserialize(deserializer)?;
        Tfn::new(l, m, u).map_err(serde::de::Error::custom)
    }
}

/// Verbal judgment answering "how important is A relative to B".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinguisticTerm {
    EquallyImportant,
    SlightlyImportant,
    Important,
    VeryImportant,
    AbsolutelyImportant,
}

impl LinguisticTerm {
    pub const ALL: [LinguisticTerm; 5] = [
        LinguisticTerm::EquallyImportant,
        LinguisticTerm::SlightlyImportant,
        LinguisticTerm::Important,
        LinguisticTerm::VeryImportant,
        LinguisticTerm::AbsolutelyImportant,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LinguisticTerm::EquallyImportant => "Equally Important",
            LinguisticTerm::SlightlyImportant => "Slightly Important",
            LinguisticTerm::Important => "Important",
            LinguisticTerm::VeryImportant => "Very Important",
            LinguisticTerm::AbsolutelyImportant => "Absolutely Important",
        }
    }

    /// Fuzzy scale used when this term favors the first item.
    pub fn scale(self) -> Tfn {
        ScaleTable::canonical().scale(self)
    }

    /// Scale recorded for the reverse direction of the same answer.
    pub fn reciprocal_scale(self) -> Tfn {
        ScaleTable::canonical().reciprocal_scale(self)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for LinguisticTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for LinguisticTerm {
    type Err = FuzzyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LinguisticTerm::ALL
            .into_iter()
            .find(|t| t.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| FuzzyError::UnknownTerm(s.to_string()))
    }
}

impl Serialize for LinguisticTerm {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for LinguisticTerm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Look up the `(scale, reciprocal scale)` pair for a term by name.
pub fn scale_of(term: &str) -> Result<(Tfn, Tfn), FuzzyError> {
    let term: LinguisticTerm = term.parse()?;
    Ok((term.scale(), term.reciprocal_scale()))
}

/// Mapping from linguistic terms to fuzzy scales.
///
/// [`ScaleTable::canonical`] is the table every real questionnaire uses;
/// other tables exist for experiments such as collapsing all fuzziness.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleTable {
    rows: [(Tfn, Tfn); 5],
}

const CANONICAL: ScaleTable = ScaleTable {
    rows: [
        (Tfn::raw(0.5, 0.5, 0.55), Tfn::raw(0.45, 0.5, 0.5)),
        (Tfn::raw(0.55, 0.6, 0.65), Tfn::raw(0.35, 0.4, 0.45)),
        (Tfn::raw(0.65, 0.7, 0.75), Tfn::raw(0.25, 0.3, 0.35)),
        (Tfn::raw(0.75, 0.8, 0.85), Tfn::raw(0.15, 0.2, 0.25)),
        (Tfn::raw(0.85, 0.9, 0.9), Tfn::raw(0.1, 0.1, 0.15)),
    ],
};

impl ScaleTable {
    pub fn canonical() -> &'static ScaleTable {
        &CANONICAL
    }

    /// Build a table from one scale per term (in [`LinguisticTerm::ALL`]
    /// order); reverse entries are the complements.
    pub fn from_scales(scales: [Tfn; 5]) -> Result<Self, FuzzyError> {
        let mut rows = CANONICAL.rows;
        for (row, scale) in rows.iter_mut().zip(scales) {
            *row = (scale, scale.complement()?);
        }
        Ok(Self { rows })
    }

    /// The canonical table with every triangle collapsed onto its modal value.
    pub fn degenerate() -> Self {
        let scales = CANONICAL.rows.map(|(s, _)| Tfn::raw(s.m, s.m, s.m));
        Self::from_scales(scales).expect("modal values lie in [0, 1]")
    }

    pub fn scale(&self, term: LinguisticTerm) -> Tfn {
        self.rows[term.index()].0
    }

    pub fn reciprocal_scale(&self, term: LinguisticTerm) -> Tfn {
        self.rows[term.index()].1
    }
}

impl Default for ScaleTable {
    fn default() -> Self {
        CANONICAL.clone()
    }
}
