//! Discrete fuzzy sets, membership degrees and the extension principle.
//!
//! A [`FuzzySet`] is a finite support of real values, each carrying a
//! [`Degree`] in `[0, 1]`, plus an optional opaque unit tag. Sets are kept in
//! canonical form: supports strictly increasing, no near-duplicates.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default absolute tolerance for comparing supports and degrees.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Supports closer than this are considered the same point.
pub const SUPPORT_MERGE_EPS: f64 = 1e-9;

/// Upper bound on the cartesian product enumerated by [`extend`].
pub const MAX_COMBINATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("fuzzy set must have at least one element")]
    EmptyFuzzySet,
    #[error("degree {0} is outside [0, 1]")]
    DegreeOutOfRange(f64),
    #[error("support value {0} is not finite")]
    NonFiniteSupport(f64),
    #[error("unit mismatch: {left:?} vs {right:?}")]
    UnitMismatch {
        left: Option<String>,
        right: Option<String>,
    },
    #[error("intersection of fuzzy sets is empty")]
    EmptyResult,
    #[error("t-norm aggregation needs at least one degree")]
    EmptyInput,
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("extension would enumerate {0} combinations (limit {MAX_COMBINATIONS})")]
    TooManyCombinations(usize),
}

/// A membership grade in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Degree(f64);

impl Degree {
    pub const ZERO: Degree = Degree(0.0);
    pub const ONE: Degree = Degree(1.0);

    pub fn new(value: f64) -> Result<Self, FuzzyError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Degree(value))
        } else {
            Err(FuzzyError::DegreeOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn min(self, other: Degree) -> Degree {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Degree) -> Degree {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }

    pub fn complement(self) -> Degree {
        Degree(1.0 - self.0)
    }

    /// Strictly between 0 and 1, i.e. a genuinely partial truth.
    pub fn is_partial(self) -> bool {
        self.0 > 0.0 && self.0 < 1.0
    }

    pub fn approx_eq(self, other: Degree, tol: f64) -> bool {
        (self.0 - other.0).abs() <= tol
    }
}

impl TryFrom<f64> for Degree {
    type Error = FuzzyError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Degree::new(value)
    }
}

impl From<Degree> for f64 {
    fn from(d: Degree) -> f64 {
        d.0
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_num(self.0))
    }
}

/// Human formatting for reals: at most ten decimals, trailing zeros trimmed.
pub fn fmt_num(value: f64) -> String {
    let s = format!("{value:.10}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        &s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// One `support/degree` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub support: f64,
    pub degree: Degree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFuzzySet")]
pub struct FuzzySet {
    elements: Vec<Element>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit: Option<String>,
}

#[derive(Deserialize)]
struct RawFuzzySet {
    elements: Vec<Element>,
    #[serde(default)]
    unit: Option<String>,
}

impl TryFrom<RawFuzzySet> for FuzzySet {
    type Error = FuzzyError;

    fn try_from(raw: RawFuzzySet) -> Result<Self, Self::Error> {
        let pairs: Vec<(f64, f64)> = raw
            .elements
            .iter()
            .map(|e| (e.support, e.degree.value()))
            .collect();
        FuzzySet::new(&pairs, raw.unit.as_deref())
    }
}

impl FuzzySet {
    /// Builds a canonical set: sorted by support, near-duplicate supports
    /// merged keeping the maximal degree.
    pub fn new(pairs: &[(f64, f64)], unit: Option<&str>) -> Result<Self, FuzzyError> {
        let mut elements = Vec::with_capacity(pairs.len());
        for &(support, degree) in pairs {
            if !support.is_finite() {
                return Err(FuzzyError::NonFiniteSupport(support));
            }
            elements.push(Element {
                support,
                degree: Degree::new(degree)?,
            });
        }
        Self::from_elements(elements, unit.map(str::to_string))
    }

    fn from_elements(mut elements: Vec<Element>, unit: Option<String>) -> Result<Self, FuzzyError> {
        if elements.is_empty() {
            return Err(FuzzyError::EmptyFuzzySet);
        }
        elements.sort_by(|a, b| a.support.total_cmp(&b.support));
        let mut merged: Vec<Element> = Vec::with_capacity(elements.len());
        for e in elements {
            match merged.last_mut() {
                Some(last) if (e.support - last.support).abs() <= SUPPORT_MERGE_EPS => {
                    last.degree = last.degree.max(e.degree);
                }
                _ => merged.push(e),
            }
        }
        Ok(FuzzySet {
            elements: merged,
            unit,
        })
    }

    /// A crisp value as the degenerate set `{value/1}`.
    pub fn singleton(value: f64, unit: Option<&str>) -> Result<Self, FuzzyError> {
        Self::new(&[(value, 1.0)], unit)
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn unit(&self) -> Option<&str> {
        self.unit.as_deref()
    }

    pub fn with_unit(mut self, unit: Option<&str>) -> Self {
        self.unit = unit.map(str::to_string);
        self
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn supports(&self) -> impl Iterator<Item = f64> + '_ {
        self.elements.iter().map(|e| e.support)
    }

    /// Membership of `x`, zero when `x` is off the support.
    pub fn degree_of(&self, x: f64, tol: f64) -> Degree {
        self.elements
            .iter()
            .find(|e| (e.support - x).abs() <= tol)
            .map(|e| e.degree)
            .unwrap_or(Degree::ZERO)
    }

    /// Support point with the highest degree (first one on ties).
    pub fn peak(&self) -> f64 {
        let mut best = self.elements[0];
        for e in &self.elements[1..] {
            if e.degree.value() > best.degree.value() {
                best = *e;
            }
        }
        best.support
    }

    pub fn approx_eq(&self, other: &FuzzySet, tol: f64) -> bool {
        fs_equal(self, other, tol)
    }
}

impl fmt::Display for FuzzySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}/{}", fmt_num(e.support), e.degree)?;
        }
        f.write_str("}")?;
        if let Some(unit) = &self.unit {
            write!(f, " {unit}")?;
        }
        Ok(())
    }
}

/// Pairwise comparison at absolute tolerance; units must match exactly.
pub fn fs_equal(a: &FuzzySet, b: &FuzzySet, tol: f64) -> bool {
    a.unit == b.unit
        && a.elements.len() == b.elements.len()
        && a.elements.iter().zip(&b.elements).all(|(x, y)| {
            (x.support - y.support).abs() <= tol && x.degree.approx_eq(y.degree, tol)
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    MaxUnion,
    MinIntersection,
}

pub fn fs_combine(kind: Combine, a: &FuzzySet, b: &FuzzySet) -> Result<FuzzySet, FuzzyError> {
    if a.unit != b.unit {
        return Err(FuzzyError::UnitMismatch {
            left: a.unit.clone(),
            right: b.unit.clone(),
        });
    }
    let matching = |set: &FuzzySet, x: f64| {
        set.elements
            .iter()
            .find(|e| (e.support - x).abs() <= SUPPORT_MERGE_EPS)
            .map(|e| e.degree)
    };
    let elements: Vec<Element> = match kind {
        Combine::MaxUnion => a.elements.iter().chain(&b.elements).copied().collect(),
        Combine::MinIntersection => a
            .elements
            .iter()
            .filter_map(|e| {
                matching(b, e.support).map(|d| Element {
                    support: e.support,
                    degree: e.degree.min(d),
                })
            })
            .collect(),
    };
    if elements.is_empty() {
        return Err(FuzzyError::EmptyResult);
    }
    FuzzySet::from_elements(elements, a.unit.clone())
}

/// Argument to [`extend`]: crisp reals behave as singleton supports.
#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Crisp(f64),
    Fuzzy(&'a FuzzySet),
}

/// Result of lifting a function: crisp when every argument was crisp.
#[derive(Debug, Clone, PartialEq)]
pub enum Lifted {
    Crisp(f64),
    Fuzzy(FuzzySet),
}

/// Zadeh extension principle over discrete supports.
///
/// Every combination of support points is evaluated; the degree of a
/// combination is the minimum of its components' degrees, and equal outputs
/// (within [`SUPPORT_MERGE_EPS`]) keep the maximum.
pub fn extend<F>(f: F, args: &[Operand<'_>], unit: Option<&str>) -> Result<Lifted, FuzzyError>
where
    F: Fn(&[f64]) -> Result<f64, String>,
{
    let supports: Vec<Vec<Element>> = args
        .iter()
        .map(|arg| match arg {
            Operand::Crisp(x) => vec![Element {
                support: *x,
                degree: Degree::ONE,
            }],
            Operand::Fuzzy(set) => set.elements.clone(),
        })
        .collect();

    let all_crisp = args.iter().all(|a| matches!(a, Operand::Crisp(_)));
    if all_crisp {
        let point: Vec<f64> = supports.iter().map(|s| s[0].support).collect();
        let y = f(&point).map_err(FuzzyError::Evaluation)?;
        if !y.is_finite() {
            return Err(FuzzyError::Evaluation(format!("non-finite result {y}")));
        }
        return Ok(Lifted::Crisp(y));
    }

    let total = supports
        .iter()
        .try_fold(1usize, |acc, s| acc.checked_mul(s.len()))
        .unwrap_or(usize::MAX);
    if total > MAX_COMBINATIONS {
        return Err(FuzzyError::TooManyCombinations(total));
    }

    let mut index = vec![0usize; supports.len()];
    let mut point = vec![0.0; supports.len()];
    let mut out = Vec::with_capacity(total);
    loop {
        let mut degree = Degree::ONE;
        for (k, &i) in index.iter().enumerate() {
            point[k] = supports[k][i].support;
            degree = degree.min(supports[k][i].degree);
        }
        let y = f(&point).map_err(FuzzyError::Evaluation)?;
        if !y.is_finite() {
            return Err(FuzzyError::Evaluation(format!(
                "non-finite result {y} at {point:?}"
            )));
        }
        out.push(Element { support: y, degree });

        // odometer increment, last position fastest
        let mut k = supports.len();
        loop {
            if k == 0 {
                return FuzzySet::from_elements(out, unit.map(str::to_string)).map(Lifted::Fuzzy);
            }
            k -= 1;
            index[k] += 1;
            if index[k] < supports[k].len() {
                break;
            }
            index[k] = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TNorm {
    #[default]
    Min,
    Product,
}

impl std::str::FromStr for TNorm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(TNorm::Min),
            "product" | "prod" => Ok(TNorm::Product),
            other => Err(format!("unknown t-norm `{other}` (expected min or product)")),
        }
    }
}

pub fn aggregate_tnorm(kind: TNorm, degrees: &[Degree]) -> Result<Degree, FuzzyError> {
    let (first, rest) = degrees.split_first().ok_or(FuzzyError::EmptyInput)?;
    let value = match kind {
        TNorm::Min => rest.iter().fold(*first, |acc, d| acc.min(*d)).value(),
        TNorm::Product => rest.iter().fold(first.value(), |acc, d| acc * d.value()),
    };
    Degree::new(value.clamp(0.0, 1.0))
}
