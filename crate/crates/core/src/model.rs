//! Entities: properties, methods, classes and fuzzy objects.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::parse_expr;
use crate::fuzzy::{fmt_num, fs_equal, Degree, FuzzySet, TNorm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum PropertyValue {
    CrispNumber {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unit: Option<String>,
    },
    CrispTuple {
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unit: Option<String>,
    },
    Interval {
        lo: f64,
        hi: f64,
        lo_closed: bool,
        hi_closed: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unit: Option<String>,
    },
    TruthDegree(Degree),
    /// Class-level "this property is fuzzy" without a concrete set.
    FuzzyMarker,
    Fuzzy(FuzzySet),
    /// A list of fuzzy quantities, e.g. the four side lengths of a figure.
    FuzzyTuple(Vec<FuzzySet>),
    /// Class-level "not specified".
    Absent,
}

impl PropertyValue {
    pub fn number(value: f64, unit: Option<&str>) -> Self {
        PropertyValue::CrispNumber {
            value,
            unit: unit.map(str::to_string),
        }
    }

    pub fn tuple(values: &[f64], unit: Option<&str>) -> Self {
        PropertyValue::CrispTuple {
            values: values.to_vec(),
            unit: unit.map(str::to_string),
        }
    }

    pub fn open_interval(lo: f64, hi: f64, unit: Option<&str>) -> Self {
        PropertyValue::Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
            unit: unit.map(str::to_string),
        }
    }

    pub fn truth(d: f64) -> Result<Self> {
        Ok(PropertyValue::TruthDegree(Degree::new(d)?))
    }

    pub fn validate(&self, property: &str) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidValue {
                property: property.to_string(),
                reason: reason.to_string(),
            })
        };
        match self {
            PropertyValue::CrispNumber { value, .. } if !value.is_finite() => bad("number is not finite"),
            PropertyValue::CrispTuple { values, .. } if values.is_empty() => bad("tuple is empty"),
            PropertyValue::CrispTuple { values, .. } if values.iter().any(|v| !v.is_finite()) => {
                bad("tuple component is not finite")
            }
            PropertyValue::Interval { lo, hi, .. } if !(lo < hi) => bad("interval needs lo < hi"),
            PropertyValue::FuzzyTuple(sets) if sets.is_empty() => bad("fuzzy tuple is empty"),
            _ => Ok(()),
        }
    }

    /// Absent and FuzzyMarker only describe classes.
    pub fn is_abstract(&self) -> bool {
        matches!(self, PropertyValue::Absent | PropertyValue::FuzzyMarker)
    }

    pub fn is_fuzzy(&self) -> bool {
        match self {
            PropertyValue::Fuzzy(_) | PropertyValue::FuzzyTuple(_) | PropertyValue::FuzzyMarker => true,
            PropertyValue::TruthDegree(d) => d.is_partial(),
            _ => false,
        }
    }

    pub fn unit(&self) -> Option<&str> {
        match self {
            PropertyValue::CrispNumber { unit, .. }
            | PropertyValue::CrispTuple { unit, .. }
            | PropertyValue::Interval { unit, .. } => unit.as_deref(),
            PropertyValue::Fuzzy(s) => s.unit(),
            _ => None,
        }
    }
}

/// Value equality at tolerance; different variants never match.
pub fn values_equivalent(a: &PropertyValue, b: &PropertyValue, tol: f64) -> bool {
    use PropertyValue::*;
    let close = |x: f64, y: f64| (x - y).abs() <= tol;
    match (a, b) {
        (CrispNumber { value: x, unit: u }, CrispNumber { value: y, unit: v }) => u == v && close(*x, *y),
        (CrispTuple { values: xs, unit: u }, CrispTuple { values: ys, unit: v }) => {
            u == v && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| close(*x, *y))
        }
        (
            Interval { lo: a_lo, hi: a_hi, lo_closed: a_lc, hi_closed: a_hc, unit: u },
            Interval { lo: b_lo, hi: b_hi, lo_closed: b_lc, hi_closed: b_hc, unit: v },
        ) => u == v && a_lc == b_lc && a_hc == b_hc && close(*a_lo, *b_lo) && close(*a_hi, *b_hi),
        (TruthDegree(x), TruthDegree(y)) => x.approx_eq(*y, tol),
        (FuzzyMarker, FuzzyMarker) | (Absent, Absent) => true,
        (Fuzzy(x), Fuzzy(y)) => fs_equal(x, y, tol),
        (FuzzyTuple(xs), FuzzyTuple(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| fs_equal(x, y, tol))
        }
        _ => false,
    }
}

/// Quotes a unit tag unless it is a bare word.
pub fn fmt_unit(unit: &str) -> String {
    let bare = unit.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && unit.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '^');
    if bare {
        unit.to_string()
    } else {
        format!("{unit:?}")
    }
}

fn fmt_fuzzy_set(set: &FuzzySet) -> String {
    let bare = set.clone().with_unit(None).to_string();
    match set.unit() {
        Some(u) => format!("{bare} {}", fmt_unit(u)),
        None => bare,
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = |unit: &Option<String>| unit.as_deref().map(|u| format!(" {}", fmt_unit(u))).unwrap_or_default();
        match self {
            PropertyValue::CrispNumber { value, unit } => write!(f, "{}{}", fmt_num(*value), suffix(unit)),
            PropertyValue::CrispTuple { values, unit } => {
                let parts: Vec<String> = values.iter().map(|v| fmt_num(*v)).collect();
                write!(f, "({}){}", parts.join(", "), suffix(unit))
            }
            PropertyValue::Interval { lo, hi, lo_closed, hi_closed, unit } => write!(
                f,
                "range{}{}, {}{}{}",
                if *lo_closed { '[' } else { '(' },
                fmt_num(*lo),
                fmt_num(*hi),
                if *hi_closed { ']' } else { ')' },
                suffix(unit)
            ),
            PropertyValue::TruthDegree(d) => write!(f, "fuzzy({d})"),
            PropertyValue::FuzzyMarker => f.write_str("fuzzy"),
            PropertyValue::Fuzzy(set) => f.write_str(&fmt_fuzzy_set(set)),
            PropertyValue::FuzzyTuple(sets) => {
                if sets.len() > 1 && sets.iter().all(|s| s == &sets[0]) {
                    write!(f, "[{}] * {}", fmt_fuzzy_set(&sets[0]), sets.len())
                } else {
                    let parts: Vec<String> = sets.iter().map(fmt_fuzzy_set).collect();
                    write!(f, "[{}]", parts.join(", "))
                }
            }
            PropertyValue::Absent => f.write_str("--"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Property {
    pub id: String,
    pub semantic: String,
    pub value: PropertyValue,
}

impl Property {
    pub fn new(id: impl Into<String>, semantic: impl Into<String>, value: PropertyValue) -> Self {
        Property {
            id: id.into(),
            semantic: semantic.into(),
            value,
        }
    }
}

/// How a binding reads a property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "kebab-case")]
pub enum Accessor {
    Scalar,
    /// 1-based component of a tuple.
    Component(usize),
    AllComponents,
    Count,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub variable: String,
    pub property: String,
    pub accessor: Accessor,
}

impl Binding {
    pub fn new(variable: &str, property: &str, accessor: Accessor) -> Self {
        Binding {
            variable: variable.to_string(),
            property: property.to_string(),
            accessor,
        }
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.accessor {
            Accessor::Scalar => write!(f, "{} = {}", self.variable, self.property),
            Accessor::Component(k) => write!(f, "{} = {}[{k}]", self.variable, self.property),
            Accessor::AllComponents => write!(f, "{} = {}[*]", self.variable, self.property),
            Accessor::Count => write!(f, "{} = #{}", self.variable, self.property),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodDef {
    pub id: String,
    pub semantic: String,
    pub body: String,
    pub bindings: Vec<Binding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result_unit: Option<String>,
}

impl MethodDef {
    pub fn new(
        id: &str,
        semantic: &str,
        body: &str,
        bindings: Vec<Binding>,
        result_unit: Option<&str>,
    ) -> Result<Self> {
        let m = MethodDef {
            id: id.to_string(),
            semantic: semantic.to_string(),
            body: body.to_string(),
            bindings,
            result_unit: result_unit.map(str::to_string),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidMethod {
            method: self.id.clone(),
            reason,
        };
        if self.semantic.trim().is_empty() {
            return Err(invalid("empty semantic label".into()));
        }
        let expr = parse_expr(&self.body)?;
        let mut seen = BTreeSet::new();
        for b in &self.bindings {
            if !seen.insert(b.variable.as_str()) {
                return Err(invalid(format!("variable `{}` bound twice", b.variable)));
            }
        }
        if let Some(free) = expr.free_variables().iter().find(|v| !seen.contains(v.as_str())) {
            return Err(invalid(format!("variable `{free}` is not bound")));
        }
        Ok(())
    }

    /// Body text with whitespace removed, used for literal body comparison.
    pub fn normalized_body(&self) -> String {
        self.body.chars().filter(|c| !c.is_whitespace()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassMode {
    #[default]
    Intensional,
    Extensional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub name: String,
    pub specification: Vec<Property>,
    pub signature: Vec<MethodDef>,
    pub mode: ClassMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extension: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyObject {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_class: Option<String>,
    pub specification: Vec<Property>,
    pub signature: Vec<MethodDef>,
}

fn check_ids(entity: &str, properties: &[Property], methods: &[MethodDef]) -> Result<()> {
    let mut ids = BTreeSet::new();
    let all = properties.iter().map(|p| &p.id).chain(methods.iter().map(|m| &m.id));
    for id in all {
        if !ids.insert(id.as_str()) {
            return Err(Error::DuplicateId {
                entity: entity.to_string(),
                id: id.clone(),
            });
        }
    }
    for p in properties {
        if p.semantic.trim().is_empty() {
            return Err(Error::InvalidValue {
                property: p.id.clone(),
                reason: "empty semantic label".into(),
            });
        }
        p.value.validate(&p.id)?;
    }
    for m in methods {
        m.validate()?;
    }
    Ok(())
}

pub fn define_class(
    name: &str,
    properties: Vec<Property>,
    methods: Vec<MethodDef>,
    mode: ClassMode,
    extension: Vec<String>,
) -> Result<ClassSpec> {
    check_ids(name, &properties, &methods)?;
    if properties.is_empty() && methods.is_empty() {
        return Err(Error::EmptyClass(name.to_string()));
    }
    if mode == ClassMode::Extensional && extension.is_empty() {
        return Err(Error::ExtensionMissing(name.to_string()));
    }
    Ok(ClassSpec {
        name: name.to_string(),
        specification: properties,
        signature: methods,
        mode,
        extension,
    })
}

pub fn define_object(
    name: &str,
    class: Option<&str>,
    properties: Vec<Property>,
    methods: Vec<MethodDef>,
) -> Result<FuzzyObject> {
    check_ids(name, &properties, &methods)?;
    if let Some(p) = properties.iter().find(|p| p.value.is_abstract()) {
        return Err(Error::AbstractValueOnObject {
            object: name.to_string(),
            property: p.id.clone(),
        });
    }
    Ok(FuzzyObject {
        name: name.to_string(),
        declared_class: class.map(str::to_string),
        specification: properties,
        signature: methods,
    })
}

/// Anything with a specification and a signature.
pub trait Entity {
    fn name(&self) -> &str;
    fn specification(&self) -> &[Property];
    fn signature(&self) -> &[MethodDef];

    fn property(&self, id: &str) -> Option<&Property> {
        self.specification().iter().find(|p| p.id == id)
    }

    fn method(&self, id: &str) -> Option<&MethodDef> {
        self.signature().iter().find(|m| m.id == id)
    }
}

impl Entity for ClassSpec {
    fn name(&self) -> &str {
        &self.name
    }
    fn specification(&self) -> &[Property] {
        &self.specification
    }
    fn signature(&self) -> &[MethodDef] {
        &self.signature
    }
}

impl Entity for FuzzyObject {
    fn name(&self) -> &str {
        &self.name
    }
    fn specification(&self) -> &[Property] {
        &self.specification
    }
    fn signature(&self) -> &[MethodDef] {
        &self.signature
    }
}

/// Ids of the properties that make an entity fuzzy; empty for crisp entities.
pub fn fuzzy_witnesses(properties: &[Property]) -> Vec<String> {
    properties
        .iter()
        .filter(|p| p.value.is_fuzzy())
        .map(|p| p.id.clone())
        .collect()
}

pub fn is_fuzzy_entity(entity: &dyn Entity) -> (bool, Vec<String>) {
    let ids = fuzzy_witnesses(entity.specification());
    (!ids.is_empty(), ids)
}

pub fn property_equivalent(p: &Property, q: &Property, tol: f64) -> bool {
    p.semantic == q.semantic && values_equivalent(&p.value, &q.value, tol)
}

pub fn method_equivalent(m: &MethodDef, n: &MethodDef) -> bool {
    m.semantic == n.semantic && m.normalized_body() == n.normalized_body()
}

fn inside(x: f64, lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> bool {
    let above = if lo_closed { x >= lo } else { x > lo };
    let below = if hi_closed { x <= hi } else { x < hi };
    above && below
}

/// How well an object's property value conforms to a class's property value.
pub fn compat_degree(object_prop: &Property, class_prop: &Property, tol: f64) -> Result<Degree> {
    use PropertyValue::*;
    if object_prop.semantic != class_prop.semantic {
        return Err(Error::SemanticMismatch {
            left: object_prop.semantic.clone(),
            right: class_prop.semantic.clone(),
        });
    }
    let crisp = |b: bool| if b { Degree::ONE } else { Degree::ZERO };
    let degree = match (&object_prop.value, &class_prop.value) {
        (_, Absent) => Degree::ONE,
        (a, b) if values_equivalent(a, b, tol) => Degree::ONE,
        (CrispTuple { values, unit: u }, Interval { lo, hi, lo_closed, hi_closed, unit: v }) => {
            crisp(u == v && values.iter().all(|x| inside(*x, *lo, *hi, *lo_closed, *hi_closed)))
        }
        (CrispNumber { value, unit: u }, Interval { lo, hi, lo_closed, hi_closed, unit: v }) => {
            crisp(u == v && inside(*value, *lo, *hi, *lo_closed, *hi_closed))
        }
        (Fuzzy(_) | FuzzyTuple(_), FuzzyMarker) => Degree::ONE,
        (TruthDegree(d), FuzzyMarker) => *d,
        (TruthDegree(d), CrispNumber { value, .. }) if (value - 1.0).abs() <= tol => *d,
        (TruthDegree(d), CrispNumber { value, .. }) if value.abs() <= tol => d.complement(),
        _ => Degree::ZERO,
    };
    Ok(degree)
}

/// Aggregated conformance of `properties` to a class specification.
///
/// Class properties without a semantic match contribute 0, `Absent` class
/// values contribute 1. A class with no properties admits everything.
pub fn specification_membership(
    properties: &[Property],
    class_spec: &[Property],
    tnorm: TNorm,
    tol: f64,
) -> Result<Degree> {
    let mut degrees = Vec::with_capacity(class_spec.len());
    for cp in class_spec {
        let d = if matches!(cp.value, PropertyValue::Absent) {
            Degree::ONE
        } else {
            match properties.iter().find(|p| p.semantic == cp.semantic) {
                Some(op) => compat_degree(op, cp, tol)?,
                None => Degree::ZERO,
            }
        };
        degrees.push(d);
    }
    if degrees.is_empty() {
        return Ok(Degree::ONE);
    }
    Ok(crate::fuzzy::aggregate_tnorm(tnorm, &degrees)?)
}
