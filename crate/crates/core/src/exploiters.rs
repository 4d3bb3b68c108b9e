//! The universal exploiters: union, intersection, difference, symmetric
//! difference and cloning. Exploiters only ever create entities.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    method_equivalent, property_equivalent, values_equivalent, ClassMode, ClassSpec, FuzzyObject,
    MethodDef, Property, PropertyValue,
};
use crate::modifiers::Action;
use crate::network::{entity_members, ClassEntry, EntityRef, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExploiterKind {
    Union,
    Intersection,
    Difference,
    SymmetricDifference,
    Clone,
}

impl ExploiterKind {
    pub const ALL: [ExploiterKind; 5] = [
        ExploiterKind::Union,
        ExploiterKind::Intersection,
        ExploiterKind::Difference,
        ExploiterKind::SymmetricDifference,
        ExploiterKind::Clone,
    ];

    /// Name accepted on the command line and in definition files.
    pub fn keyword(self) -> &'static str {
        match self {
            ExploiterKind::Union => "union",
            ExploiterKind::Intersection => "intersect",
            ExploiterKind::Difference => "diff",
            ExploiterKind::SymmetricDifference => "symdiff",
            ExploiterKind::Clone => "clone",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ExploiterKind::Union => "∪",
            ExploiterKind::Intersection => "∩",
            ExploiterKind::Difference => "\\",
            ExploiterKind::SymmetricDifference => "÷",
            ExploiterKind::Clone => "Clone",
        }
    }

    pub fn natural_arity(self) -> Arity {
        match self {
            ExploiterKind::Union | ExploiterKind::Intersection => Arity::N,
            ExploiterKind::Difference | ExploiterKind::SymmetricDifference => Arity::Fixed(2),
            ExploiterKind::Clone => Arity::Fixed(1),
        }
    }

    /// Whether the result may fail to exist.
    pub fn may_not_exist(self) -> bool {
        matches!(
            self,
            ExploiterKind::Intersection | ExploiterKind::Difference | ExploiterKind::SymmetricDifference
        )
    }
}

impl fmt::Display for ExploiterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for ExploiterKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ExploiterKind::ALL
            .into_iter()
            .find(|k| k.keyword() == s)
            .ok_or_else(|| format!("unknown exploiter `{s}` (expected union, intersect, diff, symdiff or clone)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arity {
    /// Any number of arguments, at least two.
    N,
    Fixed(usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::N => n >= 2,
            Arity::Fixed(k) => n == k,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Arity::N => "at least 2",
            Arity::Fixed(1) => "exactly 1",
            Arity::Fixed(2) => "exactly 2",
            Arity::Fixed(_) => "a fixed number of",
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::N => f.write_str("n"),
            Arity::Fixed(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploiterDescriptor {
    pub name: String,
    pub index: usize,
    pub arity: Arity,
    pub kind: ExploiterKind,
}

impl ExploiterDescriptor {
    pub fn new(name: &str, index: usize, arity: Arity, kind: ExploiterKind) -> Result<Self> {
        let d = ExploiterDescriptor {
            name: name.to_string(),
            index,
            arity,
            kind,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.arity != self.kind.natural_arity() {
            return Err(Error::ArityError {
                op: self.kind.keyword(),
                expected: self.kind.natural_arity().describe(),
                got: match self.arity {
                    Arity::N => 0,
                    Arity::Fixed(k) => k,
                },
            });
        }
        Ok(())
    }

    /// The five universal exploiters in signature order.
    pub fn universal() -> Vec<ExploiterDescriptor> {
        ExploiterKind::ALL
            .into_iter()
            .enumerate()
            .map(|(i, kind)| ExploiterDescriptor {
                name: format!("E{}", i + 1),
                index: i + 1,
                arity: kind.natural_arity(),
                kind,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub source: String,
    pub class: ClassSpec,
}

/// Union of classes: one projection per source, never flattened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneousClass {
    pub name: String,
    pub projections: Vec<Projection>,
}

impl HeterogeneousClass {
    pub fn validate(&self) -> Result<()> {
        if self.projections.len() < 2 {
            return Err(Error::ArityError {
                op: "union",
                expected: "at least 2",
                got: self.projections.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for p in &self.projections {
            if !seen.insert(&p.source) {
                return Err(Error::RepeatedArgument(p.source.clone()));
            }
        }
        Ok(())
    }
}

/// Union of objects: the members and the extensional class they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSet {
    pub name: String,
    pub members: Vec<String>,
    pub induced_class: ClassSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UnionResult {
    Heterogeneous(HeterogeneousClass),
    Objects(ObjectSet),
}

/// A freshly created entity.
#[derive(Debug, Clone, PartialEq)]
pub enum Created {
    Object(FuzzyObject),
    Class(ClassEntry),
}

impl Created {
    pub fn name(&self) -> &str {
        match self {
            Created::Object(o) => &o.name,
            Created::Class(c) => c.name(),
        }
    }
}

/// Members every instance of a class is guaranteed to have. For a
/// heterogeneous class that is what all projections share.
pub fn effective_members(class: &ClassEntry, tol: f64) -> (Vec<Property>, Vec<MethodDef>) {
    match class {
        ClassEntry::Spec(c) => (c.specification.clone(), c.signature.clone()),
        ClassEntry::Heterogeneous(h) => {
            let parts: Vec<(Vec<Property>, Vec<MethodDef>)> = h
                .projections
                .iter()
                .map(|p| (p.class.specification.clone(), p.class.signature.clone()))
                .collect();
            common_members(&parts, tol)
        }
    }
}

fn common_members(parts: &[(Vec<Property>, Vec<MethodDef>)], tol: f64) -> (Vec<Property>, Vec<MethodDef>) {
    let Some(((first_p, first_m), rest)) = parts.split_first() else {
        return (vec![], vec![]);
    };
    let props = first_p
        .iter()
        .filter(|p| rest.iter().all(|(ps, _)| ps.iter().any(|q| property_equivalent(p, q, tol))))
        .cloned()
        .collect();
    let methods = first_m
        .iter()
        .filter(|m| rest.iter().all(|(_, ms)| ms.iter().any(|n| method_equivalent(m, n))))
        .cloned()
        .collect();
    (props, methods)
}

fn subtract(a: &(Vec<Property>, Vec<MethodDef>), b: &(Vec<Property>, Vec<MethodDef>), tol: f64) -> (Vec<Property>, Vec<MethodDef>) {
    let props = a
        .0
        .iter()
        .filter(|p| !b.0.iter().any(|q| property_equivalent(p, q, tol)))
        .cloned()
        .collect();
    let methods = a
        .1
        .iter()
        .filter(|m| !b.1.iter().any(|n| method_equivalent(m, n)))
        .cloned()
        .collect();
    (props, methods)
}

fn names(args: &[EntityRef<'_>]) -> String {
    args.iter().map(|a| a.name()).collect::<Vec<_>>().join(", ")
}

fn check_distinct(args: &[EntityRef<'_>]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for a in args {
        if !seen.insert(a.name()) {
            return Err(Error::RepeatedArgument(a.name().to_string()));
        }
    }
    Ok(())
}

fn finish_class(name: &str, props: Vec<Property>, methods: Vec<MethodDef>, what: String) -> Result<ClassSpec> {
    if props.is_empty() && methods.is_empty() {
        return Err(Error::DoesNotExist(what));
    }
    crate::model::define_class(name, props, methods, ClassMode::Intensional, vec![])
}

pub fn clone_name(source: &str, index: usize) -> String {
    format!("{source}_clone{index}")
}

/// Deep copy under the name `<source>_clone<index>`.
pub fn clone_entity(entity: EntityRef<'_>, index: usize) -> Created {
    let name = clone_name(entity.name(), index);
    match entity {
        EntityRef::Object(o) => Created::Object(FuzzyObject {
            name,
            ..o.clone()
        }),
        EntityRef::Class(c) => Created::Class(c.renamed(&name)),
    }
}

pub fn union_op(args: &[EntityRef<'_>], result_name: &str) -> Result<UnionResult> {
    if args.len() < 2 {
        return Err(Error::ArityError {
            op: "union",
            expected: "at least 2",
            got: args.len(),
        });
    }
    check_distinct(args)?;
    let objects = args.iter().filter(|a| a.is_object()).count();
    if objects != 0 && objects != args.len() {
        return Err(Error::MixedKinds);
    }
    if objects == 0 {
        let mut projections = Vec::new();
        for a in args {
            match a {
                EntityRef::Class(ClassEntry::Spec(c)) => projections.push(Projection {
                    source: c.name.clone(),
                    class: c.clone(),
                }),
                // nested unions contribute their projections
                EntityRef::Class(ClassEntry::Heterogeneous(h)) => {
                    projections.extend(h.projections.iter().cloned())
                }
                EntityRef::Object(_) => unreachable!(),
            }
        }
        let h = HeterogeneousClass {
            name: result_name.to_string(),
            projections,
        };
        h.validate()?;
        return Ok(UnionResult::Heterogeneous(h));
    }
    let members: Vec<&FuzzyObject> = args
        .iter()
        .map(|a| match a {
            EntityRef::Object(o) => *o,
            EntityRef::Class(_) => unreachable!(),
        })
        .collect();
    let induced_class = induced_extensional_class(result_name, &members, 1e-9)?;
    Ok(UnionResult::Objects(ObjectSet {
        name: result_name.to_string(),
        members: members.iter().map(|o| o.name.clone()).collect(),
        induced_class,
    }))
}

/// Extensional class over `members`: one property per semantic label; the
/// common value when all members agree, otherwise unconstrained (`--`).
/// Methods are those every member shares.
fn induced_extensional_class(name: &str, members: &[&FuzzyObject], tol: f64) -> Result<ClassSpec> {
    let mut labels: Vec<(String, String)> = Vec::new();
    for o in members {
        for p in &o.specification {
            if !labels.iter().any(|(_, l)| l == &p.semantic) {
                labels.push((p.id.clone(), p.semantic.clone()));
            }
        }
    }
    let mut used_ids = BTreeSet::new();
    let mut props = Vec::new();
    for (id, label) in labels {
        let values: Vec<Option<&PropertyValue>> = members
            .iter()
            .map(|o| o.specification.iter().find(|p| p.semantic == label).map(|p| &p.value))
            .collect();
        let value = match values.first() {
            Some(Some(first)) if values.iter().all(|v| v.is_some_and(|v| values_equivalent(v, first, tol))) => {
                (*first).clone()
            }
            _ => PropertyValue::Absent,
        };
        let id = if used_ids.contains(&id) {
            let owner = members
                .iter()
                .find(|o| o.specification.iter().any(|p| p.semantic == label))
                .map(|o| o.name.as_str())
                .unwrap_or(name);
            format!("{id}@{owner}")
        } else {
            id
        };
        used_ids.insert(id.clone());
        props.push(Property::new(id, label, value));
    }
    let parts: Vec<(Vec<Property>, Vec<MethodDef>)> = members
        .iter()
        .map(|o| (vec![], o.signature.clone()))
        .collect();
    let (_, methods) = common_members(&parts, tol);
    let methods = methods.into_iter().filter(|m| !used_ids.contains(&m.id)).collect();
    crate::model::define_class(
        name,
        props,
        methods,
        ClassMode::Extensional,
        members.iter().map(|o| o.name.clone()).collect(),
    )
}

/// Members of the first argument with an equivalent in every other one.
pub fn intersection_op(args: &[EntityRef<'_>], result_name: &str, tol: f64) -> Result<ClassSpec> {
    if args.len() < 2 {
        return Err(Error::ArityError {
            op: "intersect",
            expected: "at least 2",
            got: args.len(),
        });
    }
    check_distinct(args)?;
    let parts: Vec<_> = args.iter().map(|a| entity_members(*a, tol)).collect();
    let (props, methods) = common_members(&parts, tol);
    finish_class(result_name, props, methods, format!("intersection of {}", names(args)))
}

pub fn difference_op(a: EntityRef<'_>, b: EntityRef<'_>, result_name: &str, tol: f64) -> Result<ClassSpec> {
    check_distinct(&[a, b])?;
    let (props, methods) = subtract(&entity_members(a, tol), &entity_members(b, tol), tol);
    finish_class(result_name, props, methods, format!("difference of {}, {}", a.name(), b.name()))
}

/// `(a \ b) ∪ (b \ a)`; members whose id or label occurs on both sides get
/// ids qualified with their source, e.g. `p4@T_Sq`.
pub fn sym_difference_op(a: EntityRef<'_>, b: EntityRef<'_>, result_name: &str, tol: f64) -> Result<ClassSpec> {
    check_distinct(&[a, b])?;
    let ma = entity_members(a, tol);
    let mb = entity_members(b, tol);
    let left = subtract(&ma, &mb, tol);
    let right = subtract(&mb, &ma, tol);

    let keys = |side: &(Vec<Property>, Vec<MethodDef>)| -> BTreeSet<String> {
        side.0
            .iter()
            .flat_map(|p| [format!("id:{}", p.id), format!("label:{}", p.semantic)])
            .chain(side.1.iter().flat_map(|m| [format!("id:{}", m.id), format!("label:{}", m.semantic)]))
            .collect()
    };
    let (left_keys, right_keys) = (keys(&left), keys(&right));
    let clash = |other: &BTreeSet<String>, id: &str, label: &str| {
        other.contains(&format!("id:{id}")) || other.contains(&format!("label:{label}"))
    };

    let mut props = Vec::new();
    let mut methods = Vec::new();
    for (side, other, source) in [(&left, &right_keys, a.name()), (&right, &left_keys, b.name())] {
        for p in &side.0 {
            let mut p = p.clone();
            if clash(other, &p.id, &p.semantic) {
                p.id = format!("{}@{source}", p.id);
            }
            props.push(p);
        }
        for m in &side.1 {
            let mut m = m.clone();
            if clash(other, &m.id, &m.semantic) {
                m.id = format!("{}@{source}", m.id);
            }
            methods.push(m);
        }
    }
    finish_class(
        result_name,
        props,
        methods,
        format!("symmetric difference of {}, {}", a.name(), b.name()),
    )
}

/// Default result names for exploiter applications.
pub fn default_result_name(kind: ExploiterKind, args: &[&str], index: usize) -> String {
    match kind {
        ExploiterKind::Clone => clone_name(args.first().copied().unwrap_or("entity"), index),
        _ => args.join(&format!("_{}_", kind.keyword())),
    }
}

impl Network {
    /// Applies one exploiter and stores its result. The network is left
    /// untouched when the operation fails.
    pub fn apply_exploiter(
        &mut self,
        kind: ExploiterKind,
        args: &[&str],
        result_name: Option<&str>,
        index: usize,
        tol: f64,
    ) -> Result<String> {
        if !kind.natural_arity().accepts(args.len()) {
            return Err(Error::ArityError {
                op: kind.keyword(),
                expected: kind.natural_arity().describe(),
                got: args.len(),
            });
        }
        let refs: Vec<EntityRef<'_>> = args
            .iter()
            .map(|n| self.entity(n).ok_or_else(|| Error::UnknownEntity(n.to_string())))
            .collect::<Result<_>>()?;
        let default_name = default_result_name(kind, args, index);
        let name = match kind {
            ExploiterKind::Clone => default_name.as_str(),
            _ => result_name.unwrap_or(&default_name),
        };
        if self.is_live(name) {
            return Err(Error::NameCollision(name.to_string()));
        }
        let created = match kind {
            ExploiterKind::Clone => clone_entity(refs[0], index),
            ExploiterKind::Union => match union_op(&refs, name)? {
                UnionResult::Heterogeneous(h) => Created::Class(ClassEntry::Heterogeneous(h)),
                UnionResult::Objects(set) => Created::Class(ClassEntry::Spec(set.induced_class)),
            },
            ExploiterKind::Intersection => Created::Class(ClassEntry::Spec(intersection_op(&refs, name, tol)?)),
            ExploiterKind::Difference => Created::Class(ClassEntry::Spec(difference_op(refs[0], refs[1], name, tol)?)),
            ExploiterKind::SymmetricDifference => {
                Created::Class(ClassEntry::Spec(sym_difference_op(refs[0], refs[1], name, tol)?))
            }
        };
        let name = created.name().to_string();
        match created {
            Created::Object(o) => self.add_object(o)?,
            Created::Class(c) => self.add_class_entry(c)?,
        }
        self.record(Action::Exploitation {
            exploiter: kind,
            args: args.iter().map(|s| s.to_string()).collect(),
            result: name.clone(),
        });
        Ok(name)
    }
}
