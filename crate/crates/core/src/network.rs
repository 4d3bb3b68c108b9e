//! The network: object and class stores, typed relations, and the
//! exploiter/modifier registries, plus the queries defined over them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exploiters::{ExploiterDescriptor, HeterogeneousClass};
use crate::fuzzy::{Degree, TNorm};
use crate::model::{
    fuzzy_witnesses, method_equivalent, property_equivalent, specification_membership, ClassMode,
    ClassSpec, Entity, FuzzyObject, MethodDef, Property,
};
use crate::modifiers::{Modifier, ProvenanceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    InstanceOf,
    IsA,
    AKindOf,
    ModificationOf,
    Aggregation,
    Association,
}

impl RelationKind {
    pub const ALL: [RelationKind; 6] = [
        RelationKind::InstanceOf,
        RelationKind::IsA,
        RelationKind::AKindOf,
        RelationKind::ModificationOf,
        RelationKind::Aggregation,
        RelationKind::Association,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::InstanceOf => "instance-of",
            RelationKind::IsA => "is-a",
            RelationKind::AKindOf => "a-kind-of",
            RelationKind::ModificationOf => "modification-of",
            RelationKind::Aggregation => "aggregation",
            RelationKind::Association => "association",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        RelationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown relation kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub source: String,
    pub target: String,
    pub kind: RelationKind,
    pub degree: Degree,
}

impl Relation {
    pub fn new(source: &str, kind: RelationKind, target: &str) -> Self {
        Relation {
            source: source.to_string(),
            target: target.to_string(),
            kind,
            degree: Degree::ONE,
        }
    }

    pub fn with_degree(mut self, degree: Degree) -> Self {
        self.degree = degree;
        self
    }

    fn key(&self) -> (&str, RelationKind, &str) {
        (&self.source, self.kind, &self.target)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.source, self.kind, self.target)?;
        if self.degree != Degree::ONE {
            write!(f, " degree {}", self.degree)?;
        }
        Ok(())
    }
}

/// An entry of the class store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ClassEntry {
    Spec(ClassSpec),
    Heterogeneous(HeterogeneousClass),
}

impl ClassEntry {
    pub fn name(&self) -> &str {
        match self {
            ClassEntry::Spec(c) => &c.name,
            ClassEntry::Heterogeneous(h) => &h.name,
        }
    }

    pub fn as_spec(&self) -> Option<&ClassSpec> {
        match self {
            ClassEntry::Spec(c) => Some(c),
            ClassEntry::Heterogeneous(_) => None,
        }
    }

    pub fn renamed(&self, name: &str) -> ClassEntry {
        let mut c = self.clone();
        match &mut c {
            ClassEntry::Spec(s) => s.name = name.to_string(),
            ClassEntry::Heterogeneous(h) => h.name = name.to_string(),
        }
        c
    }

    /// Fuzzy property ids; projections contribute `id@source`.
    pub fn fuzzy_witnesses(&self) -> Vec<String> {
        match self {
            ClassEntry::Spec(c) => fuzzy_witnesses(&c.specification),
            ClassEntry::Heterogeneous(h) => h
                .projections
                .iter()
                .flat_map(|p| {
                    fuzzy_witnesses(&p.class.specification)
                        .into_iter()
                        .map(move |id| format!("{id}@{}", p.source))
                })
                .collect(),
        }
    }

    /// Graded membership of a property list in this class.
    pub fn admits(&self, object_name: &str, properties: &[Property], tnorm: TNorm, tol: f64) -> Result<Degree> {
        fn spec_degree(c: &ClassSpec, name: &str, props: &[Property], tnorm: TNorm, tol: f64) -> Result<Degree> {
            if c.mode == ClassMode::Extensional && c.extension.iter().any(|m| m == name) {
                return Ok(Degree::ONE);
            }
            specification_membership(props, &c.specification, tnorm, tol)
        }
        match self {
            ClassEntry::Spec(c) => spec_degree(c, object_name, properties, tnorm, tol),
            ClassEntry::Heterogeneous(h) => {
                let mut best = Degree::ZERO;
                for p in &h.projections {
                    best = best.max(spec_degree(&p.class, object_name, properties, tnorm, tol)?);
                }
                Ok(best)
            }
        }
    }
}

/// Borrowed view of a live entity.
#[derive(Debug, Clone, Copy)]
pub enum EntityRef<'a> {
    Object(&'a FuzzyObject),
    Class(&'a ClassEntry),
}

impl<'a> EntityRef<'a> {
    pub fn name(&self) -> &'a str {
        match self {
            EntityRef::Object(o) => &o.name,
            EntityRef::Class(c) => c.name(),
        }
    }

    pub fn is_object(&self) -> bool {
        matches!(self, EntityRef::Object(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum WitnessReason {
    FuzzyObject { properties: Vec<String> },
    FuzzyClass { properties: Vec<String> },
    FuzzyRelation { degree: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Witness {
    pub name: String,
    #[serde(flatten)]
    pub reason: WitnessReason,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.reason {
            WitnessReason::FuzzyObject { properties } => {
                write!(f, "{}: fuzzy object ({})", self.name, properties.join(", "))
            }
            WitnessReason::FuzzyClass { properties } => {
                write!(f, "{}: fuzzy class ({})", self.name, properties.join(", "))
            }
            WitnessReason::FuzzyRelation { degree } => {
                write!(f, "{}: fuzzy relation (degree {degree})", self.name)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "out" => Ok(Direction::Out),
            "in" => Ok(Direction::In),
            other => Err(format!("unknown direction `{other}` (expected out or in)")),
        }
    }
}

/// Items accepted by [`Network::add`].
#[derive(Debug, Clone)]
pub enum Item {
    Object(FuzzyObject),
    Class(ClassSpec),
    Relation(Relation),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub(crate) objects: BTreeMap<String, FuzzyObject>,
    pub(crate) classes: BTreeMap<String, ClassEntry>,
    pub(crate) relations: Vec<Relation>,
    pub(crate) exploiters: Vec<ExploiterDescriptor>,
    pub(crate) modifiers: BTreeMap<String, Modifier>,
    pub(crate) provenance: Vec<ProvenanceRecord>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn objects(&self) -> impl Iterator<Item = &FuzzyObject> {
        self.objects.values()
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassEntry> {
        self.classes.values()
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn exploiters(&self) -> &[ExploiterDescriptor] {
        &self.exploiters
    }

    pub fn modifiers(&self) -> impl Iterator<Item = &Modifier> {
        self.modifiers.values()
    }

    pub fn modifier(&self, name: &str) -> Option<&Modifier> {
        self.modifiers.get(name)
    }

    pub fn provenance(&self) -> &[ProvenanceRecord] {
        &self.provenance
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn object(&self, name: &str) -> Option<&FuzzyObject> {
        self.objects.get(name)
    }

    pub fn class(&self, name: &str) -> Option<&ClassEntry> {
        self.classes.get(name)
    }

    pub fn class_spec(&self, name: &str) -> Option<&ClassSpec> {
        self.classes.get(name).and_then(ClassEntry::as_spec)
    }

    pub fn entity(&self, name: &str) -> Option<EntityRef<'_>> {
        self.objects
            .get(name)
            .map(EntityRef::Object)
            .or_else(|| self.classes.get(name).map(EntityRef::Class))
    }

    pub fn is_live(&self, name: &str) -> bool {
        self.objects.contains_key(name) || self.classes.contains_key(name)
    }

    /// Names that only survive in the provenance log.
    pub fn historical_names(&self) -> BTreeSet<&str> {
        self.provenance
            .iter()
            .flat_map(|r| r.mentioned_names())
            .filter(|n| !self.is_live(n))
            .collect()
    }

    fn ensure_free(&self, name: &str) -> Result<()> {
        if self.is_live(name) {
            Err(Error::DuplicateName(name.to_string()))
        } else {
            Ok(())
        }
    }

    pub fn add(&mut self, item: Item) -> Result<()> {
        match item {
            Item::Object(o) => self.add_object(o),
            Item::Class(c) => self.add_class(c),
            Item::Relation(r) => self.add_relation(r),
        }
    }

    pub fn add_object(&mut self, object: FuzzyObject) -> Result<()> {
        self.ensure_free(&object.name)?;
        self.objects.insert(object.name.clone(), object);
        Ok(())
    }

    pub fn add_class(&mut self, class: ClassSpec) -> Result<()> {
        self.add_class_entry(ClassEntry::Spec(class))
    }

    pub fn add_class_entry(&mut self, entry: ClassEntry) -> Result<()> {
        self.ensure_free(entry.name())?;
        self.classes.insert(entry.name().to_string(), entry);
        Ok(())
    }

    pub fn add_relation(&mut self, relation: Relation) -> Result<()> {
        let endpoint = |name: &str| {
            self.entity(name)
                .ok_or_else(|| Error::UnknownEndpoint(name.to_string()))
        };
        let source = endpoint(&relation.source)?;
        let target = endpoint(&relation.target)?;
        let ok = match relation.kind {
            RelationKind::InstanceOf => source.is_object() && !target.is_object(),
            RelationKind::IsA | RelationKind::AKindOf => !source.is_object() && !target.is_object(),
            RelationKind::ModificationOf => source.is_object() == target.is_object(),
            RelationKind::Aggregation | RelationKind::Association => true,
        };
        if !ok {
            let what = |e: EntityRef<'_>| if e.is_object() { "object" } else { "class" };
            return Err(Error::KindMismatch(format!(
                "{} cannot connect {} `{}` to {} `{}`",
                relation.kind,
                what(source),
                relation.source,
                what(target),
                relation.target
            )));
        }
        self.insert_relation(relation)
    }

    /// Inserts without endpoint checks; used for modification history edges.
    pub(crate) fn insert_relation(&mut self, relation: Relation) -> Result<()> {
        match self
            .relations
            .binary_search_by(|r| r.key().cmp(&relation.key()))
        {
            Ok(_) => Err(Error::DuplicateRelation(relation.to_string())),
            Err(pos) => {
                self.relations.insert(pos, relation);
                Ok(())
            }
        }
    }

    pub(crate) fn normalize_relations(&mut self) {
        self.relations.sort_by(|a, b| a.key().cmp(&b.key()));
        self.relations.dedup_by(|a, b| a.key() == b.key());
    }

    pub fn register_exploiter(&mut self, descriptor: ExploiterDescriptor) -> Result<()> {
        descriptor.validate()?;
        if self.exploiters.iter().any(|e| e.name == descriptor.name) {
            return Err(Error::DuplicateName(descriptor.name));
        }
        self.exploiters.push(descriptor);
        self.exploiters.sort_by(|a, b| (a.index, &a.name).cmp(&(b.index, &b.name)));
        Ok(())
    }

    pub fn register_modifier(&mut self, modifier: Modifier) -> Result<()> {
        if self.modifiers.contains_key(&modifier.name) {
            return Err(Error::DuplicateModifier(modifier.name));
        }
        self.modifiers.insert(modifier.name.clone(), modifier);
        Ok(())
    }

    /// Checks the structural invariants; used after loading documents.
    pub fn validate(&self) -> Result<()> {
        for (key, o) in &self.objects {
            if key != &o.name {
                return Err(Error::KindMismatch(format!("object stored as `{key}` is named `{}`", o.name)));
            }
            crate::model::define_object(&o.name, o.declared_class.as_deref(), o.specification.clone(), o.signature.clone())?;
        }
        for (key, c) in &self.classes {
            if key != c.name() {
                return Err(Error::KindMismatch(format!("class stored as `{key}` is named `{}`", c.name())));
            }
            if self.objects.contains_key(key) {
                return Err(Error::DuplicateName(key.clone()));
            }
            match c {
                ClassEntry::Spec(s) => {
                    crate::model::define_class(&s.name, s.specification.clone(), s.signature.clone(), s.mode, s.extension.clone())?;
                }
                ClassEntry::Heterogeneous(h) => h.validate()?,
            }
        }
        let historical = self.historical_names();
        for r in &self.relations {
            for end in [&r.source, &r.target] {
                let ok = self.is_live(end)
                    || (r.kind == RelationKind::ModificationOf && historical.contains(end.as_str()));
                if !ok {
                    return Err(Error::UnknownEndpoint(end.clone()));
                }
            }
        }
        for w in self.relations.windows(2) {
            if w[0].key() >= w[1].key() {
                return Err(Error::DuplicateRelation(w[1].to_string()));
            }
        }
        for e in &self.exploiters {
            e.validate()?;
        }
        for (i, rec) in self.provenance.iter().enumerate() {
            if i > 0 && rec.seq <= self.provenance[i - 1].seq {
                return Err(Error::KindMismatch("provenance sequence is not increasing".into()));
            }
        }
        Ok(())
    }

    /// Fuzziness of the whole network: any fuzzy object, fuzzy class, or
    /// relation with degree below 1. Witnesses are sorted by name.
    pub fn is_fuzzy_network(&self) -> (bool, Vec<Witness>) {
        let mut witnesses = Vec::new();
        for o in self.objects.values() {
            let properties = fuzzy_witnesses(&o.specification);
            if !properties.is_empty() {
                witnesses.push(Witness {
                    name: o.name.clone(),
                    reason: WitnessReason::FuzzyObject { properties },
                });
            }
        }
        for c in self.classes.values() {
            let properties = c.fuzzy_witnesses();
            if !properties.is_empty() {
                witnesses.push(Witness {
                    name: c.name().to_string(),
                    reason: WitnessReason::FuzzyClass { properties },
                });
            }
        }
        for r in &self.relations {
            if r.degree.value() < 1.0 {
                witnesses.push(Witness {
                    name: format!("{} {} {}", r.source, r.kind, r.target),
                    reason: WitnessReason::FuzzyRelation {
                        degree: r.degree.to_string(),
                    },
                });
            }
        }
        witnesses.sort();
        (!witnesses.is_empty(), witnesses)
    }

    pub fn membership(&self, object: &str, class: &str, tnorm: TNorm, tol: f64) -> Result<Degree> {
        let o = self
            .objects
            .get(object)
            .ok_or_else(|| Error::UnknownEntity(object.to_string()))?;
        let c = self
            .classes
            .get(class)
            .ok_or_else(|| Error::UnknownEntity(class.to_string()))?;
        c.admits(&o.name, &o.specification, tnorm, tol)
    }

    /// Neighbours of `name` along edges of the given kinds (all kinds when
    /// empty). Transitive queries walk the closure; cycles are fine.
    pub fn query_related(
        &self,
        name: &str,
        kinds: &[RelationKind],
        direction: Direction,
        transitive: bool,
    ) -> Result<Vec<String>> {
        if !self.is_live(name) {
            return Err(Error::UnknownEntity(name.to_string()));
        }
        let wanted = |k: RelationKind| kinds.is_empty() || kinds.contains(&k);
        let step = |from: &str| -> Vec<String> {
            self.relations
                .iter()
                .filter(|r| wanted(r.kind))
                .filter_map(|r| match direction {
                    Direction::Out if r.source == from => Some(r.target.clone()),
                    Direction::In if r.target == from => Some(r.source.clone()),
                    _ => None,
                })
                .collect()
        };
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut queue: VecDeque<String> = VecDeque::from([name.to_string()]);
        while let Some(current) = queue.pop_front() {
            for next in step(&current) {
                if next != name && seen.insert(next.clone()) && transitive {
                    queue.push_back(next);
                }
            }
        }
        Ok(seen.into_iter().filter(|n| self.is_live(n)).collect())
    }

    /// Relations suggested by the current content; nothing is inserted.
    ///
    /// `instance-of(o, c)` is proposed with the membership degree whenever it
    /// reaches `threshold`; `a-kind-of(c1, c2)` whenever every property and
    /// method of `c2` has an equivalent in `c1`.
    pub fn infer_relations(&self, threshold: Degree, tol: f64) -> Result<Vec<Relation>> {
        let mut out = Vec::new();
        for o in self.objects.values() {
            for c in self.classes.values() {
                let d = c.admits(&o.name, &o.specification, TNorm::Min, tol)?;
                if d.value() >= threshold.value() && d.value() > 0.0 {
                    out.push(Relation::new(&o.name, RelationKind::InstanceOf, c.name()).with_degree(d));
                }
            }
        }
        let specs: Vec<(&str, Vec<Property>, Vec<MethodDef>)> = self
            .classes
            .values()
            .map(|c| {
                let (p, m) = crate::exploiters::effective_members(c, tol);
                (c.name(), p, m)
            })
            .collect();
        for (sub, sub_p, sub_m) in &specs {
            for (sup, sup_p, sup_m) in &specs {
                if sub == sup || (sup_p.is_empty() && sup_m.is_empty()) {
                    continue;
                }
                let props = sup_p
                    .iter()
                    .all(|q| sub_p.iter().any(|p| property_equivalent(p, q, tol)));
                let methods = sup_m.iter().all(|n| sub_m.iter().any(|m| method_equivalent(m, n)));
                if props && methods {
                    out.push(Relation::new(sub, RelationKind::AKindOf, sup));
                }
            }
        }
        out.sort_by(|a, b| a.key().cmp(&b.key()));
        Ok(out)
    }
}

/// Property list of a live entity, class-store entries flattened.
pub(crate) fn entity_members(entity: EntityRef<'_>, tol: f64) -> (Vec<Property>, Vec<MethodDef>) {
    match entity {
        EntityRef::Object(o) => (o.specification().to_vec(), o.signature().to_vec()),
        EntityRef::Class(c) => crate::exploiters::effective_members(c, tol),
    }
}
