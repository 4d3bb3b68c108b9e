//! Modifiers transform an entity into another one by changing selected
//! properties. Application replaces the source entity, records a
//! `modification-of` edge and appends to the provenance log.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exploiters::ExploiterKind;
use crate::fuzzy::TNorm;
use crate::model::{specification_membership, values_equivalent, MethodDef, PropertyValue};
use crate::network::{ClassEntry, EntityRef, Network, Relation, RelationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Object,
    Class,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Object => "object",
            Level::Class => "class",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub property: String,
    pub before: PropertyValue,
    pub after: PropertyValue,
}

impl Change {
    pub fn new(property: &str, before: PropertyValue, after: PropertyValue) -> Self {
        Change {
            property: property.to_string(),
            before,
            after,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modifier {
    pub name: String,
    pub level: Level,
    /// The entity the modifier was written for.
    pub source: String,
    pub target_name: String,
    /// Class whose signature the result adopts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_class: Option<String>,
    pub changes: Vec<Change>,
}

pub fn define_modifier(
    name: &str,
    level: Level,
    source: &str,
    target_name: &str,
    target_class: Option<&str>,
    changes: Vec<Change>,
) -> Result<Modifier> {
    if changes.is_empty() {
        return Err(Error::EmptyChangeList(name.to_string()));
    }
    let mut seen = BTreeSet::new();
    for c in &changes {
        if !seen.insert(c.property.as_str()) {
            return Err(Error::DuplicateChange {
                modifier: name.to_string(),
                property: c.property.clone(),
            });
        }
        if values_equivalent(&c.before, &c.after, 0.0) {
            return Err(Error::NoOpChange {
                modifier: name.to_string(),
                property: c.property.clone(),
            });
        }
        c.after.validate(&c.property)?;
    }
    Ok(Modifier {
        name: name.to_string(),
        level,
        source: source.to_string(),
        target_name: target_name.to_string(),
        target_class: target_class.map(str::to_string),
        changes,
    })
}

/// Whether `modifier` can act on `entity`, with every reason it cannot.
pub fn check_applicable(modifier: &Modifier, entity: EntityRef<'_>, tol: f64) -> (bool, Vec<String>) {
    let mut reasons = Vec::new();
    let properties = match (modifier.level, entity) {
        (Level::Object, EntityRef::Object(o)) => Some(&o.specification),
        (Level::Class, EntityRef::Class(ClassEntry::Spec(c))) => Some(&c.specification),
        (Level::Class, EntityRef::Class(ClassEntry::Heterogeneous(_))) => {
            reasons.push(format!("`{}` is a heterogeneous class without its own specification", entity.name()));
            None
        }
        (level, _) => {
            reasons.push(format!("`{}` is not a{} {level}", entity.name(), if level == Level::Object { "n" } else { "" }));
            None
        }
    };
    if let Some(properties) = properties {
        for c in &modifier.changes {
            match properties.iter().find(|p| p.id == c.property) {
                None => reasons.push(format!("{}: property missing", c.property)),
                Some(p) if !values_equivalent(&p.value, &c.before, tol) => {
                    reasons.push(format!("{}: expected {}, found {}", c.property, c.before, p.value))
                }
                Some(_) => {}
            }
        }
    }
    (reasons.is_empty(), reasons)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Action {
    Modification {
        modifier: String,
        source: String,
        target: String,
        changes: Vec<Change>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        signature_from: Option<String>,
        /// Signature of the entity that was replaced, so a later modifier can
        /// still adopt the signature of a class that is no longer live.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        replaced_signature: Vec<MethodDef>,
    },
    Exploitation {
        exploiter: ExploiterKind,
        args: Vec<String>,
        result: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub seq: u64,
    #[serde(flatten)]
    pub action: Action,
}

impl ProvenanceRecord {
    pub fn mentioned_names(&self) -> Vec<&str> {
        match &self.action {
            Action::Modification { source, target, .. } => vec![source, target],
            Action::Exploitation { args, result, .. } => {
                args.iter().map(String::as_str).chain([result.as_str()]).collect()
            }
        }
    }
}

impl fmt::Display for ProvenanceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.action {
            Action::Modification { modifier, source, target, .. } => {
                write!(f, "#{} modify {source} -> {target} by {modifier}", self.seq)
            }
            Action::Exploitation { exploiter, args, result } => {
                write!(f, "#{} {exploiter}({}) -> {result}", self.seq, args.join(", "))
            }
        }
    }
}

/// What a successful modifier application produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub name: String,
    /// Reflection check failures: the result does not belong to its
    /// declared target class at all.
    pub warnings: Vec<String>,
}

impl Network {
    pub(crate) fn record(&mut self, action: Action) {
        let seq = self.provenance.last().map(|r| r.seq + 1).unwrap_or(1);
        self.provenance.push(ProvenanceRecord { seq, action });
    }

    fn free_name(&self, wanted: &str, leaving: &str) -> String {
        if wanted == leaving || !self.is_live(wanted) {
            return wanted.to_string();
        }
        (2..)
            .map(|k| format!("{wanted}_{k}"))
            .find(|n| !self.is_live(n))
            .expect("unbounded suffixes")
    }

    /// Signature of a live class, or of the class last replaced under that
    /// name by a modification.
    fn signature_of(&self, class: &str) -> Option<Vec<MethodDef>> {
        if let Some(c) = self.class_spec(class) {
            return Some(c.signature.clone());
        }
        self.provenance.iter().rev().find_map(|r| match &r.action {
            Action::Modification { source, replaced_signature, .. }
                if source == class && !replaced_signature.is_empty() =>
            {
                Some(replaced_signature.clone())
            }
            _ => None,
        })
    }

    /// Membership of a modified entity in the modifier's target class.
    pub fn reflection_check(&self, modifier: &Modifier, result: &str, tol: f64) -> Result<Vec<String>> {
        let Some(target) = &modifier.target_class else {
            return Ok(vec![]);
        };
        let Some(class) = self.class(target) else {
            return Ok(vec![format!("target class `{target}` is not live")]);
        };
        let properties = match self.entity(result) {
            Some(EntityRef::Object(o)) => o.specification.clone(),
            Some(EntityRef::Class(ClassEntry::Spec(c))) => c.specification.clone(),
            _ => return Ok(vec![]),
        };
        let degree = match class {
            ClassEntry::Spec(c) => specification_membership(&properties, &c.specification, TNorm::Min, tol)?,
            other => other.admits(result, &properties, TNorm::Min, tol)?,
        };
        if degree.value() > 0.0 {
            Ok(vec![])
        } else {
            Ok(vec![format!(
                "`{result}` produced by `{}` has membership 0 in its target class `{target}`",
                modifier.name
            )])
        }
    }

    /// Applies a registered modifier to a live entity. On failure the
    /// network is unchanged.
    pub fn apply_modifier(&mut self, modifier_name: &str, entity_name: &str, tol: f64) -> Result<Applied> {
        let modifier = self
            .modifiers
            .get(modifier_name)
            .cloned()
            .ok_or_else(|| Error::UnknownModifier(modifier_name.to_string()))?;
        let entity = self
            .entity(entity_name)
            .ok_or_else(|| Error::UnknownEntity(entity_name.to_string()))?;
        let (ok, reasons) = check_applicable(&modifier, entity, tol);
        if !ok {
            return Err(Error::NotApplicable {
                modifier: modifier.name.clone(),
                entity: entity_name.to_string(),
                reasons,
            });
        }
        let donor = modifier.target_class.as_deref().and_then(|tc| self.signature_of(tc));
        let new_name = self.free_name(&modifier.target_name, entity_name);

        let mut specification = match entity {
            EntityRef::Object(o) => o.specification.clone(),
            EntityRef::Class(ClassEntry::Spec(c)) => c.specification.clone(),
            EntityRef::Class(ClassEntry::Heterogeneous(_)) => unreachable!("rejected by check_applicable"),
        };
        for change in &modifier.changes {
            if let Some(p) = specification.iter_mut().find(|p| p.id == change.property) {
                p.value = change.after.clone();
            }
        }
        let is_object = entity.is_object();
        let replaced_signature = match entity {
            EntityRef::Object(o) => o.signature.clone(),
            EntityRef::Class(c) => c.as_spec().map(|c| c.signature.clone()).unwrap_or_default(),
        };
        match entity {
            EntityRef::Object(o) => {
                let mut o = o.clone();
                o.name = new_name.clone();
                o.specification = specification;
                if let Some(sig) = donor {
                    o.signature = sig;
                    o.declared_class = modifier.target_class.clone();
                }
                self.objects.remove(entity_name);
                self.objects.insert(new_name.clone(), o);
            }
            EntityRef::Class(ClassEntry::Spec(c)) => {
                let mut c = c.clone();
                c.name = new_name.clone();
                c.specification = specification;
                if let Some(sig) = donor {
                    c.signature = sig;
                }
                self.classes.remove(entity_name);
                self.classes.insert(new_name.clone(), ClassEntry::Spec(c));
            }
            EntityRef::Class(ClassEntry::Heterogeneous(_)) => unreachable!(),
        }

        // follow the entity to its new name; history edges stay put
        let retype = is_object && modifier.target_class.is_some();
        let mut relations = std::mem::take(&mut self.relations);
        relations.retain(|r| !(retype && r.kind == RelationKind::InstanceOf && r.source == entity_name));
        for r in &mut relations {
            if r.kind == RelationKind::ModificationOf {
                continue;
            }
            if r.source == entity_name {
                r.source = new_name.clone();
            }
            if r.target == entity_name {
                r.target = new_name.clone();
            }
        }
        if retype {
            if let Some(tc) = &modifier.target_class {
                relations.push(Relation::new(&new_name, RelationKind::InstanceOf, tc));
            }
        }
        if new_name != entity_name {
            relations.push(Relation::new(&new_name, RelationKind::ModificationOf, entity_name));
        }
        self.relations = relations;
        self.normalize_relations();

        self.record(Action::Modification {
            modifier: modifier.name.clone(),
            source: entity_name.to_string(),
            target: new_name.clone(),
            changes: modifier.changes.clone(),
            signature_from: modifier.target_class.clone(),
            replaced_signature,
        });
        let warnings = self.reflection_check(&modifier, &new_name, tol)?;
        Ok(Applied {
            name: new_name,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::Entity;

    const TOL: f64 = 1e-9;

    #[test]
    fn definition_rules() {
        assert_eq!(
            define_modifier("M", Level::Class, "A", "B", None, vec![]),
            Err(Error::EmptyChangeList("M".into()))
        );
        let c = Change::new("p6", PropertyValue::number(1.0, None), PropertyValue::truth(0.8).unwrap());
        assert!(matches!(
            define_modifier("M", Level::Class, "A", "B", None, vec![c.clone(), c.clone()]),
            Err(Error::DuplicateChange { .. })
        ));
        let same = Change::new("p6", PropertyValue::number(1.0, None), PropertyValue::number(1.0, None));
        assert!(matches!(
            define_modifier("M", Level::Class, "A", "B", None, vec![same]),
            Err(Error::NoOpChange { .. })
        ));
        assert!(define_modifier("M", Level::Class, "A", "B", Some("B"), vec![c]).is_ok());
    }

    #[test]
    fn fixture_modifiers() {
        let net = fixtures::polygons();
        let m = net.modifier("M1_Sq1").unwrap();
        assert_eq!(m.level, Level::Object);
        assert_eq!(m.target_class.as_deref(), Some("T_Rb"));
        assert_eq!(m.changes.len(), 2);
        assert_eq!(m.changes[1].after, PropertyValue::truth(0.8).unwrap());
        let m = net.modifier("M1_Sq").unwrap();
        assert_eq!(m.changes[0].before, PropertyValue::number(1.0, None));
    }

    #[test]
    fn applicability() {
        let net = fixtures::polygons();
        let m2 = net.modifier("M2_Rb1").unwrap();
        let (ok, reasons) = check_applicable(m2, net.entity("Rb1").unwrap(), TOL);
        assert!(ok, "{reasons:?}");
        let (ok, reasons) = check_applicable(m2, net.entity("Sq1").unwrap(), TOL);
        assert!(!ok);
        assert_eq!(reasons.len(), 2);
        assert!(reasons[0].starts_with("p4:") && reasons[1].starts_with("p6:"));
        let (ok, reasons) = check_applicable(m2, net.entity("T_Rb").unwrap(), TOL);
        assert!(!ok);
        assert_eq!(reasons.len(), 1);
        assert!(reasons[0].contains("not an object"));
    }

    #[test]
    fn square_to_rhombus_and_back() {
        let mut net = fixtures::polygons();
        let original = net.object("Sq1").unwrap().clone();
        let rb_sig = net.class_spec("T_Rb").unwrap().signature.clone();

        let first = net.apply_modifier("M1_Sq1", "Sq1", TOL).unwrap();
        assert_eq!(first.name, "Rb1_2");
        assert!(first.warnings.is_empty());
        assert!(net.object("Sq1").is_none());
        let rb = net.object("Rb1_2").unwrap();
        assert_eq!(rb.property("p4").unwrap().value, PropertyValue::tuple(&[95.0, 85.0, 95.0, 85.0], Some("deg")));
        assert_eq!(rb.property("p6").unwrap().value, PropertyValue::truth(0.8).unwrap());
        assert_eq!(rb.property("p2"), original.property("p2"));
        assert_eq!(rb.signature, rb_sig);
        assert!(net
            .relations()
            .contains(&Relation::new("Rb1_2", RelationKind::InstanceOf, "T_Rb")));
        assert!(net
            .relations()
            .contains(&Relation::new("Rb1_2", RelationKind::ModificationOf, "Sq1")));

        let second = net.apply_modifier("M2_Rb1", "Rb1_2", TOL).unwrap();
        assert_eq!(second.name, "Sq1");
        assert_eq!(net.object("Sq1").unwrap(), &original);
        assert_eq!(net.provenance().len(), 2);
        assert!(net.validate().is_ok());
        assert!(net.historical_names().contains("Rb1_2"));
    }

    #[test]
    fn class_level_round_trip() {
        let mut net = fixtures::polygons();
        let original = net.class_spec("T_Sq").unwrap().clone();
        let r = net.apply_modifier("M1_Sq", "T_Sq", TOL).unwrap();
        assert_eq!(r.name, "T_Rb_2");
        let mid = net.class_spec("T_Rb_2").unwrap();
        assert_eq!(mid.property("p6").unwrap().value, PropertyValue::truth(0.8).unwrap());
        // the square instance follows its class
        assert!(net
            .relations()
            .contains(&Relation::new("Sq1", RelationKind::InstanceOf, "T_Rb_2")));
        let back = net.apply_modifier("M2_Rb", "T_Rb_2", TOL).unwrap();
        assert_eq!(back.name, "T_Sq");
        assert_eq!(net.class_spec("T_Sq").unwrap(), &original);
        assert!(net
            .relations()
            .contains(&Relation::new("Sq1", RelationKind::InstanceOf, "T_Sq")));
    }

    #[test]
    fn failed_application_is_a_no_op() {
        let mut net = fixtures::polygons();
        let before = net.clone();
        let err = net.apply_modifier("M2_Rb1", "Sq1", TOL).unwrap_err();
        assert!(matches!(err, Error::NotApplicable { .. }));
        assert_eq!(net, before);
        assert_eq!(
            net.apply_modifier("nope", "Sq1", TOL),
            Err(Error::UnknownModifier("nope".into()))
        );
        assert_eq!(
            net.apply_modifier("M2_Rb1", "ghost", TOL),
            Err(Error::UnknownEntity("ghost".into()))
        );
        assert_eq!(net, before);
    }

    #[test]
    fn broken_line_target() {
        let mut net = fixtures::polygons();
        let r = net.apply_modifier("M1_Rb1", "Rb1", TOL).unwrap();
        assert_eq!(r.name, "L1_1");
        let l = net.object("L1_1").unwrap();
        assert_eq!(l.property("p1").unwrap().value, PropertyValue::number(3.0, Some("of segment")));
        // no target class: signature and declared class untouched
        assert_eq!(l.declared_class.as_deref(), Some("T_Rb"));
        assert!(net.relations().contains(&Relation::new("L1_1", RelationKind::InstanceOf, "T_Rb")));
    }

    #[test]
    fn only_changed_properties_move() {
        let mut net = fixtures::polygons();
        let before = net.object("Rb1").unwrap().clone();
        let r = net.apply_modifier("M2_Rb1", "Rb1", TOL).unwrap();
        let after = net.object(&r.name).unwrap();
        for p in &before.specification {
            let q = after.property(&p.id).unwrap();
            if p.id == "p4" || p.id == "p6" {
                assert_ne!(p, q);
            } else {
                assert_eq!(p, q);
            }
        }
    }

    #[test]
    fn reflection_warning() {
        let mut net = fixtures::polygons();
        // a modifier that claims to make a square but leaves the angles alone
        let m = define_modifier(
            "Bad",
            Level::Object,
            "Rb1",
            "Sq9",
            Some("T_Sq"),
            vec![Change::new("p6", PropertyValue::truth(0.8).unwrap(), PropertyValue::number(1.0, None))],
        )
        .unwrap();
        net.register_modifier(m).unwrap();
        let r = net.apply_modifier("Bad", "Rb1", TOL).unwrap();
        assert_eq!(r.warnings.len(), 1);
    }
}
