//! The `.foodn` definition language.
//!
//! ```text
//! class T_Sq {
//!     property p6 "Equality of all angles" = 1;
//!     property p2 "Sizes of sides" : fuzzy;
//!     method f2 "Area of a figure" = "a^2" bind a = p2[1] unit "cm^2";
//! }
//! object Sq1 : T_Sq { p2 = [{2.7/0.85 + 3/1 + 3.1/0.95} cm] * 4; method f2; }
//! relation Sq1 instance-of T_Sq;
//! modifier M1_Sq class T_Sq -> T_Rb { p6: 1 -> fuzzy(0.8); } target-class T_Rb;
//! exploiter E1 = union/n;
//! ```
//!
//! Items may appear in any order; they are resolved classes first, then
//! objects, relations, modifiers and exploiters.

mod lexer;
mod parser;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::Error;
use crate::exploiters::{Arity, ExploiterDescriptor, ExploiterKind};
use crate::fuzzy::{Degree, DEFAULT_TOLERANCE};
use crate::model::{define_class, define_object, ClassMode, ClassSpec, MethodDef, Property};
use crate::modifiers::{check_applicable, define_modifier, Change};
use crate::network::{Network, Relation, RelationKind};

use parser::{ItemAst, MethodAst, Pos, PropAst};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl ParseDiagnostic {
    pub fn error(message: impl Into<String>, line: usize, column: usize) -> Self {
        ParseDiagnostic {
            severity: Severity::Error,
            message: message.into(),
            line,
            column,
        }
    }

    pub fn warning(message: impl Into<String>, line: usize, column: usize) -> Self {
        ParseDiagnostic {
            severity: Severity::Warning,
            message: message.into(),
            line,
            column,
        }
    }

    fn at(pos: Pos, message: impl Into<String>) -> Self {
        Self::error(message, pos.line, pos.column)
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

/// Parses a whole definition. On success the warnings are returned next to
/// the network; on failure no network is produced.
pub fn parse_network(text: &str) -> Result<(Network, Vec<ParseDiagnostic>), Vec<ParseDiagnostic>> {
    let tokens = lexer::tokenize(text).map_err(|d| vec![d])?;
    let items = parser::parse_items(tokens).map_err(|d| vec![d])?;
    Builder::default().build(items)
}

#[derive(Default)]
struct Builder {
    net: Network,
    errors: Vec<ParseDiagnostic>,
}

impl Builder {
    fn fail(&mut self, pos: Pos, e: impl fmt::Display) {
        self.errors.push(ParseDiagnostic::at(pos, e.to_string()));
    }

    fn build(mut self, items: Vec<ItemAst>) -> Result<(Network, Vec<ParseDiagnostic>), Vec<ParseDiagnostic>> {
        let mut classes = Vec::new();
        let mut objects = Vec::new();
        let mut relations = Vec::new();
        let mut modifiers = Vec::new();
        let mut exploiters = Vec::new();
        for item in items {
            match item {
                ItemAst::Class(c) => classes.push(c),
                ItemAst::Object(o) => objects.push(o),
                ItemAst::Relation(r) => relations.push(r),
                ItemAst::Modifier(m) => modifiers.push(m),
                ItemAst::Exploiter(e) => exploiters.push(e),
            }
        }

        let mut class_pos = std::collections::BTreeMap::new();
        for c in classes {
            class_pos.entry(c.name.clone()).or_insert(c.pos);
            let props = c
                .props
                .iter()
                .map(|p| Property::new(&p.id, p.label.clone().unwrap_or_default(), p.value.clone()))
                .collect();
            let methods = match self.methods(&c.methods, None) {
                Some(m) => m,
                None => continue,
            };
            let (mode, extension) = match c.extension {
                Some(ext) => (ClassMode::Extensional, ext),
                None => (ClassMode::Intensional, vec![]),
            };
            match define_class(&c.name, props, methods, mode, extension).and_then(|cls| self.net.add_class(cls)) {
                Ok(()) => {}
                Err(e) => self.fail(c.pos, e),
            }
        }

        for o in objects {
            let class = match &o.class {
                Some(name) => match self.net.class_spec(name) {
                    Some(c) => Some(c.clone()),
                    None => {
                        self.fail(o.pos, format!("object `{}` declares unknown class `{name}`", o.name));
                        continue;
                    }
                },
                None => None,
            };
            let Some(props) = self.object_props(&o.props, class.as_ref()) else {
                continue;
            };
            let Some(methods) = self.methods(&o.methods, class.as_ref()) else {
                continue;
            };
            match define_object(&o.name, o.class.as_deref(), props, methods).and_then(|obj| self.net.add_object(obj)) {
                Ok(()) => {}
                Err(e) => self.fail(o.pos, e),
            }
        }

        // extensions name objects, so they can only be checked now
        let missing: Vec<(String, String)> = self
            .net
            .classes()
            .filter_map(|c| c.as_spec())
            .flat_map(|c| c.extension.iter().map(move |m| (c.name.clone(), m.clone())))
            .filter(|(_, m)| self.net.object(m).is_none())
            .collect();
        for (class, member) in missing {
            let pos = class_pos[&class];
            self.fail(pos, format!("extension of `{class}` names unknown object `{member}`"));
        }

        for r in relations {
            let kind = match RelationKind::from_str(&r.kind) {
                Ok(k) => k,
                Err(e) => {
                    self.fail(r.kind_pos, e);
                    continue;
                }
            };
            let mut rel = Relation::new(&r.source, kind, &r.target);
            if let Some(d) = r.degree {
                match Degree::new(d) {
                    Ok(d) => rel = rel.with_degree(d),
                    Err(e) => {
                        self.fail(r.pos, e);
                        continue;
                    }
                }
            }
            if let Err(e) = self.net.add_relation(rel) {
                self.fail(r.pos, e);
            }
        }

        let mut modifier_pos = Vec::new();
        for m in modifiers {
            let changes = m
                .changes
                .iter()
                .map(|c| Change::new(&c.property, c.before.clone(), c.after.clone()))
                .collect();
            if let Some(tc) = &m.target_class {
                if self.net.class_spec(tc).is_none() {
                    self.fail(m.pos, format!("modifier `{}` names unknown target class `{tc}`", m.name));
                    continue;
                }
            }
            let res = define_modifier(&m.name, m.level, &m.source, &m.target, m.target_class.as_deref(), changes)
                .and_then(|md| self.net.register_modifier(md));
            match res {
                Ok(()) => modifier_pos.push((m.name.clone(), m.pos)),
                Err(e) => {
                    let property = match &e {
                        Error::DuplicateChange { property, .. }
                        | Error::NoOpChange { property, .. }
                        | Error::InvalidValue { property, .. } => Some(property.as_str()),
                        _ => None,
                    };
                    let pos = property
                        .and_then(|p| m.changes.iter().rev().find(|c| c.property == p))
                        .map_or(m.pos, |c| c.pos);
                    self.fail(pos, e);
                }
            }
        }

        for (i, e) in exploiters.iter().enumerate() {
            let kind = match ExploiterKind::from_str(&e.kind) {
                Ok(k) => k,
                Err(msg) => {
                    self.fail(e.pos, msg);
                    continue;
                }
            };
            let arity = e.arity.map(Arity::Fixed).unwrap_or(Arity::N);
            let res = ExploiterDescriptor::new(&e.name, i + 1, arity, kind)
                .and_then(|d| self.net.register_exploiter(d));
            if let Err(err) = res {
                self.fail(e.pos, err);
            }
        }

        if !self.errors.is_empty() {
            return Err(self.errors);
        }
        if let Err(e) = self.net.validate() {
            return Err(vec![ParseDiagnostic::error(e.to_string(), 1, 1)]);
        }
        let warnings = reflection_warnings(&self.net, &modifier_pos);
        Ok((self.net, warnings))
    }

    fn object_props(&mut self, props: &[PropAst], class: Option<&ClassSpec>) -> Option<Vec<Property>> {
        let mut out = Vec::new();
        let mut ok = true;
        for p in props {
            let label = match (&p.label, class.and_then(|c| c.specification.iter().find(|q| q.id == p.id))) {
                (Some(l), _) => l.clone(),
                (None, Some(q)) => q.semantic.clone(),
                (None, None) => {
                    self.fail(p.pos, format!("property `{}` needs a semantic label (no class property to inherit it from)", p.id));
                    ok = false;
                    continue;
                }
            };
            out.push(Property::new(&p.id, label, p.value.clone()));
        }
        ok.then_some(out)
    }

    fn methods(&mut self, methods: &[MethodAst], class: Option<&ClassSpec>) -> Option<Vec<MethodDef>> {
        let mut out = Vec::new();
        let mut ok = true;
        for m in methods {
            let def = match &m.def {
                Some(d) => MethodDef::new(&m.id, &d.label, &d.body, d.bindings.clone(), d.unit.as_deref()),
                None => match class.and_then(|c| c.signature.iter().find(|q| q.id == m.id)) {
                    Some(q) => Ok(q.clone()),
                    None => Err(Error::InvalidMethod {
                        method: m.id.clone(),
                        reason: "no definition and no class method to copy".into(),
                    }),
                },
            };
            match def {
                Ok(d) => out.push(d),
                Err(e) => {
                    self.fail(m.pos, e);
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }
}

/// Dry-runs every modifier that declares a target class on its own source
/// and reports results that would not belong to that class.
fn reflection_warnings(net: &Network, modifiers: &[(String, Pos)]) -> Vec<ParseDiagnostic> {
    let mut out = Vec::new();
    for (name, pos) in modifiers {
        let Some(m) = net.modifier(name) else { continue };
        if m.target_class.is_none() {
            continue;
        }
        let Some(entity) = net.entity(&m.source) else { continue };
        if !check_applicable(m, entity, DEFAULT_TOLERANCE).0 {
            continue;
        }
        let mut scratch = net.clone();
        if let Ok(applied) = scratch.apply_modifier(name, &m.source, DEFAULT_TOLERANCE) {
            for w in applied.warnings {
                out.push(ParseDiagnostic::warning(w, pos.line, pos.column));
            }
        }
    }
    out
}
