//! Evaluation of method bodies against an entity's properties.
//!
//! Each distinct variable reference (`a`, or `a[k]` for a family member)
//! becomes one independent quantity, so `a^2` enumerates the support of `a`
//! once while `sum(i=1..4, a[i])` enumerates four independent sides.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse_expr, BinOp, Expr, Func};
use crate::fuzzy::{extend, fmt_num, FuzzySet, Lifted, Operand};
use crate::model::{Accessor, Binding, Entity, MethodDef, PropertyValue};

/// Largest summation range that will be unrolled.
const MAX_SUM_TERMS: i64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Value {
    Crisp {
        value: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        unit: Option<String>,
    },
    Fuzzy {
        set: FuzzySet,
    },
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Crisp { value, unit: Some(u) } => write!(f, "{} {u}", fmt_num(*value)),
            Value::Crisp { value, unit: None } => f.write_str(&fmt_num(*value)),
            Value::Fuzzy { set } => write!(f, "{set}"),
        }
    }
}

#[derive(Debug, Clone)]
enum Resolved {
    Crisp(f64),
    Fuzzy(FuzzySet),
}

#[derive(Debug, Clone)]
enum Slot {
    Scalar(Resolved),
    Family(Vec<Resolved>),
}

/// Expression with every variable replaced by a constant or an atom index.
#[derive(Debug, Clone)]
enum Compiled {
    Num(f64),
    Atom(usize),
    Neg(Box<Compiled>),
    Call(Func, Box<Compiled>),
    Binary(BinOp, Box<Compiled>, Box<Compiled>),
}

impl Compiled {
    fn eval(&self, atoms: &[f64]) -> std::result::Result<f64, String> {
        match self {
            Compiled::Num(v) => Ok(*v),
            Compiled::Atom(i) => Ok(atoms[*i]),
            Compiled::Neg(e) => Ok(-e.eval(atoms)?),
            Compiled::Call(f, e) => f.apply(e.eval(atoms)?),
            Compiled::Binary(op, a, b) => op.apply(a.eval(atoms)?, b.eval(atoms)?),
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            Compiled::Num(_) => true,
            Compiled::Atom(_) => false,
            Compiled::Neg(e) | Compiled::Call(_, e) => e.is_constant(),
            Compiled::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

struct Compiler<'a> {
    method: &'a MethodDef,
    slots: HashMap<String, Slot>,
    atoms: Vec<((String, usize), FuzzySet)>,
}

impl Compiler<'_> {
    fn fail(&self, variable: &str, reason: impl Into<String>) -> Error {
        Error::UnresolvedBinding {
            method: self.method.id.clone(),
            variable: variable.to_string(),
            reason: reason.into(),
        }
    }

    fn atom(&mut self, var: &str, component: usize, value: &Resolved) -> Compiled {
        match value {
            Resolved::Crisp(x) => Compiled::Num(*x),
            Resolved::Fuzzy(set) => {
                let key = (var.to_string(), component);
                let idx = match self.atoms.iter().position(|(k, _)| k == &key) {
                    Some(i) => i,
                    None => {
                        self.atoms.push((key, set.clone()));
                        self.atoms.len() - 1
                    }
                };
                Compiled::Atom(idx)
            }
        }
    }

    fn constant(&mut self, e: &Expr, locals: &HashMap<String, f64>, what: &str) -> Result<f64> {
        let c = self.compile(e, locals)?;
        if !c.is_constant() {
            return Err(Error::Evaluation(format!("{what} must be crisp")));
        }
        c.eval(&[]).map_err(Error::Evaluation)
    }

    fn integer(&mut self, e: &Expr, locals: &HashMap<String, f64>, what: &str) -> Result<i64> {
        let v = self.constant(e, locals, what)?;
        if v.fract() != 0.0 || !v.is_finite() {
            return Err(Error::Evaluation(format!("{what} must be an integer, got {v}")));
        }
        Ok(v as i64)
    }

    fn compile(&mut self, e: &Expr, locals: &HashMap<String, f64>) -> Result<Compiled> {
        Ok(match e {
            Expr::Num(v) => Compiled::Num(*v),
            Expr::Var(v) => {
                if let Some(x) = locals.get(v) {
                    return Ok(Compiled::Num(*x));
                }
                match self.slots.get(v).cloned() {
                    Some(Slot::Scalar(r)) => self.atom(v, 0, &r),
                    Some(Slot::Family(_)) => return Err(self.fail(v, "a component family needs an index")),
                    None => return Err(self.fail(v, "not bound")),
                }
            }
            Expr::Index(v, idx) => {
                let k = self.integer(idx, locals, "index")?;
                match self.slots.get(v).cloned() {
                    Some(Slot::Family(items)) => {
                        let item = usize::try_from(k)
                            .ok()
                            .filter(|k| (1..=items.len()).contains(k))
                            .ok_or_else(|| self.fail(v, format!("index {k} outside 1..{}", items.len())))?;
                        self.atom(v, item, &items[item - 1])
                    }
                    Some(Slot::Scalar(_)) => return Err(self.fail(v, "scalar binding cannot be indexed")),
                    None => return Err(self.fail(v, "not bound")),
                }
            }
            Expr::Neg(a) => Compiled::Neg(Box::new(self.compile(a, locals)?)),
            Expr::Call(f, a) => Compiled::Call(*f, Box::new(self.compile(a, locals)?)),
            Expr::Binary(op, a, b) => Compiled::Binary(
                *op,
                Box::new(self.compile(a, locals)?),
                Box::new(self.compile(b, locals)?),
            ),
            Expr::Sum { index, from, to, body } => {
                let lo = self.integer(from, locals, "summation bound")?;
                let hi = self.integer(to, locals, "summation bound")?;
                if hi - lo >= MAX_SUM_TERMS {
                    return Err(Error::Evaluation(format!("summation over {lo}..{hi} is too long")));
                }
                let mut acc: Option<Compiled> = None;
                let mut inner = locals.clone();
                for i in lo..=hi {
                    inner.insert(index.clone(), i as f64);
                    let term = self.compile(body, &inner)?;
                    acc = Some(match acc {
                        None => term,
                        Some(prev) => Compiled::Binary(BinOp::Add, Box::new(prev), Box::new(term)),
                    });
                }
                acc.unwrap_or(Compiled::Num(0.0))
            }
        })
    }
}

fn scalar_of(value: &PropertyValue) -> Option<Resolved> {
    match value {
        PropertyValue::CrispNumber { value, .. } => Some(Resolved::Crisp(*value)),
        PropertyValue::TruthDegree(d) => Some(Resolved::Crisp(d.value())),
        PropertyValue::Fuzzy(set) => Some(Resolved::Fuzzy(set.clone())),
        _ => None,
    }
}

fn components_of(value: &PropertyValue) -> Option<Vec<Resolved>> {
    match value {
        PropertyValue::CrispTuple { values, .. } => Some(values.iter().map(|v| Resolved::Crisp(*v)).collect()),
        PropertyValue::FuzzyTuple(sets) => Some(sets.iter().cloned().map(Resolved::Fuzzy).collect()),
        PropertyValue::CrispNumber { .. } | PropertyValue::TruthDegree(_) | PropertyValue::Fuzzy(_) => {
            scalar_of(value).map(|r| vec![r])
        }
        _ => None,
    }
}

fn resolve(entity: &dyn Entity, method: &MethodDef, b: &Binding) -> Result<Slot> {
    let fail = |reason: String| Error::UnresolvedBinding {
        method: method.id.clone(),
        variable: b.variable.clone(),
        reason,
    };
    let prop = entity
        .property(&b.property)
        .ok_or_else(|| fail(format!("`{}` has no property `{}`", entity.name(), b.property)))?;
    let unusable = || fail(format!("property `{}` value {} cannot be read this way", prop.id, prop.value));
    match b.accessor {
        Accessor::Scalar => scalar_of(&prop.value).map(Slot::Scalar).ok_or_else(unusable),
        Accessor::Component(k) => {
            let items = components_of(&prop.value).ok_or_else(unusable)?;
            if k == 0 || k > items.len() {
                return Err(fail(format!("component {k} outside 1..{}", items.len())));
            }
            Ok(Slot::Scalar(items[k - 1].clone()))
        }
        Accessor::AllComponents => components_of(&prop.value).map(Slot::Family).ok_or_else(unusable),
        Accessor::Count => components_of(&prop.value)
            .map(|items| Slot::Scalar(Resolved::Crisp(items.len() as f64)))
            .ok_or_else(unusable),
    }
}

/// Evaluates method `method_id` of `entity`. Fuzzy inputs produce a fuzzy
/// result; the result unit is the one declared by the method.
pub fn eval_method(entity: &dyn Entity, method_id: &str) -> Result<Value> {
    let method = entity.method(method_id).ok_or_else(|| Error::UnknownMethod {
        entity: entity.name().to_string(),
        method: method_id.to_string(),
    })?;
    let expr = parse_expr(&method.body)?;
    let mut slots = HashMap::new();
    for b in &method.bindings {
        slots.insert(b.variable.clone(), resolve(entity, method, b)?);
    }
    let mut compiler = Compiler {
        method,
        slots,
        atoms: Vec::new(),
    };
    let compiled = compiler.compile(&expr, &HashMap::new())?;
    let operands: Vec<Operand<'_>> = compiler.atoms.iter().map(|(_, s)| Operand::Fuzzy(s)).collect();
    let unit = method.result_unit.as_deref();
    let lifted = extend(|xs| compiled.eval(xs), &operands, unit).map_err(|e| match e {
        crate::fuzzy::FuzzyError::Evaluation(msg) => Error::Evaluation(msg),
        other => Error::Fuzzy(other),
    })?;
    Ok(match lifted {
        Lifted::Crisp(value) => Value::Crisp {
            value,
            unit: unit.map(str::to_string),
        },
        Lifted::Fuzzy(set) => Value::Fuzzy { set },
    })
}
