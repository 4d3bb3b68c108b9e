//! Recursive-descent parser producing an unvalidated item list.

use super::lexer::{Tok, Token};
use super::ParseDiagnostic;
use crate::fuzzy::FuzzySet;
use crate::model::{Accessor, Binding, PropertyValue};
use crate::modifiers::Level;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub struct PropAst {
    pub id: String,
    /// `None` for the object shorthand `p2 = ...;` (label from the class).
    pub label: Option<String>,
    pub value: PropertyValue,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct MethodBody {
    pub label: String,
    pub body: String,
    pub bindings: Vec<Binding>,
    pub unit: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MethodAst {
    pub id: String,
    /// `None` for `method f1;`, which copies the class's definition.
    pub def: Option<MethodBody>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct ClassAst {
    pub name: String,
    pub extension: Option<Vec<String>>,
    pub props: Vec<PropAst>,
    pub methods: Vec<MethodAst>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct ObjectAst {
    pub name: String,
    pub class: Option<String>,
    pub props: Vec<PropAst>,
    pub methods: Vec<MethodAst>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct RelationAst {
    pub source: String,
    pub kind: String,
    pub target: String,
    pub degree: Option<f64>,
    pub pos: Pos,
    pub kind_pos: Pos,
}

#[derive(Debug, Clone)]
pub struct ChangeAst {
    pub property: String,
    pub before: PropertyValue,
    pub after: PropertyValue,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct ModifierAst {
    pub name: String,
    pub level: Level,
    pub source: String,
    pub target: String,
    pub changes: Vec<ChangeAst>,
    pub target_class: Option<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct ExploiterAst {
    pub name: String,
    pub kind: String,
    /// `None` for `n`.
    pub arity: Option<usize>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub enum ItemAst {
    Class(ClassAst),
    Object(ObjectAst),
    Relation(RelationAst),
    Modifier(ModifierAst),
    Exploiter(ExploiterAst),
}

type PResult<T> = Result<T, ParseDiagnostic>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> Pos {
        let t = &self.toks[self.pos];
        Pos {
            line: t.line,
            column: t.column,
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let p = self.here();
        Err(ParseDiagnostic::error(msg, p.line, p.column))
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.err(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek() == &Tok::Punct(c)
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.is_punct(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> PResult<()> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            self.unexpected(&format!("`{c}`"))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.unexpected("a number"),
        }
    }

    fn count(&mut self) -> PResult<usize> {
        let pos = self.here();
        let v = self.number()?;
        if v < 1.0 || v.fract() != 0.0 || v > 1e6 {
            return Err(ParseDiagnostic::error(format!("expected a positive integer, found {v}"), pos.line, pos.column));
        }
        Ok(v as usize)
    }

    fn unit(&mut self) -> Option<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED_AFTER_VALUE.contains(&s.as_str()) => {
                self.bump();
                Some(s)
            }
            Tok::Str(s) => {
                self.bump();
                Some(s)
            }
            _ => None,
        }
    }

    fn at_err(pos: Pos, msg: impl Into<String>) -> ParseDiagnostic {
        ParseDiagnostic::error(msg, pos.line, pos.column)
    }

    fn fuzzy_set(&mut self) -> PResult<FuzzySet> {
        let pos = self.here();
        self.expect_punct('{')?;
        let mut pairs = Vec::new();
        loop {
            let s = self.number()?;
            self.expect_punct('/')?;
            let d = self.number()?;
            pairs.push((s, d));
            if !self.eat_punct('+') {
                break;
            }
        }
        self.expect_punct('}')?;
        let unit = self.unit();
        FuzzySet::new(&pairs, unit.as_deref()).map_err(|e| Self::at_err(pos, e.to_string()))
    }

    fn value(&mut self) -> PResult<PropertyValue> {
        let pos = self.here();
        let v = match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                PropertyValue::CrispNumber { value: v, unit: self.unit() }
            }
            Tok::DashDash => {
                self.bump();
                PropertyValue::Absent
            }
            Tok::Punct('(') => {
                self.bump();
                let mut values = vec![self.number()?];
                while self.eat_punct(',') {
                    values.push(self.number()?);
                }
                self.expect_punct(')')?;
                PropertyValue::CrispTuple { values, unit: self.unit() }
            }
            Tok::Punct('{') => PropertyValue::Fuzzy(self.fuzzy_set()?),
            Tok::Punct('[') => {
                self.bump();
                let mut sets = vec![self.fuzzy_set()?];
                while self.eat_punct(',') {
                    sets.push(self.fuzzy_set()?);
                }
                self.expect_punct(']')?;
                if self.eat_punct('*') {
                    let n = self.count()?;
                    let base = sets.clone();
                    sets = (0..n).flat_map(|_| base.iter().cloned()).collect();
                }
                PropertyValue::FuzzyTuple(sets)
            }
            Tok::Ident(kw) if kw == "fuzzy" => {
                self.bump();
                if self.eat_punct('(') {
                    let d = self.number()?;
                    self.expect_punct(')')?;
                    PropertyValue::truth(d).map_err(|e| Self::at_err(pos, e.to_string()))?
                } else {
                    PropertyValue::FuzzyMarker
                }
            }
            Tok::Ident(kw) if kw == "range" => {
                self.bump();
                let lo_closed = match self.peek() {
                    Tok::Punct('(') => false,
                    Tok::Punct('[') => true,
                    _ => return self.unexpected("`(` or `[`"),
                };
                self.bump();
                let lo = self.number()?;
                self.expect_punct(',')?;
                let hi = self.number()?;
                let hi_closed = match self.peek() {
                    Tok::Punct(')') => false,
                    Tok::Punct(']') => true,
                    _ => return self.unexpected("`)` or `]`"),
                };
                self.bump();
                PropertyValue::Interval { lo, hi, lo_closed, hi_closed, unit: self.unit() }
            }
            _ => return self.unexpected("a property value"),
        };
        v.validate("value").map_err(|e| Self::at_err(pos, e.to_string()))?;
        Ok(v)
    }

    fn binding(&mut self) -> PResult<Binding> {
        let variable = self.ident("a variable name")?;
        self.expect_punct('=')?;
        if self.eat_punct('#') {
            let property = self.ident("a property id")?;
            return Ok(Binding { variable, property, accessor: Accessor::Count });
        }
        let property = self.ident("a property id")?;
        let accessor = if self.eat_punct('[') {
            let a = if self.eat_punct('*') {
                Accessor::AllComponents
            } else {
                Accessor::Component(self.count()?)
            };
            self.expect_punct(']')?;
            a
        } else {
            Accessor::Scalar
        };
        Ok(Binding { variable, property, accessor })
    }

    fn method(&mut self) -> PResult<MethodAst> {
        let pos = self.here();
        self.expect_keyword("method")?;
        let id = self.ident("a method id")?;
        if self.eat_punct(';') {
            return Ok(MethodAst { id, def: None, pos });
        }
        let label = self.string("a semantic label")?;
        self.expect_punct('=')?;
        let body = self.string("a quoted method body")?;
        let mut bindings = Vec::new();
        if self.eat_keyword("bind") {
            bindings.push(self.binding()?);
            while self.eat_punct(',') {
                bindings.push(self.binding()?);
            }
        }
        let unit = if self.eat_keyword("unit") {
            match self.unit() {
                Some(u) => Some(u),
                None => return self.unexpected("a unit"),
            }
        } else {
            None
        };
        self.expect_punct(';')?;
        Ok(MethodAst {
            id,
            def: Some(MethodBody { label, body, bindings, unit }),
            pos,
        })
    }

    fn property(&mut self, in_class: bool) -> PResult<PropAst> {
        let pos = self.here();
        if self.eat_keyword("property") {
            let id = self.ident("a property id")?;
            let label = self.string("a semantic label")?;
            let value = if in_class && self.eat_punct(':') {
                self.expect_keyword("fuzzy")?;
                PropertyValue::FuzzyMarker
            } else {
                self.expect_punct('=')?;
                self.value()?
            };
            self.expect_punct(';')?;
            return Ok(PropAst { id, label: Some(label), value, pos });
        }
        let id = self.ident("`property`, `method` or a property id")?;
        self.expect_punct('=')?;
        let value = self.value()?;
        self.expect_punct(';')?;
        Ok(PropAst { id, label: None, value, pos })
    }

    fn members(&mut self, in_class: bool) -> PResult<(Vec<PropAst>, Vec<MethodAst>)> {
        self.expect_punct('{')?;
        let mut props = Vec::new();
        let mut methods = Vec::new();
        while !self.eat_punct('}') {
            if self.is_keyword("method") {
                methods.push(self.method()?);
            } else if in_class && !self.is_keyword("property") {
                return self.unexpected("`property`, `method` or `}`");
            } else {
                props.push(self.property(in_class)?);
            }
        }
        Ok((props, methods))
    }

    fn name_list(&mut self) -> PResult<Vec<String>> {
        self.expect_punct('(')?;
        let mut names = vec![self.ident("an object name")?];
        while self.eat_punct(',') {
            names.push(self.ident("an object name")?);
        }
        self.expect_punct(')')?;
        Ok(names)
    }

    fn item(&mut self) -> PResult<ItemAst> {
        let pos = self.here();
        let kw = self.ident("`class`, `object`, `relation`, `modifier` or `exploiter`")?;
        match kw.as_str() {
            "class" => {
                let name = self.ident("a class name")?;
                let extension = if self.eat_keyword("extensional") {
                    Some(self.name_list()?)
                } else {
                    None
                };
                let (props, methods) = self.members(true)?;
                Ok(ItemAst::Class(ClassAst { name, extension, props, methods, pos }))
            }
            "object" => {
                let name = self.ident("an object name")?;
                let class = if self.eat_punct(':') {
                    Some(self.ident("a class name")?)
                } else {
                    None
                };
                let (props, methods) = self.members(false)?;
                Ok(ItemAst::Object(ObjectAst { name, class, props, methods, pos }))
            }
            "relation" => {
                let source = self.ident("an entity name")?;
                let kind_pos = self.here();
                let kind = self.ident("a relation kind")?;
                let target = self.ident("an entity name")?;
                let degree = if self.eat_keyword("degree") {
                    Some(self.number()?)
                } else {
                    None
                };
                self.expect_punct(';')?;
                Ok(ItemAst::Relation(RelationAst { source, kind, target, degree, pos, kind_pos }))
            }
            "modifier" => {
                let name = self.ident("a modifier name")?;
                let level = match self.ident("`object` or `class`")?.as_str() {
                    "object" => Level::Object,
                    "class" => Level::Class,
                    other => {
                        return Err(ParseDiagnostic::error(
                            format!("expected `object` or `class`, found `{other}`"),
                            self.toks[self.pos - 1].line,
                            self.toks[self.pos - 1].column,
                        ))
                    }
                };
                let source = self.ident("a source entity")?;
                if self.bump() != Tok::Arrow {
                    self.pos -= 1;
                    return self.unexpected("`->`");
                }
                let target = self.ident("a target name")?;
                self.expect_punct('{')?;
                let mut changes = Vec::new();
                while !self.eat_punct('}') {
                    let pos = self.here();
                    let property = self.ident("a property id")?;
                    self.expect_punct(':')?;
                    let before = self.value()?;
                    if self.bump() != Tok::Arrow {
                        self.pos -= 1;
                        return self.unexpected("`->`");
                    }
                    let after = self.value()?;
                    self.expect_punct(';')?;
                    changes.push(ChangeAst { property, before, after, pos });
                }
                let target_class = if self.eat_keyword("target-class") {
                    Some(self.ident("a class name")?)
                } else {
                    None
                };
                self.eat_punct(';');
                Ok(ItemAst::Modifier(ModifierAst { name, level, source, target, changes, target_class, pos }))
            }
            "exploiter" => {
                let name = self.ident("an exploiter name")?;
                self.expect_punct('=')?;
                let kind = self.ident("an exploiter kind")?;
                self.expect_punct('/')?;
                let arity = if self.eat_keyword("n") { None } else { Some(self.count()?) };
                self.expect_punct(';')?;
                Ok(ItemAst::Exploiter(ExploiterAst { name, kind, arity, pos }))
            }
            other => Err(Self::at_err(
                pos,
                format!("expected `class`, `object`, `relation`, `modifier` or `exploiter`, found `{other}`"),
            )),
        }
    }
}

/// Words that may follow a value and must not be read as its unit.
const RESERVED_AFTER_VALUE: &[&str] = &["bind", "unit", "degree", "target-class"];

pub fn parse_items(toks: Vec<Token>) -> PResult<Vec<ItemAst>> {
    let mut p = Parser { toks, pos: 0 };
    let mut items = Vec::new();
    while p.peek() != &Tok::Eof {
        items.push(p.item()?);
    }
    Ok(items)
}
