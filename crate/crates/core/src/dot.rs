//! Graphviz export.

use std::fmt::Write;

use crate::exploiters::ExploiterKind;
use crate::fuzzy::fmt_num;
use crate::network::{ClassEntry, Network, RelationKind};

#[derive(Debug, Clone, Default)]
pub struct DotOptions {
    /// Entities to draw exploiter applications for. Empty means no overlay.
    pub overlay: Vec<String>,
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn export_dot(net: &Network, options: &DotOptions) -> String {
    let mut out = String::from("digraph foodn {\n    rankdir=BT;\n");
    for o in net.objects() {
        let fuzzy = if crate::model::is_fuzzy_entity(o).0 { ", peripheries=2" } else { "" };
        writeln!(out, "    {} [shape=ellipse{fuzzy}];", quote(&o.name)).unwrap();
    }
    for c in net.classes() {
        let style = match c {
            ClassEntry::Spec(_) => "",
            ClassEntry::Heterogeneous(_) => ", style=dashed",
        };
        let fuzzy = if c.fuzzy_witnesses().is_empty() { "" } else { ", peripheries=2" };
        writeln!(out, "    {} [shape=box{style}{fuzzy}];", quote(c.name())).unwrap();
    }
    for name in net.historical_names() {
        if net.relations().iter().any(|r| r.target == name || r.source == name) {
            writeln!(out, "    {} [shape=plaintext, fontcolor=gray];", quote(name)).unwrap();
        }
    }
    for r in net.relations() {
        let mut label = r.kind.to_string();
        if r.degree.value() < 1.0 {
            label.push_str(&format!(" ({})", fmt_num(r.degree.value())));
        }
        let style = if r.kind == RelationKind::ModificationOf { ", style=dotted, color=blue" } else { "" };
        writeln!(out, "    {} -> {} [label={}{style}];", quote(&r.source), quote(&r.target), quote(&label)).unwrap();
    }
    let sources: Vec<&str> = options.overlay.iter().map(String::as_str).filter(|n| net.is_live(n)).collect();
    if !sources.is_empty() {
        overlay(&mut out, &sources);
    }
    out.push_str("}\n");
    out
}

/// One node per applicable exploiter fed by one edge per argument; dashed
/// edges mark operations whose result may not exist.
fn overlay(out: &mut String, sources: &[&str]) {
    let mut kinds: Vec<ExploiterKind> = Vec::new();
    if sources.len() >= 2 {
        kinds.extend([ExploiterKind::Union, ExploiterKind::Intersection]);
    }
    if sources.len() == 2 {
        kinds.extend([ExploiterKind::Difference, ExploiterKind::SymmetricDifference]);
    }
    for kind in kinds {
        let node = format!("{}({})", kind.symbol(), sources.join(", "));
        writeln!(out, "    {} [shape=diamond];", quote(&node)).unwrap();
        let style = if kind.may_not_exist() { ", style=dashed" } else { "" };
        for s in sources {
            let label = format!("{}({s})", kind.symbol());
            writeln!(out, "    {} -> {} [label={}{style}];", quote(s), quote(&node), quote(&label)).unwrap();
        }
    }
    for s in sources {
        let node = format!("Clone({s})");
        writeln!(out, "    {} [shape=diamond];", quote(&node)).unwrap();
        writeln!(out, "    {} -> {} [label={}];", quote(s), quote(&node), quote(&node)).unwrap();
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::fixtures;

    /// Statements of a digraph: node ids and edges, after a grammar check
    /// covering the subset `export_dot` emits.
    #[derive(Debug, Default)]
    pub struct Parsed {
        pub nodes: Vec<String>,
        pub edges: Vec<(String, String, Vec<(String, String)>)>,
    }

    fn lex(s: &str) -> Result<Vec<String>, String> {
        let mut toks = Vec::new();
        let mut it = s.chars().peekable();
        while let Some(&c) = it.peek() {
            if c.is_whitespace() {
                it.next();
            } else if c == '"' {
                it.next();
                let mut t = String::from("\"");
                loop {
                    match it.next() {
                        None => return Err("unterminated string".into()),
                        Some('\\') => {
                            let e = it.next().ok_or("dangling escape")?;
                            t.push(e);
                        }
                        Some('"') => break,
                        Some(c) => t.push(c),
                    }
                }
                toks.push(t);
            } else if c == '-' {
                it.next();
                if it.next() != Some('>') {
                    return Err("bad edge operator".into());
                }
                toks.push("->".into());
            } else if "{}[];,=".contains(c) {
                it.next();
                toks.push(c.to_string());
            } else if c.is_alphanumeric() || c == '_' {
                let mut t = String::new();
                while let Some(&c) = it.peek() {
                    if c.is_alphanumeric() || c == '_' || c == '.' {
                        t.push(c);
                        it.next();
                    } else {
                        break;
                    }
                }
                toks.push(t);
            } else {
                return Err(format!("unexpected `{c}`"));
            }
        }
        Ok(toks)
    }

    fn id(t: &str) -> Result<String, String> {
        if let Some(q) = t.strip_prefix('"') {
            Ok(q.to_string())
        } else if t.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.') && !t.is_empty() {
            Ok(t.to_string())
        } else {
            Err(format!("expected id, found `{t}`"))
        }
    }

    pub fn validate_dot(s: &str) -> Result<Parsed, String> {
        let toks = lex(s)?;
        let mut i = 0;
        let next = |i: &mut usize| -> Result<String, String> {
            let t = toks.get(*i).cloned().ok_or("unexpected end")?;
            *i += 1;
            Ok(t)
        };
        if next(&mut i)? != "digraph" {
            return Err("missing digraph".into());
        }
        let mut t = next(&mut i)?;
        if t != "{" {
            id(&t)?;
            t = next(&mut i)?;
        }
        if t != "{" {
            return Err("missing `{`".into());
        }
        let mut parsed = Parsed::default();
        loop {
            let t = next(&mut i)?;
            if t == "}" {
                break;
            }
            let first = id(&t)?;
            let mut t = next(&mut i)?;
            if t == "=" {
                id(&next(&mut i)?)?;
                if next(&mut i)? != ";" {
                    return Err("missing `;` after attribute".into());
                }
                continue;
            }
            let mut second = None;
            if t == "->" {
                second = Some(id(&next(&mut i)?)?);
                t = next(&mut i)?;
            }
            let mut attrs = Vec::new();
            if t == "[" {
                loop {
                    let k = next(&mut i)?;
                    if k == "]" {
                        break;
                    }
                    let k = id(&k)?;
                    if next(&mut i)? != "=" {
                        return Err("missing `=` in attribute list".into());
                    }
                    attrs.push((k, id(&next(&mut i)?)?));
                    let sep = next(&mut i)?;
                    if sep == "]" {
                        break;
                    }
                    if sep != "," {
                        return Err("bad attribute separator".into());
                    }
                }
                t = next(&mut i)?;
            }
            if t != ";" {
                return Err(format!("missing `;`, found `{t}`"));
            }
            match second {
                Some(b) => parsed.edges.push((first, b, attrs)),
                None => parsed.nodes.push(first),
            }
        }
        if i != toks.len() {
            return Err("trailing input".into());
        }
        Ok(parsed)
    }

    #[test]
    fn fixture_graph() {
        let text = export_dot(&fixtures::polygons(), &DotOptions::default());
        let g = validate_dot(&text).unwrap();
        assert_eq!(g.nodes.len(), 5);
        assert_eq!(g.edges.len(), 5);
    }

    #[test]
    fn empty_network() {
        let text = export_dot(&Network::new(), &DotOptions::default());
        let g = validate_dot(&text).unwrap();
        assert!(g.nodes.is_empty() && g.edges.is_empty());
    }

    #[test]
    fn overlay_union_edges() {
        let opts = DotOptions {
            overlay: vec!["T_Rb".into(), "T_Sq".into()],
        };
        let g = validate_dot(&export_dot(&fixtures::polygons(), &opts)).unwrap();
        let into_union: Vec<_> = g.edges.iter().filter(|e| e.1 == "∪(T_Rb, T_Sq)").collect();
        assert_eq!(into_union.len(), 2);
        let labels: Vec<&str> = into_union
            .iter()
            .map(|e| e.2.iter().find(|(k, _)| k == "label").unwrap().1.as_str())
            .collect();
        assert_eq!(labels, ["∪(T_Rb)", "∪(T_Sq)"]);
        let diff = g.edges.iter().find(|e| e.1 == "\\(T_Rb, T_Sq)").unwrap();
        assert!(diff.2.contains(&("style".into(), "dashed".into())));
    }

    #[test]
    fn modification_edges_are_dotted() {
        let mut net = fixtures::polygons();
        net.apply_modifier("M1_Sq1", "Sq1", 1e-9).unwrap();
        let g = validate_dot(&export_dot(&net, &DotOptions::default())).unwrap();
        let m = g.edges.iter().find(|e| e.0 == "Rb1_2" && e.1 == "Sq1").unwrap();
        assert!(m.2.contains(&("style".into(), "dotted".into())));
        assert!(g.nodes.contains(&"Sq1".to_string()));
    }

    #[test]
    fn validator_rejects_garbage() {
        assert!(validate_dot("digraph { a -> ; }").is_err());
        assert!(validate_dot("graph { }").is_err());
        assert!(validate_dot("digraph { \"a ").is_err());
    }
}
