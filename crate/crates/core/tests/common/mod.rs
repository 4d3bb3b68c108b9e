//! Oracles, generators and property checks shared by the property suite and
//! the acceptance target.

#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::hash::{Hash, Hasher};

use foodn::document;
use foodn::evaluator::{eval_method, Value};
use foodn::exploiters::{difference_op, intersection_op, sym_difference_op, ExploiterKind};
use foodn::fuzzy::FuzzySet;
use foodn::model::{
    define_class, define_object, Accessor, Binding, ClassMode, ClassSpec, FuzzyObject, MethodDef, Property,
    PropertyValue,
};
use foodn::modifiers::{define_modifier, Change, Level};
use foodn::network::{Direction, EntityRef, Network, Relation, RelationKind};
use foodn::{Degree, Error};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const TOL: f64 = 1e-9;
pub const CASES: u32 = 256;

// ---------------------------------------------------------------------------
// brute-force extension principle oracle

/// Enumerates every combination of support points by nested iteration over
/// an explicit index list, min-combines degrees and max-merges equal outputs.
pub fn oracle_extend(f: &dyn Fn(&[f64]) -> f64, sets: &[Vec<(f64, f64)>]) -> Vec<(f64, f64)> {
    let mut combos: Vec<Vec<(f64, f64)>> = vec![vec![]];
    for set in sets {
        let mut next = Vec::new();
        for prefix in &combos {
            for &pair in set {
                let mut c = prefix.clone();
                c.push(pair);
                next.push(c);
            }
        }
        combos = next;
    }
    let mut out: Vec<(f64, f64)> = Vec::new();
    for c in combos {
        let xs: Vec<f64> = c.iter().map(|p| p.0).collect();
        let d = c.iter().map(|p| p.1).fold(1.0_f64, f64::min);
        let y = f(&xs);
        match out.iter_mut().find(|(s, _)| (*s - y).abs() <= 1e-9) {
            Some(slot) => slot.1 = slot.1.max(d),
            None => out.push((y, d)),
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Merges duplicate supports of a raw pair list keeping the maximal degree.
pub fn canonical_pairs(pairs: &[(f64, f64)]) -> Vec<(f64, f64)> {
    oracle_extend(&|xs| xs[0], &[pairs.to_vec()])
}

pub fn pairs_of(set: &FuzzySet) -> Vec<(f64, f64)> {
    set.elements().iter().map(|e| (e.support, e.degree.value())).collect()
}

pub fn same_pairs(a: &[(f64, f64)], b: &[(f64, f64)], support_tol: f64, degree_tol: f64) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| (x.0 - y.0).abs() <= support_tol && (x.1 - y.1).abs() <= degree_tol)
}

/// The four method bodies the property suite exercises.
#[derive(Debug, Clone, Copy)]
pub enum Body {
    FourA,
    Square,
    Sum,
    Product,
}

impl Body {
    pub fn text(self) -> &'static str {
        match self {
            Body::FourA => "4*a",
            Body::Square => "a^2",
            Body::Sum => "a + b",
            Body::Product => "a*b",
        }
    }

    pub fn binary(self) -> bool {
        matches!(self, Body::Sum | Body::Product)
    }

    pub fn apply(self, xs: &[f64]) -> f64 {
        match self {
            Body::FourA => 4.0 * xs[0],
            Body::Square => xs[0] * xs[0],
            Body::Sum => xs[0] + xs[1],
            Body::Product => xs[0] * xs[1],
        }
    }
}

/// Supports on a quarter grid keep every tested body exact in binary.
fn fuzzy_pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-20i32..=20, 0u32..=20), 1..=5)
        .prop_map(|v| v.into_iter().map(|(s, d)| (s as f64 / 4.0, d as f64 / 20.0)).collect())
}

pub fn extension_input() -> impl Strategy<Value = (Body, Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    (
        prop_oneof![Just(Body::FourA), Just(Body::Square), Just(Body::Sum), Just(Body::Product)],
        fuzzy_pairs(),
        fuzzy_pairs(),
    )
}

pub fn check_extension((body, a, b): (Body, Vec<(f64, f64)>, Vec<(f64, f64)>)) -> Result<(), TestCaseError> {
    let sa = FuzzySet::new(&a, Some("cm")).unwrap();
    let sb = FuzzySet::new(&b, Some("cm")).unwrap();
    let mut props = vec![Property::new("pa", "first", PropertyValue::Fuzzy(sa))];
    let mut bindings = vec![Binding::new("a", "pa", Accessor::Scalar)];
    if body.binary() {
        props.push(Property::new("pb", "second", PropertyValue::Fuzzy(sb)));
        bindings.push(Binding::new("b", "pb", Accessor::Scalar));
    }
    let m = MethodDef::new("f", "lifted", body.text(), bindings, None).unwrap();
    let o = define_object("o", None, props, vec![m]).unwrap();
    let got = match eval_method(&o, "f").unwrap() {
        Value::Fuzzy { set } => pairs_of(&set),
        other => return Err(TestCaseError::fail(format!("crisp result {other}"))),
    };
    let inputs = if body.binary() {
        vec![canonical_pairs(&a), canonical_pairs(&b)]
    } else {
        vec![canonical_pairs(&a)]
    };
    let want = oracle_extend(&|xs| body.apply(xs), &inputs);
    prop_assert!(same_pairs(&got, &want, 0.0, 0.0), "{:?}: got {got:?}, want {want:?}", body);
    Ok(())
}

// ---------------------------------------------------------------------------
// random classes and objects

const LABELS: [&str; 6] = ["Colour", "Mass", "Sides", "Angles", "Shape", "Finish"];

fn class_value() -> impl Strategy<Value = PropertyValue> {
    prop_oneof![
        (1i32..=3).prop_map(|v| PropertyValue::number(v as f64, None)),
        Just(PropertyValue::open_interval(0.0, 10.0, Some("deg"))),
        Just(PropertyValue::FuzzyMarker),
        Just(PropertyValue::Fuzzy(FuzzySet::new(&[(1.0, 0.5), (2.0, 1.0)], Some("cm")).unwrap())),
        Just(PropertyValue::Absent),
    ]
}

fn object_value() -> impl Strategy<Value = PropertyValue> {
    prop_oneof![
        (1i32..=3).prop_map(|v| PropertyValue::number(v as f64, None)),
        Just(PropertyValue::tuple(&[5.0, 6.0], Some("deg"))),
        (1u32..=9).prop_map(|d| PropertyValue::truth(d as f64 / 10.0).unwrap()),
        Just(PropertyValue::Fuzzy(FuzzySet::new(&[(1.0, 0.5), (2.0, 1.0)], Some("cm")).unwrap())),
    ]
}

/// Property slot: label index, whether the id is the alternate one, value.
fn slots(value: BoxedStrategy<PropertyValue>) -> impl Strategy<Value = Vec<Property>> {
    prop::collection::btree_map(0usize..LABELS.len(), (any::<bool>(), value), 1..=5).prop_map(|m| {
        m.into_iter()
            .map(|(i, (alt, v))| {
                let id = if alt { format!("q{i}") } else { format!("p{i}") };
                Property::new(id, LABELS[i], v)
            })
            .collect()
    })
}

fn methods() -> impl Strategy<Value = Vec<MethodDef>> {
    prop::collection::btree_set(0usize..3, 0..=2).prop_map(|s| {
        s.into_iter()
            .map(|i| {
                let body = ["a", "2*a", "a^2"][i];
                MethodDef::new(&format!("f{i}"), &format!("Method {i}"), body, vec![Binding::new("a", "p0", Accessor::Scalar)], None)
                    .unwrap()
            })
            .collect()
    })
}

pub fn class_spec(name: &'static str) -> impl Strategy<Value = ClassSpec> {
    (slots(class_value().boxed()), methods())
        .prop_map(move |(p, m)| define_class(name, p, m, ClassMode::Intensional, vec![]).unwrap())
}

pub fn object(name: String) -> impl Strategy<Value = FuzzyObject> {
    // every object carries p0 = 1 so the test modifier has something to act on
    (slots(object_value().boxed()), methods()).prop_map(move |(mut p, m)| {
        p.retain(|q| q.semantic != LABELS[0]);
        p.insert(0, Property::new("p0", LABELS[0], PropertyValue::number(1.0, None)));
        define_object(&name, None, p, m).unwrap()
    })
}

pub fn class_pair() -> impl Strategy<Value = (ClassSpec, ClassSpec)> {
    (class_spec("A"), class_spec("B"))
}

/// Members keyed by what they mean, ignoring ids and qualification.
pub fn content_keys(c: &ClassSpec) -> Vec<String> {
    let mut keys: Vec<String> = c
        .specification
        .iter()
        .map(|p| format!("P {} = {}", p.semantic, p.value))
        .chain(c.signature.iter().map(|m| format!("F {} = {}", m.semantic, m.normalized_body())))
        .collect();
    keys.sort();
    keys
}

fn keys_or_empty(r: foodn::Result<ClassSpec>) -> Result<Vec<String>, TestCaseError> {
    match r {
        Ok(c) => Ok(content_keys(&c)),
        Err(Error::DoesNotExist(_)) => Ok(vec![]),
        Err(e) => Err(TestCaseError::fail(format!("unexpected error {e}"))),
    }
}

pub fn check_commutativity((a, b): (ClassSpec, ClassSpec)) -> Result<(), TestCaseError> {
    let (ra, rb) = (foodn::network::ClassEntry::Spec(a), foodn::network::ClassEntry::Spec(b));
    let (ea, eb) = (EntityRef::Class(&ra), EntityRef::Class(&rb));
    let ab = keys_or_empty(intersection_op(&[ea, eb], "I", TOL))?;
    let ba = keys_or_empty(intersection_op(&[eb, ea], "I", TOL))?;
    prop_assert_eq!(ab, ba);
    let ab = keys_or_empty(sym_difference_op(ea, eb, "S", TOL))?;
    let ba = keys_or_empty(sym_difference_op(eb, ea, "S", TOL))?;
    prop_assert_eq!(ab, ba);
    Ok(())
}

pub fn check_symdiff_split((a, b): (ClassSpec, ClassSpec)) -> Result<(), TestCaseError> {
    let (ra, rb) = (foodn::network::ClassEntry::Spec(a), foodn::network::ClassEntry::Spec(b));
    let (ea, eb) = (EntityRef::Class(&ra), EntityRef::Class(&rb));
    let s = keys_or_empty(sym_difference_op(ea, eb, "S", TOL))?;
    let mut parts = keys_or_empty(difference_op(ea, eb, "D", TOL))?;
    parts.extend(keys_or_empty(difference_op(eb, ea, "D", TOL))?);
    parts.sort();
    prop_assert_eq!(s, parts);
    Ok(())
}

// ---------------------------------------------------------------------------
// random networks

#[derive(Debug, Clone)]
pub struct NetPlan {
    pub classes: Vec<ClassSpec>,
    pub objects: Vec<FuzzyObject>,
    /// (source index, kind index, target index, degree in twentieths)
    pub edges: Vec<(usize, usize, usize, u32)>,
    /// (exploiter kind index, argument indices)
    pub ops: Vec<(usize, Vec<usize>)>,
    pub modify: Vec<usize>,
}

pub fn net_plan() -> impl Strategy<Value = NetPlan> {
    (
        (class_spec("A"), class_spec("B"), class_spec("C")),
        prop::collection::vec(Just(()), 1..=3),
        prop::collection::vec((0usize..6, 0usize..6, 0usize..6, 10u32..=20), 0..8),
        prop::collection::vec((0usize..5, prop::collection::vec(0usize..6, 3)), 1..6),
        prop::collection::vec(0usize..6, 1..4),
    )
        .prop_flat_map(|((a, b, c), objs, edges, ops, modify)| {
            let objects: Vec<_> = (0..objs.len()).map(|i| object(format!("o{i}"))).collect();
            (Just(vec![a, b, c]), objects, Just(edges), Just(ops), Just(modify))
        })
        .prop_map(|(classes, objects, edges, ops, modify)| NetPlan { classes, objects, edges, ops, modify })
}

pub fn names(net: &Network) -> Vec<String> {
    net.objects()
        .map(|o| o.name.clone())
        .chain(net.classes().map(|c| c.name().to_string()))
        .collect()
}

/// Builds a network from a plan; operations that the engine rejects are
/// simply skipped.
pub fn build(plan: &NetPlan) -> Network {
    let mut net = Network::new();
    for c in &plan.classes {
        net.add_class(c.clone()).unwrap();
    }
    for o in &plan.objects {
        net.add_object(o.clone()).unwrap();
    }
    let m = define_modifier(
        "Bump",
        Level::Object,
        "o0",
        "o0_bumped",
        None,
        vec![Change::new("p0", PropertyValue::number(1.0, None), PropertyValue::number(2.0, None))],
    )
    .unwrap();
    net.register_modifier(m).unwrap();
    let all = names(&net);
    for &(s, k, t, d) in &plan.edges {
        let r = Relation::new(&all[s % all.len()], RelationKind::ALL[k], &all[t % all.len()])
            .with_degree(Degree::new(d as f64 / 20.0).unwrap());
        let _ = net.add_relation(r);
    }
    for (k, args) in &plan.ops {
        let live = names(&net);
        let kind = ExploiterKind::ALL[*k];
        let wanted = match kind {
            ExploiterKind::Clone => 1,
            ExploiterKind::Difference | ExploiterKind::SymmetricDifference => 2,
            _ => 2 + args[2] % 2,
        };
        let mut picked: Vec<&str> = Vec::new();
        for i in args.iter().chain(&[0, 1, 2, 3, 4, 5]) {
            let name = live[i % live.len()].as_str();
            if picked.len() < wanted && !picked.contains(&name) {
                picked.push(name);
            }
        }
        let _ = net.apply_exploiter(kind, &picked, None, k + 1, TOL);
    }
    for &i in &plan.modify {
        let live = names(&net);
        let _ = net.apply_modifier("Bump", &live[i % live.len()], TOL);
    }
    net
}

pub fn fingerprint<T: serde::Serialize>(value: &T) -> u64 {
    let mut h = DefaultHasher::new();
    serde_json::to_string(value).unwrap().hash(&mut h);
    h.finish()
}

fn entity_fingerprint(net: &Network, name: &str) -> u64 {
    match net.entity(name).unwrap() {
        EntityRef::Object(o) => fingerprint(o),
        EntityRef::Class(c) => fingerprint(c),
    }
}

pub fn check_non_mutation(plan: NetPlan) -> Result<(), TestCaseError> {
    let base = build(&plan);
    let before: BTreeMap<String, u64> = names(&base).into_iter().map(|n| {
        let f = entity_fingerprint(&base, &n);
        (n, f)
    }).collect();
    let live = names(&base);
    for kind in ExploiterKind::ALL {
        for args in [vec![0usize], vec![0, 1], vec![1, 2], vec![0, 1, 2]] {
            let mut net = base.clone();
            let args: Vec<&str> = args.iter().map(|i| live[i % live.len()].as_str()).collect();
            let result = net.apply_exploiter(kind, &args, None, 1, TOL);
            for (name, f) in &before {
                prop_assert_eq!(entity_fingerprint(&net, name), *f, "{} changed by {:?}", name, kind);
            }
            if result.is_err() {
                prop_assert_eq!(&net, &base);
            } else {
                prop_assert_eq!(net.provenance().len(), base.provenance().len() + 1);
                prop_assert_eq!(net.relations(), base.relations());
            }
        }
    }
    Ok(())
}

pub fn check_fixpoint(plan: NetPlan) -> Result<(), TestCaseError> {
    let net = build(&plan);
    let text = document::serialize(&net);
    let back = document::load(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
    prop_assert_eq!(&back, &net);
    prop_assert_eq!(document::serialize(&back), text);
    Ok(())
}

// ---------------------------------------------------------------------------
// cyclic modification-of graphs

pub fn cyclic_edges() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..8).prop_flat_map(|n| {
        let ring: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        (Just(n), prop::collection::vec((0..n, 0..n), 0..12)).prop_map(move |(n, extra)| {
            let mut e = ring.clone();
            e.extend(extra);
            (n, e)
        })
    })
}

fn reach(edges: &[(usize, usize)], start: usize, forward: bool, transitive: bool) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        for &(s, t) in edges {
            let (from, to) = if forward { (s, t) } else { (t, s) };
            if from == cur && to != start && seen.insert(to) && transitive {
                queue.push_back(to);
            }
        }
    }
    seen
}

pub fn check_cyclic_queries((n, edges): (usize, Vec<(usize, usize)>)) -> Result<(), TestCaseError> {
    let mut net = Network::new();
    for i in 0..n {
        let o = define_object(&format!("x{i}"), None, vec![Property::new("p0", "Colour", PropertyValue::number(1.0, None))], vec![])
            .unwrap();
        net.add_object(o).unwrap();
    }
    for &(s, t) in &edges {
        let _ = net.add_relation(Relation::new(&format!("x{s}"), RelationKind::ModificationOf, &format!("x{t}")));
    }
    for start in 0..n {
        for (dir, forward) in [(Direction::Out, true), (Direction::In, false)] {
            for transitive in [false, true] {
                let got = net
                    .query_related(&format!("x{start}"), &[RelationKind::ModificationOf], dir, transitive)
                    .unwrap();
                let want: Vec<String> = reach(&edges, start, forward, transitive)
                    .into_iter()
                    .map(|i| format!("x{i}"))
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                prop_assert_eq!(got, want);
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------

/// Runs one property outside the `proptest!` macro, for the acceptance report.
pub fn run_property<S, F>(strategy: S, check: F) -> Result<(), String>
where
    S: Strategy,
    S::Value: Clone + std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let mut runner = TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, check).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// CLI golden files

/// Committed invocations: golden file stem and arguments, run from the
/// fixture directory.
pub const GOLDEN: &[(&str, &[&str])] = &[
    ("fuzzy", &["fuzzy", "--in", "polygons.foodn"]),
    ("membership", &["membership", "--in", "polygons.foodn", "Rb1", "T_Rb"]),
    ("intersect_disjoint", &["apply-exploiter", "intersect", "A", "B", "--in", "disjoint.foodn"]),
];

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn foodn(args: &[&str]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_foodn"))
        .args(args)
        .current_dir(fixture_dir())
        .env_remove("FOODN_TOLERANCE")
        .output()
        .expect("binary runs")
}

pub fn check_golden(stem: &str, args: &[&str]) -> Result<(), String> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let read = |ext: &str| std::fs::read(dir.join(format!("{stem}.{ext}"))).map_err(|e| format!("{stem}.{ext}: {e}"));
    let out = foodn(args);
    let code: i32 = String::from_utf8_lossy(&read("code")?).trim().parse().map_err(|e| format!("{e}"))?;
    if out.status.code() != Some(code) {
        return Err(format!("{stem}: exit {:?}, expected {code}", out.status.code()));
    }
    if out.stdout != read("stdout")? {
        return Err(format!("{stem}: stdout differs:\n{}", String::from_utf8_lossy(&out.stdout)));
    }
    if out.stderr != read("stderr")? {
        return Err(format!("{stem}: stderr differs:\n{}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(())
}
