//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::{corruption, fixture, graph_term, mutate_schema, rng, well_typed_query, Mutation};
use multicat_core::category::check_category_laws;
use multicat_core::eval::reference::interpret;
use multicat_core::eval::execute;
use multicat_core::graph::{graph_eq, GraphSemantics, GraphTerm};
use multicat_core::pipeline::{render_all, run_query, source_models};
use multicat_core::query::{parse, pretty_print, typecheck};
use multicat_core::store::{load_dataset, DataModel};
use multicat_core::value::Value;

const EXAMPLE_1: &str = " QUERY (\\x -> if creditLimit x > 3000 then cons x else nil)\nFROM customers\nTO graph/xml/relational";
const EXAMPLE_2: &str = "LET t BE\nQUERY (\\x xs -> if elem \"Book\" (map productName (orderProducts x)) then cons x xs else xs)\nFROM orders TO relational IN\nQUERY (\\x -> if any (\\y -> orderedBy y customers == x) t then cons (customerName x, countryName(located x locations)) else nil)\nFROM customers TO algebraic graph/relational/xml";

type Verdict = Result<String, String>;

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("Example 1 reproduction", example_1),
        ("Example 2 reproduction", example_2),
        ("Category laws", category_laws),
        ("Functor laws", functor_laws),
        ("Graph algebra", graph_algebra),
        ("Oracle equivalence", oracle_equivalence),
        ("Parser round-trip", parser_round_trip),
        ("Desk-scale throughput", throughput),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn data_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../datasets").join(name)
}

// ---- oracles read straight from the fixture files ----

fn customers_json() -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(data_dir("ecommerce").join("customers.json")).unwrap()).unwrap()
}

fn csv_pairs(file: &str) -> Vec<(String, String)> {
    let mut r = csv::Reader::from_path(data_dir("ecommerce").join(file)).unwrap();
    r.records().map(|rec| {
        let rec = rec.unwrap();
        (rec[0].to_string(), rec[1].to_string())
    }).collect()
}

/// Customer ids with creditLimit > 3000, in ascending id order.
fn oracle_1() -> Vec<String> {
    let mut ids: Vec<String> = customers_json()["vertices"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|v| v["creditLimit"].as_i64().unwrap() > 3000)
        .map(|v| v["id"].as_str().unwrap().to_string())
        .collect();
    ids.sort();
    ids
}

/// (name, country) of customers with an order containing a "Book".
fn oracle_2() -> Vec<(String, String)> {
    let xml = fs::read_to_string(data_dir("ecommerce").join("orders.xml")).unwrap();
    let doc = roxmltree::Document::parse(&xml).unwrap();
    let book_orders: BTreeSet<String> = doc
        .descendants()
        .filter(|n| n.has_tag_name("order"))
        .filter(|o| {
            o.descendants()
                .filter(|p| p.has_tag_name("name"))
                .any(|n| n.text() == Some("Book"))
        })
        .map(|o| o.attribute("id").unwrap().to_string())
        .collect();
    let buyers: BTreeSet<String> = csv_pairs("ordered_by.csv")
        .into_iter()
        .filter(|(o, _)| book_orders.contains(o))
        .map(|(_, c)| c)
        .collect();
    let located: HashMap<_, _> = csv_pairs("located.csv").into_iter().collect();
    let country: HashMap<_, _> = {
        let mut r = csv::Reader::from_path(data_dir("ecommerce").join("locations.csv")).unwrap();
        let headers = r.headers().unwrap().clone();
        let col = headers.iter().position(|h| h == "countryName").unwrap();
        r.records().map(|rec| {
            let rec = rec.unwrap();
            (rec[0].to_string(), rec[col].to_string())
        }).collect()
    };
    let mut customers: Vec<(String, String)> = customers_json()["vertices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| (v["id"].as_str().unwrap().to_string(), v["customerName"].as_str().unwrap().to_string()))
        .collect();
    customers.sort();
    customers
        .into_iter()
        .filter(|(id, _)| buyers.contains(id))
        .map(|(id, name)| (name, country[&located[&id]].clone()))
        .collect()
}

// ---- criteria ----

fn example_1() -> Verdict {
    let store = fixture("ecommerce");
    let start = Instant::now();
    let out = run_query(EXAMPLE_1, &store).map_err(|d| d.to_string())?;
    let rendered = render_all(&out, &store);
    let elapsed = start.elapsed();

    let expected = oracle_1();
    ensure(out.value == Value::entities(expected.clone()), || format!("got {}, oracle {expected:?}", out.value))?;

    let mut want = expected.clone();
    want.sort();
    let sorted = |mut v: Vec<String>| {
        v.sort();
        v
    };
    let table = rendered.table.as_ref().ok_or("no table")?;
    let from_table = sorted(table.rows.iter().map(|r| r[0].clone()).collect());
    let xml = rendered.xml.as_ref().ok_or("no xml")?;
    let doc = roxmltree::Document::parse(xml).map_err(|e| e.to_string())?;
    let from_xml = sorted(
        doc.descendants()
            .filter(|n| n.has_tag_name("customerId"))
            .map(|n| n.text().unwrap_or_default().to_string())
            .collect(),
    );
    let graph = rendered.graph.as_ref().ok_or("no graph")?;
    let from_graph = sorted(graph.vertices.iter().map(|v| v.id.clone()).collect());
    ensure(from_table == want && from_xml == want && from_graph == want, || {
        format!("table {from_table:?}, xml {from_xml:?}, graph {from_graph:?}")
    })?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{expected:?} in all three renderings, {elapsed:?}"))
}

fn example_2() -> Verdict {
    let store = fixture("ecommerce");
    let start = Instant::now();
    let out = run_query(EXAMPLE_2, &store).map_err(|d| d.to_string())?;
    let elapsed = start.elapsed();
    let expected = oracle_2();
    let want = Value::List(
        expected
            .iter()
            .map(|(n, c)| Value::Tuple(vec![Value::str(n.as_str()), Value::str(c.as_str())]))
            .collect(),
    );
    ensure(out.value == want, || format!("got {}, oracle {expected:?}", out.value))?;
    let stages = out.plan.stages.len();
    ensure(stages == 2, || format!("{stages} stages"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{expected:?}, {stages}-stage plan, {elapsed:?}"))
}

fn category_laws() -> Verdict {
    let schemas = [fixture("ecommerce").schema().clone(), fixture("university").schema().clone()];
    for s in &schemas {
        let report = check_category_laws(s);
        ensure(report.is_empty(), || format!("shipped schema: {report}"))?;
    }
    let kinds = [Mutation::DroppedComposite, Mutation::BrokenIdentity, Mutation::MisroutedComposite];
    let mut r = rng(7);
    let mut counts = BTreeMap::new();
    for i in 0..50 {
        let kind = kinds[i % 3];
        let mutated = mutate_schema(&mut r, &schemas[i % 2], kind);
        let report = check_category_laws(&mutated);
        ensure(!report.is_empty(), || format!("mutation {i} ({kind:?}) not flagged"))?;
        *counts.entry(format!("{kind:?}")).or_insert(0) += 1;
    }
    Ok(format!("both schemas lawful; 50/50 mutations flagged {counts:?}"))
}

fn functor_laws() -> Verdict {
    let stores = [fixture("ecommerce"), fixture("university")];
    for s in &stores {
        let report = s.check_functor_laws();
        ensure(report.is_empty(), || format!("{}: {report}", s.name()))?;
    }
    let mut r = rng(11);
    for i in 0..50 {
        let store = &stores[i % 2];
        let (m, e, v) = corruption(&mut r, store);
        let report = store.patched(&m, &e, v.clone()).check_functor_laws();
        ensure(!report.is_empty(), || format!("corruption {m}({e}) := {v} not flagged"))?;
    }
    Ok("both stores lawful; 50/50 corruptions flagged".into())
}

/// Vertex and edge sets by direct recursion, without foldg.
fn direct_semantics(g: &GraphTerm) -> GraphSemantics {
    match g {
        GraphTerm::Empty => GraphSemantics::default(),
        GraphTerm::Vertex(v) => GraphSemantics {
            vertices: BTreeSet::from([v.clone()]),
            edges: BTreeSet::new(),
        },
        GraphTerm::Overlay(a, b) | GraphTerm::Connect(a, b) => {
            let (sa, sb) = (direct_semantics(a), direct_semantics(b));
            let mut edges: BTreeSet<_> = sa.edges.union(&sb.edges).cloned().collect();
            if matches!(g, GraphTerm::Connect(..)) {
                for x in &sa.vertices {
                    for y in &sb.vertices {
                        edges.insert((x.clone(), y.clone()));
                    }
                }
            }
            GraphSemantics {
                vertices: sa.vertices.union(&sb.vertices).cloned().collect(),
                edges,
            }
        }
    }
}

fn graph_algebra() -> Verdict {
    use GraphTerm as G;
    let ov = |a: &G, b: &G| G::overlay(a.clone(), b.clone());
    let cn = |a: &G, b: &G| G::connect(a.clone(), b.clone());
    let mut r = rng(3);
    for i in 0..1000 {
        let (x, y, z) = (graph_term(&mut r, 4), graph_term(&mut r, 4), graph_term(&mut r, 2));
        let laws: [(&str, G, G); 12] = [
            ("overlay commutative", ov(&x, &y), ov(&y, &x)),
            ("overlay associative", ov(&x, &ov(&y, &z)), ov(&ov(&x, &y), &z)),
            ("overlay identity", ov(&x, &G::Empty), x.clone()),
            ("overlay idempotent", ov(&x, &x), x.clone()),
            ("connect associative", cn(&x, &cn(&y, &z)), cn(&cn(&x, &y), &z)),
            ("connect left identity", cn(&G::Empty, &x), x.clone()),
            ("connect right identity", cn(&x, &G::Empty), x.clone()),
            ("left distributivity", cn(&x, &ov(&y, &z)), ov(&cn(&x, &y), &cn(&x, &z))),
            ("right distributivity", cn(&ov(&x, &y), &z), ov(&cn(&x, &z), &cn(&y, &z))),
            ("decomposition", cn(&cn(&x, &y), &z), ov(&ov(&cn(&x, &y), &cn(&x, &z)), &cn(&y, &z))),
            ("absorption", ov(&ov(&cn(&x, &y), &x), &y), cn(&x, &y)),
            ("saturation", cn(&cn(&x, &x), &x), cn(&x, &x)),
        ];
        for (name, lhs, rhs) in &laws {
            ensure(graph_eq(lhs, rhs), || format!("pair {i}: {name} fails for {x} / {y}"))?;
        }
        for t in [&x, &y] {
            ensure(t.semantics() == direct_semantics(t), || format!("foldg semantics differ on {t}"))?;
        }
    }
    Ok("1000 generated pairs satisfy 12 laws; foldg semantics agrees with direct recursion".into())
}

fn oracle_equivalence() -> Verdict {
    let stores = [fixture("ecommerce"), fixture("university")];
    let mut r = rng(42);
    let mut lets = [0; 3];
    let mut models = BTreeSet::new();
    let mut nonempty = 0;
    for i in 0..200 {
        let store = &stores[i % 2];
        let ast = well_typed_query(&mut r, store);
        let text = pretty_print(&ast);
        let sources = multicat_core::pipeline::source_types(store);
        let typed = typecheck(&ast, store.schema(), &sources).map_err(|e| format!("query {i} rejected: {e}\n{text}"))?;
        let fast = execute(&typed, store);
        let slow = interpret(&typed, store);
        ensure(fast == slow, || format!("query {i} differs\n{text}\nplan: {fast:?}\nreference: {slow:?}"))?;
        if matches!(&fast, Ok(Value::List(v)) if !v.is_empty()) {
            nonempty += 1;
        }
        lets[ast.block_count() - 1] += 1;
        models.extend(source_models(&typed, store));
    }
    ensure(models.len() == 3, || format!("source models exercised: {models:?}"))?;
    Ok(format!(
        "200/200 identical ({nonempty} non-empty; 0/1/2 LETs: {lets:?}; sources {models:?})"
    ))
}

fn parser_round_trip() -> Verdict {
    let mut r = rng(5);
    for i in 0..500 {
        let q = common::any_query(&mut r);
        let text = pretty_print(&q);
        let back = parse(&text).map_err(|e| format!("ast {i}: {e}\n{text}"))?;
        ensure(back == q, || format!("ast {i} changed\n{text}"))?;
    }
    let mut corpus = 0;
    let mut combos = BTreeSet::new();
    for name in ["ecommerce", "university"] {
        let store = fixture(name);
        for ex in store.examples() {
            let q = parse(&ex.query).map_err(|e| format!("{}: {e}", ex.title))?;
            let again = parse(&pretty_print(&q)).map_err(|e| format!("{}: {e}", ex.title))?;
            ensure(again == q, || format!("{} changed", ex.title))?;
            if name == "ecommerce" {
                let out = run_query(&ex.query, &store).map_err(|d| format!("{}: {d}", ex.title))?;
                combos.insert(source_models(&out.typed, &store));
            }
            corpus += 1;
        }
    }
    ensure(corpus >= 20, || format!("corpus has {corpus} queries"))?;
    let base = [DataModel::Relational, DataModel::Xml, DataModel::Graph];
    let missing: Vec<BTreeSet<DataModel>> = (1u8..8)
        .map(|bits| (0..3).filter(|i| bits & (1 << i) != 0).map(|i| base[i]).collect())
        .filter(|subset| !combos.contains(subset))
        .collect();
    ensure(missing.is_empty(), || format!("uncovered source combinations: {missing:?}"))?;
    Ok(format!("500 generated ASTs and {corpus} corpus queries round-trip; 7/7 source combinations covered"))
}

fn throughput() -> Verdict {
    const ROWS: usize = 100_000;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = dir.path();
    fs::write(
        p.join("schema.json"),
        r#"{"objects":[{"id":"Item","kind":"entity"},{"id":"Int","kind":"primitive","primitiveType":"int"}],
            "morphisms":[{"id":"amount","domain":"Item","codomain":"Int"}],"composites":[]}"#,
    )
    .unwrap();
    fs::write(
        p.join("manifest.json"),
        r#"{"name":"synthetic","collections":[{"name":"items","object":"Item","model":"relational","file":"items.csv"}],
            "evaluators":[{"morphism":"amount","source":"column"}]}"#,
    )
    .unwrap();
    let mut csv = String::from("id,amount\n");
    for i in 0..ROWS {
        let _ = writeln!(csv, "i{i},{}", (i * 7919) % 1000);
    }
    fs::write(p.join("items.csv"), csv).unwrap();
    let load_start = Instant::now();
    let store = load_dataset(p).map_err(|e| e.to_string())?;
    let load = load_start.elapsed();

    let start = Instant::now();
    let out = run_query("QUERY (\\x -> if amount x > 500 then cons x else nil) FROM items TO relational", &store)
        .map_err(|d| d.to_string())?;
    let elapsed = start.elapsed();
    let expected = (0..ROWS).filter(|i| (i * 7919) % 1000 > 500).count();
    let got = out.value.as_list().map_or(0, <[Value]>::len);
    ensure(got == expected, || format!("{got} rows, expected {expected}"))?;
    ensure(elapsed < Duration::from_secs(5), || format!("query took {elapsed:?}"))?;
    Ok(format!("{ROWS} rows filtered to {got} in {elapsed:?} (load {load:?})"))
}
