mod common;

use std::collections::BTreeSet;

use common::{fixture, rng, well_typed_query};
use multicat_core::category::{compose, PrimitiveType};
use multicat_core::graph::{graph_eq, GraphTerm};
use multicat_core::pipeline::{render_all, run_query, source_types};
use multicat_core::query::{parse, pretty_print, typecheck, QueryType};
use multicat_core::render::{render_graph, render_relational, render_xml};
use multicat_core::store::InstanceStore;
use multicat_core::value::Value;
use proptest::prelude::*;

fn term() -> impl Strategy<Value = GraphTerm> {
    let leaf = prop_oneof![
        1 => Just(GraphTerm::Empty),
        4 => (0..5u8).prop_map(|i| GraphTerm::vertex(format!("v{i}"))),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| GraphTerm::overlay(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| GraphTerm::connect(a, b)),
        ]
    })
}

fn value_has_type(v: &Value, t: &QueryType) -> bool {
    match (v, t) {
        (Value::Int(_), QueryType::Prim(PrimitiveType::Int))
        | (Value::Double(_), QueryType::Prim(PrimitiveType::Double))
        | (Value::Str(_), QueryType::Prim(PrimitiveType::String))
        | (Value::Bool(_), QueryType::Prim(PrimitiveType::Bool))
        | (Value::Entity(_), QueryType::Entity(_)) => true,
        (Value::Tuple(xs), QueryType::Tuple(ts)) => {
            xs.len() == ts.len() && xs.iter().zip(ts).all(|(x, t)| value_has_type(x, t))
        }
        (Value::List(xs), QueryType::List(t)) => xs.iter().all(|x| value_has_type(x, t)),
        _ => false,
    }
}

fn stores() -> [InstanceStore; 2] {
    [fixture("ecommerce"), fixture("university")]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn overlay_and_connect_laws(x in term(), y in term(), z in term()) {
        let ov = GraphTerm::overlay;
        let cn = GraphTerm::connect;
        prop_assert!(graph_eq(&ov(x.clone(), y.clone()), &ov(y.clone(), x.clone())));
        prop_assert!(graph_eq(&cn(x.clone(), cn(y.clone(), z.clone())), &cn(cn(x.clone(), y.clone()), z.clone())));
        prop_assert!(graph_eq(
            &cn(x.clone(), ov(y.clone(), z.clone())),
            &ov(cn(x.clone(), y.clone()), cn(x.clone(), z.clone()))
        ));
        prop_assert!(graph_eq(&cn(GraphTerm::Empty, x.clone()), &x));
    }

    #[test]
    fn canonical_term_has_same_semantics(x in term()) {
        let canon = GraphTerm::canonical(&x.semantics());
        prop_assert!(graph_eq(&canon, &x));
        let reparsed = GraphTerm::parse_text(&canon.to_text()).unwrap();
        prop_assert_eq!(reparsed, canon);
    }

    #[test]
    fn induced_subgraph_keeps_exactly_the_selected_part(x in term(), keep in proptest::collection::btree_set(0..5u8, 0..5)) {
        let keep: BTreeSet<String> = keep.into_iter().map(|i| format!("v{i}")).collect();
        let sem = x.semantics();
        let sub = x.induced_subgraph(&keep).semantics();
        let want_v: BTreeSet<_> = sem.vertices.intersection(&keep).cloned().collect();
        let want_e: BTreeSet<_> = sem.edges.iter().filter(|(a, b)| keep.contains(a) && keep.contains(b)).cloned().collect();
        prop_assert_eq!(sub.vertices, want_v);
        prop_assert_eq!(sub.edges, want_e);
    }

    #[test]
    fn generated_queries_round_trip(seed in any::<u64>()) {
        let q = common::any_query(&mut rng(seed));
        prop_assert_eq!(parse(&pretty_print(&q)).unwrap(), q);
    }

    #[test]
    fn well_typed_results_inhabit_their_type(seed in any::<u64>()) {
        for store in stores() {
            let ast = well_typed_query(&mut rng(seed), &store);
            let typed = typecheck(&ast, store.schema(), &source_types(&store)).unwrap();
            let text = pretty_print(&ast);
            let out = run_query(&text, &store).unwrap();
            prop_assert!(value_has_type(&out.value, typed.result_type()), "{}\n{}", text, out.value);
        }
    }

    #[test]
    fn renderings_agree(seed in any::<u64>()) {
        for store in stores() {
            let text = pretty_print(&well_typed_query(&mut rng(seed), &store));
            let out = run_query(&text, &store).unwrap();
            let rendered = render_all(&out, &store);
            let Some(table) = rendered.table else { continue };
            prop_assert!(table.rows.iter().all(|r| r.len() == table.columns.len()));

            // CSV parses back to the same rows
            let mut reader = csv::Reader::from_reader(rendered.csv.as_deref().unwrap().as_bytes());
            prop_assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), table.columns.iter().map(String::as_str).collect::<Vec<_>>());
            let rows: Vec<Vec<String>> = reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
            prop_assert_eq!(&rows, &table.rows);

            // XML is well-formed with one item per element
            let xml = rendered.xml.unwrap();
            let doc = roxmltree::Document::parse(&xml).unwrap();
            let items = doc.root_element().children().filter(|n| n.has_tag_name("item")).count();
            prop_assert_eq!(items, table.rows.len());

            // term text and graph view describe the same graph; edges stay inside the vertex set
            let graph = rendered.graph.unwrap();
            let sem = graph.semantics();
            prop_assert_eq!(GraphTerm::parse_text(rendered.term.as_deref().unwrap()).unwrap().semantics(), sem.clone());
            prop_assert!(sem.edges.iter().all(|(a, b)| sem.vertices.contains(a) && sem.vertices.contains(b)));

            // entity results: same ids everywhere (graph vertices are a set)
            if let QueryType::Entity(_) = &out.element_type {
                let ids: Vec<String> = table.rows.iter().map(|r| r[0].clone()).collect();
                let distinct: BTreeSet<String> = ids.iter().cloned().collect();
                prop_assert_eq!(&distinct, &sem.vertices);
                let mut from_xml: Vec<String> = doc.root_element().children()
                    .filter(|n| n.has_tag_name("item"))
                    .map(|n| n.first_element_child().unwrap().text().unwrap_or_default().to_string())
                    .collect();
                let mut sorted = ids.clone();
                sorted.sort();
                from_xml.sort();
                prop_assert_eq!(sorted, from_xml);
            }
        }
    }
}

#[test]
fn composition_is_associative_on_fixture_schemas() {
    for store in stores() {
        let cat = store.schema();
        let ms = cat.morphisms();
        let mut triples = 0;
        for f in ms {
            for g in ms.iter().filter(|g| g.domain == f.codomain) {
                let Ok(gf) = compose(g, f, cat) else { continue };
                for h in ms.iter().filter(|h| h.domain == g.codomain) {
                    let (Ok(hg), Ok(h_gf)) = (compose(h, g, cat), compose(h, gf, cat)) else { continue };
                    let hg_f = compose(hg, f, cat).expect("defined when the other side is");
                    assert_eq!(h_gf.id, hg_f.id, "{}.{}.{}", h.id, g.id, f.id);
                    triples += 1;
                }
            }
        }
        assert!(triples > 0);
    }
}

#[test]
fn renderers_handle_empty_results_for_every_type() {
    let store = fixture("ecommerce");
    let empty = Value::List(vec![]);
    for ty in [
        QueryType::entity("Order"),
        QueryType::Prim(PrimitiveType::Double),
        QueryType::Tuple(vec![QueryType::entity("Customer"), QueryType::Prim(PrimitiveType::Int)]),
    ] {
        assert!(render_relational(&empty, &ty, &store).unwrap().rows.is_empty());
        assert_eq!(render_xml(&empty, &ty, &store).unwrap(), "<result/>\n");
        assert!(render_graph(&empty, &ty, &store).unwrap().vertices.is_empty());
    }
}
