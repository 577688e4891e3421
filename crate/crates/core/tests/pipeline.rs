use std::collections::BTreeSet;
use std::path::PathBuf;

use multicat_core::eval::reference::interpret;
use multicat_core::pipeline::{render_all, run_query, source_models};
use multicat_core::store::{load_dataset, DataModel, InstanceStore};
use multicat_core::value::Value;

fn dataset(name: &str) -> InstanceStore {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../datasets").join(name);
    load_dataset(&dir).unwrap()
}

#[test]
fn every_corpus_query_runs_and_renders_in_its_model() {
    for name in ["ecommerce", "university"] {
        let store = dataset(name);
        assert!(!store.examples().is_empty(), "{name} has no examples");
        for ex in store.examples() {
            let out = run_query(&ex.query, &store).unwrap_or_else(|d| panic!("{}: {d}", ex.title));
            let rendered = render_all(&out, &store);
            assert!(rendered.primary_error().is_none(), "{}: {:?}", ex.title, rendered.errors);
            assert_eq!(interpret(&out.typed, &store).unwrap(), out.value, "{}", ex.title);
        }
    }
}

#[test]
fn ecommerce_corpus_covers_all_source_model_combinations() {
    let store = dataset("ecommerce");
    let combos: BTreeSet<BTreeSet<DataModel>> = store
        .examples()
        .iter()
        .map(|ex| source_models(&run_query(&ex.query, &store).unwrap().typed, &store))
        .collect();
    assert_eq!(combos.len(), 7, "{combos:?}");
}

#[test]
fn filter_on_graph_collection() {
    let store = dataset("ecommerce");
    let out = run_query(&store.examples()[0].query, &store).unwrap();
    assert_eq!(out.value, Value::entities(["c1", "c4"]));
}
