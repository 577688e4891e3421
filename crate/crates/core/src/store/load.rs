//! Dataset package loader.
//!
//! A package is a directory holding `manifest.json`, `schema.json`, the data
//! files named by the manifest and, optionally, `examples.json`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::{
    Collection, CollectionData, DataModel, ExampleQuery, InstanceStore, MorphismEvaluator,
    XmlElement,
};
use crate::category::{Cardinality, Morphism, ObjectKind, SchemaCategory, SchemaError};
use crate::graph::GraphTerm;
use crate::value::Value;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("missing file {0}")]
    MissingFile(String),
    #[error("{file}: schema violation: {reason}")]
    SchemaViolation { file: String, reason: String },
    #[error("{file}: dangling reference to {object} `{id}`")]
    DanglingReference {
        file: String,
        object: String,
        id: String,
    },
    #[error("{file}:{line}: parse error: {message}")]
    ParseError {
        file: String,
        line: usize,
        message: String,
    },
    #[error("schema.json: {0}")]
    Schema(#[from] SchemaError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    name: String,
    collections: Vec<CollectionSpec>,
    #[serde(default)]
    evaluators: Vec<EvaluatorSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CollectionSpec {
    name: String,
    object: String,
    model: DataModel,
    file: String,
    /// Element name of the entities in an xml document.
    element: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum SourceKind {
    Column,
    Xmlpath,
    Vertexprop,
    Kvfile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluatorSpec {
    morphism: String,
    source: SourceKind,
    file: Option<String>,
    /// Column, xml path or vertex property name; defaults to the morphism id.
    #[serde(alias = "column", alias = "path", alias = "prop")]
    field: Option<String>,
}

#[derive(Debug, Deserialize)]
struct GraphFile {
    vertices: Vec<serde_json::Map<String, serde_json::Value>>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

/// Raw per-entity data kept while building evaluators.
enum RawEntities {
    Rows {
        columns: Vec<String>,
        rows: Vec<Vec<String>>,
    },
    Xml(Vec<XmlElement>),
    Vertices(Vec<serde_json::Map<String, serde_json::Value>>),
}

struct Loader {
    dir: PathBuf,
    schema: SchemaCategory,
}

pub fn load_dataset(dir: &Path) -> Result<InstanceStore, StoreError> {
    let manifest_text = read(dir, "manifest.json")?;
    let manifest: Manifest = serde_json::from_str(&manifest_text).map_err(|e| json_error("manifest.json", e))?;
    let schema_text = read(dir, "schema.json")?;
    let schema = SchemaCategory::from_json(&schema_text)?;
    let examples = if dir.join("examples.json").is_file() {
        let text = read(dir, "examples.json")?;
        serde_json::from_str::<Vec<ExampleQuery>>(&text).map_err(|e| json_error("examples.json", e))?
    } else {
        Vec::new()
    };
    let loader = Loader {
        dir: dir.to_path_buf(),
        schema,
    };
    loader.build(manifest, examples)
}

fn read(dir: &Path, file: &str) -> Result<String, StoreError> {
    let path = dir.join(file);
    if !path.is_file() {
        return Err(StoreError::MissingFile(file.to_string()));
    }
    std::fs::read_to_string(&path).map_err(|e| StoreError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn json_error(file: &str, e: serde_json::Error) -> StoreError {
    StoreError::ParseError {
        file: file.to_string(),
        line: e.line(),
        message: e.to_string(),
    }
}

fn violation(file: &str, reason: impl Into<String>) -> StoreError {
    StoreError::SchemaViolation {
        file: file.to_string(),
        reason: reason.into(),
    }
}

impl Loader {
    fn build(self, manifest: Manifest, examples: Vec<ExampleQuery>) -> Result<InstanceStore, StoreError> {
        let mut collections = BTreeMap::new();
        let mut by_name = HashMap::new();
        let mut raw = HashMap::new();
        for spec in &manifest.collections {
            let object = self.schema.object(&spec.object).ok_or_else(|| {
                violation("manifest.json", format!("collection {} has unknown object {}", spec.name, spec.object))
            })?;
            if object.kind != ObjectKind::Entity {
                return Err(violation(
                    "manifest.json",
                    format!("collection {} holds primitive object {}", spec.name, spec.object),
                ));
            }
            if collections.contains_key(&spec.object) {
                return Err(violation("manifest.json", format!("object {} has two collections", spec.object)));
            }
            if by_name.insert(spec.name.clone(), spec.object.clone()).is_some() {
                return Err(violation("manifest.json", format!("duplicate collection {}", spec.name)));
            }
            let (collection, entities) = self.load_collection(spec)?;
            raw.insert(spec.object.clone(), (spec.file.clone(), entities));
            collections.insert(spec.object.clone(), collection);
        }
        for object in self.schema.objects().iter().filter(|o| o.is_entity()) {
            if !collections.contains_key(&object.id) {
                return Err(violation("manifest.json", format!("entity object {} has no collection", object.id)));
            }
        }
        let id_sets: HashMap<String, HashSet<String>> = collections
            .iter()
            .map(|(o, c): (&String, &Collection)| (o.clone(), c.ids.iter().cloned().collect()))
            .collect();

        let mut evaluators = BTreeMap::new();
        let mut keyvalue_backed = false;
        for spec in &manifest.evaluators {
            let m = self.schema.morphism(&spec.morphism).ok_or_else(|| {
                violation("manifest.json", format!("evaluator for unknown morphism {}", spec.morphism))
            })?;
            if m.is_identity() {
                return Err(violation("manifest.json", format!("identity {} cannot have an evaluator", m.id)));
            }
            let domain = collections.get(&m.domain).ok_or_else(|| {
                violation("manifest.json", format!("{} has no domain collection", m.id))
            })?;
            if matches!(spec.source, SourceKind::Kvfile) {
                keyvalue_backed = true;
            }
            let table = self.load_evaluator(spec, m, domain, &raw[&m.domain], &id_sets)?;
            if evaluators.insert(m.id.clone(), MorphismEvaluator { morphism: m.id.clone(), table }).is_some() {
                return Err(violation("manifest.json", format!("duplicate evaluator for {}", m.id)));
            }
        }

        for (object, coll) in &collections {
            let id = crate::category::identity_id(object);
            let table = coll.ids.iter().map(|e| (e.clone(), Value::Entity(e.clone()))).collect();
            evaluators.insert(id.clone(), MorphismEvaluator { morphism: id, table });
        }

        let mut store = InstanceStore {
            name: manifest.name,
            schema: self.schema.clone(),
            collections,
            by_name,
            evaluators,
            keyvalue_backed,
            examples,
        };

        // Composites without an explicit table are materialized by chaining.
        loop {
            let pending: Vec<_> = store
                .schema
                .proper_composites()
                .filter(|e| !store.evaluators.contains_key(&e.result))
                .filter(|e| store.evaluators.contains_key(&e.inner) && store.evaluators.contains_key(&e.outer))
                .collect();
            if pending.is_empty() {
                break;
            }
            for entry in pending {
                let Some(domain) = store.schema.morphism(&entry.result).map(|m| m.domain.clone()) else {
                    continue;
                };
                let mut table = HashMap::new();
                for entity in store.collections[&domain].ids() {
                    let value = store.apply_morphism(&entry.result, entity).map_err(|e| {
                        violation("manifest.json", format!("cannot materialize {}: {e}", entry.result))
                    })?;
                    table.insert(entity.clone(), value);
                }
                store
                    .evaluators
                    .insert(entry.result.clone(), MorphismEvaluator { morphism: entry.result.clone(), table });
            }
        }

        for m in store.schema.morphisms() {
            let entity_domain = store.schema.object(&m.domain).map_or(false, |o| o.is_entity());
            if entity_domain && !store.evaluators.contains_key(&m.id) {
                return Err(violation("manifest.json", format!("morphism {} has no evaluator", m.id)));
            }
        }
        Ok(store)
    }

    fn load_collection(&self, spec: &CollectionSpec) -> Result<(Collection, RawEntities), StoreError> {
        let text = read(&self.dir, &spec.file)?;
        let file = spec.file.as_str();
        let (data, ids, raw) = match spec.model {
            DataModel::Relational => {
                let (columns, rows) = parse_csv(file, &text)?;
                let id_col = columns
                    .iter()
                    .position(|c| c == "id")
                    .ok_or_else(|| violation(file, "missing `id` column"))?;
                let ids = rows.iter().map(|r| r[id_col].clone()).collect();
                let data = CollectionData::Relational {
                    columns: columns.clone(),
                    rows: rows.clone(),
                };
                (data, ids, RawEntities::Rows { columns, rows })
            }
            DataModel::Xml => {
                let element = spec.element.as_deref().unwrap_or(&spec.object);
                let doc = roxmltree::Document::parse(&text).map_err(|e| StoreError::ParseError {
                    file: file.to_string(),
                    line: e.pos().row as usize,
                    message: e.to_string(),
                })?;
                let elements: Vec<XmlElement> = doc
                    .descendants()
                    .filter(|n| n.is_element() && n.tag_name().name() == element)
                    .map(owned_element)
                    .collect();
                let ids = elements
                    .iter()
                    .map(|e| {
                        e.attribute("id")
                            .map(str::to_string)
                            .ok_or_else(|| violation(file, format!("<{element}> without id attribute")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let root = owned_element(doc.root_element());
                (CollectionData::Xml(vec![root]), ids, RawEntities::Xml(elements))
            }
            DataModel::Graph => {
                let g: GraphFile = serde_json::from_str(&text).map_err(|e| json_error(file, e))?;
                let mut ids = Vec::new();
                for v in &g.vertices {
                    match v.get("id") {
                        Some(serde_json::Value::String(id)) => ids.push(id.clone()),
                        _ => return Err(violation(file, "vertex without string id")),
                    }
                }
                let known: HashSet<&String> = ids.iter().collect();
                for (s, d) in &g.edges {
                    for end in [s, d] {
                        if !known.contains(end) {
                            return Err(StoreError::DanglingReference {
                                file: file.to_string(),
                                object: spec.object.clone(),
                                id: end.clone(),
                            });
                        }
                    }
                }
                let term = GraphTerm::from_parts(ids.iter().cloned(), g.edges.iter().cloned());
                let mut sorted = ids.clone();
                sorted.sort();
                (CollectionData::Graph(term), sorted, RawEntities::Vertices(g.vertices))
            }
            DataModel::KeyValue => {
                return Err(violation(
                    "manifest.json",
                    format!("collection {}: key-value data only backs morphisms", spec.name),
                ))
            }
        };
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id) {
                return Err(violation(file, format!("duplicate entity id {id}")));
            }
        }
        let collection = Collection {
            name: spec.name.clone(),
            element_object: spec.object.clone(),
            model: spec.model,
            data,
            ids,
        };
        Ok((collection, raw))
    }

    fn load_evaluator(
        &self,
        spec: &EvaluatorSpec,
        m: &Morphism,
        domain: &Collection,
        raw: &(String, RawEntities),
        id_sets: &HashMap<String, HashSet<String>>,
    ) -> Result<HashMap<String, Value>, StoreError> {
        let field = spec.field.as_deref().unwrap_or(&m.id);
        let (data_file, entities) = raw;
        let mut outputs: HashMap<String, Vec<String>> = HashMap::new();
        let mut json_outputs: HashMap<String, Vec<serde_json::Value>> = HashMap::new();
        let file = match spec.source {
            SourceKind::Column => {
                let RawEntities::Rows { columns, rows } = entities else {
                    return Err(violation("manifest.json", format!("{}: column source needs a relational domain", m.id)));
                };
                let col = columns
                    .iter()
                    .position(|c| c == field)
                    .ok_or_else(|| violation(data_file, format!("missing column `{field}`")))?;
                for (id, row) in domain.ids.iter().zip(rows) {
                    outputs.insert(id.clone(), vec![row[col].clone()]);
                }
                data_file.clone()
            }
            SourceKind::Xmlpath => {
                let RawEntities::Xml(elements) = entities else {
                    return Err(violation("manifest.json", format!("{}: xmlpath source needs an xml domain", m.id)));
                };
                let entity_codomain = self.schema.object(&m.codomain).map_or(false, |o| o.is_entity());
                for (id, el) in domain.ids.iter().zip(elements) {
                    let values = match el.attribute(field) {
                        Some(v) => vec![v.to_string()],
                        None => el
                            .children
                            .iter()
                            .filter(|c| c.name == field)
                            .map(|c| match c.attribute("id") {
                                Some(r) if entity_codomain => r.to_string(),
                                _ => c.text.clone(),
                            })
                            .collect(),
                    };
                    outputs.insert(id.clone(), values);
                }
                data_file.clone()
            }
            SourceKind::Vertexprop => {
                let RawEntities::Vertices(vertices) = entities else {
                    return Err(violation("manifest.json", format!("{}: vertexprop source needs a graph domain", m.id)));
                };
                for (vertex, props) in domain_vertices(vertices) {
                    let values = match props.get(field) {
                        None | Some(serde_json::Value::Null) => Vec::new(),
                        Some(serde_json::Value::Array(xs)) if m.cardinality == Cardinality::Many => xs.clone(),
                        Some(v) => vec![v.clone()],
                    };
                    json_outputs.insert(vertex, values);
                }
                data_file.clone()
            }
            SourceKind::Kvfile => {
                let kv_file = spec
                    .file
                    .as_deref()
                    .ok_or_else(|| violation("manifest.json", format!("{}: kvfile source needs a file", m.id)))?;
                let text = read(&self.dir, kv_file)?;
                let (_, rows) = parse_csv(kv_file, &text)?;
                for row in rows {
                    let [key, value] = <[String; 2]>::try_from(row)
                        .map_err(|_| violation(kv_file, "expected key,value rows"))?;
                    if !id_sets[&m.domain].contains(&key) {
                        return Err(StoreError::DanglingReference {
                            file: kv_file.to_string(),
                            object: m.domain.clone(),
                            id: key,
                        });
                    }
                    outputs.entry(key).or_default().push(value);
                }
                kv_file.to_string()
            }
        };

        let codomain = self.schema.object(&m.codomain).expect("validated schema");
        let convert_text = |raw: &str| -> Result<Value, StoreError> {
            match codomain.kind {
                ObjectKind::Entity => {
                    if id_sets[&codomain.id].contains(raw) {
                        Ok(Value::Entity(raw.to_string()))
                    } else {
                        Err(StoreError::DanglingReference {
                            file: file.clone(),
                            object: codomain.id.clone(),
                            id: raw.to_string(),
                        })
                    }
                }
                ObjectKind::Primitive => {
                    let ty = codomain.primitive_type.expect("validated schema");
                    Value::parse_primitive(raw, ty).map_err(|r| violation(&file, format!("{}: {r}", m.id)))
                }
            }
        };
        let convert_json = |raw: &serde_json::Value| -> Result<Value, StoreError> {
            match raw {
                serde_json::Value::String(s) => convert_text(s),
                serde_json::Value::Number(n) => {
                    let ty = codomain.primitive_type;
                    match ty {
                        Some(crate::category::PrimitiveType::Int) => n
                            .as_i64()
                            .map(Value::Int)
                            .ok_or_else(|| violation(&file, format!("{}: {n} is not an int", m.id))),
                        Some(crate::category::PrimitiveType::Double) => Ok(Value::Double(n.as_f64().unwrap_or(f64::NAN))),
                        _ => Err(violation(&file, format!("{}: unexpected number {n}", m.id))),
                    }
                }
                serde_json::Value::Bool(b) if codomain.primitive_type == Some(crate::category::PrimitiveType::Bool) => {
                    Ok(Value::Bool(*b))
                }
                other => Err(violation(&file, format!("{}: unexpected value {other}", m.id))),
            }
        };

        let mut table = HashMap::new();
        for entity in &domain.ids {
            let values: Vec<Value> = if let Some(raws) = json_outputs.get(entity) {
                raws.iter().map(convert_json).collect::<Result<_, _>>()?
            } else {
                outputs
                    .get(entity)
                    .map(|raws| raws.iter().map(|r| convert_text(r)).collect::<Result<_, _>>())
                    .transpose()?
                    .unwrap_or_default()
            };
            let value = match m.cardinality {
                Cardinality::Many => Value::List(values),
                Cardinality::One => {
                    let n = values.len();
                    let mut it = values.into_iter();
                    match (it.next(), n) {
                        (Some(v), 1) => v,
                        _ => {
                            return Err(violation(
                                &file,
                                format!("{}({entity}) has {n} values, expected exactly one", m.id),
                            ))
                        }
                    }
                }
            };
            table.insert(entity.clone(), value);
        }
        Ok(table)
    }
}

fn domain_vertices(
    vertices: &[serde_json::Map<String, serde_json::Value>],
) -> impl Iterator<Item = (String, &serde_json::Map<String, serde_json::Value>)> {
    vertices.iter().filter_map(|v| match v.get("id") {
        Some(serde_json::Value::String(id)) => Some((id.clone(), v)),
        _ => None,
    })
}

fn parse_csv(file: &str, text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), StoreError> {
    let csv_error = |e: csv::Error| StoreError::ParseError {
        file: file.to_string(),
        line: e.position().map_or(0, |p| p.line() as usize),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let columns: Vec<String> = reader.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok((columns, rows))
}

fn owned_element(node: roxmltree::Node) -> XmlElement {
    XmlElement {
        name: node.tag_name().name().to_string(),
        attributes: node
            .attributes()
            .map(|a| (a.name().to_string(), a.value().to_string()))
            .collect(),
        children: node.children().filter(|c| c.is_element()).map(owned_element).collect(),
        text: node
            .children()
            .filter(|c| c.is_text())
            .filter_map(|c| c.text())
            .collect::<String>()
            .trim()
            .to_string(),
    }
}
