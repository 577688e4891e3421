//! The instance side: every entity object of the schema gets a collection,
//! every morphism a materialized evaluator table.

mod load;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::{identity_id, Cardinality, ObjectKind, SchemaCategory};
use crate::graph::GraphTerm;
use crate::report::{LawReport, LawViolation};
use crate::value::Value;

pub use load::{load_dataset, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataModel {
    Relational,
    Xml,
    Graph,
    #[serde(rename = "keyvalue")]
    KeyValue,
}

impl fmt::Display for DataModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataModel::Relational => "relational",
            DataModel::Xml => "xml",
            DataModel::Graph => "graph",
            DataModel::KeyValue => "keyvalue",
        })
    }
}

/// Owned copy of an XML element, kept as the native payload of xml collections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlElement {
    pub name: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<XmlElement>,
    pub text: String,
}

impl XmlElement {
    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CollectionData {
    Relational {
        columns: Vec<String>,
        rows: Vec<Vec<String>>,
    },
    Xml(Vec<XmlElement>),
    Graph(GraphTerm),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    pub name: String,
    pub element_object: String,
    pub model: DataModel,
    pub data: CollectionData,
    /// Entity ids in fold order.
    ids: Vec<String>,
}

impl Collection {
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn graph(&self) -> Option<&GraphTerm> {
        match &self.data {
            CollectionData::Graph(g) => Some(g),
            _ => None,
        }
    }
}

/// Materialized function table for one morphism. Values are lists when the
/// morphism has cardinality many.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphismEvaluator {
    pub morphism: String,
    pub table: HashMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleQuery {
    pub title: String,
    pub query: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApplyError {
    #[error("unknown morphism `{0}`")]
    UnknownMorphism(String),
    #[error("entity `{entity}` is not in the domain of `{morphism}`")]
    UnknownEntity { morphism: String, entity: String },
    #[error("unknown collection `{0}`")]
    UnknownCollection(String),
}

/// An immutable multi-model dataset together with the instance functor.
#[derive(Debug, Clone)]
pub struct InstanceStore {
    name: String,
    schema: SchemaCategory,
    /// Keyed by element object id.
    collections: BTreeMap<String, Collection>,
    by_name: HashMap<String, String>,
    evaluators: BTreeMap<String, MorphismEvaluator>,
    keyvalue_backed: bool,
    examples: Vec<ExampleQuery>,
}

impl InstanceStore {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &SchemaCategory {
        &self.schema
    }

    pub fn examples(&self) -> &[ExampleQuery] {
        &self.examples
    }

    /// Collections in ascending object order.
    pub fn collections(&self) -> impl Iterator<Item = &Collection> {
        self.collections.values()
    }

    pub fn collection(&self, name: &str) -> Option<&Collection> {
        self.by_name.get(name).and_then(|o| self.collections.get(o))
    }

    pub fn collection_for_object(&self, object: &str) -> Option<&Collection> {
        self.collections.get(object)
    }

    pub fn evaluator(&self, morphism: &str) -> Option<&MorphismEvaluator> {
        self.evaluators.get(morphism)
    }

    /// Data models present in the package, including key-value files that
    /// only back morphisms.
    pub fn models(&self) -> Vec<DataModel> {
        let mut models: BTreeSet<DataModel> = self.collections.values().map(|c| c.model).collect();
        if self.keyvalue_backed {
            models.insert(DataModel::KeyValue);
        }
        models.into_iter().collect()
    }

    /// Entity ids of a collection: file order for relational, document order
    /// for xml, ascending vertex id for graph.
    pub fn collection_elements(&self, name: &str) -> Result<&[String], ApplyError> {
        self.collection(name)
            .map(Collection::ids)
            .ok_or_else(|| ApplyError::UnknownCollection(name.to_string()))
    }

    pub fn apply_morphism(&self, morphism: &str, input: &str) -> Result<Value, ApplyError> {
        let m = self
            .schema
            .morphism(morphism)
            .ok_or_else(|| ApplyError::UnknownMorphism(morphism.to_string()))?;
        let unknown_entity = || ApplyError::UnknownEntity {
            morphism: morphism.to_string(),
            entity: input.to_string(),
        };
        if let Some(ev) = self.evaluators.get(morphism) {
            return ev.table.get(input).cloned().ok_or_else(unknown_entity);
        }
        // Composites without a table fall back to chained lookup.
        let entry = self
            .schema
            .proper_composites()
            .find(|e| e.result == m.id)
            .ok_or_else(|| ApplyError::UnknownMorphism(morphism.to_string()))?;
        let first = self.apply_morphism(&entry.inner, input)?;
        self.chain(&entry.outer, &first)
    }

    /// Applies `morphism` to an intermediate value: an entity, or a list of
    /// entities when an earlier step had cardinality many.
    fn chain(&self, morphism: &str, input: &Value) -> Result<Value, ApplyError> {
        match input {
            Value::Entity(id) => self.apply_morphism(morphism, id),
            Value::List(items) => {
                let mut out = Vec::new();
                for item in items {
                    match self.chain(morphism, item)? {
                        Value::List(xs) => out.extend(xs),
                        x => out.push(x),
                    }
                }
                Ok(Value::List(dedup(out)))
            }
            other => Err(ApplyError::UnknownEntity {
                morphism: morphism.to_string(),
                entity: other.to_string(),
            }),
        }
    }

    /// A copy of the store with one evaluator entry replaced.
    pub fn patched(&self, morphism: &str, entity: &str, value: Value) -> InstanceStore {
        let mut copy = self.clone();
        copy.evaluators
            .entry(morphism.to_string())
            .or_insert_with(|| MorphismEvaluator {
                morphism: morphism.to_string(),
                table: HashMap::new(),
            })
            .table
            .insert(entity.to_string(), value);
        copy
    }

    /// Checks the identity and composition laws of the instance functor
    /// extensionally over every entity, plus totality and codomain typing of
    /// each evaluator table.
    pub fn check_functor_laws(&self) -> LawReport {
        let mut report = LawReport::default();
        let schema = &self.schema;

        for coll in self.collections.values() {
            let id = identity_id(&coll.element_object);
            let table = self.evaluators.get(&id).map(|e| &e.table);
            for entity in coll.ids() {
                let found = table.and_then(|t| t.get(entity));
                if found.and_then(Value::as_entity) != Some(entity.as_str()) {
                    report.push(LawViolation::FunctorIdentity {
                        object: coll.element_object.clone(),
                        entity: entity.clone(),
                        found: found.map_or("<missing>".to_string(), Value::to_string),
                    });
                }
            }
        }

        for ev in self.evaluators.values() {
            let Some(m) = schema.morphism(&ev.morphism) else { continue };
            let Some(domain) = self.collections.get(&m.domain) else { continue };
            for entity in domain.ids() {
                let Some(value) = ev.table.get(entity) else {
                    report.push(LawViolation::Totality {
                        morphism: m.id.clone(),
                        entity: entity.clone(),
                    });
                    continue;
                };
                if let Err(reason) = self.check_codomain(&m.codomain, m.cardinality, value) {
                    report.push(LawViolation::Codomain {
                        morphism: m.id.clone(),
                        entity: entity.clone(),
                        reason,
                    });
                }
            }
        }

        for entry in schema.composites() {
            let (Some(f), Some(h)) = (schema.morphism(&entry.inner), schema.morphism(&entry.result))
            else {
                continue;
            };
            // Steps out of primitive objects have no tables and nothing to check.
            let Some(g) = schema.morphism(&entry.outer) else { continue };
            if !schema.object(&g.domain).map_or(false, |o| o.is_entity()) {
                continue;
            }
            let Some(domain) = self.collections.get(&f.domain) else { continue };
            let Some(h_table) = self.evaluators.get(&h.id) else { continue };
            for entity in domain.ids() {
                let expected = self
                    .evaluators
                    .get(&f.id)
                    .and_then(|t| t.table.get(entity))
                    .ok_or(())
                    .and_then(|v| self.chain_table(&entry.outer, v).ok_or(()));
                let found = h_table.table.get(entity);
                let agree = match (&expected, found) {
                    (Ok(e), Some(x)) if h.cardinality == Cardinality::Many => {
                        as_set(e) == as_set(x)
                    }
                    (Ok(e), Some(x)) => e == x,
                    _ => false,
                };
                if !agree {
                    report.push(LawViolation::FunctorComposition {
                        composite: h.id.clone(),
                        entity: entity.clone(),
                        expected: expected.map_or("<undefined>".into(), |v| v.to_string()),
                        found: found.map_or("<missing>".into(), Value::to_string),
                    });
                }
            }
        }
        report
    }

    /// Chained lookup through materialized tables only.
    fn chain_table(&self, morphism: &str, input: &Value) -> Option<Value> {
        let table = &self.evaluators.get(morphism)?.table;
        match input {
            Value::Entity(id) => table.get(id).cloned(),
            Value::List(items) => {
                let mut out = Vec::new();
                for item in items {
                    match self.chain_table(morphism, item)? {
                        Value::List(xs) => out.extend(xs),
                        x => out.push(x),
                    }
                }
                Some(Value::List(dedup(out)))
            }
            _ => None,
        }
    }

    fn check_codomain(&self, object: &str, card: Cardinality, value: &Value) -> Result<(), String> {
        let check_one = |v: &Value| -> Result<(), String> {
            let obj = self
                .schema
                .object(object)
                .ok_or_else(|| format!("has unknown codomain {object}"))?;
            match obj.kind {
                ObjectKind::Entity => match v {
                    Value::Entity(id)
                        if self
                            .collections
                            .get(object)
                            .map_or(false, |c| c.ids().contains(id)) =>
                    {
                        Ok(())
                    }
                    other => Err(format!("= {other} is not a {object}")),
                },
                ObjectKind::Primitive => {
                    let ty = obj.primitive_type.expect("validated schema");
                    if v.has_primitive_type(ty) {
                        Ok(())
                    } else {
                        Err(format!("= {v} is not a {ty}"))
                    }
                }
            }
        };
        match (card, value) {
            (Cardinality::Many, Value::List(items)) => items.iter().try_for_each(check_one),
            (Cardinality::Many, other) => Err(format!("= {other} is not a list")),
            (Cardinality::One, v) => check_one(v),
        }
    }
}

fn dedup(items: Vec<Value>) -> Vec<Value> {
    let mut out: Vec<Value> = Vec::with_capacity(items.len());
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn as_set(v: &Value) -> BTreeSet<String> {
    match v {
        Value::List(xs) => xs.iter().map(Value::to_string).collect(),
        other => BTreeSet::from([other.to_string()]),
    }
}
