//! Finite schema categories.
//!
//! Objects are data types (entities such as `Customer`, or primitives such as
//! `String`), morphisms are typed functions between them, and composition is
//! stored extensionally as a table keyed by `(outer, inner)`. Law checking is a
//! finite enumeration over that table.
//!
//! Identity morphisms are named `id_<Object>`. They are never written in a
//! schema file; [`SchemaCategory::from_json`] adds them together with their
//! composition entries.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{LawReport, LawViolation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Primitive,
    Entity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveType {
    String,
    Int,
    Double,
    Bool,
}

impl fmt::Display for PrimitiveType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PrimitiveType::String => "string",
            PrimitiveType::Int => "int",
            PrimitiveType::Double => "double",
            PrimitiveType::Bool => "bool",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SchemaObject {
    pub id: String,
    pub kind: ObjectKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive_type: Option<PrimitiveType>,
}

impl SchemaObject {
    pub fn entity(id: impl Into<String>) -> Self {
        SchemaObject {
            id: id.into(),
            kind: ObjectKind::Entity,
            primitive_type: None,
        }
    }

    pub fn primitive(id: impl Into<String>, ty: PrimitiveType) -> Self {
        SchemaObject {
            id: id.into(),
            kind: ObjectKind::Primitive,
            primitive_type: Some(ty),
        }
    }

    pub fn is_entity(&self) -> bool {
        self.kind == ObjectKind::Entity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cardinality {
    #[default]
    One,
    Many,
}

impl Cardinality {
    /// Cardinality of `g . f`: many as soon as either step is many.
    pub fn then(self, next: Cardinality) -> Cardinality {
        if self == Cardinality::Many || next == Cardinality::Many {
            Cardinality::Many
        } else {
            Cardinality::One
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Morphism {
    pub id: String,
    pub domain: String,
    pub codomain: String,
    #[serde(default)]
    pub cardinality: Cardinality,
    /// Whether the closure requirement covers this morphism.
    pub composable: bool,
}

impl Morphism {
    pub fn new(
        id: impl Into<String>,
        domain: impl Into<String>,
        codomain: impl Into<String>,
        cardinality: Cardinality,
        composable: bool,
    ) -> Self {
        Morphism {
            id: id.into(),
            domain: domain.into(),
            codomain: codomain.into(),
            cardinality,
            composable,
        }
    }

    pub fn identity(object: &str) -> Self {
        Morphism::new(identity_id(object), object, object, Cardinality::One, true)
    }

    pub fn is_identity(&self) -> bool {
        self.domain == self.codomain && self.id == identity_id(&self.domain)
    }
}

pub fn identity_id(object: &str) -> String {
    format!("id_{object}")
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("duplicate object `{0}`")]
    DuplicateObject(String),
    #[error("duplicate morphism `{0}`")]
    DuplicateMorphism(String),
    #[error("morphism `{morphism}` refers to unknown object `{object}`")]
    UnknownObject { morphism: String, object: String },
    #[error("object `{0}`: primitiveType must be present exactly when kind is primitive")]
    PrimitiveTypeMismatch(String),
    #[error("identity morphism `{0}` must not be declared in a schema file")]
    ReservedIdentity(String),
    #[error("composite entry refers to unknown morphism `{0}`")]
    UnknownCompositeMorphism(String),
    #[error("duplicate composite entry for ({outer}, {inner})")]
    DuplicateComposite { outer: String, inner: String },
    #[error("invalid schema file: {0}")]
    Format(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CategoryError {
    #[error("type mismatch: cannot compose {outer} after {inner}{}", index.map(|i| format!(" (pair {i})")).unwrap_or_default())]
    TypeMismatch {
        outer: String,
        inner: String,
        index: Option<usize>,
    },
    #[error("composite {outer} . {inner} is not registered")]
    MissingComposite { outer: String, inner: String },
    #[error("unknown morphism `{0}`")]
    UnknownMorphism(String),
    #[error("empty morphism path")]
    EmptyPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeEntry {
    pub outer: String,
    pub inner: String,
    pub result: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    objects: Vec<SchemaObject>,
    morphisms: Vec<FileMorphism>,
    #[serde(default)]
    composites: Vec<CompositeEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileMorphism {
    id: String,
    domain: String,
    codomain: String,
    #[serde(default)]
    cardinality: Cardinality,
    composable: Option<bool>,
}

/// A finite category with an extensional composition table.
///
/// Construction checks structural well-formedness only (unique ids, resolvable
/// endpoints). Category laws are checked separately by
/// [`check_category_laws`], which reports violations as data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaCategory {
    objects: Vec<SchemaObject>,
    morphisms: Vec<Morphism>,
    composites: BTreeMap<(String, String), String>,
    object_index: HashMap<String, usize>,
    morphism_index: HashMap<String, usize>,
}

impl SchemaCategory {
    pub fn new(
        objects: Vec<SchemaObject>,
        morphisms: Vec<Morphism>,
        composites: impl IntoIterator<Item = CompositeEntry>,
    ) -> Result<Self, SchemaError> {
        let mut object_index = HashMap::new();
        for (i, o) in objects.iter().enumerate() {
            if (o.kind == ObjectKind::Primitive) != o.primitive_type.is_some() {
                return Err(SchemaError::PrimitiveTypeMismatch(o.id.clone()));
            }
            if object_index.insert(o.id.clone(), i).is_some() {
                return Err(SchemaError::DuplicateObject(o.id.clone()));
            }
        }
        let mut morphism_index = HashMap::new();
        for (i, m) in morphisms.iter().enumerate() {
            for end in [&m.domain, &m.codomain] {
                if !object_index.contains_key(end) {
                    return Err(SchemaError::UnknownObject {
                        morphism: m.id.clone(),
                        object: end.clone(),
                    });
                }
            }
            if morphism_index.insert(m.id.clone(), i).is_some() {
                return Err(SchemaError::DuplicateMorphism(m.id.clone()));
            }
        }
        let mut table = BTreeMap::new();
        for entry in composites {
            let key = (entry.outer.clone(), entry.inner.clone());
            if table.insert(key, entry.result).is_some() {
                return Err(SchemaError::DuplicateComposite {
                    outer: entry.outer,
                    inner: entry.inner,
                });
            }
        }
        Ok(SchemaCategory {
            objects,
            morphisms,
            composites: table,
            object_index,
            morphism_index,
        })
    }

    /// Builds a category from schema-file parts, adding every identity
    /// morphism and its composition entries.
    pub fn with_identities(
        objects: Vec<SchemaObject>,
        mut morphisms: Vec<Morphism>,
        mut composites: Vec<CompositeEntry>,
    ) -> Result<Self, SchemaError> {
        if let Some(m) = morphisms.iter().find(|m| m.id.starts_with("id_")) {
            return Err(SchemaError::ReservedIdentity(m.id.clone()));
        }
        for e in &composites {
            for name in [&e.outer, &e.inner, &e.result] {
                if !morphisms.iter().any(|m| &m.id == name) {
                    return Err(SchemaError::UnknownCompositeMorphism(name.clone()));
                }
            }
        }
        morphisms.extend(objects.iter().map(|o| Morphism::identity(&o.id)));
        for m in &morphisms {
            let pre = identity_id(&m.domain);
            let post = identity_id(&m.codomain);
            composites.push(CompositeEntry {
                outer: m.id.clone(),
                inner: pre,
                result: m.id.clone(),
            });
            if !m.is_identity() {
                composites.push(CompositeEntry {
                    outer: post,
                    inner: m.id.clone(),
                    result: m.id.clone(),
                });
            }
        }
        SchemaCategory::new(objects, morphisms, composites)
    }

    /// Parses the `schema.json` format.
    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let file: SchemaFile =
            serde_json::from_str(text).map_err(|e| SchemaError::Format(e.to_string()))?;
        let kinds: HashMap<&str, ObjectKind> =
            file.objects.iter().map(|o| (o.id.as_str(), o.kind)).collect();
        let morphisms = file
            .morphisms
            .into_iter()
            .map(|m| {
                let entity_to_entity = kinds.get(m.domain.as_str()) == Some(&ObjectKind::Entity)
                    && kinds.get(m.codomain.as_str()) == Some(&ObjectKind::Entity);
                Morphism {
                    composable: m.composable.unwrap_or(entity_to_entity),
                    id: m.id,
                    domain: m.domain,
                    codomain: m.codomain,
                    cardinality: m.cardinality,
                }
            })
            .collect();
        SchemaCategory::with_identities(file.objects, morphisms, file.composites)
    }

    pub fn from_path(path: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SchemaError::Format(format!("{}: {e}", path.display())))?;
        SchemaCategory::from_json(&text)
    }

    pub fn objects(&self) -> &[SchemaObject] {
        &self.objects
    }

    pub fn morphisms(&self) -> &[Morphism] {
        &self.morphisms
    }

    pub fn composites(&self) -> impl Iterator<Item = CompositeEntry> + '_ {
        self.composites.iter().map(|((outer, inner), result)| CompositeEntry {
            outer: outer.clone(),
            inner: inner.clone(),
            result: result.clone(),
        })
    }

    pub fn into_parts(self) -> (Vec<SchemaObject>, Vec<Morphism>, Vec<CompositeEntry>) {
        let composites = self.composites().collect();
        (self.objects, self.morphisms, composites)
    }

    pub fn object(&self, id: &str) -> Option<&SchemaObject> {
        self.object_index.get(id).map(|&i| &self.objects[i])
    }

    pub fn morphism(&self, id: &str) -> Option<&Morphism> {
        self.morphism_index.get(id).map(|&i| &self.morphisms[i])
    }

    pub fn composite(&self, outer: &str, inner: &str) -> Option<&str> {
        self.composites
            .get(&(outer.to_string(), inner.to_string()))
            .map(String::as_str)
    }

    /// Whether `id` is the registered result of a non-identity composition.
    pub fn is_composite(&self, id: &str) -> bool {
        self.composites.iter().any(|((outer, inner), result)| {
            result == id && outer != id && inner != id
        })
    }

    /// Entries `(outer, inner) -> result` where neither side is an identity.
    pub fn proper_composites(&self) -> impl Iterator<Item = CompositeEntry> + '_ {
        self.composites().filter(|e| {
            let is_id = |m: &str| self.morphism(m).map_or(false, Morphism::is_identity);
            !is_id(&e.outer) && !is_id(&e.inner)
        })
    }

    /// Non-identity morphisms out of `object` whose codomain is primitive, in
    /// declaration order, excluding registered composites.
    pub fn attributes_of(&self, object: &str) -> Vec<&Morphism> {
        self.morphisms
            .iter()
            .filter(|m| {
                m.domain == object
                    && !m.is_identity()
                    && m.cardinality == Cardinality::One
                    && self
                        .object(&m.codomain)
                        .map_or(false, |o| o.kind == ObjectKind::Primitive)
                    && !self.is_composite(&m.id)
            })
            .collect()
    }
}

/// Looks up `g . f`, checking that `f`'s codomain is `g`'s domain.
pub fn compose<'c>(
    g: &Morphism,
    f: &Morphism,
    cat: &'c SchemaCategory,
) -> Result<&'c Morphism, CategoryError> {
    if f.codomain != g.domain {
        return Err(CategoryError::TypeMismatch {
            outer: g.id.clone(),
            inner: f.id.clone(),
            index: None,
        });
    }
    let missing = || CategoryError::MissingComposite {
        outer: g.id.clone(),
        inner: f.id.clone(),
    };
    let result = cat.composite(&g.id, &f.id).ok_or_else(missing)?;
    cat.morphism(result)
        .ok_or_else(|| CategoryError::UnknownMorphism(result.to_string()))
}

/// Composes a path given in diagrammatic order: `[orderedBy, located]` is
/// `located . orderedBy`.
pub fn compose_path<'c, S: AsRef<str>>(
    path: &[S],
    cat: &'c SchemaCategory,
) -> Result<&'c Morphism, CategoryError> {
    let lookup = |id: &str| {
        cat.morphism(id)
            .ok_or_else(|| CategoryError::UnknownMorphism(id.to_string()))
    };
    let (first, rest) = path.split_first().ok_or(CategoryError::EmptyPath)?;
    let mut acc = lookup(first.as_ref())?;
    for (i, next) in rest.iter().enumerate() {
        let next = lookup(next.as_ref())?;
        acc = compose(next, acc, cat).map_err(|e| match e {
            CategoryError::TypeMismatch { outer, inner, .. } => CategoryError::TypeMismatch {
                outer,
                inner,
                index: Some(i),
            },
            other => other,
        })?;
    }
    Ok(acc)
}

/// Reports every violated identity, closure and associativity instance.
pub fn check_category_laws(cat: &SchemaCategory) -> LawReport {
    let mut report = LawReport::default();

    for o in cat.objects() {
        let id = identity_id(&o.id);
        if !cat.morphism(&id).map_or(false, Morphism::is_identity) {
            report.push(LawViolation::MissingIdentity {
                object: o.id.clone(),
            });
        }
    }

    for f in cat.morphisms() {
        let pre = identity_id(&f.domain);
        let post = identity_id(&f.codomain);
        if cat.morphism(&pre).is_some() {
            let found = cat.composite(&f.id, &pre);
            if found != Some(f.id.as_str()) {
                report.push(LawViolation::IdentityLaw {
                    morphism: f.id.clone(),
                    identity: pre.clone(),
                    found: found.map(str::to_string),
                });
            }
        }
        // For an identity both checks are the same entry.
        if !f.is_identity() && cat.morphism(&post).is_some() {
            let found = cat.composite(&post, &f.id);
            if found != Some(f.id.as_str()) {
                report.push(LawViolation::IdentityLaw {
                    morphism: f.id.clone(),
                    identity: post,
                    found: found.map(str::to_string),
                });
            }
        }
    }

    for f in cat.morphisms().iter().filter(|m| m.composable && !m.is_identity()) {
        for g in cat.morphisms().iter().filter(|m| m.composable && !m.is_identity()) {
            if f.codomain == g.domain && cat.composite(&g.id, &f.id).is_none() {
                report.push(LawViolation::MissingComposite {
                    outer: g.id.clone(),
                    inner: f.id.clone(),
                });
            }
        }
    }

    for entry in cat.composites() {
        let resolved: Vec<_> = [&entry.outer, &entry.inner, &entry.result]
            .into_iter()
            .map(|name| (name, cat.morphism(name)))
            .collect();
        if let Some((name, _)) = resolved.iter().find(|(_, m)| m.is_none()) {
            report.push(LawViolation::UnknownMorphism {
                outer: entry.outer.clone(),
                inner: entry.inner.clone(),
                name: (*name).clone(),
            });
            continue;
        }
        let (g, f, h) = (
            resolved[0].1.unwrap(),
            resolved[1].1.unwrap(),
            resolved[2].1.unwrap(),
        );
        if f.codomain != g.domain {
            report.push(LawViolation::IllTypedEntry {
                outer: entry.outer.clone(),
                inner: entry.inner.clone(),
            });
            continue;
        }
        let reason = if h.domain != f.domain || h.codomain != g.codomain {
            Some(format!(
                "{} : {} -> {}, expected {} -> {}",
                h.id, h.domain, h.codomain, f.domain, g.codomain
            ))
        } else if h.cardinality != f.cardinality.then(g.cardinality) {
            Some(format!("{} has cardinality {:?}", h.id, h.cardinality))
        } else {
            None
        };
        if let Some(reason) = reason {
            report.push(LawViolation::CompositeSignature {
                outer: entry.outer,
                inner: entry.inner,
                result: entry.result,
                reason,
            });
        }
    }

    // h . (g . f) = (h . g) . f over every pair of entries sharing g.
    for ((g, f), gf) in &cat.composites {
        for ((h, g2), hg) in &cat.composites {
            if g2 != g {
                continue;
            }
            let left = cat.composite(h, gf);
            let right = cat.composite(hg, f);
            if let (Some(left), Some(right)) = (left, right) {
                if left != right {
                    report.push(LawViolation::Associativity {
                        outer: h.clone(),
                        middle: g.clone(),
                        inner: f.clone(),
                        left: left.to_string(),
                        right: right.to_string(),
                    });
                }
            }
        }
    }

    report
}
