use std::fmt;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use crate::category::PrimitiveType;
use crate::graph::{graph_eq, GraphTerm};

/// Runtime values of the query language.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Double(f64),
    Str(String),
    Bool(bool),
    /// Reference to an entity by its collection-namespaced id.
    Entity(String),
    Tuple(Vec<Value>),
    List(Vec<Value>),
    Graph(GraphTerm),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        use Value::*;
        match (self, other) {
            (Int(a), Int(b)) => a == b,
            (Double(a), Double(b)) => a == b,
            (Str(a), Str(b)) => a == b,
            (Bool(a), Bool(b)) => a == b,
            (Entity(a), Entity(b)) => a == b,
            (Tuple(a), Tuple(b)) | (List(a), List(b)) => a == b,
            (Graph(a), Graph(b)) => graph_eq(a, b),
            _ => false,
        }
    }
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    pub fn entity(id: impl Into<String>) -> Self {
        Value::Entity(id.into())
    }

    pub fn entities<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Value::List(ids.into_iter().map(|s| Value::Entity(s.into())).collect())
    }

    pub fn as_entity(&self) -> Option<&str> {
        match self {
            Value::Entity(id) => Some(id),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(xs) => Some(xs),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Parses primitive text as found in CSV cells and XML text nodes.
    pub fn parse_primitive(text: &str, ty: PrimitiveType) -> Result<Value, String> {
        let t = text.trim();
        match ty {
            PrimitiveType::String => Ok(Value::Str(text.to_string())),
            PrimitiveType::Int => t
                .parse()
                .map(Value::Int)
                .map_err(|_| format!("`{text}` is not an int")),
            PrimitiveType::Double => t
                .parse()
                .map(Value::Double)
                .map_err(|_| format!("`{text}` is not a double")),
            PrimitiveType::Bool => match t {
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                _ => Err(format!("`{text}` is not a bool")),
            },
        }
    }

    pub fn has_primitive_type(&self, ty: PrimitiveType) -> bool {
        matches!(
            (self, ty),
            (Value::Int(_), PrimitiveType::Int)
                | (Value::Double(_), PrimitiveType::Double)
                | (Value::Str(_), PrimitiveType::String)
                | (Value::Bool(_), PrimitiveType::Bool)
        )
    }
}

/// Doubles always carry a decimal point so they stay distinguishable from ints.
pub fn format_double(d: f64) -> String {
    let s = d.to_string();
    if d.is_finite() && !s.contains('.') {
        format!("{s}.0")
    } else {
        s
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Double(d) => f.write_str(&format_double(*d)),
            Value::Str(s) => f.write_str(s),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Entity(id) => f.write_str(id),
            Value::Tuple(xs) => {
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
            Value::List(xs) => {
                f.write_str("[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
            Value::Graph(g) => write!(f, "{g}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(i) => serializer.serialize_i64(*i),
            Value::Double(d) => serializer.serialize_f64(*d),
            Value::Str(s) => serializer.serialize_str(s),
            Value::Bool(b) => serializer.serialize_bool(*b),
            Value::Entity(id) => {
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry("entity", id)?;
                map.end()
            }
            Value::Tuple(xs) | Value::List(xs) => {
                let mut seq = serializer.serialize_seq(Some(xs.len()))?;
                for x in xs {
                    seq.serialize_element(x)?;
                }
                seq.end()
            }
            Value::Graph(g) => {
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry("graph", &g.to_text())?;
                map.end()
            }
        }
    }
}
