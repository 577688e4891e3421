//! Renders query results into each output model.
//!
//! The same result can be shown as a relational table, an XML tree, a graph
//! view or an algebraic-graph term. Entity elements expand into their id and
//! attribute values; tuple components become `col1..colN`.

use std::collections::BTreeSet;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::{dot_id, GraphSemantics, GraphTerm};
use crate::query::{OutputModel, QueryType};
use crate::store::{DataModel, InstanceStore};
use crate::value::{format_double, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot render as {model}: {reason}")]
pub struct Unrenderable {
    pub model: String,
    pub reason: String,
}

fn unrenderable(model: &str, reason: impl Into<String>) -> Unrenderable {
    Unrenderable {
        model: model.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// RFC 4180 CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// Aligned plain-text table for terminals.
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join(" | ").trim_end().to_string()
        };
        let mut out = vec![line(&self.columns)];
        out.push(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
        out.extend(self.rows.iter().map(|r| line(r)));
        out.join("\n") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewVertex {
    pub id: String,
    /// Property name and value, in schema declaration order.
    pub props: Vec<(String, String)>,
}

impl Serialize for ViewVertex {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Props<'a>(&'a [(String, String)]);
        impl Serialize for Props<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for (k, v) in self.0 {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("id", &self.id)?;
        map.serialize_entry("props", &Props(&self.props))?;
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct GraphView {
    pub vertices: Vec<ViewVertex>,
    pub edges: Vec<(String, String)>,
}

impl GraphView {
    pub fn semantics(&self) -> GraphSemantics {
        GraphSemantics {
            vertices: self.vertices.iter().map(|v| v.id.clone()).collect(),
            edges: self.edges.iter().cloned().collect(),
        }
    }

    /// Canonical algebraic term: all vertices ascending, then all edges.
    pub fn term(&self) -> GraphTerm {
        GraphTerm::canonical(&self.semantics())
    }

    /// Graphviz text; vertex properties become node attributes.
    pub fn to_dot(&self) -> String {
        let quote = |s: &str| format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""));
        let mut out = String::from("digraph {\n");
        for v in &self.vertices {
            out.push_str("  ");
            out.push_str(&dot_id(&v.id));
            if !v.props.is_empty() {
                let attrs: Vec<String> = v.props.iter().map(|(k, val)| format!("{}={}", quote(k), quote(val))).collect();
                out.push_str(&format!(" [{}]", attrs.join(", ")));
            }
            out.push_str(";\n");
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("  {} -> {};\n", dot_id(a), dot_id(b)));
        }
        out.push('}');
        out
    }
}

/// One rendering of a result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rendered {
    Table(Table),
    Xml(String),
    Graph(GraphView),
    Term(String),
}

pub fn render(
    model: OutputModel,
    v: &Value,
    elem: &QueryType,
    store: &InstanceStore,
) -> Result<Rendered, Unrenderable> {
    Ok(match model {
        OutputModel::Relational => Rendered::Table(render_relational(v, elem, store)?),
        OutputModel::Xml => Rendered::Xml(render_xml(v, elem, store)?),
        OutputModel::Graph => Rendered::Graph(render_graph(v, elem, store)?),
        OutputModel::AlgebraicGraph => Rendered::Term(render_graph_term(v, elem, store)?),
    })
}

/// Cell text: ints without a decimal point, doubles with one, bools lowercase.
pub fn cell(v: &Value) -> String {
    match v {
        Value::Double(d) => format_double(*d),
        other => other.to_string(),
    }
}

fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Column name of an entity's id, e.g. `customerId` for `Customer`.
pub fn id_column(object: &str) -> String {
    format!("{}Id", lower_first(object))
}

fn items<'v>(v: &'v Value, model: &str) -> Result<&'v [Value], Unrenderable> {
    v.as_list().ok_or_else(|| unrenderable(model, "result is not a list"))
}

/// Attribute names and values of an entity.
fn attributes(store: &InstanceStore, object: &str, id: &str) -> Vec<(String, String)> {
    store
        .schema()
        .attributes_of(object)
        .into_iter()
        .map(|m| {
            let value = store.apply_morphism(&m.id, id).map(|v| cell(&v)).unwrap_or_default();
            (m.id.clone(), value)
        })
        .collect()
}

fn check_scalar(t: &QueryType, model: &str) -> Result<(), Unrenderable> {
    match t {
        QueryType::Prim(_) | QueryType::Entity(_) => Ok(()),
        other => Err(unrenderable(model, format!("element component of type {other} is not a primitive or entity"))),
    }
}

/// Element type split into components: a tuple's items, or the element itself.
fn components<'t>(elem: &'t QueryType, model: &str) -> Result<Vec<&'t QueryType>, Unrenderable> {
    let parts: Vec<&QueryType> = match elem {
        QueryType::Tuple(items) => items.iter().collect(),
        QueryType::Entity(_) | QueryType::Prim(_) => vec![elem],
        other => return Err(unrenderable(model, format!("elements of type {other}"))),
    };
    for p in &parts {
        check_scalar(p, model)?;
    }
    Ok(parts)
}

fn parts_of(v: &Value) -> Vec<&Value> {
    match v {
        Value::Tuple(items) => items.iter().collect(),
        other => vec![other],
    }
}

pub fn render_relational(v: &Value, elem: &QueryType, store: &InstanceStore) -> Result<Table, Unrenderable> {
    let model = "relational";
    let rows_in = items(v, model)?;
    let comps = components(elem, model)?;
    let is_tuple = matches!(elem, QueryType::Tuple(_));
    let mut columns = Vec::new();
    for (i, t) in comps.iter().enumerate() {
        let base = format!("col{}", i + 1);
        match t {
            QueryType::Entity(obj) if !is_tuple => {
                columns.push(id_column(obj));
                columns.extend(store.schema().attributes_of(obj).iter().map(|m| m.id.clone()));
            }
            QueryType::Entity(obj) => {
                let attrs: Vec<String> = store.schema().attributes_of(obj).iter().map(|m| format!("{base}.{}", m.id)).collect();
                columns.push(base);
                columns.extend(attrs);
            }
            _ => columns.push(base),
        }
    }
    let mut rows = Vec::with_capacity(rows_in.len());
    for item in rows_in {
        let mut row = Vec::with_capacity(columns.len());
        for (part, t) in parts_of(item).into_iter().zip(&comps) {
            match (part, t) {
                (Value::Entity(id), QueryType::Entity(obj)) => {
                    row.push(id.clone());
                    row.extend(attributes(store, obj, id).into_iter().map(|(_, v)| v));
                }
                (other, _) => row.push(cell(other)),
            }
        }
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn leaf(out: &mut String, depth: usize, name: &str, text: &str) {
    let pad = "  ".repeat(depth);
    if text.is_empty() {
        out.push_str(&format!("{pad}<{name}/>\n"));
    } else {
        out.push_str(&format!("{pad}<{name}>{}</{name}>\n", escape(text)));
    }
}

fn entity_fields(out: &mut String, depth: usize, store: &InstanceStore, obj: &str, id: &str) {
    leaf(out, depth, &id_column(obj), id);
    for (name, value) in attributes(store, obj, id) {
        leaf(out, depth, &name, &value);
    }
}

/// XML document with a `<result>` root and one `<item>` per element.
pub fn render_xml(v: &Value, elem: &QueryType, store: &InstanceStore) -> Result<String, Unrenderable> {
    let model = "xml";
    let list = items(v, model)?;
    let comps = components(elem, model)?;
    if list.is_empty() {
        return Ok("<result/>\n".to_string());
    }
    let is_tuple = matches!(elem, QueryType::Tuple(_));
    let mut out = String::from("<result>\n");
    for item in list {
        out.push_str("  <item>\n");
        for (i, (part, t)) in parts_of(item).into_iter().zip(&comps).enumerate() {
            let col = format!("col{}", i + 1);
            match (part, t) {
                (Value::Entity(id), QueryType::Entity(obj)) if !is_tuple => entity_fields(&mut out, 2, store, obj, id),
                (Value::Entity(id), QueryType::Entity(obj)) => {
                    out.push_str(&format!("    <{col}>\n"));
                    entity_fields(&mut out, 3, store, obj, id);
                    out.push_str(&format!("    </{col}>\n"));
                }
                (other, _) => leaf(&mut out, 2, &col, &cell(other)),
            }
        }
        out.push_str("  </item>\n");
    }
    out.push_str("</result>\n");
    Ok(out)
}

/// Graph view of a result. Entities from a graph collection keep the edges
/// between them (induced subgraph); other entities form a discrete graph.
/// Tuples led by an entity attach the remaining components as `colI` props;
/// other elements get synthetic ids `n1..nN`.
pub fn render_graph(v: &Value, elem: &QueryType, store: &InstanceStore) -> Result<GraphView, Unrenderable> {
    let model = "graph";
    let list = items(v, model)?;
    let comps = components(elem, model)?;
    let lead = match comps.first() {
        Some(QueryType::Entity(obj)) => Some(obj.as_str()),
        _ => None,
    };
    let mut view = GraphView::default();
    let mut seen = BTreeSet::new();
    for (n, item) in list.iter().enumerate() {
        let parts = parts_of(item);
        let (id, mut props, rest_from) = match (lead, parts.first()) {
            (Some(obj), Some(Value::Entity(id))) => (id.clone(), attributes(store, obj, id), 1),
            _ => (format!("n{}", n + 1), Vec::new(), 0),
        };
        for (i, part) in parts.iter().enumerate().skip(rest_from) {
            props.push((format!("col{}", i + 1), cell(part)));
        }
        if seen.insert(id.clone()) {
            view.vertices.push(ViewVertex { id, props });
        }
    }
    if let Some(obj) = lead {
        if let Some(g) = store
            .collection_for_object(obj)
            .filter(|c| c.model == DataModel::Graph)
            .and_then(|c| c.graph())
        {
            view.edges = g.induced_subgraph(&seen).semantics().edges.into_iter().collect();
        }
    }
    Ok(view)
}

pub fn render_graph_term(v: &Value, elem: &QueryType, store: &InstanceStore) -> Result<String, Unrenderable> {
    Ok(render_graph(v, elem, store)?.term().to_text())
}
