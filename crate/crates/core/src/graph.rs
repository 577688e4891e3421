//! Algebraic graphs: terms over `Empty`, `Vertex`, `Overlay` and `Connect`.
//!
//! A term means a directed graph. `Overlay` unions vertices and edges,
//! `Connect` additionally adds an edge from every left vertex to every right
//! vertex. All queries over a term go through [`GraphTerm::foldg`].

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GraphTerm {
    Empty,
    Vertex(String),
    Overlay(Box<GraphTerm>, Box<GraphTerm>),
    Connect(Box<GraphTerm>, Box<GraphTerm>),
}

/// Vertex and edge sets of a term.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphSemantics {
    pub vertices: BTreeSet<String>,
    pub edges: BTreeSet<(String, String)>,
}

impl GraphTerm {
    pub fn vertex(id: impl Into<String>) -> Self {
        GraphTerm::Vertex(id.into())
    }

    pub fn overlay(left: GraphTerm, right: GraphTerm) -> Self {
        GraphTerm::Overlay(Box::new(left), Box::new(right))
    }

    pub fn connect(left: GraphTerm, right: GraphTerm) -> Self {
        GraphTerm::Connect(Box::new(left), Box::new(right))
    }

    pub fn edge(src: impl Into<String>, dst: impl Into<String>) -> Self {
        GraphTerm::connect(GraphTerm::vertex(src), GraphTerm::vertex(dst))
    }

    /// Left-nested overlay of `terms`; `Empty` when there are none.
    pub fn overlays(terms: impl IntoIterator<Item = GraphTerm>) -> Self {
        terms
            .into_iter()
            .reduce(GraphTerm::overlay)
            .unwrap_or(GraphTerm::Empty)
    }

    /// Overlay of all vertices, overlaid with one `connect` per edge. Used both
    /// for loading graph files and as the canonical rendering of a graph.
    pub fn from_parts<V, E>(vertices: V, edges: E) -> Self
    where
        V: IntoIterator<Item = String>,
        E: IntoIterator<Item = (String, String)>,
    {
        let vertices = GraphTerm::overlays(vertices.into_iter().map(GraphTerm::Vertex));
        let edges = GraphTerm::overlays(edges.into_iter().map(|(s, d)| GraphTerm::edge(s, d)));
        match (vertices, edges) {
            (GraphTerm::Empty, e) => e,
            (v, GraphTerm::Empty) => v,
            (v, e) => GraphTerm::overlay(v, e),
        }
    }

    /// Canonical term for a vertex/edge set: vertices and edges ascending.
    pub fn canonical(sem: &GraphSemantics) -> Self {
        GraphTerm::from_parts(sem.vertices.iter().cloned(), sem.edges.iter().cloned())
    }

    /// Structural recursion replacing each constructor with the given algebra.
    pub fn foldg<B>(
        &self,
        on_empty: &impl Fn() -> B,
        on_vertex: &impl Fn(&str) -> B,
        on_overlay: &impl Fn(B, B) -> B,
        on_connect: &impl Fn(B, B) -> B,
    ) -> B {
        match self {
            GraphTerm::Empty => on_empty(),
            GraphTerm::Vertex(v) => on_vertex(v),
            GraphTerm::Overlay(l, r) => {
                let l = l.foldg(on_empty, on_vertex, on_overlay, on_connect);
                let r = r.foldg(on_empty, on_vertex, on_overlay, on_connect);
                on_overlay(l, r)
            }
            GraphTerm::Connect(l, r) => {
                let l = l.foldg(on_empty, on_vertex, on_overlay, on_connect);
                let r = r.foldg(on_empty, on_vertex, on_overlay, on_connect);
                on_connect(l, r)
            }
        }
    }

    pub fn semantics(&self) -> GraphSemantics {
        self.foldg(
            &GraphSemantics::default,
            &|v| GraphSemantics {
                vertices: BTreeSet::from([v.to_string()]),
                edges: BTreeSet::new(),
            },
            &|mut l, r| {
                l.vertices.extend(r.vertices);
                l.edges.extend(r.edges);
                l
            },
            &|mut l, r| {
                for a in &l.vertices {
                    for b in &r.vertices {
                        l.edges.insert((a.clone(), b.clone()));
                    }
                }
                l.vertices.extend(r.vertices);
                l.edges.extend(r.edges);
                l
            },
        )
    }

    /// Vertex ids in ascending order.
    pub fn vertex_list(&self) -> Vec<String> {
        self.foldg(
            &BTreeSet::new,
            &|v| BTreeSet::from([v.to_string()]),
            &|mut l, r| {
                l.extend(r);
                l
            },
            &|mut l, r| {
                l.extend(r);
                l
            },
        )
        .into_iter()
        .collect()
    }

    pub fn size(&self) -> usize {
        self.foldg(&|| 1, &|_| 1, &|l, r| l + r + 1, &|l, r| l + r + 1)
    }

    /// Keeps the vertices in `keep` and the edges between them.
    pub fn induced_subgraph(&self, keep: &BTreeSet<String>) -> GraphTerm {
        self.foldg(
            &|| GraphTerm::Empty,
            &|v| {
                if keep.contains(v) {
                    GraphTerm::vertex(v)
                } else {
                    GraphTerm::Empty
                }
            },
            &|l, r| match (l, r) {
                (GraphTerm::Empty, x) | (x, GraphTerm::Empty) => x,
                (l, r) => GraphTerm::overlay(l, r),
            },
            &|l, r| match (l, r) {
                (GraphTerm::Empty, x) | (x, GraphTerm::Empty) => x,
                (l, r) => GraphTerm::connect(l, r),
            },
        )
    }

    /// Textual term syntax: `empty`, `vertex <id>`, `overlay(a, b)`, `connect(a, b)`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse_text(text: &str) -> Result<GraphTerm, TermParseError> {
        let mut p = TermParser { text, pos: 0 };
        let term = p.term()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.error("end of input"));
        }
        Ok(term)
    }
}

impl fmt::Display for GraphTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphTerm::Empty => f.write_str("empty"),
            GraphTerm::Vertex(v) => write!(f, "vertex {v}"),
            GraphTerm::Overlay(l, r) => write!(f, "overlay({l}, {r})"),
            GraphTerm::Connect(l, r) => write!(f, "connect({l}, {r})"),
        }
    }
}

/// Semantic equality: same vertex and edge sets.
pub fn graph_eq(a: &GraphTerm, b: &GraphTerm) -> bool {
    a.semantics() == b.semantics()
}

impl GraphSemantics {
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph {\n");
        for v in &self.vertices {
            out.push_str(&format!("  {};\n", dot_id(v)));
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("  {} -> {};\n", dot_id(a), dot_id(b)));
        }
        out.push('}');
        out
    }
}

pub(crate) fn dot_id(id: &str) -> String {
    if !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        id.to_string()
    } else {
        format!("\"{}\"", id.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("graph term: expected {expected} at byte {offset}")]
pub struct TermParseError {
    pub expected: String,
    pub offset: usize,
}

struct TermParser<'a> {
    text: &'a str,
    pos: usize,
}

impl TermParser<'_> {
    fn error(&self, expected: &str) -> TermParseError {
        TermParseError {
            expected: expected.to_string(),
            offset: self.pos,
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, TermParseError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .find(|c: char| c.is_whitespace() || c == ',' || c == '(' || c == ')')
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error("vertex id"));
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn term(&mut self) -> Result<GraphTerm, TermParseError> {
        if self.eat("empty") {
            return Ok(GraphTerm::Empty);
        }
        if self.eat("vertex") {
            return Ok(GraphTerm::Vertex(self.ident()?));
        }
        let connect = if self.eat("overlay") {
            false
        } else if self.eat("connect") {
            true
        } else {
            return Err(self.error("empty, vertex, overlay or connect"));
        };
        if !self.eat("(") {
            return Err(self.error("("));
        }
        let l = self.term()?;
        if !self.eat(",") {
            return Err(self.error(","));
        }
        let r = self.term()?;
        if !self.eat(")") {
            return Err(self.error(")"));
        }
        Ok(if connect {
            GraphTerm::connect(l, r)
        } else {
            GraphTerm::overlay(l, r)
        })
    }
}
