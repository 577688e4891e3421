//! End-to-end query handling shared by the CLI and the HTTP service.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use crate::eval::{compile, run_plan, FoldPlan, RuntimeError};
use crate::query::{parse, typecheck, OutputModel, QueryAst, QueryError, QueryType, Source, Span, TExpr, TExprKind, TypedQuery, VarKind};
use crate::render::{render_graph, render_relational, render_xml, GraphView, Table, Unrenderable};
use crate::store::{load_dataset, DataModel, InstanceStore, StoreError};
use crate::value::Value;

/// A located problem with a query, reported to the user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: String,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl Diagnostic {
    fn at(kind: &str, message: String, span: Span) -> Self {
        Diagnostic {
            kind: kind.to_string(),
            message,
            line: span.line.max(1),
            column: span.column.max(1),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.column, self.kind, self.message)
    }
}

impl From<&QueryError> for Diagnostic {
    fn from(e: &QueryError) -> Self {
        Diagnostic::at(e.kind(), e.to_string(), e.span())
    }
}

impl From<&RuntimeError> for Diagnostic {
    fn from(e: &RuntimeError) -> Self {
        Diagnostic::at(e.kind(), e.to_string(), e.span())
    }
}

/// Static type of every collection name: graph collections are graphs of
/// their element entity, everything else a list.
pub fn source_types(store: &InstanceStore) -> BTreeMap<String, QueryType> {
    store
        .collections()
        .map(|c| {
            let elem = Box::new(QueryType::Entity(c.element_object.clone()));
            let ty = if c.model == DataModel::Graph {
                QueryType::Graph(elem)
            } else {
                QueryType::List(elem)
            };
            (c.name.clone(), ty)
        })
        .collect()
}

/// Parses and typechecks.
pub fn check_query(text: &str, store: &InstanceStore) -> Result<(QueryAst, TypedQuery), QueryError> {
    let ast = parse(text)?;
    let typed = typecheck(&ast, store.schema(), &source_types(store))?;
    Ok((ast, typed))
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub ast: QueryAst,
    pub typed: TypedQuery,
    pub plan: FoldPlan,
    pub value: Value,
    /// Element type of the result list.
    pub element_type: QueryType,
    /// Model named first in the final TO clause.
    pub model: OutputModel,
}

pub fn run_query(text: &str, store: &InstanceStore) -> Result<Outcome, Diagnostic> {
    let (ast, typed) = check_query(text, store).map_err(|e| Diagnostic::from(&e))?;
    let plan = compile(&typed);
    let value = run_plan(&plan, store).map_err(|e| Diagnostic::from(&e))?;
    let block = typed.result_block();
    Ok(Outcome {
        element_type: block.result_type.element().expect("list result").clone(),
        model: block.model,
        ast,
        typed,
        plan,
        value,
    })
}

/// All renderings of one result. A payload is absent when the result's
/// shape cannot be shown in that model; the reason is kept in `errors`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedAll {
    pub model: OutputModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xml: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub term: Option<String>,
    #[serde(skip)]
    pub errors: Vec<Unrenderable>,
}

impl RenderedAll {
    /// Error for the model requested by the TO clause, if it failed.
    pub fn primary_error(&self) -> Option<&Unrenderable> {
        let name = match self.model {
            OutputModel::Relational => "relational",
            OutputModel::Xml => "xml",
            OutputModel::Graph | OutputModel::AlgebraicGraph => "graph",
        };
        self.errors.iter().find(|e| e.model == name)
    }
}

pub fn render_all(outcome: &Outcome, store: &InstanceStore) -> RenderedAll {
    let (v, t) = (&outcome.value, &outcome.element_type);
    let mut errors = Vec::new();
    fn keep<T>(r: Result<T, Unrenderable>, errors: &mut Vec<Unrenderable>) -> Option<T> {
        r.map_err(|e| errors.push(e)).ok()
    }
    let table = keep(render_relational(v, t, store), &mut errors);
    let xml = keep(render_xml(v, t, store), &mut errors);
    let graph = keep(render_graph(v, t, store), &mut errors);
    RenderedAll {
        model: outcome.model,
        csv: table.as_ref().map(Table::to_csv),
        term: graph.as_ref().map(|g| g.term().to_text()),
        table,
        xml,
        graph,
        errors,
    }
}

/// Data models of every collection a query reads: FROM sources, collection
/// names used as values, and codomain annotations.
pub fn source_models(q: &TypedQuery, store: &InstanceStore) -> BTreeSet<DataModel> {
    let mut names = BTreeSet::new();
    collect_sources(q, &mut names);
    names
        .iter()
        .filter_map(|n| store.collection(n))
        .map(|c| c.model)
        .collect()
}

fn collect_sources(q: &TypedQuery, out: &mut BTreeSet<String>) {
    use crate::query::{Combiner, Contribution};
    fn contribution(c: &Contribution, out: &mut BTreeSet<String>) {
        match c {
            Contribution::Emit(e) => expr(e, out),
            Contribution::Keep => {}
            Contribution::Branch { cond, then, otherwise } => {
                expr(cond, out);
                contribution(then, out);
                contribution(otherwise, out);
            }
        }
    }
    fn expr(e: &TExpr, out: &mut BTreeSet<String>) {
        match &e.kind {
            TExprKind::Var(n, VarKind::Collection) => {
                out.insert(n.clone());
            }
            TExprKind::If(a, b, c) => [a, b, c].into_iter().for_each(|x| expr(x, out)),
            TExprKind::Tuple(xs) | TExprKind::Builtin(_, xs) => xs.iter().for_each(|x| expr(x, out)),
            TExprKind::BinOp(_, l, r) | TExprKind::Cons(l, r) => {
                expr(l, out);
                expr(r, out);
            }
            TExprKind::Apply { arg, annotation, .. } => {
                expr(arg, out);
                out.extend(annotation.clone());
            }
            TExprKind::Lambda(_, body) => expr(body, out),
            _ => {}
        }
    }
    match q {
        TypedQuery::Let { bound, body, .. } => {
            collect_sources(bound, out);
            collect_sources(body, out);
        }
        TypedQuery::Block(b) => {
            if let Source::Collection(c) = &b.source {
                out.insert(c.clone());
            }
            match &b.combiner {
                Combiner::Unary { body, .. } => contribution(body, out),
                Combiner::Binary { body, .. } => expr(body, out),
            }
        }
    }
}

/// Loads every dataset package (a directory with a `manifest.json`) under
/// `root`, keyed and ordered by directory name.
pub fn load_root(root: &Path) -> Result<BTreeMap<String, InstanceStore>, StoreError> {
    let io = |e: std::io::Error| StoreError::Io {
        path: root.display().to_string(),
        message: e.to_string(),
    };
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(root).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.join("manifest.json").is_file() {
            let id = path.file_name().expect("directory entry").to_string_lossy().into_owned();
            out.insert(id, load_dataset(&path)?);
        }
    }
    Ok(out)
}
