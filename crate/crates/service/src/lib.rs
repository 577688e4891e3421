//! HTTP facade over a registry of loaded datasets.
//!
//! Endpoints:
//!
//! - `GET  /datasets`
//! - `GET  /datasets/{id}/schema`
//! - `GET  /datasets/{id}/examples`
//! - `POST /datasets/{id}/query` with body `{"query": "..."}`
//!
//! Query failures are reported in the response body (`status: "error"` plus
//! located diagnostics), not as HTTP errors. Unknown datasets give 404 and
//! unreadable bodies 400.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use multicat_core::category::{check_category_laws, Cardinality, ObjectKind};
use multicat_core::pipeline::{load_root, render_all, run_query, Diagnostic, RenderedAll};
use multicat_core::query::{parse, OutputModel};
use multicat_core::store::{DataModel, InstanceStore, StoreError};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tower_http::cors::CorsLayer;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error(transparent)]
    Load(#[from] StoreError),
    #[error("dataset `{id}` violates the category or functor laws:\n{report}")]
    Unlawful { id: String, report: String },
}

/// Immutable map from dataset id to store.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    stores: Arc<BTreeMap<String, InstanceStore>>,
}

impl Registry {
    /// Loads every package under `root`. Packages that break the laws are
    /// rejected rather than served.
    pub fn load(root: &Path) -> Result<Self, RegistryError> {
        let stores = load_root(root)?;
        for (id, store) in &stores {
            let mut report = check_category_laws(store.schema());
            report.extend(store.check_functor_laws());
            if !report.is_empty() {
                return Err(RegistryError::Unlawful {
                    id: id.clone(),
                    report: report.to_string(),
                });
            }
        }
        Ok(Registry::from_stores(stores))
    }

    pub fn from_stores(stores: BTreeMap<String, InstanceStore>) -> Self {
        Registry {
            stores: Arc::new(stores),
        }
    }

    pub fn get(&self, id: &str) -> Option<&InstanceStore> {
        self.stores.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.stores.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub host: String,
    pub port: u16,
    pub data: PathBuf,
    /// Origin allowed to call the API from a browser.
    pub cors: Option<String>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            data: PathBuf::from("datasets"),
            cors: None,
        }
    }
}

pub fn router(registry: Registry, cors: Option<&str>) -> Result<Router, String> {
    let app = Router::new()
        .route("/datasets", get(list_datasets))
        .route("/datasets/{id}/schema", get(schema))
        .route("/datasets/{id}/examples", get(examples))
        .route("/datasets/{id}/query", post(query))
        .with_state(registry);
    Ok(match cors {
        None => app,
        Some(origin) => {
            let origin: HeaderValue = origin.parse().map_err(|_| format!("invalid CORS origin `{origin}`"))?;
            app.layer(
                CorsLayer::new()
                    .allow_origin(origin)
                    .allow_methods([Method::GET, Method::POST])
                    .allow_headers([header::CONTENT_TYPE]),
            )
        }
    })
}

/// Loads the registry and serves until the process is stopped.
pub async fn serve(config: ServeConfig) -> Result<(), Box<dyn std::error::Error>> {
    let registry = Registry::load(&config.data)?;
    let app = router(registry, config.cors.as_deref())?;
    let addr: SocketAddr = format!("{}:{}", config.host, config.port).parse()?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}

fn error(status: StatusCode, message: String) -> Response {
    (status, Json(json!({ "error": message }))).into_response()
}

fn unknown_dataset(id: &str) -> Response {
    error(StatusCode::NOT_FOUND, format!("unknown dataset `{id}`"))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DatasetSummary<'a> {
    id: &'a str,
    name: &'a str,
    collection_count: usize,
    models: Vec<DataModel>,
}

async fn list_datasets(State(reg): State<Registry>) -> Response {
    let list: Vec<DatasetSummary> = reg
        .stores
        .iter()
        .map(|(id, s)| DatasetSummary {
            id,
            name: s.name(),
            collection_count: s.collections().count(),
            models: s.models(),
        })
        .collect();
    Json(list).into_response()
}

#[derive(Serialize)]
struct ObjectJson<'a> {
    id: &'a str,
    kind: ObjectKind,
}

#[derive(Serialize)]
struct MorphismJson<'a> {
    id: &'a str,
    domain: &'a str,
    codomain: &'a str,
    cardinality: Cardinality,
}

async fn schema(State(reg): State<Registry>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(store) = reg.get(&id) else {
        return unknown_dataset(&id);
    };
    let schema = store.schema();
    let objects: Vec<_> = schema.objects().iter().map(|o| ObjectJson { id: &o.id, kind: o.kind }).collect();
    let morphisms: Vec<_> = schema
        .morphisms()
        .iter()
        .filter(|m| !m.is_identity())
        .map(|m| MorphismJson {
            id: &m.id,
            domain: &m.domain,
            codomain: &m.codomain,
            cardinality: m.cardinality,
        })
        .collect();
    Json(json!({ "objects": objects, "morphisms": morphisms })).into_response()
}

async fn examples(State(reg): State<Registry>, UrlPath(id): UrlPath<String>) -> Response {
    match reg.get(&id) {
        Some(store) => Json(store.examples()).into_response(),
        None => unknown_dataset(&id),
    }
}

#[derive(Deserialize)]
struct QueryRequest {
    query: String,
}

/// Body of a query response; `model`, `rendered` and `plan` are null on error.
#[derive(Serialize)]
pub struct QueryResponse {
    pub status: &'static str,
    pub model: Option<OutputModel>,
    pub rendered: Option<RenderedAll>,
    pub plan: Option<serde_json::Value>,
    pub diagnostics: Vec<Diagnostic>,
}

impl QueryResponse {
    fn failed(diagnostic: Diagnostic) -> Self {
        QueryResponse {
            status: "error",
            model: None,
            rendered: None,
            plan: None,
            diagnostics: vec![diagnostic],
        }
    }
}

/// Runs a query and renders it in every model it fits. Shared with the CLI.
pub fn answer(text: &str, store: &InstanceStore) -> QueryResponse {
    let out = match run_query(text, store) {
        Ok(out) => out,
        Err(d) => return QueryResponse::failed(d),
    };
    let rendered = render_all(&out, store);
    if let Some(e) = rendered.primary_error() {
        let span = out.ast.result_block().source_span;
        return QueryResponse::failed(Diagnostic {
            kind: "Unrenderable".into(),
            message: e.to_string(),
            line: span.line.max(1),
            column: span.column.max(1),
        });
    }
    QueryResponse {
        status: "ok",
        model: Some(out.model),
        plan: Some(out.plan.to_json()),
        rendered: Some(rendered),
        diagnostics: Vec::new(),
    }
}

async fn query(State(reg): State<Registry>, UrlPath(id): UrlPath<String>, body: Bytes) -> Response {
    let Some(store) = reg.get(&id) else {
        return unknown_dataset(&id);
    };
    let request: QueryRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request body: {e}")),
    };
    // Parse errors are cheap to detect before the heavier pipeline; both paths
    // produce the same diagnostic shape.
    if let Err(e) = parse(&request.query) {
        return Json(QueryResponse::failed(Diagnostic::from(&e))).into_response();
    }
    Json(answer(&request.query, store)).into_response()
}
