//! Pieces of the `multicat` binary that are worth testing without a process.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use multicat_core::category::check_category_laws;
use multicat_core::pipeline::Diagnostic;
use multicat_core::query::OutputModel;
use multicat_core::store::{load_dataset, InstanceStore, StoreError};
use multicat_service::{answer, QueryResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Xml,
    Json,
    Dot,
    Term,
}

impl Format {
    /// Format used when none is asked for: the natural one for the TO model.
    pub fn for_model(model: OutputModel) -> Format {
        match model {
            OutputModel::Relational => Format::Table,
            OutputModel::Xml => Format::Xml,
            OutputModel::Graph => Format::Dot,
            OutputModel::AlgebraicGraph => Format::Term,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Format::Table => "table",
            Format::Csv => "csv",
            Format::Xml => "xml",
            Format::Json => "json",
            Format::Dot => "dot",
            Format::Term => "term",
        }
    }
}

/// Anything that ends the run before a query could be answered.
#[derive(Debug)]
pub enum Failure {
    /// Query could not be parsed, typed, run or rendered. Exit code 1.
    Query(Vec<Diagnostic>),
    /// Dataset or input could not be read. Exit code 2.
    Setup(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Query(_) => 1,
            Failure::Setup(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Query(ds) => {
                let lines: Vec<String> = ds.iter().map(|d| d.to_string()).collect();
                f.write_str(&lines.join("\n"))
            }
            Failure::Setup(msg) => f.write_str(msg),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        Failure::Setup(e.to_string())
    }
}

/// `dataset` is either a directory holding a manifest or the name of one
/// under `root`.
pub fn open_dataset(root: &Path, dataset: &str) -> Result<InstanceStore, Failure> {
    let direct = PathBuf::from(dataset);
    let dir = if direct.join("manifest.json").is_file() { direct } else { root.join(dataset) };
    if !dir.join("manifest.json").is_file() {
        return Err(Failure::Setup(format!("no dataset `{dataset}` under {}", root.display())));
    }
    Ok(load_dataset(&dir)?)
}

/// Output for a successful response in the given format.
pub fn format_response(resp: &QueryResponse, format: Format) -> Result<String, Failure> {
    if resp.status != "ok" {
        return Err(Failure::Query(resp.diagnostics.clone()));
    }
    let rendered = resp.rendered.as_ref().expect("ok responses carry renderings");
    let missing = || {
        let reason = rendered
            .errors
            .iter()
            .map(|e| e.to_string())
            .next()
            .unwrap_or_else(|| "not available".into());
        Failure::Query(vec![Diagnostic {
            kind: "Unrenderable".into(),
            message: format!("cannot produce {}: {reason}", format.name()),
            line: 1,
            column: 1,
        }])
    };
    Ok(match format {
        Format::Table => rendered.table.as_ref().ok_or_else(missing)?.to_text(),
        Format::Csv => rendered.csv.clone().ok_or_else(missing)?,
        Format::Xml => rendered.xml.clone().ok_or_else(missing)?,
        Format::Json => serde_json::to_string_pretty(resp).expect("response serializes") + "\n",
        Format::Dot => rendered.graph.as_ref().ok_or_else(missing)?.to_dot(),
        Format::Term => rendered.term.clone().ok_or_else(missing)? + "\n",
    })
}

/// Runs one query end to end and returns the text to print.
pub fn run(text: &str, store: &InstanceStore, format: Option<Format>) -> Result<String, Failure> {
    let resp = answer(text, store);
    let format = match (format, resp.model) {
        (Some(f), _) => f,
        (None, Some(m)) => Format::for_model(m),
        (None, None) => Format::Table,
    };
    format_response(&resp, format)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckOutcome {
    Ok,
    Violations,
    LoadError,
}

/// Checks every package under `root`, writing one line (or block) per
/// package.
pub fn check(root: &Path, out: &mut impl Write) -> io::Result<CheckOutcome> {
    let mut dirs: Vec<PathBuf> = match std::fs::read_dir(root) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("manifest.json").is_file())
            .collect(),
        Err(e) => {
            writeln!(out, "{}: {e}", root.display())?;
            return Ok(CheckOutcome::LoadError);
        }
    };
    dirs.sort();
    if dirs.is_empty() {
        writeln!(out, "no datasets")?;
        return Ok(CheckOutcome::Ok);
    }
    let mut worst = CheckOutcome::Ok;
    for dir in dirs {
        let id = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        match load_dataset(&dir) {
            Err(e) => {
                writeln!(out, "{id}: load error: {e}")?;
                worst = CheckOutcome::LoadError;
            }
            Ok(store) => {
                let mut report = check_category_laws(store.schema());
                report.extend(store.check_functor_laws());
                if report.is_empty() {
                    writeln!(out, "{id}: OK")?;
                } else {
                    writeln!(out, "{id}: {} violation(s)", report.len())?;
                    for line in report.to_string().lines() {
                        writeln!(out, "  {line}")?;
                    }
                    if worst == CheckOutcome::Ok {
                        worst = CheckOutcome::Violations;
                    }
                }
            }
        }
    }
    Ok(worst)
}

const REPL_HELP: &str = "\
Enter a query, then an empty line to run it.
  :examples   list example queries
  :run N      run example N
  :schema     list objects and morphisms
  :help       show this text
  :quit       leave";

/// Line-oriented loop. Queries end at a blank line; lines starting with `:`
/// are commands when no query is pending.
pub fn repl(store: &InstanceStore, input: impl BufRead, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{} ({} collections). :help for commands.", store.name(), store.collections().count())?;
    let mut pending = String::new();
    for line in input.lines() {
        let line = line?;
        let trimmed = line.trim();
        if pending.is_empty() && trimmed.starts_with(':') {
            let mut words = trimmed.split_whitespace();
            match (words.next().unwrap_or(""), words.next()) {
                (":quit" | ":q", _) => return Ok(()),
                (":help", _) => writeln!(out, "{REPL_HELP}")?,
                (":examples", _) => {
                    for (i, ex) in store.examples().iter().enumerate() {
                        writeln!(out, "{:>3}. {}", i + 1, ex.title)?;
                    }
                }
                (":run", Some(n)) => match n.parse::<usize>().ok().and_then(|n| store.examples().get(n.wrapping_sub(1))) {
                    Some(ex) => {
                        writeln!(out, "{}", ex.query.trim())?;
                        evaluate(&ex.query, store, out)?;
                    }
                    None => writeln!(out, "no example {n}")?,
                },
                (":schema", _) => {
                    let schema = store.schema();
                    for o in schema.objects() {
                        writeln!(out, "{} ({})", o.id, if o.is_entity() { "entity" } else { "primitive" })?;
                    }
                    for m in schema.morphisms().iter().filter(|m| !m.is_identity()) {
                        writeln!(out, "{}: {} -> {}", m.id, m.domain, m.codomain)?;
                    }
                }
                (cmd, _) => writeln!(out, "unknown command {cmd}; try :help")?,
            }
            continue;
        }
        if trimmed.is_empty() {
            if !pending.trim().is_empty() {
                evaluate(&pending, store, out)?;
            }
            pending.clear();
        } else {
            pending.push_str(&line);
            pending.push('\n');
        }
    }
    if !pending.trim().is_empty() {
        evaluate(&pending, store, out)?;
    }
    Ok(())
}

fn evaluate(text: &str, store: &InstanceStore, out: &mut impl Write) -> io::Result<()> {
    let resp = answer(text, store);
    let stages = resp
        .plan
        .as_ref()
        .and_then(|p| p["stages"].as_array())
        .map_or(0, Vec::len);
    let format = resp.model.map_or(Format::Table, Format::for_model);
    match format_response(&resp, format) {
        Ok(text) => {
            write!(out, "{text}")?;
            let noun = if stages == 1 { "stage" } else { "stages" };
            writeln!(out, "({stages} {noun})")
        }
        Err(e) => writeln!(out, "{e}"),
    }
}
