use thiserror::Error;

use super::ast::Span;

/// Parse and typecheck diagnostics. Every variant carries a source location.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error at {span}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        span: Span,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown collection `{name}` at {span}{}", hint_suffix(hint))]
    UnknownCollection {
        name: String,
        span: Span,
        hint: Option<String>,
    },
    #[error("unknown morphism `{name}` at {span}{}", hint_suffix(hint))]
    UnknownMorphism {
        name: String,
        span: Span,
        hint: Option<String>,
    },
    #[error("unknown variable `{name}` at {span}{}", hint_suffix(hint))]
    UnknownVariable {
        name: String,
        span: Span,
        hint: Option<String>,
    },
    #[error("type error at {span}: expected {expected}, found {found}{}", context_suffix(context))]
    Type {
        expected: String,
        found: String,
        span: Span,
        context: String,
    },
}

fn hint_suffix(hint: &Option<String>) -> String {
    hint.as_ref()
        .map(|h| format!(" (did you mean `{h}`?)"))
        .unwrap_or_default()
}

fn context_suffix(context: &str) -> String {
    if context.is_empty() {
        String::new()
    } else {
        format!(" ({context})")
    }
}

impl QueryError {
    pub fn span(&self) -> Span {
        match self {
            QueryError::Syntax { span, .. }
            | QueryError::UnknownCollection { span, .. }
            | QueryError::UnknownMorphism { span, .. }
            | QueryError::UnknownVariable { span, .. }
            | QueryError::Type { span, .. } => *span,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            QueryError::Syntax { .. } => "SyntaxError",
            QueryError::UnknownCollection { .. } => "UnknownCollection",
            QueryError::UnknownMorphism { .. } => "UnknownMorphism",
            QueryError::UnknownVariable { .. } => "UnknownVariable",
            QueryError::Type { .. } => "TypeError",
        }
    }
}
