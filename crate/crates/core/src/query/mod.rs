//! The query language: syntax, pretty printing and typechecking.

pub mod ast;
mod error;
mod lexer;
mod parser;
mod pretty;
mod typecheck;

pub use ast::{BinOp, Block, Expr, ExprKind, LambdaExpr, OutputModel, QueryAst, Span};
pub use error::QueryError;
pub use parser::{parse, parse_expr};
pub use pretty::{pretty_expr, pretty_lambda, pretty_print};
pub use typecheck::{
    closest, typecheck, Builtin, Combiner, Contribution, QueryType, Source, TExpr, TExprKind, TypedBlock,
    TypedQuery, VarKind,
};
