//! Multi-model querying over a schema category.
//!
//! Data in relational, XML, graph and key-value form is viewed as a functor
//! from a schema category into sets. Queries are folds over collections and
//! their results can be rendered into any of the supported models.

pub mod category;
pub mod eval;
pub mod graph;
pub mod pipeline;
pub mod query;
pub mod render;
pub mod report;
pub mod store;
pub mod value;

#[cfg(test)]
mod testing;
