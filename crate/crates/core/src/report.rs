use std::fmt;

use serde::Serialize;

/// A single broken law, either of a schema category or of an instance functor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum LawViolation {
    /// An object has no identity morphism.
    MissingIdentity { object: String },
    /// `f . id` or `id . f` is not registered as `f`.
    IdentityLaw {
        morphism: String,
        identity: String,
        found: Option<String>,
    },
    /// A composable pair has no entry in the composition table.
    MissingComposite { outer: String, inner: String },
    /// A composition entry names a morphism that does not exist.
    UnknownMorphism { outer: String, inner: String, name: String },
    /// A composition entry is registered for a non-composable pair.
    IllTypedEntry { outer: String, inner: String },
    /// The registered composite has the wrong domain, codomain or cardinality.
    CompositeSignature {
        outer: String,
        inner: String,
        result: String,
        reason: String,
    },
    /// `h . (g . f)` and `(h . g) . f` disagree.
    Associativity {
        outer: String,
        middle: String,
        inner: String,
        left: String,
        right: String,
    },
    /// The identity evaluator does not map an entity to itself.
    FunctorIdentity {
        object: String,
        entity: String,
        found: String,
    },
    /// `F(g . f)(x)` differs from `F(g)(F(f)(x))`.
    FunctorComposition {
        composite: String,
        entity: String,
        expected: String,
        found: String,
    },
    /// An evaluator has no entry for an entity of its domain collection.
    Totality { morphism: String, entity: String },
    /// An evaluator output does not inhabit the codomain.
    Codomain {
        morphism: String,
        entity: String,
        reason: String,
    },
}

impl fmt::Display for LawViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawViolation::MissingIdentity { object } => {
                write!(f, "identity: object {object} has no identity morphism")
            }
            LawViolation::IdentityLaw {
                morphism,
                identity,
                found,
            } => write!(
                f,
                "identity: composing {morphism} with {identity} gives {} instead of {morphism}",
                found.as_deref().unwrap_or("<nothing>")
            ),
            LawViolation::MissingComposite { outer, inner } => {
                write!(f, "closure: composite {outer} . {inner} is not registered")
            }
            LawViolation::UnknownMorphism { outer, inner, name } => write!(
                f,
                "closure: entry {outer} . {inner} references unknown morphism {name}"
            ),
            LawViolation::IllTypedEntry { outer, inner } => write!(
                f,
                "closure: entry {outer} . {inner} is registered but the pair is not composable"
            ),
            LawViolation::CompositeSignature {
                outer,
                inner,
                result,
                reason,
            } => write!(f, "closure: {outer} . {inner} = {result} but {reason}"),
            LawViolation::Associativity {
                outer,
                middle,
                inner,
                left,
                right,
            } => write!(
                f,
                "associativity: {outer} . ({middle} . {inner}) = {left} but ({outer} . {middle}) . {inner} = {right}"
            ),
            LawViolation::FunctorIdentity {
                object,
                entity,
                found,
            } => write!(
                f,
                "functor identity: id_{object}({entity}) = {found}, expected {entity}"
            ),
            LawViolation::FunctorComposition {
                composite,
                entity,
                expected,
                found,
            } => write!(
                f,
                "functor composition: {composite}({entity}) = {found}, chained lookup gives {expected}"
            ),
            LawViolation::Totality { morphism, entity } => {
                write!(f, "totality: {morphism} has no value for {entity}")
            }
            LawViolation::Codomain {
                morphism,
                entity,
                reason,
            } => write!(f, "codomain: {morphism}({entity}) {reason}"),
        }
    }
}

/// Outcome of a law check. Violations are data; an empty report means the laws hold.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LawReport {
    pub violations: Vec<LawViolation>,
}

impl LawReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub(crate) fn push(&mut self, violation: LawViolation) {
        self.violations.push(violation);
    }

    pub fn extend(&mut self, other: LawReport) {
        self.violations.extend(other.violations);
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "OK");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
