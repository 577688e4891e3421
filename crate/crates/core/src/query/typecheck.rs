//! Typechecking against a schema category.
//!
//! Inference uses unification with metavariables for the element type of
//! accumulators and `nil`; a [`TypedQuery`] never contains unresolved
//! variables. Int and double mix freely in arithmetic and comparisons.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::ast::{BinOp, Block, Expr, ExprKind, OutputModel, QueryAst, Span};
use super::error::QueryError;
use crate::category::{Cardinality, ObjectKind, PrimitiveType, SchemaCategory};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "type", content = "of")]
pub enum QueryType {
    Prim(PrimitiveType),
    Entity(String),
    Tuple(Vec<QueryType>),
    List(Box<QueryType>),
    Graph(Box<QueryType>),
    Fun(Box<QueryType>, Box<QueryType>),
    /// Inference variable. Only present while checking.
    #[doc(hidden)]
    Meta(u32),
}

impl QueryType {
    pub fn list(elem: QueryType) -> Self {
        QueryType::List(Box::new(elem))
    }

    pub fn entity(id: impl Into<String>) -> Self {
        QueryType::Entity(id.into())
    }

    /// Element type of a list or graph.
    pub fn element(&self) -> Option<&QueryType> {
        match self {
            QueryType::List(e) | QueryType::Graph(e) => Some(e),
            _ => None,
        }
    }

    fn is_numeric(&self) -> bool {
        matches!(
            self,
            QueryType::Prim(PrimitiveType::Int) | QueryType::Prim(PrimitiveType::Double)
        )
    }

    /// Types on which `==` is defined.
    pub fn is_comparable(&self) -> bool {
        match self {
            QueryType::Prim(_) | QueryType::Entity(_) => true,
            QueryType::Tuple(items) => items.iter().all(QueryType::is_comparable),
            _ => false,
        }
    }
}

impl fmt::Display for QueryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryType::Prim(p) => write!(f, "{p}"),
            QueryType::Entity(e) => f.write_str(e),
            QueryType::Tuple(items) => {
                f.write_str("(")?;
                for (i, t) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            QueryType::List(e) => write!(f, "[{e}]"),
            QueryType::Graph(e) => write!(f, "Graph {e}"),
            QueryType::Fun(a, b) => write!(f, "{a} -> {b}"),
            QueryType::Meta(n) => write!(f, "?{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    Elem,
    Map,
    Any,
    All,
    Not,
    Fst,
    Snd,
    Length,
}

impl Builtin {
    pub const ALL: [Builtin; 8] = [
        Builtin::Elem,
        Builtin::Map,
        Builtin::Any,
        Builtin::All,
        Builtin::Not,
        Builtin::Fst,
        Builtin::Snd,
        Builtin::Length,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Elem => "elem",
            Builtin::Map => "map",
            Builtin::Any => "any",
            Builtin::All => "all",
            Builtin::Not => "not",
            Builtin::Fst => "fst",
            Builtin::Snd => "snd",
            Builtin::Length => "length",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }

    fn arity(self) -> usize {
        match self {
            Builtin::Elem | Builtin::Map | Builtin::Any | Builtin::All => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Param,
    Let,
    Collection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: QueryType,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TExprKind {
    If(Box<TExpr>, Box<TExpr>, Box<TExpr>),
    Var(String, VarKind),
    Int(i64),
    Double(f64),
    Str(String),
    Bool(bool),
    Tuple(Vec<TExpr>),
    BinOp(BinOp, Box<TExpr>, Box<TExpr>),
    Cons(Box<TExpr>, Box<TExpr>),
    Nil,
    /// Morphism application; `annotation` is the trailing codomain collection.
    Apply {
        morphism: String,
        arg: Box<TExpr>,
        annotation: Option<String>,
    },
    Builtin(Builtin, Vec<TExpr>),
    /// Function argument of `map`, `any` or `all`.
    Lambda(String, Box<TExpr>),
    /// A bare morphism used as a function argument.
    MorphismRef(String),
}

/// Body of a one-parameter block lambda: what it contributes to the fold.
#[derive(Debug, Clone, PartialEq)]
pub enum Contribution {
    /// `cons e`: prepend `e` to the accumulator.
    Emit(TExpr),
    /// `nil`: leave the accumulator unchanged.
    Keep,
    Branch {
        cond: TExpr,
        then: Box<Contribution>,
        otherwise: Box<Contribution>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Combiner {
    Unary { param: String, body: Contribution },
    Binary { param: String, acc: String, body: TExpr },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "name", rename_all = "lowercase")]
pub enum Source {
    Collection(String),
    Let(String),
}

impl Source {
    pub fn name(&self) -> &str {
        match self {
            Source::Collection(n) | Source::Let(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedBlock {
    pub source: Source,
    /// Type of the lambda's element parameter.
    pub element_type: QueryType,
    pub combiner: Combiner,
    /// Always a list type.
    pub result_type: QueryType,
    pub model: OutputModel,
    pub alternatives: Vec<OutputModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypedQuery {
    Let {
        var: String,
        bound: Box<TypedQuery>,
        body: Box<TypedQuery>,
    },
    Block(TypedBlock),
}

impl TypedQuery {
    pub fn result_block(&self) -> &TypedBlock {
        match self {
            TypedQuery::Let { body, .. } => body.result_block(),
            TypedQuery::Block(b) => b,
        }
    }

    pub fn result_type(&self) -> &QueryType {
        &self.result_block().result_type
    }
}

/// Closest candidate within edit distance 2.
pub fn closest<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<String> {
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(name, c), c))
        .filter(|(d, _)| *d <= 2)
        .min()
        .map(|(_, c)| c.to_string())
}

pub fn typecheck(
    ast: &QueryAst,
    schema: &SchemaCategory,
    sources: &BTreeMap<String, QueryType>,
) -> Result<TypedQuery, QueryError> {
    let mut checker = Checker {
        schema,
        sources,
        subst: Vec::new(),
        lets: Vec::new(),
        params: Vec::new(),
    };
    let q = checker.query(ast)?;
    checker.zonk_query(q)
}

struct Checker<'a> {
    schema: &'a SchemaCategory,
    sources: &'a BTreeMap<String, QueryType>,
    subst: Vec<Option<QueryType>>,
    lets: Vec<(String, QueryType)>,
    params: Vec<(String, QueryType)>,
}

fn type_error<T>(expected: impl fmt::Display, found: impl fmt::Display, span: Span, context: &str) -> Result<T, QueryError> {
    Err(QueryError::Type {
        expected: expected.to_string(),
        found: found.to_string(),
        span,
        context: context.to_string(),
    })
}

impl<'a> Checker<'a> {
    fn fresh(&mut self) -> QueryType {
        self.subst.push(None);
        QueryType::Meta(self.subst.len() as u32 - 1)
    }

    /// Follows metavariable bindings at the top level.
    fn resolve(&self, ty: &QueryType) -> QueryType {
        match ty {
            QueryType::Meta(n) => match &self.subst[*n as usize] {
                Some(t) => self.resolve(t),
                None => ty.clone(),
            },
            other => other.clone(),
        }
    }

    /// Resolves metavariables everywhere inside `ty`.
    fn deep(&self, ty: &QueryType) -> QueryType {
        match self.resolve(ty) {
            QueryType::Tuple(items) => QueryType::Tuple(items.iter().map(|t| self.deep(t)).collect()),
            QueryType::List(e) => QueryType::List(Box::new(self.deep(&e))),
            QueryType::Graph(e) => QueryType::Graph(Box::new(self.deep(&e))),
            QueryType::Fun(a, b) => QueryType::Fun(Box::new(self.deep(&a)), Box::new(self.deep(&b))),
            other => other,
        }
    }

    fn occurs(&self, n: u32, ty: &QueryType) -> bool {
        match self.resolve(ty) {
            QueryType::Meta(m) => m == n,
            QueryType::Tuple(items) => items.iter().any(|t| self.occurs(n, t)),
            QueryType::List(e) | QueryType::Graph(e) => self.occurs(n, &e),
            QueryType::Fun(a, b) => self.occurs(n, &a) || self.occurs(n, &b),
            _ => false,
        }
    }

    fn unify(&mut self, expected: &QueryType, found: &QueryType, span: Span, context: &str) -> Result<(), QueryError> {
        let (a, b) = (self.resolve(expected), self.resolve(found));
        let mismatch = |this: &Self| type_error(this.deep(&a), this.deep(&b), span, context);
        match (&a, &b) {
            (QueryType::Meta(x), QueryType::Meta(y)) if x == y => Ok(()),
            (QueryType::Meta(x), other) | (other, QueryType::Meta(x)) => {
                if self.occurs(*x, other) {
                    return mismatch(self);
                }
                self.subst[*x as usize] = Some(other.clone());
                Ok(())
            }
            (QueryType::Prim(x), QueryType::Prim(y)) if x == y => Ok(()),
            (QueryType::Entity(x), QueryType::Entity(y)) if x == y => Ok(()),
            (QueryType::Tuple(xs), QueryType::Tuple(ys)) if xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(ys) {
                    if self.unify(x, y, span, context).is_err() {
                        return mismatch(self);
                    }
                }
                Ok(())
            }
            (QueryType::List(x), QueryType::List(y)) | (QueryType::Graph(x), QueryType::Graph(y)) => {
                if self.unify(x, y, span, context).is_err() {
                    return mismatch(self);
                }
                Ok(())
            }
            (QueryType::Fun(a1, r1), QueryType::Fun(a2, r2)) => {
                if self.unify(a1, a2, span, context).is_err() || self.unify(r1, r2, span, context).is_err() {
                    return mismatch(self);
                }
                Ok(())
            }
            _ => mismatch(self),
        }
    }

    fn object_type(&self, object: &str) -> QueryType {
        match self.schema.object(object) {
            Some(o) if o.kind == ObjectKind::Primitive => {
                QueryType::Prim(o.primitive_type.expect("validated schema"))
            }
            _ => QueryType::Entity(object.to_string()),
        }
    }

    fn morphism_result(&self, id: &str) -> Option<(QueryType, QueryType)> {
        let m = self.schema.morphism(id)?;
        let cod = self.object_type(&m.codomain);
        let cod = match m.cardinality {
            Cardinality::Many => QueryType::list(cod),
            Cardinality::One => cod,
        };
        Some((self.object_type(&m.domain), cod))
    }

    fn bound_names(&self) -> Vec<&str> {
        self.params
            .iter()
            .map(|(n, _)| n.as_str())
            .chain(self.lets.iter().map(|(n, _)| n.as_str()))
            .chain(self.sources.keys().map(String::as_str))
            .collect()
    }

    fn query(&mut self, q: &QueryAst) -> Result<TypedQuery, QueryError> {
        match q {
            QueryAst::Let {
                var,
                bound,
                body,
                span,
            } => {
                let bound = self.query(bound)?;
                let taken = self.lets.iter().any(|(n, _)| n == var)
                    || self.sources.contains_key(var)
                    || self.schema.morphism(var).is_some();
                if taken {
                    return type_error("a fresh name", format!("`{var}` already in scope"), *span, "LET binding");
                }
                self.lets.push((var.clone(), bound.result_block().result_type.clone()));
                let body = self.query(body);
                self.lets.pop();
                Ok(TypedQuery::Let {
                    var: var.clone(),
                    bound: Box::new(bound),
                    body: Box::new(body?),
                })
            }
            QueryAst::Block(b) => self.block(b).map(TypedQuery::Block),
        }
    }

    fn block(&mut self, b: &Block) -> Result<TypedBlock, QueryError> {
        let (source, source_ty) = if let Some((_, ty)) = self.lets.iter().rev().find(|(n, _)| n == &b.source) {
            (Source::Let(b.source.clone()), ty.clone())
        } else if let Some(ty) = self.sources.get(&b.source) {
            (Source::Collection(b.source.clone()), ty.clone())
        } else {
            let names = self
                .lets
                .iter()
                .map(|(n, _)| n.as_str())
                .chain(self.sources.keys().map(String::as_str));
            return Err(QueryError::UnknownCollection {
                name: b.source.clone(),
                span: b.source_span,
                hint: closest(&b.source, names),
            });
        };
        let element_type = self.deep(source_ty.element().expect("sources are lists or graphs"));
        let params = &b.lambda.params;
        if params.len() == 2 && params[0] == params[1] {
            return type_error("distinct parameters", format!("`{}` twice", params[0]), b.lambda.span, "query lambda");
        }
        let elem = self.fresh();
        let result_type = QueryType::list(elem.clone());
        self.params.push((params[0].clone(), element_type.clone()));
        let combiner = if params.len() == 1 {
            self.contribution(&b.lambda.body, &elem)
                .map(|body| Combiner::Unary { param: params[0].clone(), body })
        } else {
            self.params.push((params[1].clone(), result_type.clone()));
            let body = self.expr(&b.lambda.body).and_then(|body| {
                self.unify(&result_type, &body.ty, body.span, "accumulator")?;
                Ok(body)
            });
            self.params.pop();
            body.map(|body| Combiner::Binary {
                param: params[0].clone(),
                acc: params[1].clone(),
                body,
            })
        };
        self.params.pop();
        let combiner = combiner?;
        Ok(TypedBlock {
            source,
            element_type,
            combiner,
            result_type,
            model: b.model,
            alternatives: b.alternatives.clone(),
        })
    }

    fn contribution(&mut self, e: &Expr, elem: &QueryType) -> Result<Contribution, QueryError> {
        match &e.kind {
            ExprKind::Cons { item, rest: None } => {
                let item = self.expr(item)?;
                self.unify(elem, &item.ty, item.span, "query result element")?;
                Ok(Contribution::Emit(item))
            }
            ExprKind::Nil => Ok(Contribution::Keep),
            ExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                let cond = self.expr(cond)?;
                self.unify(&QueryType::Prim(PrimitiveType::Bool), &cond.ty, cond.span, "if condition")?;
                let then = self.contribution(then, elem)?;
                let otherwise = self.contribution(otherwise, elem)?;
                Ok(Contribution::Branch {
                    cond,
                    then: Box::new(then),
                    otherwise: Box::new(otherwise),
                })
            }
            _ => type_error(
                "`cons e`, `nil` or an if-then-else over them",
                "another expression",
                e.span,
                "one-parameter query lambda",
            ),
        }
    }

    fn lookup_var(&self, name: &str) -> Option<(QueryType, VarKind)> {
        if let Some((_, t)) = self.params.iter().rev().find(|(n, _)| n == name) {
            return Some((t.clone(), VarKind::Param));
        }
        if let Some((_, t)) = self.lets.iter().rev().find(|(n, _)| n == name) {
            return Some((t.clone(), VarKind::Let));
        }
        self.sources.get(name).map(|t| (t.clone(), VarKind::Collection))
    }

    fn expr(&mut self, e: &Expr) -> Result<TExpr, QueryError> {
        let span = e.span;
        let bool_t = QueryType::Prim(PrimitiveType::Bool);
        let (kind, ty) = match &e.kind {
            ExprKind::Int { value } => (TExprKind::Int(*value), QueryType::Prim(PrimitiveType::Int)),
            ExprKind::Double { value } => (TExprKind::Double(*value), QueryType::Prim(PrimitiveType::Double)),
            ExprKind::Str { value } => (TExprKind::Str(value.clone()), QueryType::Prim(PrimitiveType::String)),
            ExprKind::Bool { value } => (TExprKind::Bool(*value), bool_t),
            ExprKind::Var { name } => match self.lookup_var(name) {
                Some((ty, kind)) => (TExprKind::Var(name.clone(), kind), ty),
                None if self.schema.morphism(name).is_some() => {
                    return type_error(
                        "a value",
                        format!("morphism `{name}` without an argument"),
                        span,
                        "morphisms must be applied",
                    );
                }
                None => {
                    return Err(QueryError::UnknownVariable {
                        name: name.clone(),
                        span,
                        hint: closest(name, self.bound_names()),
                    })
                }
            },
            ExprKind::Tuple { items } => {
                let items = items.iter().map(|i| self.expr(i)).collect::<Result<Vec<_>, _>>()?;
                let ty = QueryType::Tuple(items.iter().map(|i| i.ty.clone()).collect());
                (TExprKind::Tuple(items), ty)
            }
            ExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                let cond = self.expr(cond)?;
                self.unify(&bool_t, &cond.ty, cond.span, "if condition")?;
                let then = self.expr(then)?;
                let otherwise = self.expr(otherwise)?;
                self.unify(&then.ty, &otherwise.ty, otherwise.span, "else branch")?;
                let ty = then.ty.clone();
                (TExprKind::If(Box::new(cond), Box::new(then), Box::new(otherwise)), ty)
            }
            ExprKind::BinOp { op, left, right } => {
                let l = self.expr(left)?;
                let r = self.expr(right)?;
                let ty = self.binop_type(*op, &l, &r, span)?;
                (TExprKind::BinOp(*op, Box::new(l), Box::new(r)), ty)
            }
            ExprKind::Cons { item, rest: Some(rest) } => {
                let item = self.expr(item)?;
                let rest = self.expr(rest)?;
                let ty = QueryType::list(item.ty.clone());
                self.unify(&ty, &rest.ty, rest.span, "cons tail")?;
                (TExprKind::Cons(Box::new(item), Box::new(rest)), ty)
            }
            ExprKind::Cons { rest: None, .. } => {
                return type_error(
                    "`cons e xs`",
                    "`cons e` without a tail",
                    span,
                    "single-argument cons is only allowed as the result of a one-parameter query lambda",
                );
            }
            ExprKind::Nil => {
                let elem = self.fresh();
                (TExprKind::Nil, QueryType::list(elem))
            }
            ExprKind::Lambda { .. } => {
                return type_error("a value", "a lambda", span, "lambdas are only allowed as arguments of map, any and all");
            }
            ExprKind::App { head, args } => return self.application(head, args, span),
        };
        Ok(TExpr { kind, ty, span })
    }

    fn binop_type(&mut self, op: BinOp, l: &TExpr, r: &TExpr, span: Span) -> Result<QueryType, QueryError> {
        let bool_t = QueryType::Prim(PrimitiveType::Bool);
        let context = format!("operands of `{}`", op.symbol());
        // An unresolved side takes the type of the other one.
        if matches!(self.resolve(&l.ty), QueryType::Meta(_)) || matches!(self.resolve(&r.ty), QueryType::Meta(_)) {
            self.unify(&l.ty, &r.ty, span, &context)?;
        }
        let (lt, rt) = (self.deep(&l.ty), self.deep(&r.ty));
        match op {
            BinOp::And | BinOp::Or => {
                self.unify(&bool_t, &l.ty, l.span, &context)?;
                self.unify(&bool_t, &r.ty, r.span, &context)?;
                Ok(bool_t)
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                for (t, s) in [(&lt, l.span), (&rt, r.span)] {
                    if !t.is_numeric() {
                        return type_error("int or double", t, s, &context);
                    }
                }
                Ok(if lt == rt { lt } else { QueryType::Prim(PrimitiveType::Double) })
            }
            BinOp::Gt | BinOp::Lt | BinOp::Ge | BinOp::Le => {
                if lt.is_numeric() && rt.is_numeric() {
                    return Ok(bool_t);
                }
                if lt == QueryType::Prim(PrimitiveType::String) {
                    self.unify(&lt, &rt, r.span, &context)?;
                    return Ok(bool_t);
                }
                if !lt.is_numeric() {
                    return type_error("int, double or string", &lt, l.span, &context);
                }
                type_error(&lt, &rt, r.span, &context)
            }
            BinOp::Eq | BinOp::Ne => {
                if !(lt.is_numeric() && rt.is_numeric()) {
                    self.unify(&lt, &rt, r.span, &context)?;
                }
                let t = self.deep(&l.ty);
                if !t.is_comparable() {
                    return type_error("a comparable type", t, l.span, &context);
                }
                Ok(bool_t)
            }
        }
    }

    /// Element type of a list- or graph-typed argument.
    fn element_of(&mut self, e: &TExpr, context: &str) -> Result<QueryType, QueryError> {
        match self.resolve(&e.ty) {
            QueryType::List(t) | QueryType::Graph(t) => Ok(*t),
            QueryType::Meta(_) => {
                let t = self.fresh();
                self.unify(&QueryType::list(t.clone()), &e.ty, e.span, context)?;
                Ok(t)
            }
            other => type_error("a list", self.deep(&other), e.span, context),
        }
    }

    /// Checks a function argument of `map`/`any`/`all` applied to `param_ty`.
    fn function_arg(&mut self, f: &Expr, param_ty: &QueryType, context: &str) -> Result<TExpr, QueryError> {
        match &f.kind {
            ExprKind::Lambda { param, body } => {
                self.params.push((param.clone(), param_ty.clone()));
                let body = self.expr(body);
                self.params.pop();
                let body = body?;
                let ty = QueryType::Fun(Box::new(param_ty.clone()), Box::new(body.ty.clone()));
                Ok(TExpr {
                    kind: TExprKind::Lambda(param.clone(), Box::new(body)),
                    ty,
                    span: f.span,
                })
            }
            ExprKind::Var { name } if self.lookup_var(name).is_none() => {
                let Some((dom, cod)) = self.morphism_result(name) else {
                    return Err(QueryError::UnknownMorphism {
                        name: name.clone(),
                        span: f.span,
                        hint: closest(name, self.schema.morphisms().iter().map(|m| m.id.as_str())),
                    });
                };
                self.unify(&dom, param_ty, f.span, context)?;
                Ok(TExpr {
                    kind: TExprKind::MorphismRef(name.clone()),
                    ty: QueryType::Fun(Box::new(dom), Box::new(cod)),
                    span: f.span,
                })
            }
            _ => type_error("a lambda or a morphism name", "another expression", f.span, context),
        }
    }

    fn application(&mut self, head: &str, args: &[Expr], span: Span) -> Result<TExpr, QueryError> {
        let bool_t = QueryType::Prim(PrimitiveType::Bool);
        if let Some(b) = Builtin::from_name(head) {
            let context = format!("argument of `{head}`");
            if args.len() != b.arity() {
                return type_error(
                    format!("{} argument(s)", b.arity()),
                    format!("{} argument(s)", args.len()),
                    span,
                    &format!("application of `{head}`"),
                );
            }
            let (targs, ty) = match b {
                Builtin::Elem => {
                    let item = self.expr(&args[0])?;
                    let list = self.expr(&args[1])?;
                    let elem = self.element_of(&list, &context)?;
                    self.unify(&elem, &item.ty, item.span, &context)?;
                    let t = self.deep(&elem);
                    if !t.is_comparable() {
                        return type_error("a comparable type", t, item.span, &context);
                    }
                    (vec![item, list], bool_t)
                }
                Builtin::Map | Builtin::Any | Builtin::All => {
                    let list = self.expr(&args[1])?;
                    let elem = self.element_of(&list, &context)?;
                    let f = self.function_arg(&args[0], &elem, &context)?;
                    let QueryType::Fun(_, res) = &f.ty else { unreachable!("function_arg returns Fun") };
                    let ty = if b == Builtin::Map {
                        QueryType::List(res.clone())
                    } else {
                        self.unify(&bool_t, res, args[0].span, &context)?;
                        bool_t
                    };
                    (vec![f, list], ty)
                }
                Builtin::Not => {
                    let x = self.expr(&args[0])?;
                    self.unify(&bool_t, &x.ty, x.span, &context)?;
                    (vec![x], bool_t)
                }
                Builtin::Fst | Builtin::Snd => {
                    let x = self.expr(&args[0])?;
                    let ty = match self.deep(&x.ty) {
                        QueryType::Tuple(items) if items.len() == 2 => {
                            items[if b == Builtin::Fst { 0 } else { 1 }].clone()
                        }
                        other => return type_error("a pair", other, x.span, &context),
                    };
                    (vec![x], ty)
                }
                Builtin::Length => {
                    let x = self.expr(&args[0])?;
                    self.element_of(&x, &context)?;
                    (vec![x], QueryType::Prim(PrimitiveType::Int))
                }
            };
            return Ok(TExpr {
                kind: TExprKind::Builtin(b, targs),
                ty,
                span,
            });
        }

        let Some((dom, cod)) = self.morphism_result(head) else {
            let candidates = self
                .schema
                .morphisms()
                .iter()
                .map(|m| m.id.as_str())
                .chain(Builtin::ALL.iter().map(|b| b.name()));
            return Err(QueryError::UnknownMorphism {
                name: head.to_string(),
                span,
                hint: closest(head, candidates),
            });
        };
        let context = format!("argument of `{head}`");
        let annotation = match args {
            [_] => None,
            [_, ann] => {
                let codomain = &self.schema.morphism(head).expect("resolved").codomain;
                match &ann.kind {
                    ExprKind::Var { name } => match self.sources.get(name).and_then(QueryType::element) {
                        Some(QueryType::Entity(obj)) if obj == codomain => Some(name.clone()),
                        Some(other) => {
                            return type_error(
                                format!("a collection of {codomain}"),
                                format!("`{name}` holding {other}"),
                                ann.span,
                                &format!("codomain annotation of `{head}`"),
                            )
                        }
                        None => {
                            return Err(QueryError::UnknownCollection {
                                name: name.clone(),
                                span: ann.span,
                                hint: closest(name, self.sources.keys().map(String::as_str)),
                            })
                        }
                    },
                    _ => {
                        return type_error(
                            "a collection name",
                            "an expression",
                            ann.span,
                            &format!("codomain annotation of `{head}`"),
                        )
                    }
                }
            }
            _ => {
                return type_error(
                    "1 argument (plus an optional codomain collection)",
                    format!("{} arguments", args.len()),
                    span,
                    &format!("application of `{head}`"),
                )
            }
        };
        let arg = self.expr(&args[0])?;
        self.unify(&dom, &arg.ty, arg.span, &context)?;
        Ok(TExpr {
            kind: TExprKind::Apply {
                morphism: head.to_string(),
                arg: Box::new(arg),
                annotation,
            },
            ty: cod,
            span,
        })
    }

    fn zonk_type(&self, ty: &QueryType, span: Span) -> Result<QueryType, QueryError> {
        let t = self.deep(ty);
        if contains_meta(&t) {
            return type_error("a known element type", t, span, "cannot infer the type; add a cons");
        }
        Ok(t)
    }

    fn zonk_expr(&self, e: TExpr) -> Result<TExpr, QueryError> {
        // Unresolved element types inside nil subterms are harmless; default them.
        let ty = default_metas(&self.deep(&e.ty));
        let kind = match e.kind {
            TExprKind::If(c, t, o) => TExprKind::If(
                Box::new(self.zonk_expr(*c)?),
                Box::new(self.zonk_expr(*t)?),
                Box::new(self.zonk_expr(*o)?),
            ),
            TExprKind::Tuple(items) => {
                TExprKind::Tuple(items.into_iter().map(|i| self.zonk_expr(i)).collect::<Result<_, _>>()?)
            }
            TExprKind::BinOp(op, l, r) => {
                TExprKind::BinOp(op, Box::new(self.zonk_expr(*l)?), Box::new(self.zonk_expr(*r)?))
            }
            TExprKind::Cons(i, r) => TExprKind::Cons(Box::new(self.zonk_expr(*i)?), Box::new(self.zonk_expr(*r)?)),
            TExprKind::Apply {
                morphism,
                arg,
                annotation,
            } => TExprKind::Apply {
                morphism,
                arg: Box::new(self.zonk_expr(*arg)?),
                annotation,
            },
            TExprKind::Builtin(b, args) => {
                TExprKind::Builtin(b, args.into_iter().map(|a| self.zonk_expr(a)).collect::<Result<_, _>>()?)
            }
            TExprKind::Lambda(p, body) => TExprKind::Lambda(p, Box::new(self.zonk_expr(*body)?)),
            other => other,
        };
        Ok(TExpr { kind, ty, span: e.span })
    }

    fn zonk_contribution(&self, c: Contribution) -> Result<Contribution, QueryError> {
        Ok(match c {
            Contribution::Emit(e) => Contribution::Emit(self.zonk_expr(e)?),
            Contribution::Keep => Contribution::Keep,
            Contribution::Branch { cond, then, otherwise } => Contribution::Branch {
                cond: self.zonk_expr(cond)?,
                then: Box::new(self.zonk_contribution(*then)?),
                otherwise: Box::new(self.zonk_contribution(*otherwise)?),
            },
        })
    }

    fn zonk_query(&self, q: TypedQuery) -> Result<TypedQuery, QueryError> {
        Ok(match q {
            TypedQuery::Let { var, bound, body } => TypedQuery::Let {
                var,
                bound: Box::new(self.zonk_query(*bound)?),
                body: Box::new(self.zonk_query(*body)?),
            },
            TypedQuery::Block(b) => {
                let span = match &b.combiner {
                    Combiner::Binary { body, .. } => body.span,
                    Combiner::Unary { .. } => Span::default(),
                };
                let result_type = self.zonk_type(&b.result_type, span)?;
                let combiner = match b.combiner {
                    Combiner::Unary { param, body } => Combiner::Unary {
                        param,
                        body: self.zonk_contribution(body)?,
                    },
                    Combiner::Binary { param, acc, body } => Combiner::Binary {
                        param,
                        acc,
                        body: self.zonk_expr(body)?,
                    },
                };
                TypedQuery::Block(TypedBlock {
                    element_type: self.deep(&b.element_type),
                    result_type,
                    combiner,
                    ..b
                })
            }
        })
    }
}

fn contains_meta(t: &QueryType) -> bool {
    match t {
        QueryType::Meta(_) => true,
        QueryType::Tuple(items) => items.iter().any(contains_meta),
        QueryType::List(e) | QueryType::Graph(e) => contains_meta(e),
        QueryType::Fun(a, b) => contains_meta(a) || contains_meta(b),
        _ => false,
    }
}

/// Replaces leftover metavariables (e.g. the element type of a `nil` whose
/// elements are never inspected) with `bool`.
fn default_metas(t: &QueryType) -> QueryType {
    match t {
        QueryType::Meta(_) => QueryType::Prim(PrimitiveType::Bool),
        QueryType::Tuple(items) => QueryType::Tuple(items.iter().map(default_metas).collect()),
        QueryType::List(e) => QueryType::List(Box::new(default_metas(e))),
        QueryType::Graph(e) => QueryType::Graph(Box::new(default_metas(e))),
        QueryType::Fun(a, b) => QueryType::Fun(Box::new(default_metas(a)), Box::new(default_metas(b))),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::check_query;
    use crate::testing::fixture;

    fn check(text: &str) -> Result<TypedQuery, QueryError> {
        check_query(text, &fixture("ecommerce")).map(|(_, t)| t)
    }

    fn result_type(text: &str) -> String {
        check(text).unwrap().result_type().to_string()
    }

    #[test]
    fn infers_result_types() {
        assert_eq!(result_type("QUERY (\\x -> cons x) FROM customers TO graph"), "[Customer]");
        assert_eq!(
            result_type("QUERY (\\x -> cons (customerName x, creditLimit x)) FROM customers TO xml"),
            "[(string, int)]"
        );
        assert_eq!(
            result_type("QUERY (\\o -> cons (map productName (orderProducts o))) FROM orders TO xml"),
            "[[string]]"
        );
        assert_eq!(result_type("QUERY (\\p -> cons (price p * 2)) FROM products TO xml"), "[double]");
    }

    #[test]
    fn graph_collections_are_graph_typed() {
        let q = check("QUERY (\\x -> if length customers > 1 then cons x else nil) FROM customers TO xml").unwrap();
        let Combiner::Unary { body: Contribution::Branch { cond, .. }, .. } = &q.result_block().combiner else {
            panic!("unexpected combiner")
        };
        let TExprKind::BinOp(_, l, _) = &cond.kind else { panic!() };
        let TExprKind::Builtin(Builtin::Length, args) = &l.kind else { panic!() };
        assert_eq!(args[0].ty.to_string(), "Graph Customer");
    }

    #[test]
    fn unknown_morphism_with_hint() {
        let err = check("QUERY (\\x -> if creditLimt x > 3000 then cons x else nil) FROM customers TO graph").unwrap_err();
        match err {
            QueryError::UnknownMorphism { name, hint, span } => {
                assert_eq!(name, "creditLimt");
                assert_eq!(hint.as_deref(), Some("creditLimit"));
                assert_eq!((span.line, span.column), (1, 17));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_collection_with_hint() {
        let err = check("QUERY (\\x -> cons x) FROM customer TO graph").unwrap_err();
        assert!(matches!(err, QueryError::UnknownCollection { ref hint, .. } if hint.as_deref() == Some("customers")));
        assert_eq!(err.span().column, 27);
    }

    #[test]
    fn type_errors() {
        for bad in [
            // string compared with int
            "QUERY (\\x -> if customerName x > 3 then cons x else nil) FROM customers TO graph",
            // morphism applied to the wrong entity
            "QUERY (\\x -> cons (countryName x)) FROM customers TO xml",
            // accumulator must be a list of the emitted type
            "QUERY (\\x xs -> cons x (cons 1 xs)) FROM customers TO xml",
            // non-bool condition
            "QUERY (\\x -> if creditLimit x then cons x else nil) FROM customers TO xml",
            // body of a one-parameter lambda must contribute with cons/nil
            "QUERY (\\x -> creditLimit x) FROM customers TO xml",
            // annotation names a collection of the wrong object
            "QUERY (\\x -> cons (located x orders)) FROM customers TO xml",
            // nothing fixes the element type
            "QUERY (\\x -> nil) FROM customers TO xml",
            // bare morphism as a value
            "QUERY (\\x -> cons located) FROM customers TO xml",
            // lists are not comparable
            "QUERY (\\o -> if orderProducts o == orderProducts o then cons o else nil) FROM orders TO xml",
        ] {
            let err = check(bad).unwrap_err();
            assert_eq!(err.kind(), "TypeError", "{bad}: {err}");
        }
    }

    #[test]
    fn let_shadowing_is_rejected() {
        let err = check(
            "LET customers BE QUERY (\\x -> cons x) FROM orders TO xml IN QUERY (\\y -> cons y) FROM customers TO xml",
        )
        .unwrap_err();
        assert_eq!(err.kind(), "TypeError");
    }

    #[test]
    fn numeric_promotion() {
        assert!(check("QUERY (\\p -> if price p > 10 then cons p else nil) FROM products TO xml").is_ok());
        assert!(check("QUERY (\\x -> if creditLimit x == 5000.0 then cons x else nil) FROM customers TO xml").is_ok());
    }

    #[test]
    fn unknown_variable() {
        let err = check("QUERY (\\x -> cons y) FROM customers TO xml").unwrap_err();
        assert_eq!(err.kind(), "UnknownVariable");
    }

    #[test]
    fn closest_respects_distance() {
        assert_eq!(closest("locatd", ["located", "countryName"]), Some("located".into()));
        assert_eq!(closest("zzzzzz", ["located"]), None);
    }
}
