//! Fold plans: each QUERY block compiled to a right fold with an explicit
//! two-parameter combiner and an empty seed.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::json;

use crate::query::{
    pretty_lambda, Combiner, Contribution, Expr, ExprKind, LambdaExpr, OutputModel, QueryType, Source, Span, TExpr,
    TExprKind, TypedBlock, TypedQuery, VarKind,
};

/// How a combiner uses its accumulator. When the accumulator only ever
/// appears as the tail of the result, each element's contribution is
/// independent and the fold can run as a single forward pass.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Prepend(TExpr),
    Keep,
    Branch(TExpr, Box<Shape>, Box<Shape>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// LET variable the stage's result is bound to; `None` for the final stage.
    pub binds: Option<String>,
    pub source: Source,
    pub param: String,
    pub acc: String,
    pub body: TExpr,
    pub shape: Option<Shape>,
    pub element_type: QueryType,
    pub result_type: QueryType,
    pub model: OutputModel,
    pub alternatives: Vec<OutputModel>,
}

impl Stage {
    /// The combiner as a surface-syntax lambda.
    pub fn combiner(&self) -> LambdaExpr {
        LambdaExpr {
            params: vec![self.param.clone(), self.acc.clone()],
            body: to_expr(&self.body),
            span: Span::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub stages: Vec<Stage>,
}

#[derive(Serialize)]
struct StageJson<'a> {
    source: &'a str,
    binds: Option<&'a str>,
    combiner: String,
    #[serde(rename = "combinerAst")]
    combiner_ast: LambdaExpr,
}

impl FoldPlan {
    pub fn final_stage(&self) -> &Stage {
        self.stages.last().expect("a plan has at least one stage")
    }

    pub fn to_json(&self) -> serde_json::Value {
        let stages: Vec<_> = self
            .stages
            .iter()
            .map(|s| {
                let lambda = s.combiner();
                StageJson {
                    source: s.source.name(),
                    binds: s.binds.as_deref(),
                    combiner: pretty_lambda(&lambda),
                    combiner_ast: lambda,
                }
            })
            .collect();
        json!({ "stages": stages })
    }
}

pub fn compile(q: &TypedQuery) -> FoldPlan {
    let mut stages = Vec::new();
    collect(q, None, &mut stages);
    FoldPlan { stages }
}

fn collect(q: &TypedQuery, binds: Option<String>, out: &mut Vec<Stage>) {
    match q {
        TypedQuery::Let { var, bound, body } => {
            collect(bound, Some(var.clone()), out);
            collect(body, binds, out);
        }
        TypedQuery::Block(b) => out.push(stage(b, binds)),
    }
}

fn stage(b: &TypedBlock, binds: Option<String>) -> Stage {
    let (param, acc, body) = match &b.combiner {
        Combiner::Binary { param, acc, body } => (param.clone(), acc.clone(), body.clone()),
        Combiner::Unary { param, body } => {
            let mut used = BTreeSet::from([param.clone()]);
            contribution_names(body, &mut used);
            let acc = fresh_name("acc", &used);
            let body = lower(body, &acc, &b.result_type);
            (param.clone(), acc, body)
        }
    };
    let shape = shape_of(&body, &acc);
    Stage {
        binds,
        source: b.source.clone(),
        param,
        acc,
        body,
        shape,
        element_type: b.element_type.clone(),
        result_type: b.result_type.clone(),
        model: b.model,
        alternatives: b.alternatives.clone(),
    }
}

fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    if !used.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !used.contains(n))
        .expect("unbounded supply")
}

/// Rewrites a contribution into an expression over an explicit accumulator.
fn lower(c: &Contribution, acc: &str, list_ty: &QueryType) -> TExpr {
    let acc_var = TExpr {
        kind: TExprKind::Var(acc.to_string(), VarKind::Param),
        ty: list_ty.clone(),
        span: Span::default(),
    };
    match c {
        Contribution::Emit(e) => TExpr {
            kind: TExprKind::Cons(Box::new(e.clone()), Box::new(acc_var)),
            ty: list_ty.clone(),
            span: e.span,
        },
        Contribution::Keep => acc_var,
        Contribution::Branch { cond, then, otherwise } => TExpr {
            kind: TExprKind::If(
                Box::new(cond.clone()),
                Box::new(lower(then, acc, list_ty)),
                Box::new(lower(otherwise, acc, list_ty)),
            ),
            ty: list_ty.clone(),
            span: cond.span,
        },
    }
}

fn shape_of(body: &TExpr, acc: &str) -> Option<Shape> {
    match &body.kind {
        TExprKind::Var(v, _) if v == acc => Some(Shape::Keep),
        TExprKind::Cons(item, rest) => match &rest.kind {
            TExprKind::Var(v, _) if v == acc && !mentions(item, acc) => Some(Shape::Prepend((**item).clone())),
            _ => None,
        },
        TExprKind::If(c, t, o) if !mentions(c, acc) => Some(Shape::Branch(
            (**c).clone(),
            Box::new(shape_of(t, acc)?),
            Box::new(shape_of(o, acc)?),
        )),
        _ => None,
    }
}

/// Whether `name` occurs free in `e`.
pub(crate) fn mentions(e: &TExpr, name: &str) -> bool {
    match &e.kind {
        TExprKind::Var(v, _) => v == name,
        TExprKind::If(a, b, c) => mentions(a, name) || mentions(b, name) || mentions(c, name),
        TExprKind::Tuple(items) | TExprKind::Builtin(_, items) => items.iter().any(|i| mentions(i, name)),
        TExprKind::BinOp(_, l, r) | TExprKind::Cons(l, r) => mentions(l, name) || mentions(r, name),
        TExprKind::Apply { arg, .. } => mentions(arg, name),
        TExprKind::Lambda(p, body) => p != name && mentions(body, name),
        _ => false,
    }
}

fn names(e: &TExpr, out: &mut BTreeSet<String>) {
    match &e.kind {
        TExprKind::Var(v, _) => {
            out.insert(v.clone());
        }
        TExprKind::If(a, b, c) => {
            names(a, out);
            names(b, out);
            names(c, out);
        }
        TExprKind::Tuple(items) | TExprKind::Builtin(_, items) => items.iter().for_each(|i| names(i, out)),
        TExprKind::BinOp(_, l, r) | TExprKind::Cons(l, r) => {
            names(l, out);
            names(r, out);
        }
        TExprKind::Apply { arg, annotation, .. } => {
            names(arg, out);
            out.extend(annotation.clone());
        }
        TExprKind::Lambda(p, body) => {
            out.insert(p.clone());
            names(body, out);
        }
        TExprKind::MorphismRef(m) => {
            out.insert(m.clone());
        }
        _ => {}
    }
}

fn contribution_names(c: &Contribution, out: &mut BTreeSet<String>) {
    match c {
        Contribution::Emit(e) => names(e, out),
        Contribution::Keep => {}
        Contribution::Branch { cond, then, otherwise } => {
            names(cond, out);
            contribution_names(then, out);
            contribution_names(otherwise, out);
        }
    }
}

/// Forgets types, giving back surface syntax.
pub fn to_expr(e: &TExpr) -> Expr {
    let kind = match &e.kind {
        TExprKind::If(c, t, o) => ExprKind::If {
            cond: Box::new(to_expr(c)),
            then: Box::new(to_expr(t)),
            otherwise: Box::new(to_expr(o)),
        },
        TExprKind::Var(name, _) | TExprKind::MorphismRef(name) => ExprKind::Var { name: name.clone() },
        TExprKind::Int(value) => ExprKind::Int { value: *value },
        TExprKind::Double(value) => ExprKind::Double { value: *value },
        TExprKind::Str(value) => ExprKind::Str { value: value.clone() },
        TExprKind::Bool(value) => ExprKind::Bool { value: *value },
        TExprKind::Tuple(items) => ExprKind::Tuple {
            items: items.iter().map(to_expr).collect(),
        },
        TExprKind::BinOp(op, l, r) => ExprKind::BinOp {
            op: *op,
            left: Box::new(to_expr(l)),
            right: Box::new(to_expr(r)),
        },
        TExprKind::Cons(i, r) => ExprKind::Cons {
            item: Box::new(to_expr(i)),
            rest: Some(Box::new(to_expr(r))),
        },
        TExprKind::Nil => ExprKind::Nil,
        TExprKind::Apply {
            morphism,
            arg,
            annotation,
        } => ExprKind::App {
            head: morphism.clone(),
            args: std::iter::once(to_expr(arg))
                .chain(annotation.iter().map(Expr::var))
                .collect(),
        },
        TExprKind::Builtin(b, args) => ExprKind::App {
            head: b.name().to_string(),
            args: args.iter().map(to_expr).collect(),
        },
        TExprKind::Lambda(p, body) => ExprKind::Lambda {
            param: p.clone(),
            body: Box::new(to_expr(body)),
        },
    };
    Expr::at(kind, e.span)
}
