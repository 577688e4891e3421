//! Query execution.
//!
//! Typed queries are compiled into a [`FoldPlan`] and run stage by stage. A
//! naive interpreter over the typed tree lives in [`reference`] and is used
//! to cross-check the optimized path.

mod plan;
pub mod reference;

use std::cmp::Ordering;
use std::collections::HashMap;

use thiserror::Error;

pub use plan::{compile, to_expr, FoldPlan, Shape, Stage};

use crate::query::{BinOp, Builtin, Source, Span, TExpr, TExprKind, TypedQuery};
use crate::store::{ApplyError, InstanceStore};
use crate::value::Value;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuntimeError {
    #[error("division by zero at {span}")]
    DivideByZero { span: Span },
    #[error("{source} at {span}")]
    Apply {
        #[source]
        source: ApplyError,
        span: Span,
    },
}

impl RuntimeError {
    pub fn span(&self) -> Span {
        match self {
            RuntimeError::DivideByZero { span } | RuntimeError::Apply { span, .. } => *span,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RuntimeError::DivideByZero { .. } => "DivideByZero",
            RuntimeError::Apply { .. } => "MorphismError",
        }
    }
}

/// Compiles and runs a typed query.
pub fn execute(q: &TypedQuery, store: &InstanceStore) -> Result<Value, RuntimeError> {
    run_plan(&compile(q), store)
}

/// Runs every stage in order; the last stage's list is the result.
pub fn run_plan(plan: &FoldPlan, store: &InstanceStore) -> Result<Value, RuntimeError> {
    let mut lets: HashMap<String, Vec<Value>> = HashMap::new();
    let mut last = Vec::new();
    for stage in &plan.stages {
        let result = run_stage(stage, store, &lets)?;
        match &stage.binds {
            Some(var) => {
                lets.insert(var.clone(), result);
            }
            None => last = result,
        }
    }
    Ok(Value::List(last))
}

/// Entity ids a collection iterates over: ascending vertex order for graph
/// collections, stored order otherwise.
pub fn collection_values(store: &InstanceStore, name: &str) -> Option<Vec<Value>> {
    let c = store.collection(name)?;
    let ids = match c.graph() {
        Some(g) => g.vertex_list(),
        None => c.ids().to_vec(),
    };
    Some(ids.into_iter().map(Value::Entity).collect())
}

fn run_stage(
    stage: &Stage,
    store: &InstanceStore,
    lets: &HashMap<String, Vec<Value>>,
) -> Result<Vec<Value>, RuntimeError> {
    let owned;
    let elements: &[Value] = match &stage.source {
        Source::Let(v) => &lets[v],
        Source::Collection(c) => {
            owned = collection_values(store, c).expect("typechecked collection");
            &owned
        }
    };
    let mut env = Env { store, lets, params: Vec::new() };
    match &stage.shape {
        Some(shape) => {
            let mut out = Vec::new();
            for x in elements {
                env.params.push((stage.param.as_str(), x.clone()));
                let r = contribute(shape, &mut env, &mut out);
                env.params.pop();
                r?;
            }
            Ok(out)
        }
        None => {
            let mut acc = Value::List(Vec::new());
            for x in elements.iter().rev() {
                env.params.push((stage.param.as_str(), x.clone()));
                env.params.push((stage.acc.as_str(), acc));
                let r = env.eval(&stage.body);
                env.params.truncate(env.params.len() - 2);
                acc = r?;
            }
            match acc {
                Value::List(items) => Ok(items),
                other => unreachable!("combiner produced {other}"),
            }
        }
    }
}

fn contribute<'a>(shape: &'a Shape, env: &mut Env<'a>, out: &mut Vec<Value>) -> Result<(), RuntimeError> {
    match shape {
        Shape::Prepend(e) => out.push(env.eval(e)?),
        Shape::Keep => {}
        Shape::Branch(c, t, o) => {
            let branch = if truthy(&env.eval(c)?) { t } else { o };
            contribute(branch, env, out)?;
        }
    }
    Ok(())
}

fn truthy(v: &Value) -> bool {
    v.as_bool().expect("typechecked condition")
}

struct Env<'a> {
    store: &'a InstanceStore,
    lets: &'a HashMap<String, Vec<Value>>,
    params: Vec<(&'a str, Value)>,
}

impl<'a> Env<'a> {
    fn lookup(&self, name: &str) -> Value {
        if let Some((_, v)) = self.params.iter().rev().find(|(n, _)| *n == name) {
            return v.clone();
        }
        if let Some(v) = self.lets.get(name) {
            return Value::List(v.clone());
        }
        Value::List(collection_values(self.store, name).expect("typechecked variable"))
    }

    fn apply(&self, morphism: &str, arg: &Value, span: Span) -> Result<Value, RuntimeError> {
        let id = arg.as_entity().ok_or_else(|| RuntimeError::Apply {
            source: ApplyError::UnknownEntity {
                morphism: morphism.to_string(),
                entity: arg.to_string(),
            },
            span,
        })?;
        self.store
            .apply_morphism(morphism, id)
            .map_err(|source| RuntimeError::Apply { source, span })
    }

    /// Applies a function argument of `map`/`any`/`all`.
    fn call(&mut self, f: &'a TExpr, x: Value) -> Result<Value, RuntimeError> {
        match &f.kind {
            TExprKind::Lambda(p, body) => {
                self.params.push((p.as_str(), x));
                let r = self.eval(body);
                self.params.pop();
                r
            }
            TExprKind::MorphismRef(m) => self.apply(m, &x, f.span),
            other => unreachable!("not a function: {other:?}"),
        }
    }

    fn eval(&mut self, e: &'a TExpr) -> Result<Value, RuntimeError> {
        Ok(match &e.kind {
            TExprKind::Int(i) => Value::Int(*i),
            TExprKind::Double(d) => Value::Double(*d),
            TExprKind::Str(s) => Value::Str(s.clone()),
            TExprKind::Bool(b) => Value::Bool(*b),
            TExprKind::Nil => Value::List(Vec::new()),
            TExprKind::Var(name, _) => self.lookup(name),
            TExprKind::Tuple(items) => {
                Value::Tuple(items.iter().map(|i| self.eval(i)).collect::<Result<_, _>>()?)
            }
            TExprKind::If(c, t, o) => {
                if truthy(&self.eval(c)?) {
                    self.eval(t)?
                } else {
                    self.eval(o)?
                }
            }
            TExprKind::Cons(item, rest) => {
                let item = self.eval(item)?;
                let Value::List(mut rest) = self.eval(rest)? else {
                    unreachable!("typechecked cons tail")
                };
                rest.insert(0, item);
                Value::List(rest)
            }
            TExprKind::BinOp(BinOp::And, l, r) => Value::Bool(truthy(&self.eval(l)?) && truthy(&self.eval(r)?)),
            TExprKind::BinOp(BinOp::Or, l, r) => Value::Bool(truthy(&self.eval(l)?) || truthy(&self.eval(r)?)),
            TExprKind::BinOp(op, l, r) => {
                let (l, r) = (self.eval(l)?, self.eval(r)?);
                binop(*op, &l, &r, e.span)?
            }
            TExprKind::Apply { morphism, arg, .. } => {
                let arg = self.eval(arg)?;
                self.apply(morphism, &arg, e.span)?
            }
            TExprKind::Builtin(b, args) => self.builtin(*b, args)?,
            TExprKind::Lambda(..) | TExprKind::MorphismRef(_) => unreachable!("functions only appear as arguments"),
        })
    }

    fn builtin(&mut self, b: Builtin, args: &'a [TExpr]) -> Result<Value, RuntimeError> {
        let list = |v: Value| match v {
            Value::List(items) => items,
            Value::Graph(g) => g.vertex_list().into_iter().map(Value::Entity).collect(),
            other => unreachable!("not a list: {other}"),
        };
        Ok(match b {
            Builtin::Elem => {
                let x = self.eval(&args[0])?;
                let xs = list(self.eval(&args[1])?);
                Value::Bool(xs.iter().any(|y| values_equal(&x, y)))
            }
            Builtin::Map => {
                let xs = list(self.eval(&args[1])?);
                let mut out = Vec::with_capacity(xs.len());
                for x in xs {
                    out.push(self.call(&args[0], x)?);
                }
                Value::List(out)
            }
            Builtin::Any | Builtin::All => {
                let want = b == Builtin::Any;
                for x in list(self.eval(&args[1])?) {
                    if truthy(&self.call(&args[0], x)?) == want {
                        return Ok(Value::Bool(want));
                    }
                }
                Value::Bool(!want)
            }
            Builtin::Not => Value::Bool(!truthy(&self.eval(&args[0])?)),
            Builtin::Fst | Builtin::Snd => match self.eval(&args[0])? {
                Value::Tuple(mut items) => items.swap_remove(if b == Builtin::Fst { 0 } else { 1 }),
                other => unreachable!("not a pair: {other}"),
            },
            Builtin::Length => Value::Int(list(self.eval(&args[0])?).len() as i64),
        })
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Double(d) => Some(*d),
        _ => None,
    }
}

/// Equality with int/double promotion.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Double(y)) | (Value::Double(y), Value::Int(x)) => (*x as f64) == *y,
        (Value::Tuple(xs), Value::Tuple(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| values_equal(x, y))
        }
        _ => a == b,
    }
}

fn binop(op: BinOp, l: &Value, r: &Value, span: Span) -> Result<Value, RuntimeError> {
    use Value::{Double, Int};
    Ok(match op {
        BinOp::Eq => Value::Bool(values_equal(l, r)),
        BinOp::Ne => Value::Bool(!values_equal(l, r)),
        BinOp::Gt | BinOp::Lt | BinOp::Ge | BinOp::Le => {
            let ord = match (l, r) {
                (Int(a), Int(b)) => a.partial_cmp(b),
                (Value::Str(a), Value::Str(b)) => a.partial_cmp(b),
                _ => as_f64(l).zip(as_f64(r)).and_then(|(a, b)| a.partial_cmp(&b)),
            };
            Value::Bool(match (op, ord) {
                (_, None) => false,
                (BinOp::Gt, Some(o)) => o == Ordering::Greater,
                (BinOp::Lt, Some(o)) => o == Ordering::Less,
                (BinOp::Ge, Some(o)) => o != Ordering::Less,
                (_, Some(o)) => o != Ordering::Greater,
            })
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => match (l, r) {
            (Int(a), Int(b)) => Int(match op {
                BinOp::Add => a.wrapping_add(*b),
                BinOp::Sub => a.wrapping_sub(*b),
                BinOp::Mul => a.wrapping_mul(*b),
                _ if *b == 0 => return Err(RuntimeError::DivideByZero { span }),
                _ => a.wrapping_div(*b),
            }),
            _ => {
                let (a, b) = (as_f64(l).expect("numeric"), as_f64(r).expect("numeric"));
                Double(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    _ if b == 0.0 => return Err(RuntimeError::DivideByZero { span }),
                    _ => a / b,
                })
            }
        },
        BinOp::And | BinOp::Or => unreachable!("short-circuited"),
    })
}
