//! Naive interpreter over the typed tree.
//!
//! Folds are evaluated by direct structural recursion, one-parameter blocks
//! are interpreted from their contributions without rewriting, and graph
//! collections are walked by matching on the term. It shares no evaluation
//! code with the plan executor, so agreement between the two is evidence
//! that the compilation and the fast path preserve meaning.

use std::collections::BTreeSet;

use super::RuntimeError;
use crate::graph::GraphTerm;
use crate::query::{BinOp, Builtin, Combiner, Contribution, Source, TExpr, TExprKind, TypedBlock, TypedQuery};
use crate::store::InstanceStore;
use crate::value::Value;

pub fn interpret(q: &TypedQuery, store: &InstanceStore) -> Result<Value, RuntimeError> {
    query(q, store, &[]).map(Value::List)
}

type Scope = Vec<(String, Value)>;

fn query(q: &TypedQuery, store: &InstanceStore, lets: &[(String, Vec<Value>)]) -> Result<Vec<Value>, RuntimeError> {
    match q {
        TypedQuery::Let { var, bound, body } => {
            let v = query(bound, store, lets)?;
            let mut inner = lets.to_vec();
            inner.push((var.clone(), v));
            query(body, store, &inner)
        }
        TypedQuery::Block(b) => {
            let elements = match &b.source {
                Source::Let(v) => lets.iter().rev().find(|(n, _)| n == v).expect("bound").1.clone(),
                Source::Collection(c) => elements_of(store, c),
            };
            let scope: Scope = lets.iter().map(|(n, v)| (n.clone(), Value::List(v.clone()))).collect();
            fold_right(b, &elements, store, &scope)
        }
    }
}

fn walk_vertices(g: &GraphTerm, out: &mut BTreeSet<String>) {
    match g {
        GraphTerm::Empty => {}
        GraphTerm::Vertex(v) => {
            out.insert(v.clone());
        }
        GraphTerm::Overlay(l, r) | GraphTerm::Connect(l, r) => {
            walk_vertices(l, out);
            walk_vertices(r, out);
        }
    }
}

fn elements_of(store: &InstanceStore, name: &str) -> Vec<Value> {
    let c = store.collection(name).expect("typechecked collection");
    match c.graph() {
        Some(g) => {
            let mut vs = BTreeSet::new();
            walk_vertices(g, &mut vs);
            vs.into_iter().map(Value::Entity).collect()
        }
        None => c.ids().iter().cloned().map(Value::Entity).collect(),
    }
}

fn fold_right(b: &TypedBlock, xs: &[Value], store: &InstanceStore, scope: &Scope) -> Result<Vec<Value>, RuntimeError> {
    let Some((x, rest)) = xs.split_first() else {
        return Ok(Vec::new());
    };
    let tail = fold_right(b, rest, store, scope)?;
    let mut scope = scope.clone();
    match &b.combiner {
        Combiner::Unary { param, body } => {
            scope.push((param.clone(), x.clone()));
            let mut out = contribution(body, store, &scope)?;
            out.extend(tail);
            Ok(out)
        }
        Combiner::Binary { param, acc, body } => {
            scope.push((param.clone(), x.clone()));
            scope.push((acc.clone(), Value::List(tail)));
            match eval(body, store, &scope)? {
                Value::List(items) => Ok(items),
                other => panic!("combiner returned {other}"),
            }
        }
    }
}

fn contribution(c: &Contribution, store: &InstanceStore, scope: &Scope) -> Result<Vec<Value>, RuntimeError> {
    match c {
        Contribution::Emit(e) => Ok(vec![eval(e, store, scope)?]),
        Contribution::Keep => Ok(Vec::new()),
        Contribution::Branch { cond, then, otherwise } => {
            if eval(cond, store, scope)? == Value::Bool(true) {
                contribution(then, store, scope)
            } else {
                contribution(otherwise, store, scope)
            }
        }
    }
}

fn items(v: Value) -> Vec<Value> {
    match v {
        Value::List(xs) => xs,
        other => panic!("expected a list, got {other}"),
    }
}

fn apply_fn(f: &TExpr, x: Value, store: &InstanceStore, scope: &Scope) -> Result<Value, RuntimeError> {
    match &f.kind {
        TExprKind::Lambda(p, body) => {
            let mut scope = scope.clone();
            scope.push((p.clone(), x));
            eval(body, store, &scope)
        }
        TExprKind::MorphismRef(m) => morphism(m, &x, store, f),
        _ => panic!("not a function"),
    }
}

fn morphism(m: &str, x: &Value, store: &InstanceStore, at: &TExpr) -> Result<Value, RuntimeError> {
    let Value::Entity(id) = x else {
        panic!("morphism applied to {x}")
    };
    store
        .apply_morphism(m, id)
        .map_err(|source| RuntimeError::Apply { source, span: at.span })
}

/// Structural equality where ints and doubles compare by numeric value.
fn same(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(i), Value::Double(d)) | (Value::Double(d), Value::Int(i)) => *d == *i as f64,
        (Value::Tuple(xs), Value::Tuple(ys)) => xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| same(x, y)),
        _ => a == b,
    }
}

fn num(v: &Value) -> f64 {
    match v {
        Value::Int(i) => *i as f64,
        Value::Double(d) => *d,
        other => panic!("not a number: {other}"),
    }
}

fn eval(e: &TExpr, store: &InstanceStore, scope: &Scope) -> Result<Value, RuntimeError> {
    let ev = |e: &TExpr| eval(e, store, scope);
    Ok(match &e.kind {
        TExprKind::Int(i) => Value::Int(*i),
        TExprKind::Double(d) => Value::Double(*d),
        TExprKind::Str(s) => Value::Str(s.clone()),
        TExprKind::Bool(b) => Value::Bool(*b),
        TExprKind::Nil => Value::List(vec![]),
        TExprKind::Var(name, _) => match scope.iter().rev().find(|(n, _)| n == name) {
            Some((_, v)) => v.clone(),
            None => Value::List(elements_of(store, name)),
        },
        TExprKind::Tuple(xs) => {
            let mut out = vec![];
            for x in xs {
                out.push(ev(x)?);
            }
            Value::Tuple(out)
        }
        TExprKind::If(c, t, o) => {
            if ev(c)? == Value::Bool(true) {
                ev(t)?
            } else {
                ev(o)?
            }
        }
        TExprKind::Cons(x, rest) => {
            let mut out = vec![ev(x)?];
            out.extend(items(ev(rest)?));
            Value::List(out)
        }
        TExprKind::Apply { morphism: m, arg, .. } => morphism(m, &ev(arg)?, store, e)?,
        TExprKind::BinOp(op, l, r) => {
            let lv = ev(l)?;
            match op {
                BinOp::And => {
                    if lv == Value::Bool(false) {
                        return Ok(lv);
                    }
                    return ev(r);
                }
                BinOp::Or => {
                    if lv == Value::Bool(true) {
                        return Ok(lv);
                    }
                    return ev(r);
                }
                _ => {}
            }
            let rv = ev(r)?;
            arith_or_compare(*op, lv, rv, e)?
        }
        TExprKind::Builtin(b, args) => match b {
            Builtin::Elem => {
                let x = ev(&args[0])?;
                Value::Bool(items(ev(&args[1])?).iter().any(|y| same(&x, y)))
            }
            Builtin::Map => {
                let mut out = vec![];
                for x in items(ev(&args[1])?) {
                    out.push(apply_fn(&args[0], x, store, scope)?);
                }
                Value::List(out)
            }
            Builtin::Any => {
                let mut found = false;
                for x in items(ev(&args[1])?) {
                    if apply_fn(&args[0], x, store, scope)? == Value::Bool(true) {
                        found = true;
                        break;
                    }
                }
                Value::Bool(found)
            }
            Builtin::All => {
                let mut ok = true;
                for x in items(ev(&args[1])?) {
                    if apply_fn(&args[0], x, store, scope)? == Value::Bool(false) {
                        ok = false;
                        break;
                    }
                }
                Value::Bool(ok)
            }
            Builtin::Not => Value::Bool(ev(&args[0])? == Value::Bool(false)),
            Builtin::Fst | Builtin::Snd => {
                let Value::Tuple(parts) = ev(&args[0])? else { panic!("not a pair") };
                parts[usize::from(*b == Builtin::Snd)].clone()
            }
            Builtin::Length => Value::Int(items(ev(&args[0])?).len() as i64),
        },
        TExprKind::Lambda(..) | TExprKind::MorphismRef(_) => panic!("bare function value"),
    })
}

fn arith_or_compare(op: BinOp, l: Value, r: Value, at: &TExpr) -> Result<Value, RuntimeError> {
    let zero = || RuntimeError::DivideByZero { span: at.span };
    let out = match op {
        BinOp::Eq => Value::Bool(same(&l, &r)),
        BinOp::Ne => Value::Bool(!same(&l, &r)),
        BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => {
            let (lt, eq) = match (&l, &r) {
                (Value::Str(a), Value::Str(b)) => (a < b, a == b),
                (Value::Int(a), Value::Int(b)) => (a < b, a == b),
                _ => (num(&l) < num(&r), num(&l) == num(&r)),
            };
            let gt = match (&l, &r) {
                (Value::Str(a), Value::Str(b)) => a > b,
                (Value::Int(a), Value::Int(b)) => a > b,
                _ => num(&l) > num(&r),
            };
            Value::Bool(match op {
                BinOp::Lt => lt,
                BinOp::Gt => gt,
                BinOp::Le => lt || eq,
                _ => gt || eq,
            })
        }
        _ => match (&l, &r) {
            (Value::Int(a), Value::Int(b)) => {
                let (a, b) = (*a, *b);
                Value::Int(match op {
                    BinOp::Add => a.wrapping_add(b),
                    BinOp::Sub => a.wrapping_sub(b),
                    BinOp::Mul => a.wrapping_mul(b),
                    _ => {
                        if b == 0 {
                            return Err(zero());
                        }
                        a.wrapping_div(b)
                    }
                })
            }
            _ => {
                let (a, b) = (num(&l), num(&r));
                Value::Double(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    _ => {
                        if b == 0.0 {
                            return Err(zero());
                        }
                        a / b
                    }
                })
            }
        },
    };
    Ok(out)
}
