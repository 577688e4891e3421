//! Seeded random generators shared by the integration suites.
#![allow(dead_code)]

use std::path::PathBuf;

use multicat_core::category::{Cardinality, CompositeEntry, ObjectKind, PrimitiveType, SchemaCategory};
use multicat_core::graph::GraphTerm;
use multicat_core::query::{BinOp, Block, Expr, ExprKind, LambdaExpr, OutputModel, QueryAst, Span};
use multicat_core::store::{load_dataset, InstanceStore};
use multicat_core::value::Value;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> InstanceStore {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../datasets").join(name);
    load_dataset(&dir).expect("fixture loads")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

// ---- graph terms ----

pub fn graph_term(rng: &mut impl Rng, depth: u32) -> GraphTerm {
    let leaf = depth == 0 || rng.gen_ratio(1, 4);
    if leaf {
        return if rng.gen_ratio(1, 6) {
            GraphTerm::Empty
        } else {
            GraphTerm::vertex(format!("v{}", rng.gen_range(0..6)))
        };
    }
    let l = graph_term(rng, depth - 1);
    let r = graph_term(rng, depth - 1);
    if rng.gen_bool(0.5) {
        GraphTerm::overlay(l, r)
    } else {
        GraphTerm::connect(l, r)
    }
}

// ---- arbitrary (untyped) syntax trees ----

const NAMES: [&str; 8] = ["x", "xs", "acc", "creditLimit", "f", "y'", "map", "t_1"];
const OPS: [BinOp; 12] = [
    BinOp::Add,
    BinOp::Sub,
    BinOp::Mul,
    BinOp::Div,
    BinOp::Gt,
    BinOp::Lt,
    BinOp::Ge,
    BinOp::Le,
    BinOp::Eq,
    BinOp::Ne,
    BinOp::And,
    BinOp::Or,
];

fn name(rng: &mut impl Rng) -> String {
    NAMES.choose(rng).unwrap().to_string()
}

pub fn any_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_ratio(1, 4) {
        return match rng.gen_range(0..7) {
            0 => Expr::var(name(rng)),
            1 => Expr::int(rng.gen_range(0..100_000)),
            2 => Expr::new(ExprKind::Double {
                value: rng.gen_range(0..4000) as f64 / 8.0,
            }),
            3 => {
                let pool = ["Book", "", "a\"b", "tab\there", "back\\slash", "line\nbreak", "é"];
                Expr::string(*pool.choose(rng).unwrap())
            }
            4 => Expr::new(ExprKind::Bool { value: rng.gen() }),
            5 => Expr::nil(),
            _ => Expr::var(name(rng)),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..7) {
        0 => Expr::if_(any_expr(rng, d), any_expr(rng, d), any_expr(rng, d)),
        1 => {
            let n = rng.gen_range(1..4);
            Expr::app(name(rng), (0..n).map(|_| any_expr(rng, d)).collect())
        }
        2 => Expr::binop(*OPS.choose(rng).unwrap(), any_expr(rng, d), any_expr(rng, d)),
        3 => {
            let rest = rng.gen_bool(0.5).then(|| any_expr(rng, d));
            Expr::cons(any_expr(rng, d), rest)
        }
        4 => {
            let n = rng.gen_range(2..4);
            Expr::tuple((0..n).map(|_| any_expr(rng, d)).collect())
        }
        5 => Expr::lambda(name(rng), any_expr(rng, d)),
        _ => any_expr(rng, d),
    }
}

fn models(rng: &mut impl Rng) -> (OutputModel, Vec<OutputModel>) {
    let mut all = OutputModel::ALL.to_vec();
    all.shuffle(rng);
    let n = rng.gen_range(1..=all.len());
    let first = all[0];
    (first, all[1..n].to_vec())
}

fn block(params: Vec<String>, body: Expr, source: String, rng: &mut impl Rng) -> QueryAst {
    let (model, alternatives) = models(rng);
    QueryAst::Block(Block {
        lambda: LambdaExpr {
            params,
            body,
            span: Span::default(),
        },
        source,
        model,
        alternatives,
        source_span: Span::default(),
    })
}

pub fn any_query(rng: &mut impl Rng) -> QueryAst {
    let params = if rng.gen_bool(0.5) {
        vec!["x".to_string()]
    } else {
        vec!["x".to_string(), "acc".to_string()]
    };
    let body = any_expr(rng, 4);
    let q = block(params, body, name(rng), rng);
    if rng.gen_ratio(1, 3) {
        let bound = any_query(rng);
        QueryAst::let_(name(rng), bound, q)
    } else {
        q
    }
}

// ---- well-typed queries over a store ----

struct Scope<'s> {
    store: &'s InstanceStore,
    /// LET variables in scope with their element object.
    lets: Vec<(String, String)>,
    fresh: usize,
}

impl Scope<'_> {
    fn schema(&self) -> &SchemaCategory {
        self.store.schema()
    }

    fn fresh(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}{}", self.fresh)
    }

    fn collection_of(&self, object: &str) -> Option<String> {
        self.store.collection_for_object(object).map(|c| c.name.clone())
    }

    fn proper(&self) -> impl Iterator<Item = &multicat_core::category::Morphism> {
        self.schema().morphisms().iter().filter(|m| !m.is_identity())
    }

    fn prim_of(&self, m: &multicat_core::category::Morphism) -> Option<PrimitiveType> {
        self.schema().object(&m.codomain).and_then(|o| o.primitive_type)
    }

    fn attrs(&self, object: &str, pred: impl Fn(PrimitiveType) -> bool) -> Vec<String> {
        self.proper()
            .filter(|m| m.domain == object && m.cardinality == Cardinality::One)
            .filter(|m| self.prim_of(m).map_or(false, &pred))
            .map(|m| m.id.clone())
            .collect()
    }

    fn links(&self, object: &str, card: Cardinality) -> Vec<(String, String)> {
        self.proper()
            .filter(|m| m.domain == object && m.cardinality == card)
            .filter(|m| self.schema().object(&m.codomain).map_or(false, |o| o.kind == ObjectKind::Entity))
            .map(|m| (m.id.clone(), m.codomain.clone()))
            .collect()
    }

    /// One-valued entity morphisms into `object`.
    fn pointing_into(&self, object: &str) -> Vec<(String, String)> {
        self.proper()
            .filter(|m| m.codomain == object && m.cardinality == Cardinality::One)
            .filter(|m| self.schema().object(&m.domain).map_or(false, |o| o.kind == ObjectKind::Entity))
            .map(|m| (m.id.clone(), m.domain.clone()))
            .collect()
    }

    /// Some existing value of a string attribute, to make predicates selective.
    fn sample_string(&self, rng: &mut impl Rng, object: &str, attr: &str) -> String {
        let ids = self.store.collection_for_object(object).map(|c| c.ids().to_vec()).unwrap_or_default();
        match ids.choose(rng).map(|id| self.store.apply_morphism(attr, id)) {
            Some(Ok(Value::Str(s))) if rng.gen_ratio(4, 5) => s,
            _ => "nobody".to_string(),
        }
    }

    fn apply(&self, rng: &mut impl Rng, m: &str, arg: Expr) -> Expr {
        let codomain = self.schema().morphism(m).unwrap().codomain.clone();
        let mut args = vec![arg];
        if let Some(c) = self.collection_of(&codomain) {
            if rng.gen_ratio(1, 3) {
                args.push(Expr::var(c));
            }
        }
        Expr::app(m, args)
    }

    fn numeric_term(&mut self, rng: &mut impl Rng, object: &str, x: &Expr) -> Option<Expr> {
        let nums = self.attrs(object, |p| matches!(p, PrimitiveType::Int | PrimitiveType::Double));
        let attr = nums.choose(rng)?.clone();
        let base = Expr::app(attr, vec![x.clone()]);
        Some(match rng.gen_range(0..4) {
            0 => Expr::binop(BinOp::Mul, base, Expr::int(rng.gen_range(1..4))),
            1 => Expr::binop(BinOp::Div, base, Expr::int(rng.gen_range(1..3))),
            2 => Expr::binop(BinOp::Add, base, Expr::new(ExprKind::Double { value: 0.5 })),
            _ => base,
        })
    }

    fn predicate(&mut self, rng: &mut impl Rng, object: &str, x: &Expr, depth: u32) -> Expr {
        for _ in 0..8 {
            if let Some(p) = self.try_predicate(rng, object, x, depth) {
                return p;
            }
        }
        Expr::new(ExprKind::Bool { value: true })
    }

    fn try_predicate(&mut self, rng: &mut impl Rng, object: &str, x: &Expr, depth: u32) -> Option<Expr> {
        let cmp = [BinOp::Gt, BinOp::Lt, BinOp::Ge, BinOp::Le, BinOp::Eq, BinOp::Ne];
        Some(match rng.gen_range(0..9) {
            0 => {
                let t = self.numeric_term(rng, object, x)?;
                let k = Expr::int(rng.gen_range(0..6000));
                Expr::binop(*cmp.choose(rng).unwrap(), t, k)
            }
            1 => {
                let attr = self.attrs(object, |p| p == PrimitiveType::String).choose(rng)?.clone();
                let lit = self.sample_string(rng, object, &attr);
                let op = if rng.gen_bool(0.7) { BinOp::Eq } else { BinOp::Ne };
                Expr::binop(op, Expr::app(attr, vec![x.clone()]), Expr::string(lit))
            }
            2 => {
                let candidates: Vec<&(String, String)> = self.lets.iter().filter(|(_, o)| o == object).collect();
                let var = candidates.choose(rng)?.0.clone();
                Expr::app("elem", vec![x.clone(), Expr::var(var)])
            }
            3 => {
                // some element elsewhere points at x
                let (m, dom) = self.pointing_into(object).choose(rng)?.clone();
                let source = match self.lets.iter().filter(|(_, o)| *o == dom).collect::<Vec<_>>().choose(rng) {
                    Some((v, _)) if rng.gen_bool(0.5) => v.clone(),
                    _ => self.collection_of(&dom)?,
                };
                let y = self.fresh("y");
                let body = Expr::binop(BinOp::Eq, self.apply(rng, &m, Expr::var(&y)), x.clone());
                let quant = if rng.gen_ratio(4, 5) { "any" } else { "all" };
                Expr::app(quant, vec![Expr::lambda(y, body), Expr::var(source)])
            }
            4 => {
                let (m, target) = self.links(object, Cardinality::Many).choose(rng)?.clone();
                let attr = self.attrs(&target, |p| p == PrimitiveType::String).choose(rng)?.clone();
                let lit = self.sample_string(rng, &target, &attr);
                let mapped = Expr::app("map", vec![Expr::var(attr), Expr::app(m, vec![x.clone()])]);
                Expr::app("elem", vec![Expr::string(lit), mapped])
            }
            5 => {
                let (m, target) = self.links(object, Cardinality::Many).choose(rng)?.clone();
                let p = self.fresh("p");
                let inner = self.predicate(rng, &target, &Expr::var(&p), depth.saturating_sub(1));
                let quant = if rng.gen_bool(0.5) { "any" } else { "all" };
                Expr::app(quant, vec![Expr::lambda(p, inner), Expr::app(m, vec![x.clone()])])
            }
            6 => {
                let (m, target) = self.links(object, Cardinality::One).choose(rng)?.clone();
                let via = self.apply(rng, &m, x.clone());
                if depth == 0 {
                    return None;
                }
                self.try_predicate(rng, &target, &via, depth - 1)?
            }
            7 if depth > 0 => {
                let op = if rng.gen_bool(0.5) { BinOp::And } else { BinOp::Or };
                let l = self.predicate(rng, object, x, depth - 1);
                let r = self.predicate(rng, object, x, depth - 1);
                Expr::binop(op, l, r)
            }
            8 if depth > 0 => Expr::app("not", vec![self.predicate(rng, object, x, depth - 1)]),
            _ => return None,
        })
    }

    /// An expression to put in the result, and the entity object it denotes if any.
    fn emitted(&mut self, rng: &mut impl Rng, object: &str, x: &Expr) -> (Expr, Option<String>) {
        match rng.gen_range(0..5) {
            0 | 1 => (x.clone(), Some(object.to_string())),
            2 => match self.links(object, Cardinality::One).choose(rng).cloned() {
                Some((m, target)) => (self.apply(rng, &m, x.clone()), Some(target)),
                None => (x.clone(), Some(object.to_string())),
            },
            _ => {
                let n = rng.gen_range(2..4);
                let mut items = Vec::new();
                for i in 0..n {
                    let item = if i == 0 && rng.gen_bool(0.5) {
                        Some(x.clone())
                    } else if rng.gen_bool(0.5) {
                        self.numeric_term(rng, object, x)
                    } else {
                        let attrs = self.attrs(object, |_| true);
                        attrs.choose(rng).map(|a| Expr::app(a.clone(), vec![x.clone()]))
                    };
                    items.push(item.unwrap_or_else(|| x.clone()));
                }
                (Expr::tuple(items), None)
            }
        }
    }

    /// A block over a random source; returns it with the entity object of
    /// its elements when they are entities.
    fn block(&mut self, rng: &mut impl Rng, entity_result: bool) -> (QueryAst, Option<String>) {
        let (source, object) = match self.lets.choose(rng) {
            Some((v, o)) if rng.gen_ratio(1, 2) => (v.clone(), o.clone()),
            _ => {
                let cs: Vec<_> = self.store.collections().collect();
                let c = cs.choose(rng).unwrap();
                (c.name.clone(), c.element_object.clone())
            }
        };
        let x = self.fresh("x");
        let xe = Expr::var(&x);
        let (emit, emitted_obj) = if entity_result {
            loop {
                let (e, o) = self.emitted(rng, &object, &xe);
                if o.is_some() {
                    break (e, o);
                }
            }
        } else {
            self.emitted(rng, &object, &xe)
        };
        let pred = self.predicate(rng, &object, &xe, 2);
        let (params, body) = match rng.gen_range(0..5) {
            0 => (vec![x], Expr::cons(emit, None)),
            1 | 2 => (vec![x], Expr::if_(pred, Expr::cons(emit, None), Expr::nil())),
            3 => {
                let acc = self.fresh("acc");
                let body = Expr::if_(pred, Expr::cons(emit, Some(Expr::var(&acc))), Expr::var(&acc));
                (vec![x, acc], body)
            }
            _ => {
                // accumulator inspected: exercises the general fold path
                let acc = self.fresh("acc");
                let guard = Expr::binop(
                    BinOp::Lt,
                    Expr::app("length", vec![Expr::var(&acc)]),
                    Expr::int(rng.gen_range(1..4)),
                );
                let cond = Expr::binop(BinOp::Or, guard, pred);
                let body = Expr::if_(cond, Expr::cons(emit, Some(Expr::var(&acc))), Expr::var(&acc));
                (vec![x, acc], body)
            }
        };
        (block(params, body, source, rng), emitted_obj)
    }
}

/// A random query that typechecks against `store`: filters, tuple maps,
/// elem/any predicates and up to two LET bindings over any collection.
pub fn well_typed_query(rng: &mut impl Rng, store: &InstanceStore) -> QueryAst {
    let mut scope = Scope {
        store,
        lets: Vec::new(),
        fresh: 0,
    };
    let n_lets = rng.gen_range(0..=2);
    let mut bindings = Vec::new();
    for _ in 0..n_lets {
        let (q, obj) = scope.block(rng, true);
        let var = scope.fresh("t");
        scope.lets.push((var.clone(), obj.expect("entity result")));
        bindings.push((var, q));
    }
    let (mut q, _) = scope.block(rng, false);
    for (var, bound) in bindings.into_iter().rev() {
        q = QueryAst::let_(var, bound, q);
    }
    q
}

// ---- schema mutations ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    DroppedComposite,
    BrokenIdentity,
    MisroutedComposite,
}

/// Applies one mutation of the given kind to a random table entry.
pub fn mutate_schema(rng: &mut impl Rng, cat: &SchemaCategory, kind: Mutation) -> SchemaCategory {
    let (objects, morphisms, mut composites) = cat.clone().into_parts();
    let is_id = |id: &str| cat.morphism(id).map_or(false, |m| m.is_identity());
    let other_than = |rng: &mut dyn rand::RngCore, avoid: &str| loop {
        let m = morphisms.choose(rng).unwrap();
        if m.id != avoid {
            return m.id.clone();
        }
    };
    match kind {
        Mutation::DroppedComposite => {
            let i = rng.gen_range(0..composites.len());
            composites.remove(i);
        }
        Mutation::BrokenIdentity => {
            let candidates: Vec<usize> = (0..composites.len())
                .filter(|&i| is_id(&composites[i].outer) || is_id(&composites[i].inner))
                .collect();
            let i = *candidates.choose(rng).unwrap();
            let wrong = other_than(rng, &composites[i].result);
            composites[i].result = wrong;
        }
        Mutation::MisroutedComposite => {
            let candidates: Vec<usize> = (0..composites.len())
                .filter(|&i| !is_id(&composites[i].outer) && !is_id(&composites[i].inner))
                .collect();
            let i = *candidates.choose(rng).unwrap();
            let wrong = other_than(rng, &composites[i].result);
            composites[i].result = wrong;
        }
    }
    SchemaCategory::new(objects, morphisms, composites.into_iter().map(|e: CompositeEntry| e)).expect("structurally valid")
}

// ---- functor corruptions ----

/// A single evaluator entry to overwrite: (morphism, entity, new value).
pub type Corruption = (String, String, Value);

/// Picks a law-relevant entry and a replacement value that differs from the
/// stored one: an identity entry, an entry of a composite's own table, or a
/// value outside the codomain of any table.
pub fn corruption(rng: &mut impl Rng, store: &InstanceStore) -> Corruption {
    let schema = store.schema();
    loop {
        let kind = rng.gen_range(0..3);
        let m = match kind {
            0 => schema.morphisms().iter().filter(|m| m.is_identity()).collect::<Vec<_>>(),
            1 => schema.proper_composites().filter_map(|e| schema.morphism(&e.result)).collect(),
            _ => schema.morphisms().iter().filter(|m| !m.is_identity()).collect(),
        }
        .choose(rng)
        .copied();
        let Some(m) = m else { continue };
        let Some(ev) = store.evaluator(&m.id) else { continue };
        let mut keys: Vec<&String> = ev.table.keys().collect();
        keys.sort();
        let Some(entity) = keys.choose(rng).map(|k| k.to_string()) else { continue };
        let current = &ev.table[&entity];
        let replacement = if kind == 2 {
            // outside the codomain
            match schema.object(&m.codomain).map(|o| o.kind) {
                Some(ObjectKind::Entity) if m.cardinality == Cardinality::One => Value::entity("missing-entity"),
                Some(ObjectKind::Entity) => Value::List(vec![Value::entity("missing-entity")]),
                _ => Value::List(vec![]),
            }
        } else {
            let ids = store.collection_for_object(&m.codomain).map(|c| c.ids().to_vec()).unwrap_or_default();
            match ids.iter().find(|id| Value::entity(id.as_str()) != *current) {
                Some(other) => Value::entity(other.as_str()),
                None => continue,
            }
        };
        return (m.id.clone(), entity, replacement);
    }
}
