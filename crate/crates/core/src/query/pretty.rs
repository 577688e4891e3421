//! Canonical text for queries. `parse(pretty(q)) == q` for every valid AST.

use super::ast::{Expr, ExprKind, LambdaExpr, QueryAst};
use crate::value::format_double;

pub fn pretty_print(q: &QueryAst) -> String {
    let mut out = String::new();
    write_query(q, &mut out);
    out
}

fn write_query(q: &QueryAst, out: &mut String) {
    match q {
        QueryAst::Let {
            var, bound, body, ..
        } => {
            out.push_str("LET ");
            out.push_str(var);
            out.push_str(" BE\n");
            write_query(bound, out);
            out.push_str("\nIN\n");
            write_query(body, out);
        }
        QueryAst::Block(b) => {
            out.push_str("QUERY ");
            out.push_str(&pretty_lambda(&b.lambda));
            out.push_str("\nFROM ");
            out.push_str(&b.source);
            out.push_str(" TO ");
            out.push_str(b.model.keyword());
            for alt in &b.alternatives {
                out.push('/');
                out.push_str(alt.keyword());
            }
        }
    }
}

pub fn pretty_lambda(l: &LambdaExpr) -> String {
    format!("(\\{} -> {})", l.params.join(" "), pretty_expr(&l.body))
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, 0, &mut out);
    out
}

const ATOM: u8 = 7;
const APP: u8 = 6;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::If { .. } => 0,
        ExprKind::BinOp { op, .. } => op.precedence(),
        ExprKind::App { .. } | ExprKind::Cons { .. } => APP,
        _ => ATOM,
    }
}

/// Writes `e` so that it parses back at a position requiring at least `min`.
fn write_expr(e: &Expr, min: u8, out: &mut String) {
    if level(e) < min {
        out.push('(');
        write_expr(e, 0, out);
        out.push(')');
        return;
    }
    match &e.kind {
        ExprKind::If {
            cond,
            then,
            otherwise,
        } => {
            out.push_str("if ");
            write_expr(cond, 0, out);
            out.push_str(" then ");
            write_expr(then, 0, out);
            out.push_str(" else ");
            write_expr(otherwise, 0, out);
        }
        ExprKind::BinOp { op, left, right } => {
            let p = op.precedence();
            // Comparisons are non-associative: both sides one level up.
            let left_min = if op.is_comparison() { p + 1 } else { p };
            write_expr(left, left_min, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(right, p + 1, out);
        }
        ExprKind::App { head, args } => {
            out.push_str(head);
            for a in args {
                out.push(' ');
                write_expr(a, ATOM, out);
            }
        }
        ExprKind::Cons { item, rest } => {
            out.push_str("cons ");
            write_expr(item, ATOM, out);
            if let Some(rest) = rest {
                out.push(' ');
                write_expr(rest, ATOM, out);
            }
        }
        ExprKind::Var { name } => out.push_str(name),
        ExprKind::Int { value } => out.push_str(&value.to_string()),
        ExprKind::Double { value } => out.push_str(&format_double(*value)),
        ExprKind::Str { value } => {
            out.push('"');
            for c in value.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
        ExprKind::Bool { value } => out.push_str(if *value { "True" } else { "False" }),
        ExprKind::Nil => out.push_str("nil"),
        ExprKind::Tuple { items } => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(item, 0, out);
            }
            out.push(')');
        }
        ExprKind::Lambda { param, body } => {
            out.push_str("(\\");
            out.push_str(param);
            out.push_str(" -> ");
            write_expr(body, 0, out);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::ast::BinOp;
    use crate::query::parser::{parse, parse_expr};

    #[test]
    fn parenthesizes_by_precedence() {
        let e = Expr::binop(
            BinOp::Mul,
            Expr::binop(BinOp::Add, Expr::var("a"), Expr::var("b")),
            Expr::var("c"),
        );
        assert_eq!(pretty_expr(&e), "(a + b) * c");
        let e = Expr::binop(
            BinOp::Sub,
            Expr::var("a"),
            Expr::binop(BinOp::Sub, Expr::var("b"), Expr::var("c")),
        );
        assert_eq!(pretty_expr(&e), "a - (b - c)");
        assert_eq!(parse_expr(&pretty_expr(&e)).unwrap(), e);
    }

    #[test]
    fn nested_comparison_and_if() {
        let e = Expr::binop(
            BinOp::Eq,
            Expr::binop(BinOp::Lt, Expr::var("a"), Expr::var("b")),
            Expr::if_(Expr::var("c"), Expr::int(1), Expr::int(2)),
        );
        let text = pretty_expr(&e);
        assert_eq!(text, "(a < b) == (if c then 1 else 2)");
        assert_eq!(parse_expr(&text).unwrap(), e);
    }

    #[test]
    fn literals() {
        let e = Expr::tuple(vec![
            Expr::string("a\"b\\c\nd"),
            Expr::new(ExprKind::Double { value: 1e20 }),
            Expr::new(ExprKind::Bool { value: false }),
        ]);
        assert_eq!(parse_expr(&pretty_expr(&e)).unwrap(), e);
    }

    #[test]
    fn query_layout() {
        let q = parse("LET t BE QUERY (\\x xs -> cons x xs) FROM a TO xml IN QUERY (\\y -> nil) FROM t TO graph/xml").unwrap();
        assert_eq!(
            pretty_print(&q),
            "LET t BE\nQUERY (\\x xs -> cons x xs)\nFROM a TO xml\nIN\nQUERY (\\y -> nil)\nFROM t TO graph/xml"
        );
    }
}
