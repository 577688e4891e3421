//! Recursive-descent parser for the query language.
//!
//! ```text
//! query   = "LET" ident "BE" query "IN" query | block ;
//! block   = "QUERY" lambda "FROM" ident "TO" model { "/" model } ;
//! model   = "graph" | "algebraic graph" | "relational" | "xml" ;
//! lambda  = "(" "\" ident [ident] "->" expr ")" ;
//! expr    = "if" expr "then" expr "else" expr | orExpr ;
//! orExpr  = andExpr { "||" andExpr } ;  andExpr = cmpExpr { "&&" cmpExpr } ;
//! cmpExpr = addExpr [ cmpOp addExpr ] ;
//! addExpr = mulExpr { ("+"|"-") mulExpr } ;  mulExpr = appExpr { ("*"|"/") appExpr } ;
//! appExpr = atom { atom } ;
//! atom    = ident | literal | "(" expr { "," expr } ")" | "(" "\" ident "->" expr ")"
//!         | "cons" | "nil" ;
//! ```

use super::ast::{BinOp, Block, Expr, ExprKind, LambdaExpr, OutputModel, QueryAst, Span};
use super::error::QueryError;
use super::lexer::{tokenize, Tok, Token};

pub fn parse(text: &str) -> Result<QueryAst, QueryError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let q = p.query()?;
    p.expect_eof()?;
    Ok(q)
}

/// Parses a standalone expression (used by tests and the REPL).
pub fn parse_expr(text: &str) -> Result<Expr, QueryError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, QueryError> {
        Err(QueryError::Syntax {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, QueryError> {
        if self.peek() == &tok {
            Ok(self.bump().span)
        } else {
            self.error(&[&format!("`{}`", tok.text())])
        }
    }

    fn expect_eof(&self) -> Result<(), QueryError> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    fn ident(&mut self) -> Result<(String, Span), QueryError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok((name, span))
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn query(&mut self) -> Result<QueryAst, QueryError> {
        match self.peek() {
            Tok::Let => {
                let span = self.bump().span;
                let (var, _) = self.ident()?;
                self.expect(Tok::Be)?;
                let bound = self.query()?;
                self.expect(Tok::In)?;
                let body = self.query()?;
                Ok(QueryAst::Let {
                    var,
                    bound: Box::new(bound),
                    body: Box::new(body),
                    span,
                })
            }
            Tok::Query => self.block().map(QueryAst::Block),
            _ => self.error(&["`LET`", "`QUERY`"]),
        }
    }

    fn block(&mut self) -> Result<Block, QueryError> {
        self.expect(Tok::Query)?;
        let lambda = self.block_lambda()?;
        self.expect(Tok::From)?;
        let (source, source_span) = self.ident()?;
        self.expect(Tok::To)?;
        let model = self.model()?;
        let mut alternatives = Vec::new();
        while self.eat(&Tok::Slash) {
            alternatives.push(self.model()?);
        }
        Ok(Block {
            lambda,
            source,
            model,
            alternatives,
            source_span,
        })
    }

    fn model(&mut self) -> Result<OutputModel, QueryError> {
        const EXPECTED: [&str; 4] = ["`graph`", "`algebraic graph`", "`relational`", "`xml`"];
        let Tok::Ident(word) = self.peek().clone() else {
            return self.error(&EXPECTED);
        };
        let model = match word.as_str() {
            "graph" => OutputModel::Graph,
            "relational" => OutputModel::Relational,
            "xml" => OutputModel::Xml,
            "algebraic" => {
                self.bump();
                if !matches!(self.peek(), Tok::Ident(w) if w == "graph") {
                    return self.error(&["`graph`"]);
                }
                OutputModel::AlgebraicGraph
            }
            _ => return self.error(&EXPECTED),
        };
        self.bump();
        Ok(model)
    }

    fn block_lambda(&mut self) -> Result<LambdaExpr, QueryError> {
        let span = self.expect(Tok::LParen)?;
        self.expect(Tok::Backslash)?;
        let mut params = vec![self.ident()?.0];
        if let Tok::Ident(_) = self.peek() {
            params.push(self.ident()?.0);
        }
        self.expect(Tok::Arrow)?;
        let body = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok(LambdaExpr { params, body, span })
    }

    pub fn expr(&mut self) -> Result<Expr, QueryError> {
        if let Tok::If = self.peek() {
            let span = self.bump().span;
            let cond = self.expr()?;
            self.expect(Tok::Then)?;
            let then = self.expr()?;
            self.expect(Tok::Else)?;
            let otherwise = self.expr()?;
            return Ok(Expr::at(
                ExprKind::If {
                    cond: Box::new(cond),
                    then: Box::new(then),
                    otherwise: Box::new(otherwise),
                },
                span,
            ));
        }
        self.binary(1)
    }

    fn binop_at(&self, level: u8) -> Option<BinOp> {
        let op = match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::Gt => BinOp::Gt,
            Tok::Lt => BinOp::Lt,
            Tok::Ge => BinOp::Ge,
            Tok::Le => BinOp::Le,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            _ => return None,
        };
        (op.precedence() == level).then_some(op)
    }

    fn binary(&mut self, level: u8) -> Result<Expr, QueryError> {
        if level > 5 {
            return self.application();
        }
        let mut left = self.binary(level + 1)?;
        while let Some(op) = self.binop_at(level) {
            let span = self.bump().span;
            let right = self.binary(level + 1)?;
            left = Expr::at(
                ExprKind::BinOp {
                    op,
                    left: Box::new(left),
                    right: Box::new(right),
                },
                span,
            );
            // Comparisons do not chain.
            if op.is_comparison() {
                break;
            }
        }
        Ok(left)
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_)
                | Tok::Int(_)
                | Tok::Double(_)
                | Tok::Str(_)
                | Tok::True
                | Tok::False
                | Tok::LParen
                | Tok::Nil
                | Tok::Cons
        )
    }

    fn application(&mut self) -> Result<Expr, QueryError> {
        let span = self.span();
        if self.eat(&Tok::Cons) {
            let mut args = Vec::new();
            while self.starts_atom() {
                args.push(self.atom()?);
            }
            let mut args = args.into_iter();
            return match (args.next(), args.next(), args.next()) {
                (Some(item), rest, None) => Ok(Expr::at(
                    ExprKind::Cons {
                        item: Box::new(item),
                        rest: rest.map(Box::new),
                    },
                    span,
                )),
                (None, _, _) => self.error(&["argument of `cons`"]),
                (_, _, Some(extra)) => Err(QueryError::Syntax {
                    span: extra.span,
                    expected: vec!["at most two arguments to `cons`".into()],
                    found: "a third argument".into(),
                }),
            };
        }
        let head = self.atom()?;
        if !self.starts_atom() {
            return Ok(head);
        }
        let ExprKind::Var { name } = head.kind else {
            return self.error(&["operator", "`)`"]);
        };
        let mut args = Vec::new();
        while self.starts_atom() {
            args.push(self.atom()?);
        }
        Ok(Expr::at(ExprKind::App { head: name, args }, span))
    }

    fn atom(&mut self) -> Result<Expr, QueryError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Ident(name) => ExprKind::Var { name },
            Tok::Int(value) => ExprKind::Int { value },
            Tok::Double(value) => ExprKind::Double { value },
            Tok::Str(value) => ExprKind::Str { value },
            Tok::True => ExprKind::Bool { value: true },
            Tok::False => ExprKind::Bool { value: false },
            Tok::Nil => ExprKind::Nil,
            Tok::Cons => {
                // `cons` as an argument must be parenthesized with its operands.
                return self.error(&["`(cons ...)`"]);
            }
            Tok::LParen => return self.paren(),
            _ => {
                return self.error(&["identifier", "literal", "`(`", "`nil`"]);
            }
        };
        self.bump();
        Ok(Expr::at(kind, span))
    }

    fn paren(&mut self) -> Result<Expr, QueryError> {
        let span = self.expect(Tok::LParen)?;
        if self.eat(&Tok::Backslash) {
            let (param, _) = self.ident()?;
            self.expect(Tok::Arrow)?;
            let body = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(Expr::at(
                ExprKind::Lambda {
                    param,
                    body: Box::new(body),
                },
                span,
            ));
        }
        let first = self.expr()?;
        if self.eat(&Tok::RParen) {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat(&Tok::Comma) {
            items.push(self.expr()?);
        }
        if items.len() == 1 {
            return self.error(&["`,`", "`)`"]);
        }
        self.expect(Tok::RParen)?;
        Ok(Expr::at(ExprKind::Tuple { items }, span))
    }
}
