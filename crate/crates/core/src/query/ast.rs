use std::fmt;

use serde::Serialize;

/// Source position (1-based line and column).
///
/// Spans never take part in AST equality: two trees that differ only in where
/// they came from are the same query.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl Span {
    pub fn new(line: usize, column: usize) -> Self {
        Span { line, column }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputModel {
    Graph,
    AlgebraicGraph,
    Relational,
    Xml,
}

impl OutputModel {
    pub const ALL: [OutputModel; 4] = [
        OutputModel::Graph,
        OutputModel::AlgebraicGraph,
        OutputModel::Relational,
        OutputModel::Xml,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            OutputModel::Graph => "graph",
            OutputModel::AlgebraicGraph => "algebraic graph",
            OutputModel::Relational => "relational",
            OutputModel::Xml => "xml",
        }
    }
}

impl fmt::Display for OutputModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum QueryAst {
    Let {
        var: String,
        bound: Box<QueryAst>,
        body: Box<QueryAst>,
        #[serde(skip)]
        span: Span,
    },
    Block(Block),
}

/// `QUERY lambda FROM source TO model[/model...]`. The first model selects
/// the rendering; the others are the alternatives the author listed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub lambda: LambdaExpr,
    pub source: String,
    pub model: OutputModel,
    pub alternatives: Vec<OutputModel>,
    #[serde(skip)]
    pub source_span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaExpr {
    pub params: Vec<String>,
    pub body: Expr,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "/=")]
    Ne,
    #[serde(rename = "&&")]
    And,
    #[serde(rename = "||")]
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Gt => ">",
            BinOp::Lt => "<",
            BinOp::Ge => ">=",
            BinOp::Le => "<=",
            BinOp::Eq => "==",
            BinOp::Ne => "/=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Gt | BinOp::Lt | BinOp::Ge | BinOp::Le | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expr {
    #[serde(flatten)]
    pub kind: ExprKind,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "node", rename_all = "camelCase")]
pub enum ExprKind {
    If {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
    App {
        head: String,
        args: Vec<Expr>,
    },
    Var {
        name: String,
    },
    Int {
        value: i64,
    },
    Double {
        value: f64,
    },
    Str {
        value: String,
    },
    Bool {
        value: bool,
    },
    Tuple {
        items: Vec<Expr>,
    },
    BinOp {
        op: BinOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Cons {
        item: Box<Expr>,
        rest: Option<Box<Expr>>,
    },
    Nil,
    /// One-parameter lambda passed to `map`, `any` or `all`.
    Lambda {
        param: String,
        body: Box<Expr>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    pub fn at(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::new(ExprKind::Var { name: name.into() })
    }

    pub fn int(value: i64) -> Self {
        Expr::new(ExprKind::Int { value })
    }

    pub fn string(value: impl Into<String>) -> Self {
        Expr::new(ExprKind::Str {
            value: value.into(),
        })
    }

    pub fn app(head: impl Into<String>, args: Vec<Expr>) -> Self {
        Expr::new(ExprKind::App {
            head: head.into(),
            args,
        })
    }

    pub fn binop(op: BinOp, left: Expr, right: Expr) -> Self {
        Expr::new(ExprKind::BinOp {
            op,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    pub fn if_(cond: Expr, then: Expr, otherwise: Expr) -> Self {
        Expr::new(ExprKind::If {
            cond: Box::new(cond),
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        })
    }

    pub fn cons(item: Expr, rest: Option<Expr>) -> Self {
        Expr::new(ExprKind::Cons {
            item: Box::new(item),
            rest: rest.map(Box::new),
        })
    }

    pub fn nil() -> Self {
        Expr::new(ExprKind::Nil)
    }

    pub fn tuple(items: Vec<Expr>) -> Self {
        Expr::new(ExprKind::Tuple { items })
    }

    pub fn lambda(param: impl Into<String>, body: Expr) -> Self {
        Expr::new(ExprKind::Lambda {
            param: param.into(),
            body: Box::new(body),
        })
    }
}

impl QueryAst {
    pub fn block(
        params: &[&str],
        body: Expr,
        source: impl Into<String>,
        model: OutputModel,
    ) -> Self {
        QueryAst::Block(Block {
            lambda: LambdaExpr {
                params: params.iter().map(|p| p.to_string()).collect(),
                body,
                span: Span::default(),
            },
            source: source.into(),
            model,
            alternatives: Vec::new(),
            source_span: Span::default(),
        })
    }

    pub fn let_(var: impl Into<String>, bound: QueryAst, body: QueryAst) -> Self {
        QueryAst::Let {
            var: var.into(),
            bound: Box::new(bound),
            body: Box::new(body),
            span: Span::default(),
        }
    }

    /// The block whose TO clause decides the rendering.
    pub fn result_block(&self) -> &Block {
        match self {
            QueryAst::Let { body, .. } => body.result_block(),
            QueryAst::Block(b) => b,
        }
    }

    /// Number of QUERY blocks.
    pub fn block_count(&self) -> usize {
        match self {
            QueryAst::Let { bound, body, .. } => bound.block_count() + body.block_count(),
            QueryAst::Block(_) => 1,
        }
    }
}
