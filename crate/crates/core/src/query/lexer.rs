use std::fmt;

use super::ast::Span;
use super::error::QueryError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Double(f64),
    Str(String),
    True,
    False,
    Query,
    From,
    To,
    Let,
    Be,
    In,
    If,
    Then,
    Else,
    Cons,
    Nil,
    LParen,
    RParen,
    Comma,
    Backslash,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Gt,
    Lt,
    Ge,
    Le,
    EqEq,
    Ne,
    AndAnd,
    OrOr,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Double(d) => write!(f, "`{d}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Eof => f.write_str("end of input"),
            other => write!(f, "`{}`", other.text()),
        }
    }
}

impl Tok {
    pub fn text(&self) -> &'static str {
        match self {
            Tok::True => "True",
            Tok::False => "False",
            Tok::Query => "QUERY",
            Tok::From => "FROM",
            Tok::To => "TO",
            Tok::Let => "LET",
            Tok::Be => "BE",
            Tok::In => "IN",
            Tok::If => "if",
            Tok::Then => "then",
            Tok::Else => "else",
            Tok::Cons => "cons",
            Tok::Nil => "nil",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Backslash => "\\",
            Tok::Arrow => "->",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Gt => ">",
            Tok::Lt => "<",
            Tok::Ge => ">=",
            Tok::Le => "<=",
            Tok::EqEq => "==",
            Tok::Ne => "/=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Ident(_) => "identifier",
            Tok::Int(_) | Tok::Double(_) => "number",
            Tok::Str(_) => "string",
            Tok::Eof => "end of input",
        }
    }
}

pub fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "QUERY" => Tok::Query,
        "FROM" => Tok::From,
        "TO" => Tok::To,
        "LET" => Tok::Let,
        "BE" => Tok::Be,
        "IN" => Tok::In,
        "if" => Tok::If,
        "then" => Tok::Then,
        "else" => Tok::Else,
        "cons" => Tok::Cons,
        "nil" => Tok::Nil,
        "True" => Tok::True,
        "False" => Tok::False,
        _ => return None,
    })
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    // Last non-whitespace position, so end-of-input errors point inside the text.
    let mut last = Span::new(1, 1);

    let syntax = |span: Span, expected: &str, found: String| QueryError::Syntax {
        span,
        expected: vec![expected.to_string()],
        found,
    };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let span = Span::new(line, col);
        let start = i;
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let tok = if is_ident_start(c) {
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            keyword(&word).unwrap_or(Tok::Ident(word))
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let is_double = i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit();
            if is_double {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            if is_double {
                Tok::Double(lit.parse().expect("digits.digits"))
            } else {
                Tok::Int(
                    lit.parse()
                        .map_err(|_| syntax(span, "integer literal within 64 bits", lit))?,
                )
            }
        } else if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(syntax(span, "closing `\"`", "end of line".into()));
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        let esc = match chars.get(i + 1) {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('"') => '"',
                            Some('\\') => '\\',
                            other => {
                                let found = other.map_or("end of input".into(), |c| format!("`\\{c}`"));
                                return Err(syntax(Span::new(line, col + (i - start)), "string escape", found));
                            }
                        };
                        s.push(esc);
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            Tok::Str(s)
        } else {
            let (tok, len) = match two.as_str() {
                "->" => (Tok::Arrow, 2),
                ">=" => (Tok::Ge, 2),
                "<=" => (Tok::Le, 2),
                "==" => (Tok::EqEq, 2),
                "/=" => (Tok::Ne, 2),
                "&&" => (Tok::AndAnd, 2),
                "||" => (Tok::OrOr, 2),
                _ => {
                    let tok = match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        '\\' => Tok::Backslash,
                        '+' => Tok::Plus,
                        '-' => Tok::Minus,
                        '*' => Tok::Star,
                        '/' => Tok::Slash,
                        '>' => Tok::Gt,
                        '<' => Tok::Lt,
                        other => return Err(syntax(span, "token", format!("`{other}`"))),
                    };
                    (tok, 1)
                }
            };
            i += len;
            tok
        };
        col += i - start;
        last = Span::new(line, col - 1);
        out.push(Token { tok, span });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: last,
    });
    Ok(out)
}
