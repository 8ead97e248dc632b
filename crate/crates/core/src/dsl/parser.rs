use std::collections::HashSet;

use super::lexer::{tokenize, Tok, Token};
use super::{Expr, ExprKind, Let, Program};
use crate::condnum::AtomicOp;
use crate::error::{Error, Result, Span};

const FUNCTIONS: [(&str, AtomicOp); 12] = [
    ("sin", AtomicOp::Sin),
    ("cos", AtomicOp::Cos),
    ("tan", AtomicOp::Tan),
    ("asin", AtomicOp::Asin),
    ("acos", AtomicOp::Acos),
    ("sinh", AtomicOp::Sinh),
    ("cosh", AtomicOp::Cosh),
    ("exp", AtomicOp::Exp),
    ("log", AtomicOp::Log),
    ("log10", AtomicOp::Log10),
    ("sqrt", AtomicOp::Sqrt),
    ("neg", AtomicOp::Neg),
];

pub(crate) fn function_op(name: &str) -> Option<AtomicOp> {
    FUNCTIONS.iter().find(|(n, _)| *n == name).map(|(_, op)| *op)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    bound: HashSet<String>,
    parameters: Vec<String>,
}

pub fn parse(text: &str) -> Result<Program> {
    let mut p = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        bound: HashSet::new(),
        parameters: Vec::new(),
    };
    p.program()
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

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            span: self.span(),
            message: message.into(),
        })
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Tok::Semi | Tok::Newline) {
            self.bump();
        }
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Tok::Newline) {
            self.bump();
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn program(&mut self) -> Result<Program> {
        let mut statements = Vec::new();
        self.skip_separators();
        loop {
            if *self.peek() == Tok::Let {
                let let_span = self.bump().span;
                let name_tok = self.bump();
                let name = match name_tok.tok {
                    Tok::Ident(name) => name,
                    other => {
                        return Err(Error::Syntax {
                            span: name_tok.span,
                            message: format!("expected a name after `let`, found {}", describe(&other)),
                        })
                    }
                };
                self.expect(Tok::Assign, "`=`")?;
                let value = self.expr()?;
                if self.bound.contains(&name) {
                    return Err(Error::Rebinding {
                        name,
                        span: name_tok.span,
                    });
                }
                if self.parameters.contains(&name) {
                    return Err(Error::UseBeforeBind {
                        span: first_use(&statements, &value, &name).unwrap_or(name_tok.span),
                        name,
                    });
                }
                self.bound.insert(name.clone());
                statements.push(Let {
                    name,
                    value,
                    span: let_span,
                });
                if !matches!(self.peek(), Tok::Semi | Tok::Newline) {
                    return self.error(format!(
                        "expected `;` or newline after let binding, found {}",
                        describe(self.peek())
                    ));
                }
                self.skip_separators();
                continue;
            }
            if *self.peek() == Tok::Eof {
                return self.error("program has no result expression");
            }
            let result = self.expr()?;
            self.skip_separators();
            if *self.peek() != Tok::Eof {
                return self.error(format!(
                    "unexpected {} after the result expression",
                    describe(self.peek())
                ));
            }
            return Ok(Program {
                statements,
                result,
                parameters: std::mem::take(&mut self.parameters),
            });
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => AtomicOp::Add,
                Tok::Minus => AtomicOp::Sub,
                _ => return Ok(lhs),
            };
            let span = self.bump().span;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs, span);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => AtomicOp::Mul,
                Tok::Slash => AtomicOp::Div,
                _ => return Ok(lhs),
            };
            let span = self.bump().span;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs, span);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        self.skip_newlines();
        if *self.peek() == Tok::Minus {
            let span = self.bump().span;
            let arg = self.unary()?;
            return Ok(Expr::unary(AtomicOp::Neg, arg, span));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            let span = self.bump().span;
            // Right-associative; the exponent may carry its own unary minus.
            let exponent = self.unary()?;
            return Ok(Expr::binary(AtomicOp::Pow, base, exponent, span));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        self.skip_newlines();
        let t = self.bump();
        match t.tok {
            Tok::Number { value, text } => Ok(Expr {
                kind: ExprKind::Literal { value, text },
                span: t.span,
            }),
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let Some(op) = function_op(&name) else {
                        return Err(Error::UnknownFunction { name, span: t.span });
                    };
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Expr::unary(op, arg, t.span));
                }
                if !self.bound.contains(&name) && !self.parameters.contains(&name) {
                    self.parameters.push(name.clone());
                }
                Ok(Expr {
                    kind: ExprKind::Var(name),
                    span: t.span,
                })
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            other => Err(Error::Syntax {
                span: t.span,
                message: format!("expected an operand, found {}", describe(&other)),
            }),
        }
    }
}

/// Span of the first use of `name` among earlier statements and `value`.
fn first_use(statements: &[Let], value: &Expr, name: &str) -> Option<Span> {
    fn walk(e: &Expr, name: &str) -> Option<Span> {
        match &e.kind {
            ExprKind::Var(v) if v == name => Some(e.span),
            ExprKind::Var(_) | ExprKind::Literal { .. } => None,
            ExprKind::Unary { arg, .. } => walk(arg, name),
            ExprKind::Binary { lhs, rhs, .. } => walk(lhs, name).or_else(|| walk(rhs, name)),
        }
    }
    statements
        .iter()
        .map(|s| &s.value)
        .chain(std::iter::once(value))
        .find_map(|e| walk(e, name))
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Number { text, .. } => format!("number `{text}`"),
        Tok::Ident(n) => format!("`{n}`"),
        Tok::Let => "`let`".into(),
        Tok::Assign => "`=`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Newline => "end of line".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::Eof => "end of input".into(),
    }
}
