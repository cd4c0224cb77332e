use super::ast::{BinOp, Expr};
use super::lexer::{tokenize, Spanned, Token};
use super::{ConstraintClause, DomainClause, DslError, Statement};
use crate::problem::VariableDomain;

/// Parses a single non-empty line into a statement.
pub(super) fn parse_line(text: &str, line: usize) -> Result<Statement, DslError> {
    let tokens = tokenize(text, line)?;
    let mut p = LineParser {
        tokens,
        pos: 0,
        line,
        width: text.chars().count(),
    };
    let statement = p.statement()?;
    if let Some(extra) = p.peek() {
        return Err(p.error_at(extra.column, format!("unexpected {}", extra.token.describe())));
    }
    Ok(statement)
}

/// Parses a bare expression, used for tests and programmatic callers.
pub fn parse_expr(text: &str) -> Result<Expr, DslError> {
    let tokens = tokenize(text, 1)?;
    let mut p = LineParser {
        tokens,
        pos: 0,
        line: 1,
        width: text.chars().count(),
    };
    let e = p.expr()?;
    if let Some(extra) = p.peek() {
        return Err(p.error_at(extra.column, format!("unexpected {}", extra.token.describe())));
    }
    Ok(e)
}

struct LineParser {
    tokens: Vec<Spanned>,
    pos: usize,
    line: usize,
    width: usize,
}

impl LineParser {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn peek_token(&self) -> Option<&Token> {
        self.peek().map(|s| &s.token)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error_at(&self, column: usize, message: String) -> DslError {
        DslError::Syntax {
            line: self.line,
            column,
            message,
        }
    }

    fn error_here(&self, expected: &str) -> DslError {
        match self.peek() {
            Some(t) => self.error_at(t.column, format!("expected {expected}, found {}", t.token.describe())),
            None => self.error_at(self.width + 1, format!("expected {expected}, found end of line")),
        }
    }

    fn eat(&mut self, token: &Token) -> bool {
        if self.peek_token() == Some(token) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: Token) -> Result<(), DslError> {
        if self.eat(&token) {
            Ok(())
        } else {
            Err(self.error_here(&token.describe()))
        }
    }

    fn statement(&mut self) -> Result<Statement, DslError> {
        let keyword = match self.peek_token() {
            Some(Token::Ident(s)) => Some(s.clone()),
            _ => None,
        };
        let second_is_in =
            matches!(self.tokens.get(self.pos + 1).map(|t| &t.token), Some(Token::Ident(s)) if s == "in");
        match keyword.as_deref() {
            Some("name") => {
                self.pos += 1;
                match self.next() {
                    Some(Spanned {
                        token: Token::Ident(name),
                        ..
                    }) => Ok(Statement::Name(name)),
                    _ => {
                        self.pos -= 1;
                        Err(self.error_here("a problem name"))
                    }
                }
            }
            Some("dim") | Some("dimension") => {
                self.pos += 1;
                let column = self.peek().map_or(self.width + 1, |t| t.column);
                let value = self.signed_number()?;
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(self.error_at(column, format!("dimension must be a positive integer, got {value}")));
                }
                Ok(Statement::Dimension(value as usize))
            }
            Some("minimize") => {
                self.pos += 1;
                Ok(Statement::Objective(self.expr()?))
            }
            Some(_) if second_is_in => self.domain(),
            _ => self.constraint(),
        }
    }

    fn domain(&mut self) -> Result<Statement, DslError> {
        let var = self.next().expect("checked by caller");
        let variable = match &var.token {
            Token::Ident(name) => variable_index(name).ok_or_else(|| {
                self.error_at(var.column, format!("`{name}` is not a variable (expected x1, x2, ...)"))
            })?,
            _ => unreachable!(),
        };
        self.pos += 1; // `in`
        let domain = if self.eat(&Token::LBracket) {
            let lower = self.signed_number()?;
            self.expect(Token::Comma)?;
            let upper = self.signed_number()?;
            self.expect(Token::RBracket)?;
            VariableDomain::continuous(lower, upper)
        } else if self.eat(&Token::LBrace) {
            let min_multiple = self.integer()?;
            self.expect(Token::DotDot)?;
            let max_multiple = self.integer()?;
            self.expect(Token::RBrace)?;
            self.expect(Token::Star)?;
            let step = self.signed_number()?;
            VariableDomain::grid(step, min_multiple, max_multiple)
        } else {
            return Err(self.error_here("`[` or `{`"));
        };
        Ok(Statement::Domain(DomainClause { variable, domain }))
    }

    fn constraint(&mut self) -> Result<Statement, DslError> {
        let first = self.expr()?;
        self.expect(Token::Le)?;
        let second = self.expr()?;
        if self.eat(&Token::Le) {
            let third = self.expr()?;
            return Ok(Statement::Constraint(ConstraintClause::DoubleSided {
                lower: first,
                expr: second,
                upper: third,
            }));
        }
        Ok(Statement::Constraint(ConstraintClause::Single {
            lhs: first,
            rhs: second,
        }))
    }

    fn signed_number(&mut self) -> Result<f64, DslError> {
        let negative = self.eat(&Token::Minus);
        match self.peek_token() {
            Some(Token::Num(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.error_here("a number")),
        }
    }

    fn integer(&mut self) -> Result<i64, DslError> {
        let column = self.peek().map_or(self.width + 1, |t| t.column);
        let v = self.signed_number()?;
        if v.fract() != 0.0 || v.abs() > (1u64 << 53) as f64 {
            return Err(self.error_at(column, format!("expected an integer, got {v}")));
        }
        Ok(v as i64)
    }

    pub(super) fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_token() {
                Some(Token::Plus) => BinOp::Add,
                Some(Token::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_token() {
                Some(Token::Star) => BinOp::Mul,
                Some(Token::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.eat(&Token::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, DslError> {
        let base = self.atom()?;
        if self.eat(&Token::Caret) {
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        let Some(t) = self.peek().cloned() else {
            return Err(self.error_here("an expression"));
        };
        match t.token {
            Token::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Token::Ident(name) => {
                self.pos += 1;
                if name == "pi" {
                    return Ok(Expr::Pi);
                }
                variable_index(&name)
                    .map(Expr::Var)
                    .ok_or_else(|| self.error_at(t.column, format!("unknown identifier `{name}`")))
            }
            Token::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            _ => Err(self.error_here("an expression")),
        }
    }
}

/// `x7` -> 7. Index 0 is rejected.
fn variable_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().filter(|i| *i >= 1)
}
