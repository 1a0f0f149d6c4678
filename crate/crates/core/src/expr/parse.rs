use super::{BinaryOp, Expr, ExprError, Lexer, Scope, Token, TokenKind, UnaryOp};

/// Parse `text` against the expression grammar, resolving identifiers in `scope`.
pub fn parse_expr(text: &str, scope: &Scope) -> Result<Expr, ExprError> {
    let tokens = Lexer::tokenize(text)?;
    let mut p = ExprParser::new(&tokens, scope);
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Recursive-descent parser over a token slice. Exposed so the `.gms`
/// reader can embed expressions in its own grammar.
pub struct ExprParser<'a> {
    tokens: &'a [Token],
    pos: usize,
    scope: &'a Scope,
}

impl<'a> ExprParser<'a> {
    pub fn new(tokens: &'a [Token], scope: &'a Scope) -> Self {
        ExprParser { tokens, pos: 0, scope }
    }

    pub fn with_pos(tokens: &'a [Token], pos: usize, scope: &'a Scope) -> Self {
        ExprParser { tokens, pos, scope }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn error_here(&self, msg: impl Into<String>) -> ExprError {
        let t = self.peek();
        ExprError::Syntax { line: t.line, col: t.col, msg: msg.into() }
    }

    pub fn expect_eof(&self) -> Result<(), ExprError> {
        match self.peek().kind {
            TokenKind::Eof => Ok(()),
            _ => Err(self.error_here(format!("unexpected trailing token {:?}", self.peek().kind))),
        }
    }

    pub fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinaryOp::Add,
                TokenKind::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary_raw(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::binary_raw(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.base()?;
        if self.peek().kind == TokenKind::Caret {
            self.bump();
            let exponent = self.base()?;
            return Ok(Expr::binary_raw(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        let tok = self.bump();
        match tok.kind {
            TokenKind::Number(v) => Ok(Expr::constant(v)),
            TokenKind::Minus => Ok(Expr::unary_raw(UnaryOp::Neg, self.base()?)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                if let Some(func) = UnaryOp::from_name(&name) {
                    if self.peek().kind != TokenKind::LParen {
                        return Err(self.error_here(format!("expected `(` after function `{name}`")));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(TokenKind::RParen, "`)`")?;
                    return Ok(Expr::unary_raw(func, arg));
                }
                if name == "pi" {
                    return Ok(Expr::pi());
                }
                if let Some(index) = self.scope.coord_index(&name) {
                    return Ok(Expr::coord(index, &name));
                }
                if self.scope.has_param(&name) {
                    return Ok(Expr::param(&name));
                }
                Err(ExprError::Undeclared { name, line: tok.line, col: tok.col })
            }
            other => Err(ExprError::Syntax {
                line: tok.line,
                col: tok.col,
                msg: format!("unexpected token {other:?}"),
            }),
        }
    }

    pub fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, ExprError> {
        if self.peek().kind == kind {
            Ok(self.bump())
        } else {
            Err(self.error_here(format!("expected {what}, found {:?}", self.peek().kind)))
        }
    }

    pub fn expect_ident(&mut self) -> Result<(String, Token), ExprError> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok((s, t))
            }
            other => Err(self.error_here(format!("expected identifier, found {other:?}"))),
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ExprError> {
        match &self.peek().kind {
            TokenKind::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            other => Err(self.error_here(format!("expected `{kw}`, found {other:?}"))),
        }
    }

    pub fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == kw)
    }

    pub fn advance(&mut self) -> Token {
        self.bump()
    }

    pub fn set_scope(&mut self, scope: &'a Scope) {
        self.scope = scope;
    }
}
