//! Reader and writer for `.gms` metric files.
//!
//! ```text
//! metric "schwarzschild" {
//!   params { m = 1 }
//!   coords {
//!     r in (2*m, inf),
//!     t in [0, 8*pi*m) periodic 8*pi*m,
//!     theta in (0, pi),
//!     phi in [0, 2*pi) periodic 2*pi
//!   }
//!   orientation = "r t theta phi"
//!   g[r, r] = 1/(1 - 2*m/r)
//!   g[t, t] = 1 - 2*m/r
//!   g[theta, theta] = r^2
//!   g[phi, phi] = r^2*sin(theta)^2
//! }
//! ```
//!
//! Components use the expression grammar; `g[i, j]` also defines `g[j, i]`
//! and unassigned components are zero. Interval ends may be `inf`/`-inf`.
//! A periodic coordinate ranges over the whole line; its interval only
//! documents a fundamental domain.

use thiserror::Error;

use crate::curvature::{CoordDecl, MetricSpec};
use crate::expr::{Expr, ExprError, ExprParser, Lexer, ParamEnv, Scope, Token, TokenKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmsError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

struct Reader<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, k: usize) -> &TokenKind {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].kind
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, GmsError> {
        let t = self.peek();
        Err(GmsError::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, GmsError> {
        if self.peek().kind == kind {
            Ok(self.next())
        } else {
            self.fail(format!("expected {what}, found {:?}", self.peek().kind))
        }
    }

    fn is_keyword(&self, word: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == word)
    }

    fn keyword(&mut self, word: &str) -> Result<(), GmsError> {
        if self.is_keyword(word) {
            self.next();
            Ok(())
        } else {
            self.fail(format!("expected `{word}`, found {:?}", self.peek().kind))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Token), GmsError> {
        match &self.peek().kind {
            TokenKind::Ident(s) => {
                let s = s.clone();
                Ok((s, self.next()))
            }
            other => self.fail(format!("expected {what}, found {other:?}")),
        }
    }

    fn expr(&mut self, scope: &Scope) -> Result<Expr, GmsError> {
        let mut p = ExprParser::with_pos(self.tokens, self.pos, scope);
        let e = p.expr()?;
        self.pos = p.pos();
        Ok(e)
    }

    /// An interval end: `inf`, `-inf` or an expression.
    fn bound(&mut self, scope: &Scope) -> Result<Option<Expr>, GmsError> {
        let is_inf = |k: &TokenKind| matches!(k, TokenKind::Ident(s) if s == "inf");
        if is_inf(self.peek_at(0)) {
            self.next();
            return Ok(None);
        }
        if *self.peek_at(0) == TokenKind::Minus && is_inf(self.peek_at(1)) {
            self.next();
            self.next();
            return Ok(None);
        }
        Ok(Some(self.expr(scope)?))
    }

    fn number(&mut self) -> Result<f64, GmsError> {
        let sign = if self.peek().kind == TokenKind::Minus {
            self.next();
            -1.0
        } else {
            1.0
        };
        match self.peek().kind {
            TokenKind::Number(v) => {
                self.next();
                Ok(sign * v)
            }
            _ => self.fail(format!("expected a number, found {:?}", self.peek().kind)),
        }
    }
}

/// Parse a `.gms` file into a metric specification.
pub fn parse_gms(text: &str) -> Result<MetricSpec, GmsError> {
    let tokens = Lexer::tokenize(text)?;
    let mut rd = Reader { tokens: &tokens, pos: 0 };
    rd.keyword("metric")?;
    let name = match &rd.peek().kind {
        TokenKind::Str(s) => {
            let s = s.clone();
            rd.next();
            s
        }
        other => return rd.fail(format!("expected the metric name as a string, found {other:?}")),
    };
    rd.expect(TokenKind::LBrace, "`{`")?;

    let mut params = ParamEnv::new();
    let mut pnames: Vec<String> = Vec::new();
    if rd.is_keyword("params") {
        rd.next();
        rd.expect(TokenKind::LBrace, "`{`")?;
        while rd.peek().kind != TokenKind::RBrace {
            let (p, tok) = rd.ident("a parameter name")?;
            if pnames.contains(&p) {
                return Err(GmsError::Syntax { line: tok.line, col: tok.col, msg: format!("parameter `{p}` declared twice") });
            }
            rd.expect(TokenKind::Eq, "`=`")?;
            params.set(&p, rd.number()?);
            pnames.push(p);
            if rd.peek().kind == TokenKind::Comma {
                rd.next();
            }
        }
        rd.next();
    }

    rd.keyword("coords")?;
    rd.expect(TokenKind::LBrace, "`{`")?;
    let pscope = Scope::new(&[], &pnames.iter().map(String::as_str).collect::<Vec<_>>());
    let mut coords: Vec<CoordDecl> = Vec::new();
    let coords_tok = rd.peek().clone();
    loop {
        let (c, tok) = rd.ident("a coordinate name")?;
        if coords.iter().any(|d| d.name == c) || pnames.contains(&c) {
            return Err(GmsError::Syntax { line: tok.line, col: tok.col, msg: format!("name `{c}` declared twice") });
        }
        rd.keyword("in")?;
        if !matches!(rd.peek().kind, TokenKind::LParen | TokenKind::LBracket) {
            return rd.fail("expected an interval opening with `(` or `[`");
        }
        rd.next();
        let lo = rd.bound(&pscope)?;
        rd.expect(TokenKind::Comma, "`,`")?;
        let hi = rd.bound(&pscope)?;
        if !matches!(rd.peek().kind, TokenKind::RParen | TokenKind::RBracket) {
            return rd.fail("expected an interval closing with `)` or `]`");
        }
        rd.next();
        let decl = if rd.is_keyword("periodic") {
            rd.next();
            CoordDecl::new(&c, None, None, Some(rd.expr(&pscope)?))
        } else {
            CoordDecl::new(&c, lo, hi, None)
        };
        coords.push(decl);
        if rd.peek().kind == TokenKind::Comma {
            rd.next();
        } else {
            break;
        }
    }
    rd.expect(TokenKind::RBrace, "`}` or `,`")?;
    if coords.len() != 4 {
        return Err(GmsError::Syntax {
            line: coords_tok.line,
            col: coords_tok.col,
            msg: format!("exactly 4 coordinates are required, found {}", coords.len()),
        });
    }
    let mut spec = MetricSpec::new(&name, params, coords);
    let scope = spec.scope();

    if rd.is_keyword("orientation") {
        rd.next();
        rd.expect(TokenKind::Eq, "`=`")?;
        let tok = rd.peek().clone();
        let TokenKind::Str(s) = &tok.kind else { return rd.fail("expected the orientation as a string") };
        rd.next();
        let err = |msg: String| GmsError::Syntax { line: tok.line, col: tok.col, msg };
        let idx = s
            .split(|c: char| c.is_whitespace() || c == ',' || c == '^')
            .filter(|w| !w.is_empty())
            .map(|w| spec.coord_index(w.trim_start_matches('d')).or_else(|| spec.coord_index(w)).ok_or_else(|| err(format!("unknown coordinate `{w}` in orientation"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut seen = [false; 4];
        if idx.len() != 4 || idx.iter().any(|&i| std::mem::replace(&mut seen[i], true)) {
            return Err(err(format!("orientation must list each coordinate once, got `{s}`")));
        }
        spec.orientation = [idx[0], idx[1], idx[2], idx[3]];
    }

    let mut assigned = [false; 10];
    while rd.is_keyword("g") {
        let gtok = rd.next();
        rd.expect(TokenKind::LBracket, "`[`")?;
        let index = |rd: &mut Reader| -> Result<usize, GmsError> {
            let (c, tok) = rd.ident("a coordinate name")?;
            spec.coord_index(&c)
                .ok_or(GmsError::Syntax { line: tok.line, col: tok.col, msg: format!("unknown coordinate `{c}`") })
        };
        let i = index(&mut rd)?;
        rd.expect(TokenKind::Comma, "`,`")?;
        let j = index(&mut rd)?;
        rd.expect(TokenKind::RBracket, "`]`")?;
        rd.expect(TokenKind::Eq, "`=`")?;
        let slot = crate::curvature::sym_slot(i, j);
        if std::mem::replace(&mut assigned[slot], true) {
            return Err(GmsError::Syntax { line: gtok.line, col: gtok.col, msg: "component assigned twice".into() });
        }
        let e = rd.expr(&scope)?;
        spec.set(i, j, e);
    }
    rd.expect(TokenKind::RBrace, "`g[…] = …` or `}`")?;
    if rd.peek().kind != TokenKind::Eof {
        return rd.fail("unexpected text after the closing `}`");
    }
    Ok(spec)
}

/// Write a metric specification as `.gms` text; [`parse_gms`] reads it back
/// to an identical specification.
pub fn to_gms(spec: &MetricSpec) -> String {
    let mut s = format!("metric \"{}\" {{\n", spec.name);
    let params: Vec<String> = spec.params.iter().map(|(k, v)| format!("{k} = {}", Expr::constant(v))).collect();
    if !params.is_empty() {
        s.push_str(&format!("  params {{ {} }}\n", params.join(" ")));
    }
    s.push_str("  coords {\n");
    let bound = |e: &Option<Expr>, neg: bool| match e {
        Some(e) => e.to_string(),
        None if neg => "-inf".to_string(),
        None => "inf".to_string(),
    };
    for (i, c) in spec.coords.iter().enumerate() {
        let sep = if i + 1 < spec.coords.len() { "," } else { "" };
        match &c.period {
            Some(p) => s.push_str(&format!("    {} in [0, {p}) periodic {p}{sep}\n", c.name)),
            None => s.push_str(&format!("    {} in ({}, {}){sep}\n", c.name, bound(&c.lo, true), bound(&c.hi, false))),
        }
    }
    s.push_str("  }\n");
    let names: Vec<&str> = spec.orientation.iter().map(|&i| spec.coords[i].name.as_str()).collect();
    s.push_str(&format!("  orientation = \"{}\"\n", names.join(" ")));
    for i in 0..4 {
        for j in i..4 {
            let e = spec.get(i, j);
            if e.as_const() != Some(0.0) {
                s.push_str(&format!("  g[{}, {}] = {e}\n", spec.coords[i].name, spec.coords[j].name));
            }
        }
    }
    s.push_str("}\n");
    s
}
