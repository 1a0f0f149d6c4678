//! Scalar expressions over chart coordinates and named parameters.
//!
//! Expressions are immutable trees behind cheap `Arc` handles, so derivative
//! trees share structure with their sources. Constructors apply constant
//! folding and identity elimination (`x*1`, `x+0`, `0*x`) and nothing else.

mod diff;
mod eval;
mod lexer;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use eval::Program;
pub use lexer::{Lexer, Token, TokenKind};
pub use parse::{parse_expr, ExprParser};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared identifier `{name}` at {line}:{col}")]
    Undeclared { name: String, line: usize, col: usize },
    #[error("domain error in {op}: `{subexpr}` (argument {value})")]
    Domain { op: &'static str, subexpr: String, value: f64 },
    #[error("parameter `{0}` is not bound")]
    UnboundParam(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub const FUNCS: [UnaryOp; 10] = [
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Sinh,
        UnaryOp::Cosh,
        UnaryOp::Tanh,
        UnaryOp::Exp,
        UnaryOp::Log,
        UnaryOp::Sqrt,
        UnaryOp::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Sinh => "sinh",
            UnaryOp::Cosh => "cosh",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<UnaryOp> {
        UnaryOp::FUNCS.iter().copied().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Coord { index: usize, name: Arc<str> },
    Param(Arc<str>),
    Unary(UnaryOp, Expr),
    Binary(BinaryOp, Expr, Expr),
}

/// Shared handle to an expression tree node.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

/// Parameter bindings, e.g. mass `m` and rotation `a`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamEnv {
    values: BTreeMap<String, f64>,
}

impl ParamEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Names an expression may reference.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    pub coords: Vec<String>,
    pub params: Vec<String>,
}

impl Scope {
    pub fn new(coords: &[&str], params: &[&str]) -> Self {
        Scope {
            coords: coords.iter().map(|s| s.to_string()).collect(),
            params: params.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn has_param(&self, name: &str) -> bool {
        self.params.iter().any(|p| p == name)
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn constant(value: f64) -> Expr {
        Expr::from_node(Node::Const(value))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn pi() -> Expr {
        Expr::constant(std::f64::consts::PI)
    }

    pub fn coord(index: usize, name: &str) -> Expr {
        Expr::from_node(Node::Coord { index, name: Arc::from(name) })
    }

    pub fn param(name: &str) -> Expr {
        Expr::from_node(Node::Param(Arc::from(name)))
    }

    /// Unary node without simplification (parser output).
    pub fn unary_raw(op: UnaryOp, arg: Expr) -> Expr {
        Expr::from_node(Node::Unary(op, arg))
    }

    /// Binary node without simplification (parser output).
    pub fn binary_raw(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::from_node(Node::Binary(op, lhs, rhs))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    fn is_const(&self, v: f64) -> bool {
        self.as_const() == Some(v)
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Expr {
        if let Some(c) = arg.as_const() {
            if let Ok(v) = eval::apply_unary(op, c) {
                if v.is_finite() {
                    return Expr::constant(v);
                }
            }
        }
        if op == UnaryOp::Neg {
            if let Node::Unary(UnaryOp::Neg, inner) = arg.node() {
                return inner.clone();
            }
        }
        Expr::unary_raw(op, arg)
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        if let (Some(a), Some(b)) = (lhs.as_const(), rhs.as_const()) {
            if let Ok(v) = eval::apply_binary(op, a, b) {
                if v.is_finite() {
                    return Expr::constant(v);
                }
            }
        }
        match op {
            BinaryOp::Add => {
                if lhs.is_const(0.0) {
                    return rhs;
                }
                if rhs.is_const(0.0) {
                    return lhs;
                }
            }
            BinaryOp::Sub => {
                if rhs.is_const(0.0) {
                    return lhs;
                }
                if lhs.is_const(0.0) {
                    return Expr::unary(UnaryOp::Neg, rhs);
                }
            }
            BinaryOp::Mul => {
                if lhs.is_const(0.0) || rhs.is_const(0.0) {
                    return Expr::zero();
                }
                if lhs.is_const(1.0) {
                    return rhs;
                }
                if rhs.is_const(1.0) {
                    return lhs;
                }
                if lhs.is_const(-1.0) {
                    return Expr::unary(UnaryOp::Neg, rhs);
                }
                if rhs.is_const(-1.0) {
                    return Expr::unary(UnaryOp::Neg, lhs);
                }
            }
            BinaryOp::Div => {
                if lhs.is_const(0.0) {
                    return Expr::zero();
                }
                if rhs.is_const(1.0) {
                    return lhs;
                }
            }
            BinaryOp::Pow => {
                if rhs.is_const(1.0) {
                    return lhs;
                }
                if rhs.is_const(0.0) {
                    return Expr::one();
                }
            }
        }
        Expr::binary_raw(op, lhs, rhs)
    }

    pub fn neg(&self) -> Expr {
        Expr::unary(UnaryOp::Neg, self.clone())
    }

    pub fn powf(&self, exponent: f64) -> Expr {
        Expr::binary(BinaryOp::Pow, self.clone(), Expr::constant(exponent))
    }

    pub fn pow(&self, exponent: &Expr) -> Expr {
        Expr::binary(BinaryOp::Pow, self.clone(), exponent.clone())
    }

    pub fn sin(&self) -> Expr {
        Expr::unary(UnaryOp::Sin, self.clone())
    }
    pub fn cos(&self) -> Expr {
        Expr::unary(UnaryOp::Cos, self.clone())
    }
    pub fn exp(&self) -> Expr {
        Expr::unary(UnaryOp::Exp, self.clone())
    }
    pub fn log(&self) -> Expr {
        Expr::unary(UnaryOp::Log, self.clone())
    }
    pub fn sqrt(&self) -> Expr {
        Expr::unary(UnaryOp::Sqrt, self.clone())
    }

    /// Exact derivative of order `order` with respect to coordinate `wrt`.
    pub fn differentiate(&self, wrt: usize, order: usize) -> Expr {
        let mut e = self.clone();
        for _ in 0..order {
            e = diff::derivative(&e, wrt);
        }
        e
    }

    /// Recursive evaluation. Parameters are looked up in `env`.
    pub fn evaluate(&self, point: &[f64], env: &ParamEnv) -> Result<f64, ExprError> {
        eval::evaluate(self, point, env)
    }

    /// Replace every bound parameter by its value and re-fold constants.
    pub fn bind(&self, env: &ParamEnv) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Coord { .. } => self.clone(),
            Node::Param(name) => match env.get(name) {
                Some(v) => Expr::constant(v),
                None => self.clone(),
            },
            Node::Unary(op, a) => Expr::unary(*op, a.bind(env)),
            Node::Binary(op, a, b) => Expr::binary(*op, a.bind(env), b.bind(env)),
        }
    }

    /// Whether the tree references coordinate `index`.
    pub fn depends_on(&self, index: usize) -> bool {
        match self.node() {
            Node::Const(_) | Node::Param(_) => false,
            Node::Coord { index: i, .. } => *i == index,
            Node::Unary(_, a) => a.depends_on(index),
            Node::Binary(_, a, b) => a.depends_on(index) || b.depends_on(index),
        }
    }

    /// Collect parameter names referenced by the tree.
    pub fn params(&self, out: &mut Vec<String>) {
        match self.node() {
            Node::Const(_) | Node::Coord { .. } => {}
            Node::Param(name) => {
                if !out.iter().any(|p| p == &**name) {
                    out.push(name.to_string());
                }
            }
            Node::Unary(_, a) => a.params(out),
            Node::Binary(_, a, b) => {
                a.params(out);
                b.params(out);
            }
        }
    }

    /// Number of nodes counted as a tree (shared subtrees counted repeatedly).
    pub fn tree_size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Coord { .. } | Node::Param(_) => 1,
            Node::Unary(_, a) => 1 + a.tree_size(),
            Node::Binary(_, a, b) => 1 + a.tree_size() + b.tree_size(),
        }
    }
}

fn fmt_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v == std::f64::consts::PI {
        write!(f, "pi")
    } else if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
        write!(f, "-{}", -v)
    } else {
        write!(f, "{v}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(v) => fmt_number(f, *v),
            Node::Coord { name, .. } => write!(f, "{name}"),
            Node::Param(name) => write!(f, "{name}"),
            Node::Unary(UnaryOp::Neg, a) => write!(f, "-{a}"),
            Node::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self, rhs)
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs.clone())
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self, rhs.clone())
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs)
            }
        }
        impl std::ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self, Expr::constant(rhs))
            }
        }
        impl std::ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self.clone(), Expr::constant(rhs))
            }
        }
        impl std::ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, Expr::constant(self), rhs)
            }
        }
        impl std::ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, Expr::constant(self), rhs.clone())
            }
        }
    };
}

impl_binop!(Add, add, BinaryOp::Add);
impl_binop!(Sub, sub, BinaryOp::Sub);
impl_binop!(Mul, mul, BinaryOp::Mul);
impl_binop!(Div, div, BinaryOp::Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self.clone())
    }
}

#[cfg(test)]
mod tests;
