use std::collections::HashMap;
use std::sync::Arc;

use super::{BinaryOp, Expr, ExprError, Node, ParamEnv, UnaryOp};

pub(super) fn apply_unary(op: UnaryOp, x: f64) -> Result<f64, &'static str> {
    Ok(match op {
        UnaryOp::Neg => -x,
        UnaryOp::Sin => x.sin(),
        UnaryOp::Cos => x.cos(),
        UnaryOp::Tan => x.tan(),
        UnaryOp::Sinh => x.sinh(),
        UnaryOp::Cosh => x.cosh(),
        UnaryOp::Tanh => x.tanh(),
        UnaryOp::Exp => x.exp(),
        UnaryOp::Log => {
            if x <= 0.0 {
                return Err("log");
            }
            x.ln()
        }
        UnaryOp::Sqrt => {
            if x < 0.0 {
                return Err("sqrt");
            }
            x.sqrt()
        }
        UnaryOp::Abs => x.abs(),
    })
}

pub(super) fn apply_binary(op: BinaryOp, a: f64, b: f64) -> Result<f64, &'static str> {
    Ok(match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b == 0.0 {
                return Err("division");
            }
            a / b
        }
        BinaryOp::Pow => {
            if b.fract() == 0.0 && b.abs() < 1e9 {
                if a == 0.0 && b < 0.0 {
                    return Err("pow");
                }
                a.powi(b as i32)
            } else {
                if a < 0.0 || (a == 0.0 && b < 0.0) {
                    return Err("pow");
                }
                a.powf(b)
            }
        }
    })
}

pub(super) fn evaluate(e: &Expr, point: &[f64], env: &ParamEnv) -> Result<f64, ExprError> {
    match e.node() {
        Node::Const(v) => Ok(*v),
        Node::Coord { index, .. } => Ok(point[*index]),
        Node::Param(name) => env.get(name).ok_or_else(|| ExprError::UnboundParam(name.to_string())),
        Node::Unary(op, a) => {
            let x = evaluate(a, point, env)?;
            apply_unary(*op, x).map_err(|op| ExprError::Domain { op, subexpr: e.to_string(), value: x })
        }
        Node::Binary(op, a, b) => {
            let x = evaluate(a, point, env)?;
            let y = evaluate(b, point, env)?;
            apply_binary(*op, x, y).map_err(|op| ExprError::Domain {
                op,
                subexpr: e.to_string(),
                value: if op == "division" { y } else { x },
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Instr {
    Const(u64),
    Coord(usize),
    Unary(UnaryOp, usize),
    Binary(BinaryOp, usize, usize),
}

/// A set of expressions compiled into one deduplicated instruction list.
///
/// Structurally equal subtrees are stored once and evaluated once per point,
/// so evaluating a metric together with all its derivative trees costs time
/// proportional to the number of distinct subexpressions.
#[derive(Debug, Clone)]
pub struct Program {
    instrs: Vec<Instr>,
    sources: Vec<Expr>,
    roots: Vec<usize>,
}

struct Compiler {
    instrs: Vec<Instr>,
    sources: Vec<Expr>,
    dedup: HashMap<Instr, usize>,
    by_ptr: HashMap<*const Node, usize>,
}

impl Compiler {
    fn push(&mut self, instr: Instr, src: &Expr) -> usize {
        if let Some(&i) = self.dedup.get(&instr) {
            return i;
        }
        let i = self.instrs.len();
        self.instrs.push(instr);
        self.sources.push(src.clone());
        self.dedup.insert(instr, i);
        i
    }

    fn compile(&mut self, e: &Expr, env: &ParamEnv) -> Result<usize, ExprError> {
        let key = Arc::as_ptr(&e.0);
        if let Some(&i) = self.by_ptr.get(&key) {
            return Ok(i);
        }
        let i = match e.node() {
            Node::Const(v) => self.push(Instr::Const(v.to_bits()), e),
            Node::Coord { index, .. } => self.push(Instr::Coord(*index), e),
            Node::Param(name) => {
                let v = env.get(name).ok_or_else(|| ExprError::UnboundParam(name.to_string()))?;
                self.push(Instr::Const(v.to_bits()), e)
            }
            Node::Unary(op, a) => {
                let a = self.compile(a, env)?;
                self.push(Instr::Unary(*op, a), e)
            }
            Node::Binary(op, a, b) => {
                let a = self.compile(a, env)?;
                let b = self.compile(b, env)?;
                self.push(Instr::Binary(*op, a, b), e)
            }
        };
        self.by_ptr.insert(key, i);
        Ok(i)
    }
}

impl Program {
    pub fn compile(exprs: &[Expr], env: &ParamEnv) -> Result<Program, ExprError> {
        let mut c = Compiler {
            instrs: Vec::new(),
            sources: Vec::new(),
            dedup: HashMap::new(),
            by_ptr: HashMap::new(),
        };
        let mut roots = Vec::with_capacity(exprs.len());
        for e in exprs {
            roots.push(c.compile(e, env)?);
        }
        Ok(Program { instrs: c.instrs, sources: c.sources, roots })
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn n_roots(&self) -> usize {
        self.roots.len()
    }

    /// Evaluate every root at `point`, writing into `out`.
    pub fn eval_into(&self, point: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<(), ExprError> {
        scratch.clear();
        scratch.reserve(self.instrs.len());
        for (k, instr) in self.instrs.iter().enumerate() {
            let v = match *instr {
                Instr::Const(bits) => f64::from_bits(bits),
                Instr::Coord(i) => point[i],
                Instr::Unary(op, a) => {
                    let x = scratch[a];
                    apply_unary(op, x).map_err(|op| ExprError::Domain {
                        op,
                        subexpr: self.sources[k].to_string(),
                        value: x,
                    })?
                }
                Instr::Binary(op, a, b) => {
                    let (x, y) = (scratch[a], scratch[b]);
                    apply_binary(op, x, y).map_err(|op| ExprError::Domain {
                        op,
                        subexpr: self.sources[k].to_string(),
                        value: if op == "division" { y } else { x },
                    })?
                }
            };
            scratch.push(v);
        }
        for (o, &r) in out.iter_mut().zip(&self.roots) {
            *o = scratch[r];
        }
        Ok(())
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, ExprError> {
        let mut scratch = Vec::new();
        let mut out = vec![0.0; self.roots.len()];
        self.eval_into(point, &mut scratch, &mut out)?;
        Ok(out)
    }
}
