use std::collections::HashMap;
use std::sync::Arc;

use super::{BinaryOp, Expr, Node, UnaryOp};

pub(super) fn derivative(e: &Expr, wrt: usize) -> Expr {
    let mut memo = HashMap::new();
    d(e, wrt, &mut memo)
}

// Memoized on node identity so shared subtrees are differentiated once.
fn d(e: &Expr, wrt: usize, memo: &mut HashMap<*const Node, Expr>) -> Expr {
    let key = Arc::as_ptr(&e.0);
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }
    let out = match e.node() {
        Node::Const(_) | Node::Param(_) => Expr::zero(),
        Node::Coord { index, .. } => {
            if *index == wrt {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Unary(op, a) => {
            let da = d(a, wrt, memo);
            let outer = match op {
                UnaryOp::Neg => return Expr::unary(UnaryOp::Neg, da),
                UnaryOp::Sin => a.cos(),
                UnaryOp::Cos => a.sin().neg(),
                UnaryOp::Tan => 1.0 / a.cos().powf(2.0),
                UnaryOp::Sinh => Expr::unary(UnaryOp::Cosh, a.clone()),
                UnaryOp::Cosh => Expr::unary(UnaryOp::Sinh, a.clone()),
                UnaryOp::Tanh => 1.0 - Expr::unary(UnaryOp::Tanh, a.clone()).powf(2.0),
                UnaryOp::Exp => e.clone(),
                UnaryOp::Log => 1.0 / a,
                UnaryOp::Sqrt => 0.5 / e,
                UnaryOp::Abs => a / e,
            };
            outer * da
        }
        Node::Binary(op, a, b) => {
            let da = d(a, wrt, memo);
            let db = d(b, wrt, memo);
            match op {
                BinaryOp::Add => da + db,
                BinaryOp::Sub => da - db,
                BinaryOp::Mul => da * b + a * db,
                BinaryOp::Div => da / b - a * db / b.powf(2.0),
                BinaryOp::Pow => {
                    if let Some(c) = b.as_const() {
                        c * a.powf(c - 1.0) * da
                    } else if da.as_const() == Some(0.0) {
                        e * a.log() * db
                    } else {
                        e * (db * a.log() + b * da / a)
                    }
                }
            }
        }
    };
    memo.insert(key, out.clone());
    out
}
