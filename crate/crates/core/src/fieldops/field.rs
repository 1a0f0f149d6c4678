use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::stencil::{first_weights, richardson, second_weights, StencilConfig};
use super::FieldError;
use crate::expr::{Expr, ParamEnv, Program};
use crate::tensor_point::{Form2, SymT2};

/// What a field's components mean. Components are always covariant and
/// stored densely as `4^rank` coordinate entries in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    OneForm,
    TwoForm,
    Sym2,
}

impl FieldKind {
    pub fn rank(self) -> usize {
        match self {
            FieldKind::Scalar => 0,
            FieldKind::OneForm => 1,
            FieldKind::TwoForm | FieldKind::Sym2 => 2,
        }
    }

    pub fn n_components(self) -> usize {
        4usize.pow(self.rank() as u32)
    }
}

pub type FieldFn = dyn Fn(&[f64; 4]) -> Result<Vec<f64>, FieldError> + Send + Sync;

#[derive(Clone)]
enum Source {
    Numeric(Arc<FieldFn>),
    Symbolic(Arc<Program>),
}

/// A tensor field given either by a numeric evaluator (differentiated by
/// stencils) or by symbolic component expressions (differentiated exactly).
#[derive(Clone)]
pub struct TensorField {
    pub kind: FieldKind,
    /// Coordinates along which the components are constant; stencils skip them.
    pub invariant: [bool; 4],
    source: Source,
}

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let src = match self.source {
            Source::Numeric(_) => "numeric",
            Source::Symbolic(_) => "symbolic",
        };
        f.debug_struct("TensorField").field("kind", &self.kind).field("invariant", &self.invariant).field("source", &src).finish()
    }
}

/// Values and coordinate derivatives of a field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldJet {
    pub v: Vec<f64>,
    /// `d[k]` = `∂ₖ` of every component.
    pub d: [Vec<f64>; 4],
    /// `dd[k][l]` = `∂ₖ∂ₗ` of every component.
    pub dd: [[Vec<f64>; 4]; 4],
}

impl FieldJet {
    pub fn zeros(n: usize) -> Self {
        FieldJet {
            v: vec![0.0; n],
            d: std::array::from_fn(|_| vec![0.0; n]),
            dd: std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; n])),
        }
    }
}

impl TensorField {
    pub fn numeric(
        kind: FieldKind,
        f: impl Fn(&[f64; 4]) -> Result<Vec<f64>, FieldError> + Send + Sync + 'static,
    ) -> Self {
        TensorField { kind, invariant: [false; 4], source: Source::Numeric(Arc::new(f)) }
    }

    /// A field from one expression per component (`4^rank` of them, row-major).
    pub fn symbolic(kind: FieldKind, components: &[Expr], env: &ParamEnv) -> Result<Self, FieldError> {
        let n = kind.n_components();
        assert_eq!(components.len(), n, "expected {n} component expressions");
        let mut roots: Vec<Expr> = components.to_vec();
        let first: Vec<Expr> = (0..4).flat_map(|k| components.iter().map(move |e| e.differentiate(k, 1))).collect();
        roots.extend(first.iter().cloned());
        for k in 0..4 {
            for l in 0..4 {
                roots.extend((0..n).map(|c| first[k * n + c].differentiate(l, 1)));
            }
        }
        let invariant = std::array::from_fn(|c| !components.iter().any(|e| e.depends_on(c)));
        let program = Program::compile(&roots, env).map_err(FieldError::from)?;
        Ok(TensorField { kind, invariant, source: Source::Symbolic(Arc::new(program)) })
    }

    /// Symmetric 2-tensor field from upper-triangle expressions `(i, j, expr)`.
    pub fn symbolic_sym2(entries: &[(usize, usize, Expr)], env: &ParamEnv) -> Result<Self, FieldError> {
        let mut comps = vec![Expr::zero(); 16];
        for (i, j, e) in entries {
            comps[4 * i + j] = e.clone();
            comps[4 * j + i] = e.clone();
        }
        TensorField::symbolic(FieldKind::Sym2, &comps, env)
    }

    /// 2-form field from entries `(i, j, expr)` with `i < j`.
    pub fn symbolic_form2(entries: &[(usize, usize, Expr)], env: &ParamEnv) -> Result<Self, FieldError> {
        let mut comps = vec![Expr::zero(); 16];
        for (i, j, e) in entries {
            comps[4 * i + j] = e.clone();
            comps[4 * j + i] = -e;
        }
        TensorField::symbolic(FieldKind::TwoForm, &comps, env)
    }

    pub fn with_invariant(mut self, invariant: [bool; 4]) -> Self {
        self.invariant = invariant;
        self
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self.source, Source::Symbolic(_))
    }

    pub fn value(&self, p: &[f64; 4]) -> Result<Vec<f64>, FieldError> {
        match &self.source {
            Source::Numeric(f) => f(p),
            Source::Symbolic(prog) => {
                let n = self.kind.n_components();
                let all = prog.eval(p)?;
                Ok(all[..n].to_vec())
            }
        }
    }

    pub fn form2(&self, p: &[f64; 4]) -> Result<Form2, FieldError> {
        Ok(Form2::from_matrix(&nalgebra::Matrix4::from_row_slice(&self.value(p)?)))
    }

    pub fn sym2(&self, p: &[f64; 4]) -> Result<SymT2, FieldError> {
        Ok(SymT2::from_matrix(&nalgebra::Matrix4::from_row_slice(&self.value(p)?)))
    }

    /// Values and first/second coordinate derivatives at `p`.
    pub fn jet(&self, p: &[f64; 4], ranges: &[(f64, f64); 4], cfg: &StencilConfig) -> Result<FieldJet, FieldError> {
        let n = self.kind.n_components();
        if let Source::Symbolic(prog) = &self.source {
            let all = prog.eval(p)?;
            let mut jet = FieldJet::zeros(n);
            jet.v.copy_from_slice(&all[..n]);
            for k in 0..4 {
                jet.d[k].copy_from_slice(&all[n + k * n..n + (k + 1) * n]);
                for l in 0..4 {
                    let off = 5 * n + (4 * k + l) * n;
                    jet.dd[k][l].copy_from_slice(&all[off..off + n]);
                }
            }
            return Ok(jet);
        }
        let steps = self.steps(p, ranges, cfg)?;
        let center = self.value(p)?;
        let mut estimates = Vec::with_capacity(cfg.richardson + 1);
        for level in 0..=cfg.richardson {
            let scale = 0.5f64.powi(level as i32);
            let h: [f64; 4] = std::array::from_fn(|i| steps[i] * scale);
            estimates.push(self.fd_derivatives(p, &h, &center, cfg.order, cfg.first_only)?);
        }
        let flat = richardson(&estimates, cfg.order);
        let mut jet = FieldJet::zeros(n);
        jet.v = center;
        for k in 0..4 {
            jet.d[k].copy_from_slice(&flat[k * n..(k + 1) * n]);
            for l in 0..4 {
                let off = 4 * n + (4 * k + l) * n;
                jet.dd[k][l].copy_from_slice(&flat[off..off + n]);
            }
        }
        Ok(jet)
    }

    fn steps(&self, p: &[f64; 4], ranges: &[(f64, f64); 4], cfg: &StencilConfig) -> Result<[f64; 4], FieldError> {
        let mut h = [0.0; 4];
        for i in 0..4 {
            if self.invariant[i] {
                continue;
            }
            let (lo, hi) = ranges[i];
            let dist = (p[i] - lo).min(hi - p[i]);
            if !(dist > 0.0) {
                return Err(FieldError::StencilOutOfChart { point: *p, coord: i });
            }
            let base = cfg.step * p[i].abs().max(1.0);
            h[i] = base.min(0.5 * dist / cfg.reach() as f64);
        }
        Ok(h)
    }

    // Flattened [∂ₖ (4n) | ∂ₖ∂ₗ (16n)] with step vector `h`.
    fn fd_derivatives(
        &self,
        p: &[f64; 4],
        h: &[f64; 4],
        center: &[f64],
        order: usize,
        first_only: bool,
    ) -> Result<Vec<f64>, FieldError> {
        let n = self.kind.n_components();
        let r = (order / 2) as i32;
        let w1 = first_weights(order);
        let w2 = second_weights(order);
        let mut cache: HashMap<[i32; 4], Vec<f64>> = HashMap::new();
        cache.insert([0; 4], center.to_vec());
        let mut at = |off: [i32; 4]| -> Result<Vec<f64>, FieldError> {
            if let Some(v) = cache.get(&off) {
                return Ok(v.clone());
            }
            let q: [f64; 4] = std::array::from_fn(|i| p[i] + off[i] as f64 * h[i]);
            let v = self.value(&q)?;
            cache.insert(off, v.clone());
            Ok(v)
        };
        let mut out = vec![0.0; 20 * n];
        let active: Vec<usize> = (0..4).filter(|&i| !self.invariant[i]).collect();
        for &k in &active {
            let mut dk = vec![0.0; n];
            let mut dkk = vec![0.0; n];
            for s in -r..=r {
                let (a, b) = (w1[(s + r) as usize], w2[(s + r) as usize]);
                if a == 0.0 && b == 0.0 {
                    continue;
                }
                let mut off = [0; 4];
                off[k] = s;
                let v = at(off)?;
                for c in 0..n {
                    dk[c] += a * v[c];
                    dkk[c] += b * v[c];
                }
            }
            for c in 0..n {
                out[k * n + c] = dk[c] / h[k];
                out[4 * n + (4 * k + k) * n + c] = dkk[c] / (h[k] * h[k]);
            }
        }
        let mixed: &[usize] = if first_only { &[] } else { &active };
        for (ai, &k) in mixed.iter().enumerate() {
            for &l in &mixed[ai + 1..] {
                let mut dkl = vec![0.0; n];
                for s in -r..=r {
                    let a = w1[(s + r) as usize];
                    if a == 0.0 {
                        continue;
                    }
                    for t in -r..=r {
                        let b = w1[(t + r) as usize];
                        if b == 0.0 {
                            continue;
                        }
                        let mut off = [0; 4];
                        off[k] = s;
                        off[l] = t;
                        let v = at(off)?;
                        for c in 0..n {
                            dkl[c] += a * b * v[c];
                        }
                    }
                }
                for c in 0..n {
                    let v = dkl[c] / (h[k] * h[l]);
                    out[4 * n + (4 * k + l) * n + c] = v;
                    out[4 * n + (4 * l + k) * n + c] = v;
                }
            }
        }
        Ok(out)
    }
}
