use std::sync::Arc;

use nalgebra::Matrix4;

use super::CurvatureError;
use crate::expr::{Expr, ParamEnv, Program, Scope};

/// One chart coordinate: name, range and optional period.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordDecl {
    pub name: String,
    /// Lower bound; `None` means unbounded.
    pub lo: Option<Expr>,
    /// Upper bound; `None` means unbounded.
    pub hi: Option<Expr>,
    /// Period expression for periodic coordinates.
    pub period: Option<Expr>,
}

impl CoordDecl {
    pub fn new(name: &str, lo: Option<Expr>, hi: Option<Expr>, period: Option<Expr>) -> Self {
        CoordDecl { name: name.to_string(), lo, hi, period }
    }
}

/// A metric on a single chart: coordinates, parameters, orientation and
/// the ten symbolic components `gᵢⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub name: String,
    /// Declared parameters with default values.
    pub params: ParamEnv,
    pub coords: Vec<CoordDecl>,
    /// Positively oriented ordering of the coordinate differentials.
    pub orientation: [usize; 4],
    /// Upper-triangular components, indexed by [`sym_slot`].
    pub components: [Expr; 10],
}

/// Position of `(i, j)` in the upper-triangle storage used by [`MetricSpec::components`].
pub fn sym_slot(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    const OFFSET: [usize; 4] = [0, 4, 7, 9];
    OFFSET[i] + (j - i)
}

/// Sign of a permutation of `0..4`.
pub fn permutation_sign(p: &[usize; 4]) -> f64 {
    let mut s = 1.0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            if p[a] > p[b] {
                s = -s;
            } else if p[a] == p[b] {
                return 0.0;
            }
        }
    }
    s
}

impl MetricSpec {
    pub fn new(name: &str, params: ParamEnv, coords: Vec<CoordDecl>) -> Self {
        MetricSpec {
            name: name.to_string(),
            params,
            coords,
            orientation: [0, 1, 2, 3],
            components: std::array::from_fn(|_| Expr::zero()),
        }
    }

    pub fn scope(&self) -> Scope {
        let coords: Vec<&str> = self.coords.iter().map(|c| c.name.as_str()).collect();
        let params: Vec<&str> = self.params.iter().map(|(k, _)| k).collect();
        Scope::new(&coords, &params)
    }

    pub fn coord(&self, i: usize) -> Expr {
        Expr::coord(i, &self.coords[i].name)
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.name == name)
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.components[sym_slot(i, j)] = e;
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.components[sym_slot(i, j)]
    }

    pub fn with_orientation(mut self, orientation: [usize; 4]) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn orientation_sign(&self) -> f64 {
        permutation_sign(&self.orientation)
    }

    /// Coordinates on which no component depends.
    pub fn invariant_coords(&self) -> [bool; 4] {
        std::array::from_fn(|c| !self.components.iter().any(|e| e.depends_on(c)))
    }

    /// The metric `φ² g` for a positive function `φ`.
    pub fn conformal(&self, phi: &Expr, name: &str) -> MetricSpec {
        let phi2 = phi * phi;
        let mut out = self.clone();
        out.name = name.to_string();
        for e in out.components.iter_mut() {
            *e = &phi2 * &*e;
        }
        out
    }

    /// Numeric range of coordinate `i` under `env` (unbounded ends are infinite).
    pub fn range(&self, i: usize, env: &ParamEnv) -> Result<(f64, f64), CurvatureError> {
        let c = &self.coords[i];
        let lo = match &c.lo {
            Some(e) => e.evaluate(&[0.0; 4], env)?,
            None => f64::NEG_INFINITY,
        };
        let hi = match &c.hi {
            Some(e) => e.evaluate(&[0.0; 4], env)?,
            None => f64::INFINITY,
        };
        Ok((lo, hi))
    }

    pub fn period(&self, i: usize, env: &ParamEnv) -> Result<Option<f64>, CurvatureError> {
        match &self.coords[i].period {
            Some(e) => Ok(Some(e.evaluate(&[0.0; 4], env)?)),
            None => Ok(None),
        }
    }

    /// Parameters of `self` overridden by `env`.
    pub fn resolve_env(&self, env: &ParamEnv) -> ParamEnv {
        let mut out = self.params.clone();
        for (k, v) in env.iter() {
            out.set(k, v);
        }
        out
    }

    /// Compile the metric together with its first and second derivatives.
    pub fn compile(self: &Arc<Self>, env: &ParamEnv) -> Result<MetricEval, CurvatureError> {
        MetricEval::new(self.clone(), env)
    }
}

/// Metric components with exact first and second coordinate derivatives at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricJet {
    pub g: Matrix4<f64>,
    /// `dg[k] = ∂ₖ g`.
    pub dg: [Matrix4<f64>; 4],
    /// `ddg[k][l] = ∂ₖ∂ₗ g`.
    pub ddg: [[Matrix4<f64>; 4]; 4],
}

/// A metric compiled against fixed parameter values.
#[derive(Debug, Clone)]
pub struct MetricEval {
    pub spec: Arc<MetricSpec>,
    pub env: ParamEnv,
    pub invariant: [bool; 4],
    pub ranges: [(f64, f64); 4],
    program: Program,
}

const N_JET: usize = 10 + 40 + 160;

impl MetricEval {
    pub fn new(spec: Arc<MetricSpec>, env: &ParamEnv) -> Result<MetricEval, CurvatureError> {
        let env = spec.resolve_env(env);
        // layout: g (10), ∂ₖg (4×10), ∂ₖ∂ₗg (4×4×10)
        let mut all: Vec<Expr> = spec.components.to_vec();
        let first: Vec<Expr> =
            (0..4).flat_map(|k| spec.components.iter().map(move |e| e.differentiate(k, 1))).collect();
        all.extend(first.iter().cloned());
        for k in 0..4 {
            for l in 0..4 {
                all.extend((0..10).map(|n| first[k * 10 + n].differentiate(l, 1)));
            }
        }
        let program = Program::compile(&all, &env)?;
        let invariant = spec.invariant_coords();
        let mut ranges = [(0.0, 0.0); 4];
        for (i, r) in ranges.iter_mut().enumerate() {
            *r = spec.range(i, &env)?;
        }
        Ok(MetricEval { spec, env, invariant, ranges, program })
    }

    pub fn orientation_sign(&self) -> f64 {
        self.spec.orientation_sign()
    }

    pub fn contains(&self, p: &[f64; 4]) -> bool {
        p.iter().zip(&self.ranges).all(|(x, (lo, hi))| *x > *lo && *x < *hi)
    }

    /// Distance from `p[i]` to the nearest chart boundary in coordinate `i`.
    pub fn boundary_distance(&self, p: &[f64; 4], i: usize) -> f64 {
        let (lo, hi) = self.ranges[i];
        (p[i] - lo).min(hi - p[i])
    }

    pub fn metric(&self, p: &[f64; 4]) -> Result<Matrix4<f64>, CurvatureError> {
        Ok(self.jet(p)?.g)
    }

    pub fn jet(&self, p: &[f64; 4]) -> Result<MetricJet, CurvatureError> {
        let mut scratch = Vec::new();
        let mut v = vec![0.0; N_JET];
        self.program.eval_into(p, &mut scratch, &mut v)?;
        let unpack = |off: usize| Matrix4::from_fn(|i, j| v[off + sym_slot(i, j)]);
        let g = unpack(0);
        let dg = std::array::from_fn(|k| unpack(10 + 10 * k));
        let ddg = std::array::from_fn(|k| std::array::from_fn(|l| unpack(50 + 40 * k + 10 * l)));
        Ok(MetricJet { g, dg, ddg })
    }
}
