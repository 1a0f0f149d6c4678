use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Matrix4;

use super::{levi_civita, PointFrame, TensorError};

/// Storage order of the independent entries of a 2-form.
pub const FORM2_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
/// Storage order of the independent entries of a 3-form.
pub const THREE_FORM_TRIPLES: [(usize, usize, usize); 4] = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];

const DUALITY_TOL: f64 = 1e-8;

/// A 2-form in coordinate components; antisymmetric by storage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Form2 {
    pub c: [f64; 6],
}

/// A 3-form in coordinate components; antisymmetric by storage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThreeForm {
    pub c: [f64; 4],
}

/// A covariant symmetric 2-tensor in coordinate components; symmetric by storage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymT2 {
    pub c: [f64; 10],
    pub trace_free: bool,
}

/// A 1-form-valued self-dual 2-form, `Σₐ Σₖ c[a][k] eᵃ ⊗ ωₖ`, with `eᵃ` the
/// frame's orthonormal coframe and `ωₖ` its self-dual basis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OmegaOneSD {
    pub c: [[f64; 3]; 4],
}

fn sym_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // row-major upper triangle: (0,0)..(0,3),(1,1)..(1,3),(2,2),(2,3),(3,3)
    const OFFSET: [usize; 4] = [0, 4, 7, 9];
    OFFSET[i] + (j - i)
}

impl Form2 {
    pub fn zero() -> Self {
        Form2::default()
    }

    /// Antisymmetric part `½(m − mᵀ)` of a coordinate matrix.
    pub fn from_matrix(m: &Matrix4<f64>) -> Self {
        let mut c = [0.0; 6];
        for (n, &(i, j)) in FORM2_PAIRS.iter().enumerate() {
            c[n] = 0.5 * (m[(i, j)] - m[(j, i)]);
        }
        Form2 { c }
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for (n, &(i, j)) in FORM2_PAIRS.iter().enumerate() {
            m[(i, j)] = self.c[n];
            m[(j, i)] = -self.c[n];
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b, s) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let n = FORM2_PAIRS.iter().position(|&p| p == (a, b)).unwrap();
        s * self.c[n]
    }

    /// `a ∧ b` for two covectors.
    pub fn wedge(a: &[f64; 4], b: &[f64; 4]) -> Self {
        let mut c = [0.0; 6];
        for (n, &(i, j)) in FORM2_PAIRS.iter().enumerate() {
            c[n] = a[i] * b[j] - a[j] * b[i];
        }
        Form2 { c }
    }

    /// From components in the orthonormal coframe of `frame`.
    pub fn from_frame(frame: &PointFrame, w: &Matrix4<f64>) -> Self {
        Form2::from_matrix(&frame.from_frame2(w))
    }

    /// Components in the orthonormal coframe of `frame`.
    pub fn to_frame(&self, frame: &PointFrame) -> Matrix4<f64> {
        frame.to_frame2(&self.to_matrix())
    }

    /// `⟨α,β⟩ = ½ αᵢⱼ βⁱʲ`.
    pub fn inner(&self, other: &Form2, frame: &PointFrame) -> f64 {
        let a = self.to_matrix();
        let b = other.to_matrix();
        0.5 * (frame.g_inv * a * frame.g_inv).component_mul(&b).sum()
    }

    pub fn norm(&self, frame: &PointFrame) -> f64 {
        self.inner(self, frame).max(0.0).sqrt()
    }

    /// Coefficients on the frame's self-dual basis.
    pub fn sd_coeffs(&self, frame: &PointFrame) -> [f64; 3] {
        let w = self.to_frame(frame);
        std::array::from_fn(|k| 0.5 * frame.sd_basis[k].component_mul(&w).sum())
    }

    /// Coefficients on the frame's anti-self-dual basis.
    pub fn asd_coeffs(&self, frame: &PointFrame) -> [f64; 3] {
        let w = self.to_frame(frame);
        std::array::from_fn(|k| 0.5 * frame.asd_basis[k].component_mul(&w).sum())
    }

    pub fn from_sd_coeffs(frame: &PointFrame, x: &[f64; 3]) -> Self {
        let w = frame.sd_basis[0] * x[0] + frame.sd_basis[1] * x[1] + frame.sd_basis[2] * x[2];
        Form2::from_frame(frame, &w)
    }

    pub fn from_asd_coeffs(frame: &PointFrame, x: &[f64; 3]) -> Self {
        let w = frame.asd_basis[0] * x[0] + frame.asd_basis[1] * x[1] + frame.asd_basis[2] * x[2];
        Form2::from_frame(frame, &w)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl ThreeForm {
    pub fn zero() -> Self {
        ThreeForm::default()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        if i == j || j == k || i == k {
            return 0.0;
        }
        let mut idx = [i, j, k];
        let mut sign = 1.0;
        for a in 0..3 {
            for b in 0..(2 - a) {
                if idx[b] > idx[b + 1] {
                    idx.swap(b, b + 1);
                    sign = -sign;
                }
            }
        }
        let n = THREE_FORM_TRIPLES.iter().position(|&t| t == (idx[0], idx[1], idx[2])).unwrap();
        sign * self.c[n]
    }

    /// Antisymmetrised projection of a full rank-3 array (`φ_[ijk]`).
    pub fn from_full(f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut c = [0.0; 4];
        for (n, &(i, j, k)) in THREE_FORM_TRIPLES.iter().enumerate() {
            c[n] = (f(i, j, k) + f(j, k, i) + f(k, i, j) - f(j, i, k) - f(i, k, j) - f(k, j, i)) / 6.0;
        }
        ThreeForm { c }
    }

    /// Components `Φ_abc` in the orthonormal coframe.
    pub fn to_frame(&self, frame: &PointFrame) -> ThreeForm {
        let e = &frame.frame;
        let mut c = [0.0; 4];
        for (n, &(a, b, cc)) in THREE_FORM_TRIPLES.iter().enumerate() {
            let mut s = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        s += self.get(i, j, k) * e[(i, a)] * e[(j, b)] * e[(k, cc)];
                    }
                }
            }
            c[n] = s;
        }
        ThreeForm { c }
    }

    /// From frame components back to coordinate components.
    pub fn from_frame(frame: &PointFrame, fr: &ThreeForm) -> ThreeForm {
        let e = &frame.coframe;
        let mut c = [0.0; 4];
        for (n, &(i, j, k)) in THREE_FORM_TRIPLES.iter().enumerate() {
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    for cc in 0..4 {
                        s += fr.get(a, b, cc) * e[(a, i)] * e[(b, j)] * e[(cc, k)];
                    }
                }
            }
            c[n] = s;
        }
        ThreeForm { c }
    }

    /// `⟨φ,ψ⟩ = ⅙ φᵢⱼₖ ψⁱʲᵏ`.
    pub fn inner(&self, other: &ThreeForm, frame: &PointFrame) -> f64 {
        let a = self.to_frame(frame);
        let b = other.to_frame(frame);
        a.c.iter().zip(&b.c).map(|(x, y)| x * y).sum()
    }

    pub fn norm(&self, frame: &PointFrame) -> f64 {
        self.inner(self, frame).max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl SymT2 {
    pub fn zero() -> Self {
        SymT2::default()
    }

    /// Symmetric part `½(m + mᵀ)` of a coordinate matrix.
    pub fn from_matrix(m: &Matrix4<f64>) -> Self {
        let mut c = [0.0; 10];
        for i in 0..4 {
            for j in i..4 {
                c[sym_index(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)]);
            }
        }
        SymT2 { c, trace_free: false }
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.c[sym_index(i, j)])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[sym_index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.c[sym_index(i, j)] = v;
    }

    /// `gⁱʲ hᵢⱼ`.
    pub fn trace(&self, frame: &PointFrame) -> f64 {
        frame.g_inv.component_mul(&self.to_matrix()).sum()
    }

    /// `hᵢⱼ kⁱʲ`.
    pub fn inner(&self, other: &SymT2, frame: &PointFrame) -> f64 {
        (frame.g_inv * self.to_matrix() * frame.g_inv).component_mul(&other.to_matrix()).sum()
    }

    pub fn norm(&self, frame: &PointFrame) -> f64 {
        self.inner(self, frame).max(0.0).sqrt()
    }

    /// `h − ¼ (tr h) g`, flagged trace-free.
    pub fn trace_free_part(&self, frame: &PointFrame) -> SymT2 {
        let t = self.trace(frame);
        let mut out = SymT2::from_matrix(&(self.to_matrix() - frame.g * (0.25 * t)));
        out.trace_free = true;
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl OmegaOneSD {
    pub fn zero() -> Self {
        OmegaOneSD::default()
    }

    /// Euclidean inner product of the coefficients (the frame bases are orthonormal).
    pub fn inner(&self, other: &OmegaOneSD) -> f64 {
        let mut s = 0.0;
        for a in 0..4 {
            for k in 0..3 {
                s += self.c[a][k] * other.c[a][k];
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }
}

macro_rules! linear_ops {
    ($t:ty, $field:ident) => {
        impl Add for $t {
            type Output = $t;
            fn add(mut self, rhs: $t) -> $t {
                for (a, b) in self.$field.iter_mut().zip(rhs.$field.iter()) {
                    *a += *b;
                }
                self
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(mut self, rhs: $t) -> $t {
                for (a, b) in self.$field.iter_mut().zip(rhs.$field.iter()) {
                    *a -= *b;
                }
                self
            }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(mut self, s: f64) -> $t {
                for a in self.$field.iter_mut() {
                    *a *= s;
                }
                self
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                self * -1.0
            }
        }
    };
}

linear_ops!(Form2, c);
linear_ops!(ThreeForm, c);

impl Add for SymT2 {
    type Output = SymT2;
    fn add(mut self, rhs: SymT2) -> SymT2 {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a += *b;
        }
        self.trace_free &= rhs.trace_free;
        self
    }
}

impl Sub for SymT2 {
    type Output = SymT2;
    fn sub(self, rhs: SymT2) -> SymT2 {
        self + rhs * -1.0
    }
}

impl Mul<f64> for SymT2 {
    type Output = SymT2;
    fn mul(mut self, s: f64) -> SymT2 {
        for a in self.c.iter_mut() {
            *a *= s;
        }
        self
    }
}

impl Neg for SymT2 {
    type Output = SymT2;
    fn neg(self) -> SymT2 {
        self * -1.0
    }
}

impl Add for OmegaOneSD {
    type Output = OmegaOneSD;
    fn add(mut self, rhs: OmegaOneSD) -> OmegaOneSD {
        for a in 0..4 {
            for k in 0..3 {
                self.c[a][k] += rhs.c[a][k];
            }
        }
        self
    }
}

impl Sub for OmegaOneSD {
    type Output = OmegaOneSD;
    fn sub(self, rhs: OmegaOneSD) -> OmegaOneSD {
        self + rhs * -1.0
    }
}

impl Mul<f64> for OmegaOneSD {
    type Output = OmegaOneSD;
    fn mul(mut self, s: f64) -> OmegaOneSD {
        for row in self.c.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        self
    }
}

fn star_frame(w: &Matrix4<f64>) -> Matrix4<f64> {
    let mut out = Matrix4::zeros();
    for a in 0..4 {
        for b in 0..4 {
            let mut s = 0.0;
            for c in 0..4 {
                for d in 0..4 {
                    s += levi_civita(a, b, c, d) * w[(c, d)];
                }
            }
            out[(a, b)] = 0.5 * s;
        }
    }
    out
}

/// Hodge star on 2-forms.
pub fn hodge_star(omega: &Form2, frame: &PointFrame) -> Form2 {
    Form2::from_frame(frame, &star_frame(&omega.to_frame(frame)))
}

/// Self-dual and anti-self-dual parts `(½(ω + *ω), ½(ω − *ω))`.
pub fn project_sd_asd(omega: &Form2, frame: &PointFrame) -> (Form2, Form2) {
    let star = hodge_star(omega, frame);
    ((*omega + star) * 0.5, (*omega - star) * 0.5)
}

fn duality_residual(alpha: &Form2, frame: &PointFrame, sign: f64) -> f64 {
    let n = alpha.norm(frame);
    if n == 0.0 {
        return 0.0;
    }
    (hodge_star(alpha, frame) - *alpha * sign).norm(frame) / n
}

/// `α⁻ ∘ α⁺` as a trace-free symmetric 2-tensor.
pub fn compose_forms(alpha_minus: &Form2, alpha_plus: &Form2, frame: &PointFrame) -> Result<SymT2, TensorError> {
    let rm = duality_residual(alpha_minus, frame, -1.0);
    if rm > DUALITY_TOL {
        return Err(TensorError::DualityViolation { which: "alpha_minus", expected: "anti-self-dual", residual: rm });
    }
    let rp = duality_residual(alpha_plus, frame, 1.0);
    if rp > DUALITY_TOL {
        return Err(TensorError::DualityViolation { which: "alpha_plus", expected: "self-dual", residual: rp });
    }
    Ok(compose_unchecked(alpha_minus, alpha_plus, frame))
}

/// Composition without the duality check; the result is symmetrised.
pub fn compose_unchecked(alpha_minus: &Form2, alpha_plus: &Form2, frame: &PointFrame) -> SymT2 {
    let m = alpha_minus.to_matrix() * frame.g_inv * alpha_plus.to_matrix();
    let mut out = SymT2::from_matrix(&m);
    out.trace_free = true;
    out
}

/// `v ⌟ ω` for a coordinate vector `v`.
pub fn interior(v: &[f64; 4], omega: &Form2) -> [f64; 4] {
    std::array::from_fn(|j| (0..4).map(|i| v[i] * omega.get(i, j)).sum())
}

/// `α ∧ ω` for a covector `α` and 2-form `ω`.
pub fn wedge_1_2(alpha: &[f64; 4], omega: &Form2) -> ThreeForm {
    let mut c = [0.0; 4];
    for (n, &(i, j, k)) in THREE_FORM_TRIPLES.iter().enumerate() {
        c[n] = alpha[i] * omega.get(j, k) - alpha[j] * omega.get(i, k) + alpha[k] * omega.get(i, j);
    }
    ThreeForm { c }
}

/// `σ(φ) = Σᵢ eⁱ ⊗ (eᵢ ⌟ φ)₊`.
pub fn sigma_embed(phi: &ThreeForm, frame: &PointFrame) -> OmegaOneSD {
    let f = phi.to_frame(frame);
    let mut out = OmegaOneSD::zero();
    for a in 0..4 {
        for k in 0..3 {
            let w = &frame.sd_basis[k];
            let mut s = 0.0;
            for b in 0..4 {
                for c in 0..4 {
                    s += w[(b, c)] * f.get(a, b, c);
                }
            }
            out.c[a][k] = 0.5 * s;
        }
    }
    out
}

/// `π(α ⊗ ω) = α ∧ ω`, extended linearly.
pub fn pi_project(s: &OmegaOneSD, frame: &PointFrame) -> ThreeForm {
    let mut fr = ThreeForm::zero();
    for a in 0..4 {
        let mut e = [0.0; 4];
        e[a] = 1.0;
        let mut w = Matrix4::zeros();
        for k in 0..3 {
            w += frame.sd_basis[k] * s.c[a][k];
        }
        fr = fr + wedge_1_2(&e, &Form2::from_matrix(&w));
    }
    ThreeForm::from_frame(frame, &fr)
}

/// Coefficients `Mₖₗ` of `h ∈ Sym²₀` on the orthonormal basis `asdₖ ∘ sdₗ`.
///
/// The composition map `Ω₋ ⊗ Ω₊ → Sym²₀` is an isometry under the
/// conventions of this module, so these coefficients are plain inner products.
pub fn sym0_coeffs(h: &SymT2, frame: &PointFrame) -> nalgebra::Matrix3<f64> {
    sym0_coeffs_frame(&frame.to_frame2(&h.to_matrix()), frame)
}

/// As [`sym0_coeffs`], for a symmetric matrix already in orthonormal-frame components.
pub fn sym0_coeffs_frame(hf: &Matrix4<f64>, frame: &PointFrame) -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::from_fn(|k, l| (frame.asd_basis[k] * frame.sd_basis[l]).component_mul(hf).sum())
}

/// Inverse of [`sym0_coeffs`], in orthonormal-frame components.
pub fn sym0_from_coeffs_frame(m: &nalgebra::Matrix3<f64>, frame: &PointFrame) -> Matrix4<f64> {
    let mut out = Matrix4::zeros();
    for k in 0..3 {
        for l in 0..3 {
            out += frame.asd_basis[k] * frame.sd_basis[l] * m[(k, l)];
        }
    }
    out
}

/// Inverse of [`sym0_coeffs`].
pub fn sym0_from_coeffs(m: &nalgebra::Matrix3<f64>, frame: &PointFrame) -> SymT2 {
    let mut h = SymT2::from_matrix(&frame.from_frame2(&sym0_from_coeffs_frame(m, frame)));
    h.trace_free = true;
    h
}
