use nalgebra::{Matrix3, Matrix4};

use super::covariant::CovJet;
use super::field::{FieldKind, TensorField};
use super::stencil::StencilConfig;
use super::FieldError;
use crate::curvature::{curvature_at, rm_action, weyl_plus_sym0, CurvaturePack, MetricEval};
use crate::tensor_point::{
    levi_civita, pi_project, project_sd_asd, sigma_embed, sym0_coeffs_frame, sym0_from_coeffs_frame, Form2,
    OmegaOneSD, PointFrame, SymT2, ThreeForm,
};

/// A field's covariant 2-jet at one point together with the curvature there.
#[derive(Debug, Clone)]
pub struct LocalField {
    pub kind: FieldKind,
    pub pack: CurvaturePack,
    pub cov: CovJet,
}

impl LocalField {
    pub fn new(field: &TensorField, metric: &MetricEval, p: &[f64; 4], cfg: &StencilConfig) -> Result<Self, FieldError> {
        let pack = curvature_at(metric, p)?;
        Self::with_pack(field, metric, pack, cfg)
    }

    pub fn with_pack(
        field: &TensorField,
        metric: &MetricEval,
        pack: CurvaturePack,
        cfg: &StencilConfig,
    ) -> Result<Self, FieldError> {
        let p = pack.frame.point;
        let jet = field.jet(&p, &metric.ranges, cfg)?;
        let cov = CovJet::new(&jet, field.kind.rank(), &pack);
        Ok(LocalField { kind: field.kind, pack, cov })
    }

    pub fn frame(&self) -> &PointFrame {
        &self.pack.frame
    }

    fn expect(&self, kinds: &[FieldKind], op: &'static str) -> Result<(), FieldError> {
        if kinds.contains(&self.kind) {
            Ok(())
        } else {
            Err(FieldError::WrongKind { op, found: self.kind })
        }
    }

    /// `∇_c T` for a rank-2 field, as a coordinate matrix.
    pub fn grad_matrix(&self, c: usize) -> Matrix4<f64> {
        Matrix4::from_row_slice(self.cov.grad_slice(c))
    }

    /// `∇_d ∇_c T` for a rank-2 field, as a coordinate matrix.
    pub fn hess_matrix(&self, d: usize, c: usize) -> Matrix4<f64> {
        Matrix4::from_row_slice(self.cov.hess_slice(d, c))
    }

    pub fn value_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_row_slice(&self.cov.v)
    }

    /// Frame components of `∇_{eₐ} T` (rank 2).
    fn grad_frame(&self, a: usize) -> Matrix4<f64> {
        let f = self.frame();
        let mut m = Matrix4::zeros();
        for c in 0..4 {
            m += self.grad_matrix(c) * f.frame[(c, a)];
        }
        f.to_frame2(&m)
    }

    /// Frame components of `(∇²T)(e_e, e_a)` (rank 2).
    fn hess_frame(&self, e: usize, a: usize) -> Matrix4<f64> {
        let f = self.frame();
        let mut m = Matrix4::zeros();
        for d in 0..4 {
            for c in 0..4 {
                let w = f.frame[(d, e)] * f.frame[(c, a)];
                if w != 0.0 {
                    m += self.hess_matrix(d, c) * w;
                }
            }
        }
        f.to_frame2(&m)
    }

    /// `∇*∇T = −gᵈᶜ ∇_d∇_c T` as dense components.
    pub fn rough_laplacian(&self) -> Vec<f64> {
        let gi = &self.frame().g_inv;
        let n = self.cov.n();
        let mut out = vec![0.0; n];
        for d in 0..4 {
            for c in 0..4 {
                let w = gi[(d, c)];
                if w == 0.0 {
                    continue;
                }
                for (o, x) in out.iter_mut().zip(self.cov.hess_slice(d, c)) {
                    *o -= w * x;
                }
            }
        }
        out
    }

    /// `(δT)_j = −gᵃᵇ ∇_a T_{bj}` for a 2-form or symmetric 2-tensor.
    pub fn divergence(&self) -> Result<[f64; 4], FieldError> {
        self.expect(&[FieldKind::Sym2, FieldKind::TwoForm], "divergence")?;
        let gi = &self.frame().g_inv;
        Ok(std::array::from_fn(|j| {
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    s -= gi[(a, b)] * self.cov.grad(a, 4 * b + j);
                }
            }
            s
        }))
    }

    /// `∇_i (δT)_j`.
    pub fn grad_divergence(&self) -> Matrix4<f64> {
        let gi = &self.frame().g_inv;
        Matrix4::from_fn(|i, j| {
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    s -= gi[(a, b)] * self.cov.hess(i, a, 4 * b + j);
                }
            }
            s
        })
    }

    /// Bianchi operator `B h = δh + ½ d(tr h)`.
    pub fn bianchi(&self) -> Result<[f64; 4], FieldError> {
        self.expect(&[FieldKind::Sym2], "bianchi")?;
        let gi = self.frame().g_inv;
        let div = self.divergence()?;
        Ok(std::array::from_fn(|j| div[j] + 0.5 * gi.component_mul(&self.grad_matrix(j)).sum()))
    }

    /// `δ*ξ = sym ∇ξ` for a 1-form.
    pub fn div_adjoint(&self) -> Result<SymT2, FieldError> {
        self.expect(&[FieldKind::OneForm], "div_adjoint")?;
        Ok(SymT2::from_matrix(&Matrix4::from_fn(|i, j| self.cov.grad(i, j))))
    }

    /// Trace-free part of `δ*ξ`.
    pub fn div_adjoint0(&self) -> Result<SymT2, FieldError> {
        Ok(self.div_adjoint()?.trace_free_part(self.frame()))
    }

    /// `dα` for a 1-form.
    pub fn exterior_d(&self) -> Result<Form2, FieldError> {
        self.expect(&[FieldKind::OneForm], "exterior_d")?;
        Ok(Form2::from_matrix(&Matrix4::from_fn(|i, j| self.cov.grad(i, j) - self.cov.grad(j, i))))
    }

    /// Anti-self-dual part of `dα`.
    pub fn d_minus(&self) -> Result<Form2, FieldError> {
        Ok(project_sd_asd(&self.exterior_d()?, self.frame()).1)
    }

    /// `dτ` for a 2-form.
    pub fn exterior_d2(&self) -> Result<ThreeForm, FieldError> {
        self.expect(&[FieldKind::TwoForm], "exterior_d2")?;
        let g = |a: usize, b: usize, c: usize| self.cov.grad(a, 4 * b + c);
        Ok(ThreeForm::from_full(|a, b, c| 3.0 * g(a, b, c)))
    }

    // ---- operators on symmetric 2-tensors viewed in Ω₋ ⊗ Ω₊ ----

    fn trace_free_frame(&self, m: Matrix4<f64>) -> Matrix4<f64> {
        m - Matrix4::identity() * (0.25 * m.trace())
    }

    /// `d₋*H ∈ Ω¹⊗Ω₊` for `H` the image of the (trace-free part of the) field.
    pub fn d_minus_star(&self) -> Result<OmegaOneSD, FieldError> {
        self.expect(&[FieldKind::Sym2], "d_minus_star")?;
        let slices: [Matrix3<f64>; 4] =
            std::array::from_fn(|a| sym0_coeffs_frame(&self.trace_free_frame(self.grad_frame(a)), self.frame()));
        Ok(contract_asd(&slices, self.frame()))
    }

    /// `∇_{e_e} (d₋*H)` for each frame direction `e`.
    pub fn grad_d_minus_star(&self) -> Result<[OmegaOneSD; 4], FieldError> {
        self.expect(&[FieldKind::Sym2], "grad_d_minus_star")?;
        let f = self.frame();
        Ok(std::array::from_fn(|e| {
            let slices: [Matrix3<f64>; 4] =
                std::array::from_fn(|a| sym0_coeffs_frame(&self.trace_free_frame(self.hess_frame(e, a)), f));
            contract_asd(&slices, f)
        }))
    }

    /// `T h = Π₃ d₋*H`, the part of `d₋*H` orthogonal to `σ(Ω³)`.
    pub fn t_operator(&self) -> Result<OmegaOneSD, FieldError> {
        Ok(pi3(&self.d_minus_star()?, self.frame()))
    }

    /// `T h` via `d₋*H + ⅔σ(*δh)`, using `π d₋* h = −*δh`.
    pub fn t_operator_via_divergence(&self) -> Result<OmegaOneSD, FieldError> {
        let f = self.frame();
        let s = self.d_minus_star()?;
        let star = hodge_one(&self.divergence()?, f);
        Ok(s + sigma_embed(&star, f) * (2.0 / 3.0))
    }

    /// `d₋ d₋* h` as a symmetric tensor.
    pub fn d_minus_d_minus_star(&self) -> Result<SymT2, FieldError> {
        let f = self.frame();
        let grad = self.grad_d_minus_star()?;
        Ok(to_sym(&d_minus_omega1(&grad, f), f))
    }

    /// `T*T h = d₋ Π₃ d₋* h`.
    pub fn t_star_t(&self) -> Result<SymT2, FieldError> {
        let f = self.frame();
        let grad = self.grad_d_minus_star()?.map(|s| pi3(&s, f));
        Ok(to_sym(&d_minus_omega1(&grad, f), f))
    }

    /// Trace-free part of the field value.
    pub fn h0(&self) -> Result<SymT2, FieldError> {
        self.expect(&[FieldKind::Sym2], "h0")?;
        Ok(SymT2::from_matrix(&self.value_matrix()).trace_free_part(self.frame()))
    }

    /// `g`-trace of the field value relative to its norm (the part removed on entry to L and P).
    pub fn trace_excess(&self) -> f64 {
        let h = SymT2::from_matrix(&self.value_matrix());
        let f = self.frame();
        h.trace(f).abs() / h.norm(f).max(1e-300)
    }

    fn rough_laplacian0(&self) -> SymT2 {
        let m = Matrix4::from_row_slice(&self.rough_laplacian());
        SymT2::from_matrix(&m).trace_free_part(self.frame())
    }

    /// `L h = ½∇*∇h − Rm h`.
    pub fn l_operator(&self) -> Result<SymT2, FieldError> {
        let h = self.h0()?;
        Ok(self.rough_laplacian0() * 0.5 - rm_action(&self.pack, &h))
    }

    /// `L h = d₋d₋*h − W₊h − (Scal/12) h`.
    pub fn l_operator_weitzenbock(&self) -> Result<SymT2, FieldError> {
        let h = self.h0()?;
        Ok(self.d_minus_d_minus_star()? - weyl_plus_sym0(&self.pack, &h) - h * (self.pack.scal / 12.0))
    }

    /// `P h = T*T h − W₊ h`.
    pub fn p_operator(&self) -> Result<SymT2, FieldError> {
        let h = self.h0()?;
        Ok(self.t_star_t()? - weyl_plus_sym0(&self.pack, &h))
    }

    /// `δ*δ h`.
    pub fn div_adjoint_div(&self) -> SymT2 {
        SymT2::from_matrix(&self.grad_divergence())
    }

    /// `P h = L h − ⅔ δ*₀δh + (Scal/12) h`.
    pub fn p_operator_via_l(&self) -> Result<SymT2, FieldError> {
        let h = self.h0()?;
        let dd0 = self.div_adjoint_div().trace_free_part(self.frame());
        Ok(self.l_operator()? - dd0 * (2.0 / 3.0) + h * (self.pack.scal / 12.0))
    }

    /// Pointwise `√(|T|² + |∇T|² + |∇²T|²)` for a field of rank 1 or 2.
    pub fn c2_norm(&self) -> f64 {
        let f = self.frame();
        let gi = f.g_inv;
        if self.cov.v.len() == 4 {
            let n1 = |v: &[f64]| {
                let v = nalgebra::Vector4::from_column_slice(v);
                (v.transpose() * gi * v)[0]
            };
            let mut s = n1(&self.cov.v);
            for a in 0..4 {
                for b in 0..4 {
                    let x = nalgebra::Vector4::from_column_slice(self.cov.grad_slice(a));
                    let y = nalgebra::Vector4::from_column_slice(self.cov.grad_slice(b));
                    s += gi[(a, b)] * (x.transpose() * gi * y)[0];
                }
            }
            for d in 0..4 {
                for c in 0..4 {
                    let w = (0..4).flat_map(|e| (0..4).map(move |a| (e, a))).fold(0.0, |acc, (e, a)| {
                        acc + gi[(d, e)] * gi[(c, a)] * n1_pair(self.cov.hess_slice(d, c), self.cov.hess_slice(e, a), &gi)
                    });
                    s += w;
                }
            }
            return s.max(0.0).sqrt();
        }
        let n2 = |m: &Matrix4<f64>| (gi * m * gi).component_mul(m).sum();
        let mut s = n2(&self.value_matrix());
        for a in 0..4 {
            for b in 0..4 {
                let w = gi[(a, b)];
                if w != 0.0 {
                    s += w * (gi * self.grad_matrix(a) * gi).component_mul(&self.grad_matrix(b)).sum();
                }
            }
        }
        for e in 0..4 {
            for a in 0..4 {
                let m = self.hess_frame(e, a);
                s += m.component_mul(&m).sum();
            }
        }
        s.max(0.0).sqrt()
    }

    // ---- 2-form and 1-form identities ----

    /// `𝒯τ(∂_c) = ∇_cτ − ⅓(∂_c ⌟ dτ − g(∂_c,·) ∧ δτ)` for each coordinate direction.
    pub fn killing2form_residual(&self) -> Result<[Form2; 4], FieldError> {
        self.expect(&[FieldKind::TwoForm], "killing2form_residual")?;
        let dt = self.exterior_d2()?;
        let del = self.divergence()?;
        let g = self.frame().g;
        Ok(std::array::from_fn(|c| {
            let nabla = Form2::from_matrix(&self.grad_matrix(c));
            let inner = Form2::from_matrix(&Matrix4::from_fn(|b, d| dt.get(c, b, d)));
            let xflat = [g[(c, 0)], g[(c, 1)], g[(c, 2)], g[(c, 3)]];
            nabla - (inner - Form2::wedge(&xflat, &del)) * (1.0 / 3.0)
        }))
    }

    /// Killing equation residual `max |sym ∇α| / max |∇α|` for a 1-form.
    pub fn killing_defect(&self) -> Result<f64, FieldError> {
        let s = self.div_adjoint()?;
        let scale = (0..16).fold(0.0f64, |m, k| m.max(self.cov.d1[k].abs()));
        Ok(s.max_abs() / scale.max(1e-300))
    }

    /// Kostant residual `∇_c∇_i α_j − R_{ijkc} Xᵏ` with `α = X♭`, per coordinate `c`.
    pub fn kostant_residual(&self) -> Result<[Form2; 4], FieldError> {
        self.expect(&[FieldKind::OneForm], "kostant_residual")?;
        let gi = self.frame().g_inv;
        let x: [f64; 4] = std::array::from_fn(|k| (0..4).map(|j| gi[(k, j)] * self.cov.v[j]).sum());
        let r = &self.pack.riemann;
        Ok(std::array::from_fn(|c| {
            Form2::from_matrix(&Matrix4::from_fn(|i, j| {
                let curv: f64 = (0..4).map(|k| r[i][j][k][c] * x[k]).sum();
                self.cov.hess(c, i, j) - curv
            }))
        }))
    }

    /// `d₋δω − ½∇*∇ω + W₋ω − (Scal/6)ω` for an anti-self-dual 2-form.
    pub fn weitzenbock_asd_residual(&self) -> Result<Form2, FieldError> {
        self.expect(&[FieldKind::TwoForm], "weitzenbock_asd_residual")?;
        let f = self.frame();
        let omega = Form2::from_matrix(&self.value_matrix());
        let gd = self.grad_divergence();
        let d_delta = Form2::from_matrix(&(gd - gd.transpose()));
        let (_, dm) = project_sd_asd(&d_delta, f);
        let lap = Form2::from_matrix(&Matrix4::from_row_slice(&self.rough_laplacian()));
        let x = nalgebra::Vector3::from(omega.asd_coeffs(f));
        let y = self.pack.w_minus * x;
        let w_minus = Form2::from_asd_coeffs(f, &[y[0], y[1], y[2]]);
        Ok(dm - lap * 0.5 + w_minus - omega * (self.pack.scal / 6.0))
    }
}

/// `Sₐ... = −Σₐ Σₖ Mₐ[k][l] asdₖ[a][b]`: the divergence on the Ω₋ factor.
fn contract_asd(slices: &[Matrix3<f64>; 4], f: &PointFrame) -> OmegaOneSD {
    let mut s = OmegaOneSD::zero();
    for b in 0..4 {
        for l in 0..3 {
            let mut acc = 0.0;
            for a in 0..4 {
                for k in 0..3 {
                    acc -= slices[a][(k, l)] * f.asd_basis[k][(a, b)];
                }
            }
            s.c[b][l] = acc;
        }
    }
    s
}

/// `d₋` on Ω¹⊗Ω₊ given frame derivatives `∇_{eₐ}S`.
fn d_minus_omega1(grad: &[OmegaOneSD; 4], f: &PointFrame) -> Matrix3<f64> {
    Matrix3::from_fn(|k, l| {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                s += f.asd_basis[k][(a, b)] * grad[a].c[b][l];
            }
        }
        s
    })
}

fn to_sym(m: &Matrix3<f64>, f: &PointFrame) -> SymT2 {
    let mut h = SymT2::from_matrix(&f.from_frame2(&sym0_from_coeffs_frame(m, f)));
    h.trace_free = true;
    h
}

fn n1_pair(x: &[f64], y: &[f64], gi: &Matrix4<f64>) -> f64 {
    let (x, y) = (nalgebra::Vector4::from_column_slice(x), nalgebra::Vector4::from_column_slice(y));
    (x.transpose() * gi * y)[0]
}

/// `Π₃ = 1 − ⅔σπ`, the projection onto the kernel of `π`.
pub fn pi3(s: &OmegaOneSD, f: &PointFrame) -> OmegaOneSD {
    *s - sigma_embed(&pi_project(s, f), f) * (2.0 / 3.0)
}

/// `*ξ` for a coordinate 1-form `ξ`, as a coordinate 3-form.
pub fn hodge_one(xi: &[f64; 4], f: &PointFrame) -> ThreeForm {
    let xf: [f64; 4] = std::array::from_fn(|a| (0..4).map(|i| xi[i] * f.frame[(i, a)]).sum());
    let fr = ThreeForm::from_full(|b, c, d| (0..4).map(|a| xf[a] * levi_civita(a, b, c, d)).sum());
    ThreeForm::from_frame(f, &fr)
}
