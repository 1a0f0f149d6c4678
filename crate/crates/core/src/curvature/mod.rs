//! Curvature of a [`MetricSpec`] at a point.
//!
//! Christoffel symbols, their first derivatives, Riemann, Ricci, scalar and
//! Weyl curvature are computed from the exact symbolic metric jet. Sign
//! conventions: `Rⁱⱼₖₗ = ∂ₖΓⁱₗⱼ − ∂ₗΓⁱₖⱼ + ΓⁱₖₘΓᵐₗⱼ − ΓⁱₗₘΓᵐₖⱼ`, so the unit
//! sphere has `Rᵢⱼₖₗ = gᵢₖgⱼₗ − gᵢₗgⱼₖ`; curvature acts on 2-forms by
//! `ω ↦ ½ Rᵢⱼₖₗ ωᵏˡ` and on symmetric tensors by `(Rm h)ᵢⱼ = Rᵢₖⱼₗ hᵏˡ`.

mod spec;
#[cfg(test)]
mod tests;

pub use spec::{permutation_sign, sym_slot, CoordDecl, MetricEval, MetricJet, MetricSpec};

use nalgebra::{Matrix3, Matrix4, SymmetricEigen};
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::tensor_point::{
    build_frame, sym0_coeffs, sym0_from_coeffs, Form2, PointFrame, SymT2, TensorError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("degenerate metric at {point:?}: {source}")]
    Degenerate { point: [f64; 4], source: TensorError },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("point {point:?} lies outside the chart")]
    OutOfChart { point: [f64; 4] },
    #[error("conformal factor is not positive ({value:e}) at {point:?}")]
    NonPositiveFactor { point: [f64; 4], value: f64 },
}

/// Dense rank-4 array with `[i][j][k][l]` indexing.
pub type Rank4 = [[[[f64; 4]; 4]; 4]; 4];

/// All pointwise curvature data of a metric.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub frame: PointFrame,
    /// `gamma[k][i][j] = Γᵏᵢⱼ`.
    pub gamma: [[[f64; 4]; 4]; 4],
    /// `dgamma[m][k][i][j] = ∂ₘΓᵏᵢⱼ`.
    pub dgamma: Rank4,
    /// Lowered `Rᵢⱼₖₗ`.
    pub riemann: Rank4,
    pub ricci: Matrix4<f64>,
    pub scal: f64,
    /// Lowered `Wᵢⱼₖₗ`.
    pub weyl: Rank4,
    pub w_plus: Matrix3<f64>,
    pub w_minus: Matrix3<f64>,
    /// Pointwise Einstein constant `Scal/4`.
    pub lambda: f64,
}

fn zero4() -> Rank4 {
    [[[[0.0; 4]; 4]; 4]; 4]
}

/// Christoffel symbols and their derivatives from a metric jet.
pub fn christoffel(jet: &crate::curvature::MetricJet, g_inv: &Matrix4<f64>) -> ([[[f64; 4]; 4]; 4], Rank4) {
    let mut gamma = [[[0.0; 4]; 4]; 4];
    // first-kind symbols and their derivatives
    let mut first = [[[0.0; 4]; 4]; 4]; // [l][i][j] = ½(∂ᵢgⱼₗ + ∂ⱼgᵢₗ − ∂ₗgᵢⱼ)
    let mut dfirst = zero4(); // [m][l][i][j]
    for l in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                first[l][i][j] = 0.5 * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)]);
                for m in 0..4 {
                    dfirst[m][l][i][j] =
                        0.5 * (jet.ddg[m][i][(j, l)] + jet.ddg[m][j][(i, l)] - jet.ddg[m][l][(i, j)]);
                }
            }
        }
    }
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                gamma[k][i][j] = (0..4).map(|l| g_inv[(k, l)] * first[l][i][j]).sum();
            }
        }
    }
    // ∂ₘgᵏˡ = −gᵏᵃ ∂ₘgₐᵦ gᵇˡ
    let dginv: [Matrix4<f64>; 4] = std::array::from_fn(|m| -(g_inv * jet.dg[m] * g_inv));
    let mut dgamma = zero4();
    for m in 0..4 {
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let mut s = 0.0;
                    for l in 0..4 {
                        s += dginv[m][(k, l)] * first[l][i][j] + g_inv[(k, l)] * dfirst[m][l][i][j];
                    }
                    dgamma[m][k][i][j] = s;
                }
            }
        }
    }
    (gamma, dgamma)
}

/// Lowered Riemann tensor from Christoffel data.
pub fn riemann_lowered(g: &Matrix4<f64>, gamma: &[[[f64; 4]; 4]; 4], dgamma: &Rank4) -> Rank4 {
    let mut up = zero4(); // Rⁱⱼₖₗ
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let mut s = dgamma[k][i][l][j] - dgamma[l][i][k][j];
                    for m in 0..4 {
                        s += gamma[i][k][m] * gamma[m][l][j] - gamma[i][l][m] * gamma[m][k][j];
                    }
                    up[i][j][k][l] = s;
                }
            }
        }
    }
    let mut low = zero4();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    low[i][j][k][l] = (0..4).map(|m| g[(i, m)] * up[m][j][k][l]).sum();
                }
            }
        }
    }
    low
}

/// Components of a lowered rank-4 tensor in the orthonormal frame.
pub fn rank4_to_frame(t: &Rank4, frame: &PointFrame) -> Rank4 {
    let e = &frame.frame;
    let mut tmp = *t;
    for slot in 0..4 {
        let mut out = zero4();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let idx = [a, b, c, d];
                        let mut s = 0.0;
                        for m in 0..4 {
                            let mut src = idx;
                            src[slot] = m;
                            s += tmp[src[0]][src[1]][src[2]][src[3]] * e[(m, idx[slot])];
                        }
                        out[a][b][c][d] = s;
                    }
                }
            }
        }
        tmp = out;
    }
    tmp
}

/// Matrix of `ω ↦ ½ Tₐᵦ꜀ₔ ωᶜᵈ` on a pair of 2-form bases (frame components).
pub fn two_form_block(tf: &Rank4, frame: &PointFrame, sd: bool) -> Matrix3<f64> {
    let act = |w: &Matrix4<f64>| {
        Matrix4::from_fn(|a, b| {
            let mut s = 0.0;
            for c in 0..4 {
                for d in 0..4 {
                    s += tf[a][b][c][d] * w[(c, d)];
                }
            }
            0.5 * s
        })
    };
    if sd {
        frame.sd_matrix(act)
    } else {
        frame.asd_matrix(act)
    }
}

/// Full curvature pack of `metric` at `point`.
pub fn curvature_at(metric: &MetricEval, point: &[f64; 4]) -> Result<CurvaturePack, CurvatureError> {
    let jet = metric.jet(point)?;
    let frame = build_frame(*point, &jet.g, metric.orientation_sign())
        .map_err(|source| CurvatureError::Degenerate { point: *point, source })?;
    pack_from_jet(&jet, frame)
}

pub(crate) fn pack_from_jet(jet: &MetricJet, frame: PointFrame) -> Result<CurvaturePack, CurvatureError> {
    let g = frame.g;
    let g_inv = frame.g_inv;
    let (gamma, dgamma) = christoffel(jet, &g_inv);
    let riemann = riemann_lowered(&g, &gamma, &dgamma);
    let mut ricci = Matrix4::zeros();
    for j in 0..4 {
        for l in 0..4 {
            let mut s = 0.0;
            for i in 0..4 {
                for k in 0..4 {
                    s += g_inv[(i, k)] * riemann[k][j][i][l];
                }
            }
            ricci[(j, l)] = s;
        }
    }
    ricci = (ricci + ricci.transpose()) * 0.5;
    let scal = g_inv.component_mul(&ricci).sum();
    let mut weyl = zero4();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let ric_part = ricci[(i, k)] * g[(j, l)] - ricci[(i, l)] * g[(j, k)] - ricci[(j, k)] * g[(i, l)]
                        + ricci[(j, l)] * g[(i, k)];
                    let gg = g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)];
                    weyl[i][j][k][l] = riemann[i][j][k][l] - 0.5 * ric_part + scal / 6.0 * gg;
                }
            }
        }
    }
    let wf = rank4_to_frame(&weyl, &frame);
    let mut w_plus = two_form_block(&wf, &frame, true);
    let mut w_minus = two_form_block(&wf, &frame, false);
    w_plus = (w_plus + w_plus.transpose()) * 0.5;
    w_minus = (w_minus + w_minus.transpose()) * 0.5;
    Ok(CurvaturePack { frame, gamma, dgamma, riemann, ricci, scal, weyl, w_plus, w_minus, lambda: scal / 4.0 })
}

impl CurvaturePack {
    /// Largest violation of the algebraic Riemann symmetries, relative to `max |R|`.
    pub fn symmetry_residual(&self) -> f64 {
        let r = &self.riemann;
        let mut scale: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let v = r[i][j][k][l];
                        scale = scale.max(v.abs());
                        worst = worst
                            .max((v + r[j][i][k][l]).abs())
                            .max((v + r[i][j][l][k]).abs())
                            .max((v - r[k][l][i][j]).abs())
                            .max((v + r[i][k][l][j] + r[i][l][j][k]).abs());
                    }
                }
            }
        }
        worst / scale.max(1e-300).max(1.0)
    }

    /// Eigenvalues of `W₊` in ascending order, with eigenvectors as columns.
    pub fn w_plus_eigen(&self) -> (Vec<f64>, Matrix3<f64>) {
        sorted_eigen(&self.w_plus)
    }
}

/// Symmetric eigen-decomposition sorted by ascending eigenvalue.
pub fn sorted_eigen(m: &Matrix3<f64>) -> (Vec<f64>, Matrix3<f64>) {
    let eig = SymmetricEigen::new(*m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = Matrix3::from_fn(|r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// `(Rm h)ᵢⱼ = Rᵢₖⱼₗ hᵏˡ`.
pub fn rm_action(pack: &CurvaturePack, h: &SymT2) -> SymT2 {
    let gi = &pack.frame.g_inv;
    let hu = gi * h.to_matrix() * gi;
    let mut out = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for k in 0..4 {
                for l in 0..4 {
                    s += pack.riemann[i][k][j][l] * hu[(k, l)];
                }
            }
            out[(i, j)] = s;
        }
    }
    SymT2::from_matrix(&out)
}

/// `W₊ ω` for a self-dual 2-form.
pub fn weyl_plus_action(pack: &CurvaturePack, omega: &Form2) -> Result<Form2, CurvatureError> {
    let f = &pack.frame;
    let (_, asd) = crate::tensor_point::project_sd_asd(omega, f);
    let n = omega.norm(f);
    if n > 0.0 && asd.norm(f) / n > 1e-8 {
        return Err(TensorError::DualityViolation {
            which: "omega",
            expected: "self-dual",
            residual: asd.norm(f) / n,
        }
        .into());
    }
    let x = nalgebra::Vector3::from(omega.sd_coeffs(f));
    let y = pack.w_plus * x;
    Ok(Form2::from_sd_coeffs(f, &[y[0], y[1], y[2]]))
}

/// `W₊` on `Sym²₀`: `α⁻∘α⁺ ↦ α⁻∘W₊(α⁺)`. The trace is removed first.
pub fn weyl_plus_sym0(pack: &CurvaturePack, h: &SymT2) -> SymT2 {
    let f = &pack.frame;
    let m = sym0_coeffs(&h.trace_free_part(f), f);
    sym0_from_coeffs(&(m * pack.w_plus), f)
}

/// Result of an Einstein check over sample points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EinsteinReport {
    pub lambda: f64,
    pub max_residual: f64,
}

/// Estimate `Λ` as the mean of `Scal/4` and report `max ‖Ric − Λg‖/‖g‖`.
pub fn einstein_residual(metric: &MetricEval, samples: &[[f64; 4]]) -> Result<EinsteinReport, CurvatureError> {
    let packs = samples.iter().map(|p| curvature_at(metric, p)).collect::<Result<Vec<_>, _>>()?;
    let lambda = packs.iter().map(|p| p.lambda).sum::<f64>() / packs.len().max(1) as f64;
    let mut max_residual: f64 = 0.0;
    for p in &packs {
        let d = SymT2::from_matrix(&(p.ricci - p.frame.g * lambda));
        // ‖g‖ = 2 in the hᵢⱼkⁱʲ norm
        max_residual = max_residual.max(d.norm(&p.frame) / 2.0);
    }
    Ok(EinsteinReport { lambda, max_residual })
}

/// The metric `φ² g`; fails if `φ ≤ 0` at any of `checks`.
pub fn conformal_metric(
    spec: &MetricSpec,
    phi: &Expr,
    env: &crate::expr::ParamEnv,
    checks: &[[f64; 4]],
) -> Result<MetricSpec, CurvatureError> {
    let env = spec.resolve_env(env);
    for p in checks {
        let v = phi.evaluate(p, &env)?;
        if !(v > 0.0) {
            return Err(CurvatureError::NonPositiveFactor { point: *p, value: v });
        }
    }
    Ok(spec.conformal(phi, &format!("{}_conformal", spec.name)))
}

/// Uniform random points in a box, reproducible from `seed`.
pub fn sample_box(bounds: &[(f64, f64); 4], n: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| std::array::from_fn(|i| {
            let (lo, hi) = bounds[i];
            if lo == hi {
                lo
            } else {
                rng.gen_range(lo..hi)
            }
        }))
        .collect()
}
