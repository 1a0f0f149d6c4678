use nalgebra::{Matrix3, Matrix4};

use super::TensorError;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Metric, inverse metric and a positively oriented orthonormal coframe at one point.
///
/// `coframe` row `a` holds the coordinate components of `eᵃ`, so
/// `coframeᵀ · coframe = g`. `frame` is its inverse: column `a` holds the
/// coordinate components of the dual vector `eₐ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFrame {
    pub point: [f64; 4],
    pub g: Matrix4<f64>,
    pub g_inv: Matrix4<f64>,
    pub coframe: Matrix4<f64>,
    pub frame: Matrix4<f64>,
    pub orientation_sign: f64,
    /// Self-dual basis forms, as antisymmetric matrices in the orthonormal coframe.
    pub sd_basis: [Matrix4<f64>; 3],
    /// Anti-self-dual basis forms, as antisymmetric matrices in the orthonormal coframe.
    pub asd_basis: [Matrix4<f64>; 3],
}

fn elementary(pairs: &[(usize, usize, f64)]) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    for &(a, b, c) in pairs {
        m[(a, b)] += c;
        m[(b, a)] -= c;
    }
    m
}

/// The canonical bases `(e¹²±e³⁴)/√2, (e¹³∓e²⁴)/√2, (e¹⁴±e²³)/√2`.
pub(crate) fn canonical_bases() -> ([Matrix4<f64>; 3], [Matrix4<f64>; 3]) {
    let s = FRAC_1_SQRT_2;
    let sd = [
        elementary(&[(0, 1, s), (2, 3, s)]),
        elementary(&[(0, 2, s), (1, 3, -s)]),
        elementary(&[(0, 3, s), (1, 2, s)]),
    ];
    let asd = [
        elementary(&[(0, 1, s), (2, 3, -s)]),
        elementary(&[(0, 2, s), (1, 3, s)]),
        elementary(&[(0, 3, s), (1, 2, -s)]),
    ];
    (sd, asd)
}

/// Lower-triangular `E` with `EᵀE = g`, obtained by Cholesky in reversed coordinate order.
fn reverse_cholesky(g: &Matrix4<f64>) -> Result<Matrix4<f64>, TensorError> {
    // gr = J g J with J the reversal; gr = L Lᵀ; E = J Lᵀ J.
    let mut gr = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            gr[(i, j)] = g[(3 - i, 3 - j)];
        }
    }
    let mut l = Matrix4::<f64>::zeros();
    for j in 0..4 {
        let mut d = gr[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(TensorError::NotPositiveDefinite { pivot: 3 - j, value: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..4 {
            let mut s = gr[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let mut e = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            e[(i, j)] = l[(3 - j, 3 - i)];
        }
    }
    Ok(e)
}

/// Build the canonical frame of `g_at` at `point`.
///
/// `orientation` is `+1` when `dx⁰∧dx¹∧dx²∧dx³` is positively oriented and
/// `−1` otherwise; in the latter case the last coframe vector is flipped.
pub fn build_frame(point: [f64; 4], g_at: &Matrix4<f64>, orientation: f64) -> Result<PointFrame, TensorError> {
    let g = (g_at + g_at.transpose()) * 0.5;
    let mut coframe = reverse_cholesky(&g)?;
    let orientation_sign = if orientation < 0.0 { -1.0 } else { 1.0 };
    if orientation_sign < 0.0 {
        for j in 0..4 {
            coframe[(3, j)] = -coframe[(3, j)];
        }
    }
    PointFrame::from_coframe(point, coframe, orientation_sign)
}

impl PointFrame {
    /// Frame from an explicit coframe (rows orthonormal for `g = EᵀE`).
    pub fn from_coframe(point: [f64; 4], coframe: Matrix4<f64>, orientation_sign: f64) -> Result<PointFrame, TensorError> {
        let g = coframe.transpose() * coframe;
        let frame = coframe.try_inverse().ok_or(TensorError::NotPositiveDefinite { pivot: 0, value: 0.0 })?;
        let g_inv = frame * frame.transpose();
        let (sd_basis, asd_basis) = canonical_bases();
        Ok(PointFrame { point, g, g_inv, coframe, frame, orientation_sign, sd_basis, asd_basis })
    }

    /// Same point and metric, coframe rotated by `q ∈ SO(4)`: `eᵃ ↦ qₐᵦ eᵇ`.
    pub fn rotated(&self, q: &Matrix4<f64>) -> Result<PointFrame, TensorError> {
        PointFrame::from_coframe(self.point, q * self.coframe, self.orientation_sign)
    }

    /// `√det g`.
    pub fn volume_density(&self) -> f64 {
        self.coframe.determinant().abs()
    }

    /// Coordinate matrix of a covariant 2-tensor to orthonormal-frame components.
    pub fn to_frame2(&self, m: &Matrix4<f64>) -> Matrix4<f64> {
        self.frame.transpose() * m * self.frame
    }

    /// Orthonormal-frame components of a covariant 2-tensor to coordinate components.
    pub fn from_frame2(&self, m: &Matrix4<f64>) -> Matrix4<f64> {
        self.coframe.transpose() * m * self.coframe
    }

    /// Coordinate components of the covector `eᵃ`.
    pub fn coframe_vec(&self, a: usize) -> [f64; 4] {
        [self.coframe[(a, 0)], self.coframe[(a, 1)], self.coframe[(a, 2)], self.coframe[(a, 3)]]
    }

    /// Components of a 3×3 operator on Ω₊ given the action `f` on frame-component 2-forms.
    pub fn sd_matrix(&self, f: impl Fn(&Matrix4<f64>) -> Matrix4<f64>) -> Matrix3<f64> {
        block_matrix(&self.sd_basis, &self.sd_basis, f)
    }

    pub fn asd_matrix(&self, f: impl Fn(&Matrix4<f64>) -> Matrix4<f64>) -> Matrix3<f64> {
        block_matrix(&self.asd_basis, &self.asd_basis, f)
    }
}

fn inner_frame(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    0.5 * a.component_mul(b).sum()
}

fn block_matrix(
    rows: &[Matrix4<f64>; 3],
    cols: &[Matrix4<f64>; 3],
    f: impl Fn(&Matrix4<f64>) -> Matrix4<f64>,
) -> Matrix3<f64> {
    let mut out = Matrix3::zeros();
    for j in 0..3 {
        let image = f(&cols[j]);
        for i in 0..3 {
            out[(i, j)] = inner_frame(&rows[i], &image);
        }
    }
    out
}
