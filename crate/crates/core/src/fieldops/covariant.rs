use super::field::FieldJet;
use crate::curvature::CurvaturePack;

/// First and second covariant derivatives of a covariant tensor at a point.
///
/// Component layout: `d1[c*n + I] = (∇_c T)_I`, `d2[(4d + c)*n + I] = (∇_d ∇_c T)_I`,
/// where `I` is the row-major multi-index of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovJet {
    pub rank: usize,
    pub v: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

fn digits(mut idx: usize, rank: usize) -> [usize; 4] {
    let mut out = [0; 4];
    for s in (0..rank).rev() {
        out[s] = idx % 4;
        idx /= 4;
    }
    out
}

fn replace(idx: usize, rank: usize, slot: usize, m: usize) -> usize {
    let mut d = digits(idx, rank);
    d[slot] = m;
    d[..rank].iter().fold(0, |acc, &x| acc * 4 + x)
}

/// `∇_c T_I = ∂_c T_I − Σ_s Γᵐ_{c i_s} T_{I[s→m]}` for a rank-`rank` array with
/// components `t` and coordinate derivatives `dt[c]`.
fn covariant_once(t: &[f64], dt: &[Vec<f64>; 4], rank: usize, pack: &CurvaturePack) -> Vec<f64> {
    let n = t.len();
    let mut out = vec![0.0; 4 * n];
    for c in 0..4 {
        for i in 0..n {
            let idx = digits(i, rank);
            let mut s = dt[c][i];
            for slot in 0..rank {
                for m in 0..4 {
                    s -= pack.gamma[m][c][idx[slot]] * t[replace(i, rank, slot, m)];
                }
            }
            out[c * n + i] = s;
        }
    }
    out
}

impl CovJet {
    pub fn new(jet: &FieldJet, rank: usize, pack: &CurvaturePack) -> CovJet {
        let n = jet.v.len();
        let d1 = covariant_once(&jet.v, &jet.d, rank, pack);
        // ∂_d (∇_c T)_I, differentiating the Christoffel correction as well
        let mut dd1: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; 4 * n]);
        for d in 0..4 {
            for c in 0..4 {
                for i in 0..n {
                    let idx = digits(i, rank);
                    let mut s = jet.dd[d][c][i];
                    for slot in 0..rank {
                        for m in 0..4 {
                            let j = replace(i, rank, slot, m);
                            s -= pack.dgamma[d][m][c][idx[slot]] * jet.v[j] + pack.gamma[m][c][idx[slot]] * jet.d[d][j];
                        }
                    }
                    dd1[d][c * n + i] = s;
                }
            }
        }
        // ∇_d applied to the rank+1 tensor S_{cI} = ∇_c T_I
        let d2 = covariant_once(&d1, &dd1, rank + 1, pack);
        CovJet { rank, v: jet.v.clone(), d1, d2 }
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    /// `(∇_c T)_I`.
    pub fn grad(&self, c: usize, i: usize) -> f64 {
        self.d1[c * self.n() + i]
    }

    /// `(∇_d ∇_c T)_I`.
    pub fn hess(&self, d: usize, c: usize, i: usize) -> f64 {
        self.d2[(4 * d + c) * self.n() + i]
    }

    /// Slice `∇_c T` as a dense component vector.
    pub fn grad_slice(&self, c: usize) -> &[f64] {
        let n = self.n();
        &self.d1[c * n..(c + 1) * n]
    }

    /// Slice `∇_d ∇_c T` as a dense component vector.
    pub fn hess_slice(&self, d: usize, c: usize) -> &[f64] {
        let n = self.n();
        &self.d2[(4 * d + c) * n..(4 * d + c + 1) * n]
    }
}
