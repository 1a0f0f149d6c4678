use std::sync::Arc;

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::{FieldKind, TensorField};
use crate::curvature::MetricEval;

/// Smooth bump `exp(1 − 1/(1 − ρ²))` on the unit ball, zero outside.
pub fn bump(rho2: f64) -> f64 {
    if rho2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - rho2)).exp()
    }
}

/// A random smooth trace-free symmetric 2-tensor supported in the coordinate
/// ball of radius `radius` about `centre`. The trace is removed with the
/// metric, so the field is trace-free for every conformal rescaling too.
pub fn bump_tracefree(metric: Arc<MetricEval>, centre: [f64; 4], radius: f64, seed: u64) -> TensorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<[f64; 3]> = (0..10).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
    TensorField::numeric(FieldKind::Sym2, move |p| {
        let rho2: f64 = (0..4).map(|i| ((p[i] - centre[i]) / radius).powi(2)).sum();
        let b = bump(rho2);
        if b == 0.0 {
            return Ok(vec![0.0; 16]);
        }
        let mut a = Matrix4::zeros();
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                let [c0, c1, c2] = coeffs[k];
                k += 1;
                let v = b * (c0 + c1 * p[(i + j) % 4].sin() + 0.1 * c2 * p[i] * p[j]);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let g = metric.metric(p)?;
        let gi = g.try_inverse().ok_or_else(|| super::FieldError::Eval("degenerate metric".into()))?;
        let tr = (gi * a).trace();
        let h = a - g * (0.25 * tr);
        Ok(h.transpose().as_slice().to_vec())
    })
}
