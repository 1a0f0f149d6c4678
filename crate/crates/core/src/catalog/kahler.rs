use nalgebra::{Matrix4, Vector4};

use super::{CatalogEntry, CatalogError};
use crate::curvature::{conformal_metric, curvature_at, sorted_eigen, CurvaturePack, MetricEval};
use crate::fieldops::{first_weights, FieldError, FieldKind, StencilConfig, TensorField};
use crate::tensor_point::Form2;

/// Minimum relative separation of the simple `W₊` eigenvalue from the double one.
pub const TYPE_D_GAP: f64 = 1e-3;

/// Conformally Kähler data at one point.
#[derive(Debug, Clone)]
pub struct KahlerPoint {
    pub pack: CurvaturePack,
    /// Simple eigenvalue of `W₊`.
    pub lambda: f64,
    /// Conformal factor `f = λ^(−1/3)`.
    pub f: f64,
    /// Unit self-dual eigenform for `λ`, oriented by the entry's reference.
    pub unit: Form2,
    /// Kähler form `ω̃⁺ = √2 f⁻² · unit` of `g̃ = f⁻²g` (so `|ω̃⁺|_{g̃} = √2`).
    pub omega_tilde: Form2,
    /// Killing 2-form `τ = f³ ω̃⁺`.
    pub tau: Form2,
}

fn coordinate_form(i: usize, j: usize) -> Form2 {
    let mut m = Matrix4::zeros();
    m[(i, j)] = 1.0;
    m[(j, i)] = -1.0;
    Form2::from_matrix(&m)
}

/// Simple eigenvalue and unit eigenform of `W₊`, checking the type-D⁺ condition.
pub(crate) fn simple_eigen(pack: &CurvaturePack, reference: (usize, usize)) -> Result<(f64, Form2), CatalogError> {
    let point = pack.frame.point;
    let (vals, vecs) = sorted_eigen(&pack.w_plus);
    let wmax = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // Compare with the rest of the curvature in the orthonormal frame, so the
    // test does not depend on how large the coordinate components are.
    let ric = pack.frame.to_frame2(&pack.ricci).amax();
    let rm_scale = pack.w_minus.amax().max(ric).max(pack.scal.abs());
    if wmax <= 1e-13 * (1.0 + rm_scale) {
        return Err(CatalogError::TypeDFailure { point, gap: 0.0 });
    }
    let (d01, d12) = (vals[1] - vals[0], vals[2] - vals[1]);
    let (k, double, split) = if d01 <= d12 { (2, 0.5 * (vals[0] + vals[1]), d01) } else { (0, 0.5 * (vals[1] + vals[2]), d12) };
    let gap = ((vals[k] - double).abs() - split) / wmax;
    if !(gap > TYPE_D_GAP) {
        return Err(CatalogError::TypeDFailure { point, gap });
    }
    if vals[k] <= 0.0 {
        return Err(CatalogError::OrientationMismatch { point, eigenvalue: vals[k] });
    }
    let v = vecs.column(k);
    let mut unit = Form2::from_sd_coeffs(&pack.frame, &[v[0], v[1], v[2]]);
    if unit.inner(&coordinate_form(reference.0, reference.1), &pack.frame) < 0.0 {
        unit = -unit;
    }
    Ok((vals[k], unit))
}

pub(crate) fn kahler_from_metric(
    metric: &MetricEval,
    reference: (usize, usize),
    p: &[f64; 4],
) -> Result<KahlerPoint, CatalogError> {
    let pack = curvature_at(metric, p)?;
    let (lambda, unit) = simple_eigen(&pack, reference)?;
    let f = lambda.powf(-1.0 / 3.0);
    let omega_tilde = unit * (std::f64::consts::SQRT_2 / (f * f));
    let tau = unit * (std::f64::consts::SQRT_2 * f);
    Ok(KahlerPoint { pack, lambda, f, unit, omega_tilde, tau })
}

fn reference(entry: &CatalogEntry) -> (usize, usize) {
    entry.kahler.as_ref().map(|k| k.reference).unwrap_or((0, 1))
}

pub(crate) fn field_err(e: CatalogError) -> FieldError {
    match e {
        CatalogError::Curvature(c) => FieldError::Curvature(c),
        CatalogError::Field(f) => f,
        other => FieldError::Eval(other.to_string()),
    }
}

/// The Killing 2-form `τ = f³ω̃⁺` as a field, evaluated pointwise from `W₊`.
pub fn tau_field(entry: &CatalogEntry) -> TensorField {
    let e = entry.clone();
    TensorField::numeric(FieldKind::TwoForm, move |p| {
        Ok(kahler_at(&e, p).map_err(field_err)?.tau.to_matrix().transpose().as_slice().to_vec())
    })
    .with_invariant(entry.metric.invariant)
}

/// Full conformally Kähler data at `p`.
pub fn kahler_at(entry: &CatalogEntry, p: &[f64; 4]) -> Result<KahlerPoint, CatalogError> {
    kahler_from_metric(&entry.metric, reference(entry), p)
}

/// The Kähler form `ω̃⁺` at `p`.
pub fn kahler_form(entry: &CatalogEntry, p: &[f64; 4]) -> Result<Form2, CatalogError> {
    Ok(kahler_at(entry, p)?.omega_tilde)
}

/// The conformal factor `f = λ^(−1/3)` at `p`.
pub fn conformal_factor(entry: &CatalogEntry, p: &[f64; 4]) -> Result<f64, CatalogError> {
    if entry.kahler.is_none() {
        return Err(CatalogError::NoKahlerPayload(entry.name.clone()));
    }
    Ok(kahler_at(entry, p)?.f)
}

/// `max |Scal(g̃)·f − 6|` over `points`, using the closed form of `f`.
pub fn scal_identity_residual(entry: &CatalogEntry, points: &[[f64; 4]]) -> Result<f64, CatalogError> {
    let Some(f) = entry.kahler.as_ref().and_then(|k| k.f.clone()) else {
        return Err(CatalogError::NoKahlerPayload(entry.name.clone()));
    };
    let phi = crate::expr::Expr::one() / f.clone();
    let tilde = std::sync::Arc::new(conformal_metric(&entry.spec, &phi, entry.env(), points)?);
    let tilde = tilde.compile(entry.env())?;
    let mut worst: f64 = 0.0;
    for p in points {
        let s = curvature_at(&tilde, p)?.scal;
        worst = worst.max((s * f.evaluate(p, entry.env())? - 6.0).abs());
    }
    Ok(worst)
}

/// `J∇f` at `p` as a coordinate vector: `J = g̃⁻¹ω̃⁺` and `∇f` the `g`-gradient.
pub fn j_grad_f(entry: &CatalogEntry, p: &[f64; 4]) -> Result<Vector4<f64>, CatalogError> {
    let k = kahler_at(entry, p)?;
    let cfg = StencilConfig::default();
    let w = first_weights(cfg.order);
    let r = (cfg.order / 2) as i32;
    let mut df = Vector4::zeros();
    for c in 0..4 {
        if entry.metric.invariant[c] {
            continue;
        }
        let dist = entry.metric.boundary_distance(p, c);
        let h = (cfg.step * p[c].abs().max(1.0)).min(0.5 * dist / r as f64);
        let mut s = 0.0;
        for (i, wi) in w.iter().enumerate() {
            if *wi == 0.0 {
                continue;
            }
            let mut q = *p;
            q[c] += (i as i32 - r) as f64 * h;
            s += wi * kahler_at(entry, &q)?.f;
        }
        df[c] = s / h;
    }
    let gi = k.pack.frame.g_inv;
    // g̃⁻¹ = f² g⁻¹
    Ok((gi * k.omega_tilde.to_matrix() * gi * df) * (k.f * k.f))
}

/// Fit `J∇f = c·X` against the declared Killing field over `points`; returns
/// `(c, max relative deviation)`.
pub fn killing_alignment(entry: &CatalogEntry, points: &[[f64; 4]]) -> Result<(f64, f64), CatalogError> {
    let Some(x) = entry.kahler.as_ref().and_then(|k| k.killing_field.clone()) else {
        return Err(CatalogError::NoKahlerPayload(entry.name.clone()));
    };
    let mut pairs = Vec::new();
    for p in points {
        let xj = j_grad_f(entry, p)?;
        let xd = Vector4::from_fn(|i, _| x[i].evaluate(p, entry.env()).unwrap_or(f64::NAN));
        let g = entry.metric.metric(p)?;
        pairs.push((xj, xd, g));
    }
    let num: f64 = pairs.iter().map(|(a, b, g)| (a.transpose() * g * b)[0]).sum();
    let den: f64 = pairs.iter().map(|(_, b, g)| (b.transpose() * g * b)[0]).sum();
    let c = num / den;
    let dev = pairs
        .iter()
        .map(|(a, b, g)| {
            let d = a - b * c;
            ((d.transpose() * g * d)[0] / (a.transpose() * g * a)[0]).sqrt()
        })
        .fold(0.0, f64::max);
    Ok((c, dev))
}
