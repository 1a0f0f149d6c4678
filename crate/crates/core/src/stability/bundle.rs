use nalgebra::Matrix4;

use super::StabilityError;
use crate::catalog::{build_asd_seed, field_err, kahler_at, tau_field, AsdSeed, CatalogEntry};
use crate::curvature::{curvature_at, MetricEval};
use crate::fieldops::{FieldKind, LocalField, StencilConfig, TensorField};
use crate::tensor_point::{build_frame, compose_unchecked, PointFrame, SymT2};

/// Pointwise tolerance of the eigen-relation `Ph = −f⁻³h`.
pub const EIGEN_TOL: f64 = 1e-4;

/// Stencil for the eigen-relation check: second derivatives of `h` near a bolt
/// need the sixth-order rule to stay well below [`EIGEN_TOL`].
fn eigen_stencil() -> StencilConfig {
    StencilConfig::new(6, 1e-3, 0)
}

/// Upper bound on `|tr h| / |h|`.
const TRACE_TOL: f64 = 1e-9;

/// The destabilizing direction of a conformally Kähler Einstein entry.
#[derive(Debug, Clone)]
pub struct DestabilizerBundle {
    pub entry: CatalogEntry,
    pub seed: AsdSeed,
    /// Conformal factor `f` (scalar field).
    pub f: TensorField,
    /// Killing 2-form `τ = f³ω̃⁺`.
    pub tau: TensorField,
    /// Anti-self-dual form `s·ω⁻`.
    pub omega_minus: TensorField,
    /// `h = (s·ω⁻)∘τ`.
    pub h: TensorField,
    /// Scale `s` applied to the seed form.
    pub scale: f64,
    pub trivial: bool,
    /// Largest sampled `|Ph + f⁻³h| / |h|`.
    pub eigen_residual: f64,
    /// Largest sampled `|tr h| / |h|`.
    pub trace_residual: f64,
}

fn row_major(m: &Matrix4<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn frame_at(metric: &MetricEval, p: &[f64; 4]) -> Result<PointFrame, StabilityError> {
    let g = metric.metric(p)?;
    Ok(build_frame(*p, &g, metric.orientation_sign()).map_err(crate::curvature::CurvatureError::from)?)
}

/// Assemble `f`, `τ`, `ω⁻` and `h` for an entry and check the eigen-relation
/// at 20 sample points.
pub fn build_destabilizer(entry: &CatalogEntry) -> Result<DestabilizerBundle, StabilityError> {
    let probe = entry.samples(1, 0xd1)[0];
    kahler_at(entry, &probe)?;
    let seed = build_asd_seed(entry)?;
    if seed.trivial {
        return Err(StabilityError::Trivial { entry: entry.name.clone(), sup: seed.sup_norm });
    }
    let bundle = assemble(entry, seed, 1.0);
    bundle.checked(EIGEN_TOL)
}

fn assemble(entry: &CatalogEntry, seed: AsdSeed, scale: f64) -> DestabilizerBundle {
    let invariant = entry.metric.invariant;
    let e = entry.clone();
    let f = TensorField::numeric(FieldKind::Scalar, move |p| Ok(vec![kahler_at(&e, p).map_err(field_err)?.f]))
        .with_invariant(invariant);
    let tau = tau_field(entry);
    let w = seed.field.clone();
    let omega_minus =
        TensorField::numeric(FieldKind::TwoForm, move |p| Ok(row_major(&(w.form2(p)? * scale).to_matrix()))).with_invariant(invariant);
    let (e, w) = (entry.clone(), omega_minus.clone());
    let h = TensorField::numeric(FieldKind::Sym2, move |p| {
        let k = kahler_at(&e, p).map_err(field_err)?;
        Ok(row_major(&compose_unchecked(&w.form2(p)?, &k.tau, &k.pack.frame).to_matrix()))
    })
    .with_invariant(invariant);
    DestabilizerBundle {
        entry: entry.clone(),
        trivial: seed.trivial,
        seed,
        f,
        tau,
        omega_minus,
        h,
        scale,
        eigen_residual: f64::NAN,
        trace_residual: f64::NAN,
    }
}

impl DestabilizerBundle {
    /// A bundle with `h ≡ 0` on any entry, used as a control for the quadrature.
    pub fn zero(entry: &CatalogEntry) -> DestabilizerBundle {
        let zero = TensorField::numeric(FieldKind::TwoForm, |_| Ok(vec![0.0; 16])).with_invariant(entry.metric.invariant);
        let seed = AsdSeed {
            field: zero,
            alpha: None,
            profile: None,
            sup_norm: 0.0,
            raw_sup: 0.0,
            parallel_removed: false,
            trivial: true,
        };
        let mut b = assemble(entry, seed, 0.0);
        b.h = TensorField::numeric(FieldKind::Sym2, |_| Ok(vec![0.0; 16])).with_invariant(entry.metric.invariant);
        b.eigen_residual = 0.0;
        b.trace_residual = 0.0;
        b
    }

    /// The same bundle with `ω⁻` multiplied by `s`.
    pub fn scaled(&self, s: f64) -> DestabilizerBundle {
        let mut b = assemble(&self.entry, self.seed.clone(), self.scale * s);
        b.eigen_residual = self.eigen_residual;
        b.trace_residual = self.trace_residual;
        b
    }

    /// `|Ph + f⁻³h| / |h|` and `|tr h| / |h|` at `p`, using the full 2-jet of `h`.
    pub fn eigen_residual_at(&self, p: &[f64; 4]) -> Result<(f64, f64), StabilityError> {
        let k = kahler_at(&self.entry, p)?;
        let l = LocalField::with_pack(&self.h, &self.entry.metric, k.pack.clone(), &eigen_stencil())?;
        let frame = l.frame();
        let h = SymT2::from_matrix(&l.value_matrix());
        let ph = l.p_operator()?;
        let norm = h.norm(frame).max(1e-300);
        let res = (ph + h * k.f.powi(-3)).norm(frame) / norm;
        Ok((res, l.trace_excess()))
    }

    fn checked(mut self, tol: f64) -> Result<DestabilizerBundle, StabilityError> {
        let (mut worst, mut trace) = (0.0f64, 0.0f64);
        for p in self.entry.samples(20, 0xe16e) {
            let (r, t) = self.eigen_residual_at(&p)?;
            if !(t < TRACE_TOL) {
                return Err(StabilityError::NotTraceFree { point: p, excess: t });
            }
            if !(r < tol) {
                return Err(StabilityError::EigenRelation { point: p, residual: r });
            }
            worst = worst.max(r);
            trace = trace.max(t);
        }
        self.eigen_residual = worst;
        self.trace_residual = trace;
        Ok(self)
    }

    /// Pointwise norms `(|τ|, |h|, |∇h|, |ω⁻|)` at `p`.
    pub fn norms(&self, p: &[f64; 4]) -> Result<[f64; 4], StabilityError> {
        let metric = &self.entry.metric;
        let pack = curvature_at(metric, p)?;
        let frame = pack.frame.clone();
        let l = LocalField::with_pack(&self.h, metric, pack, &StencilConfig::default().first_order())?;
        let gi = frame.g_inv;
        let mut grad2 = 0.0;
        for c in 0..4 {
            for d in 0..4 {
                if gi[(c, d)] != 0.0 {
                    grad2 += gi[(c, d)] * (gi * l.grad_matrix(c) * gi).component_mul(&l.grad_matrix(d)).sum();
                }
            }
        }
        Ok([
            self.tau.form2(p)?.norm(&frame),
            self.h.sym2(p)?.norm(&frame),
            grad2.max(0.0).sqrt(),
            self.omega_minus.form2(p)?.norm(&frame),
        ])
    }

    /// Coordinate components of `h` at `p`.
    pub fn h_matrix(&self, p: &[f64; 4]) -> Result<Matrix4<f64>, StabilityError> {
        Ok(self.h.sym2(p)?.to_matrix())
    }

    /// Eigenvalues of `h` in an orthonormal frame at `p`, ascending.
    pub fn frame_eigenvalues(&self, p: &[f64; 4]) -> Result<[f64; 4], StabilityError> {
        let frame = frame_at(&self.entry.metric, p)?;
        let hf = frame.to_frame2(&self.h_matrix(p)?);
        let mut v: Vec<f64> = hf.symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        Ok([v[0], v[1], v[2], v[3]])
    }
}

/// Least-squares scalar `c` with `computed ≈ c·reference`, and the largest
/// deviation `max|computed − c·reference| / max|c·reference|` over the points.
pub fn fit_global_scalar(computed: &[Matrix4<f64>], reference: &[Matrix4<f64>]) -> (f64, f64) {
    let num: f64 = computed.iter().zip(reference).map(|(a, b)| a.component_mul(b).sum()).sum();
    let den: f64 = reference.iter().map(|b| b.norm_squared()).sum();
    let c = num / den;
    let dev = computed
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b * c).amax() / (b * c).amax().max(1e-300))
        .fold(0.0, f64::max);
    (c, dev)
}

/// The closed form `h ∝ −r⁻¹(V⁻¹dr², V dt², −r²dθ², −r²sin²θ dφ²)`,
/// `V = 1 − 2m/r`, of the destabilizing direction on Euclidean
/// Schwarzschild in coordinates `(r, t, θ, φ)`.
pub fn schwarzschild_reference(m: f64, p: &[f64; 4]) -> Matrix4<f64> {
    let (r, th) = (p[0], p[2]);
    let v = 1.0 - 2.0 * m / r;
    Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0 / v, v, -r * r, -r * r * th.sin().powi(2))) * (-1.0 / r)
}

/// Comparison of a computed `h` with a closed form up to one global scalar.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GoldenFit {
    pub scalar: f64,
    pub max_deviation: f64,
    pub points: usize,
}

/// Fit the bundle's `h` against the closed form at `points`, for entries that
/// have one (Schwarzschild); `None` otherwise.
pub fn golden_fit(bundle: &DestabilizerBundle, points: &[[f64; 4]]) -> Result<Option<GoldenFit>, StabilityError> {
    if bundle.entry.name != "schwarzschild" {
        return Ok(None);
    }
    let m = bundle.entry.param("m");
    let computed = points.iter().map(|p| bundle.h_matrix(p)).collect::<Result<Vec<_>, _>>()?;
    let reference: Vec<_> = points.iter().map(|p| schwarzschild_reference(m, p)).collect();
    let (scalar, max_deviation) = fit_global_scalar(&computed, &reference);
    Ok(Some(GoldenFit { scalar, max_deviation, points: points.len() }))
}

/// Log-log slopes of the pointwise norms along the radial coordinate.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DecayReport {
    pub radii: Vec<f64>,
    /// `(|τ|, |h|, |∇h|, |ω⁻|)` at each radius.
    pub samples: Vec<[f64; 4]>,
    pub slope_tau: f64,
    pub slope_h: f64,
    pub slope_grad_h: f64,
    pub slope_omega: f64,
}

impl DecayReport {
    pub fn slopes(&self) -> [f64; 4] {
        [self.slope_tau, self.slope_h, self.slope_grad_h, self.slope_omega]
    }
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Fit decay rates of `|τ|`, `|h|`, `|∇h|`, `|ω⁻|` along the radial coordinate
/// (other coordinates at the centre of the sample box).
pub fn decay_audit(bundle: &DestabilizerBundle, radii: &[f64]) -> Result<DecayReport, StabilityError> {
    let entry = &bundle.entry;
    let r = entry.radial.ok_or(StabilityError::NoRadial)?;
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().copied().fold(0.0, f64::max);
    if radii.len() < 8 || !(hi >= 10.0 * lo) || !(lo > 0.0) {
        return Err(StabilityError::TooFewRadii { count: radii.len(), span: hi / lo });
    }
    let mut base: [f64; 4] = std::array::from_fn(|i| 0.5 * (entry.sample_domain[i].0 + entry.sample_domain[i].1));
    let mut samples = Vec::with_capacity(radii.len());
    for &x in radii {
        base[r] = x;
        if !entry.metric.contains(&base) {
            return Err(StabilityError::RadiusOutsideChart(x));
        }
        samples.push(bundle.norms(&base)?);
    }
    let slope = |k: usize| loglog_slope(radii, &samples.iter().map(|s| s[k]).collect::<Vec<_>>());
    Ok(DecayReport {
        slope_tau: slope(0),
        slope_h: slope(1),
        slope_grad_h: slope(2),
        slope_omega: slope(3),
        radii: radii.to_vec(),
        samples,
    })
}
