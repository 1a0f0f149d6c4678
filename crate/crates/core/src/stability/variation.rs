use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::quadrature::{ordered_sum, Axis, GridPolicy, QuadratureGrid};
use super::{DestabilizerBundle, StabilityError};
use crate::catalog::{simple_eigen, EntryClass};
use crate::curvature::{curvature_at, rm_action, weyl_plus_sym0};
use crate::fieldops::{FieldKind, LocalField, StencilConfig, TensorField};
use crate::tensor_point::SymT2;

/// Sign convention printed with every report.
pub const CONVENTION_NOTE: &str = "Q_eq19 = -∫<Lk - δ*δk, k> with L = ½∇*∇ - R̊ and k = χ_R h; \
a positive value in some direction certifies instability (the metric is stable iff Q < 0 for all \
compactly supported trace-free k). minus_Q_eq19 is reported for the opposite convention.";

/// Relative change under node halving above which a quadrature is rejected.
const CONVERGENCE_TOL: f64 = 0.1;

/// Quintic smoothstep cutoff: `χ = 1` on `[0, R]`, `χ = 0` on `[2R, ∞)`,
/// `χ = 1 − s((r − R)/R)` with `s(x) = 6x⁵ − 15x⁴ + 10x³` in between.
/// `χ` is C² at both junctions and `|χ′| ≤ 15/(8R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffFamily {
    pub r_cut: f64,
}

impl CutoffFamily {
    pub fn new(r_cut: f64) -> Self {
        CutoffFamily { r_cut }
    }

    fn x(&self, r: f64) -> f64 {
        ((r - self.r_cut) / self.r_cut).clamp(0.0, 1.0)
    }

    pub fn chi(&self, r: f64) -> f64 {
        let x = self.x(r);
        1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
    }

    pub fn dchi(&self, r: f64) -> f64 {
        let x = self.x(r);
        -30.0 * x * x * (1.0 - x) * (1.0 - x) / self.r_cut
    }

    pub fn ddchi(&self, r: f64) -> f64 {
        let x = self.x(r);
        -60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / (self.r_cut * self.r_cut)
    }
}

/// Integrand densities (per unit volume) at one node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct NodeDensities {
    /// `|∇k|²`
    pub grad2: f64,
    /// `⟨R̊k, k⟩`
    pub rm: f64,
    /// `|δk|²`
    pub delta2: f64,
    /// `|Tk|²`
    pub t2: f64,
    /// `⟨W₊k, k⟩`
    pub w_plus: f64,
    /// `|k|²`
    pub k2: f64,
    /// `f⁻³|k|²`
    pub lower: f64,
    /// `|dχ|²|h|²`
    pub cutoff: f64,
}

impl NodeDensities {
    fn as_array(&self) -> [f64; 8] {
        [self.grad2, self.rm, self.delta2, self.t2, self.w_plus, self.k2, self.lower, self.cutoff]
    }

    fn scaled(&self, w: f64) -> [f64; 8] {
        self.as_array().map(|v| v * w)
    }
}

/// Integrals from one quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Integrals {
    q_eq19: f64,
    p_pairing: f64,
    lower_bound: f64,
    delta_term: f64,
    norm_term: f64,
    cutoff_term: f64,
}

impl Integrals {
    fn from_totals(t: &[f64; 8]) -> Self {
        let [grad2, rm, delta2, t2, w_plus, k2, lower, cutoff] = *t;
        Integrals {
            q_eq19: -0.5 * grad2 + rm + delta2,
            p_pairing: -t2 + w_plus,
            lower_bound: lower,
            delta_term: delta2,
            norm_term: k2,
            cutoff_term: cutoff,
        }
    }
}

/// One row of a cutoff sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// Cutoff radius; `None` when the whole manifold is integrated.
    #[serde(rename = "R")]
    pub r_cut: Option<f64>,
    #[serde(rename = "Q_eq19")]
    pub q_eq19: f64,
    #[serde(rename = "P_pairing")]
    pub p_pairing: f64,
    pub lower_bound: f64,
    /// `∫|δk|²`
    pub delta_term: f64,
    /// `∫|k|²`
    pub norm_term: f64,
    /// `∫|dχ|²|h|²`, the size of the terms created by the cutoff.
    pub cutoff_term: f64,
    /// `(Q − P − ⅓∫|δk|² − (Scal/12)∫|k|²) / |Q|`; vanishes up to boundary and
    /// quadrature errors.
    pub ibp_residual: f64,
    /// `|Q(nodes) − Q(nodes/2)|`
    pub quad_error: f64,
    pub error_estimate: f64,
    pub nodes_r: usize,
    pub nodes_theta: usize,
    /// `Q_eq19` with half the nodes.
    pub q_half_nodes: f64,
    /// Wall time; excluded from JSON so reports are reproducible.
    #[serde(skip)]
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Unstable,
    Inconclusive,
    StableDirectionOnly,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
            Verdict::StableDirectionOnly => "stable-direction-only",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Second-variation result for one bundle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub entry: String,
    pub class: &'static str,
    pub convention: &'static str,
    /// Values of the row with the largest cutoff radius.
    #[serde(rename = "Q_eq19")]
    pub q_eq19: f64,
    #[serde(rename = "minus_Q_eq19")]
    pub minus_q_eq19: f64,
    #[serde(rename = "P_pairing")]
    pub p_pairing: f64,
    pub lower_bound: f64,
    pub error_estimate: f64,
    /// Fitted `C` of the cutoff error `C/R` (sweeps with ≥ 2 rows).
    pub cutoff_constant: Option<f64>,
    pub rows: Vec<SweepRow>,
    pub verdict: Verdict,
    /// The integrand was found independent of the polar angle.
    pub isotropic: bool,
    pub eigen_residual: f64,
}

impl StabilityReport {
    /// Rows as CSV with columns `R,Q_eq19,P_pairing,lower_bound,error_estimate,nodes_r,nodes_theta,runtime_s`.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut s = String::from("R,Q_eq19,P_pairing,lower_bound,error_estimate,nodes_r,nodes_theta,runtime_s\n");
        for r in &self.rows {
            let rc = r.r_cut.map(fmt17).unwrap_or_default();
            let t = if with_timing { fmt17(r.runtime_s) } else { fmt17(0.0) };
            s.push_str(&format!(
                "{rc},{},{},{},{},{},{},{t}\n",
                fmt17(r.q_eq19),
                fmt17(r.p_pairing),
                fmt17(r.lower_bound),
                fmt17(r.error_estimate),
                r.nodes_r,
                r.nodes_theta
            ));
        }
        s
    }

    /// Pretty JSON with every float written with 17 significant digits.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        json17(&v)
    }
}

/// `x` with 17 significant digits (round-trips exactly).
pub(crate) fn fmt17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:?}");
    }
    format!("{x:.16e}")
}

/// Serialize a JSON value with all floats in [`fmt17`] form.
pub(crate) fn json17(v: &serde_json::Value) -> String {
    fn go(v: &serde_json::Value, ind: usize, out: &mut String) {
        use serde_json::Value;
        let pad = |n: usize| "  ".repeat(n);
        match v {
            Value::Number(n) if n.is_f64() => out.push_str(&fmt17(n.as_f64().unwrap())),
            Value::Array(a) if a.is_empty() => out.push_str("[]"),
            Value::Array(a) => {
                out.push_str("[\n");
                for (i, x) in a.iter().enumerate() {
                    out.push_str(&pad(ind + 1));
                    go(x, ind + 1, out);
                    out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(ind));
                out.push(']');
            }
            Value::Object(m) if m.is_empty() => out.push_str("{}"),
            Value::Object(m) => {
                out.push_str("{\n");
                for (i, (k, x)) in m.iter().enumerate() {
                    out.push_str(&pad(ind + 1));
                    out.push_str(&serde_json::to_string(k).unwrap());
                    out.push_str(": ");
                    go(x, ind + 1, out);
                    out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(ind));
                out.push('}');
            }
            other => out.push_str(&other.to_string()),
        }
    }
    let mut out = String::new();
    go(v, 0, &mut out);
    out.push('\n');
    out
}

/// First-derivative stencil for the integrands; the sixth-order rule keeps
/// the error bounded at nodes close to a bolt, where the step shrinks with
/// the distance to the chart boundary.
fn quadrature_stencil() -> StencilConfig {
    StencilConfig::new(6, 1e-3, 0).first_order()
}

/// `k = χ h` as a field (or `h` itself without cutoff).
fn cut_field(bundle: &DestabilizerBundle, cutoff: Option<CutoffFamily>) -> TensorField {
    let (Some(c), Some(r)) = (cutoff, bundle.entry.radial) else { return bundle.h.clone() };
    let h = bundle.h.clone();
    TensorField::numeric(FieldKind::Sym2, move |p| {
        let chi = c.chi(p[r]);
        if chi == 0.0 {
            return Ok(vec![0.0; 16]);
        }
        Ok(h.value(p)?.into_iter().map(|v| v * chi).collect())
    })
    .with_invariant(bundle.h.invariant)
}

/// Densities and the volume density `√det g` at `p`.
fn densities(
    bundle: &DestabilizerBundle,
    k: &TensorField,
    cutoff: Option<CutoffFamily>,
    p: &[f64; 4],
) -> Result<(NodeDensities, f64), StabilityError> {
    let metric = &bundle.entry.metric;
    let pack = curvature_at(metric, p)?;
    let vol = pack.frame.volume_density();
    let l = LocalField::with_pack(k, metric, pack, &quadrature_stencil())?;
    let frame = l.frame();
    let gi = frame.g_inv;
    let kv = SymT2::from_matrix(&l.value_matrix());
    let k2 = kv.inner(&kv, frame);
    let mut d = NodeDensities { k2, ..Default::default() };
    if let (Some(c), Some(r)) = (cutoff, bundle.entry.radial) {
        let dchi = c.dchi(p[r]);
        if dchi != 0.0 {
            let h = bundle.h.sym2(p)?;
            d.cutoff = dchi * dchi * gi[(r, r)] * h.inner(&h, frame);
        }
    }
    if l.cov.v.iter().all(|v| *v == 0.0) && (0..4).all(|c| l.grad_matrix(c).amax() == 0.0) {
        return Ok((d, vol));
    }
    for a in 0..4 {
        for b in 0..4 {
            if gi[(a, b)] != 0.0 {
                d.grad2 += gi[(a, b)] * (gi * l.grad_matrix(a) * gi).component_mul(&l.grad_matrix(b)).sum();
            }
        }
    }
    d.rm = rm_action(&l.pack, &kv).inner(&kv, frame);
    let div = nalgebra::Vector4::from(l.divergence()?);
    d.delta2 = (div.transpose() * gi * div)[0];
    d.t2 = l.t_operator()?.norm().powi(2);
    d.w_plus = weyl_plus_sym0(&l.pack, &kv).inner(&kv, frame);
    if k2 > 0.0 {
        let reference = bundle.entry.kahler.as_ref().map(|k| k.reference).unwrap_or((0, 1));
        // f = λ^(−1/3), so f⁻³ = λ
        let (lambda, _) = simple_eigen(&l.pack, reference)?;
        d.lower = lambda * k2;
    }
    Ok((d, vol))
}

/// Whether the densities are independent of the polar angle, probed at two radii.
fn probe_isotropy(
    bundle: &DestabilizerBundle,
    k: &TensorField,
    cutoff: Option<CutoffFamily>,
    grid: &QuadratureGrid,
) -> Result<bool, StabilityError> {
    let entry = &bundle.entry;
    let Some(theta) = entry.polar else { return Ok(false) };
    let mut base: [f64; 4] = std::array::from_fn(|i| grid.axes[i].nodes[0]);
    let radial = entry.radial.map(|r| grid.axes[r].nodes.clone()).unwrap_or_default();
    let radii: Vec<f64> = if radial.is_empty() { vec![base[0]] } else { vec![radial[radial.len() / 3], radial[2 * radial.len() / 3]] };
    for r in radii {
        if let Some(ri) = entry.radial {
            base[ri] = r;
        }
        let mut rows = Vec::new();
        for t in [0.5, 1.3, 2.4] {
            let mut p = base;
            p[theta] = t;
            rows.push(densities(bundle, k, cutoff, &p)?.0.as_array());
        }
        for c in 0..8 {
            let scale = rows.iter().map(|r| r[c].abs()).fold(0.0, f64::max);
            let spread = rows.iter().map(|r| (r[c] - rows[0][c]).abs()).fold(0.0, f64::max);
            let total: f64 = rows[0].iter().map(|v| v.abs()).sum();
            if spread > 1e-8 * scale.max(1e-12 * total) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Integrate the densities over `grid`, collapsing the polar angle when the
/// integrand is isotropic. Returns the integrals and whether the collapse was used.
fn integrate(
    bundle: &DestabilizerBundle,
    cutoff: Option<CutoffFamily>,
    grid: &QuadratureGrid,
) -> Result<(Integrals, bool), StabilityError> {
    let k = cut_field(bundle, cutoff);
    let isotropic = probe_isotropy(bundle, &k, cutoff, grid)?;
    let metric = &bundle.entry.metric;
    let nodes: Vec<([f64; 4], f64, bool)> = if isotropic {
        let theta = bundle.entry.polar.expect("isotropic implies a polar coordinate");
        let mid = 0.5 * (metric.ranges[theta].0 + metric.ranges[theta].1);
        let mut reduced = grid.clone();
        reduced.axes[theta] = Axis::fixed(mid, 1.0);
        let th = grid.axes[theta].clone();
        reduced
            .nodes()
            .into_par_iter()
            .map(|(p, w)| {
                let vols = th.nodes.iter().zip(&th.weights).map(|(&t, &wt)| {
                    let mut q = p;
                    q[theta] = t;
                    metric.metric(&q).map(|g| wt * g.determinant().abs().sqrt())
                });
                let v = vols.collect::<Result<Vec<f64>, _>>()?;
                Ok((p, w * ordered_sum(v), true))
            })
            .collect::<Result<_, StabilityError>>()?
    } else {
        grid.nodes().into_iter().map(|(p, w)| (p, w, false)).collect()
    };
    let contributions: Vec<[f64; 8]> = nodes
        .par_iter()
        .map(|(p, w, has_volume)| {
            let (d, vol) = densities(bundle, &k, cutoff, p)?;
            Ok(d.scaled(if *has_volume { *w } else { w * vol }))
        })
        .collect::<Result<_, StabilityError>>()?;
    let totals: [f64; 8] = std::array::from_fn(|c| ordered_sum(contributions.iter().map(|x| x[c])));
    Ok((Integrals::from_totals(&totals), isotropic))
}

fn effective_cutoff(bundle: &DestabilizerBundle, r_cut: Option<f64>) -> Result<Option<CutoffFamily>, StabilityError> {
    if bundle.entry.class == EntryClass::CompactPositive {
        return Ok(None);
    }
    match r_cut {
        Some(r) if bundle.entry.radial.is_none() => Err(StabilityError::GridTooSmall { r_cut: r, lo: f64::NAN, hi: f64::NAN }),
        Some(r) => Ok(Some(CutoffFamily::new(r))),
        None => Ok(None),
    }
}

fn row(bundle: &DestabilizerBundle, r_cut: Option<f64>, policy: GridPolicy) -> Result<(SweepRow, bool), StabilityError> {
    let start = Instant::now();
    let cutoff = effective_cutoff(bundle, r_cut)?;
    let r_eff = cutoff.map(|c| c.r_cut);
    let fine_grid = QuadratureGrid::for_entry(&bundle.entry, r_eff, policy)?;
    let coarse_grid = QuadratureGrid::for_entry(&bundle.entry, r_eff, policy.halved())?;
    let (fine, isotropic) = integrate(bundle, cutoff, &fine_grid)?;
    let (coarse, _) = integrate(bundle, cutoff, &coarse_grid)?;
    let quad_error = (fine.q_eq19 - coarse.q_eq19).abs();
    if quad_error > CONVERGENCE_TOL * fine.q_eq19.abs() && quad_error > 1e-300 {
        return Err(StabilityError::NonConvergence {
            coarse: coarse.q_eq19,
            fine: fine.q_eq19,
            rel: quad_error / fine.q_eq19.abs().max(1e-300),
        });
    }
    let scal = 4.0 * bundle.entry.einstein_constant;
    let ibp = fine.q_eq19 - fine.p_pairing - fine.delta_term / 3.0 - scal / 12.0 * fine.norm_term;
    Ok((
        SweepRow {
            r_cut: r_eff,
            q_eq19: fine.q_eq19,
            p_pairing: fine.p_pairing,
            lower_bound: fine.lower_bound,
            delta_term: fine.delta_term,
            norm_term: fine.norm_term,
            cutoff_term: fine.cutoff_term,
            ibp_residual: if fine.q_eq19 != 0.0 { ibp / fine.q_eq19.abs() } else { ibp },
            quad_error,
            error_estimate: quad_error + fine.cutoff_term,
            nodes_r: policy.nodes_r,
            nodes_theta: policy.nodes_theta,
            q_half_nodes: coarse.q_eq19,
            runtime_s: start.elapsed().as_secs_f64(),
        },
        isotropic,
    ))
}

fn verdict(rows: &[SweepRow]) -> Verdict {
    let tail = &rows[rows.len().saturating_sub(2)..];
    if tail.iter().all(|r| r.q_eq19 > 3.0 * r.error_estimate && r.q_eq19 > 0.0) {
        Verdict::Unstable
    } else if tail.iter().all(|r| r.q_eq19 < -3.0 * r.error_estimate && r.q_eq19 < 0.0) {
        Verdict::StableDirectionOnly
    } else {
        Verdict::Inconclusive
    }
}

fn report(bundle: &DestabilizerBundle, rows: Vec<SweepRow>, cutoff_constant: Option<f64>, isotropic: bool) -> StabilityReport {
    let last = rows.last().expect("at least one row").clone();
    StabilityReport {
        entry: bundle.entry.name.clone(),
        class: bundle.entry.class.tag(),
        convention: CONVENTION_NOTE,
        q_eq19: last.q_eq19,
        minus_q_eq19: -last.q_eq19,
        p_pairing: last.p_pairing,
        lower_bound: last.lower_bound,
        error_estimate: last.error_estimate,
        cutoff_constant,
        verdict: verdict(&rows),
        rows,
        isotropic,
        eigen_residual: bundle.eigen_residual,
    }
}

/// Second variation along `k = χ_R h` (or `h` itself on compact entries, where
/// `r_cut` is ignored). The error estimate is the change under node halving plus
/// `∫|dχ|²|h|²`.
pub fn second_variation(
    bundle: &DestabilizerBundle,
    r_cut: Option<f64>,
    policy: GridPolicy,
) -> Result<StabilityReport, StabilityError> {
    let (r, iso) = row(bundle, r_cut, policy)?;
    Ok(report(bundle, vec![r], None, iso))
}

/// Second variation for increasing cutoff radii. With two or more rows the
/// cutoff error is `C/R`, `C` fitted from `Q(R) ≈ Q_∞ + C/R`.
pub fn sweep_cutoff(
    bundle: &DestabilizerBundle,
    radii: &[f64],
    policy: GridPolicy,
) -> Result<StabilityReport, StabilityError> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(StabilityError::RadiiNotIncreasing(radii.to_vec()));
    }
    if bundle.entry.class == EntryClass::CompactPositive || radii.len() == 1 {
        return second_variation(bundle, Some(radii[0]), policy);
    }
    let mut rows = Vec::with_capacity(radii.len());
    let mut iso = true;
    for &r in radii {
        let (row, i) = row(bundle, Some(r), policy)?;
        iso &= i;
        rows.push(row);
    }
    let xs: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, rows.iter().map(|r| r.q_eq19).sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&rows).map(|(x, r)| (x - mx) * (r.q_eq19 - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let c = (sxy / sxx).abs();
    for (row, x) in rows.iter_mut().zip(&xs) {
        row.error_estimate = row.quad_error + c * x;
    }
    Ok(report(bundle, rows, Some(c), iso))
}
