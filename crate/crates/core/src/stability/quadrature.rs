use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use super::StabilityError;
use crate::catalog::CatalogEntry;

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis {
    /// Gauss–Legendre rule with `n` nodes on `[lo, hi]`.
    pub fn gauss(lo: f64, hi: f64, n: usize) -> Axis {
        let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
        let (c, s) = (0.5 * (hi + lo), 0.5 * (hi - lo));
        let mut pairs: Vec<(f64, f64)> = rule.nodes().zip(rule.weights()).map(|(x, w)| (c + s * x, s * w)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Axis { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
    }

    /// Composite Gauss–Legendre rule over consecutive panels.
    pub fn panels(panels: &[(f64, f64, usize)]) -> Axis {
        let mut out = Axis { nodes: Vec::new(), weights: Vec::new() };
        for &(lo, hi, n) in panels {
            let a = Axis::gauss(lo, hi, n);
            out.nodes.extend(a.nodes);
            out.weights.extend(a.weights);
        }
        out
    }

    /// Uniform trapezoid rule for a periodic coordinate.
    pub fn periodic(period: f64, n: usize) -> Axis {
        let n = n.max(1);
        Axis { nodes: (0..n).map(|k| period * k as f64 / n as f64).collect(), weights: vec![period / n as f64; n] }
    }

    /// A single node carrying the full measure of an invariant direction.
    pub fn fixed(at: f64, measure: f64) -> Axis {
        Axis { nodes: vec![at], weights: vec![measure] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Node counts requested for a quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub nodes_r: usize,
    pub nodes_theta: usize,
    /// Nodes per periodic coordinate on which the integrand depends.
    pub nodes_periodic: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy { nodes_r: 256, nodes_theta: 24, nodes_periodic: 16 }
    }
}

impl GridPolicy {
    pub fn halved(&self) -> GridPolicy {
        GridPolicy {
            nodes_r: (self.nodes_r / 2).max(2),
            nodes_theta: (self.nodes_theta / 2).max(2),
            nodes_periodic: (self.nodes_periodic / 2).max(2),
        }
    }
}

/// Tensor-product rule over the chart of an entry.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub axes: [Axis; 4],
    pub policy: GridPolicy,
    /// Truncation `[r_min, r_max]` of the radial coordinate, if any.
    pub radial_domain: Option<(f64, f64)>,
}

impl QuadratureGrid {
    /// Grid for an entry: the radial coordinate runs over `[r_min, 2R]` split
    /// at `R` (or over the whole interval when `r_cut` is `None`), the polar
    /// angle over `(0, π)`, invariant periodic coordinates contribute their
    /// period, and any other interval uses the entry's sample box.
    pub fn for_entry(entry: &CatalogEntry, r_cut: Option<f64>, policy: GridPolicy) -> Result<Self, StabilityError> {
        let periods = entry.periods()?;
        let mut radial_domain = None;
        let axes: Vec<Axis> = (0..4)
            .map(|i| {
                let (lo, hi) = entry.metric.ranges[i];
                if Some(i) == entry.radial {
                    let axis = match r_cut {
                        Some(r) => {
                            if !(r > lo) || !(2.0 * r < hi) {
                                return Err(StabilityError::GridTooSmall { r_cut: r, lo, hi });
                            }
                            let n = (policy.nodes_r / 2).max(2);
                            radial_domain = Some((lo, 2.0 * r));
                            Axis::panels(&[(lo, r, n), (r, 2.0 * r, n)])
                        }
                        None => {
                            if !lo.is_finite() || !hi.is_finite() {
                                return Err(StabilityError::GridTooSmall { r_cut: f64::INFINITY, lo, hi });
                            }
                            radial_domain = Some((lo, hi));
                            Axis::gauss(lo, hi, policy.nodes_r)
                        }
                    };
                    return Ok(axis);
                }
                if Some(i) == entry.polar {
                    return Ok(Axis::gauss(lo, hi, policy.nodes_theta));
                }
                match (periods[i], entry.metric.invariant[i]) {
                    (Some(p), true) => Ok(Axis::fixed(0.0, p)),
                    (Some(p), false) => Ok(Axis::periodic(p, policy.nodes_periodic)),
                    (None, _) => {
                        let (a, b) = entry.sample_domain[i];
                        Ok(Axis::gauss(a, b, policy.nodes_theta))
                    }
                }
            })
            .collect::<Result<_, _>>()?;
        let axes: [Axis; 4] = axes.try_into().expect("four axes");
        Ok(QuadratureGrid { axes, policy, radial_domain })
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    /// All nodes with their product weights, in a fixed lexicographic order.
    pub fn nodes(&self) -> Vec<([f64; 4], f64)> {
        let mut out = Vec::with_capacity(self.node_count());
        for (i0, &x0) in self.axes[0].nodes.iter().enumerate() {
            for (i1, &x1) in self.axes[1].nodes.iter().enumerate() {
                for (i2, &x2) in self.axes[2].nodes.iter().enumerate() {
                    for (i3, &x3) in self.axes[3].nodes.iter().enumerate() {
                        let w = self.axes[0].weights[i0]
                            * self.axes[1].weights[i1]
                            * self.axes[2].weights[i2]
                            * self.axes[3].weights[i3];
                        out.push(([x0, x1, x2, x3], w));
                    }
                }
            }
        }
        out
    }
}

/// Compensated summation in the given order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Kahan sum of `values` in slice order.
pub fn ordered_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut k = KahanSum::default();
    for v in values {
        k.add(v);
    }
    k.value()
}
