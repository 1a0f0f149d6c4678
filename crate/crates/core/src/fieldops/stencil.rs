use serde::{Deserialize, Serialize};

/// Finite-difference settings for field derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StencilConfig {
    /// Accuracy order of the central stencils: 2, 4 or 6.
    pub order: usize,
    /// Base step, multiplied by `max(1, |x|)` per coordinate.
    pub step: f64,
    /// Richardson extrapolation levels (0–2).
    pub richardson: usize,
    /// Skip mixed second derivatives (first-order operators only need `∂`).
    #[serde(default)]
    pub first_only: bool,
}

impl Default for StencilConfig {
    fn default() -> Self {
        StencilConfig { order: 4, step: 1e-3, richardson: 0, first_only: false }
    }
}

impl StencilConfig {
    pub fn new(order: usize, step: f64, richardson: usize) -> Self {
        assert!(matches!(order, 2 | 4 | 6), "stencil order must be 2, 4 or 6");
        assert!(richardson <= 2, "at most two Richardson levels");
        StencilConfig { order, step, richardson, first_only: false }
    }

    /// The same stencil without mixed second derivatives; second-order
    /// operators evaluated from such a jet are meaningless.
    pub fn first_order(mut self) -> Self {
        self.first_only = true;
        self
    }

    /// Half-width of the stencil in units of the step.
    pub fn reach(&self) -> usize {
        self.order / 2
    }
}

/// Central first-derivative weights for offsets `-reach..=reach`.
pub fn first_weights(order: usize) -> &'static [f64] {
    match order {
        2 => &[-0.5, 0.0, 0.5],
        4 => &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
        6 => &[-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
        _ => panic!("unsupported stencil order {order}"),
    }
}

/// Central second-derivative weights for offsets `-reach..=reach`.
pub fn second_weights(order: usize) -> &'static [f64] {
    match order {
        2 => &[1.0, -2.0, 1.0],
        4 => &[-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
        6 => &[1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0],
        _ => panic!("unsupported stencil order {order}"),
    }
}

/// Combine estimates at steps `h, h/2, h/4, …` by Richardson extrapolation.
pub fn richardson(estimates: &[Vec<f64>], order: usize) -> Vec<f64> {
    let mut level: Vec<Vec<f64>> = estimates.to_vec();
    let mut p = order as i32;
    while level.len() > 1 {
        let factor = 2f64.powi(p);
        level = level
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(coarse, fine)| (factor * fine - coarse) / (factor - 1.0)).collect())
            .collect();
        p += 2;
    }
    level.pop().unwrap_or_default()
}
