use alloc::vec;
use alloc::vec::Vec;

use super::SamplerError;

/// Weights used to discretize time integrals on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    Trapezoid,
    /// Composite Simpson; needs an even number of steps on each half window.
    #[default]
    Simpson,
}

/// Uniform grid `t_i = −T + iΔt`, `i = 0..=2·half_steps`, with `t = 0` at the center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    half_steps: usize,
    dt: f64,
    rule: QuadratureRule,
}

impl TimeGrid {
    /// Requires `T/Δt` to be an integer so that `t = 0` is a grid point.
    pub fn new(window: f64, dt: f64, rule: QuadratureRule) -> Result<Self, SamplerError> {
        if !(window > 0.0 && dt > 0.0 && window.is_finite() && dt.is_finite()) {
            return Err(SamplerError::InvalidGrid { window, dt });
        }
        let ratio = window / dt;
        let half_steps = ratio.round();
        if (ratio - half_steps).abs() > 1e-9 * ratio.max(1.0) || half_steps < 1.0 {
            return Err(SamplerError::InvalidGrid { window, dt });
        }
        let half_steps = half_steps as usize;
        if rule == QuadratureRule::Simpson && !half_steps.is_multiple_of(2) {
            return Err(SamplerError::OddSimpsonGrid { half_steps });
        }
        Ok(Self { half_steps, dt, rule })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn half_window(&self) -> f64 {
        self.half_steps as f64 * self.dt
    }

    pub fn half_steps(&self) -> usize {
        self.half_steps
    }

    pub fn len(&self) -> usize {
        2 * self.half_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of `t = 0`.
    pub fn center(&self) -> usize {
        self.half_steps
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn time(&self, i: usize) -> f64 {
        (i as f64 - self.half_steps as f64) * self.dt
    }

    /// Same window, step halved.
    pub fn refined(&self) -> Self {
        Self { half_steps: 2 * self.half_steps, dt: 0.5 * self.dt, rule: self.rule }
    }

    fn segment_weights(&self, steps: usize) -> Vec<f64> {
        let h = self.dt;
        let mut w = vec![0.0; steps + 1];
        match self.rule {
            QuadratureRule::Trapezoid => {
                for (i, wi) in w.iter_mut().enumerate() {
                    *wi = if i == 0 || i == steps { 0.5 * h } else { h };
                }
            }
            QuadratureRule::Simpson => {
                for (i, wi) in w.iter_mut().enumerate() {
                    *wi = if i == 0 || i == steps {
                        h / 3.0
                    } else if i % 2 == 1 {
                        4.0 * h / 3.0
                    } else {
                        2.0 * h / 3.0
                    };
                }
            }
        }
        w
    }

    /// Weights `(full, left, right)` for `[−T, T]`, `[−T, 0]` and `[0, T]`,
    /// each indexed over the whole grid (zero outside the sub-window).
    pub fn weights(&self) -> TimeWeights {
        let n = self.len();
        let c = self.center();
        let full = self.segment_weights(n - 1);
        let half = self.segment_weights(self.half_steps);
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        left[..=c].copy_from_slice(&half);
        right[c..].copy_from_slice(&half);
        TimeWeights { full, left, right }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeWeights {
    pub full: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// A path sampled on a [`TimeGrid`], stored row-major as `len × dim` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    pub grid: TimeGrid,
    pub dim: usize,
    pub positions: Vec<f64>,
}

impl DiscretePath {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self { grid, dim, positions: vec![0.0; grid.len() * dim] }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn at_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance(self.at(i), self.at(j))
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
