//! Reference processes: the stationary harmonic ground-state diffusion and
//! two-sided Brownian motion pinned at the origin.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::grid::{DiscretePath, TimeGrid};
use crate::model::{ModelSpec, Variant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceProcess {
    /// Stationary Ornstein–Uhlenbeck process with covariance `e^{−ω₀|t−s|}/(2ω₀)`
    /// per coordinate, the ground-state diffusion of `−½Δ + ω₀²|x|²/2`.
    GroundStateDiffusion { omega0: f64 },
    /// `B_0 = 0`, independent Brownian increments forward and backward in time.
    TwoSidedBrownian,
}

/// Gaussian law `N(mean, sd²)` of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Conditional {
    pub mean: f64,
    pub sd: f64,
}

impl ReferenceProcess {
    pub fn for_model(model: &ModelSpec) -> Self {
        match model.variant {
            Variant::Nelson { omega0 } | Variant::Polaron { omega0 } => Self::GroundStateDiffusion { omega0 },
            Variant::ZeroMomentum => Self::TwoSidedBrownian,
        }
    }

    /// Covariance of one coordinate at times `s`, `t`.
    pub fn covariance(&self, s: f64, t: f64) -> f64 {
        match *self {
            Self::GroundStateDiffusion { omega0 } => (-omega0 * (t - s).abs()).exp() / (2.0 * omega0),
            Self::TwoSidedBrownian => {
                if s * t <= 0.0 {
                    0.0
                } else {
                    s.abs().min(t.abs())
                }
            }
        }
    }

    /// Whether slice `i` is held fixed.
    pub(crate) fn is_pinned(&self, grid: &TimeGrid, i: usize) -> bool {
        matches!(self, Self::TwoSidedBrownian) && i == grid.center()
    }

    /// Law of coordinate `x_i` given its grid neighbours (Markov property).
    pub(crate) fn conditional(&self, grid: &TimeGrid, prev: Option<f64>, next: Option<f64>) -> Conditional {
        let dt = grid.dt();
        match *self {
            Self::GroundStateDiffusion { omega0 } => {
                let v = 0.5 / omega0;
                let rho = (-omega0 * dt).exp();
                let r2 = rho * rho;
                match (prev, next) {
                    (Some(a), Some(b)) => {
                        Conditional { mean: rho * (a + b) / (1.0 + r2), sd: (v * (1.0 - r2) / (1.0 + r2)).sqrt() }
                    }
                    (Some(a), None) | (None, Some(a)) => Conditional { mean: rho * a, sd: (v * (1.0 - r2)).sqrt() },
                    (None, None) => Conditional { mean: 0.0, sd: v.sqrt() },
                }
            }
            Self::TwoSidedBrownian => match (prev, next) {
                (Some(a), Some(b)) => Conditional { mean: 0.5 * (a + b), sd: (0.5 * dt).sqrt() },
                (Some(a), None) | (None, Some(a)) => Conditional { mean: a, sd: dt.sqrt() },
                (None, None) => Conditional { mean: 0.0, sd: 0.0 },
            },
        }
    }

    /// Log density (up to a constant) of a discrete path under the reference law.
    pub fn log_density(&self, path: &DiscretePath) -> f64 {
        let grid = path.grid;
        let n = path.len();
        let mut total = 0.0;
        for k in 0..path.dim {
            let x = |i: usize| path.at(i)[k];
            match *self {
                Self::GroundStateDiffusion { omega0 } => {
                    let v = 0.5 / omega0;
                    let rho = (-omega0 * grid.dt()).exp();
                    let s2 = v * (1.0 - rho * rho);
                    total -= x(0) * x(0) / (2.0 * v);
                    for i in 1..n {
                        let d = x(i) - rho * x(i - 1);
                        total -= d * d / (2.0 * s2);
                    }
                }
                Self::TwoSidedBrownian => {
                    for i in 1..n {
                        let d = x(i) - x(i - 1);
                        total -= d * d / (2.0 * grid.dt());
                    }
                }
            }
        }
        total
    }
}

/// An exact draw of the reference process on the grid.
pub fn sample_reference<R: Rng + ?Sized>(proc: &ReferenceProcess, grid: &TimeGrid, dim: usize, rng: &mut R) -> DiscretePath {
    let mut path = DiscretePath::zeros(*grid, dim);
    fill_reference(proc, &mut path, rng);
    path
}

pub(crate) fn fill_reference<R: Rng + ?Sized>(proc: &ReferenceProcess, path: &mut DiscretePath, rng: &mut R) {
    let grid = path.grid;
    let n = path.len();
    let dim = path.dim;
    match *proc {
        ReferenceProcess::GroundStateDiffusion { omega0 } => {
            let v = 0.5 / omega0;
            let rho = (-omega0 * grid.dt()).exp();
            let step = (v * (1.0 - rho * rho)).sqrt();
            for k in 0..dim {
                let z: f64 = StandardNormal.sample(rng);
                path.positions[k] = v.sqrt() * z;
            }
            for i in 1..n {
                for k in 0..dim {
                    let z: f64 = StandardNormal.sample(rng);
                    path.positions[i * dim + k] = rho * path.positions[(i - 1) * dim + k] + step * z;
                }
            }
        }
        ReferenceProcess::TwoSidedBrownian => {
            let c = grid.center();
            let step = grid.dt().sqrt();
            path.at_mut(c).iter_mut().for_each(|x| *x = 0.0);
            for i in c + 1..n {
                for k in 0..dim {
                    let z: f64 = StandardNormal.sample(rng);
                    path.positions[i * dim + k] = path.positions[(i - 1) * dim + k] + step * z;
                }
            }
            for i in (0..c).rev() {
                for k in 0..dim {
                    let z: f64 = StandardNormal.sample(rng);
                    path.positions[i * dim + k] = path.positions[(i + 1) * dim + k] + step * z;
                }
            }
        }
    }
}
