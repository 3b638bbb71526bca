//! The benchmark problems.

use crate::assembly::{ExactSolution, LsqProblem};
use crate::mesh::{make_lshape_mesh, make_unit_square_mesh, TriangleMesh};
use crate::spaces::SpaceKind;
use crate::tensor::{Point, Tensor, Vector};
use crate::{Error, Result};

/// Smooth pressure, zero velocity on the unit square:
/// `u = 0`, `p = x² − 1/3`, `M = −(p/t) I`, `f = ∇p = (2x, 0)`.
#[derive(Clone, Copy, Debug)]
pub struct PolynomialPressure {
    pub t: f64,
}

impl ExactSolution for PolynomialPressure {
    fn velocity(&self, _x: Point) -> Vector {
        [0.0, 0.0]
    }

    fn velocity_gradient(&self, _x: Point) -> Tensor {
        [[0.0; 2]; 2]
    }

    fn pressure(&self, x: Point) -> f64 {
        x[0] * x[0] - 1.0 / 3.0
    }

    fn pseudostress(&self, x: Point) -> Tensor {
        let s = -self.pressure(x) / self.t;
        [[s, 0.0], [0.0, s]]
    }

    fn pseudostress_div(&self, x: Point) -> Vector {
        [-2.0 * x[0] / self.t, 0.0]
    }
}

pub fn problem_polynomial_pressure(t: f64) -> Result<LsqProblem> {
    Ok(LsqProblem::new(t, |x| [2.0 * x[0], 0.0])?.with_exact(PolynomialPressure { t }))
}

/// Poiseuille flow with boundary layers at `y = 0` and `y = 1`:
/// `u₁ = (1 + e^{1/t} − e^{y/t} − e^{(1−y)/t}) / (1 + e^{1/t})`, `u₂ = 0`,
/// `p = 0`, `f = (1, 0)`.
///
/// Evaluated after dividing numerator and denominator by `e^{1/t}`, so no
/// exponent is positive.
#[derive(Clone, Copy, Debug)]
pub struct PoiseuilleLayer {
    pub t: f64,
}

impl PoiseuilleLayer {
    /// `(e^{(y−1)/t} + e^{−y/t}) / (1 + e^{−1/t})`, i.e. `1 − u₁`.
    fn layer(&self, y: f64) -> f64 {
        let t = self.t;
        (((y - 1.0) / t).exp() + (-y / t).exp()) / (1.0 + (-1.0 / t).exp())
    }

    /// `∂u₁/∂y`.
    pub fn slope(&self, y: f64) -> f64 {
        let t = self.t;
        -(((y - 1.0) / t).exp() - (-y / t).exp()) / (t * (1.0 + (-1.0 / t).exp()))
    }

    pub fn u1(&self, y: f64) -> f64 {
        1.0 - self.layer(y)
    }
}

impl ExactSolution for PoiseuilleLayer {
    fn velocity(&self, x: Point) -> Vector {
        [self.u1(x[1]), 0.0]
    }

    fn velocity_gradient(&self, x: Point) -> Tensor {
        [[0.0, self.slope(x[1])], [0.0, 0.0]]
    }

    fn pressure(&self, _x: Point) -> f64 {
        0.0
    }

    fn pseudostress(&self, x: Point) -> Tensor {
        [[0.0, self.t * self.slope(x[1])], [0.0, 0.0]]
    }

    fn pseudostress_div(&self, x: Point) -> Vector {
        // t ∂²u₁/∂y² = −(1 − u₁)/t
        [-self.layer(x[1]) / self.t, 0.0]
    }
}

pub fn problem_poiseuille_layer(t: f64) -> Result<LsqProblem> {
    let exact = PoiseuilleLayer { t };
    Ok(LsqProblem::new(t, |_| [1.0, 0.0])?
        .with_dirichlet(move |x| exact.velocity(x))
        .with_exact(exact))
}

/// `f = (xy, eˣ)` on the L-shape; no closed-form solution.
pub fn problem_lshape(t: f64) -> Result<LsqProblem> {
    LsqProblem::new(t, |x| [x[0] * x[1], x[0].exp()])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Locking,
    Poiseuille,
    Lshape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    UnitSquare,
    LShape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefinementMode {
    Uniform,
    Adaptive,
}

impl RefinementMode {
    pub fn name(self) -> &'static str {
        match self {
            RefinementMode::Uniform => "uniform",
            RefinementMode::Adaptive => "adaptive",
        }
    }
}

impl std::str::FromStr for RefinementMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(RefinementMode::Uniform),
            "adaptive" => Ok(RefinementMode::Adaptive),
            _ => Err(Error::InvalidConfig(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub name: &'static str,
    pub domain: DomainKind,
    pub t_values: Vec<f64>,
    pub modes: Vec<RefinementMode>,
    pub spaces: Vec<SpaceKind>,
    pub max_dofs: usize,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Locking => "locking",
            Experiment::Poiseuille => "poiseuille",
            Experiment::Lshape => "lshape",
        }
    }

    pub fn spec(self) -> ExperimentSpec {
        use RefinementMode::*;
        match self {
            Experiment::Locking => ExperimentSpec {
                name: self.name(),
                domain: DomainKind::UnitSquare,
                t_values: vec![1.0, 1e-1, 1e-2, 1e-3],
                modes: vec![Uniform],
                spaces: vec![SpaceKind::Standard, SpaceKind::Augmented],
                max_dofs: 30_000,
            },
            Experiment::Poiseuille => ExperimentSpec {
                name: self.name(),
                domain: DomainKind::UnitSquare,
                t_values: vec![5e-2, 5e-3],
                modes: vec![Uniform, Adaptive],
                spaces: vec![SpaceKind::Augmented],
                max_dofs: 10_000,
            },
            Experiment::Lshape => ExperimentSpec {
                name: self.name(),
                domain: DomainKind::LShape,
                t_values: vec![1.0, 1e-1, 1e-2, 1e-3],
                modes: vec![Uniform, Adaptive],
                spaces: vec![SpaceKind::Augmented],
                max_dofs: 20_000,
            },
        }
    }

    pub fn problem(self, t: f64) -> Result<LsqProblem> {
        match self {
            Experiment::Locking => problem_polynomial_pressure(t),
            Experiment::Poiseuille => problem_poiseuille_layer(t),
            Experiment::Lshape => problem_lshape(t),
        }
    }

    pub fn initial_mesh(self) -> TriangleMesh {
        match self.spec().domain {
            DomainKind::UnitSquare => make_unit_square_mesh(2),
            DomainKind::LShape => make_lshape_mesh(),
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "locking" => Ok(Experiment::Locking),
            "poiseuille" => Ok(Experiment::Poiseuille),
            "lshape" => Ok(Experiment::Lshape),
            _ => Err(Error::InvalidConfig(format!("unknown experiment `{s}`"))),
        }
    }
}
