//! Benchmark problems for the biharmonic operator and error metrics against
//! known solutions.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::execution::Execution;
use crate::geometry::{tensor_grid, uniform_nodes, BoundarySide, CollocationSet, Point2};
use crate::operators::{biharmonic, constant, BoundaryCondition, PdeProblem};
use crate::postprocess::Solution;
use crate::rbf::DerivOrder;

/// Side length of the default error-evaluation grid.
pub const EVAL_GRID_SIZE: usize = 101;

/// Manufactured solution `u = sin(k1 x) cos(k2 y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmsSpec {
    pub k1: f64,
    pub k2: f64,
}

impl MmsSpec {
    pub const K10: MmsSpec = MmsSpec { k1: 10.0, k2: 10.0 };
    pub const K20: MmsSpec = MmsSpec { k1: 20.0, k2: 20.0 };

    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        if !(k1.is_finite() && k2.is_finite()) {
            return Err(Error::invalid("wavenumbers must be finite"));
        }
        Ok(MmsSpec { k1, k2 })
    }

    pub fn exact(&self, p: Point2) -> f64 {
        (self.k1 * p.x).sin() * (self.k2 * p.y).cos()
    }

    /// Analytic partial derivatives of the exact solution, any order.
    pub fn exact_derivative(&self, p: Point2, d: DerivOrder) -> f64 {
        let (n, m) = (f64::from(d.ox()), f64::from(d.oy()));
        let fx = self.k1.powi(i32::from(d.ox())) * (self.k1 * p.x + n * FRAC_PI_2).sin();
        let fy = self.k2.powi(i32::from(d.oy())) * (self.k2 * p.y + m * FRAC_PI_2).cos();
        fx * fy
    }

    /// `k1^4 + 2 k1^2 k2^2 + k2^4`.
    pub fn source_amplitude(&self) -> f64 {
        let (a, b) = (self.k1 * self.k1, self.k2 * self.k2);
        a * a + 2.0 * a * b + b * b
    }

    /// The biharmonic of the exact solution (the manufactured right-hand side of `lap^2 u = f`).
    pub fn manufactured_rhs(&self, p: Point2) -> f64 {
        self.source_amplitude() * self.exact(p)
    }
}

/// Lid-driven cavity in streamfunction form.
///
/// Every wall is a streamline (`psi = 0`). No slip on the walls: `psi_y = 0`
/// at the bottom, `psi_x = 0` on the sides, and the lid moves with
/// `psi_y = 1` at the top.
pub fn cavity_problem() -> PdeProblem {
    let zero = constant(0.0);
    let psi = || BoundaryCondition::dirichlet(zero.clone());
    let conditions = BTreeMap::from([
        (
            BoundarySide::Bottom,
            vec![
                psi(),
                BoundaryCondition::tangential_y_derivative(zero.clone()),
            ],
        ),
        (
            BoundarySide::Top,
            vec![
                psi(),
                BoundaryCondition::tangential_y_derivative(constant(1.0)),
            ],
        ),
        (
            BoundarySide::Left,
            vec![psi(), BoundaryCondition::x_derivative(zero.clone())],
        ),
        (
            BoundarySide::Right,
            vec![psi(), BoundaryCondition::x_derivative(zero.clone())],
        ),
    ]);
    PdeProblem::new(biharmonic(), zero, conditions).expect("cavity conditions cover every wall")
}

/// Manufactured problem `lap^2 u = f` with Dirichlet data from the exact
/// solution; `clamped` adds the exact normal derivative on every wall.
///
/// The stored source is `-f`, so that `L(u) + source = 0` holds at the exact solution.
pub fn mms_problem(spec: MmsSpec, clamped: bool) -> PdeProblem {
    let source = Arc::new(move |p: Point2| -spec.manufactured_rhs(p));
    let value = Arc::new(move |p: Point2| spec.exact(p));
    let conditions = BoundarySide::ALL
        .into_iter()
        .map(|side| {
            let mut list = vec![BoundaryCondition::dirichlet(value.clone())];
            if clamped {
                let (nx, ny) = side.normal();
                let dn = Arc::new(move |p: Point2| {
                    nx * spec.exact_derivative(p, DerivOrder::DX)
                        + ny * spec.exact_derivative(p, DerivOrder::DY)
                });
                list.push(BoundaryCondition::normal_derivative(side, dn));
            }
            (side, list)
        })
        .collect();
    PdeProblem::new(biharmonic(), source, conditions)
        .expect("manufactured conditions cover every wall")
}

/// Pointwise absolute error statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorStats {
    pub mean_abs: f64,
    pub max_abs: f64,
    pub rms: f64,
}

/// Uniform `n x n` grid including the walls.
pub fn evaluation_grid(n: usize) -> Result<CollocationSet> {
    let nodes = uniform_nodes(n)?;
    tensor_grid(&nodes, &nodes)
}

/// `|u - exact|` statistics over every point (interior and boundary) of `grid`.
pub fn error_stats(
    solution: &Solution,
    exact: impl Fn(Point2) -> f64 + Sync + Send,
    grid: &CollocationSet,
    execution: Execution,
) -> Result<ErrorStats> {
    if grid.is_empty() {
        return Err(Error::invalid("evaluation grid is empty"));
    }
    let points: Vec<Point2> = grid.points().collect();
    let errors = execution.map(&points, |&p| {
        (solution.evaluate(p, DerivOrder::VALUE) - exact(p)).abs()
    });
    let n = errors.len() as f64;
    Ok(ErrorStats {
        mean_abs: errors.iter().sum::<f64>() / n,
        max_abs: errors.iter().copied().fold(0.0, f64::max),
        rms: (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
    })
}

/// Named benchmark configurations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Preset {
    #[default]
    Cavity,
    MmsK10,
    MmsK20,
    MmsCustom,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Cavity,
        Preset::MmsK10,
        Preset::MmsK20,
        Preset::MmsCustom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Cavity => "cavity",
            Preset::MmsK10 => "mms-k10",
            Preset::MmsK20 => "mms-k20",
            Preset::MmsCustom => "mms-custom",
        }
    }

    /// Wavenumbers of a manufactured preset. `custom` supplies them for `mms-custom`.
    pub fn mms_spec(self, custom: MmsSpec) -> Option<MmsSpec> {
        match self {
            Preset::Cavity => None,
            Preset::MmsK10 => Some(MmsSpec::K10),
            Preset::MmsK20 => Some(MmsSpec::K20),
            Preset::MmsCustom => Some(custom),
        }
    }

    pub fn problem(self, custom: MmsSpec, clamped: bool) -> PdeProblem {
        match self.mms_spec(custom) {
            None => cavity_problem(),
            Some(spec) => mms_problem(spec, clamped),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown preset `{s}` (expected cavity, mms-k10, mms-k20 or mms-custom)"
                ))
            })
    }
}
