//! Evaluation of a solved expansion and the flow quantities derived from a
//! streamfunction (`u = psi_y`, `v = -psi_x`).

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::execution::Execution;
use crate::geometry::{uniform_nodes, Point2};
use crate::rbf::{DerivOrder, RbfBasis};

/// Coefficients bound to their basis: `u(p) = sum_i c_i phi_i(p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    basis: RbfBasis,
    coefficients: Vec<f64>,
}

impl Solution {
    pub fn new(basis: RbfBasis, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: coefficients.len(),
            });
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("solution coefficients must be finite"));
        }
        Ok(Solution {
            basis,
            coefficients,
        })
    }

    pub fn basis(&self) -> &RbfBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn evaluate(&self, p: Point2, d: DerivOrder) -> f64 {
        let mut out = [0.0];
        self.basis.combine(&self.coefficients, p, &[d], &mut out);
        out[0]
    }

    /// Several derivatives at one point in a single pass over the basis.
    pub fn evaluate_many<const K: usize>(&self, p: Point2, orders: [DerivOrder; K]) -> [f64; K] {
        let mut out = [0.0; K];
        self.basis.combine(&self.coefficients, p, &orders, &mut out);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub point: Point2,
    pub psi: f64,
    pub u: f64,
    pub v: f64,
    pub speed: f64,
}

impl FieldSample {
    pub fn at(solution: &Solution, p: Point2) -> Self {
        let [psi, psi_x, psi_y] =
            solution.evaluate_many(p, [DerivOrder::VALUE, DerivOrder::DX, DerivOrder::DY]);
        let (u, v) = (psi_y, -psi_x);
        FieldSample {
            point: p,
            psi,
            u,
            v,
            speed: u.hypot(v),
        }
    }
}

/// A sampled line: `(coordinate, value)` pairs.
pub type Profile = Vec<(f64, f64)>;

/// `u(0.5, y)` and `v(x, 0.5)` on `n_samples` evenly spaced points, endpoints included.
pub fn centerline_profiles(solution: &Solution, n_samples: usize) -> Result<(Profile, Profile)> {
    let t = uniform_nodes(n_samples)?;
    let u = t
        .iter()
        .map(|&y| (y, solution.evaluate(Point2::new(0.5, y), DerivOrder::DY)))
        .collect();
    let v = t
        .iter()
        .map(|&x| (x, -solution.evaluate(Point2::new(x, 0.5), DerivOrder::DX)))
        .collect();
    Ok((u, v))
}

/// Uniform `nx x ny` grid of row-major samples (`y` outer).
fn grid_points(nx: usize, ny: usize) -> Result<Vec<Point2>> {
    let xs = uniform_nodes(nx)?;
    let ys = uniform_nodes(ny)?;
    Ok(ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| Point2::new(x, y)))
        .collect())
}

pub fn field_grid(
    solution: &Solution,
    nx: usize,
    ny: usize,
    execution: Execution,
) -> Result<Vec<FieldSample>> {
    let points = grid_points(nx, ny)?;
    Ok(execution.map(&points, |&p| FieldSample::at(solution, p)))
}

/// `(x, y, |u - exact|)` on a uniform `nx x ny` grid.
pub fn error_map(
    solution: &Solution,
    exact: impl Fn(Point2) -> f64 + Sync + Send,
    nx: usize,
    ny: usize,
    execution: Execution,
) -> Result<Vec<(f64, f64, f64)>> {
    let points = grid_points(nx, ny)?;
    Ok(execution.map(&points, |&p| {
        (
            p.x,
            p.y,
            (solution.evaluate(p, DerivOrder::VALUE) - exact(p)).abs(),
        )
    }))
}

pub fn write_profile_csv(mut w: impl Write, profile: &[(f64, f64)]) -> io::Result<()> {
    writeln!(w, "coord,value")?;
    for (c, v) in profile {
        writeln!(w, "{c},{v}")?;
    }
    w.flush()
}

pub fn write_field_csv(mut w: impl Write, samples: &[FieldSample]) -> io::Result<()> {
    writeln!(w, "x,y,psi,u,v,speed")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.point.x, s.point.y, s.psi, s.u, s.v, s.speed
        )?;
    }
    w.flush()
}

pub fn write_error_map_csv(mut w: impl Write, map: &[(f64, f64, f64)]) -> io::Result<()> {
    writeln!(w, "x,y,abs_error")?;
    for (x, y, e) in map {
        writeln!(w, "{x},{y},{e}")?;
    }
    w.flush()
}
