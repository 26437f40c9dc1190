//! Dense assembly of the over-determined collocation system `A c = b`.

use std::io::{self, Read, Write};

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::execution::Execution;
use crate::geometry::{BoundarySide, CollocationSet, Point2};
use crate::operators::PdeProblem;
use crate::rbf::{DerivOrder, RbfBasis};

/// Magic bytes opening a matrix dump.
pub const DUMP_MAGIC: &[u8; 4] = b"RPLM";

/// Where a row of the system came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowLabel {
    Interior,
    /// `condition` indexes the side's condition list.
    Boundary {
        side: BoundarySide,
        condition: usize,
    },
}

impl std::fmt::Display for RowLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowLabel::Interior => f.write_str("interior"),
            RowLabel::Boundary { side, condition } => {
                write!(f, "{} condition {condition}", side.name())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AssemblyOptions {
    /// Multiply interior rows (and their right-hand side) by `sigma_min^4`.
    pub scale_interior: bool,
    pub execution: Execution,
}

#[derive(Clone, Debug)]
pub struct CollocationSystem {
    matrix: Array2<f64>,
    rhs: Array1<f64>,
    labels: Vec<RowLabel>,
    points: Vec<Point2>,
}

struct RowSpec<'a> {
    point: Point2,
    terms: &'a [(f64, DerivOrder)],
    scale: f64,
}

/// Builds `A` and `b`: interior rows first in input order, then boundary rows
/// grouped by point with each side's conditions in list order.
pub fn assemble(
    problem: &PdeProblem,
    points: &CollocationSet,
    basis: &RbfBasis,
    options: AssemblyOptions,
) -> Result<CollocationSystem> {
    let cols = basis.len();
    let rows = points.interior.len()
        + points
            .boundary
            .iter()
            .map(|&(_, side)| problem.conditions(side).len())
            .sum::<usize>();
    if rows <= cols {
        return Err(Error::Underdetermined { rows, cols });
    }

    let interior_scale = if options.scale_interior {
        let w = basis
            .units()
            .iter()
            .map(|u| u.width())
            .fold(f64::INFINITY, f64::min);
        w.powi(4)
    } else {
        1.0
    };

    let mut specs = Vec::with_capacity(rows);
    let mut rhs = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    let interior_terms = problem.interior_operator().terms();
    for &p in &points.interior {
        specs.push(RowSpec {
            point: p,
            terms: interior_terms,
            scale: interior_scale,
        });
        rhs.push(-problem.source(p) * interior_scale);
        labels.push(RowLabel::Interior);
    }
    for &(p, side) in &points.boundary {
        for (k, bc) in problem.conditions(side).iter().enumerate() {
            specs.push(RowSpec {
                point: p,
                terms: bc.operator().terms(),
                scale: 1.0,
            });
            rhs.push(bc.target(p));
            labels.push(RowLabel::Boundary { side, condition: k });
        }
    }

    let mut data = vec![0.0; rows * cols];
    options.execution.fill_rows(&mut data, cols, |i, row| {
        let spec = &specs[i];
        basis.fill_row(spec.point, spec.terms, row);
        if spec.scale != 1.0 {
            row.iter_mut().for_each(|v| *v *= spec.scale);
        }
    });

    let bad_row = data
        .chunks(cols)
        .zip(&rhs)
        .position(|(row, b)| !b.is_finite() || row.iter().any(|v| !v.is_finite()));
    if let Some(row) = bad_row {
        return Err(Error::AssemblyFailure {
            row,
            label: format!(
                "{} at ({}, {})",
                labels[row], specs[row].point.x, specs[row].point.y
            ),
        });
    }

    let matrix =
        Array2::from_shape_vec((rows, cols), data).expect("row-major buffer matches shape");
    Ok(CollocationSystem {
        matrix,
        rhs: Array1::from(rhs),
        labels,
        points: specs.iter().map(|s| s.point).collect(),
    })
}

impl CollocationSystem {
    /// Wraps an existing matrix and right-hand side; every row is labelled interior.
    pub fn from_parts(matrix: Array2<f64>, rhs: Array1<f64>) -> Result<Self> {
        if matrix.nrows() != rhs.len() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: rhs.len(),
            });
        }
        let rows = matrix.nrows();
        Ok(CollocationSystem {
            matrix,
            rhs,
            labels: vec![RowLabel::Interior; rows],
            points: vec![Point2::new(f64::NAN, f64::NAN); rows],
        })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &Array1<f64> {
        &self.rhs
    }

    pub fn labels(&self) -> &[RowLabel] {
        &self.labels
    }

    /// Collocation point of each row.
    pub fn row_points(&self) -> &[Point2] {
        &self.points
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// `A c - b`.
    pub fn residual_vector(&self, coefficients: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if coefficients.len() != self.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                found: coefficients.len(),
            });
        }
        Ok(self.matrix.dot(&coefficients) - &self.rhs)
    }

    /// Writes `RPLM`, `u32` rows, `u32` cols, the row-major matrix and then
    /// the right-hand side, all little-endian `f64`.
    pub fn write_dump(&self, mut w: impl Write) -> io::Result<()> {
        let dim = |n: usize| {
            u32::try_from(n)
                .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "dimension exceeds u32"))
        };
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&dim(self.nrows())?.to_le_bytes())?;
        w.write_all(&dim(self.ncols())?.to_le_bytes())?;
        for v in self.matrix.iter().chain(self.rhs.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    }
}

/// Reads a dump written by [`CollocationSystem::write_dump`].
pub fn read_dump(mut r: impl Read) -> io::Result<(Array2<f64>, Array1<f64>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "not an RPLM matrix dump",
        ));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let rows = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u32::from_le_bytes(word) as usize;
    let mut read_f64s = |n: usize| -> io::Result<Vec<f64>> {
        let mut buf = vec![0u8; n * 8];
        r.read_exact(&mut buf)?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    };
    let matrix = Array2::from_shape_vec((rows, cols), read_f64s(rows * cols)?)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    let rhs = Array1::from(read_f64s(rows)?);
    Ok((matrix, rhs))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::geometry::{chebyshev_nodes, tensor_grid};
    use crate::operators::{biharmonic, constant, BoundaryCondition};
    use crate::pai::{place_centers_pai, PaiConfig};
    use crate::rbf::RbfUnit;
    use approx::assert_relative_eq;
    use ndarray::Array1;

    fn dirichlet_zero_problem() -> PdeProblem {
        let conditions = BoundarySide::ALL
            .into_iter()
            .map(|s| (s, vec![BoundaryCondition::dirichlet(constant(0.0))]))
            .collect::<BTreeMap<_, _>>();
        PdeProblem::new(biharmonic(), constant(0.0), conditions).unwrap()
    }

    fn clamped_problem() -> PdeProblem {
        let conditions = BoundarySide::ALL
            .into_iter()
            .map(|s| {
                (
                    s,
                    vec![
                        BoundaryCondition::dirichlet(std::sync::Arc::new(|p: Point2| {
                            p.x + 2.0 * p.y
                        })),
                        BoundaryCondition::normal_derivative(s, constant(0.5)),
                    ],
                )
            })
            .collect::<BTreeMap<_, _>>();
        PdeProblem::new(
            biharmonic(),
            std::sync::Arc::new(|p: Point2| p.x * p.y),
            conditions,
        )
        .unwrap()
    }

    fn small_basis(n: usize, seed: u64) -> RbfBasis {
        place_centers_pai(&PaiConfig {
            n_units: n,
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn homogeneous_problem_has_zero_rhs() {
        let points = CollocationSet {
            interior: vec![Point2::new(0.5, 0.5)],
            boundary: vec![
                (Point2::new(0.5, 0.0), BoundarySide::Bottom),
                (Point2::new(0.5, 1.0), BoundarySide::Top),
                (Point2::new(0.0, 0.5), BoundarySide::Left),
                (Point2::new(1.0, 0.5), BoundarySide::Right),
            ],
        };
        let basis = RbfBasis::new(vec![RbfUnit::new(Point2::new(0.4, 0.6), 0.5).unwrap()]).unwrap();
        let sys = assemble(
            &dirichlet_zero_problem(),
            &points,
            &basis,
            Default::default(),
        )
        .unwrap();
        assert_eq!(sys.nrows(), 5);
        assert_eq!(sys.rhs().to_vec(), vec![0.0; 5]);
        assert_eq!(sys.labels()[0], RowLabel::Interior);
        assert_eq!(
            sys.labels()[4],
            RowLabel::Boundary {
                side: BoundarySide::Right,
                condition: 0
            }
        );
    }

    #[test]
    fn row_counts_and_order() {
        let nodes = chebyshev_nodes(8).unwrap();
        let points = tensor_grid(&nodes, &nodes).unwrap();
        let sys = assemble(
            &clamped_problem(),
            &points,
            &small_basis(20, 1),
            Default::default(),
        )
        .unwrap();
        assert_eq!(sys.nrows(), 36 + 2 * 28);
        assert!(sys.labels()[..36].iter().all(|l| *l == RowLabel::Interior));
        // the first boundary point contributes its two conditions back to back
        assert_eq!(
            sys.labels()[36],
            RowLabel::Boundary {
                side: BoundarySide::Bottom,
                condition: 0
            }
        );
        assert_eq!(
            sys.labels()[37],
            RowLabel::Boundary {
                side: BoundarySide::Bottom,
                condition: 1
            }
        );
        assert_eq!(sys.row_points()[36], sys.row_points()[37]);
    }

    #[test]
    fn entries_match_row_builder() {
        let nodes = chebyshev_nodes(9).unwrap();
        let points = tensor_grid(&nodes, &nodes).unwrap();
        let problem = clamped_problem();
        let basis = small_basis(30, 5);
        let sys = assemble(&problem, &points, &basis, Default::default()).unwrap();
        for i in (0..sys.nrows()).step_by(7) {
            let p = sys.row_points()[i];
            let terms = match sys.labels()[i] {
                RowLabel::Interior => problem.interior_operator().terms(),
                RowLabel::Boundary { side, condition } => {
                    problem.conditions(side)[condition].operator().terms()
                }
            };
            let expected = basis.eval_row(p, terms);
            for j in 0..sys.ncols() {
                assert_relative_eq!(sys.matrix()[[i, j]], expected[j], max_relative = 1e-12);
            }
            let b = match sys.labels()[i] {
                RowLabel::Interior => -problem.source(p),
                RowLabel::Boundary { side, condition } => {
                    problem.conditions(side)[condition].target(p)
                }
            };
            assert_eq!(sys.rhs()[i], b);
        }
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let nodes = chebyshev_nodes(12).unwrap();
        let points = tensor_grid(&nodes, &nodes).unwrap();
        let basis = small_basis(50, 2);
        let seq = AssemblyOptions {
            execution: Execution::Sequential,
            ..Default::default()
        };
        let par = AssemblyOptions {
            execution: Execution::Parallel,
            ..Default::default()
        };
        let a = assemble(&clamped_problem(), &points, &basis, seq).unwrap();
        let b = assemble(&clamped_problem(), &points, &basis, par).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(a.rhs(), b.rhs());
    }

    #[test]
    fn interior_scaling() {
        let nodes = chebyshev_nodes(8).unwrap();
        let points = tensor_grid(&nodes, &nodes).unwrap();
        let basis = small_basis(20, 3);
        let smin = basis
            .units()
            .iter()
            .map(|u| u.width())
            .fold(f64::INFINITY, f64::min);
        let plain = assemble(&clamped_problem(), &points, &basis, Default::default()).unwrap();
        let opts = AssemblyOptions {
            scale_interior: true,
            ..Default::default()
        };
        let scaled = assemble(&clamped_problem(), &points, &basis, opts).unwrap();
        assert_relative_eq!(
            scaled.matrix()[[3, 4]],
            plain.matrix()[[3, 4]] * smin.powi(4),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            scaled.rhs()[3],
            plain.rhs()[3] * smin.powi(4),
            max_relative = 1e-15
        );
        let last = plain.nrows() - 1;
        assert_eq!(scaled.matrix()[[last, 0]], plain.matrix()[[last, 0]]);
    }

    #[test]
    fn underdetermined_rejected() {
        let points = tensor_grid(&[0.0, 0.5, 1.0], &[0.0, 0.5, 1.0]).unwrap();
        let err = assemble(
            &dirichlet_zero_problem(),
            &points,
            &small_basis(9, 0),
            Default::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Underdetermined { rows: 9, cols: 9 }));
    }

    #[test]
    fn non_finite_source_names_row() {
        let conditions = BoundarySide::ALL
            .into_iter()
            .map(|s| (s, vec![BoundaryCondition::dirichlet(constant(0.0))]))
            .collect::<BTreeMap<_, _>>();
        let problem = PdeProblem::new(
            biharmonic(),
            std::sync::Arc::new(|p: Point2| {
                if p.x == 0.5 && p.y == 0.5 {
                    f64::NAN
                } else {
                    0.0
                }
            }),
            conditions,
        )
        .unwrap();
        let nodes = [0.0, 0.25, 0.5, 0.75, 1.0];
        let points = tensor_grid(&nodes, &nodes).unwrap();
        let err = assemble(&problem, &points, &small_basis(3, 0), Default::default()).unwrap_err();
        match err {
            Error::AssemblyFailure { row, .. } => assert_eq!(row, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn residual_against_naive_loop() {
        let nodes = chebyshev_nodes(7).unwrap();
        let points = tensor_grid(&nodes, &nodes).unwrap();
        let sys = assemble(
            &clamped_problem(),
            &points,
            &small_basis(15, 8),
            Default::default(),
        )
        .unwrap();
        let c: Array1<f64> = (0..15).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = sys.residual_vector(c.view()).unwrap();
        for i in 0..sys.nrows() {
            let mut acc = 0.0;
            for j in 0..sys.ncols() {
                acc += sys.matrix()[[i, j]] * c[j];
            }
            assert_relative_eq!(
                r[i],
                acc - sys.rhs()[i],
                max_relative = 1e-12,
                epsilon = 1e-9
            );
        }
        assert!(sys.residual_vector(Array1::zeros(14).view()).is_err());

        let zero = assemble(
            &dirichlet_zero_problem(),
            &points,
            &small_basis(15, 8),
            Default::default(),
        )
        .unwrap();
        assert!(zero
            .residual_vector(Array1::zeros(15).view())
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn dump_round_trip() {
        let nodes = chebyshev_nodes(6).unwrap();
        let points = tensor_grid(&nodes, &nodes).unwrap();
        let sys = assemble(
            &clamped_problem(),
            &points,
            &small_basis(10, 4),
            Default::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        sys.write_dump(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"RPLM");
        assert_eq!(
            u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize,
            sys.nrows()
        );
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 10);
        assert_eq!(buf.len(), 12 + 8 * (sys.nrows() * 10 + sys.nrows()));
        let (a, b) = read_dump(buf.as_slice()).unwrap();
        assert_eq!(&a, sys.matrix());
        assert_eq!(&b, sys.rhs());
        assert!(read_dump(&b"XXXX\0\0\0\0"[..]).is_err());
    }
}
