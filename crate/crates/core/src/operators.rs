//! Linear differential operators, boundary conditions and PDE problems.
//!
//! A problem reads `L(u) + f = 0` in the interior and `B(u) = g` on each
//! wall. The residuals are `L(u) + f` and `B(u) - g`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{BoundarySide, Point2};
use crate::rbf::DerivOrder;

/// Highest total derivative order allowed in a boundary operator.
pub const MAX_BOUNDARY_ORDER: u8 = 2;

/// A shareable scalar field over the plane.
pub type ScalarField = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;

pub fn constant(value: f64) -> ScalarField {
    Arc::new(move |_| value)
}

/// Constant-coefficient linear operator `sum_k a_k D^{d_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearPdeOperator {
    terms: Vec<(f64, DerivOrder)>,
}

impl LinearPdeOperator {
    /// Builds an operator, merging terms that share a derivative order.
    pub fn new(terms: impl IntoIterator<Item = (f64, DerivOrder)>) -> Result<Self> {
        let mut merged: Vec<(f64, DerivOrder)> = Vec::new();
        for (c, d) in terms {
            if !c.is_finite() {
                return Err(Error::invalid("operator coefficients must be finite"));
            }
            match merged.iter_mut().find(|(_, e)| *e == d) {
                Some(slot) => slot.0 += c,
                None => merged.push((c, d)),
            }
        }
        if merged.is_empty() {
            return Err(Error::invalid("operator needs at least one term"));
        }
        Ok(LinearPdeOperator { terms: merged })
    }

    pub fn terms(&self) -> &[(f64, DerivOrder)] {
        &self.terms
    }

    pub fn max_order(&self) -> u8 {
        self.terms.iter().map(|(_, d)| d.total()).max().unwrap_or(0)
    }

    /// Applies the operator to any field whose partial derivatives are known.
    pub fn apply(&self, derivative: impl Fn(Point2, DerivOrder) -> f64, p: Point2) -> f64 {
        self.terms.iter().map(|&(c, d)| c * derivative(p, d)).sum()
    }
}

/// `dx^4 + 2 dx^2 dy^2 + dy^4`.
pub fn biharmonic() -> LinearPdeOperator {
    LinearPdeOperator {
        terms: vec![
            (1.0, DerivOrder::new_const(4, 0)),
            (2.0, DerivOrder::new_const(2, 2)),
            (1.0, DerivOrder::new_const(0, 4)),
        ],
    }
}

/// A boundary operator together with its target data `g`.
#[derive(Clone)]
pub struct BoundaryCondition {
    operator: LinearPdeOperator,
    target: ScalarField,
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryCondition")
            .field("operator", &self.operator)
            .finish_non_exhaustive()
    }
}

impl BoundaryCondition {
    pub fn new(operator: LinearPdeOperator, target: ScalarField) -> Result<Self> {
        if operator.max_order() > MAX_BOUNDARY_ORDER {
            return Err(Error::invalid(format!(
                "boundary operators are limited to order {MAX_BOUNDARY_ORDER}, got {}",
                operator.max_order()
            )));
        }
        Ok(BoundaryCondition { operator, target })
    }

    fn single(coeff: f64, order: DerivOrder, target: ScalarField) -> Self {
        BoundaryCondition {
            operator: LinearPdeOperator {
                terms: vec![(coeff, order)],
            },
            target,
        }
    }

    /// `u = g`.
    pub fn dirichlet(target: ScalarField) -> Self {
        Self::single(1.0, DerivOrder::VALUE, target)
    }

    /// `du/dn = g` along the outward normal of `side`.
    pub fn normal_derivative(side: BoundarySide, target: ScalarField) -> Self {
        let (nx, ny) = side.normal();
        if nx != 0.0 {
            Self::single(nx, DerivOrder::DX, target)
        } else {
            Self::single(ny, DerivOrder::DY, target)
        }
    }

    /// `du/dy = g`, on any wall.
    pub fn tangential_y_derivative(target: ScalarField) -> Self {
        Self::single(1.0, DerivOrder::DY, target)
    }

    /// `du/dx = g`, on any wall.
    pub fn x_derivative(target: ScalarField) -> Self {
        Self::single(1.0, DerivOrder::DX, target)
    }

    pub fn operator(&self) -> &LinearPdeOperator {
        &self.operator
    }

    pub fn target(&self, p: Point2) -> f64 {
        (self.target)(p)
    }
}

/// Interior operator, source, and the conditions imposed on each wall.
#[derive(Clone)]
pub struct PdeProblem {
    interior_operator: LinearPdeOperator,
    source: ScalarField,
    conditions: BTreeMap<BoundarySide, Vec<BoundaryCondition>>,
}

impl fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeProblem")
            .field("interior_operator", &self.interior_operator)
            .field("conditions", &self.conditions)
            .finish_non_exhaustive()
    }
}

impl PdeProblem {
    pub fn new(
        interior_operator: LinearPdeOperator,
        source: ScalarField,
        conditions: BTreeMap<BoundarySide, Vec<BoundaryCondition>>,
    ) -> Result<Self> {
        for side in BoundarySide::ALL {
            if conditions.get(&side).is_none_or(|c| c.is_empty()) {
                return Err(Error::invalid(format!(
                    "no boundary condition on the {} wall",
                    side.name()
                )));
            }
        }
        Ok(PdeProblem {
            interior_operator,
            source,
            conditions,
        })
    }

    pub fn interior_operator(&self) -> &LinearPdeOperator {
        &self.interior_operator
    }

    /// The `f` in `L(u) + f = 0`.
    pub fn source(&self, p: Point2) -> f64 {
        (self.source)(p)
    }

    pub fn conditions(&self, side: BoundarySide) -> &[BoundaryCondition] {
        self.conditions.get(&side).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `L(u)(p) + f(p)` for a field given by its derivatives.
    pub fn interior_residual(
        &self,
        derivative: impl Fn(Point2, DerivOrder) -> f64,
        p: Point2,
    ) -> f64 {
        self.interior_operator.apply(derivative, p) + self.source(p)
    }

    /// `B(u)(p) - g(p)` for every condition on `side`.
    pub fn boundary_residuals(
        &self,
        derivative: impl Fn(Point2, DerivOrder) -> f64,
        p: Point2,
        side: BoundarySide,
    ) -> Vec<f64> {
        self.conditions(side)
            .iter()
            .map(|bc| bc.operator.apply(&derivative, p) - bc.target(p))
            .collect()
    }
}
