//! Gaussian radial basis functions and their exact partial derivatives.
//!
//! The 2-D Gaussian `exp(-|p - c|^2 / (2 sigma^2))` factors into two 1-D
//! Gaussians, so `d^(ox+oy) / dx^ox dy^oy` is a product of 1-D derivatives.
//! With `a = 1 / (sigma sqrt 2)` and `s = a t`, the n-th 1-D derivative is
//! `(-a)^n H_n(s) exp(-s^2)` where `H_n` is the physicists' Hermite polynomial.

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Units whose center is more than this many widths away evaluate to exactly zero.
pub const CUTOFF_WIDTHS: f64 = 12.0;

/// Multi-index of a partial derivative, total order at most [`DerivOrder::MAX_TOTAL`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivOrder {
    ox: u8,
    oy: u8,
}

impl DerivOrder {
    pub const MAX_TOTAL: u8 = 4;
    pub const VALUE: DerivOrder = DerivOrder { ox: 0, oy: 0 };
    pub const DX: DerivOrder = DerivOrder { ox: 1, oy: 0 };
    pub const DY: DerivOrder = DerivOrder { ox: 0, oy: 1 };

    pub fn new(ox: u8, oy: u8) -> Result<Self> {
        if u16::from(ox) + u16::from(oy) > u16::from(Self::MAX_TOTAL) {
            return Err(Error::UnsupportedOrder { ox, oy });
        }
        Ok(DerivOrder { ox, oy })
    }

    /// For compile-time constants known to be in range.
    pub(crate) const fn new_const(ox: u8, oy: u8) -> Self {
        assert!(ox + oy <= Self::MAX_TOTAL);
        DerivOrder { ox, oy }
    }

    pub const fn ox(self) -> u8 {
        self.ox
    }

    pub const fn oy(self) -> u8 {
        self.oy
    }

    pub const fn total(self) -> u8 {
        self.ox + self.oy
    }
}

/// One Gaussian: its center and width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RbfUnit {
    center: Point2,
    width: f64,
}

impl RbfUnit {
    pub fn new(center: Point2, width: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::invalid("RBF center must be finite"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid(format!(
                "RBF width must be positive and finite, got {width}"
            )));
        }
        Ok(RbfUnit { center, width })
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    #[inline]
    fn beyond_cutoff(&self, dx: f64, dy: f64) -> bool {
        let reach = CUTOFF_WIDTHS * self.width;
        dx * dx + dy * dy > reach * reach
    }

    pub fn eval(&self, p: Point2) -> f64 {
        let (dx, dy) = (p.x - self.center.x, p.y - self.center.y);
        if self.beyond_cutoff(dx, dy) {
            return 0.0;
        }
        (-(dx * dx + dy * dy) / (2.0 * self.width * self.width)).exp()
    }

    pub fn eval_deriv(&self, p: Point2, d: DerivOrder) -> f64 {
        let (dx, dy) = (p.x - self.center.x, p.y - self.center.y);
        if self.beyond_cutoff(dx, dy) {
            return 0.0;
        }
        axis_derivative(dx, self.width, d.ox) * axis_derivative(dy, self.width, d.oy)
    }

    /// All 1-D derivative factors along x and y, orders 0 through 4.
    #[inline]
    fn factors(&self, p: Point2) -> Option<([f64; 5], [f64; 5])> {
        let (dx, dy) = (p.x - self.center.x, p.y - self.center.y);
        if self.beyond_cutoff(dx, dy) {
            return None;
        }
        Some((axis_factors(dx, self.width), axis_factors(dy, self.width)))
    }
}

#[inline]
fn hermite(n: u8, s: f64) -> f64 {
    let s2 = s * s;
    match n {
        0 => 1.0,
        1 => 2.0 * s,
        2 => 4.0 * s2 - 2.0,
        3 => (8.0 * s2 - 12.0) * s,
        4 => (16.0 * s2 - 48.0) * s2 + 12.0,
        _ => unreachable!("derivative order above 4"),
    }
}

/// n-th derivative of `exp(-t^2 / (2 sigma^2))` with respect to `t`.
#[inline]
fn axis_derivative(t: f64, sigma: f64, n: u8) -> f64 {
    let a = 1.0 / (sigma * std::f64::consts::SQRT_2);
    let s = t * a;
    (-a).powi(i32::from(n)) * hermite(n, s) * (-s * s).exp()
}

#[inline]
fn axis_factors(t: f64, sigma: f64) -> [f64; 5] {
    let a = 1.0 / (sigma * std::f64::consts::SQRT_2);
    let s = t * a;
    let g = (-s * s).exp();
    let mut out = [0.0; 5];
    let mut scale = g;
    for (n, slot) in out.iter_mut().enumerate() {
        *slot = scale * hermite(n as u8, s);
        scale *= -a;
    }
    out
}

/// The trial space: an ordered, non-empty list of Gaussians.
///
/// Index `i` of a coefficient vector always refers to `units()[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RbfBasis {
    units: Vec<RbfUnit>,
}

impl RbfBasis {
    pub fn new(units: Vec<RbfUnit>) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::invalid("RBF basis must contain at least one unit"));
        }
        Ok(RbfBasis { units })
    }

    pub fn units(&self) -> &[RbfUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Writes `sum_t coeff_t * D^{d_t} phi_i(p)` for every unit `i` into `out`.
    pub fn fill_row(&self, p: Point2, terms: &[(f64, DerivOrder)], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.units.len());
        for (unit, slot) in self.units.iter().zip(out.iter_mut()) {
            *slot = match unit.factors(p) {
                Some((fx, fy)) => terms
                    .iter()
                    .map(|&(c, d)| c * fx[d.ox as usize] * fy[d.oy as usize])
                    .sum(),
                None => 0.0,
            };
        }
    }

    /// One collocation row: a linear operator given as `(coeff, order)` terms, applied to every unit at `p`.
    pub fn eval_row(&self, p: Point2, terms: &[(f64, DerivOrder)]) -> Vec<f64> {
        let mut row = vec![0.0; self.units.len()];
        self.fill_row(p, terms, &mut row);
        row
    }

    /// Sum of several derivative orders of `sum_i c_i phi_i` at `p`, one value per order.
    pub(crate) fn combine(
        &self,
        coefficients: &[f64],
        p: Point2,
        orders: &[DerivOrder],
        out: &mut [f64],
    ) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (unit, &c) in self.units.iter().zip(coefficients) {
            if let Some((fx, fy)) = unit.factors(p) {
                for (slot, d) in out.iter_mut().zip(orders) {
                    *slot += c * fx[d.ox as usize] * fy[d.oy as usize];
                }
            }
        }
    }
}
