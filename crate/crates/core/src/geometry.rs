//! Collocation points on the unit square.

use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest nearest-wall distance attainable in the unit square (at its center).
pub const WALL_DISTANCE_MAX: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    fn in_closed_square(self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }

    fn in_open_square(self) -> bool {
        self.x > 0.0 && self.x < 1.0 && self.y > 0.0 && self.y < 1.0
    }
}

/// One wall of the unit square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundarySide {
    Bottom,
    Top,
    Left,
    Right,
}

impl BoundarySide {
    pub const ALL: [BoundarySide; 4] = [
        BoundarySide::Bottom,
        BoundarySide::Top,
        BoundarySide::Left,
        BoundarySide::Right,
    ];

    /// Outward unit normal.
    pub fn normal(self) -> (f64, f64) {
        match self {
            BoundarySide::Bottom => (0.0, -1.0),
            BoundarySide::Top => (0.0, 1.0),
            BoundarySide::Left => (-1.0, 0.0),
            BoundarySide::Right => (1.0, 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundarySide::Bottom => "bottom",
            BoundarySide::Top => "top",
            BoundarySide::Left => "left",
            BoundarySide::Right => "right",
        }
    }

    /// Whether `p` lies on this wall.
    pub fn contains(self, p: Point2) -> bool {
        let on_span = |t: f64| (0.0..=1.0).contains(&t);
        match self {
            BoundarySide::Bottom => p.y == 0.0 && on_span(p.x),
            BoundarySide::Top => p.y == 1.0 && on_span(p.x),
            BoundarySide::Left => p.x == 0.0 && on_span(p.y),
            BoundarySide::Right => p.x == 1.0 && on_span(p.y),
        }
    }

    /// Side tag for a point on the rim. Corners go to the horizontal walls.
    fn classify(p: Point2) -> Option<BoundarySide> {
        if p.y == 0.0 {
            Some(BoundarySide::Bottom)
        } else if p.y == 1.0 {
            Some(BoundarySide::Top)
        } else if p.x == 0.0 {
            Some(BoundarySide::Left)
        } else if p.x == 1.0 {
            Some(BoundarySide::Right)
        } else {
            None
        }
    }
}

/// Interior and boundary collocation points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CollocationSet {
    pub interior: Vec<Point2>,
    pub boundary: Vec<(Point2, BoundarySide)>,
}

impl CollocationSet {
    pub fn len(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every point, interior first.
    pub fn points(&self) -> impl Iterator<Item = Point2> + '_ {
        self.interior
            .iter()
            .copied()
            .chain(self.boundary.iter().map(|&(p, _)| p))
    }

    /// Checks placement and uniqueness of every point.
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.interior.iter().enumerate() {
            if !p.is_finite() || !p.in_open_square() {
                return Err(Error::invalid(format!(
                    "interior point {i} at ({}, {}) is not strictly inside the unit square",
                    p.x, p.y
                )));
            }
        }
        for (i, &(p, side)) in self.boundary.iter().enumerate() {
            if !side.contains(p) {
                return Err(Error::invalid(format!(
                    "boundary point {i} at ({}, {}) is not on the {} wall",
                    p.x,
                    p.y,
                    side.name()
                )));
            }
        }
        if has_duplicates(self.interior.iter().copied()) {
            return Err(Error::invalid("duplicate interior point"));
        }
        if has_duplicates(self.boundary.iter().map(|&(p, _)| p)) {
            return Err(Error::invalid("duplicate boundary point"));
        }
        Ok(())
    }
}

fn has_duplicates(points: impl Iterator<Item = Point2>) -> bool {
    let mut keys: Vec<(u64, u64)> = points.map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
    let n = keys.len();
    keys.sort_unstable();
    keys.dedup();
    keys.len() != n
}

/// Chebyshev–Gauss–Lobatto nodes mapped to `[0, 1]`: `x_j = (1 - cos(j pi / (n - 1))) / 2`.
///
/// The lower half is computed as `sin^2(j pi / (2 (n - 1)))`, which avoids
/// cancellation next to zero, and the upper half is mirrored so that
/// `x_j + x_{n-1-j} == 1` exactly.
pub fn chebyshev_nodes(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "chebyshev_nodes needs n >= 2, got {n}"
        )));
    }
    let last = n - 1;
    let mut nodes = vec![0.0; n];
    for j in 0..=last / 2 {
        let s = (j as f64 * PI / (2.0 * last as f64)).sin();
        nodes[j] = s * s;
        nodes[last - j] = 1.0 - nodes[j];
    }
    if last.is_multiple_of(2) {
        nodes[last / 2] = 0.5;
    }
    Ok(nodes)
}

/// `n` evenly spaced nodes on `[0, 1]`, endpoints included.
pub fn uniform_nodes(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "uniform_nodes needs n >= 2, got {n}"
        )));
    }
    let h = 1.0 / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
    nodes[n - 1] = 1.0;
    Ok(nodes)
}

fn check_axis(name: &str, nodes: &[f64]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::invalid(format!("{name} is empty")));
    }
    if nodes.first() != Some(&0.0) || nodes.last() != Some(&1.0) {
        return Err(Error::invalid(format!(
            "{name} must start at 0 and end at 1"
        )));
    }
    if nodes
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
    {
        return Err(Error::invalid(format!(
            "{name} must be strictly increasing"
        )));
    }
    Ok(())
}

/// Cartesian product of two node lists, split into interior and rim.
///
/// Points are visited row by row (`y` outer, `x` inner).
pub fn tensor_grid(nodes_x: &[f64], nodes_y: &[f64]) -> Result<CollocationSet> {
    check_axis("nodes_x", nodes_x)?;
    check_axis("nodes_y", nodes_y)?;
    let mut set = CollocationSet::default();
    for &y in nodes_y {
        for &x in nodes_x {
            let p = Point2::new(x, y);
            match BoundarySide::classify(p) {
                Some(side) => set.boundary.push((p, side)),
                None => set.interior.push(p),
            }
        }
    }
    Ok(set)
}

/// Chebyshev interior grid with an independently sized Chebyshev rim.
///
/// The interior is the `interior_per_axis^2` product of the inner Chebyshev
/// nodes of `interior_per_axis + 2` points. Each wall carries
/// `boundary_per_wall` points: the horizontal walls own the corners, the
/// vertical walls use inner nodes only, so no point is shared.
pub fn clustered_square(
    interior_per_axis: usize,
    boundary_per_wall: usize,
) -> Result<CollocationSet> {
    if boundary_per_wall < 2 {
        return Err(Error::invalid("boundary_per_wall must be at least 2"));
    }
    let inner = chebyshev_nodes(interior_per_axis + 2)?;
    let inner = &inner[1..=interior_per_axis];
    let mut set = CollocationSet {
        interior: Vec::with_capacity(interior_per_axis * interior_per_axis),
        boundary: Vec::with_capacity(4 * boundary_per_wall),
    };
    for &y in inner {
        for &x in inner {
            set.interior.push(Point2::new(x, y));
        }
    }
    let horizontal = chebyshev_nodes(boundary_per_wall)?;
    let vertical = chebyshev_nodes(boundary_per_wall + 2)?;
    let vertical = &vertical[1..=boundary_per_wall];
    set.boundary.extend(
        horizontal
            .iter()
            .map(|&x| (Point2::new(x, 0.0), BoundarySide::Bottom)),
    );
    set.boundary.extend(
        horizontal
            .iter()
            .map(|&x| (Point2::new(x, 1.0), BoundarySide::Top)),
    );
    set.boundary.extend(
        vertical
            .iter()
            .map(|&y| (Point2::new(0.0, y), BoundarySide::Left)),
    );
    set.boundary.extend(
        vertical
            .iter()
            .map(|&y| (Point2::new(1.0, y), BoundarySide::Right)),
    );
    Ok(set)
}

/// Distance to the nearest wall. Not clamped; negative outside the square.
pub(crate) fn nearest_wall_distance(p: Point2) -> f64 {
    p.x.min(1.0 - p.x).min(p.y).min(1.0 - p.y)
}

/// `(l_min, l_max)`: nearest-wall distance of `p` and its maximum over the square.
pub fn wall_distances(p: Point2) -> Result<(f64, f64)> {
    if !p.is_finite() || !p.in_closed_square() {
        return Err(Error::invalid(format!(
            "point ({}, {}) lies outside the unit square",
            p.x, p.y
        )));
    }
    Ok((nearest_wall_distance(p), WALL_DISTANCE_MAX))
}
