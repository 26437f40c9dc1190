//! Physics-aware initialization of the RBF basis.
//!
//! Centers cluster toward the walls and widths grow with distance from the
//! nearest wall: `sigma = sigma0 + sigmac * l_min / l_max`. The uniform
//! placement with one shared width is the baseline it is compared against.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{nearest_wall_distance, Point2, WALL_DISTANCE_MAX};
use crate::rbf::{RbfBasis, RbfUnit};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PaiConfig {
    pub n_units: usize,
    pub sigma0: f64,
    pub sigmac: f64,
    /// Extra clustering of centers toward the walls; 1 is the plain Chebyshev law.
    pub boundary_oversample: f64,
    pub seed: u64,
}

impl Default for PaiConfig {
    fn default() -> Self {
        PaiConfig {
            n_units: 750,
            sigma0: 0.3,
            sigmac: 0.93,
            boundary_oversample: 1.0,
            seed: 0,
        }
    }
}

impl PaiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_units == 0 {
            return Err(Error::invalid("n_units must be at least 1"));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma0 must be positive, got {}",
                self.sigma0
            )));
        }
        if !(self.sigmac >= 0.0 && self.sigmac.is_finite()) {
            return Err(Error::invalid(format!(
                "sigmac must be non-negative, got {}",
                self.sigmac
            )));
        }
        if !(self.boundary_oversample >= 1.0 && self.boundary_oversample.is_finite()) {
            return Err(Error::invalid(format!(
                "boundary_oversample must be >= 1, got {}",
                self.boundary_oversample
            )));
        }
        Ok(())
    }

    /// Width given to every unit by [`place_centers_uniform`].
    pub fn uniform_width(&self) -> f64 {
        self.sigma0 + self.sigmac * 0.5
    }
}

/// How RBF centers and widths are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Placement {
    #[default]
    PhysicsAware,
    Uniform,
}

impl Placement {
    pub fn place(self, cfg: &PaiConfig) -> Result<RbfBasis> {
        match self {
            Placement::PhysicsAware => place_centers_pai(cfg),
            Placement::Uniform => place_centers_uniform(cfg),
        }
    }
}

/// Wall-distance width heuristic.
pub fn width_heuristic(p: Point2, cfg: &PaiConfig) -> f64 {
    let l_min = nearest_wall_distance(p).clamp(0.0, WALL_DISTANCE_MAX);
    cfg.sigma0 + cfg.sigmac * (l_min / WALL_DISTANCE_MAX)
}

/// Symmetric warp of `[0, 1]` onto itself; `beta > 1` pushes mass toward the ends.
fn edge_warp(u: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        return u;
    }
    let a = u.powf(beta);
    let b = (1.0 - u).powf(beta);
    a / (a + b)
}

fn chebyshev_draw(rng: &mut ChaCha8Rng, beta: f64) -> f64 {
    let u = edge_warp(rng.random::<f64>(), beta);
    0.5 * (1.0 - (PI * u).cos())
}

/// Centers drawn from a Chebyshev-weighted product law, widths from [`width_heuristic`].
pub fn place_centers_pai(cfg: &PaiConfig) -> Result<RbfBasis> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let units = (0..cfg.n_units)
        .map(|_| {
            let x = chebyshev_draw(&mut rng, cfg.boundary_oversample);
            let y = chebyshev_draw(&mut rng, cfg.boundary_oversample);
            let c = Point2::new(x, y);
            RbfUnit::new(c, width_heuristic(c, cfg))
        })
        .collect::<Result<Vec<_>>>()?;
    RbfBasis::new(units)
}

/// Centers uniform over the square, one shared width.
pub fn place_centers_uniform(cfg: &PaiConfig) -> Result<RbfBasis> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = cfg.uniform_width();
    let units = (0..cfg.n_units)
        .map(|_| {
            let x = rng.random::<f64>();
            let y = rng.random::<f64>();
            RbfUnit::new(Point2::new(x, y), width)
        })
        .collect::<Result<Vec<_>>>()?;
    RbfBasis::new(units)
}
