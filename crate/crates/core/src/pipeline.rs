//! The end-to-end solve: place the basis, assemble, solve, measure.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembly::{assemble, AssemblyOptions, CollocationSystem};
use crate::config::RunConfig;
use crate::error::Result;
use crate::execution::Execution;
use crate::geometry::CollocationSet;
use crate::lsq::{solve_least_squares, SolveReport};
use crate::postprocess::Solution;
use crate::problems::{error_stats, evaluation_grid, ErrorStats};

/// Everything a single run produces.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub points: CollocationSet,
    pub system: CollocationSystem,
    pub solution: Solution,
    pub solve: SolveReport,
    /// Present when the problem has a known exact solution.
    pub errors: Option<ErrorStats>,
    pub assembly_seconds: f64,
    pub total_seconds: f64,
}

impl RunOutcome {
    /// Assembly plus solve; point generation and error evaluation excluded.
    pub fn train_seconds(&self) -> f64 {
        self.assembly_seconds + self.solve.wall_time_seconds
    }
}

pub fn run(config: &RunConfig, execution: Execution) -> Result<RunOutcome> {
    let start = Instant::now();
    config.validate()?;
    let points = config.collocation_points()?;
    let basis = config.placement().place(&config.pai_config())?;
    let problem = config.preset.problem(
        crate::problems::MmsSpec {
            k1: config.k1,
            k2: config.k2,
        },
        config.clamped,
    );

    let t_assembly = Instant::now();
    let options = AssemblyOptions {
        scale_interior: config.scale_interior_rows,
        execution,
    };
    let system = assemble(&problem, &points, &basis, options)?;
    let assembly_seconds = t_assembly.elapsed().as_secs_f64();

    let solve = solve_least_squares(&system, config.rcond, execution)?;
    let solution = Solution::new(basis, solve.coefficients.clone())?;

    let errors = match config.mms_spec() {
        Some(spec) => {
            let grid = evaluation_grid(config.eval_grid)?;
            Some(error_stats(
                &solution,
                move |p| spec.exact(p),
                &grid,
                execution,
            )?)
        }
        None => None,
    };

    Ok(RunOutcome {
        config: config.clone(),
        points,
        system,
        solution,
        solve,
        errors,
        assembly_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub residual_norm: f64,
    pub residual_rms: f64,
    pub residual_mean_abs: f64,
    pub effective_rank: usize,
    pub condition_number: f64,
    /// SHA-256 over the little-endian bytes of the coefficient vector.
    pub coefficients_sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub assembly_s: f64,
    pub solve_s: f64,
    /// `assembly_s + solve_s`.
    pub train_s: f64,
    pub total_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub mean_abs: f64,
    pub max_abs: f64,
    pub rms: f64,
}

/// Machine-readable record of a run, serialized as TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub preset: String,
    pub seed: u64,
    pub config_hash: String,
    pub n_units: usize,
    pub collocation_points: usize,
    pub rows: usize,
    pub solve: SolveSummary,
    pub timing: Timing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorSummary>,
    pub config: RunConfig,
}

pub fn coefficients_digest(coefficients: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for c in coefficients {
        hasher.update(c.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

impl RunReport {
    pub fn from_outcome(outcome: &RunOutcome) -> Self {
        let s = &outcome.solve;
        RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            preset: outcome.config.preset.name().to_string(),
            seed: outcome.config.seed,
            config_hash: outcome.config.hash(),
            n_units: outcome.solution.basis().len(),
            collocation_points: outcome.points.len(),
            rows: outcome.system.nrows(),
            solve: SolveSummary {
                residual_norm: s.residual_norm,
                residual_rms: s.residual_rms,
                residual_mean_abs: s.residual_mean_abs,
                effective_rank: s.effective_rank,
                condition_number: s.condition_number,
                coefficients_sha256: coefficients_digest(&s.coefficients),
            },
            timing: Timing {
                assembly_s: outcome.assembly_seconds,
                solve_s: s.wall_time_seconds,
                train_s: outcome.train_seconds(),
                total_s: outcome.total_seconds,
            },
            error: outcome.errors.map(|e| ErrorSummary {
                mean_abs: e.mean_abs,
                max_abs: e.max_abs,
                rms: e.rms,
            }),
            config: outcome.config.clone(),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run report serializes to TOML")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| crate::config::line_column(text, s.start))
                .unwrap_or((1, 1));
            crate::error::Error::Config {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    /// The report with wall-clock fields zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        RunReport {
            timing: Timing {
                assembly_s: 0.0,
                solve_s: 0.0,
                train_s: 0.0,
                total_s: 0.0,
            },
            ..self.clone()
        }
    }
}
