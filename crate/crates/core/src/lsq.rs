//! Minimum-norm least squares through a truncated SVD pseudo-inverse.

use std::time::Instant;

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::svd::{self, ComputeSvdVectors};
use faer::Mat;
use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::assembly::CollocationSystem;
use crate::error::{Error, Result};
use crate::execution::Execution;

/// Singular values below `DEFAULT_RCOND * sigma_max` are treated as zero.
pub const DEFAULT_RCOND: f64 = 1e-10;

/// Pseudo-inverse solution of a dense system.
#[derive(Clone, Debug)]
pub struct PseudoInverse {
    pub coefficients: Array1<f64>,
    /// Number of singular values kept.
    pub effective_rank: usize,
    /// `sigma_max / sigma_cutoff`, the smallest singular value kept.
    pub condition_number: f64,
    /// All singular values, non-increasing.
    pub singular_values: Vec<f64>,
}

/// Outcome of solving a collocation system.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub coefficients: Vec<f64>,
    /// `|A c - b|_2`.
    pub residual_norm: f64,
    /// `|A c - b|_2 / sqrt(M)`.
    pub residual_rms: f64,
    pub residual_mean_abs: f64,
    pub effective_rank: usize,
    pub condition_number: f64,
    /// SVD and back-substitution only; assembly is timed by the caller.
    pub wall_time_seconds: f64,
}

/// Returns `A^+ b` with singular values at or below `rcond * sigma_max` discarded.
pub fn pseudo_inverse_solve(
    a: ArrayView2<'_, f64>,
    b: ArrayView1<'_, f64>,
    rcond: f64,
    execution: Execution,
) -> Result<PseudoInverse> {
    let (m, n) = a.dim();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: b.len(),
        });
    }
    if m == 0 || n == 0 {
        return Err(Error::invalid("least squares on an empty matrix"));
    }
    if !(0.0..1.0).contains(&rcond) {
        return Err(Error::invalid(format!(
            "rcond must lie in [0, 1), got {rcond}"
        )));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "least-squares input contains non-finite values",
        ));
    }

    let k = m.min(n);
    let mat = Mat::<f64>::from_fn(m, n, |i, j| a[[i, j]]);
    let mut s = Diag::<f64>::zeros(k);
    let mut u = Mat::<f64>::zeros(m, k);
    let mut v = Mat::<f64>::zeros(n, k);
    let par = execution.faer_par();
    let scratch = svd::svd_scratch::<f64>(
        m,
        n,
        ComputeSvdVectors::Thin,
        ComputeSvdVectors::Thin,
        par,
        Default::default(),
    );
    let mut buffer = MemBuffer::new(scratch);
    let result = svd::svd(
        mat.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        Some(v.as_mut()),
        par,
        MemStack::new(&mut buffer),
        Default::default(),
    )
    .map_err(|_| Error::SvdNoConvergence);
    execution.reset_vector_state();
    result?;
    drop(mat);

    let singular_values: Vec<f64> = s.column_vector().iter().copied().collect();
    let sigma_max = singular_values[0];
    let cutoff = rcond * sigma_max;
    let rank = singular_values
        .iter()
        .take_while(|&&sv| sv > cutoff && sv > 0.0)
        .count();
    if rank == 0 {
        return Err(Error::RankZero);
    }

    // c = V_r diag(1/s_r) U_r^T b
    let weights: Vec<f64> = (0..rank)
        .map(|i| {
            let dot: f64 = u.col(i).iter().zip(b.iter()).map(|(x, y)| x * y).sum();
            dot / singular_values[i]
        })
        .collect();
    let mut c = Array1::<f64>::zeros(n);
    for (i, w) in weights.iter().enumerate() {
        for (cj, vj) in c.iter_mut().zip(v.col(i).iter()) {
            *cj += w * vj;
        }
    }

    Ok(PseudoInverse {
        coefficients: c,
        effective_rank: rank,
        condition_number: sigma_max / singular_values[rank - 1],
        singular_values,
    })
}

/// Solves the collocation system and gathers residual statistics.
pub fn solve_least_squares(
    system: &CollocationSystem,
    rcond: f64,
    execution: Execution,
) -> Result<SolveReport> {
    let start = Instant::now();
    let solved = pseudo_inverse_solve(
        system.matrix().view(),
        system.rhs().view(),
        rcond,
        execution,
    )?;
    let wall_time_seconds = start.elapsed().as_secs_f64();

    let residual = system.residual_vector(solved.coefficients.view())?;
    let rows = residual.len() as f64;
    let residual_norm = residual.dot(&residual).sqrt();
    Ok(SolveReport {
        residual_norm,
        residual_rms: residual_norm / rows.sqrt(),
        residual_mean_abs: residual.iter().map(|r| r.abs()).sum::<f64>() / rows,
        effective_rank: solved.effective_rank,
        condition_number: solved.condition_number,
        coefficients: solved.coefficients.to_vec(),
        wall_time_seconds,
    })
}
