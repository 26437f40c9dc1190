//! Execution policy for the data-parallel loops (row assembly, field sampling,
//! sweep cells).
//!
//! With the `parallel` feature disabled, [`Execution::Parallel`] silently
//! degrades to sequential iteration, so callers never need their own `cfg`s.
//! Both modes visit items in the same order and produce bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Fills a row-major buffer one row at a time.
    pub(crate) fn fill_rows<F>(self, data: &mut [f64], width: usize, fill: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        if width == 0 {
            return;
        }
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(width)
                .enumerate()
                .for_each(|(i, row)| fill(i, row));
            return;
        }
        data.chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| fill(i, row));
    }

    /// Order-preserving map.
    pub(crate) fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    pub(crate) fn faer_par(self) -> faer::Par {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return faer::Par::rayon(0);
        }
        faer::Par::Seq
    }

    /// Clears the upper halves of the AVX registers on every thread that may have
    /// run wide linear-algebra kernels. Left dirty, they make each later SSE
    /// instruction (scalar `exp` included) pay a state-transition penalty.
    pub(crate) fn reset_vector_state(self) {
        clear_upper_vector_state();
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            rayon::broadcast(|_| clear_upper_vector_state());
        }
    }
}

fn clear_upper_vector_state() {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx") {
        // SAFETY: AVX support was checked at runtime just above.
        unsafe { std::arch::x86_64::_mm256_zeroupper() }
    }
}

/// Runs `op` with the data-parallel loops limited to `threads` workers.
///
/// `None` (or a build without the `parallel` feature) runs `op` directly on
/// the global pool.
pub fn with_thread_limit<R: Send>(threads: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads.filter(|&n| n > 0) {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            return pool.install(op);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    op()
}
