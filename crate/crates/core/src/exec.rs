//! Execution strategy for the data-parallel loops (scan grids, optimizer
//! multistarts, random-draw checks, quadrature node batches).
//!
//! Every parallel map preserves input order, so results are identical to the
//! sequential path.

/// How a batch of independent evaluations is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Plain iterator on the calling thread.
    Sequential,
    /// Rayon work-stealing pool (falls back to sequential without the
    /// `parallel` feature).
    #[default]
    Parallel,
}

impl Exec {
    /// True when this build can actually run in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Order-preserving map over a slice.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving map over `0..n`.
    pub fn map_range<U, F>(self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

/// Configure the global rayon pool size. No-op in sequential builds.
pub fn set_threads(n: usize) -> crate::Result<()> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| crate::Error::Precondition(format!("thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.37).collect();
        let a = Exec::Sequential.map(&xs, |x| x.sin());
        let b = Exec::Parallel.map(&xs, |x| x.sin());
        assert_eq!(a, b);
        assert_eq!(Exec::Parallel.map_range(5, |i| i * i), vec![0, 1, 4, 9, 16]);
    }
}
