//! Execution policy for the data-parallel loops of the crate.

/// Selects how embarrassingly parallel loops are executed.
///
/// With the `parallel` feature (on by default) `Par::Rayon` distributes the
/// work over the global rayon pool. `Par::default()` picks rayon when it is
/// compiled in and the sequential path otherwise, so callers that do not care
/// never have to name a variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Par {
    Sequential,
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Default for Par {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Par::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            Par::Sequential
        }
    }
}

impl Par {
    /// `f(0), f(1), ..., f(n-1)` collected in order.
    pub(crate) fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Par::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Par::Rayon => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
        }
    }

    /// Folds `f(i)` for `i in 0..n` in fixed chunks and combines the partial
    /// results left to right with `combine`, so the floating-point result does
    /// not depend on thread scheduling. `init` must be an identity for
    /// `combine`.
    pub(crate) fn fold<T, F, C>(self, n: usize, chunk: usize, init: T, f: F, combine: C) -> T
    where
        T: Send + Sync + Clone,
        F: Fn(T, usize) -> T + Sync + Send,
        C: Fn(T, T) -> T + Sync + Send,
    {
        let chunk = chunk.max(1);
        let n_chunks = n.div_ceil(chunk);
        let run = |c: usize| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(n);
            (lo..hi).fold(init.clone(), &f)
        };
        match self {
            Par::Sequential => (0..n_chunks).map(run).fold(init.clone(), &combine),
            #[cfg(feature = "parallel")]
            Par::Rayon => {
                use rayon::prelude::*;
                let partial: Vec<T> = (0..n_chunks).into_par_iter().map(run).collect();
                partial.into_iter().fold(init.clone(), &combine)
            }
        }
    }
}
