//! Sentence-level data parallelism with a sequential fallback.
//!
//! Without the `parallel` feature both modes run sequentially.

/// Execution mode for per-sentence work.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    #[default]
    Parallel,
    Sequential,
}

impl Exec {
    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Maps `f` over `items` and folds the results with an associative `merge`.
    pub fn map_reduce<T, R, F, M>(self, items: &[T], identity: impl Fn() -> R + Sync + Send, f: F, merge: M) -> R
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
        M: Fn(R, R) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).reduce(&identity, &merge)
            }
            _ => items.iter().map(f).fold(identity(), merge),
        }
    }
}
