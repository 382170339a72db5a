//! Index-ordered fan-out over rayon, or a plain loop without the `parallel` feature.
//!
//! Results always come back in index order, so reductions done afterwards are
//! identical for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(0..len)` and collects the results in index order.
#[cfg(feature = "parallel")]
pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

/// Runs `op` on a pool of `threads` workers; `None` keeps the global pool.
#[cfg(feature = "parallel")]
pub fn with_threads<R, F>(threads: Option<usize>, op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(op),
            Err(_) => op(),
        },
        None => op(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R, F>(_threads: Option<usize>, op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    op()
}
