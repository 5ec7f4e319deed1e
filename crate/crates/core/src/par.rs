//! Data-parallel helpers.
//!
//! Every helper preserves input order, so reductions done on the collected
//! output are bit-for-bit identical between the rayon and sequential paths.

use std::sync::atomic::{AtomicU8, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

static MODE: AtomicU8 = AtomicU8::new(1);

/// Switch between the rayon path and the plain iterator path at runtime.
/// Without the `parallel` feature this is a no-op.
pub fn set_execution(mode: Execution) {
    MODE.store(matches!(mode, Execution::Parallel) as u8, Ordering::Relaxed);
}

pub fn execution() -> Execution {
    if cfg!(feature = "parallel") && MODE.load(Ordering::Relaxed) == 1 {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

/// Caps the global worker pool. Only the first call has an effect.
pub fn init_workers(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution() == Execution::Parallel {
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution() == Execution::Parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Fallible variant of [`map`]; the first error in input order wins.
pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    map(items, f).into_iter().collect()
}

/// Element-wise `out[i] = f(i)` over a mutable slice.
pub fn fill<R, F>(out: &mut [R], f: F)
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution() == Execution::Parallel && out.len() >= 4096 {
        out.par_iter_mut().enumerate().for_each(|(i, x)| *x = f(i));
        return;
    }
    for (i, x) in out.iter_mut().enumerate() {
        *x = f(i);
    }
}
