//! Data-parallel fan-out over independent work items.
//!
//! `par_map(fanout, n, f)` computes `[f(0), f(1), .., f(n-1)]`. With the
//! `parallel` feature enabled and `fanout > 1` the items run on a rayon pool
//! of `fanout` threads; otherwise they run sequentially on the caller's
//! thread. Items must be independent (they only see their index), so the
//! result is identical — bitwise — in both modes and for any thread count.
//!
//! Training loops do not fan out (one model update stream per run); this is
//! for corpus synthesis, response-target generation, and read-only inference
//! during evaluation.

/// Number of worker threads the machine can usefully host.
pub fn available_cores() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(feature = "parallel")]
pub fn par_map<T, F>(fanout: usize, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if fanout > 1 && n > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(fanout)
            .build()
            .expect("failed to build worker pool");
        pool.install(|| {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(&f).collect()
        })
    } else {
        (0..n).map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, F>(_fanout: usize, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    (0..n).map(f).collect()
}
