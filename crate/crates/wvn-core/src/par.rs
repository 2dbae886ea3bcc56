//! Execution policy shared by the grid scans, quadrature loops and box sweeps.
//!
//! Every parallel path collects results in index order, so a run produces the
//! same numbers under either policy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How independent tasks are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecPolicy {
    Sequential,
    #[default]
    Parallel,
}

impl ExecPolicy {
    /// True when tasks will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecPolicy::Parallel
    }
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indexed<T, F>(policy: ExecPolicy, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = policy;
    (0..n).map(f).collect()
}

/// Maps over a slice, preserving order.
pub fn map_slice<S, T, F>(policy: ExecPolicy, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = policy;
    items.iter().map(f).collect()
}

/// Splits `0..n` into contiguous chunks, evaluates `f` on each and returns the
/// per-chunk results in order. Chunk boundaries depend only on `n` and
/// `chunk`, never on the thread count, which keeps floating-point reductions
/// reproducible.
pub fn map_chunks<T, F>(policy: ExecPolicy, n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let count = n.div_ceil(chunk);
    map_indexed(policy, count, |c| {
        let lo = c * chunk;
        f(lo..(lo + chunk).min(n))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let f = |i: usize| (i as f64).sqrt();
        assert_eq!(
            map_indexed(ExecPolicy::Sequential, 1000, f),
            map_indexed(ExecPolicy::Parallel, 1000, f)
        );
    }

    #[test]
    fn chunks_cover_range() {
        let parts = map_chunks(ExecPolicy::Parallel, 10, 3, |r| r.len());
        assert_eq!(parts, vec![3, 3, 3, 1]);
    }
}
