//! Data-parallel helpers with a sequential fallback.
//!
//! All parallel loops in this crate run over *disjoint* work groups whose
//! results land in non-overlapping memory, so the outcome is bit-identical
//! regardless of thread count. The `parallel` feature (default) backs the
//! helpers with rayon; without it the same closures run sequentially.

/// Runs `f(g)` for every group index `g` in `0..groups`.
///
/// `f` must only touch state owned by group `g`; the helper gives no other
/// guarantee about execution order.
#[cfg(feature = "parallel")]
pub fn for_each_group<F>(groups: usize, f: F)
where
    F: Fn(usize) + Sync + Send,
{
    use rayon::prelude::*;
    (0..groups).into_par_iter().for_each(f);
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_group<F>(groups: usize, f: F)
where
    F: Fn(usize) + Sync,
{
    for_each_group_seq(groups, f);
}

/// Sequential twin of [`for_each_group`], always available so benchmarks can
/// compare both execution shapes within one build.
pub fn for_each_group_seq<F>(groups: usize, f: F)
where
    F: Fn(usize) + Sync,
{
    for g in 0..groups {
        f(g);
    }
}

/// Caps the global worker-thread count. A no-op when the pool is already
/// initialised, when `threads` is zero, or without the `parallel` feature.
#[cfg(feature = "parallel")]
pub fn limit_threads(threads: usize) {
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
pub fn limit_threads(_threads: usize) {}

/// Maps `f` over `0..n` and collects results in index order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    (0..n).map(f).collect()
}

/// Shared mutable base pointer for scatter writes into one vector from
/// several groups.
///
/// Invariant (checked by the call sites, not the type): distinct group
/// indices address pairwise disjoint element sets, so no write races exist.
pub struct DisjointWrites<T>(*mut T);

unsafe impl<T: Send> Sync for DisjointWrites<T> {}
unsafe impl<T: Send> Send for DisjointWrites<T> {}

impl<T> DisjointWrites<T> {
    pub fn new(slice: &mut [T]) -> Self {
        DisjointWrites(slice.as_mut_ptr())
    }

    /// Writes `value` at `idx`. Caller upholds the disjointness invariant.
    ///
    /// # Safety
    /// `idx` must be in bounds and not concurrently written by another group.
    pub unsafe fn write(&self, idx: usize, value: T) {
        unsafe { *self.0.add(idx) = value };
    }

    /// Accumulates `value` into the element at `idx`.
    ///
    /// # Safety
    /// `idx` must be in bounds and not concurrently touched by another group.
    pub unsafe fn add_assign(&self, idx: usize, value: T)
    where
        T: std::ops::AddAssign,
    {
        unsafe { *self.0.add(idx) += value };
    }
}
