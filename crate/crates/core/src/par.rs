//! Thin wrappers over rayon so every call site has a sequential fallback.
//!
//! The mapping helper preserves input order, so parallel and sequential
//! builds produce identical results; callers that need an argmin reduce the
//! returned vector sequentially in canonical order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order.
pub(crate) fn map_vec<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Fix the global worker-thread count; call once at startup.  With the
/// `parallel` feature disabled (or if the pool already exists) this is a
/// no-op, so results are unaffected either way.
pub fn set_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}
