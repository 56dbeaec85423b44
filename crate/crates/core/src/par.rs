//! Batch helpers that fan out over rayon when the `parallel` feature is on
//! and fall back to plain iteration otherwise. Results keep input order.

/// Maps `f` over `items` sequentially.
pub fn map_sequential<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

/// Maps `f` over `items` on the rayon pool.
#[cfg(feature = "parallel")]
pub fn map_parallel<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

/// Parallel when built with `parallel`, sequential otherwise.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    map_parallel(items, f)
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    map_sequential(items, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let input: Vec<u64> = (0..1000).collect();
        let out = map(input.clone(), |x| x * x);
        assert_eq!(out, map_sequential(input, |x| x * x));
    }
}
