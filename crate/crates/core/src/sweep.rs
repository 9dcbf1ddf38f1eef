//! Independent runs mapped over a parameter list. With the `parallel`
//! feature the work is spread over the rayon pool; results keep input order
//! either way, so sweeps are reproducible regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn seq_map<T, R>(items: Vec<T>, f: impl Fn(T) -> R) -> Vec<R> {
    items.into_iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn par_map<T, R>(items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R>
where
    T: Send,
    R: Send,
{
    items.into_par_iter().map(f).collect()
}

/// `par_map` when built with `parallel`, `seq_map` otherwise.
pub fn map<T, R>(items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R>
where
    T: Send,
    R: Send,
{
    #[cfg(feature = "parallel")]
    {
        par_map(items, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        seq_map(items, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let expect: Vec<u64> = xs.iter().map(|x| x * x).collect();
        assert_eq!(map(xs.clone(), |x| x * x), expect);
        assert_eq!(seq_map(xs, |x| x * x), expect);
    }
}
