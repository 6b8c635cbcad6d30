//! Sequential or data-parallel execution of independent work items.

/// How engines spread independent work (paths, frontier nodes, locations).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled; otherwise sequential.
    #[default]
    Parallel,
}

impl Parallelism {
    /// Maps `items` through `f`, preserving order.
    pub fn map<T, R, F>(self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        match self {
            Parallelism::Sequential => items.into_iter().map(f).collect(),
            Parallelism::Parallel => par_map(items, f),
        }
    }

    /// Maps a `start..end` range through `f`, preserving order.
    pub fn map_range<R, F>(self, start: u64, end: u64, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(u64) -> R + Sync + Send,
    {
        match self {
            Parallelism::Sequential => (start..end).map(f).collect(),
            Parallelism::Parallel => par_map_range(start, end, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T: Send, R: Send, F: Fn(T) -> R + Sync + Send>(items: Vec<T>, f: F) -> Vec<R> {
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Send, R: Send, F: Fn(T) -> R + Sync + Send>(items: Vec<T>, f: F) -> Vec<R> {
    items.into_iter().map(f).collect()
}

#[cfg(feature = "parallel")]
fn par_map_range<R: Send, F: Fn(u64) -> R + Sync + Send>(start: u64, end: u64, f: F) -> Vec<R> {
    use rayon::prelude::*;
    (start..end).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map_range<R: Send, F: Fn(u64) -> R + Sync + Send>(start: u64, end: u64, f: F) -> Vec<R> {
    (start..end).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let items: Vec<u64> = (0..1000).collect();
        let a = Parallelism::Sequential.map(items.clone(), |x| x * x);
        let b = Parallelism::Parallel.map(items, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(
            Parallelism::Parallel.map_range(5, 10, |i| i),
            vec![5, 6, 7, 8, 9]
        );
    }
}
