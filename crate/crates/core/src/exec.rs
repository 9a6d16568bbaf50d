//! Data-parallel map over index ranges. Backed by rayon when the
//! `parallel` feature is enabled; otherwise every mode runs sequentially.
//! Results always come back in index order.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

pub fn map_range<T, F>(mode: ExecMode, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..len).map(f).collect()
}

/// Index of the minimum value; ties go to the lowest index, so the result
/// does not depend on scheduling. NaN values never win.
pub fn argmin_range<F>(mode: ExecMode, len: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let better = |a: Option<(usize, f64)>, b: Option<(usize, f64)>| match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if y.1 < x.1 || (y.1 == x.1 && y.0 < x.0) {
                Some(y)
            } else {
                Some(x)
            }
        }
    };
    let lift = |i: usize| {
        let v = f(i);
        (!v.is_nan()).then_some((i, v))
    };
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        // chunked fold keeps per-item overhead low; `better` is associative
        // and commutative, so the split does not affect the result
        return (0..len)
            .into_par_iter()
            .with_min_len(1024)
            .fold(|| None, |acc, i| better(acc, lift(i)))
            .reduce(|| None, better);
    }
    let _ = mode;
    (0..len).map(lift).fold(None, better)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |i: usize| ((i * 37) % 11) as f64;
        assert_eq!(
            map_range(ExecMode::Sequential, 100, f),
            map_range(ExecMode::Parallel, 100, f)
        );
        let seq = argmin_range(ExecMode::Sequential, 100, f);
        assert_eq!(seq, argmin_range(ExecMode::Parallel, 100, f));
        assert_eq!(seq, Some((0, 0.0)));
    }

    #[test]
    fn argmin_skips_nan_and_empty() {
        assert_eq!(argmin_range(ExecMode::Sequential, 0, |_| 0.0), None);
        let f = |i: usize| if i == 0 { f64::NAN } else { i as f64 };
        assert_eq!(argmin_range(ExecMode::Parallel, 5, f), Some((1, 1.0)));
    }
}
