//! Deterministic chunked map-reduce over sample rows.
//!
//! Rows are split into fixed-size chunks; each chunk produces a partial
//! accumulator and partials are summed in chunk order. The result is
//! bit-identical regardless of thread count or whether the `parallel` feature
//! is enabled.

use std::ops::Range;

/// Rows per partial sum.
pub const CHUNK_ROWS: usize = 1024;

fn chunks(n_rows: usize) -> impl Iterator<Item = Range<usize>> + Clone {
    (0..n_rows.div_ceil(CHUNK_ROWS))
        .map(move |c| c * CHUNK_ROWS..((c + 1) * CHUNK_ROWS).min(n_rows))
}

fn fold(width: usize, partials: impl Iterator<Item = Vec<f64>>) -> Vec<f64> {
    let mut acc = vec![0.0; width];
    for p in partials {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    acc
}

/// Single-threaded reduction. `kernel(rows, acc)` adds the contribution of
/// `rows` into a zeroed accumulator of length `width`.
pub fn reduce_rows_seq<F>(n_rows: usize, width: usize, kernel: F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64]),
{
    fold(
        width,
        chunks(n_rows).map(|r| {
            let mut acc = vec![0.0; width];
            kernel(r, &mut acc);
            acc
        }),
    )
}

/// Same as [`reduce_rows_seq`] with chunks evaluated on the rayon pool.
#[cfg(feature = "parallel")]
pub fn reduce_rows_par<F>(n_rows: usize, width: usize, kernel: F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64]) + Sync,
{
    use rayon::prelude::*;

    let ranges: Vec<Range<usize>> = chunks(n_rows).collect();
    let partials: Vec<Vec<f64>> = ranges
        .into_par_iter()
        .map(|r| {
            let mut acc = vec![0.0; width];
            kernel(r, &mut acc);
            acc
        })
        .collect();
    fold(width, partials.into_iter())
}

/// Dispatches to the parallel reduction when the `parallel` feature is on.
pub fn reduce_rows<F>(n_rows: usize, width: usize, kernel: F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64]) + Sync,
{
    #[cfg(feature = "parallel")]
    {
        reduce_rows_par(n_rows, width, kernel)
    }
    #[cfg(not(feature = "parallel"))]
    {
        reduce_rows_seq(n_rows, width, kernel)
    }
}

/// Element-wise map of rows into a new vector, parallel when enabled.
pub fn map_rows<F>(n_rows: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_rows).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_rows).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(data: &[f64]) -> impl Fn(Range<usize>, &mut [f64]) + Sync + '_ {
        move |r, acc| {
            for &v in &data[r] {
                acc[0] += v;
                acc[1] += v * v;
            }
        }
    }

    #[test]
    fn chunk_cover() {
        let c: Vec<_> = chunks(2 * CHUNK_ROWS + 3).collect();
        assert_eq!(c.len(), 3);
        assert_eq!(c[2], 2 * CHUNK_ROWS..2 * CHUNK_ROWS + 3);
        assert_eq!(chunks(0).count(), 0);
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let data: Vec<f64> = (0..5000)
            .map(|i| ((i * 7919) % 1000) as f64 * 1e-3 + 0.1)
            .collect();
        let seq = reduce_rows_seq(data.len(), 2, kernel(&data));
        let any = reduce_rows(data.len(), 2, kernel(&data));
        assert_eq!(seq, any);
        let naive: f64 = data.iter().sum();
        assert!((seq[0] - naive).abs() < 1e-9);
    }
}
