//! Execution policy for the data-parallel loops.
//!
//! Every parallel loop in the crate goes through [`map_indices`], which maps
//! a closure over `0..count` and returns results in index order. With the
//! `parallel` feature the work is spread over the rayon pool; without it (or
//! with [`Exec::Sequential`]) it runs on the calling thread. Since each index
//! derives its own RNG sub-stream, both paths give bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }
}

pub fn map_indices<T, F>(exec: Exec, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    match exec {
        Exec::Sequential => (0..count).map(f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..count).into_par_iter().map(f).collect(),
    }
}

/// Splits `total` items into chunks of at most `chunk` and returns
/// `(chunk_index, start, len)` triples.
pub fn chunks(total: usize, chunk: usize) -> Vec<(usize, usize, usize)> {
    let chunk = chunk.max(1);
    (0..total.div_ceil(chunk))
        .map(|i| {
            let start = i * chunk;
            (i, start, chunk.min(total - start))
        })
        .collect()
}
