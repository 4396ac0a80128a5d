//! Chunked Monte-Carlo driver with deterministic merging.

use serde::{Deserialize, Serialize};

use crate::euclid::SampleStream;

/// Samples per forked sub-stream. Fixed so results do not depend on the
/// number of worker threads.
pub const CHUNK: usize = 4096;

/// A Monte-Carlo estimate of a measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl MeasureEstimate {
    /// Estimate `total · hits / samples` with the binomial standard error.
    pub fn from_hits(hits: usize, samples: usize, total: f64, seed: u64) -> Self {
        let p = hits as f64 / samples as f64;
        MeasureEstimate {
            value: total * p,
            standard_error: total * (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
            seed,
        }
    }
}

/// Run `work(stream, count)` over consecutive chunks of `samples`, each chunk
/// on its own sub-stream forked from `stream`, and return the per-chunk
/// results in chunk order.
pub fn map_chunks<T, F>(samples: usize, stream: &SampleStream, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SampleStream, usize) -> T + Sync + Send,
{
    let chunks: Vec<(u64, usize)> = (0..samples.div_ceil(CHUNK))
        .map(|c| (c as u64, CHUNK.min(samples - c * CHUNK)))
        .collect();
    let run = |&(id, count): &(u64, usize)| {
        let mut s = stream.fork(id);
        work(&mut s, count)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        chunks.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        chunks.iter().map(run).collect()
    }
}

/// Map over indices `0..n` (parallel when the feature is on), preserving order.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
