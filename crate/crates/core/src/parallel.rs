//! Deterministic parallel Monte Carlo.
//!
//! Work is cut into fixed-size chunks; chunk `c` draws from the ChaCha8
//! stream `(seed, c)` and chunk results are combined in chunk order. The
//! output is therefore bit-identical for a given seed whatever the number
//! of worker threads.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Samples per chunk for plain Monte Carlo means.
pub const CHUNK_LEN: usize = 1 << 14;

/// Independent generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `f(rng, range)` for every chunk of `0..n` on `workers` threads
/// (`0` uses the global pool) and returns the results in chunk order.
pub fn map_chunks<T, F>(seed: u64, n: usize, chunk_len: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, Range<usize>) -> T + Sync,
{
    let chunk_len = chunk_len.max(1);
    let chunks = n.div_ceil(chunk_len);
    let run = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream_rng(seed, c as u64);
                let start = c * chunk_len;
                f(&mut rng, start..(start + chunk_len).min(n))
            })
            .collect()
    };
    if workers == 0 {
        return Ok(run());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(run))
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0, samples: 0 }
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

/// Monte Carlo mean of `draw` over `n` samples.
pub fn mc_mean<F>(seed: u64, n: usize, workers: usize, draw: F) -> Result<Estimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 Monte Carlo samples".into()));
    }
    let parts = map_chunks(seed, n, CHUNK_LEN, workers, |rng, range| {
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in range {
            let v = draw(rng);
            s += v;
            s2 += v * v;
        }
        (s, s2)
    })?;
    let (s, s2) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let nf = n as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    if !mean.is_finite() {
        return Err(Error::Numerical("Monte Carlo mean is not finite".into()));
    }
    Ok(Estimate {
        value: mean,
        stderr: (var / nf).sqrt(),
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn independent_of_worker_count() {
        let draw = |r: &mut ChaCha8Rng| r.random::<f64>();
        let a = mc_mean(7, 100_003, 1, draw).unwrap();
        let b = mc_mean(7, 100_003, 3, draw).unwrap();
        let c = mc_mean(7, 100_003, 0, draw).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(a.covers(0.5, 4.0));
        assert_ne!(a, mc_mean(8, 100_003, 1, draw).unwrap());
    }

    #[test]
    fn chunks_cover_range_in_order() {
        let ranges = map_chunks(1, 10, 4, 2, |_, r| r).unwrap();
        assert_eq!(ranges, vec![0..4, 4..8, 8..10]);
    }
}
