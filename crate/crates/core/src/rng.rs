//! Reproducible parallel random streams.
//!
//! Every Monte Carlo task is split into fixed-size chunks; chunk `k` draws
//! from ChaCha8 keyed by the task seed on stream `k`, so results do not depend
//! on thread count or scheduling, and reductions run in chunk order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Default number of samples per chunk.
pub const CHUNK: u64 = 4096;

/// The generator for chunk `stream` of a task seeded with `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Run `f(rng, chunk_index, count)` over `total` samples split into chunks
/// of `chunk`, in parallel, returning per-chunk results in chunk order.
pub fn chunked<T, F>(seed: u64, total: u64, chunk: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64, u64) -> T + Sync,
{
    let chunk = chunk.max(1);
    let n_chunks = total.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let count = chunk.min(total - k * chunk);
            let mut rng = stream(seed, k);
            f(&mut rng, k, count)
        })
        .collect()
}
