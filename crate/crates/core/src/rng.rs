//! Reproducible per-replicate random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream `stream` under master seed `seed`. Replicate `i` always
/// sees the same numbers whatever the thread layout.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fixed chunk size for parallel replicate loops.
pub const CHUNK: u64 = 4096;

/// Split `0..n` into `CHUNK`-sized half-open ranges.
pub fn chunks(n: u64) -> Vec<(u64, u64)> {
    (0..n.div_ceil(CHUNK)).map(|k| (k * CHUNK, ((k + 1) * CHUNK).min(n))).collect()
}
