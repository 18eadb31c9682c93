//! Counter-based random streams.
//!
//! Sample `i` of a run with seed `s` always draws from ChaCha8 keyed by `s`
//! on stream `i`, so results do not depend on how samples are scheduled
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Environment variable overriding the Monte Carlo worker count.
pub const THREADS_ENV: &str = "SMALLDEV_THREADS";

/// Samples per scheduling chunk. Partial sums are formed per chunk and then
/// reduced in chunk order, which keeps the floating-point result identical
/// for any worker count.
pub const CHUNK: u64 = 4096;

#[derive(Debug, Clone)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { base: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent generator for sample `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }
}

/// Worker count from an explicit request or [`THREADS_ENV`].
pub fn resolve_workers(requested: Option<usize>) -> Option<usize> {
    requested.filter(|&n| n > 0).or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

/// Runs `f` on a pool of the requested size, or on the global pool.
pub fn with_workers<T: Send, F: FnOnce() -> T + Send>(workers: Option<usize>, f: F) -> T {
    match resolve_workers(workers) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
