use rayon::prelude::*;

use crate::env::{simulate_episode, EnvError, EnvConfig, Policy, ProductCatalog, Timeline};

/// Maps `f` over `0..n` either serially or on a dedicated pool of
/// `threads` workers. Results come back in index order either way.
pub fn map_users<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if threads <= 1 {
        return (0..n as u64).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("failed to start worker pool");
    pool.install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

/// Simulates users `0..n` with per-user substreams of `master_seed`.
pub fn simulate_users<P>(
    catalog: &ProductCatalog,
    config: &EnvConfig,
    policy: &P,
    master_seed: u64,
    n: usize,
    threads: usize,
) -> Result<Vec<Timeline>, EnvError>
where
    P: Policy + Sync + ?Sized,
{
    map_users(n, threads, |user| simulate_episode(catalog, config, policy, master_seed, user))
        .into_iter()
        .collect()
}
