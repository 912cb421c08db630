//! Deterministic sharded execution and seeded RNG streams.
//!
//! Work is split into fixed-size contiguous index shards; each shard is
//! mapped independently (on rayon when the `parallel` feature is enabled)
//! and the per-shard partials are folded *in shard order* on one thread.
//! Because shard boundaries and the fold order are constants, results —
//! including floating-point accumulations — are byte-identical whether the
//! crate runs on one thread or many.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default shard size for box enumerations.
pub const SHARD_SIZE: u128 = 1 << 14;

/// Split `[0, total)` into contiguous `(start, end)` shards of
/// `shard_size` (the last shard may be shorter).
pub fn shards(total: u128, shard_size: u128) -> Vec<(u128, u128)> {
    assert!(shard_size > 0, "shard size must be positive");
    let mut out = Vec::with_capacity((total / shard_size) as usize + 1);
    let mut start = 0u128;
    while start < total {
        let end = total.min(start + shard_size);
        out.push((start, end));
        start = end;
    }
    out
}

/// Map every shard of `[0, total)` and fold the partials in shard order.
///
/// Runs shards on rayon when the `parallel` feature is on, sequentially
/// otherwise; the result is identical either way.
pub fn map_fold<P, M, A, F>(total: u128, shard_size: u128, map: M, init: A, fold: F) -> A
where
    M: Fn((u128, u128)) -> P + Sync + Send,
    P: Send,
    F: FnMut(A, P) -> A,
{
    #[cfg(feature = "parallel")]
    {
        map_fold_parallel(total, shard_size, map, init, fold)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_fold_sequential(total, shard_size, map, init, fold)
    }
}

/// Sequential reference path (always available; the bench suite compares
/// it against the rayon path).
pub fn map_fold_sequential<P, M, A, F>(
    total: u128,
    shard_size: u128,
    map: M,
    init: A,
    mut fold: F,
) -> A
where
    M: Fn((u128, u128)) -> P,
    F: FnMut(A, P) -> A,
{
    let mut acc = init;
    for shard in shards(total, shard_size) {
        acc = fold(acc, map(shard));
    }
    acc
}

/// Rayon path: shards are mapped in parallel, collected in shard order,
/// then folded sequentially.
#[cfg(feature = "parallel")]
pub fn map_fold_parallel<P, M, A, F>(
    total: u128,
    shard_size: u128,
    map: M,
    init: A,
    mut fold: F,
) -> A
where
    M: Fn((u128, u128)) -> P + Sync + Send,
    P: Send,
    F: FnMut(A, P) -> A,
{
    use rayon::prelude::*;
    let parts: Vec<P> = shards(total, shard_size).into_par_iter().map(map).collect();
    let mut acc = init;
    for p in parts {
        acc = fold(acc, p);
    }
    acc
}

/// RNG for task `index` under a master `seed`.
///
/// Every task gets its own ChaCha stream, so tasks can run in any order
/// (or in parallel) while each one sees a fixed byte sequence.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn shards_cover_range_without_overlap() {
        let s = shards(100, 7);
        assert_eq!(s.first().unwrap().0, 0);
        assert_eq!(s.last().unwrap().1, 100);
        for w in s.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert!(shards(0, 8).is_empty());
    }

    #[test]
    fn parallel_and_sequential_fold_agree_on_floats() {
        // Sum of a float function sensitive to association order.
        let map = |(a, b): (u128, u128)| (a..b).map(|i| 1.0 / (1.0 + i as f64)).sum::<f64>();
        let seq = map_fold_sequential(50_000, 1 << 10, map, 0.0f64, |a, p| a + p);
        let def = map_fold(50_000, 1 << 10, map, 0.0f64, |a, p| a + p);
        assert_eq!(seq.to_bits(), def.to_bits());
    }

    #[test]
    fn stream_rngs_are_independent_of_evaluation_order() {
        let a: u64 = stream_rng(7, 3).gen();
        let _ = stream_rng(7, 99).gen::<u64>();
        let b: u64 = stream_rng(7, 3).gen();
        assert_eq!(a, b);
    }
}
