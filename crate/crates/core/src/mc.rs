//! Deterministic chunked Monte Carlo execution.
//!
//! Work is cut into fixed-size chunks; chunk `c` derives every per-sample
//! stream from the master stream by the sample's *global* index, and chunk
//! results are folded in chunk order. The outcome is therefore bit-identical
//! for any worker count: workers only change the scheduling.

use crate::rng::Stream;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub const DEFAULT_CHUNK: usize = 4096;

/// Execution options for Monte Carlo estimators.
#[derive(Clone, Copy, Debug)]
pub struct McOptions {
    pub samples: usize,
    pub workers: usize,
    pub chunk: usize,
}

impl McOptions {
    pub fn new(samples: usize) -> Self {
        McOptions { samples, workers: 1, chunk: DEFAULT_CHUNK }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

/// Runs `per_chunk(chunk_index, first_global_sample, count)` over all chunks
/// and returns the per-chunk results in chunk order.
pub fn run_chunks<A, F>(total: usize, workers: usize, chunk_size: usize, per_chunk: F) -> Vec<A>
where
    A: Send,
    F: Fn(usize, usize, usize) -> A + Sync,
{
    let chunk_size = chunk_size.max(1);
    let n_chunks = total.div_ceil(chunk_size);
    let workers = workers.max(1).min(n_chunks.max(1));
    if n_chunks == 0 {
        return Vec::new();
    }
    if workers == 1 {
        return (0..n_chunks)
            .map(|c| {
                let start = c * chunk_size;
                per_chunk(c, start, chunk_size.min(total - start))
            })
            .collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<A>>> = Mutex::new((0..n_chunks).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let c = next.fetch_add(1, Ordering::Relaxed);
                if c >= n_chunks {
                    break;
                }
                let start = c * chunk_size;
                let res = per_chunk(c, start, chunk_size.min(total - start));
                slots.lock().unwrap()[c] = Some(res);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("chunk result missing"))
        .collect()
}

/// Chunked map-reduce over independent samples. `per_sample` receives the
/// sample's own stream (`master.child(global_index)`) and its global index;
/// accumulators are merged in chunk order.
pub fn mc_fold<Acc, F, M>(master: &Stream, opts: &McOptions, make_acc: impl Fn() -> Acc + Sync, per_sample: F, merge: M) -> Acc
where
    Acc: Send,
    F: Fn(&mut Acc, Stream, usize) + Sync,
    M: Fn(&mut Acc, Acc),
{
    let chunks = run_chunks(opts.samples, opts.workers, opts.chunk, |_c, start, count| {
        let mut acc = make_acc();
        for j in 0..count {
            let idx = start + j;
            per_sample(&mut acc, master.child(idx as u64), idx);
        }
        acc
    });
    let mut it = chunks.into_iter();
    let mut out = it.next().unwrap_or_else(make_acc);
    for a in it {
        merge(&mut out, a);
    }
    out
}
