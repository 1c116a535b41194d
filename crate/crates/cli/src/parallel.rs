//! Deterministic bounded parallelism: items are split into contiguous chunks,
//! results land by index, so the output order never depends on scheduling.

/// Thread cap: `CALREG_THREADS` when set, otherwise the machine parallelism.
pub fn thread_cap() -> usize {
    std::env::var("CALREG_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

pub fn parallel_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send + Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let n = items.len();
    let threads = thread_cap().min(n.max(1));
    if threads <= 1 || n <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let chunk = n.div_ceil(threads);
    let mut out: Vec<Option<R>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (chunk_idx, (item_chunk, out_chunk)) in
            items.chunks(chunk).zip(out.chunks_mut(chunk)).enumerate()
        {
            let f = &f;
            scope.spawn(move || {
                for (j, (item, slot)) in item_chunk.iter().zip(out_chunk.iter_mut()).enumerate() {
                    *slot = Some(f(chunk_idx * chunk + j, item));
                }
            });
        }
    });
    out.into_iter()
        .map(|r| r.expect("every slot is filled by its chunk"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..101).collect();
        let out = parallel_map(items, |i, &x| (i as u64) * 1000 + x * x);
        for (i, v) in out.iter().enumerate() {
            assert_eq!(*v, (i as u64) * 1000 + (i as u64) * (i as u64));
        }
    }
}
