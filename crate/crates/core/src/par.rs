//! Order-preserving parallel map over scoped threads.

/// Applies `f` to every item using up to `workers` threads. Output order
/// always matches input order, whatever the completion order.
pub fn parallel_map<I, O, F>(items: &[I], workers: usize, f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(f).collect::<Vec<O>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let items: Vec<u64> = (0..103).collect();
        let one = parallel_map(&items, 1, |x| x * x);
        let many = parallel_map(&items, 7, |x| x * x);
        assert_eq!(one, many);
        assert!(parallel_map(&Vec::<u64>::new(), 4, |x| *x).is_empty());
    }
}
