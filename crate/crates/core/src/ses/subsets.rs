/// Subsets of a sorted slice with at most `max_size` elements, smallest
/// first, lexicographic within a size. The empty set comes first.
pub struct Subsets<'a> {
    items: &'a [usize],
    max_size: usize,
    /// Positions into `items` of the current subset; `None` when exhausted.
    idx: Option<Vec<usize>>,
}

impl<'a> Subsets<'a> {
    pub fn new(items: &'a [usize], max_size: usize) -> Self {
        Subsets {
            items,
            max_size: max_size.min(items.len()),
            idx: Some(Vec::new()),
        }
    }

    fn advance(&mut self) {
        let n = self.items.len();
        let Some(idx) = self.idx.as_mut() else { return };
        let k = idx.len();
        // rightmost position that can still move
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                return;
            }
        }
        if k < self.max_size {
            *idx = (0..=k).collect();
        } else {
            self.idx = None;
        }
    }
}

impl Iterator for Subsets<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.idx.as_ref()?.iter().map(|&i| self.items[i]).collect();
        self.advance();
        Some(out)
    }
}
