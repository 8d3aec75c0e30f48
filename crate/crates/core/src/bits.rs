//! Packed square boolean matrices.

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct BitMatrix {
    n: usize,
    words: usize,
    data: Vec<u64>,
}

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let words = words_for(n);
        BitMatrix {
            n,
            words,
            data: vec![0; n * words],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        (self.data[i * self.words + j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        debug_assert!(i < self.n && j < self.n);
        let w = &mut self.data[i * self.words + j / 64];
        let mask = 1u64 << (j % 64);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.words..(i + 1) * self.words]
    }

    /// `row[dst] |= row[src]`.
    pub fn or_row(&mut self, dst: usize, src: usize) {
        if dst == src {
            return;
        }
        let w = self.words;
        let (d, s) = if dst < src {
            let (a, b) = self.data.split_at_mut(src * w);
            (&mut a[dst * w..(dst + 1) * w], &b[..w])
        } else {
            let (a, b) = self.data.split_at_mut(dst * w);
            (&mut b[..w], &a[src * w..(src + 1) * w])
        };
        for (x, y) in d.iter_mut().zip(s) {
            *x |= *y;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn row_count(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::new(self.n);
        for i in 0..self.n {
            for j in iter_bits(self.row(i)) {
                t.set(j, i, true);
            }
        }
        t
    }

    /// Warshall closure on packed rows.
    pub fn transitive_closure(&mut self) {
        for k in 0..self.n {
            for i in 0..self.n {
                if self.get(i, k) {
                    self.or_row(i, k);
                }
            }
        }
    }
}

/// Iterates the indices of set bits in a packed row.
pub(crate) fn iter_bits(row: &[u64]) -> impl Iterator<Item = usize> + '_ {
    row.iter().enumerate().flat_map(|(wi, &w)| {
        let mut rest = w;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + b)
            }
        })
    })
}

/// A row with the low `n` bits set.
pub(crate) fn full_row(n: usize) -> Vec<u64> {
    let mut row = vec![u64::MAX; words_for(n)];
    if !n.is_multiple_of(64) {
        if let Some(last) = row.last_mut() {
            *last = (1u64 << (n % 64)) - 1;
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_and_iterate() {
        let mut m = BitMatrix::new(130);
        m.set(3, 0, true);
        m.set(3, 64, true);
        m.set(3, 129, true);
        assert!(m.get(3, 64));
        assert!(!m.get(3, 65));
        assert_eq!(iter_bits(m.row(3)).collect::<Vec<_>>(), vec![0, 64, 129]);
        m.set(3, 64, false);
        assert_eq!(m.count_ones(), 2);
        assert_eq!(m.transpose().row_count(129), 1);
    }

    #[test]
    fn closure_of_path() {
        let mut m = BitMatrix::new(70);
        for i in 0..69 {
            m.set(i, i + 1, true);
        }
        m.transitive_closure();
        assert_eq!(m.count_ones(), 70 * 69 / 2);
        assert!(m.get(0, 69));
        assert!(!m.get(69, 0));
    }

    #[test]
    fn full_row_masks_tail() {
        assert_eq!(full_row(3), vec![0b111]);
        assert_eq!(full_row(64), vec![u64::MAX]);
        assert_eq!(full_row(65), vec![u64::MAX, 1]);
        assert!(full_row(0).is_empty());
    }
}
