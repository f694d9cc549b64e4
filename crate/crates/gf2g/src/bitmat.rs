//! Dense GF(2) matrices with just enough linear algebra for kernel
//! computations: row reduction and a right-nullspace basis.

/// A rows x cols matrix over GF(2), each row a packed bitset.
#[derive(Debug, Clone)]
pub(crate) struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64).max(1);
        BitMatrix {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.words_per_row + c / 64] >> (c % 64) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, bit: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = r * self.words_per_row + c / 64;
        if bit {
            self.data[w] |= 1 << (c % 64);
        } else {
            self.data[w] &= !(1 << (c % 64));
        }
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        let (s, d) = (src * self.words_per_row, dst * self.words_per_row);
        for i in 0..self.words_per_row {
            let v = self.data[s + i];
            self.data[d + i] ^= v;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.words_per_row {
            self.data
                .swap(a * self.words_per_row + i, b * self.words_per_row + i);
        }
    }

    /// Reduces self to reduced row echelon form in place; returns, per
    /// column, the pivot row owning it.
    fn rref(&mut self) -> Vec<Option<usize>> {
        let mut pivot_of_col = vec![None; self.cols];
        let mut next_row = 0;
        for (col, pivot) in pivot_of_col.iter_mut().enumerate() {
            if next_row == self.rows {
                break;
            }
            let Some(r) = (next_row..self.rows).find(|&r| self.get(r, col)) else {
                continue;
            };
            self.swap_rows(next_row, r);
            for other in 0..self.rows {
                if other != next_row && self.get(other, col) {
                    self.xor_row_into(next_row, other);
                }
            }
            *pivot = Some(next_row);
            next_row += 1;
        }
        pivot_of_col
    }

    /// A basis of {x : Ax = 0}, one vector per free column. Deterministic:
    /// free columns are visited in increasing order.
    pub fn nullspace(&self) -> Vec<Vec<bool>> {
        let mut m = self.clone();
        let pivot_of_col = m.rref();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_of_col[free].is_some() {
                continue;
            }
            let mut v = vec![false; self.cols];
            v[free] = true;
            for col in 0..self.cols {
                if let Some(r) = pivot_of_col[col] {
                    v[col] = m.get(r, free);
                }
            }
            basis.push(v);
        }
        basis
    }

}

#[cfg(test)]
impl BitMatrix {
    fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().iter().flatten().count()
    }

    fn mul_vec(&self, x: &[bool]) -> Vec<bool> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| (0..self.cols).filter(|&c| x[c]).fold(false, |acc, c| acc ^ self.get(r, c)))
            .collect()
    }
}
