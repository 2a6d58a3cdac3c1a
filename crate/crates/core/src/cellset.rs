//! Cell sets stored as bitsets over a cropped bounding box of the grid.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSet {
    nx: usize,
    i0: usize,
    j0: usize,
    w: usize,
    hgt: usize,
    bits: Vec<u64>,
    count: usize,
}

impl CellSet {
    pub fn empty(nx: usize) -> Self {
        CellSet { nx, i0: 0, j0: 0, w: 0, hgt: 0, bits: Vec::new(), count: 0 }
    }

    /// Builds a set from cell indices of a grid with row length `nx`.
    pub fn from_cells(nx: usize, cells: impl IntoIterator<Item = usize>) -> Self {
        let cells: Vec<usize> = cells.into_iter().collect();
        if cells.is_empty() {
            return Self::empty(nx);
        }
        let (mut imin, mut imax, mut jmin, mut jmax) = (usize::MAX, 0, usize::MAX, 0);
        for &c in &cells {
            let (i, j) = (c % nx, c / nx);
            imin = imin.min(i);
            imax = imax.max(i);
            jmin = jmin.min(j);
            jmax = jmax.max(j);
        }
        let w = imax - imin + 1;
        let hgt = jmax - jmin + 1;
        let mut s = CellSet { nx, i0: imin, j0: jmin, w, hgt, bits: vec![0; (w * hgt).div_ceil(64)], count: 0 };
        for c in cells {
            s.insert_local(c);
        }
        s
    }

    fn local(&self, cell: usize) -> Option<usize> {
        let (i, j) = (cell % self.nx, cell / self.nx);
        if i < self.i0 || j < self.j0 || i >= self.i0 + self.w || j >= self.j0 + self.hgt {
            return None;
        }
        Some((j - self.j0) * self.w + (i - self.i0))
    }

    fn insert_local(&mut self, cell: usize) {
        let k = self.local(cell).expect("cell inside bounding box");
        let (word, bit) = (k / 64, k % 64);
        if self.bits[word] & (1 << bit) == 0 {
            self.bits[word] |= 1 << bit;
            self.count += 1;
        }
    }

    #[inline]
    pub fn contains(&self, cell: usize) -> bool {
        match self.local(cell) {
            Some(k) => self.bits[k / 64] & (1 << (k % 64)) != 0,
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Inclusive bounding box `(i0, j0, i1, j1)`, `None` when empty.
    pub fn bbox(&self) -> Option<(usize, usize, usize, usize)> {
        (self.count > 0).then(|| (self.i0, self.j0, self.i0 + self.w - 1, self.j0 + self.hgt - 1))
    }

    /// Cells in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut x = word;
            std::iter::from_fn(move || {
                if x == 0 {
                    return None;
                }
                let b = x.trailing_zeros() as usize;
                x &= x - 1;
                Some(wi * 64 + b)
            })
            .map(move |k| (self.j0 + k / self.w) * self.nx + self.i0 + k % self.w)
        })
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        CellSet::from_cells(self.nx, self.iter().chain(other.iter()))
    }

    pub fn union_all<'a>(nx: usize, sets: impl IntoIterator<Item = &'a CellSet>) -> CellSet {
        let mut cells = Vec::new();
        for s in sets {
            cells.extend(s.iter());
        }
        CellSet::from_cells(nx, cells)
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.iter().all(|c| other.contains(c))
    }

    pub fn intersects(&self, other: &CellSet) -> bool {
        let (Some(p), Some(q)) = (self.bbox(), other.bbox()) else {
            return false;
        };
        if p.0 > q.2 || q.0 > p.2 || p.1 > q.3 || q.1 > p.3 {
            return false;
        }
        let (a, b) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        a.iter().any(|c| b.contains(c))
    }
}
