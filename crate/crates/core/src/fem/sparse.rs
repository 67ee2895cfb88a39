use std::collections::BTreeMap;

/// Compressed sparse row matrix, square.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed in a
/// fixed order so assembly is deterministic.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, capacity: usize) -> Self {
        Self { n, entries: Vec::with_capacity(capacity) }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix {
        // stable sort keeps insertion order among duplicates
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n: self.n, row_ptr, col_idx, values }
    }
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self::diagonal_matrix(&vec![1.0; n])
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        let n = diag.len();
        CsrMatrix { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: diag.to_vec() }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut b = TripletBuilder::new(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.add(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &CsrMatrix, factor: f64) -> Self {
        assert_eq!(self.n, other.n);
        let mut b = TripletBuilder::with_capacity(self.n, self.nnz() + other.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                b.add(i, j, v);
            }
            for (j, v) in other.row(i) {
                b.add(i, j, factor * v);
            }
        }
        b.build()
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.n, other.n);
        let mut b = TripletBuilder::new(self.n);
        for i in 0..self.n {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for (k, a) in self.row(i) {
                for (j, v) in other.row(k) {
                    *acc.entry(j).or_insert(0.0) += a * v;
                }
            }
            for (j, v) in acc {
                b.add(i, j, v);
            }
        }
        b.build()
    }

    /// `self * diag(d)`.
    pub fn scale_columns(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for (v, &c) in out.values.iter_mut().zip(&out.col_idx) {
            *v *= d[c];
        }
        out
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Symmetric operator with Dirichlet constraints eliminated.
///
/// Constrained rows and columns are zeroed except the diagonal, which keeps
/// its original value. The couplings removed from free rows are folded into
/// `lift`, which the solver subtracts from the right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSystem {
    matrix: CsrMatrix,
    constraints: Vec<Option<f64>>,
    lift: Vec<f64>,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix) -> Self {
        let n = matrix.size();
        Self { matrix, constraints: vec![None; n], lift: vec![0.0; n] }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.size()
    }

    pub fn constraint(&self, dof: usize) -> Option<f64> {
        self.constraints[dof]
    }

    pub fn is_free(&self, dof: usize) -> bool {
        self.constraints[dof].is_none()
    }

    pub fn free_mask(&self) -> Vec<bool> {
        self.constraints.iter().map(Option::is_none).collect()
    }

    pub fn num_free(&self) -> usize {
        self.constraints.iter().filter(|c| c.is_none()).count()
    }

    pub(crate) fn lift(&self) -> &[f64] {
        &self.lift
    }

    /// Prescribes `values[k]` at `dofs[k]` by symmetric row/column elimination.
    pub fn apply_dirichlet(&self, dofs: &[usize], values: &[f64]) -> SparseSystem {
        assert_eq!(dofs.len(), values.len());
        let mut out = self.clone();
        let mut new = vec![None; self.size()];
        for (&d, &g) in dofs.iter().zip(values) {
            new[d] = Some(g);
            out.constraints[d] = Some(g);
        }
        let n = out.size();
        let CsrMatrix { values: ref mut vals, ref col_idx, ref row_ptr, .. } = out.matrix;
        for i in 0..n {
            let row_constrained = new[i].is_some();
            for k in row_ptr[i]..row_ptr[i + 1] {
                let j = col_idx[k];
                if row_constrained {
                    if j != i {
                        vals[k] = 0.0;
                    }
                } else if let Some(g) = new[j] {
                    out.lift[i] += vals[k] * g;
                    vals[k] = 0.0;
                }
            }
            if row_constrained {
                out.lift[i] = 0.0;
            }
        }
        out
    }

    /// Free-DOF part of `A x`, zero on constrained DOFs.
    pub fn apply_free(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.matrix.matvec(x);
        for (yi, c) in y.iter_mut().zip(&self.constraints) {
            if c.is_some() {
                *yi = 0.0;
            }
        }
        y
    }
}

/// Free-function form of [`SparseSystem::apply_dirichlet`].
pub fn apply_dirichlet(system: &SparseSystem, dofs: &[usize], values: &[f64]) -> SparseSystem {
    system.apply_dirichlet(dofs, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(1, 0, 2.0);
        b.add(0, 0, 3.0);
        let m = b.build();
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0, 0.0], vec![0.0, 3.0, 4.0], vec![5.0, 0.0, 6.0]]);
        let p = a.matmul(&a).to_dense();
        assert_eq!(p, vec![vec![1.0, 8.0, 8.0], vec![20.0, 9.0, 36.0], vec![35.0, 10.0, 36.0]]);
    }

    #[test]
    fn elimination_stays_symmetric() {
        let a = CsrMatrix::from_dense(&[vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 1.0], vec![0.5, 1.0, 2.0]]);
        let s = SparseSystem::new(a).apply_dirichlet(&[1], &[2.0]);
        assert_eq!(s.matrix().asymmetry(), 0.0);
        assert_eq!(s.lift(), &[2.0, 0.0, 2.0]);
        assert_eq!(s.matrix().get(1, 1), 3.0);
        assert!(!s.is_free(1));
        assert_eq!(s.num_free(), 2);
    }

    #[test]
    fn empty_constraint_set_is_identity() {
        let a = CsrMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]);
        let s = SparseSystem::new(a.clone());
        assert_eq!(s.apply_dirichlet(&[], &[]), s);
    }
}
