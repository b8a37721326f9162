//! Left-looking sparse LU with threshold partial pivoting.
//!
//! Column `k` of the factorization is obtained by a sparse triangular solve
//! against the columns of `L` computed so far; its nonzero pattern is the set
//! reachable in the graph of `L` from the pattern of the input column.

use super::{nested_dissection, CompressedMatrix};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Column preordering applied before factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnOrdering {
    Natural,
    NestedDissection,
}

#[derive(Debug, Clone, Copy)]
pub struct LuOptions {
    pub ordering: ColumnOrdering,
    /// A diagonal candidate is kept as pivot when its magnitude is at least
    /// this fraction of the largest candidate in the column.
    pub pivot_threshold: f64,
    /// Pivots at or below `singular_tolerance * max|a_ij|` are rejected.
    pub singular_tolerance: f64,
}

impl Default for LuOptions {
    fn default() -> Self {
        Self {
            ordering: ColumnOrdering::NestedDissection,
            pivot_threshold: 0.1,
            singular_tolerance: 1e-14,
        }
    }
}

/// Factors `P A Q = L U` of a square sparse matrix.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    /// `pinv[i]` is the elimination step at which row `i` was pivotal.
    pinv: Vec<usize>,
    /// `q[k]` is the column eliminated at step `k`.
    q: Vec<usize>,
    // L is unit lower triangular, diagonal stored first in each column.
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    // U is upper triangular, diagonal stored last in each column.
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

struct Workspace {
    x: Vec<f64>,
    mark: Vec<usize>,
    stack: Vec<usize>,
    child: Vec<usize>,
    reach: Vec<usize>,
}

impl SparseLu {
    pub fn factorize(a: &CompressedMatrix, options: &LuOptions) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NotSquare {
                nrows: a.nrows(),
                ncols: a.ncols(),
            });
        }
        let n = a.nrows();
        let q = match options.ordering {
            ColumnOrdering::Natural => (0..n).collect(),
            ColumnOrdering::NestedDissection => nested_dissection(a),
        };
        // Rows of the transpose are the columns of `a`.
        let cols = a.transpose();
        let floor = options.singular_tolerance * a.max_abs();

        let mut lu = SparseLu {
            n,
            pinv: vec![NONE; n],
            q,
            l_ptr: Vec::with_capacity(n + 1),
            l_idx: Vec::with_capacity(4 * a.nnz()),
            l_val: Vec::with_capacity(4 * a.nnz()),
            u_ptr: Vec::with_capacity(n + 1),
            u_idx: Vec::with_capacity(4 * a.nnz()),
            u_val: Vec::with_capacity(4 * a.nnz()),
        };
        let mut ws = Workspace {
            x: vec![0.0; n],
            mark: vec![NONE; n],
            stack: Vec::new(),
            child: Vec::new(),
            reach: Vec::with_capacity(n),
        };

        for k in 0..n {
            lu.l_ptr.push(lu.l_idx.len());
            lu.u_ptr.push(lu.u_idx.len());
            let col = lu.q[k];
            lu.lower_solve(&cols, col, k, &mut ws);

            let mut ipiv = NONE;
            let mut largest = -1.0;
            for &i in ws.reach.iter().rev() {
                if lu.pinv[i] == NONE {
                    let t = ws.x[i].abs();
                    if t > largest {
                        largest = t;
                        ipiv = i;
                    }
                } else {
                    lu.u_idx.push(lu.pinv[i]);
                    lu.u_val.push(ws.x[i]);
                }
            }
            if ipiv == NONE || !(largest > floor) {
                return Err(Error::SingularPivot { step: k, column: col });
            }
            if lu.pinv[col] == NONE
                && ws.mark[col] == k
                && ws.x[col].abs() >= options.pivot_threshold * largest
            {
                ipiv = col;
            }
            let pivot = ws.x[ipiv];
            lu.u_idx.push(k);
            lu.u_val.push(pivot);
            lu.pinv[ipiv] = k;
            lu.l_idx.push(ipiv);
            lu.l_val.push(1.0);
            for &i in ws.reach.iter().rev() {
                if lu.pinv[i] == NONE {
                    lu.l_idx.push(i);
                    lu.l_val.push(ws.x[i] / pivot);
                }
                ws.x[i] = 0.0;
            }
        }
        lu.l_ptr.push(lu.l_idx.len());
        lu.u_ptr.push(lu.u_idx.len());
        for i in lu.l_idx.iter_mut() {
            *i = lu.pinv[*i];
        }
        Ok(lu)
    }

    /// Scatters column `col` of the input into `ws.x` and solves with the
    /// first `k` columns of `L`. Row indices of `L` are still original rows
    /// at this point. `ws.reach` receives the pattern in reverse
    /// topological order.
    fn lower_solve(&self, cols: &CompressedMatrix, col: usize, k: usize, ws: &mut Workspace) {
        ws.reach.clear();
        for (i, _) in cols.row(col) {
            if ws.mark[i] != k {
                self.dfs(i, k, ws);
            }
        }
        for (i, v) in cols.row(col) {
            ws.x[i] += v;
        }
        for &j in ws.reach.iter().rev() {
            let step = self.pinv[j];
            if step == NONE {
                continue;
            }
            let xj = ws.x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.l_ptr[step] + 1..self.l_ptr[step + 1] {
                ws.x[self.l_idx[p]] -= self.l_val[p] * xj;
            }
        }
    }

    fn dfs(&self, root: usize, k: usize, ws: &mut Workspace) {
        ws.stack.clear();
        ws.child.clear();
        ws.stack.push(root);
        ws.mark[root] = k;
        ws.child.push(self.first_child(root));
        while let Some(&j) = ws.stack.last() {
            let step = self.pinv[j];
            let end = if step == NONE { 0 } else { self.l_ptr[step + 1] };
            let top = ws.stack.len() - 1;
            let mut descended = false;
            while ws.child[top] < end {
                let i = self.l_idx[ws.child[top]];
                ws.child[top] += 1;
                if ws.mark[i] != k {
                    ws.mark[i] = k;
                    ws.stack.push(i);
                    ws.child.push(self.first_child(i));
                    descended = true;
                    break;
                }
            }
            if !descended {
                ws.stack.pop();
                ws.child.pop();
                ws.reach.push(j);
            }
        }
    }

    fn first_child(&self, row: usize) -> usize {
        match self.pinv[row] {
            NONE => 0,
            step => self.l_ptr[step] + 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L` and `U` together.
    pub fn factor_nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x)?;
        Ok(x)
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) -> Result<()> {
        if b.len() != self.n {
            return Err(Error::SizeMismatch {
                what: "right-hand side",
                expected: self.n,
                found: b.len(),
            });
        }
        if x.len() != self.n {
            return Err(Error::SizeMismatch {
                what: "solution",
                expected: self.n,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        for (i, &bi) in b.iter().enumerate() {
            y[self.pinv[i]] = bi;
        }
        for k in 0..self.n {
            let yk = y[k];
            if yk != 0.0 {
                for p in self.l_ptr[k] + 1..self.l_ptr[k + 1] {
                    y[self.l_idx[p]] -= self.l_val[p] * yk;
                }
            }
        }
        for k in (0..self.n).rev() {
            let last = self.u_ptr[k + 1] - 1;
            y[k] /= self.u_val[last];
            let yk = y[k];
            if yk != 0.0 {
                for p in self.u_ptr[k]..last {
                    y[self.u_idx[p]] -= self.u_val[p] * yk;
                }
            }
        }
        for (k, &col) in self.q.iter().enumerate() {
            x[col] = y[k];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(n: usize, entries: &[(usize, usize, f64)]) -> CompressedMatrix {
        let mut t = TripletMatrix::new(n, n);
        for &(i, j, v) in entries {
            t.push(i, j, v);
        }
        t.compress().unwrap()
    }

    fn residual(a: &CompressedMatrix, x: &[f64], b: &[f64]) -> f64 {
        a.matvec(x)
            .iter()
            .zip(b)
            .map(|(ax, bi)| (ax - bi).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_solves_exactly() {
        let a = CompressedMatrix::identity(7);
        let lu = SparseLu::factorize(&a, &LuOptions::default()).unwrap();
        let b: Vec<f64> = (0..7).map(|i| i as f64 - 2.5).collect();
        assert_eq!(lu.solve(&b).unwrap(), b);
    }

    #[test]
    fn zero_diagonal_needs_row_exchange() {
        let a = dense(2, &[(0, 1, 2.0), (1, 0, 3.0)]);
        for ordering in [ColumnOrdering::Natural, ColumnOrdering::NestedDissection] {
            let opts = LuOptions {
                ordering,
                ..LuOptions::default()
            };
            let lu = SparseLu::factorize(&a, &opts).unwrap();
            let x = lu.solve(&[4.0, 9.0]).unwrap();
            assert!((x[0] - 3.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn random_sparse_system_has_small_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100;
        let mut entries = Vec::new();
        for i in 0..n {
            entries.push((i, i, rng.gen_range(0.5..2.0)));
            for _ in 0..4 {
                let j = rng.gen_range(0..n);
                entries.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
        let a = dense(n, &entries);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lu = SparseLu::factorize(&a, &LuOptions::default()).unwrap();
        let x = lu.solve(&b).unwrap();
        assert!(residual(&a, &x, &b) < 1e-10 * a.norm_inf());
    }

    #[test]
    fn saddle_point_with_zero_block() {
        // [[2, 0, 1], [0, 2, -1], [1, -1, 0]]
        let a = dense(
            3,
            &[
                (0, 0, 2.0),
                (0, 2, 1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 0, 1.0),
                (2, 1, -1.0),
            ],
        );
        let b = [1.0, 2.0, 3.0];
        let lu = SparseLu::factorize(&a, &LuOptions::default()).unwrap();
        let x = lu.solve(&b).unwrap();
        assert!(residual(&a, &x, &b) < 1e-14);
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        // Rows 1 and 2 are identical.
        let a = dense(
            3,
            &[
                (0, 0, 1.0),
                (1, 1, 1.0),
                (1, 2, 1.0),
                (2, 1, 1.0),
                (2, 2, 1.0),
            ],
        );
        let opts = LuOptions {
            ordering: ColumnOrdering::Natural,
            ..LuOptions::default()
        };
        match SparseLu::factorize(&a, &opts) {
            Err(Error::SingularPivot { step, column }) => {
                assert_eq!(step, 2);
                assert_eq!(column, 2);
            }
            other => panic!("expected singular pivot, got {other:?}"),
        }
    }

    #[test]
    fn numerically_singular_is_rejected() {
        let eps = 1e-17;
        let a = dense(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0 + eps)]);
        assert!(matches!(
            SparseLu::factorize(&a, &LuOptions::default()),
            Err(Error::SingularPivot { .. })
        ));
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let mut entries = Vec::new();
        for i in 0..n {
            entries.push((i, i, 4.0));
            if i + 1 < n {
                entries.push((i, i + 1, rng.gen_range(-1.0..1.0)));
                entries.push((i + 1, i, rng.gen_range(-1.0..1.0)));
            }
        }
        let a = dense(n, &entries);
        let lu = SparseLu::factorize(&a, &LuOptions::default()).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x1 = lu.solve(&b).unwrap();
        let x2 = lu.solve(&b).unwrap();
        assert_eq!(x1, x2);
    }

    #[test]
    fn wrong_rhs_length_is_an_error() {
        let lu = SparseLu::factorize(&CompressedMatrix::identity(3), &LuOptions::default()).unwrap();
        assert!(lu.solve(&[1.0]).is_err());
    }
}
