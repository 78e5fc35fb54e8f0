use crate::field::Field;
use crate::matrix::SparseSymmetricMatrix;
use crate::spectral::Inertia;

/// A full symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric<F: Field> {
    field: F,
    a: Vec<Vec<F::Elem>>,
}

impl<F: Field> DenseSymmetric<F> {
    pub fn zeros(field: F, n: usize) -> Self {
        let a = vec![vec![field.zero(); n]; n];
        DenseSymmetric { field, a }
    }

    pub fn from_sparse(m: &SparseSymmetricMatrix<F>) -> Self {
        let mut d = Self::zeros(m.field().clone(), m.order());
        for (u, v, x) in m.entries() {
            d.a[u - 1][v - 1] = x.clone();
            d.a[v - 1][u - 1] = x.clone();
        }
        d
    }

    /// From a full row-major grid; the grid must be symmetric.
    pub fn from_rows(field: F, rows: Vec<Vec<F::Elem>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "grid must be square");
        for i in 0..n {
            for j in 0..i {
                assert!(rows[i][j] == rows[j][i], "grid must be symmetric");
            }
        }
        DenseSymmetric { field, a: rows }
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    /// Entry at 1-based `(u, v)`.
    pub fn get(&self, u: usize, v: usize) -> &F::Elem {
        &self.a[u - 1][v - 1]
    }

    pub fn rows(&self) -> &[Vec<F::Elem>] {
        &self.a
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.order();
        (0..n).all(|i| (0..n).all(|j| i == j || self.field.is_zero(&self.a[i][j])))
    }

    /// Row `t` += `c` row `s`, then column `t` += `c` column `s` (0-based).
    pub(crate) fn add_multiple(&mut self, t: usize, s: usize, c: &F::Elem) {
        let f = &self.field;
        let n = self.order();
        for j in 0..n {
            let x = f.mul(c, &self.a[s][j]);
            self.a[t][j] = f.add(&self.a[t][j], &x);
        }
        for i in 0..n {
            let x = f.mul(c, &self.a[i][s]);
            self.a[i][t] = f.add(&self.a[i][t], &x);
        }
    }

    /// Exchanges rows and columns `i`, `j` (0-based).
    pub(crate) fn swap(&mut self, i: usize, j: usize) {
        self.a.swap(i, j);
        for row in &mut self.a {
            row.swap(i, j);
        }
    }
}

/// Diagonal values (in elimination order, not by vertex) and the quantities
/// derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseDiagonalization<E> {
    pub diagonal: Vec<E>,
    pub inertia: Inertia,
    pub rank: usize,
    pub determinant: E,
}

/// Textbook symmetric elimination with symmetric pivoting. When the
/// remaining diagonal is zero but an off-diagonal entry `a_kj` is not, adding
/// row and column `j` to `k` makes the diagonal entry `2 a_kj`.
pub fn dense_congruent_diagonalize<F: Field>(
    matrix: &DenseSymmetric<F>,
) -> DenseDiagonalization<F::Elem> {
    let mut m = matrix.clone();
    let n = m.order();
    let f = matrix.field.clone();
    for k in 0..n {
        if f.is_zero(&m.a[k][k]) {
            if let Some(j) = (k + 1..n).find(|&j| !f.is_zero(&m.a[j][j])) {
                m.swap(k, j);
            } else if let Some(j) = (k + 1..n).find(|&j| !f.is_zero(&m.a[k][j])) {
                m.add_multiple(k, j, &f.one());
            } else {
                continue;
            }
        }
        let pivot = m.a[k][k].clone();
        for i in k + 1..n {
            if f.is_zero(&m.a[i][k]) {
                continue;
            }
            let c = f.neg(&f.div(&m.a[i][k], &pivot).expect("nonzero pivot"));
            m.add_multiple(i, k, &c);
            m.a[i][k] = f.zero();
            m.a[k][i] = f.zero();
        }
    }
    let diagonal: Vec<F::Elem> = (0..n).map(|i| m.a[i][i].clone()).collect();
    let inertia = Inertia::from_signs(diagonal.iter().map(|x| f.sign(x)));
    let determinant = diagonal.iter().fold(f.one(), |acc, x| f.mul(&acc, x));
    DenseDiagonalization {
        rank: inertia.rank(),
        inertia,
        determinant,
        diagonal,
    }
}
