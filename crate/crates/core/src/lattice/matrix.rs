//! Small dense integer matrices and the Smith normal form.

use crate::error::{Error, Result};

/// Row-major integer matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    pub fn diagonal(d: &[i64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[i64]) -> Vec<i64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> i128 {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a: Vec<Vec<i128>> = (0..n)
            .map(|i| self.row(i).iter().map(|&x| x as i128).collect())
            .collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if a[k][k] == 0 {
                match (k + 1..n).find(|&i| a[i][k] != 0) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
            }
            prev = a[k][k];
        }
        sign * a[n - 1][n - 1]
    }

    pub fn is_unimodular(&self) -> bool {
        self.rows == self.cols && self.determinant().abs() == 1
    }

    /// Inverse of a unimodular matrix, exact over the integers.
    pub fn unimodular_inverse(&self) -> Result<Self> {
        let s = snf(self)?;
        if s.diagonal.iter().any(|&d| d != 1) {
            return Err(Error::InvalidConfig("matrix is not unimodular".into()));
        }
        // L M R = I  =>  M^{-1} = R L
        Ok(s.right.mul(&s.left))
    }
}

/// `B = U * diag(d) * U'` with `L B R = diag(d)`, `U = L^{-1}`, `U' = R^{-1}`.
#[derive(Clone, Debug)]
pub struct Snf {
    pub u: IntMatrix,
    pub diagonal: Vec<i64>,
    pub u_prime: IntMatrix,
    /// `U^{-1}`.
    pub left: IntMatrix,
    /// `U'^{-1}`.
    pub right: IntMatrix,
}

struct Work {
    n: usize,
    a: Vec<Vec<i128>>,
    left: Vec<Vec<i128>>,
    u: Vec<Vec<i128>>,
    right: Vec<Vec<i128>>,
    u_prime: Vec<Vec<i128>>,
}

impl Work {
    // row_i += c * row_j
    fn add_row(&mut self, i: usize, j: usize, c: i128) {
        if c == 0 {
            return;
        }
        for k in 0..self.n {
            self.a[i][k] += c * self.a[j][k];
            self.left[i][k] += c * self.left[j][k];
            self.u[k][j] -= c * self.u[k][i];
        }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        self.a.swap(i, j);
        self.left.swap(i, j);
        for row in self.u.iter_mut() {
            row.swap(i, j);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for k in 0..self.n {
            self.a[i][k] = -self.a[i][k];
            self.left[i][k] = -self.left[i][k];
            self.u[k][i] = -self.u[k][i];
        }
    }

    // col_j += c * col_i
    fn add_col(&mut self, j: usize, i: usize, c: i128) {
        if c == 0 {
            return;
        }
        for k in 0..self.n {
            self.a[k][j] += c * self.a[k][i];
            self.right[k][j] += c * self.right[k][i];
            self.u_prime[i][k] -= c * self.u_prime[j][k];
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for row in self.a.iter_mut().chain(self.right.iter_mut()) {
            row.swap(i, j);
        }
        self.u_prime.swap(i, j);
    }
}

fn to_matrix(v: &[Vec<i128>]) -> Result<IntMatrix> {
    let rows = v
        .iter()
        .map(|r| {
            r.iter()
                .map(|&x| {
                    i64::try_from(x).map_err(|_| Error::InvalidConfig("SNF entry overflow".into()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IntMatrix::from_rows(&rows))
}

/// Smith normal form of a nonsingular square integer matrix.
pub fn snf(b: &IntMatrix) -> Result<Snf> {
    assert_eq!(b.rows(), b.cols(), "SNF of a non-square matrix");
    let n = b.rows();
    let eye = |n: usize| -> Vec<Vec<i128>> {
        (0..n)
            .map(|i| (0..n).map(|j| (i == j) as i128).collect())
            .collect()
    };
    let mut w = Work {
        n,
        a: (0..n)
            .map(|i| b.row(i).iter().map(|&x| x as i128).collect())
            .collect(),
        left: eye(n),
        u: eye(n),
        right: eye(n),
        u_prime: eye(n),
    };

    for t in 0..n {
        loop {
            let mut pivot: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    let v = w.a[i][j].abs();
                    if v != 0 && pivot.is_none_or(|(pi, pj)| v < w.a[pi][pj].abs()) {
                        pivot = Some((i, j));
                    }
                }
            }
            let (pi, pj) = pivot.ok_or(Error::SingularMatrix)?;
            w.swap_rows(t, pi);
            w.swap_cols(t, pj);

            let p = w.a[t][t];
            let mut clean = true;
            for i in t + 1..n {
                let q = w.a[i][t].div_euclid(p);
                w.add_row(i, t, -q);
                clean &= w.a[i][t] == 0;
            }
            for j in t + 1..n {
                let q = w.a[t][j].div_euclid(p);
                w.add_col(j, t, -q);
                clean &= w.a[t][j] == 0;
            }
            if !clean {
                continue;
            }
            let offender = (t + 1..n).find(|&i| (t + 1..n).any(|j| w.a[i][j] % p != 0));
            match offender {
                Some(i) => w.add_row(t, i, 1),
                None => break,
            }
        }
        if w.a[t][t] < 0 {
            w.negate_row(t);
        }
    }

    let diagonal = (0..n)
        .map(|i| {
            i64::try_from(w.a[i][i]).map_err(|_| Error::InvalidConfig("SNF entry overflow".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Snf {
        u: to_matrix(&w.u)?,
        diagonal,
        u_prime: to_matrix(&w.u_prime)?,
        left: to_matrix(&w.left)?,
        right: to_matrix(&w.right)?,
    })
}
