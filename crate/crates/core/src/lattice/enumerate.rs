//! Exact closest- and shortest-vector search by depth-first sphere enumeration.

use super::bw16::lex_less;
use super::matrix::IntMatrix;
use crate::error::{Error, Result};

const LLL_DELTA: f64 = 0.99;

/// A basis prepared for enumeration: LLL-reduced vectors and their Gram–Schmidt data.
#[derive(Clone, Debug)]
pub struct Enumerator {
    dim: usize,
    vectors: Vec<Vec<i64>>,
    mu: Vec<Vec<f64>>,
    bstar: Vec<Vec<f64>>,
    bstar_sq: Vec<f64>,
}

fn dot_if(a: &[i64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, y)| x as f64 * y).sum()
}

fn gram_schmidt(v: &[Vec<i64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let n = v.len();
    let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut bsq = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut w: Vec<f64> = v[i].iter().map(|&x| x as f64).collect();
        for j in 0..i {
            mu[i][j] = dot_if(&v[i], &bstar[j]) / bsq[j];
            for (wk, bk) in w.iter_mut().zip(&bstar[j]) {
                *wk -= mu[i][j] * bk;
            }
        }
        mu[i][i] = 1.0;
        bsq.push(w.iter().map(|x| x * x).sum());
        bstar.push(w);
    }
    (bstar, mu, bsq)
}

fn lll(mut v: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    let n = v.len();
    let (_, mut mu, mut bsq) = gram_schmidt(&v);
    let mut k = 1;
    while k < n {
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if q != 0.0 {
                let qi = q as i64;
                let (head, tail) = v.split_at_mut(k);
                for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                    *a -= qi * b;
                }
                for i in 0..=j {
                    mu[k][i] -= q * mu[j][i];
                }
            }
        }
        if bsq[k] >= (LLL_DELTA - mu[k][k - 1] * mu[k][k - 1]) * bsq[k - 1] {
            k += 1;
        } else {
            v.swap(k, k - 1);
            (_, mu, bsq) = gram_schmidt(&v);
            k = (k - 1).max(1);
        }
    }
    v
}

struct Search<'a> {
    e: &'a Enumerator,
    target: Vec<f64>,
    z: Vec<i64>,
    bound: f64,
    best: Option<(Vec<i64>, f64)>,
    shortest: bool,
}

impl Search<'_> {
    fn point(&self) -> Vec<i64> {
        let mut x = vec![0i64; self.e.dim];
        for (zj, bj) in self.z.iter().zip(&self.e.vectors) {
            for (xi, b) in x.iter_mut().zip(bj) {
                *xi += zj * b;
            }
        }
        x
    }

    fn slack(&self) -> f64 {
        1e-9 * (1.0 + self.bound.abs())
    }

    fn leaf(&mut self) {
        if self.shortest && self.z.iter().all(|&z| z == 0) {
            return;
        }
        let x = self.point();
        let d: f64 = if self.shortest {
            x.iter().map(|&v| (v * v) as f64).sum()
        } else {
            x.iter()
                .zip(&self.target)
                .map(|(&a, b)| (a as f64 - b).powi(2))
                .sum()
        };
        let tol = self.slack();
        let replace = match &self.best {
            None => d <= self.bound + tol,
            Some((bx, bd)) => d < bd - tol || ((d - bd).abs() <= tol && lex_less(&x, bx)),
        };
        if replace {
            // Shortest vectors have integral norms, so anything shorter is at least 1 less.
            self.bound = if self.shortest {
                d - 0.5
            } else {
                self.bound.min(d)
            };
            self.best = Some((x, d));
        }
    }

    fn descend(&mut self, level: usize, partial: f64) {
        let e = self.e;
        let n = e.dim;
        let mut center = dot_if_f(&self.target, &e.bstar[level]) / e.bstar_sq[level];
        for j in level + 1..n {
            center -= e.mu[j][level] * self.z[j] as f64;
        }
        let room = self.bound + self.slack() - partial;
        if room < 0.0 {
            return;
        }
        let r = (room / e.bstar_sq[level]).sqrt();
        let lo = (center - r).ceil() as i64;
        let hi = (center + r).floor() as i64;
        for zi in lo..=hi {
            let d = partial + e.bstar_sq[level] * (zi as f64 - center).powi(2);
            if d > self.bound + self.slack() {
                continue;
            }
            self.z[level] = zi;
            if level == 0 {
                self.leaf();
            } else {
                self.descend(level - 1, d);
            }
        }
        self.z[level] = 0;
    }
}

fn dot_if_f(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Enumerator {
    /// Prepare the lattice spanned by the columns of `basis`.
    pub fn new(basis: &IntMatrix) -> Self {
        assert_eq!(basis.rows(), basis.cols(), "square basis required");
        let dim = basis.cols();
        let vectors = lll((0..dim).map(|j| basis.column(j)).collect());
        let (bstar, mu, bstar_sq) = gram_schmidt(&vectors);
        assert!(bstar_sq.iter().all(|&b| b > 1e-9), "basis is singular");
        Self {
            dim,
            vectors,
            mu,
            bstar,
            bstar_sq,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Exact closest point within `radius`; lexicographically smallest on ties.
    pub fn closest(&self, y: &[f64], radius: f64) -> Result<Vec<i64>> {
        assert_eq!(y.len(), self.dim, "dimension mismatch");
        let mut s = Search {
            e: self,
            target: y.to_vec(),
            z: vec![0; self.dim],
            bound: radius * radius,
            best: None,
            shortest: false,
        };
        s.descend(self.dim - 1, 0.0);
        s.best.map(|(x, _)| x).ok_or(Error::NoPointInRadius(radius))
    }

    /// Minimum squared norm and a vector attaining it.
    pub fn shortest(&self) -> (i64, Vec<i64>) {
        let start = self
            .vectors
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<i64>())
            .min()
            .unwrap();
        let mut s = Search {
            e: self,
            target: vec![0.0; self.dim],
            z: vec![0; self.dim],
            bound: start as f64,
            best: None,
            shortest: true,
        };
        s.descend(self.dim - 1, 0.0);
        let (x, _) = s
            .best
            .expect("a basis vector is always within the initial bound");
        (x.iter().map(|v| v * v).sum(), x)
    }
}

/// Exact CVP by sphere enumeration; errors if no point lies within `radius`.
pub fn cvp_bruteforce(y: &[f64], basis: &IntMatrix, radius: f64) -> Result<Vec<i64>> {
    Enumerator::new(basis).closest(y, radius)
}

/// Minimum squared norm of the lattice and a vector attaining it.
pub fn shortest_vector(basis: &IntMatrix) -> (i64, Vec<i64>) {
    Enumerator::new(basis).shortest()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_lattice_matches_rounding() {
        let b = IntMatrix::identity(4);
        let y = [0.2, -1.7, 3.49, 10.01];
        assert_eq!(cvp_bruteforce(&y, &b, 2.0).unwrap(), vec![0, -2, 3, 10]);
        assert_eq!(
            cvp_bruteforce(&[0.5, 0.0, 0.0, 0.0], &b, 1.0).unwrap(),
            vec![0, 0, 0, 0]
        );
        assert_eq!(shortest_vector(&b).0, 1);
    }

    #[test]
    fn radius_too_small_is_reported() {
        let b = IntMatrix::diagonal(&[4, 4]);
        let err = cvp_bruteforce(&[2.0, 2.0], &b, 1.0).unwrap_err();
        assert_eq!(err, Error::NoPointInRadius(1.0));
    }

    #[test]
    fn skewed_basis_finds_true_minimum() {
        let b = IntMatrix::from_rows(&[vec![1, 100], vec![0, 1]]);
        let (n, v) = shortest_vector(&b);
        assert_eq!(n, 1);
        assert_eq!(v.iter().map(|x| x.abs()).sum::<i64>(), 1);
        let y = [100.4, 0.9];
        assert_eq!(cvp_bruteforce(&y, &b, 1.0).unwrap(), vec![100, 1]);
    }

    #[test]
    fn lll_preserves_lattice() {
        let b = IntMatrix::from_rows(&[vec![3, 7, 1], vec![5, 1, 2], vec![0, 4, 9]]);
        let red = lll((0..3).map(|j| b.column(j)).collect());
        let r = IntMatrix::from_rows(&red).transpose();
        let det = b.determinant();
        assert_eq!(r.determinant().abs(), det.abs());
        // Cramer: each reduced vector has integral coordinates in the old basis.
        for v in &red {
            for j in 0..3 {
                let mut m = b.clone();
                for (i, &x) in v.iter().enumerate() {
                    m.set(i, j, x);
                }
                assert_eq!(m.determinant() % det, 0);
            }
        }
    }
}
