//! Barnes–Wall lattice in dimension 16, as `RM(1,4) + 2·D16`.

use std::sync::OnceLock;

use super::matrix::IntMatrix;
use super::{round_half_down, OpCounter};

pub const DIM: usize = 16;

/// Generator matrix, basis vectors as columns.
#[rustfmt::skip]
pub const BASIS: [[i64; DIM]; DIM] = [
    [1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 4],
    [1, 1, 1, 1, 0, 2, 2, 0, 2, 0, 0, 2, 0, 0, 0, 0],
    [1, 1, 1, 0, 1, 2, 0, 2, 0, 2, 0, 0, 2, 0, 0, 0],
    [1, 1, 1, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 0, 1, 1, 0, 2, 2, 0, 0, 2, 0, 0, 2, 0, 0],
    [1, 1, 0, 1, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 0, 0, 1, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 1, 1, 1, 0, 0, 0, 2, 2, 2, 0, 0, 0, 2, 0],
    [1, 0, 1, 1, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 1, 0, 1, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0],
    [1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0],
    [1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
];

/// Rectangular-form basis `U·diag(π)`.
#[rustfmt::skip]
pub const B_HAT: [[i64; DIM]; DIM] = [
    [1,  0,  0,  0,  0, 0, 0, 0, 0, 0, 0,  0, 0, 0, 0, 0],
    [1, -1,  0,  0,  0, 0, 0, 0, 0, 0, 0,  0, 0, 0, 0, 0],
    [1,  0, -1,  0,  0, 0, 0, 0, 0, 0, 0,  0, 0, 0, 0, 0],
    [1, -1, -1,  0,  0, 0, 0, 2, 2, 0, 0,  0, 0, 0, 0, 0],
    [1,  0,  0, -1,  0, 0, 0, 0, 0, 0, 0,  0, 0, 0, 0, 0],
    [1, -1,  0, -1,  0, 2, 0, 0, 0, 0, 0,  0, 0, 0, 0, 0],
    [1,  0, -1, -1,  0, 0, 2, 0, 0, 0, 0,  0, 0, 0, 0, 0],
    [1, -1, -1, -1,  0, 2, 2, 2, 0, 0, 0,  0, 0, 0, 0, 0],
    [1,  0,  0,  0, -1, 0, 0, 0, 0, 0, 0,  0, 0, 0, 0, 0],
    [1, -1,  0,  0, -1, 0, 0, 0, 0, 2, 0,  0, 0, 0, 0, 0],
    [1,  0, -1,  0, -1, 0, 0, 0, 0, 0, 2,  0, 0, 0, 0, 0],
    [1, -1, -1,  0, -1, 0, 0, 2, 2, 2, 2, -2, 0, 0, 0, 0],
    [1,  0,  0, -1, -1, 0, 0, 0, 0, 0, 2, -2, 2, 0, 0, 0],
    [1, -1,  0, -1, -1, 2, 0, 0, 0, 2, 2, -2, 0, 2, 0, 0],
    [1,  0, -1, -1, -1, 0, 2, 0, 0, 0, 2,  0, 2, 0, 2, 0],
    [1, -1, -1, -1, -1, 2, 2, 2, 0, 2, 2, -2, 0, 2, 2, 4],
];

pub const PI: [i64; DIM] = [1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 4];

pub fn basis() -> IntMatrix {
    IntMatrix::from_rows(&BASIS.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

pub fn b_hat() -> IntMatrix {
    IntMatrix::from_rows(&B_HAT.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

/// The 32 codewords of RM(1,4) spanned by the first five basis columns mod 2.
pub fn rm_codewords() -> &'static [[i64; DIM]; 32] {
    static WORDS: OnceLock<[[i64; DIM]; 32]> = OnceLock::new();
    WORDS.get_or_init(|| {
        let mut words = [[0i64; DIM]; 32];
        for (mask, word) in words.iter_mut().enumerate() {
            for (j, row) in BASIS.iter().enumerate() {
                let bit = (0..5)
                    .filter(|&g| mask >> g & 1 == 1)
                    .map(|g| row[g])
                    .sum::<i64>();
                word[j] = bit & 1;
            }
        }
        words
    })
}

#[inline]
fn select_i(take: bool, a: i64, b: i64) -> i64 {
    let m = -(take as i64);
    (a & m) | (b & !m)
}

#[inline]
fn select_f(take: bool, a: f64, b: f64) -> f64 {
    let m = (take as u64).wrapping_neg();
    f64::from_bits((a.to_bits() & m) | (b.to_bits() & !m))
}

/// `true` iff `a` precedes `b` lexicographically; scans every coordinate.
#[inline]
pub(crate) fn lex_less(a: &[i64], b: &[i64]) -> bool {
    let mut decided = false;
    let mut less = false;
    for (x, y) in a.iter().zip(b) {
        let differs = x != y;
        less |= !decided & differs & (x < y);
        decided |= differs;
    }
    less
}

/// Closest point of D16 (integer vectors with even sum).
fn closest_d16(t: &[f64; DIM], ops: &mut OpCounter) -> [i64; DIM] {
    let mut f = [0i64; DIM];
    let mut worst = 0usize;
    let mut worst_err = -1.0f64;
    let mut worst_dir = 0i64;
    let mut parity = 0i64;
    for i in 0..DIM {
        f[i] = round_half_down(t[i]);
        let e = t[i] - f[i] as f64;
        let mag = e.abs();
        let bigger = mag > worst_err;
        worst = select_i(bigger, i as i64, worst as i64) as usize;
        worst_err = select_f(bigger, mag, worst_err);
        worst_dir = select_i(bigger, select_i(e > 0.0, 1, -1), worst_dir);
        parity ^= f[i] & 1;
        ops.tick(5);
    }
    for (i, fi) in f.iter_mut().enumerate() {
        *fi += worst_dir & -((i == worst) as i64 & parity);
        ops.tick(1);
    }
    f
}

/// Closest point of the lattice spanned by [`BASIS`]; constant operation count.
pub fn closest_point(y: &[f64], ops: &mut OpCounter) -> Vec<i64> {
    assert_eq!(y.len(), DIM, "BW16 decoder needs a 16-vector");
    let tol = 1e-9 * (1.0 + y.iter().map(|v| v * v).sum::<f64>());
    let mut best = [0i64; DIM];
    let mut best_d = f64::INFINITY;
    for c in rm_codewords() {
        let mut t = [0f64; DIM];
        for i in 0..DIM {
            t[i] = (y[i] - c[i] as f64) * 0.5;
            ops.tick(1);
        }
        let z = closest_d16(&t, ops);
        let mut cand = [0i64; DIM];
        let mut d = 0.0;
        for i in 0..DIM {
            cand[i] = c[i] + 2 * z[i];
            let e = y[i] - cand[i] as f64;
            d += e * e;
            ops.tick(3);
        }
        let tie = (d - best_d).abs() <= tol;
        let take = (d < best_d - tol) | (tie & lex_less(&cand, &best));
        ops.tick(DIM as u64);
        for i in 0..DIM {
            best[i] = select_i(take, cand[i], best[i]);
        }
        best_d = select_f(take, d, best_d);
        ops.tick(DIM as u64 + 1);
    }
    best.to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn in_rm_plus_2d16(x: &[i64]) -> bool {
        let red: Vec<i64> = x.iter().map(|v| v.rem_euclid(2)).collect();
        rm_codewords().iter().any(|c| {
            c.iter().zip(&red).all(|(a, b)| a == b)
                && x.iter().zip(c).map(|(v, ci)| (v - ci) / 2).sum::<i64>() % 2 == 0
        })
    }

    #[test]
    fn basis_is_rm_plus_twice_d16() {
        let b = basis();
        for j in 0..DIM {
            assert!(in_rm_plus_2d16(&b.column(j)), "column {j}");
        }
        // RM(1,4) has 2^5 words, so [Z^16 : RM + 2·D16] = 2^16 / 2^5 * 2 = 2^12.
        assert_eq!(b.determinant().abs(), 1 << 12);
    }

    #[test]
    fn rm_words_are_distinct_with_expected_weights() {
        let words = rm_codewords();
        let mut weights: Vec<i64> = words.iter().map(|w| w.iter().sum()).collect();
        weights.sort();
        assert_eq!(weights[0], 0);
        assert_eq!(weights[31], 16);
        assert!(weights[1..31].iter().all(|&w| w == 8));
    }

    #[test]
    fn lattice_points_decode_to_themselves() {
        let b = basis();
        let mut ops = OpCounter::default();
        for j in 0..DIM {
            let x = b.column(j);
            let y: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            assert_eq!(closest_point(&y, &mut ops), x);
        }
    }

    #[test]
    fn lex_less_scans() {
        assert!(lex_less(&[0, 1, 5], &[0, 2, 0]));
        assert!(!lex_less(&[0, 2, 0], &[0, 1, 5]));
        assert!(!lex_less(&[1, 1], &[1, 1]));
    }
}
