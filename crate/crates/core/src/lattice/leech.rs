//! Leech lattice in the integer scaling with minimum squared norm 32.
//!
//! Points are `2c + 4z` or `v + 2c + 4z` with `c` in the extended Golay
//! code, `sum(z)` even and `v = (-3, 1, ..., 1)`.

use std::sync::OnceLock;

use super::bw16::lex_less;
use super::matrix::IntMatrix;
use super::{round_half_down, OpCounter};

pub const DIM: usize = 24;

/// Generator of the cyclic [23,12,7] Golay code: x^11+x^10+x^6+x^5+x^4+x^2+1.
const GOLAY_GEN: u32 = 0b1100_0111_0101;

/// The 12 generators of the extended Golay code as 24-bit masks
/// (bit `i` is coordinate `i`, bit 23 is the overall parity).
pub fn golay_generators() -> [u32; 12] {
    let mut rows = [0u32; 12];
    for (s, row) in rows.iter_mut().enumerate() {
        let w = GOLAY_GEN << s;
        *row = w | ((w.count_ones() & 1) << 23);
    }
    rows
}

/// All 4096 Golay codewords, sorted.
pub fn golay_codewords() -> &'static [u32] {
    static WORDS: OnceLock<Vec<u32>> = OnceLock::new();
    WORDS.get_or_init(|| {
        let g = golay_generators();
        let mut words: Vec<u32> = (0u32..4096)
            .map(|m| {
                (0..12)
                    .filter(|&i| m >> i & 1 == 1)
                    .fold(0, |acc, i| acc ^ g[i])
            })
            .collect();
        words.sort_unstable();
        words
    })
}

fn odd_offset() -> [i64; DIM] {
    let mut v = [1i64; DIM];
    v[0] = -3;
    v
}

/// Triangular generator, basis vectors as columns; column `j` is supported
/// on coordinates `0..=j`. Determinant 2^36.
pub fn basis() -> IntMatrix {
    // Reverse echelon form: each row's highest set bit is a distinct pivot.
    let mut rows = golay_generators().to_vec();
    let mut pivot_row = [None::<u32>; DIM];
    let mut free = rows.len();
    for col in (0..DIM).rev() {
        let Some(k) = (0..free).find(|&k| rows[k] >> col & 1 == 1) else {
            continue;
        };
        let r = rows[k];
        for other in rows.iter_mut() {
            if *other != r && *other >> col & 1 == 1 {
                *other ^= r;
            }
        }
        pivot_row[col] = Some(r);
        rows.swap(k, free - 1);
        free -= 1;
    }
    assert!(
        pivot_row[DIM - 1].is_some(),
        "last coordinate must be a pivot"
    );
    let first_free = (0..DIM)
        .find(|&j| pivot_row[j].is_none())
        .expect("12 free coordinates");

    let mut b = IntMatrix::zeros(DIM, DIM);
    let v = odd_offset();
    for j in 0..DIM {
        let col: [i64; DIM] = match pivot_row[j] {
            _ if j == DIM - 1 => v,
            Some(c) => std::array::from_fn(|i| 2 * (c >> i & 1) as i64),
            None if j == first_free => std::array::from_fn(|i| if i == j { 8 } else { 0 }),
            None => std::array::from_fn(|i| if i == j || i == first_free { 4 } else { 0 }),
        };
        for (i, &x) in col.iter().enumerate() {
            b.set(i, j, x);
        }
    }
    b
}

/// Membership test straight from the coset description.
pub fn contains(x: &[i64]) -> bool {
    if x.len() != DIM {
        return false;
    }
    let odd = x[0] & 1;
    if x.iter().any(|&v| v & 1 != odd) {
        return false;
    }
    let off = if odd == 1 { odd_offset() } else { [0; DIM] };
    let mut mask = 0u32;
    let mut zsum = 0i64;
    for i in 0..DIM {
        let r = x[i] - off[i];
        mask |= ((r.rem_euclid(4) / 2) as u32) << i;
        zsum += (r - 2 * (r.rem_euclid(4) / 2)) / 4;
    }
    golay_codewords().binary_search(&mask).is_ok() && zsum % 2 == 0
}

/// Per-coordinate candidates for one offset and one code bit.
#[derive(Clone, Copy, Default)]
struct Coord {
    z0: i64,
    z1: i64,
    cost: f64,
    delta: f64,
}

/// Lookup tables over 8-coordinate chunks of a codeword mask.
struct ChunkTables {
    cost: [[f64; 256]; 3],
    parity: [[u8; 256]; 3],
    delta: [[f64; 256]; 3],
    arg: [[u8; 256]; 3],
}

impl ChunkTables {
    fn build(coords: &[[Coord; 2]; DIM], ops: &mut OpCounter) -> Self {
        let mut t = ChunkTables {
            cost: [[0.0; 256]; 3],
            parity: [[0; 256]; 3],
            delta: [[0.0; 256]; 3],
            arg: [[0; 256]; 3],
        };
        for chunk in 0..3 {
            for mask in 0..256usize {
                let mut cost = 0.0;
                let mut parity = 0i64;
                let mut best = f64::INFINITY;
                let mut arg = 0u8;
                for k in 0..8 {
                    let c = coords[8 * chunk + k][mask >> k & 1];
                    cost += c.cost;
                    parity ^= c.z0 & 1;
                    let better = c.delta < best;
                    best = if better { c.delta } else { best };
                    arg = if better { (8 * chunk + k) as u8 } else { arg };
                    ops.tick(4);
                }
                t.cost[chunk][mask] = cost;
                t.parity[chunk][mask] = parity as u8;
                t.delta[chunk][mask] = best;
                t.arg[chunk][mask] = arg;
            }
        }
        t
    }
}

fn coords_for(y: &[f64], off: &[i64; DIM], ops: &mut OpCounter) -> [[Coord; 2]; DIM] {
    let mut out = [[Coord::default(); 2]; DIM];
    for i in 0..DIM {
        for b in 0..2 {
            let a = y[i] - (off[i] + 2 * b as i64) as f64;
            let z0 = round_half_down(a / 4.0);
            let r = a - 4.0 * z0 as f64;
            let z1 = z0 + if r > 0.0 { 1 } else { -1 };
            let r1 = a - 4.0 * z1 as f64;
            out[i][b] = Coord {
                z0,
                z1,
                cost: r * r,
                delta: r1 * r1 - r * r,
            };
            ops.tick(8);
        }
    }
    out
}

fn candidate(
    mask: u32,
    off: &[i64; DIM],
    coords: &[[Coord; 2]; DIM],
    flip: Option<usize>,
) -> [i64; DIM] {
    std::array::from_fn(|i| {
        let b = (mask >> i & 1) as usize;
        let z = if flip == Some(i) {
            coords[i][b].z1
        } else {
            coords[i][b].z0
        };
        off[i] + 2 * b as i64 + 4 * z
    })
}

/// Closest Leech point by exhaustive search over the 2 x 4096 Golay cosets.
/// Every input performs the same sequence of table builds and scans.
pub fn closest_point(y: &[f64], ops: &mut OpCounter) -> Vec<i64> {
    assert_eq!(y.len(), DIM, "Leech decoder needs a 24-vector");
    let tol = 1e-9 * (1.0 + y.iter().map(|v| v * v).sum::<f64>());
    let offsets = [[0i64; DIM], odd_offset()];
    let mut best = [0i64; DIM];
    let mut best_d = f64::INFINITY;
    for off in &offsets {
        let coords = coords_for(y, off, ops);
        let tables = ChunkTables::build(&coords, ops);
        for &cw in golay_codewords() {
            let m = [
                (cw & 0xff) as usize,
                (cw >> 8 & 0xff) as usize,
                (cw >> 16 & 0xff) as usize,
            ];
            let cost: f64 = (0..3).map(|c| tables.cost[c][m[c]]).sum();
            let odd = (0..3).fold(0u8, |p, c| p ^ tables.parity[c][m[c]]) == 1;
            let mut fix = tables.delta[0][m[0]];
            let mut arg = tables.arg[0][m[0]];
            for c in 1..3 {
                let better = tables.delta[c][m[c]] < fix;
                fix = if better { tables.delta[c][m[c]] } else { fix };
                arg = if better { tables.arg[c][m[c]] } else { arg };
            }
            let d = cost + if odd { fix } else { 0.0 };
            let cand = candidate(cw, off, &coords, odd.then_some(arg as usize));
            let tie = (d - best_d).abs() <= tol;
            let take = (d < best_d - tol) | (tie & lex_less(&cand, &best));
            if take {
                best = cand;
                best_d = d;
            }
            ops.tick(12 + 2 * DIM as u64);
        }
    }
    best.to_vec()
}
