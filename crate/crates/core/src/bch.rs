//! Shortened binary BCH(320, 257) code over GF(2^9), correcting 7 errors.
//!
//! Bit `i` of a codeword is the coefficient of `x^i`. Positions `0..63`
//! hold parity and message bit `j` sits at position `63 + j`; the code is
//! the narrow-sense BCH(511, 448) code with its top 191 message positions
//! fixed to zero. Message bit 256 is a pad bit that must be zero.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::lattice::OpCounter;

const M: u32 = 9;
const FIELD_ORDER: usize = 511;
const PRIM_POLY: u16 = 0x211; // x^9 + x^4 + 1

pub const N_FULL: usize = 511;
pub const K_FULL: usize = 448;
pub const SHORTEN: usize = 191;
pub const N: usize = 320;
pub const K: usize = 257;
pub const T: usize = 7;
pub const PARITY: usize = N - K;
pub const PAD_INDEX: usize = K - 1;

/// GF(2^9) via log/antilog tables.
#[derive(Debug)]
struct Field {
    exp: [u16; 2 * FIELD_ORDER],
    log: [u16; FIELD_ORDER + 1],
}

impl Field {
    fn new() -> Self {
        let mut exp = [0u16; 2 * FIELD_ORDER];
        let mut log = [0u16; FIELD_ORDER + 1];
        let mut x = 1u16;
        for i in 0..FIELD_ORDER {
            exp[i] = x;
            exp[i + FIELD_ORDER] = x;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << M) != 0 {
                x ^= PRIM_POLY;
            }
        }
        Self { exp, log }
    }

    #[inline]
    fn alpha_pow(&self, e: usize) -> u16 {
        self.exp[e % FIELD_ORDER]
    }

    /// Multiplication without a zero branch: the product is masked instead.
    #[inline]
    fn mul(&self, a: u16, b: u16) -> u16 {
        let nz = ((a != 0) & (b != 0)) as u16;
        let p = self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize];
        p & nz.wrapping_neg()
    }

    #[inline]
    fn inv(&self, a: u16) -> u16 {
        debug_assert!(a != 0);
        self.exp[(FIELD_ORDER - self.log[a as usize] as usize) % FIELD_ORDER]
    }
}

#[inline]
fn select(take: bool, a: u16, b: u16) -> u16 {
    let m = (take as u16).wrapping_neg();
    (a & m) | (b & !m)
}

/// Outcome of a successful decode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BchDecoded {
    pub message: Vec<bool>,
    pub corrected: usize,
}

#[derive(Debug)]
pub struct BchCode {
    field: Field,
    /// Generator coefficients `g_0..g_62` (the monic `x^63` term is implicit).
    gen_low: u64,
}

impl BchCode {
    fn new() -> Self {
        let field = Field::new();
        // g = product of minimal polynomials of α^1, α^3, ..., α^13.
        let mut seen = [false; FIELD_ORDER];
        let mut g: Vec<u16> = vec![1];
        for i in 1..=2 * T {
            if seen[i] {
                continue;
            }
            let mut e = i;
            loop {
                seen[e] = true;
                // g *= (x + α^e)
                let root = field.alpha_pow(e);
                let mut next = vec![0u16; g.len() + 1];
                for (k, &c) in g.iter().enumerate() {
                    next[k + 1] ^= c;
                    next[k] ^= field.mul(c, root);
                }
                g = next;
                e = e * 2 % FIELD_ORDER;
                if e == i {
                    break;
                }
            }
        }
        assert_eq!(g.len(), PARITY + 1, "generator degree");
        assert!(g.iter().all(|&c| c <= 1), "generator must be binary");
        let gen_low = g[..PARITY]
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &c)| acc | (c as u64) << k);
        Self { field, gen_low }
    }

    /// The code used throughout the crate.
    pub fn standard() -> &'static Self {
        static CODE: OnceLock<BchCode> = OnceLock::new();
        CODE.get_or_init(Self::new)
    }

    /// Generator coefficients `g_0..g_63`.
    pub fn generator(&self) -> Vec<bool> {
        (0..PARITY)
            .map(|k| self.gen_low >> k & 1 == 1)
            .chain(std::iter::once(true))
            .collect()
    }

    /// Systematic encoding of 257 message bits (bit 256 must be 0).
    pub fn encode(&self, msg: &[bool]) -> Result<Vec<bool>> {
        if msg.len() != K {
            return Err(Error::LengthMismatch {
                expected: K,
                got: msg.len(),
            });
        }
        if msg[PAD_INDEX] {
            return Err(Error::Malformed("BCH pad bit must be zero".into()));
        }
        let mask = (1u64 << PARITY) - 1;
        let mut reg = 0u64;
        for &bit in msg.iter().rev() {
            let fb = bit as u64 ^ (reg >> (PARITY - 1) & 1);
            reg = (reg << 1) & mask;
            reg ^= self.gen_low & fb.wrapping_neg();
        }
        let mut word: Vec<bool> = (0..PARITY).map(|k| reg >> k & 1 == 1).collect();
        word.extend_from_slice(msg);
        Ok(word)
    }

    /// `S_j = r(α^j)` for `j = 1..=2t`.
    pub fn syndromes(&self, word: &[bool], ops: &mut OpCounter) -> [u16; 2 * T] {
        let mut s = [0u16; 2 * T];
        for (j, sj) in s.iter_mut().enumerate() {
            let step = j + 1;
            for (i, &bit) in word.iter().enumerate() {
                *sj ^= self.field.alpha_pow(i * step) & (bit as u16).wrapping_neg();
            }
            ops.tick(word.len() as u64);
        }
        s
    }

    /// Error locator by Berlekamp–Massey with exactly `2t` masked iterations.
    fn locator(&self, s: &[u16; 2 * T], ops: &mut OpCounter) -> ([u16; 2 * T + 1], usize) {
        const W: usize = 2 * T + 1;
        let f = &self.field;
        let mut c = [0u16; W];
        c[0] = 1;
        // p = x^m · B(x)
        let mut p = [0u16; W];
        p[1] = 1;
        let mut b = 1u16;
        let mut l = 0usize;
        for n in 0..2 * T {
            let mut d = s[n];
            for i in 1..W {
                let valid = i <= n;
                let sv = if valid { s[n - i] } else { 0 };
                d ^= f.mul(c[i], sv);
            }
            let coef = f.mul(d, f.inv(b));
            let mut next = c;
            for i in 0..W {
                next[i] ^= f.mul(coef, p[i]);
            }
            let grow = (d != 0) & (2 * l <= n);
            let mut shifted = [0u16; W];
            for i in 1..W {
                shifted[i] = select(grow, c[i - 1], p[i - 1]);
            }
            p = shifted;
            b = select(grow, d, b);
            l = if grow { n + 1 - l } else { l };
            c = next;
            ops.tick(3 * W as u64);
        }
        (c, l)
    }

    /// Decodes a 320-bit word; `Err(DecodeFailure)` when the locator is inconsistent.
    pub fn decode(&self, word: &[bool]) -> Result<BchDecoded> {
        self.decode_counted(word, &mut OpCounter::default())
    }

    pub fn decode_counted(&self, word: &[bool], ops: &mut OpCounter) -> Result<BchDecoded> {
        if word.len() != N {
            return Err(Error::LengthMismatch {
                expected: N,
                got: word.len(),
            });
        }
        let s = self.syndromes(word, ops);
        let (c, l) = self.locator(&s, ops);

        // Chien search over every nonzero field element: a root at α^{-i} flags position i.
        let mut fixed = word.to_vec();
        let mut roots = 0usize;
        let mut outside = false;
        for i in 0..FIELD_ORDER {
            let mut acc = 0u16;
            for (k, &ck) in c.iter().enumerate() {
                acc ^= self
                    .field
                    .mul(ck, self.field.alpha_pow((FIELD_ORDER - i) * k));
            }
            let root = acc == 0;
            roots += root as usize;
            outside |= root & (i >= N);
            if i < N {
                fixed[i] ^= root;
            }
            ops.tick(c.len() as u64);
        }
        let consistent = !outside & (roots == l) & (l <= T);
        let message = fixed[PARITY..].to_vec();
        if !consistent || message[PAD_INDEX] {
            return Err(Error::DecodeFailure);
        }
        Ok(BchDecoded {
            message,
            corrected: roots,
        })
    }
}
