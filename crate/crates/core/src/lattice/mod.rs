//! Lattice codes with hypercube shaping.
//!
//! A code is a lattice `L(B)` with `p·Z^ℓ ⊆ L(B)`. Messages live in
//! `∏ [0, p/π_i)` where `π` is the Smith normal form diagonal of `B`;
//! encoding is `x = B̂·m mod p` and decoding is the closest lattice point
//! followed by `m_i = (B̂⁻¹·x̂)_i mod p/π_i`.

pub mod bw16;
mod enumerate;
pub mod leech;
pub mod matrix;

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ring::{RingElem, N};

pub use enumerate::{cvp_bruteforce, shortest_vector, Enumerator};
pub use matrix::{snf, IntMatrix, Snf};

/// Counts the elementary steps a decoder performs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub ops: u64,
}

impl OpCounter {
    #[inline]
    pub fn tick(&mut self, n: u64) {
        self.ops += n;
    }
}

/// Nearest integer, halves rounded toward the smaller neighbour.
#[inline]
pub fn round_half_down(x: f64) -> i64 {
    (x - 0.5).ceil() as i64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Integer,
    Bw16,
    Leech24,
}

/// A lattice with its shaping data; immutable and shared.
#[derive(Debug)]
pub struct LatticeCode {
    kind: DecoderKind,
    basis: IntMatrix,
    b_hat: IntMatrix,
    b_hat_inv: IntMatrix,
    pi: Vec<i64>,
    p: i64,
    min_norm_sq: i64,
}

impl LatticeCode {
    fn build(kind: DecoderKind, basis: IntMatrix, b_hat: IntMatrix, pi: Vec<i64>, p: i64) -> Self {
        let ell = basis.rows();
        assert!(
            pi.iter().all(|&d| d > 0 && p % d == 0),
            "p must be a multiple of every π_i"
        );
        let d = IntMatrix::diagonal(&pi);
        let u = {
            let mut u = b_hat.clone();
            for i in 0..ell {
                for j in 0..ell {
                    assert_eq!(
                        u.get(i, j) % pi[j],
                        0,
                        "B̂ column {j} not divisible by π_{j}"
                    );
                    u.set(i, j, u.get(i, j) / pi[j]);
                }
            }
            u
        };
        assert!(u.is_unimodular(), "B̂·diag(π)⁻¹ must be unimodular");
        assert_eq!(u.mul(&d).determinant().abs(), basis.determinant().abs());
        let b_hat_inv = u.unimodular_inverse().expect("unimodular");
        let (min_norm_sq, _) = shortest_vector(&basis);
        Self {
            kind,
            basis,
            b_hat,
            b_hat_inv,
            pi,
            p,
            min_norm_sq,
        }
    }

    /// `Z^1` with `p = 2`: the classic one-bit-per-coefficient code.
    pub fn integer() -> &'static Self {
        static CODE: OnceLock<LatticeCode> = OnceLock::new();
        CODE.get_or_init(|| {
            let one = IntMatrix::identity(1);
            Self::build(DecoderKind::Integer, one.clone(), one, vec![1], 2)
        })
    }

    /// Barnes–Wall BW16 with `p = 4`.
    pub fn bw16() -> &'static Self {
        static CODE: OnceLock<LatticeCode> = OnceLock::new();
        CODE.get_or_init(|| {
            let basis = bw16::basis();
            let s = snf(&basis).expect("BW16 basis is nonsingular");
            assert_eq!(
                s.diagonal,
                bw16::PI.to_vec(),
                "SNF of the BW16 basis disagrees with π"
            );
            Self::build(
                DecoderKind::Bw16,
                basis,
                bw16::b_hat(),
                bw16::PI.to_vec(),
                4,
            )
        })
    }

    /// Leech lattice with `p = 8`; `B̂` and `π` come from the SNF.
    pub fn leech24() -> &'static Self {
        static CODE: OnceLock<LatticeCode> = OnceLock::new();
        CODE.get_or_init(|| {
            let basis = leech::basis();
            let s = snf(&basis).expect("Leech basis is nonsingular");
            let b_hat = s.u.mul(&IntMatrix::diagonal(&s.diagonal));
            let code = Self::build(DecoderKind::Leech24, basis, b_hat, s.diagonal, 8);
            assert_eq!(code.bits_per_block(), 36, "Leech code must carry 36 bits");
            code
        })
    }

    pub fn kind(&self) -> DecoderKind {
        self.kind
    }

    pub fn ell(&self) -> usize {
        self.pi.len()
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn pi(&self) -> &[i64] {
        &self.pi
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn b_hat(&self) -> &IntMatrix {
        &self.b_hat
    }

    /// Squared length of a shortest nonzero vector.
    pub fn min_norm_sq(&self) -> i64 {
        self.min_norm_sq
    }

    pub fn lambda(&self) -> f64 {
        (self.min_norm_sq as f64).sqrt()
    }

    /// Per-coordinate message moduli `p/π_i`.
    pub fn moduli(&self) -> Vec<i64> {
        self.pi.iter().map(|&d| self.p / d).collect()
    }

    /// `b(ℓ,p) = Σ log2(p/π_i)`.
    pub fn bits_per_block(&self) -> u32 {
        self.moduli().iter().map(|&m| m.trailing_zeros()).sum()
    }

    /// Payload scale `round(q/p)`.
    pub fn scale(&self) -> u32 {
        crate::kyber_pke::payload_scale(self.p as u32)
    }

    /// Shortest-vector radius of the scaled code relative to `round(q/2)`.
    pub fn normalized_radius(&self) -> f64 {
        self.scale() as f64 * self.lambda() / (2.0 * crate::kyber_pke::payload_scale(2) as f64)
    }

    /// Closest lattice point, dispatching to the structured decoder.
    pub fn cvp(&self, y: &[f64]) -> Vec<i64> {
        self.cvp_counted(y, &mut OpCounter::default())
    }

    pub fn cvp_counted(&self, y: &[f64], ops: &mut OpCounter) -> Vec<i64> {
        match self.kind {
            DecoderKind::Integer => {
                ops.tick(y.len() as u64);
                cvp_integer(y, 1.0)
            }
            DecoderKind::Bw16 => bw16::closest_point(y, ops),
            DecoderKind::Leech24 => leech::closest_point(y, ops),
        }
    }

    fn check_message(&self, m: &MessageBlock) -> Result<()> {
        if m.0.len() != self.ell() {
            return Err(Error::LengthMismatch {
                expected: self.ell(),
                got: m.0.len(),
            });
        }
        for (&v, bound) in m.0.iter().zip(self.moduli()) {
            if !(0..bound).contains(&v) {
                return Err(Error::OutOfRange { value: v, bound });
            }
        }
        Ok(())
    }

    /// `x = B̂·m mod p`.
    pub fn encode(&self, m: &MessageBlock) -> Result<Vec<i64>> {
        self.check_message(m)?;
        Ok(self
            .b_hat
            .mul_vec(&m.0)
            .into_iter()
            .map(|v| v.rem_euclid(self.p))
            .collect())
    }

    /// Message carried by a lattice point: `(B̂⁻¹·x)_i mod p/π_i`.
    pub fn message_of(&self, x: &[i64]) -> MessageBlock {
        // B̂⁻¹ = diag(π)⁻¹ · U⁻¹
        let w = self.b_hat_inv.mul_vec(x);
        MessageBlock(
            w.iter()
                .zip(&self.pi)
                .map(|(&wi, &d)| {
                    debug_assert_eq!(wi % d, 0, "not a lattice point");
                    (wi / d).rem_euclid(self.p / d)
                })
                .collect(),
        )
    }

    /// HS-CVP decoding of a point given in lattice units.
    pub fn decode(&self, y: &[f64]) -> MessageBlock {
        self.message_of(&self.cvp(y))
    }

    pub fn decode_counted(&self, y: &[f64], ops: &mut OpCounter) -> MessageBlock {
        self.message_of(&self.cvp_counted(y, ops))
    }

    /// Bit mapper: coordinate `j` takes `log2(p/π_j)` bits, most significant first.
    pub fn bits_to_message(&self, bits: &[bool]) -> Result<MessageBlock> {
        let w = self.bits_per_block() as usize;
        if bits.len() != w {
            return Err(Error::LengthMismatch {
                expected: w,
                got: bits.len(),
            });
        }
        let mut it = bits.iter();
        Ok(MessageBlock(
            self.moduli()
                .iter()
                .map(|m| {
                    (0..m.trailing_zeros())
                        .fold(0i64, |acc, _| acc << 1 | *it.next().unwrap() as i64)
                })
                .collect(),
        ))
    }

    /// Inverse of [`Self::bits_to_message`].
    pub fn message_to_bits(&self, m: &MessageBlock) -> Result<Vec<bool>> {
        self.check_message(m)?;
        let mut out = Vec::with_capacity(self.bits_per_block() as usize);
        for (&v, modulus) in m.0.iter().zip(self.moduli()) {
            out.extend((0..modulus.trailing_zeros()).rev().map(|b| v >> b & 1 == 1));
        }
        Ok(out)
    }

    /// Exact membership: `B⁻¹·x` is integral.
    pub fn contains(&self, x: &[i64]) -> bool {
        let w = self.b_hat_inv.mul_vec(x);
        w.iter().zip(&self.pi).all(|(&wi, &d)| wi % d == 0)
    }
}

/// Componentwise nearest point of `scale·Z^ℓ`, returned as integer multiples.
pub fn cvp_integer(y: &[f64], scale: f64) -> Vec<i64> {
    y.iter().map(|&v| round_half_down(v / scale)).collect()
}

pub fn hs_encode(m: &MessageBlock, code: &LatticeCode) -> Result<Vec<i64>> {
    code.encode(m)
}

pub fn hs_cvp_decode(y: &[f64], code: &LatticeCode) -> MessageBlock {
    code.decode(y)
}

/// One block of message digits, `m_i ∈ [0, p/π_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MessageBlock(pub Vec<i64>);

impl MessageBlock {
    pub fn zero(ell: usize) -> Self {
        Self(vec![0; ell])
    }
}

/// Ordered blocks of codes that tile the 256 ring coefficients.
#[derive(Clone, Debug)]
pub struct BlockSchedule {
    blocks: Vec<(&'static LatticeCode, usize)>,
}

impl BlockSchedule {
    pub fn new(blocks: Vec<(&'static LatticeCode, usize)>) -> Result<Self> {
        let covered: usize = blocks.iter().map(|(c, k)| c.ell() * k).sum();
        if covered != N {
            return Err(Error::InvalidConfig(format!(
                "schedule covers {covered} coefficients, need {N}"
            )));
        }
        Ok(Self { blocks })
    }

    /// 256 one-bit integer blocks.
    pub fn integer() -> Self {
        Self::new(vec![(LatticeCode::integer(), N)]).unwrap()
    }

    /// 16 BW16 blocks at `p = 4`.
    pub fn bw16() -> Self {
        Self::new(vec![(LatticeCode::bw16(), 16)]).unwrap()
    }

    /// 10 Leech blocks at `p = 8` followed by one BW16 block at `p = 4`.
    pub fn leech() -> Self {
        Self::new(vec![(LatticeCode::leech24(), 10), (LatticeCode::bw16(), 1)]).unwrap()
    }

    pub fn entries(&self) -> &[(&'static LatticeCode, usize)] {
        &self.blocks
    }

    /// Codes in coefficient order, one per block.
    pub fn codes(&self) -> impl Iterator<Item = &'static LatticeCode> + '_ {
        self.blocks
            .iter()
            .flat_map(|&(c, k)| std::iter::repeat_n(c, k))
    }

    /// Number of blocks κ.
    pub fn num_blocks(&self) -> usize {
        self.blocks.iter().map(|(_, k)| k).sum()
    }

    pub fn capacity_bits(&self) -> u32 {
        self.blocks
            .iter()
            .map(|(c, k)| c.bits_per_block() * *k as u32)
            .sum()
    }

    /// Encode one message block per code into a scaled payload polynomial.
    pub fn encode(&self, blocks: &[MessageBlock]) -> Result<RingElem> {
        if blocks.len() != self.num_blocks() {
            return Err(Error::LengthMismatch {
                expected: self.num_blocks(),
                got: blocks.len(),
            });
        }
        let mut coeffs = Vec::with_capacity(N);
        for (code, m) in self.codes().zip(blocks) {
            let scale = code.scale() as i64;
            coeffs.extend(code.encode(m)?.into_iter().map(|x| x * scale));
        }
        RingElem::from_signed(&coeffs)
    }

    /// Decode a noisy scaled payload back into message blocks.
    pub fn decode(&self, y: &RingElem) -> Vec<MessageBlock> {
        self.decode_counted(y, &mut OpCounter::default())
    }

    pub fn decode_counted(&self, y: &RingElem, ops: &mut OpCounter) -> Vec<MessageBlock> {
        let centered = y.centered();
        let mut at = 0;
        self.codes()
            .map(|code| {
                let scale = code.scale() as f64;
                let part: Vec<f64> = centered[at..at + code.ell()]
                    .iter()
                    .map(|&v| v as f64 / scale)
                    .collect();
                at += code.ell();
                code.decode_counted(&part, ops)
            })
            .collect()
    }

    /// Split a bit string into message blocks, block by block.
    pub fn blocks_from_bits(&self, bits: &[bool]) -> Result<Vec<MessageBlock>> {
        let cap = self.capacity_bits() as usize;
        if bits.len() != cap {
            return Err(Error::LengthMismatch {
                expected: cap,
                got: bits.len(),
            });
        }
        let mut at = 0;
        self.codes()
            .map(|code| {
                let w = code.bits_per_block() as usize;
                at += w;
                code.bits_to_message(&bits[at - w..at])
            })
            .collect()
    }

    pub fn bits_from_blocks(&self, blocks: &[MessageBlock]) -> Result<Vec<bool>> {
        if blocks.len() != self.num_blocks() {
            return Err(Error::LengthMismatch {
                expected: self.num_blocks(),
                got: blocks.len(),
            });
        }
        let mut out = Vec::with_capacity(self.capacity_bits() as usize);
        for (code, m) in self.codes().zip(blocks) {
            out.extend(code.message_to_bits(m)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests;
