//! Arithmetic in `R_q = Z_q[X]/(X^256 + 1)`, deterministic sampling and the
//! `Compress`/`Decompress` rounding maps.
//!
//! Coefficients are stored canonically in `[0, q)`. Noise measurements use the
//! centered representative in `[-(q-1)/2, (q-1)/2]` (see [`centered`]).
//!
//! Multiplication has two routes: [`RingElem::mul_schoolbook`], the O(n^2)
//! reference with sign folding, and [`RingElem::mul`], a number-theoretic
//! transform used on hot paths. The schoolbook form is the oracle the NTT is
//! tested against.

use std::ops::{Add, Neg, Sub};

use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake256;

use crate::error::{Error, Result};

/// Ring degree.
pub const N: usize = 256;
/// Coefficient modulus.
pub const Q: u32 = 3329;

/// `round(a / b)` with ties rounded up, for non-negative integers.
#[inline]
pub(crate) fn round_div(a: u64, b: u64) -> u64 {
    (2 * a + b) / (2 * b)
}

/// Rejects depths with `2^d >= q` (and `d = 0`).
pub fn check_depth(d: u32) -> Result<()> {
    if d == 0 || d >= 12 || (1u32 << d) >= Q {
        return Err(Error::InvalidDepth(d));
    }
    Ok(())
}

/// `Compress_q(x, d) = round((2^d / q) * x) mod 2^d`, ties rounded up.
pub fn compress(x: u32, d: u32) -> Result<u32> {
    check_depth(d)?;
    if x >= Q {
        return Err(Error::OutOfRange {
            value: x as i64,
            bound: Q as i64,
        });
    }
    Ok(compress_unchecked(x, d))
}

#[inline]
pub(crate) fn compress_unchecked(x: u32, d: u32) -> u32 {
    (round_div((x as u64) << d, Q as u64) as u32) & ((1 << d) - 1)
}

/// `Decompress_q(y, d) = round((q / 2^d) * y)`, ties rounded up.
pub fn decompress(y: u32, d: u32) -> Result<u32> {
    check_depth(d)?;
    if y >= 1 << d {
        return Err(Error::OutOfRange {
            value: y as i64,
            bound: 1 << d,
        });
    }
    Ok(decompress_unchecked(y, d))
}

#[inline]
pub(crate) fn decompress_unchecked(y: u32, d: u32) -> u32 {
    round_div(Q as u64 * y as u64, 1 << d) as u32
}

/// Centered representative `x mod± q` in `[-(q-1)/2, (q-1)/2]`.
#[inline]
pub fn centered(x: u32) -> i32 {
    let x = (x % Q) as i32;
    if x > (Q as i32 - 1) / 2 {
        x - Q as i32
    } else {
        x
    }
}

/// Reduces a signed integer into `[0, q)`.
#[inline]
pub fn reduce(x: i64) -> u32 {
    x.rem_euclid(Q as i64) as u32
}

/// A polynomial of degree < 256 with coefficients in `[0, q)`.
#[derive(Clone, PartialEq, Eq)]
pub struct RingElem {
    coeffs: [u16; N],
}

impl std::fmt::Debug for RingElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RingElem({:?}..)", &self.coeffs[..8])
    }
}

impl Default for RingElem {
    fn default() -> Self {
        Self::zero()
    }
}

impl RingElem {
    pub fn zero() -> Self {
        Self { coeffs: [0; N] }
    }

    /// The constant polynomial `1`.
    pub fn one() -> Self {
        Self::monomial(0)
    }

    /// `X^i` for `i < 256`.
    pub fn monomial(i: usize) -> Self {
        let mut r = Self::zero();
        r.coeffs[i] = 1;
        r
    }

    /// Builds an element from arbitrary signed coefficients, reducing mod q.
    pub fn from_signed(values: &[i64]) -> Result<Self> {
        if values.len() != N {
            return Err(Error::LengthMismatch {
                expected: N,
                got: values.len(),
            });
        }
        let mut r = Self::zero();
        for (c, &v) in r.coeffs.iter_mut().zip(values) {
            *c = reduce(v) as u16;
        }
        Ok(r)
    }

    /// Builds an element from coefficients that must already lie in `[0, q)`.
    pub fn from_coeffs(values: &[u32]) -> Result<Self> {
        if values.len() != N {
            return Err(Error::LengthMismatch {
                expected: N,
                got: values.len(),
            });
        }
        let mut r = Self::zero();
        for (c, &v) in r.coeffs.iter_mut().zip(values) {
            if v >= Q {
                return Err(Error::OutOfRange {
                    value: v as i64,
                    bound: Q as i64,
                });
            }
            *c = v as u16;
        }
        Ok(r)
    }

    pub(crate) fn from_fn(mut f: impl FnMut(usize) -> u32) -> Self {
        let mut r = Self::zero();
        for (i, c) in r.coeffs.iter_mut().enumerate() {
            *c = (f(i) % Q) as u16;
        }
        r
    }

    #[inline]
    pub fn coeff(&self, i: usize) -> u32 {
        self.coeffs[i] as u32
    }

    #[inline]
    pub fn centered_coeff(&self, i: usize) -> i32 {
        centered(self.coeffs[i] as u32)
    }

    pub fn coeffs(&self) -> impl ExactSizeIterator<Item = u32> + '_ {
        self.coeffs.iter().map(|&c| c as u32)
    }

    /// All coefficients as centered representatives.
    pub fn centered(&self) -> Vec<i32> {
        self.coeffs.iter().map(|&c| centered(c as u32)).collect()
    }

    pub fn scale(&self, k: u32) -> Self {
        Self::from_fn(|i| (self.coeffs[i] as u32 * (k % Q)) % Q)
    }

    /// Reference O(n^2) negacyclic product: `X^i * X^j = -X^{i+j-n}` on wrap.
    pub fn mul_schoolbook(&self, other: &Self) -> Self {
        let mut acc = [0i64; N];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let prod = a as i64 * b as i64;
                let k = i + j;
                if k < N {
                    acc[k] += prod;
                } else {
                    acc[k - N] -= prod;
                }
            }
        }
        let mut r = Self::zero();
        for (c, v) in r.coeffs.iter_mut().zip(acc) {
            *c = reduce(v) as u16;
        }
        r
    }

    /// Negacyclic product through the number-theoretic transform.
    pub fn mul(&self, other: &Self) -> Self {
        let mut a = self.to_u32();
        let mut b = other.to_u32();
        ntt::forward(&mut a);
        ntt::forward(&mut b);
        let mut c = ntt::pointwise(&a, &b);
        ntt::inverse(&mut c);
        Self::from_fn(|i| c[i])
    }

    fn to_u32(&self) -> [u32; N] {
        let mut out = [0u32; N];
        for (o, &c) in out.iter_mut().zip(&self.coeffs) {
            *o = c as u32;
        }
        out
    }

    /// Coefficientwise `Compress_q(·, d)`.
    pub fn compress(&self, d: u32) -> Result<Vec<u32>> {
        check_depth(d)?;
        Ok(self
            .coeffs
            .iter()
            .map(|&c| compress_unchecked(c as u32, d))
            .collect())
    }

    /// Coefficientwise `Decompress_q(·, d)`.
    pub fn decompress(values: &[u32], d: u32) -> Result<Self> {
        check_depth(d)?;
        if values.len() != N {
            return Err(Error::LengthMismatch {
                expected: N,
                got: values.len(),
            });
        }
        if let Some(&bad) = values.iter().find(|&&v| v >= 1 << d) {
            return Err(Error::OutOfRange {
                value: bad as i64,
                bound: 1 << d,
            });
        }
        Ok(Self::from_fn(|i| decompress_unchecked(values[i], d)))
    }
}

impl Add for &RingElem {
    type Output = RingElem;
    fn add(self, rhs: Self) -> RingElem {
        RingElem::from_fn(|i| self.coeffs[i] as u32 + rhs.coeffs[i] as u32)
    }
}

impl Sub for &RingElem {
    type Output = RingElem;
    fn sub(self, rhs: Self) -> RingElem {
        RingElem::from_fn(|i| self.coeffs[i] as u32 + Q - rhs.coeffs[i] as u32)
    }
}

impl Neg for &RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        RingElem::from_fn(|i| Q - self.coeffs[i] as u32)
    }
}

/// A vector of `k` ring elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingVec {
    pub elems: Vec<RingElem>,
}

impl RingVec {
    pub fn new(elems: Vec<RingElem>) -> Self {
        Self { elems }
    }

    pub fn zero(k: usize) -> Self {
        Self {
            elems: vec![RingElem::zero(); k],
        }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Ok(Self::new(
            self.elems
                .iter()
                .zip(&other.elems)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Ok(Self::new(
            self.elems
                .iter()
                .zip(&other.elems)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    /// `sum_i a_i * b_i` over the ring.
    pub fn inner_product(&self, other: &Self) -> Result<RingElem> {
        self.check_len(other)?;
        let mut acc = [0u32; N];
        for (a, b) in self.elems.iter().zip(&other.elems) {
            let mut fa = a.to_u32();
            let mut fb = b.to_u32();
            ntt::forward(&mut fa);
            ntt::forward(&mut fb);
            let prod = ntt::pointwise(&fa, &fb);
            for (x, y) in acc.iter_mut().zip(prod) {
                *x = (*x + y) % Q;
            }
        }
        ntt::inverse(&mut acc);
        Ok(RingElem::from_fn(|i| acc[i]))
    }
}

/// Source of deterministic bytes for the samplers.
pub trait ByteSource {
    fn fill(&mut self, out: &mut [u8]);
}

/// An unbounded byte stream expanded from a 32-byte seed and a
/// domain-separation label (SHAKE256 over `seed || label`).
pub struct ByteStream {
    reader: <Shake256 as ExtendableOutput>::Reader,
}

impl ByteStream {
    pub fn new(seed: &[u8; 32], label: &[u8]) -> Self {
        let mut h = Shake256::default();
        h.update(seed);
        h.update(&[label.len() as u8]);
        h.update(label);
        Self {
            reader: h.finalize_xof(),
        }
    }

    /// Squeezes a fresh 32-byte seed.
    pub fn derive_seed(seed: &[u8; 32], label: &[u8]) -> [u8; 32] {
        let mut out = [0u8; 32];
        Self::new(seed, label).fill(&mut out);
        out
    }
}

impl ByteSource for ByteStream {
    fn fill(&mut self, out: &mut [u8]) {
        self.reader.read(out);
    }
}

/// Centered binomial sample `beta_eta`: coefficient `i` is
/// `popcount(a_i) - popcount(b_i)` for consecutive `eta`-bit groups, reading
/// bits least-significant first.
pub fn cbd_sample(eta: u32, src: &mut impl ByteSource) -> Result<RingElem> {
    if !(eta == 2 || eta == 3) {
        return Err(Error::InvalidParams(format!(
            "eta = {eta}, expected 2 or 3"
        )));
    }
    let eta = eta as usize;
    let mut buf = vec![0u8; 2 * eta * N / 8];
    src.fill(&mut buf);
    let bit = |k: usize| ((buf[k / 8] >> (k % 8)) & 1) as i64;
    let mut vals = [0i64; N];
    for (i, v) in vals.iter_mut().enumerate() {
        let base = 2 * eta * i;
        let a: i64 = (0..eta).map(|j| bit(base + j)).sum();
        let b: i64 = (0..eta).map(|j| bit(base + eta + j)).sum();
        *v = a - b;
    }
    RingElem::from_signed(&vals)
}

/// Uniform sample over `R_q` by rejection on 12-bit candidates: each 3 bytes
/// `b0 b1 b2` yield `d1 = b0 | (b1 & 15) << 8` and `d2 = b1 >> 4 | b2 << 4`;
/// candidates `>= q` are discarded.
pub fn uniform_sample(src: &mut impl ByteSource) -> RingElem {
    let mut r = RingElem::zero();
    let mut filled = 0;
    let mut buf = [0u8; 168];
    while filled < N {
        src.fill(&mut buf);
        for chunk in buf.chunks_exact(3) {
            let d1 = chunk[0] as u32 | ((chunk[1] as u32 & 0x0f) << 8);
            let d2 = (chunk[1] as u32 >> 4) | ((chunk[2] as u32) << 4);
            for d in [d1, d2] {
                if d < Q && filled < N {
                    r.coeffs[filled] = d as u16;
                    filled += 1;
                }
            }
        }
    }
    r
}

mod ntt {
    use super::{N, Q};

    const fn pow_mod(mut base: u32, mut exp: u32) -> u32 {
        let mut acc = 1u64;
        let m = Q as u64;
        let mut b = base as u64 % m;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * b % m;
            }
            b = b * b % m;
            exp >>= 1;
        }
        base = acc as u32;
        base
    }

    const fn bitrev7(i: u32) -> u32 {
        let mut r = 0;
        let mut k = 0;
        while k < 7 {
            r |= ((i >> k) & 1) << (6 - k);
            k += 1;
        }
        r
    }

    /// `17^{bitrev7(i)}`; 17 is a primitive 256-th root of unity mod q.
    const ZETAS: [u32; 128] = {
        let mut z = [0u32; 128];
        let mut i = 0;
        while i < 128 {
            z[i] = pow_mod(17, bitrev7(i as u32));
            i += 1;
        }
        z
    };

    /// `17^{2 bitrev7(i) + 1}`, the moduli of the degree-2 factors.
    const GAMMAS: [u32; 128] = {
        let mut z = [0u32; 128];
        let mut i = 0;
        while i < 128 {
            z[i] = pow_mod(17, 2 * bitrev7(i as u32) + 1);
            i += 1;
        }
        z
    };

    /// 128^{-1} mod q.
    const INV_128: u32 = 3303;

    pub(super) fn forward(f: &mut [u32; N]) {
        let mut k = 1;
        let mut len = 128;
        while len >= 2 {
            let mut start = 0;
            while start < N {
                let zeta = ZETAS[k];
                k += 1;
                for j in start..start + len {
                    let t = zeta * f[j + len] % Q;
                    f[j + len] = (f[j] + Q - t) % Q;
                    f[j] = (f[j] + t) % Q;
                }
                start += 2 * len;
            }
            len /= 2;
        }
    }

    pub(super) fn inverse(f: &mut [u32; N]) {
        let mut k = 127;
        let mut len = 2;
        while len <= 128 {
            let mut start = 0;
            while start < N {
                let zeta = ZETAS[k];
                k -= 1;
                for j in start..start + len {
                    let t = f[j];
                    f[j] = (t + f[j + len]) % Q;
                    f[j + len] = zeta * ((f[j + len] + Q - t) % Q) % Q;
                }
                start += 2 * len;
            }
            len *= 2;
        }
        for x in f.iter_mut() {
            *x = *x * INV_128 % Q;
        }
    }

    pub(super) fn pointwise(a: &[u32; N], b: &[u32; N]) -> [u32; N] {
        let mut c = [0u32; N];
        for i in 0..N / 2 {
            let (a0, a1) = (a[2 * i], a[2 * i + 1]);
            let (b0, b1) = (b[2 * i], b[2 * i + 1]);
            c[2 * i] = (a0 * b0 % Q + a1 * b1 % Q * GAMMAS[i]) % Q;
            c[2 * i + 1] = (a0 * b1 + a1 * b0) % Q;
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Serves a fixed byte prefix, then a repeating filler byte.
    struct FixedBytes {
        data: Vec<u8>,
        pos: usize,
        filler: u8,
    }

    impl ByteSource for FixedBytes {
        fn fill(&mut self, out: &mut [u8]) {
            for o in out.iter_mut() {
                *o = self.data.get(self.pos).copied().unwrap_or(self.filler);
                self.pos += 1;
            }
        }
    }

    fn constant(b: u8) -> FixedBytes {
        FixedBytes {
            data: vec![],
            pos: 0,
            filler: b,
        }
    }

    fn random_elem(seed: u8) -> RingElem {
        uniform_sample(&mut ByteStream::new(&[seed; 32], b"test"))
    }

    #[test]
    fn compress_examples() {
        assert_eq!(compress(0, 4).unwrap(), 0);
        assert_eq!(compress(1665, 1).unwrap(), 1);
        assert_eq!(compress(3328, 4).unwrap(), 0);
        assert_eq!(compress(832, 1).unwrap(), 0);
        assert_eq!(compress(833, 1).unwrap(), 1);
    }

    #[test]
    fn compress_rejects_bad_depth() {
        assert_eq!(compress(5, 12), Err(Error::InvalidDepth(12)));
        assert_eq!(compress(5, 0), Err(Error::InvalidDepth(0)));
        assert!(compress(3329, 4).is_err());
    }

    #[test]
    fn decompress_examples() {
        for d in 1..=11 {
            assert_eq!(decompress(0, d).unwrap(), 0);
        }
        assert_eq!(decompress(1, 1).unwrap(), 1665);
        assert_eq!(decompress(8, 4).unwrap(), 1665);
        assert!(decompress(16, 4).is_err());
    }

    #[test]
    fn rounding_noise_bound_and_left_inverse() {
        for d in 1..=11u32 {
            let bound = round_div(Q as u64, 1 << (d + 1)) as i32;
            for x in 0..Q {
                let back = decompress(compress(x, d).unwrap(), d).unwrap();
                let err = centered((x + Q - back) % Q);
                assert!(err.abs() <= bound, "d={d} x={x} err={err}");
            }
            for y in 0..(1u32 << d) {
                assert_eq!(compress(decompress(y, d).unwrap(), d).unwrap(), y);
            }
        }
    }

    #[test]
    fn cbd_constant_streams_give_zero() {
        for eta in [2, 3] {
            assert_eq!(cbd_sample(eta, &mut constant(0)).unwrap(), RingElem::zero());
            assert_eq!(
                cbd_sample(eta, &mut constant(0xff)).unwrap(),
                RingElem::zero()
            );
        }
        assert!(cbd_sample(4, &mut constant(0)).is_err());
    }

    #[test]
    fn cbd_range_and_variance() {
        let mut stream = ByteStream::new(&[7; 32], b"cbd");
        let mut sum = 0f64;
        let mut sum2 = 0f64;
        let mut count = 0f64;
        while count < 1.0e6 {
            let e = cbd_sample(3, &mut stream).unwrap();
            for c in e.centered() {
                assert!((-3..=3).contains(&c));
                sum += c as f64;
                sum2 += (c * c) as f64;
                count += 1.0;
            }
        }
        let mean = sum / count;
        let var = sum2 / count - mean * mean;
        assert!((var - 1.5).abs() < 0.01, "variance {var}");
        assert!(mean.abs() < 0.01);
    }

    #[test]
    fn uniform_is_deterministic_and_centered() {
        assert_eq!(random_elem(1), random_elem(1));
        assert_ne!(random_elem(1), random_elem(2));
        let mut stream = ByteStream::new(&[9; 32], b"uniform");
        let mut sum = 0f64;
        let mut count = 0f64;
        while count < 1.0e6 {
            let a = uniform_sample(&mut stream);
            sum += a.coeffs().map(|c| c as f64).sum::<f64>();
            count += N as f64;
        }
        assert!((sum / count - 1664.0).abs() < 5.0);
    }

    #[test]
    fn uniform_rejects_q() {
        // d1 = 3329 = 0xd01 is rejected; d2 = 0x005 is accepted first.
        let mut src = FixedBytes {
            data: vec![0x01, 0x5d, 0x00],
            pos: 0,
            filler: 0,
        };
        let a = uniform_sample(&mut src);
        assert_eq!(a.coeff(0), 5);
        assert_eq!(a.coeff(1), 0);
    }

    #[test]
    fn monomial_wraps_negacyclically() {
        let p = RingElem::monomial(255).mul_schoolbook(&RingElem::monomial(1));
        assert_eq!(p.coeff(0), Q - 1);
        assert!((1..N).all(|i| p.coeff(i) == 0));
        assert_eq!(RingElem::monomial(255).mul(&RingElem::monomial(1)), p);
    }

    #[test]
    fn identity_and_additive_laws() {
        let a = random_elem(3);
        assert_eq!(a.mul(&RingElem::one()), a);
        assert_eq!(&a + &RingElem::zero(), a);
        assert_eq!(&a - &a, RingElem::zero());
        assert_eq!(&a + &(-&a), RingElem::zero());
    }

    #[test]
    fn ntt_matches_schoolbook() {
        for s in 0..20 {
            let a = random_elem(s);
            let b = random_elem(s + 100);
            assert_eq!(a.mul(&b), a.mul_schoolbook(&b));
        }
    }

    #[test]
    fn inner_product_matches_scalar_expansion() {
        let a = RingVec::new(vec![random_elem(10), random_elem(11)]);
        let b = RingVec::new(vec![random_elem(12), random_elem(13)]);
        let expect =
            &a.elems[0].mul_schoolbook(&b.elems[0]) + &a.elems[1].mul_schoolbook(&b.elems[1]);
        assert_eq!(a.inner_product(&b).unwrap(), expect);
        let c = RingVec::zero(3);
        assert!(a.inner_product(&c).is_err());
        assert!(a.add(&c).is_err());
    }

    #[test]
    fn distinct_labels_give_distinct_streams() {
        let mut a = [0u8; 64];
        let mut b = [0u8; 64];
        ByteStream::new(&[0; 32], b"x").fill(&mut a);
        ByteStream::new(&[0; 32], b"y").fill(&mut b);
        assert_ne!(a, b);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn elem() -> impl Strategy<Value = RingElem> {
            proptest::collection::vec(0..Q, N).prop_map(|v| RingElem::from_coeffs(&v).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn mul_is_a_commutative_ring(a in elem(), b in elem(), c in elem()) {
                prop_assert_eq!(a.mul(&b), b.mul(&a));
                prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
                prop_assert_eq!(a.mul(&(&b + &c)), &a.mul(&b) + &a.mul(&c));
            }
        }
    }
}
