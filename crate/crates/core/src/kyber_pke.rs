//! Kyber.CPA key generation, encryption and raw decryption with a generalized
//! payload slot.
//!
//! The classic scheme adds `round(q/2) * m` for a bit message `m`; here the
//! payload is any polynomial the caller has already scaled (lattice codewords
//! use `round(q/p) * x` per block), so every encoder in the crate shares one
//! encryption path. Decryption stops at `y = v - s^T u`; decoding `y` is the
//! encoder's job.
//!
//! Randomness expansion is fixed so the noise terms can be recomputed:
//!
//! * key generation: `rho = H(seed, 0x00)`, `sigma = H(seed, 0x01)`;
//!   `A[i][j] = Uniform(rho, [0x02, i, j])`; one stream `H(sigma, 0x03)`
//!   yields `s_0..s_{k-1}` then `e_0..e_{k-1}` from `beta_eta1`.
//! * encryption: one stream `H(seed, 0x05)` yields `r_0..r_{k-1}` from
//!   `beta_eta1`, then `e1_0..e1_{k-1}`, then `e2` from `beta_eta2`.
//!
//! Serialized keys and ciphertexts are little-endian packed bit fields: value
//! `i` of a `d`-bit array occupies stream bits `[i*d, (i+1)*d)`, least
//! significant bit first, and stream bit `b` lives in byte `b / 8` at bit
//! position `b % 8`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ring::{self, cbd_sample, uniform_sample, ByteStream, RingElem, RingVec, N, Q};

const LABEL_RHO: u8 = 0x00;
const LABEL_SIGMA: u8 = 0x01;
const LABEL_MATRIX: u8 = 0x02;
const LABEL_KEY_NOISE: u8 = 0x03;
const LABEL_ENC_NOISE: u8 = 0x05;

/// A Kyber parameter triple plus compression depths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ParamSet {
    name: &'static str,
    k: usize,
    eta1: u32,
    eta2: u32,
    du: u32,
    dv: u32,
    du_hat: Option<u32>,
}

impl ParamSet {
    pub const KYBER512: ParamSet = ParamSet::base("KYBER512", 2, 3, 2, 10, 4);
    pub const KYBER768: ParamSet = ParamSet::base("KYBER768", 3, 2, 2, 10, 4);
    pub const KYBER1024: ParamSet = ParamSet::base("KYBER1024", 4, 2, 2, 11, 5);

    pub const ALL: [ParamSet; 3] = [Self::KYBER512, Self::KYBER768, Self::KYBER1024];

    const fn base(name: &'static str, k: usize, eta1: u32, eta2: u32, du: u32, dv: u32) -> Self {
        ParamSet {
            name,
            k,
            eta1,
            eta2,
            du,
            dv,
            du_hat: None,
        }
    }

    /// Looks a parameter set up by security level (512, 768 or 1024).
    pub fn from_level(level: u32) -> Result<Self> {
        match level {
            512 => Ok(Self::KYBER512),
            768 => Ok(Self::KYBER768),
            1024 => Ok(Self::KYBER1024),
            other => Err(Error::InvalidParams(format!(
                "unknown parameter set {other}"
            ))),
        }
    }

    /// Overrides the `u` compression depth. Only `d_u`, 9 and 8 are allowed.
    pub fn with_du_hat(self, du_hat: u32) -> Result<Self> {
        if du_hat != self.du && du_hat != 9 && du_hat != 8 {
            return Err(Error::InvalidParams(format!(
                "d_u_hat = {du_hat} not in {{{}, 9, 8}}",
                self.du
            )));
        }
        Ok(ParamSet {
            du_hat: Some(du_hat),
            ..self
        })
    }

    /// Harness-only override of `d_v`, used to inflate the uniform noise
    /// component in stress campaigns.
    pub(crate) fn with_dv_override(self, dv: u32) -> Result<Self> {
        ring::check_depth(dv)?;
        Ok(ParamSet { dv, ..self })
    }

    /// Harness-only override of the `u` depth beyond the allowed `d̂_u` values.
    pub(crate) fn with_u_depth_override(self, d: u32) -> Result<Self> {
        ring::check_depth(d)?;
        Ok(ParamSet {
            du_hat: Some(d),
            ..self
        })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn eta1(&self) -> u32 {
        self.eta1
    }
    pub fn eta2(&self) -> u32 {
        self.eta2
    }
    pub fn du(&self) -> u32 {
        self.du
    }
    pub fn dv(&self) -> u32 {
        self.dv
    }
    pub fn du_hat(&self) -> Option<u32> {
        self.du_hat
    }

    /// Depth actually used to compress `u`.
    pub fn u_depth(&self) -> u32 {
        self.du_hat.unwrap_or(self.du)
    }

    /// `k*n*d_u' + n*d_v`.
    pub fn ciphertext_bits(&self) -> usize {
        self.k * N * self.u_depth() as usize + N * self.dv as usize
    }

    /// Security level as printed in the name.
    pub fn level(&self) -> u32 {
        match self.k {
            2 => 512,
            3 => 768,
            _ => 1024,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    pub t: RingVec,
    pub rho: [u8; 32],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    pub s: RingVec,
}

/// Coefficients compressed to `depth` bits each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressedPoly {
    pub depth: u32,
    pub values: Vec<u32>,
}

impl CompressedPoly {
    fn from_elem(a: &RingElem, depth: u32) -> Result<Self> {
        Ok(Self {
            depth,
            values: a.compress(depth)?,
        })
    }

    pub fn decompress(&self) -> Result<RingElem> {
        RingElem::decompress(&self.values, self.depth)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub u: Vec<CompressedPoly>,
    pub v: CompressedPoly,
}

impl Ciphertext {
    /// `k*n*d_u + n*d_v` for the depths actually used.
    pub fn bit_size(&self) -> usize {
        self.u.iter().map(|p| p.depth as usize * N).sum::<usize>() + self.v.depth as usize * N
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.bit_size() / 8);
        for p in &self.u {
            out.extend(pack_bits(&p.values, p.depth));
        }
        out.extend(pack_bits(&self.v.values, self.v.depth));
        out
    }

    pub fn from_bytes(bytes: &[u8], params: &ParamSet) -> Result<Self> {
        let du = params.u_depth();
        let ulen = N * du as usize / 8;
        let expected = params.k * ulen + N * params.dv as usize / 8;
        if bytes.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: bytes.len(),
            });
        }
        let u = (0..params.k)
            .map(|i| CompressedPoly {
                depth: du,
                values: unpack_bits(&bytes[i * ulen..(i + 1) * ulen], du, N),
            })
            .collect();
        let v = CompressedPoly {
            depth: params.dv,
            values: unpack_bits(&bytes[params.k * ulen..], params.dv, N),
        };
        Ok(Self { u, v })
    }
}

impl PublicKey {
    /// `t` as 12-bit fields, followed by `rho`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for e in &self.t.elems {
            out.extend(pack_bits(&e.coeffs().collect::<Vec<_>>(), 12));
        }
        out.extend_from_slice(&self.rho);
        out
    }

    pub fn from_bytes(bytes: &[u8], params: &ParamSet) -> Result<Self> {
        let plen = N * 12 / 8;
        let expected = params.k * plen + 32;
        if bytes.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: bytes.len(),
            });
        }
        let elems = (0..params.k)
            .map(|i| RingElem::from_coeffs(&unpack_bits(&bytes[i * plen..(i + 1) * plen], 12, N)))
            .collect::<Result<Vec<_>>>()
            .map_err(|_| Error::Malformed("public key coefficient >= q".into()))?;
        let mut rho = [0u8; 32];
        rho.copy_from_slice(&bytes[params.k * plen..]);
        Ok(Self {
            t: RingVec::new(elems),
            rho,
        })
    }
}

impl SecretKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.s
            .elems
            .iter()
            .flat_map(|e| pack_bits(&e.coeffs().collect::<Vec<_>>(), 12))
            .collect()
    }

    pub fn from_bytes(bytes: &[u8], params: &ParamSet) -> Result<Self> {
        let plen = N * 12 / 8;
        if bytes.len() != params.k * plen {
            return Err(Error::LengthMismatch {
                expected: params.k * plen,
                got: bytes.len(),
            });
        }
        let elems = bytes
            .chunks_exact(plen)
            .map(|c| RingElem::from_coeffs(&unpack_bits(c, 12, N)))
            .collect::<Result<Vec<_>>>()
            .map_err(|_| Error::Malformed("secret key coefficient >= q".into()))?;
        Ok(Self {
            s: RingVec::new(elems),
        })
    }
}

/// Packs `d`-bit values little-endian into bytes.
pub fn pack_bits(values: &[u32], d: u32) -> Vec<u8> {
    let total = values.len() * d as usize;
    let mut out = vec![0u8; total.div_ceil(8)];
    for (i, &v) in values.iter().enumerate() {
        for b in 0..d as usize {
            if (v >> b) & 1 == 1 {
                let pos = i * d as usize + b;
                out[pos / 8] |= 1 << (pos % 8);
            }
        }
    }
    out
}

/// Inverse of [`pack_bits`].
pub fn unpack_bits(bytes: &[u8], d: u32, count: usize) -> Vec<u32> {
    (0..count)
        .map(|i| {
            (0..d as usize).fold(0u32, |acc, b| {
                let pos = i * d as usize + b;
                acc | ((((bytes[pos / 8] >> (pos % 8)) & 1) as u32) << b)
            })
        })
        .collect()
}

/// Secret and error vectors drawn during key generation.
#[derive(Clone, Debug)]
pub struct KeyNoise {
    pub s: RingVec,
    pub e: RingVec,
}

/// Ephemeral terms drawn during encryption.
#[derive(Clone, Debug)]
pub struct EncryptionNoise {
    pub r: RingVec,
    pub e1: RingVec,
    pub e2: RingElem,
}

/// Expands the public matrix `A` from `rho`; `A[i][j]` is row `i`, column `j`.
pub fn expand_matrix(rho: &[u8; 32], k: usize) -> Vec<Vec<RingElem>> {
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    uniform_sample(&mut ByteStream::new(rho, &[LABEL_MATRIX, i as u8, j as u8]))
                })
                .collect()
        })
        .collect()
}

/// Splits a key-generation seed into `(rho, sigma)`.
pub fn split_key_seed(seed: &[u8; 32]) -> ([u8; 32], [u8; 32]) {
    (
        ByteStream::derive_seed(seed, &[LABEL_RHO]),
        ByteStream::derive_seed(seed, &[LABEL_SIGMA]),
    )
}

pub fn expand_key_noise(params: &ParamSet, sigma: &[u8; 32]) -> KeyNoise {
    let mut stream = ByteStream::new(sigma, &[LABEL_KEY_NOISE]);
    let mut draw = |n: usize| -> RingVec {
        RingVec::new(
            (0..n)
                .map(|_| cbd_sample(params.eta1, &mut stream).expect("valid eta"))
                .collect(),
        )
    };
    let s = draw(params.k);
    let e = draw(params.k);
    KeyNoise { s, e }
}

pub fn expand_encryption_noise(params: &ParamSet, seed: &[u8; 32]) -> EncryptionNoise {
    let mut stream = ByteStream::new(seed, &[LABEL_ENC_NOISE]);
    let r = RingVec::new(
        (0..params.k)
            .map(|_| cbd_sample(params.eta1, &mut stream).expect("valid eta"))
            .collect(),
    );
    let e1 = RingVec::new(
        (0..params.k)
            .map(|_| cbd_sample(params.eta2, &mut stream).expect("valid eta"))
            .collect(),
    );
    let e2 = cbd_sample(params.eta2, &mut stream).expect("valid eta");
    EncryptionNoise { r, e1, e2 }
}

fn mat_vec(a: &[Vec<RingElem>], x: &RingVec, transpose: bool) -> RingVec {
    let k = a.len();
    RingVec::new(
        (0..k)
            .map(|i| {
                let row = RingVec::new(
                    (0..k)
                        .map(|j| {
                            if transpose {
                                a[j][i].clone()
                            } else {
                                a[i][j].clone()
                            }
                        })
                        .collect(),
                );
                row.inner_product(x).expect("matching rank")
            })
            .collect(),
    )
}

/// Deterministic key generation: `t = A s + e`.
pub fn keygen(params: &ParamSet, seed: &[u8; 32]) -> (PublicKey, SecretKey) {
    let (rho, sigma) = split_key_seed(seed);
    let a = expand_matrix(&rho, params.k);
    let KeyNoise { s, e } = expand_key_noise(params, &sigma);
    let t = mat_vec(&a, &s, false).add(&e).expect("matching rank");
    (PublicKey { t, rho }, SecretKey { s })
}

/// `round(q/p)` with ties up.
pub fn payload_scale(p: u32) -> u32 {
    ring::round_div(Q as u64, p as u64) as u32
}

/// Encrypts an already-scaled payload polynomial:
/// `u = Compress(A^T r + e1, d_u')`, `v = Compress(t^T r + e2 + payload, d_v)`.
pub fn encrypt_scaled(
    pk: &PublicKey,
    payload: &RingElem,
    params: &ParamSet,
    seed: &[u8; 32],
) -> Result<Ciphertext> {
    if pk.t.len() != params.k {
        return Err(Error::LengthMismatch {
            expected: params.k,
            got: pk.t.len(),
        });
    }
    let a = expand_matrix(&pk.rho, params.k);
    let EncryptionNoise { r, e1, e2 } = expand_encryption_noise(params, seed);
    let u = mat_vec(&a, &r, true).add(&e1)?;
    let v = &(&pk.t.inner_product(&r)? + &e2) + payload;
    let u = u
        .elems
        .iter()
        .map(|p| CompressedPoly::from_elem(p, params.u_depth()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ciphertext {
        u,
        v: CompressedPoly::from_elem(&v, params.dv)?,
    })
}

/// Encrypts a codeword `x` with coefficients in `[0, p)`, scaled by `round(q/p)`.
/// With `p = 2` and `x` a bit vector this is classic Kyber.CPA encryption.
pub fn encrypt_payload(
    pk: &PublicKey,
    x: &RingElem,
    p: u32,
    params: &ParamSet,
    seed: &[u8; 32],
) -> Result<Ciphertext> {
    if ![2, 4, 8].contains(&p) {
        return Err(Error::InvalidParams(format!(
            "shaping modulus p = {p} not in {{2, 4, 8}}"
        )));
    }
    if let Some(c) = x.coeffs().find(|&c| c >= p) {
        return Err(Error::OutOfRange {
            value: c as i64,
            bound: p as i64,
        });
    }
    encrypt_scaled(pk, &x.scale(payload_scale(p)), params, seed)
}

/// `y = Decompress(v, d_v) - s^T Decompress(u, d_u')`.
pub fn decrypt_raw(sk: &SecretKey, ct: &Ciphertext) -> Result<RingElem> {
    if sk.s.len() != ct.u.len() {
        return Err(Error::LengthMismatch {
            expected: sk.s.len(),
            got: ct.u.len(),
        });
    }
    let u = RingVec::new(
        ct.u.iter()
            .map(|p| p.decompress())
            .collect::<Result<Vec<_>>>()?,
    );
    let v = ct.v.decompress()?;
    Ok(&v - &sk.s.inner_product(&u)?)
}

/// Classic per-coefficient threshold decoder, `Compress_q(y, 1)`.
pub fn decode_bits(y: &RingElem) -> Vec<bool> {
    y.coeffs()
        .map(|c| ring::compress_unchecked(c, 1) == 1)
        .collect()
}

/// Bit message as a 0/1 polynomial.
pub fn bits_to_poly(bits: &[bool]) -> Result<RingElem> {
    if bits.len() != N {
        return Err(Error::LengthMismatch {
            expected: N,
            got: bits.len(),
        });
    }
    Ok(RingElem::from_fn(|i| bits[i] as u32))
}
