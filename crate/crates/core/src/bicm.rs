//! Bit-interleaved coded modulation: BCH(320,257), a public interleaver and
//! the BW16 lattice code chained in front of Kyber encryption.

use crate::bch::{self, BchCode};
use crate::error::{Error, Result};
use crate::kyber_pke::{decrypt_raw, encrypt_scaled, Ciphertext, ParamSet, PublicKey, SecretKey};
use crate::lattice::{BlockSchedule, LatticeCode, MessageBlock};
use crate::ring::{ByteSource, ByteStream};

/// Payload bits carried per ciphertext.
pub const PAYLOAD_BITS: usize = 256;

const INTERLEAVER_LABEL: &[u8] = b"bicm-interleaver";

/// Bit mapper for one block.
pub fn bit2int(bits: &[bool], code: &LatticeCode) -> Result<MessageBlock> {
    code.bits_to_message(bits)
}

/// Bit demapper for one block.
pub fn int2bit(m: &MessageBlock, code: &LatticeCode) -> Result<Vec<bool>> {
    code.message_to_bits(m)
}

/// A permutation with its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    /// Fisher–Yates shuffle driven by a SHAKE256 stream of the public seed.
    pub fn from_seed(seed: &[u8; 32], n: usize) -> Self {
        let mut src = ByteStream::new(seed, INTERLEAVER_LABEL);
        let mut forward: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let bound = (i + 1) as u32;
            let limit = u32::MAX - u32::MAX % bound;
            let j = loop {
                let mut b = [0u8; 4];
                src.fill(&mut b);
                let v = u32::from_le_bytes(b);
                if v < limit {
                    break (v % bound) as usize;
                }
            };
            forward.swap(i, j);
        }
        let mut inverse = vec![0; n];
        for (i, &f) in forward.iter().enumerate() {
            inverse[f] = i;
        }
        Self { forward, inverse }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }
}

/// `out[Ω(i)] = in[i]`.
pub fn interleave(bits: &[bool], perm: &Permutation) -> Result<Vec<bool>> {
    if bits.len() != perm.len() {
        return Err(Error::LengthMismatch {
            expected: perm.len(),
            got: bits.len(),
        });
    }
    let mut out = vec![false; bits.len()];
    for (i, &b) in bits.iter().enumerate() {
        out[perm.forward[i]] = b;
    }
    Ok(out)
}

/// `out[i] = in[Ω(i)]`.
pub fn deinterleave(bits: &[bool], perm: &Permutation) -> Result<Vec<bool>> {
    if bits.len() != perm.len() {
        return Err(Error::LengthMismatch {
            expected: perm.len(),
            got: bits.len(),
        });
    }
    Ok(perm.forward.iter().map(|&f| bits[f]).collect())
}

/// Configuration of the BCH-BW16 pipeline.
#[derive(Clone, Debug)]
pub struct BicmConfig {
    params: ParamSet,
    schedule: BlockSchedule,
    interleaver_seed: [u8; 32],
    interleaver: Permutation,
    /// When false, BCH and interleaving are skipped and 320 raw bits are carried.
    coded: bool,
}

impl BicmConfig {
    /// `params` must already carry the desired `d̂_u`.
    pub fn new(params: ParamSet, interleaver_seed: [u8; 32]) -> Self {
        let schedule = BlockSchedule::bw16();
        debug_assert_eq!(schedule.capacity_bits() as usize, bch::N);
        Self {
            params,
            schedule,
            interleaver_seed,
            interleaver: Permutation::from_seed(&interleaver_seed, bch::N),
            coded: true,
        }
    }

    /// Identity BCH and identity interleaver: the plain BW16 lattice pipeline.
    pub fn uncoded(params: ParamSet) -> Self {
        Self {
            params,
            schedule: BlockSchedule::bw16(),
            interleaver_seed: [0; 32],
            interleaver: Permutation::identity(bch::N),
            coded: false,
        }
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn schedule(&self) -> &BlockSchedule {
        &self.schedule
    }

    pub fn interleaver(&self) -> &Permutation {
        &self.interleaver
    }

    pub fn interleaver_seed(&self) -> &[u8; 32] {
        &self.interleaver_seed
    }

    pub fn is_coded(&self) -> bool {
        self.coded
    }

    /// Message bits accepted by [`bicm_encode`].
    pub fn message_bits(&self) -> usize {
        if self.coded {
            PAYLOAD_BITS
        } else {
            bch::N
        }
    }
}

/// Message bits to the 320 channel bits that feed the lattice mapper.
pub fn channel_bits(m: &[bool], config: &BicmConfig) -> Result<Vec<bool>> {
    if m.len() != config.message_bits() {
        return Err(Error::LengthMismatch {
            expected: config.message_bits(),
            got: m.len(),
        });
    }
    if !config.coded {
        return Ok(m.to_vec());
    }
    let mut padded = m.to_vec();
    padded.push(false);
    let word = BchCode::standard().encode(&padded)?;
    interleave(&word, &config.interleaver)
}

pub fn bicm_encode(
    m: &[bool],
    pk: &PublicKey,
    config: &BicmConfig,
    seed: &[u8; 32],
) -> Result<Ciphertext> {
    let bits = channel_bits(m, config)?;
    let blocks = config.schedule.blocks_from_bits(&bits)?;
    let payload = config.schedule.encode(&blocks)?;
    encrypt_scaled(pk, &payload, &config.params, seed)
}

pub fn bicm_decode(ct: &Ciphertext, sk: &SecretKey, config: &BicmConfig) -> Result<Vec<bool>> {
    bicm_decode_with_faults(ct, sk, config, None)
}

/// Decoding with an optional mask XORed onto the demapped bits before deinterleaving.
pub fn bicm_decode_with_faults(
    ct: &Ciphertext,
    sk: &SecretKey,
    config: &BicmConfig,
    faults: Option<&[bool]>,
) -> Result<Vec<bool>> {
    let y = decrypt_raw(sk, ct)?;
    let blocks = config.schedule.decode(&y);
    let mut bits = config.schedule.bits_from_blocks(&blocks)?;
    if let Some(mask) = faults {
        if mask.len() != bits.len() {
            return Err(Error::LengthMismatch {
                expected: bits.len(),
                got: mask.len(),
            });
        }
        for (b, &f) in bits.iter_mut().zip(mask) {
            *b ^= f;
        }
    }
    if !config.coded {
        return Ok(bits);
    }
    let word = deinterleave(&bits, &config.interleaver)?;
    let decoded = BchCode::standard().decode(&word)?;
    Ok(decoded.message[..PAYLOAD_BITS].to_vec())
}
