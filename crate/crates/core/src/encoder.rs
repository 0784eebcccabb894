//! One interface over the four payload encoders.

use crate::analysis::EncoderKind;
use crate::bicm::{self, BicmConfig};
use crate::error::{Error, Result};
use crate::kyber_pke::{
    bits_to_poly, decode_bits, decrypt_raw, encrypt_scaled, payload_scale, Ciphertext, ParamSet,
    PublicKey, SecretKey,
};
use crate::lattice::{BlockSchedule, LatticeCode};
use crate::ring::RingElem;

#[derive(Clone, Debug)]
pub struct PayloadEncoder {
    kind: EncoderKind,
    params: ParamSet,
    schedule: BlockSchedule,
    bicm: Option<BicmConfig>,
}

impl PayloadEncoder {
    /// `params` carries any `d̂_u`; the interleaver seed only matters for BICM.
    pub fn new(kind: EncoderKind, params: ParamSet, interleaver_seed: [u8; 32]) -> Self {
        Self {
            kind,
            params,
            schedule: kind.schedule(),
            bicm: (kind == EncoderKind::Bicm).then(|| BicmConfig::new(params, interleaver_seed)),
        }
    }

    /// Validates CLI-style selectors: `d̂_u` needs BICM, BICM needs a BW16-capable layout.
    pub fn from_selectors(
        kind: EncoderKind,
        base: ParamSet,
        du_hat: Option<u32>,
        interleaver_seed: [u8; 32],
    ) -> Result<Self> {
        let params = match du_hat {
            None => base,
            Some(d) if kind == EncoderKind::Bicm => base.with_du_hat(d)?,
            Some(_) => {
                return Err(Error::InvalidConfig(format!(
                    "--du-hat applies only to the bicm encoder, not {}",
                    kind.name()
                )))
            }
        };
        Ok(Self::new(kind, params, interleaver_seed))
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn schedule(&self) -> &BlockSchedule {
        &self.schedule
    }

    pub fn bicm_config(&self) -> Option<&BicmConfig> {
        self.bicm.as_ref()
    }

    /// Message bits accepted per encryption.
    pub fn capacity_bits(&self) -> usize {
        match &self.bicm {
            Some(c) => c.message_bits(),
            None => self.schedule.capacity_bits() as usize,
        }
    }

    /// Scaled payload polynomial the message maps to before noise is added.
    pub fn payload(&self, bits: &[bool]) -> Result<RingElem> {
        self.check_len(bits)?;
        match (&self.bicm, self.kind) {
            (_, EncoderKind::Int) => Ok(bits_to_poly(bits)?.scale(payload_scale(2))),
            (Some(c), _) => {
                let channel = bicm::channel_bits(bits, c)?;
                self.schedule
                    .encode(&self.schedule.blocks_from_bits(&channel)?)
            }
            (None, _) => self.schedule.encode(&self.schedule.blocks_from_bits(bits)?),
        }
    }

    pub fn encrypt(&self, pk: &PublicKey, bits: &[bool], seed: &[u8; 32]) -> Result<Ciphertext> {
        encrypt_scaled(pk, &self.payload(bits)?, &self.params, seed)
    }

    pub fn decrypt(&self, sk: &SecretKey, ct: &Ciphertext) -> Result<Vec<bool>> {
        self.decode(&decrypt_raw(sk, ct)?)
    }

    /// Message from a noisy decryption `y`.
    pub fn decode(&self, y: &RingElem) -> Result<Vec<bool>> {
        match (&self.bicm, self.kind) {
            (_, EncoderKind::Int) => Ok(decode_bits(y)),
            (Some(c), _) => {
                let bits = self.schedule.bits_from_blocks(&self.schedule.decode(y))?;
                let word = bicm::deinterleave(&bits, c.interleaver())?;
                let decoded = crate::bch::BchCode::standard().decode(&word)?;
                Ok(decoded.message[..bicm::PAYLOAD_BITS].to_vec())
            }
            (None, _) => self.schedule.bits_from_blocks(&self.schedule.decode(y)),
        }
    }

    /// Lattice codes in coefficient order, one per block.
    pub fn block_codes(&self) -> Vec<&'static LatticeCode> {
        self.schedule.codes().collect()
    }

    fn check_len(&self, bits: &[bool]) -> Result<()> {
        if bits.len() != self.capacity_bits() {
            return Err(Error::LengthMismatch {
                expected: self.capacity_bits(),
                got: bits.len(),
            });
        }
        Ok(())
    }
}
