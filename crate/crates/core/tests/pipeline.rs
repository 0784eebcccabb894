use kyber_lattice::analysis::EncoderKind;
use kyber_lattice::encoder::PayloadEncoder;
use kyber_lattice::kyber_pke::{decrypt_raw, keygen, Ciphertext, ParamSet};
use kyber_lattice::ring::RingElem;
use kyber_lattice::simulate::random_bits;

#[test]
fn serialized_ciphertexts_decrypt_for_every_encoder() {
    for base in ParamSet::ALL {
        for kind in EncoderKind::ALL {
            let params = if kind == EncoderKind::Bicm {
                base.with_du_hat(8).unwrap()
            } else {
                base
            };
            let enc = PayloadEncoder::new(kind, params, [3; 32]);
            let (pk, sk) = keygen(&params, &[4; 32]);
            let m = random_bits(&[5; 32], enc.capacity_bits());
            let ct = enc.encrypt(&pk, &m, &[6; 32]).unwrap();
            let bytes = ct.to_bytes();
            assert_eq!(bytes.len() * 8, params.ciphertext_bits());
            let back = Ciphertext::from_bytes(&bytes, &params).unwrap();
            assert_eq!(back, ct);
            assert_eq!(
                enc.decrypt(&sk, &back).unwrap(),
                m,
                "{} {}",
                params.name(),
                kind.name()
            );
        }
    }
}

#[test]
fn lattice_encoders_keep_ciphertext_size() {
    for p in ParamSet::ALL {
        let sizes: Vec<usize> = [EncoderKind::Int, EncoderKind::Bw16, EncoderKind::Leech]
            .iter()
            .map(|&k| {
                let enc = PayloadEncoder::new(k, p, [0; 32]);
                let (pk, _) = keygen(&p, &[1; 32]);
                enc.encrypt(&pk, &vec![true; enc.capacity_bits()], &[2; 32])
                    .unwrap()
                    .bit_size()
            })
            .collect();
        assert!(sizes.iter().all(|&s| s == p.ciphertext_bits()));
    }
}

#[test]
fn decoders_tolerate_bounded_offsets() {
    // Shift every coefficient of the payload by a bounded amount and decode directly.
    for kind in EncoderKind::ALL {
        let enc = PayloadEncoder::new(kind, ParamSet::KYBER768, [7; 32]);
        let m = random_bits(&[8; 32], enc.capacity_bits());
        let payload = enc.payload(&m).unwrap();
        let offsets: Vec<i64> = (0..256).map(|i| ((i * 37) % 121) as i64 - 60).collect();
        let y = &payload + &RingElem::from_signed(&offsets).unwrap();
        assert_eq!(enc.decode(&y).unwrap(), m, "{}", kind.name());
    }
}

#[test]
fn bicm_tolerates_one_destroyed_block() {
    let enc = PayloadEncoder::new(EncoderKind::Bicm, ParamSet::KYBER512, [9; 32]);
    let m = random_bits(&[10; 32], 256);
    let payload = enc.payload(&m).unwrap();
    // Push the first 16-coefficient block far from its codeword.
    let offsets: Vec<i64> = (0..256).map(|i| if i < 16 { 700 } else { 0 }).collect();
    let y = &payload + &RingElem::from_signed(&offsets).unwrap();
    assert_eq!(enc.decode(&y).unwrap(), m);
}

#[test]
fn distinct_interleavers_give_distinct_payloads() {
    let m = random_bits(&[11; 32], 256);
    let a = PayloadEncoder::new(EncoderKind::Bicm, ParamSet::KYBER512, [1; 32])
        .payload(&m)
        .unwrap();
    let b = PayloadEncoder::new(EncoderKind::Bicm, ParamSet::KYBER512, [2; 32])
        .payload(&m)
        .unwrap();
    assert_ne!(a, b);
}

#[test]
fn zero_noise_decryption_is_exact() {
    let p = ParamSet::KYBER512;
    let enc = PayloadEncoder::new(EncoderKind::Leech, p, [0; 32]);
    let (pk, sk) = keygen(&p, &[12; 32]);
    let m = random_bits(&[13; 32], 380);
    let ct = enc.encrypt(&pk, &m, &[14; 32]).unwrap();
    let y = decrypt_raw(&sk, &ct).unwrap();
    let noise: Vec<i32> = (&y - &enc.payload(&m).unwrap()).centered();
    assert!(noise.iter().all(|x| x.abs() < 832));
}
