use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::kyber_pke::decode_bits;
use crate::ring::Q;

/// Solve `B z = x` over the rationals and report whether `z` is integral.
fn in_lattice_oracle(b: &IntMatrix, x: &[i64]) -> bool {
    let n = b.rows();
    let mut a: Vec<Vec<Ratio<i128>>> = (0..n)
        .map(|i| {
            let mut row: Vec<Ratio<i128>> = b
                .row(i)
                .iter()
                .map(|&v| Ratio::from_integer(v as i128))
                .collect();
            row.push(Ratio::from_integer(x[i] as i128));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| a[r][col] != Ratio::from_integer(0))
            .expect("nonsingular");
        a.swap(col, piv);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col && a[r][col] != Ratio::from_integer(0) {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    a.iter().all(|row| row[n].is_integer())
}

fn rng(tag: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(0x1a77_1ce0 ^ tag)
}

fn random_message(code: &LatticeCode, r: &mut impl Rng) -> MessageBlock {
    MessageBlock(code.moduli().iter().map(|&m| r.gen_range(0..m)).collect())
}

/// Uniform direction, radius uniform in `[0, max_r]`.
fn random_noise(ell: usize, max_r: f64, r: &mut impl Rng) -> Vec<f64> {
    let g: Vec<f64> = (0..ell).map(|_| r.sample(StandardNormal)).collect();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rad = r.gen_range(0.0..max_r);
    g.iter().map(|v| v / norm * rad).collect()
}

fn random_lattice_point(code: &LatticeCode, r: &mut impl Rng) -> Vec<i64> {
    let z: Vec<i64> = (0..code.ell()).map(|_| r.gen_range(-3..=3)).collect();
    code.basis().mul_vec(&z)
}

fn as_f64(x: &[i64]) -> Vec<f64> {
    x.iter().map(|&v| v as f64).collect()
}

#[test]
fn identity_snf_is_trivial() {
    let s = snf(&IntMatrix::identity(7)).unwrap();
    assert_eq!(s.u, IntMatrix::identity(7));
    assert_eq!(s.diagonal, vec![1; 7]);
    assert_eq!(s.u_prime, IntMatrix::identity(7));
}

#[test]
fn bw16_snf_matches_published_diagonal() {
    let s = snf(&bw16::basis()).unwrap();
    assert_eq!(
        s.diagonal,
        vec![1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 4]
    );
    let d = IntMatrix::diagonal(&s.diagonal);
    assert_eq!(s.u.mul(&d).mul(&s.u_prime), bw16::basis());
}

#[test]
fn bw16_rectangular_basis_spans_same_lattice() {
    let code = LatticeCode::bw16();
    let b = code.basis();
    for j in 0..16 {
        assert!(
            in_lattice_oracle(b, &code.b_hat().column(j)),
            "B̂ column {j}"
        );
    }
    assert_eq!(
        code.b_hat().determinant().abs(),
        code.pi().iter().map(|&d| d as i128).product()
    );
    assert_eq!(b.determinant().abs(), 1 << 12);
}

#[test]
fn leech_snf_gives_36_bits() {
    let code = LatticeCode::leech24();
    let s = snf(code.basis()).unwrap();
    let prod: i128 = s.diagonal.iter().map(|&d| d as i128).product();
    assert_eq!(prod, 1i128 << 36);
    assert_eq!(code.bits_per_block(), 36);
    assert!(code.pi().iter().all(|&d| 8 % d == 0));
    assert_eq!(code.b_hat().determinant().abs(), prod);
    for j in 0..24 {
        assert!(in_lattice_oracle(code.basis(), &code.b_hat().column(j)));
        assert!(leech::contains(&code.b_hat().column(j)));
    }
}

#[test]
fn bits_per_block() {
    assert_eq!(LatticeCode::bw16().bits_per_block(), 20);
    assert_eq!(LatticeCode::leech24().bits_per_block(), 36);
    assert_eq!(LatticeCode::integer().bits_per_block(), 1);
}

#[test]
fn minimum_norms_and_normalized_radius() {
    assert_eq!(shortest_vector(&IntMatrix::identity(5)).0, 1);
    let bw = LatticeCode::bw16();
    let lc = LatticeCode::leech24();
    assert_eq!(bw.min_norm_sq(), 8);
    assert_eq!(lc.min_norm_sq(), 32);
    let (_, v) = shortest_vector(lc.basis());
    assert!(leech::contains(&v));
    assert!(
        (bw.normalized_radius() - 0.7067).abs() < 5e-5,
        "{}",
        bw.normalized_radius()
    );
    assert!(
        (lc.normalized_radius() - 0.7067).abs() < 5e-5,
        "{}",
        lc.normalized_radius()
    );
}

#[test]
fn zero_message_encodes_to_zero() {
    for code in [
        LatticeCode::integer(),
        LatticeCode::bw16(),
        LatticeCode::leech24(),
    ] {
        assert_eq!(
            code.encode(&MessageBlock::zero(code.ell())).unwrap(),
            vec![0; code.ell()]
        );
    }
}

#[test]
fn bw16_first_unit_message_is_all_ones() {
    let mut m = MessageBlock::zero(16);
    m.0[0] = 1;
    assert_eq!(hs_encode(&m, LatticeCode::bw16()).unwrap(), vec![1; 16]);
}

#[test]
fn out_of_range_messages_rejected() {
    let code = LatticeCode::bw16();
    let mut m = MessageBlock::zero(16);
    m.0[15] = 1;
    assert_eq!(
        code.encode(&m).unwrap_err(),
        Error::OutOfRange { value: 1, bound: 1 }
    );
    m.0[15] = 0;
    m.0[5] = 2;
    assert!(code.encode(&m).is_err());
    assert!(code.encode(&MessageBlock::zero(3)).is_err());
}

#[test]
fn encoded_words_lift_to_lattice_points() {
    let mut r = rng(1);
    for code in [LatticeCode::bw16(), LatticeCode::leech24()] {
        for _ in 0..50 {
            let x = code.encode(&random_message(code, &mut r)).unwrap();
            assert!(x.iter().all(|&v| (0..code.p()).contains(&v)));
            assert!(in_lattice_oracle(code.basis(), &x));
        }
    }
}

#[test]
fn p_times_unit_vectors_are_lattice_points() {
    for code in [LatticeCode::bw16(), LatticeCode::leech24()] {
        for i in 0..code.ell() {
            let mut e = vec![0; code.ell()];
            e[i] = code.p();
            assert!(code.contains(&e));
        }
    }
}

#[test]
fn contains_agrees_with_oracle() {
    let mut r = rng(2);
    for code in [LatticeCode::bw16(), LatticeCode::leech24()] {
        for _ in 0..100 {
            let x: Vec<i64> = (0..code.ell()).map(|_| r.gen_range(-4..=4)).collect();
            assert_eq!(code.contains(&x), in_lattice_oracle(code.basis(), &x));
        }
    }
}

#[test]
fn leech_definition_agrees_with_basis() {
    let mut r = rng(3);
    let code = LatticeCode::leech24();
    for _ in 0..200 {
        let x = random_lattice_point(code, &mut r);
        assert!(leech::contains(&x));
        let mut off = x.clone();
        off[r.gen_range(0..24)] += 2;
        assert_eq!(leech::contains(&off), in_lattice_oracle(code.basis(), &off));
    }
}

#[test]
fn cvp_integer_examples() {
    assert_eq!(cvp_integer(&[0.0; 4], 3.0), vec![0; 4]);
    assert_eq!(cvp_integer(&[3.0 * 0.49, -3.0 * 0.49], 3.0), vec![0, 0]);
    assert_eq!(cvp_integer(&[2.5, -2.5, 1.51], 1.0), vec![2, -3, 2]);
    let mut r = rng(4);
    let id = IntMatrix::identity(6);
    for _ in 0..200 {
        let y: Vec<f64> = (0..6).map(|_| r.gen_range(-20.0..20.0)).collect();
        assert_eq!(cvp_integer(&y, 1.0), cvp_bruteforce(&y, &id, 2.0).unwrap());
    }
}

#[test]
fn bruteforce_returns_lattice_points_unchanged() {
    let mut r = rng(5);
    for code in [LatticeCode::bw16(), LatticeCode::leech24()] {
        let e = Enumerator::new(code.basis());
        for _ in 0..20 {
            let x = random_lattice_point(code, &mut r);
            assert_eq!(e.closest(&as_f64(&x), 1.0).unwrap(), x);
        }
    }
}

fn decoder_matches_oracle(code: &LatticeCode, tag: u64) {
    let mut r = rng(tag);
    let e = Enumerator::new(code.basis());
    let max_r = 0.99 * code.lambda() / 2.0;
    let mut counts = std::collections::BTreeSet::new();
    for _ in 0..1000 {
        let x = random_lattice_point(code, &mut r);
        let n = random_noise(code.ell(), max_r, &mut r);
        let y: Vec<f64> = x.iter().zip(&n).map(|(&a, b)| a as f64 + b).collect();
        let mut ops = OpCounter::default();
        let got = code.cvp_counted(&y, &mut ops);
        counts.insert(ops.ops);
        assert_eq!(got, x);
        assert_eq!(e.closest(&y, code.lambda() / 2.0).unwrap(), x);
    }
    assert_eq!(counts.len(), 1, "operation counts vary: {counts:?}");
}

#[test]
fn bw16_decoder_matches_oracle_within_half_min_distance() {
    decoder_matches_oracle(LatticeCode::bw16(), 6);
}

#[test]
fn leech_decoder_matches_oracle_within_half_min_distance() {
    decoder_matches_oracle(LatticeCode::leech24(), 7);
}

#[test]
fn decoders_match_oracle_on_arbitrary_targets() {
    let mut r = rng(8);
    for code in [LatticeCode::bw16(), LatticeCode::leech24()] {
        let e = Enumerator::new(code.basis());
        for _ in 0..100 {
            let y: Vec<f64> = (0..code.ell()).map(|_| r.gen_range(-6.0..6.0)).collect();
            // Covering radius of both lattices is at most λ/√2 in these scalings.
            assert_eq!(code.cvp(&y), e.closest(&y, code.lambda()).unwrap());
        }
    }
}

#[test]
fn ties_resolve_like_the_oracle() {
    let code = LatticeCode::bw16();
    let e = Enumerator::new(code.basis());
    let mut y = [0.0; 16];
    y[0] = 1.0;
    y[1] = 1.0;
    assert_eq!(code.cvp(&y), e.closest(&y, 2.0).unwrap());
    let code = LatticeCode::leech24();
    let e = Enumerator::new(code.basis());
    let mut y = [0.0; 24];
    y[0] = 2.0;
    y[1] = 2.0;
    y[2] = 2.0;
    y[3] = 2.0;
    y[4] = 2.0;
    y[5] = 2.0;
    y[6] = 2.0;
    y[7] = 2.0;
    assert_eq!(code.cvp(&y), e.closest(&y, 6.0).unwrap());
}

#[test]
fn bw16_exhaustive_subgrid_roundtrip() {
    let code = LatticeCode::bw16();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let mut m = MessageBlock::zero(16);
                m.0[..3].copy_from_slice(&[a, b, c]);
                let x = hs_encode(&m, code).unwrap();
                assert_eq!(hs_cvp_decode(&as_f64(&x), code), m);
            }
        }
    }
}

#[test]
fn last_bw16_digit_is_forced_zero() {
    let code = LatticeCode::bw16();
    assert_eq!(code.moduli()[15], 1);
    let mut m = MessageBlock(vec![3, 2, 1, 0, 3, 1, 0, 1, 1, 0, 1, 0, 1, 1, 0, 0]);
    m.0[15] = 0;
    let x = code.encode(&m).unwrap();
    assert_eq!(code.decode(&as_f64(&x)), m);
}

#[test]
fn noisy_roundtrip_within_half_min_distance() {
    let mut r = rng(9);
    for code in [LatticeCode::bw16(), LatticeCode::leech24()] {
        for _ in 0..1000 {
            let m = random_message(code, &mut r);
            let x = code.encode(&m).unwrap();
            // Shift by a random multiple of p to exercise the modular lift.
            let shift: Vec<i64> = (0..code.ell())
                .map(|_| code.p() * r.gen_range(-1..=1))
                .collect();
            let n = random_noise(code.ell(), 0.99 * code.lambda() / 2.0, &mut r);
            let y: Vec<f64> = (0..code.ell())
                .map(|i| (x[i] + shift[i]) as f64 + n[i])
                .collect();
            assert_eq!(code.decode(&y), m);
        }
    }
}

#[test]
fn schedules_cover_the_ring() {
    assert_eq!(BlockSchedule::integer().capacity_bits(), 256);
    assert_eq!(BlockSchedule::bw16().capacity_bits(), 320);
    assert_eq!(BlockSchedule::leech().capacity_bits(), 380);
    assert_eq!(BlockSchedule::leech().num_blocks(), 11);
    assert!(BlockSchedule::new(vec![(LatticeCode::bw16(), 15)]).is_err());
}

#[test]
fn schedule_bit_packing_roundtrip() {
    let mut r = rng(10);
    for s in [BlockSchedule::bw16(), BlockSchedule::leech()] {
        let bits: Vec<bool> = (0..s.capacity_bits()).map(|_| r.gen()).collect();
        let blocks = s.blocks_from_bits(&bits).unwrap();
        assert_eq!(s.bits_from_blocks(&blocks).unwrap(), bits);
        let payload = s.encode(&blocks).unwrap();
        assert_eq!(s.decode(&payload), blocks);
    }
}

#[test]
fn integer_schedule_matches_classic_threshold() {
    // Every coefficient value decodes exactly like compress(·, 1).
    let s = BlockSchedule::integer();
    for start in (0..Q).step_by(N) {
        let vals: Vec<i64> = (0..N as u32).map(|i| ((start + i) % Q) as i64).collect();
        let y = RingElem::from_signed(&vals).unwrap();
        let bits = s.bits_from_blocks(&s.decode(&y)).unwrap();
        assert_eq!(bits, decode_bits(&y));
    }
}

#[test]
fn unimodular_inverse_roundtrip() {
    let code = LatticeCode::leech24();
    let s = snf(code.basis()).unwrap();
    let inv = s.u.unimodular_inverse().unwrap();
    assert_eq!(s.u.mul(&inv), IntMatrix::identity(24));
}
