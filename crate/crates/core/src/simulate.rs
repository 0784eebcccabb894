//! Monte Carlo harness over the full encryption pipeline.
//!
//! Every trial draws its own sub-seed from the master seed and the trial
//! index, so results do not depend on the number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{self, EncoderKind, ReportRow};
use crate::bch::BchCode;
use crate::bicm;
use crate::encoder::PayloadEncoder;
use crate::error::{Error, Result};
use crate::kyber_pke::{
    decrypt_raw, expand_encryption_noise, expand_key_noise, keygen, payload_scale, split_key_seed,
    ParamSet,
};
use crate::ring::{ByteSource, ByteStream, RingElem, N};

/// Default trial count for variance estimation.
pub const DEFAULT_TRIALS: usize = 10_000;
/// Default coefficient count for normality diagnostics.
pub const DEFAULT_DIAGNOSTIC_SAMPLES: usize = 100_000;

/// Sub-seed of trial `index`.
pub fn trial_seed(master: &[u8; 32], index: u64) -> [u8; 32] {
    let mut label = b"trial".to_vec();
    label.extend_from_slice(&index.to_le_bytes());
    ByteStream::derive_seed(master, &label)
}

struct TrialSeeds {
    key: [u8; 32],
    enc: [u8; 32],
    msg: [u8; 32],
}

fn seeds(master: &[u8; 32], index: u64) -> TrialSeeds {
    let t = trial_seed(master, index);
    TrialSeeds {
        key: ByteStream::derive_seed(&t, b"keygen"),
        enc: ByteStream::derive_seed(&t, b"encrypt"),
        msg: ByteStream::derive_seed(&t, b"message"),
    }
}

/// Uniform message bits from a seed.
pub fn random_bits(seed: &[u8; 32], n: usize) -> Vec<bool> {
    let mut buf = vec![0u8; n.div_ceil(8)];
    ByteStream::new(seed, b"bits").fill(&mut buf);
    (0..n).map(|i| (buf[i / 8] >> (i % 8)) & 1 == 1).collect()
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    Ok(())
}

/// Centered coefficients of `y - payload`.
pub fn noise_of(y: &RingElem, payload: &RingElem) -> Vec<i32> {
    (y - payload).centered()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseSampleSet {
    pub samples: Vec<i32>,
    pub count: usize,
    pub trials: usize,
    pub params: ParamSet,
    /// `None` for the uncompressed noise `n̂_e`.
    pub encoder: Option<EncoderKind>,
}

impl NoiseSampleSet {
    pub fn config(&self) -> String {
        match self.encoder {
            Some(k) => format!("{}/{}", self.params.name(), k.name()),
            None => format!("{}/uncompressed", self.params.name()),
        }
    }
}

/// Decoding noise `n_e = y - payload` over `trials` fresh key pairs and encryptions.
pub fn sample_noise(
    encoder: &PayloadEncoder,
    trials: usize,
    seed: &[u8; 32],
) -> Result<NoiseSampleSet> {
    check_trials(trials)?;
    let params = *encoder.params();
    let per: Vec<Vec<i32>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = seeds(seed, i);
            let (pk, sk) = keygen(&params, &s.key);
            let payload = encoder.payload(&random_bits(&s.msg, encoder.capacity_bits()))?;
            let ct = crate::kyber_pke::encrypt_scaled(&pk, &payload, &params, &s.enc)?;
            Ok(noise_of(&decrypt_raw(&sk, &ct)?, &payload))
        })
        .collect::<Result<_>>()?;
    let samples: Vec<i32> = per.concat();
    Ok(NoiseSampleSet {
        count: samples.len(),
        samples,
        trials,
        params,
        encoder: Some(encoder.kind()),
    })
}

/// `n̂_e = eᵀr + e₂ - sᵀe₁` straight from the sampled terms, compression bypassed.
pub fn sample_uncompressed_noise(
    params: &ParamSet,
    trials: usize,
    seed: &[u8; 32],
) -> Result<NoiseSampleSet> {
    check_trials(trials)?;
    let per: Vec<Vec<i32>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = seeds(seed, i);
            let (_, sigma) = split_key_seed(&s.key);
            let key = expand_key_noise(params, &sigma);
            let enc = expand_encryption_noise(params, &s.enc);
            let n = &(&key.e.inner_product(&enc.r)? + &enc.e2) - &key.s.inner_product(&enc.e1)?;
            Ok(n.centered())
        })
        .collect::<Result<_>>()?;
    let samples: Vec<i32> = per.concat();
    Ok(NoiseSampleSet {
        count: samples.len(),
        samples,
        trials,
        params: *params,
        encoder: None,
    })
}

/// `k·n·η₁²/4 + k·n·η₁·η₂/4 + η₂/2`.
pub fn uncompressed_variance(params: &ParamSet) -> f64 {
    let kn = (params.k() * N) as f64;
    let (e1, e2) = (params.eta1() as f64, params.eta2() as f64);
    kn * e1 * e1 / 4.0 + kn * e1 * e2 / 4.0 + e2 / 2.0
}

/// Exceedance probabilities at which quantiles and tails are reported.
pub const TAIL_PROBS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    /// Variance divided by `round(q/2)²`.
    pub normalized_variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// `(p, x)` with `Pr(|n| > x) ≈ p`.
    pub abs_quantiles: Vec<(f64, f64)>,
    /// `(k, empirical, gaussian)` frequencies of `|n| > k·σ`.
    pub tail_frequencies: Vec<(u32, f64, f64)>,
}

pub fn diagnostics(samples: &[i32]) -> Result<DiagnosticsReport> {
    if samples.len() < 2 {
        return Err(Error::InvalidConfig(
            "diagnostics need at least two samples".into(),
        ));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&x| x as f64).sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x as f64 - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let half = payload_scale(2) as f64;

    let mut abs: Vec<i32> = samples.iter().map(|x| x.abs()).collect();
    abs.sort_unstable();
    let abs_quantiles = TAIL_PROBS
        .iter()
        .map(|&p| {
            let idx = (((1.0 - p) * n).ceil() as usize).min(abs.len() - 1);
            (p, abs[idx] as f64)
        })
        .collect();
    let sigma = m2.sqrt();
    let tail_frequencies = (1..=4u32)
        .map(|k| {
            let cut = k as f64 * sigma;
            let above = abs.len() - abs.partition_point(|&a| a as f64 <= cut);
            let gauss = analysis::ln_gamma_q(0.5, (k * k) as f64 / 2.0)
                .map(f64::exp)
                .unwrap_or(f64::NAN);
            (k, above as f64 / n, gauss)
        })
        .collect();
    Ok(DiagnosticsReport {
        count: samples.len(),
        mean,
        variance: m2,
        normalized_variance: m2 / (half * half),
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        abs_quantiles,
        tail_frequencies,
    })
}

/// Sample autocorrelation at lags `1..=max_lag` of the flattened sequence.
pub fn autocorrelation(samples: &[i32], max_lag: usize) -> Vec<f64> {
    let n = samples.len();
    let mean = samples.iter().map(|&x| x as f64).sum::<f64>() / n as f64;
    let c: Vec<f64> = samples.iter().map(|&x| x as f64 - mean).collect();
    let c0: f64 = c.iter().map(|x| x * x).sum();
    (1..=max_lag)
        .map(|lag| {
            if lag >= n {
                return 0.0;
            }
            c[..n - lag]
                .iter()
                .zip(&c[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / c0
        })
        .collect()
}

/// Frequency of `‖block‖ > z` over blocks of `ell` consecutive coefficients of each trial.
pub fn empirical_tail(set: &NoiseSampleSet, ell: usize, z: f64) -> f64 {
    let (mut hits, mut total) = (0u64, 0u64);
    for trial in set.samples.chunks_exact(N) {
        for block in trial.chunks_exact(ell) {
            let norm2: f64 = block.iter().map(|&x| (x as f64) * (x as f64)).sum();
            total += 1;
            hits += (norm2 > z * z) as u64;
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Stats {
    pub samples: usize,
    pub variance: f64,
    pub expected_variance: f64,
    /// Correlation of coefficients `i` and `i + lag` within a product, lags `1..=8`.
    pub cross_correlations: Vec<f64>,
    pub bound: f64,
}

/// Coefficient statistics of `eᵀr` with `e ← β_η₁^k` (key) and `r ← β_η₁^k` (encryption).
pub fn lemma1_statistics(
    params: &ParamSet,
    samples: usize,
    seed: &[u8; 32],
) -> Result<Lemma1Stats> {
    let trials = samples.div_ceil(N);
    check_trials(trials)?;
    let rows: Vec<Vec<i32>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = seeds(seed, i);
            let (_, sigma) = split_key_seed(&s.key);
            let e = expand_key_noise(params, &sigma).e;
            let r = expand_encryption_noise(params, &s.enc).r;
            Ok(e.inner_product(&r)?.centered())
        })
        .collect::<Result<_>>()?;
    let count = (trials * N) as f64;
    let var = rows
        .iter()
        .flatten()
        .map(|&x| (x as f64).powi(2))
        .sum::<f64>()
        / count;
    let cross_correlations = (1..=8usize)
        .map(|lag| {
            let mut acc = 0.0;
            let mut pairs = 0usize;
            for row in &rows {
                for i in 0..N - lag {
                    acc += row[i] as f64 * row[i + lag] as f64;
                    pairs += 1;
                }
            }
            acc / pairs as f64 / var
        })
        .collect();
    let e1 = params.eta1() as f64;
    Ok(Lemma1Stats {
        samples: trials * N,
        variance: var,
        expected_variance: (params.k() * N) as f64 * e1 * e1 / 4.0,
        cross_correlations,
        bound: 3.0 / count.sqrt(),
    })
}

/// Default `u` depth of stress campaigns.
pub const STRESS_U_DEPTH: u32 = 7;

/// Parameters with the `u` and/or `d_v` depths lowered to inflate the noise; harness use only.
pub fn stress_params(params: &ParamSet, u_depth: Option<u32>, dv: Option<u32>) -> Result<ParamSet> {
    let mut p = *params;
    if let Some(d) = u_depth {
        p = p.with_u_depth_override(d)?;
    }
    if let Some(d) = dv {
        p = p.with_dv_override(d)?;
    }
    Ok(p)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CampaignResult {
    pub trials: usize,
    pub failures: usize,
    /// Lattice blocks decoded to a wrong message point.
    pub block_errors: u64,
    pub blocks: u64,
    /// Channel bits wrong after demapping (before any BCH decoding).
    pub raw_bit_errors: u64,
    /// Histogram of BCH-corrected weights `0..=7` over successful decodes.
    pub bch_corrected: Vec<u64>,
    /// Codewords the BCH decoder rejected.
    pub bch_failures: u64,
}

impl CampaignResult {
    pub fn block_error_rate(&self) -> f64 {
        self.block_errors as f64 / self.blocks.max(1) as f64
    }

    fn merge(mut self, o: Self) -> Self {
        self.trials += o.trials;
        self.failures += o.failures;
        self.block_errors += o.block_errors;
        self.blocks += o.blocks;
        self.raw_bit_errors += o.raw_bit_errors;
        if self.bch_corrected.len() < o.bch_corrected.len() {
            self.bch_corrected.resize(o.bch_corrected.len(), 0);
        }
        for (a, b) in self.bch_corrected.iter_mut().zip(&o.bch_corrected) {
            *a += b;
        }
        self.bch_failures += o.bch_failures;
        self
    }
}

fn run_trial(encoder: &PayloadEncoder, master: &[u8; 32], i: u64) -> Result<CampaignResult> {
    let s = seeds(master, i);
    let params = encoder.params();
    let (pk, sk) = keygen(params, &s.key);
    let m = random_bits(&s.msg, encoder.capacity_bits());
    let ct = encoder.encrypt(&pk, &m, &s.enc)?;
    let y = decrypt_raw(&sk, &ct)?;
    let mut out = CampaignResult {
        trials: 1,
        ..Default::default()
    };

    if encoder.kind() == EncoderKind::Int {
        let got = encoder.decode(&y)?;
        let wrong = got.iter().zip(&m).filter(|(a, b)| a != b).count() as u64;
        out.blocks = N as u64;
        out.block_errors = wrong;
        out.raw_bit_errors = wrong;
        out.failures = (wrong > 0) as usize;
        return Ok(out);
    }

    let schedule = encoder.schedule();
    let sent_bits = match encoder.bicm_config() {
        Some(c) => bicm::channel_bits(&m, c)?,
        None => m.clone(),
    };
    let sent = schedule.blocks_from_bits(&sent_bits)?;
    let got = schedule.decode(&y);
    out.blocks = sent.len() as u64;
    out.block_errors = sent.iter().zip(&got).filter(|(a, b)| a != b).count() as u64;
    let got_bits = schedule.bits_from_blocks(&got)?;
    out.raw_bit_errors = got_bits
        .iter()
        .zip(&sent_bits)
        .filter(|(a, b)| a != b)
        .count() as u64;

    match encoder.bicm_config() {
        Some(c) => {
            out.bch_corrected = vec![0; crate::bch::T + 1];
            let word = bicm::deinterleave(&got_bits, c.interleaver())?;
            match BchCode::standard().decode(&word) {
                Ok(d) => {
                    out.bch_corrected[d.corrected.min(crate::bch::T)] += 1;
                    out.failures = (d.message[..bicm::PAYLOAD_BITS] != m[..]) as usize;
                }
                Err(Error::DecodeFailure) => {
                    out.bch_failures = 1;
                    out.failures = 1;
                }
                Err(e) => return Err(e),
            }
        }
        None => out.failures = (got_bits != m) as usize,
    }
    Ok(out)
}

/// End-to-end encrypt/decrypt cycles with per-block error accounting.
pub fn roundtrip_campaign(
    encoder: &PayloadEncoder,
    trials: usize,
    seed: &[u8; 32],
) -> Result<CampaignResult> {
    check_trials(trials)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(encoder, seed, i))
        .try_reduce(CampaignResult::default, |a, b| Ok(a.merge(b)))
}

/// Rows for the CSV/JSON report.
pub fn noise_rows(set: &NoiseSampleSet, d: &DiagnosticsReport) -> Vec<ReportRow> {
    let c = set.config();
    let mut rows = vec![
        ReportRow::info(&c, "trials", set.trials as f64),
        ReportRow::info(&c, "samples", d.count as f64),
        ReportRow::info(&c, "variance", d.variance),
    ];
    match set.encoder {
        Some(_) => {
            let want = analysis::NoiseModel::new(&set.params).normalized_var;
            rows.push(ReportRow::checked(
                &c,
                "normalized_variance",
                d.normalized_variance,
                want,
                want * 0.05,
            ));
        }
        None => {
            let want = uncompressed_variance(&set.params);
            rows.push(ReportRow::checked(
                &c,
                "variance_expected",
                d.variance,
                want,
                want * 0.05,
            ));
        }
    }
    rows.push(ReportRow::info(&c, "skewness", d.skewness));
    rows.push(ReportRow::info(&c, "excess_kurtosis", d.excess_kurtosis));
    for &(p, x) in &d.abs_quantiles {
        rows.push(ReportRow::info(&c, format!("abs_quantile_p{p:e}"), x));
    }
    for &(k, emp, gauss) in &d.tail_frequencies {
        rows.push(ReportRow::info(&c, format!("tail_gt_{k}sigma"), emp));
        rows.push(ReportRow::info(
            &c,
            format!("tail_gt_{k}sigma_gaussian"),
            gauss,
        ));
    }
    rows
}

pub fn campaign_rows(config: &str, r: &CampaignResult) -> Vec<ReportRow> {
    let mut rows = vec![
        ReportRow::info(config, "roundtrip_trials", r.trials as f64),
        ReportRow::info(config, "roundtrip_failures", r.failures as f64),
        ReportRow::info(config, "block_errors", r.block_errors as f64),
        ReportRow::info(config, "block_error_rate", r.block_error_rate()),
        ReportRow::info(config, "raw_bit_errors", r.raw_bit_errors as f64),
    ];
    for (w, &n) in r.bch_corrected.iter().enumerate() {
        rows.push(ReportRow::info(
            config,
            format!("bch_corrected_{w}"),
            n as f64,
        ));
    }
    if !r.bch_corrected.is_empty() {
        rows.push(ReportRow::info(
            config,
            "bch_failures",
            r.bch_failures as f64,
        ));
    }
    rows
}
