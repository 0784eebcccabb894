use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kyber_lattice::analysis::{self, EncoderKind, ReportRow};
use kyber_lattice::encoder::PayloadEncoder;
use kyber_lattice::kyber_pke::{keygen, ParamSet};
use kyber_lattice::lattice::{IntMatrix, LatticeCode};
use kyber_lattice::ring::ByteStream;
use kyber_lattice::simulate;
use kyber_lattice::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "kyber-lattice",
    version,
    about = "Lattice-coded Kyber.CPA: failure-rate analysis, simulation and demo"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form tables: parameters, noise variances, lattice encoders, BCH-BW16.
    Analyze(AnalyzeArgs),
    /// Monte Carlo noise sampling and round-trip campaigns.
    Simulate(SimulateArgs),
    /// Key generation, encryption and decryption of one 256-bit message.
    Demo(DemoArgs),
    /// Bases and shaping data of the lattice codes.
    DumpLattice(DumpArgs),
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Encoder {
    Int,
    Bw16,
    Leech,
    Bicm,
}

impl From<Encoder> for EncoderKind {
    fn from(e: Encoder) -> Self {
        match e {
            Encoder::Int => EncoderKind::Int,
            Encoder::Bw16 => EncoderKind::Bw16,
            Encoder::Leech => EncoderKind::Leech,
            Encoder::Bicm => EncoderKind::Bicm,
        }
    }
}

#[derive(Args, Debug)]
struct Selectors {
    #[arg(long, default_value_t = 768, value_parser = PossibleValuesParser::new(["512", "768", "1024"]).map(|s| s.parse::<u32>().unwrap()))]
    params: u32,
    #[arg(long, value_enum, default_value_t = Encoder::Int)]
    encoder: Encoder,
    /// Reduced `u` compression depth (bicm only).
    #[arg(long, value_parser = clap::value_parser!(u32).range(8..=10))]
    du_hat: Option<u32>,
    /// Master seed, up to 64 hex digits.
    #[arg(long, env = "KYBER_LATTICE_SEED", default_value = "00")]
    seed: String,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Table to reproduce; all tables when omitted.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    table: Option<u8>,
    /// Restrict BCH-BW16 rows to one `u` depth.
    #[arg(long, value_parser = clap::value_parser!(u32).range(8..=9))]
    du_hat: Option<u32>,
    /// Restrict rows to one parameter set.
    #[arg(long, value_parser = PossibleValuesParser::new(["512", "768", "1024"]).map(|s| s.parse::<u32>().unwrap()))]
    params: Option<u32>,
    /// Compare against embedded reference values; exit 3 on mismatch.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    sel: Selectors,
    #[arg(long, default_value_t = simulate::DEFAULT_TRIALS)]
    trials: usize,
    /// Also report the noise of an uncompressed ciphertext.
    #[arg(long)]
    uncompressed: bool,
    /// Inflate the noise by lowering compression depths.
    #[arg(long)]
    stress: bool,
    /// `u` depth used by --stress.
    #[arg(long, default_value_t = simulate::STRESS_U_DEPTH, requires = "stress")]
    stress_u_depth: u32,
    /// `d_v` used by --stress (unchanged when omitted).
    #[arg(long, requires = "stress")]
    stress_dv: Option<u32>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct DemoArgs {
    #[command(flatten)]
    sel: Selectors,
    /// 256-bit message as 64 hex digits.
    #[arg(long)]
    message: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Lattice {
    Integer,
    Bw16,
    Leech24,
}

#[derive(Args, Debug)]
struct DumpArgs {
    #[arg(long, value_enum, default_value_t = Lattice::Bw16)]
    lattice: Lattice,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidParams(_) | Error::Malformed(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn parse_seed(s: &str) -> Result<[u8; 32], Failure> {
    let bytes = hex::decode(s).map_err(|e| Failure::Usage(format!("invalid --seed {s:?}: {e}")))?;
    if bytes.is_empty() || bytes.len() > 32 {
        return Err(Failure::Usage(format!(
            "--seed must be 1 to 32 bytes of hex, got {}",
            bytes.len()
        )));
    }
    let mut seed = [0u8; 32];
    seed[..bytes.len()].copy_from_slice(&bytes);
    Ok(seed)
}

fn encoder_for(sel: &Selectors, seed: &[u8; 32]) -> Result<PayloadEncoder, Failure> {
    let base = ParamSet::from_level(sel.params)?;
    let interleaver = ByteStream::derive_seed(seed, b"interleaver");
    Ok(PayloadEncoder::from_selectors(
        sel.encoder.into(),
        base,
        sel.du_hat,
        interleaver,
    )?)
}

fn fmt_value(v: f64) -> String {
    format!("{v}")
}

fn render_rows(rows: &[ReportRow], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from("config,metric,value,tolerance\n");
            for r in rows {
                let tol = r.tolerance.map(fmt_value).unwrap_or_default();
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    r.config,
                    r.metric,
                    fmt_value(r.value),
                    tol
                ));
            }
            s
        }
        Format::Json => {
            let items: Vec<_> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "config": r.config,
                        "metric": r.metric,
                        "value": r.value,
                        "tolerance": r.tolerance,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&items).expect("serializable") + "\n"
        }
    }
}

fn emit(text: &str, out: &Output) -> Result<(), Failure> {
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn analyze(a: &AnalyzeArgs) -> Result<(), Failure> {
    let tables: Vec<u8> = a.table.map_or(vec![1, 2, 3, 4], |t| vec![t]);
    if a.du_hat.is_some() && !tables.contains(&4) {
        return Err(Failure::Usage("--du-hat applies to table 4".into()));
    }
    let mut rows = Vec::new();
    for t in tables {
        rows.extend(match t {
            1 => analysis::table1(),
            2 => analysis::table2()?,
            3 => analysis::table3()?,
            _ => analysis::table4(a.du_hat)?,
        });
    }
    if let Some(level) = a.params {
        let name = ParamSet::from_level(level)?.name();
        rows.retain(|r| !r.config.starts_with("KYBER") || r.config.split('/').next() == Some(name));
    }
    emit(&render_rows(&rows, a.output.format), &a.output)?;
    if a.check {
        let bad: Vec<String> = rows
            .iter()
            .filter(|r| !r.passes())
            .map(|r| {
                format!(
                    "{} {}: {} vs {}",
                    r.config,
                    r.metric,
                    r.value,
                    r.expected.unwrap_or(f64::NAN)
                )
            })
            .collect();
        if !bad.is_empty() {
            return Err(Failure::Mismatch(bad.join("\n")));
        }
    }
    Ok(())
}

fn simulate_cmd(a: &SimulateArgs) -> Result<(), Failure> {
    let seed = parse_seed(&a.sel.seed)?;
    let mut enc = encoder_for(&a.sel, &seed)?;
    if a.stress {
        let p = simulate::stress_params(enc.params(), Some(a.stress_u_depth), a.stress_dv)?;
        let interleaver = ByteStream::derive_seed(&seed, b"interleaver");
        enc = PayloadEncoder::new(enc.kind(), p, interleaver);
    }
    let set = simulate::sample_noise(&enc, a.trials, &seed)?;
    let diag = simulate::diagnostics(&set.samples)?;
    let mut rows = simulate::noise_rows(&set, &diag);
    if a.stress {
        rows.retain(|r| r.metric != "normalized_variance");
        rows.push(ReportRow::info(
            set.config(),
            "normalized_variance",
            diag.normalized_variance,
        ));
    }
    for (lag, ac) in simulate::autocorrelation(&set.samples, 8)
        .into_iter()
        .enumerate()
    {
        rows.push(ReportRow::info(
            set.config(),
            format!("autocorrelation_lag{}", lag + 1),
            ac,
        ));
    }
    if a.uncompressed {
        let trials = simulate::DEFAULT_DIAGNOSTIC_SAMPLES.div_ceil(kyber_lattice::ring::N);
        let un = simulate::sample_uncompressed_noise(enc.params(), trials, &seed)?;
        rows.extend(simulate::noise_rows(
            &un,
            &simulate::diagnostics(&un.samples)?,
        ));
    }
    let campaign = simulate::roundtrip_campaign(&enc, a.trials, &seed)?;
    let config = format!(
        "{}/{}/du'={}",
        enc.params().name(),
        enc.kind().name(),
        enc.params().u_depth()
    );
    rows.extend(simulate::campaign_rows(&config, &campaign));
    if a.stress {
        let code = match enc.kind() {
            EncoderKind::Int => LatticeCode::integer(),
            EncoderKind::Leech => LatticeCode::leech24(),
            _ => LatticeCode::bw16(),
        };
        let model = analysis::NoiseModel::new(enc.params());
        let radius = code.scale() as f64 * code.lambda() / 2.0;
        let bound = analysis::tail_bound(code.ell(), radius, &model)?;
        rows.push(ReportRow::info(&config, "tail_bound", bound.exp2()));
        rows.push(ReportRow::info(
            &config,
            "empirical_tail",
            simulate::empirical_tail(&set, code.ell(), radius),
        ));
    }
    emit(&render_rows(&rows, a.output.format), &a.output)?;
    if campaign.failures > 0 && !a.stress {
        return Err(Failure::Runtime(format!(
            "{} round-trip failures",
            campaign.failures
        )));
    }
    Ok(())
}

fn bits_of(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|b| (0..8).map(move |i| (b >> i) & 1 == 1))
        .collect()
}

fn bytes_of(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |a, (i, &b)| a | (b as u8) << i)
        })
        .collect()
}

fn demo(a: &DemoArgs) -> Result<(), Failure> {
    let msg = hex::decode(a.message.trim())
        .map_err(|e| Failure::Usage(format!("malformed --message: {e}")))?;
    if msg.len() != 32 {
        return Err(Failure::Usage(format!(
            "--message must be 64 hex digits, got {}",
            a.message.trim().len()
        )));
    }
    let seed = parse_seed(&a.sel.seed)?;
    let enc = encoder_for(&a.sel, &seed)?;
    let params = *enc.params();
    let (pk, sk) = keygen(&params, &ByteStream::derive_seed(&seed, b"keygen"));
    let mut bits = bits_of(&msg);
    bits.resize(enc.capacity_bits(), false);
    let ct = enc.encrypt(&pk, &bits, &ByteStream::derive_seed(&seed, b"encrypt"))?;
    let decoded = enc.decrypt(&sk, &ct)?;
    let recovered = hex::encode(bytes_of(&decoded[..256]));
    let ok = decoded == bits;
    let fields: Vec<(&str, String)> = vec![
        ("params", params.name().to_string()),
        ("encoder", enc.kind().name().to_string()),
        ("du", params.u_depth().to_string()),
        ("dv", params.dv().to_string()),
        ("message", hex::encode(&msg)),
        ("capacity_bits", enc.capacity_bits().to_string()),
        ("ciphertext_bits", ct.bit_size().to_string()),
        ("decrypted", recovered),
        ("match", ok.to_string()),
    ];
    let text = match a.output.format {
        Format::Csv => {
            let mut s = String::from("field,value\n");
            for (k, v) in &fields {
                s.push_str(&format!("{k},{v}\n"));
            }
            s
        }
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = fields
                .iter()
                .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.clone())))
                .collect();
            serde_json::to_string_pretty(&map).expect("serializable") + "\n"
        }
    };
    emit(&text, &a.output)?;
    if !ok {
        return Err(Failure::Runtime("decrypted message differs".into()));
    }
    Ok(())
}

fn matrix_json(m: &IntMatrix) -> serde_json::Value {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect::<Vec<_>>())
        .collect()
}

fn dump_lattice(a: &DumpArgs) -> Result<(), Failure> {
    let (name, code) = match a.lattice {
        Lattice::Integer => ("integer", LatticeCode::integer()),
        Lattice::Bw16 => ("bw16", LatticeCode::bw16()),
        Lattice::Leech24 => ("leech24", LatticeCode::leech24()),
    };
    let text = match a.output.format {
        Format::Json => {
            let v = serde_json::json!({
                "lattice": name,
                "dimension": code.ell(),
                "p": code.p(),
                "min_norm_sq": code.min_norm_sq(),
                "bits_per_block": code.bits_per_block(),
                "normalized_radius": code.normalized_radius(),
                "pi": code.pi(),
                "basis": matrix_json(code.basis()),
                "b_hat": matrix_json(code.b_hat()),
            });
            serde_json::to_string_pretty(&v).expect("serializable") + "\n"
        }
        Format::Csv => {
            let mut rows = vec![
                ReportRow::info(name, "dimension", code.ell() as f64),
                ReportRow::info(name, "p", code.p() as f64),
                ReportRow::info(name, "min_norm_sq", code.min_norm_sq() as f64),
                ReportRow::info(name, "bits_per_block", code.bits_per_block() as f64),
                ReportRow::info(name, "normalized_radius", code.normalized_radius()),
            ];
            for (i, &p) in code.pi().iter().enumerate() {
                rows.push(ReportRow::info(name, format!("pi[{i}]"), p as f64));
            }
            for (label, m) in [("basis", code.basis()), ("b_hat", code.b_hat())] {
                for i in 0..m.rows() {
                    for j in 0..m.cols() {
                        rows.push(ReportRow::info(
                            name,
                            format!("{label}[{i}][{j}]"),
                            m.get(i, j) as f64,
                        ));
                    }
                }
            }
            render_rows(&rows, Format::Csv)
        }
    };
    emit(&text, &a.output)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Demo(a) => demo(a),
        Command::DumpLattice(a) => dump_lattice(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Mismatch(m)) => {
            eprintln!("reference mismatch:\n{m}");
            ExitCode::from(EXIT_MISMATCH)
        }
    }
}
