//! Command-line front end.
//!
//! Every subcommand builds one JSON value; `--json` prints it as is, and the
//! default text mode prints the same value flattened to `key: value` lines.
//! Exit codes: 0 success, 1 protocol abort or repeat, 2 usage or input error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::protocols::{self, Basis, Bb84Config, Bb84Result, ChshStrategy, E91Eve, Eavesdropper};
use crate::qcircuit::{apply_circuit, parse_circuit, parse_complex, Gate, Circuit};
use crate::qecc::{self, BitFlipError};
use crate::qinfo::{self, ClassicalDistribution, FidelityMode};
use crate::qmeasure::{self, Measurement};
use crate::qstate::{Ensemble, PureState};
use crate::rng::{fresh_seed, rng_from_seed};

pub const SCHEMA: &str = "qipkit/1";

#[derive(Debug, Parser)]
#[command(name = "qipkit", version, about = "Quantum information toolkit")]
pub struct Cli {
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// RNG seed; generated and reported when omitted.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a circuit file on |0...0> and sample the final state.
    Circuit(CircuitArgs),
    /// BB84 key distribution.
    Bb84(Bb84Args),
    /// Entanglement-based key distribution with a CHSH test.
    E91(E91Args),
    /// Dense coding of two classical bits.
    Densecode(DenseArgs),
    /// Teleport a single-qubit state.
    Teleport(TeleportArgs),
    /// The CHSH game.
    Chsh(ChshArgs),
    /// Three-qubit bit-flip code.
    Ecc(EccArgs),
    /// Entropy of an ensemble or a probability vector.
    Entropy(EntropyArgs),
    /// Holevo quantity and mutual information of measurements.
    Holevo(HolevoArgs),
    /// Typical-subspace compression.
    Compress(CompressArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MeasureBasis {
    Computational,
    Hadamard,
}

#[derive(Debug, Args)]
pub struct CircuitArgs {
    pub path: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub shots: u64,
    #[arg(long, value_enum, default_value_t = MeasureBasis::Computational)]
    pub basis: MeasureBasis,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Bb84Eve {
    None,
    /// Random basis per qubit.
    Intercept,
    /// Always the computational basis.
    InterceptZ,
    /// Always the Hadamard basis.
    InterceptX,
}

#[derive(Debug, Args)]
pub struct Bb84Args {
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = Bb84Eve::None)]
    pub eve: Bb84Eve,
    /// Per-qubit bit-flip probability on the channel.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.11)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum E91EveArg {
    None,
    Premeasure,
}

#[derive(Debug, Args)]
pub struct E91Args {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.25)]
    pub test_fraction: f64,
    #[arg(long, value_enum, default_value_t = E91EveArg::None)]
    pub eve: E91EveArg,
}

#[derive(Debug, Args)]
pub struct DenseArgs {
    /// Two bits such as `10`; all four messages when omitted.
    #[arg(long)]
    pub bits: Option<String>,
}

#[derive(Debug, Args)]
pub struct TeleportArgs {
    #[arg(long, default_value = "0.6", allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value = "0.8", allow_hyphen_values = true)]
    pub beta: String,
    /// Force Alice's outcome, e.g. `01`.
    #[arg(long)]
    pub outcome: Option<String>,
    /// Repeat with sampled outcomes and report their counts.
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Quantum,
    Classical,
}

#[derive(Debug, Args)]
pub struct ChshArgs {
    #[arg(long, value_enum, default_value_t = StrategyArg::Quantum)]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
}

#[derive(Debug, Args)]
pub struct EccArgs {
    /// `none`, `0|1|2`, a word such as `xxi`, or letters with positions
    /// such as `z0`.
    #[arg(long, default_value = "1")]
    pub error: String,
    #[arg(long, default_value = "0.6", allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value = "0.8", allow_hyphen_values = true)]
    pub beta: String,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    /// Ensemble preset: psi01, mixed01, plusminus, zeroplus, pure0.
    #[arg(long, conflicts_with = "probs")]
    pub ensemble: Option<String>,
    /// Comma-separated probability vector for a Shannon entropy.
    #[arg(long)]
    pub probs: Option<String>,
}

#[derive(Debug, Args)]
pub struct HolevoArgs {
    #[arg(long, default_value = "psi01")]
    pub ensemble: String,
    /// Measurement preset; repeat for several. Defaults to computational,
    /// hadamard and trine.
    #[arg(long = "measurement")]
    pub measurements: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Exact,
    Mc,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long, default_value = "psi01")]
    pub ensemble: String,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 0.15)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Named source ensembles.
pub fn ensemble_preset(name: &str) -> Result<Ensemble> {
    let pair = |a: PureState, b: PureState| Ensemble::from_pure(vec![a, b], &[0.5, 0.5]);
    match name.to_ascii_lowercase().as_str() {
        "psi01" => Ok(qinfo::twelfth_pair_source()),
        "mixed01" => pair(PureState::zero(), PureState::one()),
        "plusminus" => pair(PureState::plus(), PureState::minus()),
        "zeroplus" => pair(PureState::zero(), PureState::plus()),
        "pure0" => Ensemble::from_pure(vec![PureState::zero()], &[1.0]),
        other => Err(Error::InvalidArgument(format!(
            "unknown ensemble '{other}' (psi01, mixed01, plusminus, zeroplus, pure0)"
        ))),
    }
}

fn parse_amp(s: &str) -> Result<C64> {
    parse_complex(s).ok_or_else(|| Error::InvalidArgument(format!("'{s}' is not a complex number")))
}

fn parse_bits(s: &str) -> Result<[u8; 2]> {
    match s {
        "00" => Ok([0, 0]),
        "01" => Ok([0, 1]),
        "10" => Ok([1, 0]),
        "11" => Ok([1, 1]),
        _ => Err(Error::InvalidArgument(format!("'{s}' is not two bits"))),
    }
}

fn bits_str(b: [u8; 2]) -> String {
    format!("{}{}", b[0], b[1])
}

fn amps_json(psi: &PureState) -> Value {
    json!(psi.amplitudes().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialisable result")
}

struct Ctx {
    seed: u64,
}

impl Ctx {
    fn rng(&self) -> crate::rng::QRng {
        rng_from_seed(self.seed)
    }
}

fn run_circuit(a: &CircuitArgs, ctx: &Ctx) -> Result<(Value, i32)> {
    let text = std::fs::read_to_string(&a.path)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", a.path.display())))?;
    let circuit = parse_circuit(&text)?;
    let n = circuit.qubits();
    let state = apply_circuit(&circuit, &PureState::zeros(n)?)?;
    let measured = match a.basis {
        MeasureBasis::Computational => state.clone(),
        MeasureBasis::Hadamard => {
            let mut h = Circuit::new(n)?;
            for q in 0..n {
                h.push(Gate::h(q))?;
            }
            apply_circuit(&h, &state)?
        }
    };
    let mut cdf = Vec::with_capacity(measured.dim());
    let mut acc = 0.0;
    for z in measured.amplitudes() {
        acc += z.norm_sqr();
        cdf.push(acc);
    }
    let mut rng = ctx.rng();
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..a.shots {
        let u: f64 = rand::Rng::random::<f64>(&mut rng) * acc;
        let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        *counts.entry(i).or_default() += 1;
    }
    let histogram: BTreeMap<String, u64> = counts
        .into_iter()
        .map(|(i, k)| (format!("{i:0n$b}"), k))
        .collect();
    Ok((
        json!({
            "qubits": n,
            "gates": circuit.gates().len(),
            "basis": format!("{:?}", a.basis).to_lowercase(),
            "shots": a.shots,
            "amplitudes": amps_json(&state),
            "histogram": histogram,
        }),
        0,
    ))
}

fn run_bb84(a: &Bb84Args, ctx: &Ctx) -> Result<(Value, i32)> {
    let mut cfg = Bb84Config::new(a.n, ctx.seed);
    cfg.delta = a.delta;
    cfg.channel_flip_prob = a.noise;
    cfg.abort_threshold = a.threshold;
    cfg.eve = match a.eve {
        Bb84Eve::None => Eavesdropper::None,
        Bb84Eve::Intercept => Eavesdropper::InterceptResend,
        Bb84Eve::InterceptZ => Eavesdropper::FixedBasis(Basis::Computational),
        Bb84Eve::InterceptX => Eavesdropper::FixedBasis(Basis::Hadamard),
    };
    let t = protocols::bb84_run(&cfg)?;
    let (status, code) = match &t.result {
        Bb84Result::Key { .. } => ("key", 0),
        Bb84Result::Aborted => ("aborted", 1),
        Bb84Result::Repeat => ("repeat", 1),
    };
    let key = match &t.result {
        Bb84Result::Key { alice_key, bob_key } => json!({
            "alice": alice_key.iter().map(|b| char::from(b'0' + b)).collect::<String>(),
            "bob": bob_key.iter().map(|b| char::from(b'0' + b)).collect::<String>(),
        }),
        _ => Value::Null,
    };
    Ok((
        json!({
            "config": to_value(&cfg),
            "block_length": cfg.block_length(),
            "sifted": t.sifted_indices.len(),
            "check_bits": t.check_indices.len(),
            "mismatch_count": t.mismatch_count,
            "error_rate": t.error_rate,
            "status": status,
            "aborted": status == "aborted",
            "key": key,
        }),
        code,
    ))
}

fn run_e91(a: &E91Args, ctx: &Ctx) -> Result<(Value, i32)> {
    let eve = match a.eve {
        E91EveArg::None => E91Eve::None,
        E91EveArg::Premeasure => E91Eve::MeasureBoth,
    };
    let r = protocols::e91_run(a.n, a.test_fraction, eve, &mut ctx.rng())?;
    let mut v = to_value(&r);
    let obj = v.as_object_mut().expect("struct");
    for k in ["alice_key", "bob_key"] {
        let s: String = obj[k]
            .as_array()
            .expect("bits")
            .iter()
            .map(|b| if b.as_u64() == Some(1) { '1' } else { '0' })
            .collect();
        obj.insert(k.into(), Value::String(s));
    }
    obj.insert("eve".into(), to_value(&eve));
    Ok((v, 0))
}

fn run_densecode(a: &DenseArgs) -> Result<(Value, i32)> {
    let msgs = match &a.bits {
        Some(b) => vec![parse_bits(b)?],
        None => vec![[0, 0], [0, 1], [1, 0], [1, 1]],
    };
    let mut rows = Vec::new();
    let mut all_ok = true;
    for m in msgs {
        let s = protocols::dense_code(m)?;
        let d = protocols::dense_decode(&s)?;
        all_ok &= d == m;
        rows.push(json!({
            "bits": bits_str(m),
            "state": amps_json(&s),
            "decoded": bits_str(d),
        }));
    }
    Ok((json!({ "messages": rows, "all_decoded": all_ok }), 0))
}

fn run_teleport(a: &TeleportArgs, ctx: &Ctx) -> Result<(Value, i32)> {
    let psi = PureState::qubit(parse_amp(&a.alpha)?, parse_amp(&a.beta)?)?;
    let mut rng = ctx.rng();
    let r = match &a.outcome {
        Some(o) => protocols::teleport_with_outcome(&psi, parse_bits(o)?)?,
        None => protocols::teleport(&psi, &mut rng)?,
    };
    let mut v = json!({
        "input": amps_json(&psi),
        "outcome": bits_str(r.bits),
        "bob_before_correction": amps_json(&r.bob_before),
        "bob": amps_json(&r.bob),
        "fidelity": r.bob.overlap(&psi),
    });
    if let Some(trials) = a.trials {
        let mut counts = BTreeMap::new();
        for m in ["00", "01", "10", "11"] {
            counts.insert(m.to_string(), 0u64);
        }
        let mut worst = 1.0f64;
        for _ in 0..trials {
            let t = protocols::teleport(&psi, &mut rng)?;
            *counts.get_mut(&bits_str(t.bits)).expect("two bits") += 1;
            worst = worst.min(t.bob.overlap(&psi));
        }
        v["trials"] = json!(trials);
        v["outcome_counts"] = json!(counts);
        v["min_fidelity"] = json!(worst);
    }
    Ok((v, 0))
}

fn run_chsh(a: &ChshArgs, ctx: &Ctx) -> Result<(Value, i32)> {
    let strategy = match a.strategy {
        StrategyArg::Quantum => ChshStrategy::optimal_quantum(),
        StrategyArg::Classical => ChshStrategy::constant_zero(),
    };
    let exact = protocols::chsh_exact_win_probability(&strategy)?;
    let r = protocols::chsh_monte_carlo(&strategy, a.trials, &mut ctx.rng())?;
    let classical = protocols::chsh_enumerate_classical();
    Ok((
        json!({
            "strategy": to_value(&strategy),
            "exact_win_probability": exact,
            "wins": r.wins,
            "trials": r.trials,
            "win_rate": r.win_rate,
            "classical_best": classical.best,
            "classical_optimal_tables": classical.argmax.len(),
        }),
        0,
    ))
}

fn run_ecc(a: &EccArgs, ctx: &Ctx) -> Result<(Value, i32)> {
    let e = BitFlipError::parse(&a.error)?;
    let r = qecc::run_pipeline(parse_amp(&a.alpha)?, parse_amp(&a.beta)?, e, &mut ctx.rng())?;
    Ok((to_value(&r), 0))
}

fn run_entropy(a: &EntropyArgs) -> Result<(Value, i32)> {
    match (&a.ensemble, &a.probs) {
        (_, Some(p)) => {
            let probs = p
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad probability list: {e}")))?;
            let d = ClassicalDistribution::new(probs)?;
            Ok((
                json!({ "kind": "shannon", "inputs_echo": d.probs(), "value_bits": qinfo::shannon_entropy(&d) }),
                0,
            ))
        }
        (e, None) => {
            let name = e.as_deref().unwrap_or("psi01");
            let ens = ensemble_preset(name)?;
            let rho = ens.density();
            Ok((
                json!({
                    "kind": "von_neumann",
                    "inputs_echo": { "ensemble": name },
                    "eigenvalues": rho.eigenvalues()?,
                    "value_bits": qinfo::von_neumann_entropy(&rho)?,
                }),
                0,
            ))
        }
    }
}

fn run_holevo(a: &HolevoArgs) -> Result<(Value, i32)> {
    let ens = ensemble_preset(&a.ensemble)?;
    let names: Vec<String> = if a.measurements.is_empty() {
        ["computational", "hadamard", "trine"].map(String::from).to_vec()
    } else {
        a.measurements.clone()
    };
    let qubits = ens.dim().trailing_zeros() as usize;
    let ms: Vec<Measurement> = names
        .iter()
        .map(|n| qmeasure::preset(n, qubits))
        .collect::<Result<_>>()?;
    let prior = ClassicalDistribution::new(ens.probs())?;
    let mut rows = Vec::new();
    for (name, m) in names.iter().zip(&ms) {
        let ch = qinfo::induced_channel(&ens, m)?;
        rows.push(json!({
            "measurement": name,
            "channel": ch.rows(),
            "mutual_information_bits": qinfo::mutual_information(&prior, &ch)?,
        }));
    }
    let chi = qinfo::holevo_chi(&ens)?;
    let (best, idx) = qinfo::accessible_info_over(&ens, &ms)?;
    Ok((
        json!({
            "inputs_echo": { "ensemble": a.ensemble, "measurements": names },
            "value_bits": chi,
            "holevo_chi_bits": chi,
            "measurements": rows,
            "best_measurement": names[idx],
            "best_mutual_information_bits": best,
            "bound_holds": best <= chi + 1e-9,
        }),
        0,
    ))
}

fn run_compress(a: &CompressArgs, ctx: &Ctx) -> Result<(Value, i32)> {
    let ens = ensemble_preset(&a.ensemble)?;
    let mode = match a.mode {
        ModeArg::Exact => FidelityMode::Exact,
        ModeArg::Mc => FidelityMode::MonteCarlo { trials: a.trials },
    };
    let mut rng = ctx.rng();
    let r = qinfo::compression_report(&ens, a.n, a.epsilon, mode, Some(&mut rng))?;
    let mut v = to_value(&r);
    v["inputs_echo"] = json!({ "ensemble": a.ensemble });
    Ok((v, 0))
}

fn execute(cli: &Cli) -> Result<(Value, i32)> {
    let seed = cli.seed.unwrap_or_else(fresh_seed);
    let ctx = Ctx { seed };
    let (name, (body, code)) = match &cli.command {
        Command::Circuit(a) => ("circuit", run_circuit(a, &ctx)?),
        Command::Bb84(a) => ("bb84", run_bb84(a, &ctx)?),
        Command::E91(a) => ("e91", run_e91(a, &ctx)?),
        Command::Densecode(a) => ("densecode", run_densecode(a)?),
        Command::Teleport(a) => ("teleport", run_teleport(a, &ctx)?),
        Command::Chsh(a) => ("chsh", run_chsh(a, &ctx)?),
        Command::Ecc(a) => ("ecc", run_ecc(a, &ctx)?),
        Command::Entropy(a) => ("entropy", run_entropy(a)?),
        Command::Holevo(a) => ("holevo", run_holevo(a)?),
        Command::Compress(a) => ("compress", run_compress(a, &ctx)?),
    };
    let mut out = json!({ "schema": SCHEMA, "command": name, "seed": seed });
    out["result"] = body;
    Ok((out, code))
}

/// Pretty printer that writes floats as plain decimals, never exponents.
struct PlainFloats<'a>(PrettyFormatter<'a>);

impl Formatter for PlainFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{value}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// JSON text with plain-decimal floats.
pub fn to_json_string(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PlainFloats(PrettyFormatter::new()));
    v.serialize(&mut ser).expect("in-memory write");
    buf.push(b'\n');
    String::from_utf8(buf).expect("utf-8")
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => {
            let text = to_json_string(other);
            let compact: String = text.split_whitespace().collect::<Vec<_>>().join(" ");
            out.push_str(&format!("{prefix}: {compact}\n"));
        }
    }
}

/// `key: value` lines for the same result value.
pub fn to_text(v: &Value) -> String {
    let mut s = String::new();
    flatten("", v, &mut s);
    s
}

/// Parse `argv` (program name first), run, and capture the output.
pub fn run<I, T>(argv: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                CliOutput { code, stdout: text, stderr: String::new() }
            } else {
                CliOutput { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let (value, code) = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            return CliOutput {
                code: 2,
                stdout: String::new(),
                stderr: format!("error: {e}\n"),
            }
        }
    };
    let text = if cli.json { to_json_string(&value) } else { to_text(&value) };
    match &cli.out {
        Some(path) => match std::fs::write(path, &text) {
            Ok(()) => CliOutput { code, stdout: String::new(), stderr: String::new() },
            Err(e) => CliOutput {
                code: 2,
                stdout: String::new(),
                stderr: format!("error: {}: {e}\n", path.display()),
            },
        },
        None => CliOutput { code, stdout: text, stderr: String::new() },
    }
}

/// Run and write to the process streams; returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let out = run(argv);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    out.code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn json_of(args: &[&str]) -> (i32, Value) {
        let mut argv = vec!["qipkit", "--json"];
        argv.extend_from_slice(args);
        let out = run(argv);
        assert!(out.stderr.is_empty() || out.code != 0, "{}", out.stderr);
        let v = serde_json::from_str(&out.stdout).unwrap_or(Value::Null);
        (out.code, v)
    }

    #[test]
    fn entropy_preset() {
        let (code, v) = json_of(&["entropy", "--ensemble", "psi01"]);
        assert_eq!(code, 0);
        assert_eq!(v["schema"], SCHEMA);
        let s = v["result"]["value_bits"].as_f64().unwrap();
        assert!((s - 0.8112781).abs() < 1e-6);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["qipkit", "bogus"]).code, 2);
        assert_eq!(run(["qipkit", "chsh", "--no-such-flag"]).code, 2);
        assert_eq!(run(["qipkit", "entropy", "--ensemble", "nope"]).code, 2);
        assert_eq!(run(["qipkit", "--help"]).code, 0);
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = run(["qipkit", "--json", "--seed", "9", "chsh", "--trials", "2000"]);
        let b = run(["qipkit", "--json", "--seed", "9", "chsh", "--trials", "2000"]);
        assert_eq!(a, b);
    }

    #[test]
    fn floats_are_plain_decimals() {
        let s = to_json_string(&json!({ "tiny": 1.5e-9, "big": 2.5e21 }));
        assert!(!s.contains('e'), "{s}");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["tiny"].as_f64(), Some(1.5e-9));
    }

    #[test]
    fn text_mode_flattens() {
        let out = run(["qipkit", "entropy", "--probs", "0.5,0.5"]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("result.value_bits: 1\n"), "{}", out.stdout);
    }
}
