//! Gates, circuits, the circuit text format, oracles and time evolution.
//!
//! Circuit text grammar (one statement per line, `#` starts a comment,
//! keywords are case-insensitive):
//!
//! ```text
//! qubits N
//! h 0
//! cnot 0 1
//! u2 1 0.6 0.8 0.8 -0.6        # row-major 2x2, entries RE or RE+IMi
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{c, matrix_func, pauli, ComplexMatrix, C64, ONE, TOL, ZERO};
use crate::qstate::PureState;

/// Largest register accepted by the parser and state-vector routines.
pub const MAX_QUBITS: usize = 24;
/// Unitarity tolerance for user-supplied gate matrices.
pub const CUSTOM_UNITARY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    I,
    X,
    Y,
    Z,
    H,
    Cnot,
    /// Custom single-qubit unitary.
    U2,
    /// Custom unitary on any number of qubits.
    Un,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::I => "i",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::Cnot => "cnot",
            GateKind::U2 => "u2",
            GateKind::Un => "un",
        }
    }

    /// Case-insensitive lookup of a gate keyword.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "i" => GateKind::I,
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            "h" => GateKind::H,
            "cnot" => GateKind::Cnot,
            "u2" => GateKind::U2,
            _ => return None,
        })
    }

    /// Qubits acted on, for kinds with a fixed arity.
    pub fn arity(self) -> Option<usize> {
        match self {
            GateKind::Cnot => Some(2),
            GateKind::Un => None,
            _ => Some(1),
        }
    }
}

/// Matrix of a named gate.
pub fn standard_gate(kind: GateKind) -> Result<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match kind {
        GateKind::I => pauli::identity(),
        GateKind::X => pauli::x(),
        GateKind::Y => pauli::y(),
        GateKind::Z => pauli::z(),
        GateKind::H => ComplexMatrix::from_real(2, 2, &[s, s, s, -s])?,
        GateKind::Cnot => ComplexMatrix::from_real(
            4,
            4,
            &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.],
        )?,
        GateKind::U2 | GateKind::Un => {
            return Err(Error::InvalidArgument(format!(
                "'{}' has no fixed matrix",
                kind.name()
            )))
        }
    })
}

/// A unitary bound to an ordered list of target qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
    matrix: ComplexMatrix,
}

fn check_targets(targets: &[usize]) -> Result<()> {
    for (i, t) in targets.iter().enumerate() {
        if targets[..i].contains(t) {
            return Err(Error::InvalidArgument(format!("qubit {t} targeted twice")));
        }
    }
    Ok(())
}

impl Gate {
    pub fn standard(kind: GateKind, targets: &[usize]) -> Result<Self> {
        let matrix = standard_gate(kind)?;
        let arity = kind.arity().expect("standard gates have fixed arity");
        if targets.len() != arity {
            return Err(Error::InvalidArgument(format!(
                "'{}' takes {arity} qubit(s), got {}",
                kind.name(),
                targets.len()
            )));
        }
        check_targets(targets)?;
        Ok(Self {
            kind,
            targets: targets.to_vec(),
            matrix,
        })
    }

    pub fn h(q: usize) -> Self {
        Self::standard(GateKind::H, &[q]).expect("valid")
    }

    pub fn x(q: usize) -> Self {
        Self::standard(GateKind::X, &[q]).expect("valid")
    }

    pub fn z(q: usize) -> Self {
        Self::standard(GateKind::Z, &[q]).expect("valid")
    }

    pub fn cnot(control: usize, target: usize) -> Result<Self> {
        Self::standard(GateKind::Cnot, &[control, target])
    }

    /// Custom single-qubit gate; unitarity checked to 1e-8.
    pub fn u2(target: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != 2 || matrix.cols() != 2 {
            return Err(Error::DimensionMismatch("u2 needs a 2x2 matrix".into()));
        }
        let dev = matrix.unitarity_deviation();
        if dev > CUSTOM_UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self {
            kind: GateKind::U2,
            targets: vec![target],
            matrix,
        })
    }

    /// Custom gate on `targets` with a `2^k x 2^k` unitary.
    pub fn custom(targets: &[usize], matrix: ComplexMatrix) -> Result<Self> {
        let dim = 1usize
            .checked_shl(targets.len() as u32)
            .filter(|_| !targets.is_empty() && targets.len() <= MAX_QUBITS)
            .ok_or_else(|| Error::InvalidArgument("bad target count".into()))?;
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{} targets need a {dim}x{dim} matrix, got {}x{}",
                targets.len(),
                matrix.rows(),
                matrix.cols()
            )));
        }
        check_targets(targets)?;
        let dev = matrix.unitarity_deviation();
        if dev > CUSTOM_UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self {
            kind: GateKind::Un,
            targets: targets.to_vec(),
            matrix,
        })
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Ordered gate list over `qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "qubit count {qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        Ok(Self {
            qubits,
            gates: Vec::new(),
        })
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        if let Some(&t) = gate.targets.iter().find(|&&t| t >= self.qubits) {
            return Err(Error::InvalidArgument(format!(
                "qubit {t} out of range for a {}-qubit circuit",
                self.qubits
            )));
        }
        self.gates.push(gate);
        Ok(self)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    /// Full `2^n x 2^n` unitary, built from embedded gates.
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        let mut u = ComplexMatrix::identity(self.dim());
        for g in &self.gates {
            u = embed_gate(&g.matrix, &g.targets, self.qubits)?.matmul(&u)?;
        }
        Ok(u)
    }
}

/// Bit mask of qubit `q` in an `n`-qubit basis index.
#[inline]
fn qubit_mask(q: usize, n: usize) -> usize {
    1 << (n - 1 - q)
}

/// `2^n x 2^n` operator acting as `u` on `targets` (in listed order).
///
/// Built as `P^T (u (x) I) P`, where `P` reorders qubits so the targets
/// come first.
pub fn embed_gate(u: &ComplexMatrix, targets: &[usize], n: usize) -> Result<ComplexMatrix> {
    let k = targets.len();
    if k == 0 || u.rows() != 1 << k || u.cols() != 1 << k {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix for {k} targets",
            u.rows(),
            u.cols()
        )));
    }
    if n > 12 {
        return Err(Error::TooLarge(format!("dense {n}-qubit operator")));
    }
    check_targets(targets)?;
    if let Some(&t) = targets.iter().find(|&&t| t >= n) {
        return Err(Error::InvalidArgument(format!("target {t} out of range for {n} qubits")));
    }
    let order: Vec<usize> = targets
        .iter()
        .copied()
        .chain((0..n).filter(|q| !targets.contains(q)))
        .collect();
    let dim = 1usize << n;
    let perm: Vec<usize> = (0..dim)
        .map(|i| {
            order.iter().enumerate().fold(0, |acc, (j, &q)| {
                if i & qubit_mask(q, n) != 0 {
                    acc | qubit_mask(j, n)
                } else {
                    acc
                }
            })
        })
        .collect();
    let big = u.kron(&ComplexMatrix::identity(1 << (n - k)));
    ComplexMatrix::from_fn(dim, dim, |i, j| big.get(perm[i], perm[j]))
}

/// In-place application of `matrix` on `targets` to an `n`-qubit amplitude
/// vector, touching only the `2^k` amplitudes of each target subspace.
pub fn apply_gate_in_place(amps: &mut [C64], n: usize, matrix: &ComplexMatrix, targets: &[usize]) {
    let k = targets.len();
    let sub = 1usize << k;
    let offsets: Vec<usize> = (0..sub)
        .map(|s| {
            (0..k)
                .filter(|&j| s & (1 << (k - 1 - j)) != 0)
                .map(|j| qubit_mask(targets[j], n))
                .sum()
        })
        .collect();
    let target_bits: usize = targets.iter().map(|&t| qubit_mask(t, n)).sum();
    let mut buf = vec![ZERO; sub];
    for base in 0..amps.len() {
        if base & target_bits != 0 {
            continue;
        }
        for (b, &o) in buf.iter_mut().zip(&offsets) {
            *b = amps[base + o];
        }
        for (r, &o) in offsets.iter().enumerate() {
            let row = &matrix.data()[r * sub..(r + 1) * sub];
            amps[base + o] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
        }
    }
}

/// Runs `c` on `psi`.
pub fn apply_circuit(c: &Circuit, psi: &PureState) -> Result<PureState> {
    if psi.dim() != c.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit circuit on a state of dimension {}",
            c.qubits,
            psi.dim()
        )));
    }
    let mut amps = psi.amplitudes().to_vec();
    for g in &c.gates {
        apply_gate_in_place(&mut amps, c.qubits, &g.matrix, &g.targets);
    }
    Ok(PureState::renormalized(amps))
}

/// H on qubit 0 followed by CNOT(0 -> 1).
pub fn bell_circuit() -> Circuit {
    let mut c = Circuit::new(2).expect("valid");
    c.push(Gate::h(0)).expect("valid");
    c.push(Gate::cnot(0, 1).expect("valid")).expect("valid");
    c
}

/// CNOT(0 -> 1), CNOT(0 -> 2): `a|0> + b|1>` (x) `|00>` to `a|000> + b|111>`.
pub fn repetition_encoder() -> Circuit {
    let mut c = Circuit::new(3).expect("valid");
    c.push(Gate::cnot(0, 1).expect("valid")).expect("valid");
    c.push(Gate::cnot(0, 2).expect("valid")).expect("valid");
    c
}

/// `2^{-n/2} sum_x |x>`.
pub fn uniform_superposition(n: usize) -> Result<PureState> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!("qubit count {n} outside 1..={MAX_QUBITS}")));
    }
    let dim = 1usize << n;
    let a = c((dim as f64).sqrt().recip(), 0.0);
    PureState::new(vec![a; dim])
}

fn oracle_permutation(f: &dyn Fn(usize) -> usize, n: usize, m: usize) -> Result<Vec<usize>> {
    if n == 0 || m == 0 || n + m > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!("oracle sizes n={n}, m={m}")));
    }
    let ys = 1usize << m;
    let mut fx = Vec::with_capacity(1 << n);
    for x in 0..(1usize << n) {
        let v = f(x);
        if v >= ys {
            return Err(Error::InvalidArgument(format!(
                "f({x}) = {v} does not fit in {m} output bits"
            )));
        }
        fx.push(v);
    }
    let mut perm = Vec::with_capacity(1 << (n + m));
    for (x, &v) in fx.iter().enumerate() {
        for y in 0..ys {
            perm.push(x * ys + (y ^ v));
        }
    }
    Ok(perm)
}

/// Permutation matrix of `|x, y> -> |x, y xor f(x)>`; inputs are `n` bits,
/// outputs `m` bits, `x` occupying the leading qubits.
pub fn function_oracle(f: impl Fn(usize) -> usize, n: usize, m: usize) -> Result<ComplexMatrix> {
    if n + m > 12 {
        return Err(Error::TooLarge(format!("dense {}-qubit oracle", n + m)));
    }
    let perm = oracle_permutation(&f, n, m)?;
    let dim = perm.len();
    let mut u = ComplexMatrix::zeros(dim, dim);
    for (src, &dst) in perm.iter().enumerate() {
        u.set(dst, src, ONE);
    }
    Ok(u)
}

/// `U_f` applied to `H^{(x)n}|0...0> (x) |0...0>`: the state
/// `2^{-n/2} sum_x |x, f(x)>`.
pub fn parallel_evaluate(f: impl Fn(usize) -> usize, n: usize, m: usize) -> Result<PureState> {
    let perm = oracle_permutation(&f, n, m)?;
    let input = uniform_superposition(n)?.tensor(&PureState::zeros(m)?);
    let mut out = vec![ZERO; perm.len()];
    for (src, &dst) in perm.iter().enumerate() {
        out[dst] = input.amplitudes()[src];
    }
    PureState::new(out)
}

/// `exp(-i H t)` with hbar = 1.
pub fn hamiltonian_evolution(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    matrix_func(h, |lambda| c(0.0, -lambda * t).exp())
}

/// Coefficients in `a = i I + x X + y Y + z Z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliCoefficients {
    pub i: C64,
    pub x: C64,
    pub y: C64,
    pub z: C64,
}

impl PauliCoefficients {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut m = pauli::identity().scale(self.i);
        m.add_assign_scaled(&pauli::x(), self.x);
        m.add_assign_scaled(&pauli::y(), self.y);
        m.add_assign_scaled(&pauli::z(), self.z);
        m
    }
}

/// `alpha_K = Tr(sigma_K a) / 2` for a 2x2 matrix.
pub fn pauli_decompose(a: &ComplexMatrix) -> Result<PauliCoefficients> {
    if a.rows() != 2 || a.cols() != 2 {
        return Err(Error::DimensionMismatch("Pauli decomposition needs 2x2".into()));
    }
    let coef = |s: ComplexMatrix| -> Result<C64> { Ok(s.matmul(a)?.trace() * 0.5) };
    Ok(PauliCoefficients {
        i: coef(pauli::identity())?,
        x: coef(pauli::x())?,
        y: coef(pauli::y())?,
        z: coef(pauli::z())?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownGate(String),
    IndexOutOfRange { index: usize, qubits: usize },
    DuplicateTarget(usize),
    NonUnitary(f64),
}

/// Parse failure with a 1-based source location.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::UnknownGate(g) => write!(f, "unknown gate '{g}'"),
            ParseErrorKind::IndexOutOfRange { index, qubits } => {
                write!(f, "qubit index {index} out of range for {qubits} qubits")
            }
            ParseErrorKind::DuplicateTarget(q) => write!(f, "qubit {q} used twice in one gate"),
            ParseErrorKind::NonUnitary(d) => {
                write!(f, "u2 matrix is not unitary (deviation {d:e})")
            }
        }
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = match line.find('#') {
        Some(p) => &line[..p],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in code.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &code[s..i],
                    column: code[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &code[s..],
            column: code[..s].chars().count() + 1,
        });
    }
    out
}

fn parse_float(s: &str) -> Option<f64> {
    let v: f64 = s.parse().ok()?;
    // reject "inf"/"nan" spellings
    v.is_finite().then_some(v)
}

/// `RE`, `RE+IMi`, `RE-IMi`, `RE+-IMi`, or `IMi`.
pub fn parse_complex(s: &str) -> Option<C64> {
    let Some(body) = s.strip_suffix(['i', 'I']) else {
        return parse_float(s).map(|re| c(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E' | b'+'));
    match split {
        Some(k) => {
            let re = parse_float(&body[..k])?;
            let im_text = if bytes[k] == b'+' { &body[k + 1..] } else { &body[k..] };
            if im_text.is_empty() || im_text.starts_with('+') {
                return None;
            }
            Some(c(re, parse_float(im_text)?))
        }
        None => parse_float(body).map(|im| c(0.0, im)),
    }
}

fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Parses circuit text; every failure carries its line and column.
pub fn parse_circuit(text: &str) -> std::result::Result<Circuit, ParseError> {
    let err = |line: usize, column: usize, kind: ParseErrorKind| ParseError { line, column, kind };
    let syntax = |line, column, m: &str| err(line, column, ParseErrorKind::Syntax(m.to_string()));

    let mut circuit: Option<Circuit> = None;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let toks = tokenize(raw);
        let Some(head) = toks.first() else { continue };
        let keyword = head.text.to_ascii_lowercase();

        let Some(circ) = circuit.as_mut() else {
            if keyword != "qubits" {
                return Err(syntax(lineno, head.column, "expected 'qubits N' header"));
            }
            let Some(count) = toks.get(1) else {
                return Err(syntax(lineno, head.column + head.text.len(), "missing qubit count"));
            };
            let n: usize = count
                .text
                .parse()
                .map_err(|_| syntax(lineno, count.column, "qubit count must be a non-negative integer"))?;
            if n == 0 || n > MAX_QUBITS {
                return Err(syntax(
                    lineno,
                    count.column,
                    &format!("qubit count must lie in 1..={MAX_QUBITS}"),
                ));
            }
            if let Some(extra) = toks.get(2) {
                return Err(syntax(lineno, extra.column, "unexpected token after qubit count"));
            }
            circuit = Some(Circuit::new(n).expect("checked range"));
            continue;
        };
        let n = circ.qubits;

        if keyword == "qubits" {
            return Err(syntax(lineno, head.column, "duplicate 'qubits' header"));
        }
        let kind = GateKind::from_name(&keyword)
            .ok_or_else(|| err(lineno, head.column, ParseErrorKind::UnknownGate(head.text.to_string())))?;
        let arity = kind.arity().expect("parseable gates have fixed arity");
        let n_values = if kind == GateKind::U2 { 4 } else { 0 };
        let expected = 1 + arity + n_values;
        if toks.len() < expected {
            let col = toks.last().map(|t| t.column + t.text.len()).unwrap_or(1);
            return Err(syntax(
                lineno,
                col,
                &format!("'{}' expects {} argument(s)", kind.name(), arity + n_values),
            ));
        }
        if let Some(extra) = toks.get(expected) {
            return Err(syntax(lineno, extra.column, "unexpected trailing token"));
        }

        let mut targets = Vec::with_capacity(arity);
        for t in &toks[1..=arity] {
            let q: usize = t
                .text
                .parse()
                .map_err(|_| syntax(lineno, t.column, "qubit index must be a non-negative integer"))?;
            if q >= n {
                return Err(err(lineno, t.column, ParseErrorKind::IndexOutOfRange { index: q, qubits: n }));
            }
            if targets.contains(&q) {
                return Err(err(lineno, t.column, ParseErrorKind::DuplicateTarget(q)));
            }
            targets.push(q);
        }

        let gate = if kind == GateKind::U2 {
            let mut entries = Vec::with_capacity(4);
            for t in &toks[1 + arity..] {
                entries.push(
                    parse_complex(t.text).ok_or_else(|| syntax(lineno, t.column, "malformed complex number"))?,
                );
            }
            let m = ComplexMatrix::new(2, 2, entries).expect("four finite entries");
            Gate::u2(targets[0], m).map_err(|e| match e {
                Error::NotUnitary(d) => err(lineno, head.column, ParseErrorKind::NonUnitary(d)),
                other => syntax(lineno, head.column, &other.to_string()),
            })?
        } else {
            Gate::standard(kind, &targets).expect("arity and targets checked")
        };
        circ.push(gate).expect("targets checked");
    }
    circuit.ok_or_else(|| syntax(last_line.max(1), 1, "missing 'qubits N' header"))
}

/// Canonical text form. Fails for `Un` gates, which have no textual syntax.
pub fn format_circuit(circuit: &Circuit) -> Result<String> {
    let mut out = format!("qubits {}\n", circuit.qubits);
    for g in &circuit.gates {
        match g.kind {
            GateKind::Un => {
                return Err(Error::InvalidArgument(
                    "multi-qubit custom gates cannot be written as text".into(),
                ))
            }
            GateKind::U2 => {
                out.push_str(&format!("u2 {}", g.targets[0]));
                for z in g.matrix.data() {
                    out.push(' ');
                    out.push_str(&format_complex(*z));
                }
            }
            kind => {
                out.push_str(kind.name());
                for t in &g.targets {
                    out.push_str(&format!(" {t}"));
                }
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Whether `<U a|U b> = <a|b>` within 1e-10.
pub fn preserves_inner_product(u: &ComplexMatrix, a: &PureState, b: &PureState) -> Result<bool> {
    let ua = u.mul_vec(a.amplitudes())?;
    let ub = u.mul_vec(b.amplitudes())?;
    Ok((crate::linalg::inner(&ua, &ub) - a.inner(b)).norm() <= TOL)
}
