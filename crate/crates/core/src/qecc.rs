//! The three-qubit bit-flip repetition code, classical and quantum.
//!
//! Syndromes use eigenvalues `+1/-1` in the quantum code and bits `0/1` in
//! the classical one, with `+1 <-> 0` and `-1 <-> 1`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, pauli, ComplexMatrix, C64, ONE};
use crate::qcircuit::{apply_circuit, apply_gate_in_place, repetition_encoder};
use crate::qmeasure::{sample, von_neumann, ProjectiveMeasurement};
use crate::qstate::{PureState, QuantumState};

/// Tolerance on ancilla amplitudes when decoding.
pub const ANCILLA_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClassicalCodeword(pub [u8; 3]);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClassicalSyndrome {
    pub s1: u8,
    pub s2: u8,
}

/// `0 -> 000`, `1 -> 111`.
pub fn classical_encode(bit: u8) -> Result<ClassicalCodeword> {
    match bit {
        0 | 1 => Ok(ClassicalCodeword([bit; 3])),
        _ => Err(Error::InvalidArgument(format!("bit must be 0 or 1, got {bit}"))),
    }
}

/// `(y0 xor y1, y0 xor y2)`.
pub fn classical_syndrome(w: ClassicalCodeword) -> ClassicalSyndrome {
    let [y0, y1, y2] = w.0;
    ClassicalSyndrome {
        s1: (y0 ^ y1) & 1,
        s2: (y0 ^ y2) & 1,
    }
}

/// Position flagged by a syndrome, if any.
fn flagged_position(s1: bool, s2: bool) -> Option<usize> {
    match (s1, s2) {
        (false, false) => None,
        (true, true) => Some(0),
        (true, false) => Some(1),
        (false, true) => Some(2),
    }
}

pub fn classical_correct(w: ClassicalCodeword, s: ClassicalSyndrome) -> ClassicalCodeword {
    let mut bits = w.0;
    if let Some(p) = flagged_position(s.s1 == 1, s.s2 == 1) {
        bits[p] ^= 1;
    }
    ClassicalCodeword(bits)
}

/// Pair of `M1 = Z Z I` and `M2 = Z I Z` eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Syndrome {
    pub m1: i8,
    pub m2: i8,
}

impl Syndrome {
    pub fn new(m1: i8, m2: i8) -> Result<Self> {
        if ![1, -1].contains(&m1) || ![1, -1].contains(&m2) {
            return Err(Error::InvalidArgument(format!("syndrome values must be +1 or -1, got ({m1}, {m2})")));
        }
        Ok(Self { m1, m2 })
    }

    pub fn to_classical(self) -> ClassicalSyndrome {
        ClassicalSyndrome {
            s1: u8::from(self.m1 == -1),
            s2: u8::from(self.m2 == -1),
        }
    }

    pub fn from_classical(s: ClassicalSyndrome) -> Self {
        Self {
            m1: if s.s1 == 1 { -1 } else { 1 },
            m2: if s.s2 == 1 { -1 } else { 1 },
        }
    }

    /// Qubit the correction table flips for this syndrome.
    pub fn flagged_qubit(self) -> Option<usize> {
        flagged_position(self.m1 == -1, self.m2 == -1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => pauli::identity(),
            Pauli::X => pauli::x(),
            Pauli::Y => pauli::y(),
            Pauli::Z => pauli::z(),
        }
    }

    fn from_char(ch: char) -> Option<Self> {
        Some(match ch.to_ascii_lowercase() {
            'i' => Pauli::I,
            'x' => Pauli::X,
            'y' => Pauli::Y,
            'z' => Pauli::Z,
            _ => return None,
        })
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'i',
            Pauli::X => 'x',
            Pauli::Y => 'y',
            Pauli::Z => 'z',
        }
    }
}

/// Error applied to a codeword: nothing, a single bit flip, or an arbitrary
/// three-qubit Pauli word (for failure-mode demonstrations).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitFlipError {
    None,
    Flip(usize),
    Word([Pauli; 3]),
}

impl BitFlipError {
    /// Parses `none`, a position `0|1|2`, a three-letter word such as `xxi`
    /// or `xxx`, or letters followed by positions such as `xx01` or `z0`.
    pub fn parse(token: &str) -> Result<Self> {
        let t = token.trim().to_ascii_lowercase();
        let bad = || Error::InvalidArgument(format!("unrecognised error pattern '{token}'"));
        match t.as_str() {
            "none" => return Ok(BitFlipError::None),
            "0" | "1" | "2" => return Ok(BitFlipError::Flip(t.parse().expect("digit"))),
            _ => {}
        }
        let split = t.find(|ch: char| ch.is_ascii_digit()).unwrap_or(t.len());
        let (letters, digits) = t.split_at(split);
        let paulis: Vec<Pauli> = letters.chars().map(Pauli::from_char).collect::<Option<_>>().ok_or_else(bad)?;
        if digits.is_empty() {
            let word: [Pauli; 3] = paulis.try_into().map_err(|_| bad())?;
            return Ok(BitFlipError::Word(word));
        }
        let positions: Vec<usize> = digits
            .chars()
            .map(|ch| ch.to_digit(10).map(|d| d as usize).filter(|&d| d < 3))
            .collect::<Option<_>>()
            .ok_or_else(bad)?;
        if positions.len() != paulis.len() {
            return Err(bad());
        }
        let mut word = [Pauli::I; 3];
        for (p, q) in paulis.into_iter().zip(positions) {
            if word[q] != Pauli::I {
                return Err(bad());
            }
            word[q] = p;
        }
        Ok(BitFlipError::Word(word))
    }

    pub fn word(self) -> [Pauli; 3] {
        match self {
            BitFlipError::None => [Pauli::I; 3],
            BitFlipError::Flip(q) => {
                let mut w = [Pauli::I; 3];
                if let Some(slot) = w.get_mut(q) {
                    *slot = Pauli::X;
                }
                w
            }
            BitFlipError::Word(w) => w,
        }
    }

    /// Canonical spelling, e.g. `none`, `1`, `xxi`.
    pub fn label(self) -> String {
        match self {
            BitFlipError::None => "none".into(),
            BitFlipError::Flip(q) => q.to_string(),
            BitFlipError::Word(w) => w.iter().map(|p| p.letter()).collect(),
        }
    }
}

fn require_three_qubits(state: &PureState) -> Result<()> {
    if state.dim() != 8 {
        return Err(Error::DimensionMismatch(format!(
            "expected a three-qubit state, got dimension {}",
            state.dim()
        )));
    }
    Ok(())
}

/// `alpha|0> + beta|1>` to `alpha|000> + beta|111>` via the encoder circuit.
pub fn encode(alpha: C64, beta: C64) -> Result<PureState> {
    let logical = PureState::qubit(alpha, beta)?;
    apply_circuit(&repetition_encoder(), &logical.tensor(&PureState::zeros(2)?))
}

fn apply_word(state: &PureState, word: [Pauli; 3]) -> PureState {
    let mut amps = state.amplitudes().to_vec();
    for (q, p) in word.iter().enumerate() {
        if *p != Pauli::I {
            apply_gate_in_place(&mut amps, 3, &p.matrix(), &[q]);
        }
    }
    PureState::renormalized(amps)
}

pub fn inject(state: &PureState, e: BitFlipError) -> Result<PureState> {
    require_three_qubits(state)?;
    if let BitFlipError::Flip(q) = e {
        if q > 2 {
            return Err(Error::InvalidArgument(format!("flip position {q} out of range")));
        }
    }
    Ok(apply_word(state, e.word()))
}

/// `Z Z I` and `Z I Z`.
pub fn syndrome_observables() -> (ComplexMatrix, ComplexMatrix) {
    let (i, z) = (pauli::identity(), pauli::z());
    (z.kron(&z).kron(&i), z.kron(&i).kron(&z))
}

fn measure_observable<R: Rng + ?Sized>(
    state: &PureState,
    obs: &ComplexMatrix,
    rng: &mut R,
) -> Result<(i8, PureState)> {
    let m = ProjectiveMeasurement::from_observable(obs)?;
    let dist = von_neumann(&QuantumState::Pure(state.clone()), &m)?;
    let k = sample(&dist, rng);
    let post = dist
        .post_state(k)
        .and_then(QuantumState::as_pure)
        .cloned()
        .ok_or_else(|| Error::InvalidState("sampled a zero-probability outcome".into()))?;
    Ok((m.labels()[k].round() as i8, post))
}

/// Measures `M1` then `M2`. On a state inside one error space both outcomes
/// are certain and the state is unchanged.
pub fn measure_syndrome<R: Rng + ?Sized>(state: &PureState, rng: &mut R) -> Result<(Syndrome, PureState)> {
    require_three_qubits(state)?;
    let (m1_obs, m2_obs) = syndrome_observables();
    let (m1, mid) = measure_observable(state, &m1_obs, rng)?;
    let (m2, post) = measure_observable(&mid, &m2_obs, rng)?;
    Ok((Syndrome::new(m1, m2)?, post))
}

/// Applies the correction table's `X` for syndrome `s`.
pub fn correct(state: &PureState, s: Syndrome) -> Result<PureState> {
    require_three_qubits(state)?;
    Ok(match s.flagged_qubit() {
        Some(q) => inject(state, BitFlipError::Flip(q))?,
        None => state.clone(),
    })
}

/// Runs the encoder backwards and returns the logical amplitudes, after
/// checking that both ancillas are back in `|0>`.
pub fn decode(state: &PureState) -> Result<(C64, C64)> {
    require_three_qubits(state)?;
    let cx = crate::qcircuit::standard_gate(crate::qcircuit::GateKind::Cnot)?;
    let mut amps = state.amplitudes().to_vec();
    apply_gate_in_place(&mut amps, 3, &cx, &[0, 2]);
    apply_gate_in_place(&mut amps, 3, &cx, &[0, 1]);
    let leak: f64 = amps
        .iter()
        .enumerate()
        .filter(|(i, _)| i & 0b011 != 0)
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if leak > ANCILLA_TOL {
        return Err(Error::InvalidState(format!(
            "ancillas not in |00> after decoding (residual {leak:e})"
        )));
    }
    Ok((amps[0b000], amps[0b100]))
}

/// Projectors onto the four error spaces: no flip, flip on qubit 0, 1, 2.
pub fn error_space_projectors() -> Vec<ComplexMatrix> {
    let pairs = [(0b000, 0b111), (0b100, 0b011), (0b010, 0b101), (0b001, 0b110)];
    pairs
        .iter()
        .map(|&(a, b)| {
            let mut p = ComplexMatrix::zeros(8, 8);
            p.set(a, a, ONE);
            p.set(b, b, ONE);
            p
        })
        .collect()
}

/// Measures the four error-space projectors. Returns the space index
/// (1 = no error, 2..=4 = flip on qubit 0..=2) and the post-state.
pub fn four_projector_decode<R: Rng + ?Sized>(state: &PureState, rng: &mut R) -> Result<(usize, PureState)> {
    require_three_qubits(state)?;
    let m = ProjectiveMeasurement::new(error_space_projectors(), None)?;
    let dist = von_neumann(&QuantumState::Pure(state.clone()), &m)?;
    let k = sample(&dist, rng);
    let post = dist
        .post_state(k)
        .and_then(QuantumState::as_pure)
        .cloned()
        .ok_or_else(|| Error::InvalidState("sampled a zero-probability outcome".into()))?;
    Ok((k + 1, post))
}

/// Outcome of one encode / corrupt / correct / decode cycle.
#[derive(Clone, Debug, Serialize)]
pub struct EccReport {
    pub error: String,
    pub syndrome: Syndrome,
    /// Space index from the four-projector decoder on the corrupted state.
    pub error_space: usize,
    pub decoded: [[f64; 2]; 2],
    pub fidelity: f64,
    pub recovered: bool,
}

/// Full pipeline on logical state `(alpha, beta)` with error `e`.
pub fn run_pipeline<R: Rng + ?Sized>(alpha: C64, beta: C64, e: BitFlipError, rng: &mut R) -> Result<EccReport> {
    let original = PureState::qubit(alpha, beta)?;
    let corrupted = inject(&encode(alpha, beta)?, e)?;
    let (error_space, _) = four_projector_decode(&corrupted, rng)?;
    let (syndrome, measured) = measure_syndrome(&corrupted, rng)?;
    let (a, b) = decode(&correct(&measured, syndrome)?)?;
    let decoded = PureState::renormalized(vec![a, b]);
    let fidelity = original.overlap(&decoded);
    Ok(EccReport {
        error: e.label(),
        syndrome,
        error_space,
        decoded: [[a.re, a.im], [b.re, b.im]],
        fidelity,
        recovered: fidelity >= 1.0 - 1e-10,
    })
}

/// Default logical state used by demonstrations: `0.6|0> + 0.8|1>`.
pub fn demo_logical() -> (C64, C64) {
    (c(0.6, 0.0), c(0.8, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use crate::qstate::random_pure;
    use crate::rng::rng_from_seed;

    fn logical_from_amps(alpha: C64, beta: C64, idx: (usize, usize)) -> PureState {
        let mut amps = vec![ZERO; 8];
        amps[idx.0] = alpha;
        amps[idx.1] = beta;
        PureState::new(amps).unwrap()
    }

    #[test]
    fn classical_examples() {
        assert_eq!(classical_encode(1).unwrap(), ClassicalCodeword([1, 1, 1]));
        assert!(classical_encode(2).is_err());
        let w = ClassicalCodeword([1, 0, 1]);
        let s = classical_syndrome(w);
        assert_eq!(s, ClassicalSyndrome { s1: 1, s2: 0 });
        assert_eq!(classical_correct(w, s), ClassicalCodeword([1, 1, 1]));
        let w = ClassicalCodeword([0, 0, 0]);
        let s = classical_syndrome(w);
        assert_eq!(s, ClassicalSyndrome { s1: 0, s2: 0 });
        assert_eq!(classical_correct(w, s), w);
    }

    #[test]
    fn classical_corrects_every_single_flip() {
        for bit in 0..2 {
            let cw = classical_encode(bit).unwrap();
            for pos in 0..3 {
                let mut w = cw.0;
                w[pos] ^= 1;
                let w = ClassicalCodeword(w);
                assert_eq!(classical_correct(w, classical_syndrome(w)), cw);
            }
        }
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode(ONE, ZERO).unwrap(), PureState::basis(8, 0).unwrap());
        let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let s = encode(h, h).unwrap();
        assert!(s.equals_up_to_phase(&logical_from_amps(h, h, (0, 7)), 1e-15));
        let s = encode(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        assert_eq!(s, logical_from_amps(c(0.6, 0.0), c(0.0, 0.8), (0, 7)));
        assert!(encode(ONE, ONE).is_err());
    }

    #[test]
    fn inject_examples() {
        let (a, b) = (c(0.6, 0.0), c(0.8, 0.0));
        let s = encode(a, b).unwrap();
        assert_eq!(inject(&s, BitFlipError::Flip(0)).unwrap(), logical_from_amps(a, b, (0b100, 0b011)));
        assert_eq!(inject(&s, BitFlipError::None).unwrap(), s);
        assert_eq!(inject(&s, BitFlipError::Flip(2)).unwrap(), logical_from_amps(a, b, (0b001, 0b110)));
        assert!(inject(&PureState::zero(), BitFlipError::None).is_err());
    }

    #[test]
    fn syndrome_table_rows() {
        let (a, b) = (c(0.6, 0.0), c(0.8, 0.0));
        let mut rng = rng_from_seed(0);
        let rows = [
            ((0b000, 0b111), (1, 1), None),
            ((0b100, 0b011), (-1, -1), Some(0)),
            ((0b010, 0b101), (-1, 1), Some(1)),
            ((0b001, 0b110), (1, -1), Some(2)),
        ];
        for (idx, (m1, m2), flagged) in rows {
            let s = logical_from_amps(a, b, idx);
            let (syn, post) = measure_syndrome(&s, &mut rng).unwrap();
            assert_eq!((syn.m1, syn.m2), (m1, m2));
            assert_eq!(syn.flagged_qubit(), flagged);
            assert!(post.equals_up_to_phase(&s, 1e-15));
            let fixed = correct(&post, syn).unwrap();
            assert!(fixed.equals_up_to_phase(&encode(a, b).unwrap(), 1e-15));
        }
    }

    #[test]
    fn correction_recovers_all_single_flips() {
        let mut rng = rng_from_seed(11);
        for _ in 0..200 {
            let psi = random_pure(2, &mut rng).unwrap();
            let (a, b) = (psi.amplitudes()[0], psi.amplitudes()[1]);
            for e in [BitFlipError::None, BitFlipError::Flip(0), BitFlipError::Flip(1), BitFlipError::Flip(2)] {
                let r = run_pipeline(a, b, e, &mut rng).unwrap();
                assert!(r.recovered && (r.fidelity - 1.0).abs() < 1e-10, "{e:?}");
            }
        }
    }

    #[test]
    fn failure_modes() {
        let (a, b) = demo_logical();
        let mut rng = rng_from_seed(3);
        let xxi = BitFlipError::parse("xx01").unwrap();
        let r = run_pipeline(a, b, xxi, &mut rng).unwrap();
        assert_eq!((r.syndrome.m1, r.syndrome.m2), (1, -1));
        assert!(!r.recovered);
        assert_eq!(r.decoded, [[0.8, 0.0], [0.6, 0.0]]);

        let r = run_pipeline(a, b, BitFlipError::parse("xxx").unwrap(), &mut rng).unwrap();
        assert_eq!((r.syndrome.m1, r.syndrome.m2), (1, 1));
        assert!(!r.recovered);

        let r = run_pipeline(a, b, BitFlipError::parse("z0").unwrap(), &mut rng).unwrap();
        assert_eq!((r.syndrome.m1, r.syndrome.m2), (1, 1));
        assert!(!r.recovered);
        assert_eq!(r.decoded, [[0.6, 0.0], [-0.8, 0.0]]);
    }

    #[test]
    fn four_projector_agrees_with_syndrome_decoder() {
        let mut rng = rng_from_seed(12);
        for _ in 0..50 {
            let psi = random_pure(2, &mut rng).unwrap();
            let enc = encode(psi.amplitudes()[0], psi.amplitudes()[1]).unwrap();
            for (space, e) in [(1, BitFlipError::None), (2, BitFlipError::Flip(0)), (3, BitFlipError::Flip(1)), (4, BitFlipError::Flip(2))] {
                let s = inject(&enc, e).unwrap();
                let (k, post) = four_projector_decode(&s, &mut rng).unwrap();
                assert_eq!(k, space);
                assert!(post.equals_up_to_phase(&s, 1e-12));
                let (syn, _) = measure_syndrome(&s, &mut rng).unwrap();
                let from_syndrome = syn.flagged_qubit().map_or(1, |q| q + 2);
                assert_eq!(from_syndrome, k);
            }
        }
    }

    #[test]
    fn classical_and_quantum_agree_on_basis_states() {
        let mut rng = rng_from_seed(2);
        for bit in 0..2u8 {
            let (a, b) = if bit == 0 { (ONE, ZERO) } else { (ZERO, ONE) };
            for pos in 0..3 {
                let mut w = classical_encode(bit).unwrap().0;
                w[pos] ^= 1;
                let cs = classical_syndrome(ClassicalCodeword(w));
                let s = inject(&encode(a, b).unwrap(), BitFlipError::Flip(pos)).unwrap();
                let (qs, _) = measure_syndrome(&s, &mut rng).unwrap();
                assert_eq!(qs.to_classical(), cs);
                assert_eq!(Syndrome::from_classical(cs), qs);
            }
        }
    }

    #[test]
    fn error_spec_parsing() {
        use Pauli::*;
        assert_eq!(BitFlipError::parse("none").unwrap(), BitFlipError::None);
        assert_eq!(BitFlipError::parse("2").unwrap(), BitFlipError::Flip(2));
        assert_eq!(BitFlipError::parse("xx01").unwrap(), BitFlipError::Word([X, X, I]));
        assert_eq!(BitFlipError::parse("XXX").unwrap(), BitFlipError::Word([X, X, X]));
        assert_eq!(BitFlipError::parse("z0").unwrap(), BitFlipError::Word([Z, I, I]));
        assert_eq!(BitFlipError::parse("yiz").unwrap(), BitFlipError::Word([Y, I, Z]));
        for bad in ["3", "xx0", "x3", "xx00", "ab", "", "xxxx"] {
            assert!(BitFlipError::parse(bad).is_err(), "{bad}");
        }
    }
}
