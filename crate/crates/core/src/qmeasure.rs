//! Projective and POVM measurements, sampling and expectation values.

use rand::Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, c, hermitian_eigen, matrix_sqrt, ComplexMatrix, ONE, TOL, ZERO};
use crate::qcircuit::{apply_circuit, bell_circuit};
use crate::qstate::{DensityMatrix, PureState, QuantumState};

/// Tolerance for idempotence and mutual orthogonality of projectors.
pub const PROJECTOR_TOL: f64 = 1e-9;
/// Outcomes less likely than this get no post-measurement state.
pub const ZERO_PROB: f64 = 1e-12;

fn check_square_family(ops: &[ComplexMatrix]) -> Result<usize> {
    let Some(first) = ops.first() else {
        return Err(Error::InvalidMeasurement("no operators supplied".into()));
    };
    let d = first.rows();
    for m in ops {
        if m.rows() != d || m.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "measurement operators of size {d} and {}x{}",
                m.rows(),
                m.cols()
            )));
        }
    }
    Ok(d)
}

fn check_resolves_identity(ops: &[ComplexMatrix], d: usize) -> Result<()> {
    let mut sum = ComplexMatrix::zeros(d, d);
    for m in ops {
        sum.add_assign_scaled(m, ONE);
    }
    let dev = sum.max_abs_diff(&ComplexMatrix::identity(d))?;
    if dev > TOL {
        return Err(Error::InvalidMeasurement(format!(
            "operators do not sum to the identity (deviation {dev:e})"
        )));
    }
    Ok(())
}

/// Orthogonal projectors summing to the identity, each with a real label.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveMeasurement {
    projectors: Vec<ComplexMatrix>,
    labels: Vec<f64>,
}

impl ProjectiveMeasurement {
    /// Labels default to outcome indices.
    pub fn new(projectors: Vec<ComplexMatrix>, labels: Option<Vec<f64>>) -> Result<Self> {
        let d = check_square_family(&projectors)?;
        for (i, p) in projectors.iter().enumerate() {
            if !p.is_hermitian(PROJECTOR_TOL) {
                return Err(Error::InvalidMeasurement(format!("projector {i} is not Hermitian")));
            }
            let dev = p.matmul(p)?.max_abs_diff(p)?;
            if dev > PROJECTOR_TOL {
                return Err(Error::InvalidMeasurement(format!(
                    "projector {i} is not idempotent (deviation {dev:e})"
                )));
            }
            for (j, q) in projectors.iter().enumerate().skip(i + 1) {
                let overlap = p.matmul(q)?.max_abs();
                if overlap > PROJECTOR_TOL {
                    return Err(Error::InvalidMeasurement(format!(
                        "projectors {i} and {j} are not orthogonal"
                    )));
                }
            }
        }
        check_resolves_identity(&projectors, d)?;
        let labels = match labels {
            Some(l) if l.len() != projectors.len() => {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {} projectors",
                    l.len(),
                    projectors.len()
                )))
            }
            Some(l) => l,
            None => (0..projectors.len()).map(|i| i as f64).collect(),
        };
        Ok(Self { projectors, labels })
    }

    /// Rank-one projectors onto an orthonormal basis.
    pub fn from_basis(basis: &[PureState]) -> Result<Self> {
        check_orthonormal_basis(basis)?;
        Self::new(basis.iter().map(PureState::projector).collect(), None)
    }

    /// Eigenprojectors of a Hermitian observable, grouped by eigenvalue
    /// (values within 1e-9 are merged) and labelled by it.
    pub fn from_observable(obs: &ComplexMatrix) -> Result<Self> {
        let eig = hermitian_eigen(obs)?;
        let n = eig.eigenvalues.len();
        let mut projectors: Vec<ComplexMatrix> = Vec::new();
        let mut labels: Vec<f64> = Vec::new();
        let mut k = 0;
        while k < n {
            let start = k;
            while k + 1 < n && eig.eigenvalues[k + 1] - eig.eigenvalues[start] <= 1e-9 {
                k += 1;
            }
            let mut p = ComplexMatrix::zeros(n, n);
            for j in start..=k {
                let u = eig.vector(j);
                p.add_assign_scaled(&ComplexMatrix::outer(&u, &u), ONE);
            }
            let group = &eig.eigenvalues[start..=k];
            labels.push(group.iter().sum::<f64>() / group.len() as f64);
            projectors.push(p);
            k += 1;
        }
        Self::new(projectors, Some(labels))
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].rows()
    }
}

/// Positive semidefinite effects summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let d = check_square_family(&effects)?;
        for (i, e) in effects.iter().enumerate() {
            if !e.is_psd(TOL) {
                return Err(Error::InvalidMeasurement(format!(
                    "effect {i} is not positive semidefinite"
                )));
            }
        }
        check_resolves_identity(&effects, d)?;
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].rows()
    }
}

impl From<ProjectiveMeasurement> for Povm {
    fn from(m: ProjectiveMeasurement) -> Self {
        Povm { effects: m.projectors }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Measurement {
    Projective(ProjectiveMeasurement),
    Povm(Povm),
}

impl Measurement {
    /// Effect operators; projectors for projective measurements.
    pub fn effects(&self) -> &[ComplexMatrix] {
        match self {
            Measurement::Projective(m) => m.projectors(),
            Measurement::Povm(p) => p.effects(),
        }
    }

    pub fn len(&self) -> usize {
        self.effects().len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects().is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects()[0].rows()
    }

    pub fn measure(&self, state: &QuantumState) -> Result<OutcomeDistribution> {
        match self {
            Measurement::Projective(m) => von_neumann(state, m),
            Measurement::Povm(p) => povm_measure(state, p),
        }
    }
}

impl From<ProjectiveMeasurement> for Measurement {
    fn from(m: ProjectiveMeasurement) -> Self {
        Measurement::Projective(m)
    }
}

impl From<Povm> for Measurement {
    fn from(p: Povm) -> Self {
        Measurement::Povm(p)
    }
}

/// Outcome probabilities with the matching post-measurement states.
#[derive(Clone, Debug)]
pub struct OutcomeDistribution {
    probs: Vec<f64>,
    post_states: Vec<Option<QuantumState>>,
}

impl OutcomeDistribution {
    /// A bare distribution without post-states, e.g. for sampling.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let post_states = vec![None; probs.len()];
        Self::checked(probs, post_states)
    }

    fn checked(probs: Vec<f64>, post_states: Vec<Option<QuantumState>>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidMeasurement("empty distribution".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < -ZERO_PROB) {
            return Err(Error::InvalidMeasurement(format!("negative probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidMeasurement(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs, post_states })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `None` when the outcome has (numerically) zero probability.
    pub fn post_state(&self, i: usize) -> Option<&QuantumState> {
        self.post_states.get(i).and_then(Option::as_ref)
    }
}

fn check_orthonormal_basis(basis: &[PureState]) -> Result<()> {
    let Some(first) = basis.first() else {
        return Err(Error::InvalidMeasurement("empty basis".into()));
    };
    let d = first.dim();
    if basis.len() != d || basis.iter().any(|b| b.dim() != d) {
        return Err(Error::InvalidMeasurement(format!(
            "{} vectors cannot form a basis of dimension {d}",
            basis.len()
        )));
    }
    for (i, u) in basis.iter().enumerate() {
        for v in &basis[i + 1..] {
            let ip = u.inner(v).norm();
            if ip > TOL {
                return Err(Error::InvalidMeasurement(format!(
                    "basis vectors are not orthogonal (overlap {ip:e})"
                )));
            }
        }
    }
    Ok(())
}

fn check_dim(state: &QuantumState, d: usize) -> Result<()> {
    if state.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "measurement of dimension {d} on a state of dimension {}",
            state.dim()
        )));
    }
    Ok(())
}

/// Measurement in an orthonormal basis: `p_i = |<u_i|psi>|^2`, post-state `|u_i>`.
pub fn measure_in_basis(state: &QuantumState, basis: &[PureState]) -> Result<OutcomeDistribution> {
    check_orthonormal_basis(basis)?;
    check_dim(state, basis[0].dim())?;
    let mut probs = Vec::with_capacity(basis.len());
    let mut posts = Vec::with_capacity(basis.len());
    for u in basis {
        let p = match state {
            QuantumState::Pure(psi) => u.overlap(psi),
            QuantumState::Mixed(rho) => {
                linalg::inner(u.amplitudes(), &rho.matrix().mul_vec(u.amplitudes())?).re
            }
        };
        posts.push((p > ZERO_PROB).then(|| QuantumState::Pure(u.clone())));
        probs.push(p);
    }
    OutcomeDistribution::checked(probs, posts)
}

/// Applies the operators `ops` as Kraus maps of an instrument: outcome `i`
/// has probability `Tr(K_i rho K_i†)` and post-state `K_i rho K_i† / p_i`.
fn instrument(state: &QuantumState, ops: &[ComplexMatrix]) -> Result<OutcomeDistribution> {
    let mut probs = Vec::with_capacity(ops.len());
    let mut posts = Vec::with_capacity(ops.len());
    for k in ops {
        match state {
            QuantumState::Pure(psi) => {
                let v = k.mul_vec(psi.amplitudes())?;
                let p = linalg::norm_sqr(&v);
                posts.push((p > ZERO_PROB).then(|| QuantumState::Pure(PureState::renormalized(v))));
                probs.push(p);
            }
            QuantumState::Mixed(rho) => {
                let m = k.matmul(rho.matrix())?.matmul(&k.adjoint())?;
                let p = m.trace().re;
                posts.push(
                    (p > ZERO_PROB)
                        .then(|| QuantumState::Mixed(DensityMatrix::from_raw(m.scale_real(1.0 / p)))),
                );
                probs.push(p);
            }
        }
    }
    OutcomeDistribution::checked(probs, posts)
}

/// Von Neumann measurement: `p_i = Tr(Pi_i rho)`, post-state `Pi_i rho Pi_i / p_i`.
pub fn von_neumann(state: &QuantumState, m: &ProjectiveMeasurement) -> Result<OutcomeDistribution> {
    check_dim(state, m.dim())?;
    instrument(state, m.projectors())
}

/// POVM measurement with the square-root instrument `M_i = sqrt(E_i)`.
pub fn povm_measure(state: &QuantumState, p: &Povm) -> Result<OutcomeDistribution> {
    check_dim(state, p.dim())?;
    let roots: Vec<ComplexMatrix> = p.effects().iter().map(matrix_sqrt).collect::<Result<_>>()?;
    instrument(state, &roots)
}

/// Outcome probabilities only (`Tr(E_i rho)`), without forming post-states.
pub fn outcome_probabilities(state: &QuantumState, effects: &[ComplexMatrix]) -> Result<Vec<f64>> {
    effects.iter().map(|e| Ok(state.expect(e)?.re)).collect()
}

/// `<psi|A|psi>` or `Tr(rho A)` for Hermitian `A`.
pub fn expectation(state: &QuantumState, observable: &ComplexMatrix) -> Result<f64> {
    let dev = observable.hermitian_deviation();
    if dev > TOL * observable.max_abs().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    check_dim(state, observable.rows())?;
    Ok(state.expect(observable)?.re)
}

/// `sum_i lambda_i |u_i><u_i|`.
pub fn observable_from_eigensystem(lambdas: &[f64], basis: &[PureState]) -> Result<ComplexMatrix> {
    if lambdas.len() != basis.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} eigenvalues for {} vectors",
            lambdas.len(),
            basis.len()
        )));
    }
    check_orthonormal_basis(basis)?;
    let d = basis[0].dim();
    let mut h = ComplexMatrix::zeros(d, d);
    for (l, u) in lambdas.iter().zip(basis) {
        h.add_assign_scaled(&u.projector(), c(*l, 0.0));
    }
    Ok(h)
}

/// Inverse-CDF draw from the stored outcome order.
pub fn sample<R: Rng + ?Sized>(dist: &OutcomeDistribution, rng: &mut R) -> usize {
    sample_probs(dist.probs(), rng)
}

pub(crate) fn sample_probs<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p.max(0.0);
        if u < acc {
            return i;
        }
    }
    // round-off left u above the final partial sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// `sum_i Pi_i rho Pi_i`: the state after a measurement whose record is discarded.
pub fn dephase_lost_record(rho: &DensityMatrix, m: &ProjectiveMeasurement) -> Result<DensityMatrix> {
    if rho.dim() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "measurement of dimension {} on a state of dimension {}",
            m.dim(),
            rho.dim()
        )));
    }
    let d = rho.dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for p in m.projectors() {
        acc.add_assign_scaled(&p.matmul(rho.matrix())?.matmul(p)?, ONE);
    }
    Ok(DensityMatrix::from_raw(acc))
}

/// POVM `{(1/c)|phi_i><phi_i|}` from vectors whose projectors sum to `c I`.
pub fn povm_from_vectors(vectors: &[PureState]) -> Result<Povm> {
    let Some(first) = vectors.first() else {
        return Err(Error::InvalidMeasurement("no vectors supplied".into()));
    };
    let d = first.dim();
    if vectors.iter().any(|v| v.dim() != d) {
        return Err(Error::DimensionMismatch("vectors of different dimensions".into()));
    }
    let mut s = ComplexMatrix::zeros(d, d);
    for v in vectors {
        s.add_assign_scaled(&v.projector(), ONE);
    }
    let scale = s.trace().re / d as f64;
    let residual = s.max_abs_diff(&ComplexMatrix::identity(d).scale_real(scale))?;
    if residual > 1e-9 || scale <= 0.0 {
        return Err(Error::InvalidMeasurement(format!(
            "vectors do not resolve a multiple of the identity (residual {residual:e})"
        )));
    }
    Povm::new(vectors.iter().map(|v| v.projector().scale_real(1.0 / scale)).collect())
}

/// Random POVM: `E_i = S^{-1/2} G_i† G_i S^{-1/2}` with `S = sum_i G_i† G_i`.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Result<Povm> {
    let kraus = crate::qstate::random_kraus(dim, count, rng)?;
    let effects: Vec<ComplexMatrix> = kraus
        .iter()
        .map(|k| k.adjoint().matmul(k))
        .collect::<Result<_>>()?;
    // symmetrize round-off before the PSD check
    Povm::new(
        effects
            .into_iter()
            .map(|e| e.add(&e.adjoint()).map(|s| s.scale_real(0.5)))
            .collect::<Result<_>>()?,
    )
}

/// Computational-basis measurement of qubit `q` of an `n`-qubit pure state.
/// Returns the observed bit and the collapsed state.
pub fn measure_qubit<R: Rng + ?Sized>(psi: &PureState, q: usize, rng: &mut R) -> Result<(u8, PureState)> {
    let n = psi
        .num_qubits()
        .filter(|&n| q < n)
        .ok_or_else(|| Error::InvalidArgument(format!("qubit {q} out of range")))?;
    let mask = 1usize << (n - 1 - q);
    let p1: f64 = psi
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| i & mask != 0)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    let bit = u8::from(rng.random::<f64>() < p1);
    let amps = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| if ((i & mask) != 0) == (bit == 1) { *a } else { ZERO })
        .collect();
    Ok((bit, PureState::renormalized(amps)))
}

/// The four Bell states in the order produced by the Bell circuit on
/// `|00>, |01>, |10>, |11>`: Phi+, Psi+, Phi-, Psi-.
pub fn bell_basis() -> Vec<PureState> {
    let circ = bell_circuit();
    (0..4)
        .map(|i| apply_circuit(&circ, &PureState::basis(4, i).expect("valid")).expect("2 qubits"))
        .collect()
}

/// Real unit vector `cos(theta)|0> + sin(theta)|1>`.
fn real_vector(theta: f64) -> PureState {
    PureState::real_qubit(theta)
}

/// Trine vectors at angles -pi/12, 7pi/12, 5pi/4, each orthogonal to one of
/// the states at pi/12 and 5pi/12 (outcomes 0 and 1) with the third outcome
/// inconclusive.
pub fn trine_vectors() -> Vec<PureState> {
    vec![
        real_vector(-PI / 12.0),
        real_vector(7.0 * PI / 12.0),
        real_vector(5.0 * PI / 4.0),
    ]
}

fn product_basis(single: &[PureState; 2], n: usize) -> Vec<PureState> {
    (0..(1usize << n))
        .map(|i| {
            (0..n)
                .map(|q| single[(i >> (n - 1 - q)) & 1].clone())
                .reduce(|a, b| a.tensor(&b))
                .expect("n >= 1")
        })
        .collect()
}

/// Named measurement on `qubits` qubits.
///
/// `computational` and `hadamard` work for any register size, `bell` needs
/// two qubits, and `pauli-x|y|z` and `trine` need one.
pub fn preset(name: &str, qubits: usize) -> Result<Measurement> {
    let need = |k: usize| -> Result<()> {
        if qubits == k {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "measurement '{name}' needs {k} qubit(s), got {qubits}"
            )))
        }
    };
    if qubits == 0 {
        return Err(Error::InvalidArgument("no qubits to measure".into()));
    }
    Ok(match name.to_ascii_lowercase().as_str() {
        "computational" => {
            let basis: Vec<PureState> =
                (0..(1usize << qubits)).map(|i| PureState::basis(1 << qubits, i)).collect::<Result<_>>()?;
            ProjectiveMeasurement::from_basis(&basis)?.into()
        }
        "hadamard" => {
            let basis = product_basis(&[PureState::plus(), PureState::minus()], qubits);
            ProjectiveMeasurement::from_basis(&basis)?.into()
        }
        "pauli-x" | "pauli-y" | "pauli-z" => {
            need(1)?;
            let obs = match &name[6..] {
                "x" | "X" => linalg::pauli::x(),
                "y" | "Y" => linalg::pauli::y(),
                _ => linalg::pauli::z(),
            };
            ProjectiveMeasurement::from_observable(&obs)?.into()
        }
        "bell" => {
            need(2)?;
            ProjectiveMeasurement::from_basis(&bell_basis())?.into()
        }
        "trine" => {
            need(1)?;
            povm_from_vectors(&trine_vectors())?.into()
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown measurement '{name}' (expected computational, hadamard, pauli-x, pauli-y, pauli-z, bell or trine)"
            )));
        }
    })
}
