//! Pure states, density matrices, ensembles and Bloch coordinates.
//!
//! Qubit ordering: qubit 0 is the leftmost tensor factor, so in an n-qubit
//! register the basis index `i` reads `i_0 i_1 ... i_{n-1}` in binary with
//! `i_0` the most significant bit.
//!
//! Every type here is validated when constructed; downstream code assumes the
//! invariants hold.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, c, hermitian_eigen, norm_sqr, pauli, ComplexMatrix, C64, ONE, TOL, ZERO};

fn pairs_to_complex(pairs: Vec<[f64; 2]>) -> Vec<C64> {
    pairs.into_iter().map(|[re, im]| c(re, im)).collect()
}

fn serialize_complex_seq<S: Serializer>(data: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(data.iter().map(|z| [z.re, z.im]))
}

/// A unit vector in C^dim, `dim >= 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
}

impl PureState {
    /// Validates dimension, finiteness and unit norm (within 1e-10).
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidState(format!(
                "state dimension must be at least 2, got {}",
                amps.len()
            )));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let n2 = norm_sqr(&amps);
        if (n2 - 1.0).abs() > TOL {
            return Err(Error::InvalidState(format!("squared norm is {n2}, expected 1")));
        }
        Ok(Self { amps })
    }

    /// Scales `amps` to unit norm; fails on the zero vector.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let n = norm_sqr(&amps).sqrt();
        if !(n.is_finite() && n > 1e-300) {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite vector".into()));
        }
        Self::new(amps.into_iter().map(|z| z / n).collect())
    }

    /// Internal constructor for vectors that are unit up to round-off.
    pub(crate) fn renormalized(amps: Vec<C64>) -> Self {
        let n = norm_sqr(&amps).sqrt();
        Self {
            amps: amps.into_iter().map(|z| z / n).collect(),
        }
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(amps)
    }

    /// `|0...0>` on `n` qubits.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::basis(1usize << n, 0)
    }

    pub fn zero() -> Self {
        Self { amps: vec![ONE, ZERO] }
    }

    pub fn one() -> Self {
        Self { amps: vec![ZERO, ONE] }
    }

    pub fn plus() -> Self {
        let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { amps: vec![h, h] }
    }

    pub fn minus() -> Self {
        let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { amps: vec![h, -h] }
    }

    /// `alpha|0> + beta|1>`.
    pub fn qubit(alpha: C64, beta: C64) -> Result<Self> {
        Self::new(vec![alpha, beta])
    }

    /// Real qubit `cos(theta)|0> + sin(theta)|1>`.
    pub fn real_qubit(theta: f64) -> Self {
        Self {
            amps: vec![c(theta.cos(), 0.0), c(theta.sin(), 0.0)],
        }
    }

    /// `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
    pub fn from_bloch_angles(theta: f64, phi: f64) -> Self {
        Self::renormalized(vec![
            c((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ])
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Number of qubits if the dimension is a power of two.
    pub fn num_qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        linalg::inner(&self.amps, &other.amps)
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Equality up to a global phase: `1 - |<a|b>|^2 <= tol`.
    pub fn equals_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim() && 1.0 - self.overlap(other) <= tol
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self { amps }
    }

    /// `U|psi>` for a unitary `U`.
    pub fn apply(&self, u: &ComplexMatrix) -> Result<Self> {
        let dev = u.unitarity_deviation();
        if dev > TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self::renormalized(u.mul_vec(&self.amps)?))
    }

    pub fn to_column(&self) -> ComplexMatrix {
        ComplexMatrix::column(&self.amps)
    }

    /// `|psi><psi|`.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amps, &self.amps)
    }
}

impl Serialize for PureState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_complex_seq(&self.amps, s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        PureState::new(pairs_to_complex(pairs)).map_err(serde::de::Error::custom)
    }
}

/// Which factor of a bipartite system survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity (all within 1e-10).
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        if m.rows() < 1 {
            return Err(Error::InvalidState("empty density matrix".into()));
        }
        let dev = m.hermitian_deviation();
        if dev > TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let eig = hermitian_eigen(&m)?;
        if let Some(&low) = eig.eigenvalues.first() {
            if low < -TOL {
                return Err(Error::InvalidState(format!(
                    "not positive semidefinite (eigenvalue {low})"
                )));
            }
        }
        Ok(Self { m })
    }

    /// Internal constructor; symmetrizes away round-off.
    pub(crate) fn from_raw(m: ComplexMatrix) -> Self {
        let h = m.add(&m.adjoint()).expect("square").scale_real(0.5);
        Self { m: h }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self { m: psi.projector() }
    }

    /// `sum_j p_j rho_j`.
    pub fn from_ensemble(e: &Ensemble) -> Self {
        let d = e.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (state, p) in e.members() {
            acc.add_assign_scaled(&state.to_density().m, c(*p, 0.0));
        }
        Self::from_raw(acc)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// Diagonal state `sum_i p_i |i><i|`.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::diag_real(probs))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    /// `Tr(rho^2)`; for Hermitian rho this is the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        norm_sqr(self.m.data())
    }

    pub fn is_pure(&self) -> bool {
        self.purity() > 1.0 - 1e-8
    }

    /// Ascending spectrum.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigen(&self.m)?.eigenvalues)
    }

    pub fn bloch(&self) -> Result<BlochVector> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "Bloch vector needs a 2x2 density matrix, got {}x{}",
                self.dim(),
                self.dim()
            )));
        }
        // rho = (I + x X + y Y + z Z)/2  =>  rho_01 = (x - i y)/2, rho_00 - rho_11 = z
        let r01 = self.m.get(0, 1);
        let x = 2.0 * r01.re;
        let y = -2.0 * r01.im;
        let z = self.m.get(0, 0).re - self.m.get(1, 1).re;
        Ok(BlochVector { x, y, z })
    }

    pub fn from_bloch(b: &BlochVector) -> Self {
        let m = ComplexMatrix::identity(2)
            .add(&pauli::x().scale_real(b.x))
            .and_then(|m| m.add(&pauli::y().scale_real(b.y)))
            .and_then(|m| m.add(&pauli::z().scale_real(b.z)))
            .expect("2x2")
            .scale_real(0.5);
        Self { m }
    }

    /// Reduced state of a `dim_a x dim_b` bipartite system.
    pub fn partial_trace(&self, dim_a: usize, dim_b: usize, keep: Keep) -> Result<Self> {
        if dim_a * dim_b != self.dim() || dim_a == 0 || dim_b == 0 {
            return Err(Error::DimensionMismatch(format!(
                "cannot split dimension {} as {dim_a} x {dim_b}",
                self.dim()
            )));
        }
        let r = &self.m;
        let out = match keep {
            Keep::A => {
                let mut s = ComplexMatrix::zeros(dim_a, dim_a);
                for a in 0..dim_a {
                    for a2 in 0..dim_a {
                        let v: C64 = (0..dim_b).map(|b| r.get(a * dim_b + b, a2 * dim_b + b)).sum();
                        s.set(a, a2, v);
                    }
                }
                s
            }
            Keep::B => {
                let mut s = ComplexMatrix::zeros(dim_b, dim_b);
                for b in 0..dim_b {
                    for b2 in 0..dim_b {
                        let v: C64 = (0..dim_a).map(|a| r.get(a * dim_b + b, a * dim_b + b2)).sum();
                        s.set(b, b2, v);
                    }
                }
                s
            }
        };
        Ok(Self::from_raw(out))
    }

    /// `U rho U†`.
    pub fn apply_unitary(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.rows() != self.dim() || !u.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} unitary on dimension {}",
                u.rows(),
                u.cols(),
                self.dim()
            )));
        }
        let dev = u.unitarity_deviation();
        if dev > TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self::from_raw(u.matmul(&self.m)?.matmul(&u.adjoint())?))
    }

    /// `sum_k E_k rho E_k†`, requiring `sum_k E_k† E_k = I` within 1e-10.
    pub fn apply_kraus(&self, ops: &[ComplexMatrix]) -> Result<Self> {
        check_kraus(ops, self.dim())?;
        let d = self.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for e in ops {
            let term = e.matmul(&self.m)?.matmul(&e.adjoint())?;
            acc.add_assign_scaled(&term, ONE);
        }
        Ok(Self::from_raw(acc))
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            m: self.m.kron(&other.m),
        }
    }

    /// `Tr(rho A)`.
    pub fn expect(&self, a: &ComplexMatrix) -> Result<C64> {
        Ok(self.m.matmul(a)?.trace())
    }
}

/// Validates a Kraus set on dimension `dim`.
pub fn check_kraus(ops: &[ComplexMatrix], dim: usize) -> Result<()> {
    if ops.is_empty() {
        return Err(Error::InvalidChannel("empty Kraus set".into()));
    }
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for e in ops {
        if e.rows() != dim || e.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} Kraus operator on dimension {dim}",
                e.rows(),
                e.cols()
            )));
        }
        sum.add_assign_scaled(&e.adjoint().matmul(e)?, ONE);
    }
    let dev = sum.max_abs_diff(&ComplexMatrix::identity(dim))?;
    if dev > TOL {
        return Err(Error::InvalidChannel(format!(
            "Kraus completeness violated by {dev:e}"
        )));
    }
    Ok(())
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_complex_seq(self.m.data(), s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        let n = (pairs.len() as f64).sqrt().round() as usize;
        if n * n != pairs.len() {
            return Err(serde::de::Error::custom("entry count is not a perfect square"));
        }
        ComplexMatrix::new(n, n, pairs_to_complex(pairs))
            .and_then(DensityMatrix::new)
            .map_err(serde::de::Error::custom)
    }
}

/// Either representation of a quantum state.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantumState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(p) => p.dim(),
            QuantumState::Mixed(m) => m.dim(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            QuantumState::Pure(p) => DensityMatrix::from_pure(p),
            QuantumState::Mixed(m) => m.clone(),
        }
    }

    /// `<psi|A|psi>` or `Tr(rho A)`.
    pub fn expect(&self, a: &ComplexMatrix) -> Result<C64> {
        match self {
            QuantumState::Pure(p) => Ok(linalg::inner(p.amplitudes(), &a.mul_vec(p.amplitudes())?)),
            QuantumState::Mixed(m) => m.expect(a),
        }
    }

    pub fn as_pure(&self) -> Option<&PureState> {
        match self {
            QuantumState::Pure(p) => Some(p),
            QuantumState::Mixed(_) => None,
        }
    }
}

impl From<PureState> for QuantumState {
    fn from(p: PureState) -> Self {
        QuantumState::Pure(p)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(m: DensityMatrix) -> Self {
        QuantumState::Mixed(m)
    }
}

/// States with probabilities summing to 1.
#[derive(Clone, Debug)]
pub struct Ensemble {
    members: Vec<(QuantumState, f64)>,
}

impl Ensemble {
    pub fn new(members: Vec<(QuantumState, f64)>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::InvalidState("empty ensemble".into()));
        };
        let d = first.0.dim();
        let mut total = 0.0;
        for (s, p) in &members {
            if s.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "ensemble members of dimension {d} and {}",
                    s.dim()
                )));
            }
            if !p.is_finite() || *p < 0.0 || *p > 1.0 {
                return Err(Error::InvalidState(format!("probability {p} outside [0, 1]")));
            }
            total += p;
        }
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidState(format!(
                "ensemble probabilities sum to {total}"
            )));
        }
        Ok(Self { members })
    }

    pub fn from_pure(states: Vec<PureState>, probs: &[f64]) -> Result<Self> {
        if states.len() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} states but {} probabilities",
                states.len(),
                probs.len()
            )));
        }
        Self::new(
            states
                .into_iter()
                .zip(probs)
                .map(|(s, &p)| (QuantumState::Pure(s), p))
                .collect(),
        )
    }

    pub fn members(&self) -> &[(QuantumState, f64)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].0.dim()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.members.iter().map(|(_, p)| *p).collect()
    }

    /// Member states as pure vectors, if every member is pure.
    pub fn pure_states(&self) -> Option<Vec<&PureState>> {
        self.members.iter().map(|(s, _)| s.as_pure()).collect()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_ensemble(self)
    }
}

/// Real 3-vector inside the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let b = Self { x, y, z };
        let n = b.norm();
        if !n.is_finite() || n > 1.0 + TOL {
            return Err(Error::InvalidState(format!("Bloch vector length {n} exceeds 1")));
        }
        Ok(b)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

pub fn density_from_pure(psi: &PureState) -> DensityMatrix {
    DensityMatrix::from_pure(psi)
}

pub fn density_from_ensemble(e: &Ensemble) -> DensityMatrix {
    DensityMatrix::from_ensemble(e)
}

pub fn bloch_from_density(rho: &DensityMatrix) -> Result<BlochVector> {
    rho.bloch()
}

pub fn density_from_bloch(b: &BlochVector) -> DensityMatrix {
    DensityMatrix::from_bloch(b)
}

pub fn partial_trace(rho: &DensityMatrix, dim_a: usize, dim_b: usize, keep: Keep) -> Result<DensityMatrix> {
    rho.partial_trace(dim_a, dim_b, keep)
}

pub fn tensor_states(a: &PureState, b: &PureState) -> PureState {
    a.tensor(b)
}

/// A two-qubit pure state is a product state iff its reduced state is pure.
pub fn is_product_two_qubit(psi: &PureState) -> Result<bool> {
    if psi.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "expected a two-qubit state, got dimension {}",
            psi.dim()
        )));
    }
    let reduced = DensityMatrix::from_pure(psi).partial_trace(2, 2, Keep::A)?;
    Ok(reduced.is_pure())
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Normalized vector of independent standard complex Gaussians.
pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("dimension {dim} < 2")));
    }
    loop {
        let v: Vec<C64> = (0..dim).map(|_| gaussian_complex(rng)).collect();
        if norm_sqr(&v) > 1e-24 {
            return PureState::normalized(v);
        }
    }
}

/// Reduced state of a random pure state on `dim x rank`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} must lie in 1..={dim}"
        )));
    }
    if rank == 1 {
        return Ok(DensityMatrix::from_pure(&random_pure(dim, rng)?));
    }
    let psi = random_pure(dim * rank, rng)?;
    DensityMatrix::from_pure(&psi).partial_trace(dim, rank, Keep::A)
}

/// `count` random complex Gaussian matrices orthonormalized into a Kraus set:
/// `K_i = G_i S^{-1/2}` with `S = sum_i G_i† G_i`.
pub fn random_kraus<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Result<Vec<ComplexMatrix>> {
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one Kraus operator".into()));
    }
    let gs: Vec<ComplexMatrix> = (0..count)
        .map(|_| ComplexMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng)))
        .collect::<Result<_>>()?;
    let mut s = ComplexMatrix::zeros(dim, dim);
    for g in &gs {
        s.add_assign_scaled(&g.adjoint().matmul(g)?, ONE);
    }
    let inv_sqrt = linalg::matrix_func(&s, |l| c(1.0 / l.sqrt(), 0.0))?;
    gs.iter().map(|g| g.matmul(&inv_sqrt)).collect()
}

/// Haar-distributed unitary: Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<ComplexMatrix> {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| gaussian_complex(rng)).collect();
        for u in &cols {
            let proj = linalg::inner(u, &v);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let n = norm_sqr(&v).sqrt();
        if n > 1e-8 {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}
