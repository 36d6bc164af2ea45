//! Entropies, fidelity, trace distance, measurement-induced channels, the
//! Holevo quantity, typical sets and typical-subspace compression.
//!
//! Logarithms are base 2 throughout; `0 log 0` is taken as 0.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ComplexMatrix, TOL};
use crate::qmeasure::{outcome_probabilities, Measurement};
use crate::qstate::{DensityMatrix, Ensemble, PureState};

/// Eigenvalues below this count as zero in entropies.
pub const ENTROPY_EIGEN_FLOOR: f64 = 1e-12;
/// Eigenvalues of `sqrt(s) w sqrt(s)` below this are rounding noise and are
/// dropped before the square root in the fidelity.
pub const FIDELITY_FLOOR: f64 = 1e-14;
/// Largest block length handled by exhaustive enumeration.
pub const MAX_BLOCK: usize = 24;
/// Cap on `|X|^n * |A|` for exact-mode fidelity.
pub const MAX_EXACT_WORK: u128 = 1 << 28;

const CHUNK: usize = 4096;

/// A probability vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalDistribution {
    probs: Vec<f64>,
}

impl ClassicalDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        let mut total = 0.0;
        for &p in &probs {
            if !p.is_finite() || p < -TOL || p > 1.0 + TOL {
                return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
            }
            total += p;
        }
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
        }
        Ok(Self {
            probs: probs.into_iter().map(|p| p.max(0.0)).collect(),
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        Ok(Self { probs: vec![1.0 / n as f64; n] })
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
}

/// Transition probabilities `P(output | input)`, one row per input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalChannel {
    transition: Vec<Vec<f64>>,
}

impl ClassicalChannel {
    pub fn new(transition: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = transition.first() else {
            return Err(Error::InvalidChannel("no inputs".into()));
        };
        let outputs = first.len();
        let mut rows = Vec::with_capacity(transition.len());
        for row in transition {
            if row.len() != outputs {
                return Err(Error::InvalidChannel(format!(
                    "rows of length {outputs} and {}",
                    row.len()
                )));
            }
            let row = ClassicalDistribution::new(row)
                .map_err(|e| Error::InvalidChannel(format!("bad row: {e}")))?;
            rows.push(row.probs);
        }
        Ok(Self { transition: rows })
    }

    pub fn binary_symmetric(p: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Outputs 0, erasure, 1.
    pub fn binary_erasure(eps: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - eps, eps, 0.0], vec![0.0, eps, 1.0 - eps]])
    }

    pub fn inputs(&self) -> usize {
        self.transition.len()
    }

    pub fn outputs(&self) -> usize {
        self.transition[0].len()
    }

    pub fn row(&self, input: usize) -> &[f64] {
        &self.transition[input]
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.transition[input][output]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.transition
    }
}

fn entropy_of(probs: &[f64]) -> f64 {
    let s: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    s.max(0.0)
}

pub fn shannon_entropy(p: &ClassicalDistribution) -> f64 {
    entropy_of(&p.probs)
}

/// `h(x) = -x log x - (1-x) log(1-x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("{x} outside [0, 1]")));
    }
    Ok(entropy_of(&[x, 1.0 - x]))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let ev = rho.eigenvalues()?;
    let kept: Vec<f64> = ev
        .into_iter()
        .map(|l| if l < ENTROPY_EIGEN_FLOOR { 0.0 } else { l })
        .collect();
    Ok(entropy_of(&kept))
}

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "states of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// `Tr sqrt(sqrt(s) w sqrt(s))`, the square root of [`fidelity`].
pub fn root_fidelity(sigma: &DensityMatrix, omega: &DensityMatrix) -> Result<f64> {
    same_dim(sigma, omega)?;
    let es = hermitian_eigen(sigma.matrix())?;
    let sqrt_s = es.reconstruct_with(|l| {
        if l < FIDELITY_FLOOR {
            0.0.into()
        } else {
            l.sqrt().into()
        }
    });
    let m = sqrt_s.matmul(omega.matrix())?.matmul(&sqrt_s)?;
    let em = hermitian_eigen(&m)?;
    let f: f64 = em
        .eigenvalues
        .iter()
        .filter(|&&l| l >= FIDELITY_FLOOR)
        .map(|l| l.sqrt())
        .sum();
    Ok(f.max(0.0))
}

/// Mixed-state fidelity `(Tr sqrt(sqrt(s) w sqrt(s)))^2`.
pub fn fidelity(sigma: &DensityMatrix, omega: &DensityMatrix) -> Result<f64> {
    root_fidelity(sigma, omega).map(|f| f * f)
}

/// `|<psi|P|psi>|^2` for a projector `P`.
pub fn projection_fidelity(psi: &PureState, pi: &ComplexMatrix) -> Result<f64> {
    if pi.rows() != psi.dim() || pi.cols() != psi.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} with {}x{} projector",
            psi.dim(),
            pi.rows(),
            pi.cols()
        )));
    }
    let v = pi.mul_vec(psi.amplitudes())?;
    Ok(crate::linalg::inner(psi.amplitudes(), &v).norm_sqr())
}

/// `D = (1/2) Tr|s - w|`.
pub fn trace_distance(sigma: &DensityMatrix, omega: &DensityMatrix) -> Result<f64> {
    same_dim(sigma, omega)?;
    let diff = sigma.matrix().sub(omega.matrix())?;
    let e = hermitian_eigen(&diff)?;
    Ok(0.5 * e.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

/// `chi = S(rho) - sum_a p_a S(rho_a)`.
pub fn holevo_chi(e: &Ensemble) -> Result<f64> {
    let mut chi = von_neumann_entropy(&e.density())?;
    for (s, p) in e.members() {
        if *p > 0.0 {
            chi -= p * von_neumann_entropy(&s.to_density())?;
        }
    }
    Ok(chi)
}

/// Channel from ensemble index `a` to measurement outcome `i`,
/// `P(i | a) = Tr(E_i rho_a)`.
pub fn induced_channel(e: &Ensemble, m: &Measurement) -> Result<ClassicalChannel> {
    if e.dim() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "ensemble of dimension {} with measurement of dimension {}",
            e.dim(),
            m.dim()
        )));
    }
    let rows = e
        .members()
        .iter()
        .map(|(s, _)| {
            let mut row = outcome_probabilities(s, m.effects())?;
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    ClassicalChannel::new(rows)
}

/// `I(X;Y) = H(Y) - H(Y|X)`.
pub fn mutual_information(prior: &ClassicalDistribution, ch: &ClassicalChannel) -> Result<f64> {
    if prior.len() != ch.inputs() {
        return Err(Error::DimensionMismatch(format!(
            "prior over {} symbols, channel with {} inputs",
            prior.len(),
            ch.inputs()
        )));
    }
    let mut py = vec![0.0; ch.outputs()];
    let mut h_cond = 0.0;
    for (x, &px) in prior.probs().iter().enumerate() {
        for (y, &t) in ch.row(x).iter().enumerate() {
            py[y] += px * t;
        }
        h_cond += px * entropy_of(ch.row(x));
    }
    Ok(entropy_of(&py) - h_cond)
}

/// Best mutual information over a finite list of measurements, with the
/// index of the first maximiser.
pub fn accessible_info_over(e: &Ensemble, measurements: &[Measurement]) -> Result<(f64, usize)> {
    if measurements.is_empty() {
        return Err(Error::InvalidArgument("no measurements supplied".into()));
    }
    let prior = ClassicalDistribution::new(e.probs())?;
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, m) in measurements.iter().enumerate() {
        let i = mutual_information(&prior, &induced_channel(e, m)?)?;
        if i > best.0 {
            best = (i, k);
        }
    }
    Ok(best)
}

/// The equiprobable pair `cos(pi/12)|0> + sin(pi/12)|1>` and
/// `cos(5pi/12)|0> + sin(5pi/12)|1>`, at angle `2pi/6` to each other.
pub fn twelfth_pair_source() -> Ensemble {
    Ensemble::from_pure(
        vec![PureState::real_qubit(PI / 12.0), PureState::real_qubit(5.0 * PI / 12.0)],
        &[0.5, 0.5],
    )
    .expect("valid ensemble")
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Strings of length `n` over `{0, 1}` whose probability `lambda_z` lies in
/// `[2^{-n(S+eps)}, 2^{-n(S-eps)}]`. Bit `k` of a member (most significant
/// first) is symbol `z_k`.
#[derive(Clone, Debug, Serialize)]
pub struct TypicalSet {
    pub n: usize,
    pub epsilon: f64,
    pub entropy: f64,
    pub lambda: [f64; 2],
    /// `typical_weights[w]` is true when strings with `w` ones are typical.
    pub typical_weights: Vec<bool>,
    #[serde(skip)]
    pub members: Vec<u32>,
    pub size: u64,
    pub total_prob: f64,
}

impl TypicalSet {
    pub fn contains(&self, z: u32) -> bool {
        (z as u64) < (1u64 << self.n) && self.typical_weights[z.count_ones() as usize]
    }

    /// `2^{n(S+eps)}`.
    pub fn size_upper_bound(&self) -> f64 {
        (self.n as f64 * (self.entropy + self.epsilon)).exp2()
    }

    /// `(1-eps) 2^{n(S-eps)}`; meaningful only when `total_prob >= 1 - eps`.
    pub fn size_lower_bound(&self) -> f64 {
        (1.0 - self.epsilon) * (self.n as f64 * (self.entropy - self.epsilon)).exp2()
    }

    /// Upper size bound, plus the lower one when its hypothesis holds.
    pub fn bounds_hold(&self) -> bool {
        let size = self.size as f64;
        let upper = size <= self.size_upper_bound() * (1.0 + 1e-12);
        let lower = self.total_prob < 1.0 - self.epsilon
            || size >= self.size_lower_bound() * (1.0 - 1e-12);
        upper && lower
    }

    /// Probability of the complement.
    pub fn atypical_prob(&self) -> f64 {
        (1.0 - self.total_prob).max(0.0)
    }
}

fn typical_weights(lambda: [f64; 2], n: usize, eps: f64, s: f64) -> Vec<bool> {
    (0..=n)
        .map(|w| {
            let term = |count: usize, p: f64| {
                if count == 0 {
                    Some(0.0)
                } else if p <= 0.0 {
                    None
                } else {
                    Some(-(count as f64) * p.log2())
                }
            };
            match (term(n - w, lambda[0]), term(w, lambda[1])) {
                (Some(a), Some(b)) => ((a + b) / n as f64 - s).abs() <= eps,
                _ => false,
            }
        })
        .collect()
}

fn typical_set_inner(lambda: [f64; 2], n: usize, eps: f64, list_members: bool) -> Result<TypicalSet> {
    if n == 0 || n > MAX_BLOCK {
        return Err(Error::TooLarge(format!(
            "block length {n} outside 1..={MAX_BLOCK}"
        )));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon {eps} must be positive")));
    }
    let s = entropy_of(&lambda);
    let weights = typical_weights(lambda, n, eps, s);
    let mut total_prob = 0.0;
    let mut size = 0u64;
    for (w, &typ) in weights.iter().enumerate() {
        if typ {
            let c = binomial(n, w);
            size += c.round() as u64;
            total_prob += c * lambda[0].powi((n - w) as i32) * lambda[1].powi(w as i32);
        }
    }
    let members = if list_members {
        (0..(1u32 << n))
            .filter(|z| weights[z.count_ones() as usize])
            .collect()
    } else {
        Vec::new()
    };
    Ok(TypicalSet {
        n,
        epsilon: eps,
        entropy: s,
        lambda,
        typical_weights: weights,
        members,
        size,
        total_prob: total_prob.min(1.0),
    })
}

/// Weakly typical set of a binary source, with members enumerated.
pub fn typical_set(lambda: &ClassicalDistribution, n: usize, eps: f64) -> Result<TypicalSet> {
    if lambda.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "binary source expected, got {} symbols",
            lambda.len()
        )));
    }
    typical_set_inner([lambda.probs[0], lambda.probs[1]], n, eps, true)
}

/// Typical subspace of a qubit source: the span of product eigenvectors
/// `|phi_{z_1}> ... |phi_{z_n}>` of `rho` over typical strings `z`.
#[derive(Clone, Debug)]
pub struct TypicalSubspace {
    /// Eigenvalues of `rho`, ascending.
    pub eigenvalues: [f64; 2],
    /// Eigenvectors matching `eigenvalues`.
    pub eigenvectors: [PureState; 2],
    pub set: TypicalSet,
}

impl TypicalSubspace {
    pub fn dimension(&self) -> u64 {
        self.set.size
    }

    pub fn total_prob(&self) -> f64 {
        self.set.total_prob
    }

    /// Dense projector; only for small `n`.
    pub fn projector(&self) -> Result<ComplexMatrix> {
        if self.set.n > 10 {
            return Err(Error::TooLarge(format!("projector on {} qubits", self.set.n)));
        }
        let dim = 1usize << self.set.n;
        let mut p = ComplexMatrix::zeros(dim, dim);
        for z in (0..dim as u32).filter(|&z| self.set.contains(z)) {
            let v = self.product_vector(z);
            p.add_assign_scaled(&ComplexMatrix::outer(v.amplitudes(), v.amplitudes()), 1.0.into());
        }
        Ok(p)
    }

    /// `|Phi_z>`.
    pub fn product_vector(&self, z: u32) -> PureState {
        let n = self.set.n;
        let mut v = self.eigenvectors[((z >> (n - 1)) & 1) as usize].clone();
        for k in 1..n {
            v = v.tensor(&self.eigenvectors[((z >> (n - 1 - k)) & 1) as usize]);
        }
        v
    }
}

fn qubit_source_eigen(e: &Ensemble) -> Result<([f64; 2], [PureState; 2])> {
    if e.dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "qubit source expected, got dimension {}",
            e.dim()
        )));
    }
    let eig = hermitian_eigen(e.density().matrix())?;
    let l0 = eig.eigenvalues[0].max(0.0);
    let l1 = eig.eigenvalues[1].max(0.0);
    let t = l0 + l1;
    let v0 = PureState::normalized(eig.vector(0))?;
    let v1 = PureState::normalized(eig.vector(1))?;
    Ok(([l0 / t, l1 / t], [v0, v1]))
}

fn typical_subspace_inner(e: &Ensemble, n: usize, eps: f64, list: bool) -> Result<TypicalSubspace> {
    let (eigenvalues, eigenvectors) = qubit_source_eigen(e)?;
    let set = typical_set_inner(eigenvalues, n, eps, list)?;
    Ok(TypicalSubspace { eigenvalues, eigenvectors, set })
}

pub fn typical_subspace(e: &Ensemble, n: usize, eps: f64) -> Result<TypicalSubspace> {
    typical_subspace_inner(e, n, eps, true)
}

/// How [`average_projection_fidelity`] evaluates the average over source
/// strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum FidelityMode {
    /// Every string `x` in `X^n`, every typical `z`.
    Exact,
    /// `trials` strings drawn from `P^n`.
    MonteCarlo { trials: usize },
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn pure_source(e: &Ensemble) -> Result<(Vec<&PureState>, Vec<f64>)> {
    let states = e
        .pure_states()
        .ok_or_else(|| Error::InvalidArgument("source states must be pure".into()))?;
    Ok((states, e.probs()))
}

/// `q[a][b] = |<psi_a|phi_b>|^2`.
fn overlaps(states: &[&PureState], sub: &TypicalSubspace) -> Vec<[f64; 2]> {
    states
        .iter()
        .map(|s| [s.overlap(&sub.eigenvectors[0]), s.overlap(&sub.eigenvectors[1])])
        .collect()
}

/// `<Psi_x|P|Psi_x>` grouped by the weight of `z`: the coefficient of `t^w`
/// in `prod_k (q[x_k][0] + q[x_k][1] t)`, summed over typical `w`.
pub(crate) fn projection_weight_dp(q: &[[f64; 2]], x: &[usize], typical: &[bool]) -> f64 {
    let mut poly = vec![0.0; x.len() + 1];
    poly[0] = 1.0;
    for (k, &a) in x.iter().enumerate() {
        for w in (0..=k + 1).rev() {
            let keep = poly[w] * q[a][0];
            let add = if w > 0 { poly[w - 1] * q[a][1] } else { 0.0 };
            poly[w] = keep + add;
        }
    }
    poly.iter()
        .zip(typical)
        .filter(|(_, &t)| t)
        .map(|(c, _)| c)
        .sum()
}

fn digits(mut index: usize, base: usize, n: usize, out: &mut [usize]) {
    for k in (0..n).rev() {
        out[k] = index % base;
        index /= base;
    }
    debug_assert_eq!(out.len(), n);
}

/// Average over source strings of `|<Psi_x|P|Psi_x>|^2`, `P` the typical
/// subspace projector. Exact mode enumerates all of `X^n` against all typical
/// `z` and is deterministic regardless of thread count; Monte Carlo mode needs
/// an RNG.
pub fn average_projection_fidelity<R: Rng + ?Sized>(
    e: &Ensemble,
    n: usize,
    eps: f64,
    mode: FidelityMode,
    rng: Option<&mut R>,
) -> Result<f64> {
    let sub = typical_subspace_inner(e, n, eps, matches!(mode, FidelityMode::Exact))?;
    average_projection_fidelity_in(e, &sub, mode, rng)
}

fn average_projection_fidelity_in<R: Rng + ?Sized>(
    e: &Ensemble,
    sub: &TypicalSubspace,
    mode: FidelityMode,
    rng: Option<&mut R>,
) -> Result<f64> {
    let (states, probs) = pure_source(e)?;
    let q = overlaps(&states, sub);
    let n = sub.set.n;
    let letters = states.len();
    match mode {
        FidelityMode::Exact => {
            let outer = (letters as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
            let work = outer.saturating_mul(sub.set.size.max(1) as u128);
            if work > MAX_EXACT_WORK {
                return Err(Error::TooLarge(format!(
                    "exact average needs {outer} source strings x {} typical strings",
                    sub.set.size
                )));
            }
            let outer = outer as usize;
            let members = if sub.set.members.is_empty() && sub.set.size > 0 {
                (0..(1u32 << n)).filter(|&z| sub.set.contains(z)).collect()
            } else {
                sub.set.members.clone()
            };
            let chunk_sums: Vec<f64> = (0..outer.div_ceil(CHUNK))
                .into_par_iter()
                .map(|c| {
                    let mut x = vec![0usize; n];
                    let terms: Vec<f64> = (c * CHUNK..((c + 1) * CHUNK).min(outer))
                        .map(|idx| {
                            digits(idx, letters, n, &mut x);
                            let px: f64 = x.iter().map(|&a| probs[a]).product();
                            if px == 0.0 {
                                return 0.0;
                            }
                            let amp: f64 = pairwise_sum(
                                &members
                                    .iter()
                                    .map(|&z| {
                                        x.iter()
                                            .enumerate()
                                            .map(|(k, &a)| q[a][((z >> (n - 1 - k)) & 1) as usize])
                                            .product()
                                    })
                                    .collect::<Vec<f64>>(),
                            );
                            px * amp * amp
                        })
                        .collect();
                    pairwise_sum(&terms)
                })
                .collect();
            Ok(pairwise_sum(&chunk_sums))
        }
        FidelityMode::MonteCarlo { trials } => {
            if trials == 0 {
                return Err(Error::InvalidArgument("zero trials".into()));
            }
            let rng = rng.ok_or_else(|| {
                Error::InvalidArgument("Monte Carlo mode needs a random generator".into())
            })?;
            let mut x = vec![0usize; n];
            let mut vals = Vec::with_capacity(trials);
            for _ in 0..trials {
                for slot in x.iter_mut() {
                    *slot = crate::qmeasure::sample_probs(&probs, rng);
                }
                let a = projection_weight_dp(&q, &x, &sub.set.typical_weights);
                vals.push(a * a);
            }
            Ok(pairwise_sum(&vals) / trials as f64)
        }
    }
}

/// Summary of a typical-subspace compression run.
#[derive(Clone, Debug, Serialize)]
pub struct CompressionReport {
    pub n: usize,
    pub epsilon: f64,
    pub entropy: f64,
    pub dim: u64,
    pub bound_dim: f64,
    pub typical_prob: f64,
    pub avg_fidelity: f64,
    /// `1 - 2 Pr(atypical)`.
    pub bound_fidelity: f64,
    pub mode: FidelityMode,
}

pub fn compression_report<R: Rng + ?Sized>(
    e: &Ensemble,
    n: usize,
    eps: f64,
    mode: FidelityMode,
    rng: Option<&mut R>,
) -> Result<CompressionReport> {
    let sub = typical_subspace_inner(e, n, eps, matches!(mode, FidelityMode::Exact))?;
    let avg = average_projection_fidelity_in(e, &sub, mode, rng)?;
    Ok(CompressionReport {
        n,
        epsilon: eps,
        entropy: sub.set.entropy,
        dim: sub.set.size,
        bound_dim: sub.set.size_upper_bound(),
        typical_prob: sub.set.total_prob,
        avg_fidelity: avg,
        bound_fidelity: 1.0 - 2.0 * sub.set.atypical_prob(),
        mode,
    })
}
