//! Dense complex matrix kernel.
//!
//! Everything in the crate is built on [`ComplexMatrix`]: states, gates,
//! observables and density matrices. Storage is row-major and dense; the
//! dimensions used anywhere in the toolkit stay small (a few hundred at most).
//!
//! Hermitian eigenproblems are solved with a cyclic complex Jacobi method,
//! which is also the basis for spectral matrix functions (square root,
//! logarithm, exponential) via [`matrix_func`].

use std::fmt;
use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance used for structural checks (Hermitian, unitary, PSD, trace).
pub const TOL: f64 = 1e-10;
/// Off-diagonal Frobenius norm at which the Jacobi iteration stops.
pub const SOLVER_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `<u|v>`, conjugate-linear in the first argument.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Caller guarantees `data.len() == rows * cols` and finite entries.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![ZERO; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = c(v, 0.0);
        }
        m
    }

    pub fn column(v: &[C64]) -> Self {
        Self::from_raw(v.len(), 1, v.to_vec())
    }

    /// `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut data = Vec::with_capacity(u.len() * v.len());
        for a in u {
            for b in v {
                data.push(a * b.conj());
            }
        }
        Self::from_raw(u.len(), v.len(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.cols + j] = z;
    }

    pub fn column_vec(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    fn require_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows == other.rows && self.cols == other.cols {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )))
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * p];
        for i in 0..n {
            let row = &self.data[i * m..(i + 1) * m];
            let dst = &mut out[i * p..(i + 1) * p];
            for (k, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let src = &other.data[k * p..(k + 1) * p];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(Self::from_raw(n, p, out))
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot apply {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Kronecker product; block `(i, j)` of the result is `self[i, j] * other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = vec![ZERO; rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    let r = i * other.rows + k;
                    for l in 0..other.cols {
                        out[r * cols + j * other.cols + l] = a * other.get(k, l);
                    }
                }
            }
        }
        Self::from_raw(rows, cols, out)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self.get(i, j).conj());
            }
        }
        Self::from_raw(self.cols, self.rows, out)
    }

    /// Sum of the diagonal. Non-square matrices sum the leading diagonal.
    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.require_same_shape(other)?;
        Ok(Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.require_same_shape(other)?;
        Ok(Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        ))
    }

    pub(crate) fn add_assign_scaled(&mut self, other: &Self, s: C64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm_sqr(&self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.require_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        matches!(self.max_abs_diff(other), Ok(d) if d <= tol)
    }

    /// Largest `|a_ij - conj(a_ji)|`; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let p = self.adjoint().matmul(self).expect("square");
        p.max_abs_diff(&Self::identity(self.rows)).expect("same shape")
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// Hermitian with all eigenvalues at least `-tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        match hermitian_eigen(self) {
            Ok(e) => e.eigenvalues.first().is_none_or(|&l| l >= -tol),
            Err(_) => false,
        }
    }

    /// Fixture text form: `"rows cols; re im re im ..."` in row-major order.
    pub fn to_debug_text(&self) -> String {
        let mut s = format!("{} {};", self.rows, self.cols);
        for z in &self.data {
            s.push_str(&format!(" {} {}", z.re, z.im));
        }
        s
    }

    pub fn from_debug_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidArgument(format!("matrix text: {msg}"));
        let (head, body) = text.split_once(';').ok_or_else(|| bad("missing ';'"))?;
        let dims: Vec<usize> = head
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad dimension")))
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(bad("expected two dimensions"));
        };
        let nums: Vec<f64> = body
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad number")))
            .collect::<Result<_>>()?;
        if nums.len() != 2 * rows * cols {
            return Err(bad("wrong number of entries"));
        }
        Self::new(rows, cols, nums.chunks(2).map(|p| c(p[0], p[1])).collect())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.matmul(b)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column_vec(k)
    }

    /// `sum_k g(lambda_k) |u_k><u_k|`.
    pub fn reconstruct_with(&self, g: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = g(lambda);
            if w == ZERO {
                continue;
            }
            let u = self.vector(k);
            for i in 0..n {
                let ui = u[i] * w;
                for j in 0..n {
                    out.data[i * n + j] += ui * u[j].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| c(l, 0.0))
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j).norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// The input is symmetrized as `(A + A†)/2` first. Eigenvalues come back in
/// ascending order; each eigenvector has its first non-negligible component
/// rotated to the positive real axis so the output is deterministic.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianEigen> {
    let n = a.require_square()?;
    let scale = a.max_abs().max(1.0);
    let dev = a.hermitian_deviation();
    if dev > TOL * scale {
        return Err(Error::NotHermitian(dev));
    }

    let mut h = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h.data[i * n + j] = (a.get(i, j) + a.get(j, i).conj()) * 0.5;
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let stop = SOLVER_TOL * h.frobenius_norm().max(1.0);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&h) < stop {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut h, &mut v, p, q);
            }
        }
    }
    if !converged {
        let off_norm = off_diagonal_norm(&h);
        if off_norm >= stop {
            return Err(Error::NoConvergence {
                sweeps: MAX_SWEEPS,
                off_norm,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| h.get(x, x).re.total_cmp(&h.get(y, y).re));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut vecs = ComplexMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        eigenvalues.push(h.get(src, src).re);
        let col = v.column_vec(src);
        let phase = col
            .iter()
            .find(|z| z.norm() > 1e-12)
            .map(|z| z.conj() / z.norm())
            .unwrap_or(ONE);
        for i in 0..n {
            vecs.data[i * n + k] = col[i] * phase;
        }
    }
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors: vecs,
    })
}

/// One Jacobi rotation zeroing `h[p][q]`, accumulated into `v`.
///
/// The rotation is `J = diag(1, e^{-i phi}) * [[c, s], [-s, c]]` on the
/// `(p, q)` plane, where `phi` is the phase of `h[p][q]`.
fn jacobi_rotate(h: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = h.rows;
    let apq = h.get(p, q);
    let mag = apq.norm();
    if mag < f64::MIN_POSITIVE {
        return;
    }
    let phase_conj = apq.conj() / mag;
    let app = h.get(p, p).re;
    let aqq = h.get(q, q).re;

    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let cs = 1.0 / (t * t + 1.0).sqrt();
    let sn = t * cs;

    let jpp = c(cs, 0.0);
    let jpq = c(sn, 0.0);
    let jqp = phase_conj * (-sn);
    let jqq = phase_conj * cs;

    for k in 0..n {
        let hkp = h.data[k * n + p];
        let hkq = h.data[k * n + q];
        h.data[k * n + p] = hkp * jpp + hkq * jqp;
        h.data[k * n + q] = hkp * jpq + hkq * jqq;
    }
    for k in 0..n {
        let hpk = h.data[p * n + k];
        let hqk = h.data[q * n + k];
        h.data[p * n + k] = jpp.conj() * hpk + jqp.conj() * hqk;
        h.data[q * n + k] = jpq.conj() * hpk + jqq.conj() * hqk;
    }
    for k in 0..n {
        let vkp = v.data[k * n + p];
        let vkq = v.data[k * n + q];
        v.data[k * n + p] = vkp * jpp + vkq * jqp;
        v.data[k * n + q] = vkp * jpq + vkq * jqq;
    }

    h.data[p * n + q] = ZERO;
    h.data[q * n + p] = ZERO;
    h.data[p * n + p] = c(app - t * mag, 0.0);
    h.data[q * n + q] = c(aqq + t * mag, 0.0);
}

/// `sum_i f(lambda_i) |u_i><u_i|` for Hermitian `a`.
pub fn matrix_func(a: &ComplexMatrix, f: impl Fn(f64) -> C64) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen(a)?;
    let mut weights = Vec::with_capacity(eig.eigenvalues.len());
    for &lambda in &eig.eigenvalues {
        let w = f(lambda);
        if !w.re.is_finite() || !w.im.is_finite() {
            return Err(Error::UndefinedFunction(lambda));
        }
        weights.push(w);
    }
    let n = weights.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &w) in weights.iter().enumerate() {
        if w == ZERO {
            continue;
        }
        let u = eig.vector(k);
        for i in 0..n {
            let ui = u[i] * w;
            for j in 0..n {
                out.data[i * n + j] += ui * u[j].conj();
            }
        }
    }
    Ok(out)
}

/// Eigenvalue clamp shared by square roots and logarithms: values in
/// `[-TOL, 0)` become zero, anything more negative is rejected.
pub fn clamp_psd_eigenvalue(lambda: f64) -> Option<f64> {
    if lambda >= 0.0 {
        Some(lambda)
    } else if lambda >= -TOL {
        Some(0.0)
    } else {
        None
    }
}

/// Positive square root of a PSD Hermitian matrix.
pub fn matrix_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    matrix_func(a, |l| match clamp_psd_eigenvalue(l) {
        Some(x) => c(x.sqrt(), 0.0),
        None => c(f64::NAN, 0.0),
    })
}

/// `|A| = sqrt(A† A)`.
pub fn matrix_abs(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.require_square()?;
    let ata = a.adjoint().matmul(a)?;
    matrix_sqrt(&ata)
}

pub fn is_unitary(a: &ComplexMatrix) -> bool {
    a.is_unitary(TOL)
}

pub fn is_psd(a: &ComplexMatrix) -> bool {
    a.is_psd(TOL)
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.trace()
}

pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

/// The 2x2 Pauli matrices.
pub mod pauli {
    use super::*;

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_raw(2, 2, vec![ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_raw(2, 2, vec![ZERO, -I, I, ZERO])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_raw(2, 2, vec![ONE, ZERO, ZERO, -ONE])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(n, n, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap();
        g.add(&g.adjoint()).unwrap().scale_real(0.5)
    }

    fn random_matrix(r: usize, cl: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, cl, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap()
    }

    fn cnot() -> ComplexMatrix {
        ComplexMatrix::from_real(
            4,
            4,
            &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.],
        )
        .unwrap()
    }

    #[test]
    fn matmul_examples() {
        let x = pauli::x();
        assert_eq!(ComplexMatrix::identity(2).matmul(&x).unwrap(), x);
        assert_eq!(x.matmul(&x).unwrap(), ComplexMatrix::identity(2));
        let v = ComplexMatrix::from_real(4, 1, &[0., 0., 1., 0.]).unwrap();
        let out = cnot().matmul(&v).unwrap();
        assert_eq!(out, ComplexMatrix::from_real(4, 1, &[0., 0., 0., 1.]).unwrap());
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(ComplexMatrix::new(2, 2, vec![ZERO; 3]).is_err());
        assert!(matches!(
            ComplexMatrix::new(1, 2, vec![ZERO, c(f64::NAN, 0.0)]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn kron_examples() {
        let ket1 = ComplexMatrix::from_real(2, 1, &[0., 1.]).unwrap();
        let ket0 = ComplexMatrix::from_real(2, 1, &[1., 0.]).unwrap();
        assert_eq!(
            ket1.kron(&ket0),
            ComplexMatrix::from_real(4, 1, &[0., 0., 1., 0.]).unwrap()
        );
        assert_eq!(
            ComplexMatrix::identity(2).kron(&ComplexMatrix::identity(2)),
            ComplexMatrix::identity(4)
        );
        // hand expansion: diag(1,-1) (x) diag(1,-1) = diag(1,-1,-1,1)
        assert_eq!(
            pauli::z().kron(&pauli::z()),
            ComplexMatrix::diag_real(&[1., -1., -1., 1.])
        );
    }

    #[test]
    fn eigen_of_paulis() {
        let e = hermitian_eigen(&pauli::z()).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 1.0]);
        assert!((e.vector(0)[1] - ONE).norm() < 1e-12);
        assert!((e.vector(1)[0] - ONE).norm() < 1e-12);

        let e = hermitian_eigen(&pauli::x()).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);
        let minus = e.vector(0);
        let plus = e.vector(1);
        assert!((minus[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert!((minus[1] - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert!((plus[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert!((plus[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);

        let e = hermitian_eigen(&ComplexMatrix::identity(4)).unwrap();
        assert!(e.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-15));
    }

    #[test]
    fn eigen_of_pauli_y_has_complex_vectors() {
        let e = hermitian_eigen(&pauli::y()).unwrap();
        // +1: (|0> + i|1>)/sqrt2, -1: (|0> - i|1>)/sqrt2
        let minus = e.vector(0);
        let plus = e.vector(1);
        assert!((minus[1] - c(0.0, -FRAC_1_SQRT_2)).norm() < 1e-12);
        assert!((plus[1] - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-12);
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let a = ComplexMatrix::from_real(2, 2, &[0., 1., 0., 0.]).unwrap();
        assert!(matches!(hermitian_eigen(&a), Err(Error::NotHermitian(_))));
        assert!(matches!(
            hermitian_eigen(&ComplexMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn eigen_random_reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=16 {
            for _ in 0..3 {
                let a = random_hermitian(n, &mut rng);
                let e = hermitian_eigen(&a).unwrap();
                assert!(e.reconstruct().max_abs_diff(&a).unwrap() < 1e-9, "n={n}");
                let v = &e.eigenvectors;
                let gram = v.adjoint().matmul(v).unwrap();
                assert!(gram.max_abs_diff(&ComplexMatrix::identity(n)).unwrap() < 1e-9);
                assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn kron_associative_and_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = random_matrix(2, 3, &mut rng);
            let b = random_matrix(3, 2, &mut rng);
            let cm = random_matrix(2, 2, &mut rng);
            let left = a.kron(&b).kron(&cm);
            let right = a.kron(&b.kron(&cm));
            assert!(left.max_abs_diff(&right).unwrap() < 1e-12);

            let d = random_matrix(2, 2, &mut rng);
            let lhs = a.kron(&b).matmul(&b.kron(&d)).unwrap();
            let rhs = a.matmul(&b).unwrap().kron(&b.matmul(&d).unwrap());
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        }
    }

    #[test]
    fn matrix_func_examples() {
        let s = matrix_sqrt(&ComplexMatrix::diag_real(&[4., 9.])).unwrap();
        assert!(s.approx_eq(&ComplexMatrix::diag_real(&[2., 3.]), 1e-12));

        let half = ComplexMatrix::identity(2).scale_real(0.5);
        let s = matrix_sqrt(&half).unwrap();
        assert!(s.approx_eq(&ComplexMatrix::identity(2).scale_real(FRAC_1_SQRT_2), 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..6 {
            let a = random_hermitian(n, &mut rng);
            let same = matrix_func(&a, |l| c(l, 0.0)).unwrap();
            assert!(same.approx_eq(&a, 1e-10));
        }
    }

    /// Truncated Taylor series exp(M) = sum M^k / k!.
    fn taylor_exp(m: &ComplexMatrix) -> ComplexMatrix {
        let n = m.rows();
        let mut term = ComplexMatrix::identity(n);
        let mut sum = ComplexMatrix::identity(n);
        for k in 1..60 {
            term = term.matmul(m).unwrap().scale_real(1.0 / k as f64);
            sum = sum.add(&term).unwrap();
        }
        sum
    }

    #[test]
    fn exponential_matches_taylor_oracle() {
        let t = PI;
        let u = matrix_func(&pauli::z(), |l| (c(0.0, -l * t)).exp()).unwrap();
        let oracle = taylor_exp(&pauli::z().scale(c(0.0, -t)));
        assert!(u.max_abs_diff(&oracle).unwrap() < 1e-12);

        let u = matrix_func(&pauli::x(), |l| (c(0.0, -l * 0.7)).exp()).unwrap();
        let oracle = taylor_exp(&pauli::x().scale(c(0.0, -0.7)));
        assert!(u.max_abs_diff(&oracle).unwrap() < 1e-12);
    }

    #[test]
    fn matrix_func_reports_undefined_points() {
        let r = matrix_func(&pauli::z(), |l| c(l.ln(), 0.0));
        assert!(matches!(r, Err(Error::UndefinedFunction(l)) if l == -1.0));
        assert!(matrix_sqrt(&pauli::z()).is_err());
        // small negative round-off is clamped
        let nearly = ComplexMatrix::diag_real(&[1.0, -1e-13]);
        let s = matrix_sqrt(&nearly).unwrap();
        assert_eq!(s.get(1, 1), ZERO);
    }

    #[test]
    fn matrix_abs_examples() {
        assert!(matrix_abs(&pauli::z()).unwrap().approx_eq(&ComplexMatrix::identity(2), 1e-12));
        let neg = ComplexMatrix::identity(2).scale_real(-1.0);
        assert!(matrix_abs(&neg).unwrap().approx_eq(&ComplexMatrix::identity(2), 1e-12));

        // sigma_X - I is Hermitian with eigenvalues 0 and -2 on |+>, |->, so
        // |A| = 2 |-><-| = [[1, -1], [-1, 1]].
        let a = pauli::x().sub(&ComplexMatrix::identity(2)).unwrap();
        let expected = ComplexMatrix::from_real(2, 2, &[1., -1., -1., 1.]).unwrap();
        assert!(matrix_abs(&a).unwrap().approx_eq(&expected, 1e-12));
    }

    #[test]
    fn predicates() {
        let h = ComplexMatrix::from_real(2, 2, &[1., 1., 1., -1.])
            .unwrap()
            .scale_real(FRAC_1_SQRT_2);
        assert!(is_unitary(&h));
        assert!(!is_psd(&pauli::z()));
        assert!(is_psd(&ComplexMatrix::identity(3)));
        assert_eq!(trace(&pauli::x()), ZERO);
        assert_eq!(adjoint(&pauli::y()), pauli::y());
        assert!(!ComplexMatrix::zeros(2, 3).is_unitary(TOL));
    }

    #[test]
    fn debug_text_round_trip() {
        let m = ComplexMatrix::new(2, 1, vec![c(0.1, -2.5), c(1e-17, 3.0)]).unwrap();
        let text = m.to_debug_text();
        assert_eq!(ComplexMatrix::from_debug_text(&text).unwrap(), m);
        assert!(ComplexMatrix::from_debug_text("2 2; 1 0").is_err());
        assert!(ComplexMatrix::from_debug_text("nonsense").is_err());
    }
}
