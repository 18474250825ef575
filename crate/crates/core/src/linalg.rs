//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Matrices are row-major. Composite indices over a [`SubsystemDims`] follow
//! the usual tensor convention: the leftmost factor varies slowest, so for
//! factors `(a, b)` the basis vector `|i⟩⊗|j⟩` sits at index `i * d_b + j`.
//! Every module in the crate shares this ordering.

use std::fmt;
use std::ops::{Add, Deref, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Absolute tolerance on `‖H − H†‖_max` for a matrix to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues below this fraction of the largest one are treated as zero
/// by the support-restricted functions.
pub const RANK_TOL: f64 = 1e-12;

const JACOBI_REL_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix shape {rows}x{cols} has an empty side"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = C64::new(d, 0.0);
        }
        m
    }

    /// `|v⟩⟨v|` for a column vector `v`.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_max`; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// `‖M − M†‖_max`, or infinity for a non-square matrix.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square(), "hermitian_part of a non-square matrix");
        let n = self.rows;
        Self::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.data[i * self.cols + k] * other.data[k * other.cols + i];
            }
        }
        acc
    }

    /// `self · diag(d) · self†` for real `d`, the spectral reassembly step.
    pub(crate) fn sandwich_diag(&self, d: &[f64]) -> Self {
        let n = self.rows;
        let m = self.cols;
        debug_assert_eq!(d.len(), m);
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for k in 0..m {
                    if d[k] != 0.0 {
                        acc += self.data[i * m + k] * self.data[j * m + k].conj() * d[k];
                    }
                }
                out.data[i * n + j] = acc;
                out.data[j * n + i] = acc.conj();
            }
            out.data[i * n + i].im = 0.0;
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut out = ComplexMatrix::zeros(n, p);
        for i in 0..n {
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * p..(k + 1) * p];
                let dst = &mut out.data[i * p..(i + 1) * p];
                for (o, b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Kronecker product `a ⊗ b`.
///
/// Entry `((i_a, i_b), (j_a, j_b))` is `a[i_a, j_a] * b[i_b, j_b]`, assembled
/// in a fixed loop order so repeated products are bit-reproducible.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let x = a[(ia, ja)];
            if x == ZERO {
                continue;
            }
            for ib in 0..b.rows {
                let r = ia * b.rows + ib;
                for jb in 0..b.cols {
                    out.data[r * cols + ja * b.cols + jb] = x * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// A square matrix known to be Hermitian within [`HERMITIAN_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let dev = m.hermiticity_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self(m))
    }

    /// Takes the Hermitian part `(M + M†)/2`. For values that are Hermitian
    /// by construction and only carry rounding asymmetry.
    pub fn from_hermitian_part(m: &ComplexMatrix) -> Self {
        Self(m.hermitian_part())
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self(ComplexMatrix::from_real_diag(diag))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace_real(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(self.0.scale_real(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    /// `A · self · A†`, Hermitian for any `A`.
    pub fn congruence(&self, a: &ComplexMatrix) -> Self {
        let m = &(a * &self.0) * &a.adjoint();
        Self::from_hermitian_part(&m)
    }
}

impl Deref for HermitianMatrix {
    type Target = ComplexMatrix;

    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// Spectral decomposition `H = V diag(λ) V†` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Unitary whose columns are the eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.eigenvectors.sandwich_diag(&self.eigenvalues)
    }

    /// Apply `f` to the spectrum and reassemble.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        HermitianMatrix(self.eigenvectors.sandwich_diag(&mapped))
    }

    pub fn largest_magnitude(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, l| m.max(l.abs()))
    }
}

/// Cyclic complex Jacobi sweeps on a row-major Hermitian `n × n` buffer.
///
/// On return the diagonal holds the eigenvalues and `vecs` (if given) the
/// accumulated rotations. Stops when the off-diagonal Frobenius mass falls
/// below `1e-14 ‖H‖_F`.
fn jacobi_in_place(a: &mut [C64], n: usize, mut vecs: Option<&mut [C64]>) {
    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if total == 0.0 || n < 2 {
        return;
    }
    let threshold = JACOBI_REL_TOL * total;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[i * n + j].norm_sqr();
                }
            }
        }
        if off.sqrt() < threshold {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let phase = apq / r;
                let phase_c = phase.conj();
                // A <- A J on columns p, q.
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * phase_c * s;
                    a[k * n + q] = akp * s + akq * phase_c * c;
                }
                // A <- J† A on rows p, q.
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * phase * s;
                    a[q * n + k] = apk * s + aqk * phase * c;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
                if let Some(v) = vecs.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * c - vkq * phase_c * s;
                        v[k * n + q] = vkp * s + vkq * phase_c * c;
                    }
                }
            }
        }
    }
}

/// Full eigendecomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eig(h: &HermitianMatrix) -> EigenDecomposition {
    let n = h.dim();
    let mut a = h.data().to_vec();
    let mut v = ComplexMatrix::identity(n);
    jacobi_in_place(&mut a, n, Some(v.data_mut()));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let eigenvalues = order.iter().map(|&i| a[i * n + i].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// Eigenvalues only, ascending. Closed form for `n ≤ 2`.
pub fn eigvalsh(h: &HermitianMatrix) -> Vec<f64> {
    eigvalsh_raw(h.data(), h.dim())
}

pub(crate) fn eigvalsh_raw(data: &[C64], n: usize) -> Vec<f64> {
    match n {
        1 => vec![data[0].re],
        2 => {
            let a = data[0].re;
            let d = data[3].re;
            let b = data[1];
            let mean = 0.5 * (a + d);
            let half = 0.5 * (a - d);
            let rad = (half * half + b.norm_sqr()).sqrt();
            vec![mean - rad, mean + rad]
        }
        _ => {
            let mut a = data.to_vec();
            jacobi_in_place(&mut a, n, None);
            let mut vals: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
            vals.sort_by(f64::total_cmp);
            vals
        }
    }
}

/// `f(H)` by spectral calculus. With `support_only`, eigenvalues below
/// [`RANK_TOL`] times the largest magnitude map to zero instead of `f(λ)`.
pub fn matrix_func(h: &HermitianMatrix, f: impl Fn(f64) -> f64, support_only: bool) -> HermitianMatrix {
    let eig = hermitian_eig(h);
    if support_only {
        let cut = RANK_TOL * eig.largest_magnitude();
        eig.map(|l| if l.abs() <= cut { 0.0 } else { f(l) })
    } else {
        eig.map(f)
    }
}

/// Natural logarithm; every eigenvalue must be strictly positive.
pub fn matrix_log(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = hermitian_eig(h);
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l <= 0.0) {
        return Err(Error::LogDomain(bad));
    }
    Ok(eig.map(f64::ln))
}

/// Logarithm on the support: near-zero eigenvalues map to 0 (the
/// `0 · ln 0 = 0` convention). Negative eigenvalues beyond the rank
/// tolerance are a domain error.
pub fn matrix_log_support(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = hermitian_eig(h);
    let cut = RANK_TOL * eig.largest_magnitude();
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < -cut) {
        return Err(Error::LogDomain(bad));
    }
    Ok(eig.map(|l| if l <= cut { 0.0 } else { l.ln() }))
}

pub fn matrix_exp(h: &HermitianMatrix) -> HermitianMatrix {
    hermitian_eig(h).map(f64::exp)
}

/// `H^{1/2}` on the support of a positive semidefinite `H`.
pub fn matrix_sqrt_psd(h: &HermitianMatrix) -> HermitianMatrix {
    matrix_func(h, |l| l.max(0.0).sqrt(), true)
}

/// Pseudo-inverse square root `H^{-1/2}` restricted to the support.
pub fn matrix_inv_sqrt_psd(h: &HermitianMatrix) -> HermitianMatrix {
    matrix_func(h, |l| if l > 0.0 { 1.0 / l.sqrt() } else { 0.0 }, true)
}

/// Trace norm `Σ |λ_i|`.
pub fn trace_norm(h: &HermitianMatrix) -> f64 {
    eigvalsh(h).iter().map(|l| l.abs()).sum()
}

/// Names of the subsystems that appear in the bottleneck problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    /// Channel input.
    X,
    /// Purifying reference of the input.
    XRef,
    /// Relevance (side-information) system.
    Y,
    /// Channel output.
    XOut,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::X => "x",
            Label::XRef => "x'",
            Label::Y => "y",
            Label::XOut => "x~",
        })
    }
}

/// Ordered, labeled tensor factors of a composite space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemDims {
    factors: Vec<(Label, usize)>,
}

impl SubsystemDims {
    pub fn new(factors: Vec<(Label, usize)>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("no subsystems given".into()));
        }
        for (i, &(label, d)) in factors.iter().enumerate() {
            if d == 0 {
                return Err(Error::InvalidArgument(format!("subsystem {label} has dimension 0")));
            }
            if factors[..i].iter().any(|&(l, _)| l == label) {
                return Err(Error::InvalidArgument(format!("duplicate subsystem label {label}")));
            }
        }
        Ok(Self { factors })
    }

    pub fn single(label: Label, dim: usize) -> Result<Self> {
        Self::new(vec![(label, dim)])
    }

    pub fn pair(a: (Label, usize), b: (Label, usize)) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn factors(&self) -> &[(Label, usize)] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total(&self) -> usize {
        self.factors.iter().map(|&(_, d)| d).product()
    }

    pub fn position(&self, label: Label) -> Result<usize> {
        self.factors
            .iter()
            .position(|&(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label, self.to_string()))
    }

    pub fn dim_of(&self, label: Label) -> Result<usize> {
        Ok(self.factors[self.position(label)?].1)
    }

    pub fn labels(&self) -> Vec<Label> {
        self.factors.iter().map(|&(l, _)| l).collect()
    }

    /// Label list of `a ⊗ b`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut f = self.factors.clone();
        f.extend_from_slice(&other.factors);
        Self::new(f)
    }

    /// Swap factor `label` for `(new_label, new_dim)` in place.
    pub fn replace(&self, label: Label, new_label: Label, new_dim: usize) -> Result<Self> {
        let pos = self.position(label)?;
        let mut f = self.factors.clone();
        f[pos] = (new_label, new_dim);
        Self::new(f)
    }

    pub fn relabel(&self, from: Label, to: Label) -> Result<Self> {
        let d = self.dim_of(from)?;
        self.replace(from, to, d)
    }

    fn check_matrix(&self, m: &ComplexMatrix) -> Result<()> {
        if !m.is_square() || m.rows() != self.total() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix does not match subsystems {} (total {})",
                m.rows(),
                m.cols(),
                self,
                self.total()
            )));
        }
        Ok(())
    }

    /// Split a composite index into its local indices.
    fn split(&self, mut idx: usize, out: &mut [usize]) {
        for (k, &(_, d)) in self.factors.iter().enumerate().rev() {
            out[k] = idx % d;
            idx /= d;
        }
    }
}

impl fmt::Display for SubsystemDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (l, d)) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(" ⊗ ")?;
            }
            write!(f, "{l}:{d}")?;
        }
        f.write_str("]")
    }
}

/// Kronecker product carrying the concatenated label list.
pub fn kron_labeled(
    a: &ComplexMatrix,
    a_dims: &SubsystemDims,
    b: &ComplexMatrix,
    b_dims: &SubsystemDims,
) -> Result<(ComplexMatrix, SubsystemDims)> {
    a_dims.check_matrix(a)?;
    b_dims.check_matrix(b)?;
    Ok((kron(a, b), a_dims.concat(b_dims)?))
}

/// Trace out every factor not listed in `keep`. Kept factors stay in their
/// original relative order, whatever the order of `keep`.
pub fn partial_trace(
    m: &ComplexMatrix,
    dims: &SubsystemDims,
    keep: &[Label],
) -> Result<(ComplexMatrix, SubsystemDims)> {
    dims.check_matrix(m)?;
    for &l in keep {
        dims.position(l)?;
    }
    let kept: Vec<bool> = dims.factors.iter().map(|(l, _)| keep.contains(l)).collect();
    let kept_factors: Vec<(Label, usize)> = dims
        .factors
        .iter()
        .zip(&kept)
        .filter(|(_, &k)| k)
        .map(|(&f, _)| f)
        .collect();
    let n = dims.total();
    let nf = dims.len();
    // For every composite index: (index within kept space, index within traced space).
    let mut local = vec![0usize; nf];
    let mut kept_idx = Vec::with_capacity(n);
    let mut traced_idx = Vec::with_capacity(n);
    for idx in 0..n {
        dims.split(idx, &mut local);
        let (mut ki, mut ti) = (0usize, 0usize);
        for (k, &(_, d)) in dims.factors.iter().enumerate() {
            if kept[k] {
                ki = ki * d + local[k];
            } else {
                ti = ti * d + local[k];
            }
        }
        kept_idx.push(ki);
        traced_idx.push(ti);
    }
    let out_dim: usize = kept_factors.iter().map(|&(_, d)| d).product();
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for i in 0..n {
        for j in 0..n {
            if traced_idx[i] == traced_idx[j] {
                out[(kept_idx[i], kept_idx[j])] += m[(i, j)];
            }
        }
    }
    let out_dims = if kept_factors.is_empty() {
        // Full trace: a 1x1 matrix with no factors left; report it as a trivial x factor.
        SubsystemDims::single(Label::X, 1)?
    } else {
        SubsystemDims::new(kept_factors)?
    };
    Ok((out, out_dims))
}

/// Transpose the indices of subsystem `sys` only.
pub fn partial_transpose(m: &ComplexMatrix, dims: &SubsystemDims, sys: Label) -> Result<ComplexMatrix> {
    dims.check_matrix(m)?;
    let pos = dims.position(sys)?;
    let n = dims.total();
    let stride: usize = dims.factors[pos + 1..].iter().map(|&(_, d)| d).product();
    let d = dims.factors[pos].1;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let li = (i / stride) % d;
        for j in 0..n {
            let lj = (j / stride) % d;
            let i2 = i - li * stride + lj * stride;
            let j2 = j - lj * stride + li * stride;
            out[(i2, j2)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Haar-random isometry `V: C^{d_in} → C^{d_out}` (`V†V = I`).
///
/// Gram–Schmidt on the columns of a standard complex Gaussian matrix. The
/// implied triangular factor has a positive real diagonal, which is the
/// phase fixing that makes the result Haar distributed.
pub fn random_isometry<R: Rng + ?Sized>(d_in: usize, d_out: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if d_in == 0 {
        return Err(Error::InvalidArgument("isometry input dimension is 0".into()));
    }
    if d_out < d_in {
        return Err(Error::InvalidArgument(format!(
            "isometry needs d_out >= d_in, got d_in = {d_in}, d_out = {d_out}"
        )));
    }
    loop {
        let g = gaussian_matrix(d_out, d_in, 1.0, rng);
        if let Some(v) = orthonormalize_columns(&g) {
            return Ok(v);
        }
    }
}

/// Matrix with i.i.d. complex Gaussian entries, `E|z|² = std²`.
pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> ComplexMatrix {
    let s = std * std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Modified Gram–Schmidt (two passes) on the columns. `None` if the columns
/// are numerically dependent.
pub(crate) fn orthonormalize_columns(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut q = m.clone();
    for j in 0..cols {
        let orig: f64 = (0..rows).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for _pass in 0..2 {
            for k in 0..j {
                let mut dot = ZERO;
                for i in 0..rows {
                    dot += q[(i, k)].conj() * q[(i, j)];
                }
                for i in 0..rows {
                    let qik = q[(i, k)];
                    q[(i, j)] -= qik * dot;
                }
            }
        }
        let norm: f64 = (0..rows).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-10 * orig.max(f64::MIN_POSITIVE)) {
            return None;
        }
        for i in 0..rows {
            q[(i, j)] /= norm;
        }
    }
    Some(q)
}
