//! Quantum states, entropies, and channel representations.
//!
//! A channel `N: x → x~` has two carriers here: a [`KrausChannel`] (`N(ρ) =
//! Σ K ρ K†`) and a [`ChoiMatrix`] `Ψ = Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)` on `x ⊗ x~`,
//! always in that label order and unnormalized (`Tr Ψ = d_in`). Applying a
//! Choi matrix to a state contracts `Tr_x[Ψ^{T_x} ρ]` directly in indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eigvalsh, hermitian_eig, kron, matrix_sqrt_psd, partial_trace, ComplexMatrix,
    HermitianMatrix, Label, SubsystemDims, C64, ZERO,
};

/// Tolerance on `|Tr ρ − 1|` and on negative eigenvalues of a state.
pub const STATE_TOL: f64 = 1e-10;
/// Tolerance on `‖Σ K†K − I‖_max` for a Kraus channel.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Tolerance on `‖Tr_x~ Ψ − I‖_max` for a Choi matrix.
pub const TRACE_PRESERVING_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    dims: SubsystemDims,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and positivity.
    pub fn new(m: ComplexMatrix, dims: SubsystemDims) -> Result<Self> {
        let h = HermitianMatrix::new(m)?;
        if h.dim() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "{}-dimensional state with subsystems {dims}",
                h.dim()
            )));
        }
        let tr = h.trace_real();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = eigvalsh(&h)[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix: h, dims })
    }

    /// Skip validation for values that are states by construction.
    pub(crate) fn from_trusted(matrix: HermitianMatrix, dims: SubsystemDims) -> Self {
        debug_assert_eq!(matrix.dim(), dims.total());
        Self { matrix, dims }
    }

    pub fn single(m: ComplexMatrix, label: Label) -> Result<Self> {
        let d = m.rows();
        Self::new(m, SubsystemDims::single(label, d)?)
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &SubsystemDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Reduced state on the listed factors.
    pub fn reduce(&self, keep: &[Label]) -> Result<DensityMatrix> {
        let (m, dims) = partial_trace(&self.matrix, &self.dims, keep)?;
        Ok(Self::from_trusted(HermitianMatrix::from_hermitian_part(&m), dims))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.matrix)
    }

    /// Trace distance `‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "trace distance between dims {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(crate::linalg::trace_norm(&self.matrix.sub(&other.matrix)))
    }
}

/// A density matrix on exactly two labeled factors.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState(DensityMatrix);

impl BipartiteState {
    pub fn new(state: DensityMatrix) -> Result<Self> {
        if state.dims().len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "bipartite state needs two factors, got {}",
                state.dims()
            )));
        }
        Ok(Self(state))
    }

    pub fn from_matrix(m: ComplexMatrix, a: (Label, usize), b: (Label, usize)) -> Result<Self> {
        Self::new(DensityMatrix::new(m, SubsystemDims::pair(a, b)?)?)
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.0
    }

    pub fn into_state(self) -> DensityMatrix {
        self.0
    }

    pub fn first_label(&self) -> Label {
        self.0.dims().factors()[0].0
    }

    pub fn second_label(&self) -> Label {
        self.0.dims().factors()[1].0
    }

    pub fn first_marginal(&self) -> DensityMatrix {
        self.0.reduce(&[self.first_label()]).expect("label present")
    }

    pub fn second_marginal(&self) -> DensityMatrix {
        self.0.reduce(&[self.second_label()]).expect("label present")
    }
}

impl std::ops::Deref for BipartiteState {
    type Target = DensityMatrix;

    fn deref(&self) -> &DensityMatrix {
        &self.0
    }
}

/// `−Σ λ ln λ` over a spectrum, clamping noise in `[−1e-10, 0)` to zero.
pub fn entropy_from_eigenvalues(eigs: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigs {
        if l < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {l:e}")));
        }
        if l > 0.0 {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_from_eigenvalues(&rho.eigenvalues())
}

/// `−Tr A ln A` for any positive semidefinite operator, trace unconstrained.
/// Used where the argument is a perturbed, unnormalized state.
pub fn operator_entropy(a: &HermitianMatrix) -> f64 {
    eigvalsh(a).iter().filter(|&&l| l > 0.0).map(|&l| -l * l.ln()).sum()
}

/// `I(A;B) = S(A) + S(B) − S(AB)` in nats.
pub fn mutual_information(rho: &BipartiteState) -> Result<f64> {
    let s_ab = von_neumann_entropy(rho)?;
    let s_a = von_neumann_entropy(&rho.first_marginal())?;
    let s_b = von_neumann_entropy(&rho.second_marginal())?;
    Ok(s_a + s_b - s_ab)
}

/// `I(A;B)` for an operator that need not be normalized; entropies via
/// [`operator_entropy`]. Factor order `(a, b)`.
pub(crate) fn operator_mutual_information(m: &HermitianMatrix, da: usize, db: usize) -> f64 {
    let (ra, rb) = bipartite_marginals(m, da, db);
    operator_entropy(&ra) + operator_entropy(&rb) - operator_entropy(m)
}

/// Both marginals of an operator on `a ⊗ b`.
pub(crate) fn bipartite_marginals(m: &ComplexMatrix, da: usize, db: usize) -> (HermitianMatrix, HermitianMatrix) {
    let n = da * db;
    let mut ra = ComplexMatrix::zeros(da, da);
    let mut rb = ComplexMatrix::zeros(db, db);
    for i in 0..da {
        for j in 0..da {
            let mut acc = ZERO;
            for k in 0..db {
                acc += m.data()[(i * db + k) * n + j * db + k];
            }
            ra[(i, j)] = acc;
        }
    }
    for k in 0..db {
        for l in 0..db {
            let mut acc = ZERO;
            for i in 0..da {
                acc += m.data()[(i * db + k) * n + i * db + l];
            }
            rb[(k, l)] = acc;
        }
    }
    (
        HermitianMatrix::from_hermitian_part(&ra),
        HermitianMatrix::from_hermitian_part(&rb),
    )
}

/// Purification `|w⟩ = Σ_i √λ_i |i⟩_{x'} |v_i⟩` of a state, eigenvalues in
/// ascending order. The reference always has the full dimension of `ρ`.
/// Returns the pure state on `(x', label of ρ)`.
pub fn purify(rho: &DensityMatrix) -> Result<BipartiteState> {
    if rho.dims().len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "purify expects a single-factor state, got {}",
            rho.dims()
        )));
    }
    let label = rho.dims().factors()[0].0;
    if label == Label::XRef {
        return Err(Error::InvalidArgument("state is already labeled x'".into()));
    }
    let d = rho.dim();
    let eig = hermitian_eig(rho.matrix());
    let mut w = vec![ZERO; d * d];
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let amp = lam.max(0.0).sqrt();
        if amp == 0.0 {
            continue;
        }
        for j in 0..d {
            w[k * d + j] = eig.eigenvectors[(j, k)] * amp;
        }
    }
    let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut w {
        *z /= norm;
    }
    let tau = ComplexMatrix::outer(&w);
    let dims = SubsystemDims::pair((Label::XRef, d), (label, d))?;
    Ok(BipartiteState(DensityMatrix::from_trusted(
        HermitianMatrix::from_hermitian_part(&tau),
        dims,
    )))
}

/// A channel in Kraus form, `N(ρ) = Σ_k K_k ρ K_k†`, each `K_k` of shape
/// `d_out × d_in`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    d_in: usize,
    d_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(kraus, COMPLETENESS_TOL)
    }

    pub fn with_tolerance(kraus: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let (d_out, d_in) = (first.rows(), first.cols());
        if kraus.iter().any(|k| k.rows() != d_out || k.cols() != d_in) {
            return Err(Error::InvalidChannel("Kraus operators have mixed shapes".into()));
        }
        let ch = Self { d_in, d_out, kraus };
        let res = ch.completeness_residual();
        if !(res <= tol) {
            return Err(Error::InvalidChannel(format!(
                "completeness residual {res:e} exceeds {tol:e}"
            )));
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d_in: d,
            d_out: d,
            kraus: vec![ComplexMatrix::identity(d)],
        }
    }

    /// Qubit dephasing `½(ρ + ZρZ)` with Kraus pair `Z/√2`, `I/√2`.
    pub fn dephasing() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            d_in: 2,
            d_out: 2,
            kraus: vec![
                ComplexMatrix::from_real_diag(&[h, -h]),
                ComplexMatrix::from_real_diag(&[h, h]),
            ],
        }
    }

    /// `ρ ↦ σ Tr ρ` with Kraus operators `√s_a |u_a⟩⟨j|`.
    pub fn replacement(d_in: usize, sigma: &DensityMatrix) -> Self {
        let d_out = sigma.dim();
        let eig = hermitian_eig(sigma.matrix());
        let mut kraus = Vec::new();
        for (a, &s) in eig.eigenvalues.iter().enumerate() {
            if s <= 0.0 {
                continue;
            }
            let amp = s.sqrt();
            for j in 0..d_in {
                let mut k = ComplexMatrix::zeros(d_out, d_in);
                for r in 0..d_out {
                    k[(r, j)] = eig.eigenvectors[(r, a)] * amp;
                }
                kraus.push(k);
            }
        }
        Self { d_in, d_out, kraus }
    }

    /// Split a stacked isometry `V = [K_1; …; K_r]` (`r·d_out × d_in`).
    pub fn from_isometry(v: &ComplexMatrix, d_out: usize) -> Result<Self> {
        if d_out == 0 || v.rows() % d_out != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} isometry rows are not a multiple of d_out = {d_out}",
                v.rows()
            )));
        }
        let d_in = v.cols();
        let kraus = (0..v.rows() / d_out)
            .map(|b| ComplexMatrix::from_fn(d_out, d_in, |i, j| v[(b * d_out + i, j)]))
            .collect();
        Self::new(kraus)
    }

    /// Stack the Kraus operators into `[K_1; …; K_r]`.
    pub fn stacked(&self) -> ComplexMatrix {
        let r = self.kraus.len();
        ComplexMatrix::from_fn(r * self.d_out, self.d_in, |i, j| {
            self.kraus[i / self.d_out][(i % self.d_out, j)]
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn rank(&self) -> usize {
        self.kraus.len()
    }

    /// `‖Σ K†K − I‖_max`.
    pub fn completeness_residual(&self) -> f64 {
        let mut acc = ComplexMatrix::zeros(self.d_in, self.d_in);
        for k in &self.kraus {
            acc = &acc + &(&k.adjoint() * k);
        }
        acc.max_abs_diff(&ComplexMatrix::identity(self.d_in))
    }

    /// `N(A)` for an operator on the input space.
    pub fn apply_operator(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out = &out + &(&(k * a) * &k.adjoint());
        }
        out
    }
}

/// Apply `N` to factor `target` of `ρ`. The target factor is relabeled `x~`
/// and takes dimension `d_out`.
pub fn apply_channel(n: &KrausChannel, rho: &DensityMatrix, target: Label) -> Result<DensityMatrix> {
    let dims = rho.dims();
    let pos = dims.position(target)?;
    if dims.factors()[pos].1 != n.d_in() {
        return Err(Error::DimensionMismatch(format!(
            "channel input {} does not match factor {target} of {dims}",
            n.d_in()
        )));
    }
    let out_dims = dims.replace(target, Label::XOut, n.d_out())?;
    let pre: usize = dims.factors()[..pos].iter().map(|&(_, d)| d).product();
    let post: usize = dims.factors()[pos + 1..].iter().map(|&(_, d)| d).product();
    let mut out = ComplexMatrix::zeros(out_dims.total(), out_dims.total());
    for k in n.kraus() {
        let full = kron(&kron(&ComplexMatrix::identity(pre), k), &ComplexMatrix::identity(post));
        out = &out + &(&(&full * rho.matrix()) * &full.adjoint());
    }
    Ok(DensityMatrix::from_trusted(HermitianMatrix::from_hermitian_part(&out), out_dims))
}

/// Choi matrix on `x ⊗ x~`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    d_in: usize,
    d_out: usize,
    matrix: HermitianMatrix,
}

impl ChoiMatrix {
    /// Validates positivity (1e-10) and trace preservation (1e-8).
    pub fn new(d_in: usize, d_out: usize, matrix: HermitianMatrix) -> Result<Self> {
        let psi = Self::new_unchecked(d_in, d_out, matrix)?;
        let report = validate_cptp(&psi, STATE_TOL);
        if !report.positive {
            return Err(Error::NotCompletelyPositive(report.min_eigenvalue));
        }
        if report.tp_deviation > TRACE_PRESERVING_TOL {
            return Err(Error::InvalidChannel(format!(
                "Tr_x~ Ψ deviates from identity by {:e}",
                report.tp_deviation
            )));
        }
        Ok(psi)
    }

    /// Only checks the shape; use [`validate_cptp`] for diagnostics.
    pub fn new_unchecked(d_in: usize, d_out: usize, matrix: HermitianMatrix) -> Result<Self> {
        if matrix.dim() != d_in * d_out || d_in == 0 || d_out == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{}-dimensional Choi matrix for d_in = {d_in}, d_out = {d_out}",
                matrix.dim()
            )));
        }
        Ok(Self { d_in, d_out, matrix })
    }

    /// `Φ = Σ_ij |ii⟩⟨jj|`, the Choi matrix of the identity channel.
    pub fn identity(d: usize) -> Self {
        kraus_to_choi(&KrausChannel::identity(d))
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> SubsystemDims {
        SubsystemDims::pair((Label::X, self.d_in), (Label::XOut, self.d_out)).expect("nonzero dims")
    }

    /// `Tr_x~ Ψ`, the identity for a trace-preserving map.
    pub fn output_trace(&self) -> ComplexMatrix {
        let (d_in, d_out) = (self.d_in, self.d_out);
        ComplexMatrix::from_fn(d_in, d_in, |i, j| {
            (0..d_out).map(|a| self.matrix[(i * d_out + a, j * d_out + a)]).sum()
        })
    }
}

pub fn kraus_to_choi(n: &KrausChannel) -> ChoiMatrix {
    let (d_in, d_out) = (n.d_in(), n.d_out());
    let dim = d_in * d_out;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for k in n.kraus() {
        for i in 0..d_in {
            for a in 0..d_out {
                let kai = k[(a, i)];
                if kai == ZERO {
                    continue;
                }
                for j in 0..d_in {
                    for b in 0..d_out {
                        m[(i * d_out + a, j * d_out + b)] += kai * k[(b, j)].conj();
                    }
                }
            }
        }
    }
    ChoiMatrix {
        d_in,
        d_out,
        matrix: HermitianMatrix::from_hermitian_part(&m),
    }
}

/// Kraus operators `K[a, i] = √λ v[(i, a)]` from the eigenvectors of `Ψ`.
pub fn choi_to_kraus(psi: &ChoiMatrix) -> Result<KrausChannel> {
    let eig = hermitian_eig(psi.matrix());
    let scale = eig.largest_magnitude().max(1.0);
    if eig.eigenvalues[0] < -STATE_TOL * scale {
        return Err(Error::NotCompletelyPositive(eig.eigenvalues[0]));
    }
    let (d_in, d_out) = (psi.d_in, psi.d_out);
    let cut = crate::linalg::RANK_TOL * scale;
    let mut kraus = Vec::new();
    for (k, &lam) in eig.eigenvalues.iter().enumerate().rev() {
        if lam <= cut {
            continue;
        }
        let amp = lam.sqrt();
        kraus.push(ComplexMatrix::from_fn(d_out, d_in, |a, i| {
            eig.eigenvectors[(i * d_out + a, k)] * amp
        }));
    }
    KrausChannel::with_tolerance(kraus, TRACE_PRESERVING_TOL)
}

/// Index bookkeeping for a factor embedded among others: composite index
/// `(pre, t, post)` with `t` of dimension `d`.
#[derive(Clone, Copy)]
pub(crate) struct Embedding {
    pub pre: usize,
    pub post: usize,
}

impl Embedding {
    pub fn of(dims: &SubsystemDims, pos: usize) -> Self {
        Self {
            pre: dims.factors()[..pos].iter().map(|&(_, d)| d).product(),
            post: dims.factors()[pos + 1..].iter().map(|&(_, d)| d).product(),
        }
    }

    #[inline]
    fn idx(&self, d: usize, rest: usize, t: usize) -> usize {
        let (p, q) = (rest / self.post, rest % self.post);
        (p * d + t) * self.post + q
    }

    #[inline]
    pub fn rest(&self) -> usize {
        self.pre * self.post
    }
}

/// `out[(r,a),(r',b)] = Σ_ij ρ[(r,i),(r',j)] Ψ[(i,a),(j,b)]`, i.e.
/// `Tr_x[Ψ^{T_x} ρ]` with the target factor at `emb`.
pub(crate) fn choi_contract(
    psi: &ComplexMatrix,
    d_in: usize,
    d_out: usize,
    rho: &ComplexMatrix,
    emb: Embedding,
) -> ComplexMatrix {
    let rest = emb.rest();
    let n_out = rest * d_out;
    let psi_n = d_in * d_out;
    let mut out = ComplexMatrix::zeros(n_out, n_out);
    let mut block = vec![ZERO; d_in * d_in];
    for r in 0..rest {
        for r2 in 0..rest {
            let mut any = false;
            for i in 0..d_in {
                for j in 0..d_in {
                    let v = rho[(emb.idx(d_in, r, i), emb.idx(d_in, r2, j))];
                    any |= v != ZERO;
                    block[i * d_in + j] = v;
                }
            }
            if !any {
                continue;
            }
            for a in 0..d_out {
                for b in 0..d_out {
                    let mut acc = ZERO;
                    for i in 0..d_in {
                        for j in 0..d_in {
                            acc += block[i * d_in + j] * psi.data()[(i * d_out + a) * psi_n + j * d_out + b];
                        }
                    }
                    out[(emb.idx(d_out, r, a), emb.idx(d_out, r2, b))] = acc;
                }
            }
        }
    }
    out
}

/// Adjoint of [`choi_contract`] with respect to `Ψ`: the operator `H` on
/// `x ⊗ x~` with `Tr[W · contract(Ψ)] = Tr[H Ψ]` for all `Ψ`.
pub(crate) fn choi_contract_adjoint(
    w: &ComplexMatrix,
    d_in: usize,
    d_out: usize,
    rho: &ComplexMatrix,
    emb: Embedding,
) -> ComplexMatrix {
    let rest = emb.rest();
    let n = d_in * d_out;
    let mut h = ComplexMatrix::zeros(n, n);
    for r in 0..rest {
        for r2 in 0..rest {
            for i in 0..d_in {
                for j in 0..d_in {
                    let rv = rho[(emb.idx(d_in, r, i), emb.idx(d_in, r2, j))];
                    if rv == ZERO {
                        continue;
                    }
                    for a in 0..d_out {
                        for b in 0..d_out {
                            // H[(j,b),(i,a)] += ρ[(r,i),(r',j)] W[(r',b),(r,a)]
                            h[(j * d_out + b, i * d_out + a)] +=
                                rv * w[(emb.idx(d_out, r2, b), emb.idx(d_out, r, a))];
                        }
                    }
                }
            }
        }
    }
    h
}

/// `(N ⊗ I)(ρ)` from the Choi matrix, contracting `Tr_x[Ψ^{T_x} ρ]` on the
/// target factor. The target is relabeled `x~`.
pub fn choi_apply(psi: &ChoiMatrix, rho: &DensityMatrix, target: Label) -> Result<DensityMatrix> {
    let dims = rho.dims();
    let pos = dims.position(target)?;
    if dims.factors()[pos].1 != psi.d_in {
        return Err(Error::DimensionMismatch(format!(
            "Choi input {} does not match factor {target} of {dims}",
            psi.d_in
        )));
    }
    let out_dims = dims.replace(target, Label::XOut, psi.d_out)?;
    let out = choi_contract(psi.matrix(), psi.d_in, psi.d_out, rho.matrix(), Embedding::of(dims, pos));
    Ok(DensityMatrix::from_trusted(HermitianMatrix::from_hermitian_part(&out), out_dims))
}

/// Diagnostic report from [`validate_cptp`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CptpReport {
    pub min_eigenvalue: f64,
    /// `‖Tr_x~ Ψ − I‖_max`.
    pub tp_deviation: f64,
    pub positive: bool,
    pub trace_preserving: bool,
}

impl CptpReport {
    pub fn pass(&self) -> bool {
        self.positive && self.trace_preserving
    }
}

pub fn validate_cptp(psi: &ChoiMatrix, tol: f64) -> CptpReport {
    let min_eigenvalue = eigvalsh(psi.matrix())[0];
    let tp_deviation = psi.output_trace().max_abs_diff(&ComplexMatrix::identity(psi.d_in));
    CptpReport {
        min_eigenvalue,
        tp_deviation,
        positive: min_eigenvalue >= -tol,
        trace_preserving: tp_deviation <= tol,
    }
}

/// Joint state `(I_{x'} ⊗ N)(τ_{x'x})` of a pure `τ` through the sandwich
/// `(A ⊗ I) Ψ (A ⊗ I)†`, where `|w⟩ = (A ⊗ I) Σ_i |ii⟩`. For the canonical
/// purification `A = (ρ^T)^{1/2}` this is the square-root sandwich of the
/// Choi matrix. The reference factor keeps its label; output is `(x', x~)`.
pub fn joint_from_choi(psi: &ChoiMatrix, tau: &BipartiteState) -> Result<BipartiteState> {
    let d_ref = tau.dims().factors()[0].1;
    let d_x = tau.dims().factors()[1].1;
    if d_x != psi.d_in {
        return Err(Error::DimensionMismatch(format!(
            "Choi input {} does not match the purified factor of {}",
            psi.d_in,
            tau.dims()
        )));
    }
    let eig = hermitian_eig(tau.matrix());
    let top = *eig.eigenvalues.last().expect("nonempty");
    if (top - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!(
            "joint_from_choi needs a pure state (largest eigenvalue {top})"
        )));
    }
    let col = eig.eigenvectors.column(d_ref * d_x - 1);
    let a = ComplexMatrix::from_vec(d_ref, d_x, col)?;
    let lift = kron(&a, &ComplexMatrix::identity(psi.d_out));
    let out = psi.matrix().congruence(&lift);
    let dims = SubsystemDims::pair((tau.first_label(), d_ref), (Label::XOut, psi.d_out))?;
    BipartiteState::new(DensityMatrix::from_trusted(out, dims))
}

/// Square-root sandwich `(√ρ^T ⊗ I) Ψ (√ρ^T ⊗ I)`: the joint state of the
/// canonical purification of `ρ` sent through `Ψ`.
pub fn canonical_joint(psi: &ChoiMatrix, rho: &DensityMatrix) -> Result<HermitianMatrix> {
    if rho.dim() != psi.d_in {
        return Err(Error::DimensionMismatch("state and Choi input differ".into()));
    }
    let root = matrix_sqrt_psd(&HermitianMatrix::from_hermitian_part(&rho.matrix().conj()));
    let lift = kron(&root, &ComplexMatrix::identity(psi.d_out));
    Ok(psi.matrix().congruence(&lift))
}

/// JSON channel format: `{"d_in", "d_out", "kraus": [matrix, ...]}` where each
/// matrix is a flat row-major list of `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelFile {
    pub d_in: usize,
    pub d_out: usize,
    pub kraus: Vec<Vec<[f64; 2]>>,
}

/// JSON Choi format: `{"d_in", "d_out", "choi": matrix}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChoiFile {
    pub d_in: usize,
    pub d_out: usize,
    pub choi: Vec<[f64; 2]>,
}

pub(crate) fn encode_matrix(m: &ComplexMatrix) -> Vec<[f64; 2]> {
    m.data().iter().map(|z| [z.re, z.im]).collect()
}

pub(crate) fn decode_matrix(rows: usize, cols: usize, pairs: &[[f64; 2]]) -> Result<ComplexMatrix> {
    if pairs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite matrix entry".into()));
    }
    ComplexMatrix::from_vec(rows, cols, pairs.iter().map(|&[re, im]| C64::new(re, im)).collect())
}

impl KrausChannel {
    pub fn to_file(&self) -> ChannelFile {
        ChannelFile {
            d_in: self.d_in,
            d_out: self.d_out,
            kraus: self.kraus.iter().map(encode_matrix).collect(),
        }
    }

    pub fn from_file(f: &ChannelFile) -> Result<Self> {
        let kraus = f
            .kraus
            .iter()
            .map(|k| decode_matrix(f.d_out, f.d_in, k))
            .collect::<Result<Vec<_>>>()?;
        let ch = Self::new(kraus)?;
        if ch.d_in != f.d_in || ch.d_out != f.d_out {
            return Err(Error::DimensionMismatch("declared and actual channel dims differ".into()));
        }
        Ok(ch)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(s)?)
    }
}

impl ChoiMatrix {
    pub fn to_file(&self) -> ChoiFile {
        ChoiFile {
            d_in: self.d_in,
            d_out: self.d_out,
            choi: encode_matrix(&self.matrix),
        }
    }

    pub fn from_file(f: &ChoiFile) -> Result<Self> {
        let n = f.d_in * f.d_out;
        let m = decode_matrix(n, n, &f.choi)?;
        Self::new(f.d_in, f.d_out, HermitianMatrix::new(m)?)
    }
}

/// `|v⟩⟨v|` for a normalized computational-basis superposition, handy for
/// building example states.
pub fn pure_state(amplitudes: &[C64], dims: SubsystemDims) -> Result<DensityMatrix> {
    let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("zero state vector".into()));
    }
    let v: Vec<C64> = amplitudes.iter().map(|z| z / norm).collect();
    DensityMatrix::new(ComplexMatrix::outer(&v), dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, partial_transpose, random_isometry, ONE};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn xy() -> SubsystemDims {
        SubsystemDims::pair((Label::X, 2), (Label::Y, 2)).unwrap()
    }

    fn classical(p: [f64; 4]) -> DensityMatrix {
        // |x y⟩ index 2x + y; p1 |↑↑⟩, p2 |↓↑⟩, p3 |↑↓⟩, p4 |↓↓⟩.
        DensityMatrix::new(ComplexMatrix::from_real_diag(&[p[0], p[2], p[1], p[3]]), xy()).unwrap()
    }

    fn bell_mix() -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = c(0.5);
        m[(0, 3)] = c(0.25);
        m[(3, 0)] = c(0.25);
        m[(3, 3)] = c(0.5);
        DensityMatrix::new(m, xy()).unwrap()
    }

    fn random_state(d: usize, dims: SubsystemDims, rng: &mut ChaCha8Rng) -> DensityMatrix {
        let g = gaussian_matrix(d, d, 1.0, rng);
        let m = &g * &g.adjoint();
        let t = m.trace().re;
        DensityMatrix::new(m.scale_real(1.0 / t).hermitian_part(), dims).unwrap()
    }

    fn random_channel(d_in: usize, d_out: usize, rank: usize, rng: &mut ChaCha8Rng) -> KrausChannel {
        let v = random_isometry(d_in, d_out * rank, rng).unwrap();
        KrausChannel::from_isometry(&v, d_out).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let mixed = DensityMatrix::single(ComplexMatrix::from_real_diag(&[0.5, 0.5]), Label::X).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&mixed).unwrap(), 2f64.ln(), epsilon = 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let pure = pure_state(&[c(h), C64::new(0.0, h)], SubsystemDims::single(Label::X, 2).unwrap()).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&pure).unwrap(), 0.0, epsilon = 1e-10);
        let d = DensityMatrix::single(ComplexMatrix::from_real_diag(&[0.4, 0.6]), Label::X).unwrap();
        // -0.4 ln 0.4 - 0.6 ln 0.6
        assert_abs_diff_eq!(von_neumann_entropy(&d).unwrap(), 0.673011667009256, epsilon = 1e-12);
    }

    #[test]
    fn entropy_rejects_real_negativity() {
        assert!(matches!(entropy_from_eigenvalues(&[1.1, -0.1]), Err(Error::InvalidState(_))));
        assert_abs_diff_eq!(entropy_from_eigenvalues(&[1.0, -1e-12]).unwrap(), 0.0);
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = DensityMatrix::single(ComplexMatrix::from_real_diag(&[0.5, 0.6]), Label::X);
        assert!(matches!(bad_trace, Err(Error::InvalidState(_))));
        let negative = DensityMatrix::single(ComplexMatrix::from_real_diag(&[1.2, -0.2]), Label::X);
        assert!(matches!(negative, Err(Error::InvalidState(_))));
        let wrong_dims = DensityMatrix::new(ComplexMatrix::identity(2).scale_real(0.5), xy());
        assert!(matches!(wrong_dims, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn mutual_information_examples() {
        let a = DensityMatrix::single(ComplexMatrix::from_real_diag(&[0.3, 0.7]), Label::X).unwrap();
        let b = DensityMatrix::single(ComplexMatrix::from_real_diag(&[0.1, 0.9]), Label::Y).unwrap();
        let prod = BipartiteState::from_matrix(kron(a.matrix(), b.matrix()), (Label::X, 2), (Label::Y, 2)).unwrap();
        assert_abs_diff_eq!(mutual_information(&prod).unwrap(), 0.0, epsilon = 1e-10);

        // 2 ln 2 − S(3/4, 1/4)
        let bell = BipartiteState::new(bell_mix()).unwrap();
        let expected = 2.0 * 2f64.ln() + 0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln();
        assert_abs_diff_eq!(mutual_information(&bell).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.823959, epsilon = 1e-6);

        // Classical mutual information of the joint table, computed directly.
        let p: [[f64; 2]; 2] = [[0.1, 0.3], [0.2, 0.4]];
        let px: [f64; 2] = [0.4, 0.6];
        let py: [f64; 2] = [0.3, 0.7];
        let mut direct = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                direct += p[x][y] * (p[x][y] / (px[x] * py[y])).ln();
            }
        }
        let cl = BipartiteState::new(classical([0.1, 0.2, 0.3, 0.4])).unwrap();
        assert_abs_diff_eq!(mutual_information(&cl).unwrap(), direct, epsilon = 1e-12);
        assert_abs_diff_eq!(direct, 0.004021, epsilon = 1e-6);
    }

    #[test]
    fn purification_examples() {
        let rho = DensityMatrix::single(ComplexMatrix::from_real_diag(&[0.4, 0.6]), Label::X).unwrap();
        let tau = purify(&rho).unwrap();
        let mut w = vec![ZERO; 4];
        w[0] = c(0.4f64.sqrt());
        w[3] = c(0.6f64.sqrt());
        assert!(tau.matrix().max_abs_diff(&ComplexMatrix::outer(&w)) < 1e-15);
        assert_eq!(tau.dims().labels(), vec![Label::XRef, Label::X]);

        // Pure input: a product with a pure reference.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = pure_state(&[c(h), C64::new(0.0, h)], SubsystemDims::single(Label::X, 2).unwrap()).unwrap();
        let tv = purify(&v).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&tv.first_marginal()).unwrap(), 0.0, epsilon = 1e-10);
        assert!(tv.second_marginal().matrix().max_abs_diff(v.matrix()) < 1e-12);
        let expected = kron(tv.first_marginal().matrix(), v.matrix());
        assert!(tv.matrix().max_abs_diff(&expected) < 1e-12);

        // Maximally mixed: equal Schmidt weights.
        let mixed = DensityMatrix::single(ComplexMatrix::from_real_diag(&[0.5, 0.5]), Label::X).unwrap();
        let tm = purify(&mixed).unwrap();
        assert_abs_diff_eq!(mutual_information(&tm).unwrap(), 2.0 * 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn apply_channel_examples() {
        let rho1 = classical([0.1, 0.2, 0.3, 0.4]);
        let same = apply_channel(&KrausChannel::identity(2), &rho1, Label::X).unwrap();
        assert!(same.matrix().max_abs_diff(rho1.matrix()) < 1e-15);
        assert_eq!(same.dims().labels(), vec![Label::XOut, Label::Y]);

        let deph = apply_channel(&KrausChannel::dephasing(), &rho1, Label::X).unwrap();
        assert!(deph.matrix().max_abs_diff(rho1.matrix()) < 1e-15);

        let out = apply_channel(&KrausChannel::dephasing(), &bell_mix(), Label::X).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::from_real_diag(&[0.5, 0.0, 0.0, 0.5])) < 1e-15);

        let err = apply_channel(&KrausChannel::identity(3), &rho1, Label::X).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        assert!(apply_channel(&KrausChannel::identity(2), &rho1, Label::XRef).is_err());
    }

    #[test]
    fn choi_examples() {
        let phi = kraus_to_choi(&KrausChannel::identity(2));
        let mut expected = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                expected[(3 * i, 3 * j)] = ONE;
            }
        }
        assert_eq!(phi.matrix().as_matrix(), &expected);

        let deph = kraus_to_choi(&KrausChannel::dephasing());
        assert!(deph.matrix().max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0, 1.0])) < 1e-15);

        let sigma = DensityMatrix::single(ComplexMatrix::from_real_diag(&[0.3, 0.7]), Label::XOut).unwrap();
        let rep = kraus_to_choi(&KrausChannel::replacement(2, &sigma));
        let expected = kron(&ComplexMatrix::identity(2), sigma.matrix());
        assert!(rep.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn choi_to_kraus_examples() {
        let k = choi_to_kraus(&ChoiMatrix::identity(2)).unwrap();
        assert_eq!(k.rank(), 1);
        let op = &k.kraus()[0];
        let phase = op[(0, 0)];
        assert_abs_diff_eq!(phase.norm(), 1.0, epsilon = 1e-12);
        assert!(op.max_abs_diff(&ComplexMatrix::identity(2).scale(phase)) < 1e-12);

        // Dephasing: two operators spanning {I/√2, Z/√2}; span membership via projection.
        let kd = choi_to_kraus(&kraus_to_choi(&KrausChannel::dephasing())).unwrap();
        assert_eq!(kd.rank(), 2);
        for op in kd.kraus() {
            assert_abs_diff_eq!(op[(0, 1)].norm(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(op[(1, 0)].norm(), 0.0, epsilon = 1e-12);
        }
        let back = kraus_to_choi(&kd);
        assert!(back.matrix().max_abs_diff(kraus_to_choi(&KrausChannel::dephasing()).matrix()) < 1e-12);

        let swap = partial_transpose(ChoiMatrix::identity(2).matrix(), &ChoiMatrix::identity(2).dims(), Label::X).unwrap();
        let bad = ChoiMatrix::new_unchecked(2, 2, HermitianMatrix::new(swap).unwrap()).unwrap();
        assert!(matches!(choi_to_kraus(&bad), Err(Error::NotCompletelyPositive(_))));
    }

    #[test]
    fn choi_apply_examples() {
        let bell = bell_mix();
        let same = choi_apply(&ChoiMatrix::identity(2), &bell, Label::X).unwrap();
        assert!(same.matrix().max_abs_diff(bell.matrix()) < 1e-15);

        let deph = choi_apply(&kraus_to_choi(&KrausChannel::dephasing()), &bell, Label::X).unwrap();
        let kr = apply_channel(&KrausChannel::dephasing(), &bell, Label::X).unwrap();
        assert!(deph.matrix().max_abs_diff(kr.matrix()) < 1e-15);

        let sigma = DensityMatrix::single(ComplexMatrix::from_real_diag(&[0.3, 0.7]), Label::XOut).unwrap();
        let rep = kraus_to_choi(&KrausChannel::replacement(2, &sigma));
        let out = choi_apply(&rep, &bell, Label::X).unwrap();
        let rho_y = bell.reduce(&[Label::Y]).unwrap();
        assert!(out.matrix().max_abs_diff(&kron(sigma.matrix(), rho_y.matrix())) < 1e-15);

        assert!(choi_apply(&ChoiMatrix::identity(3), &bell, Label::X).is_err());
    }

    #[test]
    fn validate_cptp_examples() {
        let phi = ChoiMatrix::identity(2);
        assert!(validate_cptp(&phi, 1e-10).pass());

        let scaled = ChoiMatrix::new_unchecked(2, 2, phi.matrix().scale_real(1.1)).unwrap();
        let r = validate_cptp(&scaled, 1e-10);
        assert!(r.positive);
        assert!(!r.trace_preserving);
        assert_abs_diff_eq!(r.tp_deviation, 0.1, epsilon = 1e-12);

        let swap = partial_transpose(phi.matrix(), &phi.dims(), Label::X).unwrap();
        let r = validate_cptp(&ChoiMatrix::new_unchecked(2, 2, HermitianMatrix::new(swap).unwrap()).unwrap(), 1e-10);
        assert!(!r.positive);
        assert_abs_diff_eq!(r.min_eigenvalue, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn joint_from_choi_examples() {
        let rho = DensityMatrix::single(ComplexMatrix::from_real_diag(&[0.4, 0.6]), Label::X).unwrap();
        let tau = purify(&rho).unwrap();

        let id = joint_from_choi(&ChoiMatrix::identity(2), &tau).unwrap();
        assert!(id.matrix().max_abs_diff(tau.matrix()) < 1e-12);

        let deph = joint_from_choi(&kraus_to_choi(&KrausChannel::dephasing()), &tau).unwrap();
        assert!(deph.matrix().max_abs_diff(&ComplexMatrix::from_real_diag(&[0.4, 0.0, 0.0, 0.6])) < 1e-12);
        assert_eq!(deph.dims().labels(), vec![Label::XRef, Label::XOut]);

        let sigma = DensityMatrix::single(ComplexMatrix::from_real_diag(&[0.3, 0.7]), Label::XOut).unwrap();
        let rep = joint_from_choi(&kraus_to_choi(&KrausChannel::replacement(2, &sigma)), &tau).unwrap();
        let rho_ref = tau.first_marginal();
        assert!(rep.matrix().max_abs_diff(&kron(rho_ref.matrix(), sigma.matrix())) < 1e-12);

        let mixed = BipartiteState::new(bell_mix()).unwrap();
        assert!(joint_from_choi(&ChoiMatrix::identity(2), &mixed).is_err());
    }

    #[test]
    fn channel_json_roundtrip_and_errors() {
        let ch = KrausChannel::dephasing();
        let back = KrausChannel::from_json(&ch.to_json()).unwrap();
        assert_eq!(back, ch);
        assert!(KrausChannel::from_json("{\"d_in\": 2").is_err());
        let not_tp = r#"{"d_in":2,"d_out":2,"kraus":[[[1,0],[0,0],[0,0],[0,0]]]}"#;
        assert!(matches!(KrausChannel::from_json(not_tp), Err(Error::InvalidChannel(_))));
        let choi = kraus_to_choi(&ch);
        let f = serde_json::to_string(&choi.to_file()).unwrap();
        let back = ChoiMatrix::from_file(&serde_json::from_str(&f).unwrap()).unwrap();
        assert_eq!(back, choi);
    }

    /// `η(t) = −t ln t`.
    fn eta(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            -t * t.ln()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fannes_bound(d in 2usize..=4, seed in any::<u64>(), mix in 0.0f64..0.2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = SubsystemDims::single(Label::X, d).unwrap();
            let rho = random_state(d, dims.clone(), &mut rng);
            let other = random_state(d, dims.clone(), &mut rng);
            // σ close to ρ so that the trace distance stays under 1/e.
            let sigma_m = rho.matrix().scale_real(1.0 - mix).add(&other.matrix().scale_real(mix));
            let sigma = DensityMatrix::new(sigma_m.into_matrix(), dims).unwrap();
            let t = rho.trace_distance(&sigma).unwrap();
            prop_assume!(t <= (-1f64).exp());
            let gap = (von_neumann_entropy(&rho).unwrap() - von_neumann_entropy(&sigma).unwrap()).abs();
            prop_assert!(gap <= t * (d as f64).ln() + eta(t) / 2f64.ln() + 1e-12);
        }

        #[test]
        fn data_processing(seed in any::<u64>(), rank in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = BipartiteState::new(random_state(4, xy(), &mut rng)).unwrap();
            let n = random_channel(2, 2, rank, &mut rng);
            let out = BipartiteState::new(apply_channel(&n, &rho, Label::X).unwrap()).unwrap();
            prop_assert!(mutual_information(&out).unwrap() <= mutual_information(&rho).unwrap() + 1e-9);
        }

        #[test]
        fn kraus_and_choi_application_agree(seed in any::<u64>(), rank in 1usize..=4, dy in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = SubsystemDims::pair((Label::X, 2), (Label::Y, dy)).unwrap();
            let rho = random_state(2 * dy, dims, &mut rng);
            let n = random_channel(2, 3, rank, &mut rng);
            let psi = kraus_to_choi(&n);
            let a = apply_channel(&n, &rho, Label::X).unwrap();
            let b = choi_apply(&psi, &rho, Label::X).unwrap();
            prop_assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-9);
            prop_assert_eq!(a.dims(), b.dims());

            // Roundtrip through Kraus form reproduces the action.
            let back = choi_to_kraus(&psi).unwrap();
            let c2 = apply_channel(&back, &rho, Label::X).unwrap();
            prop_assert!(c2.matrix().max_abs_diff(a.matrix()) <= 1e-9);
            prop_assert!(validate_cptp(&psi, 1e-10).pass());
        }

        #[test]
        fn joint_from_choi_matches_choi_apply(seed in any::<u64>(), rank in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_state(2, SubsystemDims::single(Label::X, 2).unwrap(), &mut rng);
            let tau = purify(&rho).unwrap();
            let psi = kraus_to_choi(&random_channel(2, 2, rank, &mut rng));
            let a = joint_from_choi(&psi, &tau).unwrap();
            let b = choi_apply(&psi, &tau, Label::X).unwrap();
            prop_assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-9);
            // Canonical purification has the same spectrum-level informations.
            let canon = canonical_joint(&psi, &rho).unwrap();
            let ia = operator_mutual_information(a.matrix(), 2, 2);
            let ib = operator_mutual_information(&canon, 2, 2);
            prop_assert!((ia - ib).abs() <= 1e-9);
        }

        #[test]
        fn purification_marginal(d in 1usize..=4, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_state(d, SubsystemDims::single(Label::X, d).unwrap(), &mut rng);
            let tau = purify(&rho).unwrap();
            prop_assert!(tau.second_marginal().matrix().max_abs_diff(rho.matrix()) <= 1e-10);
            prop_assert!(von_neumann_entropy(&tau).unwrap() <= 1e-9);
            let i = mutual_information(&tau).unwrap();
            prop_assert!((i - 2.0 * von_neumann_entropy(&rho).unwrap()).abs() <= 1e-9);
        }
    }
}
