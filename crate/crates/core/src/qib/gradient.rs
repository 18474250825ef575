//! Lagrangian `L(P) = I(X';X~) − β I(X~;Y) − Tr[P (Λ ⊗ I)]` as a function of
//! `P = Ψ^{T_x}`, and its gradient.
//!
//! Both output states are linear in `Ψ`, so the gradient of each mutual
//! information is the adjoint of the state map applied to the derivative of
//! the entropies, `W = −log A ⊗ I − I ⊗ log B + log AB − I`. Entropies of
//! perturbed (unnormalized) operators use `−Tr M log M`.

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, kron, matrix_inv_sqrt_psd, partial_transpose, ComplexMatrix, HermitianMatrix,
    Label, SubsystemDims, RANK_TOL,
};
use crate::qstate::{
    bipartite_marginals, choi_contract_adjoint, operator_mutual_information, ChoiMatrix, DensityMatrix,
    Embedding,
};

use super::instance::ProblemInstance;

/// Logarithm on the support, reporting whether any eigenvalue was cut.
pub(crate) fn log_support_flagged(h: &HermitianMatrix) -> Result<(HermitianMatrix, bool)> {
    let eig = hermitian_eig(h);
    let cut = RANK_TOL * eig.largest_magnitude();
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < -cut) {
        return Err(Error::LogDomain(bad));
    }
    let deficient = eig.eigenvalues.iter().any(|&l| l <= cut);
    Ok((eig.map(|l| if l <= cut { 0.0 } else { l.ln() }), deficient))
}

fn choi_dims(d_in: usize, d_out: usize) -> SubsystemDims {
    SubsystemDims::pair((Label::X, d_in), (Label::XOut, d_out)).expect("nonzero dims")
}

fn check_input(instance: &ProblemInstance, psi: &ChoiMatrix, lambda: Option<&HermitianMatrix>) -> Result<()> {
    if psi.d_in() != instance.d_x() {
        return Err(Error::DimensionMismatch(format!(
            "Choi input {} does not match d_x = {}",
            psi.d_in(),
            instance.d_x()
        )));
    }
    if let Some(l) = lambda {
        if l.dim() != instance.d_x() {
            return Err(Error::DimensionMismatch(format!("Λ has dimension {}, expected {}", l.dim(), instance.d_x())));
        }
    }
    Ok(())
}

/// `Tr[Ψ^{T_x} (Λ ⊗ I)] = Tr[Ψ (Λ^T ⊗ I)]`.
fn constraint_term(psi: &ChoiMatrix, lambda: &HermitianMatrix) -> f64 {
    let lift = kron(&lambda.transpose(), &ComplexMatrix::identity(psi.d_out()));
    psi.matrix().trace_product(&lift).re
}

pub fn lagrangian(instance: &ProblemInstance, psi: &ChoiMatrix, beta: f64, lambda: &HermitianMatrix) -> Result<f64> {
    check_input(instance, psi, Some(lambda))?;
    let d_out = psi.d_out();
    let tau = HermitianMatrix::from_hermitian_part(&instance.output_reference(psi.matrix(), d_out));
    let rho = HermitianMatrix::from_hermitian_part(&instance.output_joint(psi.matrix(), d_out));
    let i_ref = operator_mutual_information(&tau, instance.d_x(), d_out);
    let i_rel = operator_mutual_information(&rho, d_out, instance.d_y());
    Ok(i_ref - beta * i_rel - constraint_term(psi, lambda))
}

/// `−log A ⊗ I − I ⊗ log B + log AB − I` for an operator on `a ⊗ b`.
fn information_derivative(m: &HermitianMatrix, da: usize, db: usize) -> Result<(ComplexMatrix, bool)> {
    let (ra, rb) = bipartite_marginals(m, da, db);
    let (la, fa) = log_support_flagged(&ra)?;
    let (lb, fb) = log_support_flagged(&rb)?;
    let (lab, fab) = log_support_flagged(m)?;
    let w = &(&(&lab.into_matrix() - &kron(&la, &ComplexMatrix::identity(db)))
        - &kron(&ComplexMatrix::identity(da), &lb))
        - &ComplexMatrix::identity(da * db);
    Ok((w, fa || fb || fab))
}

/// Gradient of the Lagrangian with respect to `P = Ψ^{T_x}`.
#[derive(Clone, Debug)]
pub struct Gradient {
    pub operator: HermitianMatrix,
    /// Some intermediate state needed a support-restricted logarithm.
    pub rank_deficient: bool,
}

/// `G` with `d/dε L(P + εB)|₀ = Tr(G B)` for every Hermitian `B`.
pub fn lagrangian_gradient(
    instance: &ProblemInstance,
    psi: &ChoiMatrix,
    beta: f64,
    lambda: &HermitianMatrix,
) -> Result<Gradient> {
    check_input(instance, psi, Some(lambda))?;
    let (g0, rank_deficient) = gradient_without_constraint(instance, psi, beta)?;
    let lift = kron(lambda, &ComplexMatrix::identity(psi.d_out()));
    Ok(Gradient {
        operator: HermitianMatrix::from_hermitian_part(&(&g0 - &lift)),
        rank_deficient,
    })
}

/// Gradient of `I(X';X~) − β I(X~;Y)` alone, in `P` coordinates.
fn gradient_without_constraint(instance: &ProblemInstance, psi: &ChoiMatrix, beta: f64) -> Result<(ComplexMatrix, bool)> {
    let (dx, dy, d_out) = (instance.d_x(), instance.d_y(), psi.d_out());
    let tau = HermitianMatrix::from_hermitian_part(&instance.output_reference(psi.matrix(), d_out));
    let (w_tau, f_tau) = information_derivative(&tau, dx, d_out)?;
    let mut h = choi_contract_adjoint(&w_tau, dx, d_out, instance.tau().matrix(), Embedding { pre: dx, post: 1 });
    let mut deficient = f_tau;
    if beta != 0.0 {
        let rho = HermitianMatrix::from_hermitian_part(&instance.output_joint(psi.matrix(), d_out));
        let (w_rho, f_rho) = information_derivative(&rho, d_out, dy)?;
        let h_rho = choi_contract_adjoint(&w_rho, dx, d_out, instance.rho_xy().matrix(), Embedding { pre: 1, post: dy });
        h = &h - &h_rho.scale_real(beta);
        deficient |= f_rho;
    }
    Ok((partial_transpose(&h, &choi_dims(dx, d_out), Label::X)?, deficient))
}

/// `Λ = Tr_x~ G₀ / d_x~` from the unconstrained gradient `G₀`, and the
/// stationarity residual `‖G₀ − Λ ⊗ I‖_max`.
#[derive(Clone, Debug)]
pub struct Stationarity {
    pub lambda: HermitianMatrix,
    pub residual: f64,
    pub rank_deficient: bool,
}

pub fn stationarity(instance: &ProblemInstance, psi: &ChoiMatrix, beta: f64) -> Result<Stationarity> {
    check_input(instance, psi, None)?;
    let (g0, rank_deficient) = gradient_without_constraint(instance, psi, beta)?;
    let (dx, d_out) = (instance.d_x(), psi.d_out());
    let lambda = ComplexMatrix::from_fn(dx, dx, |i, j| {
        (0..d_out).map(|a| g0[(i * d_out + a, j * d_out + a)]).sum::<crate::linalg::C64>() / d_out as f64
    });
    let lambda = HermitianMatrix::from_hermitian_part(&lambda);
    let residual = g0.max_abs_diff(&kron(&lambda, &ComplexMatrix::identity(d_out)));
    Ok(Stationarity { lambda, residual, rank_deficient })
}

/// Distortion operator on `x ⊗ x~` in Choi coordinates,
/// `D = β I ⊗ log ρ_x~ − β (σ^{−1/2} ⊗ I) Q (σ^{−1/2} ⊗ I)` with
/// `σ = ρ_x^T` and `Q` the adjoint of the map `Ψ ↦ ρ_{x~y}` applied to
/// `log ρ_{x~y}`. On diagonal inputs the `(x, x~)` entry is
/// `β (ln P(x~) − Σ_y P(y|x) ln P(x~, y))`.
pub fn distortion_operator(
    instance: &ProblemInstance,
    rho_xt: &DensityMatrix,
    rho_xty: &HermitianMatrix,
    beta: f64,
) -> Result<HermitianMatrix> {
    Ok(distortion_flagged(instance, rho_xt.matrix(), rho_xty, beta)?.0)
}

pub(crate) fn distortion_flagged(
    instance: &ProblemInstance,
    rho_xt: &HermitianMatrix,
    rho_xty: &HermitianMatrix,
    beta: f64,
) -> Result<(HermitianMatrix, HermitianMatrix, bool)> {
    let (dx, dy) = (instance.d_x(), instance.d_y());
    let d_out = rho_xt.dim();
    if rho_xty.dim() != d_out * dy {
        return Err(Error::DimensionMismatch(format!(
            "ρ_x~y has dimension {}, expected {}",
            rho_xty.dim(),
            d_out * dy
        )));
    }
    let (log_xt, f1) = log_support_flagged(rho_xt)?;
    let lift_log = kron(&ComplexMatrix::identity(dx), &log_xt);
    if beta == 0.0 {
        return Ok((HermitianMatrix::zeros(dx * d_out), HermitianMatrix::from_hermitian_part(&lift_log), f1));
    }
    let (log_xty, f2) = log_support_flagged(rho_xty)?;
    let q = choi_contract_adjoint(&log_xty, dx, d_out, instance.rho_xy().matrix(), Embedding { pre: 1, post: dy });
    let sigma = HermitianMatrix::from_hermitian_part(&instance.rho_x().matrix().conj());
    let inv_root = kron(&matrix_inv_sqrt_psd(&sigma), &ComplexMatrix::identity(d_out));
    let weighted = HermitianMatrix::from_hermitian_part(&q).congruence(&inv_root);
    let d = (&lift_log - weighted.as_matrix()).scale_real(beta);
    let f3 = hermitian_eig(&sigma).eigenvalues[0] <= RANK_TOL * hermitian_eig(&sigma).largest_magnitude();
    Ok((
        HermitianMatrix::from_hermitian_part(&d),
        HermitianMatrix::from_hermitian_part(&lift_log),
        f1 || f2 || f3,
    ))
}
