use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical_ib::ClassicalChannel;
use crate::config::SolverConfig;
use crate::curve::{validate_grid, CurvePoint, Evaluation, PointStatus, RateCurve};
use crate::error::{Error, Infeasibility, Result};
use crate::linalg::{hermitian_eig, kron, matrix_exp, matrix_inv_sqrt_psd, ComplexMatrix, HermitianMatrix, RANK_TOL};
use crate::qstate::{choi_to_kraus, ChoiMatrix, KrausChannel};

use super::gradient::{distortion_flagged, stationarity};
use super::instance::ProblemInstance;

/// Perturbation of the identity used as the starting channel; shared with
/// the classical iteration so diagonal runs follow the same path.
pub const INITIAL_PERTURBATION: f64 = 0.01;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedPointDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// `‖ΔΨ‖_max` of the last update.
    pub last_step: f64,
    /// Every 100th step size, plus the last.
    pub step_history: Vec<f64>,
    /// Stationarity residual `‖G₀ − Λ ⊗ I‖_max` at the returned channel.
    pub gradient_residual: f64,
    pub rank_deficient: bool,
}

#[derive(Clone, Debug)]
pub struct FixedPointResult {
    pub evaluation: Evaluation,
    pub choi: ChoiMatrix,
    pub lambda: HermitianMatrix,
    pub diagnostics: FixedPointDiagnostics,
}

/// `A − L ⊗ I − c I` with `L` the block average `Tr_x~ A / d_x~` and `c` the
/// top eigenvalue of the result. Both shifts cancel in the renormalization
/// when `A` commutes with `L ⊗ I`; they keep `exp` from underflowing whole
/// input blocks at large beta.
fn centered(a: &ComplexMatrix, dx: usize, d_out: usize) -> HermitianMatrix {
    let l = ComplexMatrix::from_fn(dx, dx, |i, j| {
        (0..d_out).map(|t| a[(i * d_out + t, j * d_out + t)]).sum::<crate::linalg::C64>() / d_out as f64
    });
    let shifted = HermitianMatrix::from_hermitian_part(&(a - &kron(&l, &ComplexMatrix::identity(d_out))));
    let top = hermitian_eig(&shifted).eigenvalues.last().copied().unwrap_or(0.0);
    shifted.sub(&HermitianMatrix::identity(dx * d_out).scale_real(top))
}

/// Self-consistent channel iteration at fixed `beta`.
///
/// Each step forms `Ψ' = (σ^{−1/2} ⊗ I) exp(I ⊗ log ρ_x~ − D) (σ^{−1/2} ⊗ I)`
/// with `σ = ρ_x^T`, restores `Tr_x~ Ψ = I` by the congruence with
/// `(Tr_x~ Ψ')^{−1/2}`, and takes a damped step of size `config.damping`.
/// Starts from the perturbed identity in the computational basis.
pub fn fixed_point_solve(instance: &ProblemInstance, beta: f64, config: &SolverConfig) -> Result<FixedPointResult> {
    config.validate()?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be finite and nonnegative")));
    }
    let dx = instance.d_x();
    let d_out = dx;
    let dy = instance.d_y();
    let eye_out = ComplexMatrix::identity(d_out);
    let sigma = HermitianMatrix::from_hermitian_part(&instance.rho_x().matrix().conj());
    let sig_eig = hermitian_eig(&sigma);
    let mut rank_deficient = sig_eig.eigenvalues[0] <= RANK_TOL * sig_eig.largest_magnitude();
    let inv_root = kron(&matrix_inv_sqrt_psd(&sigma), &eye_out);

    let mut psi = ClassicalChannel::perturbed_identity(dx, d_out, INITIAL_PERTURBATION)
        .to_choi()
        .matrix()
        .as_matrix()
        .clone();
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;
    let mut step_history = Vec::new();
    while iterations < config.max_fp_iters {
        let joint = HermitianMatrix::from_hermitian_part(&instance.output_joint(&psi, d_out));
        let rho_xt = HermitianMatrix::from_hermitian_part(&ComplexMatrix::from_fn(d_out, d_out, |a, b| {
            (0..dy).map(|y| joint[(a * dy + y, b * dy + y)]).sum()
        }));
        let (d, lift_log, flagged) = distortion_flagged(instance, &rho_xt, &joint, beta)?;
        rank_deficient |= flagged;
        let exponent = centered(&(lift_log.as_matrix() - d.as_matrix()), dx, d_out);
        let candidate = matrix_exp(&exponent).congruence(&inv_root);
        let out_trace = HermitianMatrix::from_hermitian_part(&ComplexMatrix::from_fn(dx, dx, |i, j| {
            (0..d_out).map(|a| candidate[(i * d_out + a, j * d_out + a)]).sum()
        }));
        let renorm = kron(&matrix_inv_sqrt_psd(&out_trace), &eye_out);
        let next = candidate.congruence(&renorm);
        let damped = &psi.scale_real(1.0 - config.damping) + &next.scale_real(config.damping);
        last_step = damped.max_abs_diff(&psi);
        psi = damped.hermitian_part();
        iterations += 1;
        if iterations % 100 == 0 {
            step_history.push(last_step);
        }
        if last_step < config.fixed_point_tol {
            break;
        }
    }
    step_history.push(last_step);
    let converged = last_step < config.fixed_point_tol;
    if !converged {
        log::warn!("fixed-point iteration at beta = {beta} stopped after {iterations} steps, last step {last_step:e}");
    }
    let choi = ChoiMatrix::new_unchecked(dx, d_out, HermitianMatrix::from_hermitian_part(&psi))?;
    let evaluation = instance.evaluate_choi(&choi)?;
    let st = stationarity(instance, &choi, beta)?;
    Ok(FixedPointResult {
        evaluation,
        lambda: st.lambda,
        diagnostics: FixedPointDiagnostics {
            iterations,
            converged,
            last_step,
            step_history,
            gradient_residual: st.residual,
            rank_deficient: rank_deficient || st.rank_deficient,
        },
        choi,
    })
}

/// Rate curve from fixed points: one solve per `config.beta_grid` value plus
/// the identity channel, then for each target the cheapest candidate with
/// `J_norm ≥ J`. `evals` counts fixed-point iterations.
pub fn fixed_point_curve(instance: &ProblemInstance, j_grid: &[f64], config: &SolverConfig) -> Result<RateCurve<KrausChannel>> {
    validate_grid(j_grid)?;
    config.validate()?;
    let solved = config
        .beta_grid
        .par_iter()
        .map(|&beta| fixed_point_solve(instance, beta, config))
        .collect::<Result<Vec<_>>>()?;
    let iterations: u64 = solved.iter().map(|r| r.diagnostics.iterations as u64).sum();
    let mut candidates = Vec::with_capacity(solved.len() + 1);
    for r in solved {
        let psi = ChoiMatrix::new(r.choi.d_in(), r.choi.d_out(), r.choi.matrix().clone())?;
        candidates.push((r.evaluation, choi_to_kraus(&psi)?));
    }
    let id = KrausChannel::identity(instance.d_x());
    candidates.push((super::evaluate(instance, &id)?, id));
    let best_j = candidates.iter().map(|c| c.0.j_norm).fold(0.0, f64::max);

    let points = j_grid
        .iter()
        .map(|&j| {
            let best = candidates
                .iter()
                .filter(|c| c.0.j_norm >= j)
                .min_by(|a, b| a.0.r_norm.total_cmp(&b.0.r_norm));
            match best {
                Some((e, ch)) => CurvePoint {
                    j,
                    evaluation: Some(*e),
                    channel: Some(ch.clone()),
                    status: PointStatus::Feasible,
                    evals: iterations,
                    replaced: false,
                },
                None => CurvePoint {
                    j,
                    evaluation: None,
                    channel: None,
                    status: PointStatus::Failed(Infeasibility::BudgetExhausted { best_j, evals: iterations }),
                    evals: iterations,
                    replaced: false,
                },
            }
        })
        .collect();
    Ok(RateCurve { points })
}
