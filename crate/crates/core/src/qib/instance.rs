use serde::{Deserialize, Serialize};

use crate::curve::Evaluation;
use crate::error::{Error, Result};
use crate::linalg::{eigvalsh_raw, ComplexMatrix, Label, SubsystemDims};
use crate::qstate::{
    choi_contract, entropy_from_eigenvalues, kraus_to_choi, mutual_information, purify,
    von_neumann_entropy, BipartiteState, ChoiMatrix, DensityMatrix, Embedding, KrausChannel,
};

use super::presets;

/// A source state together with everything derived from it once.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    rho_xy: BipartiteState,
    rho_x: DensityMatrix,
    tau: BipartiteState,
    i_xy: f64,
    i_xpx: f64,
    s_x: f64,
    s_y: f64,
}

/// Below this `I(X;Y)` (nats) the normalized relevance is undefined.
pub const DEGENERACY_TOL: f64 = 1e-12;

pub fn build_instance(rho_xy: &BipartiteState) -> Result<ProblemInstance> {
    let (dx, dy) = (rho_xy.dims().factors()[0].1, rho_xy.dims().factors()[1].1);
    let dims = SubsystemDims::pair((Label::X, dx), (Label::Y, dy))?;
    let rho_xy = BipartiteState::new(DensityMatrix::new(rho_xy.matrix().as_matrix().clone(), dims)?)?;
    let i_xy = mutual_information(&rho_xy)?;
    if i_xy <= DEGENERACY_TOL {
        return Err(Error::DegenerateInstance(i_xy));
    }
    let rho_x = rho_xy.first_marginal();
    let s_x = von_neumann_entropy(&rho_x)?;
    let s_y = von_neumann_entropy(&rho_xy.second_marginal())?;
    let tau = purify(&rho_x)?;
    Ok(ProblemInstance { rho_xy, rho_x, tau, i_xy, i_xpx: 2.0 * s_x, s_x, s_y })
}

impl ProblemInstance {
    pub fn rho_xy(&self) -> &BipartiteState {
        &self.rho_xy
    }

    pub fn rho_x(&self) -> &DensityMatrix {
        &self.rho_x
    }

    /// Purification of `ρ_x` on `(x', x)`.
    pub fn tau(&self) -> &BipartiteState {
        &self.tau
    }

    /// `I(X;Y)` in nats.
    pub fn i_xy(&self) -> f64 {
        self.i_xy
    }

    /// `I(X';X) = 2 S(ρ_x)` in nats.
    pub fn i_xpx(&self) -> f64 {
        self.i_xpx
    }

    pub fn d_x(&self) -> usize {
        self.rho_x.dim()
    }

    pub fn d_y(&self) -> usize {
        self.rho_xy.dim() / self.d_x()
    }

    /// `ρ_{x~y} = (N ⊗ I)(ρ_xy)` as a raw operator on `(x~, y)`.
    pub(crate) fn output_joint(&self, psi: &ComplexMatrix, d_out: usize) -> ComplexMatrix {
        choi_contract(psi, self.d_x(), d_out, self.rho_xy.matrix(), Embedding { pre: 1, post: self.d_y() })
    }

    /// `τ_{x'x~} = (I ⊗ N)(τ_{x'x})` as a raw operator on `(x', x~)`.
    pub(crate) fn output_reference(&self, psi: &ComplexMatrix, d_out: usize) -> ComplexMatrix {
        choi_contract(psi, self.d_x(), d_out, self.tau.matrix(), Embedding { pre: self.d_x(), post: 1 })
    }

    fn evaluate_raw(&self, psi: &ComplexMatrix, d_out: usize) -> Result<Evaluation> {
        let dy = self.d_y();
        let joint = self.output_joint(psi, d_out);
        let reference = self.output_reference(psi, d_out);
        let mut rho_xt = vec![crate::linalg::ZERO; d_out * d_out];
        for a in 0..d_out {
            for b in 0..d_out {
                rho_xt[a * d_out + b] = (0..dy).map(|y| joint[(a * dy + y, b * dy + y)]).sum();
            }
        }
        let s_xt = entropy_from_eigenvalues(&eigvalsh_raw(&rho_xt, d_out))?;
        let s_xty = entropy_from_eigenvalues(&eigvalsh_raw(joint.data(), d_out * dy))?;
        let s_xpxt = entropy_from_eigenvalues(&eigvalsh_raw(reference.data(), self.d_x() * d_out))?;
        let i_xt_y = (s_xt + self.s_y - s_xty).max(0.0);
        let i_xp_xt = (self.s_x + s_xt - s_xpxt).max(0.0);
        Ok(Evaluation {
            i_xt_y,
            i_xp_xt,
            j_norm: i_xt_y / self.i_xy,
            r_norm: i_xp_xt / self.i_xpx,
        })
    }

    pub fn evaluate_choi(&self, psi: &ChoiMatrix) -> Result<Evaluation> {
        if psi.d_in() != self.d_x() {
            return Err(Error::DimensionMismatch(format!(
                "channel input {} does not match d_x = {}",
                psi.d_in(),
                self.d_x()
            )));
        }
        self.evaluate_raw(psi.matrix(), psi.d_out())
    }
}

/// Relevance `I(X~;Y)` and cost `I(X';X~)` of a channel, raw and normalized.
pub fn evaluate(instance: &ProblemInstance, n: &KrausChannel) -> Result<Evaluation> {
    instance.evaluate_choi(&kraus_to_choi(n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingReport {
    pub j_norm: f64,
    pub r_norm: f64,
    /// `I(X~;Y)` in nats.
    pub i_xt_y: f64,
    /// `I(X';X~)` in nats.
    pub i_xp_xt: f64,
    pub pass: bool,
}

/// Dephasing `½(ρ + ZρZ)` on the diagonal state with weights `p`: keeps all
/// of `I(X;Y)` at half of `I(X';X)`.
pub fn analytic_dephasing_benchmark(p: [f64; 4]) -> Result<DephasingReport> {
    let inst = build_instance(&presets::classical(p)?)?;
    let e = evaluate(&inst, &KrausChannel::dephasing())?;
    let pass = (e.j_norm - 1.0).abs() <= 1e-10 && (e.r_norm - 0.5).abs() <= 1e-10;
    Ok(DephasingReport { j_norm: e.j_norm, r_norm: e.r_norm, i_xt_y: e.i_xt_y, i_xp_xt: e.i_xp_xt, pass })
}

/// Evaluation through the generic state operations; slower, used to
/// cross-check [`evaluate`].
pub fn evaluate_reference(instance: &ProblemInstance, n: &KrausChannel) -> Result<Evaluation> {
    let joint = crate::qstate::apply_channel(n, instance.rho_xy(), Label::X)?;
    let reference = crate::qstate::apply_channel(n, instance.tau(), Label::X)?;
    let i_xt_y = mutual_information(&BipartiteState::new(joint)?)?;
    let i_xp_xt = mutual_information(&BipartiteState::new(reference)?)?;
    Ok(Evaluation {
        i_xt_y,
        i_xp_xt,
        j_norm: i_xt_y / instance.i_xy(),
        r_norm: i_xp_xt / instance.i_xpx(),
    })
}
