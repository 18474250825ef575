//! Sampled numerical checks shared by `qib verify` and the acceptance tests.
//!
//! Every sample draws from its own stream `derive_rng(seed, [check, index])`.

use rand::Rng;

use crate::config::derive_rng;
use crate::error::Result;
use crate::linalg::{gaussian_matrix, partial_transpose, ComplexMatrix, HermitianMatrix, Label, SubsystemDims};
use crate::qib::{build_instance, evaluate, lagrangian, lagrangian_gradient, random_channel};
use crate::qstate::{
    apply_channel, choi_to_kraus, kraus_to_choi, purify, von_neumann_entropy, BipartiteState, ChoiMatrix,
    DensityMatrix,
};

const GRADIENT: u64 = 1;
const ROUNDTRIP: u64 = 2;
const PROCESSING: u64 = 3;
const FANNES: u64 = 4;
const PURIFICATION: u64 = 5;

/// Wishart-type random density matrix; `floor` adds `floor · I` before
/// normalizing to keep the spectrum away from zero.
pub fn random_density<R: Rng + ?Sized>(dims: SubsystemDims, floor: f64, rng: &mut R) -> Result<DensityMatrix> {
    let n = dims.total();
    let g = gaussian_matrix(n, n, 1.0, rng);
    let m = &(&g * &g.adjoint()) + &ComplexMatrix::identity(n).scale_real(floor);
    let t = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / t).hermitian_part(), dims)
}

pub fn random_full_rank_state<R: Rng + ?Sized>(dx: usize, dy: usize, rng: &mut R) -> Result<BipartiteState> {
    let dims = SubsystemDims::pair((Label::X, dx), (Label::Y, dy))?;
    BipartiteState::new(random_density(dims, 0.05, rng)?)
}

fn random_direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    let h = HermitianMatrix::from_hermitian_part(&gaussian_matrix(n, n, 1.0, rng));
    let f = h.frobenius_norm();
    h.scale_real(1.0 / f)
}

#[derive(Clone, Debug)]
pub struct GradientCheck {
    pub points: usize,
    pub directions: usize,
    /// `max |fd − Tr(G B)| / max(|Tr(G B)|, 1e-3)` over all directions.
    pub worst_relative_error: f64,
}

/// `(1 − s) Ψ + s I/d_out` with `s = 0.2`: still a channel, with every Choi
/// eigenvalue at least `s/d_out`.
fn interior_choi(psi: &ChoiMatrix) -> Result<ChoiMatrix> {
    let s = 0.2;
    let n = psi.d_in() * psi.d_out();
    let mixed = psi
        .matrix()
        .scale_real(1.0 - s)
        .add(&HermitianMatrix::identity(n).scale_real(s / psi.d_out() as f64));
    ChoiMatrix::new(psi.d_in(), psi.d_out(), mixed)
}

/// Central differences of the Lagrangian along random Hermitian directions
/// `B` in `P = Ψ^{T_x}` coordinates, against `Tr(G B)`.
///
/// Points are full-rank qubit states with `|Y| ∈ {2, 3}`, random rank-4
/// channels pulled into the interior by [`interior_choi`], `β ∈ [0.5, 5]`
/// and random `Λ`; three directions each.
pub fn gradient_check(points: usize, eps: f64, seed: u64) -> Result<GradientCheck> {
    let mut worst = 0.0f64;
    let mut directions = 0;
    let dims = SubsystemDims::pair((Label::X, 2), (Label::XOut, 2))?;
    for point in 0..points {
        let mut rng = derive_rng(seed, &[GRADIENT, point as u64]);
        let dy = 2 + point % 2;
        let inst = build_instance(&random_full_rank_state(2, dy, &mut rng)?)?;
        let psi = interior_choi(&kraus_to_choi(&random_channel(2, 2, 4, &mut rng)?))?;
        let beta = 0.5 + 4.5 * rng.random::<f64>();
        let lambda = random_direction(2, &mut rng);
        let g = lagrangian_gradient(&inst, &psi, beta, &lambda)?;
        let p = partial_transpose(psi.matrix(), &dims, Label::X)?;
        let at = |m: &ComplexMatrix| -> Result<f64> {
            let shifted = HermitianMatrix::from_hermitian_part(&partial_transpose(m, &dims, Label::X)?);
            lagrangian(&inst, &ChoiMatrix::new_unchecked(2, 2, shifted)?, beta, &lambda)
        };
        for _ in 0..3 {
            let b = random_direction(4, &mut rng);
            let step = b.scale_real(eps);
            let fd = (at(&(&p + step.as_matrix()))? - at(&(&p - step.as_matrix()))?) / (2.0 * eps);
            let an = g.operator.trace_product(&b).re;
            worst = worst.max((fd - an).abs() / an.abs().max(1e-3));
            directions += 1;
        }
    }
    Ok(GradientCheck { points, directions, worst_relative_error: worst })
}

/// Kraus → Choi → Kraus on random channels with `d_in = 2`, `d_out ∈ {2, 3}`;
/// returns the worst entrywise action error on random two-party inputs.
pub fn cptp_roundtrip_check(samples: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..samples {
        let mut rng = derive_rng(seed, &[ROUNDTRIP, k as u64]);
        let d_out = 2 + k % 2;
        let rank = 1 + k % 4;
        let n = random_channel(2, d_out, rank, &mut rng)?;
        let back = choi_to_kraus(&kraus_to_choi(&n))?;
        let dims = SubsystemDims::pair((Label::X, 2), (Label::Y, 2))?;
        let rho = random_density(dims, 0.0, &mut rng)?;
        let a = apply_channel(&n, &rho, Label::X)?;
        let b = apply_channel(&back, &rho, Label::X)?;
        worst = worst.max(a.matrix().max_abs_diff(b.matrix()));
    }
    Ok(worst)
}

/// Largest `J_norm` seen over random (state, channel) pairs.
pub fn data_processing_check(samples: usize, seed: u64) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..samples {
        let mut rng = derive_rng(seed, &[PROCESSING, k as u64]);
        let inst = build_instance(&random_full_rank_state(2, 2, &mut rng)?)?;
        let n = random_channel(2, 2, 1 + k % 4, &mut rng)?;
        worst = worst.max(evaluate(&inst, &n)?.j_norm);
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct FannesCheck {
    pub samples: usize,
    pub violations: usize,
    /// Smallest `bound − |S(ρ) − S(σ)|`.
    pub min_margin: f64,
}

/// `|S(ρ) − S(σ)| ≤ t ln d + η(t)/ln 2` with `t = ‖ρ − σ‖₁ ≤ 1/e`, on pairs
/// `σ = (1 − m) ρ + m ω` with `m < 0.18`, `d ∈ {2, 3, 4}`.
pub fn fannes_check(samples: usize, seed: u64) -> Result<FannesCheck> {
    let eta = |t: f64| if t <= 0.0 { 0.0 } else { -t * t.ln() };
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    for k in 0..samples {
        let mut rng = derive_rng(seed, &[FANNES, k as u64]);
        let d = 2 + k % 3;
        let dims = SubsystemDims::single(Label::X, d)?;
        let rho = random_density(dims.clone(), 0.0, &mut rng)?;
        let omega = random_density(dims.clone(), 0.0, &mut rng)?;
        let m = 0.18 * rng.random::<f64>();
        let sigma = rho.matrix().scale_real(1.0 - m).add(&omega.matrix().scale_real(m));
        let sigma = DensityMatrix::new(sigma.into_matrix(), dims)?;
        let t = rho.trace_distance(&sigma)?;
        let gap = (von_neumann_entropy(&rho)? - von_neumann_entropy(&sigma)?).abs();
        let margin = t * (d as f64).ln() + eta(t) / 2f64.ln() - gap;
        min_margin = min_margin.min(margin);
        if margin < -1e-12 {
            violations += 1;
        }
    }
    Ok(FannesCheck { samples, violations, min_margin })
}

/// Worst `‖Tr_ref |ψ⟩⟨ψ| − ρ‖_max` over random states of dimension 1 to 4.
pub fn purification_check(samples: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..samples {
        let mut rng = derive_rng(seed, &[PURIFICATION, k as u64]);
        let d = 1 + k % 4;
        let rho = random_density(SubsystemDims::single(Label::X, d)?, 0.0, &mut rng)?;
        let tau = purify(&rho)?;
        worst = worst.max(tau.second_marginal().matrix().max_abs_diff(rho.matrix()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_pass_at_their_tolerances() {
        assert!(gradient_check(4, 1e-5, 1).unwrap().worst_relative_error <= 1e-5);
        assert!(cptp_roundtrip_check(20, 1).unwrap() <= 1e-9);
        assert!(data_processing_check(20, 1).unwrap() <= 1.0 + 1e-9);
        let f = fannes_check(30, 1).unwrap();
        assert_eq!(f.violations, 0);
        assert!(f.min_margin >= 0.0);
        assert!(purification_check(20, 1).unwrap() <= 1e-10);
    }

    #[test]
    fn gradient_check_has_an_error_floor() {
        let g = gradient_check(4, 1e-5, 1).unwrap();
        assert_eq!(g.directions, 12);
        assert!(g.worst_relative_error > 1e-12);
    }

    #[test]
    fn same_seed_same_numbers() {
        let a = gradient_check(2, 1e-5, 9).unwrap().worst_relative_error;
        let b = gradient_check(2, 1e-5, 9).unwrap().worst_relative_error;
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
