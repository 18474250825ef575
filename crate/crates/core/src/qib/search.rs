//! Population-based random search over Kraus channels.
//!
//! Channels are carried as stacked isometries `V = [K_1; …; K_r]`, so a
//! mutation is Gaussian noise on `V` followed by re-orthonormalization of the
//! columns. Every random draw comes from a stream derived from
//! `(point, restart, generation, index)`, which keeps results independent of
//! the thread count.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;

use crate::config::{derive_rng, ConstraintMode, SolverConfig};
use crate::curve::{validate_grid, CurvePoint, Evaluation, PointStatus, RateCurve};
use crate::error::{Error, Infeasibility, Result};
use crate::linalg::{gaussian_matrix, orthonormalize_columns, random_isometry, ComplexMatrix, ZERO};
use crate::qstate::KrausChannel;

use super::instance::ProblemInstance;

pub fn random_channel<R: Rng + ?Sized>(d_in: usize, d_out: usize, kraus_rank: usize, rng: &mut R) -> Result<KrausChannel> {
    if kraus_rank == 0 {
        return Err(Error::InvalidArgument("kraus rank must be at least 1".into()));
    }
    let v = random_isometry(d_in, d_out * kraus_rank, rng)?;
    KrausChannel::from_isometry(&v, d_out)
}

fn perturb<R: Rng + ?Sized>(v: &ComplexMatrix, scale: f64, rng: &mut R) -> ComplexMatrix {
    loop {
        let noisy = v + &gaussian_matrix(v.rows(), v.cols(), scale, rng);
        if let Some(q) = orthonormalize_columns(&noisy) {
            return q;
        }
    }
}

/// Gaussian noise of standard deviation `scale` on every entry of the
/// stacked isometry, then Gram–Schmidt.
pub fn mutate_channel<R: Rng + ?Sized>(n: &KrausChannel, scale: f64, rng: &mut R) -> Result<KrausChannel> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("mutation scale {scale} must be positive")));
    }
    KrausChannel::from_isometry(&perturb(&n.stacked(), scale, rng), n.d_out())
}

/// Choi matrix straight from a stacked isometry.
fn choi_of_isometry(v: &ComplexMatrix, d_out: usize) -> ComplexMatrix {
    let d_in = v.cols();
    let rank = v.rows() / d_out;
    let n = d_in * d_out;
    let mut psi = ComplexMatrix::zeros(n, n);
    let data = psi.data_mut();
    for k in 0..rank {
        for i in 0..d_in {
            for a in 0..d_out {
                let x = v[(k * d_out + a, i)];
                if x == ZERO {
                    continue;
                }
                for j in 0..d_in {
                    for b in 0..d_out {
                        data[(i * d_out + a) * n + j * d_out + b] += x * v[(k * d_out + b, j)].conj();
                    }
                }
            }
        }
    }
    psi
}

#[derive(Clone)]
struct Member {
    v: ComplexMatrix,
    eval: Evaluation,
}

/// Result of [`random_search`].
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub evaluation: Evaluation,
    pub channel: KrausChannel,
    pub evals: u64,
}

fn evaluate_isometry(instance: &ProblemInstance, v: &ComplexMatrix, d_out: usize) -> Result<Evaluation> {
    let psi = choi_of_isometry(v, d_out);
    let choi = crate::qstate::ChoiMatrix::new_unchecked(
        instance.d_x(),
        d_out,
        crate::linalg::HermitianMatrix::from_hermitian_part(&psi),
    )?;
    instance.evaluate_choi(&choi)
}

fn rank_order(a: &Evaluation, b: &Evaluation, target: f64, mode: ConstraintMode) -> Ordering {
    match mode {
        ConstraintMode::Filter => {
            let fa = a.j_norm >= target;
            let fb = b.j_norm >= target;
            match (fa, fb) {
                (true, true) => a.r_norm.total_cmp(&b.r_norm),
                (true, false) => Ordering::Less,
                (false, true) => Ordering::Greater,
                (false, false) => b.j_norm.total_cmp(&a.j_norm),
            }
        }
        ConstraintMode::Penalty { weight } => {
            let score = |e: &Evaluation| e.r_norm + weight * (target - e.j_norm).max(0.0);
            score(a).total_cmp(&score(b))
        }
    }
}

/// Minimize `R_norm` subject to `J_norm ≥ j_target` by random search.
pub fn random_search(instance: &ProblemInstance, j_target: f64, config: &SolverConfig) -> Result<SearchOutcome> {
    search_point(instance, j_target, config, None, 0)
}

/// One grid point: `point` selects the RNG streams and `warm` seeds the first
/// restart's population.
pub(crate) fn search_point(
    instance: &ProblemInstance,
    j_target: f64,
    config: &SolverConfig,
    warm: Option<&KrausChannel>,
    point: u64,
) -> Result<SearchOutcome> {
    config.validate()?;
    if j_target > 1.0 {
        return Err(Error::Infeasible(Infeasibility::TargetAboveCeiling(j_target)));
    }
    if !(j_target > 0.0) {
        return Err(Error::InvalidArgument(format!("J target {j_target} must be positive")));
    }
    let d_in = instance.d_x();
    let d_out = warm.map_or(d_in, KrausChannel::d_out);
    let rank = config.kraus_rank.unwrap_or(d_in * d_out);
    if let Some(w) = warm {
        if w.d_in() != d_in {
            return Err(Error::DimensionMismatch("warm-start channel input differs from d_x".into()));
        }
    }
    let warm_v = warm.map(|w| pad_isometry(&w.stacked(), rank * d_out));

    let mut best: Option<Member> = None;
    let mut best_j = 0.0f64;
    let mut evals = 0u64;
    for restart in 0..config.restarts.max(1) {
        let path = |generation: usize, index: usize| [point, restart as u64, generation as u64, index as u64];
        let mut population: Vec<Member> = (0..config.population)
            .into_par_iter()
            .map(|k| {
                let v = match (&warm_v, restart, k) {
                    (Some(w), 0, 0) => w.clone(),
                    _ => {
                        let mut rng = derive_rng(config.seed, &path(0, k));
                        random_isometry(d_in, rank * d_out, &mut rng)?
                    }
                };
                let eval = evaluate_isometry(instance, &v, d_out)?;
                Ok(Member { v, eval })
            })
            .collect::<Result<Vec<_>>>()?;
        evals += population.len() as u64;

        let mut scale = config.mutation_scale;
        let mut stall = 0usize;
        let mut leader: Option<Evaluation> = None;
        for generation in 1..=config.iterations {
            population.sort_by(|a, b| rank_order(&a.eval, &b.eval, j_target, config.constraint_mode));
            population.truncate(config.survivors);
            let top = population[0].eval;
            let improved = leader.is_none_or(|l| rank_order(&top, &l, j_target, config.constraint_mode) == Ordering::Less);
            if improved {
                leader = Some(top);
                stall = 0;
            } else {
                stall += 1;
                if config.stall_generations > 0 && stall >= config.stall_generations {
                    break;
                }
            }
            let survivors = &population;
            let children: Vec<Member> = (config.survivors..config.population)
                .into_par_iter()
                .map(|k| {
                    let parent = &survivors[k % survivors.len()];
                    let mut rng = derive_rng(config.seed, &path(generation, k));
                    let v = perturb(&parent.v, scale, &mut rng);
                    let eval = evaluate_isometry(instance, &v, d_out)?;
                    Ok(Member { v, eval })
                })
                .collect::<Result<Vec<_>>>()?;
            evals += children.len() as u64;
            population.extend(children);
            scale = (scale * config.mutation_decay).max(config.mutation_floor);
        }
        for m in &population {
            best_j = best_j.max(m.eval.j_norm);
            if m.eval.j_norm >= j_target && best.as_ref().is_none_or(|b| m.eval.r_norm < b.eval.r_norm) {
                best = Some(m.clone());
            }
        }
    }
    match best {
        Some(m) => Ok(SearchOutcome {
            evaluation: m.eval,
            channel: KrausChannel::from_isometry(&m.v, d_out)?,
            evals,
        }),
        None => Err(Error::Infeasible(Infeasibility::BudgetExhausted { best_j, evals })),
    }
}

/// Append zero Kraus blocks so a warm start matches the configured rank.
fn pad_isometry(v: &ComplexMatrix, rows: usize) -> ComplexMatrix {
    if v.rows() >= rows {
        return v.clone();
    }
    ComplexMatrix::from_fn(rows, v.cols(), |i, j| if i < v.rows() { v[(i, j)] } else { ZERO })
}

/// Random search at every grid value, highest target first, each point
/// seeded with the previous point's witness. A final pass makes the curve
/// nondecreasing.
pub fn rate_curve(instance: &ProblemInstance, j_grid: &[f64], config: &SolverConfig) -> Result<RateCurve<KrausChannel>> {
    validate_grid(j_grid)?;
    config.validate()?;
    let mut points: Vec<CurvePoint<KrausChannel>> = Vec::with_capacity(j_grid.len());
    let mut warm: Option<KrausChannel> = None;
    for (idx, &j) in j_grid.iter().enumerate().rev() {
        let point = match search_point(instance, j, config, warm.as_ref(), idx as u64) {
            Ok(out) => {
                warm = Some(out.channel.clone());
                CurvePoint {
                    j,
                    evaluation: Some(out.evaluation),
                    channel: Some(out.channel),
                    status: PointStatus::Feasible,
                    evals: out.evals,
                    replaced: false,
                }
            }
            Err(Error::Infeasible(why)) => {
                log::warn!("no feasible channel at J = {j}: {why}");
                let evals = match why {
                    Infeasibility::BudgetExhausted { evals, .. } => evals,
                    Infeasibility::TargetAboveCeiling(_) => 0,
                };
                CurvePoint { j, evaluation: None, channel: None, status: PointStatus::Failed(why), evals, replaced: false }
            }
            Err(e) => return Err(e),
        };
        points.push(point);
    }
    points.reverse();
    let mut curve = RateCurve { points };
    let fixed = curve.enforce_monotone();
    if fixed > 0 {
        log::info!("monotone post-pass replaced {fixed} points (optimizer noise)");
    }
    Ok(curve)
}
