//! Rate curves shared by the classical and quantum solvers.

use serde::{Deserialize, Serialize};

use crate::error::Infeasibility;

/// Relevance and cost of one channel, raw (nats) and normalized.
///
/// For quantum instances the cost is `I(X';X~)` on the purified state; for
/// classical curves it is `I(X;X~)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub i_xt_y: f64,
    pub i_xp_xt: f64,
    pub j_norm: f64,
    pub r_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointStatus {
    Feasible,
    Failed(Infeasibility),
}

#[derive(Clone, Debug)]
pub struct CurvePoint<C> {
    /// Target relevance fraction.
    pub j: f64,
    pub evaluation: Option<Evaluation>,
    pub channel: Option<C>,
    pub status: PointStatus,
    /// Objective evaluations or solver iterations spent on this point.
    pub evals: u64,
    /// True when the monotone post-pass swapped in a witness from a higher target.
    pub replaced: bool,
}

impl<C> CurvePoint<C> {
    pub fn rate(&self) -> Option<f64> {
        self.evaluation.map(|e| e.r_norm)
    }

    pub fn is_feasible(&self) -> bool {
        self.status == PointStatus::Feasible
    }
}

#[derive(Clone, Debug)]
pub struct RateCurve<C> {
    pub points: Vec<CurvePoint<C>>,
}

impl<C: Clone> RateCurve<C> {
    /// `(J, R)` pairs for the feasible points.
    pub fn feasible_pairs(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.rate().filter(|_| p.is_feasible()).map(|r| (p.j, r)))
            .collect()
    }

    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.feasible_pairs().windows(2).all(|w| w[1].1 >= w[0].1 - tol)
    }

    pub fn all_feasible(&self) -> bool {
        self.points.iter().all(|p| p.is_feasible())
    }

    /// Replace each point by a cheaper feasible witness from a higher target,
    /// making the curve nondecreasing. Returns how many points changed.
    pub fn enforce_monotone(&mut self) -> usize {
        let mut changed = 0;
        let mut best: Option<(Evaluation, C)> = None;
        for p in self.points.iter_mut().rev() {
            let own = p.evaluation.filter(|_| p.is_feasible());
            match (&best, own) {
                (Some((be, bc)), Some(e)) if be.r_norm < e.r_norm => {
                    p.evaluation = Some(*be);
                    p.channel = Some(bc.clone());
                    p.replaced = true;
                    changed += 1;
                }
                (Some((be, bc)), None) => {
                    p.evaluation = Some(*be);
                    p.channel = Some(bc.clone());
                    p.status = PointStatus::Feasible;
                    p.replaced = true;
                    changed += 1;
                }
                (_, Some(e)) => best = Some((e, p.channel.clone().expect("feasible point has a witness"))),
                (None, None) => {}
            }
        }
        changed
    }
}

/// Outcome of [`convexity_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub pass: bool,
    /// Smallest second difference seen.
    pub min_second_difference: f64,
    /// `(index, second difference)` for every interior point below `−slack`.
    pub violations: Vec<(usize, f64)>,
}

/// Second differences of `R` over `J`. On a uniform grid the value at `i` is
/// `R[i−1] − 2R[i] + R[i+1]`; on a nonuniform grid it is twice the gap between
/// the chord through the neighbours and `R[i]`.
pub fn convexity_check(points: &[(f64, f64)], slack: f64) -> ConvexityReport {
    let mut violations = Vec::new();
    let mut min = f64::INFINITY;
    for i in 1..points.len().saturating_sub(1) {
        let (j0, r0) = points[i - 1];
        let (j1, r1) = points[i];
        let (j2, r2) = points[i + 1];
        let chord = r0 + (r2 - r0) * (j1 - j0) / (j2 - j0);
        let d2 = 2.0 * (chord - r1);
        min = min.min(d2);
        if d2 < -slack {
            violations.push((i, d2));
        }
    }
    ConvexityReport {
        pass: points.len() >= 3 && violations.is_empty(),
        min_second_difference: min,
        violations,
    }
}

/// Check an inclusive `start:stop:count` grid: strictly increasing, inside `(0, 1]`.
pub fn validate_grid(grid: &[f64]) -> crate::Result<()> {
    if grid.is_empty() {
        return Err(crate::Error::InvalidArgument("empty J grid".into()));
    }
    if grid.iter().any(|&j| !(j > 0.0 && j <= 1.0)) {
        return Err(crate::Error::InvalidArgument("J grid values must lie in (0, 1]".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(crate::Error::InvalidArgument("J grid must be strictly increasing".into()));
    }
    Ok(())
}
