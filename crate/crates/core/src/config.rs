//! Solver configuration and seed derivation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the relevance constraint enters the random search ranking.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ConstraintMode {
    /// Feasible candidates first (by rate), then infeasible by violation.
    Filter,
    /// Score `R + weight · max(0, J_target − J)`.
    Penalty { weight: f64 },
}

/// Missing fields take their [`Default`] values when deserializing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub population: usize,
    pub survivors: usize,
    /// Generations per restart.
    pub iterations: usize,
    pub mutation_scale: f64,
    pub mutation_decay: f64,
    pub mutation_floor: f64,
    /// Kraus operators per channel; `None` means `d_in · d_out`.
    pub kraus_rank: Option<usize>,
    pub restarts: usize,
    /// Stop a restart after this many generations without improvement; 0 disables.
    pub stall_generations: usize,
    pub beta_grid: Vec<f64>,
    pub fixed_point_tol: f64,
    pub max_fp_iters: usize,
    /// Step size of the damped fixed-point update, in (0, 1].
    pub damping: f64,
    pub seed: u64,
    pub constraint_mode: ConstraintMode,
}

/// `count` points from `2^lo` to `2^hi`, geometric, endpoints included.
pub fn geometric_beta_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo.exp2()],
        _ => (0..count)
            .map(|k| (lo + (hi - lo) * k as f64 / (count - 1) as f64).exp2())
            .collect(),
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            population: 64,
            survivors: 8,
            iterations: 1500,
            mutation_scale: 0.3,
            mutation_decay: 0.97,
            mutation_floor: 1e-3,
            kraus_rank: None,
            restarts: 4,
            stall_generations: 300,
            beta_grid: geometric_beta_grid(-4.0, 10.0, 30),
            fixed_point_tol: 1e-10,
            max_fp_iters: 20_000,
            damping: 0.3,
            seed: 0,
            constraint_mode: ConstraintMode::Filter,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if self.population == 0 || self.survivors == 0 {
            return bad("population and survivors must be positive");
        }
        if self.survivors > self.population {
            return bad("survivors must not exceed population");
        }
        if !(self.mutation_scale > 0.0) || !(self.mutation_floor > 0.0) {
            return bad("mutation scales must be positive");
        }
        if !(self.mutation_decay > 0.0 && self.mutation_decay <= 1.0) {
            return bad("mutation decay must lie in (0, 1]");
        }
        if self.kraus_rank == Some(0) {
            return bad("kraus rank must be at least 1");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.fixed_point_tol > 0.0) {
            return bad("fixed-point tolerance must be positive");
        }
        if self.beta_grid.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad("beta grid values must be finite and nonnegative");
        }
        if let ConstraintMode::Penalty { weight } = self.constraint_mode {
            if !(weight > 0.0) {
                return bad("penalty weight must be positive");
            }
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the task at `path` under `master`. Independent of scheduling.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn derive_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}
