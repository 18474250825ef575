//! Classical Information Bottleneck: the self-consistent channel iteration
//! and the rate curve `min I(X;X~)` subject to `I(X~;Y) ≥ J · I(X;Y)`.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{derive_rng, SolverConfig};
use crate::curve::{CurvePoint, Evaluation, PointStatus, RateCurve};
use crate::error::{Error, Infeasibility, Result};
use crate::linalg::{HermitianMatrix, Label};
use crate::qstate::{BipartiteState, ChoiMatrix};

const SUM_TOL: f64 = 1e-12;
const COLUMN_TOL: f64 = 1e-10;

/// Joint table `P(x, y)`, rows indexed by `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    nx: usize,
    ny: usize,
    p: Vec<f64>,
}

/// JSON form `{"px_y": [[...], ...]}`, row-major `|X| × |Y|`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JointFile {
    pub px_y: Vec<Vec<f64>>,
}

impl JointDistribution {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if nx == 0 || ny == 0 || rows.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidArgument("joint table must be a nonempty rectangle".into()));
        }
        let p: Vec<f64> = rows.into_iter().flatten().collect();
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("joint probabilities must be finite and nonnegative".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidArgument(format!("joint table sums to {total}, not 1")));
        }
        Ok(Self { nx, ny, p })
    }

    /// Diagonal of a state on `x ⊗ y`; off-diagonal entries must vanish.
    pub fn from_diagonal_state(rho: &BipartiteState) -> Result<Self> {
        let nx = rho.dims().factors()[0].1;
        let ny = rho.dims().factors()[1].1;
        let m = rho.matrix();
        let n = nx * ny;
        for i in 0..n {
            for j in 0..n {
                if i != j && m[(i, j)].norm() > SUM_TOL {
                    return Err(Error::InvalidArgument("state is not diagonal".into()));
                }
            }
        }
        let rows = (0..nx)
            .map(|x| (0..ny).map(|y| m[(x * ny + y, x * ny + y)].re.max(0.0)).collect())
            .collect::<Vec<Vec<f64>>>();
        let total: f64 = rows.iter().flatten().sum();
        Self::new(rows.into_iter().map(|r| r.into_iter().map(|v| v / total).collect()).collect())
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.ny + y]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.ny).map(<[f64]>::to_vec).collect()
    }

    pub fn px(&self) -> Vec<f64> {
        self.p.chunks(self.ny).map(|r| r.iter().sum()).collect()
    }

    pub fn py(&self) -> Vec<f64> {
        (0..self.ny).map(|y| (0..self.nx).map(|x| self.get(x, y)).sum()).collect()
    }

    /// `P(y | x)`; `None` when `P(x) = 0`.
    pub fn conditional(&self, x: usize) -> Option<Vec<f64>> {
        let row = &self.p[x * self.ny..(x + 1) * self.ny];
        let px: f64 = row.iter().sum();
        (px > 0.0).then(|| row.iter().map(|v| v / px).collect())
    }

    pub fn entropy_x(&self) -> f64 {
        shannon_entropy(&self.px())
    }

    pub fn mutual_information(&self) -> f64 {
        table_mutual_information(&self.p, self.nx, self.ny)
    }

    /// Drop rows with `P(x) = 0`; their conditional is undefined.
    pub fn drop_zero_rows(&self) -> Self {
        let rows: Vec<Vec<f64>> = self.rows().into_iter().filter(|r| r.iter().sum::<f64>() > 0.0).collect();
        let nx = rows.len();
        Self { nx, ny: self.ny, p: rows.into_iter().flatten().collect() }
    }

    pub fn to_file(&self) -> JointFile {
        JointFile { px_y: self.rows() }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: JointFile = serde_json::from_str(s)?;
        Self::new(f.px_y)
    }
}

fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

fn table_mutual_information(p: &[f64], nx: usize, ny: usize) -> f64 {
    let px: Vec<f64> = p.chunks(ny).map(|r| r.iter().sum()).collect();
    let py: Vec<f64> = (0..ny).map(|y| (0..nx).map(|x| p[x * ny + y]).sum()).collect();
    let mut i = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let v = p[x * ny + y];
            if v > 0.0 {
                i += v * (v / (px[x] * py[y])).ln();
            }
        }
    }
    i.max(0.0)
}

/// Column-stochastic `P(x~ | x)`, `d_out × d_in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalChannel {
    d_in: usize,
    d_out: usize,
    /// Row-major: `m[x~ · d_in + x]`.
    m: Vec<f64>,
}

impl ClassicalChannel {
    pub fn new(d_out: usize, d_in: usize, m: Vec<f64>) -> Result<Self> {
        if d_in == 0 || d_out == 0 || m.len() != d_in * d_out {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {d_out} × {d_in} channel",
                m.len()
            )));
        }
        if m.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidChannel("negative or non-finite transition probability".into()));
        }
        let ch = Self { d_in, d_out, m };
        for x in 0..d_in {
            let s: f64 = (0..d_out).map(|t| ch.get(t, x)).sum();
            if (s - 1.0).abs() > COLUMN_TOL {
                return Err(Error::InvalidChannel(format!("column {x} sums to {s}")));
            }
        }
        Ok(ch)
    }

    /// `(1 − η) δ + η / d_out`; the diagonal is cut off when `d_out < d_in`.
    pub fn perturbed_identity(d_in: usize, d_out: usize, eta: f64) -> Self {
        let mut m = vec![eta / d_out as f64; d_in * d_out];
        for x in 0..d_in {
            m[(x % d_out) * d_in + x] += 1.0 - eta;
        }
        Self { d_in, d_out, m }
    }

    /// Columns drawn uniformly from the simplex.
    pub fn random<R: Rng + ?Sized>(d_in: usize, d_out: usize, rng: &mut R) -> Self {
        let mut m = vec![0.0; d_in * d_out];
        for x in 0..d_in {
            let draws: Vec<f64> = (0..d_out).map(|_| rng.sample::<f64, _>(Exp1) + 1e-300).collect();
            let s: f64 = draws.iter().sum();
            for (t, v) in draws.into_iter().enumerate() {
                m[t * d_in + x] = v / s;
            }
        }
        Self { d_in, d_out, m }
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn get(&self, t: usize, x: usize) -> f64 {
        self.m[t * self.d_in + x]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m.iter().zip(&other.m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Measure-and-prepare Choi matrix, diagonal with `Ψ[(x,t),(x,t)] = P(t|x)`.
    pub fn to_choi(&self) -> ChoiMatrix {
        let diag: Vec<f64> = (0..self.d_in)
            .flat_map(|x| (0..self.d_out).map(move |t| (x, t)))
            .map(|(x, t)| self.get(t, x))
            .collect();
        ChoiMatrix::new_unchecked(self.d_in, self.d_out, HermitianMatrix::from_real_diag(&diag))
            .expect("shape matches")
    }

    /// Read `P(t|x)` off the diagonal of a Choi matrix.
    pub fn from_choi_diagonal(psi: &ChoiMatrix) -> Result<Self> {
        let (d_in, d_out) = (psi.d_in(), psi.d_out());
        let mut m = vec![0.0; d_in * d_out];
        for x in 0..d_in {
            for t in 0..d_out {
                let i = x * d_out + t;
                m[t * d_in + x] = psi.matrix()[(i, i)].re.max(0.0);
            }
        }
        Self::new(d_out, d_in, m)
    }

    /// Transition matrix rows, indexed by `x~`.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.m.chunks(self.d_in).map(<[f64]>::to_vec).collect()
    }
}

/// `Σ p ln(p/q)` with `0 ln 0 = 0`; `+∞` when `p_i > 0 = q_i`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidArgument(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(kl_unchecked(p, q))
}

fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            s += a * (a / b).ln();
        }
    }
    s.max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IBSolution {
    pub channel: ClassicalChannel,
    pub beta: f64,
    pub i_xxt: f64,
    pub i_xty: f64,
    pub iterations: usize,
    /// `‖P(x~|x) − P(x~) e^{−β KL} / Z‖_max` at the returned channel.
    pub residual: f64,
}

/// Marginal `P(x~)` and decoder `P(y|x~)` induced by a channel.
fn marginal_and_decoder(p: &JointDistribution, c: &ClassicalChannel) -> (Vec<f64>, Vec<Vec<f64>>) {
    let px = p.px();
    let q: Vec<f64> = (0..c.d_out).map(|t| (0..c.d_in).map(|x| c.get(t, x) * px[x]).sum()).collect();
    let dec = (0..c.d_out)
        .map(|t| {
            (0..p.ny)
                .map(|y| {
                    if q[t] > 0.0 {
                        (0..c.d_in).map(|x| c.get(t, x) * p.get(x, y)).sum::<f64>() / q[t]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    (q, dec)
}

/// One channel update from the given marginal and decoder, in log space.
fn channel_update(
    p: &JointDistribution,
    beta: f64,
    q: &[f64],
    dec: &[Vec<f64>],
    prev: &ClassicalChannel,
) -> ClassicalChannel {
    let d_out = q.len();
    let mut m = vec![0.0; p.nx * d_out];
    let mut logw = vec![0.0; d_out];
    for x in 0..p.nx {
        let cond = p.conditional(x);
        for t in 0..d_out {
            logw[t] = if q[t] <= 0.0 {
                f64::NEG_INFINITY
            } else {
                let kl = match &cond {
                    Some(c) if beta > 0.0 => kl_unchecked(c, &dec[t]),
                    _ => 0.0,
                };
                q[t].ln() - beta * kl
            };
        }
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            for t in 0..d_out {
                m[t * p.nx + x] = prev.get(t, x);
            }
            continue;
        }
        let z: f64 = logw.iter().map(|&l| (l - max).exp()).sum();
        for t in 0..d_out {
            m[t * p.nx + x] = (logw[t] - max).exp() / z;
        }
    }
    ClassicalChannel { d_in: p.nx, d_out, m }
}

/// `(I(X;X~), I(X~;Y))` in nats.
pub fn channel_informations(p: &JointDistribution, c: &ClassicalChannel) -> (f64, f64) {
    let px = p.px();
    let (q, _) = marginal_and_decoder(p, c);
    let mut i_xxt = 0.0;
    for x in 0..c.d_in {
        for t in 0..c.d_out {
            let v = c.get(t, x);
            if v > 0.0 && px[x] > 0.0 {
                i_xxt += px[x] * v * (v / q[t]).ln();
            }
        }
    }
    let mut joint = vec![0.0; c.d_out * p.ny];
    for t in 0..c.d_out {
        for y in 0..p.ny {
            joint[t * p.ny + y] = (0..c.d_in).map(|x| c.get(t, x) * p.get(x, y)).sum();
        }
    }
    (i_xxt.max(0.0), table_mutual_information(&joint, c.d_out, p.ny))
}

/// `I(X;X~) − β I(X~;Y)`, the quantity the iteration decreases.
pub fn ib_lagrangian(p: &JointDistribution, c: &ClassicalChannel, beta: f64) -> f64 {
    let (a, b) = channel_informations(p, c);
    a - beta * b
}

/// Self-consistency residual of a channel at `beta`.
pub fn ib_residual(p: &JointDistribution, c: &ClassicalChannel, beta: f64) -> f64 {
    let (q, dec) = marginal_and_decoder(p, c);
    channel_update(p, beta, &q, &dec, c).max_abs_diff(c)
}

/// Alternate channel, marginal, and decoder updates until the channel moves
/// less than `config.fixed_point_tol` or `config.max_fp_iters` is spent.
pub fn ib_iterate(
    p: &JointDistribution,
    beta: f64,
    d_xt: usize,
    init: &ClassicalChannel,
    config: &SolverConfig,
) -> Result<IBSolution> {
    ib_iterate_observed(p, beta, d_xt, init, config, &mut |_| {})
}

pub(crate) fn ib_iterate_observed(
    p: &JointDistribution,
    beta: f64,
    d_xt: usize,
    init: &ClassicalChannel,
    config: &SolverConfig,
    observer: &mut dyn FnMut(&ClassicalChannel),
) -> Result<IBSolution> {
    if d_xt < 1 {
        return Err(Error::InvalidArgument("d_xt must be at least 1".into()));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be finite and nonnegative")));
    }
    if init.d_in != p.nx || init.d_out != d_xt {
        return Err(Error::DimensionMismatch(format!(
            "initial channel is {} × {}, expected {d_xt} × {}",
            init.d_out, init.d_in, p.nx
        )));
    }
    let mut c = init.clone();
    let mut iterations = 0;
    while iterations < config.max_fp_iters {
        let (q, dec) = marginal_and_decoder(p, &c);
        let next = channel_update(p, beta, &q, &dec, &c);
        let delta = next.max_abs_diff(&c);
        c = next;
        iterations += 1;
        observer(&c);
        if delta < config.fixed_point_tol {
            break;
        }
    }
    let (i_xxt, i_xty) = channel_informations(p, &c);
    let residual = ib_residual(p, &c, beta);
    Ok(IBSolution { channel: c, beta, i_xxt, i_xty, iterations, residual })
}

/// Reference for the normalized rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by `2 H(X)`, the value of `I(X';X)` for the purified diagonal state.
    Purified,
    /// Rates in nats.
    Raw,
}

/// One run of the beta sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepEntry {
    pub beta: f64,
    pub restart: usize,
    pub i_xxt: f64,
    pub i_xty: f64,
    pub iterations: usize,
    pub residual: f64,
}

const PERTURBATION: f64 = 0.01;
const MAX_DOUBLINGS: usize = 60;
const BISECTION_STEPS: usize = 60;

struct Candidate {
    eval: Evaluation,
    channel: ClassicalChannel,
}

struct Prepared {
    p: JointDistribution,
    i_xy: f64,
    i_ref: f64,
}

fn prepare(p_xy: &JointDistribution, norm: Normalization) -> Result<Prepared> {
    let p = p_xy.drop_zero_rows();
    let i_xy = p.mutual_information();
    if i_xy <= 1e-12 {
        return Err(Error::DegenerateInstance(i_xy));
    }
    let i_ref = match norm {
        Normalization::Purified => 2.0 * p.entropy_x(),
        Normalization::Raw => 1.0,
    };
    Ok(Prepared { p, i_xy, i_ref })
}

impl Prepared {
    fn candidate(&self, sol: &IBSolution) -> Candidate {
        self.candidate_of(sol.channel.clone(), sol.i_xxt, sol.i_xty)
    }

    fn candidate_of(&self, channel: ClassicalChannel, i_xxt: f64, i_xty: f64) -> Candidate {
        Candidate {
            eval: Evaluation {
                i_xt_y: i_xty,
                i_xp_xt: i_xxt,
                j_norm: i_xty / self.i_xy,
                r_norm: i_xxt / self.i_ref,
            },
            channel,
        }
    }
}

/// Runs of the perturbed-identity start plus `config.restarts` random starts
/// at every beta of the grid.
pub fn beta_sweep(p_xy: &JointDistribution, d_xt: usize, config: &SolverConfig) -> Result<Vec<(SweepEntry, IBSolution)>> {
    config.validate()?;
    let p = p_xy.drop_zero_rows();
    let tasks: Vec<(usize, usize)> = (0..config.beta_grid.len())
        .flat_map(|b| (0..=config.restarts).map(move |r| (b, r)))
        .collect();
    tasks
        .par_iter()
        .map(|&(b, r)| {
            let beta = config.beta_grid[b];
            let init = if r == 0 {
                ClassicalChannel::perturbed_identity(p.nx, d_xt, PERTURBATION)
            } else {
                ClassicalChannel::random(p.nx, d_xt, &mut derive_rng(config.seed, &[b as u64, r as u64]))
            };
            let sol = ib_iterate(&p, beta, d_xt, &init, config)?;
            let entry = SweepEntry {
                beta,
                restart: r,
                i_xxt: sol.i_xxt,
                i_xty: sol.i_xty,
                iterations: sol.iterations,
                residual: sol.residual,
            };
            Ok((entry, sol))
        })
        .collect()
}

/// Minimal `I(X;X~)` for each target fraction `J` of `I(X;Y)`.
///
/// Candidates come from a beta sweep with restarts, the deterministic copy
/// channel when `d_xt ≥ |X|`, and a bisection in beta along the
/// perturbed-identity path bracketing each target.
pub fn classical_rate_curve(
    p_xy: &JointDistribution,
    j_grid: &[f64],
    d_xt: usize,
    config: &SolverConfig,
    norm: Normalization,
) -> Result<RateCurve<ClassicalChannel>> {
    crate::curve::validate_grid(j_grid)?;
    let prep = prepare(p_xy, norm)?;
    let sweep = beta_sweep(&prep.p, d_xt, config)?;
    let sweep_iters: u64 = sweep.iter().map(|(e, _)| e.iterations as u64).sum();

    let mut global: Vec<Candidate> = sweep.iter().map(|(_, s)| prep.candidate(s)).collect();
    if d_xt >= prep.p.nx {
        let copy = ClassicalChannel::perturbed_identity(prep.p.nx, d_xt, 0.0);
        let (a, b) = channel_informations(&prep.p, &copy);
        global.push(prep.candidate_of(copy, a, b));
    }
    let mut path: Vec<(f64, f64)> = sweep
        .iter()
        .filter(|(e, _)| e.restart == 0)
        .map(|(e, _)| (e.beta, e.i_xty / prep.i_xy))
        .collect();
    path.sort_by(|a, b| a.0.total_cmp(&b.0));

    let points = j_grid
        .par_iter()
        .map(|&j| -> Result<CurvePoint<ClassicalChannel>> {
            let (local, iters) = bisect_target(&prep, &path, j, d_xt, config)?;
            let best = global
                .iter()
                .chain(local.iter())
                .filter(|c| c.eval.j_norm >= j)
                .min_by(|a, b| a.eval.r_norm.total_cmp(&b.eval.r_norm));
            Ok(match best {
                Some(c) => CurvePoint {
                    j,
                    evaluation: Some(c.eval),
                    channel: Some(c.channel.clone()),
                    status: PointStatus::Feasible,
                    evals: sweep_iters + iters,
                    replaced: false,
                },
                None => {
                    let best_j = global
                        .iter()
                        .chain(local.iter())
                        .map(|c| c.eval.j_norm)
                        .fold(0.0, f64::max);
                    let why = if j > 1.0 {
                        Infeasibility::TargetAboveCeiling(j)
                    } else {
                        Infeasibility::BudgetExhausted { best_j, evals: sweep_iters + iters }
                    };
                    CurvePoint {
                        j,
                        evaluation: None,
                        channel: None,
                        status: PointStatus::Failed(why),
                        evals: sweep_iters + iters,
                        replaced: false,
                    }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut curve = RateCurve { points };
    let fixed = curve.enforce_monotone();
    if fixed > 0 {
        log::debug!("classical curve: monotone post-pass replaced {fixed} points");
    }
    Ok(curve)
}

/// Bisect beta between the last path point below `j` and the first at or
/// above it, extending the path upward by doubling when needed.
fn bisect_target(
    prep: &Prepared,
    path: &[(f64, f64)],
    j: f64,
    d_xt: usize,
    config: &SolverConfig,
) -> Result<(Vec<Candidate>, u64)> {
    // Start each solve from the latest channel on the feasible side; near a
    // critical beta the iteration is slow and a close start matters.
    let mut start = ClassicalChannel::perturbed_identity(prep.p.nx, d_xt, PERTURBATION);
    let mut out = Vec::new();
    let mut iters = 0u64;
    let mut solve = |beta: f64, out: &mut Vec<Candidate>| -> Result<f64> {
        let sol = ib_iterate(&prep.p, beta, d_xt, &start, config)?;
        iters += sol.iterations as u64;
        let c = prep.candidate(&sol);
        let jn = c.eval.j_norm;
        if jn >= j {
            start = sol.channel;
        }
        out.push(c);
        Ok(jn)
    };

    let (mut lo, mut hi) = match path.iter().position(|&(_, jn)| jn >= j) {
        Some(0) => (0.0, path[0].0),
        Some(k) => (path[k - 1].0, path[k].0),
        None => {
            let mut lo = path.last().map_or(1.0, |p| p.0);
            let mut found = None;
            for _ in 0..MAX_DOUBLINGS {
                let beta = (lo * 2.0).max(1.0);
                if solve(beta, &mut out)? >= j {
                    found = Some(beta);
                    break;
                }
                lo = beta;
            }
            match found {
                Some(hi) => (lo, hi),
                None => return Ok((out, iters)),
            }
        }
    };
    for _ in 0..BISECTION_STEPS {
        if hi - lo <= 1e-10 * hi {
            break;
        }
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        if solve(mid, &mut out)? >= j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((out, iters))
}

/// Joint table from a diagonal state on `(x, y)`.
pub fn joint_from_state(rho: &BipartiteState) -> Result<JointDistribution> {
    if rho.first_label() != Label::X {
        return Err(Error::InvalidArgument("state must list x first".into()));
    }
    JointDistribution::from_diagonal_state(rho)
}
