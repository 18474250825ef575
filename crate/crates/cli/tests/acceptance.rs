//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits with status 1 if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use qib_core::checks;
use qib_core::classical_ib::{classical_rate_curve, ib_iterate, ClassicalChannel, JointDistribution, Normalization};
use qib_core::qib::{
    analytic_dephasing_benchmark, build_instance, convexity_check, fixed_point_solve, presets, random_search,
    rate_curve, INITIAL_PERTURBATION,
};
use qib_core::qstate::{BipartiteState, KrausChannel};
use qib_core::{RateCurve, SolverConfig};

type Verdict = Result<(bool, String), String>;

struct Suite {
    failed: usize,
}

impl Suite {
    fn run(&mut self, id: u32, title: &str, f: impl FnOnce() -> Verdict) {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            self.failed += 1;
        }
        println!(
            "criterion {id}: {}  {title}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn grid19() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

fn rho1() -> BipartiteState {
    presets::classical([0.1, 0.2, 0.3, 0.4]).expect("valid weights")
}

fn paper_states() -> Vec<(&'static str, BipartiteState)> {
    vec![
        ("rho1 classical(0.1,0.2,0.3,0.4)", rho1()),
        ("rho2 bell_mix", presets::bell_mix()),
        ("rho3 vw_mix(0.4,0.6)", presets::vw_mix(0.4, 0.6).expect("valid weights")),
        ("rho3 vw_mix(0.2,0.8)", presets::vw_mix(0.2, 0.8).expect("valid weights")),
    ]
}

fn analytic_benchmark() -> Verdict {
    let start = Instant::now();
    let r = analytic_dephasing_benchmark([0.1, 0.2, 0.3, 0.4]).map_err(e)?;
    let secs = start.elapsed().as_secs_f64();
    let pass = (r.j_norm - 1.0).abs() <= 1e-10 && (r.r_norm - 0.5).abs() <= 1e-10 && secs < 1.0;
    Ok((pass, format!("J_norm = {:.12}, R_norm = {:.12}", r.j_norm, r.r_norm)))
}

fn endpoint_classical() -> Verdict {
    let inst = build_instance(&rho1()).map_err(e)?;
    let start = Instant::now();
    let out = random_search(&inst, 0.999, &SolverConfig::default()).map_err(e)?;
    let secs = start.elapsed().as_secs_f64();
    let r = out.evaluation.r_norm;
    let pass = r <= 0.52 && r >= 0.5 - 1e-6 && secs < 60.0;
    Ok((
        pass,
        format!(
            "R_norm = {r:.7} at J_norm = {:.6} (want 0.5 - 1e-6 <= R <= 0.52), {} evaluations",
            out.evaluation.j_norm, out.evals
        ),
    ))
}

fn endpoints_entangled() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, st) in paper_states().into_iter().skip(1) {
        let inst = build_instance(&st).map_err(e)?;
        let start = Instant::now();
        let out = random_search(&inst, 0.999, &SolverConfig::default()).map_err(e)?;
        let secs = start.elapsed().as_secs_f64();
        let r = out.evaluation.r_norm;
        pass &= (0.97..=1.001).contains(&r) && secs < 60.0;
        parts.push(format!("{name}: R_norm = {r:.5} ({secs:.1} s)"));
    }
    Ok((pass, parts.join("; ")))
}

fn curve_shapes(curves: &mut Vec<(String, RateCurve<KrausChannel>)>) -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, st) in paper_states() {
        let inst = build_instance(&st).map_err(e)?;
        let curve = rate_curve(&inst, &grid19(), &SolverConfig::default()).map_err(e)?;
        let pairs = curve.feasible_pairs();
        let monotone = curve.all_feasible() && curve.is_nondecreasing(0.0);
        let convex = convexity_check(&pairs, 0.02);
        pass &= monotone && convex.pass;
        parts.push(format!(
            "{name}: monotone {monotone}, min second difference {:.4}, R(0.95) = {:.4}",
            convex.min_second_difference,
            pairs.last().map_or(f64::NAN, |p| p.1)
        ));
        curves.push((name.to_string(), curve));
    }
    pass &= start.elapsed().as_secs_f64() < 20.0 * 60.0;
    Ok((pass, parts.join("; ")))
}

fn classical_reduction(rho1_curve: Option<&RateCurve<KrausChannel>>) -> Verdict {
    let st = rho1();
    let inst = build_instance(&st).map_err(e)?;
    let config = SolverConfig::default();
    let owned;
    let quantum = match rho1_curve {
        Some(c) => c,
        None => {
            owned = rate_curve(&inst, &grid19(), &config).map_err(e)?;
            &owned
        }
    };
    let joint = JointDistribution::from_diagonal_state(&st).map_err(e)?;
    let classical = classical_rate_curve(&joint, &grid19(), 2, &config, Normalization::Purified).map_err(e)?;
    let mut worst_curve = 0.0f64;
    for (q, c) in quantum.points.iter().zip(&classical.points) {
        match (q.rate(), c.rate()) {
            (Some(a), Some(b)) => worst_curve = worst_curve.max((a - b).abs()),
            _ => worst_curve = f64::INFINITY,
        }
    }

    // Both iterations undamped, so they follow the same path from the same start.
    let undamped = SolverConfig { damping: 1.0, ..SolverConfig::default() };
    let mut worst_channel = 0.0f64;
    for beta in [0.5, 2.0, 8.0] {
        let fp = fixed_point_solve(&inst, beta, &undamped).map_err(e)?;
        let init = ClassicalChannel::perturbed_identity(2, 2, INITIAL_PERTURBATION);
        let cl = ib_iterate(&joint, beta, 2, &init, &undamped).map_err(e)?;
        let diff = fp.choi.matrix().max_abs_diff(cl.channel.to_choi().matrix());
        worst_channel = worst_channel.max(diff);
    }
    let pass = worst_curve <= 0.05 && worst_channel <= 1e-4;
    Ok((
        pass,
        format!("max |R_quantum - R_classical| = {worst_curve:.5}; max Choi entry gap at beta 0.5/2/8 = {worst_channel:.2e}"),
    ))
}

fn gradient_oracle() -> Verdict {
    let g = checks::gradient_check(20, 1e-5, 0).map_err(e)?;
    Ok((
        g.worst_relative_error <= 1e-5,
        format!("{} points, {} directions, worst relative error {:.2e}", g.points, g.directions, g.worst_relative_error),
    ))
}

fn invariant_suite() -> Verdict {
    let start = Instant::now();
    let rt = checks::cptp_roundtrip_check(200, 0).map_err(e)?;
    let dp = checks::data_processing_check(200, 0).map_err(e)?;
    let fannes = checks::fannes_check(200, 0).map_err(e)?;
    let pu = checks::purification_check(200, 0).map_err(e)?;
    let secs = start.elapsed().as_secs_f64();
    let pass = rt <= 1e-9 && dp <= 1.0 + 1e-9 && fannes.violations == 0 && pu <= 1e-10 && secs < 30.0;
    Ok((
        pass,
        format!(
            "roundtrip {rt:.1e}, max J_norm {dp:.12}, Fannes violations {}/200, purification {pu:.1e}",
            fannes.violations
        ),
    ))
}

fn run_cli(out: &Path, threads: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_qib"))
        .args(["rate-curve", "--preset", "bell_mix", "--grid", "0.1:0.9:5", "--seed", "11"])
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--out")
        .arg(out)
        .env_remove("QIB_SEED")
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(e)?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("qib exited with {status}"))
    }
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(e)?;
    let (a, b) = (dir.path().join("t1"), dir.path().join("t3"));
    run_cli(&a, 1)?;
    run_cli(&b, 3)?;
    let csv_a = std::fs::read(a.join("curve.csv")).map_err(e)?;
    let csv_b = std::fs::read(b.join("curve.csv")).map_err(e)?;
    let mut same_witnesses = true;
    for entry in std::fs::read_dir(&a).map_err(e)? {
        let name = entry.map_err(e)?.file_name();
        if name.to_string_lossy().starts_with("channel_J") {
            same_witnesses &= std::fs::read(a.join(&name)).ok() == std::fs::read(b.join(&name)).ok();
        }
    }
    Ok((
        csv_a == csv_b && same_witnesses,
        format!("--threads 1 vs 3: curve.csv identical {}, witnesses identical {same_witnesses}", csv_a == csv_b),
    ))
}

fn main() {
    let mut suite = Suite { failed: 0 };
    let mut curves = Vec::new();
    suite.run(1, "analytic dephasing benchmark", analytic_benchmark);
    suite.run(2, "classical-state endpoint at J = 0.999", endpoint_classical);
    suite.run(3, "entangled-state endpoints at J = 0.999", endpoints_entangled);
    suite.run(4, "19-point curves monotone and convex (slack 0.02)", || curve_shapes(&mut curves));
    let rho1_curve = curves.first().map(|(_, c)| c);
    suite.run(5, "classical reduction", || classical_reduction(rho1_curve));
    suite.run(6, "gradient vs central differences", gradient_oracle);
    suite.run(7, "invariant suite", invariant_suite);
    suite.run(8, "thread-count determinism of rate-curve", determinism);
    println!("acceptance: {} of 8 criteria passed", 8 - suite.failed);
    if suite.failed > 0 {
        std::process::exit(1);
    }
}
