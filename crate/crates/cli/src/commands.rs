use std::path::Path;

use qib_core::checks;
use qib_core::classical_ib::{beta_sweep, classical_rate_curve, JointDistribution, Normalization};
use qib_core::linalg::{eigvalsh, ComplexMatrix, HermitianMatrix, C64};
use qib_core::qib::{analytic_dephasing_benchmark, build_instance, fixed_point_curve, rate_curve};
use qib_core::qstate::{kraus_to_choi, validate_cptp, ChoiFile, ChoiMatrix, KrausChannel};
use qib_core::{CurvePoint, SolverConfig};

use crate::args::{ChannelInfoArgs, ClassicalArgs, Norm, Optimizer, RateCurveArgs, RunArgs, VerifyArgs};
use crate::error::{CliError, CliResult};
use crate::grid::{parse_beta_grid, parse_j_grid};
use crate::output::{
    channel_file_name, now, print_table, render_svg, sha256_hex, write_csv, Manifest, Row, CLASSICAL_HEADER,
    RATE_CURVE_HEADER,
};
use crate::state::{joint_from_file, state_from_flags};

const CPTP_TOL: f64 = 1e-9;

fn load_config(run: &RunArgs, beta_grid: Option<&str>) -> CliResult<SolverConfig> {
    let mut config = match &run.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => SolverConfig::default(),
    };
    if let Some(seed) = run.seed {
        config.seed = seed;
    }
    if let Some(spec) = beta_grid {
        config.beta_grid = parse_beta_grid(spec)?;
    }
    config.validate()?;
    Ok(config)
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::usage(format!("cannot create output directory {}: {e}", dir.display())))
}

fn failed_points<C>(points: &[CurvePoint<C>]) -> Vec<String> {
    points
        .iter()
        .filter_map(|p| match &p.status {
            qib_core::PointStatus::Failed(why) => Some(format!("J = {}: {why}", p.j)),
            qib_core::PointStatus::Feasible => None,
        })
        .collect()
}

pub fn rate_curve_cmd(args: &RateCurveArgs, argv: Vec<String>) -> CliResult<()> {
    let started = now();
    let spec = state_from_flags(args.input.preset, &args.input.params, args.input.state.as_deref())?;
    let state = spec.build()?;
    let grid = parse_j_grid(&args.grid)?;
    let config = load_config(&args.run, args.beta_grid.as_deref())?;
    if args.beta_grid.is_some() && args.optimizer == Optimizer::RandomSearch {
        log::warn!("--beta-grid only affects the fixed-point optimizer");
    }
    let instance = build_instance(&state)?;
    prepare_out(&args.run.out)?;

    let curve = match args.optimizer {
        Optimizer::RandomSearch => rate_curve(&instance, &grid, &config)?,
        Optimizer::FixedPoint => fixed_point_curve(&instance, &grid, &config)?,
    };
    let mut outputs = vec!["curve.csv".to_string()];
    let mut rows = Vec::with_capacity(curve.points.len());
    for p in &curve.points {
        let channel = match (&p.channel, p.is_feasible()) {
            (Some(ch), true) => {
                let name = channel_file_name(p.j);
                std::fs::write(args.run.out.join(&name), ch.to_json() + "\n")?;
                outputs.push(name.clone());
                name
            }
            _ => String::new(),
        };
        let e = p.evaluation.filter(|_| p.is_feasible());
        rows.push(Row {
            j: p.j,
            rate: e.map(|e| e.r_norm),
            i_xty: e.map(|e| e.i_xt_y),
            i_cost: e.map(|e| e.i_xp_xt),
            feasible: p.is_feasible(),
            evals: p.evals,
            channel,
        });
    }
    write_csv(&args.run.out.join("curve.csv"), &RATE_CURVE_HEADER, &rows)?;
    if args.run.svg {
        let title = format!("{} ({})", spec_title(&spec), args.optimizer.name());
        std::fs::write(args.run.out.join("curve.svg"), render_svg(&curve.feasible_pairs(), &title))?;
        outputs.push("curve.svg".into());
    }
    let input = serde_json::to_vec(&spec.resolved()?)?;
    Manifest {
        command: "rate-curve",
        argv,
        version: env!("CARGO_PKG_VERSION"),
        config: &config,
        seed: config.seed,
        threads: rayon::current_num_threads(),
        optimizer: Some(args.optimizer.name()),
        grid: &grid,
        started,
        finished: now(),
        input_sha256: sha256_hex(&input),
        outputs,
    }
    .write(&args.run.out)?;
    print_table(&rows, args.run.bits, "I_xpxt");

    let failed = failed_points(&curve.points);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Infeasible(failed.join("; ")))
    }
}

fn spec_title(spec: &crate::state::StateSpec) -> String {
    match spec {
        crate::state::StateSpec::Preset { name, params } => {
            let p: Vec<String> = params.iter().map(|v| v.to_string()).collect();
            format!("{name:?}({})", p.join(", "))
        }
        crate::state::StateSpec::Explicit { dims, .. } => format!("state {}x{}", dims.x, dims.y),
    }
}

fn classical_input(args: &ClassicalArgs) -> CliResult<(JointDistribution, Vec<u8>)> {
    match (&args.input.preset, &args.input.state) {
        (None, Some(path)) => {
            if !args.input.params.is_empty() {
                return Err(CliError::usage("--params only applies to --preset"));
            }
            let p = joint_from_file(path)?;
            let bytes = serde_json::to_vec(&p.to_file())?;
            Ok((p, bytes))
        }
        _ => {
            let spec = state_from_flags(args.input.preset, &args.input.params, args.input.state.as_deref())?;
            let p = JointDistribution::from_diagonal_state(&spec.build()?)?;
            let bytes = serde_json::to_vec(&p.to_file())?;
            Ok((p, bytes))
        }
    }
}

pub fn classical_cmd(args: &ClassicalArgs, argv: Vec<String>) -> CliResult<()> {
    let started = now();
    let (p, input) = classical_input(args)?;
    let grid = parse_j_grid(&args.grid)?;
    let config = load_config(&args.run, args.beta_grid.as_deref())?;
    let d_xt = args.d_xt.unwrap_or_else(|| p.drop_zero_rows().nx());
    if d_xt == 0 {
        return Err(CliError::usage("--d-xt must be positive"));
    }
    let norm = match args.normalization {
        Norm::Purified => Normalization::Purified,
        Norm::Raw => Normalization::Raw,
    };
    let curve = classical_rate_curve(&p, &grid, d_xt, &config, norm)?;
    prepare_out(&args.run.out)?;
    let mut outputs = vec!["classical.csv".to_string()];

    let rows: Vec<Row> = curve
        .points
        .iter()
        .map(|pt| {
            let e = pt.evaluation.filter(|_| pt.is_feasible());
            let channel = match (&pt.channel, pt.is_feasible()) {
                (Some(ch), true) => serde_json::to_string(&ch.rows()).expect("finite entries"),
                _ => String::new(),
            };
            Row {
                j: pt.j,
                rate: e.map(|e| e.r_norm),
                i_xty: e.map(|e| e.i_xt_y),
                i_cost: e.map(|e| e.i_xp_xt),
                feasible: pt.is_feasible(),
                evals: pt.evals,
                channel,
            }
        })
        .collect();
    write_csv(&args.run.out.join("classical.csv"), &CLASSICAL_HEADER, &rows)?;

    if args.sweep {
        let sweep = beta_sweep(&p, d_xt, &config)?;
        let mut w = csv::Writer::from_path(args.run.out.join("sweep.csv"))?;
        w.write_record(["beta", "restart", "I_xxt_nats", "I_xty_nats", "iterations", "residual"])?;
        for (e, _) in &sweep {
            w.write_record([
                e.beta.to_string(),
                e.restart.to_string(),
                e.i_xxt.to_string(),
                e.i_xty.to_string(),
                e.iterations.to_string(),
                e.residual.to_string(),
            ])?;
        }
        w.flush()?;
        outputs.push("sweep.csv".into());
        let scale = if args.run.bits { std::f64::consts::LN_2.recip() } else { 1.0 };
        println!("beta sweep (restart 0), {}:", if args.run.bits { "bits" } else { "nats" });
        for (e, _) in sweep.iter().filter(|(e, _)| e.restart == 0) {
            println!("  beta {:>12.6}  I_xxt {:.6}  I_xty {:.6}", e.beta, e.i_xxt * scale, e.i_xty * scale);
        }
    }
    if args.run.svg {
        std::fs::write(args.run.out.join("curve.svg"), render_svg(&curve.feasible_pairs(), "classical"))?;
        outputs.push("curve.svg".into());
    }
    Manifest {
        command: "classical",
        argv,
        version: env!("CARGO_PKG_VERSION"),
        config: &config,
        seed: config.seed,
        threads: rayon::current_num_threads(),
        optimizer: None,
        grid: &grid,
        started,
        finished: now(),
        input_sha256: sha256_hex(&input),
        outputs,
    }
    .write(&args.run.out)?;
    print_table(&rows, args.run.bits, "I_xxt");

    let failed = failed_points(&curve.points);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Infeasible(failed.join("; ")))
    }
}

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

/// The report text depends only on the seed and tolerances.
pub fn verify_report(seed: u64, grad_tol: f64) -> CliResult<(String, bool)> {
    let mut list = Vec::new();
    for p in [[0.1, 0.2, 0.3, 0.4], [0.5, 0.0, 0.0, 0.5]] {
        let r = analytic_dephasing_benchmark(p)?;
        list.push(Check {
            name: format!("dephasing benchmark p = {p:?}"),
            pass: r.pass,
            detail: format!("J_norm = {:.12}, R_norm = {:.12}", r.j_norm, r.r_norm),
        });
    }
    let g = checks::gradient_check(20, 1e-5, seed)?;
    list.push(Check {
        name: format!("gradient vs central differences ({} directions)", g.directions),
        pass: g.worst_relative_error <= grad_tol,
        detail: format!("worst relative error {:.3e} (tol {grad_tol:e})", g.worst_relative_error),
    });
    let rt = checks::cptp_roundtrip_check(200, seed)?;
    list.push(Check {
        name: "Kraus/Choi roundtrip (200 channels)".into(),
        pass: rt <= 1e-9,
        detail: format!("worst action error {rt:.3e}"),
    });
    let dp = checks::data_processing_check(200, seed)?;
    list.push(Check {
        name: "data processing J_norm <= 1 (200 pairs)".into(),
        pass: dp <= 1.0 + 1e-9,
        detail: format!("max J_norm {dp:.12}"),
    });
    let f = checks::fannes_check(200, seed)?;
    list.push(Check {
        name: format!("Fannes bound ({} pairs)", f.samples),
        pass: f.violations == 0,
        detail: format!("{} violations, min margin {:.3e}", f.violations, f.min_margin),
    });
    let pu = checks::purification_check(200, seed)?;
    list.push(Check {
        name: "purification marginals (200 states)".into(),
        pass: pu <= 1e-10,
        detail: format!("worst error {pu:.3e}"),
    });

    let mut out = String::new();
    for c in &list {
        out.push_str(&format!("{}  {:<48} {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    let passed = list.iter().filter(|c| c.pass).count();
    out.push_str(&format!("{passed}/{} checks passed (seed {seed})\n", list.len()));
    Ok((out, passed == list.len()))
}

pub fn verify_cmd(args: &VerifyArgs) -> CliResult<()> {
    if !(args.grad_tol > 0.0) {
        return Err(CliError::usage("--grad-tol must be positive"));
    }
    let (report, ok) = verify_report(args.seed, args.grad_tol)?;
    print!("{report}");
    if ok {
        Ok(())
    } else {
        Err(CliError::Verify("see report".into()))
    }
}

#[derive(serde::Deserialize)]
struct RawKrausFile {
    d_in: usize,
    d_out: usize,
    kraus: Vec<Vec<[f64; 2]>>,
}

fn decode(rows: usize, cols: usize, pairs: &[[f64; 2]]) -> CliResult<ComplexMatrix> {
    if pairs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::usage("non-finite matrix entry"));
    }
    Ok(ComplexMatrix::from_vec(rows, cols, pairs.iter().map(|&[re, im]| C64::new(re, im)).collect())?)
}

/// Choi matrix of a channel file without enforcing CPTP, so the report can
/// describe invalid channels too.
fn load_choi(path: &Path) -> CliResult<ChoiMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if value.get("kraus").is_some() {
        let f: RawKrausFile = serde_json::from_value(value)?;
        let kraus = f.kraus.iter().map(|k| decode(f.d_out, f.d_in, k)).collect::<CliResult<Vec<_>>>()?;
        let ch = KrausChannel::with_tolerance(kraus, f64::MAX)?;
        if ch.d_in() != f.d_in || ch.d_out() != f.d_out {
            return Err(CliError::usage("declared and actual channel dims differ"));
        }
        Ok(kraus_to_choi(&ch))
    } else if value.get("choi").is_some() {
        let f: ChoiFile = serde_json::from_value(value)?;
        let n = f.d_in * f.d_out;
        let m = decode(n, n, &f.choi)?;
        Ok(ChoiMatrix::new_unchecked(f.d_in, f.d_out, HermitianMatrix::new(m)?)?)
    } else {
        Err(CliError::usage(format!("{} has neither \"kraus\" nor \"choi\"", path.display())))
    }
}

fn tidy(x: f64) -> f64 {
    (x * 1e6).round() / 1e6 + 0.0
}

pub fn channel_info_cmd(args: &ChannelInfoArgs) -> CliResult<()> {
    let psi = load_choi(&args.file)?;
    let report = validate_cptp(&psi, CPTP_TOL);
    println!("channel: d_in = {}, d_out = {}", psi.d_in(), psi.d_out());
    println!("CPTP: {}", if report.pass() { "pass" } else { "fail" });
    println!("  min Choi eigenvalue {:.3e}, trace-preservation deviation {:.3e}", report.min_eigenvalue, report.tp_deviation);
    let mut eig = eigvalsh(psi.matrix());
    eig.reverse();
    let shown: Vec<String> = eig.iter().map(|&l| format!("{:.6}", tidy(l))).collect();
    println!("Choi eigenvalues: {}", shown.join(", "));
    if !report.pass() {
        return Err(CliError::usage(format!("{} is not a CPTP map", args.file.display())));
    }
    if args.input.preset.is_some() || args.input.state.is_some() {
        let spec = state_from_flags(args.input.preset, &args.input.params, args.input.state.as_deref())?;
        let instance = build_instance(&spec.build()?)?;
        if instance.d_x() != psi.d_in() {
            return Err(CliError::usage(format!(
                "channel input dimension {} does not match d_x = {}",
                psi.d_in(),
                instance.d_x()
            )));
        }
        let e = instance.evaluate_choi(&psi)?;
        let (unit, scale) = if args.bits { ("bits", std::f64::consts::LN_2.recip()) } else { ("nats", 1.0) };
        println!("J_norm = {:.6}", tidy(e.j_norm));
        println!("R_norm = {:.6}", tidy(e.r_norm));
        println!("I(X~;Y) = {:.6} {unit}", e.i_xt_y * scale);
        println!("I(X';X~) = {:.6} {unit}", e.i_xp_xt * scale);
    }
    Ok(())
}
