//! The five subcommands. Each writes into one output directory and finishes
//! by rewriting `manifest.json`, which lists every other file there with its
//! SHA-256.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::diagnostics::{
    self as diag, num, DiagnosticsError, DiagnosticsReport, FlowRun, ReportRow, Verdict, VerdictSummary,
};
use crate::field::ScalarField;
use crate::grid::GridSpec;
use crate::initial::{beta, default_horizon, omega0, omega0n, perturbation_lambda, ConstructionParams, Omega0Shape, Perturbation};
use crate::lagrangian::{axis_defects, matrix, sign_preservation};
use crate::norms::{gradient_lp_norm, lp_norm, sup_norm};
use crate::snapshot::Snapshot;
use crate::solver::evolve;

pub const MANIFEST: &str = "manifest.json";

/// A failed stage and the underlying error.
#[derive(Debug, Error)]
#[error("{stage} failed: {message}")]
pub struct RunError {
    pub stage: String,
    pub message: String,
}

impl RunError {
    pub fn new(stage: impl Into<String>, err: impl Display) -> Self {
        Self {
            stage: stage.into(),
            message: err.to_string(),
        }
    }
}

fn at<E: Display>(stage: &str) -> impl FnOnce(E) -> RunError + '_ {
    move |e| RunError::new(stage, e)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

/// The output directory of one invocation.
pub struct Output {
    root: PathBuf,
}

impl Output {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, RunError> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(at("output"))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(at("output"))?;
        }
        std::fs::write(&path, bytes).map_err(|e| RunError::new("output", format!("{}: {e}", path.display())))
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).map_err(at("output"))?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Hash every file under the root except the manifest and write the manifest.
    pub fn write_manifest(&self) -> Result<Manifest, RunError> {
        let mut files = Vec::new();
        collect_files(&self.root, &self.root, &mut files).map_err(at("manifest"))?;
        files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest { files };
        self.write_json(MANIFEST, &manifest)?;
        Ok(manifest)
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<ManifestEntry>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
            continue;
        }
        let rel = path
            .strip_prefix(root)
            .expect("walked from root")
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if rel == MANIFEST {
            continue;
        }
        let bytes = std::fs::read(&path)?;
        out.push(ManifestEntry {
            path: rel,
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    Ok(())
}

fn field_norms(f: &ScalarField, p: f64) -> Result<serde_json::Value, RunError> {
    Ok(json!({
        "Lp": lp_norm(f, p).map_err(at("synth"))?,
        "W1p_seminorm": gradient_lp_norm(f, p).map_err(at("synth"))?,
        "sup": sup_norm(f),
    }))
}

fn params_json(c: &ConstructionParams, grid: &GridSpec) -> serde_json::Value {
    json!({
        "M": c.amplitude,
        "N": c.scale_count,
        "N0": c.first_scale,
        "p": c.exponent,
        "n_pert": c.perturbation,
        "x_star": c.x_star,
        "T_horizon": c.horizon,
        "L": grid.side_length(),
        "n": grid.n(),
    })
}

/// `synth`: `ω₀`, `β` and `ω_{0,n}` as VIL1 snapshots plus their norms.
pub fn synth(cfg: &ExperimentConfig, out: &Output) -> Result<Manifest, RunError> {
    let grid = cfg.grid_spec();
    let c = &cfg.construction;
    let w0 = omega0(&Omega0Shape::from(c), grid).map_err(at("synth"))?;
    let pert = Perturbation {
        index: c.perturbation,
        exponent: c.exponent,
        x_star: c.x_star,
    };
    let b = beta(&pert, grid).map_err(at("synth"))?;
    let wn = omega0n(&w0, &b).map_err(at("synth"))?;
    let mut norms = serde_json::Map::new();
    for (name, f) in [("omega0", &w0), ("beta", &b), ("omega0n", &wn)] {
        norms.insert(name.to_string(), field_norms(f, c.exponent)?);
        out.write(&format!("{name}.vil"), &Snapshot::scalar(0.0, f.clone()).to_bytes())?;
    }
    let o = &norms["omega0"];
    let constant = (o["Lp"].as_f64().unwrap_or(0.0) + o["W1p_seminorm"].as_f64().unwrap_or(0.0)) * c.amplitude.powi(2);
    out.write_json(
        "synth.json",
        &json!({
            "params": params_json(c, &grid),
            "norms": norms,
            "C": constant,
        }),
    )?;
    out.write_manifest()
}

/// `evolve`: the base run, every stored snapshot and the conserved-quantity series.
pub fn run_evolve(cfg: &ExperimentConfig, out: &Output) -> Result<Manifest, RunError> {
    let grid = cfg.grid_spec();
    let c = &cfg.construction;
    let w0 = omega0(&Omega0Shape::from(c), grid).map_err(at("evolve"))?;
    let traj = evolve(&w0, c.horizon, &cfg.solver).map_err(at("evolve"))?;
    if let Some(why) = &traj.aborted {
        return Err(RunError::new("evolve", why));
    }
    for (i, (t, w)) in traj.snapshots.iter().enumerate() {
        out.write(&format!("snapshots/omega_{i:04}.vil"), &Snapshot::scalar(*t, w.clone()).to_bytes())?;
    }
    let series = diag::conservation_series(&traj).map_err(at("evolve"))?;
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["t", "name", "value"]).map_err(at("evolve"))?;
    for (t, name, v) in &series {
        csv.write_record([num(*t), name.clone(), num(*v)]).map_err(at("evolve"))?;
    }
    out.write("conservation.csv", &csv.into_inner().map_err(at("evolve"))?)?;
    let kp = diag::kato_ponce_series(&traj, c.exponent).map_err(at("evolve"))?;
    out.write_json(
        "evolve.json",
        &json!({
            "params": params_json(c, &grid),
            "steps": traj.steps,
            "dt": traj.dt,
            "snapshots": traj.times(),
            "W1p_omega": kp.iter().map(|s| s.1).collect::<Vec<_>>(),
            "K": kp.iter().map(|s| s.1).fold(0.0, f64::max),
        }),
    )?;
    out.write_manifest()
}

/// `flow`: the tracked base run; one CSV row per seed and frame, and a summary.
pub fn run_flow(cfg: &ExperimentConfig, out: &Output) -> Result<Manifest, RunError> {
    let grid = cfg.grid_spec();
    let c = &cfg.construction;
    let run = FlowRun::run(c, grid, &cfg.solver, &cfg.seeds, c.horizon).map_err(at("flow"))?;
    let mut group_of = vec![""; run.ensemble.len()];
    for (name, r) in run.plan.groups() {
        for g in &mut group_of[r.clone()] {
            *g = name;
        }
    }
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record([
        "t", "group", "x1", "x2", "eta1", "eta2", "d11", "d12", "d21", "d22", "det", "lambda_integral",
    ])
    .map_err(at("flow"))?;
    let seeds = run.ensemble.seeds();
    for s in &run.states {
        for (k, x) in seeds.iter().enumerate() {
            let e = s.positions[k];
            let d = s.jacobians[k];
            csv.write_record([
                num(s.t),
                group_of[k].to_string(),
                num(x[0]),
                num(x[1]),
                num(e[0]),
                num(e[1]),
                num(d[0][0]),
                num(d[0][1]),
                num(d[1][0]),
                num(d[1][1]),
                num(matrix::det(&d)),
                num(s.lambda_integrals[k]),
            ])
            .map_err(at("flow"))?;
        }
    }
    out.write("flow_seeds.csv", &csv.into_inner().map_err(at("flow"))?)?;
    out.write_json(
        "flow.json",
        &json!({
            "params": params_json(c, &grid),
            "convention": diag::NORM_CONVENTION,
            "seeds": run.ensemble.len(),
            "frames": run.frames,
            "max_jacobian": run.ensemble.max_jacobian(),
            "axis_defects": axis_defects(&run.ensemble),
            "sign_preservation": sign_preservation(&run.ensemble, 1e-8),
            "escaped": run.ensemble.escaped_count(),
        }),
    )?;
    out.write_manifest()
}

fn absorb(report: &mut DiagnosticsReport, check: &str, result: Result<Vec<ReportRow>, DiagnosticsError>) -> Result<(), RunError> {
    match result {
        Ok(rows) => report.extend(rows),
        Err(DiagnosticsError::Refused(why)) => report.extend([ReportRow::new(check, "refused", f64::NAN, "")
            .verdict(Verdict::Skipped)
            .note(why)]),
        Err(e) => return Err(RunError::new(format!("verify/{check}"), e)),
    }
    Ok(())
}

const FLOW_CHECKS: [&str; 7] = [
    "conservation",
    "kato_ponce",
    "flow_structure",
    "riesz_bound",
    "lambda_chain",
    "sector_ratio",
    "norm_inflation",
];

/// Run the selected checks and collect their rows, sorted.
pub fn diagnostics_report(cfg: &ExperimentConfig) -> Result<DiagnosticsReport, RunError> {
    let mut report = DiagnosticsReport::new();
    let d = &cfg.diagnostics;
    let c = &cfg.construction;
    let grid = cfg.grid_spec();
    let spec = |g: crate::config::GridConfig| g.spec().expect("validated at load");
    let r = &mut report;

    if cfg.selects("initial_norms") {
        let rows = diag::initial_norms(spec(d.norms_grid), c.first_scale, &d.norms_m, &d.norms_n, &d.norms_p);
        absorb(r, "initial_norms", rows)?;
    }
    if cfg.selects("beta_bounds") {
        absorb(r, "beta_bounds", diag::beta_bounds(grid, c.exponent, d.beta_center, &d.n_pert))?;
    }
    if cfg.selects("cos2_constant") {
        let pairs: Vec<(f64, f64)> = d.cos2_pairs.iter().map(|p| (p[0], p[1])).collect();
        r.extend(diag::cos2_rows(&pairs));
    }
    if cfg.selects("comparison") {
        absorb(r, "comparison", diag::comparison_linearity(&d.comparison_amplitudes))?;
    }
    if cfg.selects("lambda_oracle") {
        absorb(r, "lambda_oracle", diag::lambda_oracle_rows(&Omega0Shape::from(c), spec(d.oracle_grid)))?;
    }
    if cfg.selects("gradient_growth") || cfg.selects("kato_ponce") {
        growth_and_resolution(cfg, r)?;
    }
    if FLOW_CHECKS.iter().any(|k| cfg.selects(k)) {
        let run = match FlowRun::run(c, grid, &cfg.solver, &cfg.seeds, c.horizon) {
            Ok(run) => run,
            Err(DiagnosticsError::Refused(why)) => {
                for k in FLOW_CHECKS.iter().filter(|k| cfg.selects(k)) {
                    absorb(r, k, Err(DiagnosticsError::Refused(why.clone())))?;
                }
                report.sort();
                return Ok(report);
            }
            Err(e) => return Err(RunError::new("verify/base run", e)),
        };
        if cfg.selects("conservation") {
            absorb(r, "conservation", diag::conservation_report(&run.traj, true))?;
        }
        if cfg.selects("kato_ponce") {
            absorb(r, "kato_ponce", diag::kato_ponce_monitor(&run.traj, c.exponent))?;
        }
        if cfg.selects("flow_structure") {
            absorb(r, "flow_structure", diag::flow_structure(&run))?;
        }
        if cfg.selects("riesz_bound") {
            absorb(r, "riesz_bound", diag::riesz_bound(&run))?;
        }
        if cfg.selects("lambda_chain") {
            absorb(r, "lambda_chain", diag::lambda_chain(&run))?;
        }
        if cfg.selects("sector_ratio") {
            r.extend(diag::sector_ratio(&run));
        }
        if cfg.selects("norm_inflation") {
            absorb(r, "norm_inflation", inflation_rows(cfg, &run))?;
        }
    }
    report.sort();
    Ok(report)
}

fn inflation_rows(cfg: &ExperimentConfig, run: &FlowRun) -> Result<Vec<ReportRow>, DiagnosticsError> {
    let d = &cfg.diagnostics;
    let choice = choose_x_star(cfg, run, &d.n_pert)?;
    let (cases, skipped) = diag::inflation_cases(run, choice.x_star, &d.n_pert, &cfg.solver)?;
    let mut rows = diag::norm_inflation(run, &choice, &cases, &skipped)?;
    rows.extend(diag::beta_eta_products(run, &choice, &cases));
    Ok(rows)
}

fn choose_x_star(cfg: &ExperimentConfig, run: &FlowRun, ns: &[u32]) -> Result<diag::XStarChoice, DiagnosticsError> {
    match cfg.diagnostics.x_star {
        Some(x) => diag::manual_x_star(run, x, cfg.construction.delta),
        None => {
            let n_min = ns.iter().copied().min().unwrap_or(1);
            diag::select_x_star(run, perturbation_lambda(n_min))
                .ok_or_else(|| DiagnosticsError::Refused("no admissible first-quadrant seed for x*".into()))
        }
    }
}

/// The growth sweep over `N`; the run at `kato_ponce_n` doubles as the fine
/// half of the Kato–Ponce resolution check.
fn growth_and_resolution(cfg: &ExperimentConfig, report: &mut DiagnosticsReport) -> Result<(), RunError> {
    let d = &cfg.diagnostics;
    let c = &cfg.construction;
    let fine = d.growth_grid.spec().expect("validated at load");
    let coarse = GridSpec::new(fine.side_length(), d.kato_ponce_coarse).expect("validated at load");
    let shape = Omega0Shape {
        scale_count: d.kato_ponce_n,
        ..Omega0Shape::from(c)
    };
    let want_kp = cfg.selects("kato_ponce");
    let mut kp_row: Option<Result<ReportRow, DiagnosticsError>> = None;
    let resolution = |fine_traj: &crate::solver::Trajectory| -> Result<ReportRow, DiagnosticsError> {
        let w = omega0(&shape, coarse)?;
        let coarse_traj = evolve(&w, c.horizon, &cfg.solver)?;
        diag::kato_ponce_resolution(fine_traj, &coarse_traj, c.exponent)
    };
    if cfg.selects("gradient_growth") {
        let rows = diag::gradient_growth(c, fine, &cfg.solver, &cfg.seeds, &d.growth_n, &mut |n, traj| {
            if want_kp && n == d.kato_ponce_n {
                kp_row = Some(resolution(traj));
            }
            Ok(())
        });
        absorb(report, "gradient_growth", rows)?;
    }
    if want_kp {
        let row = match kp_row {
            Some(row) => row,
            None => omega0(&shape, fine)
                .map_err(DiagnosticsError::from)
                .and_then(|w| Ok(evolve(&w, c.horizon, &cfg.solver)?))
                .and_then(|t| resolution(&t)),
        };
        absorb(report, "kato_ponce", row.map(|r| vec![r]))?;
    }
    Ok(())
}

/// `verify`: `report.csv`, `verdicts.json` and the manifest. The summary's
/// `passed` is false iff some row is violated.
pub fn run_verify(cfg: &ExperimentConfig, out: &Output) -> Result<(VerdictSummary, Manifest), RunError> {
    let report = diagnostics_report(cfg)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(at("verify"))?;
    out.write("report.csv", &buf)?;
    let summary = report.summary();
    out.write_json("verdicts.json", &json!({ "checks": cfg.checks, "summary": summary }))?;
    let manifest = out.write_manifest()?;
    Ok((summary, manifest))
}

/// One row of the sweep CSV.
#[derive(Debug, Clone, Default)]
struct SweepRow {
    m: f64,
    big_n: u32,
    p: f64,
    n: u32,
    status: &'static str,
    x_star: [f64; 2],
    values: [f64; 8],
    note: String,
}

const SWEEP_HEADER: [&str; 17] = [
    "M",
    "N",
    "p",
    "T_horizon",
    "n_pert",
    "status",
    "x_star1",
    "x_star2",
    "data_w1p",
    "beta_w1p",
    "solution_w1p",
    "ratio",
    "theta",
    "witness",
    "first_product",
    "second_product",
    "note",
];

/// `sweep`: one base run per `(M, N, p)` and one inflation row per `n_pert`,
/// all in `sweep.csv`. Cells that cannot run are kept as `skipped` rows.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Output) -> Result<Manifest, RunError> {
    let s = &cfg.sweep;
    let grid = cfg.grid_spec();
    let mut ns = s.n_pert.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(SWEEP_HEADER).map_err(at("sweep"))?;
    for &m in &s.amplitudes {
        for &big_n in &s.scale_counts {
            for &p in &s.p {
                let params = ConstructionParams {
                    amplitude: m,
                    scale_count: big_n,
                    exponent: p,
                    horizon: default_horizon(m),
                    ..cfg.construction
                };
                let stage = format!("sweep/M={m};N={big_n};p={p}");
                let base = SweepRow {
                    m,
                    big_n,
                    p,
                    ..Default::default()
                };
                let rows = match sweep_cell(cfg, &params, grid, &ns) {
                    Ok(rows) => rows,
                    Err(DiagnosticsError::Refused(why)) => skipped_cell(&base, &ns, why),
                    Err(DiagnosticsError::Construction(e)) => skipped_cell(&base, &ns, e.to_string()),
                    Err(e) => return Err(RunError::new(stage, e)),
                };
                for row in rows {
                    let mut rec = vec![
                        num(row.m),
                        row.big_n.to_string(),
                        num(row.p),
                        num(params.horizon),
                        row.n.to_string(),
                        row.status.to_string(),
                        num(row.x_star[0]),
                        num(row.x_star[1]),
                    ];
                    rec.extend(row.values.iter().map(|v| num(*v)));
                    rec.push(row.note);
                    csv.write_record(&rec).map_err(at("sweep"))?;
                }
            }
        }
    }
    out.write("sweep.csv", &csv.into_inner().map_err(at("sweep"))?)?;
    out.write_manifest()
}

fn skipped_cell(base: &SweepRow, ns: &[u32], why: String) -> Vec<SweepRow> {
    ns.iter()
        .map(|&n| SweepRow {
            n,
            status: "skipped",
            x_star: [f64::NAN; 2],
            values: [f64::NAN; 8],
            note: why.clone(),
            ..base.clone()
        })
        .collect()
}

fn sweep_cell(cfg: &ExperimentConfig, params: &ConstructionParams, grid: GridSpec, ns: &[u32]) -> Result<Vec<SweepRow>, DiagnosticsError> {
    let base = SweepRow {
        m: params.amplitude,
        big_n: params.scale_count,
        p: params.exponent,
        ..Default::default()
    };
    let shape = Omega0Shape::from(params);
    // resolvability of ω₀ alone; the perturbation index is swept separately
    omega0(&shape, grid)?;
    let run = FlowRun::run(
        &ConstructionParams {
            perturbation: ns[0],
            ..*params
        },
        grid,
        &cfg.solver,
        &cfg.seeds,
        params.horizon,
    )?;
    let choice = choose_x_star(cfg, &run, ns)?;
    let (cases, skipped) = diag::inflation_cases(&run, choice.x_star, ns, &cfg.solver)?;
    let mut rows = Vec::new();
    for &n in ns {
        if let Some(c) = cases.iter().find(|c| c.n == n) {
            rows.push(SweepRow {
                n,
                status: "ok",
                x_star: choice.x_star,
                values: [
                    c.data_w1p,
                    c.beta_w1p,
                    c.solution_w1p,
                    c.ratio,
                    c.theta,
                    c.witness,
                    c.first_product,
                    c.second_product,
                ],
                note: String::new(),
                ..base.clone()
            });
        } else {
            let why = skipped
                .iter()
                .find(|s| s.0 == n)
                .map(|s| s.1.clone())
                .unwrap_or_default();
            rows.push(SweepRow {
                n,
                status: "skipped",
                x_star: choice.x_star,
                values: [f64::NAN; 8],
                note: why,
                ..base.clone()
            });
        }
    }
    Ok(rows)
}

/// Print a one-line summary of `summary` to `w`.
pub fn print_summary(mut w: impl std::io::Write, summary: &VerdictSummary) -> std::io::Result<()> {
    writeln!(
        w,
        "{} rows: {} holds, {} violated, {} monitored, {} skipped",
        summary.rows, summary.holds, summary.violated, summary.monitored, summary.skipped
    )?;
    for c in &summary.violated_checks {
        writeln!(w, "violated: {c}")?;
    }
    Ok(())
}

/// Checks that would be run by `verify` with this configuration.
pub fn selected_checks(cfg: &ExperimentConfig) -> Vec<&'static str> {
    crate::config::CHECK_NAMES.iter().copied().filter(|c| cfg.selects(c)).collect()
}
