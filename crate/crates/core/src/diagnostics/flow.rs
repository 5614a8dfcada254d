//! Checks built on a tracked base run: flow structure, the Riesz bound, the
//! `Λ(t, 0)` chain and the sector ratio, plus the gradient-growth sweep.

use std::f64::consts::PI;
use std::ops::Range;

use serde::Serialize;

use super::{DiagnosticsError, Params, ReportRow, Verdict};
use crate::field::ScalarField;
use crate::grid::GridSpec;
use crate::initial::{omega0, ConstructionError, ConstructionParams, Omega0Shape};
use crate::lagrangian::seeds::{self, RaySeeds, SeedLayout, SeedPlan};
use crate::lagrangian::{
    axis_defects, duhamel_split, fd_jacobian_check, forward_map_from_labels, inverse_pullback, matrix,
    ray_reconstruct, sign_preservation, FlowEnsemble, ForwardMap, Mat2, TrajectorySource,
};
use crate::norms::sup_norm;
use crate::quadrature::AdaptiveCubature;
use crate::sample::{sample, Interpolation};
use crate::solver::{evolve, evolve_with, SolverConfig, Trajectory};
use crate::spectral::{biot_savart, riesz, riesz_all, riesz_at, Axis};

pub const DET_TOL: f64 = 1e-6;
pub const AXIS_TOL: f64 = 1e-8;
pub const SIGN_TOL: f64 = 1e-8;
pub const DUHAMEL_TOL: f64 = 1e-5;
pub const DET_A_TOL: f64 = 1e-8;
pub const RAY_TOL: f64 = 1e-5;
pub const FD_TOL: f64 = 0.05;
pub const PULLBACK_TOL: f64 = 1e-2;
pub const ROUTE_TOL: f64 = 1e-2;
pub const CHAIN_TOL: f64 = 1e-3;
pub const ORACLE_TOL: f64 = 1e-4;
pub const SAMPLE_TOL: f64 = 1e-6;
pub const RIESZ_SUM_TOL: f64 = 1e-12;
/// Sector seeds with `η₂` at or below this are left out of the ratio.
pub const SECTOR_FLOOR: f64 = 1e-12;
/// Values below this fraction of the maximum count as outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

/// The three evaluations of `−Λ(t, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaChain {
    /// `−R₁₂ω(t, 0)` by Fourier evaluation.
    pub full: f64,
    /// `(1/π) Σ η₁η₂/|η|⁴ ω₀(x) h²` over first-quadrant support nodes.
    pub quadrant: f64,
    /// The same sum restricted to nodes inside the sector.
    pub sector: f64,
    /// Smallest summand of the quadrant sum, before the `h²/π` factor.
    pub min_integrand: f64,
}

/// Per-time summaries of the base run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowFrame {
    pub t: f64,
    pub max_jacobian: f64,
    /// `C_t`, the running maximum of `‖Dη‖_∞` up to `t`.
    pub running_max_jacobian: f64,
    pub max_abs_lambda_integral: f64,
    pub lambda: Option<LambdaChain>,
    /// `min` and `max` of `η₁/η₂` over sector seeds.
    pub sector_ratio: Option<[f64; 2]>,
    pub sector_excluded: usize,
}

/// Base solver run with labels, the tracked seed ensemble and per-time frames.
/// Positions, Jacobians and `∫Λ` of every seed at one time.
#[derive(Debug, Clone)]
pub struct SeedState {
    pub t: f64,
    pub positions: Vec<[f64; 2]>,
    pub jacobians: Vec<Mat2>,
    pub lambda_integrals: Vec<f64>,
}

pub struct FlowRun {
    pub params: ConstructionParams,
    pub shape: Omega0Shape,
    pub omega0: ScalarField,
    pub traj: Trajectory,
    pub plan: SeedPlan,
    pub rays: Vec<(RaySeeds, Range<usize>)>,
    pub ensemble: FlowEnsemble,
    pub frames: Vec<FlowFrame>,
    /// Per-seed state at every frame.
    pub states: Vec<SeedState>,
    /// Forward map at the uniform seeds recovered from the advected labels.
    pub labels: Option<ForwardMap>,
    pub margin: f64,
    pub fd_spacing: f64,
}

fn chain(ensemble: &FlowEnsemble, shape: &Omega0Shape, w: &ScalarField, plan: &SeedPlan) -> Result<Option<LambdaChain>, DiagnosticsError> {
    let Some(q) = plan.group("quadrant") else {
        return Ok(None);
    };
    let h2 = w.grid().cell_area();
    let term = |k: usize| {
        let e = ensemble.positions()[k];
        let r2 = e[0] * e[0] + e[1] * e[1];
        e[0] * e[1] / (r2 * r2) * shape.value_at(ensemble.seeds()[k])
    };
    let mut quadrant = 0.0;
    let mut sector = 0.0;
    let mut min_integrand = f64::INFINITY;
    for k in q {
        let v = term(k);
        quadrant += v;
        min_integrand = min_integrand.min(v);
        if seeds::in_sector(ensemble.seeds()[k]) {
            sector += v;
        }
    }
    let full = -riesz_at(w, Axis::X1, Axis::X2, &[[0.0, 0.0]])?[0];
    Ok(Some(LambdaChain {
        full,
        quadrant: quadrant * h2 / PI,
        sector: sector * h2 / PI,
        min_integrand,
    }))
}

fn sector_stats(ensemble: &FlowEnsemble, plan: &SeedPlan) -> (Option<[f64; 2]>, usize) {
    let Some(r) = plan.group("sector") else {
        return (None, 0);
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut excluded = 0;
    for p in &ensemble.positions()[r] {
        if p[1] <= SECTOR_FLOOR {
            excluded += 1;
            continue;
        }
        let q = p[0] / p[1];
        lo = lo.min(q);
        hi = hi.max(q);
    }
    (lo.is_finite().then_some([lo, hi]), excluded)
}

impl FlowRun {
    /// Evolve `ω₀` to `horizon` with labels and track the seed layout,
    /// stopping the ensemble at every stored snapshot.
    pub fn run(
        params: &ConstructionParams,
        grid: GridSpec,
        solver: &SolverConfig,
        layout: &SeedLayout,
        horizon: f64,
    ) -> Result<Self, DiagnosticsError> {
        params.validate(&grid)?;
        let shape = Omega0Shape::from(params);
        let w0 = omega0(&shape, grid)?;
        let traj = evolve_with(&w0, horizon, solver, true, |_, _| {})?;
        if let Some(why) = &traj.aborted {
            return Err(DiagnosticsError::Refused(format!("base run aborted: {why}")));
        }
        let mut plan = SeedPlan::new();
        plan.push("origin", seeds::origin());
        plan.push("axes", seeds::axes(layout.axis_count, layout.uniform_radius));
        plan.push("uniform", seeds::uniform(&grid, layout.uniform_radius, layout.uniform_per_side));
        if layout.quadrant {
            plan.push("quadrant", seeds::quadrant(&w0));
        }
        if layout.sector {
            plan.push("sector", seeds::sector(&w0));
        }
        let mut rays = Vec::new();
        if layout.ray_nodes > 0 {
            for (i, &x) in layout.rays.iter().enumerate() {
                let ray = RaySeeds::new(x, layout.ray_nodes);
                let r = plan.push(&format!("ray{i}"), ray.points());
                rays.push((ray, r));
            }
        }
        let fd_spacing = layout.fd_offset as f64 * grid.spacing();
        if !layout.fd_centers.is_empty() && layout.fd_offset > 0 {
            plan.push("fd", seeds::fd_stencils(&layout.fd_centers, fd_spacing));
        }
        let margin = 0.25 * grid.side_length();
        let mut ensemble = FlowEnsemble::new(plan.points().to_vec()).with_margin(margin);
        let mut src = TrajectorySource::new(&traj)?;
        let mut frames = Vec::with_capacity(traj.snapshots.len());
        let mut states = Vec::with_capacity(traj.snapshots.len());
        for (i, (t, w)) in traj.snapshots.iter().enumerate() {
            if i > 0 {
                ensemble.evolve(&mut src, *t, traj.dt)?;
            }
            let (record_max, lam_int) = match ensemble.history().last() {
                Some(r) => (r.max_jacobian, r.max_abs_lambda_integral),
                None => (1.0, 0.0),
            };
            states.push(SeedState {
                t: *t,
                positions: ensemble.positions().to_vec(),
                jacobians: ensemble.jacobians().to_vec(),
                lambda_integrals: ensemble.lambda_integrals().to_vec(),
            });
            let (sector_ratio, sector_excluded) = sector_stats(&ensemble, &plan);
            frames.push(FlowFrame {
                t: *t,
                max_jacobian: record_max,
                running_max_jacobian: ensemble.max_jacobian(),
                max_abs_lambda_integral: lam_int,
                lambda: chain(&ensemble, &shape, w, &plan)?,
                sector_ratio,
                sector_excluded,
            });
        }
        let labels = match (&traj.labels, plan.group("uniform")) {
            (Some(l), Some(r)) => Some(forward_map_from_labels(
                l.last().expect("labels stored"),
                &plan.points()[r],
                Interpolation::Lagrange(crate::lagrangian::DEFAULT_PARTICLE_ORDER),
            )?),
            _ => None,
        };
        Ok(Self {
            params: *params,
            shape,
            omega0: w0,
            traj,
            plan,
            rays,
            ensemble,
            frames,
            states,
            labels,
            margin,
            fd_spacing,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.traj.terminal().0
    }

    fn params_tag(&self) -> Params {
        let p = &self.params;
        let g = self.traj.grid();
        Params::new()
            .with("M", p.amplitude)
            .with("N", p.scale_count)
            .with("p", p.exponent)
            .with("L", g.side_length())
            .with("n", g.n())
    }
}

/// Structure of the tracked flow at the horizon.
pub fn flow_structure(run: &FlowRun) -> Result<Vec<ReportRow>, DiagnosticsError> {
    let e = &run.ensemble;
    let t = run.horizon();
    let params = run.params_tag();
    let row = |q: &str, v: f64, anchor: &str| ReportRow::new("flow_structure", q, v, anchor).params(&params).at(t);
    let mut rows = Vec::new();

    let det = e.history().iter().map(|r| r.max_det_defect).fold(0.0, f64::max);
    rows.push(row("max |det D eta - 1|", det, "flow maps are volume-preserving").tolerance(DET_TOL).assert(det <= DET_TOL));

    let ax = axis_defects(e);
    rows.push(
        row("axis1 defect", ax.axis1, "both coordinate axes are invariant under the flow")
            .tolerance(AXIS_TOL)
            .assert(ax.axis1 <= AXIS_TOL && ax.axis_seeds > 0),
    );
    rows.push(
        row("axis2 defect", ax.axis2, "both coordinate axes are invariant under the flow")
            .tolerance(AXIS_TOL)
            .assert(ax.axis2 <= AXIS_TOL && ax.axis_seeds > 0),
    );
    rows.push(
        row("stagnation defect", ax.stagnation, "the origin is a hyperbolic stagnation point")
            .tolerance(AXIS_TOL)
            .assert(ax.stagnation <= AXIS_TOL && ax.origin_seeds > 0),
    );

    let sign = sign_preservation(e, SIGN_TOL);
    rows.push(
        row("sign preservation fraction", sign.fraction, "the flow is sign-preserving on the first quadrant")
            .reference(1.0)
            .assert(sign.fraction == 1.0)
            .note(format!("{} seeds, most negative coordinate {}", sign.seeds, sign.worst)),
    );

    rows.push(
        row("escaped seeds", e.escaped_count() as f64, "supports stay away from the box boundary")
            .reference(0.0)
            .assert(e.escaped_count() == 0)
            .note(format!("margin |x_i| <= {}", run.margin)),
    );

    let split = duhamel_split(e)?;
    rows.push(
        row("Duhamel residual", split.residual, "Duhamel decomposition D eta = A + B")
            .tolerance(DUHAMEL_TOL)
            .assert(split.residual <= DUHAMEL_TOL),
    );
    rows.push(
        row("max |det A - 1|", split.det_a_defect, "Duhamel decomposition D eta = A + B")
            .tolerance(DET_A_TOL)
            .assert(split.det_a_defect <= DET_A_TOL),
    );
    for (ray, range) in &run.rays {
        let x = ray.endpoint;
        let tag = Params::new().with("x", format!("({} {})", x[0], x[1])).with("nodes", ray.nodes.len());
        let r = ray_reconstruct(e, &split, ray, range.clone(), run.margin)?;
        let rel = r.residual / x[0].hypot(x[1]);
        rows.push(
            ReportRow::new("flow_structure", "ray residual / |x|", rel, "eta(t,x) - eta(t,0) as a ray integral of D eta")
                .params(&tag)
                .at(t)
                .tolerance(RAY_TOL)
                .assert(rel <= RAY_TOL)
                .note(format!("A part ({} {}), B part ({} {})", r.a_tilde[0], r.a_tilde[1], r.b_tilde[0], r.b_tilde[1])),
        );
    }

    if let Some(fd) = run.plan.group("fd") {
        let c = fd_jacobian_check(e, fd, run.fd_spacing)?;
        rows.push(
            row("Jacobian ODE vs finite differences", c.max_relative, "Jacobian ODE obtained by differentiating the flow")
                .tolerance(FD_TOL)
                .assert(c.max_relative <= FD_TOL)
                .note(format!("{} stencils, spacing {}", c.centers, run.fd_spacing)),
        );
    }

    if let Some(u) = run.plan.group("uniform") {
        let w_t = &run.traj.terminal().1;
        let d = inverse_pullback(w_t, &run.omega0, e, u.clone(), Interpolation::Fourier);
        rows.push(
            row("pullback defect", d, "conservation of vorticity along trajectories")
                .tolerance(PULLBACK_TOL)
                .assert(d <= PULLBACK_TOL),
        );
        if let Some(map) = &run.labels {
            let (mut dp, mut dj) = (0.0f64, 0.0f64);
            for (k, i) in u.enumerate() {
                let a = map.positions[k];
                let b = e.positions()[i];
                dp = dp.max((a[0] - b[0]).abs().max((a[1] - b[1]).abs()));
                let dd = matrix::sub(&map.jacobians[k], &e.jacobians()[i]);
                dj = dj.max(matrix::max_entry(&dd) / matrix::max_entry(&e.jacobians()[i]));
            }
            rows.push(
                row("label vs particle D eta", dj, "flow map from particles and from advected labels agree")
                    .tolerance(ROUTE_TOL)
                    .assert(dj <= ROUTE_TOL)
                    .note(format!("max position difference {dp}")),
            );
        }
    }

    let lam = e.lambda_integrals().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    rows.push(
        row("max |int Lambda|", lam, "stretching integral compared with log(2M)")
            .reference((2.0 * run.params.amplitude).ln())
            .note("bound derived only under the contradiction hypothesis; not asserted"),
    );
    let row_sum = e.history().iter().map(|r| r.max_row_sum).fold(1.0, f64::max);
    rows.push(
        row("C_T", e.max_jacobian(), "gradient growth sup |D eta| > M")
            .reference(run.params.amplitude)
            .note(format!("largest entry convention; row-sum norm {row_sum}")),
    );
    Ok(rows)
}

/// `sup_{s≤t} max(‖R₁₁ω‖_∞, ‖R₂₂ω‖_∞)` against `(5/4 + t C_t)^{(p−2)/p} C_t M⁻²`,
/// plus the support-radius bound and `R₁₁ω + R₂₂ω = ω` at every snapshot.
pub fn riesz_bound(run: &FlowRun) -> Result<Vec<ReportRow>, DiagnosticsError> {
    const ANCHOR: &str = "sup norm of the double Riesz transforms of the vorticity";
    const ANCHOR_R: &str = "vorticity support grows at most linearly in time";
    let params = run.params_tag();
    let p = run.params.exponent;
    let m = run.params.amplitude;
    let mut rows = Vec::new();
    let mut lhs = 0.0f64;
    let mut max_speed = 0.0f64;
    for ((t, w), frame) in run.traj.snapshots.iter().zip(&run.frames) {
        let [r11, r22, _] = riesz_all(w)?;
        lhs = lhs.max(sup_norm(&r11)).max(sup_norm(&r22));
        let ct = frame.running_max_jacobian;
        let rhs = (1.25 + t * ct).powf((p - 2.0) / p) * ct / (m * m);
        let row = |q: &str, v: f64, anchor: &str| ReportRow::new("riesz_bound", q, v, anchor).params(&params).at(*t);
        rows.push(row("sup R_ii omega", lhs, ANCHOR).reference(rhs));
        rows.push(row("ratio to bound with constant 1", lhs / rhs, ANCHOR).note("the implicit constant is absorbed here"));

        let scale = w.grid_max_abs();
        let sum = r11.add(&r22)?.sub(w)?.grid_max_abs() / scale.max(f64::MIN_POSITIVE);
        rows.push(row("R11 + R22 - omega", sum, ANCHOR).tolerance(RIESZ_SUM_TOL).assert(sum <= RIESZ_SUM_TOL));

        max_speed = max_speed.max(biot_savart(w)?.grid_max_norm());
        let radius = support_radius(w);
        let bound = 1.25 + t * max_speed;
        rows.push(
            row("support radius", radius, ANCHOR_R)
                .reference(bound)
                .assert(radius <= bound)
                .note(format!("|omega| above {SUPPORT_THRESHOLD} of its max; bound 5/4 + t sup|u|")),
        );
    }
    Ok(rows)
}

/// Largest `|x|` over nodes where `|w|` exceeds [`SUPPORT_THRESHOLD`] times its max.
pub fn support_radius(w: &ScalarField) -> f64 {
    let cut = SUPPORT_THRESHOLD * w.grid_max_abs();
    let g = w.grid();
    w.values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > cut)
        .map(|(i, _)| {
            let p = g.position(i);
            p[0].hypot(p[1])
        })
        .fold(0.0, f64::max)
}

/// Ordering `full ≥ quadrant ≥ sector` at every frame, nonnegativity of the
/// integrand at `t = 0`, and the value at the origin against sampling the
/// materialized `R₁₂ω₀` field.
pub fn lambda_chain(run: &FlowRun) -> Result<Vec<ReportRow>, DiagnosticsError> {
    const ANCHOR: &str = "lower-bound chain for -Lambda(t,0): full plane >= first quadrant >= sector";
    let params = run.params_tag();
    let mut rows = Vec::new();
    for f in &run.frames {
        let Some(c) = f.lambda else { continue };
        let row = |q: &str, v: f64| ReportRow::new("lambda_chain", q, v, ANCHOR).params(&params).at(f.t);
        rows.push(row("full", c.full));
        rows.push(row("quadrant", c.quadrant));
        rows.push(row("sector", c.sector));
        let a = (c.full - c.quadrant) / c.full.abs();
        let b = (c.quadrant - c.sector) / c.quadrant.abs();
        rows.push(row("(full - quadrant)/|full|", a).tolerance(CHAIN_TOL).assert(a >= -CHAIN_TOL));
        rows.push(row("(quadrant - sector)/|quadrant|", b).tolerance(CHAIN_TOL).assert(b >= -CHAIN_TOL));
        rows.push(row("full / quadrant", c.full / c.quadrant).reference(4.0).note("odd symmetry gives 4"));
        let r = row("min quadrant integrand", c.min_integrand);
        rows.push(if f.t == 0.0 { r.reference(0.0).assert(c.min_integrand >= 0.0) } else { r });
    }
    if let Some(c) = run.frames.first().and_then(|f| f.lambda) {
        let field = riesz(&run.omega0, Axis::X1, Axis::X2)?;
        let sampled = -sample(&field, &[[0.0, 0.0]])[0];
        let d = (sampled - c.full).abs() / c.full.abs();
        rows.push(
            ReportRow::new("lambda_chain", "full vs sampled R12 at origin", d, ANCHOR)
                .params(&params)
                .at(0.0)
                .reference(sampled)
                .tolerance(SAMPLE_TOL)
                .assert(d <= SAMPLE_TOL)
                .note("trigonometric interpolant of the R12 field"),
        );
    }
    Ok(rows)
}

/// `(1/π) ∫ x₁x₂/|x|⁴ ω₀(x) dx` by adaptive cubature over the bump boxes of
/// the first quadrant, times four.
pub fn lambda_oracle(shape: &Omega0Shape) -> f64 {
    let rule = AdaptiveCubature::new(8, 1e-13, 14);
    let mut total = 0.0;
    for k in shape.scales() {
        let c = 2f64.powi(-(k as i32));
        let r = 0.25 * c;
        let f = |x1: f64, x2: f64| {
            let r2 = x1 * x1 + x2 * x2;
            x1 * x2 / (r2 * r2) * shape.value_at([x1, x2])
        };
        total += rule.integrate(f, [c - r, c - r], [c + r, c + r]).value;
    }
    4.0 * total / PI
}

/// `−R₁₂ω₀(0)` on `grid` against [`lambda_oracle`].
pub fn lambda_oracle_rows(shape: &Omega0Shape, grid: GridSpec) -> Result<Vec<ReportRow>, DiagnosticsError> {
    const ANCHOR: &str = "-Lambda(0,0) = (1/pi) int x1 x2 |x|^-4 omega0 dx";
    let oracle = lambda_oracle(shape);
    let params = Params::new()
        .with("M", shape.amplitude)
        .with("N", shape.scale_count)
        .with("p", shape.exponent)
        .with("L", grid.side_length())
        .with("n", grid.n());
    let w = omega0(shape, grid)?;
    let full = -riesz_at(&w, Axis::X1, Axis::X2, &[[0.0, 0.0]])?[0];
    drop(w);
    let d = (full - oracle).abs() / oracle.abs();
    Ok(vec![
        ReportRow::new("lambda_oracle", "full at t=0", full, ANCHOR).params(&params).at(0.0).reference(oracle),
        ReportRow::new("lambda_oracle", "relative error vs cubature", d, ANCHOR)
            .params(&params)
            .at(0.0)
            .tolerance(ORACLE_TOL)
            .assert(d <= ORACLE_TOL),
    ])
}

/// `min` and `max` of `η₁/η₂` over sector seeds per frame.
pub fn sector_ratio(run: &FlowRun) -> Vec<ReportRow> {
    const ANCHOR: &str = "M^-2 <~ eta1/eta2 <~ M^2 on the sector";
    let params = run.params_tag();
    let m = run.params.amplitude;
    let cutoff = m.powi(-3) / (2.0 * 5f64.sqrt());
    let (lo_bound, hi_bound) = (0.1 / (m * m), 10.0 * m * m);
    let mut rows = vec![ReportRow::new("sector_ratio", "time cutoff M^-3/(2 sqrt 5)", cutoff, ANCHOR).params(&params)];
    for f in &run.frames {
        let Some([lo, hi]) = f.sector_ratio else { continue };
        let note = if f.t > cutoff { "beyond the time cutoff" } else { "" };
        let row = |q: &str, v: f64| ReportRow::new("sector_ratio", q, v, ANCHOR).params(&params).at(f.t).note(note);
        if f.t == 0.0 {
            rows.push(row("min ratio at t=0", lo).reference(0.5).assert(lo >= 0.5));
            rows.push(row("max ratio at t=0", hi).reference(2.0).assert(hi <= 2.0));
        }
        rows.push(row("min ratio", lo).reference(lo_bound).assert(lo >= lo_bound));
        rows.push(row("max ratio", hi).reference(hi_bound).assert(hi <= hi_bound));
        rows.push(row("excluded seeds", f.sector_excluded as f64));
    }
    rows
}

/// `max ‖Dη‖_∞` over the uniform seeds for each `N`, with the fraction of
/// consecutive resolvable pairs where it increases (at least 80%).
/// `inspect` sees every base trajectory once it is complete.
pub fn gradient_growth(
    params: &ConstructionParams,
    grid: GridSpec,
    solver: &SolverConfig,
    layout: &SeedLayout,
    scale_counts: &[u32],
    inspect: &mut dyn FnMut(u32, &Trajectory) -> Result<(), DiagnosticsError>,
) -> Result<Vec<ReportRow>, DiagnosticsError> {
    const ANCHOR: &str = "gradient growth sup |D eta| > M for large N";
    let horizon = params.horizon;
    let mut rows = Vec::new();
    let mut finals: Vec<(u32, f64)> = Vec::new();
    for &n in scale_counts {
        let shape = Omega0Shape {
            scale_count: n,
            ..Omega0Shape::from(params)
        };
        let tag = Params::new()
            .with("M", params.amplitude)
            .with("N", n)
            .with("p", params.exponent)
            .with("L", grid.side_length())
            .with("n", grid.n());
        let w0 = match omega0(&shape, grid) {
            Ok(w) => w,
            Err(e @ ConstructionError::Unresolvable { .. }) => {
                rows.push(
                    ReportRow::new("gradient_growth", "max |D eta|", f64::NAN, ANCHOR)
                        .params(&tag)
                        .at(horizon)
                        .verdict(Verdict::Skipped)
                        .note(e.to_string()),
                );
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let traj = evolve(&w0, horizon, solver)?;
        drop(w0);
        let mut e = FlowEnsemble::new(seeds::uniform(&grid, layout.uniform_radius, layout.uniform_per_side));
        e.evolve(&mut TrajectorySource::new(&traj)?, horizon, traj.dt)?;
        inspect(n, &traj)?;
        for r in e.history() {
            rows.push(ReportRow::new("gradient_growth", "max |D eta|", r.max_jacobian, ANCHOR).params(&tag).at(r.t));
        }
        finals.push((n, e.history().last().map_or(1.0, |r| r.max_jacobian)));
    }
    let pairs: Vec<bool> = finals
        .windows(2)
        .filter(|w| w[1].0 == w[0].0 + 1)
        .map(|w| w[1].1 > w[0].1)
        .collect();
    if !pairs.is_empty() {
        let frac = pairs.iter().filter(|&&b| b).count() as f64 / pairs.len() as f64;
        rows.push(
            ReportRow::new("gradient_growth", "fraction of increasing N pairs", frac, ANCHOR)
                .params(&Params::new().with("M", params.amplitude).with("pairs", pairs.len()))
                .at(horizon)
                .reference(0.8)
                .assert(frac >= 0.8)
                .note("absolute claim > M is only monitored"),
        );
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_is_positive_and_stable() {
        let shape = Omega0Shape {
            amplitude: 3.0,
            scale_count: 1,
            first_scale: 1,
            exponent: 2.5,
        };
        let a = lambda_oracle(&shape);
        assert!(a > 0.0);
        // the first-quadrant bumps carry positive vorticity
        assert!(shape.value_at([0.5, 0.5]) > 0.0);
    }
}
