use super::{DiagnosticsError, Params, ReportRow};
use crate::field::parity_defect;
use crate::norms::{lp_norm, sobolev_norm, sup_norm};
use crate::solver::Trajectory;
use crate::spectral::biot_savart;

const CHECK: &str = "conservation";
const ANCHOR: &str = "vorticity transport conserves rearrangement-invariant norms and energy";
const ANCHOR_PARITY: &str = "odd symmetry of the initial vorticity is retained for all time";
const ANCHOR_KP: &str = "Kato-Ponce: W^{1,p} norm of the vorticity stays bounded on [0, T]";

/// Lebesgue exponents whose norms are tracked.
pub const TRACKED_EXPONENTS: [f64; 3] = [2.0, 2.5, 3.0];

pub const SUP_DRIFT_TOL: f64 = 1e-3;
pub const LP_DRIFT_TOL: f64 = 1e-3;
pub const ENERGY_DRIFT_TOL: f64 = 1e-6;
pub const PARITY_TOL: f64 = 1e-8;
pub const FRAME_TOL: f64 = 1e-10;

/// Width of the outer frame watched for boundary contamination, as a fraction of `L`.
pub const FRAME_FRACTION: f64 = 0.1;

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        (a - b).abs()
    } else {
        (a - b).abs() / b
    }
}

/// Raw values per snapshot, as `(t, name, value)` triples for the series CSV.
pub fn conservation_series(traj: &Trajectory) -> Result<Vec<(f64, String, f64)>, DiagnosticsError> {
    let mut out = Vec::new();
    for (t, w) in &traj.snapshots {
        out.push((*t, "sup".to_string(), sup_norm(w)));
        for p in TRACKED_EXPONENTS {
            out.push((*t, format!("L{p}"), lp_norm(w, p)?));
        }
        let u = biot_savart(w)?;
        let energy = lp_norm(u.u1(), 2.0)?.powi(2) + lp_norm(u.u2(), 2.0)?.powi(2);
        out.push((*t, "energy".to_string(), energy));
        let par = parity_defect(w);
        out.push((*t, "odd1_defect".to_string(), par.odd1));
        out.push((*t, "odd2_defect".to_string(), par.odd2));
        out.push((*t, "frame_max".to_string(), w.frame_max_abs(FRAME_FRACTION)));
    }
    Ok(out)
}

/// Drift of the conserved quantities relative to `t = 0`, and parity and
/// boundary-frame defects, asserted at every snapshot. `odd` selects whether
/// the data are odd-odd (otherwise parity is only monitored).
pub fn conservation_report(traj: &Trajectory, odd: bool) -> Result<Vec<ReportRow>, DiagnosticsError> {
    let series = conservation_series(traj)?;
    let initial = |name: &str| {
        series
            .iter()
            .find(|(t, n, _)| *t == 0.0 && n == name)
            .map(|s| s.2)
            .unwrap_or(0.0)
    };
    let params = Params::new().with("n", traj.grid().n()).with("L", traj.grid().side_length());
    let mut rows = Vec::new();
    for (t, name, v) in &series {
        let row = |q: &str, measured: f64, anchor: &str| {
            ReportRow::new(CHECK, q, measured, anchor).params(&params).at(*t)
        };
        match name.as_str() {
            "sup" => {
                let d = rel(*v, initial("sup"));
                rows.push(
                    row("sup drift", d, ANCHOR)
                        .tolerance(SUP_DRIFT_TOL)
                        .assert(d <= SUP_DRIFT_TOL),
                );
            }
            "energy" => {
                let d = rel(*v, initial("energy"));
                rows.push(
                    row("energy drift", d, ANCHOR)
                        .tolerance(ENERGY_DRIFT_TOL)
                        .assert(d <= ENERGY_DRIFT_TOL),
                );
            }
            "odd1_defect" | "odd2_defect" => {
                let r = row(name, *v, ANCHOR_PARITY).tolerance(PARITY_TOL);
                rows.push(if odd { r.assert(*v <= PARITY_TOL) } else { r });
            }
            "frame_max" => {
                rows.push(
                    row("boundary frame max", *v, ANCHOR)
                        .tolerance(FRAME_TOL)
                        .assert(*v <= FRAME_TOL)
                        .note("sup |omega| on the outer 10% frame of the box"),
                );
            }
            lp => {
                let d = rel(*v, initial(lp));
                rows.push(
                    row(&format!("{lp} drift"), d, ANCHOR)
                        .tolerance(LP_DRIFT_TOL)
                        .assert(d <= LP_DRIFT_TOL),
                );
            }
        }
    }
    Ok(rows)
}

/// `‖ω(t)‖_{W^{1,p}}` per snapshot and `K`, its maximum (monitored).
pub fn kato_ponce_series(traj: &Trajectory, p: f64) -> Result<Vec<(f64, f64)>, DiagnosticsError> {
    traj.snapshots
        .iter()
        .map(|(t, w)| Ok((*t, sobolev_norm(w, p)?)))
        .collect()
}

pub fn kato_ponce_monitor(traj: &Trajectory, p: f64) -> Result<Vec<ReportRow>, DiagnosticsError> {
    let params = Params::new().with("n", traj.grid().n()).with("L", traj.grid().side_length()).with("p", p);
    let series = kato_ponce_series(traj, p)?;
    let mut rows: Vec<ReportRow> = series
        .iter()
        .map(|(t, v)| ReportRow::new("kato_ponce", "W1p omega", *v, ANCHOR_KP).params(&params).at(*t))
        .collect();
    let k = series.iter().map(|s| s.1).fold(0.0, f64::max);
    rows.push(ReportRow::new("kato_ponce", "K", k, ANCHOR_KP).params(&params));
    Ok(rows)
}

/// `K` on a grid and on the grid with half the resolution; they must agree to 5%.
pub fn kato_ponce_resolution(fine: &Trajectory, coarse: &Trajectory, p: f64) -> Result<ReportRow, DiagnosticsError> {
    let k = |tr: &Trajectory| -> Result<f64, DiagnosticsError> {
        Ok(kato_ponce_series(tr, p)?.iter().map(|s| s.1).fold(0.0, f64::max))
    };
    let (kf, kc) = (k(fine)?, k(coarse)?);
    let d = rel(kc, kf);
    Ok(ReportRow::new("kato_ponce", "K change on halved grid", d, ANCHOR_KP)
        .params(
            &Params::new()
                .with("L", fine.grid().side_length())
                .with("n", format!("{}/{}", fine.grid().n(), coarse.grid().n()))
                .with("p", p),
        )
        .reference(kf)
        .tolerance(0.05)
        .assert(d <= 0.05)
        .note(format!("K fine = {kf}, K coarse = {kc}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::Verdict;
    use crate::field::ScalarField;
    use crate::grid::GridSpec;
    use crate::solver::{evolve, SolverConfig};

    #[test]
    fn taylor_green_is_flat() {
        let g = GridSpec::two_pi(64).unwrap();
        let w = ScalarField::from_fn(g, |x, y| x.sin() * y.sin());
        let tr = evolve(&w, 0.05, &SolverConfig::default()).unwrap();
        let rows = conservation_report(&tr, true).unwrap();
        // the frame of a periodic Taylor-Green field is not quiet; everything else holds
        assert!(rows
            .iter()
            .filter(|r| r.quantity != "boundary frame max")
            .all(|r| r.verdict == Verdict::Holds));
        let kp = kato_ponce_series(&tr, 2.5).unwrap();
        assert!(kp.iter().all(|(_, v)| (v / kp[0].1 - 1.0).abs() < 1e-8));
    }
}
