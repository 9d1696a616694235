//! The five verification campaigns and the run driver.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use halfspace_core::bubbles::ps_diagnostics;
use halfspace_core::energy::{energy_iinf, level_from_norm};
use halfspace_core::fractional::{lp_norm, norm_sq, restricted_norm_sq};
use halfspace_core::geometry::{build_domain, cutoff_error, test_function};
use halfspace_core::grid::save_field;
use halfspace_core::ground_state::{minimizing_sequence_check, solve_ground_state, write_trace_csv, GroundState};
use halfspace_core::minmax::{mountain_pass_solve_with, SolveOptions};
use halfspace_core::topology::{sphere_samples, sphere_scan, write_scan_csv};
use halfspace_core::{GridSpec, ProblemParams};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Campaign, Config};
use crate::HarnessError;

/// Cutoff errors must end below this fraction of the corresponding `φ` norm.
pub const CUTOFF_FINAL_FRACTION: f64 = 0.05;
/// `|‖Ψ_y‖² - M∞| / M∞` at the farthest schedule point.
pub const SEQUENCE_GAP: f64 = 0.02;
pub const SEQUENCE_CY_SLACK: f64 = 0.05;
/// Bound on `‖f_y‖_p` away from the hole and the boundary.
pub const PROBE_NORM_BOUNDS: (f64, f64) = (0.5, 1.5);

/// Result of one campaign as written to `<stem>.json`.
#[derive(Debug, Clone, Serialize)]
pub struct CampaignRecord {
    pub campaign: Campaign,
    pub passed: bool,
    pub failures: Vec<String>,
    pub data: Value,
}

pub struct Context {
    pub config: Config,
    pub spec: GridSpec,
    pub out: PathBuf,
    ground_state: Option<GroundState>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, HarnessError> {
    Ok(csv::Writer::from_path(path)?)
}

/// Integer degree, or `{"undefined": reason}`.
fn degree_value(d: &Result<i64, String>) -> Value {
    match d {
        Ok(k) => json!(k),
        Err(e) => json!({ "undefined": e }),
    }
}

/// Direction used to place probe centres off the hole: `e_1`.
fn offset(center: &[f64], distance: f64) -> Vec<f64> {
    let mut y = center.to_vec();
    y[0] += distance;
    y
}

impl Context {
    pub fn new(config: Config, out: PathBuf) -> Result<Self, HarnessError> {
        let spec = config.grid()?;
        std::fs::create_dir_all(&out)?;
        Ok(Self {
            config,
            spec,
            out,
            ground_state: None,
        })
    }

    fn ground_state(&mut self) -> Result<&GroundState, HarnessError> {
        if self.ground_state.is_none() {
            let gs = solve_ground_state(&self.config.params(), &self.spec, None)?;
            self.ground_state = Some(gs);
        }
        Ok(self.ground_state.as_ref().expect("just set"))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Runs one campaign; solver errors become a failed record.
    pub fn run_campaign(&mut self, campaign: Campaign) -> Result<CampaignRecord, HarnessError> {
        let start = Instant::now();
        let result = match campaign {
            Campaign::GroundState => self.ground_state_campaign(),
            Campaign::CutoffSweep => self.cutoff_campaign(),
            Campaign::MEquality => self.sequence_campaign(),
            Campaign::BarycenterScan => self.barycenter_campaign(),
            Campaign::Solve => self.solve_campaign(),
        };
        let (failures, data) = match result {
            Ok(v) => v,
            Err(HarnessError::Core(e)) => (vec![format!("error: {e}")], Value::Null),
            Err(e) => return Err(e),
        };
        let record = CampaignRecord {
            campaign,
            passed: failures.is_empty(),
            failures,
            data,
        };
        write_json(&self.path(&format!("{}.json", campaign.stem())), &record)?;
        write_json(
            &self.path(&format!("{}.timing.json", campaign.stem())),
            &json!({ "campaign": campaign, "seconds": start.elapsed().as_secs_f64() }),
        )?;
        Ok(record)
    }

    fn ground_state_campaign(&mut self) -> Result<(Vec<String>, Value), HarnessError> {
        let params = self.config.params();
        let phi_path = self.path("phi.frf");
        let trace_path = self.path("gs_trace.csv");
        let gs = self.ground_state()?.clone();
        save_field(&gs.phi, &phi_path)?;
        write_trace_csv(&gs.trace, BufWriter::new(File::create(&trace_path)?))?;
        let reduction = params.reduction();
        let b = norm_sq(&gs.phi, params.s, params.p, reduction)?;
        let t = (b.norm_sq / b.lp_p).powf(1.0 / (params.p - 2.0));
        let nehari_energy = energy_iinf(&gs.phi.scale(t), &params)?;
        let level = level_from_norm(gs.m_inf, params.p)?;
        let identity_gap = (nehari_energy - level).abs() / level;
        let mut failures = Vec::new();
        if !(gs.residual < params.tol_residual) {
            failures.push(format!("residual {:e} >= {:e}", gs.residual, params.tol_residual));
        }
        if !(identity_gap < 1e-8) {
            failures.push(format!("Nehari energy identity off by {identity_gap:e}"));
        }
        Ok((
            failures,
            json!({
                "M_inf": gs.m_inf,
                "residual": gs.residual,
                "iterations": gs.iterations,
                "level": level,
                "nehari_identity_gap": identity_gap,
                "min_phi": gs.phi.min(),
                "lp_norm": lp_norm(&gs.phi, params.p, reduction)?,
            }),
        ))
    }

    fn cutoff_campaign(&mut self) -> Result<(Vec<String>, Value), HarnessError> {
        let config = self.config.clone();
        let spec = self.spec;
        let phi = self.ground_state()?.phi.clone();
        let base = config.params();
        let reduction = base.reduction();
        let phi_lp = lp_norm(&phi, base.p, reduction)?;
        let phi_hs = norm_sq(&phi, base.s, base.p, reduction)?.norm_sq.sqrt();
        let mut rows = Vec::new();
        let mut sweep = |kind: &str, params: ProblemParams, y: Vec<f64>| -> Result<(), HarnessError> {
            let mask = build_domain(&spec, &params)?;
            let (lp, hs) = cutoff_error(&y, &phi, &params, &mask)?;
            rows.push(json!({
                "sweep": kind, "r": params.r, "rho": params.rho, "y": y,
                "lp_error": lp, "hs_error": hs,
                "lp_relative": lp / phi_lp, "hs_relative": hs / phi_hs,
            }));
            Ok(())
        };
        for &r in &config.problem.r_sweep {
            let params = config.params_at(r, config.problem.rho);
            let y = offset(&params.hole_center(), r / 2.0);
            sweep("r", params, y)?;
        }
        for &rho in &config.problem.rho_sweep {
            let params = config.params_at(config.problem.r, rho);
            let y = offset(&params.hole_center(), config.problem.r / 8.0);
            sweep("rho", params, y)?;
        }
        let mut csv = csv_writer(&self.path("cutoff.csv"))?;
        csv.write_record(["sweep", "r", "rho", "lp_error", "hs_error", "lp_relative", "hs_relative"])?;
        for row in &rows {
            csv.write_record([
                row["sweep"].as_str().unwrap_or_default().to_string(),
                row["r"].to_string(),
                row["rho"].to_string(),
                row["lp_error"].to_string(),
                row["hs_error"].to_string(),
                row["lp_relative"].to_string(),
                row["hs_relative"].to_string(),
            ])?;
        }
        csv.flush()?;
        let mut failures = Vec::new();
        for kind in ["r", "rho"] {
            let sel: Vec<&Value> = rows.iter().filter(|r| r["sweep"] == kind).collect();
            for key in ["lp_error", "hs_error"] {
                let vals: Vec<f64> = sel.iter().map(|r| r[key].as_f64().unwrap_or(f64::NAN)).collect();
                if !vals.windows(2).all(|w| w[1] < w[0]) {
                    failures.push(format!("{kind} sweep: {key} not decreasing: {vals:?}"));
                }
            }
            if let Some(last) = sel.last() {
                for key in ["lp_relative", "hs_relative"] {
                    let v = last[key].as_f64().unwrap_or(f64::NAN);
                    if !(v < CUTOFF_FINAL_FRACTION) {
                        failures.push(format!("{kind} sweep: final {key} {v:e} >= {CUTOFF_FINAL_FRACTION}"));
                    }
                }
            }
        }
        Ok((failures, json!({ "rows": rows, "phi_lp": phi_lp, "phi_norm": phi_hs })))
    }

    /// Centres `a_r + d (-e_1 + ½ e_N)` (`N = 2`) or `a_r + d e_1` (`N = 1`),
    /// `d = r/16 · {1, 2, 4, 8, 12}`.
    pub fn sequence_schedule(params: &ProblemParams) -> Vec<Vec<f64>> {
        let c = params.hole_center();
        [1.0, 2.0, 4.0, 8.0, 12.0]
            .iter()
            .map(|k| {
                let d = params.r / 16.0 * k;
                if c.len() == 1 {
                    vec![c[0] + d]
                } else {
                    vec![c[0] - d, c[1] + 0.5 * d]
                }
            })
            .collect()
    }

    fn sequence_campaign(&mut self) -> Result<(Vec<String>, Value), HarnessError> {
        let params = self.config.params();
        let spec = self.spec;
        let gs = self.ground_state()?.clone();
        let mask = build_domain(&spec, &params)?;
        let schedule = Self::sequence_schedule(&params);
        let rows = minimizing_sequence_check(&gs.phi, gs.m_inf, &mask, &params, &schedule)?;
        let mut csv = csv_writer(&self.path("m_equality.csv"))?;
        csv.write_record(["hole_distance", "norm_sq", "c_y", "relative_gap"])?;
        for r in &rows {
            csv.write_record([
                r.hole_distance.to_string(),
                r.norm_sq.to_string(),
                r.c_y.to_string(),
                r.relative_gap.to_string(),
            ])?;
        }
        csv.flush()?;
        let mut failures = Vec::new();
        let first = rows.first().expect("non-empty schedule");
        let last = rows.last().expect("non-empty schedule");
        if !(last.relative_gap.abs() < SEQUENCE_GAP) {
            failures.push(format!("last gap {:e} >= {SEQUENCE_GAP}", last.relative_gap));
        }
        if !((last.c_y - 1.0).abs() < SEQUENCE_CY_SLACK) {
            failures.push(format!("last c_y {} not within {SEQUENCE_CY_SLACK} of 1", last.c_y));
        }
        if !(first.norm_sq > last.norm_sq) {
            failures.push("first entry not above the last".into());
        }
        Ok((
            failures,
            json!({ "M_inf": gs.m_inf, "rows": rows, "last_gap": last.relative_gap }),
        ))
    }

    fn barycenter_campaign(&mut self) -> Result<(Vec<String>, Value), HarnessError> {
        let params = self.config.params();
        let spec = self.spec;
        let samples = self.config.solver.sphere_samples;
        let phi = self.ground_state()?.phi.clone();
        let mask = build_domain(&spec, &params)?;
        let scan = sphere_scan(&phi, &params, &mask, samples)?;
        write_scan_csv(&scan, BufWriter::new(File::create(self.path("sphere_scan.csv"))?))?;
        let center = params.hole_center();
        let mut raw = Vec::new();
        for y in sphere_samples(&center, params.r / 2.0, samples) {
            let tf = test_function(&y, &phi, &params, &mask)?;
            let qualifies = tf.y[params.dim - 1] >= params.r / 2.0;
            raw.push(json!({ "y": tf.y, "raw_lp": tf.raw_lp, "qualifies": qualifies }));
        }
        let probe_norms_ok = raw.iter().filter(|r| r["qualifies"] == true).all(|r| {
            let v = r["raw_lp"].as_f64().unwrap_or(f64::NAN);
            (PROBE_NORM_BOUNDS.0..=PROBE_NORM_BOUNDS.1).contains(&v)
        });
        let mut failures = Vec::new();
        if !scan.all_pairings_positive() {
            failures.push(format!("pairing <beta(Psi_y), y> reaches {:e}", scan.min_pairing));
        }
        match &scan.degree {
            Ok(1) => {}
            Ok(d) => failures.push(format!("degree at a_r is {d}, expected 1")),
            Err(e) => failures.push(format!("degree at a_r undefined: {e}")),
        }
        if !scan.homotopy_positive() {
            failures.push(format!("homotopy pairing reaches {:e}", scan.min_homotopy_pairing));
        }
        if !probe_norms_ok {
            failures.push("||f_y||_p outside [1/2, 3/2] at a qualifying probe".into());
        }
        Ok((
            failures,
            json!({
                "degree": degree_value(&scan.degree),
                "degree_about_hole": degree_value(&scan.degree_about_hole),
                "identity_degree": degree_value(&scan.identity_degree),
                "min_pairing": scan.min_pairing,
                "min_shifted_pairing": scan.min_shifted_pairing,
                "min_homotopy_pairing": scan.min_homotopy_pairing,
                "min_homotopy_distance": scan.min_homotopy_distance,
                "raw_lp": raw,
                "probe_norm_bounds_hold": probe_norms_ok,
                "rows": scan.rows,
            }),
        ))
    }

    fn solve_campaign(&mut self) -> Result<(Vec<String>, Value), HarnessError> {
        let params = self.config.params();
        let spec = self.spec;
        let solver = self.config.solver.clone();
        let phi = self.ground_state()?.phi.clone();
        let mask = build_domain(&spec, &params)?;
        let options = SolveOptions {
            constraint: solver.barycenter,
            snapshot_every: solver.snapshot_every,
            snapshot_dir: solver.dump_snapshots.then(|| self.path("snapshots")),
            family_spacing: solver.family_spacing,
        };
        let report = mountain_pass_solve_with(&params, &phi, &mask, &options)?;
        save_field(&report.u, self.path("solution.frf"))?;
        let mut trace = csv_writer(&self.path("solve_trace.csv"))?;
        trace.write_record(["iter", "energy"])?;
        for (i, e) in &report.energy_trace {
            trace.write_record([i.to_string(), e.to_string()])?;
        }
        trace.flush()?;
        let bubbles = if report.snapshots.len() >= 3 {
            serde_json::to_value(ps_diagnostics(&report.snapshots, &params)?)?
        } else {
            Value::Null
        };
        // Boundary probes on the sphere, bracketed by (c_r + M) / 2.
        let reduction = params.reduction();
        let mut probes = Vec::new();
        for y in sphere_samples(&params.hole_center(), params.r / 2.0, solver.sphere_samples) {
            let tf = test_function(&y, &phi, &params, &mask)?;
            let n = restricted_norm_sq(&tf.psi, &mask, params.s, params.p, reduction)?.norm_sq;
            probes.push(n);
        }
        let m = report.m;
        let bracket = 0.5 * (report.c_r + m);
        // Only meaningful against a feasible, converged c_r.
        let probes_bracketed = report.cr_converged && probes.iter().all(|&n| m < n && n < bracket);
        let mut failures = Vec::new();
        if !report.accepted() {
            failures.push(format!(
                "status {:?}: residual {:e}, quotient {} (window {} .. {})",
                report.status, report.residual_rel, report.quotient, report.window.lower_norm, report.window.upper_norm
            ));
        }
        let mut data = serde_json::to_value(&report)?;
        if let Value::Object(map) = &mut data {
            map.remove("wall_time");
            if let Some(bounds) = map.remove("window") {
                map.insert("window_bounds".into(), bounds);
            }
            map.insert("window".into(), json!(report.in_norm_window));
            map.insert(
                "family_below_upper".into(),
                json!(report.family.max_norm_sq < report.window.upper_norm),
            );
            map.insert("accepted".into(), json!(report.accepted()));
            map.insert("c_r_margin".into(), json!(report.c_r - m));
            map.insert("probe_norms".into(), json!(probes));
            map.insert("probes_bracketed".into(), json!(probes_bracketed));
            map.insert("bubbles".into(), bubbles);
        }
        Ok((failures, data))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub campaigns: Vec<Campaign>,
    pub config: Config,
}

/// Runs the selected campaigns in order and writes `run.json`.
pub fn run(config: Config, selection: &[Campaign], out: &Path) -> Result<Vec<CampaignRecord>, HarnessError> {
    let mut ctx = Context::new(config.clone(), out.to_path_buf())?;
    write_json(
        &out.join("run.json"),
        &RunManifest {
            campaigns: selection.to_vec(),
            config,
        },
    )?;
    let mut records = Vec::new();
    for &c in selection {
        let record = ctx.run_campaign(c)?;
        let mut stdout = std::io::stdout().lock();
        writeln!(
            stdout,
            "{:<16} {}",
            c.name(),
            if record.passed { "pass" } else { "FAIL" }
        )?;
        for f in &record.failures {
            writeln!(stdout, "    {f}")?;
        }
        records.push(record);
    }
    Ok(records)
}
