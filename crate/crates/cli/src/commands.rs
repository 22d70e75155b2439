//! Command drivers. Exit-code contract: 0 when every enabled audit is
//! PASS or INCONCLUSIVE, 1 when any audit FAILs, 2 when the run or its
//! configuration cannot be executed at all.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};

use eprad_core::audits::{
    collapse_scaling_audit, energy_dissipation_audit, expansion_audit, hoelder_audit,
    inertia_identity_audit, AuditOutcome,
};
use eprad_core::diagnostics::{expansion_bounds, sample_record, BoundReport, DiagnosticsRecord};
use eprad_core::emden::{integrate_emden, EmdenState};
use eprad_core::solver::{init_scenario, run, Termination};

use crate::config::{parse_config, AuditKind, RunManifest};
use crate::report::{exit_code, fmt_float, run_report, sweep_report, CsvWriter, SweepRow};

/// Accuracy used by the boundary-ODE verb.
const EMDEN_TOL: f64 = 1e-10;
/// Sample count for the boundary-ODE CSV.
const EMDEN_SAMPLES: usize = 200;

fn ensure_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn load_manifest(config_path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("cannot read {}", config_path.display()))?;
    let name = config_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("run")
        .to_string();
    parse_config(&text, &name)
        .with_context(|| format!("{} rejected", config_path.display()))
}

/// Execute a manifest: stream the CSV, evaluate bounds and audits, write
/// the report. Returns the report body, outcomes, and the termination.
fn execute(
    manifest: &RunManifest,
    out_dir: &Path,
) -> Result<(String, Vec<AuditOutcome>, Termination, Option<BoundReport>)> {
    let mut csv = CsvWriter::create(&out_dir.join(manifest.csv_filename()))?;
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let mut sink_err: Option<anyhow::Error> = None;
    let outcome = run(&manifest.scenario, |rec| {
        if sink_err.is_none() {
            if let Err(e) = csv.write(rec) {
                sink_err = Some(e);
            }
            records.push(rec.clone());
        }
    })?;
    if let Some(e) = sink_err {
        return Err(e);
    }
    csv.finish()?;

    let termination = outcome.termination;
    let params = &manifest.scenario.params;

    // Bound values at the final sample, support volume anchored at t = 0.
    let bounds = match records.last() {
        Some(last) if last.mass > 0.0 => {
            Some(expansion_bounds(last, records[0].omega_volume, params)?)
        }
        _ => None,
    };

    let mut outcomes = Vec::new();
    if termination == Termination::Completed {
        for kind in &manifest.audits {
            let outcome = match kind {
                AuditKind::EnergyDissipation => energy_dissipation_audit(&records, params)?,
                AuditKind::InertiaIdentity => inertia_identity_audit(&records, params)?,
                AuditKind::Expansion => expansion_audit(&records, params)?,
                AuditKind::Hoelder => hoelder_audit(&records, params)?,
                AuditKind::CollapseScaling => {
                    collapse_scaling_audit(records[0].mass, params)?
                }
            };
            outcomes.push(outcome);
        }
    }

    let body = run_report(
        manifest,
        termination.reason(),
        &records,
        bounds.as_ref(),
        &outcomes,
    );
    fs::write(out_dir.join(manifest.report_filename()), &body)?;
    Ok((body, outcomes, termination, bounds))
}

pub fn cmd_run(config_path: &Path, out_dir: &Path) -> Result<i32> {
    ensure_out(out_dir)?;
    let manifest = load_manifest(config_path)?;
    let (body, outcomes, termination, _) = execute(&manifest, out_dir)?;
    print!("{body}");
    if termination != Termination::Completed {
        bail!("run {} did not complete: {}", manifest.name, termination.reason());
    }
    Ok(exit_code(&outcomes))
}

pub fn cmd_bounds(config_path: &Path) -> Result<i32> {
    let manifest = load_manifest(config_path)?;
    let state = init_scenario(&manifest.scenario)?;
    let record = sample_record(&state)?;
    println!("bounds {} (t = 0, no evolution)", manifest.name);
    print!("{}", manifest.echo());
    println!();
    println!("[bounds]");
    if record.mass > 0.0 {
        let b = expansion_bounds(&record, record.omega_volume, &manifest.scenario.params)?;
        let cell = |v: Option<f64>| v.map(fmt_float).unwrap_or_else(|| "absent".into());
        println!("bound_n3 = {}", cell(b.bound_n3));
        println!("bound_n2 = {}", cell(b.bound_n2));
        println!("bound_pressure = {}", cell(b.bound_pressure));
        println!("bound_damped = {}", cell(b.bound_damped));
        println!("hoelder_lhs = {}", fmt_float(b.hoelder_lhs));
        println!("hoelder_rhs = {}", fmt_float(b.hoelder_rhs));
        println!("omega_initial = {}", fmt_float(b.omega_initial));
    } else {
        println!("none = no bound applies (zero mass)");
    }
    Ok(0)
}

pub fn cmd_emden(r0: f64, mass: f64, dim: u32, t_end: f64, out_dir: &Path) -> Result<i32> {
    ensure_out(out_dir)?;
    let initial = EmdenState::new(r0, 0.0, mass, dim)?;
    let trajectory = integrate_emden(&initial, t_end, EMDEN_TOL)?;
    let path = out_dir.join("emden.csv");
    let mut text = String::from("t,R,Rdot\n");
    for i in 0..=EMDEN_SAMPLES {
        let t = t_end * i as f64 / EMDEN_SAMPLES as f64;
        let (r, r_dot) = trajectory.sample(t)?;
        text.push_str(&format!(
            "{},{},{}\n",
            fmt_float(t),
            fmt_float(r),
            fmt_float(r_dot)
        ));
    }
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    let end = trajectory.end();
    println!(
        "boundary ODE: R({t_end}) = {}, Rdot = {}, samples in {}",
        fmt_float(end.r),
        fmt_float(end.r_dot),
        path.display()
    );
    Ok(0)
}

pub fn cmd_sweep(config_dir: &Path, out_dir: &Path, workers: usize) -> Result<i32> {
    ensure_out(out_dir)?;
    let mut paths: Vec<PathBuf> = fs::read_dir(config_dir)
        .with_context(|| format!("cannot read {}", config_dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .toml configurations in {}", config_dir.display());
    }

    let slots: Vec<Mutex<Option<SweepRow>>> =
        paths.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = workers.max(1).min(paths.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= paths.len() {
                    break;
                }
                let row = sweep_row(&paths[i], out_dir);
                *slots[i].lock().expect("row slot") = Some(row);
            });
        }
    });
    let mut rows: Vec<SweepRow> = slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("row slot").expect("worker filled every slot"))
        .collect();

    let any_failure = rows.iter().any(|r| r.failed);
    let body = sweep_report(&mut rows);
    fs::write(out_dir.join("sweep.txt"), &body)?;
    print!("{body}");
    Ok(if any_failure { 1 } else { 0 })
}

/// Run one sweep entry; failures land in the row, never escape.
fn sweep_row(config_path: &Path, out_dir: &Path) -> SweepRow {
    let name = config_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("run")
        .to_string();
    let manifest = match load_manifest(config_path) {
        Ok(m) => m,
        Err(e) => {
            return SweepRow {
                name,
                key: None,
                status: format!("config-error: {e:#}").replace('\n', " "),
                verdicts: Vec::new(),
                bounds: None,
                failed: true,
            }
        }
    };
    let p = manifest.scenario.params;
    let key = Some((p.dim, p.gamma, p.k, p.beta));
    match execute(&manifest, out_dir) {
        Ok((_, outcomes, termination, bounds)) => {
            let completed = termination == Termination::Completed;
            let failed = !completed || exit_code(&outcomes) != 0;
            SweepRow {
                name,
                key,
                status: termination.reason().to_string(),
                verdicts: outcomes.iter().map(|o| (o.name, o.verdict)).collect(),
                bounds,
                failed,
            }
        }
        Err(e) => SweepRow {
            name,
            key,
            status: format!("run-error: {e:#}").replace('\n', " "),
            verdicts: Vec::new(),
            bounds: None,
            failed: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_rejects_missing_inputs() {
        let dir = std::env::temp_dir().join("eprad-empty-sweep-test");
        let _ = fs::create_dir_all(&dir);
        let err = cmd_sweep(&dir, &dir.join("out"), 2).unwrap_err();
        assert!(format!("{err:#}").contains("no .toml"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn emden_arguments_are_validated() {
        let dir = std::env::temp_dir().join("eprad-emden-arg-test");
        let err = cmd_emden(-1.0, 1.0, 2, 1.0, &dir).map(|_| ()).unwrap_err();
        assert!(format!("{err:#}").contains("radius"), "{err:#}");
        let _ = fs::remove_dir_all(&dir);
    }
}
