//! Artifact writers: the diagnostics CSV, the per-run report (human text
//! plus a machine-readable key=value block), and the sweep aggregate.
//! Formatting is fixed — 17 significant digits for floats, canonical row
//! order — so identical inputs give byte-identical artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use eprad_core::audits::{AuditOutcome, Verdict};
use eprad_core::diagnostics::{BoundReport, DiagnosticsRecord};

use crate::config::RunManifest;

pub const CSV_HEADER: &str =
    "t,M,E,H,Hddot_integral,R_support,omega_volume,potential_energy,kinetic_dissipation,max_rho,max_dVdr";

/// Fixed float formatting: 17 significant digits, scientific.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row(rec: &DiagnosticsRecord) -> String {
    let hddot = rec.hddot_integral.map(fmt_float).unwrap_or_default();
    format!(
        "{},{},{},{},{hddot},{},{},{},{},{},{}",
        fmt_float(rec.t),
        fmt_float(rec.mass),
        fmt_float(rec.energy),
        fmt_float(rec.second_inertia),
        fmt_float(rec.support_radius),
        fmt_float(rec.omega_volume),
        fmt_float(rec.potential_energy),
        fmt_float(rec.kinetic_dissipation),
        fmt_float(rec.max_rho),
        fmt_float(rec.max_dvdr),
    )
}

/// Incremental CSV writer used as the run sink.
pub struct CsvWriter {
    inner: BufWriter<fs::File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        let mut inner = BufWriter::new(file);
        writeln!(inner, "{CSV_HEADER}")?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        writeln!(self.inner, "{}", csv_row(rec))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

fn bound_cell(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_else(|| "absent".into())
}

fn push_bounds(out: &mut String, bounds: &BoundReport) {
    let _ = writeln!(out, "bound_n3 = {}", bound_cell(bounds.bound_n3));
    let _ = writeln!(out, "bound_n2 = {}", bound_cell(bounds.bound_n2));
    let _ = writeln!(out, "bound_pressure = {}", bound_cell(bounds.bound_pressure));
    let _ = writeln!(out, "bound_damped = {}", bound_cell(bounds.bound_damped));
    let _ = writeln!(out, "ratio_linear = {}", bound_cell(bounds.ratio_linear));
    let _ = writeln!(out, "ratio_sqrt = {}", bound_cell(bounds.ratio_sqrt));
    let _ = writeln!(out, "hoelder_lhs = {}", fmt_float(bounds.hoelder_lhs));
    let _ = writeln!(out, "hoelder_rhs = {}", fmt_float(bounds.hoelder_rhs));
    let _ = writeln!(out, "omega_initial = {}", fmt_float(bounds.omega_initial));
    let _ = writeln!(out, "omega_instant = {}", fmt_float(bounds.omega_instant));
}

/// Exit code implied by a set of audit outcomes: 0 unless something FAILed.
pub fn exit_code(outcomes: &[AuditOutcome]) -> i32 {
    if outcomes.iter().any(|o| o.verdict == Verdict::Fail) {
        1
    } else {
        0
    }
}

/// Render the per-run report: manifest echo, outcome, bound values at the
/// final sample, one verdict line per audit, machine block. Thresholds are
/// quoted by the audits themselves, never restated here.
pub fn run_report(
    manifest: &RunManifest,
    termination: &str,
    records: &[DiagnosticsRecord],
    bounds: Option<&BoundReport>,
    outcomes: &[AuditOutcome],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run {}", manifest.name);
    let _ = writeln!(out, "{}", "=".repeat(4 + manifest.name.len()));
    let _ = writeln!(out);
    out.push_str(&manifest.echo());
    let _ = writeln!(out);
    let _ = writeln!(out, "[outcome]");
    let _ = writeln!(out, "termination = {termination}");
    let _ = writeln!(out, "records = {}", records.len());
    if let Some(last) = records.last() {
        let _ = writeln!(out, "final_time = {}", last.t);
        let _ = writeln!(out, "final_mass = {}", fmt_float(last.mass));
        let _ = writeln!(out, "final_energy = {}", fmt_float(last.energy));
        let _ = writeln!(out, "final_support_radius = {}", fmt_float(last.support_radius));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[bounds]");
    match bounds {
        Some(b) => push_bounds(&mut out, b),
        None => {
            let _ = writeln!(out, "none = no bound applies (zero mass)");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[audits]");
    if outcomes.is_empty() {
        if termination == "completed" {
            let _ = writeln!(out, "(none enabled)");
        } else {
            let _ = writeln!(out, "(not evaluated: the run did not complete)");
        }
    }
    for o in outcomes {
        let _ = writeln!(out, "{}", o.line());
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[machine]");
    let _ = writeln!(out, "name={}", manifest.name);
    let p = &manifest.scenario.params;
    let _ = writeln!(out, "dim={}", p.dim);
    let _ = writeln!(out, "gamma={}", fmt_float(p.gamma));
    let _ = writeln!(out, "k={}", fmt_float(p.k));
    let _ = writeln!(out, "beta={}", fmt_float(p.beta));
    let _ = writeln!(out, "termination={termination}");
    let _ = writeln!(out, "records={}", records.len());
    for o in outcomes {
        let _ = writeln!(out, "audit.{}={}", o.name, o.verdict);
    }
    if let Some(b) = bounds {
        for (key, v) in [
            ("bound_n3", b.bound_n3),
            ("bound_n2", b.bound_n2),
            ("bound_pressure", b.bound_pressure),
            ("bound_damped", b.bound_damped),
            ("ratio_linear", b.ratio_linear),
            ("ratio_sqrt", b.ratio_sqrt),
        ] {
            if let Some(v) = v {
                let _ = writeln!(out, "bound.{key}={}", fmt_float(v));
            }
        }
    }
    let effective_exit =
        if termination == "completed" { exit_code(outcomes) } else { 2 };
    let _ = writeln!(out, "exit={effective_exit}");
    out
}

/// One sweep row: either a finished run or a recorded failure.
#[derive(Debug)]
pub struct SweepRow {
    pub name: String,
    /// (dim, gamma, k, beta) when the manifest parsed.
    pub key: Option<(u32, f64, f64, f64)>,
    /// Termination reason, or the error that stopped the row.
    pub status: String,
    /// (audit name, verdict) in canonical order.
    pub verdicts: Vec<(&'static str, Verdict)>,
    pub bounds: Option<BoundReport>,
    /// True when the row contributes a FAIL or an error to the sweep.
    pub failed: bool,
}

/// Render the aggregate table, rows sorted by (dim, gamma, k, beta, name).
pub fn sweep_report(rows: &mut Vec<SweepRow>) -> String {
    rows.sort_by(|a, b| {
        let ka = a.key.unwrap_or((0, 0.0, 0.0, 0.0));
        let kb = b.key.unwrap_or((0, 0.0, 0.0, 0.0));
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.total_cmp(&kb.2))
            .then(ka.3.total_cmp(&kb.3))
            .then(a.name.cmp(&b.name))
    });
    let mut out = String::new();
    let _ = writeln!(out, "sweep aggregate ({} rows)", rows.len());
    let _ = writeln!(
        out,
        "name | dim | gamma | k | beta | status | {} | bound_n3 | bound_n2 | bound_pressure | bound_damped",
        crate::config::AuditKind::ALL.map(|k| k.name()).join(" | ")
    );
    for row in rows.iter() {
        let (dim, gamma, k, beta) = match row.key {
            Some((d, g, k, b)) => {
                (d.to_string(), g.to_string(), k.to_string(), b.to_string())
            }
            None => ("-".into(), "-".into(), "-".into(), "-".into()),
        };
        let mut verdict_cells = Vec::new();
        for kind in crate::config::AuditKind::ALL {
            let cell = row
                .verdicts
                .iter()
                .find(|(n, _)| *n == kind.name())
                .map(|(_, v)| v.to_string())
                .unwrap_or_else(|| "-".into());
            verdict_cells.push(cell);
        }
        let b = |v: Option<f64>| match v {
            Some(x) => fmt_float(x),
            None => "-".into(),
        };
        let (b3, b2, bp, bd) = match &row.bounds {
            Some(r) => {
                (b(r.bound_n3), b(r.bound_n2), b(r.bound_pressure), b(r.bound_damped))
            }
            None => ("-".into(), "-".into(), "-".into(), "-".into()),
        };
        let _ = writeln!(
            out,
            "{} | {dim} | {gamma} | {k} | {beta} | {} | {} | {b3} | {b2} | {bp} | {bd}",
            row.name,
            row.status,
            verdict_cells.join(" | "),
        );
    }
    out
}
