//! Continuous checks of the analytic machinery against a sampled run:
//! energy accounting, the inertia second-derivative identity, expansion
//! lower bounds, mass concentration, and the small-width scaling of the
//! potential term. Every tolerance lives in [`tolerances`].

use crate::diagnostics::{collapse_indicator, expansion_bounds, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::params::PhysicsParams;

/// Every numeric slack used by the audits, pinned in one place.
pub mod tolerances {
    /// Per-sample slack on energy monotonicity, relative to |E(0)|: a
    /// flow may report E increasing by at most this much between
    /// consecutive samples before the audit fails.
    pub const ENERGY_MONOTONE_SLACK: f64 = 1e-4;
    /// Allowed relative end-to-start drift |E(t_end) - E(0)| / |E(0)|
    /// for undamped flows. The flux dissipation of the startup transient
    /// sets the scale; it shrinks with resolution.
    pub const ENERGY_CONSERVATION_REL: f64 = 1e-3;
    /// Allowed relative mismatch between the observed energy drop of a
    /// damped flow and the time integral of its kinetic dissipation rate.
    pub const ENERGY_BUDGET_REL: f64 = 0.05;
    /// Allowed relative spread of the record spacing (the identity audit
    /// needs a uniform series for its centered second difference).
    pub const RECORD_SPACING_REL: f64 = 1e-9;
    /// Allowed mismatch of d2H/dt2 (finite difference) against its
    /// analytic value, relative to the largest analytic value seen.
    pub const INERTIA_IDENTITY_REL: f64 = 0.02;
    /// The observed expansion rate must reach this fraction of the
    /// analytic lower bound (finite-time transients eat the rest).
    pub const EXPANSION_BOUND_MARGIN: f64 = 0.8;
    /// The support must grow by this factor before the expansion audit
    /// considers the asymptotic regime reached.
    pub const EXPANSION_DOUBLING: f64 = 2.0;
    /// Relative slack on the mass-concentration inequality (it holds
    /// termwise, so only rounding can violate it).
    pub const HOELDER_REL_SLACK: f64 = 1e-12;
    /// Allowed relative deviation of the fitted width-scaling exponent
    /// (and of the planar log-slope) from its analytic value.
    pub const COLLAPSE_SLOPE_REL: f64 = 0.10;
    /// Minimum R^2 of the linear-in-log fit for the planar case.
    pub const COLLAPSE_LOG_FIT_R2: f64 = 0.99;
    /// Cell count of the dedicated probe grid the width-scaling audit
    /// evaluates on.
    pub const COLLAPSE_GRID_CELLS: usize = 1024;
    /// Outer radius of the probe grid.
    pub const COLLAPSE_GRID_RADIUS: f64 = 1.0;
    /// Probe widths for the scaling fit.
    pub const COLLAPSE_WIDTHS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
}

/// Outcome of one audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The run never entered the regime the check needs.
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Pass => write!(f, "PASS"),
            Verdict::Fail => write!(f, "FAIL"),
            Verdict::Inconclusive => write!(f, "INCONCLUSIVE"),
        }
    }
}

/// One audit's verdict plus the measured numbers behind it.
#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub name: &'static str,
    pub verdict: Verdict,
    pub details: String,
}

impl AuditOutcome {
    pub fn line(&self) -> String {
        format!("{} {}: {}", self.verdict, self.name, self.details)
    }
}

fn require_records(records: &[DiagnosticsRecord], n: usize, name: &str) -> Result<()> {
    if records.len() < n {
        return Err(Error::Contract(format!(
            "{name} audit needs at least {n} records, got {}",
            records.len()
        )));
    }
    Ok(())
}

/// Energy accounting audit. Any flow must never gain energy between
/// samples beyond [`tolerances::ENERGY_MONOTONE_SLACK`]; undamped flows
/// must additionally return to their initial energy at the end of the run
/// within [`tolerances::ENERGY_CONSERVATION_REL`], while damped flows must
/// dissipate, over the whole run, the trapezoid integral of their kinetic
/// dissipation rate within [`tolerances::ENERGY_BUDGET_REL`].
pub fn energy_dissipation_audit(
    records: &[DiagnosticsRecord],
    params: &PhysicsParams,
) -> Result<AuditOutcome> {
    require_records(records, 3, "energy-dissipation")?;
    let e0 = records[0].energy;
    let scale = e0.abs().max(f64::MIN_POSITIVE);

    // Monotone within slack, damped or not: the continuous flow never
    // gains energy, so a sustained rise is a defect regardless of beta.
    let slack = tolerances::ENERGY_MONOTONE_SLACK * scale;
    for w in records.windows(2) {
        if w[1].energy > w[0].energy + slack {
            return Ok(AuditOutcome {
                name: "energy-dissipation",
                verdict: Verdict::Fail,
                details: format!(
                    "energy rose from {:.6e} to {:.6e} between t = {} and t = {}",
                    w[0].energy, w[1].energy, w[0].t, w[1].t
                ),
            });
        }
    }

    if params.beta == 0.0 {
        let rel = (records.last().expect("nonempty").energy - e0).abs() / scale;
        let verdict = if rel <= tolerances::ENERGY_CONSERVATION_REL {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        return Ok(AuditOutcome {
            name: "energy-dissipation",
            verdict,
            details: format!(
                "undamped: |E(t_end) - E0|/|E0| = {rel:.3e} (allowed {:.1e})",
                tolerances::ENERGY_CONSERVATION_REL
            ),
        });
    }

    // Damped: the drop must match the dissipation budget.
    let drop = e0 - records.last().expect("nonempty").energy;
    let mut integral = 0.0;
    for w in records.windows(2) {
        integral +=
            0.5 * (w[0].kinetic_dissipation + w[1].kinetic_dissipation) * (w[1].t - w[0].t);
    }
    let denom = drop.abs().max(integral.abs()).max(1e-12 * scale);
    let rel = (drop - integral).abs() / denom;
    let verdict =
        if rel <= tolerances::ENERGY_BUDGET_REL { Verdict::Pass } else { Verdict::Fail };
    Ok(AuditOutcome {
        name: "energy-dissipation",
        verdict,
        details: format!(
            "damped: drop = {drop:.6e}, dissipation integral = {integral:.6e}, mismatch = {rel:.3e} (allowed {:.1e})",
            tolerances::ENERGY_BUDGET_REL
        ),
    })
}

/// Inertia identity audit: the centered second difference of the sampled
/// second inertia moment must match its analytic counterpart at every
/// interior sample. Only defined for undamped flows on uniformly spaced
/// records.
pub fn inertia_identity_audit(
    records: &[DiagnosticsRecord],
    params: &PhysicsParams,
) -> Result<AuditOutcome> {
    if params.beta > 0.0 {
        return Err(Error::Contract(
            "the inertia-identity audit requires beta = 0".into(),
        ));
    }
    require_records(records, 5, "inertia-identity")?;
    let dt = records[1].t - records[0].t;
    if !(dt > 0.0) {
        return Err(Error::Contract("records must advance in time".into()));
    }
    for w in records.windows(2) {
        let step = w[1].t - w[0].t;
        if (step - dt).abs() > tolerances::RECORD_SPACING_REL * dt {
            return Err(Error::Contract(format!(
                "records are not uniformly spaced: expected dt = {dt}, found {step} at t = {}",
                w[0].t
            )));
        }
    }

    let mut hddot_max = 0.0f64;
    for rec in records {
        match rec.hddot_integral {
            Some(v) => hddot_max = hddot_max.max(v.abs()),
            None => {
                return Err(Error::Contract(format!(
                    "record at t = {} carries no analytic inertia derivative",
                    rec.t
                )))
            }
        }
    }
    let scale = hddot_max.max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    let mut worst_t = records[0].t;
    for k in 1..records.len() - 1 {
        let fd = (records[k + 1].second_inertia - 2.0 * records[k].second_inertia
            + records[k - 1].second_inertia)
            / (dt * dt);
        let analytic = records[k].hddot_integral.expect("checked above");
        let err = (fd - analytic).abs();
        if err > worst {
            worst = err;
            worst_t = records[k].t;
        }
    }
    let rel = worst / scale;
    let verdict =
        if rel <= tolerances::INERTIA_IDENTITY_REL { Verdict::Pass } else { Verdict::Fail };
    Ok(AuditOutcome {
        name: "inertia-identity",
        verdict,
        details: format!(
            "max |d2H/dt2 - analytic| / max|analytic| = {rel:.3e} at t = {worst_t} (allowed {:.1e})",
            tolerances::INERTIA_IDENTITY_REL
        ),
    })
}

/// Expansion audit: once the support has grown by
/// [`tolerances::EXPANSION_DOUBLING`], the observed rate must reach
/// [`tolerances::EXPANSION_BOUND_MARGIN`] times the strongest applicable
/// analytic lower bound — R/t against the undamped bounds, R/sqrt(t)
/// against the damped one.
pub fn expansion_audit(
    records: &[DiagnosticsRecord],
    params: &PhysicsParams,
) -> Result<AuditOutcome> {
    require_records(records, 2, "expansion")?;
    let first = &records[0];
    let last = records.last().expect("nonempty");
    let r0 = first.support_radius;
    let r_end = last.support_radius;
    if !(r0 > 0.0) {
        // A state with no mass satisfies every expansion bound vacuously;
        // only a populated support that has not yet grown is inconclusive.
        if first.mass == 0.0 {
            return Ok(AuditOutcome {
                name: "expansion",
                verdict: Verdict::Pass,
                details: "no mass to transport; every rate bound holds vacuously".into(),
            });
        }
        return Ok(AuditOutcome {
            name: "expansion",
            verdict: Verdict::Inconclusive,
            details: "initial support is empty".into(),
        });
    }
    if r_end < tolerances::EXPANSION_DOUBLING * r0 {
        return Ok(AuditOutcome {
            name: "expansion",
            verdict: Verdict::Inconclusive,
            details: format!(
                "support grew only from {r0:.6} to {r_end:.6}; the asymptotic regime needs a factor {}",
                tolerances::EXPANSION_DOUBLING
            ),
        });
    }

    let report = expansion_bounds(last, first.omega_volume, params)?;
    // Energy and mass are conserved for undamped flow, so bounds built
    // from the final record equal those from the initial one; the damped
    // bound only uses conserved quantities.
    let (observed, bound, label) = if params.beta == 0.0 {
        let mut best: Option<f64> = None;
        for b in [report.bound_n3, report.bound_n2, report.bound_pressure] {
            if let Some(v) = b {
                best = Some(best.map_or(v, |m: f64| m.max(v)));
            }
        }
        match (report.ratio_linear, best) {
            (Some(obs), Some(b)) => (obs, b, "R/t"),
            _ => {
                return Ok(AuditOutcome {
                    name: "expansion",
                    verdict: Verdict::Inconclusive,
                    details: "no analytic rate bound applies to this configuration".into(),
                })
            }
        }
    } else {
        match (report.ratio_sqrt, report.bound_damped) {
            (Some(obs), Some(b)) => (obs, b, "R/sqrt(t)"),
            _ => {
                return Ok(AuditOutcome {
                    name: "expansion",
                    verdict: Verdict::Inconclusive,
                    details: "no analytic rate bound applies to this configuration".into(),
                })
            }
        }
    };
    let floor = tolerances::EXPANSION_BOUND_MARGIN * bound;
    let verdict = if observed >= floor { Verdict::Pass } else { Verdict::Fail };
    Ok(AuditOutcome {
        name: "expansion",
        verdict,
        details: format!(
            "{label} = {observed:.6} at t = {}, analytic floor = {bound:.6} (margin {})",
            last.t,
            tolerances::EXPANSION_BOUND_MARGIN
        ),
    })
}

/// Mass-concentration audit: at every sample, the support mass must not
/// exceed (integral rho^gamma)^(1/gamma) |Omega|^(1-1/gamma). The discrete
/// inequality holds termwise, so any violation beyond rounding is a bug.
pub fn hoelder_audit(
    records: &[DiagnosticsRecord],
    params: &PhysicsParams,
) -> Result<AuditOutcome> {
    require_records(records, 1, "hoelder")?;
    for rec in records {
        if rec.omega_volume == 0.0 {
            if rec.support_mass > 0.0 {
                return Ok(AuditOutcome {
                    name: "hoelder",
                    verdict: Verdict::Fail,
                    details: format!(
                        "t = {}: support mass {} with empty support",
                        rec.t, rec.support_mass
                    ),
                });
            }
            continue;
        }
        let rhs = rec.gamma_integral.powf(1.0 / params.gamma)
            * rec.omega_volume.powf(1.0 - 1.0 / params.gamma);
        let slack = tolerances::HOELDER_REL_SLACK * rhs.max(f64::MIN_POSITIVE);
        if rec.support_mass > rhs + slack {
            return Ok(AuditOutcome {
                name: "hoelder",
                verdict: Verdict::Fail,
                details: format!(
                    "t = {}: mass {:.12e} exceeds concentration bound {:.12e}",
                    rec.t, rec.support_mass, rhs
                ),
            });
        }
    }
    Ok(AuditOutcome {
        name: "hoelder",
        verdict: Verdict::Pass,
        details: format!(
            "mass-concentration inequality held at all {} samples",
            records.len()
        ),
    })
}

/// Least-squares line through (x, y): returns (slope, intercept, r^2).
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

/// Width-scaling audit of the potential term: concentrating the run's mass
/// into bumps of shrinking width on a dedicated probe grid, -integral of
/// rho Phi must scale like epsilon^-(N-2) for N >= 3 and like
/// -M^2 ln(epsilon) for N = 2.
pub fn collapse_scaling_audit(mass: f64, params: &PhysicsParams) -> Result<AuditOutcome> {
    if !(mass >= 0.0) || !mass.is_finite() {
        return Err(Error::Domain(format!("mass must be finite and >= 0, got {mass}")));
    }
    if mass == 0.0 {
        return Ok(AuditOutcome {
            name: "collapse-scaling",
            verdict: Verdict::Pass,
            details: "no mass to concentrate; the scaling claim is vacuous".into(),
        });
    }
    let grid = RadialGrid::uniform(
        tolerances::COLLAPSE_GRID_CELLS,
        tolerances::COLLAPSE_GRID_RADIUS,
        params.dim,
    )?;
    let mut log_eps = Vec::new();
    let mut values = Vec::new();
    for &eps in &tolerances::COLLAPSE_WIDTHS {
        let v = collapse_indicator(eps, mass, params, &grid)?;
        log_eps.push(eps.ln());
        values.push(v);
    }

    if params.dim >= 3 {
        let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let (slope, _, _) = linear_fit(&log_eps, &logs);
        let expected = -(params.dim as f64 - 2.0);
        let rel = (slope - expected).abs() / expected.abs();
        let verdict =
            if rel <= tolerances::COLLAPSE_SLOPE_REL { Verdict::Pass } else { Verdict::Fail };
        Ok(AuditOutcome {
            name: "collapse-scaling",
            verdict,
            details: format!(
                "log-log slope = {slope:.4} vs analytic {expected:.4}, deviation = {rel:.3e} (allowed {:.1e})",
                tolerances::COLLAPSE_SLOPE_REL
            ),
        })
    } else {
        // Planar case: the value is linear in ln(epsilon) with slope -M^2.
        let (slope, _, r2) = linear_fit(&log_eps, &values);
        let expected = -mass * mass;
        let rel = (slope - expected).abs() / expected.abs();
        let fit_ok = r2 >= tolerances::COLLAPSE_LOG_FIT_R2;
        let slope_ok = rel <= tolerances::COLLAPSE_SLOPE_REL;
        let verdict = if fit_ok && slope_ok { Verdict::Pass } else { Verdict::Fail };
        Ok(AuditOutcome {
            name: "collapse-scaling",
            verdict,
            details: format!(
                "linear-in-log fit: R^2 = {r2:.6} (needs {:.2}), slope = {slope:.4} vs analytic {expected:.4} (deviation {rel:.3e})",
                tolerances::COLLAPSE_LOG_FIT_R2
            ),
        })
    }
}
