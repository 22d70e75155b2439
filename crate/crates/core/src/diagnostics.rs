//! Scalar functionals sampled along a run — mass, energy, the second
//! moment of inertia and its analytic second derivative, support geometry —
//! plus the a-priori expansion-rate bounds built from them.

use crate::error::{Error, Result};
use crate::field::{self, FieldState};
use crate::grid::RadialGrid;
use crate::params::PhysicsParams;
use crate::solver::{concentration_profile, FluidState};

/// One sampled row of the diagnostic series.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// Total mass, all cells.
    pub mass: f64,
    /// Kinetic + pressure + potential energy.
    pub energy: f64,
    /// Second moment of inertia, integral of rho r^2.
    pub second_inertia: f64,
    /// Analytic value of d^2/dt^2 of [`DiagnosticsRecord::second_inertia`];
    /// only defined for undamped flows, None otherwise.
    pub hddot_integral: Option<f64>,
    /// Largest cell-center radius whose density exceeds the support
    /// threshold; 0 for vacuum states.
    pub support_radius: f64,
    /// Volume of the support cells.
    pub omega_volume: f64,
    /// -1/2 integral of rho Phi.
    pub potential_energy: f64,
    /// beta times the integral of rho V^2: the instantaneous rate at which
    /// damping removes kinetic energy (twice over).
    pub kinetic_dissipation: f64,
    pub max_rho: f64,
    /// Largest |dV/dr| between adjacent support cells.
    pub max_dvdr: f64,
    /// Integral of rho^gamma over the support cells.
    pub gamma_integral: f64,
    /// Mass restricted to the support cells (the left side of the
    /// mass-concentration inequality).
    pub support_mass: f64,
}

/// Total mass over every cell.
pub fn total_mass(rho: &[f64], grid: &RadialGrid) -> f64 {
    rho.iter().zip(&grid.cell_volumes).map(|(d, v)| d * v).sum()
}

/// Total energy: 1/2 rho V^2 + K/(gamma-1) rho^gamma - 1/2 rho Phi,
/// integrated over the domain. The pressure term needs gamma > 1 whenever
/// K > 0; the combination gamma = 1, K > 0 has no finite energy density.
pub fn energy(state: &FluidState, field: &FieldState) -> Result<f64> {
    let p = &state.params;
    if p.k > 0.0 && p.gamma == 1.0 {
        return Err(Error::Unsupported(
            "total energy is undefined for gamma = 1 with K > 0".into(),
        ));
    }
    let mut total = 0.0;
    for i in 0..state.rho.len() {
        let rho = state.rho[i];
        let vol = state.grid.cell_volumes[i];
        let kinetic = 0.5 * rho * state.velocity[i] * state.velocity[i];
        let internal = if p.k > 0.0 { p.k / (p.gamma - 1.0) * rho.powf(p.gamma) } else { 0.0 };
        let potential = -0.5 * rho * field.phi[i];
        total += (kinetic + internal + potential) * vol;
    }
    Ok(total)
}

/// Second moment of inertia, integral of rho r^2.
pub fn second_inertia(state: &FluidState) -> f64 {
    state
        .rho
        .iter()
        .zip(&state.grid.r_centers)
        .zip(&state.grid.cell_volumes)
        .map(|((d, r), v)| d * r * r * v)
        .sum()
}

/// Analytic second time derivative of the second inertia moment for
/// undamped flow:
///   2 integral (rho V^2 + N P) - (N - 2) integral (rho Phi)   for N >= 3,
///   2 integral (rho V^2 + 2 P) + M^2                           for N = 2.
/// With damping the identity picks up history terms, so beta > 0 is a
/// contract violation here.
pub fn hddot_integral(state: &FluidState, field: &FieldState) -> Result<f64> {
    let p = &state.params;
    if p.beta > 0.0 {
        return Err(Error::Contract(
            "the inertia second-derivative identity requires beta = 0".into(),
        ));
    }
    let n = p.dim as f64;
    let mut bulk = 0.0;
    let mut potential = 0.0;
    for i in 0..state.rho.len() {
        let rho = state.rho[i];
        let vol = state.grid.cell_volumes[i];
        let pressure = p.pressure(rho)?;
        bulk += (rho * state.velocity[i] * state.velocity[i] + n * pressure) * vol;
        potential += rho * field.phi[i] * vol;
    }
    if p.dim >= 3 {
        Ok(2.0 * bulk - (n - 2.0) * potential)
    } else {
        let mass = total_mass(&state.rho, &state.grid);
        Ok(2.0 * bulk + mass * mass)
    }
}

/// Largest cell-center radius whose density exceeds the support threshold.
pub fn support_radius(state: &FluidState) -> f64 {
    let mut radius = 0.0;
    for (i, &rho) in state.rho.iter().enumerate() {
        if rho > state.support_threshold {
            radius = state.grid.r_centers[i];
        }
    }
    radius
}

/// Volume of the cells above the support threshold.
pub fn omega_volume(state: &FluidState) -> f64 {
    state
        .rho
        .iter()
        .zip(&state.grid.cell_volumes)
        .filter(|(d, _)| **d > state.support_threshold)
        .map(|(_, v)| v)
        .sum()
}

/// Potential energy, -1/2 integral of rho Phi.
pub fn potential_energy(rho: &[f64], field: &FieldState, grid: &RadialGrid) -> f64 {
    rho.iter()
        .zip(&field.phi)
        .zip(&grid.cell_volumes)
        .map(|((d, phi), v)| -0.5 * d * phi * v)
        .sum()
}

/// beta times the integral of rho V^2.
pub fn kinetic_dissipation(state: &FluidState) -> f64 {
    if state.params.beta == 0.0 {
        return 0.0;
    }
    let twice_kinetic: f64 = state
        .rho
        .iter()
        .zip(&state.velocity)
        .zip(&state.grid.cell_volumes)
        .map(|((d, v), vol)| d * v * v * vol)
        .sum();
    state.params.beta * twice_kinetic
}

/// Sample every diagnostic functional of the current state in one pass.
pub fn sample_record(state: &FluidState) -> Result<DiagnosticsRecord> {
    let field = field::solve(&state.rho, &state.grid, &state.params)?;
    let mass = total_mass(&state.rho, &state.grid);
    let energy = energy(state, &field)?;
    let second_inertia = second_inertia(state);
    let hddot = if state.params.beta > 0.0 {
        None
    } else {
        Some(hddot_integral(state, &field)?)
    };
    let gamma = state.params.gamma;
    let mut gamma_integral = 0.0;
    let mut support_mass = 0.0;
    let mut max_rho = 0.0f64;
    for (i, &rho) in state.rho.iter().enumerate() {
        max_rho = max_rho.max(rho);
        if rho > state.support_threshold {
            let vol = state.grid.cell_volumes[i];
            gamma_integral += rho.powf(gamma) * vol;
            support_mass += rho * vol;
        }
    }
    let mut max_dvdr = 0.0f64;
    for i in 0..state.rho.len() - 1 {
        if state.rho[i] > state.support_threshold && state.rho[i + 1] > state.support_threshold {
            let slope = (state.velocity[i + 1] - state.velocity[i]) / state.grid.dr;
            max_dvdr = max_dvdr.max(slope.abs());
        }
    }
    Ok(DiagnosticsRecord {
        t: state.time,
        mass,
        energy,
        second_inertia,
        hddot_integral: hddot,
        support_radius: support_radius(state),
        omega_volume: omega_volume(state),
        potential_energy: potential_energy(&state.rho, &field, &state.grid),
        kinetic_dissipation: kinetic_dissipation(state),
        max_rho,
        max_dvdr,
        gamma_integral,
        support_mass,
    })
}

/// The a-priori expansion-rate bounds that apply to one sampled state,
/// together with the observed rates they cap.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// sqrt(min(2, N(gamma-1), N-2) E / M); undamped flows in N >= 3.
    pub bound_n3: Option<f64>,
    /// sqrt(1 / (2M)); planar-symmetric case N = 2.
    pub bound_n2: Option<f64>,
    /// sqrt(N K (M / |Omega_0|)^(gamma-1)); any flow with pressure.
    pub bound_pressure: Option<f64>,
    /// sqrt(2 beta N K (M / |Omega_0|)^(gamma-1)); damped flows with
    /// pressure, capping R/sqrt(t) instead of R/t.
    pub bound_damped: Option<f64>,
    /// Observed R / t (None at t = 0).
    pub ratio_linear: Option<f64>,
    /// Observed R / sqrt(t) (None at t = 0).
    pub ratio_sqrt: Option<f64>,
    /// Support mass (left side of the mass-concentration inequality).
    pub hoelder_lhs: f64,
    /// (integral rho^gamma)^(1/gamma) |Omega|^(1 - 1/gamma).
    pub hoelder_rhs: f64,
    pub omega_initial: f64,
    pub omega_instant: f64,
}

/// Evaluate every applicable expansion bound for one record.
/// `omega_initial` is the support volume at t = 0; the pressure bounds are
/// anchored to it, not to the instantaneous support.
pub fn expansion_bounds(
    record: &DiagnosticsRecord,
    omega_initial: f64,
    params: &PhysicsParams,
) -> Result<BoundReport> {
    if !(record.mass > 0.0) {
        return Err(Error::Domain(format!(
            "expansion bounds need positive mass, got {}",
            record.mass
        )));
    }
    let n = params.dim as f64;
    let bound_n3 = if params.dim >= 3 && params.beta == 0.0 {
        let factor = 2.0f64.min(n * (params.gamma - 1.0)).min(n - 2.0);
        Some((factor * record.energy.max(0.0) / record.mass).sqrt())
    } else {
        None
    };
    let bound_n2 = if params.dim == 2 { Some((0.5 / record.mass).sqrt()) } else { None };
    let mean_density_power = if omega_initial > 0.0 {
        (record.mass / omega_initial).powf(params.gamma - 1.0)
    } else {
        0.0
    };
    // Pressureless flows keep the pressure bounds present but zero: the
    // bound formula degenerates rather than ceasing to apply. In contrast
    // the damped bound is absent (not zero) without damping.
    let bound_pressure = Some((n * params.k * mean_density_power).sqrt());
    let bound_damped = if params.beta > 0.0 {
        Some((2.0 * params.beta * n * params.k * mean_density_power).sqrt())
    } else {
        None
    };
    let (ratio_linear, ratio_sqrt) = if record.t > 0.0 {
        (
            Some(record.support_radius / record.t),
            Some(record.support_radius / record.t.sqrt()),
        )
    } else {
        (None, None)
    };
    let hoelder_rhs = if record.omega_volume > 0.0 {
        record.gamma_integral.powf(1.0 / params.gamma)
            * record.omega_volume.powf(1.0 - 1.0 / params.gamma)
    } else {
        0.0
    };
    Ok(BoundReport {
        bound_n3,
        bound_n2,
        bound_pressure,
        bound_damped,
        ratio_linear,
        ratio_sqrt,
        hoelder_lhs: record.support_mass,
        hoelder_rhs,
        omega_initial,
        omega_instant: record.omega_volume,
    })
}

/// Potential part of the energy of the width-epsilon concentration
/// profile, -integral of rho Phi (no 1/2: this is the functional whose
/// growth as epsilon shrinks identifies the defocusing strength).
pub fn collapse_indicator(
    epsilon: f64,
    mass: f64,
    params: &PhysicsParams,
    grid: &RadialGrid,
) -> Result<f64> {
    let rho = concentration_profile(epsilon, mass, grid)?;
    if mass == 0.0 {
        return Ok(0.0);
    }
    let field = field::solve(&rho, grid, params)?;
    let mut value = 0.0;
    for i in 0..rho.len() {
        value -= rho[i] * field.phi[i] * grid.cell_volumes[i];
    }
    Ok(value)
}
