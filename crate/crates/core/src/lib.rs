//! Radially symmetric compressible flow with a self-consistent repulsive
//! force, in any dimension N >= 2.
//!
//! The crate integrates the mass and momentum balance of a polytropic gas
//! whose particles push each other apart through a mean field sourced by
//! the density itself, optionally against linear velocity damping. On top
//! of the finite-volume integrator it layers the analytic machinery such
//! flows obey — energy accounting, the second-derivative identity of the
//! moment of inertia, lower bounds on how fast the support must spread,
//! mass-concentration inequalities, and the small-width scaling of the
//! potential term — and audits each one continuously against the numerical
//! solution.
//!
//! Modules, bottom up:
//!
//! * [`params`] — dimensional constants, the force kernel, equation of
//!   state.
//! * [`grid`] — uniform radial mesh with shell volumes and face areas.
//! * [`field`] — the self-consistent force and potential of a radial
//!   density.
//! * [`hydro`] — reconstruction, approximate Riemann fluxes, and the
//!   shell-volume divergence.
//! * [`solver`] — scenario setup, the split time step, and the run loop.
//! * [`diagnostics`] — scalar functionals sampled along a run and the
//!   expansion-rate bounds built from them.
//! * [`audits`] — pass/fail checks of the analytic claims against a
//!   sampled run.
//! * [`emden`] — the homogeneous-ball companion model and its doubling
//!   bound.
//!
//! With the `parallel` feature (on by default) the flux and force kernels
//! run data-parallel over cells; results are bitwise identical to the
//! sequential fallback.

pub mod audits;
pub mod diagnostics;
pub mod emden;
pub mod error;
pub mod field;
pub mod grid;
pub mod hydro;
pub mod params;
pub mod solver;

pub use audits::{
    collapse_scaling_audit, energy_dissipation_audit, expansion_audit, hoelder_audit,
    inertia_identity_audit, AuditOutcome, Verdict,
};
pub use diagnostics::{
    collapse_indicator, expansion_bounds, sample_record, BoundReport, DiagnosticsRecord,
};
pub use emden::{
    blowup_bound, emden_mass, integrate_emden, integrate_emden_fixed, velocity_line_integral,
    BlowupBound, EmdenState, EmdenTrajectory,
};
pub use error::{Error, Result};
pub use field::FieldState;
pub use grid::RadialGrid;
pub use params::PhysicsParams;
pub use solver::{
    init_scenario, run, run_collect, FluidState, InitialProfile, InitialVelocity, RunOutcome,
    ScenarioConfig, Termination,
};
