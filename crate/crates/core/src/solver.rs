//! Scenario setup and time integration: operator splitting of the
//! hyperbolic update (two-stage, second order), the outward force kick,
//! and the exact exponential damping map.

use std::sync::Arc;

use crate::diagnostics::{sample_record, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::field;
use crate::grid::RadialGrid;
use crate::hydro::{hyperbolic_rhs, max_signal_speed, RhsBuffers};
use crate::params::PhysicsParams;

/// Initial density shape, sampled at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    /// Constant density rho0 on [0, radius).
    UniformBall { rho0: f64, radius: f64 },
    /// rho_center (1 - (r/radius)^2) on [0, radius).
    ParabolicCap { rho_center: f64, radius: f64 },
    /// Quartic bump of width epsilon, rescaled so the discrete mass equals
    /// `mass` exactly.
    ConcentrationFamily { epsilon: f64, mass: f64 },
}

impl InitialProfile {
    /// Radius of the support requested by the profile.
    pub fn support_radius(&self) -> f64 {
        match *self {
            InitialProfile::UniformBall { radius, .. } => radius,
            InitialProfile::ParabolicCap { radius, .. } => radius,
            InitialProfile::ConcentrationFamily { epsilon, .. } => epsilon,
        }
    }
}

/// Initial velocity shape, applied on the support of the density.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialVelocity {
    Zero,
    /// V = rate * r.
    Linear { rate: f64 },
    /// Piecewise-linear interpolation through (r, V) points, constant
    /// beyond the last point.
    Table(Vec<(f64, f64)>),
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: PhysicsParams,
    pub n_cells: usize,
    pub r_max: f64,
    pub profile: InitialProfile,
    pub velocity: InitialVelocity,
    pub t_end: f64,
    /// CFL number in (0, 1].
    pub cfl: f64,
    /// Diagnostics sampling interval.
    pub output_every: f64,
    /// Vacuum threshold as a fraction of the initial density maximum.
    pub density_floor_ratio: f64,
    /// Support threshold as a fraction of the initial density maximum.
    pub support_threshold_ratio: f64,
    /// Test hook: disable the self-consistent force sub-step.
    pub force_enabled: bool,
    /// Test hook: poison the state with a NaN once t reaches this value, to
    /// exercise the numeric-failure path end to end.
    pub fail_at_time: Option<f64>,
}

impl ScenarioConfig {
    pub fn new(
        params: PhysicsParams,
        n_cells: usize,
        r_max: f64,
        profile: InitialProfile,
        t_end: f64,
    ) -> Self {
        Self {
            params,
            n_cells,
            r_max,
            profile,
            velocity: InitialVelocity::Zero,
            t_end,
            cfl: 0.4,
            output_every: if t_end > 0.0 { t_end / 100.0 } else { 1.0 },
            density_floor_ratio: 1e-12,
            support_threshold_ratio: 1e-8,
            force_enabled: true,
            fail_at_time: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.gamma == 1.0 && self.params.k > 0.0 {
            return Err(Error::Config(
                "gamma = 1 requires K = 0 (the pressure energy density is undefined)".into(),
            ));
        }
        let support = self.profile.support_radius();
        if !(support > 0.0) {
            return Err(Error::Config(format!(
                "initial support radius must be positive, got {support}"
            )));
        }
        if support >= self.r_max {
            return Err(Error::Config(format!(
                "initial support must satisfy R0 < r_max, got R0 = {support}, r_max = {}",
                self.r_max
            )));
        }
        match self.profile {
            InitialProfile::UniformBall { rho0, .. } if !(rho0 >= 0.0) => {
                return Err(Error::Config(format!("rho0 must be >= 0, got {rho0}")));
            }
            InitialProfile::ParabolicCap { rho_center, .. } if !(rho_center >= 0.0) => {
                return Err(Error::Config(format!(
                    "rho_center must be >= 0, got {rho_center}"
                )));
            }
            InitialProfile::ConcentrationFamily { mass, .. } if !(mass >= 0.0) => {
                return Err(Error::Config(format!("mass must be >= 0, got {mass}")));
            }
            _ => {}
        }
        if let InitialVelocity::Table(points) = &self.velocity {
            if points.is_empty() {
                return Err(Error::Config("velocity table must not be empty".into()));
            }
            for w in points.windows(2) {
                if !(w[1].0 > w[0].0) {
                    return Err(Error::Config(
                        "velocity table radii must be strictly increasing".into(),
                    ));
                }
            }
            if points.iter().any(|&(r, v)| !r.is_finite() || !v.is_finite()) {
                return Err(Error::Config("velocity table entries must be finite".into()));
            }
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!(
                "t_end must satisfy t_end >= 0, got {}",
                self.t_end
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.output_every > 0.0) {
            return Err(Error::Config(format!(
                "output_every must be positive, got {}",
                self.output_every
            )));
        }
        for (name, ratio) in [
            ("density_floor_ratio", self.density_floor_ratio),
            ("support_threshold_ratio", self.support_threshold_ratio),
        ] {
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(Error::Config(format!(
                    "{name} must lie in (0, 1), got {ratio}"
                )));
            }
        }
        Ok(())
    }
}

/// Quartic bump (1 - (r/epsilon)^2)^2 on [0, epsilon), sampled at the cell
/// centers and rescaled so its discrete mass equals `mass` exactly.
pub fn concentration_profile(epsilon: f64, mass: f64, grid: &RadialGrid) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(mass >= 0.0) {
        return Err(Error::Domain(format!("mass must be >= 0, got {mass}")));
    }
    if epsilon < 8.0 * grid.dr {
        return Err(Error::Contract(format!(
            "concentration width epsilon = {epsilon} must span at least 8 cells (dr = {})",
            grid.dr
        )));
    }
    let mut rho: Vec<f64> = grid
        .r_centers
        .iter()
        .map(|&r| {
            let u = r / epsilon;
            if u < 1.0 {
                (1.0 - u * u).powi(2)
            } else {
                0.0
            }
        })
        .collect();
    let raw_mass: f64 = rho.iter().zip(&grid.cell_volumes).map(|(d, v)| d * v).sum();
    if mass == 0.0 || raw_mass == 0.0 {
        return Ok(vec![0.0; grid.n_cells()]);
    }
    let scale = mass / raw_mass;
    rho.iter_mut().for_each(|d| *d *= scale);
    Ok(rho)
}

/// Instantaneous solution state plus the frozen run-control quantities
/// every later step needs.
#[derive(Debug, Clone)]
pub struct FluidState {
    pub time: f64,
    pub rho: Vec<f64>,
    pub velocity: Vec<f64>,
    pub grid: Arc<RadialGrid>,
    pub params: PhysicsParams,
    /// CFL number used by [`FluidState::suggested_dt`].
    pub cfl: f64,
    /// Whether the force sub-step runs (test hook, true in production).
    pub force_enabled: bool,
    /// Initial density maximum; the floor and threshold are frozen
    /// fractions of it.
    pub max_rho0: f64,
    /// Absolute vacuum floor; cells at or below it carry no velocity.
    pub density_floor: f64,
    /// Absolute support threshold for [`crate::diagnostics::support_radius`].
    pub support_threshold: f64,
    /// Discrete total mass at t = 0.
    pub reference_mass: f64,
}

/// Build the initial state: profile and velocity sampled at cell centers,
/// thresholds frozen against the initial density maximum.
pub fn init_scenario(config: &ScenarioConfig) -> Result<FluidState> {
    config.validate()?;
    let grid = Arc::new(RadialGrid::uniform(config.n_cells, config.r_max, config.params.dim)?);
    let rho: Vec<f64> = match config.profile {
        InitialProfile::UniformBall { rho0, radius } => grid
            .r_centers
            .iter()
            .map(|&r| if r < radius { rho0 } else { 0.0 })
            .collect(),
        InitialProfile::ParabolicCap { rho_center, radius } => grid
            .r_centers
            .iter()
            .map(|&r| {
                if r < radius {
                    rho_center * (1.0 - (r / radius).powi(2))
                } else {
                    0.0
                }
            })
            .collect(),
        InitialProfile::ConcentrationFamily { epsilon, mass } => {
            concentration_profile(epsilon, mass, &grid)?
        }
    };
    let max_rho0 = rho.iter().cloned().fold(0.0f64, f64::max);
    let velocity: Vec<f64> = grid
        .r_centers
        .iter()
        .zip(&rho)
        .map(|(&r, &den)| {
            if den <= 0.0 {
                return 0.0;
            }
            match &config.velocity {
                InitialVelocity::Zero => 0.0,
                InitialVelocity::Linear { rate } => rate * r,
                InitialVelocity::Table(points) => interp_table(points, r),
            }
        })
        .collect();
    let reference_mass = rho.iter().zip(&grid.cell_volumes).map(|(d, v)| d * v).sum();
    Ok(FluidState {
        time: 0.0,
        rho,
        velocity,
        grid,
        params: config.params,
        cfl: config.cfl,
        force_enabled: config.force_enabled,
        max_rho0,
        density_floor: config.density_floor_ratio * max_rho0,
        support_threshold: config.support_threshold_ratio * max_rho0,
        reference_mass,
    })
}

fn interp_table(points: &[(f64, f64)], r: f64) -> f64 {
    if r <= points[0].0 {
        return points[0].1;
    }
    for w in points.windows(2) {
        if r <= w[1].0 {
            let t = (r - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + t * (w[1].1 - w[0].1);
        }
    }
    points.last().expect("table is nonempty").1
}

/// Exact integrating factor of dV/dt = -beta V over one step.
pub fn damping_factor(beta: f64, dt: f64) -> f64 {
    (-beta * dt).exp()
}

impl FluidState {
    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    /// CFL-limited timestep: cfl * dr / max(|V| + c), falling back to
    /// cfl * dr when the state carries no signal at all.
    pub fn suggested_dt(&self) -> f64 {
        let s = max_signal_speed(&self.rho, &self.velocity, &self.params);
        if s > 0.0 {
            self.cfl * self.grid.dr / s
        } else {
            self.cfl * self.grid.dr
        }
    }

    /// One split step: two-stage hyperbolic update, force kick from the
    /// post-hyperbolic density, then the exact damping map.
    pub fn step(&self, dt: f64) -> Result<FluidState> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Contract(format!("step needs dt > 0, got {dt}")));
        }
        let limit = self.suggested_dt();
        if dt > limit * (1.0 + 1e-9) {
            return Err(Error::Contract(format!(
                "dt = {dt} exceeds the CFL limit {limit}"
            )));
        }
        let n = self.n_cells();
        let mut buf = RhsBuffers::new(n);
        let mut drho = vec![0.0; n];
        let mut dmom = vec![0.0; n];

        // Stage 1: U1 = U0 + dt L(U0).
        hyperbolic_rhs(&self.rho, &self.velocity, &self.grid, &self.params, &mut buf, &mut drho, &mut dmom);
        let mut rho1 = vec![0.0; n];
        let mut mom1 = vec![0.0; n];
        for i in 0..n {
            rho1[i] = self.rho[i] + dt * drho[i];
            mom1[i] = self.rho[i] * self.velocity[i] + dt * dmom[i];
        }
        let v1 = sanitize(&mut rho1, &mut mom1, self.density_floor);

        // Stage 2: U2 = (U0 + U1 + dt L(U1)) / 2.
        hyperbolic_rhs(&rho1, &v1, &self.grid, &self.params, &mut buf, &mut drho, &mut dmom);
        let mut rho2 = vec![0.0; n];
        let mut mom2 = vec![0.0; n];
        for i in 0..n {
            rho2[i] = 0.5 * (self.rho[i] + rho1[i] + dt * drho[i]);
            mom2[i] = 0.5 * (self.rho[i] * self.velocity[i] + mom1[i] + dt * dmom[i]);
        }
        let mut v2 = sanitize(&mut rho2, &mut mom2, self.density_floor);

        // Force kick from the post-hyperbolic density.
        if self.force_enabled {
            let phi_r = field::force_field(&rho2, &self.grid, &self.params)?;
            for i in 0..n {
                if rho2[i] > self.density_floor {
                    v2[i] += dt * phi_r[i];
                }
            }
        }

        // Exact damping map.
        if self.params.beta > 0.0 {
            let factor = damping_factor(self.params.beta, dt);
            v2.iter_mut().for_each(|v| *v *= factor);
        }

        for i in 0..n {
            if !rho2[i].is_finite() || !v2[i].is_finite() {
                return Err(Error::Numeric {
                    last_valid_time: self.time,
                    what: format!("non-finite state in cell {i}"),
                });
            }
        }

        Ok(FluidState {
            time: self.time + dt,
            rho: rho2,
            velocity: v2,
            grid: Arc::clone(&self.grid),
            params: self.params,
            cfl: self.cfl,
            force_enabled: self.force_enabled,
            max_rho0: self.max_rho0,
            density_floor: self.density_floor,
            support_threshold: self.support_threshold,
            reference_mass: self.reference_mass,
        })
    }
}

/// Clamp rounding-level negative densities, zero the velocity of vacuum
/// cells, and return the velocity field of the sanitized conserved pair.
fn sanitize(rho: &mut [f64], mom: &mut [f64], floor: f64) -> Vec<f64> {
    let n = rho.len();
    let mut v = vec![0.0; n];
    for i in 0..n {
        if rho[i] < 0.0 {
            rho[i] = 0.0;
        }
        if rho[i] <= floor {
            mom[i] = 0.0;
            v[i] = 0.0;
        } else {
            v[i] = mom[i] / rho[i];
        }
    }
    v
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// Reached t_end.
    Completed,
    /// The density support reached the outermost two cells.
    SupportEscaped { time: f64 },
    /// The state stopped being finite (or the timestep collapsed).
    NumericFailure { last_valid_time: f64, what: String },
}

impl Termination {
    pub fn reason(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::SupportEscaped { .. } => "support-escaped",
            Termination::NumericFailure { .. } => "numeric-failure",
        }
    }
}

/// Final state and the reason the loop ended.
#[derive(Debug)]
pub struct RunOutcome {
    pub state: FluidState,
    pub termination: Termination,
}

/// Evolve a scenario to t_end, feeding one diagnostics record to the sink at
/// t = 0, at every multiple of output_every, and at t_end. Sample times are
/// hit exactly by clipping the CFL step, so the record series is uniformly
/// spaced. Abnormal terminations are reported in the outcome, not as errors.
pub fn run<F: FnMut(&DiagnosticsRecord)>(
    config: &ScenarioConfig,
    mut sink: F,
) -> Result<RunOutcome> {
    let mut state = init_scenario(config)?;
    sink(&sample_record(&state)?);
    if config.t_end == 0.0 {
        return Ok(RunOutcome { state, termination: Termination::Completed });
    }
    let mut k: u64 = 1;
    let dt_min = 1e-15 * config.t_end.max(1.0);
    let mut poisoned = false;
    loop {
        if let Some(tf) = config.fail_at_time {
            if !poisoned && state.time >= tf {
                state.rho[0] = f64::NAN;
                poisoned = true;
            }
        }
        let t_k = k as f64 * config.output_every;
        let next_event = t_k.min(config.t_end);
        let dt_need = next_event - state.time;
        let dt_cfl = state.suggested_dt();
        let (dt, arrives) = if dt_cfl >= dt_need { (dt_need, true) } else { (dt_cfl, false) };
        if dt < dt_min {
            let last_valid_time = state.time;
            return Ok(RunOutcome {
                state,
                termination: Termination::NumericFailure {
                    last_valid_time,
                    what: format!("timestep collapsed below {dt_min}"),
                },
            });
        }
        match state.step(dt) {
            Ok(next) => state = next,
            Err(Error::Numeric { last_valid_time, what }) => {
                return Ok(RunOutcome {
                    state,
                    termination: Termination::NumericFailure { last_valid_time, what },
                });
            }
            Err(other) => return Err(other),
        }
        if arrives {
            // Snap to the exact sample time (the clipped dt reaches it up
            // to one rounding).
            state.time = next_event;
            sink(&sample_record(&state)?);
            if next_event >= config.t_end {
                return Ok(RunOutcome { state, termination: Termination::Completed });
            }
            if next_event == t_k {
                k += 1;
            }
        }
        let n = state.n_cells();
        if state.rho[n - 1] > state.support_threshold || state.rho[n - 2] > state.support_threshold
        {
            let time = state.time;
            sink(&sample_record(&state)?);
            return Ok(RunOutcome { state, termination: Termination::SupportEscaped { time } });
        }
    }
}

/// Convenience wrapper collecting the full record series.
pub fn run_collect(config: &ScenarioConfig) -> Result<(Vec<DiagnosticsRecord>, RunOutcome)> {
    let mut records = Vec::new();
    let outcome = run(config, |rec| records.push(rec.clone()))?;
    Ok((records, outcome))
}
