//! Companion ordinary model: the edge radius of a homogeneous expanding
//! ball obeys R'' = M / R^(N-1). Integrating it gives an independent
//! trajectory the full solver can be compared against, plus the doubling
//! bound built from the velocity line integral.

use crate::error::{Error, Result};
use crate::params::{alpha, unit_sphere_area};
use crate::solver::FluidState;

/// One point of the companion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmdenState {
    pub r: f64,
    pub r_dot: f64,
    /// Mass parameter of the ODE (see [`emden_mass`] for the conversion
    /// from the solver's total mass).
    pub mass: f64,
    pub dim: u32,
}

impl EmdenState {
    pub fn new(r: f64, r_dot: f64, mass: f64, dim: u32) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain(format!("dimension must satisfy N >= 2, got {dim}")));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("radius must be positive, got {r}")));
        }
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(Error::Domain(format!("mass must be >= 0, got {mass}")));
        }
        if !r_dot.is_finite() {
            return Err(Error::Domain(format!("radial velocity must be finite, got {r_dot}")));
        }
        Ok(Self { r, r_dot, mass, dim })
    }
}

/// Convert the solver's total mass into the ODE mass parameter: the edge
/// acceleration of a homogeneous ball is alpha(N) (M / S_N) / R^(N-1),
/// so the parameter is M scaled by alpha(N)/S_N (which is 1 for N = 2, 3
/// and N-2 above).
pub fn emden_mass(total_mass: f64, dim: u32) -> Result<f64> {
    Ok(alpha(dim)? * total_mass / unit_sphere_area(dim))
}

/// Right side of the first-order system: d(R, R')/dt = (R', M / R^(N-1)).
pub fn emden_rhs(r: f64, r_dot: f64, mass: f64, dim: u32) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!(
            "the companion model needs R > 0, got R = {r}"
        )));
    }
    Ok((r_dot, mass / r.powi(dim as i32 - 1)))
}

/// Conserved energy of the companion model:
///   (1/2) R'^2 - M ln R                    for N = 2,
///   (1/2) R'^2 - M R^(2-N) / (2 - N)       for N >= 3.
pub fn first_integral(state: &EmdenState) -> Result<f64> {
    if !(state.r > 0.0) {
        return Err(Error::Domain(format!(
            "the first integral needs R > 0, got R = {}",
            state.r
        )));
    }
    let g = if state.dim == 2 {
        state.r.ln()
    } else {
        -state.r.powi(2 - state.dim as i32) / (state.dim as f64 - 2.0)
    };
    Ok(0.5 * state.r_dot * state.r_dot - state.mass * g)
}

// Dormand-Prince 5(4) coefficients. The system is autonomous, so the
// stage times are never needed.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights (the seventh stage reuses them: FSAL).
const B: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
// Difference between the fifth- and embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type Pair = [f64; 2];

fn rhs_pair(y: Pair, mass: f64, dim: u32) -> Result<Pair> {
    let (dr, dv) = emden_rhs(y[0], y[1], mass, dim)?;
    Ok([dr, dv])
}

/// Accepted integration nodes with the derivative at each, supporting
/// cubic Hermite sampling anywhere in between.
#[derive(Debug, Clone)]
pub struct EmdenTrajectory {
    times: Vec<f64>,
    states: Vec<Pair>,
    derivs: Vec<Pair>,
    pub mass: f64,
    pub dim: u32,
}

impl EmdenTrajectory {
    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("a trajectory has at least one node")
    }

    pub fn end(&self) -> EmdenState {
        let y = self.states.last().expect("nonempty");
        EmdenState { r: y[0], r_dot: y[1], mass: self.mass, dim: self.dim }
    }

    pub fn n_nodes(&self) -> usize {
        self.times.len()
    }

    /// Radius and velocity at any time inside the integrated span, by
    /// cubic Hermite interpolation on the bracketing accepted step.
    pub fn sample(&self, t: f64) -> Result<(f64, f64)> {
        let t0 = self.times[0];
        let t1 = self.t_end();
        if !(t >= t0 && t <= t1) {
            return Err(Error::Domain(format!(
                "sample time {t} lies outside the integrated span [{t0}, {t1}]"
            )));
        }
        let k = match self.times.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
            Ok(exact) => return Ok((self.states[exact][0], self.states[exact][1])),
            Err(upper) => upper - 1,
        };
        let h = self.times[k + 1] - self.times[k];
        let theta = (t - self.times[k]) / h;
        let (y0, y1) = (self.states[k], self.states[k + 1]);
        let (f0, f1) = (self.derivs[k], self.derivs[k + 1]);
        let h00 = (1.0 + 2.0 * theta) * (1.0 - theta) * (1.0 - theta);
        let h10 = theta * (1.0 - theta) * (1.0 - theta);
        let h01 = theta * theta * (3.0 - 2.0 * theta);
        let h11 = theta * theta * (theta - 1.0);
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
        }
        Ok((out[0], out[1]))
    }
}

fn try_step(y: Pair, k1: Pair, h: f64, mass: f64, dim: u32) -> Option<(Pair, Pair, f64)> {
    let mut k = [[0.0; 2]; 7];
    k[0] = k1;
    for s in 1..6 {
        let mut stage = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for i in 0..2 {
                stage[i] += h * A[s - 1][j] * kj[i];
            }
        }
        k[s] = rhs_pair(stage, mass, dim).ok()?;
    }
    let mut y_new = y;
    for (j, kj) in k.iter().enumerate().take(6) {
        for i in 0..2 {
            y_new[i] += h * B[j] * kj[i];
        }
    }
    k[6] = rhs_pair(y_new, mass, dim).ok()?;
    let mut err = 0.0f64;
    for i in 0..2 {
        let mut e = 0.0;
        for (j, kj) in k.iter().enumerate() {
            e += E[j] * kj[i];
        }
        let scale = y[i].abs().max(y_new[i].abs()).max(1.0);
        err = err.max((h * e / scale).abs());
    }
    Some((y_new, k[6], err))
}

/// Integrate the companion model to `t_end` with adaptive error control.
/// `tol` is the per-step relative error target and must lie in
/// (1e-12, 1e-2).
pub fn integrate_emden(initial: &EmdenState, t_end: f64, tol: f64) -> Result<EmdenTrajectory> {
    if !(tol > 1e-12 && tol < 1e-2) {
        return Err(Error::Config(format!(
            "tol must lie in (1e-12, 1e-2), got {tol}"
        )));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Config(format!("t_end must satisfy t_end >= 0, got {t_end}")));
    }
    EmdenState::new(initial.r, initial.r_dot, initial.mass, initial.dim)?;

    let mut traj = EmdenTrajectory {
        times: vec![0.0],
        states: vec![[initial.r, initial.r_dot]],
        derivs: vec![rhs_pair([initial.r, initial.r_dot], initial.mass, initial.dim)?],
        mass: initial.mass,
        dim: initial.dim,
    };
    if t_end == 0.0 {
        return Ok(traj);
    }
    let mut t = 0.0;
    let mut y = [initial.r, initial.r_dot];
    let mut k1 = traj.derivs[0];
    let mut h = (t_end / 100.0).min(0.1);
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > 1_000_000 {
            return Err(Error::Numeric {
                last_valid_time: t,
                what: "companion model integration exceeded the step budget".into(),
            });
        }
        h = h.min(t_end - t);
        match try_step(y, k1, h, initial.mass, initial.dim) {
            Some((y_new, k7, err)) => {
                if err <= tol {
                    t += h;
                    y = y_new;
                    k1 = k7;
                    traj.times.push(t);
                    traj.states.push(y);
                    traj.derivs.push(k1);
                }
                let factor = if err > 0.0 { 0.9 * (tol / err).powf(0.2) } else { 5.0 };
                h *= factor.clamp(0.2, 5.0);
            }
            None => {
                // A stage stepped through R = 0; retry shorter.
                h *= 0.5;
                if h < 1e-14 * t_end.max(1.0) {
                    return Err(Error::Numeric {
                        last_valid_time: t,
                        what: "companion model step collapsed at the R = 0 barrier".into(),
                    });
                }
            }
        }
    }
    Ok(traj)
}

/// Integrate with a fixed step of (at most) `h`, same fifth-order kernel,
/// no error control. Exists so step-halving convergence of the kernel can
/// be certified directly.
pub fn integrate_emden_fixed(initial: &EmdenState, t_end: f64, h: f64) -> Result<EmdenTrajectory> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Config(format!("step must be positive, got {h}")));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Config(format!("t_end must be positive, got {t_end}")));
    }
    EmdenState::new(initial.r, initial.r_dot, initial.mass, initial.dim)?;
    let n_steps = (t_end / h).ceil().max(1.0) as usize;
    let h = t_end / n_steps as f64;
    let mut traj = EmdenTrajectory {
        times: vec![0.0],
        states: vec![[initial.r, initial.r_dot]],
        derivs: vec![rhs_pair([initial.r, initial.r_dot], initial.mass, initial.dim)?],
        mass: initial.mass,
        dim: initial.dim,
    };
    let mut y = [initial.r, initial.r_dot];
    let mut k1 = traj.derivs[0];
    for step in 1..=n_steps {
        let (y_new, k7, _) = try_step(y, k1, h, initial.mass, initial.dim).ok_or_else(|| {
            Error::Numeric {
                last_valid_time: (step - 1) as f64 * h,
                what: "companion model hit the R = 0 barrier".into(),
            }
        })?;
        y = y_new;
        k1 = k7;
        traj.times.push(step as f64 * h);
        traj.states.push(y);
        traj.derivs.push(k1);
    }
    Ok(traj)
}

/// Doubling bound from the velocity line integral: when the integral is
/// positive, the support cannot double before t = 2 R / integral under the
/// companion model; a non-positive integral supports no such statement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlowupBound {
    Finite(f64),
    NotApplicable,
}

pub fn blowup_bound(r_support: f64, v_integral: f64) -> Result<BlowupBound> {
    if !(r_support >= 0.0) || !r_support.is_finite() || !v_integral.is_finite() {
        return Err(Error::Domain(format!(
            "doubling bound needs finite inputs, got R = {r_support}, integral = {v_integral}"
        )));
    }
    if v_integral > 0.0 {
        Ok(BlowupBound::Finite(2.0 * r_support / v_integral))
    } else {
        Ok(BlowupBound::NotApplicable)
    }
}

/// Line integral of the velocity in plain dr from the center to the edge
/// of the support: trapezoids through the cell centers, closed by V = 0 at
/// the origin and a constant extension over the final half cell.
pub fn velocity_line_integral(state: &FluidState) -> f64 {
    let mut last = None;
    for (i, &rho) in state.rho.iter().enumerate() {
        if rho > state.support_threshold {
            last = Some(i);
        }
    }
    let Some(last) = last else { return 0.0 };
    let dr = state.grid.dr;
    let mut integral = 0.5 * state.velocity[0] * state.grid.r_centers[0];
    for i in 0..last {
        integral += 0.5 * (state.velocity[i] + state.velocity[i + 1]) * dr;
    }
    integral += state.velocity[last] * 0.5 * dr;
    integral
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PhysicsParams;
    use crate::solver::{init_scenario, InitialProfile, InitialVelocity, ScenarioConfig};
    use proptest::prelude::*;

    /// R(1) for R'' = 1/R, R(0) = 1, R'(0) = 0, to full double precision
    /// (the ODE reduces to a closed form through the imaginary error
    /// function; this value is its Richardson-verified evaluation).
    const PLANAR_UNIT_RADIUS_AT_ONE: f64 = 1.4657576107596589;
    const PLANAR_UNIT_SPEED_AT_ONE: f64 = 0.8744967115412951;

    #[test]
    fn rhs_examples() {
        assert_eq!(emden_rhs(1.0, 0.0, 1.0, 2).unwrap(), (0.0, 1.0));
        assert_eq!(emden_rhs(2.0, 0.3, 2.0, 3).unwrap(), (0.3, 0.5));
        assert!(matches!(emden_rhs(0.0, 0.0, 1.0, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn mass_conversion_is_identity_below_four_dimensions() {
        assert!((emden_mass(3.0, 2).unwrap() - 3.0).abs() <= 1e-14);
        assert!((emden_mass(3.0, 3).unwrap() - 3.0).abs() <= 1e-14);
        // alpha/S_N = N - 2 for N >= 3.
        assert!((emden_mass(3.0, 4).unwrap() - 6.0).abs() <= 1e-12);
    }

    #[test]
    fn massless_model_moves_in_a_straight_line() {
        let initial = EmdenState::new(1.0, 0.5, 0.0, 3).unwrap();
        let traj = integrate_emden(&initial, 2.0, 1e-9).unwrap();
        let end = traj.end();
        assert!((end.r - 2.0).abs() <= 1e-12);
        assert!((end.r_dot - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn planar_unit_trajectory_matches_the_closed_form() {
        let initial = EmdenState::new(1.0, 0.0, 1.0, 2).unwrap();
        let traj = integrate_emden(&initial, 1.0, 1e-10).unwrap();
        let end = traj.end();
        assert!(
            (end.r - PLANAR_UNIT_RADIUS_AT_ONE).abs() <= 1e-8,
            "R(1) = {}",
            end.r
        );
        assert!((end.r_dot - PLANAR_UNIT_SPEED_AT_ONE).abs() <= 1e-8);
    }

    #[test]
    fn first_integral_is_conserved_through_a_turning_point() {
        // Inward launch: the repulsive term reverses the motion without
        // letting R reach zero.
        let initial = EmdenState::new(1.0, -0.8, 1.0, 3).unwrap();
        let traj = integrate_emden(&initial, 3.0, 1e-9).unwrap();
        let end = traj.end();
        assert!(end.r > 0.0);
        assert!(end.r_dot > 0.0, "motion should have reversed, R' = {}", end.r_dot);
        let fi0 = first_integral(&initial).unwrap();
        let fi1 = first_integral(&end).unwrap();
        assert!((fi1 - fi0).abs() <= 1e-7, "energy drifted by {}", fi1 - fi0);
    }

    #[test]
    fn fixed_step_halving_cuts_the_error_well_beyond_second_order() {
        let initial = EmdenState::new(1.0, 0.0, 1.0, 2).unwrap();
        let coarse = integrate_emden_fixed(&initial, 1.0, 0.1).unwrap().end().r;
        let fine = integrate_emden_fixed(&initial, 1.0, 0.05).unwrap().end().r;
        let e_coarse = (coarse - PLANAR_UNIT_RADIUS_AT_ONE).abs();
        let e_fine = (fine - PLANAR_UNIT_RADIUS_AT_ONE).abs();
        assert!(
            e_coarse >= 3.5 * e_fine,
            "halving the step only cut the error from {e_coarse:.3e} to {e_fine:.3e}"
        );
    }

    #[test]
    fn dense_sampling_interpolates_the_accepted_nodes() {
        let initial = EmdenState::new(1.0, 0.0, 1.0, 2).unwrap();
        let traj = integrate_emden(&initial, 1.0, 1e-9).unwrap();
        // Exact at nodes.
        let k = traj.n_nodes() / 2;
        let (r, v) = traj.sample(traj.times[k]).unwrap();
        assert_eq!(r, traj.states[k][0]);
        assert_eq!(v, traj.states[k][1]);
        // Close to a much finer reference in between.
        let reference = integrate_emden(&initial, 0.37, 1e-11).unwrap().end();
        let (r, v) = traj.sample(0.37).unwrap();
        assert!((r - reference.r).abs() <= 1e-6, "r = {r} vs {}", reference.r);
        assert!((v - reference.r_dot).abs() <= 1e-6);
        // Outside the span is a domain error.
        assert!(matches!(traj.sample(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn integration_validates_its_controls() {
        let initial = EmdenState::new(1.0, 0.0, 1.0, 2).unwrap();
        assert!(matches!(integrate_emden(&initial, 1.0, 1e-1), Err(Error::Config(_))));
        assert!(matches!(integrate_emden(&initial, 1.0, 1e-13), Err(Error::Config(_))));
        assert!(matches!(integrate_emden(&initial, -1.0, 1e-8), Err(Error::Config(_))));
        assert!(matches!(EmdenState::new(-1.0, 0.0, 1.0, 2), Err(Error::Domain(_))));
        assert!(matches!(integrate_emden_fixed(&initial, 1.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn doubling_bound_examples() {
        assert_eq!(blowup_bound(3.0, 1.5).unwrap(), BlowupBound::Finite(4.0));
        assert_eq!(blowup_bound(3.0, 0.0).unwrap(), BlowupBound::NotApplicable);
        assert_eq!(blowup_bound(3.0, -0.2).unwrap(), BlowupBound::NotApplicable);
        assert!(matches!(blowup_bound(f64::NAN, 1.0), Err(Error::Domain(_))));
    }

    fn ball_with_velocity(velocity: InitialVelocity) -> FluidState {
        let params = PhysicsParams::new(3, 1.4, 0.0, 0.0).unwrap();
        let mut config = ScenarioConfig::new(
            params,
            256,
            1.28,
            InitialProfile::UniformBall { rho0: 1.0, radius: 1.0 },
            1.0,
        );
        config.velocity = velocity;
        init_scenario(&config).unwrap()
    }

    #[test]
    fn velocity_line_integral_examples() {
        // V = 0 everywhere.
        let state = ball_with_velocity(InitialVelocity::Zero);
        assert_eq!(velocity_line_integral(&state), 0.0);

        // V = c on the support: the integral is c R up to the origin
        // closure (V jumps from 0 at r = 0 to c on the first cell).
        let state = ball_with_velocity(InitialVelocity::Table(vec![(0.0, 0.7), (2.0, 0.7)]));
        let h0 = velocity_line_integral(&state);
        assert!((h0 - 0.7).abs() <= 2e-3 * 0.7, "h0 = {h0}");

        // V = r: the integral is R^2 / 2, and the rule is exact on linear
        // data up to the final half-cell extension.
        let state = ball_with_velocity(InitialVelocity::Linear { rate: 1.0 });
        let h0 = velocity_line_integral(&state);
        assert!((h0 - 0.5).abs() <= 1e-3, "h0 = {h0}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        /// The first integral is conserved by the adaptive integrator for
        /// arbitrary admissible launches.
        #[test]
        fn prop_first_integral_is_conserved(
            r0 in 0.5f64..3.0,
            v0 in -1.0f64..1.5,
            mass in 0.1f64..5.0,
            dim in 2u32..5,
        ) {
            let initial = EmdenState::new(r0, v0, mass, dim).unwrap();
            let traj = integrate_emden(&initial, 2.0, 1e-8).unwrap();
            let fi0 = first_integral(&initial).unwrap();
            let fi1 = first_integral(&traj.end()).unwrap();
            prop_assert!((fi1 - fi0).abs() <= 1e-5 * fi0.abs().max(1.0));
        }
    }
}
