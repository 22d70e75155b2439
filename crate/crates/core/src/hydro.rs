//! Finite-volume kernels for the hyperbolic sub-step: MUSCL linear
//! reconstruction with a minmod limiter and a two-wave HLL interface flux,
//! assembled in shell-volume conservative form with a well-balanced
//! geometric pressure source.
//!
//! Conservative variables are the per-steradian pair (rho, rho V); the grid
//! supplies exact shell weights and edge areas, so the update telescopes and
//! total mass is conserved to rounding. Both boundaries are reflecting: the
//! origin edge has zero area, and the outer wall flux vanishes identically
//! by mirror symmetry (runs abort before the support gets there).

use crate::grid::RadialGrid;
use crate::params::PhysicsParams;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Edge count at which the parallel flux kernel starts to pay; below it the
/// sequential kernel is used.
#[cfg(feature = "parallel")]
pub const PAR_MIN_EDGES: usize = 8192;

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() <= b.abs() {
        a
    } else {
        b
    }
}

#[inline]
fn pressure_of(rho: f64, k: f64, gamma: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * rho.powf(gamma)
    }
}

#[inline]
fn sound_speed_of(rho: f64, k: f64, gamma: f64) -> f64 {
    if k == 0.0 || rho <= 0.0 {
        0.0
    } else {
        (k * gamma * rho.powf(gamma - 1.0)).sqrt()
    }
}

/// Two-wave HLL flux for the (rho, rho V) system with Davis wave-speed
/// estimates. Upwind branches avoid the degenerate division when both
/// waves collapse onto one side (the pressureless case).
#[inline]
fn hll_flux(rl: f64, vl: f64, rr: f64, vr: f64, k: f64, gamma: f64) -> (f64, f64) {
    if rl <= 0.0 && rr <= 0.0 {
        return (0.0, 0.0);
    }
    let pl = pressure_of(rl, k, gamma);
    let pr = pressure_of(rr, k, gamma);
    let cl = sound_speed_of(rl, k, gamma);
    let cr = sound_speed_of(rr, k, gamma);
    let sl = (vl - cl).min(vr - cr);
    let sr = (vl + cl).max(vr + cr);
    let fl = (rl * vl, rl * vl * vl + pl);
    let fr = (rr * vr, rr * vr * vr + pr);
    if sl >= 0.0 {
        fl
    } else if sr <= 0.0 {
        fr
    } else {
        let inv = 1.0 / (sr - sl);
        (
            (sr * fl.0 - sl * fr.0 + sl * sr * (rr - rl)) * inv,
            (sr * fl.1 - sl * fr.1 + sl * sr * (rr * vr - rl * vl)) * inv,
        )
    }
}

/// Minmod slope per cell for both primitives. Boundary cells take mirrored
/// ghost neighbors (rho even, V odd) through the reflecting walls.
pub fn compute_slopes(rho: &[f64], v: &[f64], slope_rho: &mut [f64], slope_v: &mut [f64]) {
    let n = rho.len();
    for i in 0..n {
        let (rho_lo, v_lo) = if i == 0 { (rho[0], -v[0]) } else { (rho[i - 1], v[i - 1]) };
        let (rho_hi, v_hi) =
            if i == n - 1 { (rho[n - 1], -v[n - 1]) } else { (rho[i + 1], v[i + 1]) };
        slope_rho[i] = minmod(rho[i] - rho_lo, rho_hi - rho[i]);
        slope_v[i] = minmod(v[i] - v_lo, v_hi - v[i]);
    }
}

#[inline]
fn edge_flux(
    j: usize,
    n: usize,
    rho: &[f64],
    v: &[f64],
    slope_rho: &[f64],
    slope_v: &[f64],
    k: f64,
    gamma: f64,
) -> (f64, f64) {
    if j == 0 {
        // Origin edge has zero area; its flux never enters the update.
        return (0.0, 0.0);
    }
    let (rl, vl) = {
        let i = j - 1;
        (rho[i] + 0.5 * slope_rho[i], v[i] + 0.5 * slope_v[i])
    };
    if j == n {
        // Outer wall: mirror the reconstructed left state. The mass flux of
        // the mirrored Riemann problem is exactly zero.
        return hll_flux(rl, vl, rl, -vl, k, gamma);
    }
    let (rr, vr) = (rho[j] - 0.5 * slope_rho[j], v[j] - 0.5 * slope_v[j]);
    hll_flux(rl.max(0.0), vl, rr.max(0.0), vr, k, gamma)
}

/// Interface fluxes at all n + 1 edges (sequential kernel).
#[allow(clippy::too_many_arguments)]
pub fn edge_fluxes_seq(
    rho: &[f64],
    v: &[f64],
    slope_rho: &[f64],
    slope_v: &[f64],
    k: f64,
    gamma: f64,
    flux_rho: &mut [f64],
    flux_mom: &mut [f64],
) {
    let n = rho.len();
    for j in 0..=n {
        let (f0, f1) = edge_flux(j, n, rho, v, slope_rho, slope_v, k, gamma);
        flux_rho[j] = f0;
        flux_mom[j] = f1;
    }
}

/// Interface fluxes at all n + 1 edges (rayon kernel). Edges are
/// independent, so the output is bit-identical to the sequential kernel.
#[cfg(feature = "parallel")]
#[allow(clippy::too_many_arguments)]
pub fn edge_fluxes_par(
    rho: &[f64],
    v: &[f64],
    slope_rho: &[f64],
    slope_v: &[f64],
    k: f64,
    gamma: f64,
    flux_rho: &mut [f64],
    flux_mom: &mut [f64],
) {
    let n = rho.len();
    flux_rho
        .par_iter_mut()
        .zip(flux_mom.par_iter_mut())
        .enumerate()
        .for_each(|(j, (fr, fm))| {
            let (f0, f1) = edge_flux(j, n, rho, v, slope_rho, slope_v, k, gamma);
            *fr = f0;
            *fm = f1;
        });
}

/// Scratch space reused across stages and steps.
#[derive(Debug, Clone)]
pub struct RhsBuffers {
    pub slope_rho: Vec<f64>,
    pub slope_v: Vec<f64>,
    pub flux_rho: Vec<f64>,
    pub flux_mom: Vec<f64>,
}

impl RhsBuffers {
    pub fn new(n: usize) -> Self {
        Self {
            slope_rho: vec![0.0; n],
            slope_v: vec![0.0; n],
            flux_rho: vec![0.0; n + 1],
            flux_mom: vec![0.0; n + 1],
        }
    }
}

/// Rate of change of (rho, rho V) from the hyperbolic terms alone:
/// divergence of the HLL fluxes in shell-volume form plus the geometric
/// pressure source P (A_{i+1} - A_i) / w_i, which balances the pressure
/// flux difference exactly for a constant-pressure resting state.
pub fn hyperbolic_rhs(
    rho: &[f64],
    v: &[f64],
    grid: &RadialGrid,
    params: &PhysicsParams,
    buf: &mut RhsBuffers,
    drho: &mut [f64],
    dmom: &mut [f64],
) {
    let n = rho.len();
    compute_slopes(rho, v, &mut buf.slope_rho, &mut buf.slope_v);

    #[cfg(feature = "parallel")]
    if n + 1 >= PAR_MIN_EDGES {
        edge_fluxes_par(
            rho,
            v,
            &buf.slope_rho,
            &buf.slope_v,
            params.k,
            params.gamma,
            &mut buf.flux_rho,
            &mut buf.flux_mom,
        );
    } else {
        edge_fluxes_seq(
            rho,
            v,
            &buf.slope_rho,
            &buf.slope_v,
            params.k,
            params.gamma,
            &mut buf.flux_rho,
            &mut buf.flux_mom,
        );
    }
    #[cfg(not(feature = "parallel"))]
    edge_fluxes_seq(
        rho,
        v,
        &buf.slope_rho,
        &buf.slope_v,
        params.k,
        params.gamma,
        &mut buf.flux_rho,
        &mut buf.flux_mom,
    );

    for i in 0..n {
        let a_lo = grid.edge_areas[i];
        let a_hi = grid.edge_areas[i + 1];
        let w = grid.sterad_weights[i];
        drho[i] = -(a_hi * buf.flux_rho[i + 1] - a_lo * buf.flux_rho[i]) / w;
        let p_i = pressure_of(rho[i], params.k, params.gamma);
        dmom[i] =
            -(a_hi * buf.flux_mom[i + 1] - a_lo * buf.flux_mom[i]) / w + p_i * (a_hi - a_lo) / w;
    }
}

/// Largest signal speed |V| + c over the cells; 0 for an all-vacuum state.
pub fn max_signal_speed(rho: &[f64], v: &[f64], params: &PhysicsParams) -> f64 {
    let mut s = 0.0f64;
    for i in 0..rho.len() {
        s = s.max(v[i].abs() + sound_speed_of(rho[i], params.k, params.gamma));
    }
    s
}

// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minmod_picks_the_smaller_magnitude_or_zero() {
        assert_eq!(minmod(1.0, 2.0), 1.0);
        assert_eq!(minmod(-2.0, -1.0), -1.0);
        assert_eq!(minmod(1.0, -1.0), 0.0);
        assert_eq!(minmod(0.0, 5.0), 0.0);
    }

    #[test]
    fn hll_is_consistent_with_the_exact_flux_for_equal_states() {
        let (k, gamma) = (0.6, 5.0 / 3.0);
        let (rho, v) = (1.3, 0.7);
        let (f0, f1) = hll_flux(rho, v, rho, v, k, gamma);
        let p = pressure_of(rho, k, gamma);
        assert!((f0 - rho * v).abs() < 1e-14);
        assert!((f1 - (rho * v * v + p)).abs() < 1e-14);
    }

    #[test]
    fn hll_handles_pressureless_degenerate_waves() {
        // Both waves collapse to the common velocity; the upwind branch
        // must fire without dividing by zero.
        let (f0, f1) = hll_flux(2.0, 1.0, 1.0, 1.0, 0.0, 1.0);
        assert_eq!(f0, 2.0);
        assert_eq!(f1, 2.0);
        let (g0, g1) = hll_flux(2.0, -1.0, 1.0, -1.0, 0.0, 1.0);
        assert_eq!(g0, -1.0);
        assert_eq!(g1, 1.0);
    }

    #[test]
    fn wall_mirror_flux_carries_no_mass() {
        let (f0, _f1) = hll_flux(1.0, 0.9, 1.0, -0.9, 0.6, 5.0 / 3.0);
        assert_eq!(f0, 0.0);
    }

    #[test]
    fn constant_pressure_resting_state_is_well_balanced() {
        // Uniform density filling the whole domain, zero velocity: the
        // geometric source must cancel the pressure flux difference exactly.
        let g = RadialGrid::uniform(32, 1.0, 3).unwrap();
        let p = PhysicsParams::new(3, 5.0 / 3.0, 0.6, 0.0).unwrap();
        let rho = vec![1.0; 32];
        let v = vec![0.0; 32];
        let mut buf = RhsBuffers::new(32);
        let mut drho = vec![0.0; 32];
        let mut dmom = vec![0.0; 32];
        hyperbolic_rhs(&rho, &v, &g, &p, &mut buf, &mut drho, &mut dmom);
        for i in 0..32 {
            assert!(drho[i].abs() < 1e-13, "cell {i}: drho = {}", drho[i]);
            assert!(dmom[i].abs() < 1e-12, "cell {i}: dmom = {}", dmom[i]);
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_flux_kernel_matches_sequential_bitwise() {
        let n = 20_000;
        let g = RadialGrid::uniform(n, 2.0, 3).unwrap();
        let rho: Vec<f64> =
            g.r_centers.iter().map(|&r| if r < 1.0 { 1.0 - 0.5 * r } else { 0.0 }).collect();
        let v: Vec<f64> = g.r_centers.iter().map(|&r| 0.3 * r).collect();
        let mut sr = vec![0.0; n];
        let mut sv = vec![0.0; n];
        compute_slopes(&rho, &v, &mut sr, &mut sv);
        let mut fr_a = vec![0.0; n + 1];
        let mut fm_a = vec![0.0; n + 1];
        let mut fr_b = vec![0.0; n + 1];
        let mut fm_b = vec![0.0; n + 1];
        edge_fluxes_seq(&rho, &v, &sr, &sv, 0.6, 5.0 / 3.0, &mut fr_a, &mut fm_a);
        edge_fluxes_par(&rho, &v, &sr, &sv, 0.6, 5.0 / 3.0, &mut fr_b, &mut fm_b);
        assert_eq!(fr_a, fr_b);
        assert_eq!(fm_a, fm_b);
    }
}
