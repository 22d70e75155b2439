//! Radial field solve: cumulative moment, outward force field, and the
//! scalar potential anchored to the exterior closed form.
//!
//! For radially symmetric density the field equation Delta Phi = alpha(N) rho
//! reduces to the quadrature
//!
//!   Phi_r(r) = alpha(N) / r^(N-1) * integral_0^r rho(s) s^(N-1) ds,
//!
//! which this module evaluates exactly for piecewise-constant cell data.

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::params::PhysicsParams;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Cell count at which the parallel kernels start to pay for their
/// scheduling overhead; below it everything runs sequentially.
#[cfg(feature = "parallel")]
pub const PAR_MIN_CELLS: usize = 8192;

/// Solved field on one density snapshot.
#[derive(Debug, Clone)]
pub struct FieldState {
    /// Outward field strength Phi_r >= 0 at cell centers.
    pub phi_r: Vec<f64>,
    /// Potential Phi at cell centers (<= 0 everywhere for N >= 3).
    pub phi: Vec<f64>,
    /// Running moment integral_0^r rho s^(N-1) ds at cell edges
    /// (length n + 1, nondecreasing).
    pub cumulative_moment: Vec<f64>,
    /// False when the density support touches the outermost cell, in which
    /// case the exterior anchoring of `phi` is only approximate.
    pub anchored_outside_support: bool,
}

fn check_len(rho: &[f64], grid: &RadialGrid) -> Result<()> {
    if rho.len() != grid.n_cells() {
        return Err(Error::Contract(format!(
            "density has {} cells but the grid has {}",
            rho.len(),
            grid.n_cells()
        )));
    }
    Ok(())
}

/// Running moment m(r_j) = integral_0^{r_j} rho s^(N-1) ds at every cell
/// edge. Piecewise-constant cell densities are integrated exactly through
/// the antiderivative s^N / N, so the result is exact for the discrete data.
pub fn cumulative_moment(rho: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    check_len(rho, grid)?;
    let mut m = Vec::with_capacity(rho.len() + 1);
    let mut acc = 0.0;
    m.push(0.0);
    for (i, &den) in rho.iter().enumerate() {
        acc += den * grid.sterad_weights[i];
        m.push(acc);
    }
    Ok(m)
}

#[inline]
fn force_at_center(i: usize, rho: &[f64], moment_edges: &[f64], grid: &RadialGrid, alpha: f64) -> f64 {
    let rc = grid.r_centers[i];
    if rc == 0.0 {
        // Symmetry limit: the moment grows like r^N, so Phi_r -> 0 at the
        // origin.
        return 0.0;
    }
    let n = grid.dim;
    // Exact interior moment for a constant-density cell.
    let m_c = moment_edges[i]
        + rho[i] * (rc.powi(n as i32) - grid.r_edges[i].powi(n as i32)) / n as f64;
    alpha * m_c / rc.powi(n as i32 - 1)
}

/// Outward field Phi_r at every cell center (sequential kernel).
pub fn force_field_seq(
    rho: &[f64],
    moment_edges: &[f64],
    grid: &RadialGrid,
    alpha: f64,
    out: &mut [f64],
) {
    for i in 0..rho.len() {
        out[i] = force_at_center(i, rho, moment_edges, grid, alpha);
    }
}

/// Outward field Phi_r at every cell center (rayon kernel). Per-cell work is
/// independent, so the result is bit-identical to the sequential kernel.
#[cfg(feature = "parallel")]
pub fn force_field_par(
    rho: &[f64],
    moment_edges: &[f64],
    grid: &RadialGrid,
    alpha: f64,
    out: &mut [f64],
) {
    out.par_iter_mut().enumerate().for_each(|(i, slot)| {
        *slot = force_at_center(i, rho, moment_edges, grid, alpha);
    });
}

/// Outward field Phi_r = alpha(N) m(r) / r^(N-1) at every cell center.
pub fn force_field(rho: &[f64], grid: &RadialGrid, params: &PhysicsParams) -> Result<Vec<f64>> {
    check_len(rho, grid)?;
    let moment = cumulative_moment(rho, grid)?;
    let mut out = vec![0.0; rho.len()];
    dispatch_force(rho, &moment, grid, params.alpha, &mut out);
    Ok(out)
}

#[inline]
pub(crate) fn dispatch_force(
    rho: &[f64],
    moment_edges: &[f64],
    grid: &RadialGrid,
    alpha: f64,
    out: &mut [f64],
) {
    #[cfg(feature = "parallel")]
    if rho.len() >= PAR_MIN_CELLS {
        force_field_par(rho, moment_edges, grid, alpha, out);
        return;
    }
    force_field_seq(rho, moment_edges, grid, alpha, out);
}

/// Potential at cell centers, integrated inward from r_max by the trapezoid
/// rule and anchored to the exterior closed form of a ball of the same total
/// mass:
///
///   N >= 3:  Phi(r_max) = -alpha(N) M / ((N-2) S_N r_max^(N-2))
///   N  = 2:  Phi(r_max) =  alpha(2) M / S_2 * log(r_max)
///
/// where M is the total mass and S_N the unit-sphere area. Both match the
/// kernel convolution for any density supported inside r_max; the returned
/// flag is false when the support touches the boundary cell and the anchor
/// is therefore approximate.
pub fn potential(
    phi_r: &[f64],
    rho: &[f64],
    grid: &RadialGrid,
    params: &PhysicsParams,
) -> Result<(Vec<f64>, bool)> {
    check_len(rho, grid)?;
    if phi_r.len() != rho.len() {
        return Err(Error::Contract(format!(
            "phi_r has {} cells but the grid has {}",
            phi_r.len(),
            grid.n_cells()
        )));
    }
    let n = grid.n_cells();
    let dim = grid.dim;
    let moment_total = cumulative_moment(rho, grid)?[n];
    let r_max = grid.r_max();
    // Total mass is S_N times the per-steradian moment; the anchors below
    // are alpha M / ((N-2) S_N r^(N-2)) and alpha M / S_2 * log r written
    // with the S_N factor already cancelled.
    let anchor = if dim >= 3 {
        -params.alpha * moment_total / ((dim - 2) as f64 * r_max.powi(dim as i32 - 2))
    } else {
        params.alpha * moment_total * r_max.ln()
    };
    // Exterior field exactly at the boundary edge closes the last trapezoid.
    let phi_r_boundary = params.alpha * moment_total / r_max.powi(dim as i32 - 1);
    let mut phi = vec![0.0; n];
    let mut acc = anchor;
    acc -= 0.5 * (phi_r[n - 1] + phi_r_boundary) * (r_max - grid.r_centers[n - 1]);
    phi[n - 1] = acc;
    for i in (0..n - 1).rev() {
        acc -= 0.5 * (phi_r[i] + phi_r[i + 1]) * (grid.r_centers[i + 1] - grid.r_centers[i]);
        phi[i] = acc;
    }
    let anchored_outside_support = rho[n - 1] == 0.0;
    Ok((phi, anchored_outside_support))
}

/// Full field solve on one density snapshot: moment, force and potential.
pub fn solve(rho: &[f64], grid: &RadialGrid, params: &PhysicsParams) -> Result<FieldState> {
    check_len(rho, grid)?;
    let cumulative_moment_edges = cumulative_moment(rho, grid)?;
    let mut phi_r = vec![0.0; rho.len()];
    dispatch_force(rho, &cumulative_moment_edges, grid, params.alpha, &mut phi_r);
    let (phi, anchored_outside_support) = potential(&phi_r, rho, grid, params)?;
    Ok(FieldState {
        phi_r,
        phi,
        cumulative_moment: cumulative_moment_edges,
        anchored_outside_support,
    })
}

// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    #[cfg(feature = "parallel")]
    use crate::params::alpha;
    use crate::params::{green_kernel, unit_sphere_area};
    use proptest::prelude::*;

    fn params(dim: u32) -> PhysicsParams {
        PhysicsParams::new(dim, 5.0 / 3.0, 0.6, 0.0).unwrap()
    }

    /// Uniform ball sampled at cell centers; radius aligned to a cell edge
    /// so the discrete data represent the profile exactly.
    fn uniform_ball(grid: &RadialGrid, rho0: f64, radius: f64) -> Vec<f64> {
        grid.r_centers
            .iter()
            .map(|&r| if r < radius { rho0 } else { 0.0 })
            .collect()
    }

    #[test]
    fn moment_of_zero_density_is_zero() {
        let g = RadialGrid::uniform(32, 1.0, 3).unwrap();
        let m = cumulative_moment(&vec![0.0; 32], &g).unwrap();
        assert!(m.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn moment_matches_uniform_ball_closed_form() {
        // Inside: rho0 r^N / N. Outside: saturates at rho0 R0^N / N.
        let g = RadialGrid::uniform(128, 2.0, 3).unwrap();
        let rho0 = 1.3;
        let r0 = 1.0;
        let rho = uniform_ball(&g, rho0, r0);
        let m = cumulative_moment(&rho, &g).unwrap();
        for j in 0..=128 {
            let r = g.r_edges[j];
            let expect = if r <= r0 {
                rho0 * r.powi(3) / 3.0
            } else {
                rho0 * r0.powi(3) / 3.0
            };
            assert!(
                (m[j] - expect).abs() <= 1e-14 * expect.max(1.0),
                "edge {j}: {} vs {expect}",
                m[j]
            );
        }
        // Nondecreasing.
        for j in 0..128 {
            assert!(m[j + 1] >= m[j]);
        }
    }

    #[test]
    fn force_field_matches_uniform_ball_closed_form() {
        // Inside: alpha rho0 r / N. Outside: alpha rho0 R0^N / (N r^(N-1)).
        for dim in [2u32, 3, 4] {
            let g = RadialGrid::uniform(256, 2.0, dim).unwrap();
            let p = params(dim);
            let rho0 = 0.7;
            let r0 = 1.0;
            let rho = uniform_ball(&g, rho0, r0);
            let phi_r = force_field(&rho, &g, &p).unwrap();
            let nf = dim as f64;
            for (i, &r) in g.r_centers.iter().enumerate() {
                let expect = if r < r0 {
                    p.alpha * rho0 * r / nf
                } else {
                    p.alpha * rho0 * r0.powi(dim as i32) / (nf * r.powi(dim as i32 - 1))
                };
                let rel = ((phi_r[i] - expect) / expect).abs();
                assert!(rel < 1e-3, "dim {dim} cell {i}: {} vs {expect}", phi_r[i]);
            }
        }
    }

    #[test]
    fn force_field_of_zero_density_is_zero() {
        let g = RadialGrid::uniform(32, 1.0, 3).unwrap();
        let phi_r = force_field(&vec![0.0; 32], &g, &params(3)).unwrap();
        assert!(phi_r.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn potential_of_zero_density_is_zero() {
        let g = RadialGrid::uniform(32, 1.0, 3).unwrap();
        let f = solve(&vec![0.0; 32], &g, &params(3)).unwrap();
        assert!(f.phi.iter().all(|&x| x == 0.0));
        assert!(f.anchored_outside_support);
    }

    #[test]
    fn potential_matches_exterior_closed_form_n3() {
        // Outside a ball of total mass M the potential is -M / r^(N-2)
        // for N = 3 (kernel convolution of a point mass).
        let g = RadialGrid::uniform(256, 2.0, 3).unwrap();
        let p = params(3);
        let rho = uniform_ball(&g, 1.0, 1.0);
        let f = solve(&rho, &g, &p).unwrap();
        let mass = 4.0 * std::f64::consts::PI / 3.0;
        for (i, &r) in g.r_centers.iter().enumerate() {
            if r > 1.1 {
                let expect = -mass / r;
                let rel = ((f.phi[i] - expect) / expect).abs();
                assert!(rel < 2e-3, "cell {i} at r = {r}: {} vs {expect}", f.phi[i]);
            }
        }
    }

    /// Two-way check of Phi(0): inward trapezoid integration against direct
    /// quadrature of the kernel, Phi(0) = S_N sum_cells G(s) rho s^(N-1) ds,
    /// where each cell integral has a closed form for N = 3 (G = -1/s gives
    /// the antiderivative -s^2/2 against the s^2 weight).
    #[test]
    fn potential_at_origin_agrees_with_kernel_quadrature() {
        let g = RadialGrid::uniform(256, 2.0, 3).unwrap();
        let p = params(3);
        // Smooth profile: parabolic cap.
        let rho: Vec<f64> = g
            .r_centers
            .iter()
            .map(|&r| if r < 1.0 { 1.5 * (1.0 - r * r) } else { 0.0 })
            .collect();
        let f = solve(&rho, &g, &p).unwrap();
        // Phi(0) = S_3 integral G(s) rho(s) s^2 ds with G = -1/s, so each
        // constant-density cell contributes -S_3 rho (r_{i+1}^2 - r_i^2)/2
        // exactly. (alpha(3) = S_3, so the convolution gauge matches.)
        let sn = unit_sphere_area(3);
        let mut phi0 = 0.0;
        for i in 0..g.n_cells() {
            phi0 -= sn * rho[i] * (g.r_edges[i + 1].powi(2) - g.r_edges[i].powi(2)) / 2.0;
        }
        let inward = f.phi[0];
        let rel = ((inward - phi0) / phi0).abs();
        assert!(rel < 0.01, "inward integration {inward} vs quadrature {phi0}");
    }

    /// Independent oracle for an off-center value of the potential in N = 3:
    /// direct quadrature of the convolution Phi(x) = integral G(|x-y|) rho(y) dy
    /// over a radius-angle product grid (the azimuthal integral is closed-form).
    #[test]
    fn potential_matches_kernel_convolution_off_center() {
        let g = RadialGrid::uniform(256, 2.0, 3).unwrap();
        let p = params(3);
        let rho = uniform_ball(&g, 1.0, 1.0);
        let f = solve(&rho, &g, &p).unwrap();

        let r_eval = g.r_centers[200]; // exterior point, r about 1.57
        let n_s = 400;
        let n_th = 400;
        let mut phi_conv = 0.0;
        for is in 0..n_s {
            let s = (is as f64 + 0.5) / n_s as f64; // support is [0, 1]
            let ds = 1.0 / n_s as f64;
            let den = 1.0;
            for it in 0..n_th {
                let th = std::f64::consts::PI * (it as f64 + 0.5) / n_th as f64;
                let dth = std::f64::consts::PI / n_th as f64;
                let dist = (r_eval * r_eval + s * s - 2.0 * r_eval * s * th.cos()).sqrt();
                let kernel = green_kernel(dist, 3).unwrap();
                // 2 pi from the azimuth, sin(theta) from the polar measure.
                phi_conv +=
                    2.0 * std::f64::consts::PI * kernel * den * s * s * th.sin() * ds * dth;
            }
        }
        let ours = f.phi[200];
        let rel = ((ours - phi_conv) / phi_conv).abs();
        assert!(rel < 0.01, "solver {ours} vs convolution {phi_conv}");
    }

    #[test]
    fn potential_anchor_in_two_dimensions_matches_log_field() {
        // Exterior solution for N = 2 is M log r; check a few exterior
        // centers.
        let g = RadialGrid::uniform(256, 4.0, 2).unwrap();
        let p = params(2);
        let rho = uniform_ball(&g, 1.0, 1.0);
        let f = solve(&rho, &g, &p).unwrap();
        let mass = std::f64::consts::PI; // pi R0^2 rho0
        for (i, &r) in g.r_centers.iter().enumerate() {
            if r > 1.5 {
                let expect = mass * r.ln();
                assert!(
                    (f.phi[i] - expect).abs() < 2e-3 * mass,
                    "cell {i} at r = {r}: {} vs {expect}",
                    f.phi[i]
                );
            }
        }
    }

    #[test]
    fn support_touching_the_boundary_is_flagged() {
        let g = RadialGrid::uniform(32, 1.0, 3).unwrap();
        let rho = vec![1.0; 32];
        let f = solve(&rho, &g, &params(3)).unwrap();
        assert!(!f.anchored_outside_support);
    }

    /// The discrete field must satisfy the radial field equation
    /// (r^(N-1) Phi_r)_r = alpha rho r^(N-1): the centered-difference
    /// residual, normalized by the source scale, shrinks at least first
    /// order under refinement.
    #[test]
    fn field_equation_residual_converges() {
        let mut last = f64::INFINITY;
        for n in [128usize, 256, 512] {
            let g = RadialGrid::uniform(n, 2.0, 3).unwrap();
            let p = params(3);
            let rho: Vec<f64> = g
                .r_centers
                .iter()
                .map(|&r| if r < 1.0 { (1.0 - r * r).powi(2) } else { 0.0 })
                .collect();
            let phi_r = force_field(&rho, &g, &p).unwrap();
            let scale = g
                .r_centers
                .iter()
                .zip(&rho)
                .map(|(&r, &d)| p.alpha * d * r * r)
                .fold(0.0f64, f64::max);
            let mut worst = 0.0f64;
            for i in 1..n - 1 {
                let r = g.r_centers[i];
                let flux_hi = g.r_centers[i + 1].powi(2) * phi_r[i + 1];
                let flux_lo = g.r_centers[i - 1].powi(2) * phi_r[i - 1];
                let residual =
                    (flux_hi - flux_lo) / (2.0 * g.dr) - p.alpha * rho[i] * r * r;
                worst = worst.max(residual.abs() / scale);
            }
            assert!(
                worst < 0.6 * last || worst < 1e-12,
                "residual {worst} did not shrink from {last} at n = {n}"
            );
            last = worst;
        }
    }

    #[test]
    fn field_is_linear_in_the_density() {
        let g = RadialGrid::uniform(64, 2.0, 3).unwrap();
        let p = params(3);
        let rho: Vec<f64> = g.r_centers.iter().map(|&r| (2.0 - r).max(0.0)).collect();
        let doubled: Vec<f64> = rho.iter().map(|&x| 2.0 * x).collect();
        let f1 = force_field(&rho, &g, &p).unwrap();
        let f2 = force_field(&doubled, &g, &p).unwrap();
        for i in 0..64 {
            assert!(
                (f2[i] - 2.0 * f1[i]).abs() <= 1e-12 * f1[i].abs().max(1e-300),
                "cell {i}: {} vs {}",
                f2[i],
                2.0 * f1[i]
            );
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_kernels_agree_bitwise() {
        let g = RadialGrid::uniform(10_000, 2.0, 3).unwrap();
        let rho: Vec<f64> =
            g.r_centers.iter().map(|&r| if r < 1.0 { 1.0 + r } else { 0.0 }).collect();
        let m = cumulative_moment(&rho, &g).unwrap();
        let mut a = vec![0.0; rho.len()];
        let mut b = vec![0.0; rho.len()];
        let coupling = alpha(3).unwrap();
        force_field_seq(&rho, &m, &g, coupling, &mut a);
        force_field_par(&rho, &m, &g, coupling, &mut b);
        assert_eq!(a, b);
    }

    proptest! {
        /// The outward field is nonnegative for any nonnegative density.
        #[test]
        fn prop_force_field_nonnegative(seed in proptest::collection::vec(0.0f64..5.0, 32),
                                        dim in 2u32..=4) {
            let g = RadialGrid::uniform(32, 1.0, dim).unwrap();
            let p = params(dim);
            let phi_r = force_field(&seed, &g, &p).unwrap();
            prop_assert!(phi_r.iter().all(|&x| x >= 0.0));
        }

        /// The potential is nonpositive everywhere for N >= 3 (negative
        /// kernel against nonnegative density).
        #[test]
        fn prop_potential_nonpositive_n3(seed in proptest::collection::vec(0.0f64..5.0, 32),
                                         dim in 3u32..=4) {
            let g = RadialGrid::uniform(32, 1.0, dim).unwrap();
            let p = PhysicsParams::new(dim, 1.4, 1.0, 0.0).unwrap();
            let f = solve(&seed, &g, &p).unwrap();
            prop_assert!(f.phi.iter().all(|&x| x <= 0.0));
        }
    }
}
