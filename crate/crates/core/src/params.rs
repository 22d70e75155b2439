//! Physical parameters and the closed-form constants they depend on: the
//! dimensional coupling constant of the field equation, the free-space
//! Green kernel, and the gamma-law pressure closure.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Volume of the unit ball in R^N.
///
/// Computed by the half-integer recurrence V(N) = 2 pi V(N-2) / N with
/// V(0) = 1 and V(1) = 2, which keeps the value bit-stable for small
/// integer N (no calls into a general Gamma function).
pub fn unit_ball_volume(dim: u32) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        n => 2.0 * PI * unit_ball_volume(n - 2) / n as f64,
    }
}

/// Surface measure of the unit sphere in R^N: S_N = N V(N).
pub fn unit_sphere_area(dim: u32) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

/// Coupling constant alpha(N) of the field equation Delta Phi = alpha(N) rho.
///
/// alpha(1) = 2, alpha(2) = 2 pi, and alpha(N) = N (N - 2) V(N) for N >= 3,
/// so that Phi = G * rho solves the field equation with the kernel from
/// [`green_kernel`].
pub fn alpha(dim: u32) -> Result<f64> {
    match dim {
        0 => Err(Error::Domain("alpha requires dimension N >= 1".into())),
        1 => Ok(2.0),
        2 => Ok(2.0 * PI),
        n => Ok(n as f64 * (n - 2) as f64 * unit_ball_volume(n)),
    }
}

/// Free-space kernel G evaluated at a separation distance:
/// |x| for N = 1, log |x| for N = 2, and -|x|^(2-N) for N >= 3.
pub fn green_kernel(distance: f64, dim: u32) -> Result<f64> {
    if dim == 0 {
        return Err(Error::Domain("green_kernel requires dimension N >= 1".into()));
    }
    if !(distance > 0.0) {
        return Err(Error::Domain(format!(
            "green_kernel requires distance > 0, got {distance}"
        )));
    }
    Ok(match dim {
        1 => distance,
        2 => distance.ln(),
        n => -distance.powi(2 - n as i32),
    })
}

/// Bulk physical parameters shared by the grid, field, solver and
/// diagnostics layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    /// Spatial dimension N (>= 2; the radial solver needs a real origin).
    pub dim: u32,
    /// Adiabatic exponent gamma >= 1 of the pressure law P = K rho^gamma.
    pub gamma: f64,
    /// Pressure constant K >= 0. K = 0 is the valid pressureless regime.
    pub k: f64,
    /// Frictional damping coefficient beta >= 0.
    pub beta: f64,
    /// Cached coupling constant alpha(N).
    pub alpha: f64,
}

impl PhysicsParams {
    pub fn new(dim: u32, gamma: f64, k: f64, beta: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!(
                "dimension must satisfy N >= 2, got {dim}"
            )));
        }
        if !(gamma >= 1.0) || !gamma.is_finite() {
            return Err(Error::Config(format!(
                "adiabatic exponent must satisfy gamma >= 1, got {gamma}"
            )));
        }
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::Config(format!(
                "pressure constant must satisfy K >= 0, got {k}"
            )));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Config(format!(
                "damping coefficient must satisfy beta >= 0, got {beta}"
            )));
        }
        let alpha = alpha(dim).expect("dim >= 2 is in range");
        Ok(Self { dim, gamma, k, beta, alpha })
    }

    /// Same as [`PhysicsParams::new`] with the conventional default
    /// K = 1/gamma.
    pub fn with_default_k(dim: u32, gamma: f64, beta: f64) -> Result<Self> {
        Self::new(dim, gamma, 1.0 / gamma, beta)
    }

    /// Pressure P(rho) = K rho^gamma. Zero identically when K = 0.
    pub fn pressure(&self, rho: f64) -> Result<f64> {
        if !(rho >= 0.0) {
            return Err(Error::Domain(format!(
                "pressure requires rho >= 0, got {rho}"
            )));
        }
        Ok(if self.k == 0.0 { 0.0 } else { self.k * rho.powf(self.gamma) })
    }

    /// Adiabatic sound speed c(rho) = sqrt(K gamma rho^(gamma - 1)).
    ///
    /// Returns 0 when K = 0, and when rho = 0 with gamma > 1.
    pub fn sound_speed(&self, rho: f64) -> Result<f64> {
        if !(rho >= 0.0) {
            return Err(Error::Domain(format!(
                "sound_speed requires rho >= 0, got {rho}"
            )));
        }
        if self.k == 0.0 {
            return Ok(0.0);
        }
        Ok((self.k * self.gamma * rho.powf(self.gamma - 1.0)).sqrt())
    }
}

// ============================================================================
