//! Cell-centered radial grid with exact N-dimensional shell-volume weights.

use crate::error::{Error, Result};
use crate::params::{unit_ball_volume, unit_sphere_area};

/// Uniform cell-centered grid on [0, r_max].
///
/// Cell i spans [r_edges[i], r_edges[i+1]] and owns the exact shell volume
/// V(N) (r_{i+1}^N - r_i^N). The per-steradian weights (r_{i+1}^N - r_i^N)/N
/// and edge areas r^(N-1) used by the finite-volume update are precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    /// Spatial dimension N.
    pub dim: u32,
    /// Cell edge radii, length n + 1, strictly increasing, r_edges[0] = 0.
    pub r_edges: Vec<f64>,
    /// Cell center radii, length n.
    pub r_centers: Vec<f64>,
    /// Full shell volumes per cell; they sum to the volume of the
    /// r_max ball.
    pub cell_volumes: Vec<f64>,
    /// Per-steradian volume weights (r_{i+1}^N - r_i^N) / N.
    pub sterad_weights: Vec<f64>,
    /// Per-steradian edge areas r_j^(N-1), length n + 1.
    pub edge_areas: Vec<f64>,
    /// Uniform cell width.
    pub dr: f64,
}

impl RadialGrid {
    pub fn uniform(n_cells: usize, r_max: f64, dim: u32) -> Result<Self> {
        if n_cells < 8 {
            return Err(Error::Config(format!(
                "grid must have n_cells >= 8, got {n_cells}"
            )));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::Config(format!(
                "grid must have r_max > 0, got {r_max}"
            )));
        }
        if dim < 1 {
            return Err(Error::Config("grid dimension must be >= 1".into()));
        }
        let n = n_cells;
        // Edges as exact fractions of r_max so the last edge is r_max
        // bit-for-bit.
        let r_edges: Vec<f64> = (0..=n).map(|j| r_max * j as f64 / n as f64).collect();
        let r_centers: Vec<f64> = (0..n).map(|i| 0.5 * (r_edges[i] + r_edges[i + 1])).collect();
        let vn = unit_ball_volume(dim);
        let sn = unit_sphere_area(dim);
        let powers: Vec<f64> = r_edges.iter().map(|&r| r.powi(dim as i32)).collect();
        let cell_volumes: Vec<f64> =
            (0..n).map(|i| vn * (powers[i + 1] - powers[i])).collect();
        let sterad_weights: Vec<f64> =
            (0..n).map(|i| (powers[i + 1] - powers[i]) / dim as f64).collect();
        let edge_areas: Vec<f64> =
            r_edges.iter().map(|&r| r.powi(dim as i32 - 1)).collect();
        let dr = r_max / n as f64;
        let _ = sn;
        Ok(Self { dim, r_edges, r_centers, cell_volumes, sterad_weights, edge_areas, dr })
    }

    pub fn n_cells(&self) -> usize {
        self.r_centers.len()
    }

    pub fn r_max(&self) -> f64 {
        *self.r_edges.last().expect("grid has edges")
    }

    /// Volume of the ball of radius r_max (the whole computational domain).
    pub fn domain_volume(&self) -> f64 {
        unit_ball_volume(self.dim) * self.r_max().powi(self.dim as i32)
    }
}

// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn edges_start_at_zero_and_increase() {
        let g = RadialGrid::uniform(64, 2.5, 3).unwrap();
        assert_eq!(g.r_edges[0], 0.0);
        assert_eq!(g.r_edges[64], 2.5);
        for j in 0..64 {
            assert!(g.r_edges[j] < g.r_edges[j + 1]);
            assert!(g.r_centers[j] > g.r_edges[j] && g.r_centers[j] < g.r_edges[j + 1]);
        }
    }

    #[test]
    fn volumes_sum_to_the_domain_ball() {
        for dim in 2..=4 {
            let g = RadialGrid::uniform(128, 1.7, dim).unwrap();
            let total: f64 = g.cell_volumes.iter().sum();
            let ball = g.domain_volume();
            assert!(
                ((total - ball) / ball).abs() < 1e-12,
                "dim {dim}: sum {total} vs ball {ball}"
            );
        }
    }

    #[test]
    fn rejects_tiny_grids_and_bad_radius() {
        assert!(RadialGrid::uniform(4, 1.0, 3).is_err());
        assert!(RadialGrid::uniform(16, 0.0, 3).is_err());
        assert!(RadialGrid::uniform(16, -1.0, 3).is_err());
    }

    proptest! {
        /// Shell volumes telescope to the domain ball for arbitrary
        /// admissible grids.
        #[test]
        fn prop_volume_sum(n in 8usize..512, r_max in 1e-2f64..1e3, dim in 2u32..=4) {
            let g = RadialGrid::uniform(n, r_max, dim).unwrap();
            let total: f64 = g.cell_volumes.iter().sum();
            let ball = g.domain_volume();
            prop_assert!(((total - ball) / ball).abs() < 1e-12);
        }
    }
}
