//! Gain of far-field beams toward near- or far-field users, as a function
//! of the beam's steering angle.

use crate::codebook::{nearest_grid_index, CodewordId, FarFieldCodebook};
use crate::geometry::{far_steering, near_steering, SystemConfig, UserLocation};
use crate::training::{dominant_angle_region, DominantAngleSet, ReceivedPilot};

/// `|b^H(θ, r) a(Ω)|` for every Ω in `omegas`.
pub fn gain_curve(loc: &UserLocation, cfg: &SystemConfig, omegas: &[f64]) -> Vec<f64> {
    let b = near_steering(loc, cfg);
    omegas
        .iter()
        .map(|&omega| b.dot_conj(&far_steering(omega, cfg)).norm())
        .collect()
}

/// Gains toward the user of each far-field codeword, in index order.
pub fn codebook_gains(loc: &UserLocation, cfg: &SystemConfig, far: &FarFieldCodebook) -> Vec<f64> {
    let b = near_steering(loc, cfg);
    far.codewords().iter().map(|w| b.dot_conj(w).norm()).collect()
}

/// Summary of the noiseless dominant-angle region of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSummary {
    pub loc: UserLocation,
    pub region: DominantAngleSet,
    /// Number of grid positions between the region's outer indices, inclusive.
    pub width: usize,
    pub median_floor: usize,
    pub true_index: usize,
}

impl RegionSummary {
    pub fn median_deviation(&self) -> usize {
        self.median_floor.abs_diff(self.true_index)
    }
}

pub fn noiseless_region(
    loc: &UserLocation,
    cfg: &SystemConfig,
    far: &FarFieldCodebook,
) -> RegionSummary {
    let pilots: Vec<ReceivedPilot> = codebook_gains(loc, cfg, far)
        .into_iter()
        .enumerate()
        .map(|(i, g)| ReceivedPilot {
            codeword: CodewordId::new(i + 1, 0),
            power: g * g,
            sample: num_complex::Complex64::new(g, 0.0),
        })
        .collect();
    let region = dominant_angle_region(&pilots, cfg.gain_threshold).expect("non-empty sweep");
    RegionSummary {
        loc: *loc,
        width: region.span() + 1,
        median_floor: region.median().floor() as usize,
        true_index: nearest_grid_index(loc.theta(), cfg.num_antennas),
        region,
    }
}
