//! Array geometry, steering vectors and line-of-sight channel synthesis.
//!
//! The base station is an `N`-element uniform linear array on the y-axis with
//! element `n` (1-based) at `(0, δ_n d)`, `δ_n = (2n - N - 1)/2`. All vectors
//! are stored as columns; a row such as `b^H(θ, r)` is the conjugate transpose
//! of the stored column, and inner products conjugate their first argument.

use std::f64::consts::PI;
use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Physical and algorithmic parameters shared by every module.
///
/// Wavelength and element spacing are derived from the carrier frequency, so
/// `λ = c/f` and `d = λ/2` hold by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub num_antennas: usize,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// Reference channel gain at 1 m (linear power ratio).
    pub ref_gain: f64,
    /// Transmit power in watts.
    pub tx_power: f64,
    /// Noise power in watts.
    pub noise_power: f64,
    /// α_Δ, controls the column coherence of the polar codebook.
    pub coherence_param: f64,
    /// ρ in (0, 1): amplitude threshold of the dominant-angle region.
    pub gain_threshold: f64,
    /// K: number of candidate angles kept after the angle sweep.
    pub num_candidates: usize,
    /// S: uniform number of distance samples per angle (including s = 0).
    pub distance_samples: usize,
    /// Optional per-angle override of S, one entry per grid angle.
    pub per_angle_samples: Option<Vec<usize>>,
    /// Polar samples closer than this are dropped; 0 disables truncation.
    pub min_distance: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            num_antennas: 256,
            carrier_freq: 100e9,
            ref_gain: db_to_linear(-72.0),
            tx_power: dbm_to_watts(30.0),
            noise_power: dbm_to_watts(-70.0),
            coherence_param: 1.2,
            gain_threshold: std::f64::consts::FRAC_1_SQRT_2,
            num_candidates: 3,
            distance_samples: 6,
            per_angle_samples: None,
            min_distance: 0.0,
        }
    }
}

impl SystemConfig {
    /// Default parameters with a different array size.
    pub fn with_antennas(num_antennas: usize) -> Self {
        SystemConfig {
            num_antennas,
            ..Default::default()
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn spacing(&self) -> f64 {
        self.wavelength() / 2.0
    }

    /// Physical span of the array, `(N - 1) d`.
    pub fn aperture(&self) -> f64 {
        (self.num_antennas as f64 - 1.0) * self.spacing()
    }

    /// Number of distance samples requested for the 1-based grid angle `n`.
    pub fn samples_for_angle(&self, n: usize) -> usize {
        match &self.per_angle_samples {
            Some(v) => v[n - 1],
            None => self.distance_samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn invalid(field: &str, message: impl Into<String>) -> Error {
            Error::ConfigValidation {
                field: field.to_string(),
                message: message.into(),
            }
        }
        let positive = [
            ("carrier_freq", self.carrier_freq),
            ("ref_gain", self.ref_gain),
            ("tx_power", self.tx_power),
            ("noise_power", self.noise_power),
            ("coherence_param", self.coherence_param),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(field, format!("must be positive, got {value}")));
            }
        }
        if self.num_antennas < 2 {
            return Err(invalid("num_antennas", "must be at least 2"));
        }
        if !(self.gain_threshold > 0.0 && self.gain_threshold < 1.0) {
            return Err(invalid("gain_threshold", "must lie in (0, 1)"));
        }
        if self.num_candidates == 0 || self.num_candidates > self.num_antennas {
            return Err(invalid("num_candidates", "must lie in [1, num_antennas]"));
        }
        if self.distance_samples == 0 {
            return Err(invalid("distance_samples", "must be at least 1"));
        }
        if let Some(v) = &self.per_angle_samples {
            if v.len() != self.num_antennas {
                return Err(invalid(
                    "distance_samples_per_angle",
                    format!("expected {} entries, got {}", self.num_antennas, v.len()),
                ));
            }
            if v.contains(&0) {
                return Err(invalid("distance_samples_per_angle", "entries must be >= 1"));
            }
        }
        if !(self.min_distance.is_finite() && self.min_distance >= 0.0) {
            return Err(invalid("min_distance", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Ground-truth user position in polar coordinates around the array center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserLocation {
    theta: f64,
    distance: f64,
}

impl UserLocation {
    pub fn new(theta: f64, distance: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&theta) {
            return Err(Error::Domain(format!(
                "spatial angle must lie in [-1, 1], got {theta}"
            )));
        }
        if !(distance > 0.0) {
            return Err(Error::Domain(format!(
                "distance must be positive, got {distance}"
            )));
        }
        Ok(UserLocation { theta, distance })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }
}

/// Length-`N` complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        ComplexVector(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self^H other` without a length check.
    pub(crate) fn dot_conj(&self, other: &ComplexVector) -> Complex64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(u, w)| u.conj() * w)
            .sum()
    }

    /// `self^H other`.
    pub fn inner(&self, other: &ComplexVector) -> Result<Complex64> {
        if self.len() != other.len() {
            return Err(Error::Argument(format!(
                "length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self.dot_conj(other))
    }

    pub fn scaled(&self, factor: Complex64) -> ComplexVector {
        ComplexVector(self.0.iter().map(|z| z * factor).collect())
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// Line-of-sight channel toward one user.
///
/// `vector` is the column `c` with `c^H = √N h b^H(θ, r)`, so a pilot sent
/// with beamformer `v` is received as `c^H v x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub vector: ComplexVector,
    pub gain: Complex64,
    pub truth: UserLocation,
}

fn offset(index0: usize, n: usize) -> f64 {
    (2.0 * index0 as f64 + 1.0 - n as f64) / 2.0
}

/// δ_n = (2n - N - 1)/2 for the 1-based element index `n`.
pub fn antenna_offset(n: usize, cfg: &SystemConfig) -> Result<f64> {
    if n == 0 || n > cfg.num_antennas {
        return Err(Error::Argument(format!(
            "antenna index {n} outside 1..={}",
            cfg.num_antennas
        )));
    }
    Ok(offset(n - 1, cfg.num_antennas))
}

/// Returns `(r_n, r_n - r)` for an element at `(0, delta * d)`.
///
/// The difference is evaluated as `(δ²d² - 2rθδd)/(r_n + r)`, which stays
/// accurate when `r` is many orders of magnitude larger than the aperture.
fn element_distance(delta: f64, loc: &UserLocation, d: f64) -> (f64, f64) {
    let r = loc.distance;
    let y = delta * d;
    let numer = y * y - 2.0 * r * loc.theta * y;
    let rn = (r * r + numer).max(0.0).sqrt();
    let diff = if rn + r > 0.0 { numer / (rn + r) } else { 0.0 };
    (rn, diff)
}

/// Distance from element `n` (1-based) to the user.
pub fn per_antenna_distance(n: usize, loc: &UserLocation, cfg: &SystemConfig) -> Result<f64> {
    let delta = antenna_offset(n, cfg)?;
    Ok(element_distance(delta, loc, cfg.spacing()).0)
}

fn unit_phasor(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase.rem_euclid(2.0 * PI))
}

/// Near-field steering column `b(θ, r)`, entries `e^{+j2π(r_n - r)/λ}/√N`.
pub fn near_steering(loc: &UserLocation, cfg: &SystemConfig) -> ComplexVector {
    let n = cfg.num_antennas;
    let lambda = cfg.wavelength();
    let d = cfg.spacing();
    let amp = 1.0 / (n as f64).sqrt();
    ComplexVector(
        (0..n)
            .map(|i| {
                let (_, diff) = element_distance(offset(i, n), loc, d);
                unit_phasor(2.0 * PI * diff / lambda) * amp
            })
            .collect(),
    )
}

/// Far-field steering column `a(θ)`: the planar-wavefront limit of
/// [`near_steering`], entries `e^{-jπθδ_n}/√N`.
pub fn far_steering(theta: f64, cfg: &SystemConfig) -> ComplexVector {
    let n = cfg.num_antennas;
    let amp = 1.0 / (n as f64).sqrt();
    ComplexVector(
        (0..n)
            .map(|i| unit_phasor(-PI * theta * offset(i, n)) * amp)
            .collect(),
    )
}

/// LoS channel `√N h b(θ, r)` with `h = (√β / r) e^{-j2πr/λ}`.
pub fn synthesize_channel(loc: &UserLocation, cfg: &SystemConfig) -> ChannelVector {
    let r = loc.distance;
    let lambda = cfg.wavelength();
    // 2πr/λ can reach 1e5 rad; reduce the cycle count before forming the phase.
    let cycles = (r / lambda).fract();
    let gain = Complex64::from_polar(cfg.ref_gain.sqrt() / r, -2.0 * PI * cycles);
    let scale = (cfg.num_antennas as f64).sqrt() * gain.conj();
    ChannelVector {
        vector: near_steering(loc, cfg).scaled(scale),
        gain,
        truth: *loc,
    }
}

/// Normalized beam gain `|u^H w|`.
pub fn beam_gain(u: &ComplexVector, w: &ComplexVector) -> Result<f64> {
    Ok(u.inner(w)?.norm())
}

/// Rayleigh distance `2D²/λ`.
pub fn rayleigh_distance(aperture: f64, wavelength: f64) -> f64 {
    2.0 * aperture * aperture / wavelength
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg(n: usize) -> SystemConfig {
        SystemConfig::with_antennas(n)
    }

    /// Independent 2-D oracle: user at (r·sin φ, r·cos φ) with cos φ = θ.
    fn coordinate_distance(n: usize, loc: &UserLocation, cfg: &SystemConfig) -> f64 {
        let delta = (2.0 * n as f64 - cfg.num_antennas as f64 - 1.0) / 2.0;
        let cos_phi = loc.theta() * cfg.wavelength() / (2.0 * cfg.spacing());
        let sin_phi = (1.0 - cos_phi * cos_phi).sqrt();
        let user = (loc.distance() * sin_phi, loc.distance() * cos_phi);
        let elem = (0.0, delta * cfg.spacing());
        (user.0 - elem.0).hypot(user.1 - elem.1)
    }

    #[test]
    fn offsets() {
        assert_eq!(antenna_offset(1, &cfg(256)).unwrap(), -127.5);
        assert_eq!(antenna_offset(256, &cfg(256)).unwrap(), 127.5);
        assert_eq!(antenna_offset(128, &cfg(255)).unwrap(), 0.0);
        assert!(matches!(antenna_offset(0, &cfg(4)), Err(Error::Argument(_))));
        assert!(matches!(antenna_offset(5, &cfg(4)), Err(Error::Argument(_))));
    }

    #[test]
    fn distance_special_cases() {
        let c = cfg(255);
        let loc = UserLocation::new(0.0, 10.0).unwrap();
        assert_eq!(per_antenna_distance(128, &loc, &c).unwrap(), 10.0);

        let c = cfg(256);
        let loc = UserLocation::new(1.0, 0.1).unwrap();
        for n in [1, 50, 128, 129, 256] {
            let delta = antenna_offset(n, &c).unwrap();
            let expected = (0.1 - delta * c.spacing()).abs();
            assert_relative_eq!(
                per_antenna_distance(n, &loc, &c).unwrap(),
                expected,
                max_relative = 1e-12
            );
        }

        let loc = UserLocation::new(0.5, 5.0).unwrap();
        assert_relative_eq!(
            per_antenna_distance(1, &loc, &c).unwrap(),
            coordinate_distance(1, &loc, &c),
            max_relative = 1e-12
        );
    }

    #[test]
    fn far_steering_basics() {
        let c = cfg(16);
        let a = far_steering(0.0, &c);
        for z in a.iter() {
            assert_relative_eq!(z.re, 0.25, epsilon = 1e-15);
            assert_relative_eq!(z.im, 0.0, epsilon = 1e-15);
        }
        let a = far_steering(0.37, &c);
        assert_relative_eq!(beam_gain(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        let grid = |n: usize| (2.0 * n as f64 - 17.0) / 16.0;
        for i in 1..=16 {
            for j in (i + 1)..=16 {
                let g = beam_gain(&far_steering(grid(i), &c), &far_steering(grid(j), &c)).unwrap();
                assert!(g < 1e-12, "({i},{j}) gain {g}");
            }
        }
    }

    #[test]
    fn near_far_mismatch_at_one_meter() {
        let c = cfg(256);
        let loc = UserLocation::new(0.3, 1.0).unwrap();
        let g = beam_gain(&near_steering(&loc, &c), &far_steering(0.3, &c)).unwrap();
        assert!(g < 0.5, "gain {g}");
    }

    /// Largest entrywise phase gap between b(θ, r) and a(θ).
    fn max_phase_gap(theta: f64, r: f64, c: &SystemConfig) -> f64 {
        let b = near_steering(&UserLocation::new(theta, r).unwrap(), c);
        let a = far_steering(theta, c);
        b.iter()
            .zip(a.iter())
            .map(|(x, y)| (x * y.conj()).arg().abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn near_converges_to_far() {
        let c = cfg(256);
        let z = crate::codebook::threshold_distance(&c);
        let edge = c.aperture() / 2.0;
        for theta in [-0.9, -0.3, 0.0, 0.45, 0.99] {
            let r = 1e6 * z;
            // second-order (Fresnel) term of r_n - r at the array edge
            let fresnel = PI * edge * edge * (1.0 - theta * theta) / (c.wavelength() * r);
            let gap = max_phase_gap(theta, r, &c);
            assert!((gap - fresnel).abs() < 1e-8, "θ={theta}: {gap} vs {fresnel}");
            assert!(max_phase_gap(theta, 1e7 * z, &c) < 1e-6);
        }
    }

    #[test]
    fn channel_norm_and_path_loss() {
        let c = cfg(64);
        let loc = UserLocation::new(-0.2, 7.0).unwrap();
        let h = synthesize_channel(&loc, &c);
        let expected = 8.0 * c.ref_gain.sqrt() / 7.0;
        assert_relative_eq!(h.vector.norm(), expected, max_relative = 1e-12);
        assert_relative_eq!(h.gain.norm(), c.ref_gain.sqrt() / 7.0, max_relative = 1e-12);
        let far = synthesize_channel(&UserLocation::new(-0.2, 14.0).unwrap(), &c);
        assert_relative_eq!(far.vector.norm() * 2.0, h.vector.norm(), max_relative = 1e-12);
    }

    #[test]
    fn invalid_locations() {
        assert!(matches!(UserLocation::new(0.3, 0.0), Err(Error::Domain(_))));
        assert!(matches!(UserLocation::new(1.2, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn beam_gain_length_mismatch() {
        let a = far_steering(0.1, &cfg(4));
        let b = far_steering(0.1, &cfg(8));
        assert!(matches!(beam_gain(&a, &b), Err(Error::Argument(_))));
    }

    #[test]
    fn rayleigh() {
        let lambda = SPEED_OF_LIGHT / 100e9;
        let z = rayleigh_distance(0.4, lambda);
        assert!((106.0..=108.0).contains(&z), "{z}");
        assert_relative_eq!(z, 106.7405, max_relative = 1e-5);
        let c = cfg(256);
        assert_relative_eq!(rayleigh_distance(c.aperture(), lambda), 97.47, max_relative = 1e-3);
        assert_relative_eq!(rayleigh_distance(0.384, lambda), 98.37, max_relative = 1e-3);
        assert_relative_eq!(rayleigh_distance(0.8, lambda), 4.0 * z, max_relative = 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::default().validate().is_ok());
        let mut c = SystemConfig::default();
        c.gain_threshold = 1.0;
        assert!(c.validate().is_err());
        let mut c = SystemConfig::default();
        c.num_candidates = 257;
        assert!(c.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn distance_matches_coordinate_geometry(
            theta in -1.0f64..=1.0,
            r in 0.5f64..200.0,
            n in 1usize..=256,
        ) {
            let c = cfg(256);
            let loc = UserLocation::new(theta, r).unwrap();
            let got = per_antenna_distance(n, &loc, &c).unwrap();
            let want = coordinate_distance(n, &loc, &c);
            prop_assert!((got - want).abs() <= 1e-10 * want);
        }

        #[test]
        fn distance_mirror_symmetry(theta in -1.0f64..=1.0, r in 0.5f64..200.0, n in 1usize..=64) {
            let c = cfg(64);
            let a = per_antenna_distance(n, &UserLocation::new(theta, r).unwrap(), &c).unwrap();
            let b = per_antenna_distance(65 - n, &UserLocation::new(-theta, r).unwrap(), &c).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn steering_vectors_have_unit_norm(
            theta in -1.0f64..=1.0,
            r in 0.1f64..1e4,
            n in 2usize..300,
        ) {
            let c = cfg(n);
            let b = near_steering(&UserLocation::new(theta, r).unwrap(), &c);
            let a = far_steering(theta, &c);
            prop_assert!((b.norm() - 1.0).abs() < 1e-12);
            prop_assert!((a.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn beam_gain_ignores_global_phase(
            t1 in -1.0f64..=1.0,
            t2 in -1.0f64..=1.0,
            r in 1.0f64..100.0,
            phi in 0.0f64..(2.0 * PI),
        ) {
            let c = cfg(64);
            let u = near_steering(&UserLocation::new(t1, r).unwrap(), &c);
            let w = far_steering(t2, &c);
            let rot = Complex64::from_polar(1.0, phi);
            let g = beam_gain(&u, &w).unwrap();
            prop_assert!((beam_gain(&u.scaled(rot), &w).unwrap() - g).abs() < 1e-12);
            prop_assert!((beam_gain(&u, &w.scaled(rot)).unwrap() - g).abs() < 1e-12);
        }
    }
}
