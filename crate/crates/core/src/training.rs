//! Beam-training protocols and the noiseless scoring oracle.
//!
//! Every protocol sends deterministic pilots `x = √P` and adds an independent
//! circularly-symmetric Gaussian noise draw of variance `σ²` to each one.
//! Argmax ties always resolve to the lowest angle index, then the lowest
//! distance index.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::codebook::{CodewordId, FarFieldCodebook, PolarCodebook};
use crate::error::{Error, Result};
use crate::geometry::{near_steering, ChannelVector, ComplexVector, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedPilot {
    /// Far-field codewords are reported as distance index 0.
    pub codeword: CodewordId,
    /// `|y|²`.
    pub power: f64,
    pub sample: Complex64,
}

/// Ψ: sorted angle indices whose pilot power exceeds `ρ² · max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantAngleSet {
    indices: Vec<usize>,
    threshold: f64,
}

impl DominantAngleSet {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `Med(Ψ)`: middle element, or the mean of the two middle elements.
    pub fn median(&self) -> f64 {
        let m = self.indices.len();
        if m % 2 == 1 {
            self.indices[m / 2] as f64
        } else {
            (self.indices[m / 2 - 1] + self.indices[m / 2]) as f64 / 2.0
        }
    }

    /// Span `max - min` of the region in grid steps.
    pub fn span(&self) -> usize {
        self.indices[self.indices.len() - 1] - self.indices[0]
    }
}

/// Ξ: K contiguous candidate angle indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateAngleSet {
    indices: Vec<usize>,
}

impl CandidateAngleSet {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, n: usize) -> bool {
        self.indices.contains(&n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    /// `None` for schemes that do not pick a codeword (perfect CSI, LS).
    pub selected: Option<CodewordId>,
    pub pilots_used: usize,
    pub beamformer: ComplexVector,
    pub pilots: Vec<ReceivedPilot>,
}

fn complex_noise<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * (variance / 2.0).sqrt()
}

/// `y = c^H v √P + z`.
pub fn receive_pilot<R: Rng + ?Sized>(
    channel: &ChannelVector,
    v: &ComplexVector,
    codeword: CodewordId,
    cfg: &SystemConfig,
    rng: &mut R,
) -> ReceivedPilot {
    let sample =
        channel.vector.dot_conj(v) * cfg.tx_power.sqrt() + complex_noise(rng, cfg.noise_power);
    ReceivedPilot {
        codeword,
        power: sample.norm_sqr(),
        sample,
    }
}

/// First index of the strict maximum power.
fn strongest(pilots: &[ReceivedPilot]) -> usize {
    let mut best = 0;
    for (i, p) in pilots.iter().enumerate().skip(1) {
        if p.power > pilots[best].power {
            best = i;
        }
    }
    best
}

fn sweep_far<R: Rng + ?Sized>(
    channel: &ChannelVector,
    far: &FarFieldCodebook,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Vec<ReceivedPilot> {
    far.codewords()
        .iter()
        .enumerate()
        .map(|(i, w)| receive_pilot(channel, w, CodewordId::new(i + 1, 0), cfg, rng))
        .collect()
}

pub fn far_field_exhaustive<R: Rng + ?Sized>(
    channel: &ChannelVector,
    far: &FarFieldCodebook,
    cfg: &SystemConfig,
    rng: &mut R,
) -> TrainingOutcome {
    let pilots = sweep_far(channel, far, cfg, rng);
    let best = pilots[strongest(&pilots)].codeword;
    TrainingOutcome {
        selected: Some(best),
        pilots_used: pilots.len(),
        beamformer: far.codeword(best.angle_index).clone(),
        pilots,
    }
}

pub fn polar_exhaustive<R: Rng + ?Sized>(
    channel: &ChannelVector,
    polar: &PolarCodebook,
    cfg: &SystemConfig,
    rng: &mut R,
) -> TrainingOutcome {
    let pilots: Vec<ReceivedPilot> = polar
        .iter()
        .map(|(id, f)| receive_pilot(channel, f, id, cfg, rng))
        .collect();
    let best = pilots[strongest(&pilots)].codeword;
    TrainingOutcome {
        selected: Some(best),
        pilots_used: pilots.len(),
        beamformer: polar.codeword(best).expect("id from sweep").clone(),
        pilots,
    }
}

/// Ψ = {n : |y(w_n)|² > ρ² max |y(w)|²}. The strongest index is always a
/// member, which only matters when every measured power is zero.
pub fn dominant_angle_region(pilots: &[ReceivedPilot], rho: f64) -> Result<DominantAngleSet> {
    if pilots.is_empty() {
        return Err(Error::Argument("no far-field pilots".into()));
    }
    let best = strongest(pilots);
    let threshold = rho * rho * pilots[best].power;
    let mut indices: Vec<usize> = pilots
        .iter()
        .enumerate()
        .filter(|&(i, p)| i == best || p.power > threshold)
        .map(|(_, p)| p.codeword.angle_index)
        .collect();
    indices.sort_unstable();
    indices.dedup();
    Ok(DominantAngleSet { indices, threshold })
}

/// Middle-K selection around `⌊Med(Ψ)⌋`, shifted inward when the window
/// would leave `[1, N]`.
pub fn middle_k_candidates(
    region: &DominantAngleSet,
    k: usize,
    num_antennas: usize,
) -> Result<CandidateAngleSet> {
    if k == 0 || k > num_antennas {
        return Err(Error::Argument(format!(
            "candidate count {k} outside 1..={num_antennas}"
        )));
    }
    if region.is_empty() {
        return Err(Error::Argument("empty dominant-angle region".into()));
    }
    let center = region.median().floor() as i64;
    let below = ((k - 1) / 2) as i64;
    let above = (k / 2) as i64; // ⌈(K-1)/2⌉
    let mut start = center - below;
    let mut end = center + above;
    if start < 1 {
        end += 1 - start;
        start = 1;
    }
    if end > num_antennas as i64 {
        start -= end - num_antennas as i64;
        end = num_antennas as i64;
    }
    Ok(CandidateAngleSet {
        indices: (start..=end).map(|n| n as usize).collect(),
    })
}

/// Both phases of the angle-then-distance search with an explicit K.
pub fn two_phase_with_candidates<R: Rng + ?Sized>(
    channel: &ChannelVector,
    far: &FarFieldCodebook,
    polar: &PolarCodebook,
    cfg: &SystemConfig,
    k: usize,
    rng: &mut R,
) -> Result<(TrainingOutcome, DominantAngleSet, CandidateAngleSet)> {
    let mut pilots = sweep_far(channel, far, cfg, rng);
    let region = dominant_angle_region(&pilots, cfg.gain_threshold)?;
    let candidates = middle_k_candidates(&region, k, far.len())?;

    let phase_one = pilots.len();
    for &n in candidates.indices() {
        for (s, f) in polar.entry(n).codewords.iter().enumerate() {
            pilots.push(receive_pilot(channel, f, CodewordId::new(n, s), cfg, rng));
        }
    }
    let best = phase_one + strongest(&pilots[phase_one..]);
    let selected = pilots[best].codeword;
    let outcome = TrainingOutcome {
        selected: Some(selected),
        pilots_used: pilots.len(),
        beamformer: polar.codeword(selected).expect("id from sweep").clone(),
        pilots,
    };
    Ok((outcome, region, candidates))
}

pub fn two_phase_training<R: Rng + ?Sized>(
    channel: &ChannelVector,
    far: &FarFieldCodebook,
    polar: &PolarCodebook,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<TrainingOutcome> {
    two_phase_with_candidates(channel, far, polar, cfg, cfg.num_candidates, rng).map(|r| r.0)
}

/// Noiseless `argmax_f |c^H f|²` over the whole polar codebook.
pub fn oracle_best_codeword(channel: &ChannelVector, polar: &PolarCodebook) -> CodewordId {
    let mut best = CodewordId::new(1, 0);
    let mut best_power = f64::NEG_INFINITY;
    for (id, f) in polar.iter() {
        let p = channel.vector.dot_conj(f).norm_sqr();
        if p > best_power {
            best_power = p;
            best = id;
        }
    }
    best
}

/// Least-squares estimate of the channel column from `N` pilots sent through
/// the far-field codebook. Returns the estimate and the received pilots.
pub fn ls_channel_estimate<R: Rng + ?Sized>(
    channel: &ChannelVector,
    far: &FarFieldCodebook,
    cfg: &SystemConfig,
    rng: &mut R,
) -> (ComplexVector, Vec<ReceivedPilot>) {
    let pilots = sweep_far(channel, far, cfg, rng);
    let n = far.len();
    let scale = 1.0 / cfg.tx_power.sqrt();
    // y = √P c^H W + z and W W^H = I, so c^H ≈ y W^H / √P.
    let estimate = (0..n)
        .map(|i| {
            let row: Complex64 = pilots
                .iter()
                .zip(far.codewords())
                .map(|(p, w)| p.sample * w[i].conj())
                .sum();
            (row * scale).conj()
        })
        .collect();
    (ComplexVector::new(estimate), pilots)
}

/// LS estimation followed by a phase-only (unit-modulus) matched beamformer.
pub fn ls_channel_estimation_baseline<R: Rng + ?Sized>(
    channel: &ChannelVector,
    far: &FarFieldCodebook,
    cfg: &SystemConfig,
    rng: &mut R,
) -> TrainingOutcome {
    let (estimate, pilots) = ls_channel_estimate(channel, far, cfg, rng);
    let amp = 1.0 / (estimate.len() as f64).sqrt();
    let beamformer = estimate
        .iter()
        .map(|z| Complex64::from_polar(amp, z.arg()))
        .collect();
    TrainingOutcome {
        selected: None,
        pilots_used: pilots.len(),
        beamformer: ComplexVector::new(beamformer),
        pilots,
    }
}

/// Beamformer matched exactly to the true near-field steering vector.
pub fn perfect_csi(channel: &ChannelVector, cfg: &SystemConfig) -> TrainingOutcome {
    TrainingOutcome {
        selected: None,
        pilots_used: 0,
        beamformer: near_steering(&channel.truth, cfg),
        pilots: Vec::new(),
    }
}
