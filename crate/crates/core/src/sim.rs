//! Monte Carlo harness: SNR and distance sweeps over all training schemes.
//!
//! Each trial owns a ChaCha8 stream seeded from `(seed, point, trial)`, so
//! results do not depend on how trials are scheduled across threads.
//! Aggregates are summed in trial order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::codebook::{
    build_far_codebook, build_polar_codebook, CodewordId, FarFieldCodebook, PolarCodebook,
};
use crate::error::{Error, Result};
use crate::geometry::{
    beam_gain, db_to_linear, near_steering, synthesize_channel, ComplexVector, SystemConfig,
    UserLocation,
};
use crate::training::{
    far_field_exhaustive, ls_channel_estimation_baseline, oracle_best_codeword, perfect_csi,
    polar_exhaustive, two_phase_with_candidates, TrainingOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    PerfectCsi,
    PolarExhaustive,
    TwoPhase { candidates: usize },
    FarField,
    LsEstimation,
}

impl Scheme {
    /// Perfect CSI, polar exhaustive, two-phase (K), far-field.
    pub fn distance_defaults(k: usize) -> Vec<Scheme> {
        vec![
            Scheme::PerfectCsi,
            Scheme::PolarExhaustive,
            Scheme::TwoPhase { candidates: k },
            Scheme::FarField,
        ]
    }

    /// Every scheme, with two-phase at K and at K = 1.
    pub fn snr_defaults(k: usize) -> Vec<Scheme> {
        let mut v = vec![Scheme::PerfectCsi, Scheme::PolarExhaustive];
        v.push(Scheme::TwoPhase { candidates: k });
        if k != 1 {
            v.push(Scheme::TwoPhase { candidates: 1 });
        }
        v.push(Scheme::FarField);
        v.push(Scheme::LsEstimation);
        v
    }

    /// Parses a comma-separated list; a bare `two-phase` takes `default_k`.
    pub fn parse_list(list: &str, default_k: usize) -> Result<Vec<Scheme>> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                if s == "two-phase" {
                    Ok(Scheme::TwoPhase {
                        candidates: default_k,
                    })
                } else {
                    s.parse()
                }
            })
            .collect()
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::PerfectCsi => f.write_str("perfect-csi"),
            Scheme::PolarExhaustive => f.write_str("exhaustive"),
            Scheme::TwoPhase { candidates } => write!(f, "two-phase-k{candidates}"),
            Scheme::FarField => f.write_str("far-field"),
            Scheme::LsEstimation => f.write_str("ls"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perfect-csi" => Ok(Scheme::PerfectCsi),
            "exhaustive" => Ok(Scheme::PolarExhaustive),
            "far-field" => Ok(Scheme::FarField),
            "ls" => Ok(Scheme::LsEstimation),
            _ => s
                .strip_prefix("two-phase-k")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k > 0)
                .map(|candidates| Scheme::TwoPhase { candidates })
                .ok_or_else(|| Error::Argument(format!("unknown scheme `{s}`"))),
        }
    }
}

/// Far-field and polar codebooks shared read-only by all trials.
#[derive(Debug, Clone)]
pub struct Codebooks {
    pub far: FarFieldCodebook,
    pub polar: PolarCodebook,
}

impl Codebooks {
    pub fn build(cfg: &SystemConfig) -> Self {
        Codebooks {
            far: build_far_codebook(cfg),
            polar: build_polar_codebook(cfg),
        }
    }
}

/// `SNR = PβN / (r² σ²)` (linear).
pub fn reference_snr(cfg: &SystemConfig, distance: f64) -> f64 {
    cfg.tx_power * cfg.ref_gain * cfg.num_antennas as f64
        / (distance * distance * cfg.noise_power)
}

/// Transmit power that yields the linear reference SNR `snr` at `distance`.
pub fn tx_power_for_snr(cfg: &SystemConfig, snr: f64, distance: f64) -> f64 {
    snr * distance * distance * cfg.noise_power / (cfg.ref_gain * cfg.num_antennas as f64)
}

/// `log2(1 + PβN |b^H(θ, r) v|² / (r² σ²))`.
pub fn achievable_rate(truth: &UserLocation, v: &ComplexVector, cfg: &SystemConfig) -> f64 {
    let b = near_steering(truth, cfg);
    let gain = b.dot_conj(v).norm_sqr();
    (1.0 + reference_snr(cfg, truth.distance()) * gain).log2()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    Fixed(f64),
    Uniform(f64, f64),
}

impl Sampling {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Sampling::Fixed(v) => v,
            Sampling::Uniform(lo, hi) if lo == hi => lo,
            Sampling::Uniform(lo, hi) => rng.random_range(lo..=hi),
        }
    }
}

pub fn draw_user<R: Rng + ?Sized>(
    rng: &mut R,
    distance: Sampling,
    angle: Sampling,
) -> Result<UserLocation> {
    let theta = angle.draw(rng);
    let r = distance.draw(rng);
    UserLocation::new(theta, r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeTrial {
    pub scheme: Scheme,
    pub selected: Option<CodewordId>,
    pub pilots_used: usize,
    pub rate: f64,
    /// `None` when the scheme does not select a polar codeword.
    pub success: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub truth: UserLocation,
    pub oracle: CodewordId,
    pub schemes: Vec<SchemeTrial>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeStats {
    pub scheme: Scheme,
    pub success_rate: Option<f64>,
    pub mean_rate: f64,
    /// Mean pilots per trial; exact for uniform codebooks.
    pub overhead: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub stats: Vec<SchemeStats>,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Snr,
    Distance,
    Single,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::Snr => "snr",
            SweepKind::Distance => "distance",
            SweepKind::Single => "single",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub seed: u64,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    pub points: Vec<SweepPoint>,
    /// Free-form `key=value` notes describing the sweep geometry.
    pub notes: Vec<(String, String)>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the RNG stream owned by one trial.
pub fn stream_seed(master: u64, point: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ point) ^ trial)
}

fn run_scheme<R: Rng + ?Sized>(
    scheme: Scheme,
    channel: &crate::geometry::ChannelVector,
    books: &Codebooks,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<TrainingOutcome> {
    Ok(match scheme {
        Scheme::PerfectCsi => perfect_csi(channel, cfg),
        Scheme::PolarExhaustive => polar_exhaustive(channel, &books.polar, cfg, rng),
        Scheme::TwoPhase { candidates } => {
            two_phase_with_candidates(channel, &books.far, &books.polar, cfg, candidates, rng)?.0
        }
        Scheme::FarField => far_field_exhaustive(channel, &books.far, cfg, rng),
        Scheme::LsEstimation => ls_channel_estimation_baseline(channel, &books.far, cfg, rng),
    })
}

/// Runs every scheme once for one user; returns the oracle and full outcomes.
pub fn run_single<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    books: &Codebooks,
    truth: &UserLocation,
    schemes: &[Scheme],
    rng: &mut R,
) -> Result<(CodewordId, Vec<(Scheme, TrainingOutcome, f64)>)> {
    let channel = synthesize_channel(truth, cfg);
    let oracle = oracle_best_codeword(&channel, &books.polar);
    let outcomes = schemes
        .iter()
        .map(|&scheme| {
            let out = run_scheme(scheme, &channel, books, cfg, rng)?;
            let rate = achievable_rate(truth, &out.beamformer, cfg);
            Ok((scheme, out, rate))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((oracle, outcomes))
}

fn run_trial(
    cfg: &SystemConfig,
    books: &Codebooks,
    schemes: &[Scheme],
    distance: Sampling,
    seed: u64,
) -> Result<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = draw_user(&mut rng, distance, Sampling::Uniform(-1.0, 1.0))?;
    let (oracle, outcomes) = run_single(cfg, books, &truth, schemes, &mut rng)?;
    let schemes = outcomes
        .into_iter()
        .map(|(scheme, out, rate)| SchemeTrial {
            scheme,
            selected: out.selected,
            pilots_used: out.pilots_used,
            rate,
            success: match scheme {
                Scheme::PerfectCsi | Scheme::LsEstimation => None,
                _ => out.selected.map(|id| id == oracle),
            },
        })
        .collect();
    Ok(TrialRecord {
        truth,
        oracle,
        schemes,
    })
}

/// Per-scheme means over `records`, accumulated in record order.
pub fn aggregate(schemes: &[Scheme], records: &[TrialRecord]) -> Vec<SchemeStats> {
    let m = records.len();
    schemes
        .iter()
        .enumerate()
        .map(|(i, &scheme)| {
            let mut hits = 0usize;
            let mut scored = 0usize;
            let mut rate = 0.0;
            let mut pilots = 0usize;
            for rec in records {
                let t = &rec.schemes[i];
                rate += t.rate;
                pilots += t.pilots_used;
                if let Some(ok) = t.success {
                    scored += 1;
                    hits += ok as usize;
                }
            }
            SchemeStats {
                scheme,
                success_rate: (scored > 0).then(|| hits as f64 / scored as f64),
                mean_rate: rate / m as f64,
                overhead: pilots as f64 / m as f64,
                trials: m,
            }
        })
        .collect()
}

fn run_point(
    cfg: &SystemConfig,
    books: &Codebooks,
    schemes: &[Scheme],
    distance: Sampling,
    value: f64,
    point: usize,
    trials: usize,
    seed: u64,
) -> Result<SweepPoint> {
    let records = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, books, schemes, distance, stream_seed(seed, point as u64, t as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepPoint {
        value,
        stats: aggregate(schemes, &records),
        records,
    })
}

fn check_common(trials: usize, schemes: &[Scheme], cfg: &SystemConfig) -> Result<()> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::Argument("at least one trial is required".into()));
    }
    if schemes.is_empty() {
        return Err(Error::Argument("no schemes selected".into()));
    }
    for s in schemes {
        if let Scheme::TwoPhase { candidates } = s {
            if *candidates == 0 || *candidates > cfg.num_antennas {
                return Err(Error::Argument(format!("{s}: K outside 1..=N")));
            }
        }
    }
    Ok(())
}

/// Success and rate versus reference SNR. Users sit at the fixed `distance`
/// with θ ~ U[-1, 1]; P is set per point so the reference SNR at that
/// distance equals the point value.
pub fn run_snr_sweep(
    cfg: &SystemConfig,
    books: &Codebooks,
    snr_points_db: &[f64],
    trials: usize,
    schemes: &[Scheme],
    seed: u64,
    distance: f64,
) -> Result<SweepReport> {
    check_common(trials, schemes, cfg)?;
    if snr_points_db.is_empty() {
        return Err(Error::Argument("no SNR points".into()));
    }
    if !(distance > 0.0) {
        return Err(Error::Argument(format!("user distance {distance} must be positive")));
    }
    let points = snr_points_db
        .iter()
        .enumerate()
        .map(|(i, &snr_db)| {
            let point_cfg = SystemConfig {
                tx_power: tx_power_for_snr(cfg, db_to_linear(snr_db), distance),
                ..cfg.clone()
            };
            run_point(&point_cfg, books, schemes, Sampling::Fixed(distance), snr_db, i, trials, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        kind: SweepKind::Snr,
        seed,
        trials,
        schemes: schemes.to_vec(),
        points,
        notes: vec![
            ("user_distance_m".into(), distance.to_string()),
            ("theta".into(), "uniform[-1,1]".into()),
            ("tx_power".into(), "per-point from reference SNR".into()),
        ],
    })
}

/// Success and rate versus distance at the configured transmit power, with
/// θ ~ U[-1, 1].
pub fn run_distance_sweep(
    cfg: &SystemConfig,
    books: &Codebooks,
    distances: &[f64],
    trials: usize,
    schemes: &[Scheme],
    seed: u64,
) -> Result<SweepReport> {
    check_common(trials, schemes, cfg)?;
    if distances.is_empty() {
        return Err(Error::Argument("no distance points".into()));
    }
    if let Some(r) = distances.iter().find(|&&r| !(r > 0.0)) {
        return Err(Error::Argument(format!("distance {r} must be positive")));
    }
    let points = distances
        .iter()
        .enumerate()
        .map(|(i, &r)| run_point(cfg, books, schemes, Sampling::Fixed(r), r, i, trials, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        kind: SweepKind::Distance,
        seed,
        trials,
        schemes: schemes.to_vec(),
        points,
        notes: vec![
            ("tx_power_w".into(), cfg.tx_power.to_string()),
            ("theta".into(), "uniform[-1,1]".into()),
        ],
    })
}

/// Beam gain of `v` toward the true user, a convenience for reports.
pub fn gain_toward(truth: &UserLocation, v: &ComplexVector, cfg: &SystemConfig) -> f64 {
    beam_gain(&near_steering(truth, cfg), v).unwrap_or(0.0)
}
