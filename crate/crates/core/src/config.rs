//! Experiment configuration: a flat `key = value` text format with `#`
//! comments. Power-like quantities are given in dB/dBm and converted to
//! linear units on load.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{db_to_linear, dbm_to_watts, linear_to_db, SystemConfig};
use crate::sim::{Scheme, SweepKind};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub sweep: SweepKind,
    pub snr_points_db: Vec<f64>,
    pub distances_m: Vec<f64>,
    /// Fixed user distance for SNR sweeps.
    pub snr_distance_m: f64,
    pub trials: usize,
    pub seed: u64,
    /// `None` selects the per-sweep defaults.
    pub schemes: Option<Vec<Scheme>>,
    pub output_dir: PathBuf,
    pub codebook_export: Option<PathBuf>,
    pub codebook_import: Option<PathBuf>,
    /// User location for `single` runs.
    pub theta: f64,
    pub distance_m: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            system: SystemConfig::default(),
            sweep: SweepKind::Distance,
            snr_points_db: (-2..=6).map(|i| i as f64 * 5.0).collect(),
            distances_m: (0..=20).map(|i| 3.0 + 5.0 * i as f64).collect(),
            snr_distance_m: 10.0,
            trials: 1000,
            seed: 1,
            schemes: None,
            output_dir: PathBuf::from("out"),
            codebook_export: None,
            codebook_import: None,
            theta: 0.6,
            distance_m: 5.0,
        }
    }
}

const KEYS: &[&str] = &[
    "num_antennas",
    "carrier_freq_ghz",
    "ref_gain_db",
    "tx_power_dbm",
    "noise_power_dbm",
    "coherence_param",
    "gain_threshold",
    "num_candidates",
    "distance_samples",
    "distance_samples_per_angle",
    "min_distance_m",
    "sweep",
    "snr_db",
    "distances_m",
    "snr_distance_m",
    "trials",
    "seed",
    "schemes",
    "output_dir",
    "codebook_export",
    "codebook_import",
    "theta",
    "r",
];

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::ConfigValidation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive_count(field: &str, value: i64) -> Result<usize> {
    if value <= 0 {
        return Err(invalid(field, format!("must be a positive integer, got {value}")));
    }
    Ok(value as usize)
}

fn finite(field: &str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(invalid(field, "must be finite"));
    }
    Ok(value)
}

fn positive(field: &str, value: f64) -> Result<f64> {
    if !(value.is_finite() && value > 0.0) {
        return Err(invalid(field, format!("must be positive, got {value}")));
    }
    Ok(value)
}

impl ExperimentConfig {
    /// Parses config text; `origin` is only used in error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = HashSet::new();
        let mut pending_samples: Option<Vec<usize>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let parse_err = |message: String| Error::ConfigParse {
                path: origin.to_path_buf(),
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(parse_err(format!("unknown key `{key}`")));
            }
            if !seen.insert(key.to_string()) {
                return Err(parse_err(format!("duplicate key `{key}`")));
            }
            let float = |v: &str| {
                v.parse::<f64>()
                    .map_err(|e| parse_err(format!("`{key}`: {e}")))
            };
            let int = |v: &str| {
                v.parse::<i64>()
                    .map_err(|e| parse_err(format!("`{key}`: {e}")))
            };
            let floats = |v: &str| -> Result<Vec<f64>> {
                v.split(',').map(|s| float(s.trim())).collect()
            };
            let sys = &mut cfg.system;
            match key {
                "num_antennas" => sys.num_antennas = positive_count(key, int(value)?)?,
                "carrier_freq_ghz" => sys.carrier_freq = positive(key, float(value)?)? * 1e9,
                "ref_gain_db" => sys.ref_gain = db_to_linear(finite(key, float(value)?)?),
                "tx_power_dbm" => sys.tx_power = dbm_to_watts(finite(key, float(value)?)?),
                "noise_power_dbm" => sys.noise_power = dbm_to_watts(finite(key, float(value)?)?),
                "coherence_param" => sys.coherence_param = positive(key, float(value)?)?,
                "gain_threshold" => sys.gain_threshold = float(value)?,
                "num_candidates" => sys.num_candidates = positive_count(key, int(value)?)?,
                "distance_samples" => sys.distance_samples = positive_count(key, int(value)?)?,
                "distance_samples_per_angle" => {
                    pending_samples = Some(
                        value
                            .split(',')
                            .map(|s| positive_count(key, int(s.trim())?))
                            .collect::<Result<_>>()?,
                    )
                }
                "min_distance_m" => sys.min_distance = float(value)?,
                "sweep" => {
                    cfg.sweep = match value {
                        "snr" => SweepKind::Snr,
                        "distance" => SweepKind::Distance,
                        "single" => SweepKind::Single,
                        _ => return Err(invalid(key, format!("unknown sweep kind `{value}`"))),
                    }
                }
                "snr_db" => cfg.snr_points_db = floats(value)?,
                "distances_m" => cfg.distances_m = floats(value)?,
                "snr_distance_m" => cfg.snr_distance_m = positive(key, float(value)?)?,
                "trials" => cfg.trials = positive_count(key, int(value)?)?,
                "seed" => {
                    cfg.seed = value
                        .parse::<u64>()
                        .map_err(|e| parse_err(format!("`{key}`: {e}")))?
                }
                "schemes" => cfg.schemes = Some(Scheme::parse_list(value, 0)?),
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "codebook_export" => cfg.codebook_export = Some(PathBuf::from(value)),
                "codebook_import" => cfg.codebook_import = Some(PathBuf::from(value)),
                "theta" => cfg.theta = float(value)?,
                "r" => cfg.distance_m = positive(key, float(value)?)?,
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.system.per_angle_samples = pending_samples;
        // a bare `two-phase` in the scheme list takes the configured K
        let k = cfg.system.num_candidates;
        if let Some(list) = &mut cfg.schemes {
            for s in list.iter_mut() {
                if let Scheme::TwoPhase { candidates: 0 } = s {
                    *s = Scheme::TwoPhase { candidates: k };
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.snr_points_db.is_empty() || self.snr_points_db.iter().any(|v| !v.is_finite()) {
            return Err(invalid("snr_db", "must be a non-empty list of finite values"));
        }
        if self.distances_m.is_empty() || self.distances_m.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(invalid("distances_m", "must be a non-empty list of positive values"));
        }
        if !(-1.0..=1.0).contains(&self.theta) {
            return Err(invalid("theta", "must lie in [-1, 1]"));
        }
        if let Some(list) = &self.schemes {
            if list.is_empty() {
                return Err(invalid("schemes", "must not be empty"));
            }
            for s in list {
                if let Scheme::TwoPhase { candidates } = s {
                    if *candidates > self.system.num_antennas {
                        return Err(invalid("schemes", format!("{s}: K exceeds num_antennas")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Schemes to run, falling back to the defaults for the sweep kind.
    pub fn schemes_for(&self, kind: SweepKind) -> Vec<Scheme> {
        match &self.schemes {
            Some(list) => list.clone(),
            None => match kind {
                SweepKind::Distance => Scheme::distance_defaults(self.system.num_candidates),
                SweepKind::Snr | SweepKind::Single => {
                    Scheme::snr_defaults(self.system.num_candidates)
                }
            },
        }
    }

    /// Canonical `key = value` rendering of every parameter; parsing it
    /// reproduces this config.
    pub fn to_canonical_string(&self) -> String {
        let sys = &self.system;
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("num_antennas", sys.num_antennas.to_string());
        put("carrier_freq_ghz", (sys.carrier_freq / 1e9).to_string());
        put("ref_gain_db", linear_to_db(sys.ref_gain).to_string());
        put("tx_power_dbm", (linear_to_db(sys.tx_power) + 30.0).to_string());
        put("noise_power_dbm", (linear_to_db(sys.noise_power) + 30.0).to_string());
        put("coherence_param", sys.coherence_param.to_string());
        put("gain_threshold", sys.gain_threshold.to_string());
        put("num_candidates", sys.num_candidates.to_string());
        put("distance_samples", sys.distance_samples.to_string());
        if let Some(v) = &sys.per_angle_samples {
            put(
                "distance_samples_per_angle",
                v.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            );
        }
        put("min_distance_m", sys.min_distance.to_string());
        put("sweep", self.sweep.to_string());
        put("snr_db", list(&self.snr_points_db));
        put("distances_m", list(&self.distances_m));
        put("snr_distance_m", self.snr_distance_m.to_string());
        put("trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        if let Some(v) = &self.schemes {
            put(
                "schemes",
                v.iter().map(Scheme::to_string).collect::<Vec<_>>().join(","),
            );
        }
        put("output_dir", self.output_dir.display().to_string());
        if let Some(p) = &self.codebook_export {
            put("codebook_export", p.display().to_string());
        }
        if let Some(p) = &self.codebook_import {
            put("codebook_import", p.display().to_string());
        }
        put("theta", self.theta.to_string());
        put("r", self.distance_m.to_string());
        s
    }

    /// First 16 hex digits of the SHA-256 of the canonical rendering.
    /// Output locations are left out: they do not change the results.
    pub fn hash(&self) -> String {
        let canonical: String = self
            .to_canonical_string()
            .lines()
            .filter(|l| !l.starts_with("output_dir ") && !l.starts_with("codebook_export "))
            .flat_map(|l| [l, "\n"])
            .collect();
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::parse(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("test.cfg"))
    }

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse("").unwrap();
        let sys = &cfg.system;
        assert_eq!(sys.num_antennas, 256);
        assert_eq!(sys.carrier_freq, 100e9);
        assert_eq!(sys.coherence_param, 1.2);
        assert_relative_eq!(sys.ref_gain, 10f64.powf(-7.2), max_relative = 1e-12);
        assert_relative_eq!(sys.noise_power, 1e-10, max_relative = 1e-12);
        assert_relative_eq!(sys.gain_threshold, 1.0 / 2f64.sqrt());
        assert_eq!(sys.distance_samples, 6);
        assert_eq!(sys.num_candidates, 3);
        assert_eq!(cfg.trials, 1000);
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn comments_and_values() {
        let cfg = parse(
            "# small run\nnum_antennas = 64  # trailing\n\ntx_power_dbm = 20\nsnr_db = 0, 10,20\nschemes = exhaustive,two-phase\nnum_candidates = 5\n",
        )
        .unwrap();
        assert_eq!(cfg.system.num_antennas, 64);
        assert_relative_eq!(cfg.system.tx_power, 0.1, max_relative = 1e-12);
        assert_eq!(cfg.snr_points_db, vec![0.0, 10.0, 20.0]);
        assert_eq!(
            cfg.schemes.unwrap(),
            vec![Scheme::PolarExhaustive, Scheme::TwoPhase { candidates: 5 }]
        );
    }

    #[test]
    fn negative_antenna_count_names_field() {
        match parse("num_antennas = -4") {
            Err(Error::ConfigValidation { field, .. }) => assert_eq!(field, "num_antennas"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        match parse("seed = 3\nfoo = 1\n") {
            Err(Error::ConfigParse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("foo"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(parse("seed"), Err(Error::ConfigParse { line: 1, .. })));
        assert!(matches!(parse("seed = x"), Err(Error::ConfigParse { .. })));
        assert!(matches!(parse("seed = 1\nseed = 2"), Err(Error::ConfigParse { line: 2, .. })));
        assert!(matches!(
            parse("gain_threshold = 1.5"),
            Err(Error::ConfigValidation { .. })
        ));
        assert!(matches!(
            parse("num_antennas = 4\ndistance_samples_per_angle = 1,2"),
            Err(Error::ConfigValidation { .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_config(Path::new("/nonexistent/xlbt.cfg")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn canonical_round_trip() {
        let cfg = parse("num_antennas = 32\nschemes = ls,far-field\nsweep = snr\nseed = 99\n").unwrap();
        let again = parse(&cfg.to_canonical_string()).unwrap();
        assert_eq!(again.system.num_antennas, 32);
        assert_eq!(again.to_canonical_string(), cfg.to_canonical_string());
        assert_eq!(again.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 16);
        assert_ne!(cfg.hash(), ExperimentConfig::default().hash());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = parse("output_dir = a\n").unwrap();
        let b = parse("output_dir = b\ncodebook_export = b/c.csv\n").unwrap();
        assert_eq!(a.hash(), b.hash());
    }
}
