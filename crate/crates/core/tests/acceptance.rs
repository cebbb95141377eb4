//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xlbt::codebook::{
    build_far_codebook, build_polar_codebook, overhead_exhaustive, overhead_two_phase, CodewordId,
};
use xlbt::geometry::{
    beam_gain, far_steering, near_steering, rayleigh_distance, synthesize_channel, ComplexVector,
    SystemConfig, UserLocation, SPEED_OF_LIGHT,
};
use xlbt::sim::{run_distance_sweep, run_snr_sweep, Codebooks, Scheme, SweepReport};
use xlbt::training::{
    dominant_angle_region, ls_channel_estimate, middle_k_candidates, oracle_best_codeword,
    polar_exhaustive, ReceivedPilot,
};

const PROPERTY_CASES: u32 = 1000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn rates(report: &SweepReport, point: usize) -> Vec<(String, f64)> {
    report.points[point]
        .stats
        .iter()
        .map(|s| (s.scheme.to_string(), s.mean_rate))
        .collect()
}

fn criterion_1() -> Verdict {
    let mut cfg = SystemConfig::default();
    let polar = build_polar_codebook(&cfg);
    let k3 = overhead_two_phase(&cfg);
    let exhaustive = overhead_exhaustive(&cfg);
    cfg.num_candidates = 1;
    let k1 = overhead_two_phase(&cfg);
    verdict(
        k3 == 274 && exhaustive == 1536 && k1 == 262 && polar.len() == 1536,
        format!("two-phase K=3 {k3}, K=1 {k1}, exhaustive {exhaustive}, codebook {}", polar.len()),
    )
}

fn criterion_2() -> Verdict {
    let wavelength = SPEED_OF_LIGHT / 100e9;
    let z = rayleigh_distance(0.4, wavelength);
    verdict((106.0..=108.0).contains(&z), format!("2D²/λ = {z:.3} m"))
}

fn criterion_3() -> Verdict {
    let cfg = SystemConfig {
        noise_power: 0.0,
        ..SystemConfig::with_antennas(64)
    };
    let polar = build_polar_codebook(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut agree = 0;
    let cases = 1000;
    for _ in 0..cases {
        let theta = rng.random_range(-1.0..1.0);
        let r = rng.random_range(1.0..120.0);
        let channel = synthesize_channel(&UserLocation::new(theta, r).unwrap(), &cfg);
        let out = polar_exhaustive(&channel, &polar, &cfg, &mut rng);
        if out.selected == Some(oracle_best_codeword(&channel, &polar)) {
            agree += 1;
        }
    }
    verdict(agree == cases, format!("{agree}/{cases} agree"))
}

fn criterion_4() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_xlbt"))
        .args(["--out", dir.path().to_str().unwrap(), "beamgain"])
        .args(["--theta", "-0.8,-0.4,0.4,0.8", "--r", "1,100", "--samples", "201"])
        .output()
        .unwrap();
    if !status.status.success() {
        return verdict(false, String::from_utf8_lossy(&status.stderr).to_string());
    }
    let text = fs::read_to_string(dir.path().join("beamgain_regions.csv")).unwrap();
    let mut pass = true;
    let (mut near_min, mut far_max, mut dev_max) = (usize::MAX, 0, 0);
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let (r, first, last, median, truth) = (f[1], f[4], f[5], f[6], f[7]);
        let span = (last - first) as usize;
        let dev = (median - truth).abs() as usize;
        dev_max = dev_max.max(dev);
        if r < 10.0 {
            near_min = near_min.min(span);
            pass &= span >= 5;
        } else {
            far_max = far_max.max(span);
            pass &= span <= 2;
        }
        pass &= dev <= 3;
    }
    verdict(
        pass,
        format!("far span ≤ {far_max}, near span ≥ {near_min}, median deviation ≤ {dev_max}"),
    )
}

fn scaled_snr_report() -> SweepReport {
    let cfg = SystemConfig::with_antennas(128);
    let books = Codebooks::build(&cfg);
    run_snr_sweep(&cfg, &books, &[20.0], 500, &Scheme::snr_defaults(3), 1, 10.0).unwrap()
}

fn criterion_5(report: &SweepReport) -> Verdict {
    let success = |name: &str| {
        report.points[0]
            .stats
            .iter()
            .find(|s| s.scheme.to_string() == name)
            .and_then(|s| s.success_rate)
            .unwrap()
    };
    let (ex, tp) = (success("exhaustive"), success("two-phase-k3"));
    verdict(
        (ex - tp).abs() <= 0.05,
        format!("exhaustive {ex:.3}, two-phase {tp:.3}"),
    )
}

fn criterion_6(report: &SweepReport) -> Verdict {
    let r = rates(report, 0);
    let get = |name: &str| r.iter().find(|(n, _)| n == name).unwrap().1;
    let order = ["perfect-csi", "exhaustive", "two-phase-k3", "two-phase-k1", "far-field"];
    let mut pass = true;
    let mut parts = Vec::new();
    for pair in order.windows(2) {
        let (a, b) = (get(pair[0]), get(pair[1]));
        let ok = a >= b * 0.99;
        pass &= ok;
        parts.push(format!("{} {a:.3} ≥ {} {b:.3}{}", pair[0], pair[1], if ok { "" } else { " (violated)" }));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_7() -> Verdict {
    let cfg = SystemConfig::with_antennas(128);
    let books = Codebooks::build(&cfg);
    let distances = [3.0, 10.0, 30.0, 60.0, 103.0];
    let report = run_distance_sweep(&cfg, &books, &distances, 300, &Scheme::distance_defaults(3), 1)
        .unwrap();
    let mut monotone = true;
    for (i, scheme) in report.schemes.iter().enumerate() {
        for w in report.points.windows(2) {
            let (a, b) = (w[0].stats[i].mean_rate, w[1].stats[i].mean_rate);
            if b > a * 1.02 {
                monotone = false;
                eprintln!("  {scheme}: rate rises {a:.3} → {b:.3} at {} m", w[1].value);
            }
        }
    }
    let last = rates(&report, distances.len() - 1);
    let get = |name: &str| last.iter().find(|(n, _)| n == name).unwrap().1;
    let (far, tp) = (get("far-field"), get("two-phase-k3"));
    let gap = (far - tp).abs() / far.max(tp);
    verdict(
        monotone && gap <= 0.02,
        format!(
            "(a) non-increasing: {}; (b) at 103 m far-field {far:.3} vs two-phase {tp:.3}, relative gap {:.1}%",
            if monotone { "yes" } else { "no" },
            gap * 100.0
        ),
    )
}

fn criterion_8() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "num_antennas = 64\ntrials = 100\nseed = 2024\n").unwrap();
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = Command::new(env!("CARGO_BIN_EXE_xlbt"))
            .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .arg("sweep-distance")
            .output()
            .unwrap();
        if !o.status.success() {
            return verdict(false, String::from_utf8_lossy(&o.stderr).to_string());
        }
        files.push(fs::read(out.join("results.csv")).unwrap());
    }
    verdict(
        files[0] == files[1],
        format!("results.csv {} bytes, identical: {}", files[0].len(), files[0] == files[1]),
    )
}

fn runner() -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases: PROPERTY_CASES,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn criterion_9() -> Verdict {
    let cfg = SystemConfig::with_antennas(64);
    let far = build_far_codebook(&cfg);
    let mut failures = Vec::new();
    let mut check = |name: &str, result: Result<(), String>| {
        if let Err(e) = result {
            failures.push(format!("{name}: {e}"));
        }
    };

    let location = (-0.999f64..0.999, 0.5f64..1e4);
    check(
        "unit norm",
        runner()
            .run(&location, |(theta, r)| {
                let b = near_steering(&UserLocation::new(theta, r).unwrap(), &cfg);
                prop_assert!((b.norm() - 1.0).abs() < 1e-12);
                prop_assert!((far_steering(theta, &cfg).norm() - 1.0).abs() < 1e-12);
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    check(
        "phase invariance",
        runner()
            .run(&(location.clone(), -1.0f64..1.0, 0.0..2.0 * PI), |((theta, r), omega, phi)| {
                let u = near_steering(&UserLocation::new(theta, r).unwrap(), &cfg);
                let w = far_steering(omega, &cfg);
                let g = beam_gain(&u, &w).unwrap();
                let rotated = w.scaled(Complex64::from_polar(1.0, phi));
                prop_assert!((beam_gain(&u, &rotated).unwrap() - g).abs() < 1e-12);
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    let powers = prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..10.0], 1..64);
    check(
        "Ψ nonempty",
        runner()
            .run(&(powers.clone(), 0.0f64..0.999), |(powers, rho)| {
                let pilots = pilots_from(&powers);
                let region = dominant_angle_region(&pilots, rho).unwrap();
                let best = argmax(&powers) + 1;
                prop_assert!(!region.is_empty());
                prop_assert!(region.indices().contains(&best));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    check(
        "Ξ cardinality and clamping",
        runner()
            .run(&(powers, 0.0f64..0.999, 1usize..64), |(powers, rho, k)| {
                let n = powers.len();
                let k = k.min(n);
                let region = dominant_angle_region(&pilots_from(&powers), rho).unwrap();
                let xi = middle_k_candidates(&region, k, n).unwrap();
                let idx = xi.indices();
                prop_assert_eq!(idx.len(), k);
                prop_assert!(idx[0] >= 1 && idx[k - 1] <= n);
                prop_assert!(idx.windows(2).all(|w| w[1] == w[0] + 1));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    let quiet = SystemConfig {
        noise_power: 0.0,
        ..cfg.clone()
    };
    check(
        "LS noiseless recovery",
        runner()
            .run(&(location, any::<u64>()), |((theta, r), seed)| {
                let channel = synthesize_channel(&UserLocation::new(theta, r).unwrap(), &quiet);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (estimate, _) = ls_channel_estimate(&channel, &far, &quiet, &mut rng);
                let scale = channel.vector.norm();
                let err = max_diff(&estimate, &channel.vector) / scale;
                prop_assert!(err < 1e-9, "relative error {}", err);
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    let detail = if failures.is_empty() {
        format!("5 properties × {PROPERTY_CASES} cases")
    } else {
        failures.join("; ")
    };
    verdict(failures.is_empty(), detail)
}

fn pilots_from(powers: &[f64]) -> Vec<ReceivedPilot> {
    powers
        .iter()
        .enumerate()
        .map(|(i, &p)| ReceivedPilot {
            codeword: CodewordId::new(i + 1, 0),
            power: p,
            sample: Complex64::new(p.sqrt(), 0.0),
        })
        .collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn max_diff(a: &ComplexVector, b: &ComplexVector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn main() {
    let mut all = true;
    let mut report_line = |id: u32, title: &str, run: &dyn Fn() -> Verdict| {
        let start = Instant::now();
        let v = run();
        all &= v.pass;
        println!(
            "criterion {id} {:<4} {title} — {} ({:.2} s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    };
    report_line(1, "overhead arithmetic", &criterion_1);
    report_line(2, "Rayleigh distance", &criterion_2);
    report_line(3, "noiseless oracle equivalence", &criterion_3);
    report_line(4, "beam-gain regions", &criterion_4);
    let snr = OnceLock::new();
    let snr = || snr.get_or_init(scaled_snr_report);
    report_line(5, "high-SNR success closeness", &|| criterion_5(snr()));
    report_line(6, "rate ordering", &|| criterion_6(snr()));
    report_line(7, "distance-sweep trends", &criterion_7);
    report_line(8, "determinism", &criterion_8);
    report_line(9, "invariant property suites", &criterion_9);
    if !all {
        std::process::exit(1);
    }
}
