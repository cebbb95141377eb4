//! `xlbt` command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codebook::{
    build_far_codebook, build_polar_codebook, export_far_codebook, export_polar_codebook,
    import_polar_codebook,
};
use crate::config::{load_config, ExperimentConfig};
use crate::error::{Error, Result};
use crate::pattern::{gain_curve, noiseless_region};
use crate::plot::{line_chart, Series};
use crate::report::{emit_results, ResultTable};
use crate::sim::{
    gain_toward, run_distance_sweep, run_single, run_snr_sweep, stream_seed, Codebooks, Scheme,
    SweepKind,
};
use crate::geometry::UserLocation;

pub const THREADS_ENV: &str = "XLBT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "xlbt", version, about = "Near-field beam training simulator")]
struct Cli {
    /// Experiment config file (flat `key = value`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Comma-separated schemes: perfect-csi, exhaustive, two-phase[-kK], far-field, ls.
    #[arg(long, global = true)]
    schemes: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CodebookKind {
    Far,
    Polar,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a codebook and export it as CSV.
    Codebook {
        #[arg(long, value_enum, default_value = "polar")]
        kind: CodebookKind,
    },
    /// Success rate and achievable rate versus reference SNR.
    SweepSnr {
        #[arg(long = "snr-db", value_delimiter = ',', allow_hyphen_values = true)]
        snr_db: Option<Vec<f64>>,
        /// Fixed user distance in meters.
        #[arg(long)]
        r: Option<f64>,
    },
    /// Success rate and achievable rate versus user distance.
    SweepDistance {
        #[arg(long, value_delimiter = ',')]
        distances: Option<Vec<f64>>,
    },
    /// One user, every scheme, with a full pilot trace.
    Single(SingleArgs),
    /// Gain of far-field beams toward users at the given angles and distances.
    Beamgain {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        theta: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        /// Number of steering angles sampled across [-1, 1].
        #[arg(long, default_value_t = 2001)]
        samples: usize,
    },
}

#[derive(Debug, Args)]
struct SingleArgs {
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
}

/// Runs the CLI and returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            Error::Argument(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(m) = cli.trials {
        if m == 0 {
            return Err(Error::Argument("--trials must be at least 1".into()));
        }
        cfg.trials = m;
    }
    if let Some(list) = &cli.schemes {
        cfg.schemes = Some(Scheme::parse_list(list, cfg.system.num_candidates)?);
    }
    Ok(cfg)
}

fn codebooks(cfg: &ExperimentConfig) -> Result<Codebooks> {
    let sys = &cfg.system;
    let polar = match &cfg.codebook_import {
        Some(path) => import_polar_codebook(path, sys)?,
        None => build_polar_codebook(sys),
    };
    Ok(Codebooks {
        far: build_far_codebook(sys),
        polar,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Codebook { kind } => {
            create_dir(&cfg.output_dir)?;
            let (path, count) = match kind {
                CodebookKind::Far => {
                    let book = build_far_codebook(&cfg.system);
                    let path = cfg
                        .codebook_export
                        .clone()
                        .unwrap_or_else(|| cfg.output_dir.join("codebook_far.csv"));
                    export_far_codebook(&book, &path)?;
                    (path, book.len())
                }
                CodebookKind::Polar => {
                    let book = build_polar_codebook(&cfg.system);
                    let path = cfg
                        .codebook_export
                        .clone()
                        .unwrap_or_else(|| cfg.output_dir.join("codebook_polar.csv"));
                    export_polar_codebook(&book, &path)?;
                    (path, book.len())
                }
            };
            println!("wrote {count} codewords to {}", path.display());
        }
        Command::SweepSnr { snr_db, r } => {
            cfg.sweep = SweepKind::Snr;
            if let Some(points) = snr_db {
                cfg.snr_points_db = points;
            }
            if let Some(r) = r {
                cfg.snr_distance_m = r;
            }
            cfg.validate()?;
            let books = codebooks(&cfg)?;
            let schemes = cfg.schemes_for(SweepKind::Snr);
            eprintln!(
                "sweep-snr: {} points x {} trials",
                cfg.snr_points_db.len(),
                cfg.trials
            );
            let report = thread_pool()?.install(|| {
                run_snr_sweep(
                    &cfg.system,
                    &books,
                    &cfg.snr_points_db,
                    cfg.trials,
                    &schemes,
                    cfg.seed,
                    cfg.snr_distance_m,
                )
            })?;
            write_sweep(&cfg, &report)?;
        }
        Command::SweepDistance { distances } => {
            cfg.sweep = SweepKind::Distance;
            if let Some(points) = distances {
                cfg.distances_m = points;
            }
            cfg.validate()?;
            let books = codebooks(&cfg)?;
            let schemes = cfg.schemes_for(SweepKind::Distance);
            eprintln!(
                "sweep-distance: {} points x {} trials",
                cfg.distances_m.len(),
                cfg.trials
            );
            let report = thread_pool()?.install(|| {
                run_distance_sweep(
                    &cfg.system,
                    &books,
                    &cfg.distances_m,
                    cfg.trials,
                    &schemes,
                    cfg.seed,
                )
            })?;
            write_sweep(&cfg, &report)?;
        }
        Command::Single(args) => {
            cfg.sweep = SweepKind::Single;
            if let Some(t) = args.theta {
                cfg.theta = t;
            }
            if let Some(r) = args.r {
                cfg.distance_m = r;
            }
            cfg.validate()?;
            single(&cfg)?;
        }
        Command::Beamgain { theta, r, samples } => {
            if samples < 2 {
                return Err(Error::Argument("--samples must be at least 2".into()));
            }
            beamgain(&cfg, &theta, &r, samples)?;
        }
    }
    Ok(())
}

fn write_sweep(cfg: &ExperimentConfig, report: &crate::sim::SweepReport) -> Result<()> {
    let table = ResultTable::from_report(report);
    let paths = emit_results(report, &table, &cfg.output_dir, &cfg.hash())?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn open(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn single(cfg: &ExperimentConfig) -> Result<()> {
    let books = codebooks(cfg)?;
    let schemes = cfg.schemes_for(SweepKind::Single);
    let truth = UserLocation::new(cfg.theta, cfg.distance_m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, 0, 0));
    let (oracle, outcomes) = run_single(&cfg.system, &books, &truth, &schemes, &mut rng)?;

    create_dir(&cfg.output_dir)?;
    let summary_path = cfg.output_dir.join("single.csv");
    let trace_path = cfg.output_dir.join("pilots.csv");
    let header = format!(
        "# xlbt sweep=single config_hash={} seed={} theta={} r={} oracle={},{}",
        cfg.hash(),
        cfg.seed,
        truth.theta(),
        truth.distance(),
        oracle.angle_index,
        oracle.distance_index
    );

    let mut summary = open(&summary_path)?;
    writeln!(summary, "{header}").map_err(io(&summary_path))?;
    writeln!(
        summary,
        "scheme,angle_index,distance_index,pilots_used,beam_gain,rate_bps_hz,success"
    )
    .map_err(io(&summary_path))?;
    let mut trace = open(&trace_path)?;
    writeln!(trace, "{header}").map_err(io(&trace_path))?;
    writeln!(trace, "scheme,order,angle_index,distance_index,power_w,re,im").map_err(io(&trace_path))?;

    println!(
        "user θ={} r={} m, oracle codeword ({}, {})",
        truth.theta(),
        truth.distance(),
        oracle.angle_index,
        oracle.distance_index
    );
    for (scheme, out, rate) in &outcomes {
        let gain = gain_toward(&truth, &out.beamformer, &cfg.system);
        let (a, s, ok) = match out.selected {
            Some(id) => (
                id.angle_index.to_string(),
                id.distance_index.to_string(),
                (id == oracle).to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(
            summary,
            "{scheme},{a},{s},{},{gain},{rate},{ok}",
            out.pilots_used
        )
        .map_err(io(&summary_path))?;
        println!(
            "{:<14} pilots={:>5} gain={:.4} rate={:.4} bps/Hz selected=({a},{s})",
            scheme.to_string(),
            out.pilots_used,
            gain,
            rate
        );
        for (i, p) in out.pilots.iter().enumerate() {
            writeln!(
                trace,
                "{scheme},{i},{},{},{},{},{}",
                p.codeword.angle_index, p.codeword.distance_index, p.power, p.sample.re, p.sample.im
            )
            .map_err(io(&trace_path))?;
        }
    }
    summary.flush().map_err(io(&summary_path))?;
    trace.flush().map_err(io(&trace_path))?;
    println!("{}\n{}", summary_path.display(), trace_path.display());
    Ok(())
}

fn beamgain(cfg: &ExperimentConfig, thetas: &[f64], distances: &[f64], samples: usize) -> Result<()> {
    let sys = &cfg.system;
    let far = build_far_codebook(sys);
    let omegas: Vec<f64> = (0..samples)
        .map(|i| -1.0 + 2.0 * i as f64 / (samples - 1) as f64)
        .collect();
    create_dir(&cfg.output_dir)?;
    let curve_path = cfg.output_dir.join("beamgain.csv");
    let region_path = cfg.output_dir.join("beamgain_regions.csv");
    let svg_path = cfg.output_dir.join("beamgain.svg");

    let mut curves = open(&curve_path)?;
    writeln!(curves, "theta,r,omega,gain").map_err(io(&curve_path))?;
    let mut regions = open(&region_path)?;
    writeln!(
        regions,
        "theta,r,region_size,region_width,first_index,last_index,median_floor,true_index"
    )
    .map_err(io(&region_path))?;
    let mut series = Vec::new();
    for &r in distances {
        for &theta in thetas {
            let loc = UserLocation::new(theta, r)?;
            let gains = gain_curve(&loc, sys, &omegas);
            for (o, g) in omegas.iter().zip(&gains) {
                writeln!(curves, "{theta},{r},{o},{g}").map_err(io(&curve_path))?;
            }
            let s = noiseless_region(&loc, sys, &far);
            let idx = s.region.indices();
            writeln!(
                regions,
                "{theta},{r},{},{},{},{},{},{}",
                s.region.len(),
                s.width,
                idx[0],
                idx[idx.len() - 1],
                s.median_floor,
                s.true_index
            )
            .map_err(io(&region_path))?;
            println!(
                "θ={theta} r={r} m: |Ψ|={} width={} ⌊Med(Ψ)⌋={} nearest grid index={}",
                s.region.len(),
                s.width,
                s.median_floor,
                s.true_index
            );
            series.push(Series {
                label: format!("θ={theta}, r={r} m"),
                points: omegas.iter().copied().zip(gains).collect(),
            });
        }
    }
    curves.flush().map_err(io(&curve_path))?;
    regions.flush().map_err(io(&region_path))?;
    let svg = line_chart(
        "Far-field beam gain toward each user",
        "steering angle Ω",
        "normalized beam gain",
        &series,
        &format!("xlbt beamgain config_hash={}", cfg.hash()),
    );
    fs::write(&svg_path, svg).map_err(io(&svg_path))?;
    println!(
        "{}\n{}\n{}",
        curve_path.display(),
        region_path.display(),
        svg_path.display()
    );
    Ok(())
}
