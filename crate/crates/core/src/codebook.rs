//! Far-field (angle-domain) and polar-domain codebooks.
//!
//! Angle indices are 1-based throughout (`n = 1..N`) and distance indices are
//! 0-based, with `s = 0` the planar-wavefront (infinite distance) layer.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{far_steering, near_steering, ComplexVector, SystemConfig, UserLocation};

/// `θ_n = (2n - N - 1)/N` for the 1-based angle index `n`.
pub fn grid_angle(n: usize, num_antennas: usize) -> f64 {
    (2.0 * n as f64 - num_antennas as f64 - 1.0) / num_antennas as f64
}

/// 1-based index of the grid angle closest to `theta`.
pub fn nearest_grid_index(theta: f64, num_antennas: usize) -> usize {
    let n = ((theta * num_antennas as f64 + num_antennas as f64 + 1.0) / 2.0).round();
    (n as usize).clamp(1, num_antennas)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CodewordId {
    /// 1-based grid angle index.
    pub angle_index: usize,
    /// 0-based distance index; 0 is the far-field layer.
    pub distance_index: usize,
}

impl CodewordId {
    pub fn new(angle_index: usize, distance_index: usize) -> Self {
        CodewordId {
            angle_index,
            distance_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldCodebook {
    angles: Vec<f64>,
    codewords: Vec<ComplexVector>,
}

impl FarFieldCodebook {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Codeword for the 1-based angle index `n`.
    pub fn codeword(&self, n: usize) -> &ComplexVector {
        &self.codewords[n - 1]
    }

    pub fn codewords(&self) -> &[ComplexVector] {
        &self.codewords
    }
}

pub fn build_far_codebook(cfg: &SystemConfig) -> FarFieldCodebook {
    let n = cfg.num_antennas;
    let angles: Vec<f64> = (1..=n).map(|i| grid_angle(i, n)).collect();
    let codewords = angles.iter().map(|&t| far_steering(t, cfg)).collect();
    FarFieldCodebook { angles, codewords }
}

/// Distance samples and codewords for one grid angle.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarEntry {
    pub theta: f64,
    /// `distances[0]` is `+∞`; the rest strictly decrease.
    pub distances: Vec<f64>,
    pub codewords: Vec<ComplexVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarCodebook {
    num_antennas: usize,
    threshold_distance: f64,
    entries: Vec<PolarEntry>,
}

impl PolarCodebook {
    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn threshold_distance(&self) -> f64 {
        self.threshold_distance
    }

    pub fn entries(&self) -> &[PolarEntry] {
        &self.entries
    }

    /// Entry for the 1-based angle index `n`.
    pub fn entry(&self, n: usize) -> &PolarEntry {
        &self.entries[n - 1]
    }

    /// S_n, the number of codewords kept at angle `n`.
    pub fn samples_at(&self, n: usize) -> usize {
        self.entries[n - 1].codewords.len()
    }

    /// Total number of codewords, `Σ S_n`.
    pub fn len(&self) -> usize {
        self.entries.iter().map(|e| e.codewords.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn codeword(&self, id: CodewordId) -> Option<&ComplexVector> {
        self.entries
            .get(id.angle_index.checked_sub(1)?)?
            .codewords
            .get(id.distance_index)
    }

    pub fn distance(&self, id: CodewordId) -> Option<f64> {
        self.entries
            .get(id.angle_index.checked_sub(1)?)?
            .distances
            .get(id.distance_index)
            .copied()
    }

    /// All codewords in (angle, distance) lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (CodewordId, &ComplexVector)> {
        self.entries.iter().enumerate().flat_map(|(i, e)| {
            e.codewords
                .iter()
                .enumerate()
                .map(move |(s, w)| (CodewordId::new(i + 1, s), w))
        })
    }

    /// Phase-two pilot count `Σ_{k∈Ξ} S_k` for a candidate set.
    pub fn phase_two_overhead(&self, candidates: &[usize]) -> usize {
        candidates.iter().map(|&k| self.samples_at(k)).sum()
    }
}

/// `Z_Δ = D²/(2 α_Δ² λ)` with `D = (N - 1) d`.
pub fn threshold_distance(cfg: &SystemConfig) -> f64 {
    let d = cfg.aperture();
    d * d / (2.0 * cfg.coherence_param * cfg.coherence_param * cfg.wavelength())
}

/// `[∞, Z_Δ(1-θ²)/1, …, Z_Δ(1-θ²)/(S-1)]`.
pub fn sample_distances(theta: f64, count: usize, cfg: &SystemConfig) -> Vec<f64> {
    let base = threshold_distance(cfg) * (1.0 - theta * theta);
    std::iter::once(f64::INFINITY)
        .chain((1..count).map(|s| base / s as f64))
        .take(count)
        .collect()
}

/// Applies the minimum-distance rule to one angle's samples.
fn truncate_samples(mut distances: Vec<f64>, min_distance: f64) -> Vec<f64> {
    if min_distance <= 0.0 || distances.len() < 2 {
        return distances;
    }
    if distances[1] < min_distance {
        distances.truncate(1);
    } else {
        distances.retain(|&r| r >= min_distance);
    }
    distances
}

pub fn build_polar_codebook(cfg: &SystemConfig) -> PolarCodebook {
    let n = cfg.num_antennas;
    let entries = (1..=n)
        .map(|i| {
            let theta = grid_angle(i, n);
            let distances = truncate_samples(
                sample_distances(theta, cfg.samples_for_angle(i), cfg),
                cfg.min_distance,
            );
            let codewords = distances
                .iter()
                .map(|&r| {
                    if r.is_infinite() {
                        far_steering(theta, cfg)
                    } else {
                        let loc = UserLocation::new(theta, r)
                            .expect("grid angles are interior and samples positive");
                        near_steering(&loc, cfg)
                    }
                })
                .collect();
            PolarEntry {
                theta,
                distances,
                codewords,
            }
        })
        .collect();
    PolarCodebook {
        num_antennas: n,
        threshold_distance: threshold_distance(cfg),
        entries,
    }
}

/// `T(2P) = N + K·S` (uniform S).
pub fn overhead_two_phase(cfg: &SystemConfig) -> usize {
    cfg.num_antennas + cfg.num_candidates * cfg.distance_samples
}

/// `T(ex) = Σ_n S_n`.
pub fn overhead_exhaustive(cfg: &SystemConfig) -> usize {
    (1..=cfg.num_antennas).map(|n| cfg.samples_for_angle(n)).sum()
}

fn csv_header(num_antennas: usize) -> Vec<String> {
    let mut header = vec![
        "angle_index".to_string(),
        "distance_index".to_string(),
        "theta".to_string(),
        "distance_m".to_string(),
    ];
    header.extend((0..num_antennas).map(|i| format!("re_{i}")));
    header.extend((0..num_antennas).map(|i| format!("im_{i}")));
    header
}

fn csv_row(id: CodewordId, theta: f64, distance: f64, w: &ComplexVector) -> Vec<String> {
    let mut row = vec![
        id.angle_index.to_string(),
        id.distance_index.to_string(),
        theta.to_string(),
        distance.to_string(),
    ];
    row.extend(w.iter().map(|z| z.re.to_string()));
    row.extend(w.iter().map(|z| z.im.to_string()));
    row
}

fn write_rows<'a>(
    path: &Path,
    num_antennas: usize,
    rows: impl Iterator<Item = (CodewordId, f64, f64, &'a ComplexVector)>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer
        .write_record(csv_header(num_antennas))
        .map_err(|e| Error::csv(path, e))?;
    for (id, theta, distance, w) in rows {
        writer
            .write_record(csv_row(id, theta, distance, w))
            .map_err(|e| Error::csv(path, e))?;
    }
    let mut file = writer
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    file.flush().map_err(|e| Error::io(path, e))
}

pub fn export_far_codebook(book: &FarFieldCodebook, path: &Path) -> Result<()> {
    let n = book.len();
    write_rows(
        path,
        n,
        book.angles
            .iter()
            .zip(&book.codewords)
            .enumerate()
            .map(|(i, (&t, w))| (CodewordId::new(i + 1, 0), t, f64::INFINITY, w)),
    )
}

pub fn export_polar_codebook(book: &PolarCodebook, path: &Path) -> Result<()> {
    write_rows(
        path,
        book.num_antennas,
        book.iter().map(|(id, w)| {
            let e = book.entry(id.angle_index);
            (id, e.theta, e.distances[id.distance_index], w)
        }),
    )
}

struct ImportedRow {
    id: CodewordId,
    theta: f64,
    distance: f64,
    codeword: ComplexVector,
}

fn read_rows(path: &Path) -> Result<(usize, Vec<ImportedRow>)> {
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.len() < 6 || (header.len() - 4) % 2 != 0 {
        return Err(bad(format!("unexpected header width {}", header.len())));
    }
    let n = (header.len() - 4) / 2;
    let expected = csv_header(n);
    if header.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(bad("header does not match the codebook schema".into()));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let field = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}: column {}: {e}", line + 1, expected[i])))
        };
        let index = |i: usize| -> Result<usize> {
            record[i]
                .parse::<usize>()
                .map_err(|e| bad(format!("row {}: column {}: {e}", line + 1, expected[i])))
        };
        let entries = (0..n)
            .map(|i| Ok(Complex64::new(field(4 + i)?, field(4 + n + i)?)))
            .collect::<Result<Vec<_>>>()?;
        rows.push(ImportedRow {
            id: CodewordId::new(index(0)?, index(1)?),
            theta: field(2)?,
            distance: field(3)?,
            codeword: ComplexVector::new(entries),
        });
    }
    Ok((n, rows))
}

pub fn import_far_codebook(path: &Path) -> Result<FarFieldCodebook> {
    let (n, rows) = read_rows(path)?;
    if rows.len() != n {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("expected {n} far-field rows, found {}", rows.len()),
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.id != CodewordId::new(i + 1, 0) {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("row {} has id {:?}", i + 1, row.id),
            });
        }
    }
    let (angles, codewords) = rows.into_iter().map(|r| (r.theta, r.codeword)).unzip();
    Ok(FarFieldCodebook { angles, codewords })
}

/// Reads a polar codebook written by [`export_polar_codebook`]. The array
/// size must match `cfg`, which also supplies `Z_Δ`.
pub fn import_polar_codebook(path: &Path, cfg: &SystemConfig) -> Result<PolarCodebook> {
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let (n, rows) = read_rows(path)?;
    if n != cfg.num_antennas {
        return Err(bad(format!(
            "codebook has {n} antennas, config has {}",
            cfg.num_antennas
        )));
    }
    let mut entries: Vec<PolarEntry> = Vec::with_capacity(n);
    for row in rows {
        let ImportedRow {
            id,
            theta,
            distance,
            codeword,
        } = row;
        if id.distance_index == 0 {
            if id.angle_index != entries.len() + 1 || !distance.is_infinite() {
                return Err(bad(format!("unexpected far-field row {id:?}")));
            }
            entries.push(PolarEntry {
                theta,
                distances: vec![distance],
                codewords: vec![codeword],
            });
        } else {
            let current = entries.len();
            match entries.last_mut() {
                Some(e) if id.angle_index == current && id.distance_index == e.distances.len() =>
                {
                    e.distances.push(distance);
                    e.codewords.push(codeword);
                }
                _ => return Err(bad(format!("out-of-order row {id:?}"))),
            }
        }
    }
    if entries.len() != n {
        return Err(bad(format!("expected {n} angles, found {}", entries.len())));
    }
    Ok(PolarCodebook {
        num_antennas: n,
        threshold_distance: threshold_distance(cfg),
        entries,
    })
}
