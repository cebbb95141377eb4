//! Python bindings for the `xlbt` simulator.

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xlbt_core::codebook::{self, CodewordId};
use xlbt_core::geometry::{self, db_to_linear, dbm_to_watts, linear_to_db, ComplexVector};
use xlbt_core::report::ResultTable;
use xlbt_core::sim::{self, Codebooks, Scheme, SweepReport};
use xlbt_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Csv { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Array and link parameters. Powers are given in dBm, gains in dB.
#[pyclass(name = "SystemConfig", module = "xlbt", from_py_object)]
#[derive(Clone)]
struct PySystemConfig {
    inner: geometry::SystemConfig,
}

#[pymethods]
impl PySystemConfig {
    #[new]
    #[pyo3(signature = (
        num_antennas = 256,
        carrier_freq_ghz = 100.0,
        ref_gain_db = -72.0,
        tx_power_dbm = 30.0,
        noise_power_dbm = -70.0,
        coherence_param = 1.2,
        gain_threshold = std::f64::consts::FRAC_1_SQRT_2,
        num_candidates = 3,
        distance_samples = 6,
        min_distance_m = 0.0,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        num_antennas: usize,
        carrier_freq_ghz: f64,
        ref_gain_db: f64,
        tx_power_dbm: f64,
        noise_power_dbm: f64,
        coherence_param: f64,
        gain_threshold: f64,
        num_candidates: usize,
        distance_samples: usize,
        min_distance_m: f64,
    ) -> PyResult<Self> {
        let inner = geometry::SystemConfig {
            num_antennas,
            carrier_freq: carrier_freq_ghz * 1e9,
            ref_gain: db_to_linear(ref_gain_db),
            tx_power: dbm_to_watts(tx_power_dbm),
            noise_power: dbm_to_watts(noise_power_dbm),
            coherence_param,
            gain_threshold,
            num_candidates,
            distance_samples,
            per_angle_samples: None,
            min_distance: min_distance_m,
        };
        inner.validate().map_err(to_py)?;
        Ok(PySystemConfig { inner })
    }

    #[getter]
    fn num_antennas(&self) -> usize {
        self.inner.num_antennas
    }

    #[getter]
    fn num_candidates(&self) -> usize {
        self.inner.num_candidates
    }

    #[getter]
    fn distance_samples(&self) -> usize {
        self.inner.distance_samples
    }

    #[getter]
    fn tx_power_dbm(&self) -> f64 {
        linear_to_db(self.inner.tx_power) + 30.0
    }

    #[getter]
    fn wavelength(&self) -> f64 {
        self.inner.wavelength()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing()
    }

    #[getter]
    fn aperture(&self) -> f64 {
        self.inner.aperture()
    }

    #[getter]
    fn threshold_distance(&self) -> f64 {
        codebook::threshold_distance(&self.inner)
    }

    fn overhead_two_phase(&self) -> usize {
        codebook::overhead_two_phase(&self.inner)
    }

    fn overhead_exhaustive(&self) -> usize {
        codebook::overhead_exhaustive(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemConfig(num_antennas={}, carrier_freq_ghz={}, num_candidates={}, distance_samples={})",
            self.inner.num_antennas,
            self.inner.carrier_freq / 1e9,
            self.inner.num_candidates,
            self.inner.distance_samples
        )
    }
}

fn config(cfg: Option<PySystemConfig>) -> geometry::SystemConfig {
    cfg.map(|c| c.inner).unwrap_or_default()
}

fn location(theta: f64, r: f64) -> PyResult<geometry::UserLocation> {
    geometry::UserLocation::new(theta, r).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (theta, r, cfg = None))]
fn near_steering(theta: f64, r: f64, cfg: Option<PySystemConfig>) -> PyResult<Vec<Complex64>> {
    Ok(geometry::near_steering(&location(theta, r)?, &config(cfg)).into_inner())
}

#[pyfunction]
#[pyo3(signature = (theta, cfg = None))]
fn far_steering(theta: f64, cfg: Option<PySystemConfig>) -> Vec<Complex64> {
    geometry::far_steering(theta, &config(cfg)).into_inner()
}

/// Channel column `c`; a pilot with beamformer `v` is received as `c^H v √P`.
#[pyfunction]
#[pyo3(signature = (theta, r, cfg = None))]
fn channel(theta: f64, r: f64, cfg: Option<PySystemConfig>) -> PyResult<Vec<Complex64>> {
    Ok(geometry::synthesize_channel(&location(theta, r)?, &config(cfg))
        .vector
        .into_inner())
}

#[pyfunction]
fn beam_gain(u: Vec<Complex64>, w: Vec<Complex64>) -> PyResult<f64> {
    geometry::beam_gain(&ComplexVector::new(u), &ComplexVector::new(w)).map_err(to_py)
}

#[pyfunction]
fn rayleigh_distance(aperture: f64, wavelength: f64) -> f64 {
    geometry::rayleigh_distance(aperture, wavelength)
}

/// Sampled distances for one angle; the first entry is `inf`.
#[pyfunction]
#[pyo3(signature = (theta, count, cfg = None))]
fn sample_distances(theta: f64, count: usize, cfg: Option<PySystemConfig>) -> Vec<f64> {
    codebook::sample_distances(theta, count, &config(cfg))
}

#[pyclass(name = "PolarCodebook", module = "xlbt")]
struct PyPolarCodebook {
    inner: codebook::PolarCodebook,
}

#[pymethods]
impl PyPolarCodebook {
    #[new]
    #[pyo3(signature = (cfg = None))]
    fn new(cfg: Option<PySystemConfig>) -> Self {
        PyPolarCodebook {
            inner: codebook::build_polar_codebook(&config(cfg)),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Grid angle of the 1-based angle index `n`.
    fn angle(&self, n: usize) -> PyResult<f64> {
        self.check(n)?;
        Ok(self.inner.entry(n).theta)
    }

    fn distances(&self, n: usize) -> PyResult<Vec<f64>> {
        self.check(n)?;
        Ok(self.inner.entry(n).distances.clone())
    }

    fn codeword(&self, n: usize, s: usize) -> PyResult<Vec<Complex64>> {
        self.inner
            .codeword(CodewordId::new(n, s))
            .map(|c| c.as_slice().to_vec())
            .ok_or_else(|| PyValueError::new_err(format!("no codeword ({n}, {s})")))
    }

    /// Noiseless best codeword `(n, s)` for a user.
    fn oracle(&self, theta: f64, r: f64, cfg: Option<PySystemConfig>) -> PyResult<(usize, usize)> {
        let cfg = config(cfg);
        if cfg.num_antennas != self.inner.num_antennas() {
            return Err(PyValueError::new_err("config and codebook sizes differ"));
        }
        let ch = geometry::synthesize_channel(&location(theta, r)?, &cfg);
        let id = xlbt_core::training::oracle_best_codeword(&ch, &self.inner);
        Ok((id.angle_index, id.distance_index))
    }

    fn export_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        codebook::export_polar_codebook(&self.inner, &path).map_err(to_py)
    }
}

impl PyPolarCodebook {
    fn check(&self, n: usize) -> PyResult<()> {
        if n == 0 || n > self.inner.num_antennas() {
            return Err(PyValueError::new_err(format!(
                "angle index {n} outside 1..={}",
                self.inner.num_antennas()
            )));
        }
        Ok(())
    }
}

fn schemes(list: Option<&str>, default: Vec<Scheme>, k: usize) -> PyResult<Vec<Scheme>> {
    match list {
        Some(l) => Scheme::parse_list(l, k).map_err(to_py),
        None => Ok(default),
    }
}

/// Runs every scheme once for a user and returns one dict per scheme.
#[pyfunction]
#[pyo3(signature = (theta, r, cfg = None, schemes = None, seed = 1))]
fn train<'py>(
    py: Python<'py>,
    theta: f64,
    r: f64,
    cfg: Option<PySystemConfig>,
    schemes: Option<&str>,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config(cfg);
    let list = self::schemes(schemes, Scheme::snr_defaults(cfg.num_candidates), cfg.num_candidates)?;
    let truth = location(theta, r)?;
    let books = Codebooks::build(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(sim::stream_seed(seed, 0, 0));
    let (oracle, outcomes) =
        sim::run_single(&cfg, &books, &truth, &list, &mut rng).map_err(to_py)?;
    outcomes
        .iter()
        .map(|(scheme, out, rate)| {
            let d = PyDict::new(py);
            d.set_item("scheme", scheme.to_string())?;
            d.set_item("selected", out.selected.map(|id| (id.angle_index, id.distance_index)))?;
            d.set_item("oracle", (oracle.angle_index, oracle.distance_index))?;
            d.set_item("success", out.selected.map(|id| id == oracle))?;
            d.set_item("pilots_used", out.pilots_used)?;
            d.set_item("rate", *rate)?;
            d.set_item("gain", sim::gain_toward(&truth, &out.beamformer, &cfg))?;
            Ok(d)
        })
        .collect()
}

fn rows<'py>(py: Python<'py>, report: &SweepReport) -> PyResult<Vec<Bound<'py, PyDict>>> {
    ResultTable::from_report(report)
        .rows
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("sweep_value", r.sweep_value)?;
            d.set_item("scheme", r.scheme)?;
            d.set_item("success_rate", r.success_rate)?;
            d.set_item("rate_bps_hz", r.rate_bps_hz)?;
            d.set_item("overhead", r.overhead)?;
            d.set_item("trials", r.trials)?;
            d.set_item("seed", r.seed)?;
            Ok(d)
        })
        .collect()
}

/// Monte Carlo sweep over reference SNR (dB) with users at distance `r`.
#[pyfunction]
#[pyo3(signature = (snr_db, cfg = None, trials = 1000, seed = 1, r = 10.0, schemes = None))]
fn sweep_snr<'py>(
    py: Python<'py>,
    snr_db: Vec<f64>,
    cfg: Option<PySystemConfig>,
    trials: usize,
    seed: u64,
    r: f64,
    schemes: Option<&str>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config(cfg);
    let list = self::schemes(schemes, Scheme::snr_defaults(cfg.num_candidates), cfg.num_candidates)?;
    let report = py
        .detach(|| {
            let books = Codebooks::build(&cfg);
            sim::run_snr_sweep(&cfg, &books, &snr_db, trials, &list, seed, r)
        })
        .map_err(to_py)?;
    rows(py, &report)
}

/// Monte Carlo sweep over user distance (m) at the configured power.
#[pyfunction]
#[pyo3(signature = (distances, cfg = None, trials = 1000, seed = 1, schemes = None))]
fn sweep_distance<'py>(
    py: Python<'py>,
    distances: Vec<f64>,
    cfg: Option<PySystemConfig>,
    trials: usize,
    seed: u64,
    schemes: Option<&str>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config(cfg);
    let list = self::schemes(
        schemes,
        Scheme::distance_defaults(cfg.num_candidates),
        cfg.num_candidates,
    )?;
    let report = py
        .detach(|| {
            let books = Codebooks::build(&cfg);
            sim::run_distance_sweep(&cfg, &books, &distances, trials, &list, seed)
        })
        .map_err(to_py)?;
    rows(py, &report)
}

#[pymodule]
fn xlbt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SPEED_OF_LIGHT", geometry::SPEED_OF_LIGHT)?;
    m.add_class::<PySystemConfig>()?;
    m.add_class::<PyPolarCodebook>()?;
    m.add_function(wrap_pyfunction!(near_steering, m)?)?;
    m.add_function(wrap_pyfunction!(far_steering, m)?)?;
    m.add_function(wrap_pyfunction!(channel, m)?)?;
    m.add_function(wrap_pyfunction!(beam_gain, m)?)?;
    m.add_function(wrap_pyfunction!(rayleigh_distance, m)?)?;
    m.add_function(wrap_pyfunction!(sample_distances, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_snr, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_distance, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use pyo3::ffi::c_str;
    use pyo3::types::PyModule;
    use pyo3::wrap_pymodule;

    use super::*;

    #[test]
    fn module_round_trip() {
        Python::attach(|py| {
            let module = wrap_pymodule!(xlbt)(py);
            let sys = PyModule::import(py, "sys").unwrap();
            sys.getattr("modules").unwrap().set_item("xlbt", module).unwrap();
            py.run(
                c_str!(
                    r#"
import math, xlbt
cfg = xlbt.SystemConfig(num_antennas=32)
b = xlbt.near_steering(0.2, 4.0, cfg)
assert abs(math.sqrt(sum(abs(z) ** 2 for z in b)) - 1.0) < 1e-12
assert len(xlbt.PolarCodebook(cfg)) == 32 * 6
assert xlbt.SystemConfig().overhead_two_phase() == 274
rows = xlbt.sweep_snr([10.0], cfg, trials=5, schemes="far-field")
assert rows[0]["scheme"] == "far-field" and rows[0]["trials"] == 5
try:
    xlbt.SystemConfig(num_antennas=0)
    raise SystemExit("expected ValueError")
except ValueError:
    pass
"#
                ),
                None,
                None,
            )
            .unwrap();
        });
    }
}
