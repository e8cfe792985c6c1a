//! Python bindings for `smbm-core`.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smbm_core as core;
use smbm_core::{
    BitWord, BoundParams, ChannelEstimate, ChannelRealization, EstimatorKind, ModulationSpec, PilotObservation,
    PilotSpec, SmbmError, SmbmSymbol, SweepConfig, SweepRecord,
};

fn err(e: SmbmError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn csi(name: &str) -> PyResult<EstimatorKind> {
    name.parse().map_err(err)
}

#[pyclass(name = "Constellation", frozen)]
struct PyConstellation {
    inner: core::Constellation,
}

#[pymethods]
impl PyConstellation {
    #[new]
    #[pyo3(signature = (name = "qpsk", es = 1.0))]
    fn new(name: &str, es: f64) -> PyResult<Self> {
        let mut spec: ModulationSpec = name.parse().map_err(err)?;
        spec.symbol_energy = es;
        Ok(Self {
            inner: core::Constellation::new(spec).map_err(err)?,
        })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn bits_per_symbol(&self) -> u32 {
        self.inner.bits_per_symbol()
    }

    #[getter]
    fn points(&self) -> Vec<Complex64> {
        self.inner.points().to_vec()
    }

    #[getter]
    fn labels(&self) -> Vec<u32> {
        self.inner.labels().to_vec()
    }

    fn average_energy(&self) -> f64 {
        self.inner.average_energy()
    }

    /// Symbol carrying the `bits_per_symbol`-bit label `bits`.
    fn map_bits(&self, bits: u32) -> PyResult<Complex64> {
        let width = self.inner.bits_per_symbol();
        if width < 32 && bits >> width != 0 {
            return Err(err(SmbmError::WrongWordWidth {
                expected: width,
                got: 32 - bits.leading_zeros(),
            }));
        }
        self.inner.map_bits_to_symbol(BitWord::new(bits, width)).map_err(err)
    }

    fn symbol_bits(&self, index: usize) -> PyResult<u32> {
        Ok(self.inner.symbol_to_bits(index).map_err(err)?.value())
    }

    fn __repr__(&self) -> String {
        format!("Constellation('{}', es={})", self.inner.spec(), self.inner.spec().symbol_energy)
    }
}

#[pyclass(name = "SystemConfig", frozen)]
struct PySystemConfig {
    inner: core::SystemConfig,
    constellation: core::Constellation,
}

#[pymethods]
impl PySystemConfig {
    #[new]
    #[pyo3(signature = (nt = 4, nr = 4, nrf = 2, modulation = "qpsk", es = 1.0))]
    fn new(nt: usize, nr: usize, nrf: u32, modulation: &str, es: f64) -> PyResult<Self> {
        let mut spec: ModulationSpec = modulation.parse().map_err(err)?;
        spec.symbol_energy = es;
        let inner = core::SystemConfig::new(nt, nr, nrf, spec).map_err(err)?;
        Ok(Self {
            inner,
            constellation: core::Constellation::new(spec).map_err(err)?,
        })
    }

    #[getter]
    fn eta(&self) -> u32 {
        self.inner.eta()
    }

    #[getter]
    fn n_coords(&self) -> usize {
        self.inner.n_coords()
    }

    #[getter]
    fn n_coefficients(&self) -> usize {
        self.inner.n_coefficients()
    }

    fn constellation(&self) -> PyConstellation {
        PyConstellation {
            inner: self.constellation.clone(),
        }
    }

    fn noise_variance(&self, snr_db: f64) -> f64 {
        core::noise_variance_for_snr(snr_db, &self.inner)
    }

    /// Maps an `eta`-bit word to `(symbol_index, antenna, state, coordinate, value)`;
    /// antenna, state and coordinate are 1-based.
    fn map_word(&self, word: u32) -> PyResult<(usize, usize, usize, usize, Complex64)> {
        let eta = self.inner.eta();
        if word >> eta != 0 {
            return Err(err(SmbmError::WrongWordWidth {
                expected: eta,
                got: 32 - word.leading_zeros(),
            }));
        }
        let (s, x) = core::map_source(BitWord::new(word, eta), &self.inner, &self.constellation).map_err(err)?;
        Ok((s.symbol_index, s.antenna_index, s.state_index, s.coordinate, x.value))
    }

    fn unmap(&self, symbol_index: usize, antenna: usize, state: usize) -> PyResult<u32> {
        let s = SmbmSymbol::new(symbol_index, antenna, state, &self.inner).map_err(err)?;
        Ok(core::unmap_decision(&s, &self.inner, &self.constellation).value())
    }

    /// Draws `CN(0, power)` coefficients in storage order `(i-1)L + (k-1)Nt + (j-1)`.
    #[pyo3(signature = (seed, power = 1.0))]
    fn draw_channel(&self, seed: u64, power: f64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        core::draw_channel(&self.inner, power, &mut rng).coefficients().to_vec()
    }

    /// Pilot observations `r = p h + n` with the unit pilot.
    fn sound(&self, channel: Vec<Complex64>, noise_variance: f64, seed: u64) -> PyResult<Vec<Complex64>> {
        let h = ChannelRealization::from_coefficients(&self.inner, channel, 1.0).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(core::sound_channel(&h, PilotSpec::default(), noise_variance, &mut rng).values().to_vec())
    }

    /// LS or LMMSE estimate from unit-pilot observations.
    #[pyo3(signature = (observations, noise_variance, estimator = "lmmse", power = 1.0))]
    fn estimate(&self, observations: Vec<Complex64>, noise_variance: f64, estimator: &str, power: f64) -> PyResult<Vec<Complex64>> {
        let obs = PilotObservation::from_values(&self.inner, observations, noise_variance).map_err(err)?;
        let est = match csi(estimator)? {
            EstimatorKind::Ls => core::estimate_ls(&obs, PilotSpec::default()),
            EstimatorKind::Lmmse => core::estimate_lmmse(&obs, PilotSpec::default(), power),
            EstimatorKind::Perfect => return Err(PyValueError::new_err("estimator must be ls or lmmse")),
        };
        Ok(est.coefficients().to_vec())
    }

    /// Joint ML decision over all `(symbol, antenna, state)` hypotheses.
    fn detect<'py>(&self, py: Python<'py>, y: Vec<Complex64>, channel: Vec<Complex64>) -> PyResult<Bound<'py, PyDict>> {
        if y.len() != self.inner.n_rx {
            return Err(err(SmbmError::LengthMismatch {
                left: y.len(),
                right: self.inner.n_rx,
            }));
        }
        let h = ChannelRealization::from_coefficients(&self.inner, channel, 1.0).map_err(err)?;
        let d = core::detect_fast(&y, &ChannelEstimate::perfect(&h), &self.constellation, &self.inner);
        let out = PyDict::new(py);
        out.set_item("symbol_index", d.symbol_index)?;
        out.set_item("antenna", d.antenna_index)?;
        out.set_item("state", d.state_index)?;
        out.set_item("metric", d.metric)?;
        out.set_item("word", core::unmap_decision(&d.symbol(&self.inner), &self.inner, &self.constellation).value())?;
        Ok(out)
    }

    /// Union bound on the average bit error probability.
    #[pyo3(signature = (noise_variance, error_variance = 0.0))]
    fn abep_bound(&self, noise_variance: f64, error_variance: f64) -> f64 {
        core::abep_value(&self.inner, &self.constellation, &BoundParams::new(noise_variance, error_variance))
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemConfig(nt={}, nr={}, nrf={}, modulation='{}')",
            self.inner.n_tx, self.inner.n_rx, self.inner.n_rf, self.inner.modulation
        )
    }
}

fn record_dict<'py>(py: Python<'py>, r: &SweepRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("snr_db", r.snr_db)?;
    d.set_item("mse_empirical", r.mse_empirical)?;
    d.set_item("mse_analytic", r.mse_analytic)?;
    d.set_item("ber", r.ber)?;
    d.set_item("bit_errors", r.bit_errors)?;
    d.set_item("bits_simulated", r.bits_simulated)?;
    d.set_item("abep_bound", r.abep_bound)?;
    d.set_item("blocks", r.blocks)?;
    d.set_item("warning", r.warning.as_deref())?;
    Ok(d)
}

fn sweep_config(cfg: &PySystemConfig, snr_db: Vec<f64>, csi_mode: &str, seed: u64, workers: usize) -> PyResult<SweepConfig> {
    let mut sweep = SweepConfig::new(cfg.inner, snr_db, csi(csi_mode)?);
    sweep.master_seed = seed;
    sweep.workers = workers;
    Ok(sweep)
}

/// Monte Carlo BER sweep; one dict per SNR point.
#[pyfunction]
#[pyo3(signature = (config, snr_db, csi = "lmmse", min_errors = 200, seed = 0, block_length = 100, max_blocks = 1_000_000, workers = 0))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    config: &PySystemConfig,
    snr_db: Vec<f64>,
    csi: &str,
    min_errors: u64,
    seed: u64,
    block_length: usize,
    max_blocks: u64,
    workers: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut sweep = sweep_config(config, snr_db, csi, seed, workers)?;
    sweep.min_bit_errors = min_errors;
    sweep.block_length = block_length;
    sweep.max_blocks = max_blocks;
    let records = py.detach(|| core::run_sweep(&sweep)).map_err(err)?;
    records.iter().map(|r| record_dict(py, r)).collect()
}

/// Empirical and analytic estimator MSE over `draws` channel draws per point.
#[pyfunction]
#[pyo3(signature = (config, snr_db, csi = "lmmse", draws = 10_000, seed = 0, workers = 0))]
fn mse_sweep<'py>(
    py: Python<'py>,
    config: &PySystemConfig,
    snr_db: Vec<f64>,
    csi: &str,
    draws: u64,
    seed: u64,
    workers: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let sweep = sweep_config(config, snr_db, csi, seed, workers)?;
    let records = py.detach(|| core::run_mse_sweep(&sweep, draws)).map_err(err)?;
    records.iter().map(|r| record_dict(py, r)).collect()
}

/// `(snr_db, abep)` pairs, with the estimation error of `csi` folded in.
#[pyfunction]
#[pyo3(signature = (config, snr_db, csi = "perfect"))]
fn abep_curve(config: &PySystemConfig, snr_db: Vec<f64>, csi: &str) -> PyResult<Vec<(f64, f64)>> {
    core::run_abep_curve(&sweep_config(config, snr_db, csi, 0, 1)?).map_err(err)
}

#[pyfunction]
fn pep_sra(gamma_bar: f64) -> PyResult<f64> {
    core::pep_sra(gamma_bar).map_err(err)
}

#[pyfunction]
fn pep_quadrature(gamma_bar: f64) -> PyResult<f64> {
    core::pep_numeric_oracle(gamma_bar).map_err(err)
}

#[pyfunction]
fn pep_mra(pep_1: f64, n_rx: usize) -> f64 {
    core::pep_mra(pep_1, n_rx)
}

#[pyfunction]
fn q_function(x: f64) -> f64 {
    core::q_function(x)
}

#[pyfunction]
#[pyo3(signature = (estimator, noise_variance, power = 1.0))]
fn analytic_mse(estimator: &str, noise_variance: f64, power: f64) -> PyResult<f64> {
    Ok(core::analytic_mse(csi(estimator)?, PilotSpec::default(), noise_variance, power))
}

#[pymodule]
fn smbm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConstellation>()?;
    m.add_class::<PySystemConfig>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(mse_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(abep_curve, m)?)?;
    m.add_function(wrap_pyfunction!(pep_sra, m)?)?;
    m.add_function(wrap_pyfunction!(pep_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(pep_mra, m)?)?;
    m.add_function(wrap_pyfunction!(q_function, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_mse, m)?)?;
    Ok(())
}
