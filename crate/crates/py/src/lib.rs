//! Python module `fraclap_py`: kernel constants, 1D operators and the
//! experiment registry.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use fraclap::config::ExperimentConfig;
use fraclap::grid::{sample, Grid, GridFunction};
use fraclap::{experiments, frac, kernel};

fn py_err(e: fraclap::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// C(n, t, p) = ∫(1 + z²)^{−(n+tp)/2} dz by quadrature.
#[pyfunction]
fn slice_kernel_constant(n: usize, t: f64, p: f64) -> PyResult<f64> {
    kernel::slice_kernel_constant(n, t, p).map_err(py_err)
}

/// Beta closed form of C(n, t, p).
#[pyfunction]
fn slice_kernel_closed_form(n: usize, t: f64, p: f64) -> PyResult<f64> {
    kernel::slice_kernel_closed_form(n, t, p).map_err(py_err)
}

/// Normalization of D^t with symbol |ξ|^t in dimension n.
#[pyfunction]
fn c_lap(n: usize, t: f64) -> PyResult<f64> {
    kernel::c_lap(n, t).map_err(py_err)
}

fn line_function(values: Vec<f64>, lower: f64, upper: f64) -> PyResult<GridFunction> {
    if values.len() < 2 {
        return Err(PyValueError::new_err("need at least two nodal values"));
    }
    let h = (upper - lower) / (values.len() - 1) as f64;
    let g = Grid::new(1, h, &[(lower, upper)], false).map_err(py_err)?;
    GridFunction::new(&g, values).map_err(py_err)
}

/// D^t of the piecewise linear interpolant of `values` on [lower, upper]
/// (zero outside), evaluated at `points`.
#[pyfunction]
fn frac_laplacian_1d(values: Vec<f64>, lower: f64, upper: f64, t: f64, points: Vec<f64>) -> PyResult<Vec<f64>> {
    let f = line_function(values, lower, upper)?;
    let pts: Vec<Vec<f64>> = points.into_iter().map(|x| vec![x]).collect();
    frac::frac_laplacian(&f, t, &pts).map_err(py_err)
}

/// Riesz potential D^{−t} of the same interpolant at `points`.
#[pyfunction]
fn riesz_potential_1d(values: Vec<f64>, lower: f64, upper: f64, t: f64, points: Vec<f64>) -> PyResult<Vec<f64>> {
    let f = line_function(values, lower, upper)?;
    let pts: Vec<Vec<f64>> = points.into_iter().map(|x| vec![x]).collect();
    frac::riesz_potential(&f, t, &pts).map_err(py_err)
}

/// Nodal values of exp(−x²/2) on [lower, upper] with `count` nodes.
#[pyfunction]
fn gaussian_nodes(lower: f64, upper: f64, count: usize) -> PyResult<Vec<f64>> {
    let h = (upper - lower) / (count.max(2) - 1) as f64;
    let g = Grid::new(1, h, &[(lower, upper)], false).map_err(py_err)?;
    Ok(sample(|x| (-0.5 * x[0] * x[0]).exp(), &g).map_err(py_err)?.values)
}

/// (name, summary) of every registered experiment.
#[pyfunction]
fn list_experiments() -> Vec<(String, String)> {
    experiments::registry().into_iter().map(|e| (e.name.to_string(), e.summary.to_string())).collect()
}

/// Resolved parameters of a JSON config, as JSON text.
#[pyfunction]
fn validate_config(config_json: &str) -> PyResult<String> {
    let c = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    let v = experiments::validate(&c, None).map_err(py_err)?;
    serde_json::to_string(&v).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Run an experiment from a JSON config and return the report JSON.
#[pyfunction]
#[pyo3(signature = (config_json, seed=None, spacing=None))]
fn run_experiment(py: Python<'_>, config_json: &str, seed: Option<u64>, spacing: Option<f64>) -> PyResult<String> {
    let c = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    let report = py.detach(|| experiments::run(&c, seed, spacing)).map_err(py_err)?;
    report.to_json().map_err(py_err)
}

#[pymodule]
fn fraclap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(slice_kernel_constant, m)?)?;
    m.add_function(wrap_pyfunction!(slice_kernel_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(c_lap, m)?)?;
    m.add_function(wrap_pyfunction!(frac_laplacian_1d, m)?)?;
    m.add_function(wrap_pyfunction!(riesz_potential_1d, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_nodes, m)?)?;
    m.add_function(wrap_pyfunction!(list_experiments, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
