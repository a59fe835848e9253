//! Python bindings.
//!
//! Instances are passed as dicts from feature name to value. Strings are
//! used as categorical values verbatim, numbers are read as real values (or
//! as categorical values when the feature is categorical), and `bool` maps
//! to `"true"` / `"false"`.

use std::collections::HashMap;
use std::path::PathBuf;

use bayeskit_core::evaluate::Classifier;
use bayeskit_core::exact_bayes::{estimate_joint, param_count as core_param_count};
use bayeskit_core::independence::{is_conditionally_independent, weather_example};
use bayeskit_core::io::{
    dataset_from_table, encode_instances, load_dataset, load_generator, load_model, save_model,
    write_dataset, DataFormat, Model, RawTable, SchemaSidecar,
};
use bayeskit_core::naive_bayes::train;
use bayeskit_core::synthetic::{mle_concentration_trial as core_mle_trial, sample};
use bayeskit_core::{
    Error, Instance, JointTable, LabeledDataset, LossMatrix, NaiveBayesModel, ParamKind,
    SmoothingConfig,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn cell(value: &Bound<'_, PyAny>) -> PyResult<String> {
    if value.is_instance_of::<PyBool>() {
        return Ok(if value.extract::<bool>()? {
            "true"
        } else {
            "false"
        }
        .into());
    }
    if let Ok(s) = value.extract::<String>() {
        return Ok(s);
    }
    Ok(value.str()?.to_string())
}

fn table(columns: Vec<String>, rows: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<RawTable> {
    let rows = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.len() != columns.len() {
                return Err(PyValueError::new_err(format!(
                    "row {i} has {} cells, expected {}",
                    r.len(),
                    columns.len()
                )));
            }
            Ok((i + 1, r.iter().map(cell).collect::<PyResult<Vec<_>>>()?))
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok(RawTable { columns, rows })
}

fn instance(model: &dyn Classifier, values: &Bound<'_, PyDict>) -> PyResult<Instance> {
    let mut columns = Vec::with_capacity(values.len());
    let mut cells = Vec::with_capacity(values.len());
    for (k, v) in values.iter() {
        columns.push(k.extract::<String>()?);
        cells.push(cell(&v)?);
    }
    let t = RawTable {
        columns,
        rows: vec![(1, cells)],
    };
    let mut encoded = encode_instances(&t, model.schema(), None).map_err(py_err)?;
    Ok(encoded.remove(0).1)
}

fn dataset(
    columns: Vec<String>,
    rows: Vec<Vec<Bound<'_, PyAny>>>,
    label_column: &str,
) -> PyResult<LabeledDataset> {
    dataset_from_table(&table(columns, rows)?, label_column, None).map_err(py_err)
}

fn read_data(
    path: PathBuf,
    label_column: &str,
    schema: Option<PathBuf>,
) -> PyResult<LabeledDataset> {
    let sidecar = schema
        .map(|p| SchemaSidecar::load(&p))
        .transpose()
        .map_err(py_err)?;
    let format = DataFormat::from_path(&path);
    load_dataset(&path, format, label_column, sidecar.as_ref()).map_err(py_err)
}

/// Naive Bayes classifier over categorical and Gaussian features.
#[pyclass(name = "NaiveBayes", module = "bayeskit", frozen)]
struct PyNaiveBayes {
    inner: NaiveBayesModel,
}

#[pymethods]
impl PyNaiveBayes {
    /// Train from in-memory rows; column types are inferred.
    #[staticmethod]
    #[pyo3(signature = (columns, rows, label_column = "label", alpha = 1.0, alpha_prior = 0.0))]
    fn fit(
        columns: Vec<String>,
        rows: Vec<Vec<Bound<'_, PyAny>>>,
        label_column: &str,
        alpha: f64,
        alpha_prior: f64,
    ) -> PyResult<Self> {
        let ds = dataset(columns, rows, label_column)?;
        let config = SmoothingConfig::new(alpha, alpha_prior).map_err(py_err)?;
        Ok(PyNaiveBayes {
            inner: train(&ds, config).map_err(py_err)?,
        })
    }

    /// Train from a CSV or JSONL file.
    #[staticmethod]
    #[pyo3(signature = (path, label_column = "label", alpha = 1.0, alpha_prior = 0.0, schema = None))]
    fn fit_file(
        path: PathBuf,
        label_column: &str,
        alpha: f64,
        alpha_prior: f64,
        schema: Option<PathBuf>,
    ) -> PyResult<Self> {
        let ds = read_data(path, label_column, schema)?;
        let config = SmoothingConfig::new(alpha, alpha_prior).map_err(py_err)?;
        Ok(PyNaiveBayes {
            inner: train(&ds, config).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        match load_model(&path).map_err(py_err)? {
            Model::NaiveBayes(inner) => Ok(PyNaiveBayes { inner }),
            Model::Joint(_) => Err(PyValueError::new_err("file holds a joint_table")),
        }
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_model(&Model::NaiveBayes(self.inner.clone()), &path).map_err(py_err)
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.label_space().labels().to_vec()
    }

    #[getter]
    fn features(&self) -> Vec<String> {
        self.inner
            .schema()
            .features()
            .iter()
            .map(|f| f.name().to_string())
            .collect()
    }

    #[getter]
    fn prior(&self) -> Vec<f64> {
        self.inner.prior().distribution().probs().to_vec()
    }

    fn log_scores(&self, x: &Bound<'_, PyDict>) -> PyResult<Vec<f64>> {
        let x = instance(&self.inner, x)?;
        self.inner.log_scores(&x).map_err(py_err)
    }

    fn posterior(&self, x: &Bound<'_, PyDict>) -> PyResult<Vec<f64>> {
        let x = instance(&self.inner, x)?;
        Ok(self.inner.posterior(&x).map_err(py_err)?.probs().to_vec())
    }

    fn classify(&self, x: &Bound<'_, PyDict>) -> PyResult<String> {
        let x = instance(&self.inner, x)?;
        let k = self.inner.classify(&x).map_err(py_err)?;
        Ok(self.inner.label_space().name(k).to_string())
    }

    fn __repr__(&self) -> String {
        format!(
            "NaiveBayes(features={}, labels={:?})",
            self.inner.schema().len(),
            self.inner.label_space().labels()
        )
    }
}

/// Full joint distribution over categorical features and the class.
#[pyclass(name = "JointTable", module = "bayeskit", frozen)]
struct PyJointTable {
    inner: JointTable,
}

#[pymethods]
impl PyJointTable {
    /// Empirical joint of in-memory rows.
    #[staticmethod]
    #[pyo3(signature = (columns, rows, label_column = "label"))]
    fn fit(
        columns: Vec<String>,
        rows: Vec<Vec<Bound<'_, PyAny>>>,
        label_column: &str,
    ) -> PyResult<Self> {
        let ds = dataset(columns, rows, label_column)?;
        Ok(PyJointTable {
            inner: estimate_joint(&ds).map_err(py_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, label_column = "label", schema = None))]
    fn fit_file(path: PathBuf, label_column: &str, schema: Option<PathBuf>) -> PyResult<Self> {
        let ds = read_data(path, label_column, schema)?;
        Ok(PyJointTable {
            inner: estimate_joint(&ds).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        match load_model(&path).map_err(py_err)? {
            Model::Joint(inner) => Ok(PyJointTable { inner }),
            Model::NaiveBayes(_) => Err(PyValueError::new_err("file holds a naive_bayes model")),
        }
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_model(&Model::Joint(self.inner.clone()), &path).map_err(py_err)
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.label_space().labels().to_vec()
    }

    fn posterior(&self, x: &Bound<'_, PyDict>) -> PyResult<Vec<f64>> {
        let x = instance(&self.inner, x)?;
        Ok(self
            .inner
            .exact_posterior(&x)
            .map_err(py_err)?
            .probs()
            .to_vec())
    }

    /// Minimum-error label, or minimum-risk label when `loss[action][class]` is given.
    #[pyo3(signature = (x, loss = None))]
    fn classify(&self, x: &Bound<'_, PyDict>, loss: Option<Vec<Vec<f64>>>) -> PyResult<String> {
        let x = instance(&self.inner, x)?;
        let k = match loss {
            None => self.inner.classify_min_error(&x),
            Some(l) => {
                let l = LossMatrix::new(l).map_err(py_err)?;
                self.inner.classify_min_risk(&x, &l)
            }
        }
        .map_err(py_err)?;
        Ok(self.inner.label_space().name(k).to_string())
    }

    fn bayes_error(&self) -> f64 {
        self.inner.bayes_error()
    }

    fn __repr__(&self) -> String {
        format!(
            "JointTable(instances={}, labels={:?})",
            self.inner.instance_count(),
            self.inner.label_space().labels()
        )
    }
}

/// `(full_joint, naive)` parameter counts for `n` boolean attributes.
#[pyfunction]
fn param_count(n: u32) -> PyResult<(u64, u64)> {
    Ok((
        core_param_count(ParamKind::FullJoint, n).map_err(py_err)?,
        core_param_count(ParamKind::Naive, n).map_err(py_err)?,
    ))
}

/// Conditional independence check on the built-in thunder/rain/lightning joint.
#[pyfunction]
#[pyo3(signature = (x = "Thunder", y = "Rain", z = "Lightning", tol = 1e-9))]
fn weather_ci<'py>(
    py: Python<'py>,
    x: &str,
    y: &str,
    z: &str,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let joint = weather_example().with_roles(x, y, z).map_err(py_err)?;
    let check = is_conditionally_independent(&joint, tol).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("independent", check.independent)?;
    d.set_item("max_gap", check.max_gap)?;
    if let Some(w) = check.witness {
        d.set_item("witness", (w.x, w.y, w.z, w.p_x_given_yz, w.p_x_given_z))?;
    }
    Ok(d)
}

#[pyfunction]
fn mle_concentration_trial(
    p: f64,
    samples: usize,
    trials: usize,
    tolerance: f64,
    seed: u64,
) -> PyResult<f64> {
    core_mle_trial(p, samples, trials, tolerance, seed).map_err(py_err)
}

/// Draw `count` rows from a saved generator and write them as CSV/JSONL.
#[pyfunction]
#[pyo3(signature = (spec, count, seed, out, label_column = "label"))]
fn synth(
    spec: PathBuf,
    count: usize,
    seed: u64,
    out: PathBuf,
    label_column: &str,
) -> PyResult<usize> {
    let generator = load_generator(&spec).map_err(py_err)?;
    let ds = sample(&generator, count, seed).map_err(py_err)?;
    let file = std::fs::File::create(&out).map_err(|e| py_err(e.into()))?;
    write_dataset(&ds, label_column, DataFormat::from_path(&out), file).map_err(py_err)?;
    Ok(ds.len())
}

/// Column names and string cells of a data file, for quick inspection.
#[pyfunction]
#[pyo3(signature = (path, label_column = "label"))]
fn load_rows(path: PathBuf, label_column: &str) -> PyResult<HashMap<String, Vec<String>>> {
    let ds = read_data(path, label_column, None)?;
    let mut cols: HashMap<String, Vec<String>> = HashMap::new();
    for (x, y) in ds.rows() {
        for (i, v) in x.values().iter().enumerate() {
            cols.entry(ds.schema().feature(i).name().to_string())
                .or_default()
                .push(ds.schema().format_value(i, v));
        }
        cols.entry(label_column.to_string())
            .or_default()
            .push(ds.label_space().name(*y).to_string());
    }
    Ok(cols)
}

#[pymodule]
fn bayeskit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNaiveBayes>()?;
    m.add_class::<PyJointTable>()?;
    m.add_function(wrap_pyfunction!(param_count, m)?)?;
    m.add_function(wrap_pyfunction!(weather_ci, m)?)?;
    m.add_function(wrap_pyfunction!(mle_concentration_trial, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(load_rows, m)?)?;
    Ok(())
}
