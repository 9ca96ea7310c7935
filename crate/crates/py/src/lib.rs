//! Python module `srl_transfer`: corpora, synthetic data, training, labeling,
//! baselines and evaluation. Structured results cross the boundary as plain
//! dicts and lists.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use rand::SeedableRng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use srlt_core::baselines::{all_a0, MostFrequent};
use srlt_core::corpus::{
    generate_synthetic as generate, identification_counts, parse_conll, read_corpus_file, write_corpus_file, Corpus,
    Domain, IdentifyConfig, SyntheticConfig, SyntheticOracle,
};
use srlt_core::evaluation::{
    analyze_bc as bc_report, bhattacharyya as bc, clustering_scores as cluster_scores, model_records, PredictionRecord,
    SupervisedConfig,
};
use srlt_core::model::Model;
use srlt_core::objective::{self, GumbelConfig};
use srlt_core::trainer::{Ablation, Trainer, TrainingConfig};

fn err(e: srlt_core::Error) -> PyErr {
    match e {
        srlt_core::Error::Io(e) => PyIOError::new_err(e.to_string()),
        e @ srlt_core::Error::Config(_) => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn toml_or_default<T: DeserializeOwned + Default>(text: Option<&str>) -> PyResult<T> {
    match text {
        Some(t) => toml::from_str(t).map_err(|e| PyValueError::new_err(e.to_string())),
        None => Ok(T::default()),
    }
}

fn domain(name: &str) -> PyResult<Domain> {
    match name {
        "verbal" => Ok(Domain::Verbal),
        "nominal" => Ok(Domain::Nominal),
        other => Err(PyValueError::new_err(format!("unknown domain `{other}` (expected verbal or nominal)"))),
    }
}

/// Sentences with predicate instances of one domain and a role inventory.
#[pyclass(name = "Corpus", module = "srl_transfer", frozen)]
struct PyCorpus(Corpus);

#[pymethods]
impl PyCorpus {
    /// Reads the line-delimited JSON corpus format.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        read_corpus_file(path).map(PyCorpus).map_err(err)
    }

    /// Parses CoNLL-2009 text, keeping the predicates of `domain`.
    #[staticmethod]
    fn from_conll(text: &str, domain_name: &str) -> PyResult<Self> {
        parse_conll(text, domain(domain_name)?).map(PyCorpus).map_err(err)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        write_corpus_file(&self.0, path).map_err(err)
    }

    #[getter]
    fn domain(&self) -> &'static str {
        match self.0.domain() {
            Domain::Verbal => "verbal",
            Domain::Nominal => "nominal",
        }
    }

    #[getter]
    fn roles(&self) -> Vec<String> {
        self.0.roles().labels().to_vec()
    }

    fn num_instances(&self) -> usize {
        self.0.num_instances()
    }

    fn num_arguments(&self) -> usize {
        self.0.num_arguments()
    }

    fn predicate_lemmas(&self) -> Vec<String> {
        self.0.predicate_lemmas().into_iter().collect()
    }

    fn without_labels(&self) -> Self {
        PyCorpus(self.0.without_labels())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Corpus({}, {} sentences, {} instances)", self.domain(), self.0.len(), self.0.num_instances())
    }
}

/// Ground truth of a synthetic corpus pair.
#[pyclass(name = "SyntheticOracle", module = "srl_transfer", frozen)]
struct PyOracle(SyntheticOracle);

#[pymethods]
impl PyOracle {
    /// Expected accuracy of the Bayes-optimal labeler on nominal data.
    fn exact_bayes_accuracy(&self) -> f64 {
        self.0.exact_bayes_accuracy()
    }

    fn bayes_accuracy(&self, corpus: &PyCorpus) -> PyResult<f64> {
        self.0.bayes_accuracy(&corpus.0).map_err(err)
    }

    /// Fresh gold-labeled instances of `domain`.
    fn held_out(&self, n: usize, domain_name: &str, seed: u64) -> PyResult<PyCorpus> {
        self.0.held_out(n, domain(domain_name)?, seed).map(PyCorpus).map_err(err)
    }

    /// Restores the gold roles of an unlabeled generated corpus.
    fn reveal(&self, corpus: &PyCorpus) -> PyResult<PyCorpus> {
        self.0.reveal(&corpus.0).map(PyCorpus).map_err(err)
    }
}

/// Generates (verbal, nominal, oracle); `config` is the TOML form of the
/// synthetic configuration.
#[pyfunction]
#[pyo3(signature = (seed, config = None))]
fn generate_synthetic(seed: u64, config: Option<&str>) -> PyResult<(PyCorpus, PyCorpus, PyOracle)> {
    let cfg: SyntheticConfig = toml_or_default(config)?;
    let (v, n, o) = generate(&cfg, seed).map_err(err)?;
    Ok((PyCorpus(v), PyCorpus(n), PyOracle(o)))
}

#[pyclass(name = "Model", module = "srl_transfer", frozen)]
struct PyModel(Model);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Model::load(&dir).map(PyModel).map_err(err)
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.0.save(&dir).map_err(err)
    }

    /// Prediction records, one dict per predicate instance.
    fn predict<'py>(&self, py: Python<'py>, corpus: &PyCorpus) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &model_records(&self.0, &corpus.0).map_err(err)?)
    }

    /// Copy of `corpus` with every argument labeled.
    fn label(&self, corpus: &PyCorpus) -> PyResult<PyCorpus> {
        self.0.label_corpus(&corpus.0).map(PyCorpus).map_err(err)
    }

    /// Hex SHA-256 of the parameters.
    fn digest(&self) -> String {
        self.0.store.digest()
    }
}

#[pyclass(name = "Trainer", module = "srl_transfer")]
struct PyTrainer(Trainer);

#[pymethods]
impl PyTrainer {
    /// `config` is the TOML form of the training configuration; `ablate`
    /// takes any of "z", "joint", "augment".
    #[new]
    #[pyo3(signature = (verbal, nominal, dev = None, config = None, seed = None, ablate = Vec::new()))]
    fn new(
        verbal: &PyCorpus,
        nominal: &PyCorpus,
        dev: Option<&PyCorpus>,
        config: Option<&str>,
        seed: Option<u64>,
        ablate: Vec<String>,
    ) -> PyResult<Self> {
        let mut cfg: TrainingConfig = toml_or_default(config)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        for a in ablate {
            cfg = cfg.ablate(a.parse::<Ablation>().map_err(err)?);
        }
        Trainer::new(cfg, &verbal.0, &nominal.0, dev.map(|d| &d.0)).map(PyTrainer).map_err(err)
    }

    /// Trains to completion and returns the per-epoch records.
    #[pyo3(signature = (out_dir = None))]
    fn train<'py>(&mut self, py: Python<'py>, out_dir: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
        let outcome = self.0.train(out_dir.as_deref()).map_err(err)?;
        to_py(py, &outcome.state.epochs)
    }

    #[getter]
    fn model(&self) -> PyModel {
        PyModel(self.0.model.clone())
    }

    #[getter]
    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.config)
    }
}

#[pyfunction]
fn gaussian_kl(mean: Vec<f64>, log_variance: Vec<f64>) -> PyResult<f64> {
    if mean.len() != log_variance.len() {
        return Err(PyValueError::new_err("mean and log_variance differ in length"));
    }
    Ok(objective::gaussian_kl(&mean, &log_variance))
}

#[pyfunction]
fn categorical_kl_uniform(pi: Vec<f64>) -> f64 {
    objective::categorical_kl_uniform(&pi)
}

/// One relaxed sample from Gumbel-softmax(pi, temperature).
#[pyfunction]
#[pyo3(signature = (pi, temperature, seed, straight_through = false))]
fn gumbel_softmax(pi: Vec<f64>, temperature: f64, seed: u64, straight_through: bool) -> PyResult<Vec<f64>> {
    let cfg = GumbelConfig { temperature, straight_through, seed };
    cfg.validate().map_err(err)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Ok(objective::gumbel_softmax(&pi, &cfg, &mut rng))
}

/// Bhattacharyya coefficient of two count samples; None if either is empty.
#[pyfunction]
fn bhattacharyya(p: BTreeMap<String, u64>, q: BTreeMap<String, u64>) -> Option<f64> {
    bc(&p, &q)
}

#[pyfunction]
#[pyo3(signature = (verbal, nominal, min_pair_instances = 100, min_lemma_frequency = 20))]
fn analyze_bc<'py>(
    py: Python<'py>,
    verbal: &PyCorpus,
    nominal: &PyCorpus,
    min_pair_instances: u64,
    min_lemma_frequency: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = srlt_core::evaluation::BcConfig { min_pair_instances, min_lemma_frequency };
    to_py(py, &bc_report(&verbal.0, &nominal.0, cfg).map_err(err)?)
}

/// Supervised scores of prediction records as returned by `Model.predict`.
#[pyfunction]
#[pyo3(signature = (predictions, drop_self_loops = false, macro_all = false))]
fn supervised_scores<'py>(
    predictions: &Bound<'py, PyAny>,
    drop_self_loops: bool,
    macro_all: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let records: Vec<PredictionRecord> = from_py(predictions)?;
    let report = srlt_core::evaluation::supervised_scores(&records, SupervisedConfig { drop_self_loops, macro_all })
        .map_err(err)?;
    to_py(predictions.py(), &report)
}

#[pyfunction]
#[pyo3(signature = (predictions, drop_self_loops = false))]
fn clustering_scores<'py>(predictions: &Bound<'py, PyAny>, drop_self_loops: bool) -> PyResult<Bound<'py, PyAny>> {
    let records: Vec<PredictionRecord> = from_py(predictions)?;
    to_py(predictions.py(), &cluster_scores(&records, drop_self_loops).map_err(err)?)
}

/// Most-frequent-role predictions for `corpus`, fit on labeled `verbal`.
#[pyfunction]
fn most_frequent<'py>(py: Python<'py>, verbal: &PyCorpus, corpus: &PyCorpus) -> PyResult<Bound<'py, PyAny>> {
    let mf = MostFrequent::fit(&verbal.0).map_err(err)?;
    to_py(py, &mf.records(&corpus.0).map_err(err)?)
}

/// Single-cluster predictions for `corpus`.
#[pyfunction]
fn all_in_one_cluster<'py>(py: Python<'py>, corpus: &PyCorpus) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &all_a0(&corpus.0).map_err(err)?)
}

/// Rule-based identification against the gold argument slots of `corpus`.
#[pyfunction]
fn identification_scores<'py>(py: Python<'py>, corpus: &PyCorpus) -> PyResult<Bound<'py, PyAny>> {
    let c = identification_counts(&corpus.0, &IdentifyConfig::default()).map_err(err)?;
    let scores = BTreeMap::from([
        ("correct", c.correct as f64),
        ("predicted", c.predicted as f64),
        ("gold", c.gold as f64),
        ("precision", c.precision()),
        ("recall", c.recall()),
        ("f1", c.f1()),
    ]);
    to_py(py, &scores)
}

#[pymodule]
fn srl_transfer(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", srlt_core::VERSION)?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyOracle>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyTrainer>()?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_kl, m)?)?;
    m.add_function(wrap_pyfunction!(categorical_kl_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(gumbel_softmax, m)?)?;
    m.add_function(wrap_pyfunction!(bhattacharyya, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_bc, m)?)?;
    m.add_function(wrap_pyfunction!(supervised_scores, m)?)?;
    m.add_function(wrap_pyfunction!(clustering_scores, m)?)?;
    m.add_function(wrap_pyfunction!(most_frequent, m)?)?;
    m.add_function(wrap_pyfunction!(all_in_one_cluster, m)?)?;
    m.add_function(wrap_pyfunction!(identification_scores, m)?)?;
    Ok(())
}
