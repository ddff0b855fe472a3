//! Python bindings. Structured reports cross the boundary as plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyComplex;
use serde::Serialize;

use quasiflat::analysis;
use quasiflat::latin;
use quasiflat::models::{self, canonical_word, parse_raw_word, InducedModel};
use quasiflat::perm::{self, CoordinateWord, DEFAULT_CAP};
use quasiflat::selftest::{self as st, SelftestConfig};
use quasiflat::{magic, tol};

fn err(e: quasiflat::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, x: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(x).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyclass(name = "Permutation", module = "quasiflat_py", frozen, from_py_object, eq, hash)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyPermutation(perm::Permutation);

#[pymethods]
impl PyPermutation {
    /// One-based images, `[2, 1, 3]` swaps 1 and 2.
    #[new]
    fn new(images: Vec<usize>) -> PyResult<Self> {
        perm::Permutation::from_one_based(&images).map(Self).map_err(err)
    }

    #[staticmethod]
    fn identity(degree: usize) -> Self {
        Self(perm::Permutation::identity(degree))
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    fn images(&self) -> Vec<usize> {
        self.0.one_based()
    }

    fn cycles(&self) -> Vec<Vec<usize>> {
        self.0
            .cycles()
            .into_iter()
            .map(|c| c.into_iter().map(|x| x + 1).collect())
            .collect()
    }

    fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    fn is_identity(&self) -> bool {
        self.0.is_identity()
    }

    /// `p * q` applies q first.
    fn __mul__(&self, other: &Self) -> PyResult<Self> {
        self.0.compose(&other.0).map(Self).map_err(err)
    }

    fn __call__(&self, x: usize) -> PyResult<usize> {
        if x == 0 || x > self.0.degree() {
            return Err(PyValueError::new_err(format!(
                "point {x} outside 1..={}",
                self.0.degree()
            )));
        }
        Ok(self.0.apply(x - 1) + 1)
    }

    fn __repr__(&self) -> String {
        format!("Permutation({})", self.0)
    }
}

#[pyclass(name = "PermutationGroup", module = "quasiflat_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyGroup(perm::PermutationGroup);

#[pymethods]
impl PyGroup {
    #[new]
    fn new(generators: Vec<PyPermutation>) -> PyResult<Self> {
        let gens: Vec<_> = generators.into_iter().map(|p| p.0).collect();
        perm::generate_group(&gens, DEFAULT_CAP).map(Self).map_err(err)
    }

    /// A bundled group by name, e.g. `"s3"` or `"d4"`.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        quasiflat::fixtures::by_name(name)
            .map(Self)
            .ok_or_else(|| PyValueError::new_err(format!("no fixture {name}")))
    }

    #[staticmethod]
    fn symmetric(degree: usize) -> PyResult<Self> {
        perm::PermutationGroup::symmetric(degree).map(Self).map_err(err)
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    fn elements(&self) -> Vec<PyPermutation> {
        self.0.elements().iter().cloned().map(PyPermutation).collect()
    }

    fn contains(&self, p: &PyPermutation) -> bool {
        self.0.contains(&p.0)
    }

    fn orbits(&self) -> Vec<Vec<usize>> {
        perm::orbit_partition(&self.0)
            .into_iter()
            .map(|b| b.into_iter().map(|x| x + 1).collect())
            .collect()
    }

    fn is_transitive(&self) -> bool {
        self.0.is_transitive()
    }

    fn is_abelian(&self) -> bool {
        self.0.is_abelian()
    }

    fn is_normal_in(&self, g: &PyGroup) -> bool {
        self.0.is_normal_in(&g.0)
    }

    fn __len__(&self) -> usize {
        self.0.order()
    }

    fn __repr__(&self) -> String {
        format!("PermutationGroup(degree={}, order={})", self.0.degree(), self.0.order())
    }
}

#[pyclass(name = "SparseLatinSquare", module = "quasiflat_py", frozen, from_py_object)]
#[derive(Clone)]
struct PySquare(latin::SparseLatinSquare);

#[pymethods]
impl PySquare {
    /// Grid of symbols `1..=k`, with `0` for empty cells.
    #[new]
    fn new(grid: Vec<Vec<usize>>, k: usize) -> PyResult<Self> {
        latin::SparseLatinSquare::new(grid, k).map(Self).map_err(err)
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    #[getter]
    fn symbols(&self) -> usize {
        self.0.symbols()
    }

    fn grid(&self) -> Vec<Vec<usize>> {
        self.0.grid()
    }

    fn permutations(&self) -> Vec<PyPermutation> {
        latin::to_permutations(&self.0).into_iter().map(PyPermutation).collect()
    }

    fn hopf_image(&self) -> PyResult<PyGroup> {
        latin::hopf_image_group(&self.0, DEFAULT_CAP).map(PyGroup).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("SparseLatinSquare(n={}, k={})", self.0.size(), self.0.symbols())
    }
}

#[pyclass(name = "ModelFamily", module = "quasiflat_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyFamily(models::ModelFamily);

#[pymethods]
impl PyFamily {
    /// From its JSON description, e.g. `{"variant": "FreeProduct", "k": 3, "m": 2}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let f: models::ModelFamily = from_json(text)?;
        f.validate().map_err(err)?;
        Ok(Self(f))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    fn generator_count(&self) -> PyResult<usize> {
        self.0.generator_count().map_err(err)
    }

    /// Canonical form of a word like `"1:2,2:-1"`.
    fn canonical_word(&self, word: &str) -> PyResult<String> {
        let raw = parse_raw_word(word).map_err(err)?;
        canonical_word(&self.0, &raw).map(|w| w.to_string()).map_err(err)
    }

    fn sample(&self, seed: u64) -> PyResult<PyPoint> {
        models::sample_point(&self.0, seed).map(PyPoint).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ModelFamily({})", self.to_json().unwrap_or_default())
    }
}

#[pyclass(name = "ModelPoint", module = "quasiflat_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyPoint(models::ModelPoint);

#[pymethods]
impl PyPoint {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        from_json(text).map(Self)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn validate(&self, family: &PyFamily) -> PyResult<()> {
        models::validate_point(&family.0, &self.0).map_err(err)
    }
}

fn word(family: &PyFamily, w: &str) -> PyResult<models::ReducedWord> {
    canonical_word(&family.0, &parse_raw_word(w).map_err(err)?).map_err(err)
}

/// π(word) at a point, as nested lists of complex numbers.
#[pyfunction]
fn eval_word<'py>(
    py: Python<'py>,
    family: &PyFamily,
    point: &PyPoint,
    w: &str,
) -> PyResult<Vec<Vec<Bound<'py, PyComplex>>>> {
    let m = models::eval_word(&family.0, &point.0, &word(family, w)?).map_err(err)?;
    Ok((0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| PyComplex::from_doubles(py, m[(i, j)].re, m[(i, j)].im))
                .collect()
        })
        .collect())
}

/// Normalized trace of π(word) through the closed form.
#[pyfunction]
fn word_trace<'py>(py: Python<'py>, family: &PyFamily, point: &PyPoint, w: &str) -> PyResult<Bound<'py, PyComplex>> {
    let t = models::word_trace(&family.0, &point.0, &word(family, w)?).map_err(err)?;
    Ok(PyComplex::from_doubles(py, t.re, t.im))
}

/// Normalized trace computed from the matrix product.
#[pyfunction]
fn direct_trace<'py>(py: Python<'py>, family: &PyFamily, point: &PyPoint, w: &str) -> PyResult<Bound<'py, PyComplex>> {
    let m = models::eval_word(&family.0, &point.0, &word(family, w)?).map_err(err)?;
    let t = magic::normalized_trace(&m);
    Ok(PyComplex::from_doubles(py, t.re, t.im))
}

#[pyfunction]
#[pyo3(signature = (n, k))]
fn enumerate_squares(n: usize, k: usize) -> PyResult<Vec<PySquare>> {
    if k == 0 || k > n {
        return Err(PyValueError::new_err(format!("need 1 <= k <= n, got n={n}, k={k}")));
    }
    Ok(latin::enumerate(n, k).map(PySquare).collect())
}

#[pyfunction]
fn admissible_squares(n: usize, k: usize, group: &PyGroup) -> PyResult<Vec<PySquare>> {
    latin::admissible_squares(n, k, &group.0)
        .map(|v| v.into_iter().map(PySquare).collect())
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (family, w, samples=10_000, seed=st::DEFAULT_SEED))]
fn mc_trace_state<'py>(
    py: Python<'py>,
    family: &PyFamily,
    w: &str,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = analysis::mc_trace_state(&family.0, &word(family, w)?, samples, seed).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (family, max_len=4, samples=analysis::SURVIVAL_SAMPLES, tol=tol::STATISTICAL, seed=st::DEFAULT_SEED))]
fn faithfulness_scan<'py>(
    py: Python<'py>,
    family: &PyFamily,
    max_len: usize,
    samples: usize,
    tol: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| analysis::inner_faithfulness_scan(&family.0, max_len, samples, tol, seed))
        .map_err(err)?;
    to_py(py, &r)
}

/// Exact stationarity when `samples` is None, Monte Carlo otherwise.
#[pyfunction]
#[pyo3(signature = (group, k, max_degree=2, samples=None, seed=st::DEFAULT_SEED))]
fn stationarity_check<'py>(
    py: Python<'py>,
    group: &PyGroup,
    k: usize,
    max_degree: usize,
    samples: Option<usize>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let words = CoordinateWord::all_up_to(group.0.degree(), max_degree);
    let mode = match samples {
        None => analysis::StationarityMode::Exact,
        Some(samples) => analysis::StationarityMode::MonteCarlo { samples, seed },
    };
    let r = py
        .detach(|| analysis::stationarity_check_classical(&group.0, k, &words, mode))
        .map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (square, kmax=10_000, tol=tol::STATISTICAL))]
fn cesaro_check<'py>(py: Python<'py>, square: &PySquare, kmax: usize, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let r = analysis::classical_cesaro_hopf_image(&square.0, kmax, tol).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (group, subgroup, tol=tol::CONSTRUCTION))]
fn thoma_check<'py>(py: Python<'py>, group: &PyGroup, subgroup: &PyGroup, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let model = InducedModel::new(group.0.clone(), subgroup.0.clone()).map_err(err)?;
    let r = analysis::thoma_stationarity_check(&model, group.0.elements(), tol).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (k, samples=analysis::SURVIVAL_SAMPLES, tol=tol::STATISTICAL, seed=st::DEFAULT_SEED))]
fn obstruction_check<'py>(
    py: Python<'py>,
    k: usize,
    samples: usize,
    tol: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = analysis::commutation_obstruction_check(k, samples, tol, seed).map_err(err)?;
    to_py(py, &r)
}

/// All acceptance criteria, or a single one.
#[pyfunction]
#[pyo3(signature = (criterion=None, seed=st::DEFAULT_SEED, tol=None))]
fn selftest<'py>(py: Python<'py>, criterion: Option<u8>, seed: u64, tol: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = SelftestConfig { seed, tol };
    match criterion {
        Some(id) => {
            let r = py.detach(|| st::run_criterion(id, &cfg));
            to_py(py, &r)
        }
        None => {
            let r = py.detach(|| st::run(&cfg));
            to_py(py, &r)
        }
    }
}

#[pymodule]
pub fn quasiflat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyPermutation>()?;
    m.add_class::<PyGroup>()?;
    m.add_class::<PySquare>()?;
    m.add_class::<PyFamily>()?;
    m.add_class::<PyPoint>()?;
    m.add_function(wrap_pyfunction!(eval_word, m)?)?;
    m.add_function(wrap_pyfunction!(word_trace, m)?)?;
    m.add_function(wrap_pyfunction!(direct_trace, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_squares, m)?)?;
    m.add_function(wrap_pyfunction!(admissible_squares, m)?)?;
    m.add_function(wrap_pyfunction!(mc_trace_state, m)?)?;
    m.add_function(wrap_pyfunction!(faithfulness_scan, m)?)?;
    m.add_function(wrap_pyfunction!(stationarity_check, m)?)?;
    m.add_function(wrap_pyfunction!(cesaro_check, m)?)?;
    m.add_function(wrap_pyfunction!(thoma_check, m)?)?;
    m.add_function(wrap_pyfunction!(obstruction_check, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
