//! Python bindings. Complex numbers map to Python `complex`; check reports come back as dicts.

use cardy_cli::commands::{self, TwistedOp};
use cardy_cli::RunConfig;
use cardy_core::brane::{
    check_additivity, check_adjoint, check_cardy, check_centrality, check_sewing, BraneLabel, ClosedSector,
};
use cardy_core::family::{
    from_potential, idempotent_frames, monodromy_indices, square_root_family, transition_permutations, Nerve,
};
use cardy_core::frobenius::AlgebraJson;
use cardy_core::scalar::{CMat, ZERO};
use cardy_core::twisted::{
    azumaya_extract, psi as psi_map, solve_iso, TwistRepresentatives, TwistedBundle, TwistedJson,
};
use cardy_core::two_vector::{DimMatrix, Equivalence};
use cardy_core::{CechNerve, FrobeniusAlgebra, Permutation, Tolerance, C64};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::path::PathBuf;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(err)?;
    py.import("json")?.call_method1("loads", (s,))
}

fn matrix(rows: &[Vec<C64>]) -> PyResult<CMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(err("matrix must be square"));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

fn nested(m: &CMat) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[pyclass(name = "Tolerance", frozen)]
struct PyTolerance(Tolerance);

#[pymethods]
impl PyTolerance {
    #[new]
    #[pyo3(signature = (eps_structural = 1e-9, eps_rank = 1e-8))]
    fn new(eps_structural: f64, eps_rank: f64) -> PyResult<Self> {
        Tolerance::new(eps_structural, eps_rank).map(PyTolerance).map_err(err)
    }

    #[getter]
    fn eps_structural(&self) -> f64 {
        self.0.eps_structural
    }

    #[getter]
    fn eps_rank(&self) -> f64 {
        self.0.eps_rank
    }

    fn __repr__(&self) -> String {
        format!(
            "Tolerance(eps_structural={:e}, eps_rank={:e})",
            self.0.eps_structural, self.0.eps_rank
        )
    }
}

fn tol(t: Option<PyRef<'_, PyTolerance>>) -> Tolerance {
    t.map(|t| t.0).unwrap_or_default()
}

#[pyclass(name = "FrobeniusAlgebra", frozen)]
struct PyAlgebra(FrobeniusAlgebra);

#[pymethods]
impl PyAlgebra {
    /// `constants[i][j][k]` is the coefficient of `e_k` in `e_i e_j`.
    #[new]
    fn new(constants: Vec<Vec<Vec<C64>>>, unit: Vec<C64>, trace: Vec<C64>) -> PyResult<Self> {
        FrobeniusAlgebra::from_nested(&constants, unit, trace)
            .map(PyAlgebra)
            .map_err(err)
    }

    /// `ℂⁿ` with trace `θ(e_i) = weights[i]`.
    #[staticmethod]
    fn diagonal(weights: Vec<C64>) -> PyResult<Self> {
        FrobeniusAlgebra::diagonal(&weights).map(PyAlgebra).map_err(err)
    }

    /// `ℂ[x]/(x² − s)` with the given trace on `1, x`.
    #[staticmethod]
    fn quadratic(s: C64, trace: (C64, C64)) -> PyResult<Self> {
        FrobeniusAlgebra::quadratic(s, [trace.0, trace.1])
            .map(PyAlgebra)
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let j: AlgebraJson = serde_json::from_str(text).map_err(err)?;
        j.to_algebra().map(PyAlgebra).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&AlgebraJson::from(&self.0)).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn unit(&self) -> Vec<C64> {
        self.0.unit().to_vec()
    }

    #[getter]
    fn trace(&self) -> Vec<C64> {
        self.0.trace().to_vec()
    }

    fn multiply(&self, x: Vec<C64>, y: Vec<C64>) -> PyResult<Vec<C64>> {
        let n = self.0.dim();
        if x.len() != n || y.len() != n {
            return Err(err(format!("vectors must have length {n}")));
        }
        Ok(self.0.multiply(&x, &y))
    }

    fn metric(&self) -> Vec<Vec<C64>> {
        nested(&self.0.metric())
    }

    #[pyo3(signature = (tol = None))]
    fn validate<'py>(&self, py: Python<'py>, tol: Option<PyRef<'_, PyTolerance>>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.validate(&self::tol(tol)))
    }

    #[pyo3(signature = (tol = None, seed = 0))]
    fn is_semisimple(&self, tol: Option<PyRef<'_, PyTolerance>>, seed: u64) -> bool {
        self.0.semisimplicity(&self::tol(tol), seed).is_semisimple()
    }

    /// `(idempotents, weights)` in canonical order.
    #[pyo3(signature = (tol = None, seed = 0))]
    fn idempotent_basis(&self, tol: Option<PyRef<'_, PyTolerance>>, seed: u64) -> PyResult<(Vec<Vec<C64>>, Vec<C64>)> {
        let b = self.0.idempotent_basis(&self::tol(tol), seed).map_err(err)?;
        Ok((b.idempotents, b.weights))
    }

    /// Same algebra in coordinates `y = P x`.
    fn conjugate(&self, p: Vec<Vec<C64>>) -> PyResult<Self> {
        self.0.conjugate(&matrix(&p)?).map(PyAlgebra).map_err(err)
    }

    fn direct_sum(&self, other: PyRef<'_, PyAlgebra>) -> Self {
        PyAlgebra(self.0.direct_sum(&other.0))
    }

    fn __repr__(&self) -> String {
        format!("FrobeniusAlgebra(dim={})", self.0.dim())
    }
}

#[pyclass(name = "BraneLabel", frozen)]
struct PyLabel(BraneLabel);

#[pymethods]
impl PyLabel {
    #[new]
    fn new(dims: Vec<usize>) -> Self {
        PyLabel(BraneLabel::new(dims))
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.dims.clone()
    }

    fn hom_dim(&self, other: PyRef<'_, PyLabel>) -> usize {
        self.0.hom_dim(&other.0)
    }

    fn direct_sum(&self, other: PyRef<'_, PyLabel>) -> PyResult<Self> {
        self.0.direct_sum(&other.0).map(PyLabel).map_err(err)
    }

    fn __eq__(&self, other: PyRef<'_, PyLabel>) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("BraneLabel({:?})", self.0.dims)
    }
}

/// Semisimple closed sector: weights `θ(e_i)` and a chosen square root of each.
#[pyclass(name = "ClosedSector", frozen)]
struct PySector(ClosedSector);

#[pymethods]
impl PySector {
    #[new]
    #[pyo3(signature = (weights, roots = None, tol = None))]
    fn new(weights: Vec<C64>, roots: Option<Vec<C64>>, tol: Option<PyRef<'_, PyTolerance>>) -> PyResult<Self> {
        ClosedSector::new(weights, roots, &self::tol(tol))
            .map(PySector)
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (algebra, tol = None, seed = 0))]
    fn from_algebra(algebra: PyRef<'_, PyAlgebra>, tol: Option<PyRef<'_, PyTolerance>>, seed: u64) -> PyResult<Self> {
        let t = self::tol(tol);
        let b = algebra.0.idempotent_basis(&t, seed).map_err(err)?;
        ClosedSector::from_basis(&b, &t).map(PySector).map_err(err)
    }

    #[getter]
    fn weights(&self) -> Vec<C64> {
        self.0.weights().to_vec()
    }

    #[getter]
    fn roots(&self) -> Vec<C64> {
        self.0.roots().to_vec()
    }

    fn generator_labels(&self) -> Vec<PyLabel> {
        self.0.generator_labels().into_iter().map(PyLabel).collect()
    }

    #[pyo3(signature = (a, b, tol = None))]
    fn check_cardy<'py>(
        &self,
        py: Python<'py>,
        a: PyRef<'_, PyLabel>,
        b: PyRef<'_, PyLabel>,
        tol: Option<PyRef<'_, PyTolerance>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &check_cardy(&self.0, &a.0, &b.0, &self::tol(tol)).map_err(err)?)
    }

    #[pyo3(signature = (a, b, tol = None, seed = 0))]
    fn check_sewing<'py>(
        &self,
        py: Python<'py>,
        a: PyRef<'_, PyLabel>,
        b: PyRef<'_, PyLabel>,
        tol: Option<PyRef<'_, PyTolerance>>,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        to_py(
            py,
            &check_sewing(&self.0, &a.0, &b.0, &self::tol(tol), seed).map_err(err)?,
        )
    }

    #[pyo3(signature = (a, b, tol = None, seed = 0))]
    fn check_centrality<'py>(
        &self,
        py: Python<'py>,
        a: PyRef<'_, PyLabel>,
        b: PyRef<'_, PyLabel>,
        tol: Option<PyRef<'_, PyTolerance>>,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        to_py(
            py,
            &check_centrality(&self.0, &a.0, &b.0, &self::tol(tol), seed).map_err(err)?,
        )
    }

    #[pyo3(signature = (a, tol = None, seed = 0))]
    fn check_adjoint<'py>(
        &self,
        py: Python<'py>,
        a: PyRef<'_, PyLabel>,
        tol: Option<PyRef<'_, PyTolerance>>,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &check_adjoint(&self.0, &a.0, &self::tol(tol), seed).map_err(err)?)
    }

    #[pyo3(signature = (a, b, c, tol = None, seed = 0))]
    fn check_additivity<'py>(
        &self,
        py: Python<'py>,
        a: PyRef<'_, PyLabel>,
        b: PyRef<'_, PyLabel>,
        c: PyRef<'_, PyLabel>,
        tol: Option<PyRef<'_, PyTolerance>>,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        to_py(
            py,
            &check_additivity(&self.0, &a.0, &b.0, &c.0, &self::tol(tol), seed).map_err(err)?,
        )
    }

    fn __repr__(&self) -> String {
        format!("ClosedSector(n={})", self.0.n())
    }
}

#[pyclass(name = "Permutation", frozen)]
struct PyPermutation(Permutation);

#[pymethods]
impl PyPermutation {
    /// `images[i]` is the image of `i` (0-based).
    #[new]
    fn new(images: Vec<usize>) -> PyResult<Self> {
        Permutation::new(images).map(PyPermutation).map_err(err)
    }

    #[getter]
    fn images(&self) -> Vec<usize> {
        self.0.images().to_vec()
    }

    fn inverse(&self) -> Self {
        PyPermutation(self.0.inverse())
    }

    /// Apply `self` first, then `next`.
    fn then(&self, next: PyRef<'_, PyPermutation>) -> Self {
        PyPermutation(self.0.then(&next.0))
    }

    fn is_identity(&self) -> bool {
        self.0.is_identity()
    }

    fn __eq__(&self, other: PyRef<'_, PyPermutation>) -> bool {
        self.0 == other.0
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Permutation({:?})", self.0.images())
    }
}

/// Non-negative integer matrix between 2-vector spaces.
#[pyclass(name = "DimMatrix", frozen)]
struct PyDimMatrix(DimMatrix);

#[pymethods]
impl PyDimMatrix {
    #[new]
    fn new(rows: Vec<Vec<u64>>) -> PyResult<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(err("rows must have equal length"));
        }
        Ok(PyDimMatrix(DimMatrix::from_rows(rows.len(), cols, &rows)))
    }

    fn rows(&self) -> Vec<Vec<u64>> {
        self.0.to_rows()
    }

    fn determinant(&self) -> Option<i128> {
        self.0.determinant()
    }

    fn compose(&self, other: PyRef<'_, PyDimMatrix>) -> PyResult<Self> {
        self.0.compose(&other.0).map(PyDimMatrix).map_err(err)
    }

    /// Certificate dict: the inverse and permutation, or the obstruction.
    fn is_equivalence<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let v = match self.0.is_equivalence() {
            Equivalence::Equivalence { inverse, permutation } => {
                serde_json::json!({"equivalence": true, "inverse": inverse.to_rows(), "permutation": permutation})
            }
            Equivalence::NotEquivalence(o) => serde_json::json!({"equivalence": false, "obstruction": o}),
        };
        to_py(py, &v)
    }

    fn __repr__(&self) -> String {
        format!("DimMatrix({:?})", self.0.to_rows())
    }
}

#[pyclass(name = "TwistedBundle", frozen)]
struct PyBundle(TwistedBundle);

#[pymethods]
impl PyBundle {
    /// Load a bundle file; `nerve_ref` is resolved relative to it.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        commands::load_bundle(&path).map(PyBundle).map_err(err)
    }

    /// Parse a bundle with an inline nerve.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let j: TwistedJson = serde_json::from_str(text).map_err(err)?;
        j.to_bundle(None).map(PyBundle).map_err(err)
    }

    /// Identity transitions over the complete nerve on `charts` charts.
    #[staticmethod]
    fn trivial(charts: usize, rank: usize) -> Self {
        PyBundle(TwistedBundle::trivial(&CechNerve::complete(charts), rank))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&TwistedJson::from_bundle(&self.0)).map_err(err)
    }

    #[getter]
    fn rank(&self) -> usize {
        self.0.rank()
    }

    /// Twist on each triangle, keyed `"i,j,k"` by chart id.
    fn twist(&self) -> std::collections::BTreeMap<String, C64> {
        TwistedJson::from_bundle(&self.0)
            .lambda
            .into_iter()
            .map(|(k, v)| (k, v.0))
            .collect()
    }

    /// Transition matrix `g_ij` between chart indices.
    fn g(&self, i: usize, j: usize) -> PyResult<Vec<Vec<C64>>> {
        if !self.0.nerve().edges().contains(&(i, j)) && !self.0.nerve().edges().contains(&(j, i)) {
            return Err(err(format!("({i}, {j}) is not an edge")));
        }
        Ok(nested(&self.0.g(i, j)))
    }

    #[pyo3(signature = (tol = None))]
    fn validate<'py>(&self, py: Python<'py>, tol: Option<PyRef<'_, PyTolerance>>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.validate(&self::tol(tol)))
    }

    fn tensor(&self, other: PyRef<'_, PyBundle>) -> PyResult<Self> {
        self.0.tensor(&other.0).map(PyBundle).map_err(err)
    }

    fn dual(&self) -> Self {
        PyBundle(self.0.dual())
    }

    fn hom(&self, other: PyRef<'_, PyBundle>) -> PyResult<Self> {
        self.0.hom(&other.0).map(PyBundle).map_err(err)
    }

    fn end(&self) -> Self {
        PyBundle(self.0.end())
    }

    #[pyo3(signature = (other, tol = None, seed = 0))]
    fn is_isomorphic(&self, other: PyRef<'_, PyBundle>, tol: Option<PyRef<'_, PyTolerance>>, seed: u64) -> bool {
        solve_iso(&self.0, &other.0, &self::tol(tol), seed).is_ok()
    }

    fn __repr__(&self) -> String {
        format!(
            "TwistedBundle(charts={}, rank={})",
            self.0.nerve().chart_count(),
            self.0.rank()
        )
    }
}

/// Ψ: untwist `bundle` by the representative carrying its twist.
#[pyfunction]
#[pyo3(signature = (bundle, reps, tol = None))]
fn psi(
    bundle: PyRef<'_, PyBundle>,
    reps: Vec<PyRef<'_, PyBundle>>,
    tol: Option<PyRef<'_, PyTolerance>>,
) -> PyResult<PyBundle> {
    let reps = TwistRepresentatives::new(reps.iter().map(|r| r.0.clone()).collect()).map_err(err)?;
    psi_map(&bundle.0, &reps, &self::tol(tol)).map(PyBundle).map_err(err)
}

/// Recover `E` from an Azumaya bundle `END(E)`; returns `(E, report)`.
#[pyfunction]
#[pyo3(signature = (algebra_bundle, tol = None, seed = 0))]
fn azumaya<'py>(
    py: Python<'py>,
    algebra_bundle: PyRef<'_, PyBundle>,
    tol: Option<PyRef<'_, PyTolerance>>,
    seed: u64,
) -> PyResult<(PyBundle, Bound<'py, PyAny>)> {
    let out = azumaya_extract(&algebra_bundle.0, &self::tol(tol), seed).map_err(err)?;
    Ok((PyBundle(out.bundle), to_py(py, &out.report)?))
}

/// Monodromy of `ℂ[x]/(x² − t)` around `turns` loops of a circle of charts about `t = 0`.
#[pyfunction]
#[pyo3(signature = (charts = 8, samples = 5, turns = 1, tol = None))]
fn square_root_monodromy(
    charts: usize,
    samples: usize,
    turns: usize,
    tol: Option<PyRef<'_, PyTolerance>>,
) -> PyResult<PyPermutation> {
    let t = self::tol(tol);
    let nerve = Nerve::circle(ZERO, 1.0, charts, samples, 2, 1).map_err(err)?;
    let f = from_potential(&square_root_family(&t), nerve, &t).map_err(err)?;
    let frames = idempotent_frames(&f, &t, 0).map_err(err)?;
    let cover = transition_permutations(&frames, f.nerve()).map_err(err)?;
    let lp: Vec<usize> = (0..charts * turns).map(|k| k % charts).collect();
    monodromy_indices(&cover, &lp).map(PyPermutation).map_err(err)
}

/// Run a CLI command on input files and return its report as a dict.
///
/// `command` is one of `algebra`, `branes`, `family`, `bdr`, `pipeline`, or
/// `twisted <op>`; `psi` takes its representatives through `reps`.
#[pyfunction]
#[pyo3(signature = (command, *paths, reps = None, seed = 0, tol = None))]
fn run<'py>(
    py: Python<'py>,
    command: &str,
    paths: Vec<PathBuf>,
    reps: Option<Vec<PathBuf>>,
    seed: u64,
    tol: Option<PyRef<'_, PyTolerance>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = RunConfig {
        tol: self::tol(tol),
        seed,
        ..RunConfig::default()
    };
    let one = |k: usize| -> PyResult<PathBuf> {
        if paths.len() != k {
            return Err(err(format!("{command} takes {k} path(s)")));
        }
        Ok(paths[0].clone())
    };
    let report = match command {
        "algebra" => commands::algebra(&one(1)?, &cfg),
        "branes" => commands::branes(&one(1)?, &cfg),
        "family" => commands::family(&one(1)?, &cfg),
        "bdr" => commands::bdr(&one(1)?, &cfg),
        "pipeline" => commands::pipeline(&one(1)?, &cfg),
        twisted => {
            let op = match twisted.strip_prefix("twisted ").unwrap_or(twisted) {
                "validate" => TwistedOp::Validate(one(1)?),
                "dual" => TwistedOp::Dual(one(1)?),
                "azumaya" => TwistedOp::Azumaya(one(1)?),
                "tensor" => TwistedOp::Tensor(one(2)?, paths[1].clone()),
                "hom" => TwistedOp::Hom(one(2)?, paths[1].clone()),
                "iso" => TwistedOp::Iso(one(2)?, paths[1].clone()),
                "psi" => TwistedOp::Psi {
                    bundle: one(1)?,
                    reps: reps.clone().ok_or_else(|| err("psi needs reps"))?,
                },
                other => return Err(err(format!("unknown command {other}"))),
            };
            commands::twisted(&op, &cfg)
        }
    }
    .map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn cardy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", cardy_cli::VERSION)?;
    m.add_class::<PyTolerance>()?;
    m.add_class::<PyAlgebra>()?;
    m.add_class::<PyLabel>()?;
    m.add_class::<PySector>()?;
    m.add_class::<PyPermutation>()?;
    m.add_class::<PyDimMatrix>()?;
    m.add_class::<PyBundle>()?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(azumaya, m)?)?;
    m.add_function(wrap_pyfunction!(square_root_monodromy, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
