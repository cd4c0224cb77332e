//! Python bindings: `import scaber`.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use psa_core::batch::{self, BatchSummary};
use psa_core::benchmarks::{self, AuditVerdict};
use psa_core::engine::{self, RunResult, SolverConfig};
use psa_core::projection::project_domain;
use psa_core::{dsl, load_problem, penalized_cost, Error, PenaltyParams, Problem, VariableDomain};

create_exception!(
    scaber,
    EvaluationError,
    PyRuntimeError,
    "Objective or constraint evaluation failed."
);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Eval(_) | Error::StepEvaluation { .. } => EvaluationError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn eval_err(e: psa_core::EvalError) -> PyErr {
    EvaluationError::new_err(e.to_string())
}

#[pyclass(name = "Problem", module = "scaber", frozen)]
struct PyProblem {
    inner: Problem,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn pressure_vessel() -> Self {
        Self {
            inner: benchmarks::pressure_vessel(),
        }
    }

    #[staticmethod]
    fn himmelblau() -> Self {
        Self {
            inner: benchmarks::himmelblau(),
        }
    }

    /// Compiles problem source text in the `.cop` format.
    #[staticmethod]
    fn from_cop(source: &str) -> PyResult<Self> {
        dsl::compile_source(source).map(|inner| Self { inner }).map_err(to_py)
    }

    /// A built-in name or a path to a `.cop` file.
    #[staticmethod]
    fn load(source: &str) -> PyResult<Self> {
        load_problem(source).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn constraint_labels(&self) -> Vec<String> {
        self.inner.constraint_labels().to_vec()
    }

    #[getter]
    fn bounds(&self) -> Vec<(f64, f64)> {
        self.inner.domains().iter().map(|d| (d.lower(), d.upper())).collect()
    }

    /// Grid steps per variable, `None` for continuous ones.
    #[getter]
    fn grid_steps(&self) -> Vec<Option<f64>> {
        self.inner
            .domains()
            .iter()
            .map(|d| match d {
                VariableDomain::Grid { step, .. } => Some(*step),
                VariableDomain::Continuous { .. } => None,
            })
            .collect()
    }

    fn objective(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.objective(&x).map_err(eval_err)
    }

    fn constraints(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.constraint_values(&x).map_err(eval_err)
    }

    #[pyo3(signature = (x, gamma = PenaltyParams::DEFAULT_GAMMA))]
    fn penalized_cost(&self, x: Vec<f64>, gamma: f64) -> PyResult<f64> {
        let params = PenaltyParams::new(gamma).map_err(to_py)?;
        penalized_cost(&self.inner, &x, &params).map_err(eval_err)
    }

    /// Nearest admissible point: grid rounding and box clamping per coordinate.
    fn project(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        project_domain(self.inner.domains(), &x).map_err(to_py)
    }

    fn is_admissible(&self, x: Vec<f64>) -> bool {
        self.inner.is_admissible(&x)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(name={:?}, dimension={}, constraints={})",
            self.inner.name(),
            self.inner.dimension(),
            self.inner.constraint_count()
        )
    }
}

#[pyclass(name = "SolverConfig", module = "scaber", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PySolverConfig {
    swarm_size: usize,
    lambda_: f64,
    max_steps: usize,
    tau_std: f64,
    gamma: f64,
    seed: u64,
}

impl PySolverConfig {
    fn core(&self) -> SolverConfig {
        SolverConfig {
            swarm_size: self.swarm_size,
            lambda: self.lambda_,
            max_steps: self.max_steps,
            tau_std: self.tau_std,
            gamma: self.gamma,
            seed: self.seed,
        }
    }
}

#[pymethods]
impl PySolverConfig {
    #[new]
    #[pyo3(signature = (swarm_size = 40, lambda_ = 0.6, max_steps = 100_000, tau_std = 0.1, gamma = 1e12, seed = 0))]
    fn new(swarm_size: usize, lambda_: f64, max_steps: usize, tau_std: f64, gamma: f64, seed: u64) -> PyResult<Self> {
        let config = Self {
            swarm_size,
            lambda_,
            max_steps,
            tau_std,
            gamma,
            seed,
        };
        config.core().validate().map_err(to_py)?;
        Ok(config)
    }

    fn __repr__(&self) -> String {
        format!(
            "SolverConfig(swarm_size={}, lambda_={}, max_steps={}, tau_std={}, gamma={:e}, seed={})",
            self.swarm_size, self.lambda_, self.max_steps, self.tau_std, self.gamma, self.seed
        )
    }
}

fn config_or_default(config: Option<PyRef<'_, PySolverConfig>>) -> SolverConfig {
    config.map_or_else(SolverConfig::default, |c| c.core())
}

#[pyclass(name = "RunResult", module = "scaber", frozen)]
struct PyRunResult {
    inner: RunResult,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn best_x(&self) -> Vec<f64> {
        self.inner.best_x.clone()
    }

    /// Penalized cost at `best_x`.
    #[getter]
    fn best_f(&self) -> f64 {
        self.inner.best_f
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn feasible(&self) -> bool {
        self.inner.feasible()
    }

    #[getter]
    fn constraint_values(&self) -> Vec<f64> {
        self.inner.constraint_report.values.clone()
    }

    #[getter]
    fn violated(&self) -> Vec<bool> {
        self.inner.constraint_report.violated.clone()
    }

    #[getter]
    fn steps_taken(&self) -> usize {
        self.inner.steps_taken
    }

    /// `(step, best_f)` pairs when the run was traced.
    #[getter]
    fn history(&self) -> Option<Vec<(usize, f64)>> {
        self.inner.history.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(best_f={}, feasible={}, steps_taken={})",
            self.inner.best_f,
            self.inner.feasible(),
            self.inner.steps_taken
        )
    }
}

#[pyclass(name = "BatchSummary", module = "scaber", frozen)]
struct PyBatchSummary {
    inner: BatchSummary,
}

#[pymethods]
impl PyBatchSummary {
    #[getter]
    fn runs(&self) -> usize {
        self.inner.runs
    }

    #[getter]
    fn feasible_runs(&self) -> usize {
        self.inner.feasible_runs
    }

    #[getter]
    fn feasibility_rate(&self) -> f64 {
        self.inner.feasibility_rate
    }

    #[getter]
    fn best(&self) -> Option<f64> {
        self.inner.best
    }

    #[getter]
    fn worst(&self) -> Option<f64> {
        self.inner.worst
    }

    #[getter]
    fn mean(&self) -> Option<f64> {
        self.inner.mean
    }

    #[getter]
    fn std(&self) -> Option<f64> {
        self.inner.std
    }

    #[getter]
    fn best_run(&self) -> Option<PyRunResult> {
        self.inner.best_run.clone().map(|inner| PyRunResult { inner })
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.inner.records.iter().map(|r| r.seed).collect()
    }

    /// Final plain objective per run, ordered by seed.
    #[getter]
    fn objectives(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.objective).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

/// Runs one solve. The GIL is released while the swarm iterates.
#[pyfunction]
#[pyo3(signature = (problem, config = None, trace = false))]
fn solve(
    py: Python<'_>,
    problem: PyRef<'_, PyProblem>,
    config: Option<PyRef<'_, PySolverConfig>>,
    trace: bool,
) -> PyResult<PyRunResult> {
    let config = config_or_default(config);
    let problem = problem.inner.clone();
    let result = py.detach(|| {
        if trace {
            engine::solve_traced(&problem, &config, |_| {})
        } else {
            engine::solve(&problem, &config)
        }
    });
    result.map(|inner| PyRunResult { inner }).map_err(to_py)
}

/// Runs seeds `base_seed .. base_seed + runs` in parallel.
#[pyfunction]
#[pyo3(signature = (problem, runs, base_seed = 0, config = None))]
fn run_batch(
    py: Python<'_>,
    problem: PyRef<'_, PyProblem>,
    runs: usize,
    base_seed: u64,
    config: Option<PyRef<'_, PySolverConfig>>,
) -> PyResult<PyBatchSummary> {
    let config = config_or_default(config);
    let problem = problem.inner.clone();
    py.detach(|| batch::run_batch(&problem, runs, base_seed, &config))
        .map(|inner| PyBatchSummary { inner })
        .map_err(to_py)
}

/// Published rows of a built-in problem's comparison table as dicts.
#[pyfunction]
fn reference_rows<'py>(py: Python<'py>, problem_name: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let rows = benchmarks::reference_rows(problem_name).map_err(to_py)?;
    rows.into_iter()
        .map(|row| {
            let d = PyDict::new(py);
            d.set_item("source", row.source)?;
            d.set_item("x", row.x)?;
            d.set_item("reported_g", row.reported_g)?;
            d.set_item("reported_f", row.reported_f)?;
            d.set_item("flagged", row.flagged_violations.into_iter().collect::<Vec<_>>())?;
            Ok(d)
        })
        .collect()
}

fn verdict_dict<'py>(py: Python<'py>, v: AuditVerdict) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("source", &v.source)?;
    d.set_item("reported_f", v.reported_f)?;
    d.set_item("recomputed_f", v.recomputed_f)?;
    d.set_item("f_error", v.f_error)?;
    d.set_item("flags_consistent", v.flags_consistent)?;
    d.set_item("clean", v.is_clean())?;
    d.set_item(
        "recomputed_g",
        v.columns.iter().map(|c| c.recomputed).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "recomputed_violations",
        v.recomputed_violations().into_iter().collect::<Vec<_>>(),
    )?;
    d.set_item("reported_sign_mismatches", v.reported_sign_mismatches)?;
    Ok(d)
}

/// Recomputes every published row of a built-in problem.
#[pyfunction]
#[pyo3(signature = (problem_name, tolerance = benchmarks::SIGN_TOLERANCE))]
fn audit<'py>(py: Python<'py>, problem_name: &str, tolerance: f64) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let problem = benchmarks::by_name(problem_name).map_err(to_py)?;
    let table = benchmarks::reference_table(problem_name).map_err(to_py)?;
    let verdicts = benchmarks::audit_table(&problem, &table, tolerance).map_err(to_py)?;
    verdicts.into_iter().map(|v| verdict_dict(py, v)).collect()
}

#[pymodule]
fn scaber(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PySolverConfig>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyBatchSummary>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    m.add_function(wrap_pyfunction!(reference_rows, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    m.add("EvaluationError", m.py().get_type::<EvaluationError>())?;
    Ok(())
}
