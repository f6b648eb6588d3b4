//! Python bindings: games, gradient bundles, update directions, descent and
//! the analysis helpers. Vectors cross the boundary as lists of floats and
//! matrices as lists of rows.

use aga_core::adjust::{self, Method, Projection, StopReason};
use aga_core::analysis::{self, Classification};
use aga_core::games::{self, PublicGoodsParams, SvoParams};
use aga_core::{EvalError, GameDefinition, Matrix};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn eval_err(e: EvalError) -> PyErr {
    PyArithmeticError::new_err(e.to_string())
}

fn core_err(e: aga_core::Error) -> PyErr {
    match e {
        aga_core::Error::Eval(e) => eval_err(e),
        other => value_err(other),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).ok_or_else(|| value_err("matrix rows must be non-empty and of equal length"))
}

/// A differentiable game: one loss per player over a shared parameter
/// vector split into per-player blocks.
#[pyclass(name = "Game", module = "aga_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGame(GameDefinition);

impl PyGame {
    fn checked(&self, w: &[f64]) -> PyResult<()> {
        self.0.check_dim(w).map_err(eval_err)
    }
}

#[pymethods]
impl PyGame {
    #[staticmethod]
    fn toy() -> Self {
        Self(games::toy_example())
    }

    #[staticmethod]
    #[pyo3(signature = (b = 1.0, c = 1.5, n = 2))]
    fn public_goods(b: f64, c: f64, n: usize) -> PyResult<Self> {
        games::public_goods(PublicGoodsParams { b, c, n })
            .map(Self)
            .map_err(core_err)
    }

    #[staticmethod]
    fn bilinear_zero_sum() -> Self {
        Self(games::bilinear_zero_sum())
    }

    /// `ℓ_i = ½ (w − t_i)ᵀ Q_i (w − t_i)`.
    #[staticmethod]
    fn quadratic(dims: Vec<usize>, qs: Vec<Vec<Vec<f64>>>, targets: Vec<Vec<f64>>) -> PyResult<Self> {
        let qs = qs.into_iter().map(matrix).collect::<PyResult<Vec<_>>>()?;
        games::quadratic_game(dims, qs, targets).map(Self).map_err(core_err)
    }

    /// Social-value-orientation shaping of `base`.
    #[staticmethod]
    fn svo(base: &PyGame, alpha: f64) -> PyResult<Self> {
        games::svo_shaped(&base.0, SvoParams { alpha })
            .map(Self)
            .map_err(core_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn n_players(&self) -> usize {
        self.0.n_players()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.dims().to_vec()
    }

    fn losses(&self, w: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.losses_at(&w).map_err(eval_err)
    }

    fn rewards(&self, w: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.rewards_at(&w).map_err(eval_err)
    }

    fn collective_loss(&self, w: Vec<f64>) -> PyResult<f64> {
        self.0.collective_loss_at(&w).map_err(eval_err)
    }

    /// Dict with `xi`, `xi_c`, `grad_hc`, `h`, `h_c`, `s` and `a`.
    fn bundle<'py>(&self, py: Python<'py>, w: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        self.checked(&w)?;
        let b = adjust::bundle(&self.0, &w).map_err(eval_err)?;
        let d = PyDict::new(py);
        d.set_item("xi", b.xi)?;
        d.set_item("xi_c", b.xi_c)?;
        d.set_item("grad_hc", b.grad_hc)?;
        d.set_item("h", b.h.to_rows())?;
        d.set_item("h_c", b.h_c.to_rows())?;
        d.set_item("s", b.s.to_rows())?;
        d.set_item("a", b.a.to_rows())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Game(name={:?}, dims={:?})", self.0.name(), self.0.dims())
    }
}

/// Update rule: method key (`simul_ind`, `simul_co`, `cga`, `sga`, `aga`,
/// `aga_no_sign`), alignment magnitude, step size and stopping rule.
#[pyclass(name = "MethodConfig", module = "aga_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMethodConfig(adjust::MethodConfig);

#[pymethods]
impl PyMethodConfig {
    #[new]
    #[pyo3(signature = (method, lam = 0.0, gamma = 0.01, max_steps = 100, epsilon = 1e-10, stop_tol = 0.0, projection = None))]
    fn new(
        method: &str,
        lam: f64,
        gamma: f64,
        max_steps: usize,
        epsilon: f64,
        stop_tol: f64,
        projection: Option<(Vec<f64>, Vec<f64>)>,
    ) -> PyResult<Self> {
        let method: Method = method.parse().map_err(value_err)?;
        let mut cfg = adjust::MethodConfig::new(method, lam, gamma, max_steps).with_stop_tol(stop_tol);
        cfg.epsilon = epsilon;
        if let Some((lo, hi)) = projection {
            cfg = cfg.with_projection(Projection { lo, hi });
        }
        cfg.validate().map_err(core_err)?;
        Ok(Self(cfg))
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.0.method.key()
    }

    #[getter]
    fn label(&self) -> &'static str {
        self.0.method.label()
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda_mag
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma
    }

    #[getter]
    fn max_steps(&self) -> usize {
        self.0.max_steps
    }

    fn __repr__(&self) -> String {
        format!(
            "MethodConfig(method={:?}, lam={}, gamma={}, max_steps={})",
            self.0.method.key(),
            self.0.lambda_mag,
            self.0.gamma,
            self.0.max_steps
        )
    }
}

/// Recorded iterates of one descent run; index `k` holds the state before
/// update `k + 1`.
#[pyclass(name = "Trajectory", module = "aga_py", frozen, get_all)]
struct PyTrajectory {
    w: Vec<Vec<f64>>,
    rewards: Vec<Vec<f64>>,
    loss_c: Vec<f64>,
    dir_norm: Vec<f64>,
    /// Signed `λ` used at each record.
    lambdas: Vec<f64>,
    /// `"converged"` or `"max_steps"`.
    stop: &'static str,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn steps(&self) -> usize {
        self.w.len() - 1
    }

    fn __len__(&self) -> usize {
        self.w.len()
    }

    fn __repr__(&self) -> String {
        format!("Trajectory(steps={}, stop={:?})", self.w.len() - 1, self.stop)
    }
}

/// `(vector, signed λ)` of the configured method at `w`.
#[pyfunction]
fn direction(game: &PyGame, w: Vec<f64>, config: &PyMethodConfig) -> PyResult<(Vec<f64>, f64)> {
    game.checked(&w)?;
    let d = adjust::direction(&game.0, &w, &config.0).map_err(eval_err)?;
    Ok((d.vector, d.lambda))
}

/// Runs `w ← project(w − γ·direction)` from `w0`.
#[pyfunction]
fn descend(py: Python<'_>, game: &PyGame, w0: Vec<f64>, config: &PyMethodConfig) -> PyResult<PyTrajectory> {
    game.checked(&w0)?;
    let t = py
        .detach(|| adjust::descend(&game.0, &w0, &config.0))
        .map_err(|e| PyArithmeticError::new_err(e.to_string()))?;
    let stop = match t.stop {
        StopReason::Converged => "converged",
        StopReason::MaxSteps => "max_steps",
    };
    let r = t.records;
    Ok(PyTrajectory {
        w: r.iter().map(|x| x.w.clone()).collect(),
        rewards: r.iter().map(|x| x.rewards.clone()).collect(),
        loss_c: r.iter().map(|x| x.loss_c).collect(),
        dir_norm: r.iter().map(|x| x.dir_norm).collect(),
        lambdas: r.iter().map(|x| x.lambda).collect(),
        stop,
    })
}

/// `(classification, residual, eigenvalues)` for `w` as a fixed point of
/// `ξ_c` (default) or `ξ`.
#[pyfunction]
#[pyo3(signature = (game, w, tol = 1e-6, use_collective = true))]
fn classify_point(
    game: &PyGame,
    w: Vec<f64>,
    tol: f64,
    use_collective: bool,
) -> PyResult<(&'static str, f64, Vec<f64>)> {
    game.checked(&w)?;
    let rep = analysis::classify_point(&game.0, &w, tol, use_collective).map_err(core_err)?;
    let name = match rep.classification {
        Classification::Stable => "stable",
        Classification::Unstable => "unstable",
        Classification::Indefinite => "indefinite",
        Classification::NotFixed => "not_fixed",
    };
    Ok((name, rep.residual, rep.eigenvalues))
}

/// Ascending eigenvalues of a symmetric matrix.
#[pyfunction]
fn sym_eigvals(m: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    analysis::sym_eigvals(&matrix(m)?).map_err(core_err)
}

#[pyfunction]
fn social_welfare(rewards: Vec<f64>) -> f64 {
    analysis::social_welfare(&rewards)
}

/// `(gini, 1 − gini)`.
#[pyfunction]
fn equality(rewards: Vec<f64>) -> PyResult<(f64, f64)> {
    analysis::equality(&rewards).map_err(value_err)
}

#[pyfunction]
fn angle(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    analysis::angle(&a, &b).map_err(core_err)
}

#[pymodule]
fn aga_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGame>()?;
    m.add_class::<PyMethodConfig>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(direction, m)?)?;
    m.add_function(wrap_pyfunction!(descend, m)?)?;
    m.add_function(wrap_pyfunction!(classify_point, m)?)?;
    m.add_function(wrap_pyfunction!(sym_eigvals, m)?)?;
    m.add_function(wrap_pyfunction!(social_welfare, m)?)?;
    m.add_function(wrap_pyfunction!(equality, m)?)?;
    m.add_function(wrap_pyfunction!(angle, m)?)?;
    m.add("METHODS", Method::ALL.map(Method::key).to_vec())?;
    Ok(())
}
