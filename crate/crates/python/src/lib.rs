//! Python bindings: data and sources, problems, the representation formula,
//! the finite-difference oracle and the decay fit.

use edes_wave_core::edes::{self, KernelParams};
use edes_wave_core::norm_lab::{self, DecayOptions, DecayQuery};
use edes_wave_core::oracle_fd::{self, Boundary, FdRunConfig};
use edes_wave_core::{
    Error, Grid, Point, ProblemSpec, QuadratureConfig, SmoothData, SourceFunction, SpatialDim,
};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::QuadratureFailure { .. }
        | Error::NonFiniteIntegrand { .. }
        | Error::BlowupDetected { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn dim(n: usize) -> PyResult<SpatialDim> {
    SpatialDim::new(n).map_err(to_py)
}

fn point(dim: SpatialDim, x: &[f64]) -> PyResult<Point> {
    dim.point(x).map_err(to_py)
}

/// A smooth spatial datum with analytic gradient and Laplacian.
#[pyclass(name = "SmoothData", module = "edes_wave", frozen, from_py_object)]
#[derive(Clone)]
struct PySmoothData {
    inner: SmoothData,
}

#[pymethods]
impl PySmoothData {
    #[staticmethod]
    fn constant(dim: usize, value: f64) -> PyResult<Self> {
        Ok(PySmoothData {
            inner: SmoothData::constant(self::dim(dim)?, value),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (slope, offset = 0.0))]
    fn affine(slope: Vec<f64>, offset: f64) -> PyResult<Self> {
        let d = self::dim(slope.len())?;
        Ok(PySmoothData {
            inner: SmoothData::affine(d, &slope, offset).map_err(to_py)?,
        })
    }

    /// `amplitude · exp(-|x - center|² / width²)`
    #[staticmethod]
    #[pyo3(signature = (center, width = 1.0, amplitude = 1.0))]
    fn gaussian(center: Vec<f64>, width: f64, amplitude: f64) -> PyResult<Self> {
        let d = self::dim(center.len())?;
        Ok(PySmoothData {
            inner: SmoothData::gaussian(d, &center, width, amplitude).map_err(to_py)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim().get()
    }

    #[getter]
    fn support_radius(&self) -> f64 {
        self.inner.support_radius()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.value(&point(self.inner.dim(), &x)?))
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let g = self.inner.gradient(&point(self.inner.dim(), &x)?);
        Ok(g[..self.inner.dim().get()].to_vec())
    }

    fn laplacian(&self, x: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.laplacian(&point(self.inner.dim(), &x)?))
    }

    fn scaled(&self, alpha: f64) -> Self {
        PySmoothData {
            inner: self.inner.scaled(alpha),
        }
    }

    fn translated(&self, shift: Vec<f64>) -> PyResult<Self> {
        Ok(PySmoothData {
            inner: self.inner.translated(&shift).map_err(to_py)?,
        })
    }

    fn __add__(&self, other: &PySmoothData) -> PyResult<Self> {
        let inner = SmoothData::linear_combination(&[(1.0, &self.inner), (1.0, &other.inner)])
            .map_err(to_py)?;
        Ok(PySmoothData { inner })
    }

    fn __mul__(&self, alpha: f64) -> Self {
        self.scaled(alpha)
    }

    fn __rmul__(&self, alpha: f64) -> Self {
        self.scaled(alpha)
    }

    fn __repr__(&self) -> String {
        format!(
            "SmoothData(dim={}, support_radius={})",
            self.dim(),
            self.support_radius()
        )
    }
}

/// A source `f(x, t)`: a sum of `c t^k S(x)` terms, optionally with a
/// `t^{-2}` or `t^{-a}` singular part.
#[pyclass(name = "SourceFunction", module = "edes_wave", frozen, from_py_object)]
#[derive(Clone)]
struct PySourceFunction {
    inner: SourceFunction,
}

#[pymethods]
impl PySourceFunction {
    #[staticmethod]
    fn constant(dim: usize, value: f64) -> PyResult<Self> {
        Ok(PySourceFunction {
            inner: SourceFunction::constant(self::dim(dim)?, value),
        })
    }

    /// `t^exponent · space(x)`
    #[staticmethod]
    #[pyo3(signature = (space, exponent = 0.0))]
    fn separable(space: &PySmoothData, exponent: f64) -> PyResult<Self> {
        Ok(PySourceFunction {
            inner: SourceFunction::separable(space.inner.clone(), exponent).map_err(to_py)?,
        })
    }

    /// `t^{-2} f0(x)`
    #[staticmethod]
    fn log_singular(f0: &PySmoothData) -> PyResult<Self> {
        Ok(PySourceFunction {
            inner: SourceFunction::log_singular(f0.inner.clone(), vec![]).map_err(to_py)?,
        })
    }

    /// `t^{-a} f0(x)` with `2 < a < 3`
    #[staticmethod]
    fn power_singular(a: f64, f0: &PySmoothData) -> PyResult<Self> {
        Ok(PySourceFunction {
            inner: SourceFunction::power_singular(a, f0.inner.clone(), vec![]).map_err(to_py)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim().get()
    }

    fn value(&self, x: Vec<f64>, t: f64) -> PyResult<f64> {
        Ok(self.inner.value(&point(self.inner.dim(), &x)?, t))
    }

    fn __repr__(&self) -> String {
        format!(
            "SourceFunction(dim={}, kind={:?})",
            self.dim(),
            self.inner.class().kind
        )
    }
}

/// Data, source and quadrature tolerances of one problem.
#[pyclass(name = "Problem", module = "edes_wave", frozen)]
struct PyProblem {
    inner: ProblemSpec,
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (dim, phi0 = None, phi1 = None, source = None, abs_tol = None, rel_tol = None))]
    fn new(
        dim: usize,
        phi0: Option<PySmoothData>,
        phi1: Option<PySmoothData>,
        source: Option<PySourceFunction>,
        abs_tol: Option<f64>,
        rel_tol: Option<f64>,
    ) -> PyResult<Self> {
        let mut spec = ProblemSpec::new(self::dim(dim)?);
        if let Some(d) = phi0 {
            spec = spec.with_phi0(d.inner);
        }
        if let Some(d) = phi1 {
            spec = spec.with_phi1(d.inner);
        }
        if let Some(f) = source {
            spec = spec.with_source(f.inner);
        }
        let q = QuadratureConfig::default();
        spec = spec.with_quad(
            q.with_tolerances(abs_tol.unwrap_or(q.abs_tol), rel_tol.unwrap_or(q.rel_tol)),
        );
        spec.validate().map_err(to_py)?;
        Ok(PyProblem { inner: spec })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim.get()
    }

    /// `ψ(x, t)` from the representation formula.
    fn solve(&self, py: Python<'_>, x: Vec<f64>, t: f64) -> PyResult<f64> {
        let x = point(self.inner.dim, &x)?;
        py.detach(|| edes::solve(&self.inner, &x, t)).map_err(to_py)
    }

    /// `ψ(·, t)` at many points.
    fn solve_many(&self, py: Python<'_>, points: Vec<Vec<f64>>, t: f64) -> PyResult<Vec<f64>> {
        let points: Vec<Point> = points
            .iter()
            .map(|p| point(self.inner.dim, p))
            .collect::<PyResult<_>>()?;
        py.detach(|| edes::solve_at_points(&self.inner, &points, t))
            .map_err(to_py)
    }

    /// `ψ(·, t)` on a centered grid of `n` points per axis, flattened with
    /// the last axis fastest.
    fn solve_on_grid(&self, py: Python<'_>, n: usize, spacing: f64, t: f64) -> PyResult<Vec<f64>> {
        let grid = Grid::centered(self.inner.dim, n, spacing).map_err(to_py)?;
        py.detach(|| edes::solve_on_grid(&self.inner, &grid, t))
            .map(|f| f.into_values())
            .map_err(to_py)
    }

    /// Leapfrog solution at `t_end` on a centered grid, started from the
    /// representation formula at `t0`.
    #[pyo3(signature = (n, spacing, t_end, t0 = 0.01, cfl = 0.5, periodic = true))]
    #[allow(clippy::too_many_arguments)]
    fn finite_difference(
        &self,
        py: Python<'_>,
        n: usize,
        spacing: f64,
        t_end: f64,
        t0: f64,
        cfl: f64,
        periodic: bool,
    ) -> PyResult<Vec<f64>> {
        let grid = Grid::centered(self.inner.dim, n, spacing).map_err(to_py)?;
        let boundary = if periodic {
            Boundary::Periodic
        } else {
            Boundary::ZeroDirichlet
        };
        let run = FdRunConfig {
            t0,
            t_end,
            cfl,
            boundary,
        };
        py.detach(|| oracle_fd::fd_edes(&self.inner, &grid, &run))
            .map(|f| f.into_values())
            .map_err(to_py)
    }

    /// Deviations from the weighted initial conditions at `x` along a
    /// decreasing time sequence, as `(value, velocity)` lists.
    fn initial_condition_deviations(
        &self,
        py: Python<'_>,
        x: Vec<f64>,
        times: Vec<f64>,
    ) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let x = point(self.inner.dim, &x)?;
        let r = py
            .detach(|| match &self.inner.source {
                Some(f)
                    if self.inner.phi0.is_none()
                        && self.inner.phi1.is_none()
                        && f.class().f0.is_some() =>
                {
                    edes::check_singular_initial_conditions(f, &x, &times, &self.inner.quad)
                }
                _ => edes::check_initial_conditions(&self.inner, &x, &times),
            })
            .map_err(to_py)?;
        Ok((r.value_deviation, r.velocity_deviation))
    }

    /// `‖(-Δ)^{-s} ψ(·, t)‖_q` at each time and the matching estimate.
    #[pyo3(signature = (p, q, s, times, spacing = 0.3))]
    fn decay<'py>(
        &self,
        py: Python<'py>,
        p: f64,
        q: f64,
        s: f64,
        times: Vec<f64>,
        spacing: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let query = DecayQuery {
            p,
            q,
            s,
            dim: self.inner.dim,
            times,
        };
        let opts = DecayOptions {
            spacing,
            ..DecayOptions::default()
        };
        let r = py
            .detach(|| norm_lab::decay_fit(&self.inner, &query, &opts))
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("times", r.times)?;
        d.set_item("norms", r.norms)?;
        d.set_item("envelope", r.envelope)?;
        d.set_item("fitted_slope", r.fitted_slope)?;
        d.set_item("predicted_exponent", r.predicted_exponent)?;
        d.set_item("bound_constant", r.bound_constant)?;
        d.set_item("refinement_change", r.refinement_change)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(dim={}, phi0={}, phi1={}, source={})",
            self.dim(),
            self.inner.phi0.is_some(),
            self.inner.phi1.is_some(),
            self.inner.source.is_some()
        )
    }
}

/// `v(x, r)` and `∂_r v(x, r)` for the flat free wave with data `(φ, 0)`.
#[pyfunction]
fn free_wave(py: Python<'_>, data: &PySmoothData, x: Vec<f64>, r: f64) -> PyResult<(f64, f64)> {
    let x = point(data.inner.dim(), &x)?;
    let s = py
        .detach(|| edes_wave_core::eval_free_wave(&data.inner, &x, r, &QuadratureConfig::default()))
        .map_err(to_py)?;
    Ok((s.v, s.dv_dr))
}

/// The kernel `E(t, x; b, y)` written in `φ(t)`, `φ(b)` and `r = |x - y|`.
#[pyfunction]
#[pyo3(signature = (phi_t, phi_b, r, gamma = -1.0))]
fn kernel(phi_t: f64, phi_b: f64, r: f64, gamma: f64) -> PyResult<f64> {
    edes::kernel_e(&KernelParams {
        gamma,
        phi_t,
        phi_b,
        r,
    })
    .map_err(to_py)
}

/// `φ(t) = 3 t^{1/3}`
#[pyfunction]
fn phi(t: f64) -> PyResult<f64> {
    edes::phi_of_t(t).map_err(to_py)
}

#[pymodule]
fn edes_wave(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySmoothData>()?;
    m.add_class::<PySourceFunction>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(free_wave, m)?)?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    Ok(())
}
