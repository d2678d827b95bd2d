//! Python bindings for the main solver types and operations: surface
//! energies with their derivatives and Wulff shapes, the manufactured
//! solution and its forcing, EOC helpers and the config-driven drivers.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use willmore::anisotropy::{GradientVec, SurfaceEnergy as CoreEnergy};
use willmore::config::RunConfig;
use willmore::error::Error;
use willmore::grid::{Grid as CoreGrid, GridFunction};
use willmore::mms::{self, ZetaParams as CoreZeta};

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::Config(_) | Error::Contract(_) => PyValueError::new_err(err.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Rectangular node lattice over `[x_min, x_max] x [y_min, y_max]`.
#[pyclass(name = "Grid", skip_from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: CoreGrid,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, n1: usize, n2: usize) -> PyResult<Self> {
        Ok(PyGrid {
            inner: CoreGrid::from_bounds(x_min, x_max, y_min, y_max, n1, n2).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn n1(&self) -> usize {
        self.inner.n1()
    }

    #[getter]
    fn n2(&self) -> usize {
        self.inner.n2()
    }

    #[getter]
    fn h1(&self) -> f64 {
        self.inner.h1()
    }

    #[getter]
    fn h2(&self) -> f64 {
        self.inner.h2()
    }

    fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (self.inner.x(i), self.inner.y(j))
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid({}x{} cells, h = ({:.6}, {:.6}))",
            self.inner.n1(),
            self.inner.n2(),
            self.inner.h1(),
            self.inner.h2()
        )
    }
}

/// Anisotropic surface energy density `gamma(p1, p2, -1)`.
#[pyclass(name = "SurfaceEnergy", skip_from_py_object)]
#[derive(Clone)]
struct PySurfaceEnergy {
    inner: CoreEnergy,
}

#[pymethods]
impl PySurfaceEnergy {
    #[staticmethod]
    fn isotropic() -> Self {
        PySurfaceEnergy {
            inner: CoreEnergy::isotropic(),
        }
    }

    #[staticmethod]
    fn quadratic_form(g11: f64, g12: f64, g22: f64) -> PyResult<Self> {
        Ok(PySurfaceEnergy {
            inner: CoreEnergy::quadratic_form(g11, g12, g22).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn regularized_abs(eps_abs: f64) -> PyResult<Self> {
        Ok(PySurfaceEnergy {
            inner: CoreEnergy::regularized_abs(eps_abs).map_err(to_py_err)?,
        })
    }

    fn gamma(&self, p1: f64, p2: f64) -> f64 {
        self.inner.gamma(GradientVec::new(p1, p2))
    }

    /// 1-homogeneous evaluation on a full 3-vector.
    fn gamma_full(&self, p1: f64, p2: f64, p3: f64) -> f64 {
        self.inner.gamma_full([p1, p2, p3])
    }

    fn grad(&self, p1: f64, p2: f64) -> (f64, f64) {
        self.inner.grad_p(GradientVec::new(p1, p2))
    }

    /// Hessian rows as ((e11, e12), (e21, e22)).
    fn hessian(&self, p1: f64, p2: f64) -> ((f64, f64), (f64, f64)) {
        let h = self.inner.hessian(GradientVec::new(p1, p2));
        ((h.e11, h.e12), (h.e21, h.e22))
    }

    /// Wulff shape cross-section as a list of (x, y) points ordered by angle.
    fn wulff_boundary(&self, n_samples: usize) -> PyResult<Vec<(f64, f64)>> {
        self.inner.wulff_boundary(n_samples).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("SurfaceEnergy({:?})", self.inner)
    }
}

/// Manufactured solution parameters on `[-r, r]^2`.
#[pyclass(name = "ZetaParams", skip_from_py_object)]
#[derive(Clone)]
struct PyZetaParams {
    inner: CoreZeta,
}

#[pymethods]
impl PyZetaParams {
    #[new]
    #[pyo3(signature = (r = 4.0, n = 2, sigma = 1.0))]
    fn new(r: f64, n: u32, sigma: f64) -> PyResult<Self> {
        Ok(PyZetaParams {
            inner: CoreZeta::new(r, n, sigma).map_err(to_py_err)?,
        })
    }

    fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        mms::zeta(&self.inner, x, y, t)
    }

    fn dt(&self, x: f64, y: f64, t: f64) -> f64 {
        mms::zeta_dt(&self.inner, x, y, t)
    }

    fn w(&self, energy: &PySurfaceEnergy, x: f64, y: f64, t: f64) -> f64 {
        mms::w_of_zeta(&energy.inner, &self.inner, x, y, t)
    }

    /// Forcing term of the forced flow, differencing step `delta`.
    fn forcing(&self, energy: &PySurfaceEnergy, x: f64, y: f64, t: f64, delta: f64) -> f64 {
        mms::forcing(&energy.inner, &self.inner, x, y, t, delta)
    }
}

/// Experimental order of convergence `log(err1/err2) / log(h1/h2)`.
#[pyfunction]
fn eoc(err1: f64, err2: f64, h1: f64, h2: f64) -> PyResult<f64> {
    mms::eoc(err1, err2, h1, h2).map_err(to_py_err)
}

/// Sample a function on the grid and evaluate the discrete Willmore energy.
#[pyfunction]
fn willmore_energy_of(grid: &PyGrid, energy: &PySurfaceEnergy, values: Vec<f64>) -> PyResult<f64> {
    let u = GridFunction::from_values(grid.inner, values).map_err(to_py_err)?;
    willmore::energy::willmore_energy(&u, &energy.inner).map_err(to_py_err)
}

/// Run the `evolve` driver on a config file; returns the number of
/// accepted steps.
#[pyfunction]
fn run_evolve(config_path: PathBuf) -> PyResult<usize> {
    let cfg = RunConfig::from_path(&config_path).map_err(to_py_err)?;
    let report = willmore::run::run_evolve(&cfg).map_err(to_py_err)?;
    Ok(report.steps_accepted)
}

/// Run the `eoc` driver on a config file; returns rows of
/// `(mesh, h, err_l1, eoc_l1)` for the height function, with NaN where no
/// value exists.
#[pyfunction]
fn run_eoc(config_path: PathBuf) -> PyResult<Vec<(usize, f64, f64, f64)>> {
    let cfg = RunConfig::from_path(&config_path).map_err(to_py_err)?;
    let report = willmore::run::run_eoc(&cfg).map_err(to_py_err)?;
    Ok(report
        .rows_u
        .iter()
        .map(|r| {
            (
                r.mesh,
                r.h,
                r.errors.map(|e| e.err_l1).unwrap_or(f64::NAN),
                r.eoc_l1.unwrap_or(f64::NAN),
            )
        })
        .collect())
}

/// Run the `wulff` driver on a config file; returns the CSV path.
#[pyfunction]
fn run_wulff(config_path: PathBuf) -> PyResult<PathBuf> {
    let cfg = RunConfig::from_path(&config_path).map_err(to_py_err)?;
    willmore::run::run_wulff(&cfg).map_err(to_py_err)
}

#[pymodule]
fn willmore_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PySurfaceEnergy>()?;
    m.add_class::<PyZetaParams>()?;
    m.add_function(wrap_pyfunction!(eoc, m)?)?;
    m.add_function(wrap_pyfunction!(willmore_energy_of, m)?)?;
    m.add_function(wrap_pyfunction!(run_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(run_eoc, m)?)?;
    m.add_function(wrap_pyfunction!(run_wulff, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
