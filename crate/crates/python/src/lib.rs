//! Python bindings for the weylgas core crate.

use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use weylgas_core::correlation::{self, XSamples, YSamples};
use weylgas_core::fermi;
use weylgas_core::geometry::{self, DomainSpec, Point};
use weylgas_core::quantization;
use weylgas_core::spectral::{self, BoundaryCondition, SolveOptions};
use weylgas_core::{special, weyl};

fn py_err(e: weylgas_core::Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn bc_from(name: &str) -> PyResult<BoundaryCondition> {
    match name {
        "dirichlet" => Ok(BoundaryCondition::Dirichlet),
        "neumann" => Ok(BoundaryCondition::Neumann),
        other => Err(PyValueError::new_err(format!("unknown boundary condition {other:?}"))),
    }
}

fn point(p: &[f64]) -> PyResult<Point> {
    if p.is_empty() || p.len() > 3 {
        return Err(PyValueError::new_err("points need 1 to 3 coordinates"));
    }
    let mut out = [0.0; 3];
    out[..p.len()].copy_from_slice(p);
    Ok(out)
}

fn points(ps: Vec<Vec<f64>>) -> PyResult<Vec<Point>> {
    ps.iter().map(|p| point(p)).collect()
}

#[pyclass(name = "Domain", module = "weylgas", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDomain {
    inner: DomainSpec,
}

#[pymethods]
impl PyDomain {
    #[staticmethod]
    fn rectangle(lengths: Vec<f64>) -> PyResult<Self> {
        DomainSpec::rectangle(&lengths).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn disk(radius: f64) -> PyResult<Self> {
        DomainSpec::disk(radius).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn l_shape(outer: [f64; 2], notch: [f64; 2]) -> PyResult<Self> {
        DomainSpec::l_shape(outer, notch).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn polygon(vertices: Vec<[f64; 2]>) -> PyResult<Self> {
        DomainSpec::polygon(&vertices).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn mask(path: PathBuf, extent: [f64; 2]) -> PyResult<Self> {
        DomainSpec::mask_from_pgm(&path, extent).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    /// Radius γ of the ball with |Ω|·|B_γ| = (2π)^n.
    #[getter]
    fn gamma(&self) -> f64 {
        weyl::gamma(&self.inner)
    }

    fn contains(&self, p: Vec<f64>) -> PyResult<bool> {
        Ok(self.inner.contains(&point(&p)?))
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    fn __repr__(&self) -> String {
        format!("Domain({:?})", self.inner.kind())
    }
}

#[pyclass(name = "EigenBasis", module = "weylgas", frozen)]
struct PyEigenBasis {
    inner: spectral::EigenBasis,
}

#[pymethods]
impl PyEigenBasis {
    /// Closed-form box modes; the domain must be a rectangle.
    #[staticmethod]
    #[pyo3(signature = (domain, k, bc = "dirichlet"))]
    fn analytic(domain: &PyDomain, k: usize, bc: &str) -> PyResult<Self> {
        let lengths = domain
            .inner
            .box_lengths()
            .ok_or_else(|| PyValueError::new_err("analytic bases need a rectangle domain"))?;
        spectral::analytic_basis_box(lengths, bc_from(bc)?, k)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    /// Lowest k eigenpairs of the finite-difference Laplacian.
    #[staticmethod]
    #[pyo3(signature = (domain, resolution, k, bc = "dirichlet", tol = 1e-8, seed = 0x5eed))]
    fn grid(py: Python<'_>, domain: &PyDomain, resolution: f64, k: usize, bc: &str, tol: f64, seed: u64) -> PyResult<Self> {
        let bc = bc_from(bc)?;
        let spec = domain.inner.clone();
        py.detach(|| {
            let grid = Arc::new(geometry::build_grid(&spec, resolution)?);
            let op = spectral::assemble_laplacian(grid, bc);
            let opts = SolveOptions {
                tol,
                seed,
                ..SolveOptions::default()
            };
            spectral::solve_lowest(&op, k, opts)
        })
        .map(|inner| Self { inner })
        .map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf, domain: &PyDomain) -> PyResult<Self> {
        spectral::cache::read_basis(&path, &domain.inner)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        spectral::cache::write_basis(&path, &self.inner).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    #[getter]
    fn domain(&self) -> PyDomain {
        PyDomain {
            inner: self.inner.domain().clone(),
        }
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    /// Values of u_k (1-based) at the given points.
    fn evaluate(&self, k: usize, pts: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.evaluate(k, &points(pts)?).map_err(py_err)
    }

    fn weyl_ratio(&self, k: usize) -> PyResult<f64> {
        weyl::weyl_ratio(&self.inner, k).map_err(py_err)
    }

    fn counting(&self, lam: f64) -> PyResult<usize> {
        weyl::counting(&self.inner, lam).map_err(py_err)
    }

    fn l2_norm_squared(&self, n: usize) -> PyResult<f64> {
        correlation::l2_norm_squared(&self.inner, n).map_err(py_err)
    }

    /// Q_N(x, y) for every pair of the given x and y points, row-major in x.
    fn one_body_matrix(&self, py: Python<'_>, n: usize, x: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let xs = XSamples::from_points(points(x)?);
        let ys = YSamples::from_points(self.inner.dimension(), points(y)?);
        let field = py
            .detach(|| correlation::one_body_matrix(&self.inner, n, &xs, &ys))
            .map_err(py_err)?;
        Ok(field.values.iter().map(|v| v.re).collect())
    }

    /// Error norms of Q_N against the Bessel limit on a margin compact.
    #[pyo3(signature = (n, margin = 0.15, per_axis = 15, y_radius = 8.0, y_spacing = 0.25))]
    fn correlation_errors<'py>(
        &self,
        py: Python<'py>,
        n: usize,
        margin: f64,
        per_axis: usize,
        y_radius: f64,
        y_spacing: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let domain = self.inner.domain();
        let norms = py
            .detach(|| {
                let subset = geometry::compact_subset(domain, margin)?;
                let xs = XSamples::compact(&subset, per_axis);
                let ys = YSamples::lattice(domain.dimension(), y_radius, y_spacing);
                let q = correlation::one_body_matrix(&self.inner, n, &xs, &ys)?;
                correlation::error_norms(&q, &correlation::limit_q(domain, &ys.points), &subset)
            })
            .map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("sup", norms.sup_on_compact)?;
        d.set_item("l1", norms.l1_global)?;
        d.set_item("l2", norms.l2_global)?;
        Ok(d)
    }
}

#[pyclass(name = "Symbol", module = "weylgas", frozen)]
struct PySymbol {
    inner: quantization::Symbol,
}

#[pymethods]
impl PySymbol {
    /// One of "constant", "x-bump", "gaussian-xi", "product".
    #[staticmethod]
    fn preset(name: &str, domain: &PyDomain) -> PyResult<Self> {
        quantization::Symbol::preset(name, &domain.inner)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[staticmethod]
    fn constant(dimension: usize, value: f64) -> PyResult<Self> {
        if !(2..=3).contains(&dimension) {
            return Err(py_err(weylgas_core::Error::DimensionUnsupported(dimension)));
        }
        Ok(Self {
            inner: quantization::Symbol::constant(dimension, value),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| Self { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn value(&self, x: Vec<f64>, xi: Vec<f64>) -> PyResult<f64> {
        let n = self.inner.dimension();
        if x.len() != n || xi.len() != n {
            return Err(PyValueError::new_err(format!("x and xi need {n} coordinates")));
        }
        Ok(self.inner.value(&x, &xi))
    }

    fn phase_space_integral(&self, domain: &PyDomain) -> Complex64 {
        quantization::phase_space_integral(&self.inner, &domain.inner)
    }

    fn cesaro_direct(&self, py: Python<'_>, basis: &PyEigenBasis, n: usize) -> PyResult<Complex64> {
        py.detach(|| quantization::cesaro_average_direct(&basis.inner, &self.inner, n))
            .map_err(py_err)
    }

    fn cesaro_wigner(&self, py: Python<'_>, basis: &PyEigenBasis, n: usize) -> PyResult<Complex64> {
        py.detach(|| quantization::cesaro_average_wigner(&basis.inner, &self.inner, n))
            .map_err(py_err)
    }
}

/// Shell indices (a, b, a_tilde, b_tilde) for N particles with m spin states.
#[pyfunction]
fn shell_fill<'py>(py: Python<'py>, eigenvalues: Vec<f64>, n: usize, m: usize) -> PyResult<Bound<'py, PyDict>> {
    let s = fermi::shell_fill(&eigenvalues, n, m).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("a", s.a)?;
    d.set_item("b", s.b)?;
    d.set_item("a_tilde", s.a_tilde)?;
    d.set_item("b_tilde", s.b_tilde)?;
    Ok(d)
}

#[pyfunction]
fn lda_constant(m: usize) -> f64 {
    fermi::lda_constant(m)
}

/// Limit P^S for the 3D free gas at density rho_bar and separation r.
#[pyfunction]
fn limit_p_spin_3d(rho_bar: f64, m: usize, r: f64) -> f64 {
    fermi::limit_p_spin_3d(rho_bar, m, r)
}

#[pyfunction]
fn bessel_j(nu: f64, r: f64) -> PyResult<f64> {
    special::bessel_j(nu, r).map_err(py_err)
}

#[pyfunction]
fn gamma_fn(z: f64) -> PyResult<f64> {
    special::gamma_fn(z).map_err(py_err)
}

#[pyfunction]
fn schafheitlin(n: usize) -> f64 {
    special::schafheitlin(n)
}

#[pymodule]
fn weylgas(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_class::<PyEigenBasis>()?;
    m.add_class::<PySymbol>()?;
    m.add_function(wrap_pyfunction!(shell_fill, m)?)?;
    m.add_function(wrap_pyfunction!(lda_constant, m)?)?;
    m.add_function(wrap_pyfunction!(limit_p_spin_3d, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_fn, m)?)?;
    m.add_function(wrap_pyfunction!(schafheitlin, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
