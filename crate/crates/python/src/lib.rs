//! Python bindings for `ratecert`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ratecert::certifier::{self, Backend, CertifyOptions};
use ratecert::linalg::{self, SymMatrix};
use ratecert::simulator::{self, Policy, QuadraticProblem};
use ratecert::{IqcKind, StepSizeInterval};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "FunctionClass", frozen)]
struct PyFunctionClass {
    inner: ratecert::FunctionClass,
}

#[pymethods]
impl PyFunctionClass {
    #[new]
    fn new(m: f64, l: f64) -> PyResult<Self> {
        ratecert::FunctionClass::new(m, l)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn from_kappa(kappa: f64) -> PyResult<Self> {
        ratecert::FunctionClass::from_kappa(kappa)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[getter]
    fn m(&self) -> f64 {
        self.inner.m()
    }

    #[getter(L)]
    fn l(&self) -> f64 {
        self.inner.l()
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    /// `[1/(c1 L), c2/L]`; with only `c` given, `c1 = c2 = c`.
    #[pyo3(signature = (c=1.0, c2=None))]
    fn interval(&self, c: f64, c2: Option<f64>) -> PyResult<(f64, f64)> {
        let iv = match c2 {
            Some(c2) => StepSizeInterval::from_c_pair(&self.inner, c, c2),
            None => StepSizeInterval::from_c(&self.inner, c),
        }
        .map_err(value_err)?;
        Ok((iv.lo(), iv.hi()))
    }

    fn __repr__(&self) -> String {
        format!("FunctionClass(m={}, L={})", self.inner.m(), self.inner.l())
    }
}

#[pyclass(name = "Certificate", frozen)]
struct PyCertificate {
    inner: certifier::Certificate,
}

#[pymethods]
impl PyCertificate {
    #[getter]
    fn rho_star(&self) -> Option<f64> {
        self.inner.rho_star
    }

    #[getter]
    fn cond_p(&self) -> Option<f64> {
        self.inner.cond_p
    }

    #[getter]
    fn lambda_(&self) -> Option<f64> {
        self.inner.witness.as_ref().map(|w| w.lambda)
    }

    #[getter]
    fn p(&self) -> Option<Vec<Vec<f64>>> {
        self.inner.witness.as_ref().map(|w| w.p.to_rows())
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid.points().to_vec()
    }

    #[getter]
    fn iqc(&self) -> String {
        self.inner.iqc.to_string()
    }

    #[getter]
    fn bisection_iters(&self) -> usize {
        self.inner.bisection_iters
    }

    fn verify(&self) -> bool {
        certifier::verify_certificate(&self.inner)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("certificates serialize")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        match self.inner.rho_star {
            Some(r) => format!("Certificate(rho_star={r:.6}, iqc={})", self.inner.iqc),
            None => format!("Certificate(rho_star=None, iqc={})", self.inner.iqc),
        }
    }
}

fn interval_of(
    fc: &ratecert::FunctionClass,
    c: f64,
    c2: Option<f64>,
) -> PyResult<StepSizeInterval> {
    match c2 {
        Some(c2) => StepSizeInterval::from_c_pair(fc, c, c2),
        None => StepSizeInterval::from_c(fc, c),
    }
    .map_err(value_err)
}

/// Smallest certified rate for step sizes in `[1/(cL), c/L]` (or `[1/(c L), c2/L]`).
#[pyfunction]
#[pyo3(signature = (fc, c=1.0, c2=None, grid=10, iqc="sector", rho_tol=1e-4, ellipsoid=false))]
#[allow(clippy::too_many_arguments)]
fn certify(
    py: Python<'_>,
    fc: &PyFunctionClass,
    c: f64,
    c2: Option<f64>,
    grid: usize,
    iqc: &str,
    rho_tol: f64,
    ellipsoid: bool,
) -> PyResult<PyCertificate> {
    let kind: IqcKind = iqc.parse().map_err(value_err)?;
    let iv = interval_of(&fc.inner, c, c2)?;
    let opts = CertifyOptions {
        rho_tol,
        backend: if ellipsoid {
            Backend::Ellipsoid
        } else {
            Backend::Auto
        },
        ..CertifyOptions::default()
    };
    let inner = py
        .detach(|| certifier::certify(&fc.inner, &iv, grid, kind, &opts))
        .map_err(value_err)?;
    Ok(PyCertificate { inner })
}

#[pyfunction]
fn closed_form_rate(alpha: f64, fc: &PyFunctionClass) -> f64 {
    certifier::closed_form_rate(alpha, &fc.inner)
}

/// Runs one trajectory and returns `(norms, bound, max_ratio, violated)`.
#[pyfunction]
#[pyo3(signature = (cert, eigenvalues, policy="uniform", steps=200, seed=0, xi0=None, c=None, c2=None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    cert: &PyCertificate,
    eigenvalues: Vec<f64>,
    policy: &str,
    steps: usize,
    seed: u64,
    xi0: Option<Vec<f64>>,
    c: Option<f64>,
    c2: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, f64, bool)> {
    let fc = &cert.inner.fc;
    let prob = QuadraticProblem::new(eigenvalues, fc).map_err(value_err)?;
    let policy: Policy = policy.parse().map_err(value_err)?;
    let iv = match c {
        Some(c) => interval_of(fc, c, c2)?,
        None => cert.inner.interval,
    };
    let xi0 = xi0.unwrap_or_else(|| vec![1.0; prob.dim()]);
    let r =
        simulator::run(&prob, &iv, policy, steps, &xi0, &cert.inner, seed).map_err(value_err)?;
    Ok((r.norms, r.bound, r.max_ratio, r.violated))
}

/// Eigenvalues (ascending) and eigenvectors (as columns) of a symmetric matrix.
#[pyfunction]
fn eig_sym(rows: Vec<Vec<f64>>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let s = SymMatrix::from_rows(&rows).map_err(value_err)?;
    let e = linalg::eig_sym(&s);
    let vectors = (0..s.order()).map(|i| e.eigenvector(i)).collect();
    Ok((e.eigenvalues, vectors))
}

#[pymodule]
fn pyratecert(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFunctionClass>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_rate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(eig_sym, m)?)?;
    Ok(())
}
