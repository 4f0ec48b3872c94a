//! Python bindings. Structured inputs (domains, defects, load presets) are plain
//! dicts with the same keys as the TOML configs; structured outputs are dicts.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use mindlin_size::assembly::{preset_load, BoundaryLoad, LoadPreset, PlateModel, ShearRule};
use mindlin_size::estimates::{self, CalibrationPoint};
use mindlin_size::geometry::{self, BoundaryTag, DefectShape, DomainSpec, RegionSel};
use mindlin_size::material::PlateMaterial;
use mindlin_size::pipeline::{self, ExperimentConfig, Stage};
use mindlin_size::solvers::{self, ProblemKind, SolverOptions};
use mindlin_size::verify::{estimate_inequality_constant, ConstantName};
use mindlin_size::works::{work_report, GapReport};

create_exception!(mindlin_size_py, MindlinError, PyException);

fn err(e: mindlin_size::Error) -> PyErr {
    MindlinError::new_err(e.to_string())
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn named<T: DeserializeOwned>(name: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(name.into())).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn region(name: &str) -> PyResult<RegionSel> {
    match name {
        "all" => Ok(RegionSel::All),
        "exterior" => Ok(RegionSel::Exterior),
        "defect" => Ok(RegionSel::Defect),
        _ => Err(PyValueError::new_err(format!("unknown region {name:?}"))),
    }
}

#[pyclass(name = "Mesh", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: geometry::Mesh,
}

#[pymethods]
impl PyMesh {
    /// Meshes `domain` (and the optional `defect`) with target edge length `target_h`.
    #[staticmethod]
    #[pyo3(signature = (domain, target_h, defect=None))]
    fn build(domain: &Bound<'_, PyAny>, target_h: f64, defect: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let domain: DomainSpec = from_py(domain)?;
        let defect: Option<DefectShape> = defect.map(from_py).transpose()?;
        let inner = geometry::build_plate_mesh(&domain, defect.as_ref(), target_h).map_err(err)?;
        Ok(PyMesh { inner })
    }

    #[staticmethod]
    fn unit_square(target_h: f64) -> PyResult<Self> {
        let inner = geometry::build_plate_mesh(&DomainSpec::unit_square(), None, target_h).map_err(err)?;
        Ok(PyMesh { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyMesh { inner: geometry::import_mesh(text).map_err(err)? })
    }

    fn to_text(&self) -> String {
        geometry::export_mesh(&self.inner)
    }

    fn refine(&self) -> Self {
        PyMesh { inner: self.inner.refine() }
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn n_triangles(&self) -> usize {
        self.inner.n_triangles()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.characteristic_size()
    }

    #[getter]
    fn has_defect(&self) -> bool {
        self.inner.has_defect()
    }

    #[getter]
    fn nodes(&self) -> Vec<(f64, f64)> {
        self.inner.nodes().iter().map(|p| (p.x, p.y)).collect()
    }

    #[getter]
    fn triangles(&self) -> Vec<[usize; 3]> {
        self.inner.triangles().to_vec()
    }

    /// Area of "all", "exterior" or "defect".
    #[pyo3(signature = (which="all"))]
    fn area(&self, which: &str) -> PyResult<f64> {
        Ok(self.inner.area(region(which)?))
    }

    fn defect_perimeter(&self) -> f64 {
        self.inner.boundary_length(BoundaryTag::Defect)
    }

    fn __repr__(&self) -> String {
        format!("Mesh(nodes={}, triangles={}, h={:.4})", self.inner.n_nodes(), self.inner.n_triangles(), self.h())
    }
}

#[pyclass(name = "Load", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLoad {
    inner: BoundaryLoad,
}

#[pymethods]
impl PyLoad {
    fn scaled(&self, s: f64) -> Self {
        PyLoad { inner: self.inner.scaled(s) }
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.edges.len()
    }
}

#[pyclass(name = "Solution", frozen)]
struct PySolution {
    inner: solvers::PlateSolution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.inner.kind).to_lowercase()
    }

    /// Interleaved (φ₁, φ₂, w) per node.
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    fn w(&self, node: usize) -> PyResult<f64> {
        self.check(node)?;
        Ok(self.inner.w(node))
    }

    fn phi(&self, node: usize) -> PyResult<(f64, f64)> {
        self.check(node)?;
        let p = self.inner.phi(node);
        Ok((p[0], p[1]))
    }
}

impl PySolution {
    fn check(&self, node: usize) -> PyResult<()> {
        if node < self.inner.active.len() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("node {node} out of range")))
        }
    }
}

/// A mesh with uniform Lamé parameters and plate thickness.
#[pyclass(name = "Plate", frozen)]
struct PyPlate {
    inner: PlateModel,
}

#[pymethods]
impl PyPlate {
    #[new]
    #[pyo3(signature = (mesh, lam, mu, h, shear_rule="reduced"))]
    fn new(mesh: &PyMesh, lam: f64, mu: f64, h: f64, shear_rule: &str) -> PyResult<Self> {
        let rule: ShearRule = named(shear_rule)?;
        let inner = PlateModel::new(mesh.inner.clone(), PlateMaterial::uniform(lam, mu, h), rule).map_err(err)?;
        Ok(PyPlate { inner })
    }

    #[getter]
    fn mesh(&self) -> PyMesh {
        PyMesh { inner: self.inner.mesh().clone() }
    }

    /// Boundary load from a preset dict such as {"preset": "twist", "kappa": 1.0}.
    fn load(&self, preset: &Bound<'_, PyAny>) -> PyResult<PyLoad> {
        let preset: LoadPreset = from_py(preset)?;
        let inner = preset_load(self.inner.mesh(), self.inner.material(), preset).map_err(err)?;
        Ok(PyLoad { inner })
    }

    /// Solves the "reference", "cavity" or "rigid" problem.
    #[pyo3(signature = (kind, load, solver=None))]
    fn solve(&self, kind: &str, load: &PyLoad, solver: Option<&Bound<'_, PyAny>>) -> PyResult<PySolution> {
        let opts: SolverOptions = solver.map(from_py).transpose()?.unwrap_or_default();
        let inner = match named::<ProblemKind>(kind)? {
            ProblemKind::Reference => solvers::solve_reference(&self.inner, &load.inner, &opts),
            ProblemKind::Cavity => solvers::solve_cavity(&self.inner, &load.inner, &opts),
            ProblemKind::Rigid => solvers::solve_rigid(&self.inner, &load.inner, &opts),
            k => return Err(PyValueError::new_err(format!("cannot solve {k:?} directly"))),
        }
        .map_err(err)?;
        Ok(PySolution { inner })
    }

    /// Boundary work, energy work and their relative gap.
    fn works<'py>(&self, py: Python<'py>, solution: &PySolution, load: &PyLoad) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &work_report(&self.inner, &solution.inner, &load.inner).map_err(err)?)
    }

    /// Normalized work gap between a reference and a defected solve of the same load.
    fn gap<'py>(&self, py: Python<'py>, reference: &PySolution, defected: &PySolution) -> PyResult<Bound<'py, PyAny>> {
        let region = if defected.inner.kind == ProblemKind::Cavity { RegionSel::Exterior } else { RegionSel::All };
        let w0 = self.inner.energy(RegionSel::All, &reference.inner.values);
        let wd = self.inner.energy(region, &defected.inner.values);
        to_py(py, &GapReport::new(defected.inner.kind, w0, wd).map_err(err)?)
    }
}

#[pyfunction]
fn psi(t: f64) -> PyResult<f64> {
    estimates::psi(t).map_err(err)
}

#[pyfunction]
fn phi(t: f64) -> PyResult<f64> {
    estimates::phi(t).map_err(err)
}

/// Family constants (K̂, k̂) from (area, t) pairs of one kind.
#[pyfunction]
fn calibrate(kind: &str, points: Vec<(f64, f64)>, rho0: f64) -> PyResult<(f64, f64)> {
    let kind: ProblemKind = named(kind)?;
    let pts: Vec<CalibrationPoint> = points.into_iter().map(|(area, t)| CalibrationPoint { area, t, kind }).collect();
    let c = estimates::calibrate(&pts, rho0).map_err(err)?;
    Ok((c.upper, c.lower))
}

/// (lower, upper) bounds on the defect area for gap `t`.
#[pyfunction]
fn size_bounds(kind: &str, t: f64, k_upper: f64, k_lower: f64, rho0: f64) -> PyResult<(f64, f64)> {
    let kind: ProblemKind = named(kind)?;
    let lower = estimates::lower_bound(t, k_lower, rho0, kind).map_err(err)?;
    Ok((lower, estimates::upper_bound(t, k_upper, rho0)))
}

#[pyfunction]
fn frequency(mesh: &PyMesh, load: &PyLoad, rho0: f64) -> PyResult<f64> {
    Ok(estimates::frequency(&mesh.inner, &load.inner, rho0).map_err(err)?.f)
}

/// Discrete constant "Poincare_C1", "Poincare_C2", "TracePoincare_C3", "Korn2" or "GeneralizedKorn".
#[pyfunction]
#[pyo3(signature = (name, mesh, rho=1.0, shear_rule="reduced"))]
fn inequality_constant(name: &str, mesh: &PyMesh, rho: f64, shear_rule: &str) -> PyResult<f64> {
    let name: ConstantName = named(name)?;
    let rule: ShearRule = named(shear_rule)?;
    Ok(estimate_inequality_constant(name, &mesh.inner, rho, rule, 0).map_err(err)?.value)
}

/// Runs a TOML experiment config up to `stage` and returns the manifest.
#[pyfunction]
#[pyo3(signature = (config, out, stage="verify"))]
fn run_config<'py>(py: Python<'py>, config: PathBuf, out: PathBuf, stage: &str) -> PyResult<Bound<'py, PyAny>> {
    let stage: Stage = named(stage)?;
    let cfg = ExperimentConfig::load(&config).map_err(err)?;
    cfg.validate().map_err(err)?;
    let manifest = py.detach(|| pipeline::execute(&cfg, &out, stage)).map_err(err)?;
    to_py(py, &manifest)
}

#[pymodule]
fn mindlin_size_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MindlinError", m.py().get_type::<MindlinError>())?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyLoad>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyPlate>()?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(size_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(frequency, m)?)?;
    m.add_function(wrap_pyfunction!(inequality_constant, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
