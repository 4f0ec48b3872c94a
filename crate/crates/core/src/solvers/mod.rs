//! Reference, cavity and rigid-inclusion solves on a shared mesh.
//!
//! Pure-Neumann systems are solved by pinning w at three non-collinear nodes,
//! which removes the rigid kernel, and then shifting the result by the rigid
//! triple that enforces ∫φ = 0, ∫w = 0 over the active region. The shifted field
//! is the solution of the bordered system with those three constraints; its
//! multipliers follow in closed form from the load functional on the kernel.

mod linear;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use linear::{SolverKind, SolverOptions};
pub(crate) use linear::{norm, Factor};

use crate::assembly::{assemble_load, check_compatibility, BoundaryLoad, PlateModel, SystemMatrix};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Mesh, Point2, RegionSel};

/// Rigid plate motion φ = b, w = −b·x + a.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RigidTriple {
    pub a: f64,
    pub b: [f64; 2],
}

impl RigidTriple {
    pub fn at(&self, p: Point2) -> [f64; 3] {
        [self.b[0], self.b[1], -self.b[0] * p.x - self.b[1] * p.y + self.a]
    }

    /// Nodal interpolant on every mesh node.
    pub fn interpolate(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.nodes().iter().flat_map(|&p| self.at(p)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Reference,
    Cavity,
    Rigid,
    DirichletExtension,
}

/// Which normalization a solution carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gauge", rename_all = "snake_case")]
pub enum Gauge {
    /// ∫φ = 0 and ∫w = 0 over `region`; `removed` is the triple subtracted from
    /// the pinned solve to get there.
    IntegralMeans { region: RegionSel, removed: RigidTriple },
    /// The inclusion triple is zero: every defect node has φ = 0, w = 0.
    InclusionFixed,
    /// Values on ∂D are imposed nodally.
    Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateSolution {
    pub kind: ProblemKind,
    /// Interleaved (φ₁, φ₂, w) per mesh node; zero on inactive nodes.
    pub values: Vec<f64>,
    pub active: Vec<bool>,
    pub gauge: Gauge,
    /// Relative residual of the solved system.
    pub residual: f64,
    /// Bordered-system multipliers (φ₁, φ₂, w) of the pure-Neumann solves.
    pub multipliers: Option<[f64; 3]>,
    pub iterations: usize,
}

impl PlateSolution {
    pub fn phi(&self, node: usize) -> [f64; 2] {
        [self.values[3 * node], self.values[3 * node + 1]]
    }

    pub fn w(&self, node: usize) -> f64 {
        self.values[3 * node + 2]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Adds a rigid triple on the active nodes.
    pub fn shifted(&self, mesh: &Mesh, z: &RigidTriple) -> PlateSolution {
        let mut out = self.clone();
        for (n, &p) in mesh.nodes().iter().enumerate() {
            if self.active[n] {
                let v = z.at(p);
                for k in 0..3 {
                    out.values[3 * n + k] += v[k];
                }
            }
        }
        out
    }
}

struct RegionIntegrals {
    area: f64,
    phi: [f64; 2],
    w: f64,
    x: [f64; 2],
    /// ∫ N_n over the region, per node.
    hat: Vec<f64>,
}

fn region_integrals(mesh: &Mesh, region: RegionSel, u: &[f64]) -> RegionIntegrals {
    let mut r = RegionIntegrals { area: 0.0, phi: [0.0; 2], w: 0.0, x: [0.0; 2], hat: vec![0.0; mesh.n_nodes()] };
    for t in mesh.selected_triangles(region) {
        let a = mesh.triangle_area(t);
        r.area += a;
        for &n in &mesh.triangles()[t] {
            let p = mesh.nodes()[n];
            r.hat[n] += a / 3.0;
            r.phi[0] += a / 3.0 * u[3 * n];
            r.phi[1] += a / 3.0 * u[3 * n + 1];
            r.w += a / 3.0 * u[3 * n + 2];
            r.x[0] += a / 3.0 * p.x;
            r.x[1] += a / 3.0 * p.y;
        }
    }
    r
}

/// Three well-spread active nodes; pinning w there removes the rigid kernel.
pub(crate) fn pin_nodes(mesh: &Mesh, active: &[bool]) -> Result<[usize; 3]> {
    let act: Vec<usize> = (0..mesh.n_nodes()).filter(|&n| active[n]).collect();
    let p = mesh.nodes();
    let n0 = *act.first().ok_or(Error::Disconnected)?;
    let mut n1 = n0;
    for &n in &act {
        if p[n].dist(p[n0]) > p[n1].dist(p[n0]) {
            n1 = n;
        }
    }
    let mut n2 = n0;
    let mut best = 0.0;
    for &n in &act {
        let c = (p[n1] - p[n0]).cross(p[n] - p[n0]).abs();
        if c > best {
            best = c;
            n2 = n;
        }
    }
    if best <= 1e-12 * p[n1].dist(p[n0]).powi(2) {
        return Err(Error::Disconnected);
    }
    Ok([n0, n1, n2])
}

fn check_load(mesh: &Mesh, load: &BoundaryLoad) -> Result<Vec<f64>> {
    let c = check_compatibility(mesh, load)?;
    if !c.compatible {
        return Err(Error::IncompatibleLoad { force: c.force, couple0: c.couple[0], couple1: c.couple[1] });
    }
    assemble_load(mesh, load)
}

fn solve_neumann(
    model: &PlateModel,
    load: &BoundaryLoad,
    region: RegionSel,
    kind: ProblemKind,
    opts: &SolverOptions,
) -> Result<PlateSolution> {
    let mesh = model.mesh();
    if !mesh.is_connected(region) {
        return Err(Error::Disconnected);
    }
    let f = check_load(mesh, load)?;
    let sys = model.assemble(region);
    let pins = pin_nodes(mesh, &sys.active)?;
    let free: Vec<usize> = sys.active_dofs().into_iter().filter(|&d| !pins.iter().any(|&n| d == 3 * n + 2)).collect();
    let kff = sys.matrix.submatrix(&free, &free);
    let ff: Vec<f64> = free.iter().map(|&d| f[d]).collect();
    let lin = linear::solve_spd(&kff, &ff, opts)?;

    let mut u = vec![0.0; model.n_dofs()];
    for (k, &d) in free.iter().enumerate() {
        u[d] = lin.x[k];
    }
    let ints = region_integrals(mesh, region, &u);
    let b = [ints.phi[0] / ints.area, ints.phi[1] / ints.area];
    let a = (ints.w + b[0] * ints.x[0] + b[1] * ints.x[1]) / ints.area;
    let removed = RigidTriple { a, b };
    for (n, &p) in mesh.nodes().iter().enumerate() {
        if sys.active[n] {
            let z = removed.at(p);
            for k in 0..3 {
                u[3 * n + k] -= z[k];
            }
        }
    }

    // multipliers from Zᵀ(F − Cᵀλ) = 0 on the three rigid modes
    let fz_a: f64 = (0..mesh.n_nodes()).map(|n| f[3 * n + 2]).sum();
    let fz_b = |k: usize| -> f64 {
        (0..mesh.n_nodes())
            .map(|n| {
                let p = mesh.nodes()[n];
                f[3 * n + k] - f[3 * n + 2] * if k == 0 { p.x } else { p.y }
            })
            .sum()
    };
    let lw = fz_a / ints.area;
    let lam = [(fz_b(0) + ints.x[0] * lw) / ints.area, (fz_b(1) + ints.x[1] * lw) / ints.area, lw];

    let residual = bordered_residual(&sys, &u, &f, &ints.hat, &lam);
    Ok(PlateSolution {
        kind,
        values: u,
        active: sys.active,
        gauge: Gauge::IntegralMeans { region, removed },
        residual: residual.max(lin.residual),
        multipliers: Some(lam),
        iterations: lin.iterations,
    })
}

fn bordered_residual(sys: &SystemMatrix, u: &[f64], f: &[f64], hat: &[f64], lam: &[f64; 3]) -> f64 {
    let ku = sys.matrix.mul_vec(u);
    let fnorm = norm(f);
    if fnorm == 0.0 {
        return 0.0;
    }
    let r: Vec<f64> = sys
        .active_dofs()
        .into_iter()
        .map(|d| f[d] - ku[d] - lam[d % 3] * hat[d / 3])
        .collect();
    norm(&r) / fnorm
}

/// Full-plate Neumann problem with ∫_Ω φ = 0, ∫_Ω w = 0.
pub fn solve_reference(model: &PlateModel, load: &BoundaryLoad, opts: &SolverOptions) -> Result<PlateSolution> {
    solve_neumann(model, load, RegionSel::All, ProblemKind::Reference, opts)
}

/// Neumann problem on Ω∖D̄ with a traction-free ∂D, normalized over Ω∖D̄.
pub fn solve_cavity(model: &PlateModel, load: &BoundaryLoad, opts: &SolverOptions) -> Result<PlateSolution> {
    if !model.mesh().has_defect() {
        return Err(Error::NoDefect);
    }
    solve_neumann(model, load, RegionSel::Exterior, ProblemKind::Cavity, opts)
}

/// Rigid inclusion with its triple fixed to zero: all defect nodes are clamped.
pub fn solve_rigid(model: &PlateModel, load: &BoundaryLoad, opts: &SolverOptions) -> Result<PlateSolution> {
    let mesh = model.mesh();
    if !mesh.has_defect() {
        return Err(Error::NoDefect);
    }
    let f = check_load(mesh, load)?;
    let sys = model.assemble(RegionSel::All);
    let fixed = mesh.node_mask(RegionSel::Defect);
    let free: Vec<usize> = (0..model.n_dofs()).filter(|&d| !fixed[d / 3]).collect();
    let kff = sys.matrix.submatrix(&free, &free);
    let ff: Vec<f64> = free.iter().map(|&d| f[d]).collect();
    let lin = linear::solve_spd(&kff, &ff, opts)?;
    let mut u = vec![0.0; model.n_dofs()];
    for (k, &d) in free.iter().enumerate() {
        u[d] = lin.x[k];
    }
    Ok(PlateSolution {
        kind: ProblemKind::Rigid,
        values: u,
        active: vec![true; mesh.n_nodes()],
        gauge: Gauge::InclusionFixed,
        residual: lin.residual,
        multipliers: None,
        iterations: lin.iterations,
    })
}

/// Plate equations on D with the trace of `trace_source` imposed on ∂D.
pub fn dirichlet_extension(
    model: &PlateModel,
    trace_source: &PlateSolution,
    opts: &SolverOptions,
) -> Result<PlateSolution> {
    let mesh = model.mesh();
    if !mesh.has_defect() {
        return Err(Error::NoDefect);
    }
    let sys = model.assemble(RegionSel::Defect);
    let on_gamma = mesh.boundary_node_mask(BoundaryTag::Defect);
    let mut u = vec![0.0; model.n_dofs()];
    let mut interior = Vec::new();
    for n in 0..mesh.n_nodes() {
        if !sys.active[n] {
            continue;
        }
        if on_gamma[n] {
            for k in 0..3 {
                u[3 * n + k] = trace_source.values[3 * n + k];
            }
        } else {
            interior.extend([3 * n, 3 * n + 1, 3 * n + 2]);
        }
    }
    let (mut residual, mut iterations) = (0.0, 0);
    if !interior.is_empty() {
        let ku = sys.matrix.mul_vec(&u);
        let rhs: Vec<f64> = interior.iter().map(|&d| -ku[d]).collect();
        let kii = sys.matrix.submatrix(&interior, &interior);
        let lin = linear::solve_spd(&kii, &rhs, opts)?;
        for (k, &d) in interior.iter().enumerate() {
            u[d] = lin.x[k];
        }
        residual = lin.residual;
        iterations = lin.iterations;
    }
    Ok(PlateSolution {
        kind: ProblemKind::DirichletExtension,
        values: u,
        active: sys.active,
        gauge: Gauge::Trace,
        residual,
        multipliers: None,
        iterations,
    })
}

/// Cavity fields on Ω∖D̄ joined with their extension into D.
pub fn extended_field(cavity: &PlateSolution, extension: &PlateSolution) -> Vec<f64> {
    let mut u = cavity.values.clone();
    for (n, &a) in extension.active.iter().enumerate() {
        if a && !cavity.active[n] {
            u[3 * n..3 * n + 3].copy_from_slice(&extension.values[3 * n..3 * n + 3]);
        }
    }
    u
}

/// Contact actions on ∂D recovered from the discrete equilibrium residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reactions {
    /// ∂D nodes in increasing index order.
    pub nodes: Vec<usize>,
    /// g = F − K u at each node: (moment₁, moment₂, force) integrated against the hats.
    pub nodal: Vec<[f64; 3]>,
    /// Piecewise-linear traction with M_Γ t = g, per node.
    pub traction: Vec<[f64; 3]>,
    /// Σ |g| over all nodes and components.
    pub scale: f64,
    /// Σ |F| over the load vector, the matching scale of the applied load.
    pub load_scale: f64,
}

impl Reactions {
    /// Σ g_w, the net transverse force.
    pub fn force_resultant(&self) -> f64 {
        self.nodal.iter().map(|g| g[2]).sum()
    }

    /// Σ (g_φ − g_w x), the net couple.
    pub fn couple_resultant(&self, mesh: &Mesh) -> [f64; 2] {
        let mut c = [0.0; 2];
        for (&n, g) in self.nodes.iter().zip(&self.nodal) {
            let p = mesh.nodes()[n];
            c[0] += g[0] - g[2] * p.x;
            c[1] += g[1] - g[2] * p.y;
        }
        c
    }

    /// Exact ∫_∂D t·(φ, w) for a P1 field `u` given on all nodes.
    pub fn pair(&self, mesh: &Mesh, u: &[f64]) -> f64 {
        let idx = self.index(mesh);
        let mut s = 0.0;
        for e in mesh.edges_tagged(BoundaryTag::Defect) {
            let [a, b] = e.nodes;
            let len = mesh.nodes()[a].dist(mesh.nodes()[b]);
            let (ta, tb) = (self.traction[idx[a]], self.traction[idx[b]]);
            for k in 0..3 {
                let (ua, ub) = (u[3 * a + k], u[3 * b + k]);
                s += len * (2.0 * ta[k] * ua + ta[k] * ub + tb[k] * ua + 2.0 * tb[k] * ub) / 6.0;
            }
        }
        s
    }

    /// ∫_∂D |t_φ|² + ρ₀²|t_w|².
    pub fn traction_norm_sq(&self, mesh: &Mesh, rho0: f64) -> f64 {
        let idx = self.index(mesh);
        let mut s = 0.0;
        for e in mesh.edges_tagged(BoundaryTag::Defect) {
            let [a, b] = e.nodes;
            let len = mesh.nodes()[a].dist(mesh.nodes()[b]);
            let (ta, tb) = (self.traction[idx[a]], self.traction[idx[b]]);
            for k in 0..3 {
                let wgt = if k == 2 { rho0 * rho0 } else { 1.0 };
                s += wgt * len * (ta[k] * ta[k] + ta[k] * tb[k] + tb[k] * tb[k]) / 3.0;
            }
        }
        s
    }

    fn index(&self, mesh: &Mesh) -> Vec<usize> {
        let mut idx = vec![usize::MAX; mesh.n_nodes()];
        for (k, &n) in self.nodes.iter().enumerate() {
            idx[n] = k;
        }
        idx
    }
}

/// Consistent reactions on ∂D for a cavity or rigid solution.
pub fn boundary_reactions(model: &PlateModel, solution: &PlateSolution, load: &BoundaryLoad) -> Result<Reactions> {
    let mesh = model.mesh();
    if !mesh.has_defect() {
        return Err(Error::NoDefect);
    }
    let region = match solution.kind {
        ProblemKind::Rigid => RegionSel::All,
        ProblemKind::Cavity => RegionSel::Exterior,
        k => return Err(Error::Domain(format!("reactions need a cavity or rigid solution, got {k:?}"))),
    };
    let f = assemble_load(mesh, load)?;
    let ku = model.assemble(region).matrix.mul_vec(&solution.values);
    let mask = mesh.boundary_node_mask(BoundaryTag::Defect);
    let nodes: Vec<usize> = (0..mesh.n_nodes()).filter(|&n| mask[n]).collect();
    let nodal: Vec<[f64; 3]> = nodes.iter().map(|&n| std::array::from_fn(|k| f[3 * n + k] - ku[3 * n + k])).collect();

    let mut idx = vec![usize::MAX; mesh.n_nodes()];
    for (k, &n) in nodes.iter().enumerate() {
        idx[n] = k;
    }
    let m = nodes.len();
    let mut mass = DMatrix::<f64>::zeros(m, m);
    for e in mesh.edges_tagged(BoundaryTag::Defect) {
        let [a, b] = e.nodes;
        let len = mesh.nodes()[a].dist(mesh.nodes()[b]);
        let (i, j) = (idx[a], idx[b]);
        mass[(i, i)] += len / 3.0;
        mass[(j, j)] += len / 3.0;
        mass[(i, j)] += len / 6.0;
        mass[(j, i)] += len / 6.0;
    }
    let chol = mass.cholesky().ok_or_else(|| Error::Factorization("boundary mass matrix".into()))?;
    let mut traction = vec![[0.0; 3]; m];
    for k in 0..3 {
        let g = DVector::from_iterator(m, nodal.iter().map(|v| v[k]));
        let t = chol.solve(&g);
        for i in 0..m {
            traction[i][k] = t[i];
        }
    }
    let scale = nodal.iter().flatten().map(|v| v.abs()).sum();
    let load_scale = f.iter().map(|v| v.abs()).sum();
    Ok(Reactions { nodes, nodal, traction, scale, load_scale })
}
