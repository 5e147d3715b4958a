//! P1 finite element assembly.

use crate::error::AssemblyError;
use crate::mesh::{BoundaryLabel, Mesh, Point, RefinementLink};
use crate::problem::ProblemSpec;
use crate::quadrature::{integrate_edge, TriangleRule, EDGE_GAUSS3};
use crate::sparse::CsrMatrix;
use std::fmt::Write as _;

const NONE: u32 = u32::MAX;

/// Nodal values of a P1 function on a specific mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteFunction {
    pub mesh_id: u64,
    pub values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn zeros(mesh: &Mesh) -> Self {
        DiscreteFunction {
            mesh_id: mesh.id(),
            values: vec![0.0; mesh.num_vertices()],
        }
    }

    pub fn interpolate(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Self {
        DiscreteFunction {
            mesh_id: mesh.id(),
            values: mesh.vertices().iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<(), AssemblyError> {
        if self.mesh_id != mesh.id() || self.values.len() != mesh.num_vertices() {
            return Err(AssemblyError::MeshMismatch(format!(
                "function belongs to mesh {:016x} with {} values, mesh is {:016x} with {} vertices",
                self.mesh_id,
                self.values.len(),
                mesh.id(),
                mesh.num_vertices()
            )));
        }
        Ok(())
    }

    /// The same function on a refinement of its mesh: new vertices are edge
    /// midpoints, so their values are endpoint averages.
    pub fn prolong(&self, fine: &Mesh) -> Result<DiscreteFunction, AssemblyError> {
        let link: &RefinementLink = fine
            .link()
            .filter(|l| l.predecessor == self.mesh_id)
            .ok_or_else(|| AssemblyError::MeshMismatch("target mesh is not a refinement of this function's mesh".into()))?;
        let mut values = self.values.clone();
        values.reserve(link.vertex_parents.len());
        for &[a, b] in &link.vertex_parents {
            values.push(0.5 * (self.values[a as usize] + self.values[b as usize]));
        }
        Ok(DiscreteFunction {
            mesh_id: fine.id(),
            values,
        })
    }

    pub fn gradient(&self, mesh: &Mesh, t: usize) -> [f64; 2] {
        let (g, _) = shape_gradients(mesh, t);
        let tri = mesh.triangles()[t];
        let mut out = [0.0; 2];
        for i in 0..3 {
            let u = self.values[tri[i] as usize];
            out[0] += u * g[i][0];
            out[1] += u * g[i][1];
        }
        out
    }

    pub fn eval_barycentric(&self, mesh: &Mesh, t: usize, l: [f64; 3]) -> f64 {
        let tri = mesh.triangles()[t];
        (0..3).map(|i| l[i] * self.values[tri[i] as usize]).sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("afem-function v1\nmesh {:016x}\n{}\n", self.mesh_id, self.values.len());
        for v in &self.values {
            let _ = writeln!(s, "{v:?}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some("afem-function v1") {
            return Err("missing `afem-function v1` header".into());
        }
        let id = lines
            .next()
            .and_then(|l| l.strip_prefix("mesh "))
            .and_then(|h| u64::from_str_radix(h, 16).ok())
            .ok_or("missing `mesh <id>` line")?;
        let n: usize = lines
            .next()
            .and_then(|l| l.parse().ok())
            .ok_or("missing value count")?;
        let values: Vec<f64> = lines
            .map(|l| l.parse::<f64>().map_err(|e| format!("bad value `{l}`: {e}")))
            .collect::<Result<_, _>>()?;
        if values.len() != n {
            return Err(format!("expected {n} values, found {}", values.len()));
        }
        Ok(DiscreteFunction { mesh_id: id, values })
    }
}

/// Gradients of the barycentric coordinates of triangle `t` and its area.
pub fn shape_gradients(mesh: &Mesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let p = mesh.coords(t);
    let area = mesh.area(t);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        g[i] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
    }
    (g, area)
}

/// Outward unit normal of the edge from `a` to `b` of a counter-clockwise
/// triangle.
pub fn outward_normal(a: Point, b: Point) -> [f64; 2] {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    [dy / len, -dx / len]
}

/// Reduced system on the free (non-Dirichlet) vertices.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Vertex of each unknown.
    pub free: Vec<u32>,
    /// Unknown of each vertex, `u32::MAX` on Dirichlet vertices.
    pub dof_of_vertex: Vec<u32>,
    /// Discrete Dirichlet data at Dirichlet vertices, zero elsewhere.
    pub lifting: Vec<f64>,
    pub symmetric: bool,
    pub mesh_id: u64,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Adds the lifting to the free-node vector `x`.
    pub fn expand(&self, x: &[f64]) -> DiscreteFunction {
        let mut values = self.lifting.clone();
        for (k, &v) in self.free.iter().enumerate() {
            values[v as usize] = x[k];
        }
        DiscreteFunction {
            mesh_id: self.mesh_id,
            values,
        }
    }

    pub fn restrict(&self, u: &DiscreteFunction) -> Vec<f64> {
        self.free.iter().map(|&v| u.values[v as usize]).collect()
    }
}

/// Per-element scalar diffusion for the Picard linearization of
/// `α(|∇u|²)∇u` at `u`.
pub fn frozen_coefficients(mesh: &Mesh, problem: &ProblemSpec, u: &DiscreteFunction) -> Option<Vec<f64>> {
    let nl = problem.nonlinearity.as_ref()?;
    Some(
        (0..mesh.num_triangles())
            .map(|t| {
                let g = u.gradient(mesh, t);
                (nl.alpha)(g[0] * g[0] + g[1] * g[1])
            })
            .collect(),
    )
}

/// Assembles the discrete problem. Nonlinear problems are linearized by
/// freezing `α(|∇u|²)` at `linearization`.
pub fn assemble(
    mesh: &Mesh,
    problem: &ProblemSpec,
    linearization: Option<&DiscreteFunction>,
) -> Result<LinearSystem, AssemblyError> {
    let kappa = match (&problem.nonlinearity, linearization) {
        (Some(_), None) => return Err(AssemblyError::MissingLinearization),
        (Some(_), Some(u)) => {
            u.check_mesh(mesh)?;
            frozen_coefficients(mesh, problem, u)
        }
        (None, _) => None,
    };
    let full = assemble_operator(mesh, problem, kappa.as_deref(), true)?;
    let load = assemble_load(mesh, problem);
    let lifting = scott_zhang_trace(mesh, problem)?;
    let is_dirichlet = mesh.vertices_with_label(BoundaryLabel::Dirichlet);
    let mut dof_of_vertex = vec![NONE; mesh.num_vertices()];
    let mut free = Vec::new();
    for (v, &d) in is_dirichlet.iter().enumerate() {
        if !d {
            dof_of_vertex[v] = free.len() as u32;
            free.push(v as u32);
        }
    }
    if free.is_empty() {
        return Err(AssemblyError::NoFreeDofs);
    }
    let mut trip = Vec::with_capacity(full.nnz());
    let mut rhs = Vec::with_capacity(free.len());
    for (k, &v) in free.iter().enumerate() {
        let mut r = load[v as usize];
        for (j, a) in full.row(v as usize) {
            let dj = dof_of_vertex[j];
            if dj == NONE {
                r -= a * lifting[j];
            } else {
                trip.push((k as u32, dj, a));
            }
        }
        rhs.push(r);
    }
    let matrix = CsrMatrix::from_triplets(free.len(), free.len(), trip);
    if let Some(row) = matrix.diagonal().iter().position(|&d| !(d > 0.0)) {
        return Err(AssemblyError::NotElliptic(row));
    }
    Ok(LinearSystem {
        matrix,
        rhs,
        free,
        dof_of_vertex,
        lifting,
        symmetric: problem.convection.is_none(),
        mesh_id: mesh.id(),
    })
}

/// Operator matrix over all vertices. With `include_convection = false` this
/// is the energy (symmetric part) matrix.
fn assemble_operator(
    mesh: &Mesh,
    problem: &ProblemSpec,
    kappa: Option<&[f64]>,
    include_convection: bool,
) -> Result<CsrMatrix, AssemblyError> {
    let n = mesh.num_vertices();
    let rule = TriangleRule::degree4();
    let mut trip = Vec::with_capacity(9 * mesh.num_triangles() + 4 * mesh.boundary_facets().len());
    for t in 0..mesh.num_triangles() {
        if !(mesh.area(t) > 0.0) {
            return Err(AssemblyError::SingularJacobian(t));
        }
        let (g, area) = shape_gradients(mesh, t);
        let tri = mesh.triangles()[t];
        let mut k = [[0.0; 3]; 3];
        let mut conv = [[0.0; 3]; 3];
        let coords = mesh.coords(t);
        for (x, l, w) in rule.map(&coords) {
            let a = match kappa {
                Some(kap) => [[kap[t], 0.0], [0.0, kap[t]]],
                None => problem.diffusion_at(x),
            };
            let b = if include_convection { problem.convection_at(x) } else { [0.0, 0.0] };
            let c = problem.reaction_at(x);
            let wa = w * area;
            // Symmetric terms are computed once per pair so that the element
            // matrix is bitwise symmetric.
            for i in 0..3 {
                for j in i..3 {
                    let a_sym = 0.5 * (a[0][1] + a[1][0]);
                    let s = a[0][0] * (g[i][0] * g[j][0])
                        + a_sym * (g[i][0] * g[j][1] + g[i][1] * g[j][0])
                        + a[1][1] * (g[i][1] * g[j][1])
                        + c * (l[i] * l[j]);
                    k[i][j] += wa * s;
                }
            }
            for j in 0..3 {
                let bg = b[0] * g[j][0] + b[1] * g[j][1];
                if bg != 0.0 {
                    for i in 0..3 {
                        conv[i][j] += wa * bg * l[i];
                    }
                }
            }
        }
        for i in 0..3 {
            for j in 0..i {
                k[i][j] = k[j][i];
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                k[i][j] += conv[i][j];
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], k[i][j]));
            }
        }
    }
    for f in mesh.boundary_facets().iter().filter(|f| f.label == BoundaryLabel::Robin) {
        let [a, b] = f.vertices;
        let (pa, pb) = (mesh.vertices()[a as usize], mesh.vertices()[b as usize]);
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        let mut m = [[0.0; 2]; 2];
        for &(s, w) in &EDGE_GAUSS3 {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let alpha = problem.robin_coefficient_at(x);
            let phi = [1.0 - s, s];
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] += w * len * alpha * (phi[i] * phi[j]);
                }
            }
        }
        let v = [a, b];
        for i in 0..2 {
            for j in 0..2 {
                trip.push((v[i], v[j], m[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, trip))
}

/// `∫ f φ_i + ∫_{Γ_N} φ_N φ_i + ∫_{Γ_R} φ_R φ_i` for every vertex `i`.
fn assemble_load(mesh: &Mesh, problem: &ProblemSpec) -> Vec<f64> {
    let mut load = vec![0.0; mesh.num_vertices()];
    let rule = TriangleRule::data();
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles()[t];
        let area = mesh.area(t);
        let mut r = [0.0; 3];
        for (x, l, w) in rule.map(&mesh.coords(t)) {
            let f = (problem.source)(x);
            for i in 0..3 {
                r[i] += w * area * f * l[i];
            }
        }
        for i in 0..3 {
            load[tri[i] as usize] += r[i];
        }
    }
    for f in mesh.boundary_facets() {
        let data: &dyn Fn(Point) -> f64 = match f.label {
            BoundaryLabel::Dirichlet => continue,
            BoundaryLabel::Neumann => &|x| problem.neumann_at(x),
            BoundaryLabel::Robin => &|x| problem.robin_at(x),
        };
        let [a, b] = f.vertices;
        let (pa, pb) = (mesh.vertices()[a as usize], mesh.vertices()[b as usize]);
        load[a as usize] += integrate_edge(pa, pb, |x, s| data(x) * (1.0 - s));
        load[b as usize] += integrate_edge(pa, pb, |x, s| data(x) * s);
    }
    load
}

/// Scott–Zhang values of `g_D` at the Dirichlet vertices (zero elsewhere).
/// Each vertex uses its lowest-numbered adjacent Dirichlet facet `E` and the
/// P1 dual basis `ψ_z = (2/|E|)(2φ_z − φ_w)` on it.
pub fn scott_zhang_trace(mesh: &Mesh, problem: &ProblemSpec) -> Result<Vec<f64>, AssemblyError> {
    let mut values = vec![0.0; mesh.num_vertices()];
    let mut done = vec![false; mesh.num_vertices()];
    let g = match &problem.dirichlet {
        Some(g) => g,
        None => return Ok(values),
    };
    for f in mesh.boundary_facets() {
        if f.label != BoundaryLabel::Dirichlet {
            continue;
        }
        let [a, b] = f.vertices;
        let (pa, pb) = (mesh.vertices()[a as usize], mesh.vertices()[b as usize]);
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        if !done[a as usize] {
            done[a as usize] = true;
            values[a as usize] = integrate_edge(pa, pb, |x, s| g(x) * (2.0 / len) * (2.0 * (1.0 - s) - s));
        }
        if !done[b as usize] {
            done[b as usize] = true;
            values[b as usize] = integrate_edge(pa, pb, |x, s| g(x) * (2.0 / len) * (2.0 * s - (1.0 - s)));
        }
    }
    Ok(values)
}

/// Matrix of the energy inner product `∫ A∇u·∇v + c u v + ∫_{Γ_R} α u v`
/// over all vertices (`A = I` for nonlinear problems).
pub fn energy_matrix(mesh: &Mesh, problem: &ProblemSpec) -> Result<CsrMatrix, AssemblyError> {
    let ones;
    let kappa = if problem.nonlinearity.is_some() {
        ones = vec![1.0; mesh.num_triangles()];
        Some(ones.as_slice())
    } else {
        None
    };
    assemble_operator(mesh, problem, kappa, false)
}

pub fn energy_norm(matrix: &CsrMatrix, v: &[f64]) -> f64 {
    matrix.quadratic_form(v).max(0.0).sqrt()
}

/// Energy-norm distance between the manufactured solution and `u`.
pub fn energy_norm_error(mesh: &Mesh, problem: &ProblemSpec, u: &DiscreteFunction) -> Result<f64, AssemblyError> {
    Ok(element_errors(mesh, problem, u)?.iter().sum::<f64>().sqrt())
}

/// Squared energy error per element; Robin boundary contributions are added
/// to the adjacent element.
pub fn element_errors(mesh: &Mesh, problem: &ProblemSpec, u: &DiscreteFunction) -> Result<Vec<f64>, AssemblyError> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| AssemblyError::NoExactSolution(problem.name.clone()))?;
    u.check_mesh(mesh)?;
    let rule = TriangleRule::data();
    let nonlinear = problem.nonlinearity.is_some();
    let mut err: Vec<f64> = (0..mesh.num_triangles())
        .map(|t| {
            let gu = u.gradient(mesh, t);
            let area = mesh.area(t);
            rule.map(&mesh.coords(t))
                .map(|(x, l, w)| {
                    let g = (exact.gradient)(x);
                    let e = [g[0] - gu[0], g[1] - gu[1]];
                    let a = if nonlinear { [[1.0, 0.0], [0.0, 1.0]] } else { problem.diffusion_at(x) };
                    let ae = [a[0][0] * e[0] + a[0][1] * e[1], a[1][0] * e[0] + a[1][1] * e[1]];
                    let mut s = ae[0] * e[0] + ae[1] * e[1];
                    let c = problem.reaction_at(x);
                    if c != 0.0 {
                        let d = (exact.value)(x) - u.eval_barycentric(mesh, t, l);
                        s += c * d * d;
                    }
                    w * area * s
                })
                .sum()
        })
        .collect();
    for f in mesh.boundary_facets().iter().filter(|f| f.label == BoundaryLabel::Robin) {
        let [a, b] = f.vertices;
        let e = mesh.find_edge(a, b).expect("boundary facet is an edge");
        let (t, _) = mesh.edge_triangles(e);
        let (pa, pb) = (mesh.vertices()[a as usize], mesh.vertices()[b as usize]);
        let (ua, ub) = (u.values[a as usize], u.values[b as usize]);
        err[t as usize] += integrate_edge(pa, pb, |x, s| {
            let d = (exact.value)(x) - ((1.0 - s) * ua + s * ub);
            problem.robin_coefficient_at(x) * d * d
        });
    }
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square, unit_square_with, ElementSet};
    use crate::problem::PROBLEM_NAMES;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn poisson(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> ProblemSpec {
        ProblemSpec::poisson("test", Arc::new(f), Arc::new(unit_square))
    }

    #[test]
    fn reference_triangle_stiffness() {
        let d = BoundaryLabel::Dirichlet;
        let m = Mesh::new_initial(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![(0, 1, d), (1, 2, d), (2, 0, d)],
        )
        .unwrap();
        let k = assemble_operator(&m, &poisson(|_| 0.0), None, true).unwrap();
        // Oracle: ∫ ∇λ_i·∇λ_j with ∇λ = (−1,−1), (1,0), (0,1) and |T| = 1/2.
        let g = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                let exact = 0.5 * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                assert!((k.get(i, j) - exact).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn zero_data_gives_zero_rhs() {
        let m = unit_square().uniform_refine();
        let s = assemble(&m, &poisson(|_| 0.0), None).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.rhs.iter().all(|&r| r == 0.0));
        assert!(s.symmetric && s.matrix.is_symmetric());
    }

    #[test]
    fn robin_only_square_has_constant_solution() {
        let m = unit_square_with(|_| BoundaryLabel::Robin).uniform_refine();
        let mut p = poisson(|_| 0.0);
        p.robin = Some(Arc::new(|_| 1.0));
        p.robin_coefficient = Some(Arc::new(|_| 1.0));
        let s = assemble(&m, &p, None).unwrap();
        assert_eq!(s.dim(), m.num_vertices());
        let ones = vec![1.0; s.dim()];
        let r = s.matrix.mul_vec(&ones);
        for (a, b) in r.iter().zip(&s.rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scott_zhang_reproduces_affine_traces_and_dual_basis_value() {
        let m = unit_square().uniform_refine().uniform_refine();
        let mut p = poisson(|_| 0.0);
        p.dirichlet = Some(Arc::new(|x: Point| 0.3 - x[0] + 2.0 * x[1]));
        let v = scott_zhang_trace(&m, &p).unwrap();
        for (i, x) in m.vertices().iter().enumerate() {
            let on_boundary = x[0] == 0.0 || x[0] == 1.0 || x[1] == 0.0 || x[1] == 1.0;
            if on_boundary {
                assert!((v[i] - (0.3 - x[0] + 2.0 * x[1])).abs() < 1e-14);
            } else {
                assert_eq!(v[i], 0.0);
            }
        }
        // g(s) = s on [0,1]: ∫ (2(2φ₀ − φ₁)) s ds = 2(2/6 − 1/3) = 0.
        let val = integrate_edge([0.0, 0.0], [1.0, 0.0], |x, s| x[0] * 2.0 * (2.0 * (1.0 - s) - s));
        assert!(val.abs() < 1e-15);
    }

    #[test]
    fn sine_energy_of_zero_function() {
        let p = ProblemSpec::by_name("square_sine").unwrap();
        let m = unit_square().uniform_refine().uniform_refine();
        let e = energy_norm_error(&m, &p, &DiscreteFunction::zeros(&m)).unwrap();
        assert!((e * e - PI * PI / 2.0).abs() < 1e-10, "{}", e * e);
    }

    #[test]
    fn affine_interpolant_has_zero_error() {
        let p = ProblemSpec::by_name("affine").unwrap();
        let m = (p.initial_mesh)();
        let u = DiscreteFunction::interpolate(&m, |x| 1.0 + 2.0 * x[0] - 3.0 * x[1]);
        assert!(energy_norm_error(&m, &p, &u).unwrap() < 1e-12);
    }

    #[test]
    fn prolongation_preserves_p1_functions() {
        let m = unit_square().uniform_refine();
        let fine = m.refine(&ElementSet::from_iter([0, 3])).unwrap();
        let f = |x: Point| 2.0 * x[0] - x[1] + 0.5;
        let u = DiscreteFunction::interpolate(&m, f).prolong(&fine).unwrap();
        for (x, v) in fine.vertices().iter().zip(&u.values) {
            assert!((f(*x) - v).abs() < 1e-15);
        }
    }

    #[test]
    fn text_round_trip() {
        let m = unit_square().uniform_refine();
        let u = DiscreteFunction::interpolate(&m, |x| x[0].exp() * 1.0 / 3.0);
        assert_eq!(DiscreteFunction::from_text(&u.to_text()).unwrap(), u);
    }

    #[test]
    fn nonlinear_problem_requires_linearization() {
        let p = ProblemSpec::by_name("lshape_nonlinear").unwrap();
        let m = (p.initial_mesh)();
        assert_eq!(assemble(&m, &p, None).unwrap_err(), AssemblyError::MissingLinearization);
        let u = DiscreteFunction::zeros(&m);
        assert!(assemble(&m, &p, Some(&u)).is_ok());
    }

    #[test]
    fn convection_system_is_nonsymmetric() {
        for name in PROBLEM_NAMES {
            let p = ProblemSpec::by_name(name).unwrap();
            let m = (p.initial_mesh)();
            let z = DiscreteFunction::zeros(&m);
            let s = assemble(&m, &p, Some(&z)).unwrap();
            assert_eq!(s.matrix.is_symmetric(), p.is_symmetric(), "{name}");
        }
    }
}
