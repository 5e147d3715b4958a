//! A-posteriori error estimators on abstract index sets.
//!
//! Every estimator returns a list of indicators; each indicator belongs to an
//! element or a facet and carries the (at most two) elements that have to be
//! refined when it is marked.

mod facet;
mod oscillation;
mod residual;
mod zz;

pub use facet::{facet_indicators, facet_projection};
pub use oscillation::{oscillation, OscillationVector};
pub use residual::{residual_indicators, residual_indicators_with_sizes};
pub use zz::{recovered_gradients, zz_indicators};

use crate::assembly::{outward_normal, DiscreteFunction};
use crate::error::EstimateError;
use crate::mesh::{BoundaryLabel, Mesh, Point};
use crate::problem::ProblemSpec;
use crate::quadrature::{TriangleRule, EDGE_GAUSS3};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Residual,
    Facet,
    Zz,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Residual => "residual",
            EstimatorKind::Facet => "facet",
            EstimatorKind::Zz => "zz",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "residual" => Ok(EstimatorKind::Residual),
            "facet" => Ok(EstimatorKind::Facet),
            "zz" => Ok(EstimatorKind::Zz),
            _ => Err(format!("unknown estimator `{s}` (expected residual, facet or zz)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Element,
    Facet,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Indicator {
    pub kind: IndexKind,
    /// Triangle id or edge id of the mesh.
    pub id: u32,
    pub squared: f64,
    support: [u32; 2],
    support_len: u8,
}

impl Indicator {
    pub fn element(t: u32, squared: f64) -> Self {
        Indicator {
            kind: IndexKind::Element,
            id: t,
            squared,
            support: [t, t],
            support_len: 1,
        }
    }

    pub fn facet(e: u32, squared: f64, t1: u32, t2: Option<u32>) -> Self {
        Indicator {
            kind: IndexKind::Facet,
            id: e,
            squared,
            support: [t1, t2.unwrap_or(t1)],
            support_len: if t2.is_some() { 2 } else { 1 },
        }
    }

    /// Elements refined when this index is marked.
    pub fn support(&self) -> &[u32] {
        &self.support[..self.support_len as usize]
    }
}

#[derive(Clone, Debug)]
pub struct LocalIndicators {
    pub mesh_id: u64,
    pub estimator: EstimatorKind,
    pub entries: Vec<Indicator>,
}

impl LocalIndicators {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `η²`, summed in index order.
    pub fn total_squared(&self) -> f64 {
        self.entries.iter().map(|e| e.squared).sum()
    }

    pub fn eta(&self) -> f64 {
        self.total_squared().sqrt()
    }

    pub fn squared_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.squared).collect()
    }

    /// Contributions accumulated per element; facet contributions are split
    /// evenly between their support elements.
    pub fn per_element(&self, n_triangles: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_triangles];
        for e in &self.entries {
            let s = e.support();
            for &t in s {
                out[t as usize] += e.squared / s.len() as f64;
            }
        }
        out
    }
}

/// Computes the indicators of the given estimator.
pub fn compute(
    kind: EstimatorKind,
    mesh: &Mesh,
    problem: &ProblemSpec,
    u: &DiscreteFunction,
) -> Result<LocalIndicators, EstimateError> {
    match kind {
        EstimatorKind::Residual => residual_indicators(mesh, problem, u),
        EstimatorKind::Facet => facet_indicators(mesh, problem, u),
        EstimatorKind::Zz => zz_indicators(mesh, problem, u),
    }
}

fn check(mesh: &Mesh, u: &DiscreteFunction) -> Result<(), EstimateError> {
    u.check_mesh(mesh)
        .map_err(|e| EstimateError::MeshMismatch(e.to_string()))
}

/// Per-element gradients and the discrete flux `A∇U` (or `α(|∇U|²)∇U`).
pub(crate) struct Flux<'a> {
    problem: &'a ProblemSpec,
    pub grads: Vec<[f64; 2]>,
    kappa: Option<Vec<f64>>,
}

impl<'a> Flux<'a> {
    pub fn new(mesh: &Mesh, problem: &'a ProblemSpec, u: &DiscreteFunction) -> Self {
        let grads: Vec<[f64; 2]> = (0..mesh.num_triangles()).map(|t| u.gradient(mesh, t)).collect();
        let kappa = problem.nonlinearity.as_ref().map(|nl| {
            grads
                .iter()
                .map(|g| (nl.alpha)(g[0] * g[0] + g[1] * g[1]))
                .collect()
        });
        Flux { problem, grads, kappa }
    }

    pub fn at(&self, t: usize, x: Point) -> [f64; 2] {
        let g = self.grads[t];
        match &self.kappa {
            Some(k) => [k[t] * g[0], k[t] * g[1]],
            None => {
                let a = self.problem.diffusion_at(x);
                [a[0][0] * g[0] + a[0][1] * g[1], a[1][0] * g[0] + a[1][1] * g[1]]
            }
        }
    }
}

/// `∫_T r` and `∫_T r²` of the volume residual `r = f − b·∇U − cU`
/// (the divergence of the discrete flux vanishes elementwise for P1 and
/// piecewise constant coefficients).
pub(crate) fn volume_residual(
    mesh: &Mesh,
    problem: &ProblemSpec,
    u: &DiscreteFunction,
    grads: &[[f64; 2]],
    t: usize,
) -> (f64, f64) {
    let area = mesh.area(t);
    let g = grads[t];
    let has_lower = problem.convection.is_some() || problem.reaction.is_some();
    let mut int = 0.0;
    let mut int2 = 0.0;
    for (x, l, w) in TriangleRule::data().map(&mesh.coords(t)) {
        let mut r = (problem.source)(x);
        if has_lower {
            let b = problem.convection_at(x);
            r -= b[0] * g[0] + b[1] * g[1];
            r -= problem.reaction_at(x) * u.eval_barycentric(mesh, t, l);
        }
        int += w * area * r;
        int2 += w * area * r * r;
    }
    (int, int2)
}

/// `∫_E [flux·n]²` over an interior edge.
pub(crate) fn jump_squared(mesh: &Mesh, flux: &Flux, e: usize) -> f64 {
    let (t1, t2) = mesh.edge_triangles(e);
    let t2 = t2.expect("interior edge");
    let [a, b] = mesh.edge(e);
    let (pa, pb) = (mesh.vertices()[a as usize], mesh.vertices()[b as usize]);
    let n = outward_normal(pa, pb);
    let len = mesh.edge_length(e);
    EDGE_GAUSS3
        .iter()
        .map(|&(s, w)| {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let f1 = flux.at(t1 as usize, x);
            let f2 = flux.at(t2 as usize, x);
            let j = (f1[0] - f2[0]) * n[0] + (f1[1] - f2[1]) * n[1];
            w * len * j * j
        })
        .sum()
}

/// `∫_E ((1 − Π₀) g)²` from the values of `g` at the edge Gauss points.
fn edge_fluctuation(values: [f64; 3], len: f64) -> f64 {
    let mean: f64 = EDGE_GAUSS3.iter().zip(values).map(|(&(_, w), v)| w * v).sum();
    EDGE_GAUSS3
        .iter()
        .zip(values)
        .map(|(&(_, w), v)| w * len * (v - mean).powi(2))
        .sum()
}

/// Boundary data residual of boundary edge `e`, without mesh-size weight:
/// `∫_E (φ_N − A∇U·n)²` on Neumann facets, `∫_E (φ_R − αU − A∇U·n)²` on
/// Robin facets and `∫_E ((1 − Π₀)∂_t g_D)²` on Dirichlet facets.
pub(crate) fn boundary_residual(mesh: &Mesh, problem: &ProblemSpec, u: &DiscreteFunction, flux: &Flux, e: usize) -> f64 {
    let (t, _) = mesh.edge_triangles(e);
    let tri = mesh.triangles()[t as usize];
    // Orient the edge as traversed by its triangle so the normal points out.
    let [a, b] = mesh.edge(e);
    let (a, b) = if (0..3).any(|i| tri[i] == a && tri[(i + 1) % 3] == b) { (a, b) } else { (b, a) };
    let (pa, pb) = (mesh.vertices()[a as usize], mesh.vertices()[b as usize]);
    let n = outward_normal(pa, pb);
    let len = mesh.edge_length(e);
    let point = |s: f64| [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
    match mesh.edge_label(e).expect("boundary edge has a label") {
        BoundaryLabel::Dirichlet => {
            let tangent = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
            let d = EDGE_GAUSS3.map(|(s, _)| problem.dirichlet_tangential(point(s), tangent, len));
            edge_fluctuation(d, len)
        }
        label => {
            let (ua, ub) = (u.values[a as usize], u.values[b as usize]);
            EDGE_GAUSS3
                .iter()
                .map(|&(s, w)| {
                    let x = point(s);
                    let q = flux.at(t as usize, x);
                    let qn = q[0] * n[0] + q[1] * n[1];
                    let r = if label == BoundaryLabel::Neumann {
                        problem.neumann_at(x) - qn
                    } else {
                        problem.robin_at(x) - problem.robin_coefficient_at(x) * ((1.0 - s) * ua + s * ub) - qn
                    };
                    w * len * r * r
                })
                .sum()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fluctuation_of_affine_data_on_an_edge() {
        // g(s) = s on [0, 1]: ∫ (s − 1/2)² = 1/12.
        let v = EDGE_GAUSS3.map(|(s, _)| s);
        assert!((edge_fluctuation(v, 1.0) - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(edge_fluctuation([2.0; 3], 3.0), 0.0);
    }

    #[test]
    fn per_element_splits_facet_contributions() {
        let ind = LocalIndicators {
            mesh_id: 0,
            estimator: EstimatorKind::Zz,
            entries: vec![Indicator::element(0, 1.0), Indicator::facet(4, 2.0, 0, Some(1))],
        };
        assert_eq!(ind.per_element(2), vec![2.0, 1.0]);
        assert_eq!(ind.total_squared(), 3.0);
    }
}
