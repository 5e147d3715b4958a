use super::{boundary_residual, check, Flux};
use crate::assembly::DiscreteFunction;
use crate::error::EstimateError;
use crate::mesh::{BoundaryLabel, Mesh};
use crate::problem::ProblemSpec;
use crate::quadrature::TriangleRule;

/// Squared data oscillations per element.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillationVector {
    /// `h_T² ‖f − f_T‖²_T` with `f_T` the mean of `f` on `T`.
    pub volume: Vec<f64>,
    /// `h_T ‖(1 − Π₀) ∂_t g_D‖²` over the Dirichlet facets of `T`.
    pub dirichlet: Vec<f64>,
}

impl OscillationVector {
    pub fn total_squared(&self) -> f64 {
        self.volume.iter().chain(&self.dirichlet).sum()
    }

    pub fn total(&self) -> f64 {
        self.total_squared().sqrt()
    }
}

pub fn oscillation(mesh: &Mesh, problem: &ProblemSpec, u: &DiscreteFunction) -> Result<OscillationVector, EstimateError> {
    check(mesh, u)?;
    let rule = TriangleRule::data();
    let volume = (0..mesh.num_triangles())
        .map(|t| {
            let area = mesh.area(t);
            let (mut int, mut int2) = (0.0, 0.0);
            for (x, _, w) in rule.map(&mesh.coords(t)) {
                let f = (problem.source)(x);
                int += w * area * f;
                int2 += w * area * f * f;
            }
            area * (int2 - int * int / area).max(0.0)
        })
        .collect();
    let mut dirichlet = vec![0.0; mesh.num_triangles()];
    let flux = Flux::new(mesh, problem, u);
    for e in 0..mesh.num_edges() {
        if mesh.edge_label(e) == Some(BoundaryLabel::Dirichlet) {
            let (t, _) = mesh.edge_triangles(e);
            dirichlet[t as usize] += mesh.mesh_size(t as usize) * boundary_residual(mesh, problem, u, &flux, e);
        }
    }
    Ok(OscillationVector { volume, dirichlet })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square, Point};
    use std::sync::Arc;

    fn reference(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> (Mesh, ProblemSpec) {
        let d = BoundaryLabel::Dirichlet;
        let m = Mesh::new_initial(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![(0, 1, d), (1, 2, d), (2, 0, d)],
        )
        .unwrap();
        let mm = m.clone();
        (m, ProblemSpec::poisson("ref", Arc::new(f), Arc::new(move || mm.clone())))
    }

    #[test]
    fn constant_source_has_no_oscillation() {
        let (m, p) = reference(|_| 5.0);
        let o = oscillation(&m, &p, &DiscreteFunction::zeros(&m)).unwrap();
        assert!(o.total_squared() < 1e-28);
    }

    #[test]
    fn linear_source_on_reference_triangle() {
        let (m, p) = reference(|x| x[0]);
        let o = oscillation(&m, &p, &DiscreteFunction::zeros(&m)).unwrap();
        // Oracle: ∫x² = 1/12, ∫x = 1/6, |T| = 1/2, so
        // h_T² (∫x² − (∫x)²/|T|) = (1/2)(1/12 − 1/18) = 1/72.
        assert!((o.volume[0] - 1.0 / 72.0).abs() < 1e-15, "{}", o.volume[0]);
    }

    #[test]
    fn affine_dirichlet_data_has_no_dirichlet_oscillation() {
        let m = unit_square().uniform_refine();
        let mut p = ProblemSpec::poisson("d", Arc::new(|_| 0.0), Arc::new(unit_square));
        p.dirichlet = Some(Arc::new(|x| 3.0 * x[0] - x[1]));
        let o = oscillation(&m, &p, &DiscreteFunction::zeros(&m)).unwrap();
        assert!(o.dirichlet.iter().all(|&d| d < 1e-20));
        p.dirichlet = Some(Arc::new(|x| x[0] * x[0]));
        let o = oscillation(&m, &p, &DiscreteFunction::zeros(&m)).unwrap();
        assert!(o.dirichlet.iter().any(|&d| d > 1e-6));
    }
}
