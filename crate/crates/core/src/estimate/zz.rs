use super::{boundary_residual, check, volume_residual, EstimatorKind, Flux, Indicator, LocalIndicators};
use super::facet::patch_fluctuation;
use crate::assembly::DiscreteFunction;
use crate::error::EstimateError;
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;

/// Nodal values of the recovered flux: at each vertex the area-weighted mean
/// of the elementwise flux over the vertex patch. Boundary vertices use the
/// same average.
pub fn recovered_gradients(mesh: &Mesh, elementwise: &[[f64; 2]]) -> Vec<[f64; 2]> {
    (0..mesh.num_vertices())
        .map(|v| {
            let mut sum = [0.0; 2];
            let mut area = 0.0;
            for &t in mesh.vertex_triangles(v) {
                let a = mesh.area(t as usize);
                sum[0] += a * elementwise[t as usize][0];
                sum[1] += a * elementwise[t as usize][1];
                area += a;
            }
            [sum[0] / area, sum[1] / area]
        })
        .collect()
}

/// Recovery estimator on the mixed index set of elements and facets:
/// elements carry `‖G(A∇U) − A∇U‖²_T`, interior facets
/// `|E|² ‖r − F_E‖²_{ω(E)}`, boundary facets `|E|` times their boundary data
/// residual.
pub fn zz_indicators(
    mesh: &Mesh,
    problem: &ProblemSpec,
    u: &DiscreteFunction,
) -> Result<LocalIndicators, EstimateError> {
    check(mesh, u)?;
    let flux = Flux::new(mesh, problem, u);
    let sigma: Vec<[f64; 2]> = (0..mesh.num_triangles())
        .map(|t| {
            let [a, b, c] = mesh.coords(t);
            flux.at(t, [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0])
        })
        .collect();
    let g = recovered_gradients(mesh, &sigma);
    let mut entries = Vec::with_capacity(mesh.num_triangles() + mesh.num_edges());
    for t in 0..mesh.num_triangles() {
        let w = mesh.triangles()[t].map(|v| {
            let gv = g[v as usize];
            [gv[0] - sigma[t][0], gv[1] - sigma[t][1]]
        });
        // ∫_T |Σ λ_i w_i|² with the P1 mass matrix |T|/12 (1 + δ_ij).
        let sq: f64 = w.iter().map(|x| x[0] * x[0] + x[1] * x[1]).sum();
        let s = [w[0][0] + w[1][0] + w[2][0], w[0][1] + w[1][1] + w[2][1]];
        let value = mesh.area(t) / 12.0 * (sq + s[0] * s[0] + s[1] * s[1]);
        entries.push(Indicator::element(t as u32, value));
    }
    let vol: Vec<(f64, f64)> = (0..mesh.num_triangles())
        .map(|t| volume_residual(mesh, problem, u, &flux.grads, t))
        .collect();
    for e in 0..mesh.num_edges() {
        let len = mesh.edge_length(e);
        let (t1, t2) = mesh.edge_triangles(e);
        let value = match t2 {
            Some(t2) => len * len * patch_fluctuation(mesh, &vol, t1 as usize, t2 as usize),
            None => len * boundary_residual(mesh, problem, u, &flux, e),
        };
        entries.push(Indicator::facet(e as u32, value, t1, t2));
    }
    Ok(LocalIndicators {
        mesh_id: mesh.id(),
        estimator: EstimatorKind::Zz,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square, BoundaryLabel};
    use std::sync::Arc;

    #[test]
    fn affine_function_is_recovered_exactly() {
        let p = ProblemSpec::by_name("affine").unwrap();
        let m = (p.initial_mesh)().uniform_refine();
        let u = DiscreteFunction::interpolate(&m, |x| 1.0 + 2.0 * x[0] - 3.0 * x[1]);
        let ind = zz_indicators(&m, &p, &u).unwrap();
        assert!(ind.total_squared() < 1e-24);
    }

    #[test]
    fn two_equal_triangles_average_their_gradients() {
        let d = BoundaryLabel::Dirichlet;
        // Interior vertex 0 shared by two triangles of equal area; oracle:
        // (g1 + g2) / 2.
        let m = Mesh::new_initial(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![(0, 1, d), (1, 2, d), (2, 3, d), (3, 0, d)],
        )
        .unwrap();
        let g = recovered_gradients(&m, &[[1.0, 2.0], [3.0, -4.0]]);
        assert_eq!(g[0], [2.0, -1.0]);
        assert_eq!(g[1], [1.0, 2.0]);
    }

    #[test]
    fn indicator_count_is_elements_plus_edges() {
        let m = unit_square().uniform_refine();
        let p = ProblemSpec::poisson("s", Arc::new(|x| x[0]), Arc::new(unit_square));
        let ind = zz_indicators(&m, &p, &DiscreteFunction::zeros(&m)).unwrap();
        assert_eq!(ind.len(), m.num_triangles() + m.num_edges());
        assert!(ind.entries.iter().all(|e| e.squared >= 0.0));
    }
}
