use super::{boundary_residual, check, jump_squared, volume_residual, EstimatorKind, Flux, Indicator, LocalIndicators};
use crate::assembly::DiscreteFunction;
use crate::error::EstimateError;
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;

/// Element-indexed residual estimator with `h_T = |T|^{1/2}`:
/// `η_T² = h_T² ‖f − b·∇U − cU‖²_T + h_T Σ_E ‖[A∇U·n]‖²_E` over the interior
/// edges of `T`, plus `h_T` times the boundary data residuals of its
/// Neumann, Robin and Dirichlet facets.
pub fn residual_indicators(
    mesh: &Mesh,
    problem: &ProblemSpec,
    u: &DiscreteFunction,
) -> Result<LocalIndicators, EstimateError> {
    residual_indicators_with_sizes(mesh, problem, u, &mesh.mesh_sizes())
}

/// Residual estimator with an arbitrary elementwise mesh-size function, e.g.
/// the modified mesh size `h(T, k)`.
pub fn residual_indicators_with_sizes(
    mesh: &Mesh,
    problem: &ProblemSpec,
    u: &DiscreteFunction,
    h: &[f64],
) -> Result<LocalIndicators, EstimateError> {
    check(mesh, u)?;
    if h.len() != mesh.num_triangles() {
        return Err(EstimateError::MeshMismatch(format!(
            "{} mesh sizes for {} triangles",
            h.len(),
            mesh.num_triangles()
        )));
    }
    let flux = Flux::new(mesh, problem, u);
    let mut eta: Vec<f64> = (0..mesh.num_triangles())
        .map(|t| h[t] * h[t] * volume_residual(mesh, problem, u, &flux.grads, t).1)
        .collect();
    for e in 0..mesh.num_edges() {
        let (t1, t2) = mesh.edge_triangles(e);
        match t2 {
            Some(t2) => {
                let j = jump_squared(mesh, &flux, e);
                eta[t1 as usize] += h[t1 as usize] * j;
                eta[t2 as usize] += h[t2 as usize] * j;
            }
            None => eta[t1 as usize] += h[t1 as usize] * boundary_residual(mesh, problem, u, &flux, e),
        }
    }
    Ok(LocalIndicators {
        mesh_id: mesh.id(),
        estimator: EstimatorKind::Residual,
        entries: eta
            .into_iter()
            .enumerate()
            .map(|(t, v)| Indicator::element(t as u32, v))
            .collect(),
    })
}
