use super::{boundary_residual, check, jump_squared, volume_residual, EstimatorKind, Flux, Indicator, LocalIndicators};
use crate::assembly::DiscreteFunction;
use crate::error::EstimateError;
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;

/// Facet-indexed estimator. For an interior edge `E` with patch
/// `ω(E) = T₁ ∪ T₂`:
/// `ϱ_E² = |E|² ‖r − F_E‖²_{ω(E)} + |E| ‖[A∇U·n]‖²_E` where `r` is the volume
/// residual and `F_E` its mean over `ω(E)`. Boundary facets carry `|E|`
/// times their boundary data residual.
pub fn facet_indicators(
    mesh: &Mesh,
    problem: &ProblemSpec,
    u: &DiscreteFunction,
) -> Result<LocalIndicators, EstimateError> {
    check(mesh, u)?;
    check_boundary_facets(mesh)?;
    let flux = Flux::new(mesh, problem, u);
    let vol: Vec<(f64, f64)> = (0..mesh.num_triangles())
        .map(|t| volume_residual(mesh, problem, u, &flux.grads, t))
        .collect();
    let entries = (0..mesh.num_edges())
        .map(|e| {
            let len = mesh.edge_length(e);
            let (t1, t2) = mesh.edge_triangles(e);
            let value = match t2 {
                Some(t2) => {
                    let osc = patch_fluctuation(mesh, &vol, t1 as usize, t2 as usize);
                    len * len * osc + len * jump_squared(mesh, &flux, e)
                }
                None => len * boundary_residual(mesh, problem, u, &flux, e),
            };
            Indicator::facet(e as u32, value, t1, t2)
        })
        .collect();
    Ok(LocalIndicators {
        mesh_id: mesh.id(),
        estimator: EstimatorKind::Facet,
        entries,
    })
}

/// Every element needs at least two interior facets for the facet
/// indicators to see all of it.
fn check_boundary_facets(mesh: &Mesh) -> Result<(), EstimateError> {
    for t in 0..mesh.num_triangles() {
        let n = mesh
            .triangle_edges(t)
            .iter()
            .filter(|&&e| mesh.is_boundary_edge(e as usize))
            .count();
        if n > 1 {
            return Err(EstimateError::TooManyBoundaryFacets(t as u32));
        }
    }
    Ok(())
}

/// `‖r − F‖²_{T₁ ∪ T₂}` with `F` the patch mean of `r`.
pub(crate) fn patch_fluctuation(mesh: &Mesh, vol: &[(f64, f64)], t1: usize, t2: usize) -> f64 {
    let area = mesh.area(t1) + mesh.area(t2);
    let int = vol[t1].0 + vol[t2].0;
    let int2 = vol[t1].1 + vol[t2].1;
    (int2 - int * int / area).max(0.0)
}

/// Best constant approximation `F_E` of `Δ_𝒯U − f + b·∇U + cU` on the patch
/// of interior edge `e`; for Poisson problems this is minus the patch mean of
/// `f`.
pub fn facet_projection(
    mesh: &Mesh,
    problem: &ProblemSpec,
    u: &DiscreteFunction,
    e: usize,
) -> Result<f64, EstimateError> {
    check(mesh, u)?;
    let (t1, t2) = mesh.edge_triangles(e);
    let t2 = t2.ok_or(EstimateError::MissingNeighbor(e as u32))?;
    let flux = Flux::new(mesh, problem, u);
    let a = volume_residual(mesh, problem, u, &flux.grads, t1 as usize).0;
    let b = volume_residual(mesh, problem, u, &flux.grads, t2 as usize).0;
    Ok(-(a + b) / (mesh.area(t1 as usize) + mesh.area(t2 as usize)))
}
