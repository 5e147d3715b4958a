use super::{ElementSet, Mesh};
use crate::error::MeshError;

/// Area reduction of the mesh size `|T|^{1/2}` under one bisection.
pub const BISECTION_REDUCTION: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl Mesh {
    /// The `k`-th order patch `ω^k(seed)`: `ω^0` is the seed itself and each
    /// layer adds all triangles sharing a vertex with the previous one.
    pub fn patch(&self, seed: &ElementSet, k: usize) -> ElementSet {
        let mut inside = seed.mask(self.num_triangles());
        let mut seen = vec![false; self.num_vertices()];
        let mut frontier: Vec<u32> = seed.ids().to_vec();
        for _ in 0..k {
            let mut next = Vec::new();
            for &t in &frontier {
                for &v in &self.triangles[t as usize] {
                    if std::mem::replace(&mut seen[v as usize], true) {
                        continue;
                    }
                    for &s in self.vertex_triangles(v as usize) {
                        if !inside[s as usize] {
                            inside[s as usize] = true;
                            next.push(s);
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        ElementSet::from_mask(&inside)
    }

    pub fn element_patch(&self, t: usize, k: usize) -> ElementSet {
        self.patch(&ElementSet::from_iter([t as u32]), k)
    }
}

/// Local mesh-size and patch-cardinality bounds measured on a family of
/// meshes derived from an initial mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatchBounds {
    /// `max h_T / h_T'` over `T' ∈ ω^k(T)`.
    pub mesh_size_ratio: f64,
    /// `max |ω^k(T)|`.
    pub patch_size: usize,
    /// Bisection generations after which `ρ^N` compensates the size ratio.
    pub n0: usize,
    pub n_max: usize,
}

/// Measures the patch bounds on `mesh` and on graded meshes obtained by
/// repeatedly refining towards a few of its vertices.
pub fn patch_bounds(mesh: &Mesh, k: usize) -> PatchBounds {
    let mut meshes = vec![mesh.clone()];
    let nv = mesh.num_vertices();
    let probes = nv.min(8);
    for i in 0..probes {
        let v = mesh.vertices()[i * nv / probes];
        let mut m = mesh.clone();
        for _ in 0..6 {
            let near: ElementSet = (0..m.num_triangles() as u32)
                .filter(|&t| m.triangles()[t as usize].iter().any(|&w| m.vertices()[w as usize] == v))
                .collect();
            m = m.refine(&near).expect("refinement towards a vertex");
        }
        meshes.push(m);
    }
    let mut ratio: f64 = 1.0;
    let mut size = 1;
    for m in &meshes {
        let h = m.mesh_sizes();
        for t in 0..m.num_triangles() {
            let p = m.element_patch(t, k);
            size = size.max(p.len());
            for s in p.iter() {
                ratio = ratio.max(h[t] / h[s as usize]);
            }
        }
    }
    let n0 = (2.0 * ratio.ln() / (1.0 / BISECTION_REDUCTION).ln() - 1e-9).ceil().max(0.0) as usize;
    PatchBounds {
        mesh_size_ratio: ratio,
        patch_size: size,
        n0,
        n_max: n0.max(1) * size,
    }
}

/// Mesh-size function that contracts by a fixed factor on a patch around
/// refined elements, not only on the refined elements themselves, while
/// staying uniformly equivalent to `|T|^{1/2}`.
#[derive(Clone, Debug)]
pub struct ModifiedMeshSize {
    mesh_id: u64,
    k: usize,
    n_max: usize,
    contraction: f64,
    values: Vec<f64>,
}

impl ModifiedMeshSize {
    /// Starts from `h_T = |T|^{1/2}`; `n_max` defaults to the measured patch
    /// bound of `mesh`.
    pub fn initial(mesh: &Mesh, k: usize, n_max: Option<usize>) -> Self {
        let n_max = n_max.unwrap_or_else(|| patch_bounds(mesh, k).n_max).max(1);
        ModifiedMeshSize {
            mesh_id: mesh.id(),
            k,
            n_max,
            contraction: BISECTION_REDUCTION.powf(1.0 / (n_max as f64 + 1.0)),
            values: mesh.mesh_sizes(),
        }
    }

    /// Transfers the function from `old` to its refinement `new`: refined
    /// elements take their new size, unrefined elements of the `k`-patch of
    /// the refined set contract, all others keep their value.
    pub fn update(&self, old: &Mesh, new: &Mesh) -> Result<Self, MeshError> {
        if self.mesh_id != old.id() {
            return Err(MeshError::Mismatch(format!(
                "mesh-size function belongs to mesh {:016x}, not {:016x}",
                self.mesh_id,
                old.id()
            )));
        }
        let link = new
            .link()
            .filter(|l| l.predecessor == old.id())
            .ok_or_else(|| MeshError::Mismatch("new mesh is not a refinement of old".into()))?;
        let refined = new.refined_in_predecessor().unwrap_or_default();
        let near = old.patch(&refined, self.k).mask(old.num_triangles());
        let is_refined = refined.mask(old.num_triangles());
        let values = (0..new.num_triangles())
            .map(|t| {
                let p = link.parent[t] as usize;
                if is_refined[p] {
                    new.mesh_size(t)
                } else if near[p] {
                    self.contraction * self.values[p]
                } else {
                    self.values[p]
                }
            })
            .collect();
        Ok(ModifiedMeshSize {
            mesh_id: new.id(),
            k: self.k,
            n_max: self.n_max,
            contraction: self.contraction,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Factor applied to unrefined elements near refined ones.
    pub fn contraction(&self) -> f64 {
        self.contraction
    }

    /// Constant `C` with `h_T / C ≤ value_T ≤ h_T`.
    pub fn equivalence_constant(&self) -> f64 {
        let n = self.n_max as f64;
        BISECTION_REDUCTION.powf(-n / (n + 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{lshape, unit_square};
    use super::*;

    #[test]
    fn patch_layers_grow_by_vertex_adjacency() {
        let m = lshape().uniform_refine();
        let t = m.locate([-0.9, -0.95]).unwrap();
        let seed = ElementSet::from_iter([t as u32]);
        assert_eq!(m.patch(&seed, 0), seed);
        let p1 = m.patch(&seed, 1);
        let expected: ElementSet = m.triangles()[t]
            .iter()
            .flat_map(|&v| m.vertex_triangles(v as usize).to_vec())
            .collect();
        assert_eq!(p1, expected);
        let p2 = m.patch(&seed, 2);
        assert!(p1.ids().iter().all(|&s| p2.contains(s)));
        assert_eq!(m.patch(&seed, 50).len(), m.num_triangles());
    }

    #[test]
    fn modified_mesh_size_contracts_and_stays_equivalent() {
        let m0 = unit_square().uniform_refine();
        let h0 = ModifiedMeshSize::initial(&m0, 1, None);
        assert!(h0.n_max() >= 1);
        let mut m = m0;
        let mut h = h0;
        for step in 0..8 {
            let t = m.locate([0.01, 0.02]).unwrap();
            let next = m.refine(&ElementSet::from_iter([t as u32])).unwrap();
            let hn = h.update(&m, &next).unwrap();
            let link = next.link().unwrap();
            let refined = next.refined_in_predecessor().unwrap();
            let near = m.patch(&refined, 1);
            for s in 0..next.num_triangles() {
                let p = link.parent[s] as usize;
                let hs = next.mesh_size(s);
                assert!(hn.values()[s] <= hs, "step {step}");
                assert!(hn.values()[s] * hn.equivalence_constant() >= hs * (1.0 - 1e-12));
                if near.contains(p as u32) {
                    assert!(hn.values()[s] <= hn.contraction() * h.values()[p]);
                } else {
                    assert_eq!(hn.values()[s], h.values()[p]);
                }
            }
            m = next;
            h = hn;
        }
    }

    #[test]
    fn update_rejects_foreign_mesh() {
        let a = unit_square();
        let h = ModifiedMeshSize::initial(&a, 1, Some(3));
        let b = lshape();
        let c = b.uniform_refine();
        assert!(h.update(&b, &c).is_err());
    }
}
