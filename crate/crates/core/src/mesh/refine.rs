use super::{key, BoundaryFacet, BoundaryLabel, ElementSet, Lineage, Mesh, Point, RefinementLink};
use crate::error::MeshError;
use std::collections::{HashMap, HashSet};
use std::sync::Arc;

fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

impl Mesh {
    /// Refines every marked triangle by bisecting its refinement edge at
    /// least once, plus the minimal closure needed for conformity.
    pub fn refine(&self, marked: &ElementSet) -> Result<Mesh, MeshError> {
        let n = self.num_triangles();
        if let Some(&t) = marked.ids().iter().find(|&&t| t as usize >= n) {
            return Err(MeshError::ElementOutOfRange(t));
        }
        let mut edge_marked = vec![false; self.num_edges()];
        let mut queue = Vec::new();
        for t in marked.iter() {
            let e = self.topo.tri_edges[t as usize][0] as usize;
            if !edge_marked[e] {
                edge_marked[e] = true;
                queue.push(e);
            }
        }
        self.close(&mut edge_marked, queue);
        self.split(&edge_marked)
    }

    /// Bisects every edge once; each triangle is split into four.
    pub fn uniform_refine(&self) -> Mesh {
        self.split(&vec![true; self.num_edges()])
            .expect("uniform refinement of a valid mesh")
    }

    /// A marked edge forces the refinement edges of its adjacent triangles.
    fn close(&self, edge_marked: &mut [bool], mut queue: Vec<usize>) {
        while let Some(e) = queue.pop() {
            for &t in &self.topo.edge_tris[e] {
                if t == super::NONE {
                    continue;
                }
                let r = self.topo.tri_edges[t as usize][0] as usize;
                if !edge_marked[r] {
                    edge_marked[r] = true;
                    queue.push(r);
                }
            }
        }
    }

    fn split(&self, edge_marked: &[bool]) -> Result<Mesh, MeshError> {
        let nv = self.num_vertices();
        let mut vertices = self.vertices.clone();
        let mut vertex_parents = Vec::new();
        let mut mid = vec![u32::MAX; self.num_edges()];
        for (e, _) in edge_marked.iter().enumerate().filter(|(_, &m)| m) {
            let [a, b] = self.topo.edges[e];
            mid[e] = vertices.len() as u32;
            vertices.push(midpoint(self.vertices[a as usize], self.vertices[b as usize]));
            vertex_parents.push([a, b]);
        }
        let cap = self.num_triangles() + 3 * vertex_parents.len();
        let mut triangles = Vec::with_capacity(cap);
        let mut generation = Vec::with_capacity(cap);
        let mut lineage = Vec::with_capacity(cap);
        let mut parent = Vec::with_capacity(cap);
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let [e0, e1, e2] = self.topo.tri_edges[t].map(|e| e as usize);
            let g = self.generation[t];
            let lin = &self.lineage[t];
            let mut push = |tri: [u32; 3], gen: u32, l: Lineage| {
                triangles.push(tri);
                generation.push(gen);
                lineage.push(l);
                parent.push(t as u32);
            };
            if !edge_marked[e0] {
                debug_assert!(!edge_marked[e1] && !edge_marked[e2]);
                push([a, b, c], g, lin.clone());
                continue;
            }
            let m = mid[e0];
            let (l0, l1) = (lin.child(0), lin.child(1));
            if edge_marked[e2] {
                let p = mid[e2];
                push([m, c, p], g + 2, l0.child(0));
                push([a, m, p], g + 2, l0.child(1));
            } else {
                push([c, a, m], g + 1, l0);
            }
            if edge_marked[e1] {
                let q = mid[e1];
                push([m, b, q], g + 2, l1.child(0));
                push([c, m, q], g + 2, l1.child(1));
            } else {
                push([b, c, m], g + 1, l1);
            }
        }
        let mut boundary = Vec::with_capacity(self.boundary.len() + vertex_parents.len());
        for f in &self.boundary {
            let [u, v] = f.vertices;
            let e = self
                .find_edge(u, v)
                .expect("boundary facet is an edge of its mesh");
            if edge_marked[e] {
                let m = mid[e];
                boundary.push(BoundaryFacet { vertices: [u, m], label: f.label });
                boundary.push(BoundaryFacet { vertices: [m, v], label: f.label });
            } else {
                boundary.push(*f);
            }
        }
        let link = RefinementLink {
            predecessor: self.id,
            predecessor_triangles: self.num_triangles(),
            predecessor_vertices: nv,
            parent,
            vertex_parents,
        };
        Mesh::from_refinement(
            vertices,
            triangles,
            boundary,
            generation,
            lineage,
            Some(link),
            self.origin.clone(),
        )
    }

    /// The coarsest common refinement of two refinements of the same initial
    /// mesh.
    pub fn overlay(&self, other: &Mesh) -> Result<Mesh, MeshError> {
        if !Arc::ptr_eq(&self.origin, &other.origin) && self.origin.id != other.origin.id {
            return Err(MeshError::DifferentInitialMesh);
        }
        // Internal nodes of the union of both bisection trees.
        let mut internal: HashSet<Lineage> = HashSet::new();
        for l in self.lineage.iter().chain(&other.lineage) {
            for d in (0..l.depth()).rev() {
                if !internal.insert(l.prefix(d)) {
                    break;
                }
            }
        }
        let origin = &self.origin;
        let mut vertices = origin.vertices.clone();
        let mut mids: HashMap<(u32, u32), u32> = HashMap::new();
        let mut labels = origin.labels.clone();
        let mut triangles = Vec::new();
        let mut lineage = Vec::new();
        for (r, &root) in origin.triangles.iter().enumerate() {
            let mut stack = vec![(root, Lineage::root(r as u32))];
            while let Some((tri, lin)) = stack.pop() {
                if !internal.contains(&lin) {
                    triangles.push(tri);
                    lineage.push(lin);
                    continue;
                }
                let [a, b, c] = tri;
                let k = key(a, b);
                let m = *mids.entry(k).or_insert_with(|| {
                    vertices.push(midpoint(vertices[a as usize], vertices[b as usize]));
                    (vertices.len() - 1) as u32
                });
                if let Some(&label) = labels.get(&k) {
                    labels.insert(key(a, m), label);
                    labels.insert(key(m, b), label);
                }
                stack.push(([c, a, m], lin.child(0)));
                stack.push(([b, c, m], lin.child(1)));
            }
        }
        // Leaves come out of the stack in no useful order; number them by lineage.
        let mut order: Vec<usize> = (0..triangles.len()).collect();
        order.sort_by(|&i, &j| lineage[i].cmp(&lineage[j]));
        let triangles: Vec<[u32; 3]> = order.iter().map(|&i| triangles[i]).collect();
        let lineage: Vec<Lineage> = order.iter().map(|&i| lineage[i].clone()).collect();
        let boundary = boundary_from_labels(&triangles, &labels)?;
        let generation = lineage.iter().map(|l| l.depth()).collect();
        Mesh::from_refinement(
            vertices,
            triangles,
            boundary,
            generation,
            lineage,
            None,
            self.origin.clone(),
        )
    }
}

fn boundary_from_labels(
    triangles: &[[u32; 3]],
    labels: &HashMap<(u32, u32), BoundaryLabel>,
) -> Result<Vec<BoundaryFacet>, MeshError> {
    let mut count: HashMap<(u32, u32), u32> = HashMap::new();
    for t in triangles {
        for i in 0..3 {
            *count.entry(key(t[i], t[(i + 1) % 3])).or_insert(0) += 1;
        }
    }
    let mut boundary = Vec::new();
    for t in triangles {
        for i in 0..3 {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            if count[&key(a, b)] == 1 {
                let label = *labels
                    .get(&key(a, b))
                    .ok_or(MeshError::UnlabeledBoundary(a, b))?;
                boundary.push(BoundaryFacet { vertices: [a, b], label });
            }
        }
    }
    Ok(boundary)
}

#[cfg(test)]
mod tests {
    use super::super::{lshape, unit_square};
    use super::*;

    #[test]
    fn refining_nothing_keeps_the_mesh() {
        let m = lshape();
        let r = m.refine(&ElementSet::new()).unwrap();
        assert_eq!(r.id(), m.id());
        assert!(r.same_triangulation(&m));
        assert_eq!(r.link().unwrap().parent, (0..6).collect::<Vec<u32>>());
    }

    #[test]
    fn single_bisection_on_square_splits_both_triangles() {
        // Both triangles share the diagonal as refinement edge.
        let m = unit_square();
        let r = m.refine(&ElementSet::from_iter([0])).unwrap();
        assert_eq!(r.num_triangles(), 4);
        assert_eq!(r.num_vertices(), 5);
        assert_eq!(r.vertices()[4], [0.5, 0.5]);
        assert!((r.total_area() - 1.0).abs() < 1e-15);
        assert_eq!(r.boundary_facets().len(), 4);
    }

    #[test]
    fn uniform_refinement_quadruples() {
        let m = unit_square();
        let r = m.uniform_refine();
        assert_eq!(r.num_triangles(), 8);
        assert_eq!(r.num_vertices(), 9);
        assert_eq!(r.boundary_facets().len(), 8);
        let r2 = r.uniform_refine();
        assert_eq!(r2.num_triangles(), 32);
        assert!((r2.total_area() - 1.0).abs() < 1e-14);
        for t in 0..32 {
            assert!((r2.area(t) - 1.0 / 32.0).abs() < 1e-15);
        }
    }

    #[test]
    fn closure_propagates_across_refinement_edges() {
        // Refining the corner triangle at the re-entrant vertex repeatedly
        // keeps the mesh conforming; build_topology checks this on every step.
        let mut m = lshape();
        for _ in 0..12 {
            let t = m.locate([-1e-3, 1e-3]).unwrap();
            m = m.refine(&ElementSet::from_iter([t as u32])).unwrap();
        }
        assert!((m.total_area() - 3.0).abs() < 1e-13);
        assert!(m.shape_regularity() <= lshape().uniform_refine().shape_regularity() + 1e-12);
    }

    #[test]
    fn overlay_of_nested_meshes_is_the_finer_one() {
        let m = unit_square();
        let a = m.refine(&ElementSet::from_iter([0])).unwrap();
        let b = a.refine(&ElementSet::from_iter([1, 2])).unwrap();
        let o = a.overlay(&b).unwrap();
        assert!(o.same_triangulation(&b));
        let o = b.overlay(&b).unwrap();
        assert!(o.same_triangulation(&b));
    }

    #[test]
    fn overlay_rejects_different_initial_meshes() {
        assert_eq!(
            unit_square().overlay(&lshape()).unwrap_err(),
            MeshError::DifferentInitialMesh
        );
    }
}
