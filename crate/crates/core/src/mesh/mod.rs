//! Conforming triangulations refined by newest-vertex bisection.
//!
//! Every triangle is stored as `[a, b, c]` in counter-clockwise order with its
//! refinement edge between `a` and `b`; `c` is the newest vertex. Bisection of
//! `[a, b, c]` through the midpoint `m` of `ab` yields `[c, a, m]` and
//! `[b, c, m]`, whose refinement edges are again the edges opposite `m`.

mod builders;
mod io;
mod patch;
mod refine;

pub use builders::{lshape, lshape_with, unit_square, unit_square_with};
pub use io::{read_mesh, write_mesh};
pub use patch::{patch_bounds, ModifiedMeshSize, PatchBounds, BISECTION_REDUCTION};

use crate::error::MeshError;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;

pub type Point = [f64; 2];

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryLabel {
    Dirichlet,
    Neumann,
    Robin,
}

impl BoundaryLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryLabel::Dirichlet => "dirichlet",
            BoundaryLabel::Neumann => "neumann",
            BoundaryLabel::Robin => "robin",
        }
    }
}

impl std::str::FromStr for BoundaryLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" | "d" => Ok(BoundaryLabel::Dirichlet),
            "neumann" | "n" => Ok(BoundaryLabel::Neumann),
            "robin" | "r" => Ok(BoundaryLabel::Robin),
            other => Err(format!("unknown boundary label `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub vertices: [u32; 2],
    pub label: BoundaryLabel,
}

/// Position of a triangle in the bisection forest of the initial mesh: the
/// initial triangle it descends from and the sequence of child choices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lineage {
    root: u32,
    depth: u32,
    bits: Vec<u64>,
}

impl Lineage {
    pub fn root(root: u32) -> Self {
        Lineage {
            root,
            depth: 0,
            bits: Vec::new(),
        }
    }

    pub fn root_id(&self) -> u32 {
        self.root
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn child(&self, branch: u8) -> Self {
        let d = self.depth as usize;
        let mut bits = self.bits.clone();
        if d % 64 == 0 {
            bits.push(0);
        }
        if branch == 1 {
            bits[d / 64] |= 1u64 << (d % 64);
        }
        Lineage {
            root: self.root,
            depth: self.depth + 1,
            bits,
        }
    }

    pub fn branch(&self, i: usize) -> u8 {
        ((self.bits[i / 64] >> (i % 64)) & 1) as u8
    }

    pub fn prefix(&self, depth: u32) -> Lineage {
        assert!(depth <= self.depth);
        let d = depth as usize;
        let mut bits: Vec<u64> = self.bits[..d.div_ceil(64)].to_vec();
        if d % 64 != 0 {
            *bits.last_mut().unwrap() &= (1u64 << (d % 64)) - 1;
        }
        Lineage {
            root: self.root,
            depth,
            bits,
        }
    }

    pub fn is_ancestor_of(&self, other: &Lineage) -> bool {
        self.root == other.root && self.depth <= other.depth && other.prefix(self.depth) == *self
    }
}

/// Relation of a refined mesh to the mesh it was produced from.
#[derive(Clone, Debug)]
pub struct RefinementLink {
    pub predecessor: u64,
    pub predecessor_triangles: usize,
    pub predecessor_vertices: usize,
    /// Per triangle: the predecessor triangle containing it.
    pub parent: Vec<u32>,
    /// For every vertex `predecessor_vertices + i`: the edge it bisects.
    pub vertex_parents: Vec<[u32; 2]>,
}

#[derive(Debug)]
pub(crate) struct Origin {
    pub id: u64,
    pub vertices: Vec<Point>,
    pub triangles: Vec<[u32; 3]>,
    pub labels: HashMap<(u32, u32), BoundaryLabel>,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Topology {
    pub edges: Vec<[u32; 2]>,
    pub tri_edges: Vec<[u32; 3]>,
    pub edge_tris: Vec<[u32; 2]>,
    pub edge_label: Vec<Option<BoundaryLabel>>,
    pub vert_offsets: Vec<u32>,
    pub vert_tris: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    id: u64,
    vertices: Vec<Point>,
    triangles: Vec<[u32; 3]>,
    boundary: Vec<BoundaryFacet>,
    generation: Vec<u32>,
    lineage: Vec<Lineage>,
    link: Option<Arc<RefinementLink>>,
    topo: Topology,
    origin: Arc<Origin>,
}

/// A set of triangle ids of one mesh, sorted and free of duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ElementSet(Vec<u32>);

impl ElementSet {
    pub fn new() -> Self {
        ElementSet(Vec::new())
    }

    pub fn all(n: usize) -> Self {
        ElementSet((0..n as u32).collect())
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        ElementSet(
            mask.iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(|(i, _)| i as u32)
                .collect(),
        )
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &t in &self.0 {
            if (t as usize) < n {
                m[t as usize] = true;
            }
        }
        m
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: u32) -> bool {
        self.0.binary_search(&t).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &ElementSet) -> ElementSet {
        self.iter().chain(other.iter()).collect()
    }
}

impl FromIterator<u32> for ElementSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        let mut v: Vec<u32> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        ElementSet(v)
    }
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn fnv1a(words: impl Iterator<Item = u64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for byte in w.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

impl Mesh {
    /// Builds an initial mesh. Triangles are reoriented counter-clockwise and
    /// each one's refinement edge is set to its longest edge, ties going to
    /// the edge whose opposite vertex has the lowest id.
    pub fn new_initial(
        vertices: Vec<Point>,
        triangles: Vec<[u32; 3]>,
        boundary: Vec<(u32, u32, BoundaryLabel)>,
    ) -> Result<Mesh, MeshError> {
        let mut labeled = Vec::with_capacity(triangles.len());
        for (i, t) in triangles.iter().enumerate() {
            check_indices(t, vertices.len())?;
            let mut t = *t;
            let area = signed_area(vertices[t[0] as usize], vertices[t[1] as usize], vertices[t[2] as usize]);
            if is_degenerate(area, &vertices, &t) {
                return Err(MeshError::Degenerate(i));
            }
            if area < 0.0 {
                t.swap(1, 2);
            }
            let len: Vec<f64> = (0..3)
                .map(|e| dist2(vertices[t[e] as usize], vertices[t[(e + 1) % 3] as usize]))
                .collect();
            let longest = len.iter().cloned().fold(0.0, f64::max);
            let e = (0..3)
                .filter(|&e| len[e] >= longest * (1.0 - 1e-12))
                .min_by_key(|&e| t[(e + 2) % 3])
                .unwrap();
            labeled.push([t[e], t[(e + 1) % 3], t[(e + 2) % 3]]);
        }
        Mesh::from_initial_parts(vertices, labeled, boundary)
    }

    /// Builds an initial mesh keeping the given refinement edges; `edge` is the
    /// local index `e` of the edge `(t[e], t[(e+1) % 3])`.
    pub fn with_refinement_edges(
        vertices: Vec<Point>,
        triangles: Vec<([u32; 3], u8)>,
        boundary: Vec<(u32, u32, BoundaryLabel)>,
    ) -> Result<Mesh, MeshError> {
        let mut tris = Vec::with_capacity(triangles.len());
        for (i, (t, e)) in triangles.iter().enumerate() {
            check_indices(t, vertices.len())?;
            if *e > 2 {
                return Err(MeshError::Parse {
                    line: 0,
                    msg: format!("refinement edge index {e} of triangle {i} is not in 0..=2"),
                });
            }
            let e = *e as usize;
            let t = [t[e], t[(e + 1) % 3], t[(e + 2) % 3]];
            let area = signed_area(vertices[t[0] as usize], vertices[t[1] as usize], vertices[t[2] as usize]);
            if is_degenerate(area, &vertices, &t) {
                return Err(MeshError::Degenerate(i));
            }
            if area < 0.0 {
                return Err(MeshError::NonConforming(format!(
                    "triangle {i} is oriented clockwise"
                )));
            }
            tris.push(t);
        }
        Mesh::from_initial_parts(vertices, tris, boundary)
    }

    fn from_initial_parts(
        vertices: Vec<Point>,
        triangles: Vec<[u32; 3]>,
        boundary: Vec<(u32, u32, BoundaryLabel)>,
    ) -> Result<Mesh, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let boundary: Vec<BoundaryFacet> = boundary
            .into_iter()
            .map(|(a, b, label)| BoundaryFacet {
                vertices: [a, b],
                label,
            })
            .collect();
        for f in &boundary {
            for &v in &f.vertices {
                if v as usize >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange(v));
                }
            }
        }
        let topo = build_topology(vertices.len(), &triangles, &boundary)?;
        check_hanging_nodes(&vertices, &topo)?;
        let n = triangles.len();
        let lineage = (0..n as u32).map(Lineage::root).collect();
        let mut mesh = Mesh {
            id: 0,
            vertices,
            triangles,
            boundary,
            generation: vec![0; n],
            lineage,
            link: None,
            topo,
            origin: Arc::new(Origin {
                id: 0,
                vertices: Vec::new(),
                triangles: Vec::new(),
                labels: HashMap::new(),
            }),
        };
        mesh.id = mesh.compute_id();
        mesh.origin = Arc::new(Origin {
            id: mesh.id,
            vertices: mesh.vertices.clone(),
            triangles: mesh.triangles.clone(),
            labels: mesh
                .boundary
                .iter()
                .map(|f| (key(f.vertices[0], f.vertices[1]), f.label))
                .collect(),
        });
        Ok(mesh)
    }

    /// Assembles a mesh produced by refinement of a valid mesh.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_refinement(
        vertices: Vec<Point>,
        triangles: Vec<[u32; 3]>,
        boundary: Vec<BoundaryFacet>,
        generation: Vec<u32>,
        lineage: Vec<Lineage>,
        link: Option<RefinementLink>,
        origin: Arc<Origin>,
    ) -> Result<Mesh, MeshError> {
        let topo = build_topology(vertices.len(), &triangles, &boundary)?;
        let mut mesh = Mesh {
            id: 0,
            vertices,
            triangles,
            boundary,
            generation,
            lineage,
            link: link.map(Arc::new),
            topo,
            origin,
        };
        mesh.id = mesh.compute_id();
        Ok(mesh)
    }

    fn compute_id(&self) -> u64 {
        let v = self
            .vertices
            .iter()
            .flat_map(|p| [p[0].to_bits(), p[1].to_bits()]);
        let t = self
            .triangles
            .iter()
            .flat_map(|t| t.iter().map(|&x| x as u64));
        let b = self
            .boundary
            .iter()
            .flat_map(|f| [f.vertices[0] as u64, f.vertices[1] as u64, f.label as u64]);
        fnv1a(v.chain(t).chain(b))
    }

    /// Content hash identifying this mesh.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn initial_mesh_id(&self) -> u64 {
        self.origin.id
    }

    pub fn initial_triangle_count(&self) -> usize {
        self.origin.triangles.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary
    }

    pub fn generation(&self, t: usize) -> u32 {
        self.generation[t]
    }

    pub fn lineage(&self, t: usize) -> &Lineage {
        &self.lineage[t]
    }

    pub fn link(&self) -> Option<&RefinementLink> {
        self.link.as_deref()
    }

    /// The predecessor triangle containing `t`, if this mesh came from `refine`.
    pub fn parent(&self, t: usize) -> Option<u32> {
        self.link.as_ref().map(|l| l.parent[t])
    }

    pub fn coords(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.coords(t);
        signed_area(a, b, c)
    }

    /// `h_T = |T|^{1/2}`.
    pub fn mesh_size(&self, t: usize) -> f64 {
        self.area(t).sqrt()
    }

    pub fn mesh_sizes(&self) -> Vec<f64> {
        (0..self.num_triangles()).map(|t| self.mesh_size(t)).collect()
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.coords(t);
        dist2(a, b).max(dist2(b, c)).max(dist2(c, a)).sqrt()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn num_edges(&self) -> usize {
        self.topo.edges.len()
    }

    pub fn edge(&self, e: usize) -> [u32; 2] {
        self.topo.edges[e]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.topo.edges[e];
        dist2(self.vertices[a as usize], self.vertices[b as usize]).sqrt()
    }

    /// Local edge `i` of triangle `t` joins `t[i]` and `t[(i+1) % 3]`; local
    /// edge 0 is the refinement edge.
    pub fn triangle_edges(&self, t: usize) -> [u32; 3] {
        self.topo.tri_edges[t]
    }

    /// The one or two triangles adjacent to edge `e`.
    pub fn edge_triangles(&self, e: usize) -> (u32, Option<u32>) {
        let [a, b] = self.topo.edge_tris[e];
        (a, if b == NONE { None } else { Some(b) })
    }

    pub fn edge_label(&self, e: usize) -> Option<BoundaryLabel> {
        self.topo.edge_label[e]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.topo.edge_tris[e][1] == NONE
    }

    pub fn find_edge(&self, a: u32, b: u32) -> Option<usize> {
        let k = key(a, b);
        let (t, _) = self
            .vertex_triangles(a as usize)
            .iter()
            .map(|&t| (t, ()))
            .find(|(t, _)| self.triangles[*t as usize].contains(&b))?;
        self.topo.tri_edges[t as usize]
            .iter()
            .map(|&e| e as usize)
            .find(|&e| {
                let [x, y] = self.topo.edges[e];
                (x, y) == k
            })
    }

    pub fn vertex_triangles(&self, v: usize) -> &[u32] {
        let r = self.topo.vert_offsets[v] as usize..self.topo.vert_offsets[v + 1] as usize;
        &self.topo.vert_tris[r]
    }

    /// Vertices lying on a boundary facet with the given label.
    pub fn vertices_with_label(&self, label: BoundaryLabel) -> Vec<bool> {
        let mut m = vec![false; self.num_vertices()];
        for f in self.boundary.iter().filter(|f| f.label == label) {
            m[f.vertices[0] as usize] = true;
            m[f.vertices[1] as usize] = true;
        }
        m
    }

    /// The triangle containing `x`, if any.
    pub fn locate(&self, x: Point) -> Option<usize> {
        (0..self.num_triangles()).find(|&t| {
            let [a, b, c] = self.coords(t);
            let eps = -1e-12 * self.area(t);
            signed_area(a, b, x) >= eps && signed_area(b, c, x) >= eps && signed_area(c, a, x) >= eps
        })
    }

    /// Largest number of boundary facets on a single triangle.
    pub fn max_boundary_facets_per_element(&self) -> usize {
        (0..self.num_triangles())
            .map(|t| {
                self.topo.tri_edges[t]
                    .iter()
                    .filter(|&&e| self.is_boundary_edge(e as usize))
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    /// `max_T diam(T)² / |T|`, bounded along NVB refinement because only
    /// finitely many similarity classes occur.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| self.diameter(t).powi(2) / self.area(t))
            .fold(0.0, f64::max)
    }

    /// Largest area ratio between two triangles sharing an edge.
    pub fn max_adjacent_area_ratio(&self) -> f64 {
        (0..self.num_edges())
            .filter_map(|e| {
                let (a, b) = self.edge_triangles(e);
                let b = b?;
                let (x, y) = (self.area(a as usize), self.area(b as usize));
                Some(x.max(y) / x.min(y))
            })
            .fold(1.0, f64::max)
    }

    /// Elements of the predecessor mesh that were refined to obtain `self`.
    pub fn refined_in_predecessor(&self) -> Option<ElementSet> {
        let link = self.link.as_ref()?;
        let mut sons = vec![0u32; link.predecessor_triangles];
        for &p in &link.parent {
            sons[p as usize] += 1;
        }
        Some(
            sons.iter()
                .enumerate()
                .filter(|(_, &s)| s > 1)
                .map(|(i, _)| i as u32)
                .collect(),
        )
    }

    /// Whether two meshes consist of the same triangles of the bisection
    /// forest (vertex numbering may differ).
    pub fn same_triangulation(&self, other: &Mesh) -> bool {
        if self.origin.id != other.origin.id || self.num_triangles() != other.num_triangles() {
            return false;
        }
        let mut a: Vec<&Lineage> = self.lineage.iter().collect();
        let mut b: Vec<&Lineage> = other.lineage.iter().collect();
        a.sort();
        b.sort();
        a == b
    }
}

fn check_indices(t: &[u32; 3], nv: usize) -> Result<(), MeshError> {
    for &v in t {
        if v as usize >= nv {
            return Err(MeshError::VertexOutOfRange(v));
        }
    }
    Ok(())
}

fn is_degenerate(area: f64, vertices: &[Point], t: &[u32; 3]) -> bool {
    let scale = (0..3)
        .map(|e| dist2(vertices[t[e] as usize], vertices[t[(e + 1) % 3] as usize]))
        .fold(0.0, f64::max);
    t[0] == t[1] || t[1] == t[2] || t[0] == t[2] || area.abs() <= 1e-14 * scale
}

pub(crate) fn build_topology(
    nv: usize,
    triangles: &[[u32; 3]],
    boundary: &[BoundaryFacet],
) -> Result<Topology, MeshError> {
    let mut index: HashMap<(u32, u32), u32> = HashMap::with_capacity(triangles.len() * 2);
    let mut edges = Vec::with_capacity(triangles.len() * 3 / 2 + 8);
    let mut edge_tris: Vec<[u32; 2]> = Vec::with_capacity(edges.capacity());
    let mut tri_edges = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let mut te = [0u32; 3];
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            let k = key(a, b);
            let e = *index.entry(k).or_insert_with(|| {
                edges.push([k.0, k.1]);
                edge_tris.push([NONE, NONE]);
                (edges.len() - 1) as u32
            });
            let slot = &mut edge_tris[e as usize];
            if slot[0] == NONE {
                slot[0] = t as u32;
            } else if slot[1] == NONE {
                // The two triangles must traverse a shared edge in opposite
                // directions, otherwise they overlap.
                let other = triangles[slot[0] as usize];
                let same_direction = (0..3).any(|j| other[j] == a && other[(j + 1) % 3] == b);
                if same_direction {
                    return Err(MeshError::NonConforming(format!(
                        "triangles {} and {t} overlap along edge ({a}, {b})",
                        slot[0]
                    )));
                }
                slot[1] = t as u32;
            } else {
                return Err(MeshError::NonConforming(format!(
                    "edge ({a}, {b}) is shared by more than two triangles"
                )));
            }
            te[i] = e;
        }
        tri_edges.push(te);
    }
    let mut edge_label = vec![None; edges.len()];
    for f in boundary {
        let [a, b] = f.vertices;
        let e = *index.get(&key(a, b)).ok_or_else(|| {
            MeshError::NonConforming(format!("boundary facet ({a}, {b}) is not an edge of the mesh"))
        })? as usize;
        if edge_tris[e][1] != NONE {
            return Err(MeshError::LabeledInterior(a, b));
        }
        if edge_label[e].is_some() {
            return Err(MeshError::NonConforming(format!(
                "boundary facet ({a}, {b}) is labeled twice"
            )));
        }
        edge_label[e] = Some(f.label);
    }
    for (e, tris) in edge_tris.iter().enumerate() {
        if tris[1] == NONE && edge_label[e].is_none() {
            return Err(MeshError::UnlabeledBoundary(edges[e][0], edges[e][1]));
        }
    }
    let mut counts = vec![0u32; nv + 1];
    for tri in triangles {
        for &v in tri {
            counts[v as usize + 1] += 1;
        }
    }
    for v in 0..nv {
        if counts[v + 1] == 0 {
            return Err(MeshError::NonConforming(format!("vertex {v} belongs to no triangle")));
        }
        counts[v + 1] += counts[v];
    }
    let vert_offsets = counts.clone();
    let mut fill = counts;
    let mut vert_tris = vec![0u32; triangles.len() * 3];
    for (t, tri) in triangles.iter().enumerate() {
        for &v in tri {
            vert_tris[fill[v as usize] as usize] = t as u32;
            fill[v as usize] += 1;
        }
    }
    Ok(Topology {
        edges,
        tri_edges,
        edge_tris,
        edge_label,
        vert_offsets,
        vert_tris,
    })
}

/// A hanging node of a mesh without overlaps lies strictly inside an edge
/// that has only one adjacent triangle, and is itself a boundary vertex.
fn check_hanging_nodes(vertices: &[Point], topo: &Topology) -> Result<(), MeshError> {
    let boundary_edges: Vec<[u32; 2]> = topo
        .edges
        .iter()
        .zip(&topo.edge_tris)
        .filter(|(_, t)| t[1] == NONE)
        .map(|(e, _)| *e)
        .collect();
    let mut bverts: Vec<u32> = boundary_edges.iter().flatten().copied().collect();
    bverts.sort_unstable();
    bverts.dedup();
    for &[a, b] in &boundary_edges {
        let (pa, pb) = (vertices[a as usize], vertices[b as usize]);
        let len2 = dist2(pa, pb);
        for &v in &bverts {
            if v == a || v == b {
                continue;
            }
            let p = vertices[v as usize];
            let cross = (pb[0] - pa[0]) * (p[1] - pa[1]) - (pb[1] - pa[1]) * (p[0] - pa[0]);
            let dot = (pb[0] - pa[0]) * (p[0] - pa[0]) + (pb[1] - pa[1]) * (p[1] - pa[1]);
            if cross.abs() <= 1e-12 * len2 && dot > 0.0 && dot < len2 {
                return Err(MeshError::NonConforming(format!(
                    "hanging node {v} on edge ({a}, {b})"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_has_two_triangles_and_four_boundary_facets() {
        let m = unit_square();
        assert_eq!(m.num_triangles(), 2);
        assert_eq!(m.boundary_facets().len(), 4);
        assert_eq!(m.num_edges(), 5);
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        // The diagonal is the longest edge of both triangles.
        for t in 0..2 {
            let e = m.triangle_edges(t)[0] as usize;
            assert!(!m.is_boundary_edge(e));
        }
    }

    #[test]
    fn lshape_is_valid_with_eight_boundary_facets() {
        let m = lshape();
        assert_eq!(m.num_triangles(), 6);
        assert_eq!(m.boundary_facets().len(), 8);
        assert!((m.total_area() - 3.0).abs() < 1e-15);
        for t in 0..6 {
            assert!(m.area(t) > 0.0);
        }
    }

    #[test]
    fn hanging_node_is_rejected() {
        // Square with a hanging node at (0.5, 0) on the bottom edge.
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.0]];
        let t = vec![[0, 4, 3], [4, 2, 3], [0, 1, 2]];
        let r = Mesh::new_initial(v, t, vec![]);
        assert!(matches!(
            r,
            Err(MeshError::NonConforming(_)) | Err(MeshError::UnlabeledBoundary(..))
        ));
        // Even with every one-sided edge labeled, the hanging node is detected.
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let t = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [0, 2, 3]];
        assert!(Mesh::new_initial(v, t, vec![]).is_err());
        let v = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let t = vec![[0, 4, 3], [4, 5, 3], [4, 1, 2], [4, 2, 5], [0, 1, 3]];
        let d = BoundaryLabel::Dirichlet;
        let b = vec![(0, 4, d), (4, 1, d), (1, 2, d), (2, 5, d), (5, 3, d), (3, 0, d)];
        assert!(Mesh::new_initial(v, t, b).is_err());
    }

    #[test]
    fn degenerate_and_unlabeled_inputs_are_rejected() {
        let d = BoundaryLabel::Dirichlet;
        let v = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert_eq!(
            Mesh::new_initial(v, vec![[0, 1, 2]], vec![]).unwrap_err(),
            MeshError::Degenerate(0)
        );
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let r = Mesh::new_initial(v.clone(), vec![[0, 1, 2]], vec![(0, 1, d), (1, 2, d)]);
        assert!(matches!(r, Err(MeshError::UnlabeledBoundary(..))));
        let ok = Mesh::new_initial(v, vec![[0, 2, 1]], vec![(0, 1, d), (1, 2, d), (2, 0, d)]).unwrap();
        assert!(ok.area(0) > 0.0, "clockwise input is reoriented");
    }

    #[test]
    fn lineage_prefix_and_ancestry() {
        let r = Lineage::root(3);
        let mut l = r.clone();
        for i in 0..70 {
            l = l.child((i % 3 == 0) as u8);
        }
        assert_eq!(l.depth(), 70);
        assert!(r.is_ancestor_of(&l));
        let p = l.prefix(65);
        assert!(p.is_ancestor_of(&l));
        assert_eq!(p.child(l.branch(65)), l.prefix(66));
        assert!(!l.is_ancestor_of(&p));
        assert!(!Lineage::root(2).is_ancestor_of(&l));
    }
}
