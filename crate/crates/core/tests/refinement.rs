use afem::mesh::{lshape, read_mesh, unit_square, write_mesh};
use afem::{ElementSet, Mesh, ModifiedMeshSize};
use proptest::prelude::*;

/// Refines `mesh` along a sequence of element selections given as fractions
/// of the current element count.
fn refine_sequence(mesh: Mesh, picks: &[Vec<f64>]) -> Vec<Mesh> {
    let mut out = vec![mesh];
    for p in picks {
        let m = out.last().unwrap();
        let n = m.num_triangles();
        let set: ElementSet = p.iter().map(|f| ((f * n as f64) as u32).min(n as u32 - 1)).collect();
        out.push(m.refine(&set).unwrap());
    }
    out
}

fn picks() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, 1..6), 1..7)
}

fn conforming(m: &Mesh) -> bool {
    // Rebuilding from raw data re-runs every topological check, including the
    // hanging-node test.
    let boundary = m.boundary_facets().iter().map(|f| (f.vertices[0], f.vertices[1], f.label)).collect();
    Mesh::new_initial(m.vertices().to_vec(), m.triangles().to_vec(), boundary).is_ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn refinement_keeps_area_and_conformity(square in any::<bool>(), picks in picks()) {
        let t0 = if square { unit_square() } else { lshape() };
        let area = t0.total_area();
        for m in refine_sequence(t0, &picks) {
            prop_assert!((m.total_area() - area).abs() <= 1e-12 * area);
            prop_assert!(conforming(&m));
            prop_assert!(m.shape_regularity() <= 8.0 + 1e-9);
        }
    }

    #[test]
    fn overlay_is_symmetric_and_bounded(a in picks(), b in picks()) {
        let ma = refine_sequence(lshape(), &a).pop().unwrap();
        let mb = refine_sequence(lshape(), &b).pop().unwrap();
        let ab = ma.overlay(&mb).unwrap();
        let ba = mb.overlay(&ma).unwrap();
        prop_assert!(ab.same_triangulation(&ba));
        prop_assert!(ab.num_triangles() + lshape().num_triangles() <= ma.num_triangles() + mb.num_triangles());
        prop_assert!(ma.overlay(&ma).unwrap().same_triangulation(&ma));
    }

    #[test]
    fn modified_mesh_size_is_monotone_and_equivalent(picks in picks()) {
        let meshes = refine_sequence(lshape(), &picks);
        let mut h = ModifiedMeshSize::initial(&meshes[0], 2, None);
        let c = h.equivalence_constant();
        for w in meshes.windows(2) {
            let next = h.update(&w[0], &w[1]).unwrap();
            for t in 0..w[1].num_triangles() {
                let parent = w[1].parent(t).unwrap() as usize;
                prop_assert!(next.values()[t] <= h.values()[parent]);
                let size = w[1].mesh_size(t);
                prop_assert!(next.values()[t] <= size && next.values()[t] >= size / c * (1.0 - 1e-12));
            }
            h = next;
        }
    }

    #[test]
    fn text_format_round_trips(picks in picks()) {
        let m = refine_sequence(unit_square(), &picks).pop().unwrap();
        let back = read_mesh(&write_mesh(&m)).unwrap();
        prop_assert_eq!(back.vertices(), m.vertices());
        prop_assert_eq!(back.triangles(), m.triangles());
    }
}

#[test]
fn empty_refinement_returns_the_same_mesh() {
    let m = lshape().uniform_refine();
    assert_eq!(m.refine(&ElementSet::default()).unwrap().id(), m.id());
}
