use super::{BoundaryLabel, Mesh, Point};

/// `(0,1)²` split along the diagonal from `(0,0)` to `(1,1)`, Dirichlet
/// boundary.
pub fn unit_square() -> Mesh {
    unit_square_with(|_| BoundaryLabel::Dirichlet)
}

/// `(0,1)²` with boundary labels chosen from each facet's midpoint.
pub fn unit_square_with(label: impl Fn(Point) -> BoundaryLabel) -> Mesh {
    let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let t = vec![[0, 1, 2], [0, 2, 3]];
    build(v, t, &[[0, 1], [1, 2], [2, 3], [3, 0]], label)
}

/// `(-1,1)² \ [0,1)×(-1,0]` with six triangles whose refinement edges all
/// point at the re-entrant corner, Dirichlet boundary.
pub fn lshape() -> Mesh {
    lshape_with(|_| BoundaryLabel::Dirichlet)
}

pub fn lshape_with(label: impl Fn(Point) -> BoundaryLabel) -> Mesh {
    let v = vec![
        [-1.0, -1.0],
        [0.0, -1.0],
        [-1.0, 0.0],
        [0.0, 0.0],
        [1.0, 0.0],
        [-1.0, 1.0],
        [0.0, 1.0],
        [1.0, 1.0],
    ];
    let t = vec![[0, 1, 3], [0, 3, 2], [2, 3, 5], [3, 6, 5], [3, 4, 7], [3, 7, 6]];
    let b = [[0, 1], [1, 3], [3, 4], [4, 7], [7, 6], [6, 5], [5, 2], [2, 0]];
    build(v, t, &b, label)
}

fn build(
    v: Vec<Point>,
    t: Vec<[u32; 3]>,
    facets: &[[u32; 2]],
    label: impl Fn(Point) -> BoundaryLabel,
) -> Mesh {
    let b = facets
        .iter()
        .map(|&[a, c]| {
            let (p, q) = (v[a as usize], v[c as usize]);
            (a, c, label([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]))
        })
        .collect();
    Mesh::new_initial(v, t, b).expect("builtin mesh is valid")
}
