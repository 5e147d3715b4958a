//! Quadrature on triangles and segments.
//!
//! Triangle rules are stored in barycentric coordinates with weights that sum
//! to one, so `∫_T g ≈ |T| Σ w_q g(x_q)`.

use crate::mesh::Point;
use std::sync::OnceLock;

#[derive(Clone, Debug)]
pub struct TriangleRule {
    /// Barycentric coordinates of the quadrature points.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Symmetric 6-point rule, exact for polynomials of degree 4.
    pub fn degree4() -> &'static TriangleRule {
        static RULE: OnceLock<TriangleRule> = OnceLock::new();
        RULE.get_or_init(|| {
            let a1 = 0.445_948_490_915_964_886_32;
            let w1 = 0.223_381_589_678_011_465_70;
            let a2 = 0.091_576_213_509_770_743_46;
            let w2 = 0.109_951_743_655_321_867_64;
            let b1 = 1.0 - 2.0 * a1;
            let b2 = 1.0 - 2.0 * a2;
            TriangleRule {
                points: vec![
                    [b1, a1, a1],
                    [a1, b1, a1],
                    [a1, a1, b1],
                    [b2, a2, a2],
                    [a2, b2, a2],
                    [a2, a2, b2],
                ],
                weights: vec![w1, w1, w1, w2, w2, w2],
            }
        })
    }

    /// Collapsed Gauss-Legendre product rule with `n²` points, exact for
    /// polynomials of degree `2n - 2`.
    pub fn conical(n: usize) -> TriangleRule {
        let (nodes, weights) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut w = Vec::with_capacity(n * n);
        for (i, &u) in nodes.iter().enumerate() {
            for (j, &v) in nodes.iter().enumerate() {
                // (u, v) ∈ [0,1]² ↦ (s, t) = (u, v(1-u)), Jacobian (1-u); the
                // reference triangle has area 1/2, hence the factor 2.
                let s = u;
                let t = v * (1.0 - u);
                points.push([1.0 - s - t, s, t]);
                w.push(2.0 * weights[i] * weights[j] * (1.0 - u));
            }
        }
        TriangleRule { points, weights: w }
    }

    /// High-order rule used for data-dependent integrals (source terms,
    /// manufactured solutions).
    pub fn data() -> &'static TriangleRule {
        static RULE: OnceLock<TriangleRule> = OnceLock::new();
        RULE.get_or_init(|| TriangleRule::conical(7))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Quadrature points mapped onto the triangle with the given vertices.
    pub fn map(&self, v: &[Point; 3]) -> impl Iterator<Item = (Point, [f64; 3], f64)> + '_ {
        let v = *v;
        self.points.iter().zip(&self.weights).map(move |(l, &w)| {
            let x = [
                l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
            ];
            (x, *l, w)
        })
    }
}

/// Gauss-Legendre rule on `[0, 1]` with `n` nodes.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, dp)
}

/// Three-point Gauss rule on `[0, 1]`, exact for degree 5.
pub const EDGE_GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Integrates `g` over the segment `[a, b]` with [`EDGE_GAUSS3`]; `g` receives
/// the point and the local coordinate `s ∈ [0, 1]` measured from `a`.
pub fn integrate_edge(a: Point, b: Point, mut g: impl FnMut(Point, f64) -> f64) -> f64 {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let mut sum = 0.0;
    for &(s, w) in &EDGE_GAUSS3 {
        let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        sum += w * g(x, s);
    }
    sum * len
}
