//! Problem data: coefficients, boundary data, optional nonlinearity and
//! manufactured solutions, plus the registry of named benchmark problems.

use crate::mesh::{self, BoundaryLabel, Mesh, Point};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;

/// `A(x, ∇u) = α(|∇u|²) ∇u`.
#[derive(Clone)]
pub struct Nonlinearity {
    pub alpha: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

#[derive(Clone)]
pub struct ExactSolution {
    pub value: ScalarField,
    pub gradient: VectorField,
}

/// `−div(A∇u) + b·∇u + cu = f` with `u = g_D` on Γ_D, `A∇u·n = φ_N` on Γ_N
/// and `A∇u·n + αu = φ_R` on Γ_R. Absent fields mean `A = I`, `b = 0`,
/// `c = 0`, zero boundary data.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub diffusion: Option<MatrixField>,
    pub convection: Option<VectorField>,
    pub reaction: Option<ScalarField>,
    pub source: ScalarField,
    pub dirichlet: Option<ScalarField>,
    /// Gradient of an extension of `g_D`; used for its tangential derivative.
    /// Without it, tangential derivatives are taken by central differences.
    pub dirichlet_gradient: Option<VectorField>,
    pub neumann: Option<ScalarField>,
    pub robin: Option<ScalarField>,
    pub robin_coefficient: Option<ScalarField>,
    pub nonlinearity: Option<Nonlinearity>,
    pub exact: Option<ExactSolution>,
    pub initial_mesh: Arc<dyn Fn() -> Mesh + Send + Sync>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("convection", &self.convection.is_some())
            .field("reaction", &self.reaction.is_some())
            .field("nonlinear", &self.nonlinearity.is_some())
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

pub const PROBLEM_NAMES: [&str; 5] = [
    "lshape_singular",
    "square_sine",
    "affine",
    "lshape_convection",
    "lshape_nonlinear",
];

impl ProblemSpec {
    /// Poisson problem `−Δu = f`, homogeneous Dirichlet data.
    pub fn poisson(name: &str, source: ScalarField, initial_mesh: Arc<dyn Fn() -> Mesh + Send + Sync>) -> Self {
        ProblemSpec {
            name: name.to_string(),
            diffusion: None,
            convection: None,
            reaction: None,
            source,
            dirichlet: None,
            dirichlet_gradient: None,
            neumann: None,
            robin: None,
            robin_coefficient: None,
            nonlinearity: None,
            exact: None,
            initial_mesh,
        }
    }

    pub fn by_name(name: &str) -> Option<ProblemSpec> {
        match name {
            "lshape_singular" => Some(lshape_singular()),
            "square_sine" => Some(square_sine()),
            "affine" => Some(affine()),
            "lshape_convection" => Some(lshape_convection()),
            "lshape_nonlinear" => Some(lshape_nonlinear()),
            _ => None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.convection.is_none()
    }

    pub fn diffusion_at(&self, x: Point) -> [[f64; 2]; 2] {
        self.diffusion.as_ref().map_or([[1.0, 0.0], [0.0, 1.0]], |a| a(x))
    }

    pub fn convection_at(&self, x: Point) -> [f64; 2] {
        self.convection.as_ref().map_or([0.0, 0.0], |b| b(x))
    }

    pub fn reaction_at(&self, x: Point) -> f64 {
        self.reaction.as_ref().map_or(0.0, |c| c(x))
    }

    pub fn dirichlet_at(&self, x: Point) -> f64 {
        self.dirichlet.as_ref().map_or(0.0, |g| g(x))
    }

    pub fn neumann_at(&self, x: Point) -> f64 {
        self.neumann.as_ref().map_or(0.0, |g| g(x))
    }

    pub fn robin_at(&self, x: Point) -> f64 {
        self.robin.as_ref().map_or(0.0, |g| g(x))
    }

    pub fn robin_coefficient_at(&self, x: Point) -> f64 {
        self.robin_coefficient.as_ref().map_or(1.0, |a| a(x))
    }

    /// Derivative of `g_D` along the unit tangent `t` at `x`.
    pub fn dirichlet_tangential(&self, x: Point, t: [f64; 2], h: f64) -> f64 {
        if let Some(grad) = &self.dirichlet_gradient {
            let g = grad(x);
            return g[0] * t[0] + g[1] * t[1];
        }
        let Some(g) = &self.dirichlet else { return 0.0 };
        let d = 1e-4 * h;
        (g([x[0] + d * t[0], x[1] + d * t[1]]) - g([x[0] - d * t[0], x[1] - d * t[1]])) / (2.0 * d)
    }
}

/// `(r, φ)` with `φ ∈ [0, 2π)`.
fn polar(x: Point) -> (f64, f64) {
    let r = x[0].hypot(x[1]);
    let mut phi = x[1].atan2(x[0]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    (r, phi)
}

/// `r^{2/3} sin(2φ/3)`, harmonic on the L-shape and zero on both edges at the
/// re-entrant corner.
pub fn corner_singularity(x: Point) -> f64 {
    let (r, phi) = polar(x);
    r.powf(2.0 / 3.0) * (2.0 * phi / 3.0).sin()
}

pub fn corner_singularity_gradient(x: Point) -> [f64; 2] {
    let (r, phi) = polar(x);
    if r == 0.0 {
        return [0.0, 0.0];
    }
    let s = 2.0 / 3.0 * r.powf(-1.0 / 3.0);
    [-s * (phi / 3.0).sin(), s * (phi / 3.0).cos()]
}

/// L-shape mesh after one uniform refinement, so that no triangle has more
/// than one boundary facet.
pub fn lshape_mesh() -> Mesh {
    mesh::lshape().uniform_refine()
}

pub fn unit_square_mesh() -> Mesh {
    mesh::unit_square().uniform_refine()
}

fn lshape_singular() -> ProblemSpec {
    let mut p = ProblemSpec::poisson("lshape_singular", Arc::new(|_| 0.0), Arc::new(lshape_mesh));
    p.dirichlet = Some(Arc::new(corner_singularity));
    p.dirichlet_gradient = Some(Arc::new(corner_singularity_gradient));
    p.exact = Some(ExactSolution {
        value: Arc::new(corner_singularity),
        gradient: Arc::new(corner_singularity_gradient),
    });
    p
}

fn square_sine() -> ProblemSpec {
    let mut p = ProblemSpec::poisson(
        "square_sine",
        Arc::new(|x: Point| 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()),
        Arc::new(unit_square_mesh),
    );
    p.exact = Some(ExactSolution {
        value: Arc::new(|x: Point| (PI * x[0]).sin() * (PI * x[1]).sin()),
        gradient: Arc::new(|x: Point| {
            [
                PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
                PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
            ]
        }),
    });
    p
}

/// `u = 1 + 2x − 3y` on the unit square: Neumann on `y = 0`, Robin on `x = 1`,
/// Dirichlet elsewhere.
fn affine() -> ProblemSpec {
    let u = |x: Point| 1.0 + 2.0 * x[0] - 3.0 * x[1];
    let label = |m: Point| {
        if m[1] == 0.0 {
            BoundaryLabel::Neumann
        } else if m[0] == 1.0 {
            BoundaryLabel::Robin
        } else {
            BoundaryLabel::Dirichlet
        }
    };
    let mut p = ProblemSpec::poisson(
        "affine",
        Arc::new(|_| 0.0),
        Arc::new(move || mesh::unit_square_with(label).uniform_refine()),
    );
    p.dirichlet = Some(Arc::new(u));
    p.dirichlet_gradient = Some(Arc::new(|_| [2.0, -3.0]));
    // Outward normal (0, −1) on the bottom edge, (1, 0) on the right edge.
    p.neumann = Some(Arc::new(|_| 3.0));
    p.robin = Some(Arc::new(move |x| 2.0 + u(x)));
    p.robin_coefficient = Some(Arc::new(|_| 1.0));
    p.exact = Some(ExactSolution {
        value: Arc::new(u),
        gradient: Arc::new(|_| [2.0, -3.0]),
    });
    p
}

/// `−Δu + ∂ₓu = f` with the corner singularity as exact solution.
fn lshape_convection() -> ProblemSpec {
    let mut p = lshape_singular();
    p.name = "lshape_convection".into();
    p.convection = Some(Arc::new(|_| [1.0, 0.0]));
    p.source = Arc::new(|x| corner_singularity_gradient(x)[0]);
    p
}

/// `−div(α(|∇u|²)∇u) = 0` with `α(t) = 1 + e^{−t}` and the corner singularity
/// as Dirichlet data.
fn lshape_nonlinear() -> ProblemSpec {
    let mut p = ProblemSpec::poisson("lshape_nonlinear", Arc::new(|_| 0.0), Arc::new(lshape_mesh));
    p.dirichlet = Some(Arc::new(corner_singularity));
    p.dirichlet_gradient = Some(Arc::new(corner_singularity_gradient));
    p.nonlinearity = Some(Nonlinearity {
        alpha: Arc::new(|t| 1.0 + (-t).exp()),
    });
    p
}
