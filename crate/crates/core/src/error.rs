use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh has no triangles")]
    Empty,
    #[error("vertex index {0} out of range")]
    VertexOutOfRange(u32),
    #[error("element {0} out of range")]
    ElementOutOfRange(u32),
    #[error("triangle {0} is degenerate (zero area)")]
    Degenerate(usize),
    #[error("non-conforming triangulation: {0}")]
    NonConforming(String),
    #[error("boundary facet ({0}, {1}) carries no label")]
    UnlabeledBoundary(u32, u32),
    #[error("facet ({0}, {1}) is labeled but is not a boundary facet")]
    LabeledInterior(u32, u32),
    #[error("meshes do not descend from the same initial mesh")]
    DifferentInitialMesh,
    #[error("mesh mismatch: {0}")]
    Mismatch(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("element {0} has a singular Jacobian")]
    SingularJacobian(usize),
    #[error("nonlinear problem requires a linearization point")]
    MissingLinearization,
    #[error("problem `{0}` has no manufactured exact solution")]
    NoExactSolution(String),
    #[error("Dirichlet vertex {0} has no adjacent Dirichlet facet")]
    NoDirichletFacet(u32),
    #[error("bilinear form is not elliptic: non-positive diagonal in row {0}")]
    NotElliptic(usize),
    #[error("function does not belong to this mesh: {0}")]
    MeshMismatch(String),
    #[error("problem has no free degrees of freedom")]
    NoFreeDofs,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("solver reached {iterations} iterations with relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("Krylov breakdown after {0} iterations")]
    Breakdown(usize),
    #[error("Picard iteration is not contracting (increment grew {0} times in a row)")]
    NonContraction(usize),
    #[error("inexact parameter must lie in (0, 1), got {0}")]
    InvalidVartheta(f64),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("function does not belong to this mesh: {0}")]
    MeshMismatch(String),
    #[error("element {0} has more than one boundary facet")]
    TooManyBoundaryFacets(u32),
    #[error("interior facet {0} has a missing neighbor")]
    MissingNeighbor(u32),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkError {
    #[error("bulk parameter must lie in (0, 1], got {0}")]
    InvalidTheta(f64),
    #[error("marked index {0} does not belong to the indicator set")]
    DanglingIndex(usize),
    #[error("brute-force oracle supports at most {max} values, got {got}")]
    TooLarge { max: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("refinement of a nonempty marked set produced no new elements at level {0}")]
    NoProgress(usize),
    #[error("at least {needed} levels are required, got {got}")]
    InsufficientLevels { needed: usize, got: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Mark(#[from] MarkError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
