use thiserror::Error;

/// Node index `(i, j)` on a [`GridChart`](crate::calculus::GridChart): `i` along `u`, `j` along `v`.
pub type Node = (usize, usize);

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("chart too small: {nu}x{nv} samples (need at least 5x5)")]
    ChartTooSmall { nu: usize, nv: usize },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("ODE integration failed at u = {at}: right-hand side is not finite")]
    Integration { at: f64 },

    #[error("quadrature did not reach tolerance {tol:e} on [{a}, {b}]")]
    Accuracy { a: f64, b: f64, tol: f64 },

    #[error("1-form is not closed: residual {residual:e} exceeds {tol:e}")]
    Integrability { residual: f64, tol: f64 },

    #[error("degenerate immersion at node {node:?}: |X_u x X_v| = {norm:e}")]
    Degenerate { node: Node, norm: f64 },

    #[error("singular denominator |g-p|^2-|1+conj(g)p|^2 at node {node:?}")]
    SingularDenominator { node: Node },

    #[error("degenerate quadratic (alpha = 0) at node {node:?}")]
    DegenerateQuadratic { node: Node },

    #[error("Gauss map is singular near node {node:?}: |g_z|^2 - |g_zbar|^2 changes sign")]
    SingularGaussMap { node: Node },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("classification conflict: {0}")]
    ClassificationConflict(String),

    #[error("Gauss map is constant or singular: {0}")]
    ConstantGaussMap(String),

    #[error("Gauss-map data is inconsistent: {0}")]
    InconsistentGaussMap(String),

    #[error("assembled map is not an immersion at node {node:?}")]
    Assembly { node: Node },

    #[error("field shape mismatch: {0}")]
    Shape(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
