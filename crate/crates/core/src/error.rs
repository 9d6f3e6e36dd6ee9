use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    #[error("saturation {0} outside [0, 1]")]
    SaturationOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate simplex")]
    Degenerate,
    #[error("coincident circumcenters on facet {0}")]
    ZeroDistance(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FluxError {
    #[error("no intermediate state S* found (h(0) = {h0}, h(1) = {h1})")]
    NoIntermediateState { h0: f64, h1: f64 },
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("motion would invert cells {0:?}")]
    WouldDegenerate(Vec<usize>),
    #[error("irreparable geometry: {0}")]
    Irreparable(String),
    #[error("connectivity mismatch: {0}")]
    ConnectivityMismatch(String),
    #[error("point is not on the interface")]
    OffInterface,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("linear solve failed: {0}")]
    Linear(String),
    #[error("time step rejected after {halvings} halvings at t = {time}")]
    StepAborted { halvings: usize, time: f64 },
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown case id {0} (expected 1, 2 or 3)")]
    UnknownCase(u32),
    #[error("invalid scenario field `{field}`: {message}")]
    InvalidField { field: String, message: String },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("time mismatch: {0} vs {1}")]
    TimeMismatch(f64, f64),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("format: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
