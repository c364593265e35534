use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("triangle {triangle}: vertex index {index} out of range (mesh has {vertices} vertices)")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        vertices: usize,
    },
    #[error("non-conforming mesh: edge ({0}, {1}) shared by {2} triangles")]
    NonConforming(usize, usize, usize),
    #[error("triangle {0} has zero area")]
    ZeroArea(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum FemError {
    #[error("degenerate triangle {0} during assembly")]
    Degenerate(usize),
    #[error("non-finite value at vertex {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("degenerate anchor at vertex {vertex} (|a| = {norm:e})")]
    DegenerateAnchor { vertex: usize, norm: f64 },
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("initial value has |u0| = {norm} at vertex {vertex}")]
    NotUnitLength { vertex: usize, norm: f64 },
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: SolverError,
    },
    #[error("step limit of {0} reached before the stopping rule fired")]
    StepLimit(usize),
    #[error(transparent)]
    Fem(#[from] FemError),
}
