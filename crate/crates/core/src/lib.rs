//! Finite-element solvers for harmonic map gradient flows into the unit
//! sphere `S²`, using projection-free, linearly implicit time stepping.
//!
//! The unit-length constraint is only imposed in linearized form at the mesh
//! vertices: each step solves for an update orthogonal to an anchor field
//! (the previous iterate or an extrapolation of it). The crate provides
//!
//! * [`mesh`]: structured and file-based triangulations of `(-1/2, 1/2)²`,
//! * [`fem`]: P1 stiffness/mass assembly, nodal fields, energies and norms,
//! * [`tangent`]: the null-space solve on the discrete tangent space,
//! * [`schemes`]: implicit Euler, the (θ, μ)-family and BDF2 with step-size
//!   policies and stopping rules,
//! * [`problems`]: benchmark initial data and reference energies,
//! * [`diagnostics`]: constraint violations, convergence rates and discrete
//!   identity verification.
//!
//! All numerical code is generic over [`Real`]; `f64` aliases are provided
//! at the crate root for the common case.

pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod problems;
pub mod scalar;
pub mod schemes;
pub mod tangent;

pub use error::{FemError, MeshError, SchemeError, SolverError};
pub use fem::{Discretization, FemOperators, Metric, NodalField, SparseOperator};
pub use mesh::Mesh;
pub use problems::Problem;
pub use scalar::Real;
pub use schemes::{FlowResult, SchemeConfig, SchemeKind, StepPolicy, StepRecord, StopRule};

pub type Mesh64 = Mesh<f64>;
pub type Mesh32 = Mesh<f32>;
pub type Field64 = NodalField<f64>;
pub type Field32 = NodalField<f32>;
pub type Operator64 = SparseOperator<f64>;
pub type Discretization64 = Discretization<f64>;
pub type Discretization32 = Discretization<f32>;
pub type SchemeConfig64 = SchemeConfig<f64>;
pub type StepRecord64 = StepRecord<f64>;
pub type FlowResult64 = FlowResult<f64>;
