//! Weighted-sum scalarisation for the bi-objective quadratic assignment
//! problem.
//!
//! The crate covers the whole pipeline: instance IO ([`instance`]), the
//! one-hot constrained quadratic model and objective evaluation
//! ([`encoding`]), classical subproblem solvers ([`solver`]), the uniform
//! and adaptive weight schedules ([`scalarisation`]), non-dominated
//! archiving ([`archive`]), hypervolume and significance testing
//! ([`metrics`]) and a repeated-run experiment harness ([`harness`]).

pub mod archive;
pub mod encoding;
pub mod error;
pub mod harness;
pub mod instance;
pub mod metrics;
pub mod scalarisation;
pub mod solver;

pub use archive::{dominates, Archive, InsertOutcome};
pub use encoding::{
    build_cqm, cqm_energy, decode, encode, evaluate_objectives, scalarised_value, Assignment,
    BinaryAssignment, CqmModel, ObjectivePair, WeightVector,
};
pub use error::{ConstraintKind, Error, Result};
pub use instance::{synth_instance, BiQapInstance, MatrixOrder, ReferenceFront};
pub use metrics::{hypervolume_2d, reference_point, summarize, t_test, ReferencePoint};
pub use scalarisation::{MethodKind, ScalarisationPlan};
pub use solver::{Backend, Budget, EvaluatedSolution, Exhaustive, SimulatedAnnealing, SolverRequest};
