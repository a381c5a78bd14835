//! Mesh-free eigensolver for linear differential eigenvalue problems.
//!
//! Eigenfunctions are expanded in a frozen random cosine basis, which makes
//! the physics-informed loss biconvex in the eigenvalue parameter and the
//! output weights. Alternating exact least-squares updates then converge
//! monotonically, and a population of such strands with orthogonality
//! deflation discovers several eigenpairs.

pub mod assembly;
pub mod error;
pub mod features;
pub mod lstsq;
pub mod oracles;
pub mod population;
pub mod problems;
pub mod solver;

pub use assembly::{assemble, LossSystem, LossWeights, PriorMode};
pub use error::{Error, Result};
pub use features::{FeatureBasis, MultiIndex, MAX_ORDER};
pub use oracles::{OracleSpectrum, OracleValue, Source};
pub use population::{
    cluster_estimates, run_population, AcceptedMode, BasisConfig, CollocationConfig, PopulationConfig, SpectrumReport,
};
pub use problems::{
    catalog, sample_collocation, BoundaryCondition, CollocationSet, Domain, LinearOperator, ProblemName,
    ProblemSpec, Reference, ReferencePolicy,
};
pub use solver::{gd_baseline, run_acs, update_mu, update_weights, AcsConfig, EigenpairEstimate, GdConfig, Status};
