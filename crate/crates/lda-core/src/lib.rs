//! Spin-glass optimization toolkit built around learning-driven annealing:
//! adaptive feature-Hamiltonian deformation of Ising problems, pluggable
//! classical and quantum-dynamics samplers, alternating local/global search
//! protocols, and instance generation with a plain-text file format.

pub mod error;
pub mod feature;
pub mod generate;
pub mod io;
pub mod model;
pub mod protocols;
pub mod qa;
pub mod samplers;

pub use error::{Error, Result};
pub use feature::{
    build_feature_hamiltonian, build_hfm, lambda_at, monotone_path, select_samples, update_mask,
    BitMask, FeatureSpec, ProtocolParams,
};
pub use model::{
    MinimumCheck, SatisfiedSets, SimilarityReference, SpinGlassInstance, SpinState,
};
pub use protocols::{
    global_search, hybrid_solve, local_search, HybridParams, IterationRecord, SolveResult, Stage,
    Termination,
};
pub use samplers::{
    exact_enumerate, greedy_descent, sa_sample, Enumeration, ExactSampler, QaSampler, SaConfig,
    SaSampler, SaSchedule, Sample, SampleSet, Sampler, SamplerBudget,
};
