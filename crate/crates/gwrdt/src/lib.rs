//! Rate-distortion machinery for multitype Galton-Watson trees.
//!
//! The crate builds up from validated branching models to a numerically
//! verified lossy coding picture:
//!
//! * [`model`] — alphabets, offspring kernels, root laws, criticality and
//!   irreducibility checks, built-in presets (mtDNA mutation model,
//!   uniform binary).
//! * [`trees`] — canonical breadth-first typed trees, unconditioned and
//!   size-conditioned sampling, exact enumeration of all size-n trees
//!   with probabilities (the brute-force oracle everything else is
//!   checked against).
//! * [`empirical`] — empirical offspring measures, joint mark-pair
//!   measures, the re-indexing bijection between the two pair views, and
//!   shift-invariance defects.
//! * [`spectral`] — the pair matrix over type pairs, Perron-Frobenius
//!   eigenvalue/eigenvector via power iteration, stationary pair laws.
//! * [`ratefn`] — relative entropy, the pair rate functions, log-MGFs at
//!   finite n and in the limit, and Legendre-transform rate-distortion
//!   curves.
//! * [`experiments`] — distortion-ball exponents, trend verification of
//!   the lossy AEP at desk scale, decay-rate estimation, stationarity
//!   diagnostics.
//! * [`report`] / [`cli`] — deterministic CSV/JSON rendering and the
//!   command-line frontend (the only place with side effects).
//!
//! All randomness is driven by explicit seeds with a splittable stream
//! scheme, so every experiment is bit-reproducible regardless of worker
//! count. Entropies and rates are in nats.

pub mod cli;
pub mod empirical;
pub mod experiments;
pub mod model;
pub mod ratefn;
pub mod report;
pub mod spectral;
pub mod trees;

pub use empirical::{
    joint_measure, offspring_measure, reindex, shift_defect, MarkMeasure, PairMeasure, PairView,
    ShiftDefect,
};
pub use model::{
    mtdna_distortion_threshold, mtdna_model, multiplicity, uniform_binary_model, Alphabet,
    GwModel, KernelTable, MeanMatrix, ModelPreset, OffspringString, ValidationReport,
};
// pub use ratefn::{
//    d_average, d_min_n, i_rho, lambda_inf, lambda_n, rate_i1, rate_i2, rd_function, rd_summary,
//    rel_entropy, DistortionTable, Estimate, IRhoOpts, MgfOrder, Rate, RateValue, RdOpts,
//    RdSummary,
//};
pub use spectral::{pair_matrix, perron, stationary_pair, Matrix, Orientation, PairMatrix,
    PerronCore, PerronData};
pub use trees::{
    enumerate_trees, sample_conditioned, sample_tree, tree_prob, vertex_marks, Sampled, Tree,
    VertexMark, WeightedTreeList,
};

/// Crate-wide error type. Most operations are total over their documented
/// domain; these variants cover the contract violations and resource
/// guards that remain.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown symbol: {0:?}")]
    InvalidSymbol(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("kernel row for parent {parent:?} sums to {sum}, expected 1")]
    StochasticityViolation { parent: String, sum: f64 },
    #[error("mean matrix spectral radius {eigenvalue} is not 1 within tolerance")]
    CriticalityViolation { eigenvalue: f64 },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("conditioned sampling failed after {attempts} attempts (acceptance rate ~{acceptance:.3e})")]
    ConditioningFailed { attempts: u64, acceptance: f64 },
    #[error("no tree of size {n} has positive probability under this model")]
    NoSuchSize { n: usize },
    #[error("enumeration budget of {budget} nodes exceeded")]
    CountExceeded { budget: usize },
    #[error("tree sizes differ: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("models use different alphabets")]
    AlphabetMismatch,
    #[error("power iteration did not converge in {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("matrix is identically zero")]
    DegenerateMatrix,
    #[error("pair matrix eigenvalue {eigenvalue} differs from 1: models are not critical")]
    NotCritical { eigenvalue: f64 },
    #[error("optimization failed: {0}")]
    OptFailed(String),
    #[error("invalid interval: ({lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
