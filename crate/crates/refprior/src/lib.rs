//! Learning reference-prior approximations.
//!
//! Two stochastic methods recover objective (Jeffreys) priors for
//! one-parameter likelihood families: maximizing a variational lower bound on
//! the mutual information between parameter and data, and amortized Stein
//! variational gradient descent against the same information objective. Two
//! literature estimators (a numerical expected-log-posterior construction and
//! an iterative MCMC scheme) serve as baselines, and exact Kolmogorov-Smirnov
//! two-sample tests validate every method against the known closed-form
//! targets.

pub mod baselines;
pub mod batch;
pub mod config;
pub mod csvio;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod grid;
pub mod infobound;
pub mod models;
pub mod optim;
pub mod priors;
pub mod rng;
pub mod svgd;
pub mod trace;

pub use batch::{NoiseBatch, SampleBatch};
pub use error::{Error, Result};
pub use models::{Dataset, LikelihoodModel, ModelKind};
pub use priors::{ImplicitSampler, ParametricFamily, ParametricPrior, Prior, SamplerArch};
