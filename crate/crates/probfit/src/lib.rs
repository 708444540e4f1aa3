//! Probabilistic modeling with additive sufficient statistics.
//!
//! Every model here trains through the same protocol: `summarize` turns a
//! batch of weighted data into additive statistics, statistics from
//! different batches `merge` by elementwise addition, and
//! `from_summaries` turns accumulated statistics into a parameter
//! update. Out-of-core, minibatch, semi-supervised, and data-parallel
//! training all fall out of that one mechanism.
//!
//! Model inventory: basic distributions, k-means, naive Bayes and Bayes
//! classifiers (supervised and semi-supervised), general mixture models,
//! hidden Markov models, Markov chains, and discrete Bayesian networks
//! with Chow-Liu structure learning.

pub mod bayesnet;
pub mod classifiers;
pub mod data;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod hmm;
pub mod kmeans;
pub mod markovchain;
pub mod math;
pub mod mixture;
pub mod serialize;
pub mod stats;
pub mod synthetic;

pub use data::{BatchSource, CsvSchema, CsvSource, DataBatch, MemorySource, Sequence,
    SequenceFileSource, SequenceMemorySource};
pub use distributions::{
    Categorical, CovarianceMode, Distribution, Exponential, FamilySpec, MultivariateGaussian,
    Poisson, UnivariateGaussian,
};
pub use engine::{fit, parallel_summarize, BatchSize, BatchesPerEpoch, FitConfig, FitReport,
    Summarize, Trainable, TrainingMode};
pub use error::{Error, Result};
pub use stats::SuffStats;
