//! Naive Bayes and exact Bayes-optimal classification.
//!
//! The naive model factorizes `P(X | Y)` into per-feature terms and needs
//! `O(n)` parameters per class; the exact side stores the full joint
//! `P(X, Y)` over a small enumerated instance space and serves as the
//! oracle the naive model is compared against.

pub mod cli;
pub mod distribution;
pub mod error;
pub mod estimation;
pub mod evaluate;
pub mod exact_bayes;
pub mod independence;
pub mod io;
pub mod naive_bayes;
mod numeric;
pub mod schema;
pub mod synthetic;

pub use distribution::FiniteDistribution;
pub use error::{Error, Result};
pub use estimation::{ClassPrior, ConditionalTable, Gaussian, GaussianParams, SmoothingConfig};
pub use exact_bayes::{JointTable, LossMatrix, ParamKind};
pub use independence::{TripleJoint, Variable};
pub use naive_bayes::{FeatureLikelihood, NaiveBayesModel};
pub use numeric::log_sum_exp;
pub use schema::{
    validate_dataset, FeatureKind, FeatureSchema, FeatureSpec, Instance, LabelSpace,
    LabeledDataset, ValidationReport, Value,
};
pub use synthetic::{FactoredSpec, GeneratorSpec};
