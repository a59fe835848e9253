//! Naive Bayes: class prior times a product of per-feature likelihoods.
//!
//! All inference runs in log space. For class `k` the joint score is
//! `ln P(y_k) + Σ_i ln P(x_i | y_k)`; the posterior is the softmax of those
//! scores, and classification takes the argmax of the raw scores directly,
//! since the normalizing denominator is shared by every class.

use serde::{Deserialize, Serialize};

use crate::distribution::FiniteDistribution;
use crate::error::{Error, Result};
use crate::estimation::{
    estimate_categorical_conditionals, estimate_gaussian, estimate_prior, ClassPrior,
    ConditionalTable, Gaussian, GaussianParams, SmoothingConfig,
};
use crate::numeric::{argmax, normalize_log_scores};
use crate::schema::{FeatureSchema, Instance, LabelSpace, LabeledDataset, Value};

/// Likelihood model of one feature, one entry per class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureLikelihood {
    Categorical { rows: Vec<FiniteDistribution> },
    Gaussian { params: Vec<Gaussian> },
}

impl FeatureLikelihood {
    fn log_likelihood(&self, value: &Value, class: usize) -> Option<f64> {
        match (self, value) {
            (FeatureLikelihood::Categorical { rows }, Value::Category(v)) => {
                rows.get(class)?.probs().get(*v).map(|p| p.ln())
            }
            (FeatureLikelihood::Gaussian { params }, Value::Real(x)) => {
                params.get(class).map(|g| g.log_density(*x))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NaiveBayesModel {
    schema: FeatureSchema,
    label_space: LabelSpace,
    prior: ClassPrior,
    likelihoods: Vec<FeatureLikelihood>,
    smoothing: SmoothingConfig,
}

impl NaiveBayesModel {
    /// Assembles a model from known parameters, checking that every feature
    /// has a kind-matched likelihood with one entry per class.
    pub fn from_parts(
        schema: FeatureSchema,
        label_space: LabelSpace,
        prior: ClassPrior,
        likelihoods: Vec<FeatureLikelihood>,
        smoothing: SmoothingConfig,
    ) -> Result<Self> {
        let m = label_space.len();
        if prior.len() != m {
            return Err(Error::Dimension(format!(
                "prior has {} entries for {m} labels",
                prior.len()
            )));
        }
        if likelihoods.len() != schema.len() {
            return Err(Error::Dimension(format!(
                "{} likelihood models for {} features",
                likelihoods.len(),
                schema.len()
            )));
        }
        for (i, (spec, lik)) in schema.features().iter().zip(&likelihoods).enumerate() {
            match (spec.arity(), lik) {
                (Some(arity), FeatureLikelihood::Categorical { rows }) => {
                    if rows.len() != m || rows.iter().any(|r| r.len() != arity) {
                        return Err(Error::Dimension(format!(
                            "feature {:?}: expected {m} rows of {arity} probabilities",
                            spec.name()
                        )));
                    }
                }
                (None, FeatureLikelihood::Gaussian { params }) => {
                    if params.len() != m {
                        return Err(Error::Dimension(format!(
                            "feature {:?}: expected {m} gaussians, got {}",
                            spec.name(),
                            params.len()
                        )));
                    }
                    for g in params {
                        Gaussian::new(g.mean, g.variance)?;
                    }
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "feature {i} ({:?}): likelihood kind does not match feature kind",
                        spec.name()
                    )))
                }
            }
        }
        Ok(NaiveBayesModel {
            schema,
            label_space,
            prior,
            likelihoods,
            smoothing,
        })
    }

    /// Combines separately estimated categorical and Gaussian parameters.
    pub fn from_tables(
        schema: FeatureSchema,
        label_space: LabelSpace,
        prior: ClassPrior,
        conditionals: ConditionalTable,
        gaussians: GaussianParams,
        smoothing: SmoothingConfig,
    ) -> Result<Self> {
        conditionals.check_shape(&schema, &label_space)?;
        let likelihoods = conditionals
            .into_rows()
            .into_iter()
            .zip(gaussians.into_params())
            .enumerate()
            .map(|(i, pair)| match pair {
                (Some(rows), None) => Ok(FeatureLikelihood::Categorical { rows }),
                (None, Some(params)) => Ok(FeatureLikelihood::Gaussian { params }),
                _ => Err(Error::Schema(format!(
                    "feature {i} needs exactly one of a conditional table or gaussian parameters"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(schema, label_space, prior, likelihoods, smoothing)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn prior(&self) -> &ClassPrior {
        &self.prior
    }

    pub fn likelihoods(&self) -> &[FeatureLikelihood] {
        &self.likelihoods
    }

    pub fn smoothing(&self) -> SmoothingConfig {
        self.smoothing
    }

    /// The categorical part of the model, `None` if any feature is real.
    pub fn conditional_table(&self) -> Option<ConditionalTable> {
        let rows = self
            .likelihoods
            .iter()
            .map(|l| match l {
                FeatureLikelihood::Categorical { rows } => Some(Some(rows.clone())),
                FeatureLikelihood::Gaussian { .. } => None,
            })
            .collect::<Option<Vec<_>>>()?;
        ConditionalTable::new(&self.schema, &self.label_space, rows).ok()
    }

    /// `ln P(Y = y_k) + Σ_i ln P(x_i | Y = y_k)`; `-inf` when any factor is zero.
    pub fn joint_log_score(&self, instance: &Instance, class: usize) -> Result<f64> {
        self.schema.validate_instance(instance)?;
        if class >= self.label_space.len() {
            return Err(Error::InvalidArgument(format!(
                "class index {class} out of range for {} labels",
                self.label_space.len()
            )));
        }
        Ok(self.score_unchecked(instance, class))
    }

    fn score_unchecked(&self, instance: &Instance, class: usize) -> f64 {
        let mut score = self.prior.get(class).ln();
        for (lik, value) in self.likelihoods.iter().zip(instance.values()) {
            // validated instances always have a matching likelihood
            score += lik
                .log_likelihood(value, class)
                .unwrap_or(f64::NEG_INFINITY);
        }
        score
    }

    /// Joint log scores for every class, in label order.
    pub fn log_scores(&self, instance: &Instance) -> Result<Vec<f64>> {
        self.schema.validate_instance(instance)?;
        Ok((0..self.label_space.len())
            .map(|k| self.score_unchecked(instance, k))
            .collect())
    }

    /// `P(Y = y_k | x)` for every class.
    pub fn posterior(&self, instance: &Instance) -> Result<FiniteDistribution> {
        let scores = self.log_scores(instance)?;
        let probs = normalize_log_scores(&scores).ok_or(Error::ZeroProbability)?;
        FiniteDistribution::new(probs)
    }

    /// Argmax of the unnormalized scores, lowest label index on ties.
    pub fn classify(&self, instance: &Instance) -> Result<usize> {
        let scores = self.log_scores(instance)?;
        if scores.iter().all(|s| *s == f64::NEG_INFINITY) {
            return Err(Error::ZeroProbability);
        }
        Ok(argmax(&scores).expect("label space is non-empty"))
    }
}

/// Estimates prior, categorical conditionals and Gaussian parameters from `dataset`.
pub fn train(dataset: &LabeledDataset, config: SmoothingConfig) -> Result<NaiveBayesModel> {
    let report = crate::schema::validate_dataset(dataset);
    if let Some(v) = report.violations.first() {
        return Err(Error::InstanceMismatch(v.to_string()));
    }
    let config = SmoothingConfig::new(config.alpha, config.alpha_prior)?;
    let prior = estimate_prior(dataset, config.alpha_prior)?;
    let conditionals = estimate_categorical_conditionals(dataset, config.alpha)?;
    let gaussians = estimate_gaussian(dataset)?;
    NaiveBayesModel::from_tables(
        dataset.schema().clone(),
        dataset.label_space().clone(),
        prior,
        conditionals,
        gaussians,
        config,
    )
}
