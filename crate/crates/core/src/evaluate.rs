//! Scoring classifiers on labeled data.

use serde::Serialize;

use crate::distribution::FiniteDistribution;
use crate::error::{Error, Result};
use crate::exact_bayes::{decide_min_risk, JointTable, LossMatrix};
use crate::io::Model;
use crate::naive_bayes::NaiveBayesModel;
use crate::numeric::compensated_sum;
use crate::schema::{FeatureSchema, Instance, LabelSpace, LabeledDataset};

/// Anything that can produce a posterior over a fixed label space.
pub trait Classifier {
    fn schema(&self) -> &FeatureSchema;
    fn label_space(&self) -> &LabelSpace;
    fn posterior(&self, instance: &Instance) -> Result<FiniteDistribution>;
    fn classify(&self, instance: &Instance) -> Result<usize>;

    /// Minimum-error decision, or minimum conditional risk under `loss`.
    fn decide(&self, instance: &Instance, loss: Option<&LossMatrix>) -> Result<usize> {
        match loss {
            None => self.classify(instance),
            Some(l) => decide_min_risk(&self.posterior(instance)?, l),
        }
    }
}

impl Classifier for NaiveBayesModel {
    fn schema(&self) -> &FeatureSchema {
        NaiveBayesModel::schema(self)
    }
    fn label_space(&self) -> &LabelSpace {
        NaiveBayesModel::label_space(self)
    }
    fn posterior(&self, instance: &Instance) -> Result<FiniteDistribution> {
        NaiveBayesModel::posterior(self, instance)
    }
    fn classify(&self, instance: &Instance) -> Result<usize> {
        NaiveBayesModel::classify(self, instance)
    }
}

impl Classifier for JointTable {
    fn schema(&self) -> &FeatureSchema {
        JointTable::schema(self)
    }
    fn label_space(&self) -> &LabelSpace {
        JointTable::label_space(self)
    }
    fn posterior(&self, instance: &Instance) -> Result<FiniteDistribution> {
        self.exact_posterior(instance)
    }
    fn classify(&self, instance: &Instance) -> Result<usize> {
        self.classify_min_error(instance)
    }
}

impl Classifier for Model {
    fn schema(&self) -> &FeatureSchema {
        match self {
            Model::NaiveBayes(m) => Classifier::schema(m),
            Model::Joint(j) => Classifier::schema(j),
        }
    }
    fn label_space(&self) -> &LabelSpace {
        match self {
            Model::NaiveBayes(m) => Classifier::label_space(m),
            Model::Joint(j) => Classifier::label_space(j),
        }
    }
    fn posterior(&self, instance: &Instance) -> Result<FiniteDistribution> {
        match self {
            Model::NaiveBayes(m) => Classifier::posterior(m, instance),
            Model::Joint(j) => Classifier::posterior(j, instance),
        }
    }
    fn classify(&self, instance: &Instance) -> Result<usize> {
        match self {
            Model::NaiveBayes(m) => Classifier::classify(m, instance),
            Model::Joint(j) => Classifier::classify(j, instance),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub labels: Vec<String>,
    pub total: usize,
    pub evaluated: usize,
    pub undecidable: usize,
    /// Fraction of decidable rows classified correctly; 0 when none were decidable.
    pub accuracy: f64,
    pub misclassification_rate: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_risk: Option<f64>,
}

fn check_compatible<C: Classifier + ?Sized>(model: &C, dataset: &LabeledDataset) -> Result<()> {
    if model.schema() != dataset.schema() {
        return Err(Error::Schema(
            "dataset schema does not match the model".into(),
        ));
    }
    if model.label_space() != dataset.label_space() {
        return Err(Error::Schema(
            "dataset labels do not match the model".into(),
        ));
    }
    Ok(())
}

/// Decides every row. Undecidable rows yield `None`; other errors abort.
pub fn decisions<C: Classifier + ?Sized>(
    model: &C,
    dataset: &LabeledDataset,
    loss: Option<&LossMatrix>,
) -> Result<Vec<Option<usize>>> {
    check_compatible(model, dataset)?;
    if let Some(l) = loss {
        if l.len() != model.label_space().len() {
            return Err(Error::Dimension(format!(
                "loss matrix is {}x{}, model has {} classes",
                l.len(),
                l.len(),
                model.label_space().len()
            )));
        }
    }
    dataset
        .rows()
        .iter()
        .map(|(x, _)| match model.decide(x, loss) {
            Ok(k) => Ok(Some(k)),
            Err(e) if e.is_undecidable() => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

pub fn evaluate<C: Classifier + ?Sized>(
    model: &C,
    dataset: &LabeledDataset,
    loss: Option<&LossMatrix>,
) -> Result<EvaluationReport> {
    let predicted = decisions(model, dataset, loss)?;
    let m = model.label_space().len();
    let mut confusion = vec![vec![0u64; m]; m];
    let mut losses = Vec::new();
    let mut correct = 0usize;
    let mut evaluated = 0usize;
    for ((_, y), p) in dataset.rows().iter().zip(&predicted) {
        let Some(k) = *p else { continue };
        evaluated += 1;
        confusion[*y][k] += 1;
        if k == *y {
            correct += 1;
        }
        if let Some(l) = loss {
            losses.push(l.get(k, *y));
        }
    }
    let accuracy = if evaluated == 0 {
        0.0
    } else {
        correct as f64 / evaluated as f64
    };
    let empirical_risk = loss.map(|_| {
        if evaluated == 0 {
            0.0
        } else {
            compensated_sum(losses) / evaluated as f64
        }
    });
    Ok(EvaluationReport {
        labels: model.label_space().labels().to_vec(),
        total: dataset.len(),
        evaluated,
        undecidable: dataset.len() - evaluated,
        accuracy,
        misclassification_rate: if evaluated == 0 { 0.0 } else { 1.0 - accuracy },
        confusion,
        empirical_risk,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowComparison {
    pub row: usize,
    pub naive: Option<String>,
    pub joint: Option<String>,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub total: usize,
    /// Rows where both models reached a decision.
    pub compared: usize,
    /// Fraction of compared rows where the decisions match.
    pub agreement_rate: f64,
    pub naive_accuracy: f64,
    pub joint_accuracy: f64,
    pub naive_undecidable: usize,
    pub joint_undecidable: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bayes_error: Option<f64>,
    pub rows: Vec<RowComparison>,
}

/// Runs both models over the same rows. `naive_data` and `joint_data` hold
/// the same rows encoded against each model's schema.
pub fn compare(
    naive: &dyn Classifier,
    naive_data: &LabeledDataset,
    joint: &dyn Classifier,
    joint_data: &LabeledDataset,
    bayes_error: Option<f64>,
) -> Result<ComparisonReport> {
    if naive_data.len() != joint_data.len() {
        return Err(Error::Dimension(
            "compared datasets differ in length".into(),
        ));
    }
    let a = decisions(naive, naive_data, None)?;
    let b = decisions(joint, joint_data, None)?;
    let ra = evaluate(naive, naive_data, None)?;
    let rb = evaluate(joint, joint_data, None)?;
    let labels = naive.label_space();
    let mut compared = 0usize;
    let mut agreed = 0usize;
    let rows = a
        .iter()
        .zip(&b)
        .enumerate()
        .map(|(row, (p, q))| {
            let agree = matches!((p, q), (Some(x), Some(y)) if x == y);
            if p.is_some() && q.is_some() {
                compared += 1;
                agreed += usize::from(agree);
            }
            RowComparison {
                row,
                naive: p.map(|k| labels.name(k).to_string()),
                joint: q.map(|k| joint.label_space().name(k).to_string()),
                agree,
            }
        })
        .collect();
    Ok(ComparisonReport {
        total: naive_data.len(),
        compared,
        agreement_rate: if compared == 0 {
            0.0
        } else {
            agreed as f64 / compared as f64
        },
        naive_accuracy: ra.accuracy,
        joint_accuracy: rb.accuracy,
        naive_undecidable: ra.undecidable,
        joint_undecidable: rb.undecidable,
        bayes_error,
        rows,
    })
}
