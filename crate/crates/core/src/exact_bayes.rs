//! Explicit joint distributions `P(X, Y)` over small all-categorical
//! instance spaces, with exact Bayes-rule posteriors and the minimum-error
//! and minimum-risk decision rules.
//!
//! Cells are laid out row-major over the features (the last feature varies
//! fastest) with the class index innermost: `cell = instance_index · m + k`.

use serde::{Deserialize, Serialize};

use crate::distribution::FiniteDistribution;
use crate::error::{Error, Result};
use crate::numeric::{argmax, argmin, compensated_sum};
use crate::schema::{FeatureSchema, Instance, LabelSpace, LabeledDataset, Value};

/// Largest instance space (product of arities) a joint table may enumerate.
pub const MAX_INSTANCES: u64 = 1 << 20;

/// Number of enumerated instances for an all-categorical schema, checked
/// against [`MAX_INSTANCES`].
pub fn instance_space_size(schema: &FeatureSchema) -> Result<usize> {
    let mut size: u128 = 1;
    for spec in schema.features() {
        let arity = spec.arity().ok_or_else(|| Error::RealFeatureInJoint {
            feature: spec.name().to_string(),
        })?;
        size = size.saturating_mul(arity as u128);
    }
    if size > MAX_INSTANCES as u128 {
        return Err(Error::InstanceSpaceTooLarge {
            size,
            bound: MAX_INSTANCES,
        });
    }
    Ok(size as usize)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    schema: FeatureSchema,
    label_space: LabelSpace,
    arities: Vec<usize>,
    instances: usize,
    mass: FiniteDistribution,
}

impl JointTable {
    /// `mass` is laid out as described in the module docs.
    pub fn new(schema: FeatureSchema, label_space: LabelSpace, mass: Vec<f64>) -> Result<Self> {
        let instances = instance_space_size(&schema)?;
        let expected = instances * label_space.len();
        if mass.len() != expected {
            return Err(Error::Dimension(format!(
                "joint table needs {expected} cells, got {}",
                mass.len()
            )));
        }
        let arities = arities_of(&schema);
        Ok(JointTable {
            schema,
            label_space,
            arities,
            instances,
            mass: FiniteDistribution::new(mass)?,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn instance_count(&self) -> usize {
        self.instances
    }

    pub fn masses(&self) -> &[f64] {
        self.mass.probs()
    }

    pub fn mass(&self, instance_index: usize, class: usize) -> f64 {
        self.mass
            .get(instance_index * self.label_space.len() + class)
    }

    /// Masses `P(x, y_k)` for every class at one instance index.
    pub fn class_masses(&self, instance_index: usize) -> &[f64] {
        let m = self.label_space.len();
        &self.mass.probs()[instance_index * m..(instance_index + 1) * m]
    }

    pub fn instance_index(&self, instance: &Instance) -> Result<usize> {
        self.schema.validate_instance(instance)?;
        Ok(flat_index(&self.arities, instance))
    }

    pub fn instance_at(&self, mut index: usize) -> Instance {
        let mut values = vec![Value::Category(0); self.arities.len()];
        for (slot, arity) in values.iter_mut().zip(&self.arities).rev() {
            *slot = Value::Category(index % arity);
            index /= arity;
        }
        Instance::new(values)
    }

    /// Every instance of the space in index order.
    pub fn instances(&self) -> impl Iterator<Item = Instance> + '_ {
        (0..self.instances).map(|i| self.instance_at(i))
    }

    /// `P(x) = Σ_k P(x, y_k)`.
    pub fn marginal(&self, instance: &Instance) -> Result<f64> {
        let idx = self.instance_index(instance)?;
        Ok(compensated_sum(self.class_masses(idx).iter().copied()))
    }

    /// `P(y_k | x) = P(x, y_k) / Σ_j P(x, y_j)`.
    pub fn exact_posterior(&self, instance: &Instance) -> Result<FiniteDistribution> {
        let idx = self.instance_index(instance)?;
        posterior_at(self.class_masses(idx))
    }

    /// Maximum-posterior class, lowest index on ties.
    pub fn classify_min_error(&self, instance: &Instance) -> Result<usize> {
        let posterior = self.exact_posterior(instance)?;
        Ok(argmax(posterior.probs()).expect("non-empty posterior"))
    }

    /// Action with minimum conditional risk, lowest index on ties.
    pub fn classify_min_risk(&self, instance: &Instance, loss: &LossMatrix) -> Result<usize> {
        let posterior = self.exact_posterior(instance)?;
        decide_min_risk(&posterior, loss)
    }

    /// `Σ_x P(x)·(1 − max_k P(y_k | x))`, the smallest error any classifier
    /// can achieve on this distribution.
    pub fn bayes_error(&self) -> f64 {
        let terms = (0..self.instances).map(|i| {
            let cm = self.class_masses(i);
            let marginal = compensated_sum(cm.iter().copied());
            let best = cm.iter().copied().fold(0.0, f64::max);
            marginal - best
        });
        compensated_sum(terms).clamp(0.0, 1.0)
    }

    /// Error rate of an arbitrary deterministic decision function on this
    /// distribution: `Σ_x Σ_{k ≠ h(x)} P(x, y_k)`.
    pub fn error_of<F: Fn(usize) -> usize>(&self, decide: F) -> f64 {
        let terms = (0..self.instances).flat_map(|i| {
            let h = decide(i);
            self.class_masses(i)
                .iter()
                .enumerate()
                .filter(move |(k, _)| *k != h)
                .map(|(_, p)| *p)
        });
        compensated_sum(terms)
    }
}

fn posterior_at(class_masses: &[f64]) -> Result<FiniteDistribution> {
    let total = compensated_sum(class_masses.iter().copied());
    if total <= 0.0 {
        return Err(Error::ZeroMarginal);
    }
    FiniteDistribution::new(class_masses.iter().map(|p| p / total).collect())
}

fn arities_of(schema: &FeatureSchema) -> Vec<usize> {
    schema
        .features()
        .iter()
        .map(|f| f.arity().expect("checked categorical"))
        .collect()
}

/// Mixed-radix index of a validated all-categorical instance.
fn flat_index(arities: &[usize], instance: &Instance) -> usize {
    instance
        .values()
        .iter()
        .zip(arities)
        .fold(0, |index, (value, arity)| {
            index * arity + value.category().expect("validated categorical")
        })
}

/// Cell counts `#D{X = x ∧ Y = y}` in joint-table layout.
pub fn joint_counts(dataset: &LabeledDataset) -> Result<Vec<u64>> {
    let schema = dataset.schema();
    let instances = instance_space_size(schema)?;
    let arities = arities_of(schema);
    let m = dataset.label_space().len();
    let mut counts = vec![0u64; instances * m];
    for (row, (x, y)) in dataset.rows().iter().enumerate() {
        schema
            .validate_instance(x)
            .map_err(|e| Error::InstanceMismatch(format!("row {row}: {e}")))?;
        if *y >= m {
            return Err(Error::InstanceMismatch(format!(
                "row {row}: label {y} out of range"
            )));
        }
        counts[flat_index(&arities, x) * m + y] += 1;
    }
    Ok(counts)
}

/// Unsmoothed maximum-likelihood joint: `mass(x, y) = #D{x, y} / |D|`.
pub fn estimate_joint(dataset: &LabeledDataset) -> Result<JointTable> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let counts = joint_counts(dataset)?;
    let n = dataset.len() as f64;
    JointTable::new(
        dataset.schema().clone(),
        dataset.label_space().clone(),
        counts.iter().map(|&c| c as f64 / n).collect(),
    )
}

/// `λ(α_i | ω_j)`: loss of taking action `i` when the true class is `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct LossMatrix {
    entries: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for LossMatrix {
    type Error = Error;

    fn try_from(entries: Vec<Vec<f64>>) -> Result<Self> {
        LossMatrix::new(entries)
    }
}

impl From<LossMatrix> for Vec<Vec<f64>> {
    fn from(l: LossMatrix) -> Self {
        l.entries
    }
}

impl LossMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let m = entries.len();
        if m == 0 {
            return Err(Error::Dimension("loss matrix is empty".into()));
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Dimension(format!(
                    "loss matrix row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "loss entries must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(LossMatrix { entries })
    }

    /// 0 on the diagonal, 1 elsewhere.
    pub fn zero_one(m: usize) -> Self {
        LossMatrix {
            entries: (0..m)
                .map(|i| (0..m).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, action: usize, class: usize) -> f64 {
        self.entries[action][class]
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }
}

/// `R(α_i | x) = Σ_j λ(α_i | ω_j) · P(ω_j | x)`.
pub fn conditional_risk(
    posterior: &FiniteDistribution,
    loss: &LossMatrix,
    action: usize,
) -> Result<f64> {
    if loss.len() != posterior.len() {
        return Err(Error::Dimension(format!(
            "loss matrix is {0}×{0}, posterior has {1} classes",
            loss.len(),
            posterior.len()
        )));
    }
    if action >= loss.len() {
        return Err(Error::Dimension(format!("action {action} out of range")));
    }
    Ok(compensated_sum(
        loss.entries[action]
            .iter()
            .zip(posterior.probs())
            .map(|(l, p)| l * p),
    ))
}

/// Minimum conditional risk action for a posterior, lowest index on ties.
pub fn decide_min_risk(posterior: &FiniteDistribution, loss: &LossMatrix) -> Result<usize> {
    let risks = (0..loss.len())
        .map(|i| conditional_risk(posterior, loss, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmin(&risks).expect("non-empty loss matrix"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    FullJoint,
    Naive,
}

/// Independent parameters needed to specify `P(X | Y)` for `n` boolean
/// attributes and a boolean class: `2(2ⁿ − 1)` for the full joint, `2n`
/// under conditional independence.
pub fn param_count(kind: ParamKind, n: u32) -> Result<u64> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "attribute count must be >= 1".into(),
        ));
    }
    let overflow = || Error::InvalidArgument(format!("parameter count overflows for n = {n}"));
    match kind {
        ParamKind::FullJoint => 1u64
            .checked_shl(n)
            .filter(|_| n < 64)
            .and_then(|p| (p - 1).checked_mul(2))
            .ok_or_else(overflow),
        ParamKind::Naive => 2u64.checked_mul(n as u64).ok_or_else(overflow),
    }
}
