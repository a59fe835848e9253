//! Feature space, label space, instances and labeled datasets.
//!
//! Booleans are two-valued categoricals with values `["false", "true"]`, so
//! there is one code path for every discrete attribute. Value and label order
//! is declaration order; index `k` refers to the same label everywhere and
//! is the tie-break authority for every decision rule.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Categorical { values: Vec<String> },
    Real,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FeatureSpecRepr", into = "FeatureSpecRepr")]
pub struct FeatureSpec {
    name: String,
    kind: FeatureKind,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum FeatureKindRepr {
    Boolean,
    Categorical { values: Vec<String> },
    Real,
}

#[derive(Serialize, Deserialize)]
struct FeatureSpecRepr {
    name: String,
    #[serde(flatten)]
    kind: FeatureKindRepr,
}

impl TryFrom<FeatureSpecRepr> for FeatureSpec {
    type Error = Error;

    fn try_from(repr: FeatureSpecRepr) -> Result<Self> {
        match repr.kind {
            FeatureKindRepr::Boolean => FeatureSpec::boolean(repr.name),
            FeatureKindRepr::Categorical { values } => FeatureSpec::categorical(repr.name, values),
            FeatureKindRepr::Real => FeatureSpec::real(repr.name),
        }
    }
}

impl From<FeatureSpec> for FeatureSpecRepr {
    fn from(spec: FeatureSpec) -> Self {
        let kind = match spec.kind {
            FeatureKind::Categorical { values } => FeatureKindRepr::Categorical { values },
            FeatureKind::Real => FeatureKindRepr::Real,
        };
        FeatureSpecRepr {
            name: spec.name,
            kind,
        }
    }
}

impl FeatureSpec {
    pub fn categorical<S: Into<String>>(name: S, values: Vec<String>) -> Result<Self> {
        let name = checked_name(name.into())?;
        if values.len() < 2 {
            return Err(Error::Schema(format!(
                "categorical feature {name:?} needs at least 2 values, got {}",
                values.len()
            )));
        }
        let mut seen = HashSet::new();
        for v in &values {
            if !seen.insert(v.as_str()) {
                return Err(Error::Schema(format!(
                    "categorical feature {name:?} repeats value {v:?}"
                )));
            }
        }
        Ok(FeatureSpec {
            name,
            kind: FeatureKind::Categorical { values },
        })
    }

    pub fn boolean<S: Into<String>>(name: S) -> Result<Self> {
        Self::categorical(name, vec!["false".into(), "true".into()])
    }

    pub fn real<S: Into<String>>(name: S) -> Result<Self> {
        Ok(FeatureSpec {
            name: checked_name(name.into())?,
            kind: FeatureKind::Real,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &FeatureKind {
        &self.kind
    }

    /// Number of values for a categorical feature, `None` for real features.
    pub fn arity(&self) -> Option<usize> {
        match &self.kind {
            FeatureKind::Categorical { values } => Some(values.len()),
            FeatureKind::Real => None,
        }
    }

    pub fn values(&self) -> Option<&[String]> {
        match &self.kind {
            FeatureKind::Categorical { values } => Some(values),
            FeatureKind::Real => None,
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self.kind, FeatureKind::Real)
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values()?.iter().position(|v| v == value)
    }
}

fn checked_name(name: String) -> Result<String> {
    if name.is_empty() {
        return Err(Error::Schema("feature names must be non-empty".into()));
    }
    Ok(name)
}

/// Ordered feature list `X = X_1 … X_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureSpec>", into = "Vec<FeatureSpec>")]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
}

impl TryFrom<Vec<FeatureSpec>> for FeatureSchema {
    type Error = Error;

    fn try_from(features: Vec<FeatureSpec>) -> Result<Self> {
        FeatureSchema::new(features)
    }
}

impl From<FeatureSchema> for Vec<FeatureSpec> {
    fn from(schema: FeatureSchema) -> Self {
        schema.features
    }
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Schema("schema needs at least one feature".into()));
        }
        let mut seen = HashSet::new();
        for f in &features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate feature name {:?}",
                    f.name
                )));
            }
        }
        Ok(FeatureSchema { features })
    }

    /// `n` boolean features named `x1 … xn`.
    pub fn booleans(n: usize) -> Result<Self> {
        let features = (1..=n)
            .map(|i| FeatureSpec::boolean(format!("x{i}")))
            .collect::<Result<Vec<_>>>()?;
        Self::new(features)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &FeatureSpec {
        &self.features[i]
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn is_all_categorical(&self) -> bool {
        self.features.iter().all(|f| !f.is_real())
    }

    /// Checks the `Instance` invariants against this schema.
    pub fn check_instance(&self, instance: &Instance) -> std::result::Result<(), String> {
        if instance.len() != self.len() {
            return Err(format!(
                "expected {} values, got {}",
                self.len(),
                instance.len()
            ));
        }
        for (spec, value) in self.features.iter().zip(instance.values()) {
            match (&spec.kind, value) {
                (FeatureKind::Categorical { values }, Value::Category(idx)) => {
                    if *idx >= values.len() {
                        return Err(format!(
                            "feature {:?}: category index {idx} out of range for arity {}",
                            spec.name,
                            values.len()
                        ));
                    }
                }
                (FeatureKind::Real, Value::Real(x)) => {
                    if !x.is_finite() {
                        return Err(format!("feature {:?}: non-finite value {x}", spec.name));
                    }
                }
                (FeatureKind::Categorical { .. }, Value::Real(_)) => {
                    return Err(format!(
                        "feature {:?}: real value given for categorical feature",
                        spec.name
                    ))
                }
                (FeatureKind::Real, Value::Category(_)) => {
                    return Err(format!(
                        "feature {:?}: category given for real feature",
                        spec.name
                    ))
                }
            }
        }
        Ok(())
    }

    pub fn validate_instance(&self, instance: &Instance) -> Result<()> {
        self.check_instance(instance)
            .map_err(Error::InstanceMismatch)
    }

    /// Renders a value by name (categorical) or shortest round-trip decimal (real).
    pub fn format_value(&self, feature: usize, value: &Value) -> String {
        match (self.features[feature].values(), value) {
            (Some(names), Value::Category(i)) => {
                names.get(*i).cloned().unwrap_or_else(|| format!("#{i}"))
            }
            (_, Value::Real(x)) => format!("{x}"),
            (None, Value::Category(i)) => format!("#{i}"),
        }
    }
}

/// Ordered class labels `y_1 … y_m`, `m ≥ 2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSpace {
    labels: Vec<String>,
}

impl TryFrom<Vec<String>> for LabelSpace {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        LabelSpace::new(labels)
    }
}

impl From<LabelSpace> for Vec<String> {
    fn from(space: LabelSpace) -> Self {
        space.labels
    }
}

impl LabelSpace {
    pub fn new<S: Into<String>>(labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::Schema(format!(
                "label space needs at least 2 labels, got {}",
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Schema(format!("duplicate label {l:?}")));
            }
        }
        Ok(LabelSpace { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn name(&self, k: usize) -> &str {
        &self.labels[k]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Category(usize),
    Real(f64),
}

impl Value {
    pub fn category(&self) -> Option<usize> {
        match self {
            Value::Category(i) => Some(*i),
            Value::Real(_) => None,
        }
    }

    pub fn real(&self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(*x),
            Value::Category(_) => None,
        }
    }
}

/// One point `x` of the feature space.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    values: Vec<Value>,
}

impl Instance {
    pub fn new(values: Vec<Value>) -> Self {
        Instance { values }
    }

    pub fn categorical(indices: &[usize]) -> Self {
        Instance::new(indices.iter().map(|&i| Value::Category(i)).collect())
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &Value {
        &self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl From<Vec<Value>> for Instance {
    fn from(values: Vec<Value>) -> Self {
        Instance::new(values)
    }
}

/// Training set `D`: rows of `(instance, label index)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    schema: FeatureSchema,
    label_space: LabelSpace,
    rows: Vec<(Instance, usize)>,
}

impl LabeledDataset {
    /// Builds a dataset without checking rows; see [`validate_dataset`].
    pub fn new(
        schema: FeatureSchema,
        label_space: LabelSpace,
        rows: Vec<(Instance, usize)>,
    ) -> Self {
        LabeledDataset {
            schema,
            label_space,
            rows,
        }
    }

    /// Builds a dataset and rejects it unless every row validates.
    pub fn validated(
        schema: FeatureSchema,
        label_space: LabelSpace,
        rows: Vec<(Instance, usize)>,
    ) -> Result<Self> {
        let ds = Self::new(schema, label_space, rows);
        let report = validate_dataset(&ds);
        if let Some(v) = report.violations.first() {
            return Err(Error::InstanceMismatch(format!(
                "row {}: {} ({} violation(s) total)",
                v.row,
                v.reason,
                report.violations.len()
            )));
        }
        Ok(ds)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn rows(&self) -> &[(Instance, usize)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Splits into the first `n` rows and the remainder, sharing the schema.
    pub fn split_at(&self, n: usize) -> (LabeledDataset, LabeledDataset) {
        let n = n.min(self.rows.len());
        let (a, b) = self.rows.split_at(n);
        (
            LabeledDataset::new(self.schema.clone(), self.label_space.clone(), a.to_vec()),
            LabeledDataset::new(self.schema.clone(), self.label_space.clone(), b.to_vec()),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub row: usize,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.reason)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every row against the dataset's schema and label space.
pub fn validate_dataset(dataset: &LabeledDataset) -> ValidationReport {
    let m = dataset.label_space.len();
    let violations = dataset
        .rows
        .iter()
        .enumerate()
        .filter_map(|(row, (instance, label))| {
            let reason = match dataset.schema.check_instance(instance) {
                Err(reason) => reason,
                Ok(()) if *label >= m => {
                    format!("label index {label} out of range for {m} labels")
                }
                Ok(()) => return None,
            };
            Some(Violation { row, reason })
        })
        .collect();
    ValidationReport { violations }
}
