//! Count-based estimators for the class prior, per-feature categorical
//! conditionals and per-class Gaussian parameters.
//!
//! Every estimate is built from two primitives: the indicator `δ(c)` and the
//! count `#D{p}` of rows satisfying a predicate. Categorical estimates use
//! add-α smoothing; `α = 0` gives the plain maximum-likelihood ratios.

use serde::{Deserialize, Serialize};

use crate::distribution::FiniteDistribution;
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::schema::{FeatureSchema, Instance, LabelSpace, LabeledDataset, Value};

/// Pseudocounts for categorical conditionals (`alpha`) and the class prior
/// (`alpha_prior`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub alpha: f64,
    pub alpha_prior: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            alpha: 1.0,
            alpha_prior: 0.0,
        }
    }
}

impl SmoothingConfig {
    pub fn new(alpha: f64, alpha_prior: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_alpha(alpha_prior)?;
        Ok(SmoothingConfig { alpha, alpha_prior })
    }

    /// Unsmoothed maximum likelihood for both prior and conditionals.
    pub fn mle() -> Self {
        SmoothingConfig {
            alpha: 0.0,
            alpha_prior: 0.0,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "pseudocount must be finite and >= 0, got {alpha}"
        )));
    }
    Ok(())
}

/// `δ(condition)`.
pub fn indicator(condition: bool) -> u64 {
    if condition {
        1
    } else {
        0
    }
}

/// `#D{predicate}`: the number of rows satisfying `predicate(instance, label)`.
pub fn count_matching<F>(dataset: &LabeledDataset, predicate: F) -> u64
where
    F: Fn(&Instance, usize) -> bool,
{
    dataset
        .rows()
        .iter()
        .map(|(x, y)| indicator(predicate(x, *y)))
        .sum()
}

/// `#D{Y = y_k}` for every label.
pub fn class_counts(dataset: &LabeledDataset) -> Vec<u64> {
    let mut counts = vec![0u64; dataset.label_space().len()];
    for (_, y) in dataset.rows() {
        counts[*y] += 1;
    }
    counts
}

/// `P(Y)` over a label space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassPrior(FiniteDistribution);

impl ClassPrior {
    pub fn new(distribution: FiniteDistribution) -> Self {
        ClassPrior(distribution)
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        Ok(ClassPrior(FiniteDistribution::new(probs)?))
    }

    pub fn distribution(&self) -> &FiniteDistribution {
        &self.0
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0.get(k)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `P̂(Y = y_k) = (#D{Y = y_k} + α) / (|D| + α·m)`.
pub fn estimate_prior(dataset: &LabeledDataset, alpha: f64) -> Result<ClassPrior> {
    check_alpha(alpha)?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let counts = class_counts(dataset);
    let m = counts.len() as f64;
    let denom = dataset.len() as f64 + alpha * m;
    let probs = counts.iter().map(|&c| (c as f64 + alpha) / denom).collect();
    Ok(ClassPrior(FiniteDistribution::new(probs)?))
}

/// `P(X_i = v | Y = y_j)` for each categorical feature `i` and class `j`.
/// Real-valued features have no table (`None`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionalTable {
    rows: Vec<Option<Vec<FiniteDistribution>>>,
}

impl ConditionalTable {
    /// Checks that every categorical feature has one row per class with the
    /// feature's arity, and that real features have none.
    pub fn new(
        schema: &FeatureSchema,
        label_space: &LabelSpace,
        rows: Vec<Option<Vec<FiniteDistribution>>>,
    ) -> Result<Self> {
        let table = ConditionalTable { rows };
        table.check_shape(schema, label_space)?;
        Ok(table)
    }

    pub(crate) fn check_shape(&self, schema: &FeatureSchema, labels: &LabelSpace) -> Result<()> {
        if self.rows.len() != schema.len() {
            return Err(Error::Dimension(format!(
                "conditional table covers {} features, schema has {}",
                self.rows.len(),
                schema.len()
            )));
        }
        for (i, (spec, rows)) in schema.features().iter().zip(&self.rows).enumerate() {
            match (spec.arity(), rows) {
                (None, None) => {}
                (Some(arity), Some(per_class)) => {
                    if per_class.len() != labels.len() {
                        return Err(Error::Dimension(format!(
                            "feature {i} has {} class rows, expected {}",
                            per_class.len(),
                            labels.len()
                        )));
                    }
                    if let Some(bad) = per_class.iter().find(|d| d.len() != arity) {
                        return Err(Error::Dimension(format!(
                            "feature {i} row has {} entries, arity is {arity}",
                            bad.len()
                        )));
                    }
                }
                (Some(_), None) => {
                    return Err(Error::Dimension(format!(
                        "categorical feature {i} has no conditional table"
                    )))
                }
                (None, Some(_)) => {
                    return Err(Error::Dimension(format!(
                        "real feature {i} cannot have a conditional table"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, feature: usize, class: usize) -> Option<&FiniteDistribution> {
        self.rows.get(feature)?.as_ref()?.get(class)
    }

    pub fn rows(&self) -> &[Option<Vec<FiniteDistribution>>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Option<Vec<FiniteDistribution>>> {
        self.rows
    }
}

/// `P̂(X_i = v | Y = y_j) = (#D{X_i = v ∧ Y = y_j} + α) / (#D{Y = y_j} + α·arity(i))`.
pub fn estimate_categorical_conditionals(
    dataset: &LabeledDataset,
    alpha: f64,
) -> Result<ConditionalTable> {
    check_alpha(alpha)?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = dataset.label_space();
    let class_totals = class_counts(dataset);
    if alpha == 0.0 {
        if let Some(k) = class_totals.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass {
                label: labels.name(k).to_string(),
            });
        }
    }

    let mut rows = Vec::with_capacity(dataset.schema().len());
    for (i, spec) in dataset.schema().features().iter().enumerate() {
        let Some(arity) = spec.arity() else {
            rows.push(None);
            continue;
        };
        let mut counts = vec![vec![0u64; arity]; labels.len()];
        for (row, (x, y)) in dataset.rows().iter().enumerate() {
            let v = x.values().get(i).and_then(Value::category).ok_or_else(|| {
                Error::InstanceMismatch(format!("row {row}: feature {i} is not categorical"))
            })?;
            let slot = counts[*y].get_mut(v).ok_or_else(|| {
                Error::InstanceMismatch(format!("row {row}: category {v} out of range"))
            })?;
            *slot += 1;
        }
        let per_class = counts
            .iter()
            .zip(&class_totals)
            .map(|(value_counts, &total)| {
                let denom = total as f64 + alpha * arity as f64;
                FiniteDistribution::new(
                    value_counts
                        .iter()
                        .map(|&c| (c as f64 + alpha) / denom)
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(Some(per_class));
    }
    Ok(ConditionalTable { rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance <= 0.0 {
            return Err(Error::Distribution(format!(
                "gaussian needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(Gaussian { mean, variance })
    }

    /// `−½·ln(2πσ²) − (x−μ)²/(2σ²)`.
    pub fn log_density(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * (2.0 * std::f64::consts::PI * self.variance).ln() - d * d / (2.0 * self.variance)
    }
}

/// Lower bound applied to every estimated variance.
pub fn variance_floor(mean: f64) -> f64 {
    f64::max(1e-9, 1e-9 * mean * mean)
}

/// Per real feature, per class mean and (floored) variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GaussianParams {
    params: Vec<Option<Vec<Gaussian>>>,
}

impl GaussianParams {
    pub fn new(
        schema: &FeatureSchema,
        label_space: &LabelSpace,
        params: Vec<Option<Vec<Gaussian>>>,
    ) -> Result<Self> {
        if params.len() != schema.len() {
            return Err(Error::Dimension(format!(
                "gaussian parameters cover {} features, schema has {}",
                params.len(),
                schema.len()
            )));
        }
        for (i, (spec, p)) in schema.features().iter().zip(&params).enumerate() {
            match (spec.is_real(), p) {
                (true, Some(per_class)) if per_class.len() == label_space.len() => {}
                (false, None) => {}
                _ => {
                    return Err(Error::Dimension(format!(
                        "feature {i}: gaussian parameters do not match the feature kind"
                    )))
                }
            }
        }
        Ok(GaussianParams { params })
    }

    pub fn get(&self, feature: usize, class: usize) -> Option<&Gaussian> {
        self.params.get(feature)?.as_ref()?.get(class)
    }

    pub fn params(&self) -> &[Option<Vec<Gaussian>>] {
        &self.params
    }

    pub fn into_params(self) -> Vec<Option<Vec<Gaussian>>> {
        self.params
    }
}

/// Sample mean and population (divide-by-n) variance per real feature and class.
pub fn estimate_gaussian(dataset: &LabeledDataset) -> Result<GaussianParams> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let schema = dataset.schema();
    let labels = dataset.label_space();
    let has_real = schema.features().iter().any(|f| f.is_real());
    if has_real {
        if let Some(k) = class_counts(dataset).iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass {
                label: labels.name(k).to_string(),
            });
        }
    }

    let mut params = Vec::with_capacity(schema.len());
    for (i, spec) in schema.features().iter().enumerate() {
        if !spec.is_real() {
            params.push(None);
            continue;
        }
        let mut by_class: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
        for (row, (x, y)) in dataset.rows().iter().enumerate() {
            let v = x.values().get(i).and_then(Value::real).ok_or_else(|| {
                Error::InstanceMismatch(format!("row {row}: feature {i} is not real"))
            })?;
            by_class[*y].push(v);
        }
        let per_class = by_class
            .iter()
            .map(|xs| {
                let n = xs.len() as f64;
                let mean = compensated_sum(xs.iter().copied()) / n;
                let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / n;
                Gaussian::new(mean, var.max(variance_floor(mean)))
            })
            .collect::<Result<Vec<_>>>()?;
        params.push(Some(per_class));
    }
    Ok(GaussianParams { params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::FeatureSpec;

    fn labels2() -> LabelSpace {
        LabelSpace::new(vec!["A", "B"]).unwrap()
    }

    fn bool_dataset(rows: &[(usize, usize)]) -> LabeledDataset {
        let schema = FeatureSchema::new(vec![FeatureSpec::boolean("x").unwrap()]).unwrap();
        LabeledDataset::new(
            schema,
            labels2(),
            rows.iter()
                .map(|&(x, y)| (Instance::categorical(&[x]), y))
                .collect(),
        )
    }

    fn real_dataset(rows: &[(f64, usize)]) -> LabeledDataset {
        let schema = FeatureSchema::new(vec![FeatureSpec::real("v").unwrap()]).unwrap();
        LabeledDataset::new(
            schema,
            labels2(),
            rows.iter()
                .map(|&(x, y)| (Instance::new(vec![Value::Real(x)]), y))
                .collect(),
        )
    }

    #[test]
    fn indicator_values() {
        assert_eq!(indicator(true), 1);
        assert_eq!(indicator(false), 0);
        #[allow(clippy::nonminimal_bool)]
        let c = 5 > 3;
        assert_eq!(indicator(c), 1);
    }

    #[test]
    fn count_matching_examples() {
        let empty = bool_dataset(&[]);
        assert_eq!(count_matching(&empty, |_, _| true), 0);
        let three = bool_dataset(&[(0, 0), (1, 0), (1, 1)]);
        assert_eq!(count_matching(&three, |_, _| true), 3);
        // labels [G, G, R]: label index 0 plays G
        assert_eq!(count_matching(&three, |_, y| y == 0), 2);
    }

    #[test]
    fn prior_examples() {
        let ggr = bool_dataset(&[(0, 0), (0, 0), (0, 1)]);
        let p = estimate_prior(&ggr, 0.0).unwrap();
        assert_eq!(p.distribution().probs(), &[2.0 / 3.0, 1.0 / 3.0]);

        let ab = bool_dataset(&[(0, 0), (0, 1)]);
        assert_eq!(
            estimate_prior(&ab, 0.0).unwrap().distribution().probs(),
            &[0.5, 0.5]
        );

        let aaa = bool_dataset(&[(0, 0), (1, 0), (0, 0)]);
        let p = estimate_prior(&aaa, 1.0).unwrap();
        assert_eq!(p.distribution().probs(), &[4.0 / 5.0, 1.0 / 5.0]);

        assert!(matches!(
            estimate_prior(&bool_dataset(&[]), 1.0),
            Err(Error::EmptyDataset)
        ));
        assert!(estimate_prior(&aaa, -1.0).is_err());
    }

    #[test]
    fn conditional_examples() {
        // class A: value0 ×5, value1 ×0; class B gets one row so it exists
        let ds = bool_dataset(&[(0, 0), (0, 0), (0, 0), (0, 0), (0, 0), (1, 1)]);
        let t = estimate_categorical_conditionals(&ds, 1.0).unwrap();
        assert_eq!(t.get(0, 0).unwrap().probs(), &[6.0 / 7.0, 1.0 / 7.0]);

        let ds = bool_dataset(&[(0, 0), (0, 0), (0, 0), (1, 0), (1, 1)]);
        let t = estimate_categorical_conditionals(&ds, 0.0).unwrap();
        assert_eq!(t.get(0, 0).unwrap().probs(), &[0.75, 0.25]);

        let uniform = bool_dataset(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        for alpha in [0.0, 0.5, 1.0, 7.0] {
            let t = estimate_categorical_conditionals(&uniform, alpha).unwrap();
            assert_eq!(t.get(0, 0).unwrap().probs(), &[0.5, 0.5]);
            assert_eq!(t.get(0, 1).unwrap().probs(), &[0.5, 0.5]);
        }
    }

    #[test]
    fn zero_example_class_needs_smoothing() {
        let ds = bool_dataset(&[(0, 0), (1, 0)]);
        let err = estimate_categorical_conditionals(&ds, 0.0).unwrap_err();
        assert!(err.to_string().contains("no examples"));
        let t = estimate_categorical_conditionals(&ds, 1.0).unwrap();
        assert_eq!(t.get(0, 1).unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn gaussian_examples() {
        let ds = real_dataset(&[(1.0, 0), (1.0, 0), (1.0, 0), (0.0, 1), (2.0, 1)]);
        let g = estimate_gaussian(&ds).unwrap();
        let a = g.get(0, 0).unwrap();
        assert_eq!(a.mean, 1.0);
        assert_eq!(a.variance, variance_floor(1.0));
        let b = g.get(0, 1).unwrap();
        assert_eq!((b.mean, b.variance), (1.0, 1.0));

        let single = real_dataset(&[(5.0, 0), (0.0, 1), (2.0, 1)]);
        let g = estimate_gaussian(&single).unwrap();
        assert_eq!(g.get(0, 0).unwrap().mean, 5.0);
        assert_eq!(g.get(0, 0).unwrap().variance, 25e-9);

        let missing = real_dataset(&[(1.0, 0)]);
        assert!(matches!(
            estimate_gaussian(&missing),
            Err(Error::EmptyClass { .. })
        ));
    }

    #[test]
    fn gaussian_log_density_matches_closed_form() {
        let g = Gaussian::new(1.0, 4.0).unwrap();
        let expected =
            (-(3.0f64 - 1.0).powi(2) / 8.0).exp() / (2.0 * std::f64::consts::PI * 4.0).sqrt();
        assert!((g.log_density(3.0) - expected.ln()).abs() < 1e-14);
        assert!(Gaussian::new(0.0, 0.0).is_err());
    }
}
