//! Ground-truth generators and seeded sampling.
//!
//! Sampling uses xoshiro256** seeded through SplitMix64
//! (`rand_xoshiro::Xoshiro256StarStar::seed_from_u64`). Each uniform draw is
//! `(next_u64 >> 11) · 2⁻⁵³`, and a draw `u` selects the first joint cell
//! whose cumulative mass exceeds `u`. This is the whole contract for seeded
//! reproducibility; changing any part of it changes every seeded output.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::distribution::FiniteDistribution;
use crate::error::{Error, Result};
use crate::estimation::{ClassPrior, ConditionalTable, GaussianParams, SmoothingConfig};
use crate::exact_bayes::{instance_space_size, JointTable};
use crate::naive_bayes::NaiveBayesModel;
use crate::schema::{FeatureSchema, FeatureSpec, Instance, LabelSpace, LabeledDataset};

/// Recorded alongside seeded outputs.
pub const RNG_ALGORITHM: &str =
    "xoshiro256** (SplitMix64 seeding), uniform = (next_u64 >> 11) * 2^-53";

/// Generator in which every feature is conditionally independent of the
/// others given the class: `P(x, y) = P(y) · Π_i P(x_i | y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredSpec {
    schema: FeatureSchema,
    label_space: LabelSpace,
    prior: ClassPrior,
    conditionals: ConditionalTable,
}

impl FactoredSpec {
    pub fn new(
        schema: FeatureSchema,
        label_space: LabelSpace,
        prior: ClassPrior,
        conditionals: ConditionalTable,
    ) -> Result<Self> {
        if !schema.is_all_categorical() {
            let real = schema
                .features()
                .iter()
                .find(|f| f.is_real())
                .expect("has real");
            return Err(Error::RealFeatureInJoint {
                feature: real.name().to_string(),
            });
        }
        if prior.len() != label_space.len() {
            return Err(Error::Dimension(format!(
                "prior has {} entries for {} labels",
                prior.len(),
                label_space.len()
            )));
        }
        conditionals.check_shape(&schema, &label_space)?;
        Ok(FactoredSpec {
            schema,
            label_space,
            prior,
            conditionals,
        })
    }

    /// The true parameters of an all-categorical naive Bayes model.
    pub fn from_naive_model(model: &NaiveBayesModel) -> Result<Self> {
        let conditionals = model
            .conditional_table()
            .ok_or_else(|| Error::RealFeatureInJoint {
                feature: model
                    .schema()
                    .features()
                    .iter()
                    .find(|f| f.is_real())
                    .map(|f| f.name().to_string())
                    .unwrap_or_default(),
            })?;
        Self::new(
            model.schema().clone(),
            model.label_space().clone(),
            model.prior().clone(),
            conditionals,
        )
    }

    /// A naive Bayes model carrying exactly this generator's parameters.
    pub fn to_naive_model(&self) -> NaiveBayesModel {
        NaiveBayesModel::from_tables(
            self.schema.clone(),
            self.label_space.clone(),
            self.prior.clone(),
            self.conditionals.clone(),
            GaussianParams::new(
                &self.schema,
                &self.label_space,
                vec![None; self.schema.len()],
            )
            .expect("all-categorical schema"),
            SmoothingConfig::mle(),
        )
        .expect("validated spec")
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

    pub fn conditionals(&self) -> &ConditionalTable {
        &self.conditionals
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    Explicit(JointTable),
    Factored(FactoredSpec),
}

impl GeneratorSpec {
    pub fn schema(&self) -> &FeatureSchema {
        match self {
            GeneratorSpec::Explicit(j) => j.schema(),
            GeneratorSpec::Factored(f) => f.schema(),
        }
    }

    pub fn label_space(&self) -> &LabelSpace {
        match self {
            GeneratorSpec::Explicit(j) => j.label_space(),
            GeneratorSpec::Factored(f) => f.label_space(),
        }
    }
}

/// Expands a generator into its explicit joint table.
pub fn to_joint(spec: &GeneratorSpec) -> Result<JointTable> {
    let f = match spec {
        GeneratorSpec::Explicit(joint) => return Ok(joint.clone()),
        GeneratorSpec::Factored(f) => f,
    };
    let instances = instance_space_size(&f.schema)?;
    let m = f.label_space.len();
    let arities: Vec<usize> = f
        .schema
        .features()
        .iter()
        .map(|s| s.arity().expect("categorical"))
        .collect();
    let mut digits = vec![0usize; arities.len()];
    let mut mass = Vec::with_capacity(instances * m);
    for _ in 0..instances {
        for k in 0..m {
            let p = digits
                .iter()
                .enumerate()
                .fold(f.prior.get(k), |acc, (i, &v)| {
                    acc * f.conditionals.get(i, k).expect("validated shape").get(v)
                });
            mass.push(p);
        }
        // odometer increment, last feature fastest
        for (d, arity) in digits.iter_mut().zip(&arities).rev() {
            *d += 1;
            if *d < *arity {
                break;
            }
            *d = 0;
        }
    }
    JointTable::new(f.schema.clone(), f.label_space.clone(), mass)
}

fn uniform01(rng: &mut Xoshiro256StarStar) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `count` i.i.d. labeled rows drawn from the generator's joint.
pub fn sample(spec: &GeneratorSpec, count: usize, seed: u64) -> Result<LabeledDataset> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let joint = to_joint(spec)?;
    let masses = joint.masses();
    let mut cumulative = Vec::with_capacity(masses.len());
    let mut running = 0.0;
    for p in masses {
        running += p;
        cumulative.push(running);
    }
    let last_positive = masses
        .iter()
        .rposition(|p| *p > 0.0)
        .expect("a distribution has positive mass");

    let m = joint.label_space().len();
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let rows = (0..count)
        .map(|_| {
            let u = uniform01(&mut rng);
            let cell = cumulative.partition_point(|c| *c <= u).min(last_positive);
            (joint.instance_at(cell / m), cell % m)
        })
        .collect();
    Ok(LabeledDataset::new(
        joint.schema().clone(),
        joint.label_space().clone(),
        rows,
    ))
}

/// Seed for trial `t` of a concentration experiment; each trial gets its
/// own SplitMix64-expanded stream.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed ^ trial.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Fraction of `trials` Bernoulli(`p`) experiments of `samples_per_trial`
/// draws whose MLE `p̂ = k / n` lands within `tolerance` of `p`.
pub fn mle_concentration_trial(
    p: f64,
    samples_per_trial: usize,
    trials: usize,
    tolerance: f64,
    seed: u64,
) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "p must be in (0, 1), got {p}"
        )));
    }
    if samples_per_trial == 0 || trials == 0 {
        return Err(Error::InvalidArgument(
            "samples and trials must both be >= 1".into(),
        ));
    }
    if !tolerance.is_finite() || tolerance < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be finite and >= 0, got {tolerance}"
        )));
    }
    let within = (0..trials as u64)
        .filter(|&t| {
            let mut rng = Xoshiro256StarStar::seed_from_u64(trial_seed(seed, t));
            let hits = (0..samples_per_trial)
                .filter(|_| uniform01(&mut rng) < p)
                .count();
            let p_hat = hits as f64 / samples_per_trial as f64;
            (p_hat - p).abs() <= tolerance
        })
        .count();
    Ok(within as f64 / trials as f64)
}

/// Two classes in a 2:1 ratio (GREEN, RED) with one boolean feature that
/// is equally split within each class, so it carries no class information.
pub fn green_red_dataset() -> LabeledDataset {
    let schema =
        FeatureSchema::new(vec![FeatureSpec::boolean("marked").expect("valid")]).expect("valid");
    let labels = LabelSpace::new(vec!["GREEN", "RED"]).expect("valid");
    let mut rows = Vec::with_capacity(60);
    for (label, per_value) in [(0usize, 20usize), (1, 10)] {
        for v in 0..2 {
            rows.extend((0..per_value).map(|_| (Instance::categorical(&[v]), label)));
        }
    }
    LabeledDataset::new(schema, labels, rows)
}

/// Generator behind [`green_red_dataset`]: prior (2/3, 1/3) and a fair,
/// class-independent feature.
pub fn green_red_spec() -> GeneratorSpec {
    let schema =
        FeatureSchema::new(vec![FeatureSpec::boolean("marked").expect("valid")]).expect("valid");
    let labels = LabelSpace::new(vec!["GREEN", "RED"]).expect("valid");
    let half = FiniteDistribution::uniform(2).expect("valid");
    let conditionals =
        ConditionalTable::new(&schema, &labels, vec![Some(vec![half.clone(), half])])
            .expect("valid");
    let prior = ClassPrior::from_probs(vec![2.0 / 3.0, 1.0 / 3.0]).expect("valid");
    GeneratorSpec::Factored(FactoredSpec::new(schema, labels, prior, conditionals).expect("valid"))
}
