//! Random model and data builders shared by the integration tests.
#![allow(dead_code)]

use bayeskit_core::estimation::{ClassPrior, ConditionalTable, Gaussian, GaussianParams};
use bayeskit_core::synthetic::FactoredSpec;
use bayeskit_core::{
    FeatureSchema, FeatureSpec, FiniteDistribution, Instance, JointTable, LabelSpace,
    NaiveBayesModel, SmoothingConfig, Value,
};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

pub struct TestRng(Xoshiro256StarStar);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.0.next_u64() % (hi - lo + 1) as u64) as usize
    }

    pub fn between(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Random probability vector with every entry at least `floor`.
    pub fn probs(&mut self, k: usize, floor: f64) -> Vec<f64> {
        let w: Vec<f64> = (0..k).map(|_| self.uniform() + 1e-3).collect();
        let total: f64 = w.iter().sum();
        let free = 1.0 - floor * k as f64;
        assert!(free > 0.0);
        w.iter().map(|x| floor + free * x / total).collect()
    }
}

pub fn labels(m: usize) -> LabelSpace {
    LabelSpace::new((0..m).map(|k| format!("c{k}")).collect()).unwrap()
}

pub fn categorical_schema(arities: &[usize]) -> FeatureSchema {
    FeatureSchema::new(
        arities
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                FeatureSpec::categorical(format!("f{i}"), (0..a).map(|v| format!("v{v}")).collect())
                    .unwrap()
            })
            .collect(),
    )
    .unwrap()
}

/// Factored generator with the given feature arities and class count; every
/// parameter is at least `floor`.
pub fn random_factored(rng: &mut TestRng, arities: &[usize], m: usize, floor: f64) -> FactoredSpec {
    let schema = categorical_schema(arities);
    let labels = labels(m);
    let prior = ClassPrior::from_probs(rng.probs(m, floor)).unwrap();
    let rows = arities
        .iter()
        .map(|&a| {
            Some(
                (0..m)
                    .map(|_| FiniteDistribution::new(rng.probs(a, floor)).unwrap())
                    .collect(),
            )
        })
        .collect();
    let table = ConditionalTable::new(&schema, &labels, rows).unwrap();
    FactoredSpec::new(schema, labels, prior, table).unwrap()
}

/// Naive model mixing categorical and Gaussian features.
pub fn random_mixed_model(rng: &mut TestRng) -> NaiveBayesModel {
    let m = rng.range(2, 4);
    let n = rng.range(1, 8);
    let real: Vec<bool> = (0..n).map(|_| rng.uniform() < 0.4).collect();
    let specs = real
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if r {
                FeatureSpec::real(format!("f{i}")).unwrap()
            } else {
                let a = rng.range(2, 4);
                FeatureSpec::categorical(format!("f{i}"), (0..a).map(|v| format!("v{v}")).collect())
                    .unwrap()
            }
        })
        .collect();
    let schema = FeatureSchema::new(specs).unwrap();
    let labels = labels(m);
    let prior = ClassPrior::from_probs(rng.probs(m, 0.01)).unwrap();
    let mut cond = Vec::new();
    let mut gauss = Vec::new();
    for f in schema.features() {
        match f.arity() {
            Some(a) => {
                cond.push(Some(
                    (0..m)
                        .map(|_| FiniteDistribution::new(rng.probs(a, 1e-3)).unwrap())
                        .collect(),
                ));
                gauss.push(None);
            }
            None => {
                cond.push(None);
                gauss.push(Some(
                    (0..m)
                        .map(|_| {
                            Gaussian::new(rng.between(-5.0, 5.0), rng.between(0.1, 4.0)).unwrap()
                        })
                        .collect(),
                ));
            }
        }
    }
    let cond = ConditionalTable::new(&schema, &labels, cond).unwrap();
    let gauss = GaussianParams::new(&schema, &labels, gauss).unwrap();
    NaiveBayesModel::from_tables(
        schema,
        labels,
        prior,
        cond,
        gauss,
        SmoothingConfig::default(),
    )
    .unwrap()
}

pub fn random_instance(rng: &mut TestRng, schema: &FeatureSchema) -> Instance {
    Instance::new(
        schema
            .features()
            .iter()
            .map(|f| match f.arity() {
                Some(a) => Value::Category(rng.range(0, a - 1)),
                None => Value::Real(rng.between(-8.0, 8.0)),
            })
            .collect(),
    )
}

/// Arbitrary (not necessarily factored) joint; roughly `zero_frac` of the
/// cells get no mass.
pub fn random_joint(rng: &mut TestRng, arities: &[usize], m: usize, zero_frac: f64) -> JointTable {
    let schema = categorical_schema(arities);
    let cells = arities.iter().product::<usize>() * m;
    let mut w: Vec<f64> = (0..cells)
        .map(|_| {
            if rng.uniform() < zero_frac {
                0.0
            } else {
                rng.uniform()
            }
        })
        .collect();
    if w.iter().all(|x| *x == 0.0) {
        w[0] = 1.0;
    }
    let total: f64 = w.iter().sum();
    let mass = w.iter().map(|x| x / total).collect();
    JointTable::new(schema, labels(m), mass).unwrap()
}
