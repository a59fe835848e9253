//! Conditional independence over explicit three-variable distributions.
//!
//! `X ⊥ Y | Z` holds iff `P(X = x | Y = y, Z = z) = P(X = x | Z = z)` for
//! every `(x, y, z)` whose conditioning event `(y, z)` has positive mass.

use serde::{Deserialize, Serialize};

use crate::distribution::FiniteDistribution;
use crate::error::{Error, Result};
use crate::exact_bayes::JointTable;
use crate::numeric::compensated_sum;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub values: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: S, values: Vec<String>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::Schema(format!("variable {name:?} has no values")));
        }
        Ok(Variable { name, values })
    }

    pub fn boolean<S: Into<String>>(name: S) -> Self {
        Variable {
            name: name.into(),
            values: vec!["false".into(), "true".into()],
        }
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }
}

/// Probability mass over `(x, y, z)`, laid out with `z` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleJoint {
    variables: [Variable; 3],
    mass: FiniteDistribution,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct TripleJointRepr {
    pub variables: Vec<Variable>,
    pub mass: Vec<f64>,
}

impl TripleJoint {
    pub fn new(variables: [Variable; 3], mass: Vec<f64>) -> Result<Self> {
        let cells: usize = variables.iter().map(Variable::arity).product();
        if mass.len() != cells {
            return Err(Error::Dimension(format!(
                "triple joint needs {cells} cells, got {}",
                mass.len()
            )));
        }
        let names: Vec<&str> = variables.iter().map(|v| v.name.as_str()).collect();
        if names[0] == names[1] || names[0] == names[2] || names[1] == names[2] {
            return Err(Error::Schema(
                "triple joint variable names must differ".into(),
            ));
        }
        Ok(TripleJoint {
            variables,
            mass: FiniteDistribution::new(mass)?,
        })
    }

    /// Builds `P(x, y, z) = f(x, y, z)` from a function over index triples.
    pub fn from_fn<F: Fn(usize, usize, usize) -> f64>(
        variables: [Variable; 3],
        f: F,
    ) -> Result<Self> {
        let [a, b, c] = [
            variables[0].arity(),
            variables[1].arity(),
            variables[2].arity(),
        ];
        let mut mass = Vec::with_capacity(a * b * c);
        for x in 0..a {
            for y in 0..b {
                for z in 0..c {
                    mass.push(f(x, y, z));
                }
            }
        }
        Self::new(variables, mass)
    }

    pub fn variables(&self) -> &[Variable; 3] {
        &self.variables
    }

    pub fn dims(&self) -> [usize; 3] {
        [
            self.variables[0].arity(),
            self.variables[1].arity(),
            self.variables[2].arity(),
        ]
    }

    pub fn masses(&self) -> &[f64] {
        self.mass.probs()
    }

    pub fn mass(&self, x: usize, y: usize, z: usize) -> f64 {
        let [_, b, c] = self.dims();
        self.mass.get((x * b + y) * c + z)
    }

    /// Total mass of the index triples satisfying `event`.
    pub fn probability<F: Fn(usize, usize, usize) -> bool>(&self, event: F) -> f64 {
        let [a, b, c] = self.dims();
        let mut terms = Vec::new();
        for x in 0..a {
            for y in 0..b {
                for z in 0..c {
                    if event(x, y, z) {
                        terms.push(self.mass(x, y, z));
                    }
                }
            }
        }
        compensated_sum(terms)
    }

    /// Reorders the variables so the named ones play the X, Y and Z roles.
    pub fn with_roles(&self, x: &str, y: &str, z: &str) -> Result<TripleJoint> {
        let find = |name: &str| {
            self.variables
                .iter()
                .position(|v| v.name == name)
                .ok_or_else(|| Error::InvalidArgument(format!("no variable named {name:?}")))
        };
        let order = [find(x)?, find(y)?, find(z)?];
        let [i, j, k] = order;
        if i == j || i == k || j == k {
            return Err(Error::InvalidArgument(
                "X, Y and Z must name three different variables".into(),
            ));
        }
        let variables = order.map(|p| self.variables[p].clone());
        TripleJoint::from_fn(variables, |a, b, c| {
            let mut idx = [0usize; 3];
            idx[i] = a;
            idx[j] = b;
            idx[k] = c;
            self.mass(idx[0], idx[1], idx[2])
        })
    }

    /// Swaps the X and Y roles.
    pub fn swap_xy(&self) -> TripleJoint {
        let [x, y, z] = self.variables.clone();
        TripleJoint::from_fn([y, x, z], |a, b, c| self.mass(b, a, c))
            .expect("permutation of a valid joint")
    }

    /// `P(X_i, X_j, Y)` marginalized out of a feature/class joint table,
    /// with features `i`, `j` as X and Y and the class as Z.
    pub fn from_feature_pair(joint: &JointTable, i: usize, j: usize) -> Result<TripleJoint> {
        let schema = joint.schema();
        if i >= schema.len() || j >= schema.len() || i == j {
            return Err(Error::InvalidArgument(format!(
                "feature pair ({i}, {j}) is not two distinct features of {}",
                schema.len()
            )));
        }
        let vi = schema.feature(i);
        let vj = schema.feature(j);
        let labels = joint.label_space();
        let variables = [
            Variable::new(vi.name(), vi.values().expect("categorical").to_vec())?,
            Variable::new(vj.name(), vj.values().expect("categorical").to_vec())?,
            Variable::new("class", labels.labels().to_vec())?,
        ];
        let (a, b, m) = (variables[0].arity(), variables[1].arity(), labels.len());
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); a * b * m];
        for idx in 0..joint.instance_count() {
            let x = joint.instance_at(idx);
            let xi = x.value(i).category().expect("categorical");
            let xj = x.value(j).category().expect("categorical");
            for (k, p) in joint.class_masses(idx).iter().enumerate() {
                buckets[(xi * b + xj) * m + k].push(*p);
            }
        }
        let mass = buckets.into_iter().map(compensated_sum).collect();
        TripleJoint::new(variables, mass)
    }

    pub(crate) fn to_repr(&self) -> TripleJointRepr {
        TripleJointRepr {
            variables: self.variables.to_vec(),
            mass: self.mass.probs().to_vec(),
        }
    }

    pub(crate) fn from_repr(repr: TripleJointRepr) -> Result<Self> {
        let variables: [Variable; 3] = repr.variables.try_into().map_err(|v: Vec<Variable>| {
            Error::Container(format!("triple joint needs 3 variables, got {}", v.len()))
        })?;
        TripleJoint::new(variables, repr.mass)
    }
}

/// A triple at which the defining equality fails.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    /// `P(X = x | Y = y, Z = z)`
    pub p_x_given_yz: f64,
    /// `P(X = x | Z = z)`
    pub p_x_given_z: f64,
}

impl Witness {
    pub fn gap(&self) -> f64 {
        (self.p_x_given_yz - self.p_x_given_z).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiCheck {
    pub independent: bool,
    /// Largest violation (first in index order on ties), present iff not independent.
    pub witness: Option<Witness>,
    /// Largest `|P(x|y,z) − P(x|z)|` seen over non-vacuous triples.
    pub max_gap: f64,
}

/// Checks `X ⊥ Y | Z` at absolute tolerance `tol`.
pub fn is_conditionally_independent(joint: &TripleJoint, tol: f64) -> Result<CiCheck> {
    if tol.is_nan() || tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be > 0, got {tol}"
        )));
    }
    let [a, b, c] = joint.dims();
    let mut p_yz = vec![0.0; b * c];
    let mut p_xz = vec![0.0; a * c];
    let mut p_z = vec![0.0; c];
    for z in 0..c {
        p_z[z] = compensated_sum(
            (0..a)
                .flat_map(|x| (0..b).map(move |y| (x, y)))
                .map(|(x, y)| joint.mass(x, y, z)),
        );
        for y in 0..b {
            p_yz[y * c + z] = compensated_sum((0..a).map(|x| joint.mass(x, y, z)));
        }
        for x in 0..a {
            p_xz[x * c + z] = compensated_sum((0..b).map(|y| joint.mass(x, y, z)));
        }
    }

    let mut worst: Option<Witness> = None;
    for x in 0..a {
        for y in 0..b {
            for z in 0..c {
                let cond = p_yz[y * c + z];
                if cond <= 0.0 {
                    continue;
                }
                let w = Witness {
                    x,
                    y,
                    z,
                    p_x_given_yz: joint.mass(x, y, z) / cond,
                    p_x_given_z: p_xz[x * c + z] / p_z[z],
                };
                if worst.is_none_or(|cur| w.gap() > cur.gap()) {
                    worst = Some(w);
                }
            }
        }
    }
    let max_gap = worst.map_or(0.0, |w| w.gap());
    let independent = max_gap <= tol;
    Ok(CiCheck {
        independent,
        witness: if independent { None } else { worst },
        max_gap,
    })
}

/// Thunder, Rain and Lightning with `P(L)·P(T | L)·P(R | L)`: Thunder and
/// Rain are dependent, but independent once Lightning is known.
///
/// Variable order is `[Thunder, Rain, Lightning]`, so the default roles are
/// X = Thunder, Y = Rain, Z = Lightning.
pub fn weather_example() -> TripleJoint {
    let p_l = [0.9, 0.1];
    let p_t_given_l = [0.05, 0.9];
    let p_r_given_l = [0.2, 0.7];
    let bern = |p: f64, v: usize| if v == 1 { p } else { 1.0 - p };
    TripleJoint::from_fn(
        [
            Variable::boolean("Thunder"),
            Variable::boolean("Rain"),
            Variable::boolean("Lightning"),
        ],
        |t, r, l| p_l[l] * bern(p_t_given_l[l], t) * bern(p_r_given_l[l], r),
    )
    .expect("weather fixture is a valid distribution")
}
