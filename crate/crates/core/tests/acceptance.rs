//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fail.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};

use bayeskit_core::estimation::{estimate_prior, ConditionalTable};
use bayeskit_core::evaluate::evaluate;
use bayeskit_core::exact_bayes::{estimate_joint, param_count};
use bayeskit_core::independence::{is_conditionally_independent, weather_example};
use bayeskit_core::io::{from_json, to_json, Artifact};
use bayeskit_core::naive_bayes::train;
use bayeskit_core::synthetic::{
    green_red_dataset, mle_concentration_trial, sample, to_joint, GeneratorSpec,
};
use bayeskit_core::{
    ClassPrior, FeatureSchema, FiniteDistribution, Instance, JointTable, LossMatrix,
    NaiveBayesModel, ParamKind, SmoothingConfig, TripleJoint, Variable,
};
use common::*;
use num_rational::Ratio;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn posterior_normalization() -> Result<String, String> {
    let mut rng = TestRng::new(11);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 10_000 {
        let model = random_mixed_model(&mut rng);
        for _ in 0..50 {
            let x = random_instance(&mut rng, model.schema());
            let p = model.posterior(&x).map_err(|e| e.to_string())?;
            let s: f64 = p.probs().iter().sum();
            worst = worst.max((s - 1.0).abs());
            count += 1;
        }
    }
    ensure(worst <= 1e-12, || format!("max |sum - 1| = {worst:e}"))?;
    Ok(format!("{count} posteriors, max |sum - 1| = {worst:e}"))
}

fn argmax_consistency() -> Result<String, String> {
    let mut rng = TestRng::new(12);
    let mut count = 0;
    while count < 10_000 {
        let model = random_mixed_model(&mut rng);
        for _ in 0..50 {
            let x = random_instance(&mut rng, model.schema());
            let scores = model.log_scores(&x).map_err(|e| e.to_string())?;
            let post = model.posterior(&x).map_err(|e| e.to_string())?;
            let k = model.classify(&x).map_err(|e| e.to_string())?;
            ensure(k == argmax(&scores) && k == argmax(post.probs()), || {
                format!(
                    "disagreement: scores {scores:?}, posterior {:?}",
                    post.probs()
                )
            })?;
            count += 1;
        }
    }
    Ok(format!(
        "{count} instances, classify == argmax(scores) == argmax(posterior)"
    ))
}

fn naive_matches_exact_under_ci() -> Result<String, String> {
    let mut rng = TestRng::new(13);
    let mut worst: f64 = 0.0;
    let mut specs = 0;
    let mut instances = 0;
    for n in 1..=10 {
        for _ in 0..5 {
            let arities: Vec<usize> = (0..n)
                .map(|_| if n <= 6 { rng.range(2, 3) } else { 2 })
                .collect();
            let m = rng.range(2, 3);
            let spec = random_factored(&mut rng, &arities, m, 0.01);
            let naive = spec.to_naive_model();
            let joint = to_joint(&GeneratorSpec::Factored(spec)).map_err(|e| e.to_string())?;
            for x in joint.instances() {
                let a = naive.posterior(&x).map_err(|e| e.to_string())?;
                let b = joint.exact_posterior(&x).map_err(|e| e.to_string())?;
                for (p, q) in a.probs().iter().zip(b.probs()) {
                    worst = worst.max((p - q).abs());
                }
                instances += 1;
            }
            specs += 1;
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!(
        "{specs} factored specs (n = 1..10), {instances} instances, max deviation {worst:e}"
    ))
}

fn parameter_counts() -> Result<String, String> {
    // 2 * (2^n - 1) for the full joint, 2n under conditional independence.
    // At n = 30 the full count is 2,147,483,646 (about 2.1 billion).
    let expected = [(1, 2u64), (5, 62), (10, 2046), (30, 2_147_483_646)];
    for (n, full) in expected {
        let got = param_count(ParamKind::FullJoint, n).map_err(|e| e.to_string())?;
        ensure(got == full, || {
            format!("full_joint(n={n}) = {got}, want {full}")
        })?;
        let naive = param_count(ParamKind::Naive, n).map_err(|e| e.to_string())?;
        ensure(naive == 2 * n as u64, || format!("naive(n={n}) = {naive}"))?;
    }
    ensure(param_count(ParamKind::FullJoint, 63).is_ok(), || {
        "n = 63 should fit".into()
    })?;
    ensure(param_count(ParamKind::FullJoint, 64).is_err(), || {
        "n = 64 should overflow".into()
    })?;
    Ok("n = 1, 5, 10, 30 -> 2, 62, 2046, 2147483646; naive = 2n".into())
}

fn green_red_prior() -> Result<String, String> {
    let ds = green_red_dataset();
    let prior = estimate_prior(&ds, 0.0).map_err(|e| e.to_string())?;
    let green = ds.rows().iter().filter(|(_, y)| *y == 0).count() as i64;
    let oracle = [
        Ratio::new(green, ds.len() as i64),
        Ratio::new(ds.len() as i64 - green, ds.len() as i64),
    ];
    ensure(oracle == [Ratio::new(2, 3), Ratio::new(1, 3)], || {
        format!("fixture ratio {oracle:?}")
    })?;
    for (k, r) in oracle.iter().enumerate() {
        let want = *r.numer() as f64 / *r.denom() as f64;
        ensure(prior.get(k) == want, || {
            format!("P(class {k}) = {}, want {want}", prior.get(k))
        })?;
    }
    Ok(format!(
        "P(GREEN) = {}, P(RED) = {}",
        prior.get(0),
        prior.get(1)
    ))
}

/// Exact probability that Binomial(n, 1/2) lands in `lo..=hi`.
fn binomial_half_mass(n: u32, lo: u32, hi: u32) -> f64 {
    let mut c: u128 = 1;
    let mut hits: u128 = 0;
    for k in 0..=n {
        if k >= lo && k <= hi {
            hits += c;
        }
        c = c * (n - k) as u128 / (k + 1) as u128;
    }
    hits as f64 / 2f64.powi(n as i32)
}

fn mle_concentration() -> Result<String, String> {
    let oracle = binomial_half_mass(100, 40, 60);
    let a = mle_concentration_trial(0.5, 100, 1000, 0.1, 20240601).map_err(|e| e.to_string())?;
    let b = mle_concentration_trial(0.5, 100, 1000, 0.1, 20240601).map_err(|e| e.to_string())?;
    ensure(a == b, || "not deterministic for a fixed seed".into())?;
    ensure(a >= 0.95, || format!("fraction {a} < 0.95"))?;
    ensure((a - oracle).abs() <= 0.03, || {
        format!("fraction {a} vs exact {oracle}")
    })?;
    Ok(format!("fraction {a}, exact binomial mass {oracle:.4}"))
}

fn log_space_matches_linear() -> Result<String, String> {
    let mut rng = TestRng::new(17);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.range(1, 20);
        let arities: Vec<usize> = (0..n).map(|_| rng.range(2, 3)).collect();
        let m = rng.range(2, 3);
        let spec = random_factored(&mut rng, &arities, m, 1e-3);
        let model = spec.to_naive_model();
        for _ in 0..10 {
            let x = Instance::categorical(
                &arities
                    .iter()
                    .map(|&a| rng.range(0, a - 1))
                    .collect::<Vec<_>>(),
            );
            let linear: Vec<f64> = (0..m)
                .map(|k| {
                    let mut p = spec.prior().get(k);
                    for (i, v) in x.values().iter().enumerate() {
                        p *= spec
                            .conditionals()
                            .get(i, k)
                            .unwrap()
                            .get(v.category().unwrap());
                    }
                    p
                })
                .collect();
            let total: f64 = linear.iter().sum();
            let post = model.posterior(&x).map_err(|e| e.to_string())?;
            for (p, l) in post.probs().iter().zip(&linear) {
                let q = l / total;
                worst = worst.max((p - q).abs() / q);
            }
        }
    }
    ensure(worst <= 1e-9, || format!("max relative error {worst:e}"))?;

    // 20 features each contributing about ln P = -35: the linear product
    // approaches the subnormal range but log-space stays exact.
    let n = 20;
    let schema = FeatureSchema::booleans(n).map_err(|e| e.to_string())?;
    let labels = labels(2);
    let lows = [(-35.0f64).exp(), (-34.9f64).exp()];
    let rows = (0..n)
        .map(|_| {
            Some(
                lows.iter()
                    .map(|&p| FiniteDistribution::new(vec![1.0 - p, p]).unwrap())
                    .collect(),
            )
        })
        .collect();
    let table = ConditionalTable::new(&schema, &labels, rows).map_err(|e| e.to_string())?;
    let prior = ClassPrior::from_probs(vec![0.5, 0.5]).map_err(|e| e.to_string())?;
    let spec = bayeskit_core::synthetic::FactoredSpec::new(schema, labels, prior, table)
        .map_err(|e| e.to_string())?;
    let model = spec.to_naive_model();
    let x = Instance::categorical(&[1; 20]);
    let post = model.posterior(&x).map_err(|e| e.to_string())?;
    let scores = model.log_scores(&x).map_err(|e| e.to_string())?;
    ensure(scores.iter().all(|s| s.is_finite() && *s < -690.0), || {
        format!("scores {scores:?}")
    })?;
    let d = n as f64 * (lows[1].ln() - lows[0].ln());
    let oracle = 1.0 / (1.0 + (-d).exp());
    ensure((post.get(1) - oracle).abs() <= 1e-9 * oracle, || {
        format!("deep posterior {} vs {oracle}", post.get(1))
    })?;
    Ok(format!(
        "5000 instances (n <= 20), max relative error {worst:e}; 20 x ln(p) = -35 scores {:.1} stay finite",
        scores[0]
    ))
}

fn zero_one_risk_is_min_error() -> Result<String, String> {
    let mut rng = TestRng::new(18);
    let mut checked = 0;
    for j in 0..120 {
        let n = rng.range(1, 8);
        let arities = vec![2; n];
        let m = rng.range(2, 4);
        let joint = random_joint(&mut rng, &arities, m, if j % 3 == 0 { 0.3 } else { 0.0 });
        let loss = LossMatrix::zero_one(m);
        for x in joint.instances() {
            let a = joint.classify_min_error(&x);
            let b = joint.classify_min_risk(&x, &loss);
            match (a, b) {
                (Ok(a), Ok(b)) => ensure(a == b, || format!("min-error {a} vs min-risk {b}"))?,
                (Err(a), Err(b)) => ensure(a.is_undecidable() && b.is_undecidable(), || {
                    format!("unexpected errors {a} / {b}")
                })?,
                (a, b) => return Err(format!("mismatch {a:?} vs {b:?}")),
            }
            checked += 1;
        }
    }
    Ok(format!("120 joints (n <= 8), {checked} instances agree"))
}

fn bayes_error_is_minimal() -> Result<String, String> {
    let mut rng = TestRng::new(19);
    let mut classifiers = 0u64;
    for _ in 0..60 {
        let n = rng.range(1, 3);
        let joint = random_joint(&mut rng, &vec![2; n], 2, 0.1);
        let bayes = joint.bayes_error();
        let size = joint.instance_count();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << size) {
            let err = joint.error_of(|i| ((mask >> i) & 1) as usize);
            ensure(err >= bayes - 1e-12, || {
                format!("classifier {mask:b} error {err} < {bayes}")
            })?;
            best = best.min(err);
            classifiers += 1;
        }
        ensure((best - bayes).abs() <= 1e-12, || {
            format!("best {best} vs bayes error {bayes}")
        })?;
    }
    // Larger spaces: random classifiers, plus single flips of the Bayes rule.
    let mut sampled = 0u64;
    for _ in 0..20 {
        let n = rng.range(4, 6);
        let m = rng.range(2, 3);
        let joint = random_joint(&mut rng, &vec![2; n], m, 0.1);
        let bayes = joint.bayes_error();
        let size = joint.instance_count();
        for _ in 0..200 {
            let table: Vec<usize> = (0..size).map(|_| rng.range(0, m - 1)).collect();
            let err = joint.error_of(|i| table[i]);
            ensure(err >= bayes - 1e-12, || {
                format!("sampled error {err} < {bayes}")
            })?;
            sampled += 1;
        }
        let rule: Vec<usize> = (0..size).map(|i| argmax(joint.class_masses(i))).collect();
        ensure((joint.error_of(|i| rule[i]) - bayes).abs() <= 1e-12, || {
            "argmax rule does not attain the Bayes error".into()
        })?;
        for flip in 0..size {
            let err = joint.error_of(|i| {
                if i == flip {
                    (rule[i] + 1) % m
                } else {
                    rule[i]
                }
            });
            ensure(err >= bayes - 1e-12, || {
                format!("flipped error {err} < {bayes}")
            })?;
            sampled += 1;
        }
    }
    Ok(format!(
        "60 joints (n <= 3): all {classifiers} classifiers; 20 joints (n = 4..6): {sampled} sampled; none below the Bayes error"
    ))
}

fn ci_oracle() -> Result<String, String> {
    let tol = 1e-9;
    let weather = weather_example();
    let check = is_conditionally_independent(&weather, tol).map_err(|e| e.to_string())?;
    ensure(check.independent, || {
        format!("weather: max gap {}", check.max_gap)
    })?;
    let p_t = weather.probability(|t, _, _| t == 1);
    let p_r = weather.probability(|_, r, _| r == 1);
    let p_tr = weather.probability(|t, r, _| t == 1 && r == 1);
    let dep = (p_tr / p_r - p_t).abs();
    ensure(dep > 0.01, || format!("|P(T|R) - P(T)| = {dep}"))?;

    let mut rng = TestRng::new(20);
    for _ in 0..100 {
        let dims = [rng.range(2, 3), rng.range(2, 3), rng.range(2, 3)];
        let pz = rng.probs(dims[2], 0.05);
        let px: Vec<Vec<f64>> = (0..dims[2]).map(|_| rng.probs(dims[0], 0.15)).collect();
        let py: Vec<Vec<f64>> = (0..dims[2]).map(|_| rng.probs(dims[1], 0.15)).collect();
        let vars = |d: [usize; 3]| -> [Variable; 3] {
            ["X", "Y", "Z"]
                .iter()
                .zip(d)
                .map(|(n, a)| Variable::new(*n, (0..a).map(|v| v.to_string()).collect()).unwrap())
                .collect::<Vec<_>>()
                .try_into()
                .unwrap()
        };
        let ci = TripleJoint::from_fn(vars(dims), |x, y, z| pz[z] * px[z][x] * py[z][y])
            .map_err(|e| e.to_string())?;
        let c = is_conditionally_independent(&ci, tol).map_err(|e| e.to_string())?;
        ensure(c.independent, || {
            format!("factored joint flagged dependent, gap {}", c.max_gap)
        })?;

        // Shift delta of mass within one z slice along the x = y diagonal.
        let delta = 0.01;
        let zs = rng.range(0, dims[2] - 1);
        let bent = TripleJoint::from_fn(vars(dims), |x, y, z| {
            let base = pz[z] * px[z][x] * py[z][y];
            let s = match (x, y) {
                (0, 0) | (1, 1) => 1.0,
                (0, 1) | (1, 0) => -1.0,
                _ => 0.0,
            };
            if z == zs {
                base + pz[z] * delta * s
            } else {
                base
            }
        })
        .map_err(|e| e.to_string())?;
        let c = is_conditionally_independent(&bent, tol).map_err(|e| e.to_string())?;
        ensure(!c.independent, || "perturbed joint passed".into())?;
        let w = c.witness.ok_or("no witness")?;
        let pyz = bent.probability(|_, y, z| y == w.y && z == w.z);
        let pxyz = bent.mass(w.x, w.y, w.z);
        let pz_ = bent.probability(|_, _, z| z == w.z);
        let pxz = bent.probability(|x, _, z| x == w.x && z == w.z);
        let (a, b) = (pxyz / pyz, pxz / pz_);
        ensure(
            (a - w.p_x_given_yz).abs() < 1e-12 && (b - w.p_x_given_z).abs() < 1e-12,
            || format!("witness values {w:?} vs recomputed {a}, {b}"),
        )?;
        ensure((a - b).abs() > tol, || {
            "witness gap within tolerance".into()
        })?;
    }
    Ok(format!(
        "weather: Thunder indep. Rain | Lightning, |P(T|R) - P(T)| = {dep:.4}; 100 factored pass, 100 perturbed fail with valid witness"
    ))
}

fn round_trip() -> Result<String, String> {
    let mut rng = TestRng::new(21);
    let mixed = random_mixed_model(&mut rng);
    let joint = random_joint(&mut rng, &[2, 3, 2, 2], 3, 0.2);
    let mut compared = 0;
    for artifact in [
        Artifact::NaiveBayes(mixed.clone()),
        Artifact::JointTable(joint.clone()),
    ] {
        let text = to_json(&artifact);
        let back = from_json(&text).map_err(|e| e.to_string())?;
        ensure(to_json(&back) == text, || "re-serialization differs".into())?;
        for _ in 0..1000 {
            match (&artifact, &back) {
                (Artifact::NaiveBayes(a), Artifact::NaiveBayes(b)) => {
                    let x = random_instance(&mut rng, a.schema());
                    let (p, q) = (a.posterior(&x), b.posterior(&x));
                    ensure(p.as_ref().ok() == q.as_ref().ok(), || {
                        "posterior changed".into()
                    })?;
                    ensure(a.classify(&x).ok() == b.classify(&x).ok(), || {
                        "label changed".into()
                    })?;
                }
                (Artifact::JointTable(a), Artifact::JointTable(b)) => {
                    let x = random_instance(&mut rng, a.schema());
                    ensure(
                        a.exact_posterior(&x).ok() == b.exact_posterior(&x).ok(),
                        || "posterior changed".into(),
                    )?;
                }
                _ => return Err("kind changed".into()),
            }
            compared += 1;
        }
    }

    let spec = random_factored(&mut rng, &[2, 2], 2, 0.1);
    let text = to_json(&Artifact::NaiveBayes(spec.to_naive_model()));
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["payload"]["likelihoods"][0]["rows"][0] = serde_json::json!([0.25, 0.25]);
    ensure(from_json(&value.to_string()).is_err(), || {
        "row summing to 0.5 accepted".into()
    })?;
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["format_version"] = serde_json::json!(99);
    ensure(from_json(&value.to_string()).is_err(), || {
        "format_version 99 accepted".into()
    })?;
    Ok(format!("{compared} instances identical after save/load; tampered rows and unknown version rejected"))
}

fn ci_data_naive_vs_joint() -> Result<String, String> {
    let run = || -> Result<(f64, f64, f64), String> {
        let mut rng = TestRng::new(22);
        let spec = random_factored(&mut rng, &[2, 2, 2, 2, 2, 2], 2, 0.05);
        let generator = GeneratorSpec::Factored(spec);
        let bayes = to_joint(&generator)
            .map_err(|e| e.to_string())?
            .bayes_error();
        let data = sample(&generator, 5000, 4242).map_err(|e| e.to_string())?;
        let (train_set, test_set) = data.split_at(2500);
        let naive: NaiveBayesModel = train(&train_set, SmoothingConfig::new(1.0, 0.0).unwrap())
            .map_err(|e| e.to_string())?;
        let joint: JointTable = estimate_joint(&train_set).map_err(|e| e.to_string())?;
        let a = evaluate(&naive, &test_set, None)
            .map_err(|e| e.to_string())?
            .accuracy;
        let b = evaluate(&joint, &test_set, None)
            .map_err(|e| e.to_string())?
            .accuracy;
        Ok((a, b, bayes))
    };
    let (naive, joint, bayes) = run()?;
    ensure(run()? == (naive, joint, bayes), || {
        "not deterministic".into()
    })?;
    let best = 1.0 - bayes;
    ensure(naive >= joint - 0.02, || {
        format!("naive {naive} < joint {joint} - 0.02")
    })?;
    ensure((naive - best).abs() <= 0.05, || {
        format!("naive {naive} vs optimum {best}")
    })?;
    ensure((joint - best).abs() <= 0.05, || {
        format!("joint {joint} vs optimum {best}")
    })?;
    Ok(format!(
        "naive accuracy {naive:.4}, joint accuracy {joint:.4}, 1 - Bayes error {best:.4}"
    ))
}

fn main() {
    let checks: [(&str, Check); 12] = [
        ("posterior normalization", posterior_normalization),
        ("argmax consistency", argmax_consistency),
        (
            "naive equals exact under conditional independence",
            naive_matches_exact_under_ci,
        ),
        ("parameter counts", parameter_counts),
        ("GREEN/RED prior", green_red_prior),
        ("MLE concentration", mle_concentration),
        (
            "log-space vs linear-space posterior",
            log_space_matches_linear,
        ),
        ("0-1 min-risk equals min-error", zero_one_risk_is_min_error),
        ("Bayes error is minimal", bayes_error_is_minimal),
        ("conditional independence oracle", ci_oracle),
        ("save/load round trip", round_trip),
        (
            "naive vs joint on conditionally independent data",
            ci_data_naive_vs_joint,
        ),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("[PASS] {:02} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:02} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
