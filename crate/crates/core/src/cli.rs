//! Command-line front end. `run` is the whole program minus process exit,
//! so tests can drive it with in-memory writers.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::estimation::SmoothingConfig;
use crate::evaluate::{compare, evaluate, Classifier};
use crate::exact_bayes::{estimate_joint, param_count, LossMatrix, ParamKind};
use crate::independence::{is_conditionally_independent, weather_example, DEFAULT_TOLERANCE};
use crate::io::{
    encode_instances, encode_labeled, load_dataset, load_generator, load_model, load_triple_joint,
    read_table, save_model, write_dataset, DataFormat, Model, SchemaSidecar,
};
use crate::naive_bayes::train;
use crate::schema::LabeledDataset;
use crate::synthetic::{mle_concentration_trial, sample, to_joint, RNG_ALGORITHM};

#[derive(Parser, Debug)]
#[command(
    name = "bayeskit",
    version,
    about = "Naive Bayes and exact Bayes-optimal classification"
)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a naive Bayes model.
    Train(TrainArgs),
    /// Estimate the full joint table from data (categorical features only).
    TrainJoint(TrainJointArgs),
    /// Posterior and label for each row.
    Predict(PredictArgs),
    /// Accuracy, confusion matrix and optional empirical risk.
    Evaluate(EvaluateArgs),
    /// Run a naive model and a joint model over the same rows.
    Compare(CompareArgs),
    /// Parameter counts for n boolean attributes and a boolean class.
    Paramcount(ParamcountArgs),
    /// Draw labeled rows from a generator spec.
    Synth(SynthArgs),
    /// Test X independent of Y given Z on a three-variable joint.
    CheckCi(CheckCiArgs),
    /// Fraction of Bernoulli trials whose MLE lands within tolerance.
    MleTrial(MleTrialArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV or JSONL file.
    #[arg(long)]
    data: PathBuf,
    /// Overrides detection by file extension.
    #[arg(long, value_parser = parse_format)]
    format: Option<DataFormat>,
    #[arg(long, default_value = "label")]
    label_column: String,
}

impl DataArgs {
    fn format(&self) -> DataFormat {
        self.format
            .unwrap_or_else(|| DataFormat::from_path(&self.data))
    }
}

fn parse_format(s: &str) -> std::result::Result<DataFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Sidecar JSON schema; authoritative when given.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Laplace smoothing for conditionals.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Laplace smoothing for the class prior.
    #[arg(long, default_value_t = 0.0)]
    alpha_prior: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainJointArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Write predictions here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// JSON loss matrix `[[λ(a_i|y_j), ...], ...]`, rows are actions.
    #[arg(long)]
    loss: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    naive_model: PathBuf,
    #[arg(long)]
    joint_model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Generator spec the data came from; adds its Bayes error to the report.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ParamcountArgs {
    #[arg(long)]
    n: u32,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// generator_spec, joint_table or all-categorical naive_bayes container.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_format)]
    format: Option<DataFormat>,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Also write the sidecar schema for the generated file.
    #[arg(long)]
    schema_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["joint", "weather"]))]
struct CheckCiArgs {
    /// triple_joint container.
    #[arg(long)]
    joint: Option<PathBuf>,
    /// Use the built-in thunder/rain/lightning joint.
    #[arg(long)]
    weather: bool,
    #[arg(long, requires_all = ["y", "z"])]
    x: Option<String>,
    #[arg(long, requires_all = ["x", "z"])]
    y: Option<String>,
    #[arg(long, requires_all = ["x", "y"])]
    z: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
}

#[derive(Args, Debug)]
struct MleTrialArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    tolerance: f64,
    #[arg(long)]
    seed: u64,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code: 0 success, 1 usage error, 2 data or
/// model error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                1
            } else {
                let _ = write!(out, "{}", e.render());
                0
            };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) if is_broken_pipe(&e) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::InvalidArgument(_) => 1,
                _ => 2,
            }
        }
    }
}

fn is_broken_pipe(e: &Error) -> bool {
    match e {
        Error::Io(e) => e.kind() == std::io::ErrorKind::BrokenPipe,
        Error::Json(e) => e.io_error_kind() == Some(std::io::ErrorKind::BrokenPipe),
        _ => false,
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let json = cli.json;
    match &cli.command {
        Command::Train(a) => cmd_train(a, json, out),
        Command::TrainJoint(a) => cmd_train_joint(a, json, out),
        Command::Predict(a) => cmd_predict(a, json, out),
        Command::Evaluate(a) => cmd_evaluate(a, json, out),
        Command::Compare(a) => cmd_compare(a, json, out),
        Command::Paramcount(a) => cmd_paramcount(a, json, out),
        Command::Synth(a) => cmd_synth(a, json, out),
        Command::CheckCi(a) => cmd_check_ci(a, json, out),
        Command::MleTrial(a) => cmd_mle_trial(a, json, out),
    }
}

fn print_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load_training_data(data: &DataArgs, schema: Option<&Path>) -> Result<LabeledDataset> {
    let sidecar = schema.map(SchemaSidecar::load).transpose()?;
    load_dataset(
        &data.data,
        data.format(),
        &data.label_column,
        sidecar.as_ref(),
    )
}

fn load_for_model(model: &dyn Classifier, data: &DataArgs) -> Result<LabeledDataset> {
    let table = read_table(&data.data, data.format())?;
    encode_labeled(
        &table,
        &data.label_column,
        model.schema(),
        model.label_space(),
    )
}

fn training_summary(
    kind: &str,
    ds: &LabeledDataset,
    path: &Path,
    json: bool,
    out: &mut dyn Write,
) -> Result<()> {
    if json {
        return print_json(
            out,
            &json!({
                "kind": kind,
                "rows": ds.len(),
                "features": ds.schema().len(),
                "labels": ds.label_space().labels(),
                "out": path.display().to_string(),
            }),
        );
    }
    writeln!(
        out,
        "trained {kind} on {} rows ({} features, {} classes) -> {}",
        ds.len(),
        ds.schema().len(),
        ds.label_space().len(),
        path.display()
    )?;
    Ok(())
}

fn cmd_train(a: &TrainArgs, json: bool, out: &mut dyn Write) -> Result<()> {
    let config = SmoothingConfig::new(a.alpha, a.alpha_prior)?;
    let ds = load_training_data(&a.data, a.schema.as_deref())?;
    let model = train(&ds, config)?;
    save_model(&Model::NaiveBayes(model), &a.out)?;
    training_summary("naive_bayes", &ds, &a.out, json, out)
}

fn cmd_train_joint(a: &TrainJointArgs, json: bool, out: &mut dyn Write) -> Result<()> {
    let ds = load_training_data(&a.data, a.schema.as_deref())?;
    let joint = estimate_joint(&ds)?;
    save_model(&Model::Joint(joint), &a.out)?;
    training_summary("joint_table", &ds, &a.out, json, out)
}

fn cmd_predict(a: &PredictArgs, json: bool, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let table = read_table(&a.data.data, a.data.format())?;
    let instances = encode_instances(&table, model.schema(), Some(&a.data.label_column))?;
    let labels = model.label_space();

    let mut results = Vec::with_capacity(instances.len());
    for (row, (line, x)) in instances.iter().enumerate() {
        let posterior = model.posterior(x).map_err(|e| match e {
            e if e.is_undecidable() => Error::Parse {
                line: *line,
                message: format!("row {row}: {e}"),
            },
            e => e,
        })?;
        let k = model.classify(x)?;
        results.push((row, k, posterior));
    }

    let mut buf: Vec<u8> = Vec::new();
    if json {
        let rows: Vec<_> = results
            .iter()
            .map(
                |(row, k, p)| json!({"row": row, "label": labels.name(*k), "posterior": p.probs()}),
            )
            .collect();
        print_json(
            &mut buf,
            &json!({"labels": labels.labels(), "predictions": rows}),
        )?;
    } else {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header = vec!["row".to_string(), "label".to_string()];
        header.extend(labels.labels().iter().map(|l| format!("p_{l}")));
        w.write_record(&header)?;
        for (row, k, p) in &results {
            let mut rec = vec![row.to_string(), labels.name(*k).to_string()];
            rec.extend(p.probs().iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    match &a.out {
        Some(path) => std::fs::write(path, buf)?,
        None => out.write_all(&buf)?,
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs, json: bool, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let ds = load_for_model(&model, &a.data)?;
    let loss = match &a.loss {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Some(
                serde_json::from_str::<LossMatrix>(&text)
                    .map_err(|e| Error::Dimension(format!("{}: {e}", path.display())))?,
            )
        }
        None => None,
    };
    let report = evaluate(&model, &ds, loss.as_ref())?;
    if json {
        return print_json(out, &serde_json::to_value(&report)?);
    }
    writeln!(out, "rows: {}", report.total)?;
    writeln!(out, "evaluated: {}", report.evaluated)?;
    writeln!(out, "undecidable: {}", report.undecidable)?;
    writeln!(out, "accuracy: {}", report.accuracy)?;
    writeln!(
        out,
        "misclassification_rate: {}",
        report.misclassification_rate
    )?;
    if let Some(r) = report.empirical_risk {
        writeln!(out, "empirical_risk: {r}")?;
    }
    writeln!(out, "confusion (rows = true, columns = predicted):")?;
    let width = report
        .labels
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(0)
        .max(6);
    write!(out, "{:width$}", "")?;
    for l in &report.labels {
        write!(out, " {l:>width$}")?;
    }
    writeln!(out)?;
    for (l, row) in report.labels.iter().zip(&report.confusion) {
        write!(out, "{l:width$}")?;
        for c in row {
            write!(out, " {c:>width$}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn cmd_compare(a: &CompareArgs, json: bool, out: &mut dyn Write) -> Result<()> {
    let naive = match load_model(&a.naive_model)? {
        m @ Model::NaiveBayes(_) => m,
        Model::Joint(_) => {
            return Err(Error::Container("--naive-model holds a joint_table".into()))
        }
    };
    let joint = match load_model(&a.joint_model)? {
        m @ Model::Joint(_) => m,
        Model::NaiveBayes(_) => {
            return Err(Error::Container(
                "--joint-model holds a naive_bayes model".into(),
            ))
        }
    };
    let naive_data = load_for_model(&naive, &a.data)?;
    let joint_data = load_for_model(&joint, &a.data)?;
    let bayes_error = match &a.spec {
        Some(path) => Some(to_joint(&load_generator(path)?)?.bayes_error()),
        None => None,
    };
    let report = compare(&naive, &naive_data, &joint, &joint_data, bayes_error)?;
    if json {
        return print_json(out, &serde_json::to_value(&report)?);
    }
    writeln!(out, "rows: {}", report.total)?;
    writeln!(out, "compared: {}", report.compared)?;
    writeln!(out, "agreement_rate: {}", report.agreement_rate)?;
    writeln!(out, "naive_accuracy: {}", report.naive_accuracy)?;
    writeln!(out, "joint_accuracy: {}", report.joint_accuracy)?;
    writeln!(out, "naive_undecidable: {}", report.naive_undecidable)?;
    writeln!(out, "joint_undecidable: {}", report.joint_undecidable)?;
    if let Some(b) = report.bayes_error {
        writeln!(out, "bayes_error: {b}")?;
        writeln!(out, "bayes_accuracy: {}", 1.0 - b)?;
    }
    Ok(())
}

fn cmd_paramcount(a: &ParamcountArgs, json: bool, out: &mut dyn Write) -> Result<()> {
    let full = param_count(ParamKind::FullJoint, a.n)?;
    let naive = param_count(ParamKind::Naive, a.n)?;
    if json {
        return print_json(out, &json!({"n": a.n, "full_joint": full, "naive": naive}));
    }
    writeln!(out, "n: {}", a.n)?;
    writeln!(out, "full_joint: {full}  (2 * (2^n - 1))")?;
    writeln!(out, "naive: {naive}  (2 * n)")?;
    Ok(())
}

fn cmd_synth(a: &SynthArgs, json: bool, out: &mut dyn Write) -> Result<()> {
    let spec = load_generator(&a.spec)?;
    let ds = sample(&spec, a.count, a.seed)?;
    let format = a.format.unwrap_or_else(|| DataFormat::from_path(&a.out));
    let file = std::fs::File::create(&a.out)?;
    write_dataset(&ds, &a.label_column, format, std::io::BufWriter::new(file))?;
    if let Some(path) = &a.schema_out {
        let sidecar = SchemaSidecar {
            features: ds.schema().clone(),
            labels: Some(ds.label_space().clone()),
        };
        let mut text = serde_json::to_string_pretty(&sidecar)?;
        text.push('\n');
        std::fs::write(path, text)?;
    }
    if json {
        return print_json(
            out,
            &json!({
                "rows": ds.len(),
                "seed": a.seed,
                "rng": RNG_ALGORITHM,
                "out": a.out.display().to_string(),
            }),
        );
    }
    writeln!(
        out,
        "wrote {} rows to {} (seed {})",
        ds.len(),
        a.out.display(),
        a.seed
    )?;
    writeln!(out, "rng: {RNG_ALGORITHM}")?;
    Ok(())
}

fn cmd_check_ci(a: &CheckCiArgs, json: bool, out: &mut dyn Write) -> Result<()> {
    let mut joint = match &a.joint {
        Some(path) => load_triple_joint(path)?,
        None => weather_example(),
    };
    if let (Some(x), Some(y), Some(z)) = (&a.x, &a.y, &a.z) {
        joint = joint.with_roles(x, y, z)?;
    }
    let check = is_conditionally_independent(&joint, a.tol)?;
    let [vx, vy, vz] = joint.variables();
    if json {
        let witness = check.witness.map(|w| {
            json!({
                vx.name.as_str(): vx.values[w.x],
                vy.name.as_str(): vy.values[w.y],
                vz.name.as_str(): vz.values[w.z],
                "p_x_given_yz": w.p_x_given_yz,
                "p_x_given_z": w.p_x_given_z,
            })
        });
        return print_json(
            out,
            &json!({
                "x": vx.name, "y": vy.name, "z": vz.name,
                "tolerance": a.tol,
                "independent": check.independent,
                "max_gap": check.max_gap,
                "witness": witness,
            }),
        );
    }
    writeln!(
        out,
        "{} independent of {} given {}: {}",
        vx.name, vy.name, vz.name, check.independent
    )?;
    writeln!(out, "max_gap: {} (tolerance {})", check.max_gap, a.tol)?;
    if let Some(w) = check.witness {
        writeln!(
            out,
            "witness: {}={}, {}={}, {}={}: P(x|y,z) = {}, P(x|z) = {}",
            vx.name,
            vx.values[w.x],
            vy.name,
            vy.values[w.y],
            vz.name,
            vz.values[w.z],
            w.p_x_given_yz,
            w.p_x_given_z
        )?;
    }
    Ok(())
}

fn cmd_mle_trial(a: &MleTrialArgs, json: bool, out: &mut dyn Write) -> Result<()> {
    let fraction = mle_concentration_trial(a.p, a.samples, a.trials, a.tolerance, a.seed)?;
    if json {
        return print_json(
            out,
            &json!({
                "p": a.p, "samples": a.samples, "trials": a.trials,
                "tolerance": a.tolerance, "seed": a.seed,
                "fraction_within_tolerance": fraction,
            }),
        );
    }
    writeln!(out, "fraction_within_tolerance: {fraction}")?;
    Ok(())
}
