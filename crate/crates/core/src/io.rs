//! Dataset ingestion and the JSON persistence container.
//!
//! Datasets are CSV (header row, comma separated) or JSONL (one flat object
//! per line). Without a sidecar schema a column is real-valued when every
//! cell parses as a finite decimal number, otherwise categorical with values
//! in first-appearance order. A sidecar schema is authoritative.
//!
//! Every persisted artifact shares one envelope:
//!
//! ```json
//! {"format_version": 1, "kind": "...", "schema": [...], "label_space": [...], "payload": {...}}
//! ```
//!
//! `kind` is one of `naive_bayes`, `joint_table`, `generator_spec` or
//! `triple_joint` (the last has no `schema`/`label_space`).

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{ClassPrior, ConditionalTable, SmoothingConfig};
use crate::exact_bayes::JointTable;
use crate::independence::{TripleJoint, TripleJointRepr};
use crate::naive_bayes::{FeatureLikelihood, NaiveBayesModel};
use crate::schema::{FeatureSchema, FeatureSpec, Instance, LabelSpace, LabeledDataset, Value};
use crate::synthetic::{FactoredSpec, GeneratorSpec};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "jsonl" | "ndjson" => Ok(DataFormat::Jsonl),
            other => Err(Error::InvalidArgument(format!(
                "unknown data format {other:?}"
            ))),
        }
    }
}

impl DataFormat {
    /// `.jsonl` / `.ndjson` are JSONL, everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("jsonl") || e.eq_ignore_ascii_case("ndjson") => {
                DataFormat::Jsonl
            }
            _ => DataFormat::Csv,
        }
    }
}

/// Untyped cells with the source line of each row.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<(usize, Vec<String>)>,
}

impl RawTable {
    fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn read_csv<R: Read>(reader: R) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(Error::EmptyFile),
        Some(h) => h?,
    };
    let columns: Vec<String> = header.iter().map(|c| c.trim().to_string()).collect();
    check_columns(&columns, 1)?;
    let mut rows = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record.get(0).is_some_and(|c| c.trim().is_empty()) {
            continue;
        }
        if record.len() != columns.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", columns.len(), record.len()),
            });
        }
        rows.push((line, record.iter().map(|c| c.trim().to_string()).collect()));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(RawTable { columns, rows })
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<RawTable> {
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| parse_err("expected a JSON object".into()))?;
        let cols = columns.get_or_insert_with(|| obj.keys().cloned().collect());
        if obj.len() != cols.len() || cols.iter().any(|c| !obj.contains_key(c)) {
            return Err(parse_err(format!(
                "keys {:?} do not match the first object's keys {:?}",
                obj.keys().collect::<Vec<_>>(),
                cols
            )));
        }
        let cells = cols
            .iter()
            .map(|c| match &obj[c] {
                serde_json::Value::String(s) => Ok(s.clone()),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                serde_json::Value::Bool(b) => Ok(b.to_string()),
                serde_json::Value::Null => Ok(String::new()),
                _ => Err(parse_err(format!("field {c:?} is not a scalar"))),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line_no, cells));
    }
    let columns = columns.ok_or(Error::EmptyFile)?;
    check_columns(&columns, 1)?;
    Ok(RawTable { columns, rows })
}

fn check_columns(columns: &[String], line: usize) -> Result<()> {
    for (i, c) in columns.iter().enumerate() {
        if c.is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("column {i} has an empty name"),
            });
        }
        if columns[..i].contains(c) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate column {c:?}"),
            });
        }
    }
    Ok(())
}

pub fn read_table(path: &Path, format: DataFormat) -> Result<RawTable> {
    let file = File::open(path)?;
    match format {
        DataFormat::Csv => read_csv(file),
        DataFormat::Jsonl => read_jsonl(BufReader::new(file)),
    }
}

/// Declared schema for a dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemaSidecar {
    pub features: FeatureSchema,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelSpace>,
}

impl SchemaSidecar {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

fn parse_real(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn missing(line: usize, column: &str) -> Error {
    Error::Parse {
        line,
        message: format!("missing value in column {column:?}"),
    }
}

fn encode_cell(spec: &FeatureSpec, cell: &str, line: usize) -> Result<Value> {
    if cell.is_empty() {
        return Err(missing(line, spec.name()));
    }
    match spec.values() {
        Some(_) => spec
            .value_index(cell)
            .map(Value::Category)
            .ok_or_else(|| Error::Parse {
                line,
                message: format!(
                    "value {cell:?} is not declared for feature {:?}",
                    spec.name()
                ),
            }),
        None => parse_real(cell)
            .map(Value::Real)
            .ok_or_else(|| Error::Parse {
                line,
                message: format!(
                    "feature {:?}: {cell:?} is not a finite decimal number",
                    spec.name()
                ),
            }),
    }
}

fn infer_schema(table: &RawTable, feature_cols: &[usize]) -> Result<FeatureSchema> {
    let mut specs = Vec::with_capacity(feature_cols.len());
    for &c in feature_cols {
        let name = &table.columns[c];
        for (line, cells) in &table.rows {
            if cells[c].is_empty() {
                return Err(missing(*line, name));
            }
        }
        let all_real = table
            .rows
            .iter()
            .all(|(_, cells)| parse_real(&cells[c]).is_some());
        if all_real {
            specs.push(FeatureSpec::real(name.clone())?);
        } else {
            let mut values: Vec<String> = Vec::new();
            for (_, cells) in &table.rows {
                if !values.contains(&cells[c]) {
                    values.push(cells[c].clone());
                }
            }
            specs.push(FeatureSpec::categorical(name.clone(), values)?);
        }
    }
    FeatureSchema::new(specs)
}

/// Types a raw table into a labeled dataset, inferring the schema unless a
/// sidecar is given.
pub fn dataset_from_table(
    table: &RawTable,
    label_column: &str,
    sidecar: Option<&SchemaSidecar>,
) -> Result<LabeledDataset> {
    if table.rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    let label_col = table
        .column(label_column)
        .ok_or_else(|| Error::Schema(format!("missing label column {label_column:?}")))?;

    let (schema, labels) = match sidecar {
        Some(s) => {
            for (i, c) in table.columns.iter().enumerate() {
                if i != label_col && s.features.position(c).is_none() {
                    return Err(Error::Schema(format!(
                        "column {c:?} is not declared in the schema"
                    )));
                }
            }
            let labels = match &s.labels {
                Some(l) => l.clone(),
                None => infer_labels(table, label_col)?,
            };
            (s.features.clone(), labels)
        }
        None => {
            let feature_cols: Vec<usize> = (0..table.columns.len())
                .filter(|&c| c != label_col)
                .collect();
            if feature_cols.is_empty() {
                return Err(Error::Schema("dataset has no feature columns".into()));
            }
            (
                infer_schema(table, &feature_cols)?,
                infer_labels(table, label_col)?,
            )
        }
    };
    encode_labeled(table, label_column, &schema, &labels)
}

fn infer_labels(table: &RawTable, label_col: usize) -> Result<LabelSpace> {
    let mut labels: Vec<String> = Vec::new();
    for (line, cells) in &table.rows {
        let l = &cells[label_col];
        if l.is_empty() {
            return Err(missing(*line, &table.columns[label_col]));
        }
        if !labels.contains(l) {
            labels.push(l.clone());
        }
    }
    LabelSpace::new(labels)
}

/// Encodes feature columns by name against an existing schema. Columns not
/// in the schema are rejected unless they are `ignore`.
pub fn encode_instances(
    table: &RawTable,
    schema: &FeatureSchema,
    ignore: Option<&str>,
) -> Result<Vec<(usize, Instance)>> {
    for c in &table.columns {
        if Some(c.as_str()) != ignore && schema.position(c).is_none() {
            return Err(Error::Schema(format!(
                "column {c:?} is not a model feature"
            )));
        }
    }
    let cols = schema
        .features()
        .iter()
        .map(|f| {
            table
                .column(f.name())
                .ok_or_else(|| Error::Schema(format!("missing feature column {:?}", f.name())))
        })
        .collect::<Result<Vec<_>>>()?;
    table
        .rows
        .iter()
        .map(|(line, cells)| {
            let values = schema
                .features()
                .iter()
                .zip(&cols)
                .map(|(spec, &c)| encode_cell(spec, &cells[c], *line))
                .collect::<Result<Vec<_>>>()?;
            Ok((*line, Instance::new(values)))
        })
        .collect()
}

/// Encodes a labeled table against a fixed schema and label space.
pub fn encode_labeled(
    table: &RawTable,
    label_column: &str,
    schema: &FeatureSchema,
    labels: &LabelSpace,
) -> Result<LabeledDataset> {
    if table.rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    let label_col = table
        .column(label_column)
        .ok_or_else(|| Error::Schema(format!("missing label column {label_column:?}")))?;
    let instances = encode_instances(table, schema, Some(label_column))?;
    let rows = instances
        .into_iter()
        .zip(&table.rows)
        .map(|((line, x), (_, cells))| {
            let cell = &cells[label_col];
            if cell.is_empty() {
                return Err(missing(line, label_column));
            }
            let y = labels.index_of(cell).ok_or_else(|| Error::Parse {
                line,
                message: format!("unknown label {cell:?}"),
            })?;
            Ok((x, y))
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::validated(schema.clone(), labels.clone(), rows)
}

pub fn load_dataset(
    path: &Path,
    format: DataFormat,
    label_column: &str,
    sidecar: Option<&SchemaSidecar>,
) -> Result<LabeledDataset> {
    dataset_from_table(&read_table(path, format)?, label_column, sidecar)
}

fn row_cells(dataset: &LabeledDataset, x: &Instance, y: usize) -> Vec<String> {
    let schema = dataset.schema();
    let mut cells: Vec<String> = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| schema.format_value(i, v))
        .collect();
    cells.push(dataset.label_space().name(y).to_string());
    cells
}

fn header(dataset: &LabeledDataset, label_column: &str) -> Result<Vec<String>> {
    if dataset.schema().position(label_column).is_some() {
        return Err(Error::Schema(format!(
            "label column {label_column:?} collides with a feature name"
        )));
    }
    let mut h: Vec<String> = dataset
        .schema()
        .features()
        .iter()
        .map(|f| f.name().to_string())
        .collect();
    h.push(label_column.to_string());
    Ok(h)
}

pub fn write_dataset<W: Write>(
    dataset: &LabeledDataset,
    label_column: &str,
    format: DataFormat,
    mut writer: W,
) -> Result<()> {
    let columns = header(dataset, label_column)?;
    match format {
        DataFormat::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            w.write_record(&columns)?;
            for (x, y) in dataset.rows() {
                w.write_record(row_cells(dataset, x, *y))?;
            }
            w.flush()?;
        }
        DataFormat::Jsonl => {
            for (x, y) in dataset.rows() {
                let mut obj = serde_json::Map::new();
                for (i, (c, cell)) in columns.iter().zip(row_cells(dataset, x, *y)).enumerate() {
                    let v = match x.values().get(i) {
                        Some(Value::Real(r)) => serde_json::json!(r),
                        _ => serde_json::Value::String(cell),
                    };
                    obj.insert(c.clone(), v);
                }
                serde_json::to_writer(&mut writer, &obj)?;
                writer.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Container
// ---------------------------------------------------------------------------

/// Cell layout note stored with every joint table.
pub const JOINT_LAYOUT: &str = "row-major over features (last fastest), class innermost";

#[derive(Clone, Debug, PartialEq)]
pub enum Artifact {
    NaiveBayes(NaiveBayesModel),
    JointTable(JointTable),
    Generator(GeneratorSpec),
    TripleJoint(TripleJoint),
}

impl Artifact {
    pub fn kind(&self) -> &'static str {
        match self {
            Artifact::NaiveBayes(_) => "naive_bayes",
            Artifact::JointTable(_) => "joint_table",
            Artifact::Generator(_) => "generator_spec",
            Artifact::TripleJoint(_) => "triple_joint",
        }
    }
}

/// A classifier loaded from disk.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    NaiveBayes(NaiveBayesModel),
    Joint(JointTable),
}

impl From<Model> for Artifact {
    fn from(m: Model) -> Self {
        match m {
            Model::NaiveBayes(nb) => Artifact::NaiveBayes(nb),
            Model::Joint(j) => Artifact::JointTable(j),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u64,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema: Option<FeatureSchema>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label_space: Option<LabelSpace>,
    payload: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct NaiveBayesPayload {
    prior: ClassPrior,
    smoothing: SmoothingConfig,
    likelihoods: Vec<FeatureLikelihood>,
}

#[derive(Serialize, Deserialize)]
struct JointPayload {
    layout: String,
    mass: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
enum GeneratorPayload {
    Factored {
        prior: ClassPrior,
        conditionals: ConditionalTable,
    },
    Explicit {
        layout: String,
        mass: Vec<f64>,
    },
}

fn to_value<T: Serialize>(t: &T) -> serde_json::Value {
    serde_json::to_value(t).expect("container payloads always serialize")
}

pub fn to_json(artifact: &Artifact) -> String {
    let (schema, label_space, payload) = match artifact {
        Artifact::NaiveBayes(m) => (
            Some(m.schema().clone()),
            Some(m.label_space().clone()),
            to_value(&NaiveBayesPayload {
                prior: m.prior().clone(),
                smoothing: m.smoothing(),
                likelihoods: m.likelihoods().to_vec(),
            }),
        ),
        Artifact::JointTable(j) => (
            Some(j.schema().clone()),
            Some(j.label_space().clone()),
            to_value(&JointPayload {
                layout: JOINT_LAYOUT.into(),
                mass: j.masses().to_vec(),
            }),
        ),
        Artifact::Generator(g) => (
            Some(g.schema().clone()),
            Some(g.label_space().clone()),
            to_value(&match g {
                GeneratorSpec::Factored(f) => GeneratorPayload::Factored {
                    prior: f.prior().clone(),
                    conditionals: f.conditionals().clone(),
                },
                GeneratorSpec::Explicit(j) => GeneratorPayload::Explicit {
                    layout: JOINT_LAYOUT.into(),
                    mass: j.masses().to_vec(),
                },
            }),
        ),
        Artifact::TripleJoint(t) => (None, None, to_value(&t.to_repr())),
    };
    let envelope = Envelope {
        format_version: FORMAT_VERSION,
        kind: artifact.kind().to_string(),
        schema,
        label_space,
        payload,
    };
    let mut text = serde_json::to_string_pretty(&envelope).expect("envelope serializes");
    text.push('\n');
    text
}

fn container_err(e: serde_json::Error) -> Error {
    Error::Container(e.to_string())
}

pub fn from_json(text: &str) -> Result<Artifact> {
    let raw: serde_json::Value = serde_json::from_str(text).map_err(container_err)?;
    let version = raw
        .get("format_version")
        .ok_or_else(|| Error::Container("missing format_version".into()))?
        .as_u64()
        .ok_or_else(|| Error::Container("format_version must be a non-negative integer".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let env: Envelope = serde_json::from_value(raw).map_err(container_err)?;
    let schema_parts = |env: &Envelope| -> Result<(FeatureSchema, LabelSpace)> {
        match (&env.schema, &env.label_space) {
            (Some(s), Some(l)) => Ok((s.clone(), l.clone())),
            _ => Err(Error::Container(format!(
                "{} container needs schema and label_space",
                env.kind
            ))),
        }
    };
    match env.kind.as_str() {
        "naive_bayes" => {
            let (schema, labels) = schema_parts(&env)?;
            let p: NaiveBayesPayload =
                serde_json::from_value(env.payload).map_err(container_err)?;
            let smoothing = SmoothingConfig::new(p.smoothing.alpha, p.smoothing.alpha_prior)?;
            Ok(Artifact::NaiveBayes(NaiveBayesModel::from_parts(
                schema,
                labels,
                p.prior,
                p.likelihoods,
                smoothing,
            )?))
        }
        "joint_table" => {
            let (schema, labels) = schema_parts(&env)?;
            let p: JointPayload = serde_json::from_value(env.payload).map_err(container_err)?;
            check_layout(&p.layout)?;
            Ok(Artifact::JointTable(JointTable::new(
                schema, labels, p.mass,
            )?))
        }
        "generator_spec" => {
            let (schema, labels) = schema_parts(&env)?;
            let p: GeneratorPayload = serde_json::from_value(env.payload).map_err(container_err)?;
            let spec = match p {
                GeneratorPayload::Factored {
                    prior,
                    conditionals,
                } => {
                    GeneratorSpec::Factored(FactoredSpec::new(schema, labels, prior, conditionals)?)
                }
                GeneratorPayload::Explicit { layout, mass } => {
                    check_layout(&layout)?;
                    GeneratorSpec::Explicit(JointTable::new(schema, labels, mass)?)
                }
            };
            Ok(Artifact::Generator(spec))
        }
        "triple_joint" => {
            let repr: TripleJointRepr =
                serde_json::from_value(env.payload).map_err(container_err)?;
            Ok(Artifact::TripleJoint(TripleJoint::from_repr(repr)?))
        }
        other => Err(Error::Container(format!("unknown kind {other:?}"))),
    }
}

fn check_layout(layout: &str) -> Result<()> {
    if layout != JOINT_LAYOUT {
        return Err(Error::Container(format!(
            "unsupported joint layout {layout:?}"
        )));
    }
    Ok(())
}

pub fn save_artifact(artifact: &Artifact, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(artifact))?;
    Ok(())
}

pub fn load_artifact(path: &Path) -> Result<Artifact> {
    from_json(&std::fs::read_to_string(path)?)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    save_artifact(&model.clone().into(), path)
}

pub fn load_model(path: &Path) -> Result<Model> {
    match load_artifact(path)? {
        Artifact::NaiveBayes(m) => Ok(Model::NaiveBayes(m)),
        Artifact::JointTable(j) => Ok(Model::Joint(j)),
        other => Err(Error::Container(format!(
            "expected a naive_bayes or joint_table model, found {}",
            other.kind()
        ))),
    }
}

/// Accepts a generator spec, a joint table, or an all-categorical naive
/// Bayes model (read as a factored generator).
pub fn load_generator(path: &Path) -> Result<GeneratorSpec> {
    match load_artifact(path)? {
        Artifact::Generator(g) => Ok(g),
        Artifact::JointTable(j) => Ok(GeneratorSpec::Explicit(j)),
        Artifact::NaiveBayes(m) => Ok(GeneratorSpec::Factored(FactoredSpec::from_naive_model(&m)?)),
        Artifact::TripleJoint(_) => Err(Error::Container(
            "a triple_joint cannot generate labeled rows".into(),
        )),
    }
}

pub fn load_triple_joint(path: &Path) -> Result<TripleJoint> {
    match load_artifact(path)? {
        Artifact::TripleJoint(t) => Ok(t),
        other => Err(Error::Container(format!(
            "expected a triple_joint, found {}",
            other.kind()
        ))),
    }
}
