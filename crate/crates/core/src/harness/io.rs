//! Delimited result files and the on-disk formats for classes,
//! environments, families, samples and policies.
//!
//! Class table (`.csv`):
//!
//! ```text
//! # functions=2 contexts=1 actions=3 range_bound=1.0000000000000000e0
//! function,context,action,value
//! 0,∅,a1,8.0000000000000004e-1
//! ```
//!
//! Rows may come in any order but every `(function, context, action)` cell
//! must appear exactly once. Contexts and actions are registered in order of
//! first appearance.
//!
//! Environment (`.toml`): `class` (path relative to the file), `f_star`
//! (function index), optional `probs` (defaults to uniform) and a `[noise]`
//! table. Family (`.toml`): `classes` (list of paths) and optional
//! `true_index`.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{
    ActionSpace, ContextDist, ContextSpace, DeterministicPolicy, FunctionClass, LabeledDataset,
    MixturePolicy, Sample,
};
use crate::environment::{Environment, NoiseModel};
use crate::error::{Error, Result};
use crate::modsel::ModelFamily;

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_real(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_real(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::validation("real field", format!("cannot parse {s:?}")))
}

fn parse_index(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::validation("integer field", format!("cannot parse {s:?}")))
}

/// A row type with a fixed column schema.
pub trait Record {
    fn header() -> &'static [&'static str];
    fn cells(&self) -> Vec<Cell>;
}

fn sink_error(e: impl std::fmt::Display) -> Error {
    Error::io(
        "<result sink>",
        std::io::Error::other(e.to_string()),
    )
}

/// Header plus one row per record, newline-terminated.
pub fn emit_results<R: Record, W: Write>(records: &[R], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(R::header()).map_err(sink_error)?;
    for r in records {
        let cells = r.cells();
        debug_assert_eq!(cells.len(), R::header().len());
        w.write_record(cells.iter().map(Cell::render)).map_err(sink_error)?;
    }
    w.flush().map_err(sink_error)
}

pub fn write_results<R: Record>(records: &[R], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    emit_results(records, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Reads a result file back as header plus string rows.
pub fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| csv_error(path, e))?;
    Ok((header, rows))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }
    }
}

fn parse_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Resolves `p` against the directory of `base`.
pub fn relative_to(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

pub fn write_class(class: &FunctionClass, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    writeln!(
        file,
        "# functions={} contexts={} actions={} range_bound={}",
        class.len(),
        class.n_contexts(),
        class.n_actions(),
        format_real(class.range_bound())
    )
    .map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| csv_error(path, e);
    w.write_record(["function", "context", "action", "value"]).map_err(io)?;
    let xs = class.contexts().ids();
    let as_ = class.actions().ids();
    for f in 0..class.len() {
        for (x, xid) in xs.iter().enumerate() {
            for (a, aid) in as_.iter().enumerate() {
                w.write_record([
                    f.to_string(),
                    xid.clone(),
                    aid.clone(),
                    format_real(class.value(f, x, a)),
                ])
                .map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn parse_class_header(path: &Path, line: &str) -> Result<(usize, usize, usize, f64)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| parse_err(path, "missing '#' header line"))?;
    let mut fields = HashMap::new();
    for kv in body.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| parse_err(path, format!("bad header field {kv:?}")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| parse_err(path, format!("header lacks {k}")))
    };
    let int = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| parse_err(path, format!("bad {k}"))) };
    let bound = get("range_bound")?
        .parse()
        .map_err(|_| parse_err(path, "bad range_bound"))?;
    Ok((int("functions")?, int("contexts")?, int("actions")?, bound))
}

pub fn read_class(path: &Path) -> Result<FunctionClass> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| Error::io(path, e))?;
    let (nf, nx, na, bound) = parse_class_header(path, first.trim_end())?;

    let mut csv = csv::Reader::from_reader(reader);
    let header: Vec<String> = csv
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != ["function", "context", "action", "value"] {
        return Err(parse_err(path, format!("unexpected columns {header:?}")));
    }
    let mut contexts: Vec<String> = Vec::new();
    let mut actions: Vec<String> = Vec::new();
    let mut cx: HashMap<String, usize> = HashMap::new();
    let mut ca: HashMap<String, usize> = HashMap::new();
    let mut cells: Vec<Option<f64>> = vec![None; nf * nx * na];
    for (line, rec) in csv.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let at = |msg: String| parse_err(path, format!("row {}: {msg}", line + 1));
        if rec.len() != 4 {
            return Err(at(format!("{} fields", rec.len())));
        }
        let f = parse_index(&rec[0]).map_err(|e| at(e.to_string()))?;
        let x = *cx.entry(rec[1].to_string()).or_insert_with(|| {
            contexts.push(rec[1].to_string());
            contexts.len() - 1
        });
        let a = *ca.entry(rec[2].to_string()).or_insert_with(|| {
            actions.push(rec[2].to_string());
            actions.len() - 1
        });
        let v = parse_real(&rec[3]).map_err(|e| at(e.to_string()))?;
        if f >= nf || x >= nx || a >= na {
            return Err(at("cell outside the declared sizes".into()));
        }
        let slot = &mut cells[(f * nx + x) * na + a];
        if slot.is_some() {
            return Err(at("duplicate cell".into()));
        }
        *slot = Some(v);
    }
    let values = cells
        .into_iter()
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| parse_err(path, "missing cells"))?;
    FunctionClass::new(ContextSpace::new(contexts)?, ActionSpace::new(actions)?, values, bound)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentFile {
    pub class: PathBuf,
    pub f_star: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default)]
    pub noise: NoiseModel,
}

/// Loads an environment file and the class it references.
pub fn read_environment(path: &Path) -> Result<(FunctionClass, Environment)> {
    let file: EnvironmentFile =
        toml::from_str(&read_text(path)?).map_err(|e| parse_err(path, e.to_string()))?;
    let class = read_class(&relative_to(path, &file.class))?;
    let dist = match file.probs {
        Some(p) => ContextDist::new(p)?,
        None => ContextDist::uniform(class.n_contexts())?,
    };
    let env = Environment::from_class(&class, file.f_star, dist, file.noise)?;
    Ok((class, env))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub classes: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_index: Option<usize>,
}

pub fn read_family(path: &Path) -> Result<ModelFamily> {
    let file: FamilyFile =
        toml::from_str(&read_text(path)?).map_err(|e| parse_err(path, e.to_string()))?;
    let classes = file
        .classes
        .iter()
        .map(|p| read_class(&relative_to(path, p)))
        .collect::<Result<Vec<_>>>()?;
    ModelFamily::new(classes, file.true_index)
}

/// Sampled records of several trials: `trial,t,context,action,reward`.
pub struct SampleRow<'a> {
    pub trial: u64,
    pub t: usize,
    pub sample: &'a Sample,
    pub class: &'a FunctionClass,
}

impl Record for SampleRow<'_> {
    fn header() -> &'static [&'static str] {
        &["trial", "t", "context", "action", "reward"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.trial.into(),
            self.t.into(),
            self.class.contexts().ids()[self.sample.context].as_str().into(),
            self.class.actions().ids()[self.sample.action].as_str().into(),
            self.sample.reward.into(),
        ]
    }
}

/// Reads a samples file, grouped by trial in file order.
pub fn read_samples(path: &Path, class: &FunctionClass) -> Result<Vec<(u64, LabeledDataset)>> {
    let (header, rows) = read_rows(path)?;
    if header != SampleRow::header() {
        return Err(parse_err(path, format!("unexpected columns {header:?}")));
    }
    let mut out: Vec<(u64, LabeledDataset)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let at = |msg: String| parse_err(path, format!("row {}: {msg}", i + 1));
        let trial = parse_index(&row[0]).map_err(|e| at(e.to_string()))? as u64;
        let context = class
            .contexts()
            .position(&row[2])
            .ok_or_else(|| at(format!("unknown context {:?}", row[2])))?;
        let action = class
            .actions()
            .position(&row[3])
            .ok_or_else(|| at(format!("unknown action {:?}", row[3])))?;
        let reward = parse_real(&row[4]).map_err(|e| at(e.to_string()))?;
        let s = Sample {
            context,
            action,
            reward,
        };
        match out.last_mut() {
            Some((t, d)) if *t == trial => d.push(s),
            _ => out.push((trial, LabeledDataset::from_records(vec![s]))),
        }
    }
    Ok(out)
}

struct PolicyRow<'a> {
    member: usize,
    context: &'a str,
    action: &'a str,
}

impl Record for PolicyRow<'_> {
    fn header() -> &'static [&'static str] {
        &["member", "context", "action"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![self.member.into(), self.context.into(), self.action.into()]
    }
}

/// One block of `member,context,action` rows per mixture member.
pub fn write_policy(policy: &MixturePolicy, class: &FunctionClass, path: &Path) -> Result<()> {
    let xs = class.contexts().ids();
    let as_ = class.actions().ids();
    let rows: Vec<PolicyRow> = policy
        .members()
        .iter()
        .enumerate()
        .flat_map(|(m, p)| {
            p.actions().iter().enumerate().map(move |(x, &a)| PolicyRow {
                member: m,
                context: &xs[x],
                action: &as_[a],
            })
        })
        .collect();
    write_results(&rows, path)
}

pub fn read_policy(path: &Path, class: &FunctionClass) -> Result<MixturePolicy> {
    let (header, rows) = read_rows(path)?;
    if header != PolicyRow::header() {
        return Err(parse_err(path, format!("unexpected columns {header:?}")));
    }
    let nx = class.n_contexts();
    let mut members: Vec<Vec<Option<usize>>> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let at = |msg: String| parse_err(path, format!("row {}: {msg}", i + 1));
        let m = parse_index(&row[0]).map_err(|e| at(e.to_string()))?;
        let x = class
            .contexts()
            .position(&row[1])
            .ok_or_else(|| at(format!("unknown context {:?}", row[1])))?;
        let a = class
            .actions()
            .position(&row[2])
            .ok_or_else(|| at(format!("unknown action {:?}", row[2])))?;
        if m >= members.len() {
            members.resize(m + 1, vec![None; nx]);
        }
        members[m][x] = Some(a);
    }
    let members = members
        .into_iter()
        .map(|acts| acts.into_iter().collect::<Option<Vec<_>>>().map(DeterministicPolicy::new))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| parse_err(path, "some member lacks a context"))?;
    MixturePolicy::new(members)
}
