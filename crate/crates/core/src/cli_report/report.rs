//! Experiment reports and their canonical JSON, CSV and plot-data forms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::CliError;

/// A JSON-like value with an exact, canonical text form.
#[derive(Debug, Clone, PartialEq)]
pub enum Datum {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    List(Vec<Datum>),
    Map(BTreeMap<String, Datum>),
}

impl From<f64> for Datum {
    fn from(x: f64) -> Self {
        Datum::Num(x)
    }
}

impl From<bool> for Datum {
    fn from(x: bool) -> Self {
        Datum::Bool(x)
    }
}

impl From<usize> for Datum {
    fn from(x: usize) -> Self {
        Datum::Int(x as i64)
    }
}

impl From<u32> for Datum {
    fn from(x: u32) -> Self {
        Datum::Int(x as i64)
    }
}

impl From<u64> for Datum {
    fn from(x: u64) -> Self {
        Datum::Int(x as i64)
    }
}

impl From<i64> for Datum {
    fn from(x: i64) -> Self {
        Datum::Int(x)
    }
}

impl From<&str> for Datum {
    fn from(x: &str) -> Self {
        Datum::Str(x.into())
    }
}

impl From<String> for Datum {
    fn from(x: String) -> Self {
        Datum::Str(x)
    }
}

impl<T: Into<Datum>> From<Vec<T>> for Datum {
    fn from(v: Vec<T>) -> Self {
        Datum::List(v.into_iter().map(Into::into).collect())
    }
}

impl From<serde_json::Value> for Datum {
    fn from(v: serde_json::Value) -> Self {
        use serde_json::Value as V;
        match v {
            V::Null => Datum::Null,
            V::Bool(b) => Datum::Bool(b),
            V::Number(n) => match n.as_i64() {
                Some(i) if !n.is_f64() => Datum::Int(i),
                _ => Datum::Num(n.as_f64().unwrap_or(f64::NAN)),
            },
            V::String(s) => match s.as_str() {
                "Infinity" => Datum::Num(f64::INFINITY),
                "-Infinity" => Datum::Num(f64::NEG_INFINITY),
                "NaN" => Datum::Num(f64::NAN),
                _ => Datum::Str(s),
            },
            V::Array(a) => Datum::List(a.into_iter().map(Datum::from).collect()),
            V::Object(o) => Datum::Map(o.into_iter().map(|(k, v)| (k, Datum::from(v))).collect()),
        }
    }
}

/// Any serializable value; non-finite floats inside become `null`.
pub fn datum_of<T: serde::Serialize>(x: &T) -> Datum {
    Datum::from(serde_json::to_value(x).expect("plain data serializes"))
}

/// `{:.16e}`: 17 significant digits, exact for every finite `f64`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "\"NaN\"".into()
    } else if x.is_infinite() {
        if x > 0.0 { "\"Infinity\"".into() } else { "\"-Infinity\"".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl Datum {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Datum::Num(x) => Some(*x),
            Datum::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn write(&self, out: &mut String, indent: Option<usize>) {
        let nl = |out: &mut String, level: usize| {
            if let Some(step) = indent {
                out.push('\n');
                out.extend(std::iter::repeat_n(' ', step * level));
            }
        };
        fn go(d: &Datum, out: &mut String, indent: Option<usize>, level: usize, nl: &dyn Fn(&mut String, usize)) {
            match d {
                Datum::Null => out.push_str("null"),
                Datum::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
                Datum::Int(i) => {
                    let _ = write!(out, "{i}");
                }
                Datum::Num(x) => out.push_str(&fmt_num(*x)),
                Datum::Str(s) => out.push_str(&serde_json::to_string(s).expect("string")),
                Datum::List(v) if v.is_empty() => out.push_str("[]"),
                Datum::List(v) => {
                    out.push('[');
                    for (i, x) in v.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        nl(out, level + 1);
                        go(x, out, indent, level + 1, nl);
                    }
                    nl(out, level);
                    out.push(']');
                }
                Datum::Map(m) if m.is_empty() => out.push_str("{}"),
                Datum::Map(m) => {
                    out.push('{');
                    for (i, (k, x)) in m.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        nl(out, level + 1);
                        out.push_str(&serde_json::to_string(k).expect("key"));
                        out.push(':');
                        if indent.is_some() {
                            out.push(' ');
                        }
                        go(x, out, indent, level + 1, nl);
                    }
                    nl(out, level);
                    out.push('}');
                }
            }
        }
        go(self, out, indent, 0, &nl);
    }

    /// Sorted keys, two-space indentation, canonical numbers.
    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, Some(2));
        s
    }

    pub fn to_compact(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, None);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Le => "<=",
            Comparison::Lt => "<",
            Comparison::Ge => ">=",
            Comparison::Gt => ">",
            Comparison::Eq => "==",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "<=" => Comparison::Le,
            "<" => Comparison::Lt,
            ">=" => Comparison::Ge,
            ">" => Comparison::Gt,
            "==" => Comparison::Eq,
            _ => return None,
        })
    }

    fn holds(self, a: &Datum, b: &Datum) -> bool {
        match (self, a.as_f64(), b.as_f64()) {
            (Comparison::Eq, _, _) => a == b,
            (Comparison::Le, Some(x), Some(y)) => x <= y,
            (Comparison::Lt, Some(x), Some(y)) => x < y,
            (Comparison::Ge, Some(x), Some(y)) => x >= y,
            (Comparison::Gt, Some(x), Some(y)) => x > y,
            _ => false,
        }
    }
}

/// One verified claim: `measured <comparison> threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub id: String,
    /// The library operation that produced the measurement.
    pub operation: String,
    pub inputs: BTreeMap<String, Datum>,
    pub measured: Datum,
    pub comparison: Comparison,
    pub threshold: Datum,
    pub passed: bool,
    /// Supporting measurements.
    pub details: BTreeMap<String, Datum>,
}

impl CheckRecord {
    pub fn new(
        id: impl Into<String>,
        operation: &str,
        measured: impl Into<Datum>,
        comparison: Comparison,
        threshold: impl Into<Datum>,
    ) -> Self {
        let (measured, threshold) = (measured.into(), threshold.into());
        Self {
            id: id.into(),
            operation: operation.into(),
            inputs: BTreeMap::new(),
            passed: comparison.holds(&measured, &threshold),
            measured,
            comparison,
            threshold,
            details: BTreeMap::new(),
        }
    }

    /// A check that could not be carried out; it fails with the error text as measurement.
    pub fn error(id: impl Into<String>, operation: &str, message: String, expected: impl Into<Datum>) -> Self {
        let mut c = Self::new(id, operation, Datum::Str(message), Comparison::Eq, expected);
        c.passed = false;
        c
    }

    pub fn input(mut self, key: &str, v: impl Into<Datum>) -> Self {
        self.inputs.insert(key.into(), v.into());
        self
    }

    pub fn detail(mut self, key: &str, v: impl Into<Datum>) -> Self {
        self.details.insert(key.into(), v.into());
        self
    }

    fn to_datum(&self) -> Datum {
        let mut m = BTreeMap::new();
        m.insert("id".into(), Datum::Str(self.id.clone()));
        m.insert("operation".into(), Datum::Str(self.operation.clone()));
        m.insert("inputs".into(), Datum::Map(self.inputs.clone()));
        m.insert("measured".into(), self.measured.clone());
        m.insert("comparison".into(), Datum::Str(self.comparison.symbol().into()));
        m.insert("threshold".into(), self.threshold.clone());
        m.insert("passed".into(), Datum::Bool(self.passed));
        m.insert("details".into(), Datum::Map(self.details.clone()));
        Datum::Map(m)
    }

    /// One line naming the operation, the measurement and the threshold.
    pub fn summary(&self) -> String {
        format!(
            "{} {}: {} = {} {} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.operation,
            self.measured.to_compact(),
            self.comparison.symbol(),
            self.threshold.to_compact()
        )
    }
}

/// A two-column series for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

/// An auxiliary table, written as its own CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Datum>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub suite: String,
    pub config_digest: String,
    pub seed: u64,
    pub environment: BTreeMap<String, Datum>,
    pub checks: Vec<CheckRecord>,
    pub series: Vec<Series>,
    pub tables: Vec<Table>,
    /// Wall-clock time; kept out of the canonical JSON.
    pub runtime_seconds: Option<f64>,
}

pub fn environment_stamp() -> BTreeMap<String, Datum> {
    let mut m = BTreeMap::new();
    m.insert("arch".into(), Datum::from(std::env::consts::ARCH));
    m.insert("os".into(), Datum::from(std::env::consts::OS));
    m.insert("package".into(), Datum::from(env!("CARGO_PKG_NAME")));
    m.insert("version".into(), Datum::from(env!("CARGO_PKG_VERSION")));
    m
}

fn get<'a>(m: &'a BTreeMap<String, Datum>, k: &str) -> Result<&'a Datum, CliError> {
    m.get(k).ok_or_else(|| CliError::Report(format!("missing key {k:?}")))
}

fn get_str(m: &BTreeMap<String, Datum>, k: &str) -> Result<String, CliError> {
    match get(m, k)? {
        Datum::Str(s) => Ok(s.clone()),
        _ => Err(CliError::Report(format!("{k:?} must be a string"))),
    }
}

fn get_map(m: &BTreeMap<String, Datum>, k: &str) -> Result<BTreeMap<String, Datum>, CliError> {
    match get(m, k)? {
        Datum::Map(x) => Ok(x.clone()),
        _ => Err(CliError::Report(format!("{k:?} must be an object"))),
    }
}

fn get_list(m: &BTreeMap<String, Datum>, k: &str) -> Result<Vec<Datum>, CliError> {
    match get(m, k)? {
        Datum::List(x) => Ok(x.clone()),
        _ => Err(CliError::Report(format!("{k:?} must be an array"))),
    }
}

fn as_map(d: &Datum) -> Result<&BTreeMap<String, Datum>, CliError> {
    match d {
        Datum::Map(m) => Ok(m),
        _ => Err(CliError::Report("expected an object".into())),
    }
}

fn num(d: &Datum) -> Result<f64, CliError> {
    d.as_f64().ok_or_else(|| CliError::Report("expected a number".into()))
}

impl ExperimentReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_datum(&self) -> Datum {
        let mut m = BTreeMap::new();
        m.insert("suite".into(), Datum::Str(self.suite.clone()));
        m.insert("config_digest".into(), Datum::Str(self.config_digest.clone()));
        m.insert("seed".into(), Datum::Str(self.seed.to_string()));
        m.insert("environment".into(), Datum::Map(self.environment.clone()));
        m.insert("checks".into(), Datum::List(self.checks.iter().map(CheckRecord::to_datum).collect()));
        m.insert(
            "series".into(),
            Datum::List(
                self.series
                    .iter()
                    .map(|s| {
                        let mut x = BTreeMap::new();
                        x.insert("name".into(), Datum::Str(s.name.clone()));
                        x.insert("x_label".into(), Datum::Str(s.x_label.clone()));
                        x.insert("y_label".into(), Datum::Str(s.y_label.clone()));
                        x.insert(
                            "points".into(),
                            Datum::List(
                                s.points.iter().map(|&(a, b)| Datum::List(vec![a.into(), b.into()])).collect(),
                            ),
                        );
                        Datum::Map(x)
                    })
                    .collect(),
            ),
        );
        m.insert(
            "tables".into(),
            Datum::List(
                self.tables
                    .iter()
                    .map(|t| {
                        let mut x = BTreeMap::new();
                        x.insert("name".into(), Datum::Str(t.name.clone()));
                        x.insert("columns".into(), t.columns.clone().into());
                        x.insert("rows".into(), Datum::List(t.rows.iter().cloned().map(Datum::List).collect()));
                        Datum::Map(x)
                    })
                    .collect(),
            ),
        );
        let passed = self.all_passed();
        m.insert("passed".into(), Datum::Bool(passed));
        Datum::Map(m)
    }

    /// Canonical JSON: sorted keys, `{:.16e}` numbers, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = self.to_datum().to_canonical();
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Report(e.to_string()))?;
        let d = Datum::from(v);
        let m = as_map(&d)?;
        let checks = get_list(m, "checks")?
            .iter()
            .map(|c| {
                let c = as_map(c)?;
                let cmp = get_str(c, "comparison")?;
                Ok(CheckRecord {
                    id: get_str(c, "id")?,
                    operation: get_str(c, "operation")?,
                    inputs: get_map(c, "inputs")?,
                    measured: get(c, "measured")?.clone(),
                    comparison: Comparison::parse(&cmp)
                        .ok_or_else(|| CliError::Report(format!("bad comparison {cmp:?}")))?,
                    threshold: get(c, "threshold")?.clone(),
                    passed: matches!(get(c, "passed")?, Datum::Bool(true)),
                    details: get_map(c, "details")?,
                })
            })
            .collect::<Result<_, CliError>>()?;
        let series = get_list(m, "series")?
            .iter()
            .map(|s| {
                let s = as_map(s)?;
                let points = get_list(s, "points")?
                    .iter()
                    .map(|p| match p {
                        Datum::List(v) if v.len() == 2 => Ok((num(&v[0])?, num(&v[1])?)),
                        _ => Err(CliError::Report("series point must be a pair".into())),
                    })
                    .collect::<Result<_, CliError>>()?;
                Ok(Series {
                    name: get_str(s, "name")?,
                    x_label: get_str(s, "x_label")?,
                    y_label: get_str(s, "y_label")?,
                    points,
                })
            })
            .collect::<Result<_, CliError>>()?;
        let tables = get_list(m, "tables")?
            .iter()
            .map(|t| {
                let t = as_map(t)?;
                let columns = get_list(t, "columns")?
                    .into_iter()
                    .map(|c| match c {
                        Datum::Str(s) => Ok(s),
                        _ => Err(CliError::Report("column names are strings".into())),
                    })
                    .collect::<Result<_, CliError>>()?;
                let rows = get_list(t, "rows")?
                    .into_iter()
                    .map(|r| match r {
                        Datum::List(v) => Ok(v),
                        _ => Err(CliError::Report("table rows are arrays".into())),
                    })
                    .collect::<Result<_, CliError>>()?;
                Ok(Table { name: get_str(t, "name")?, columns, rows })
            })
            .collect::<Result<_, CliError>>()?;
        let seed = get_str(m, "seed")?
            .parse()
            .map_err(|_| CliError::Report("seed must be a decimal u64 string".into()))?;
        Ok(Self {
            suite: get_str(m, "suite")?,
            config_digest: get_str(m, "config_digest")?,
            seed,
            environment: get_map(m, "environment")?,
            checks,
            series,
            tables,
            runtime_seconds: None,
        })
    }

    /// Check records as CSV, one row per record.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Report(e.to_string());
        w.write_record(["id", "operation", "passed", "measured", "comparison", "threshold", "inputs"])
            .map_err(err)?;
        for c in &self.checks {
            w.write_record([
                c.id.as_str(),
                c.operation.as_str(),
                if c.passed { "true" } else { "false" },
                &c.measured.to_compact(),
                c.comparison.symbol(),
                &c.threshold.to_compact(),
                &Datum::Map(c.inputs.clone()).to_compact(),
            ])
            .map_err(err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| CliError::Report(e.to_string()))?)
            .map_err(|e| CliError::Report(e.to_string()))
    }

    pub fn table_csv(table: &Table) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Report(e.to_string());
        w.write_record(&table.columns).map_err(err)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|d| match d {
                Datum::Str(s) => s.clone(),
                d => d.to_compact(),
            }))
            .map_err(err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| CliError::Report(e.to_string()))?)
            .map_err(|e| CliError::Report(e.to_string()))
    }

    /// Series as whitespace-separated `x y` blocks, two blank lines apart.
    pub fn to_plotdata(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.series.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            let _ = writeln!(out, "# {}", s.name);
            let _ = writeln!(out, "# {} {}", s.x_label, s.y_label);
            for &(x, y) in &s.points {
                let _ = writeln!(out, "{} {}", fmt_num(x), fmt_num(y));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Plotdata,
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, CliError> {
    std::fs::write(&path, text).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
    Ok(path)
}

/// Writes one format of `report` into `dir` and returns the file path.
pub fn emit(report: &ExperimentReport, format: Format, dir: &Path) -> Result<PathBuf, CliError> {
    let stem = &report.suite;
    match format {
        Format::Json => write(dir.join(format!("{stem}.json")), &report.to_json()),
        Format::Csv => write(dir.join(format!("{stem}.csv")), &report.to_csv()?),
        Format::Plotdata => write(dir.join(format!("{stem}.plot")), &report.to_plotdata()),
    }
}

/// All formats, the auxiliary tables and the timing file.
pub fn emit_all(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
    let mut files = Vec::new();
    for f in [Format::Json, Format::Csv, Format::Plotdata] {
        files.push(emit(report, f, dir)?);
    }
    for t in &report.tables {
        let p = dir.join(format!("{}_{}.csv", report.suite, t.name));
        files.push(write(p, &ExperimentReport::table_csv(t)?)?);
    }
    if let Some(rt) = report.runtime_seconds {
        files.push(write(dir.join(format!("{}.timing", report.suite)), &format!("{rt:.6}\n"))?);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let checks = vec![
            CheckRecord::new("a", "op_a", 1e-13, Comparison::Le, 1e-12).input("phi", "pow(1)"),
            CheckRecord::new("b", "op_b", "compact", Comparison::Eq, "continuous")
                .detail("values", vec![0.1, f64::INFINITY]),
            CheckRecord::new("c", "op_c", 7usize, Comparison::Ge, 5.0),
        ];
        ExperimentReport {
            suite: "demo".into(),
            config_digest: "00".into(),
            seed: u64::MAX,
            environment: environment_stamp(),
            checks,
            series: vec![Series {
                name: "s".into(),
                x_label: "N".into(),
                y_label: "r".into(),
                points: vec![(1.0, 0.1 + 0.2), (2.0, -0.0)],
            }],
            tables: vec![Table {
                name: "t".into(),
                columns: vec!["x".into(), "label".into()],
                rows: vec![vec![1.5.into(), "a,b".into()]],
            }],
            runtime_seconds: Some(0.25),
        }
    }

    #[test]
    fn comparisons() {
        let r = sample();
        assert_eq!(r.checks.iter().map(|c| c.passed).collect::<Vec<_>>(), vec![true, false, true]);
        assert!(!r.all_passed());
        assert!(r.checks[1].summary().starts_with("FAIL b: op_b = \"compact\" == \"continuous\""));
    }

    #[test]
    fn json_round_trip_is_value_exact() {
        let mut r = sample();
        let text = r.to_json();
        let back = ExperimentReport::from_json(&text).unwrap();
        r.runtime_seconds = None;
        assert_eq!(back, r);
        assert_eq!(back.to_json(), text);
        assert!(text.contains("3.0000000000000004e-1"));
        assert!(!text.contains("0.25"), "runtime stays out of the JSON");
    }

    #[test]
    fn csv_has_one_row_per_record() {
        let r = sample();
        let csv = r.to_csv().unwrap();
        let mut rd = csv::Reader::from_reader(csv.as_bytes());
        assert_eq!(rd.records().count(), r.checks.len());
        let t = ExperimentReport::table_csv(&r.tables[0]).unwrap();
        assert_eq!(t, "x,label\n1.5000000000000000e0,\"a,b\"\n");
    }

    #[test]
    fn plotdata_blocks() {
        let p = sample().to_plotdata();
        assert_eq!(p, "# s\n# N r\n1.0000000000000000e0 3.0000000000000004e-1\n2.0000000000000000e0 -0.0000000000000000e0\n");
    }

    #[test]
    fn emit_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_all(&sample(), dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        assert!(emit(&sample(), Format::Json, &dir.path().join("missing/deeper")).is_err());
    }
}
