//! Uniformly sampled multivariate time series: ingestion, exogenous
//! normalization, unit rescaling, splitting and forward-difference
//! derivative estimation.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Per-variable unit changes applied to produce a frame's values.
///
/// A stored value relates to the raw observation as
/// `stored = raw / (divisor(t) * adjuster(t)/adjuster(0)) / factor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScalingSpec<T> {
    pub factors: Vec<T>,
    /// Name of the exogenous series each variable was divided by.
    pub divisors: Vec<Option<String>>,
    /// Name of the growth-adjustment series, applied as `a(t)/a(0)`.
    pub adjusters: Vec<Option<String>>,
}

impl<T: Scalar> ScalingSpec<T> {
    pub fn identity(n: usize) -> Self {
        Self {
            factors: vec![T::one(); n],
            divisors: vec![None; n],
            adjusters: vec![None; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.factors.len();
        if self.divisors.len() != n || self.adjusters.len() != n {
            return Err(Error::LengthMismatch(
                "scaling spec entries differ in length".into(),
            ));
        }
        if let Some(f) = self.factors.iter().find(|f| !(**f > T::zero()) || !f.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale factors must be positive, got {f}"
            )));
        }
        Ok(())
    }

    /// Converts a state in scaled units back to (exogenously normalized)
    /// raw units by multiplying with the factors.
    pub fn to_raw(&self, scaled: &[T]) -> Vec<T> {
        scaled.iter().zip(&self.factors).map(|(&v, &f)| v * f).collect()
    }

    pub fn to_scaled(&self, raw: &[T]) -> Vec<T> {
        raw.iter().zip(&self.factors).map(|(&v, &f)| v / f).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(|&f| f == T::one())
            && self.divisors.iter().all(Option::is_none)
            && self.adjusters.iter().all(Option::is_none)
    }
}

/// Uniformly sampled observations, one row per time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SeriesFrame<T> {
    names: Vec<String>,
    values: Matrix<T>,
    dt: T,
    origin_label: String,
    time_labels: Option<Vec<String>>,
    scaling: Option<ScalingSpec<T>>,
}

impl<T: Scalar> SeriesFrame<T> {
    pub fn new(names: Vec<String>, values: Matrix<T>, dt: T) -> Result<Self> {
        if names.len() != values.cols() {
            return Err(Error::DimensionMismatch {
                expected: values.cols(),
                got: names.len(),
            });
        }
        if names.is_empty() {
            return Err(Error::InvalidArgument("a series needs at least one variable".into()));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::DuplicateName(n.clone()));
            }
        }
        if values.rows() < 2 {
            return Err(Error::TooFewRows {
                needed: 2,
                got: values.rows(),
            });
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if !values.is_finite() {
            return Err(Error::NonFinite("series values"));
        }
        Ok(Self {
            names,
            values,
            dt,
            origin_label: String::new(),
            time_labels: None,
            scaling: None,
        })
    }

    /// Convenience constructor from row vectors.
    pub fn from_rows(names: &[&str], rows: &[Vec<T>], dt: T) -> Result<Self> {
        Self::new(
            names.iter().map(|s| s.to_string()).collect(),
            Matrix::from_rows(rows)?,
            dt,
        )
    }

    pub fn with_origin(mut self, label: impl Into<String>) -> Self {
        self.origin_label = label.into();
        self
    }

    pub fn with_time_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::LengthMismatch(format!(
                "{} time labels for {} rows",
                labels.len(),
                self.len()
            )));
        }
        self.time_labels = Some(labels);
        Ok(self)
    }

    pub fn with_scaling(mut self, scaling: ScalingSpec<T>) -> Result<Self> {
        if scaling.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: scaling.dim(),
            });
        }
        scaling.validate()?;
        self.scaling = Some(scaling);
        Ok(self)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn origin_label(&self) -> &str {
        &self.origin_label
    }

    pub fn time_labels(&self) -> Option<&[String]> {
        self.time_labels.as_deref()
    }

    pub fn scaling(&self) -> Option<&ScalingSpec<T>> {
        self.scaling.as_ref()
    }

    /// Scaling in effect, identity when none was applied.
    pub fn effective_scaling(&self) -> ScalingSpec<T> {
        self.scaling
            .clone()
            .unwrap_or_else(|| ScalingSpec::identity(self.dim()))
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    /// Number of variables.
    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, t: usize) -> &[T] {
        self.values.row(t)
    }

    pub fn last_row(&self) -> &[T] {
        self.values.row(self.len() - 1)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Rows `[start, end)` as a new frame sharing metadata. Frames of fewer
    /// than two rows are allowed here because walk-forward windows and test
    /// segments are carved out with this.
    pub fn rows_range(&self, start: usize, end: usize) -> Self {
        Self {
            names: self.names.clone(),
            values: self.values.slice_rows(start, end),
            dt: self.dt,
            origin_label: self.origin_label.clone(),
            time_labels: self
                .time_labels
                .as_ref()
                .map(|l| l[start..end].to_vec()),
            scaling: self.scaling.clone(),
        }
    }

    fn replace_values(&self, values: Matrix<T>, scaling: Option<ScalingSpec<T>>) -> Self {
        Self {
            names: self.names.clone(),
            values,
            dt: self.dt,
            origin_label: self.origin_label.clone(),
            time_labels: self.time_labels.clone(),
            scaling,
        }
    }

    /// Values multiplied back by the recorded scale factors.
    pub fn unscaled(&self) -> Self {
        match &self.scaling {
            None => self.clone(),
            Some(s) => {
                let mut v = self.values.clone();
                for t in 0..v.rows() {
                    let raw = s.to_raw(v.row(t));
                    v.row_mut(t).copy_from_slice(&raw);
                }
                let mut rest = s.clone();
                rest.factors = vec![T::one(); s.dim()];
                let rest = (!rest.is_identity()).then_some(rest);
                self.replace_values(v, rest)
            }
        }
    }
}

/// Column selection for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Header of a time/label column, excluded from the numeric data.
    pub time_column: Option<String>,
    /// `(csv header, variable name)` pairs; empty selects every non-time
    /// column under its header name.
    pub columns: Vec<(String, String)>,
    pub dt: f64,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time_column: None,
            columns: Vec::new(),
            dt: 1.0,
        }
    }
}

/// Reads a CSV file with a header row into a frame.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<SeriesFrame<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema, &path.display().to_string())
}

/// Header row of a CSV file.
pub fn csv_headers(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    Ok(rdr.headers()?.iter().map(str::to_string).collect())
}

pub fn read_csv<T: Scalar, R: Read>(
    reader: R,
    schema: &CsvSchema,
    origin_label: &str,
) -> Result<SeriesFrame<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |h: &str| {
        headers
            .iter()
            .position(|x| x == h)
            .ok_or_else(|| Error::MissingColumn(h.to_string()))
    };
    let time_idx = schema.time_column.as_deref().map(find).transpose()?;
    let selected: Vec<(usize, String)> = if schema.columns.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != time_idx)
            .map(|(i, h)| (i, h.clone()))
            .collect()
    } else {
        schema
            .columns
            .iter()
            .map(|(h, name)| Ok((find(h)?, name.clone())))
            .collect::<Result<_>>()?
    };
    let mut seen = HashSet::new();
    for (_, name) in &selected {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateName(name.clone()));
        }
    }

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        for (idx, name) in &selected {
            let cell = record.get(*idx).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::MissingValue {
                    row: row_no,
                    column: name.clone(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: row_no,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumeric {
                    row: row_no,
                    column: name.clone(),
                    value: cell.to_string(),
                });
            }
            data.push(T::lit(v));
        }
        if let Some(ti) = time_idx {
            labels.push(record.get(ti).unwrap_or("").to_string());
        }
        rows += 1;
    }
    if rows < 2 {
        return Err(Error::TooFewRows { needed: 2, got: rows });
    }
    let values = Matrix::from_vec(rows, selected.len(), data)?;
    let frame = SeriesFrame::new(
        selected.into_iter().map(|(_, n)| n).collect(),
        values,
        T::lit(schema.dt),
    )?
    .with_origin(origin_label);
    if time_idx.is_some() {
        frame.with_time_labels(labels)
    } else {
        Ok(frame)
    }
}

fn exogenous_column<T: Scalar>(
    frame: &SeriesFrame<T>,
    exo: &SeriesFrame<T>,
    target: &str,
    role: &str,
) -> Result<Vec<T>> {
    if exo.len() != frame.len() {
        return Err(Error::LengthMismatch(format!(
            "{role} for '{target}' has {} rows, series has {}",
            exo.len(),
            frame.len()
        )));
    }
    if exo.dt() != frame.dt() {
        return Err(Error::LengthMismatch(format!(
            "{role} for '{target}' has dt {}, series has {}",
            exo.dt(),
            frame.dt()
        )));
    }
    let col = exo.values().column(0);
    if let Some(row) = col.iter().position(|v| !(*v > T::zero())) {
        return Err(Error::NonPositiveDivisor {
            variable: target.to_string(),
            row: row + 1,
        });
    }
    Ok(col)
}

/// Divides targeted variables by time-aligned exogenous series, and
/// optionally by the growth factor `a(t)/a(0)` of an adjuster series.
///
/// The first column of each exogenous frame is used; its name is recorded
/// in the resulting [`ScalingSpec`].
pub fn normalize_by_exogenous<T: Scalar>(
    frame: &SeriesFrame<T>,
    divisors: &BTreeMap<String, SeriesFrame<T>>,
    adjusters: &BTreeMap<String, SeriesFrame<T>>,
) -> Result<SeriesFrame<T>> {
    let mut values = frame.values().clone();
    let mut scaling = frame.effective_scaling();
    for (target, exo) in divisors {
        let j = frame
            .column_index(target)
            .ok_or_else(|| Error::MissingColumn(target.clone()))?;
        let d = exogenous_column(frame, exo, target, "divisor")?;
        for (t, dt) in d.iter().enumerate() {
            values[(t, j)] = values[(t, j)] / *dt;
        }
        scaling.divisors[j] = Some(exo.names()[0].clone());
    }
    for (target, exo) in adjusters {
        let j = frame
            .column_index(target)
            .ok_or_else(|| Error::MissingColumn(target.clone()))?;
        let a = exogenous_column(frame, exo, target, "adjuster")?;
        let a0 = a[0];
        for (t, at) in a.iter().enumerate() {
            values[(t, j)] = values[(t, j)] / (*at / a0);
        }
        scaling.adjusters[j] = Some(exo.names()[0].clone());
    }
    Ok(frame.replace_values(values, Some(scaling)))
}

/// How [`rescale`] picks per-variable unit factors.
#[derive(Debug, Clone, PartialEq)]
pub enum Rescale<T> {
    /// Divide each variable by its maximum over the frame.
    Max,
    None,
    Explicit(Vec<T>),
}

/// Per-variable maxima, the factors used by [`Rescale::Max`].
pub fn max_factors<T: Scalar>(frame: &SeriesFrame<T>) -> Result<Vec<T>> {
    (0..frame.dim())
        .map(|j| {
            let m = frame
                .values()
                .column(j)
                .into_iter()
                .fold(T::neg_infinity(), T::max);
            if m > T::zero() {
                Ok(m)
            } else {
                Err(Error::InvalidArgument(format!(
                    "variable '{}' has no positive maximum; max scaling undefined",
                    frame.names()[j]
                )))
            }
        })
        .collect()
}

/// Divides each variable by a unit factor and records it.
pub fn rescale<T: Scalar>(frame: &SeriesFrame<T>, mode: &Rescale<T>) -> Result<SeriesFrame<T>> {
    let factors = match mode {
        Rescale::None => return Ok(frame.clone()),
        Rescale::Max => max_factors(frame)?,
        Rescale::Explicit(f) => {
            if f.len() != frame.dim() {
                return Err(Error::DimensionMismatch {
                    expected: frame.dim(),
                    got: f.len(),
                });
            }
            if let Some(bad) = f.iter().find(|v| !(**v > T::zero()) || !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "scale factors must be positive, got {bad}"
                )));
            }
            f.clone()
        }
    };
    let mut values = frame.values().clone();
    for t in 0..values.rows() {
        for (v, f) in values.row_mut(t).iter_mut().zip(&factors) {
            *v = *v / *f;
        }
    }
    let mut scaling = frame.effective_scaling();
    for (acc, f) in scaling.factors.iter_mut().zip(&factors) {
        *acc = *acc * *f;
    }
    Ok(frame.replace_values(values, Some(scaling)))
}

/// Forward-difference derivative samples paired with their left endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeSamples<T> {
    pub states: Matrix<T>,
    pub derivs: Matrix<T>,
    pub dt: T,
}

impl<T: Scalar> DerivativeSamples<T> {
    pub fn len(&self) -> usize {
        self.states.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.states.cols()
    }
}

pub fn estimate_derivatives<T: Scalar>(frame: &SeriesFrame<T>) -> Result<DerivativeSamples<T>> {
    let t_len = frame.len();
    if t_len < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: t_len,
        });
    }
    let n = frame.dim();
    let dt = frame.dt();
    let states = frame.values().slice_rows(0, t_len - 1);
    let mut derivs = Matrix::zeros(t_len - 1, n);
    for k in 0..t_len - 1 {
        let (a, b) = (frame.row(k), frame.row(k + 1));
        for j in 0..n {
            derivs[(k, j)] = (b[j] - a[j]) / dt;
        }
    }
    Ok(DerivativeSamples { states, derivs, dt })
}

/// Splits off the last `test_len` rows; training keeps at least three.
pub fn split<T: Scalar>(
    frame: &SeriesFrame<T>,
    test_len: usize,
) -> Result<(SeriesFrame<T>, SeriesFrame<T>)> {
    let t_len = frame.len();
    if test_len < 2 || test_len + 3 > t_len {
        return Err(Error::InvalidArgument(format!(
            "test length {test_len} out of range 2..={} for a series of {t_len} rows",
            t_len.saturating_sub(3)
        )));
    }
    let cut = t_len - test_len;
    Ok((frame.rows_range(0, cut), frame.rows_range(cut, t_len)))
}

/// Appends `tail` below `head`; both must share variables and dt.
pub fn concat<T: Scalar>(head: &SeriesFrame<T>, tail: &SeriesFrame<T>) -> Result<SeriesFrame<T>> {
    if head.names() != tail.names() || head.dt() != tail.dt() {
        return Err(Error::InvalidArgument(
            "frames differ in variables or dt".into(),
        ));
    }
    let values = head.values().vstack(tail.values())?;
    let labels = match (head.time_labels(), tail.time_labels()) {
        (Some(a), Some(b)) => Some([a, b].concat()),
        _ => None,
    };
    let mut out = head.replace_values(values, head.scaling.clone());
    out.time_labels = labels;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(rows: &[Vec<f64>]) -> SeriesFrame<f64> {
        let names: Vec<String> = (0..rows[0].len()).map(|i| format!("v{i}")).collect();
        SeriesFrame::new(names, Matrix::from_rows(rows).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn parses_small_csv() {
        let csv = "month,readers,edits\n2008-01,1.0,2.0\n2008-02,1.5,2.5\n2008-03,2.0,3.5\n";
        let schema = CsvSchema {
            time_column: Some("month".into()),
            ..Default::default()
        };
        let f: SeriesFrame<f64> = read_csv(csv.as_bytes(), &schema, "inline").unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.dim(), 2);
        assert_eq!(f.names(), ["readers", "edits"]);
        assert_eq!(f.time_labels().unwrap()[2], "2008-03");
        assert_eq!(f.row(1), [1.5, 2.5]);
    }

    #[test]
    fn monthly_decade_keeps_row_count() {
        let mut csv = String::from("month,Readers,Edits\n");
        for y in 2008..2020 {
            for m in 1..=12 {
                csv.push_str(&format!("{y}-{m:02},{},{}\n", y * 100 + m, m * 3));
            }
        }
        let schema = CsvSchema {
            time_column: Some("month".into()),
            ..Default::default()
        };
        let f: SeriesFrame<f64> = read_csv(csv.as_bytes(), &schema, "monthly").unwrap();
        assert_eq!((f.len(), f.dim()), (144, 2));
    }

    #[test]
    fn csv_rejections() {
        let schema = CsvSchema::default();
        let err = read_csv::<f64, _>("a,b\n1,2\n3,\n".as_bytes(), &schema, "x").unwrap_err();
        assert_eq!(err.to_string(), "missing value at row 2, column b");
        let err = read_csv::<f64, _>("a,b\n1,2\n3,x\n".as_bytes(), &schema, "x").unwrap_err();
        assert!(matches!(err, Error::NonNumeric { row: 2, .. }));
        let err = read_csv::<f64, _>("a,b\n1,2\n".as_bytes(), &schema, "x").unwrap_err();
        assert!(matches!(err, Error::TooFewRows { got: 1, .. }));
        let s2 = CsvSchema {
            columns: vec![("zz".into(), "z".into())],
            ..Default::default()
        };
        let err = read_csv::<f64, _>("a,b\n1,2\n3,4\n".as_bytes(), &s2, "x").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "zz"));
        let s3 = CsvSchema {
            columns: vec![("a".into(), "v".into()), ("b".into(), "v".into())],
            ..Default::default()
        };
        let err = read_csv::<f64, _>("a,b\n1,2\n3,4\n".as_bytes(), &s3, "x").unwrap_err();
        assert!(matches!(err, Error::DuplicateName(_)));
    }

    #[test]
    fn constant_divisor_halves_and_self_divisor_gives_ones() {
        let f = frame(&[vec![2.0, 5.0], vec![4.0, 7.0], vec![6.0, 9.0]]);
        let two = SeriesFrame::from_rows(&["two"], &[vec![2.0], vec![2.0], vec![2.0]], 1.0).unwrap();
        let own = SeriesFrame::from_rows(&["own"], &[vec![5.0], vec![7.0], vec![9.0]], 1.0).unwrap();
        let divs = BTreeMap::from([("v0".to_string(), two), ("v1".to_string(), own)]);
        let g = normalize_by_exogenous(&f, &divs, &BTreeMap::new()).unwrap();
        assert_eq!(g.values().column(0), vec![1.0, 2.0, 3.0]);
        assert_eq!(g.values().column(1), vec![1.0, 1.0, 1.0]);
        let s = g.scaling().unwrap();
        assert_eq!(s.divisors, vec![Some("two".into()), Some("own".into())]);
    }

    #[test]
    fn adjuster_divides_by_growth_factor() {
        let f = frame(&[vec![10.0, 1.0], vec![10.0, 1.0], vec![10.0, 1.0]]);
        let users = SeriesFrame::from_rows(&["users"], &[vec![2.0], vec![4.0], vec![5.0]], 1.0).unwrap();
        let research =
            SeriesFrame::from_rows(&["research"], &[vec![100.0], vec![110.0], vec![125.0]], 1.0).unwrap();
        let g = normalize_by_exogenous(
            &f,
            &BTreeMap::from([("v0".to_string(), users)]),
            &BTreeMap::from([("v0".to_string(), research)]),
        )
        .unwrap();
        let expect = [10.0 / 2.0, 10.0 / 4.0 / 1.1, 10.0 / 5.0 / 1.25];
        for (got, want) in g.values().column(0).iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(g.values().column(1), vec![1.0; 3]);
        assert_eq!(g.scaling().unwrap().adjusters[0].as_deref(), Some("research"));
    }

    #[test]
    fn exogenous_errors() {
        let f = frame(&[vec![1.0], vec![2.0], vec![3.0]]);
        let short = SeriesFrame::from_rows(&["d"], &[vec![1.0], vec![1.0]], 1.0).unwrap();
        let zero = SeriesFrame::from_rows(&["d"], &[vec![1.0], vec![0.0], vec![1.0]], 1.0).unwrap();
        let e = normalize_by_exogenous(&f, &BTreeMap::from([("v0".into(), short)]), &BTreeMap::new());
        assert!(matches!(e, Err(Error::LengthMismatch(_))));
        let e = normalize_by_exogenous(&f, &BTreeMap::from([("v0".into(), zero)]), &BTreeMap::new());
        assert!(matches!(e, Err(Error::NonPositiveDivisor { row: 2, .. })));
    }

    #[test]
    fn max_rescale_records_factor_and_round_trips() {
        let f = frame(&[vec![50.0, 0.3], vec![200.0, 0.1], vec![120.0, 0.7]]);
        let g = rescale(&f, &Rescale::Max).unwrap();
        assert_eq!(g.scaling().unwrap().factors, vec![200.0, 0.7]);
        assert!(g.values().as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        let back = g.unscaled();
        for (a, b) in back.values().as_slice().iter().zip(f.values().as_slice()) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
        assert_eq!(rescale(&f, &Rescale::None).unwrap(), f);
    }

    #[test]
    fn rescale_errors() {
        let f = frame(&[vec![0.0, 1.0], vec![-1.0, 2.0]]);
        assert!(rescale(&f, &Rescale::Max).is_err());
        assert!(rescale(&f, &Rescale::Explicit(vec![1.0, 0.0])).is_err());
        assert!(rescale(&f, &Rescale::Explicit(vec![1.0])).is_err());
    }

    #[test]
    fn derivative_examples() {
        let ramp = frame(&[vec![0.0], vec![1.0], vec![2.0]]);
        let d = estimate_derivatives(&ramp).unwrap();
        assert_eq!(d.derivs.as_slice(), [1.0, 1.0]);
        assert_eq!(d.states.as_slice(), [0.0, 1.0]);

        let flat = frame(&vec![vec![3.0, 4.0]; 5]);
        assert!(estimate_derivatives(&flat).unwrap().derivs.as_slice().iter().all(|&v| v == 0.0));

        let half = SeriesFrame::from_rows(&["a", "b"], &[vec![1.0, 2.0], vec![3.0, 5.0]], 0.5).unwrap();
        let d = estimate_derivatives(&half).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.states.row(0), [1.0, 2.0]);
        assert_eq!(d.derivs.row(0), [4.0, 6.0]);
    }

    #[test]
    fn split_bounds() {
        let f = frame(&(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>());
        let (tr, te) = split(&f, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (7, 3));
        let (tr, _) = split(&f, 7).unwrap();
        assert_eq!(tr.len(), 3);
        assert!(split(&f, 10).is_err());
        assert!(split(&f, 8).is_err());
        assert!(split(&f, 1).is_err());
    }
}
