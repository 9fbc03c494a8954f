//! Expanding-window one-step forecast evaluation and normalized squared
//! error scoring.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{all_finite, Scalar};
use crate::series::{split, SeriesFrame};

/// Normalized squared error per variable, and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NseScore<T> {
    pub per_variable: Vec<T>,
    pub total: T,
}

/// `sum_k (pred - true)^2 / sum_k true^2` for each column.
pub fn nse<T: Scalar>(predictions: &Matrix<T>, truths: &Matrix<T>) -> Result<NseScore<T>> {
    if predictions.rows() != truths.rows() || predictions.cols() != truths.cols() {
        return Err(Error::LengthMismatch(format!(
            "predictions {}x{} vs truths {}x{}",
            predictions.rows(),
            predictions.cols(),
            truths.rows(),
            truths.cols()
        )));
    }
    let mut per_variable = Vec::with_capacity(truths.cols());
    for j in 0..truths.cols() {
        let mut num = T::zero();
        let mut den = T::zero();
        for k in 0..truths.rows() {
            let (p, t) = (predictions[(k, j)], truths[(k, j)]);
            num = num + (p - t) * (p - t);
            den = den + t * t;
        }
        if den == T::zero() {
            return Err(Error::ZeroTruth(format!("column {j}")));
        }
        per_variable.push(num / den);
    }
    let total = per_variable.iter().fold(T::zero(), |a, &b| a + b);
    Ok(NseScore {
        per_variable,
        total,
    })
}

/// One forecast of the walk-forward log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StepRecord<T> {
    /// Row of the forecast target within the evaluated series.
    pub index: usize,
    pub label: Option<String>,
    /// Rows available to the fit when this forecast was made.
    pub train_len: usize,
    pub predicted: Vec<T>,
    pub truth: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EvalReport<T> {
    pub model: String,
    pub variables: Vec<String>,
    pub test_len: usize,
    pub per_variable: Vec<T>,
    pub total: T,
    pub steps: Vec<StepRecord<T>>,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

impl<T: Scalar> EvalReport<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        let sum = r.per_variable.iter().fold(T::zero(), |a, &b| a + b);
        if r.per_variable.len() != r.variables.len() || sum != r.total {
            return Err(Error::InvalidArgument(
                "report total does not equal the sum of per-variable errors".into(),
            ));
        }
        Ok(r)
    }

    /// Per-step log as CSV: index, label, predicted columns, true columns.
    pub fn steps_csv(&self) -> String {
        let mut out = String::from("index,label");
        for v in &self.variables {
            out.push_str(&format!(",{v}_predicted"));
        }
        for v in &self.variables {
            out.push_str(&format!(",{v}_true"));
        }
        out.push('\n');
        for s in &self.steps {
            out.push_str(&format!("{},{}", s.index, s.label.as_deref().unwrap_or("")));
            for p in &s.predicted {
                out.push_str(&format!(",{p}"));
            }
            for t in &s.truth {
                out.push_str(&format!(",{t}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Expanding-window one-step evaluation over the last `test_len` rows.
///
/// For each test row, `fit_fn` sees every row strictly before it and
/// `predict_fn` forecasts that row from the same window (whose last row is
/// the true current state). The true row then joins the window.
pub fn walk_forward<T, M, F, P>(
    frame: &SeriesFrame<T>,
    test_len: usize,
    model: &str,
    mut fit_fn: F,
    mut predict_fn: P,
) -> Result<EvalReport<T>>
where
    T: Scalar,
    F: FnMut(&SeriesFrame<T>) -> Result<M>,
    P: FnMut(&M, &SeriesFrame<T>) -> Result<Vec<T>>,
{
    split(frame, test_len)?;
    let n = frame.dim();
    let first = frame.len() - test_len;
    let mut preds = Matrix::zeros(test_len, n);
    let mut truths = Matrix::zeros(test_len, n);
    let mut steps = Vec::with_capacity(test_len);
    for k in 0..test_len {
        let idx = first + k;
        let window = frame.rows_range(0, idx);
        let fail = |e: Error| Error::StepFailed {
            step: k + 1,
            message: e.to_string(),
        };
        let fitted = fit_fn(&window).map_err(fail)?;
        let p = predict_fn(&fitted, &window).map_err(fail)?;
        if p.len() != n {
            return Err(fail(Error::DimensionMismatch {
                expected: n,
                got: p.len(),
            }));
        }
        if !all_finite(&p) {
            return Err(fail(Error::NonFinite("forecast")));
        }
        preds.row_mut(k).copy_from_slice(&p);
        truths.row_mut(k).copy_from_slice(frame.row(idx));
        steps.push(StepRecord {
            index: idx,
            label: frame.time_labels().map(|l| l[idx].clone()),
            train_len: idx,
            predicted: p,
            truth: frame.row(idx).to_vec(),
        });
    }
    let score = nse(&preds, &truths).map_err(|e| match e {
        Error::ZeroTruth(col) => {
            let j: usize = col.trim_start_matches("column ").parse().unwrap_or(0);
            Error::ZeroTruth(frame.names()[j].clone())
        }
        other => other,
    })?;
    Ok(EvalReport {
        model: model.to_string(),
        variables: frame.names().to_vec(),
        test_len,
        per_variable: score.per_variable,
        total: score.total,
        steps,
        provenance: BTreeMap::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ComparisonRow<T> {
    pub model: String,
    pub per_variable: Vec<T>,
    pub total: T,
    /// Holds the minimal total (ties all flagged).
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ComparisonTable<T> {
    pub variables: Vec<String>,
    pub test_len: usize,
    pub rows: Vec<ComparisonRow<T>>,
}

/// Lines reports up on a shared variable set and test window.
pub fn compare<T: Scalar>(reports: &[EvalReport<T>]) -> Result<ComparisonTable<T>> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to compare".into()))?;
    let window = |r: &EvalReport<T>| r.steps.iter().map(|s| s.index).collect::<Vec<_>>();
    let w0 = window(first);
    for r in &reports[1..] {
        if r.variables != first.variables {
            return Err(Error::InvalidArgument(format!(
                "report '{}' covers {:?}, expected {:?}",
                r.model, r.variables, first.variables
            )));
        }
        if r.test_len != first.test_len || window(r) != w0 {
            return Err(Error::InvalidArgument(format!(
                "report '{}' uses a different test window",
                r.model
            )));
        }
    }
    let min = reports
        .iter()
        .map(|r| r.total)
        .fold(T::infinity(), T::min);
    Ok(ComparisonTable {
        variables: first.variables.clone(),
        test_len: first.test_len,
        rows: reports
            .iter()
            .map(|r| ComparisonRow {
                model: r.model.clone(),
                per_variable: r.per_variable.clone(),
                total: r.total,
                best: r.total == min,
            })
            .collect(),
    })
}

/// Error values written like `.0186`: four decimals, no leading zero.
fn short<T: Scalar>(v: T) -> String {
    let s = format!("{:.4}", v.as_f64());
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

impl<T: Scalar> ComparisonTable<T> {
    pub fn headers(&self) -> Vec<String> {
        let mut h = vec!["Model".to_string()];
        h.extend(self.variables.iter().map(|v| format!("{v}' predict. error")));
        h.push("Total error".into());
        h
    }

    /// Aligned text table; the minimal row is marked with `*`.
    pub fn render_text(&self) -> String {
        let headers = self.headers();
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = vec![if r.best {
                    format!("{} *", r.model)
                } else {
                    r.model.clone()
                }];
                cells.extend(r.per_variable.iter().map(|&v| short(v)));
                cells.push(short(r.total));
                cells
            })
            .collect();
        let widths: Vec<usize> = (0..headers.len())
            .map(|c| {
                body.iter()
                    .map(|row| row[c].chars().count())
                    .chain(std::iter::once(headers[c].chars().count()))
                    .max()
                    .unwrap()
            })
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (s, w))| {
                    if c == 0 {
                        format!("{s:<w$}")
                    } else {
                        format!("{s:>w$}")
                    }
                })
                .collect::<Vec<_>>()
                .join(" | ")
        };
        let mut out = line(&headers);
        out.push('\n');
        out.push_str(
            &widths
                .iter()
                .map(|w| "-".repeat(*w))
                .collect::<Vec<_>>()
                .join("-+-"),
        );
        out.push('\n');
        for row in &body {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model");
        for v in &self.variables {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(",total,best\n");
        for r in &self.rows {
            out.push_str(&r.model);
            for v in &r.per_variable {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{},{}\n", r.total, r.best));
        }
        out
    }
}

/// One candidate order (degree or lag) of a selection sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SelectionRow<T> {
    pub order: usize,
    pub per_variable: Option<Vec<T>>,
    pub total: Option<T>,
    pub error: Option<String>,
}

impl<T: Scalar> SelectionRow<T> {
    pub fn from_result(order: usize, r: Result<EvalReport<T>>) -> Self {
        match r {
            Ok(rep) => Self {
                order,
                per_variable: Some(rep.per_variable),
                total: Some(rep.total),
                error: None,
            },
            Err(e) => Self {
                order,
                per_variable: None,
                total: None,
                error: Some(e.to_string()),
            },
        }
    }
}

/// Totals this close (relative) count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Index of the row with the smallest total; near-ties go to the smaller
/// order. `None` when every candidate failed.
pub fn pick_best<T: Scalar>(rows: &[SelectionRow<T>]) -> Option<usize> {
    let mut idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].total.is_some()).collect();
    idx.sort_by_key(|&i| rows[i].order);
    let min = idx.iter().map(|&i| rows[i].total.unwrap()).fold(T::infinity(), T::min);
    let tol = T::lit(TIE_TOLERANCE) * min.abs();
    idx.into_iter().find(|&i| rows[i].total.unwrap() - min <= tol)
}

/// Plain-text table of a selection sweep.
pub fn render_selection<T: Scalar>(label: &str, rows: &[SelectionRow<T>], chosen: usize) -> String {
    let mut out = format!("{label:>6} | total error\n");
    for r in rows {
        let mark = if r.order == chosen { " *" } else { "" };
        match (&r.total, &r.error) {
            (Some(t), _) => out.push_str(&format!("{:>6} | {:.6e}{mark}\n", r.order, t.as_f64())),
            (None, Some(e)) => out.push_str(&format!("{:>6} | failed: {e}\n", r.order)),
            _ => {}
        }
    }
    out
}
