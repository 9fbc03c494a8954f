//! Vector autoregression baselines fitted by ordinary least squares.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{pick_best, walk_forward, EvalReport, SelectionRow};
use crate::linalg::{LeastSquares, Matrix};
use crate::scalar::{all_finite, Scalar};
use crate::series::{ScalingSpec, SeriesFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarOptions {
    pub intercept: bool,
}

impl Default for VarOptions {
    fn default() -> Self {
        Self { intercept: true }
    }
}

/// `x_t = c + A_1 x_{t-1} + ... + A_p x_{t-p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel<T> {
    pub(crate) variable_names: Vec<String>,
    pub(crate) intercept: Vec<T>,
    pub(crate) lags: Vec<Matrix<T>>,
    pub(crate) include_intercept: bool,
    pub(crate) fitted_on: usize,
    pub(crate) scaling: ScalingSpec<T>,
    pub(crate) provenance: BTreeMap<String, String>,
}

impl<T: Scalar> VarModel<T> {
    pub fn new(intercept: Vec<T>, lags: Vec<Matrix<T>>) -> Result<Self> {
        let n = intercept.len();
        let m = Self {
            variable_names: (1..=n).map(|i| format!("x{i}")).collect(),
            include_intercept: true,
            intercept,
            lags,
            fitted_on: 0,
            scaling: ScalingSpec::identity(n),
            provenance: BTreeMap::new(),
        };
        m.validate()?;
        Ok(m)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let n = self.intercept.len();
        if n == 0 || self.lags.is_empty() {
            return Err(Error::InvalidModel("VAR needs a dimension and at least one lag".into()));
        }
        if self.lags.iter().any(|a| a.rows() != n || a.cols() != n) {
            return Err(Error::InvalidModel(format!("lag matrices must be {n}x{n}")));
        }
        if !all_finite(&self.intercept) || self.lags.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidModel("non-finite VAR coefficient".into()));
        }
        if self.variable_names.len() != n || self.scaling.dim() != n {
            return Err(Error::InvalidModel("names or scaling do not match the dimension".into()));
        }
        if !self.include_intercept && self.intercept.iter().any(|&c| c != T::zero()) {
            return Err(Error::InvalidModel("intercept set on a model fitted without one".into()));
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.lags.len()
    }

    pub fn dim(&self) -> usize {
        self.intercept.len()
    }

    pub fn intercept(&self) -> &[T] {
        &self.intercept
    }

    pub fn lag_matrices(&self) -> &[Matrix<T>] {
        &self.lags
    }

    pub fn has_intercept(&self) -> bool {
        self.include_intercept
    }

    pub fn fitted_on(&self) -> usize {
        self.fitted_on
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn scaling(&self) -> &ScalingSpec<T> {
        &self.scaling
    }

    pub fn provenance(&self) -> &BTreeMap<String, String> {
        &self.provenance
    }

    pub fn with_provenance(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.provenance.insert(key.into(), value.into());
        self
    }

    /// Forecast from `history`, whose rows run oldest to newest; only the
    /// last `p` rows are used.
    pub fn predict_one(&self, history: &Matrix<T>) -> Result<Vec<T>> {
        let (n, p) = (self.dim(), self.p());
        if history.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: history.cols(),
            });
        }
        if history.rows() < p {
            return Err(Error::TooFewRows {
                needed: p,
                got: history.rows(),
            });
        }
        let last = history.rows() - 1;
        let mut out = self.intercept.clone();
        for (i, a) in self.lags.iter().enumerate() {
            let x = history.row(last - i);
            for (o, v) in out.iter_mut().zip(a.mul_vec(x)) {
                *o = *o + v;
            }
        }
        Ok(out)
    }
}

/// Minimum series length for a VAR(p) fit on `n` variables.
pub fn min_rows(n: usize, p: usize) -> usize {
    n * p + p + 2
}

pub fn fit_var<T: Scalar>(frame: &SeriesFrame<T>, p: usize, opts: &VarOptions) -> Result<VarModel<T>> {
    if p == 0 {
        return Err(Error::InvalidArgument("lag order must be at least 1".into()));
    }
    let (t_len, n) = (frame.len(), frame.dim());
    let needed = min_rows(n, p);
    if t_len < needed {
        return Err(Error::TooFewRows { needed, got: t_len });
    }
    let off = usize::from(opts.intercept);
    let m = t_len - p;
    let k = off + n * p;
    let mut design = Matrix::zeros(m, k);
    for r in 0..m {
        let t = r + p;
        let row = design.row_mut(r);
        if opts.intercept {
            row[0] = T::one();
        }
        for i in 1..=p {
            row[off + (i - 1) * n..off + i * n].copy_from_slice(frame.row(t - i));
        }
    }
    let ls = LeastSquares::new(&design, T::zero()).map_err(|e| match e {
        Error::RankDeficient(msg) => Error::RankDeficient(format!("VAR({p}): {msg}; reduce p")),
        other => other,
    })?;
    let mut intercept = vec![T::zero(); n];
    let mut lags = vec![Matrix::zeros(n, n); p];
    for eq in 0..n {
        let target: Vec<T> = (p..t_len).map(|t| frame.row(t)[eq]).collect();
        let theta = ls.solve(&target)?;
        if opts.intercept {
            intercept[eq] = theta[0];
        }
        for (i, a) in lags.iter_mut().enumerate() {
            a.row_mut(eq).copy_from_slice(&theta[off + i * n..off + (i + 1) * n]);
        }
    }
    let model = VarModel {
        variable_names: frame.names().to_vec(),
        intercept,
        lags,
        include_intercept: opts.intercept,
        fitted_on: t_len,
        scaling: frame.effective_scaling(),
        provenance: BTreeMap::new(),
    };
    model.validate()?;
    Ok(model)
}

pub fn var_walk_forward<T: Scalar>(
    frame: &SeriesFrame<T>,
    test_len: usize,
    p: usize,
    opts: &VarOptions,
) -> Result<EvalReport<T>> {
    walk_forward(
        frame,
        test_len,
        &format!("VAR({p})"),
        |w| fit_var(w, p, opts),
        |m, w| m.predict_one(w.values()),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagSelection<T> {
    pub p: usize,
    /// Chosen order refit on the whole frame.
    pub model: VarModel<T>,
    pub table: Vec<SelectionRow<T>>,
}

pub fn select_lag<T: Scalar>(
    frame: &SeriesFrame<T>,
    lags: &[usize],
    test_len: usize,
    opts: &VarOptions,
) -> Result<LagSelection<T>> {
    if lags.is_empty() {
        return Err(Error::InvalidArgument("no candidate lag orders".into()));
    }
    if lags.len() == 1 {
        let p = lags[0];
        return Ok(LagSelection {
            p,
            model: fit_var(frame, p, opts)?,
            table: vec![SelectionRow {
                order: p,
                per_variable: None,
                total: None,
                error: None,
            }],
        });
    }
    let table: Vec<SelectionRow<T>> = lags
        .par_iter()
        .map(|&p| SelectionRow::from_result(p, var_walk_forward(frame, test_len, p, opts)))
        .collect();
    let best = pick_best(&table).ok_or_else(|| {
        Error::AllCandidatesFailed(
            table
                .iter()
                .map(|r| format!("p = {}: {}", r.order, r.error.as_deref().unwrap_or("?")))
                .collect::<Vec<_>>()
                .join("; "),
        )
    })?;
    let p = table[best].order;
    Ok(LagSelection {
        p,
        model: fit_var(frame, p, opts)?,
        table,
    })
}
