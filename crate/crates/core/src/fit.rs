//! Least-squares identification of polynomial fields and degree selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{pick_best, walk_forward, EvalReport, SelectionRow};
use crate::field::{basis, BasisMode, PolyVectorField, Term};
use crate::integrate::advance;
use crate::linalg::{LeastSquares, Matrix};
use crate::scalar::Scalar;
use crate::series::{estimate_derivatives, DerivativeSamples, SeriesFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitOptions<T> {
    /// Tikhonov damping on the raw coefficients.
    pub ridge: T,
    /// Damping retried with a warning when an undamped design is
    /// rank-deficient; `None` makes that case an error.
    pub fallback_ridge: Option<T>,
    /// Clamp negative self rates to zero.
    pub nonnegative_eps: bool,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            ridge: T::zero(),
            fallback_ridge: Some(T::lit(1e-8)),
            nonnegative_eps: false,
        }
    }
}

fn design<T: Scalar>(states: &Matrix<T>, own: Option<usize>, monomials: &[crate::field::Monomial]) -> Matrix<T> {
    let m = states.rows();
    let k = monomials.len() + usize::from(own.is_some());
    let mut d = Matrix::zeros(m, k);
    for r in 0..m {
        let x = states.row(r);
        let row = d.row_mut(r);
        let mut c = 0;
        if let Some(i) = own {
            row[0] = x[i];
            c = 1;
        }
        for (slot, mono) in row[c..].iter_mut().zip(monomials) {
            *slot = mono.eval(x);
        }
    }
    d
}

fn solve_component<T: Scalar>(
    design: &Matrix<T>,
    rhs: &[T],
    opts: &FitOptions<T>,
    component: usize,
) -> Result<Vec<T>> {
    let ls = match LeastSquares::new(design, opts.ridge) {
        Err(Error::RankDeficient(msg)) if opts.ridge == T::zero() => match opts.fallback_ridge {
            Some(r) if r > T::zero() => {
                log::warn!("component {component}: {msg}; refitting with ridge {r}");
                LeastSquares::new(design, r)?
            }
            _ => {
                return Err(Error::RankDeficient(format!(
                    "component {component}: {msg}; increase ridge or reduce degree"
                )))
            }
        },
        other => other?,
    };
    ls.solve(rhs)
}

/// Fits `x_i' = eps_i x_i + V_i` component by component.
pub fn fit<T: Scalar>(
    samples: &DerivativeSamples<T>,
    degree: u32,
    mode: BasisMode,
    opts: &FitOptions<T>,
) -> Result<PolyVectorField<T>> {
    if degree == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    if opts.ridge < T::zero() || !opts.ridge.is_finite() {
        return Err(Error::InvalidArgument(format!("ridge {} must be nonnegative", opts.ridge)));
    }
    if !samples.states.is_finite() || !samples.derivs.is_finite() {
        return Err(Error::NonFinite("derivative samples"));
    }
    let n = samples.dim();
    if samples.derivs.rows() != samples.len() || samples.derivs.cols() != n {
        return Err(Error::LengthMismatch("states and derivatives differ in shape".into()));
    }
    let mut eps = Vec::with_capacity(n);
    let mut components = Vec::with_capacity(n);
    for i in 0..n {
        let monomials = basis(n, i, degree, mode);
        let target = samples.derivs.column(i);
        let full = design(&samples.states, Some(i), &monomials);
        let mut theta = solve_component(&full, &target, opts, i)?;
        let mut e = theta[0];
        if opts.nonnegative_eps && e < T::zero() {
            let reduced = design(&samples.states, None, &monomials);
            let rest = solve_component(&reduced, &target, opts, i)?;
            e = T::zero();
            theta = std::iter::once(e).chain(rest).collect();
        }
        eps.push(e);
        components.push(
            monomials
                .into_iter()
                .zip(theta.into_iter().skip(1))
                .map(|(monomial, coefficient)| Term {
                    monomial,
                    coefficient,
                })
                .collect::<Vec<_>>(),
        );
    }
    PolyVectorField::new(eps, degree, mode, components)
        .map(|m| m.with_provenance("fit.samples", samples.len().to_string()))
}

/// Everything needed to fit and forecast a DS model on a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DsConfig<T> {
    pub degree: u32,
    pub basis: BasisMode,
    pub fit: FitOptions<T>,
    /// Integration step for one-step forecasts.
    pub h: T,
}

impl<T: Scalar> DsConfig<T> {
    pub fn new(degree: u32) -> Self {
        Self {
            degree,
            basis: BasisMode::Full,
            fit: FitOptions::default(),
            h: T::lit(0.01),
        }
    }
}

/// Forward-difference samples of `frame` fitted at `cfg.degree`, carrying
/// the frame's names and scaling.
pub fn fit_frame<T: Scalar>(frame: &SeriesFrame<T>, cfg: &DsConfig<T>) -> Result<PolyVectorField<T>> {
    let samples = estimate_derivatives(frame)?;
    fit(&samples, cfg.degree, cfg.basis, &cfg.fit)?
        .with_variable_names(frame.names().to_vec())?
        .with_scaling(frame.effective_scaling())
}

/// Flows the model from `state` over one sampling interval.
pub fn ds_forecast<T: Scalar>(model: &PolyVectorField<T>, state: &[T], dt: T, h: T) -> Result<Vec<T>> {
    advance(model, state, dt, h.min(dt))
}

/// Walk-forward evaluation of a DS model refit at every step.
pub fn ds_walk_forward<T: Scalar>(
    frame: &SeriesFrame<T>,
    test_len: usize,
    cfg: &DsConfig<T>,
) -> Result<EvalReport<T>> {
    walk_forward(
        frame,
        test_len,
        &format!("DS({})", cfg.degree),
        |w| fit_frame(w, cfg),
        |m, w| ds_forecast(m, w.last_row(), w.dt(), cfg.h),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSelection<T> {
    pub degree: u32,
    /// Chosen degree refit on the whole training frame.
    pub model: PolyVectorField<T>,
    pub table: Vec<SelectionRow<T>>,
}

/// Scores every degree by an inner walk-forward over the last `test_len`
/// rows of `train` and refits the winner on all of `train`.
pub fn select_degree<T: Scalar>(
    train: &SeriesFrame<T>,
    degrees: &[u32],
    test_len: usize,
    cfg: &DsConfig<T>,
) -> Result<DegreeSelection<T>> {
    if degrees.is_empty() {
        return Err(Error::InvalidArgument("no candidate degrees".into()));
    }
    let table: Vec<SelectionRow<T>> = if degrees.len() == 1 {
        vec![SelectionRow {
            order: degrees[0] as usize,
            per_variable: None,
            total: None,
            error: None,
        }]
    } else {
        degrees
            .par_iter()
            .map(|&d| {
                let c = DsConfig { degree: d, ..cfg.clone() };
                SelectionRow::from_result(d as usize, ds_walk_forward(train, test_len, &c))
            })
            .collect()
    };
    let degree = if degrees.len() == 1 {
        degrees[0]
    } else {
        let best = pick_best(&table).ok_or_else(|| {
            Error::AllCandidatesFailed(
                table
                    .iter()
                    .map(|r| format!("degree {}: {}", r.order, r.error.as_deref().unwrap_or("?")))
                    .collect::<Vec<_>>()
                    .join("; "),
            )
        })?;
        table[best].order as u32
    };
    let model = fit_frame(train, &DsConfig { degree, ..cfg.clone() })?;
    Ok(DegreeSelection { degree, model, table })
}
