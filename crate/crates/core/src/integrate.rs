//! Fixed-step classical Runge–Kutta integration of vector fields, for
//! one-step forecasts and for trajectory termination analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{BoundSide, Domain, VectorField};
use crate::scalar::{all_finite, distance, norm2, Scalar};

/// Scratch buffers for one classical RK4 step.
#[derive(Debug, Clone)]
pub struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Scalar> Rk4<T> {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![T::zero(); n],
            k2: vec![T::zero(); n],
            k3: vec![T::zero(); n],
            k4: vec![T::zero(); n],
            tmp: vec![T::zero(); n],
        }
    }

    /// Advances `state` in place by one step of size `h`.
    pub fn step<F: VectorField<T> + ?Sized>(&mut self, field: &F, state: &mut [T], h: T) {
        let half = h * T::lit(0.5);
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        field.eval_into(state, &mut self.k1);
        for i in 0..state.len() {
            self.tmp[i] = state[i] + half * self.k1[i];
        }
        field.eval_into(&self.tmp, &mut self.k2);
        for i in 0..state.len() {
            self.tmp[i] = state[i] + half * self.k2[i];
        }
        field.eval_into(&self.tmp, &mut self.k3);
        for i in 0..state.len() {
            self.tmp[i] = state[i] + h * self.k3[i];
        }
        field.eval_into(&self.tmp, &mut self.k4);
        for i in 0..state.len() {
            state[i] = state[i]
                + sixth * (self.k1[i] + two * self.k2[i] + two * self.k3[i] + self.k4[i]);
        }
    }
}

/// Number of full steps of size `h` in `span`, plus the length of a final
/// shortened step (zero when `h` divides `span`).
fn step_plan<T: Scalar>(span: T, h: T) -> (usize, T) {
    let ratio = span / h;
    let k = ratio.round();
    if (ratio - k).abs() <= T::lit(1e-9) * k.max(T::one()) {
        (k.to_usize().unwrap_or(0), T::zero())
    } else {
        let full = ratio.floor();
        (full.to_usize().unwrap_or(0), span - full * h)
    }
}

/// Flows `state` forward by `span` with step `h`; a trailing partial step
/// covers any remainder.
pub fn advance<T: Scalar, F: VectorField<T> + ?Sized>(
    field: &F,
    state: &[T],
    span: T,
    h: T,
) -> Result<Vec<T>> {
    if state.len() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: state.len(),
        });
    }
    if !(h > T::zero()) || !(span > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "step {h} and span {span} must be positive"
        )));
    }
    if !all_finite(state) {
        return Err(Error::NonFinite("initial state"));
    }
    let (steps, rest) = step_plan(span, h);
    let mut rk = Rk4::new(state.len());
    let mut x = state.to_vec();
    for s in 0..steps {
        rk.step(field, &mut x, h);
        if !all_finite(&x) {
            return Err(Error::BlowUp {
                time: (T::from_usize_lossy(s + 1) * h).as_f64(),
            });
        }
    }
    if rest > T::zero() {
        rk.step(field, &mut x, rest);
        if !all_finite(&x) {
            return Err(Error::BlowUp {
                time: span.as_f64(),
            });
        }
    }
    Ok(x)
}

/// Thresholds deciding how a trajectory ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrajectoryOptions<T> {
    pub h: T,
    pub horizon: T,
    pub convergence_radius: T,
    pub field_tol: T,
    /// Consecutive steps the convergence test must hold.
    pub settle_steps: usize,
    /// Keep every `record_every`-th state in the path; 0 keeps only the
    /// start and the final state.
    pub record_every: usize,
}

impl<T: Scalar> Default for TrajectoryOptions<T> {
    fn default() -> Self {
        Self {
            h: T::lit(0.01),
            horizon: T::lit(500.0),
            convergence_radius: T::lit(1e-4),
            field_tol: T::lit(1e-6),
            settle_steps: 10,
            record_every: 1,
        }
    }
}

/// Where an escaping trajectory left the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitThrough {
    Lower,
    Upper,
    /// The state stopped being finite.
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "kind", rename_all = "snake_case")]
pub enum Termination<T> {
    Converged {
        /// Index into the supplied fixed-point list.
        point: usize,
        location: Vec<T>,
        /// Step at which the settled streak began.
        at_step: usize,
    },
    Escaped {
        time: T,
        axis: usize,
        through: ExitThrough,
    },
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrajectoryResult<T> {
    pub path: Vec<(T, Vec<T>)>,
    pub termination: Termination<T>,
    pub steps: usize,
}

impl<T: Scalar> TrajectoryResult<T> {
    pub fn final_state(&self) -> &[T] {
        &self.path.last().expect("path holds at least the start").1
    }
}

/// Integrates from `start` until the state settles on one of
/// `fixed_points`, leaves `domain`, or the horizon is reached.
pub fn trajectory<T: Scalar, F: VectorField<T> + ?Sized>(
    field: &F,
    start: &[T],
    domain: &Domain<T>,
    fixed_points: &[Vec<T>],
    opts: &TrajectoryOptions<T>,
) -> Result<TrajectoryResult<T>> {
    let n = field.dim();
    if start.len() != n || domain.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: start.len().min(domain.dim()),
        });
    }
    if !(opts.h > T::zero()) || !(opts.horizon > T::zero()) {
        return Err(Error::InvalidArgument("step and horizon must be positive".into()));
    }
    if !all_finite(start) {
        return Err(Error::NonFinite("trajectory start"));
    }
    if !domain.contains(start) {
        return Err(Error::InvalidArgument(format!(
            "trajectory start {start:?} lies outside the domain"
        )));
    }

    let max_steps = (opts.horizon / opts.h).ceil().to_usize().unwrap_or(usize::MAX);
    let mut rk = Rk4::new(n);
    let mut x = start.to_vec();
    let mut fx = vec![T::zero(); n];
    let mut path = vec![(T::zero(), x.clone())];
    let mut streak = 0usize;
    let mut streak_point = usize::MAX;

    let mut step = 0usize;
    loop {
        // convergence test on the current state
        field.eval_into(&x, &mut fx);
        let near = fixed_points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, distance(&x, p)))
            .filter(|(_, d)| *d <= opts.convergence_radius)
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        match near {
            Some((i, _)) if norm2(&fx) < opts.field_tol => {
                if i == streak_point {
                    streak += 1;
                } else {
                    streak_point = i;
                    streak = 1;
                }
                if streak >= opts.settle_steps.max(1) {
                    if opts.record_every == 0 && step > 0 {
                        path.push((T::from_usize_lossy(step) * opts.h, x.clone()));
                    }
                    return Ok(TrajectoryResult {
                        path,
                        termination: Termination::Converged {
                            point: i,
                            location: fixed_points[i].clone(),
                            at_step: step + 1 - streak,
                        },
                        steps: step,
                    });
                }
            }
            _ => {
                streak = 0;
                streak_point = usize::MAX;
            }
        }

        if step >= max_steps {
            if opts.record_every == 0 && step > 0 {
                path.push((T::from_usize_lossy(step) * opts.h, x.clone()));
            }
            return Ok(TrajectoryResult {
                path,
                termination: Termination::Horizon,
                steps: step,
            });
        }

        rk.step(field, &mut x, opts.h);
        step += 1;
        let t = T::from_usize_lossy(step) * opts.h;
        let escaped = if !all_finite(&x) {
            let axis = x.iter().position(|v| !v.is_finite()).unwrap_or(0);
            Some((axis, ExitThrough::Overflow))
        } else {
            domain.violation(&x).map(|(axis, side)| {
                let through = match side {
                    BoundSide::Lower => ExitThrough::Lower,
                    BoundSide::Upper => ExitThrough::Upper,
                };
                (axis, through)
            })
        };
        let keep = match opts.record_every {
            0 => escaped.is_some(),
            k => step % k == 0 || escaped.is_some(),
        };
        if keep {
            path.push((t, x.clone()));
        }
        if let Some((axis, through)) = escaped {
            return Ok(TrajectoryResult {
                path,
                termination: Termination::Escaped { time: t, axis, through },
                steps: step,
            });
        }
    }
}

/// Renders a path as CSV with a `time` column followed by the state.
pub fn trajectory_csv<T: Scalar>(names: &[String], result: &TrajectoryResult<T>) -> String {
    let mut out = String::from("time");
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (t, x) in &result.path {
        out.push_str(&format!("{t}"));
        for v in x {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PolyVectorField;
    use crate::linalg::Matrix;
    use std::f64::consts::{E, FRAC_PI_2};

    fn decay() -> PolyVectorField<f64> {
        PolyVectorField::new(vec![-1.0], 1, crate::field::BasisMode::Full, vec![vec![]]).unwrap()
    }

    fn rotation() -> PolyVectorField<f64> {
        PolyVectorField::linear(&Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap()).unwrap()
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let x = advance(&decay(), &[1.0], 1.0, 0.01).unwrap();
        assert!((x[0] - 1.0 / E).abs() < 1e-6);
    }

    #[test]
    fn zero_field_keeps_state() {
        let z = PolyVectorField::planar([0.0, 0.0], &[0.0], &[0.0]).unwrap();
        assert_eq!(advance(&z, &[0.3, 4.0], 2.0, 0.01).unwrap(), vec![0.3, 4.0]);
    }

    #[test]
    fn quarter_rotation() {
        let x = advance(&rotation(), &[1.0, 0.0], FRAC_PI_2, 0.001).unwrap();
        assert!(x[0].abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn convergence_order_at_least_3_9() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| (advance(&decay(), &[1.0], 1.0, h).unwrap()[0] - 1.0 / E).abs())
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 3.9, "order {order} from {errs:?}");
        }
    }

    #[test]
    fn partial_last_step_lands_on_span() {
        // 0.105 / 0.01 leaves a 0.005 remainder
        let x = advance(&decay(), &[1.0], 0.105, 0.01).unwrap();
        assert!((x[0] - (-0.105f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn composition_is_exact_on_step_multiples() {
        let m = PolyVectorField::planar([-0.357, -0.2243], &[-0.2637, 6.9566], &[1.271, -6.9038]).unwrap();
        let s = [0.3, 0.2];
        let whole = advance(&m, &s, 0.75, 0.01).unwrap();
        let mid = advance(&m, &s, 0.5, 0.01).unwrap();
        let split = advance(&m, &mid, 0.25, 0.01).unwrap();
        assert_eq!(whole, split);
        assert_eq!(whole, advance(&m, &s, 0.75, 0.01).unwrap());
    }

    #[test]
    fn blow_up_is_reported() {
        let m = PolyVectorField::planar([0.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]).unwrap();
        let e = advance(&m, &[10.0, 10.0], 50.0, 0.01).unwrap_err();
        assert!(matches!(e, Error::BlowUp { .. }));
    }

    #[test]
    fn linear_fields_match_matrix_exponential() {
        let mut s = 2024u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for n in [2usize, 3] {
            for _ in 0..10 {
                let mut data: Vec<f64> = (0..n * n).map(|_| next()).collect();
                let fro = data.iter().map(|v| v * v).sum::<f64>().sqrt();
                for v in &mut data {
                    *v *= 5.0 / fro;
                }
                let a = Matrix::from_vec(n, n, data.clone()).unwrap();
                let field = PolyVectorField::linear(&a).unwrap();
                let x0: Vec<f64> = (0..n).map(|_| next()).collect();
                let ours = advance(&field, &x0, 1.0, 0.01).unwrap();
                let na = nalgebra::DMatrix::from_row_slice(n, n, &data).exp();
                let exact = na * nalgebra::DVector::from_column_slice(&x0);
                let err: f64 = ours.iter().zip(exact.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                assert!(err <= 1e-6 * exact.norm().max(1.0), "err {err}");
            }
        }
    }

    #[test]
    fn start_on_equilibrium_converges_at_step_zero() {
        let d = Domain::unbounded(1);
        let r = trajectory(&decay(), &[0.0], &d, &[vec![0.0]], &TrajectoryOptions::default()).unwrap();
        assert!(matches!(r.termination, Termination::Converged { point: 0, at_step: 0, .. }));
    }

    #[test]
    fn path_times_advance_by_h_and_escape_leaves_domain() {
        let grow = PolyVectorField::new(vec![1.0], 1, crate::field::BasisMode::Full, vec![vec![]]).unwrap();
        let d = Domain::boxed(vec![0.0], vec![2.0]).unwrap();
        let opts = TrajectoryOptions::default();
        let r = trajectory(&grow, &[1.0], &d, &[vec![0.0]], &opts).unwrap();
        match r.termination {
            Termination::Escaped { time, axis: 0, through: ExitThrough::Upper } => {
                assert!((time - 2f64.ln()).abs() < 0.011);
            }
            other => panic!("{other:?}"),
        }
        assert!(!d.contains(r.final_state()));
        for w in r.path.windows(2) {
            assert!((w[1].0 - w[0].0 - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn horizon_termination_on_closed_orbit() {
        let opts = TrajectoryOptions {
            horizon: 20.0,
            record_every: 0,
            ..Default::default()
        };
        let r = trajectory(&rotation(), &[0.5, 0.0], &Domain::unbounded(2), &[vec![0.0, 0.0]], &opts).unwrap();
        assert_eq!(r.termination, Termination::Horizon);
        assert_eq!(r.path.len(), 2);
        assert_eq!(r.steps, 2000);
    }

    #[test]
    fn start_outside_domain_is_rejected() {
        let d = Domain::nonnegative(1);
        assert!(trajectory(&decay(), &[-1.0], &d, &[], &TrajectoryOptions::default()).is_err());
    }

    #[test]
    fn csv_export() {
        let opts = TrajectoryOptions {
            horizon: 0.02,
            ..Default::default()
        };
        let r = trajectory(&decay(), &[1.0], &Domain::unbounded(1), &[], &opts).unwrap();
        let csv = trajectory_csv(&["x".to_string()], &r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "time,x");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,1"));
    }
}
