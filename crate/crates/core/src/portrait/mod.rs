//! Fixed points, stability, basins, separatrices and trending-flow sweeps.

mod export;
mod svg;

pub use export::{
    export_portrait, FieldSample, Nullcline, PortraitData, PortraitOptions, TrajectorySketch,
};
pub use svg::render_svg;

use std::fmt;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Domain, PolyVectorField, Reversed};
use crate::integrate::{trajectory, Rk4, Termination, TrajectoryOptions};
use crate::linalg::{eigenvalues, solve, Matrix};
use crate::scalar::{all_finite, distance, norm2, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedPointClass {
    AttractorNode,
    SpiralAttractor,
    RepellerNode,
    SpiralRepeller,
    Saddle,
    NonHyperbolic,
}

impl FixedPointClass {
    pub fn is_attractor(self) -> bool {
        matches!(self, Self::AttractorNode | Self::SpiralAttractor)
    }
}

impl fmt::Display for FixedPointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AttractorNode => "attractor node",
            Self::SpiralAttractor => "spiral attractor",
            Self::RepellerNode => "repeller node",
            Self::SpiralRepeller => "spiral repeller",
            Self::Saddle => "saddle",
            Self::NonHyperbolic => "non-hyperbolic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FixedPointRecord<T> {
    pub location: Vec<T>,
    /// Euclidean norm of the field at `location`.
    pub residual: T,
    pub eigenvalues: Vec<Complex<T>>,
    pub class: FixedPointClass,
    pub inside_domain: bool,
}

/// Tolerances for locating and classifying fixed points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FixedPointOptions<T> {
    /// Field norm below which a point counts as fixed.
    pub tol: T,
    pub hyperbolicity_tol: T,
    pub max_iterations: usize,
    pub dedup_radius: T,
    pub seeds_per_axis: usize,
}

impl<T: Scalar> Default for FixedPointOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            hyperbolicity_tol: T::lit(1e-8),
            max_iterations: 50,
            dedup_radius: T::lit(1e-6),
            seeds_per_axis: 20,
        }
    }
}

/// Class from eigenvalue signs: any real part within `hyperbolicity_tol`
/// of zero is non-hyperbolic, mixed signs a saddle, and a complex pair
/// turns a node into a spiral.
pub fn classify_eigenvalues<T: Scalar>(ev: &[Complex<T>], hyperbolicity_tol: T) -> FixedPointClass {
    if ev.iter().any(|l| l.re.abs() < hyperbolicity_tol) {
        return FixedPointClass::NonHyperbolic;
    }
    let neg = ev.iter().filter(|l| l.re < T::zero()).count();
    let complex = ev.iter().any(|l| l.im.abs() > hyperbolicity_tol);
    match (neg == ev.len(), neg == 0, complex) {
        (true, _, false) => FixedPointClass::AttractorNode,
        (true, _, true) => FixedPointClass::SpiralAttractor,
        (_, true, false) => FixedPointClass::RepellerNode,
        (_, true, true) => FixedPointClass::SpiralRepeller,
        _ => FixedPointClass::Saddle,
    }
}

/// Eigen-analysis of the Jacobian at `point`, which must be fixed to
/// within `opts.tol`.
pub fn classify_fixed_point<T: Scalar>(
    model: &PolyVectorField<T>,
    point: &[T],
    opts: &FixedPointOptions<T>,
) -> Result<FixedPointRecord<T>> {
    let residual = norm2(&model.evaluate(point)?);
    if !(residual < opts.tol) {
        return Err(Error::NotFixedPoint {
            residual: residual.as_f64(),
            tol: opts.tol.as_f64(),
        });
    }
    let ev = eigenvalues(&model.jacobian(point)?)?;
    Ok(FixedPointRecord {
        location: point.to_vec(),
        residual,
        class: classify_eigenvalues(&ev, opts.hyperbolicity_tol),
        eigenvalues: ev,
        inside_domain: model.domain().contains(point),
    })
}

/// Evenly spaced samples over a bounded box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GridSpec<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub per_axis: usize,
    /// Keep samples off the box faces: `lo + (hi - lo)(k + 1)/(m + 1)`
    /// instead of `lo + (hi - lo) k/(m - 1)`.
    pub interior: bool,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>, per_axis: usize, interior: bool) -> Result<Self> {
        let g = Self {
            lower,
            upper,
            per_axis,
            interior,
        };
        Domain::boxed(g.lower.clone(), g.upper.clone())?;
        if !g.lower.iter().chain(&g.upper).all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("grid box must be bounded".into()));
        }
        if per_axis < 1 || (!interior && per_axis < 2) {
            return Err(Error::InvalidArgument(format!("{per_axis} samples per axis is too few")));
        }
        Ok(g)
    }

    pub fn over(domain: &Domain<T>, per_axis: usize, interior: bool) -> Result<Self> {
        Self::new(domain.lower.clone(), domain.upper.clone(), per_axis, interior)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn len(&self) -> usize {
        self.per_axis.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coordinate(&self, axis: usize, k: usize) -> T {
        let (lo, hi) = (self.lower[axis], self.upper[axis]);
        let m = T::from_usize_lossy(self.per_axis);
        let k = T::from_usize_lossy(k);
        if self.interior {
            lo + (hi - lo) * (k + T::one()) / (m + T::one())
        } else {
            lo + (hi - lo) * k / (m - T::one())
        }
    }

    /// Sample `index`, the last axis varying fastest.
    pub fn point(&self, index: usize) -> Vec<T> {
        let n = self.dim();
        let mut out = vec![T::zero(); n];
        let mut rest = index;
        for axis in (0..n).rev() {
            out[axis] = self.coordinate(axis, rest % self.per_axis);
            rest /= self.per_axis;
        }
        out
    }

    pub fn points(&self) -> Vec<Vec<T>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Largest distance between adjacent samples on any axis.
    pub fn spacing(&self) -> T {
        (0..self.dim())
            .map(|a| (self.coordinate(a, 1.min(self.per_axis - 1)) - self.coordinate(a, 0)).abs())
            .fold(T::zero(), T::max)
    }
}

fn newton<T: Scalar>(model: &PolyVectorField<T>, seed: &[T], opts: &FixedPointOptions<T>) -> Option<Vec<T>> {
    let mut x = seed.to_vec();
    for _ in 0..=opts.max_iterations {
        let f = model.evaluate(&x).ok()?;
        if norm2(&f) < opts.tol {
            return Some(x);
        }
        let j = model.jacobian_unchecked(&x);
        let dx = match solve(&j, &f) {
            Ok(d) => d,
            Err(_) => {
                log::debug!("singular Jacobian at seed {seed:?}");
                return None;
            }
        };
        for (a, d) in x.iter_mut().zip(&dx) {
            *a = *a - *d;
        }
        if !all_finite(&x) || norm2(&x) > T::lit(1e12) {
            return None;
        }
    }
    None
}

fn in_box<T: Scalar>(b: &Domain<T>, x: &[T]) -> bool {
    x.iter().enumerate().all(|(j, &v)| {
        let slack = T::lit(1e-9) * (b.upper[j] - b.lower[j]);
        v >= b.lower[j] - slack && v <= b.upper[j] + slack
    })
}

/// `g(x) = x + V_1(-V_2(x)/e_2)/e_1`; its zeros are the planar fixed
/// points' first coordinates.
fn nullcline_gap<T: Scalar>(model: &PolyVectorField<T>, x: T) -> (T, T) {
    let e = model.eps();
    let y = -model.interaction(1, &[x, T::zero()]) / e[1];
    (x + model.interaction(0, &[T::zero(), y]) / e[0], y)
}

/// Planar fixed points as intersections of `y = -V_2(x)/e_2` with
/// `x = -V_1(y)/e_1`, by sign-change scan and bisection over the box.
pub fn nullcline_intersections<T: Scalar>(
    model: &PolyVectorField<T>,
    bounds: &Domain<T>,
    samples: usize,
) -> Result<Vec<Vec<T>>> {
    if model.dim() != 2 || model.eps().iter().any(|&e| e == T::zero()) {
        return Err(Error::InvalidArgument(
            "nullcline intersections need a planar model with nonzero self rates".into(),
        ));
    }
    if !bounds.is_bounded() {
        return Err(Error::InvalidArgument("nullcline scan needs a bounded box".into()));
    }
    let (lo, hi) = (bounds.lower[0], bounds.upper[0]);
    let at = |k: usize| lo + (hi - lo) * T::from_usize_lossy(k) / T::from_usize_lossy(samples);
    let mut roots = Vec::new();
    let mut prev = nullcline_gap(model, at(0)).0;
    if prev == T::zero() {
        roots.push(at(0));
    }
    for k in 1..=samples {
        let x = at(k);
        let g = nullcline_gap(model, x).0;
        if g == T::zero() {
            roots.push(x);
        } else if prev != T::zero() && (g < T::zero()) != (prev < T::zero()) {
            let (mut a, mut b, mut ga) = (at(k - 1), x, prev);
            for _ in 0..200 {
                let mid = (a + b) / T::lit(2.0);
                if mid <= a || mid >= b {
                    break;
                }
                let gm = nullcline_gap(model, mid).0;
                if gm == T::zero() {
                    a = mid;
                    b = mid;
                    break;
                }
                if (gm < T::zero()) == (ga < T::zero()) {
                    a = mid;
                    ga = gm;
                } else {
                    b = mid;
                }
            }
            roots.push((a + b) / T::lit(2.0));
        }
        prev = g;
    }
    Ok(roots
        .into_iter()
        .map(|x| vec![x, nullcline_gap(model, x).1])
        .filter(|p| in_box(bounds, p))
        .collect())
}

fn push_unique<T: Scalar>(found: &mut Vec<Vec<T>>, x: Vec<T>, radius: T) -> bool {
    if found.iter().any(|p| distance(p, &x) <= radius) {
        false
    } else {
        found.push(x);
        true
    }
}

/// Newton search from a seed grid over `bounds`, cross-checked for planar
/// models against the nullcline intersections. The origin is always
/// reported first; the rest are sorted by coordinates.
pub fn find_fixed_points<T: Scalar>(
    model: &PolyVectorField<T>,
    bounds: &Domain<T>,
    opts: &FixedPointOptions<T>,
) -> Result<Vec<FixedPointRecord<T>>> {
    let n = model.dim();
    if bounds.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bounds.dim(),
        });
    }
    if !bounds.is_bounded() {
        return Err(Error::InvalidArgument(
            "fixed-point search needs a bounded box; cap the domain first".into(),
        ));
    }
    if opts.seeds_per_axis < 2 {
        return Err(Error::InvalidArgument("at least two seeds per axis".into()));
    }
    let grid = GridSpec::over(bounds, opts.seeds_per_axis, false)?;
    let roots: Vec<Option<Vec<T>>> = (0..grid.len())
        .into_par_iter()
        .map(|i| newton(model, &grid.point(i), opts).filter(|x| in_box(bounds, x)))
        .collect();
    let origin = vec![T::zero(); n];
    let mut found = vec![origin.clone()];
    for r in roots.into_iter().flatten() {
        push_unique(&mut found, r, opts.dedup_radius);
    }
    if n == 2 && model.eps().iter().all(|&e| e != T::zero()) {
        for p in nullcline_intersections(model, bounds, 20_000)? {
            let polished = newton(model, &p, opts).unwrap_or(p);
            if found.iter().any(|q| distance(q, &polished) <= opts.dedup_radius) {
                continue;
            }
            if norm2(&model.evaluate(&polished)?) < opts.tol && in_box(bounds, &polished) {
                log::info!("nullcline scan found a fixed point Newton seeds missed: {polished:?}");
                found.push(polished);
            }
        }
    }
    let mut rest = found.split_off(1);
    rest.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.partial_cmp(y).unwrap())
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    found.extend(rest);
    found
        .into_iter()
        .map(|p| {
            let mut rec = classify_fixed_point(model, &p, opts)?;
            rec.inside_domain = model.domain().contains(&p) && in_box(bounds, &p);
            Ok(rec)
        })
        .collect()
}

/// How a sweep sample ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SampleOutcome {
    /// Settled on the fixed point with this index.
    Converged { point: usize },
    Escaped,
    Undecided,
}

/// Integrates every grid sample; results keep grid order.
pub fn sweep<T: Scalar>(
    model: &PolyVectorField<T>,
    domain: &Domain<T>,
    grid: &GridSpec<T>,
    fixed_points: &[Vec<T>],
    opts: &TrajectoryOptions<T>,
) -> Result<Vec<SampleOutcome>> {
    if grid.dim() != model.dim() || domain.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: grid.dim(),
        });
    }
    let opts = TrajectoryOptions {
        record_every: 0,
        ..opts.clone()
    };
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let start = grid.point(i);
            if !domain.contains(&start) {
                return Ok(SampleOutcome::Escaped);
            }
            Ok(match trajectory(model, &start, domain, fixed_points, &opts) {
                Ok(r) => match r.termination {
                    Termination::Converged { point, .. } => SampleOutcome::Converged { point },
                    Termination::Escaped { .. } => SampleOutcome::Escaped,
                    Termination::Horizon => SampleOutcome::Undecided,
                },
                Err(Error::BlowUp { .. }) => SampleOutcome::Escaped,
                Err(e) => return Err(e),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BasinMap<T> {
    pub grid: GridSpec<T>,
    pub labels: Vec<SampleOutcome>,
}

/// Reversed-time trace of a planar saddle's stable manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Separatrix<T> {
    /// Index of the saddle in the fixed-point list.
    pub saddle: usize,
    pub points: Vec<Vec<T>>,
}

/// Separatrix tracing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SeparatrixOptions<T> {
    pub offset: T,
    pub h: T,
    /// Longest reversed time per branch.
    pub horizon: T,
    /// Keep every this-many steps as a polyline vertex.
    pub record_every: usize,
}

impl<T: Scalar> Default for SeparatrixOptions<T> {
    fn default() -> Self {
        Self {
            offset: T::lit(1e-6),
            h: T::lit(0.005),
            horizon: T::lit(100.0),
            record_every: 1,
        }
    }
}

/// Unit eigenvector of a 2x2 matrix for the real eigenvalue `lambda`.
fn eigvec2<T: Scalar>(j: &Matrix<T>, lambda: T) -> Vec<T> {
    let a = [j[(0, 1)], lambda - j[(0, 0)]];
    let b = [lambda - j[(1, 1)], j[(1, 0)]];
    let v = if norm2(&a) >= norm2(&b) { a } else { b };
    let s = norm2(&v);
    if s == T::zero() {
        // scalar multiple of the identity: any direction works
        vec![T::one(), T::zero()]
    } else {
        vec![v[0] / s, v[1] / s]
    }
}

fn clip_segment<T: Scalar>(bounds: &Domain<T>, inside: &[T], outside: &[T]) -> Vec<T> {
    let mut t = T::one();
    for j in 0..inside.len() {
        let d = outside[j] - inside[j];
        if outside[j] < bounds.lower[j] && d != T::zero() {
            t = t.min((bounds.lower[j] - inside[j]) / d);
        }
        if outside[j] > bounds.upper[j] && d != T::zero() {
            t = t.min((bounds.upper[j] - inside[j]) / d);
        }
    }
    inside.iter().zip(outside).map(|(a, b)| *a + (*b - *a) * t).collect()
}

fn trace_branch<T: Scalar>(
    model: &PolyVectorField<T>,
    start: Vec<T>,
    bounds: &Domain<T>,
    opts: &SeparatrixOptions<T>,
) -> Vec<Vec<T>> {
    let rev = Reversed(model);
    let mut rk = Rk4::new(model.dim());
    let mut x = start;
    let mut pts = vec![x.clone()];
    let max_steps = (opts.horizon / opts.h).ceil().to_usize().unwrap_or(0);
    let mut still = 0;
    for step in 1..=max_steps {
        let prev = x.clone();
        rk.step(&rev, &mut x, opts.h);
        if !all_finite(&x) || !in_box(bounds, &x) {
            if all_finite(&x) {
                pts.push(clip_segment(bounds, &prev, &x));
            }
            break;
        }
        if distance(&prev, &x) < T::lit(1e-12) {
            still += 1;
            if still >= 10 {
                pts.push(x);
                break;
            }
        } else {
            still = 0;
        }
        if step % opts.record_every.max(1) == 0 {
            pts.push(x.clone());
        }
    }
    pts
}

/// Stable-manifold polylines for every planar saddle in `fixed_points`.
pub fn separatrices<T: Scalar>(
    model: &PolyVectorField<T>,
    bounds: &Domain<T>,
    fixed_points: &[FixedPointRecord<T>],
    opts: &SeparatrixOptions<T>,
) -> Result<Vec<Separatrix<T>>> {
    if model.dim() != 2 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (idx, fp) in fixed_points.iter().enumerate() {
        if fp.class != FixedPointClass::Saddle || !in_box(bounds, &fp.location) {
            continue;
        }
        let j = model.jacobian(&fp.location)?;
        let stable = fp
            .eigenvalues
            .iter()
            .filter(|l| l.re < T::zero())
            .map(|l| l.re)
            .fold(T::infinity(), T::min);
        let v = eigvec2(&j, stable);
        let seed = |sign: T| -> Vec<T> {
            fp.location.iter().zip(&v).map(|(p, d)| *p + sign * opts.offset * *d).collect()
        };
        let minus = trace_branch(model, seed(-T::one()), bounds, opts);
        let plus = trace_branch(model, seed(T::one()), bounds, opts);
        let mut points: Vec<Vec<T>> = minus.into_iter().rev().collect();
        points.push(fp.location.clone());
        points.extend(plus);
        out.push(Separatrix { saddle: idx, points });
    }
    Ok(out)
}

/// Labels grid samples by trajectory fate inside `bounds` and traces the
/// separatrices of planar saddles.
pub fn basin_and_separatrix<T: Scalar>(
    model: &PolyVectorField<T>,
    bounds: &Domain<T>,
    grid: &GridSpec<T>,
    fixed_points: &[FixedPointRecord<T>],
    opts: &TrajectoryOptions<T>,
) -> Result<(BasinMap<T>, Vec<Separatrix<T>>)> {
    let locs: Vec<Vec<T>> = fixed_points.iter().map(|f| f.location.clone()).collect();
    let labels = sweep(model, bounds, grid, &locs, opts)?;
    let seps = separatrices(model, bounds, fixed_points, &SeparatrixOptions::default())?;
    Ok((
        BasinMap {
            grid: grid.clone(),
            labels,
        },
        seps,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    TrendingWithinHorizon,
    NotTrendingWithinHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrendingReport<T> {
    pub grid: GridSpec<T>,
    pub horizon: T,
    pub fixed_points: Vec<Vec<T>>,
    pub outcomes: Vec<SampleOutcome>,
    pub converged: usize,
    pub escaped: usize,
    pub undecided: usize,
    /// Samples settled on each fixed point, in list order.
    pub converged_by_point: Vec<usize>,
    pub verdict: Verdict,
    /// Set when an analytic criterion already implies trending flow.
    pub theorem: Option<String>,
    #[serde(default)]
    pub provenance: std::collections::BTreeMap<String, String>,
}

/// The analytic criteria: every self rate nonnegative, or a planar model;
/// both need a domain starting at the origin and interactions that are
/// nonnegative on the sampled box.
pub fn theorem_note<T: Scalar>(model: &PolyVectorField<T>, domain: &Domain<T>, grid: &GridSpec<T>) -> Option<String> {
    if domain.lower.iter().any(|&l| l < T::zero()) {
        return None;
    }
    let nonneg = grid
        .points()
        .iter()
        .all(|x| (0..model.dim()).all(|i| model.interaction(i, x) >= T::zero()));
    if !nonneg {
        return None;
    }
    if model.eps().iter().all(|&e| e >= T::zero()) {
        Some("trending by cited theorem (ε≥0)".into())
    } else if model.dim() == 2 {
        Some("trending by cited theorem (planar, V≥0)".into())
    } else {
        None
    }
}

/// Sweeps the grid; the flow is trending within the horizon when no
/// sample stays undecided.
pub fn trending_check<T: Scalar>(
    model: &PolyVectorField<T>,
    domain: &Domain<T>,
    grid: &GridSpec<T>,
    fixed_points: &[Vec<T>],
    opts: &TrajectoryOptions<T>,
) -> Result<TrendingReport<T>> {
    let outcomes = sweep(model, domain, grid, fixed_points, opts)?;
    let mut converged_by_point = vec![0; fixed_points.len()];
    let (mut escaped, mut undecided) = (0, 0);
    for o in &outcomes {
        match o {
            SampleOutcome::Converged { point } => converged_by_point[*point] += 1,
            SampleOutcome::Escaped => escaped += 1,
            SampleOutcome::Undecided => undecided += 1,
        }
    }
    let theorem = theorem_note(model, domain, grid);
    Ok(TrendingReport {
        grid: grid.clone(),
        horizon: opts.horizon,
        fixed_points: fixed_points.to_vec(),
        converged: converged_by_point.iter().sum(),
        converged_by_point,
        escaped,
        undecided,
        verdict: if undecided == 0 {
            Verdict::TrendingWithinHorizon
        } else {
            Verdict::NotTrendingWithinHorizon
        },
        theorem,
        outcomes,
        provenance: Default::default(),
    })
}

/// Box used when a domain is unbounded above: `factor` times the largest
/// observed value per axis.
pub fn working_box<T: Scalar>(domain: &Domain<T>, data_max: &[T], factor: T) -> Result<Domain<T>> {
    let cap: Vec<T> = data_max.iter().map(|&m| factor * m.abs().max(T::lit(1e-12))).collect();
    let mut b = domain.capped(&cap);
    for (j, lo) in b.lower.iter_mut().enumerate() {
        if !lo.is_finite() {
            *lo = -cap[j];
        }
    }
    b.validate()?;
    Ok(b)
}

#[cfg(test)]
mod tests;
