use serde::{Deserialize, Serialize};

use super::{
    find_fixed_points, in_box, separatrices, trending_check, FixedPointOptions, FixedPointRecord,
    GridSpec, Separatrix, SeparatrixOptions, TrendingReport,
};
use crate::error::{Error, Result};
use crate::field::{Domain, PolyVectorField};
use crate::integrate::{trajectory, Termination, TrajectoryOptions};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PortraitOptions<T> {
    pub model_ref: String,
    /// Field samples per axis.
    pub grid: usize,
    /// Representative trajectory starts per axis.
    pub trajectories_per_axis: usize,
    pub trajectory: TrajectoryOptions<T>,
    /// Trending sweep samples per axis; `None` skips the sweep.
    pub trending_grid: Option<usize>,
    pub nullcline_samples: usize,
    pub fixed_points: FixedPointOptions<T>,
    pub separatrix: SeparatrixOptions<T>,
}

impl<T: Scalar> Default for PortraitOptions<T> {
    fn default() -> Self {
        Self {
            model_ref: String::new(),
            grid: 20,
            trajectories_per_axis: 4,
            trajectory: TrajectoryOptions {
                horizon: T::lit(100.0),
                record_every: 10,
                ..TrajectoryOptions::default()
            },
            trending_grid: Some(10),
            nullcline_samples: 400,
            fixed_points: FixedPointOptions::default(),
            separatrix: SeparatrixOptions {
                record_every: 4,
                ..SeparatrixOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FieldSample<T> {
    pub point: Vec<T>,
    pub vector: Vec<T>,
}

/// Zero set of one component, split where it leaves the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Nullcline<T> {
    pub component: usize,
    pub equation: String,
    pub segments: Vec<Vec<Vec<T>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrajectorySketch<T> {
    pub start: Vec<T>,
    pub termination: Termination<T>,
    pub points: Vec<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BoxSpec<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PortraitData<T> {
    pub model_ref: String,
    pub variables: Vec<String>,
    #[serde(rename = "box")]
    pub bounds: BoxSpec<T>,
    pub grid: GridSpec<T>,
    pub field_samples: Vec<FieldSample<T>>,
    pub fixed_points: Vec<FixedPointRecord<T>>,
    pub nullclines: Vec<Nullcline<T>>,
    pub separatrices: Vec<Separatrix<T>>,
    pub trajectories: Vec<TrajectorySketch<T>>,
    pub trending_report: Option<TrendingReport<T>>,
    #[serde(default)]
    pub provenance: std::collections::BTreeMap<String, String>,
}

impl<T: Scalar> PortraitData<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn planar_nullclines<T: Scalar>(
    model: &PolyVectorField<T>,
    bounds: &Domain<T>,
    samples: usize,
) -> Vec<Nullcline<T>> {
    if model.dim() != 2 {
        return Vec::new();
    }
    let names = model.variable_names();
    let mut out = Vec::new();
    for i in 0..2 {
        let e = model.eps()[i];
        if e == T::zero() {
            continue;
        }
        // component i vanishes where x_i = -V_i(x_other) / e_i
        let other = 1 - i;
        let (lo, hi) = (bounds.lower[other], bounds.upper[other]);
        let mut segments = Vec::new();
        let mut current: Vec<Vec<T>> = Vec::new();
        for k in 0..=samples {
            let s = lo + (hi - lo) * T::from_usize_lossy(k) / T::from_usize_lossy(samples);
            let mut p = vec![T::zero(); 2];
            p[other] = s;
            p[i] = -model.interaction(i, &p) / e;
            if p[i].is_finite() && in_box(bounds, &p) {
                current.push(p);
            } else if !current.is_empty() {
                segments.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            segments.push(current);
        }
        out.push(Nullcline {
            component: i,
            equation: format!("{} = -V{}({}) / eps{}", names[i], i + 1, names[other], i + 1),
            segments,
        });
    }
    out
}

/// Everything needed to draw the portrait over `bounds`.
pub fn export_portrait<T: Scalar>(
    model: &PolyVectorField<T>,
    bounds: &Domain<T>,
    opts: &PortraitOptions<T>,
) -> Result<PortraitData<T>> {
    let n = model.dim();
    if bounds.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bounds.dim(),
        });
    }
    let grid = GridSpec::over(bounds, opts.grid, false)?;
    let field_samples = grid
        .points()
        .into_iter()
        .map(|p| {
            let vector = model.evaluate(&p)?;
            Ok(FieldSample { point: p, vector })
        })
        .collect::<Result<Vec<_>>>()?;
    let fixed_points = find_fixed_points(model, bounds, &opts.fixed_points)?;
    let nullclines = planar_nullclines(model, bounds, opts.nullcline_samples.max(2));
    let seps = separatrices(model, bounds, &fixed_points, &opts.separatrix)?;
    let locations: Vec<Vec<T>> = fixed_points.iter().map(|f| f.location.clone()).collect();

    let mut trajectories = Vec::new();
    if opts.trajectories_per_axis > 0 {
        let starts = GridSpec::over(bounds, opts.trajectories_per_axis, true)?;
        for start in starts.points() {
            let r = match trajectory(model, &start, bounds, &locations, &opts.trajectory) {
                Ok(r) => r,
                Err(Error::BlowUp { .. }) => continue,
                Err(e) => return Err(e),
            };
            trajectories.push(TrajectorySketch {
                start,
                termination: r.termination,
                points: r.path.into_iter().map(|(_, x)| x).collect(),
            });
        }
    }

    let trending_report = match opts.trending_grid {
        Some(k) => {
            let g = GridSpec::over(bounds, k, true)?;
            Some(trending_check(model, bounds, &g, &locations, &TrajectoryOptions {
                horizon: TrajectoryOptions::<T>::default().horizon,
                ..opts.trajectory.clone()
            })?)
        }
        None => None,
    };

    Ok(PortraitData {
        model_ref: opts.model_ref.clone(),
        variables: model.variable_names().to_vec(),
        bounds: BoxSpec {
            lower: bounds.lower.clone(),
            upper: bounds.upper.clone(),
        },
        grid,
        field_samples,
        fixed_points,
        nullclines,
        separatrices: seps,
        trajectories,
        trending_report,
        provenance: Default::default(),
    })
}
