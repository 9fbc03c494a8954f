//! Cross-coupled polynomial dynamical-system models for multivariate time
//! series.
//!
//! The crate fits fields of the form `x_i' = eps_i x_i + V_i(x_j, j != i)`
//! to sampled data, scores one-step forecasts with an expanding-window
//! walk-forward protocol against vector-autoregression baselines, and
//! analyzes the fitted field's phase portrait: fixed points, stability,
//! basins, separatrices and trending-flow sweeps.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod error;
pub mod eval;
pub mod field;
pub mod fit;
pub mod integrate;
pub mod linalg;
pub mod model_file;
pub mod numtext;
pub mod portrait;
pub mod scalar;
pub mod series;
pub mod var;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use scalar::Scalar;

/// `f64` instantiations of the generic types.
pub type Field = field::PolyVectorField<f64>;
pub type Frame = series::SeriesFrame<f64>;
pub type Var = var::VarModel<f64>;
pub type Report = eval::EvalReport<f64>;
pub type Table = eval::ComparisonTable<f64>;
pub type FixedPoint = portrait::FixedPointRecord<f64>;
pub type Trending = portrait::TrendingReport<f64>;
pub type Trajectory = integrate::TrajectoryResult<f64>;
pub type Model = model_file::ModelFile<f64>;
