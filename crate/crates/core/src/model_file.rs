//! Versioned JSON envelope for fitted models.
//!
//! Coefficients are stored as decimal strings with seventeen significant
//! digits so that a save/load/save cycle reproduces the file byte for byte.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{BasisMode, Domain, Monomial, PolyVectorField, Term};
use crate::linalg::Matrix;
use crate::numtext::{decode, decode_all, encode, encode_all};
use crate::scalar::Scalar;
use crate::series::ScalingSpec;
use crate::var::VarModel;

pub const FORMAT: &str = "trendflow-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile<T> {
    Poly(PolyVectorField<T>),
    Var(VarModel<T>),
}

#[derive(Serialize, Deserialize)]
struct TermFile {
    exponents: Vec<u32>,
    coefficient: String,
}

#[derive(Serialize, Deserialize)]
struct ComponentFile {
    terms: Vec<TermFile>,
}

#[derive(Serialize, Deserialize)]
struct ScalingFile {
    factors: Vec<String>,
    divisors: Vec<Option<String>>,
    adjusters: Vec<Option<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
enum Body<T> {
    PolyVectorField {
        degree: u32,
        basis_mode: BasisMode,
        eps: Vec<String>,
        components: Vec<ComponentFile>,
        domain: Domain<T>,
    },
    Var {
        p: usize,
        include_intercept: bool,
        intercept: Vec<String>,
        /// `lags[i][row][col]` is entry (row, col) of `A_{i+1}`.
        lags: Vec<Vec<Vec<String>>>,
        fitted_on: usize,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct Envelope<T> {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: Body<T>,
    dimension: usize,
    variable_names: Vec<String>,
    scaling: ScalingFile,
    provenance: BTreeMap<String, String>,
}

fn scaling_out<T: Scalar>(s: &ScalingSpec<T>) -> ScalingFile {
    ScalingFile {
        factors: encode_all(&s.factors),
        divisors: s.divisors.clone(),
        adjusters: s.adjusters.clone(),
    }
}

fn scaling_in<T: Scalar>(s: ScalingFile) -> Result<ScalingSpec<T>> {
    let spec = ScalingSpec {
        factors: decode_all(&s.factors)?,
        divisors: s.divisors,
        adjusters: s.adjusters,
    };
    spec.validate()?;
    Ok(spec)
}

impl<T: Scalar> ModelFile<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Poly(_) => "poly_vector_field",
            Self::Var(_) => "var",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Poly(m) => m.dim(),
            Self::Var(m) => m.dim(),
        }
    }

    pub fn variable_names(&self) -> &[String] {
        match self {
            Self::Poly(m) => m.variable_names(),
            Self::Var(m) => m.variable_names(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let env = match self {
            Self::Poly(m) => Envelope {
                format: FORMAT.into(),
                version: VERSION,
                body: Body::PolyVectorField {
                    degree: m.degree(),
                    basis_mode: m.basis_mode(),
                    eps: encode_all(m.eps()),
                    components: m
                        .components()
                        .iter()
                        .map(|terms| ComponentFile {
                            terms: terms
                                .iter()
                                .map(|t| TermFile {
                                    exponents: t.monomial.exponents().to_vec(),
                                    coefficient: encode(t.coefficient),
                                })
                                .collect(),
                        })
                        .collect(),
                    domain: m.domain().clone(),
                },
                dimension: m.dim(),
                variable_names: m.variable_names().to_vec(),
                scaling: scaling_out(m.scaling()),
                provenance: m.provenance().clone(),
            },
            Self::Var(m) => Envelope {
                format: FORMAT.into(),
                version: VERSION,
                body: Body::Var {
                    p: m.p(),
                    include_intercept: m.has_intercept(),
                    intercept: encode_all(m.intercept()),
                    lags: m
                        .lag_matrices()
                        .iter()
                        .map(|a| a.iter_rows().map(encode_all).collect())
                        .collect(),
                    fitted_on: m.fitted_on(),
                },
                dimension: m.dim(),
                variable_names: m.variable_names().to_vec(),
                scaling: scaling_out(m.scaling()),
                provenance: m.provenance().clone(),
            },
        };
        let mut s = serde_json::to_string_pretty(&env)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope<T> = serde_json::from_str(text)?;
        if env.format != FORMAT {
            return Err(Error::InvalidModel(format!(
                "format '{}' is not {FORMAT}",
                env.format
            )));
        }
        if env.version != VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported model file version {}",
                env.version
            )));
        }
        let n = env.dimension;
        let scaling = scaling_in(env.scaling)?;
        let model = match env.body {
            Body::PolyVectorField {
                degree,
                basis_mode,
                eps,
                components,
                domain,
            } => {
                let eps: Vec<T> = decode_all(&eps)?;
                if eps.len() != n {
                    return Err(Error::InvalidModel(format!(
                        "{} self rates for dimension {n}",
                        eps.len()
                    )));
                }
                let components = components
                    .into_iter()
                    .map(|c| {
                        c.terms
                            .into_iter()
                            .map(|t| {
                                Ok(Term {
                                    monomial: Monomial::new(t.exponents),
                                    coefficient: decode(&t.coefficient)?,
                                })
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut m = PolyVectorField::new(eps, degree, basis_mode, components)?
                    .with_variable_names(env.variable_names)?
                    .with_domain(domain)?
                    .with_scaling(scaling)?;
                for (k, v) in env.provenance {
                    m = m.with_provenance(k, v);
                }
                Self::Poly(m)
            }
            Body::Var {
                p,
                include_intercept,
                intercept,
                lags,
                fitted_on,
            } => {
                if lags.len() != p {
                    return Err(Error::InvalidModel(format!(
                        "{} lag matrices for p = {p}",
                        lags.len()
                    )));
                }
                let lags = lags
                    .iter()
                    .map(|rows| {
                        let rows = rows.iter().map(|r| decode_all(r)).collect::<Result<Vec<_>>>()?;
                        if rows.len() != n {
                            return Err(Error::InvalidModel(format!("lag matrix must have {n} rows")));
                        }
                        Matrix::from_rows(&rows)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let m = VarModel {
                    variable_names: env.variable_names,
                    intercept: decode_all(&intercept)?,
                    lags,
                    include_intercept,
                    fitted_on,
                    scaling,
                    provenance: env.provenance,
                };
                if m.dim() != n {
                    return Err(Error::InvalidModel(format!(
                        "intercept has {} entries for dimension {n}",
                        m.dim()
                    )));
                }
                m.validate()?;
                Self::Var(m)
            }
        };
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn into_poly(self) -> Result<PolyVectorField<T>> {
        match self {
            Self::Poly(m) => Ok(m),
            Self::Var(_) => Err(Error::InvalidModel(
                "expected a polynomial field, found a VAR model".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::SeriesFrame;
    use crate::var::{fit_var, VarOptions};

    fn model3() -> PolyVectorField<f64> {
        PolyVectorField::planar(
            [-0.3570, -0.2243],
            &[-0.2637, 6.9566, -16.4522, 11.0347],
            &[1.2710, -6.9038, 13.6668, -8.6907],
        )
        .unwrap()
        .with_variable_names(vec!["Readers".into(), "Edits".into()])
        .unwrap()
        .with_provenance("coefficient_convention", "plain-signed")
    }

    #[test]
    fn poly_round_trip_is_byte_identical() {
        let m = ModelFile::Poly(model3());
        let a = m.to_json().unwrap();
        let back = ModelFile::<f64>::from_json(&a).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), a);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["kind"], "poly_vector_field");
        assert_eq!(v["format"], FORMAT);
    }

    #[test]
    fn awkward_values_round_trip_bitwise() {
        let v = [0.1 + 0.2, -1e-300, 5e-324, 1.0 / 3.0, f64::MAX];
        let m = PolyVectorField::planar([v[0], v[1]], &[v[2], v[3]], &[v[4]]).unwrap();
        let back = ModelFile::<f64>::from_json(&ModelFile::Poly(m.clone()).to_json().unwrap())
            .unwrap()
            .into_poly()
            .unwrap();
        assert_eq!(back.eps()[0].to_bits(), v[0].to_bits());
        assert_eq!(back, m);
    }

    #[test]
    fn var_round_trip_is_byte_identical() {
        let rows: Vec<Vec<f64>> = (0..20).map(|t| vec![(t as f64 * 0.7).sin() + 2.0, (t as f64 * 0.3).cos()]).collect();
        let f = SeriesFrame::from_rows(&["a", "b"], &rows, 1.0).unwrap();
        let m = ModelFile::Var(fit_var(&f, 2, &VarOptions::default()).unwrap());
        let a = m.to_json().unwrap();
        let back = ModelFile::<f64>::from_json(&a).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), a);
        assert!(back.into_poly().is_err());
    }

    #[test]
    fn invalid_files_rejected() {
        let good = ModelFile::Poly(model3()).to_json().unwrap();
        let bad_format = good.replace("trendflow-model", "other");
        assert!(ModelFile::<f64>::from_json(&bad_format).is_err());
        let bad_kind = good.replace("\"poly_vector_field\"", "\"spline\"");
        assert!(ModelFile::<f64>::from_json(&bad_kind).is_err());
        // a self term smuggled into the interaction
        let self_term = good.replacen("\"exponents\": [\n            0,\n            1", "\"exponents\": [\n            1,\n            1", 1);
        assert_ne!(self_term, good);
        assert!(matches!(ModelFile::<f64>::from_json(&self_term), Err(Error::InvalidModel(_))));
        let nan = good.replacen("-3.5699999999999998e-1", "nan", 1);
        assert_ne!(nan, good);
        assert!(ModelFile::<f64>::from_json(&nan).is_err());
    }
}
