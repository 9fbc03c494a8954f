//! Cross-coupled polynomial vector fields
//! `x_i' = eps_i x_i + V_i(x_1, .., x_{i-1}, x_{i+1}, .., x_n)`.
//!
//! `V_i` is a polynomial without constant term in the variables other than
//! `x_i`, so the origin is always an equilibrium and the only self-coupling
//! of component `i` is the linear rate `eps_i`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::numtext;
use crate::scalar::{all_finite, Scalar};
use crate::series::ScalingSpec;

/// Anything the integrators can flow along.
pub trait VectorField<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    /// Writes the field at `state` into `out`. Both slices have length
    /// [`VectorField::dim`].
    fn eval_into(&self, state: &[T], out: &mut [T]);
}

/// The field with time reversed, `x' = -f(x)`.
#[derive(Debug, Clone, Copy)]
pub struct Reversed<'a, F>(pub &'a F);

impl<T: Scalar, F: VectorField<T>> VectorField<T> for Reversed<'_, F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval_into(&self, state: &[T], out: &mut [T]) {
        self.0.eval_into(state, out);
        for v in out.iter_mut() {
            *v = -*v;
        }
    }
}

/// Exponent vector of a monomial over all `n` state variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Number of variables with a nonzero exponent.
    pub fn support(&self) -> usize {
        self.0.iter().filter(|&&e| e > 0).count()
    }

    #[inline]
    pub fn eval<T: Scalar>(&self, state: &[T]) -> T {
        let mut acc = T::one();
        for (&e, &x) in self.0.iter().zip(state) {
            if e > 0 {
                acc = acc * x.powi(e as i32);
            }
        }
        acc
    }

    /// Partial derivative with respect to variable `j`.
    pub fn partial<T: Scalar>(&self, state: &[T], j: usize) -> T {
        let ej = self.0[j];
        if ej == 0 {
            return T::zero();
        }
        let mut acc = T::from_u32(ej).unwrap();
        for (k, (&e, &x)) in self.0.iter().zip(state).enumerate() {
            let p = if k == j { e - 1 } else { e };
            if p > 0 {
                acc = acc * x.powi(p as i32);
            }
        }
        acc
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "x{}", j + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Which cross monomials each component may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    /// Every monomial of total degree `1..=d` in the other variables.
    Full,
    /// Univariate powers of each other variable only.
    Separable,
}

impl fmt::Display for BasisMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisMode::Full => "full",
            BasisMode::Separable => "separable",
        })
    }
}

impl std::str::FromStr for BasisMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "separable" => Ok(Self::Separable),
            other => Err(Error::InvalidArgument(format!(
                "unknown basis mode '{other}' (expected full or separable)"
            ))),
        }
    }
}

/// Cross monomials for `component` in dimension `n`, graded by total degree
/// and ordered lexicographically (descending) within a degree.
pub fn basis(n: usize, component: usize, degree: u32, mode: BasisMode) -> Vec<Monomial> {
    let others: Vec<usize> = (0..n).filter(|&j| j != component).collect();
    let mut out = Vec::new();
    for total in 1..=degree {
        let mut exps = vec![0u32; others.len()];
        compositions(total, 0, &mut exps, &mut |e| {
            let mut full = vec![0u32; n];
            for (&j, &p) in others.iter().zip(e) {
                full[j] = p;
            }
            let m = Monomial(full);
            if mode == BasisMode::Full || m.support() == 1 {
                out.push(m);
            }
        });
    }
    out
}

// all ways to write `remaining` as a sum over exps[pos..], first slot largest first
fn compositions(remaining: u32, pos: usize, exps: &mut [u32], emit: &mut impl FnMut(&[u32])) {
    if pos + 1 == exps.len() {
        exps[pos] = remaining;
        emit(exps);
        exps[pos] = 0;
        return;
    }
    if exps.is_empty() {
        return;
    }
    for e in (0..=remaining).rev() {
        exps[pos] = e;
        compositions(remaining - e, pos + 1, exps, emit);
    }
    exps[pos] = 0;
}

/// One coefficient of a component's cross polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Term<T> {
    pub monomial: Monomial,
    pub coefficient: T,
}

/// Which side of a coordinate bound a state fell through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Lower,
    Upper,
}

/// Axis-aligned region of interest; a state escapes when it leaves
/// `[lower - margin, upper + margin]` on any axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub escape_margin: T,
}

impl<T: Scalar> Domain<T> {
    /// The positive orthant `[0, inf)^n`.
    pub fn nonnegative(n: usize) -> Self {
        Self {
            lower: vec![T::zero(); n],
            upper: vec![T::infinity(); n],
            escape_margin: T::zero(),
        }
    }

    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: vec![T::neg_infinity(); n],
            upper: vec![T::infinity(); n],
            escape_margin: T::zero(),
        }
    }

    pub fn boxed(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        let d = Self {
            lower,
            upper,
            escape_margin: T::zero(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_margin(mut self, margin: T) -> Self {
        self.escape_margin = margin;
        self
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::LengthMismatch("domain bounds differ in length".into()));
        }
        for (j, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "domain axis {j}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        if !(self.escape_margin >= T::zero()) {
            return Err(Error::InvalidArgument("escape margin must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    /// First violated bound, if any; non-finite coordinates count as an
    /// upper violation.
    pub fn violation(&self, state: &[T]) -> Option<(usize, BoundSide)> {
        for (j, &x) in state.iter().enumerate() {
            if x.is_nan() {
                return Some((j, BoundSide::Upper));
            }
            if x < self.lower[j] - self.escape_margin {
                return Some((j, BoundSide::Lower));
            }
            if x > self.upper[j] + self.escape_margin {
                return Some((j, BoundSide::Upper));
            }
        }
        None
    }

    pub fn contains(&self, state: &[T]) -> bool {
        self.violation(state).is_none()
    }

    /// Replaces infinite upper bounds with `cap`.
    pub fn capped(&self, cap: &[T]) -> Self {
        Self {
            lower: self.lower.clone(),
            upper: self
                .upper
                .iter()
                .zip(cap)
                .map(|(&u, &c)| if u.is_finite() { u } else { c })
                .collect(),
            escape_margin: self.escape_margin,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DomainText {
    lower: Vec<String>,
    upper: Vec<String>,
    escape_margin: String,
}

impl<T: Scalar> Serialize for Domain<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DomainText {
            lower: numtext::encode_all(&self.lower),
            upper: numtext::encode_all(&self.upper),
            escape_margin: numtext::encode(self.escape_margin),
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Domain<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let t = DomainText::deserialize(d)?;
        let dom = Domain {
            lower: numtext::decode_all(&t.lower).map_err(D::Error::custom)?,
            upper: numtext::decode_all(&t.upper).map_err(D::Error::custom)?,
            escape_margin: numtext::decode(&t.escape_margin).map_err(D::Error::custom)?,
        };
        dom.validate().map_err(D::Error::custom)?;
        Ok(dom)
    }
}

/// A fitted or hand-specified cross-coupled polynomial field.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVectorField<T> {
    variable_names: Vec<String>,
    eps: Vec<T>,
    degree: u32,
    basis_mode: BasisMode,
    components: Vec<Vec<Term<T>>>,
    domain: Domain<T>,
    scaling: ScalingSpec<T>,
    provenance: BTreeMap<String, String>,
}

impl<T: Scalar> PolyVectorField<T> {
    /// Validates the structural invariants: no constant monomial, no
    /// monomial in component `i` that involves `x_i`, total degrees within
    /// `1..=degree`, single-variable monomials in separable mode, and no
    /// repeated monomial within a component.
    pub fn new(
        eps: Vec<T>,
        degree: u32,
        basis_mode: BasisMode,
        components: Vec<Vec<Term<T>>>,
    ) -> Result<Self> {
        let n = eps.len();
        if n == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        if degree == 0 {
            return Err(Error::InvalidModel("degree must be at least 1".into()));
        }
        if components.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} components for dimension {n}",
                components.len()
            )));
        }
        if !all_finite(&eps) {
            return Err(Error::InvalidModel("non-finite self rate".into()));
        }
        for (i, terms) in components.iter().enumerate() {
            let mut seen = std::collections::HashSet::new();
            for t in terms {
                let e = t.monomial.exponents();
                if e.len() != n {
                    return Err(Error::InvalidModel(format!(
                        "component {i}: monomial {:?} has {} exponents, expected {n}",
                        e,
                        e.len()
                    )));
                }
                let total = t.monomial.total_degree();
                if total == 0 {
                    return Err(Error::InvalidModel(format!(
                        "component {i}: constant monomial not allowed"
                    )));
                }
                if e[i] != 0 {
                    return Err(Error::InvalidModel(format!(
                        "component {i}: monomial {} involves its own variable",
                        t.monomial
                    )));
                }
                if total > degree {
                    return Err(Error::InvalidModel(format!(
                        "component {i}: monomial {} exceeds degree {degree}",
                        t.monomial
                    )));
                }
                if basis_mode == BasisMode::Separable && t.monomial.support() != 1 {
                    return Err(Error::InvalidModel(format!(
                        "component {i}: cross monomial {} in separable basis",
                        t.monomial
                    )));
                }
                if !t.coefficient.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "component {i}: non-finite coefficient"
                    )));
                }
                if !seen.insert(&t.monomial) {
                    return Err(Error::InvalidModel(format!(
                        "component {i}: monomial {} repeated",
                        t.monomial
                    )));
                }
            }
        }
        Ok(Self {
            variable_names: (1..=n).map(|i| format!("x{i}")).collect(),
            eps,
            degree,
            basis_mode,
            components,
            domain: Domain::nonnegative(n),
            scaling: ScalingSpec::identity(n),
            provenance: BTreeMap::new(),
        })
    }

    /// Planar field `x' = e1 x + sum v_k y^k`, `y' = e2 y + sum w_k x^k`,
    /// with `v[k]`, `w[k]` the coefficients of the power `k + 1`.
    pub fn planar(eps: [T; 2], v: &[T], w: &[T]) -> Result<Self> {
        let degree = v.len().max(w.len()) as u32;
        let term = |var: usize, k: usize, c: T| {
            let mut e = vec![0u32; 2];
            e[var] = k as u32 + 1;
            Term {
                monomial: Monomial(e),
                coefficient: c,
            }
        };
        let comp0 = v.iter().enumerate().map(|(k, &c)| term(1, k, c)).collect();
        let comp1 = w.iter().enumerate().map(|(k, &c)| term(0, k, c)).collect();
        Self::new(eps.to_vec(), degree.max(1), BasisMode::Full, vec![comp0, comp1])
    }

    /// Linear field `x' = A x`, diagonal entries becoming the self rates.
    pub fn linear(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.cols(),
            });
        }
        let eps = (0..n).map(|i| a[(i, i)]).collect();
        let components = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| {
                        let mut e = vec![0u32; n];
                        e[j] = 1;
                        Term {
                            monomial: Monomial(e),
                            coefficient: a[(i, j)],
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(eps, 1, BasisMode::Full, components)
    }

    pub fn with_variable_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: names.len(),
            });
        }
        self.variable_names = names;
        Ok(self)
    }

    pub fn with_domain(mut self, domain: Domain<T>) -> Result<Self> {
        if domain.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: domain.dim(),
            });
        }
        domain.validate()?;
        self.domain = domain;
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
        self.scaling = scaling;
        Ok(self)
    }

    pub fn with_provenance(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.provenance.insert(key.into(), value.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.eps.len()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn eps(&self) -> &[T] {
        &self.eps
    }

    pub fn basis_mode(&self) -> BasisMode {
        self.basis_mode
    }

    pub fn components(&self) -> &[Vec<Term<T>>] {
        &self.components
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn scaling(&self) -> &ScalingSpec<T> {
        &self.scaling
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn provenance(&self) -> &BTreeMap<String, String> {
        &self.provenance
    }

    /// Coefficient of `monomial` in component `i`, zero when absent.
    pub fn coefficient(&self, i: usize, monomial: &Monomial) -> T {
        self.components[i]
            .iter()
            .find(|t| &t.monomial == monomial)
            .map_or(T::zero(), |t| t.coefficient)
    }

    /// The cross polynomial `V_i` at `state`.
    #[inline]
    pub fn interaction(&self, i: usize, state: &[T]) -> T {
        self.components[i]
            .iter()
            .map(|t| t.coefficient * t.monomial.eval(state))
            .fold(T::zero(), |a, b| a + b)
    }

    fn check_state(&self, state: &[T]) -> Result<()> {
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.len(),
            });
        }
        if !all_finite(state) {
            return Err(Error::NonFinite("state"));
        }
        Ok(())
    }

    pub fn evaluate(&self, state: &[T]) -> Result<Vec<T>> {
        self.check_state(state)?;
        let mut out = vec![T::zero(); self.dim()];
        self.eval_into(state, &mut out);
        Ok(out)
    }

    /// Analytic Jacobian; the diagonal is exactly `eps`.
    pub fn jacobian(&self, state: &[T]) -> Result<Matrix<T>> {
        self.check_state(state)?;
        Ok(self.jacobian_unchecked(state))
    }

    pub(crate) fn jacobian_unchecked(&self, state: &[T]) -> Matrix<T> {
        let n = self.dim();
        let mut jac = Matrix::zeros(n, n);
        for i in 0..n {
            jac[(i, i)] = self.eps[i];
            for t in &self.components[i] {
                for j in 0..n {
                    if j != i && t.monomial.exponents()[j] > 0 {
                        jac[(i, j)] = jac[(i, j)] + t.coefficient * t.monomial.partial(state, j);
                    }
                }
            }
        }
        jac
    }

    /// Same field with every coefficient multiplied by `c`, i.e. time
    /// rescaled by `c`.
    pub fn time_scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        for e in &mut out.eps {
            *e = *e * c;
        }
        for comp in &mut out.components {
            for t in comp {
                t.coefficient = t.coefficient * c;
            }
        }
        out
    }

    /// Human-readable equations, one line per component.
    pub fn equations(&self) -> Vec<String> {
        (0..self.dim())
            .map(|i| {
                let mut s = format!("{}' = {} * {}", self.variable_names[i], self.eps[i], self.variable_names[i]);
                for t in &self.components[i] {
                    let (sign, mag) = if t.coefficient < T::zero() {
                        ("-", -t.coefficient)
                    } else {
                        ("+", t.coefficient)
                    };
                    s.push_str(&format!(" {sign} {mag} * {}", self.render_monomial(&t.monomial)));
                }
                s
            })
            .collect()
    }

    fn render_monomial(&self, m: &Monomial) -> String {
        m.exponents()
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(j, &e)| {
                if e == 1 {
                    self.variable_names[j].clone()
                } else {
                    format!("{}^{e}", self.variable_names[j])
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl<T: Scalar> VectorField<T> for PolyVectorField<T> {
    fn dim(&self) -> usize {
        self.eps.len()
    }

    #[inline]
    fn eval_into(&self, state: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.eps[i] * state[i] + self.interaction(i, state);
        }
    }
}
