//! Dense linear algebra used by the fitting and stability code: a row-major
//! matrix, Householder least squares with optional Tikhonov damping, a
//! partial-pivoting linear solve, and a Hessenberg/Francis eigenvalue solver.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::LengthMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.cols);
        self.iter_rows()
            .map(|r| r.iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Keeps the rows in `range`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Self {
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.cols,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Householder QR factorization of a (possibly ridge-augmented) design
/// matrix, reusable across right-hand sides.
///
/// Columns are equilibrated to unit norm before factoring; the scaling is
/// undone in [`LeastSquares::solve`], so the returned coefficients refer to
/// the original columns.
#[derive(Debug, Clone)]
pub struct LeastSquares<T> {
    /// Householder vectors below the diagonal, R on and above it.
    qr: Matrix<T>,
    betas: Vec<T>,
    col_scale: Vec<T>,
    data_rows: usize,
}

impl<T: Scalar> LeastSquares<T> {
    /// Factors `design` for the problem `min ‖A θ − b‖² + ridge ‖θ‖²`.
    pub fn new(design: &Matrix<T>, ridge: T) -> Result<Self> {
        let (m, k) = (design.rows(), design.cols());
        if !design.is_finite() {
            return Err(Error::NonFinite("design matrix"));
        }
        if ridge < T::zero() || !ridge.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ridge must be a nonnegative finite number, got {ridge}"
            )));
        }
        let damped = ridge > T::zero();
        if !damped && m < k {
            return Err(Error::Underdetermined { rows: m, cols: k });
        }

        let mut a = if damped {
            let mut aug = Matrix::zeros(m + k, k);
            for i in 0..m {
                aug.row_mut(i).copy_from_slice(design.row(i));
            }
            let s = ridge.sqrt();
            for j in 0..k {
                aug[(m + j, j)] = s;
            }
            aug
        } else {
            design.clone()
        };
        let rows = a.rows();

        let mut col_scale = vec![T::one(); k];
        for (j, scale) in col_scale.iter_mut().enumerate() {
            let norm = (0..rows).map(|i| a[(i, j)] * a[(i, j)]).sum::<T>().sqrt();
            if norm == T::zero() {
                return Err(Error::RankDeficient(format!("column {j} is identically zero")));
            }
            *scale = norm;
            for i in 0..rows {
                a[(i, j)] = a[(i, j)] / norm;
            }
        }

        let mut betas = vec![T::zero(); k];
        for j in 0..k {
            let norm = (j..rows).map(|i| a[(i, j)] * a[(i, j)]).sum::<T>().sqrt();
            if norm == T::zero() {
                continue;
            }
            let alpha = if a[(j, j)] > T::zero() { -norm } else { norm };
            // reflector v = x - alpha e1, scaled so that v_0 = 1
            let v0 = a[(j, j)] - alpha;
            for i in j + 1..rows {
                a[(i, j)] = a[(i, j)] / v0;
            }
            let vtv = T::one() + (j + 1..rows).map(|i| a[(i, j)] * a[(i, j)]).sum::<T>();
            let beta = T::lit(2.0) / vtv;
            for c in j + 1..k {
                let dot = a[(j, c)] + (j + 1..rows).map(|i| a[(i, j)] * a[(i, c)]).sum::<T>();
                let f = beta * dot;
                a[(j, c)] = a[(j, c)] - f;
                for i in j + 1..rows {
                    a[(i, c)] = a[(i, c)] - f * a[(i, j)];
                }
            }
            a[(j, j)] = alpha;
            betas[j] = beta;
        }

        let max_diag = (0..k).map(|j| a[(j, j)].abs()).fold(T::zero(), T::max);
        let tol = T::epsilon() * T::lit(1e3) * T::from_usize_lossy(rows.max(k)) * max_diag;
        for j in 0..k {
            if a[(j, j)].abs() <= tol {
                return Err(Error::RankDeficient(format!(
                    "column {j} is numerically dependent on earlier columns"
                )));
            }
        }

        Ok(Self {
            qr: a,
            betas,
            col_scale,
            data_rows: m,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.qr.cols()
    }

    /// Solves for one right-hand side of length equal to the design rows.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        if rhs.len() != self.data_rows {
            return Err(Error::DimensionMismatch {
                expected: self.data_rows,
                got: rhs.len(),
            });
        }
        if !crate::scalar::all_finite(rhs) {
            return Err(Error::NonFinite("least-squares right-hand side"));
        }
        let rows = self.qr.rows();
        let k = self.qr.cols();
        let mut b = rhs.to_vec();
        b.resize(rows, T::zero());
        for j in 0..k {
            let beta = self.betas[j];
            if beta == T::zero() {
                continue;
            }
            // v = (1, qr[j+1.., j])
            let dot = b[j] + (j + 1..rows).map(|i| self.qr[(i, j)] * b[i]).sum::<T>();
            let f = beta * dot;
            b[j] = b[j] - f;
            for (i, bi) in b.iter_mut().enumerate().take(rows).skip(j + 1) {
                *bi = *bi - f * self.qr[(i, j)];
            }
        }
        let mut x = vec![T::zero(); k];
        for j in (0..k).rev() {
            let mut s = b[j];
            for c in j + 1..k {
                s = s - self.qr[(j, c)] * x[c];
            }
            x[j] = s / self.qr[(j, j)];
        }
        for (xj, &s) in x.iter_mut().zip(&self.col_scale) {
            *xj = *xj / s;
        }
        Ok(x)
    }
}

/// Least squares for a single right-hand side.
pub fn lstsq<T: Scalar>(design: &Matrix<T>, rhs: &[T], ridge: T) -> Result<Vec<T>> {
    LeastSquares::new(design, ridge)?.solve(rhs)
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.as_slice().iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return Err(Error::Singular);
    }
    let tiny = T::epsilon() * T::from_usize_lossy(n) * scale;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().partial_cmp(&m[(j, col)].abs()).unwrap())
            .unwrap();
        if m[(pivot, col)].abs() <= tiny {
            return Err(Error::Singular);
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            x.swap(col, pivot);
        }
        for i in col + 1..n {
            let f = m[(i, col)] / m[(col, col)];
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                m[(i, j)] = m[(i, j)] - f * m[(col, j)];
            }
            x[i] = x[i] - f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s = s - m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Ok(x)
}

/// Eigenvalues of a real square matrix, sorted by real part then imaginary
/// part.
///
/// Reduces to upper Hessenberg form by stabilized elementary similarity
/// transforms, then runs Francis double-shift QR sweeps with deflation.
pub fn eigenvalues<T: Scalar>(a: &Matrix<T>) -> Result<Vec<Complex<T>>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("eigenvalue input"));
    }
    let mut h = a.clone();
    to_hessenberg(&mut h);
    let mut out = hessenberg_qr(&mut h)?;
    out.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    Ok(out)
}

fn to_hessenberg<T: Scalar>(a: &mut Matrix<T>) {
    let n = a.rows();
    for m in 1..n.saturating_sub(1) {
        let mut x = T::zero();
        let mut piv = m;
        for j in m..n {
            if a[(j, m - 1)].abs() > x.abs() {
                x = a[(j, m - 1)];
                piv = j;
            }
        }
        if piv != m {
            for j in m - 1..n {
                let t = a[(piv, j)];
                a[(piv, j)] = a[(m, j)];
                a[(m, j)] = t;
            }
            for j in 0..n {
                let t = a[(j, piv)];
                a[(j, piv)] = a[(j, m)];
                a[(j, m)] = t;
            }
        }
        if x != T::zero() {
            for i in m + 1..n {
                let mut y = a[(i, m - 1)];
                if y != T::zero() {
                    y = y / x;
                    a[(i, m - 1)] = T::zero();
                    for j in m..n {
                        a[(i, j)] = a[(i, j)] - y * a[(m, j)];
                    }
                    for j in 0..n {
                        a[(j, m)] = a[(j, m)] + y * a[(j, i)];
                    }
                }
            }
        }
    }
    for i in 2..n {
        for j in 0..i - 1 {
            a[(i, j)] = T::zero();
        }
    }
}

fn hessenberg_qr<T: Scalar>(a: &mut Matrix<T>) -> Result<Vec<Complex<T>>> {
    let n = a.rows() as isize;
    let mut wr = vec![Complex::new(T::zero(), T::zero()); n as usize];
    if n == 0 {
        return Ok(wr);
    }
    let eps = T::epsilon();
    let half = T::lit(0.5);
    let at = |a: &Matrix<T>, i: isize, j: isize| a[(i as usize, j as usize)];
    let mut anorm = T::zero();
    for i in 0..n {
        for j in (i - 1).max(0)..n {
            anorm = anorm + at(a, i, j).abs();
        }
    }
    let sign = |x: T, s: T| if s >= T::zero() { x.abs() } else { -x.abs() };

    let mut nn = n - 1;
    let mut t = T::zero();
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l > 0 {
                let mut s = at(a, l - 1, l - 1).abs() + at(a, l, l).abs();
                if s == T::zero() {
                    s = anorm;
                }
                if at(a, l, l - 1).abs() <= eps * s {
                    a[(l as usize, (l - 1) as usize)] = T::zero();
                    break;
                }
                l -= 1;
            }
            let mut x = at(a, nn, nn);
            if l == nn {
                wr[nn as usize] = Complex::new(x + t, T::zero());
                nn -= 1;
                break;
            }
            let mut y = at(a, nn - 1, nn - 1);
            let mut w = at(a, nn, nn - 1) * at(a, nn - 1, nn);
            if l == nn - 1 {
                let p = half * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x = x + t;
                if q >= T::zero() {
                    z = p + sign(z, p);
                    let r1 = x + z;
                    let r2 = if z != T::zero() { x - w / z } else { r1 };
                    wr[(nn - 1) as usize] = Complex::new(r1, T::zero());
                    wr[nn as usize] = Complex::new(r2, T::zero());
                } else {
                    wr[nn as usize] = Complex::new(x + p, -z);
                    wr[(nn - 1) as usize] = Complex::new(x + p, z);
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return Err(Error::InvalidArgument(
                    "eigenvalue iteration failed to converge".into(),
                ));
            }
            if its == 10 || its == 20 {
                t = t + x;
                for i in 0..=nn {
                    a[(i as usize, i as usize)] = a[(i as usize, i as usize)] - x;
                }
                let s = at(a, nn, nn - 1).abs() + at(a, nn - 1, nn - 2).abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = at(a, m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / at(a, m + 1, m) + at(a, m, m + 1);
                q = at(a, m + 1, m + 1) - z - rr - ss;
                r = at(a, m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p = p / s;
                q = q / s;
                r = r / s;
                if m == l {
                    break;
                }
                let u = at(a, m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (at(a, m - 1, m - 1).abs() + z.abs() + at(a, m + 1, m + 1).abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nn - 1 {
                a[((i + 2) as usize, i as usize)] = T::zero();
                if i != m {
                    a[((i + 2) as usize, (i - 1) as usize)] = T::zero();
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = at(a, k, k - 1);
                    q = at(a, k + 1, k - 1);
                    r = T::zero();
                    if k + 1 != nn {
                        r = at(a, k + 2, k - 1);
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != T::zero() {
                        p = p / x;
                        q = q / x;
                        r = r / x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != T::zero() {
                    if k == m {
                        if l != m {
                            a[(k as usize, (k - 1) as usize)] = -at(a, k, k - 1);
                        }
                    } else {
                        a[(k as usize, (k - 1) as usize)] = -s * x;
                    }
                    p = p + s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q = q / p;
                    r = r / p;
                    for j in k..=nn {
                        let mut pp = at(a, k, j) + q * at(a, k + 1, j);
                        if k + 1 != nn {
                            pp = pp + r * at(a, k + 2, j);
                            a[((k + 2) as usize, j as usize)] = at(a, k + 2, j) - pp * z;
                        }
                        a[((k + 1) as usize, j as usize)] = at(a, k + 1, j) - pp * y;
                        a[(k as usize, j as usize)] = at(a, k, j) - pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * at(a, i, k) + y * at(a, i, k + 1);
                        if k + 1 != nn {
                            pp = pp + z * at(a, i, k + 2);
                            a[(i as usize, (k + 2) as usize)] = at(a, i, k + 2) - pp * r;
                        }
                        a[(i as usize, (k + 1) as usize)] = at(a, i, k + 1) - pp * q;
                        a[(i as usize, k as usize)] = at(a, i, k) - pp;
                    }
                }
                k += 1;
            }
            if l + 1 >= nn {
                break;
            }
        }
    }
    Ok(wr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
        let a = Matrix::from_rows(&rows).unwrap();
        let b: Vec<f64> = xs.iter().map(|&x| 2.0 - 0.5 * x).collect();
        let theta = lstsq(&a, &b, 0.0).unwrap();
        assert!((theta[0] - 2.0).abs() < 1e-12);
        assert!((theta[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn lstsq_rejects_underdetermined_and_dependent() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(
            lstsq(&a, &[1.0], 0.0),
            Err(Error::Underdetermined { .. })
        ));
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert!(matches!(
            lstsq(&a, &[1.0, 2.0, 3.0], 0.0),
            Err(Error::RankDeficient(_))
        ));
        // damping makes both solvable
        assert!(lstsq(&a, &[1.0, 2.0, 3.0], 1e-8).is_ok());
    }

    #[test]
    fn residual_orthogonal_to_columns() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let x = i as f64 / 7.0;
                vec![x, x * x, (3.0 * x).sin()]
            })
            .collect();
        let a = Matrix::from_rows(&rows).unwrap();
        let b: Vec<f64> = (0..20).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let theta = lstsq(&a, &b, 0.0).unwrap();
        let fitted = a.mul_vec(&theta);
        let resid: Vec<f64> = b.iter().zip(&fitted).map(|(y, f)| y - f).collect();
        let at = a.transpose();
        let g = at.mul_vec(&resid);
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (j, gj) in g.iter().enumerate() {
            let cn = a.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(gj.abs() <= 1e-10 * cn * bn, "column {j}: {gj}");
        }
    }

    #[test]
    fn solve_and_singular() {
        let a = Matrix::<f64>::from_rows(&[vec![0.0, 2.0], vec![3.0, 1.0]]).unwrap();
        let x = solve(&a, &[4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(solve(&s, &[1.0, 1.0]), Err(Error::Singular)));
    }

    #[test]
    fn eigenvalues_of_small_matrices() {
        let d = Matrix::<f64>::from_rows(&[vec![-1.0, 0.0], vec![0.0, -2.0]]).unwrap();
        let e = eigenvalues(&d).unwrap();
        assert!((e[0].re + 2.0).abs() < 1e-14 && (e[1].re + 1.0).abs() < 1e-14);

        let rot = Matrix::<f64>::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let e = eigenvalues(&rot).unwrap();
        assert!(e[0].re.abs() < 1e-14 && (e[0].im + 1.0).abs() < 1e-14);
        assert!((e[1].im - 1.0).abs() < 1e-14);

        let one = Matrix::<f64>::from_rows(&[vec![3.5]]).unwrap();
        assert_eq!(eigenvalues(&one).unwrap()[0].re, 3.5);
    }

    #[test]
    fn eigenvalues_match_nalgebra_on_dense_matrices() {
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
        };
        for n in 2..=6 {
            for _ in 0..20 {
                let data: Vec<f64> = (0..n * n).map(|_| next()).collect();
                let ours = eigenvalues(&Matrix::from_vec(n, n, data.clone()).unwrap()).unwrap();
                let na = nalgebra::DMatrix::from_row_slice(n, n, &data);
                let mut theirs: Vec<Complex<f64>> = na
                    .complex_eigenvalues()
                    .iter()
                    .map(|c| Complex::new(c.re, c.im))
                    .collect();
                theirs.sort_by(|x, y| {
                    x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap())
                });
                // match each oracle eigenvalue to its nearest counterpart
                for t in &theirs {
                    let best = ours
                        .iter()
                        .map(|o| (o - t).norm())
                        .fold(f64::INFINITY, f64::min);
                    assert!(best < 1e-8, "n={n}: {t} unmatched in {ours:?}");
                }
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::<f32>::from_rows(&[vec![-0.357, -0.2637], vec![1.271, -0.2243]]).unwrap();
        let e = eigenvalues(&a).unwrap();
        assert!((e[0].re + 0.29065).abs() < 1e-5);
        assert!((e[1].im - 0.575_117_7).abs() < 1e-5);
    }
}
