//! Dense solver for the regularized kernel system.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

enum Factor<T> {
    /// Lower-triangular `L` with `M = L L^T`.
    Cholesky(Matrix<T>),
    /// Packed `LU` with row permutation.
    Lu(Matrix<T>, Vec<usize>),
}

impl<T: Scalar> Factor<T> {
    fn of(m: &Matrix<T>) -> Result<(Self, f64)> {
        if !is_symmetric(m) {
            return lu(m);
        }
        match cholesky(m) {
            Some(l) => {
                let d: Vec<f64> = (0..l.rows()).map(|i| l.get(i, i).as_f64()).collect();
                let cond = spread(&d).powi(2);
                Ok((Factor::Cholesky(l), cond))
            }
            None => lu(m),
        }
    }

    fn solve_in_place(&self, b: &mut [T]) {
        match self {
            Factor::Cholesky(l) => {
                let n = l.rows();
                for i in 0..n {
                    let mut s = b[i];
                    for (k, &bk) in b[..i].iter().enumerate() {
                        s -= l.get(i, k) * bk;
                    }
                    b[i] = s / l.get(i, i);
                }
                for i in (0..n).rev() {
                    let mut s = b[i];
                    for (k, &bk) in b.iter().enumerate().skip(i + 1) {
                        s -= l.get(k, i) * bk;
                    }
                    b[i] = s / l.get(i, i);
                }
            }
            Factor::Lu(lu, perm) => {
                let n = lu.rows();
                let mut y: Vec<T> = perm.iter().map(|&p| b[p]).collect();
                for i in 0..n {
                    for k in 0..i {
                        let v = lu.get(i, k) * y[k];
                        y[i] -= v;
                    }
                }
                for i in (0..n).rev() {
                    for k in i + 1..n {
                        let v = lu.get(i, k) * y[k];
                        y[i] -= v;
                    }
                    y[i] /= lu.get(i, i);
                }
                b.copy_from_slice(&y);
            }
        }
    }
}

fn spread(d: &[f64]) -> f64 {
    let max = d.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = d.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn is_symmetric<T: Scalar>(m: &Matrix<T>) -> bool {
    let n = m.rows();
    (0..n).all(|i| {
        (i + 1..n).all(|j| {
            let (a, b) = (m.get(i, j), m.get(j, i));
            (a - b).abs() <= T::epsilon() * a.abs().max(b.abs())
        })
    })
}

fn cholesky<T: Scalar>(m: &Matrix<T>) -> Option<Matrix<T>> {
    let n = m.rows();
    let mut l = Matrix::filled(n, n, T::zero());
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !d.is_finite() || d <= T::zero() {
            return None;
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    Some(l)
}

fn lu<T: Scalar>(m: &Matrix<T>) -> Result<(Factor<T>, f64)> {
    let n = m.rows();
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = a.as_slice().iter().fold(0.0f64, |s, v| s.max(v.as_f64().abs())).max(f64::MIN_POSITIVE);
    for j in 0..n {
        let p = (j..n)
            .max_by(|&x, &y| a.get(x, j).abs().partial_cmp(&a.get(y, j).abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        if a.get(p, j).as_f64().abs() <= scale * f64::EPSILON * n as f64 {
            let d: Vec<f64> = (0..j).map(|i| a.get(i, i).as_f64()).collect();
            return Err(Error::Singular {
                condition: if d.is_empty() { f64::INFINITY } else { spread(&d).max(1.0 / f64::EPSILON) },
            });
        }
        if p != j {
            for c in 0..n {
                let (x, y) = (a.get(j, c), a.get(p, c));
                a.set(j, c, y);
                a.set(p, c, x);
            }
            perm.swap(j, p);
        }
        let pivot = a.get(j, j);
        for i in j + 1..n {
            let f = a.get(i, j) / pivot;
            a.set(i, j, f);
            for c in j + 1..n {
                let v = a.get(i, c) - f * a.get(j, c);
                a.set(i, c, v);
            }
        }
    }
    let d: Vec<f64> = (0..n).map(|i| a.get(i, i).as_f64()).collect();
    let cond = spread(&d);
    Ok((Factor::Lu(a, perm), cond))
}

fn residual<T: Scalar>(m: &Matrix<T>, x: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let mut r = b.clone();
    for i in 0..m.rows() {
        for k in 0..m.cols() {
            let mik = m.get(i, k);
            if mik == T::zero() {
                continue;
            }
            for j in 0..b.cols() {
                let v = r.get(i, j) - mik * x.get(k, j);
                r.set(i, j, v);
            }
        }
    }
    r
}

pub(crate) fn frobenius<T: Scalar>(m: &Matrix<T>) -> f64 {
    m.as_slice().iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt()
}

/// Solves `M X = B` for square `M`, preferring Cholesky and falling back to
/// partially pivoted LU when `M` is not numerically positive definite. Up to
/// three rounds of iterative refinement bring the residual under
/// `T::SOLVE_TOL * ||B||_F`.
pub fn solve<T: Scalar>(m: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let n = m.rows();
    if m.cols() != n || b.rows() != n {
        return Err(Error::Dimension(format!(
            "cannot solve a {}x{} system with {} right-hand rows",
            m.rows(),
            m.cols(),
            b.rows()
        )));
    }
    let (factor, condition) = Factor::of(m)?;
    match refine(m, b, &factor, condition) {
        Err(Error::Residual { .. }) if matches!(factor, Factor::Cholesky(_)) => {
            let (factor, condition) = lu(m)?;
            refine(m, b, &factor, condition)
        }
        other => other,
    }
}

fn refine<T: Scalar>(m: &Matrix<T>, b: &Matrix<T>, factor: &Factor<T>, condition: f64) -> Result<Matrix<T>> {
    let n = m.rows();
    let mut x = b.clone();
    let mut col = vec![T::zero(); n];
    let solve_cols = |rhs: &Matrix<T>, out: &mut Matrix<T>, col: &mut Vec<T>| {
        for j in 0..rhs.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = rhs.get(i, j);
            }
            factor.solve_in_place(col);
            for (i, &c) in col.iter().enumerate() {
                out.set(i, j, c);
            }
        }
    };
    solve_cols(b, &mut x, &mut col);

    let bound = T::SOLVE_TOL * frobenius(b);
    let mut res = residual(m, &x, b);
    for _ in 0..3 {
        if frobenius(&res) <= bound {
            break;
        }
        let mut delta = res.clone();
        solve_cols(&res, &mut delta, &mut col);
        for i in 0..n {
            for j in 0..b.cols() {
                let v = x.get(i, j) + delta.get(i, j);
                x.set(i, j, v);
            }
        }
        res = residual(m, &x, b);
    }
    let r = frobenius(&res);
    if r.is_nan() || r > bound {
        return Err(Error::Residual {
            residual: r,
            bound,
            condition,
        });
    }
    Ok(x)
}
