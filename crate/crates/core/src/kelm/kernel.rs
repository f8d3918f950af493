use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "poly" | "polynomial" => Ok(KernelKind::Polynomial),
            "rbf" => Ok(KernelKind::Rbf),
            other => Err(Error::InvalidArgument(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Kernel family and parameters. `degree` and `coef0` only affect the
/// polynomial kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KernelSpec<T> {
    pub kind: KernelKind,
    pub gamma: T,
    pub degree: u32,
    pub coef0: T,
}

impl<T: Scalar> Default for KernelSpec<T> {
    /// Polynomial kernel with `gamma = 0.1`, degree 3 and `coef0 = 0`.
    fn default() -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial,
            gamma: T::of(0.1),
            degree: 3,
            coef0: T::zero(),
        }
    }
}

impl<T: Scalar> KernelSpec<T> {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            gamma: T::one(),
            degree: 1,
            coef0: T::zero(),
        }
    }

    pub fn polynomial(gamma: T, degree: u32, coef0: T) -> Result<Self> {
        Self::new(KernelKind::Polynomial, gamma, degree, coef0)
    }

    pub fn rbf(gamma: T) -> Result<Self> {
        Self::new(KernelKind::Rbf, gamma, 1, T::zero())
    }

    pub fn new(kind: KernelKind, gamma: T, degree: u32, coef0: T) -> Result<Self> {
        let spec = KernelSpec {
            kind,
            gamma,
            degree,
            coef0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > T::zero()) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.degree == 0 {
            return Err(Error::InvalidArgument("degree must be at least 1".into()));
        }
        if !self.coef0.is_finite() {
            return Err(Error::InvalidArgument("coef0 must be finite".into()));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn apply(&self, x: &[T], y: &[T]) -> T {
        match self.kind {
            KernelKind::Linear => dot(x, y),
            KernelKind::Polynomial => (self.gamma * dot(x, y) + self.coef0).powi(self.degree as i32),
            KernelKind::Rbf => {
                let d2 = x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>();
                (-self.gamma * d2).exp()
            }
        }
    }
}

#[inline]
fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

/// `k(x, y)` for equal-length vectors.
pub fn kernel_eval<T: Scalar>(x: &[T], y: &[T], spec: &KernelSpec<T>) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("kernel inputs of length {} and {}", x.len(), y.len())));
    }
    Ok(spec.apply(x, y))
}

/// Symmetric Gram matrix over the rows of `points`; only the upper triangle
/// is evaluated.
pub fn gram_matrix<T: Scalar>(points: &Matrix<T>, spec: &KernelSpec<T>) -> Matrix<T> {
    let n = points.rows();
    let mut g = Matrix::filled(n, n, T::zero());
    for i in 0..n {
        for j in i..n {
            let v = spec.apply(points.row(i), points.row(j));
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    g
}

/// `K[i][j] = k(a_i, b_j)`.
pub fn cross_kernel<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, spec: &KernelSpec<T>) -> Result<Matrix<T>> {
    if a.rows() > 0 && b.rows() > 0 && a.cols() != b.cols() {
        return Err(Error::Dimension(format!(
            "query dimension {} differs from training dimension {}",
            a.cols(),
            b.cols()
        )));
    }
    let mut k = Matrix::filled(a.rows(), b.rows(), T::zero());
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            k.set(i, j, spec.apply(a.row(i), b.row(j)));
        }
    }
    Ok(k)
}
