use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower-triangular factor `L` of a symmetric positive-definite matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky<S = f64> {
    n: usize,
    l: Vec<S>,
}

impl<S: Scalar> Cholesky<S> {
    /// Factorizes the row-major `n x n` matrix `a`; only the lower triangle is read.
    pub fn factor(a: &[S], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: a.len(),
            });
        }
        let mut l = vec![S::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                for (x, y) in ri.iter().zip(rj) {
                    s -= *x * *y;
                }
                if i == j {
                    if !(s > S::zero()) || !s.is_finite() {
                        let diag_max = (0..n)
                            .map(|k| a[k * n + k])
                            .fold(S::zero(), |m, v| m.max(v));
                        return Err(Error::Factorization(format!(
                            "pivot {i} of {n} is {:e} (largest diagonal {:e}, condition estimate > {:e})",
                            s.as_f64(),
                            diag_max.as_f64(),
                            (diag_max / s.abs().max(S::min_positive_value())).as_f64()
                        )));
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_matrix(&self) -> &[S] {
        &self.l
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [S]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let mut s = b[i];
            for (x, y) in row.iter().zip(b.iter()) {
                s -= *x * *y;
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `L^T x = y` in place.
    pub fn backward(&self, y: &mut [S]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
    }

    /// `A^{-1} b`.
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// `sum log L_ii`, i.e. half the log-determinant.
    pub fn half_log_det(&self) -> S {
        (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum()
    }

    /// Ratio of the extreme pivots squared; a cheap lower bound on the
    /// 2-norm condition number.
    pub fn condition_estimate(&self) -> S {
        let d: Vec<S> = (0..self.n).map(|i| self.l[i * self.n + i]).collect();
        let hi = d.iter().copied().fold(S::zero(), S::max);
        let lo = d.iter().copied().fold(S::infinity(), S::min);
        (hi / lo).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_spd() {
        let a = [4.0, 2.0, 0.4, 2.0, 2.0, 0.6, 0.4, 0.6, 3.0];
        let c = Cholesky::factor(&a, 3).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = c.solve(&b);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert_abs_diff_eq!(row, b[i], epsilon = 1e-13);
        }
        let l = c.factor_matrix();
        let det = (l[0] * l[4] * l[8]).powi(2);
        let direct = 4.0 * (2.0 * 3.0 - 0.36) - 2.0 * (6.0 - 0.24) + 0.4 * (1.2 - 0.8);
        assert_abs_diff_eq!(det, direct, epsilon = 1e-12);
        assert_abs_diff_eq!(2.0 * c.half_log_det(), direct.ln(), epsilon = 1e-13);
        assert!(c.condition_estimate() >= 1.0);
    }

    #[test]
    fn indefinite_fails() {
        let a = [1.0, 2.0, 2.0, 1.0];
        assert!(matches!(
            Cholesky::factor(&a, 2),
            Err(Error::Factorization(_))
        ));
        assert!(Cholesky::<f64>::factor(&[1.0, 0.0], 2).is_err());
    }
}
