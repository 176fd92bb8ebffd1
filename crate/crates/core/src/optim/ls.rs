use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par;

/// Pivots below this fraction of the largest diagonal entry count as singular.
const PIVOT_RTOL: f64 = 1e-13;

/// Forms `(A^T A + lambda I, A^T b)`.
pub fn gram_system(a: &Matrix, b: &[f64], lambda: f64) -> (Matrix, Vec<f64>) {
    let n = a.cols();
    // packed upper triangle followed by A^T b
    let tri = n * (n + 1) / 2;
    let acc = par::reduce_rows(a.rows(), tri + n, |rows, acc| {
        for r in rows {
            let row = a.row(r);
            let mut k = 0;
            for i in 0..n {
                let ri = row[i];
                for &rj in &row[i..] {
                    acc[k] += ri * rj;
                    k += 1;
                }
                acc[tri + i] += ri * b[r];
            }
        }
    });
    let mut gram = Matrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            gram[(i, j)] = acc[k];
            gram[(j, i)] = acc[k];
            k += 1;
        }
        gram[(i, i)] += lambda;
    }
    (gram, acc[tri..].to_vec())
}

/// Solves the symmetric positive definite system `m x = rhs` by Cholesky.
pub fn solve_spd(m: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = m.rows();
    let max_diag = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > PIVOT_RTOL * max_diag) {
            return Err(Error::RankDeficient { pivot: j, value: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let mut y = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    Ok(y)
}

/// Ridge least squares: `theta = (A^T A + lambda I)^{-1} A^T b`.
///
/// Data is real, so the Hermitian transpose reduces to the transpose.
pub fn ls_solve(a: &Matrix, b: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::InvalidArgument(format!(
            "A has {} rows but b has {} entries",
            a.rows(),
            b.len()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    if a.rows() < a.cols() && lambda == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "underdetermined system ({}x{}) needs lambda > 0",
            a.rows(),
            a.cols()
        )));
    }
    if a.as_slice().iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite entry in A or b".into()));
    }
    let (gram, rhs) = gram_system(a, b, lambda);
    solve_spd(&gram, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let a = Matrix::identity(2);
        assert_eq!(ls_solve(&a, &[2.0, 4.0], 0.0).unwrap(), vec![2.0, 4.0]);
        let t = ls_solve(&a, &[2.0, 4.0], 1.0).unwrap();
        assert!((t[0] - 1.0).abs() < 1e-15 && (t[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_columns_are_rank_deficient() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]).unwrap();
        let b = [1.0, 2.0, 3.0];
        assert!(matches!(
            ls_solve(&a, &b, 0.0),
            Err(Error::RankDeficient { .. })
        ));
        let t = ls_solve(&a, &b, 1e-6).unwrap();
        assert!((t[0] + t[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn argument_checks() {
        let a = Matrix::identity(2);
        assert!(ls_solve(&a, &[1.0], 0.0).is_err());
        assert!(ls_solve(&a, &[1.0, 1.0], -1.0).is_err());
        let wide = Matrix::zeros(1, 2);
        assert!(ls_solve(&wide, &[1.0], 0.0).is_err());
        assert!(ls_solve(&wide, &[1.0], 0.5).is_ok());
    }
}
