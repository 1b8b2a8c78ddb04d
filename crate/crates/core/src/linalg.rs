//! Dense symmetric eigensolvers.
//!
//! Small real symmetric problems (coupling matrices, Schur complements) go
//! through a cyclic Jacobi solver, which is accurate to a few ulps on the
//! eigenvectors. Kernel matrices, which may be complex Hermitian and a few
//! thousand rows wide, go through nalgebra's tridiagonal QR.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};

pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `A = V diag(values) Vᵀ`, eigenvectors in the columns
/// of `vectors`, in the order the solver produced them (unsorted).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub sweeps: usize,
}

/// Cyclic Jacobi rotation sweep.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok(SymmetricEigen { values: vec![0.0; n], vectors: v, sweeps: 0 });
    }

    let off_norm = |m: &DMatrix<f64>| {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&m);
        if off <= f64::EPSILON * 1e-2 * scale || off == 0.0 {
            break;
        }
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    Ok(SymmetricEigen { values: (0..n).map(|i| m[(i, i)]).collect(), vectors: v, sweeps })
}

/// `f(A)` for a real symmetric `A`, evaluated through its eigenvalues.
pub fn symmetric_function(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let eig = jacobi_eigen(a)?;
    let n = a.nrows();
    let mut out = DMatrix::<f64>::zeros(n, n);
    for (k, &lam) in eig.values.iter().enumerate() {
        let fl = f(lam);
        let col = eig.vectors.column(k);
        for j in 0..n {
            for i in 0..n {
                out[(i, j)] += fl * col[i] * col[j];
            }
        }
    }
    symmetrize(&mut out);
    Ok(out)
}

/// Overwrites `a` with `(a + aᵀ) / 2` so that it is exactly symmetric.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..j {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

/// All eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues<T>(a: &DMatrix<T>) -> Result<Vec<f64>>
where
    T: ComplexField<RealField = f64>,
{
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let eig = nalgebra::SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or(Error::NoConvergence { sweeps: 0, off_norm: f64::NAN })?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
