//! Normal modes `y = R x` of a coupling matrix and the length scales
//! `ℓ_μ = d_μ^(-1/4)` of the decoupled oscillators.
//!
//! Ordering is ascending in `d` (descending in `ℓ`). Degenerate eigenspaces
//! are given a reproducible basis by Gram–Schmidt against the canonical
//! basis vectors in index order, and every eigenvector is sign-fixed so that
//! its first significant component is positive.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::model::InteractionMatrix;

/// Relative eigenvalue gap below which two modes count as degenerate.
pub const DEGENERACY_REL_GAP: f64 = 1e-9;
const SIGN_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalModes {
    /// Orthogonal `R`; row `μ` is the eigenvector of mode `μ`.
    #[serde(with = "rows_serde")]
    pub rotation: DMatrix<f64>,
    pub eigvals: Vec<f64>,
    pub lengths: Vec<f64>,
    pub dual_lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCoordinates {
    pub deltas: Vec<f64>,
}

/// Diagonalises `D` with the ordering and tie-break conventions above.
pub fn diagonalize(d: &InteractionMatrix) -> Result<NormalModes> {
    let n = d.n();
    let a = d.entries();
    let eig = jacobi_eigen(a)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.values[i].total_cmp(&eig.values[j]));
    let mut values: Vec<f64> = order.iter().map(|&i| eig.values[i]).collect();
    let mut vecs: Vec<DVector<f64>> = order.iter().map(|&i| eig.vectors.column(i).into_owned()).collect();

    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] < DEGENERACY_REL_GAP * scale {
            end += 1;
        }
        if end - start > 1 {
            canonical_basis(&mut vecs[start..end]);
            for k in start..end {
                values[k] = (a * &vecs[k]).dot(&vecs[k]);
            }
        }
        start = end;
    }

    for v in vecs.iter_mut() {
        if let Some(first) = v.iter().find(|x| x.abs() > SIGN_THRESHOLD) {
            if *first < 0.0 {
                *v *= -1.0;
            }
        }
    }

    if let Some(bad) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: *bad,
            detail: "non-positive normal-mode eigenvalue".into(),
        });
    }

    let mut rotation = DMatrix::<f64>::zeros(n, n);
    for (mu, v) in vecs.iter().enumerate() {
        rotation.row_mut(mu).copy_from(&v.transpose());
    }
    let lengths = length_scales(&values);
    let dual_lengths = lengths.iter().map(|l| 1.0 / l).collect();
    Ok(NormalModes { rotation, eigvals: values, lengths, dual_lengths })
}

/// Replaces the vectors spanning a degenerate subspace by the Gram–Schmidt
/// orthonormalisation of the canonical basis projected onto that subspace.
fn canonical_basis(vecs: &mut [DVector<f64>]) {
    let r = vecs.len();
    let n = vecs[0].len();
    let basis: Vec<DVector<f64>> = vecs.to_vec();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(r);
    for k in 0..n {
        if out.len() == r {
            break;
        }
        let mut cand = DVector::<f64>::zeros(n);
        for b in &basis {
            cand += b * b[k];
        }
        for _ in 0..2 {
            for o in &out {
                let c = o.dot(&cand);
                cand -= o * c;
            }
        }
        let norm = cand.norm();
        if norm > 1e-6 {
            out.push(cand / norm);
        }
    }
    debug_assert_eq!(out.len(), r);
    for (v, o) in vecs.iter_mut().zip(out) {
        *v = o;
    }
}

/// `ℓ_μ = d_μ^(-1/4)`.
pub fn length_scales(eigvals: &[f64]) -> Vec<f64> {
    eigvals.iter().map(|d| d.powf(-0.25)).collect()
}

/// `δ_μ = ln(ℓ_μ / ℓ_{μ+1})`, set to exactly zero across degenerate pairs.
pub fn delta_coordinates(lengths: &[f64]) -> DeltaCoordinates {
    let deltas = lengths
        .windows(2)
        .map(|w| {
            let gap = (w[0] - w[1]).abs() / w[0].abs().max(w[1].abs());
            if gap < DEGENERACY_REL_GAP {
                0.0
            } else {
                (w[0] / w[1]).ln()
            }
        })
        .collect();
    DeltaCoordinates { deltas }
}

/// Scales `lengths` so that their geometric mean is one.
pub fn projective_normalize(lengths: &[f64]) -> Vec<f64> {
    if lengths.is_empty() {
        return Vec::new();
    }
    let mean_log = lengths.iter().map(|l| l.ln()).sum::<f64>() / lengths.len() as f64;
    let g = mean_log.exp();
    lengths.iter().map(|l| l / g).collect()
}

impl NormalModes {
    pub fn n(&self) -> usize {
        self.eigvals.len()
    }

    pub fn deltas(&self) -> DeltaCoordinates {
        delta_coordinates(&self.lengths)
    }

    /// Pseudo-positions `y = R x`.
    pub fn to_modes(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|mu| (0..n).map(|i| self.rotation[(mu, i)] * x[i]).sum()).collect()
    }

    /// Same rotation with every length divided by `alpha`.
    pub fn rescaled(&self, alpha: f64) -> NormalModes {
        let lengths: Vec<f64> = self.lengths.iter().map(|l| l / alpha).collect();
        NormalModes {
            rotation: self.rotation.clone(),
            eigvals: lengths.iter().map(|l| l.powi(-4)).collect(),
            dual_lengths: lengths.iter().map(|l| 1.0 / l).collect(),
            lengths,
        }
    }

    /// For each mode of `other`, the index of the mode of `self` with the
    /// same eigenvector (largest overlap). Used to apply one occupation
    /// template to two models that share eigenvectors but order them
    /// differently, e.g. `D` and `D⁻¹`.
    pub fn match_modes(&self, other: &NormalModes) -> Result<Vec<usize>> {
        let n = self.n();
        if other.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: other.n() });
        }
        let overlap = &other.rotation * self.rotation.transpose();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                pairs.push((overlap[(j, i)].abs(), j, i));
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut perm = vec![usize::MAX; n];
        let mut used = vec![false; n];
        for (_, j, i) in pairs {
            if perm[j] == usize::MAX && !used[i] {
                perm[j] = i;
                used[i] = true;
            }
        }
        Ok(perm)
    }
}

mod rows_serde {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        crate::model::matrix_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(DMatrix::from_row_iterator(n, m, rows.into_iter().flatten()))
    }
}
