use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{KernelEntries, KernelMatrix, QuadratureGrid, SubsetSpec};
use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, symmetric_function, symmetrize};
use crate::model::MAX_CONDITION;
use crate::modes::NormalModes;

/// Ground-state reduced density operator in closed form:
/// `ρ(u, u') = exp(lognorm - ½ uᵀΓu - ½ u'ᵀΓu' + uᵀBu')`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianKernel {
    pub subset: SubsetSpec,
    pub gamma: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub lognorm: f64,
}

/// Marginalises `|Ψ₀|²`, `Ψ₀ ∝ exp(-½ xᵀAx)` with `A = Rᵀ diag(ℓ⁻²) R`,
/// over the traced coordinates by a Schur complement.
pub fn gaussian_ground_kernel(modes: &NormalModes, subset: &SubsetSpec) -> Result<GaussianKernel> {
    let n = modes.n();
    if subset.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: subset.n() });
    }
    let r = &modes.rotation;
    let inv_sq: Vec<f64> = modes.lengths.iter().map(|l| l.powi(-2)).collect();
    let a = DMatrix::from_fn(n, n, |i, j| (0..n).map(|mu| r[(mu, i)] * inv_sq[mu] * r[(mu, j)]).sum::<f64>());
    let kept = subset.kept();
    let traced = subset.traced();
    let block = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]);
    let a_kk = block(kept, kept);
    let a_kt = block(kept, &traced);
    let a_tt = block(&traced, &traced);

    let eig = jacobi_eigen(&a_tt)?;
    let (lo, hi) = eig.values.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(Error::IllConditioned { condition: hi / lo });
    }
    let a_tt_inv = symmetric_function(&a_tt, |v| 1.0 / v)?;
    let mut s = &a_kt * a_tt_inv * a_kt.transpose();
    symmetrize(&mut s);
    let mut gamma = a_kk - &s * 0.5;
    symmetrize(&mut gamma);
    let b = s * 0.5;
    let ln_det_a: f64 = inv_sq.iter().map(|v| v.ln()).sum();
    let ln_det_tt: f64 = eig.values.iter().map(|v| v.ln()).sum();
    let lognorm = 0.5 * ln_det_a - 0.5 * ln_det_tt - 0.5 * subset.m() as f64 * PI.ln();
    Ok(GaussianKernel { subset: subset.clone(), gamma, b, lognorm })
}

impl GaussianKernel {
    pub fn eval(&self, u: &[f64], u2: &[f64]) -> f64 {
        let m = self.gamma.nrows();
        let mut e = self.lognorm;
        for i in 0..m {
            for j in 0..m {
                e += -0.5 * u[i] * self.gamma[(i, j)] * u[j] - 0.5 * u2[i] * self.gamma[(i, j)] * u2[j]
                    + u[i] * self.b[(i, j)] * u2[j];
            }
        }
        e.exp()
    }

    /// The Nyström matrix of this kernel on `grid`, in the same point order
    /// as [`super::rdm_kernel`].
    pub fn to_kernel_matrix(&self, grid: &QuadratureGrid) -> Result<KernelMatrix> {
        let m = self.subset.m();
        let g = grid.len();
        let dim = g
            .checked_pow(m as u32)
            .filter(|&d| d <= super::MAX_KERNEL_DIM)
            .ok_or_else(|| Error::BudgetExceeded(format!("kernel dimension {g}^{m} too large")))?;
        let points: Vec<(Vec<f64>, f64)> = (0..dim)
            .map(|a| {
                let mut rem = a;
                let mut u = vec![0.0; m];
                let mut w = 1.0;
                for k in (0..m).rev() {
                    let i = rem % g;
                    rem /= g;
                    u[k] = grid.nodes[i];
                    w *= grid.weights[i];
                }
                (u, w.sqrt())
            })
            .collect();
        let mut k = DMatrix::from_fn(dim, dim, |a, b| points[a].1 * self.eval(&points[a].0, &points[b].0) * points[b].1);
        symmetrize(&mut k);
        Ok(KernelMatrix::from_entries(KernelEntries::Real(k), self.subset.clone(), grid.clone()))
    }

    /// Per-direction ratios `ξ_i` of the geometric spectrum
    /// `λ = Π_i (1 - ξ_i) ξ_i^{k_i}`, ascending.
    pub fn xi(&self) -> Result<Vec<f64>> {
        let g_isqrt = symmetric_function(&self.gamma, |v| v.powf(-0.5))?;
        let mut c = &g_isqrt * &self.b * &g_isqrt;
        symmetrize(&mut c);
        let mut xi: Vec<f64> = jacobi_eigen(&c)?
            .values
            .iter()
            .map(|&c| {
                let c = c.clamp(0.0, 1.0);
                c / (1.0 + (1.0 - c * c).sqrt())
            })
            .collect();
        xi.sort_by(f64::total_cmp);
        Ok(xi)
    }

    /// The `k_max` largest eigenvalues of the kernel, descending. Products
    /// below `1e-300` are not enumerated.
    pub fn closed_form_spectrum(&self, k_max: usize) -> Result<Vec<f64>> {
        let xi = self.xi()?;
        let mut out = Vec::new();
        enumerate_products(&xi, 0, 1.0, 1e-300, &mut out);
        out.sort_by(|a, b| b.total_cmp(a));
        out.truncate(k_max);
        Ok(out)
    }
}

fn enumerate_products(xi: &[f64], i: usize, acc: f64, floor: f64, out: &mut Vec<f64>) {
    if i == xi.len() {
        out.push(acc);
        return;
    }
    let x = xi[i];
    let mut v = acc * (1.0 - x);
    loop {
        if v < floor {
            break;
        }
        enumerate_products(xi, i + 1, v, floor, out);
        if x == 0.0 {
            break;
        }
        v *= x;
    }
}
