use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{KernelMatrix, QuadratureGrid};
use crate::error::{Error, Result};
use crate::wavefunction::hermite_functions_into;

/// Default lower bound on `trace(C) / trace(K̂)`.
pub const DEFAULT_BASIS_CAPTURE_TOL: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone)]
pub struct BasisProjection {
    /// `C_{nn'}` over tensor indices `n ∈ {0..B}^M`, first coordinate
    /// slowest.
    pub coefficients: DMatrix<Complex64>,
    pub basis_size: usize,
    pub ell_ref: f64,
    /// `trace(C) / trace(K̂)`
    pub capture: f64,
    pub sufficient: bool,
}

impl BasisProjection {
    /// Total degree `|n|` of basis index `idx`.
    pub fn degree(&self, idx: usize) -> usize {
        let mut rem = idx;
        let mut total = 0;
        while rem > 0 {
            total += rem % self.basis_size;
            rem /= self.basis_size;
        }
        total
    }
}

/// `C = Pᵀ K̂ P` with `P_{a,n} = √W_a Φ_n(u_a)`, `Φ_n` tensor Hermite
/// functions of width `ell_ref`. Flags (does not fail) when the basis
/// captures less than `capture_tol` of the trace.
pub fn hermite_basis_projection(
    kernel: &KernelMatrix,
    grid: &QuadratureGrid,
    b: usize,
    ell_ref: f64,
    capture_tol: f64,
) -> Result<BasisProjection> {
    if grid.nodes_per_axis != kernel.grid.nodes_per_axis || grid.scale != kernel.grid.scale {
        return Err(Error::InvalidInput("grid does not match the kernel's grid".into()));
    }
    if b == 0 || 2 * b > grid.len() {
        return Err(Error::InvalidInput(format!("basis size {b} must lie in 1..={}", grid.len() / 2)));
    }
    if !(ell_ref > 0.0) {
        return Err(Error::InvalidInput(format!("ell_ref must be > 0, got {ell_ref}")));
    }
    let m = kernel.m();
    let g = grid.len();
    let nb = b.pow(m as u32);
    if nb > super::MAX_KERNEL_DIM {
        return Err(Error::BudgetExceeded(format!("basis dimension {b}^{m} too large")));
    }
    // single-axis table √w_i φ_n(x_i)
    let mut axis = DMatrix::<f64>::zeros(g, b);
    let mut buf = vec![0.0; b];
    for i in 0..g {
        hermite_functions_into(grid.nodes[i] / ell_ref, &mut buf);
        for n in 0..b {
            axis[(i, n)] = grid.weights[i].sqrt() * buf[n] / ell_ref.sqrt();
        }
    }
    let p = DMatrix::from_fn(kernel.dim, nb, |a, n| {
        let (mut ra, mut rn, mut v) = (a, n, 1.0);
        for _ in 0..m {
            v *= axis[(ra % g, rn % b)];
            ra /= g;
            rn /= b;
        }
        v
    });
    let coefficients = match kernel.entries() {
        super::KernelEntries::Real(k) => (p.transpose() * k * &p).map(|x| Complex64::new(x, 0.0)),
        super::KernelEntries::Complex(k) => {
            let pc = p.map(|x| Complex64::new(x, 0.0));
            pc.transpose() * k * &pc
        }
    };
    let capture = coefficients.trace().re / kernel.trace_estimate;
    Ok(BasisProjection { coefficients, basis_size: b, ell_ref, capture, sufficient: capture >= capture_tol })
}
