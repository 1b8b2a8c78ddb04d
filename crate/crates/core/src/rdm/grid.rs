use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 8;
pub const MAX_NODES: usize = 256;

/// Scaled Gauss–Hermite rule carrying plain integration weights:
/// `Σ_i weights[i]·f(nodes[i]) ≈ ∫ f(x) dx`, exact whenever
/// `f(x) = exp(-x²/s²)·p(x)` with `deg p < 2G`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureGrid {
    pub nodes_per_axis: usize,
    pub scale: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Builds a `g`-node grid at width `scale`.
pub fn build_grid(g: usize, scale: f64) -> Result<QuadratureGrid> {
    if g < MIN_NODES {
        return Err(Error::InvalidInput(format!("grid needs at least {MIN_NODES} nodes, got {g}")));
    }
    if g > MAX_NODES {
        return Err(Error::BudgetExceeded(format!(
            "{g} nodes per axis exceeds the cap of {MAX_NODES}; lower G"
        )));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidInput(format!("grid scale must be > 0, got {scale}")));
    }
    let (x, w) = gauss_hermite(g)?;
    Ok(QuadratureGrid {
        nodes_per_axis: g,
        scale,
        nodes: x.iter().map(|xi| xi * scale).collect(),
        weights: w.iter().map(|wi| wi * scale).collect(),
    })
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Unscaled Gauss–Hermite nodes (ascending) and plain weights
/// `w_i·exp(x_i²) = 1 / (G·h_{G-1}(x_i)²)`, where `h_k` are the orthonormal
/// Hermite functions. Nodes start from the eigenvalues of the Jacobi matrix
/// and are polished by Newton steps on the orthonormal recurrence, which
/// stays finite for every `G ≤ 256`.
pub fn gauss_hermite(g: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = g;
    let nf = n as f64;
    let jacobi = DMatrix::from_fn(n, n, |i, j| if i + 1 == j || j + 1 == i { (i.max(j) as f64 / 2.0).sqrt() } else { 0.0 });
    let mut guess: Vec<f64> = nalgebra::SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    guess.sort_by(f64::total_cmp);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // positive half, largest first; the rest follows by symmetry
        let mut z = guess[n - 1 - i].abs();
        let mut converged = false;
        for _ in 0..100 {
            let (p1, p2) = orthonormal_pair(n, z);
            let step = p1 / ((2.0 * nf).sqrt() * p2);
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence { sweeps: 100, off_norm: z });
        }
        if n % 2 == 1 && i == n / 2 {
            z = 0.0;
        }
        let h = hermite_function_last(n, z);
        let wi = 1.0 / (nf * h * h);
        x[n - 1 - i] = z;
        x[i] = -z;
        w[n - 1 - i] = wi;
        w[i] = wi;
    }
    Ok((x, w))
}

/// Orthonormal Hermite polynomials (without the Gaussian factor):
/// returns `(p_n(z), p_{n-1}(z))`.
fn orthonormal_pair(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = crate::wavefunction::PI_M4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

fn hermite_function_last(n: usize, z: f64) -> f64 {
    let mut buf = vec![0.0; n];
    crate::wavefunction::hermite_functions_into(z, &mut buf);
    buf[n - 1]
}
