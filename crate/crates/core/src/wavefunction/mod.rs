//! Oscillator eigenfunctions, product eigenstates and their superpositions.

mod hermite;
mod state;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use hermite::{
    hermite_eval, hermite_functions_into, phi, phi_closed_form, phi_derivative, MAX_DEGREE, PI_M4,
};
pub use state::{minus_i_pow, Amplitude, AmplitudeEval, ModeOccupation, StateSpec, StateTemplate};

use crate::error::{Error, Result};
use crate::model::InteractionMatrix;
use crate::rdm::build_grid;

/// `E = Σ_μ √d_μ (ν_μ + ½)`.
pub fn energy(nu: &ModeOccupation, eigvals: &[f64]) -> Result<f64> {
    nu.validate(eigvals.len())?;
    Ok(nu.0.iter().zip(eigvals).map(|(&n, &d)| d.sqrt() * (n as f64 + 0.5)).sum())
}

/// The same state with every length divided by `alpha`, so that
/// `Ψ(x) = α^(-N/2) Ψ_rescaled(x/α)`.
pub fn rescale_state(state: &StateSpec, alpha: f64) -> Result<StateSpec> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha must be > 0, got {alpha}")));
    }
    state.with_modes(state.modes().rescaled(alpha))
}

/// Unitary Fourier transform `(2π)^(-1/2) ∫ φ_ℓ^(ν)(x) e^{-ixp} dx` at the
/// points `p`, by `nodes`-point Gauss–Hermite quadrature at width `ℓ`.
pub fn fourier_transform_mode(nu: usize, ell: f64, p: &[f64], nodes: usize) -> Result<Vec<Complex64>> {
    let grid = build_grid(nodes, ell)?;
    let vals: Vec<f64> = grid.nodes.iter().map(|&x| phi(nu, ell, x)).collect();
    let norm = (2.0 * PI).sqrt().recip();
    Ok(p.iter()
        .map(|&pk| {
            let mut acc = Complex64::new(0.0, 0.0);
            for ((&x, &w), &v) in grid.nodes.iter().zip(&grid.weights).zip(&vals) {
                acc += Complex64::from_polar(w * v, -x * pk);
            }
            acc * norm
        })
        .collect())
}

/// Max over a `nodes`-point grid at width `1/ℓ` of
/// `| |F φ_ℓ^(ν)(p)| - |φ_{1/ℓ}^(ν)(p)| |`.
///
/// The transform is integrated on a grid at width `ℓ` and compared on a
/// grid at width `1/ℓ`; both grids must reproduce the unit norm of their
/// function to 1e-10, otherwise the check reports an unresolved grid.
pub fn fourier_mode_check(nu: usize, ell: f64, nodes: usize) -> Result<f64> {
    if nu > MAX_DEGREE {
        return Err(Error::InvalidInput(format!("degree {nu} exceeds the cap {MAX_DEGREE}")));
    }
    if !(ell > 0.0) {
        return Err(Error::InvalidInput(format!("length must be > 0, got {ell}")));
    }
    let x_grid = build_grid(nodes, ell)?;
    let p_grid = build_grid(nodes, 1.0 / ell)?;
    let x_norm = x_grid.integrate(|x| phi(nu, ell, x).powi(2));
    let ft = fourier_transform_mode(nu, ell, &p_grid.nodes, nodes)?;
    let p_norm: f64 = ft.iter().zip(&p_grid.weights).map(|(f, w)| w * f.norm_sqr()).sum();
    let deficit = (x_norm - 1.0).abs().max((p_norm - 1.0).abs());
    if deficit > 1e-10 {
        return Err(Error::UnresolvedGrid { deficit });
    }
    Ok(ft
        .iter()
        .zip(&p_grid.nodes)
        .map(|(f, &p)| (f.norm() - phi(nu, 1.0 / ell, p).abs()).abs())
        .fold(0.0, f64::max))
}

/// `⟨Ψ|H|Ψ⟩ = ½∫|∇Ψ|² + ½∫ xᵀDx |Ψ|²` by tensor Gauss–Hermite quadrature
/// in x-space. The kinetic term uses the analytic mode gradient, so the
/// result does not presuppose that `Ψ` is an eigenstate of `D`.
pub fn expected_energy(state: &StateSpec, d: &InteractionMatrix, nodes: usize) -> Result<f64> {
    let n = state.n();
    if d.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d.n() });
    }
    let modes = state.modes();
    let lmin = modes.lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = modes.lengths.iter().copied().fold(0.0, f64::max);
    let grid = build_grid(nodes, (lmin * lmax).sqrt())?;
    let g = grid.len();
    let total = g.checked_pow(n as u32).filter(|t| *t <= 1 << 24).ok_or_else(|| {
        Error::BudgetExceeded(format!("{g}^{n} quadrature points for the energy"))
    })?;

    let max_deg: Vec<usize> =
        (0..n).map(|mu| state.terms().iter().map(|(_, nu)| nu.0[mu]).max().unwrap_or(0)).collect();
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut tables: Vec<Vec<f64>> = max_deg.iter().map(|m| vec![0.0; m + 2]).collect();
    let entries = d.entries();
    let (mut kinetic, mut potential, mut norm) = (0.0, 0.0, 0.0);
    for flat in 0..total {
        let mut rem = flat;
        for k in (0..n).rev() {
            idx[k] = rem % g;
            rem /= g;
        }
        let mut w = 1.0;
        for k in 0..n {
            x[k] = grid.nodes[idx[k]];
            w *= grid.weights[idx[k]];
        }
        let y = modes.to_modes(&x);
        for mu in 0..n {
            hermite_functions_into(y[mu] / modes.lengths[mu], &mut tables[mu]);
        }
        let mut psi = Complex64::new(0.0, 0.0);
        let mut grad = vec![Complex64::new(0.0, 0.0); n];
        for (c, nu) in state.terms() {
            let vals: Vec<f64> =
                (0..n).map(|mu| tables[mu][nu.0[mu]] / modes.lengths[mu].sqrt()).collect();
            let ders: Vec<f64> = (0..n)
                .map(|mu| {
                    let k = nu.0[mu];
                    let t = &tables[mu];
                    let down = if k > 0 { (k as f64 / 2.0).sqrt() * t[k - 1] } else { 0.0 };
                    let up = ((k as f64 + 1.0) / 2.0).sqrt() * t[k + 1];
                    (down - up) / modes.lengths[mu].powf(1.5)
                })
                .collect();
            psi += c * vals.iter().product::<f64>();
            for mu in 0..n {
                let mut p = ders[mu];
                for (nu2, v) in vals.iter().enumerate() {
                    if nu2 != mu {
                        p *= v;
                    }
                }
                grad[mu] += c * p;
            }
        }
        let mut xdx = 0.0;
        for i in 0..n {
            for j in 0..n {
                xdx += x[i] * entries[(i, j)] * x[j];
            }
        }
        let dens = psi.norm_sqr();
        kinetic += w * grad.iter().map(Complex64::norm_sqr).sum::<f64>();
        potential += w * xdx * dens;
        norm += w * dens;
    }
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::UnresolvedGrid { deficit: norm - 1.0 });
    }
    Ok(0.5 * kinetic + 0.5 * potential)
}
