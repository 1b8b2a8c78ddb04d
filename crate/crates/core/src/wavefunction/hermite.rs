use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest single-mode (and total) excitation degree supported.
pub const MAX_DEGREE: usize = 60;

/// `π^(-1/4)`
pub const PI_M4: f64 = 0.751_125_544_464_942_5;

/// Physicists' Hermite polynomial `H_ν(z)` by the three-term recurrence
/// `H_{k+1} = 2z H_k - 2k H_{k-1}`.
pub fn hermite_eval(nu: usize, z: f64) -> Result<f64> {
    if nu > MAX_DEGREE {
        return Err(Error::InvalidInput(format!("degree {nu} exceeds the cap {MAX_DEGREE}")));
    }
    let mut h_prev = 1.0;
    if nu == 0 {
        return Ok(h_prev);
    }
    let mut h = 2.0 * z;
    for k in 1..nu {
        let next = 2.0 * z * h - 2.0 * k as f64 * h_prev;
        h_prev = h;
        h = next;
    }
    if !h.is_finite() {
        return Err(Error::Overflow { nu, z });
    }
    Ok(h)
}

/// Fills `out[k]` with the orthonormal Hermite function
/// `h_k(t) = (2^k k! √π)^(-1/2) H_k(t) e^{-t²/2}` for `k < out.len()`.
pub fn hermite_functions_into(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI_M4 * (-0.5 * t * t).exp();
    fill_recurrence(t, out);
}

/// Same as [`hermite_functions_into`] without the Gaussian factor.
pub(crate) fn hermite_polys_into(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI_M4;
    fill_recurrence(t, out);
}

#[inline]
fn fill_recurrence(t: f64, out: &mut [f64]) {
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * t * out[0];
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = (2.0 / (kf + 1.0)).sqrt() * t * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
    }
}

/// Oscillator eigenfunction of width `ℓ`:
/// `φ_ℓ^(ν)(y) = π^(-1/4) ℓ^(-1/2) (2^ν ν!)^(-1/2) H_ν(y/ℓ) exp(-y²/2ℓ²)`.
///
/// Evaluated through the normalized recurrence, which never overflows.
pub fn phi(nu: usize, ell: f64, y: f64) -> f64 {
    let mut buf = vec![0.0; nu + 1];
    hermite_functions_into(y / ell, &mut buf);
    buf[nu] / ell.sqrt()
}

/// `φ_ℓ^(ν)(y)` from the closed form, using [`hermite_eval`] and a
/// log-space normalization for `ν > 20`.
pub fn phi_closed_form(nu: usize, ell: f64, y: f64) -> Result<f64> {
    let z = y / ell;
    let h = hermite_eval(nu, z)?;
    if nu <= 20 {
        let fact: f64 = (1..=nu).map(|k| k as f64).product();
        let norm = PI_M4 / ell.sqrt() / (2f64.powi(nu as i32) * fact).sqrt();
        return Ok(norm * h * (-0.5 * z * z).exp());
    }
    if h == 0.0 {
        return Ok(0.0);
    }
    let ln_fact: f64 = (1..=nu).map(|k| (k as f64).ln()).sum();
    let ln = h.abs().ln() - 0.5 * (nu as f64 * 2f64.ln() + ln_fact) - 0.25 * PI.ln() - 0.5 * ell.ln() - 0.5 * z * z;
    Ok(h.signum() * ln.exp())
}

/// `dφ_ℓ^(ν)/dy` from `h_n' = √(n/2) h_{n-1} - √((n+1)/2) h_{n+1}`.
pub fn phi_derivative(nu: usize, ell: f64, y: f64) -> f64 {
    let mut buf = vec![0.0; nu + 2];
    hermite_functions_into(y / ell, &mut buf);
    let down = if nu > 0 { (nu as f64 / 2.0).sqrt() * buf[nu - 1] } else { 0.0 };
    let up = ((nu as f64 + 1.0) / 2.0).sqrt() * buf[nu + 1];
    (down - up) / ell.powf(1.5)
}
