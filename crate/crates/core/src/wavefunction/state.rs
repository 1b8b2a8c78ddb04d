use std::collections::HashSet;

use nalgebra::ComplexField;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hermite::{hermite_polys_into, MAX_DEGREE, PI_M4};
use crate::error::{Error, Result};
use crate::modes::NormalModes;

const NORM_TOL: f64 = 1e-12;

/// Occupation numbers `(ν_1, …, ν_N)` of the normal modes, in the
/// ascending-`d` mode order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeOccupation(pub Vec<usize>);

impl ModeOccupation {
    pub fn ground(n: usize) -> Self {
        ModeOccupation(vec![0; n])
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.0.len() });
        }
        if self.total() > MAX_DEGREE {
            return Err(Error::InvalidInput(format!(
                "total degree {} exceeds the cap {MAX_DEGREE}",
                self.total()
            )));
        }
        Ok(())
    }
}

/// A superposition `Σ c_ν Ψ^(ν)` given without reference to any model.
/// Binding it to a set of normal modes gives a [`StateSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateTemplate {
    pub terms: Vec<(Complex64, ModeOccupation)>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    re: f64,
    #[serde(default)]
    im: f64,
    nu: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TemplateJson {
    terms: Vec<TermJson>,
}

impl Serialize for StateTemplate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TemplateJson {
            terms: self.terms.iter().map(|(c, nu)| TermJson { re: c.re, im: c.im, nu: nu.0.clone() }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateTemplate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TemplateJson::deserialize(d)?;
        Ok(StateTemplate {
            terms: raw.terms.into_iter().map(|t| (Complex64::new(t.re, t.im), ModeOccupation(t.nu))).collect(),
        })
    }
}

impl StateTemplate {
    pub fn ground(n: usize) -> Self {
        Self::single(vec![0; n])
    }

    pub fn single(nu: Vec<usize>) -> Self {
        StateTemplate { terms: vec![(Complex64::new(1.0, 0.0), ModeOccupation(nu))] }
    }

    /// Rescales the coefficients to unit norm.
    pub fn normalized(terms: Vec<(Complex64, ModeOccupation)>) -> Result<Self> {
        let norm = terms.iter().map(|(c, _)| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidInput("state has zero norm".into()));
        }
        Ok(StateTemplate { terms: terms.into_iter().map(|(c, nu)| (c / norm, nu)).collect() })
    }

    pub fn bind(&self, modes: &NormalModes) -> Result<StateSpec> {
        StateSpec::new(self.terms.clone(), modes.clone())
    }

    /// Binds the template to `modes`, where `perm[j]` is the template slot
    /// that mode `j` of `modes` stands for. With `fourier_phase`, each
    /// coefficient picks up `(-i)^{|ν|}`, which is what the Fourier transform
    /// of the original state carries into the dual model.
    pub fn bind_remapped(&self, modes: &NormalModes, perm: &[usize], fourier_phase: bool) -> Result<StateSpec> {
        let n = modes.n();
        if perm.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: perm.len() });
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (c, nu) in &self.terms {
            nu.validate(n)?;
            let mapped: Vec<usize> = perm.iter().map(|&src| nu.0[src]).collect();
            let c = if fourier_phase { *c * minus_i_pow(nu.total()) } else { *c };
            terms.push((c, ModeOccupation(mapped)));
        }
        StateSpec::new(terms, modes.clone())
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(c, _)| c.im == 0.0)
    }

    pub fn n(&self) -> Option<usize> {
        self.terms.first().map(|(_, nu)| nu.0.len())
    }
}

/// `(-i)^k`
pub fn minus_i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// A normalized superposition of eigenstates of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpec {
    terms: Vec<(Complex64, ModeOccupation)>,
    modes: NormalModes,
}

impl StateSpec {
    pub fn new(terms: Vec<(Complex64, ModeOccupation)>, modes: NormalModes) -> Result<Self> {
        let n = modes.n();
        if terms.is_empty() {
            return Err(Error::InvalidInput("state has no terms".into()));
        }
        let mut seen = HashSet::new();
        for (_, nu) in &terms {
            nu.validate(n)?;
            if !seen.insert(nu.clone()) {
                return Err(Error::InvalidInput(format!("repeated occupation {:?}", nu.0)));
            }
        }
        let norm: f64 = terms.iter().map(|(c, _)| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("Σ|c|² = {norm}, expected 1")));
        }
        Ok(StateSpec { terms, modes })
    }

    pub fn ground(modes: &NormalModes) -> Self {
        StateTemplate::ground(modes.n()).bind(modes).expect("ground state is valid")
    }

    pub fn terms(&self) -> &[(Complex64, ModeOccupation)] {
        &self.terms
    }

    pub fn modes(&self) -> &NormalModes {
        &self.modes
    }

    pub fn n(&self) -> usize {
        self.modes.n()
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(c, _)| c.im == 0.0)
    }

    pub fn is_ground(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].1.total() == 0
    }

    /// Same coefficients on rescaled modes (all lengths divided by `alpha`).
    pub fn with_modes(&self, modes: NormalModes) -> Result<Self> {
        StateSpec::new(self.terms.clone(), modes)
    }

    /// `Ψ(x) = Σ_ν c_ν Π_μ φ_{ℓ_μ}^(ν_μ)((R x)_μ)`.
    pub fn psi(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: x.len() });
        }
        let y = self.modes.to_modes(x);
        let eval = AmplitudeEval::<Complex64>::new(self);
        let mut scratch = eval.scratch();
        Ok(eval.eval(&y, &mut scratch))
    }
}

/// Scalar type of a wavefunction amplitude: `f64` when every coefficient is
/// real, `Complex64` otherwise.
pub trait Amplitude: ComplexField<RealField = f64> + Copy + Send + Sync {
    fn from_c64(c: Complex64) -> Self;
    fn to_c64(self) -> Complex64;
}

impl Amplitude for f64 {
    fn from_c64(c: Complex64) -> Self {
        c.re
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Amplitude for Complex64 {
    fn from_c64(c: Complex64) -> Self {
        c
    }
    fn to_c64(self) -> Complex64 {
        self
    }
}

/// Precomputed evaluator of `Φ(y)` in mode coordinates. The Gaussian factor
/// `exp(-½ Σ (y_μ/ℓ_μ)²)` is shared by all terms and taken once per point.
#[derive(Debug, Clone)]
pub struct AmplitudeEval<T> {
    inv_len: Vec<f64>,
    offsets: Vec<usize>,
    table_len: usize,
    prefactor: f64,
    terms: Vec<(T, Vec<usize>)>,
    ground: bool,
}

impl<T: Amplitude> AmplitudeEval<T> {
    pub fn new(state: &StateSpec) -> Self {
        let modes = state.modes();
        let n = modes.n();
        let mut max_deg = vec![0usize; n];
        for (_, nu) in state.terms() {
            for (m, &v) in max_deg.iter_mut().zip(&nu.0) {
                *m = (*m).max(v);
            }
        }
        let mut offsets = Vec::with_capacity(n);
        let mut acc = 0;
        for &m in &max_deg {
            offsets.push(acc);
            acc += m + 1;
        }
        let prefactor = modes.lengths.iter().map(|l| l.powf(-0.5)).product::<f64>();
        AmplitudeEval {
            inv_len: modes.lengths.iter().map(|l| 1.0 / l).collect(),
            offsets,
            table_len: acc,
            prefactor,
            terms: state.terms().iter().map(|(c, nu)| (T::from_c64(*c), nu.0.clone())).collect(),
            ground: state.is_ground(),
        }
    }

    pub fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.table_len]
    }

    /// `Φ(y)`; `scratch` must come from [`Self::scratch`].
    #[inline]
    pub fn eval(&self, y: &[f64], scratch: &mut [f64]) -> T {
        let n = self.inv_len.len();
        let mut s = 0.0;
        for mu in 0..n {
            let t = y[mu] * self.inv_len[mu];
            s += t * t;
        }
        let gauss = self.prefactor * (-0.5 * s).exp();
        if self.ground {
            return self.terms[0].0.scale(gauss * PI_M4.powi(n as i32));
        }
        for mu in 0..n {
            let off = self.offsets[mu];
            let end = if mu + 1 < n { self.offsets[mu + 1] } else { self.table_len };
            hermite_polys_into(y[mu] * self.inv_len[mu], &mut scratch[off..end]);
        }
        let mut sum = T::zero();
        for (c, nu) in &self.terms {
            let mut p = 1.0;
            for mu in 0..n {
                p *= scratch[self.offsets[mu] + nu[mu]];
            }
            sum += c.scale(p);
        }
        sum.scale(gauss)
    }
}
