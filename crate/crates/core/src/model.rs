//! Coupling matrices `D` of the harmonic hamiltonian `½pᵀp + ½xᵀDx`.
//!
//! d-dimensional systems are flattened to `N = d·N'` coordinates, so every
//! family here is a plain `N×N` matrix.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, symmetrize};

/// Smallest admissible eigenvalue, relative to the largest one.
pub const PD_TOLERANCE: f64 = 1e-10;
/// Largest condition number accepted by [`InteractionMatrix::dual`].
pub const MAX_CONDITION: f64 = 1e12;

/// Which builder produced a matrix, with the raw parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    Generic,
    /// Random `Qᵀ diag(e) Q` with eigenvalues uniform in `[min, max]`.
    Random { seed: u64, min_eigenvalue: f64, max_eigenvalue: f64 },
    Identical1d { d1: f64, d2: f64 },
    Moshinsky { omega: f64, coupling: f64 },
    Chain { spring: f64, trap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    entries: DMatrix<f64>,
    family: Family,
}

/// Checks that `d` is square, finite, exactly symmetric and positive
/// definite. Returns the smallest eigenvalue.
pub fn validate(d: &DMatrix<f64>) -> Result<f64> {
    let n = d.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if d.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d.ncols() });
    }
    if let Some(bad) = d.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite entry {bad}")));
    }
    for j in 0..n {
        for i in 0..j {
            let diff = (d[(i, j)] - d[(j, i)]).abs();
            if diff != 0.0 {
                return Err(Error::Asymmetric { i, j, diff });
            }
        }
    }
    let eig = jacobi_eigen(d)?;
    let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 || min <= PD_TOLERANCE * max {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
            detail: format!("eigenvalues span [{min:e}, {max:e}]"),
        });
    }
    Ok(min)
}

impl InteractionMatrix {
    /// Validates `entries` and wraps them with a family tag.
    pub fn new(entries: DMatrix<f64>, family: Family) -> Result<Self> {
        validate(&entries)?;
        Ok(InteractionMatrix { entries, family })
    }

    pub fn generic(entries: DMatrix<f64>) -> Result<Self> {
        Self::new(entries, Family::Generic)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::generic(DMatrix::from_row_slice(n, n, &flat))
    }

    /// Identical particles in 1D: `D_ii = d1 + (n-1)·d2`, `D_ij = -d2`.
    pub fn identical_1d(d1: f64, d2: f64, n: usize) -> Result<Self> {
        let entries = identical_entries(d1, d2, n)?;
        Self::new(entries, Family::Identical1d { d1, d2 })
    }

    /// Moshinsky-type atom: trap `ω²` and harmonic pair coupling.
    pub fn moshinsky(omega: f64, coupling: f64, n: usize) -> Result<Self> {
        let entries = identical_entries(omega * omega, coupling, n)?;
        Self::new(entries, Family::Moshinsky { omega, coupling })
    }

    /// Open chain with nearest-neighbour springs on top of a uniform trap.
    pub fn chain_1d(spring: f64, trap: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("chain needs n >= 2, got {n}")));
        }
        if !(trap > 0.0) {
            return Err(Error::OutsideDomain(format!("trap must be > 0, got {trap}")));
        }
        if !(spring >= 0.0) || !spring.is_finite() {
            return Err(Error::OutsideDomain(format!("spring must be >= 0, got {spring}")));
        }
        let mut d = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let neighbours = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            d[(i, i)] = trap + neighbours * spring;
            if i + 1 < n {
                d[(i, i + 1)] = -spring;
                d[(i + 1, i)] = -spring;
            }
        }
        Self::new(d, Family::Chain { spring, trap })
    }

    /// Random positive-definite matrix with a fixed seed.
    pub fn random(n: usize, seed: u64, min_eigenvalue: f64, max_eigenvalue: f64) -> Result<Self> {
        if !(min_eigenvalue > 0.0 && max_eigenvalue >= min_eigenvalue) {
            return Err(Error::OutsideDomain(format!(
                "eigenvalue range [{min_eigenvalue}, {max_eigenvalue}] is not positive"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
        let q = g.qr().q();
        let e: Vec<f64> = (0..n).map(|_| rng.gen_range(min_eigenvalue..=max_eigenvalue)).collect();
        let mut d = DMatrix::<f64>::zeros(n, n);
        for (k, ek) in e.iter().enumerate() {
            let col = q.column(k);
            for j in 0..n {
                for i in 0..n {
                    d[(i, j)] += ek * col[i] * col[j];
                }
            }
        }
        symmetrize(&mut d);
        Self::new(d, Family::Random { seed, min_eigenvalue, max_eigenvalue })
    }

    /// Builds a model from its JSON description
    /// `{"family": .., "params": {..}, "n": ..}`.
    pub fn from_json(spec: &Value) -> Result<Self> {
        let family = spec
            .get("family")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::InvalidInput("model spec needs a string \"family\"".into()))?;
        let params = spec.get("params").cloned().unwrap_or(Value::Object(Default::default()));
        let n = spec.get("n").and_then(Value::as_u64).map(|n| n as usize);
        let num = |key: &str| -> Result<f64> {
            params
                .get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::InvalidInput(format!("{family}: missing numeric param \"{key}\"")))
        };
        let need_n = || n.ok_or_else(|| Error::InvalidInput(format!("{family}: missing \"n\"")));
        let model = match family {
            "generic" => {
                if let Some(rows) = params.get("entries") {
                    let rows: Vec<Vec<f64>> = serde_json::from_value(rows.clone())
                        .map_err(|e| Error::InvalidInput(format!("generic entries: {e}")))?;
                    let m = Self::from_rows(&rows)?;
                    if let Some(n) = n {
                        if n != m.n() {
                            return Err(Error::DimensionMismatch { expected: n, got: m.n() });
                        }
                    }
                    m
                } else if let Some(seed) = params.get("seed").and_then(Value::as_u64) {
                    let lo = params.get("min_eigenvalue").and_then(Value::as_f64).unwrap_or(0.5);
                    let hi = params.get("max_eigenvalue").and_then(Value::as_f64).unwrap_or(2.0);
                    Self::random(need_n()?, seed, lo, hi)?
                } else {
                    return Err(Error::InvalidInput("generic: need \"entries\" or \"seed\"".into()));
                }
            }
            "identical_1d" => Self::identical_1d(num("d1")?, num("d2")?, need_n()?)?,
            "moshinsky" => {
                let omega = num("omega")?;
                let coupling = match params.get("coupling").and_then(Value::as_f64) {
                    Some(c) => c,
                    None => num("lambda")? * omega * omega,
                };
                Self::moshinsky(omega, coupling, need_n()?)?
            }
            "chain" => Self::chain_1d(num("spring")?, num("trap")?, need_n()?)?,
            other => return Err(Error::InvalidInput(format!("unknown model family \"{other}\""))),
        };
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Row-major nested vectors, the JSON layout.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.entries)
    }

    pub fn eigenvalue_floor(&self) -> f64 {
        validate(&self.entries).expect("validated on construction")
    }

    /// The dual model `D* = D⁻¹`.
    pub fn dual(&self) -> Result<Self> {
        let eig = jacobi_eigen(&self.entries)?;
        let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let condition = max / min;
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        let inv = self
            .entries
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite {
                min_eigenvalue: min,
                detail: "Cholesky factorisation failed".into(),
            })?
            .inverse();
        let mut inv = inv;
        symmetrize(&mut inv);
        Self::new(inv, Family::Generic)
    }

    /// Class representative with unit determinant.
    pub fn equivalence_normalize(&self) -> EquivalenceNormalizedMatrix {
        let eig = jacobi_eigen(&self.entries).expect("validated on construction");
        let n = self.n() as f64;
        let log_det: f64 = eig.values.iter().map(|d| d.ln()).sum();
        let scale = (log_det / n).exp();
        EquivalenceNormalizedMatrix { entries: &self.entries / scale, scale_applied: scale }
    }

    /// `c·D` with the same family tag semantics dropped to generic.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::OutsideDomain(format!("scale must be > 0, got {c}")));
        }
        Self::new(&self.entries * c, Family::Generic)
    }

    /// `D + eps` on every entry, which keeps the matrix symmetric.
    pub fn perturbed(&self, eps: f64) -> Result<Self> {
        Self::new(self.entries.map(|x| x + eps), Family::Generic)
    }

    /// `(d2/d1)` when the matrix has the identical-particle structure
    /// (constant diagonal, constant off-diagonal), within `tol`.
    pub fn identical_ratio(&self, tol: f64) -> Option<f64> {
        let n = self.n();
        if n < 2 {
            return None;
        }
        let a = self.entries[(0, 0)];
        let b = self.entries[(0, 1)];
        for j in 0..n {
            for i in 0..n {
                let want = if i == j { a } else { b };
                if (self.entries[(i, j)] - want).abs() > tol {
                    return None;
                }
            }
        }
        let d2 = -b;
        let d1 = a - (n as f64 - 1.0) * d2;
        Some(d2 / d1)
    }

    /// Whether the model's class contains its dual: true exactly for
    /// `γ·I` (noninteracting particles in an isotropic trap).
    pub fn is_self_dual(&self, tol: f64) -> Result<SelfDuality> {
        let a = self.equivalence_normalize();
        let b = self.dual()?.equivalence_normalize();
        let witness = (&a.entries - &b.entries).iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        Ok(SelfDuality { self_dual: witness <= tol, witness })
    }
}

/// `D / c` with `c = det(D)^(1/N)`, so that `det(entries) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceNormalizedMatrix {
    pub entries: DMatrix<f64>,
    pub scale_applied: f64,
}

impl EquivalenceNormalizedMatrix {
    pub fn into_model(self) -> Result<InteractionMatrix> {
        let mut e = self.entries;
        symmetrize(&mut e);
        InteractionMatrix::generic(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfDuality {
    pub self_dual: bool,
    /// Max entrywise deviation between the normalized model and its
    /// normalized dual.
    pub witness: f64,
}

/// Dual coupling ratio `r* = -r / (1 + n r)` for identical particles.
pub fn dual_ratio(r: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("n must be >= 2, got {n}")));
    }
    let denom = 1.0 + n as f64 * r;
    if !(denom > 0.0) {
        return Err(Error::OutsideDomain(format!("1 + n·r = {denom} <= 0 for r = {r}, n = {n}")));
    }
    Ok(-r / denom)
}

fn identical_entries(d1: f64, d2: f64, n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("identical-particle model needs n >= 2, got {n}")));
    }
    if !d1.is_finite() || !d2.is_finite() {
        return Err(Error::InvalidInput("non-finite coupling".into()));
    }
    let rel = d1 + n as f64 * d2;
    if !(d1 > 0.0) || !(rel > 0.0) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: d1.min(rel),
            detail: format!("eigenvalues d1 = {d1} and d1 + n·d2 = {rel} must both be > 0"),
        });
    }
    let diag = d1 + (n as f64 - 1.0) * d2;
    Ok(DMatrix::from_fn(n, n, |i, j| if i == j { diag } else { -d2 }))
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}
